use qubit_recycling::experiment::{breakdown, run_restricted_rr, run_sweep, summarize, write_csv};
use qubit_recycling::{SchemeKind, SweepRow, SweepSpec, SweepStatus};

fn sweep(scheme: SchemeKind, f: f64, lo: f64, hi: f64) -> Vec<SweepRow> {
    run_sweep(&SweepSpec::new(scheme, f).with_range(lo, hi, 1e-3)).unwrap()
}

#[test]
fn partial_range_sits_inside_full_range() {
    for (f, lo, hi) in [(0.7, 0.34, 0.43), (0.9, 0.09, 0.13)] {
        let full = summarize(&sweep(SchemeKind::Full, f, lo, hi), f).feasible_range.unwrap();
        let part = summarize(&sweep(SchemeKind::Partial, f, lo, hi), f).feasible_range.unwrap();
        assert!(part.0 >= full.0 && part.1 <= full.1, "F={f}: {part:?} vs {full:?}");
        assert!(part.1 < full.1);
    }
}

#[test]
fn partial_scheme_survives_more_where_both_are_feasible() {
    let full = sweep(SchemeKind::Full, 0.7, 0.36, 0.39);
    let part = sweep(SchemeKind::Partial, 0.7, 0.36, 0.39);
    let mut compared = 0;
    for a in &full {
        let Some(b) = part.iter().find(|b| b.gamma == a.gamma) else { continue };
        if a.status == SweepStatus::Feasible && b.status == SweepStatus::Feasible {
            assert!(b.recycled_survival > a.recycled_survival, "γ={}", a.gamma);
            compared += 1;
        }
    }
    assert!(compared > 10);
}

#[test]
fn rows_are_sorted_classified_and_accounted() {
    let f = 0.7;
    let rows = run_sweep(&SweepSpec::new(SchemeKind::Full, f).with_range(0.0, 1.0, 5e-3)).unwrap();
    assert!(rows.windows(2).all(|w| w[0].gamma < w[1].gamma));
    for r in &rows {
        match r.status {
            SweepStatus::NoFilterNeeded => {
                assert!(r.gamma <= 0.3676);
                assert_eq!((r.benchmark_survival, r.recycled_survival), (1.0, 1.0));
            }
            SweepStatus::Infeasible => assert!(r.gamma >= 0.4059),
            SweepStatus::Feasible => {
                let parts = breakdown(r);
                let total: f64 = parts.iter().map(|(_, p)| p).sum();
                assert!((total - r.recycled_survival).abs() < 1e-10);
                let labels: Vec<String> = parts.iter().map(|(l, _)| l.to_string()).collect();
                assert_eq!(labels, ["TT/--", "TR/-T", "RT/T-", "RR/TT"]);
                assert!((parts[1].1 - parts[2].1).abs() < 1e-10);
                assert!(parts[1].1 + parts[2].1 > parts[3].1, "γ={}", r.gamma);
                assert!((r.gain_points - 100.0 * (r.recycled_survival - r.benchmark_survival)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn densification_refines_only_near_status_changes() {
    let rows = sweep(SchemeKind::Full, 0.9, 0.0, 0.3);
    let fine: Vec<f64> = rows.iter().map(|r| r.gamma).filter(|g| ((g * 1e3).round() - g * 1e3).abs() > 1e-6).collect();
    assert!(!fine.is_empty());
    assert!(fine.iter().all(|g| (0.08..=0.13).contains(g)), "{fine:?}");
}

#[test]
fn restricted_gain_never_exceeds_unrestricted_gain() {
    let spec = SweepSpec::new(SchemeKind::Full, 0.7).with_range(0.36, 0.41, 2e-3);
    let all = run_sweep(&spec).unwrap();
    let rr = run_restricted_rr(&spec.clone().restricted()).unwrap();
    assert_eq!(all.len(), rr.len());
    for (a, b) in all.iter().zip(&rr) {
        assert_eq!(a.status, b.status);
        assert!(b.gain_points <= a.gain_points + 1e-9, "γ={}", a.gamma);
        if b.status == SweepStatus::Feasible {
            assert!(b.gain_points > 0.0);
            let parts = breakdown(b);
            assert_eq!(parts[1].1, 0.0);
            assert_eq!(parts[2].1, 0.0);
        }
    }
    assert!(run_restricted_rr(&spec).is_err());
    assert!(run_restricted_rr(&SweepSpec::new(SchemeKind::Partial, 0.7).restricted()).is_err());
}

#[test]
fn repeated_sweeps_serialize_identically() {
    let spec = SweepSpec::new(SchemeKind::Partial, 0.9).with_range(0.09, 0.12, 1e-3);
    let render = || {
        let mut buf = Vec::new();
        write_csv(&run_sweep(&spec).unwrap(), SchemeKind::Partial, &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}
