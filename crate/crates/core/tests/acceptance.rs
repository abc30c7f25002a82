//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qubit_recycling::channel::{apply_channel, damped_epr, epr_state, unfiltered_gamma_limit};
use qubit_recycling::experiment::{run_restricted_rr, run_sweep, summarize, SweepSummary};
use qubit_recycling::filtering::{enumerate_full_outcomes, enumerate_partial_outcomes, filter_numerator};
use qubit_recycling::metrics::{concurrence, ppt_report, reflected_pair_closed_form, reflected_pair_pt_eigenvalues};
use qubit_recycling::optimize::{solve_tier1, solve_tier2};
use qubit_recycling::{ComplexMatrix, DampingParams, DensityMatrix, OptimizerConfig, Povm, SchemeKind, SweepSpec};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(120);
const RANGE_TOL: f64 = 0.0015;
const GAIN_TOL: f64 = 1.0;
const SURVIVAL_TOL_POINTS: f64 = 1.0;
const RESTRICTED_TOL: f64 = 0.5;

#[derive(Default)]
struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        println!("[{}] {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

struct Run {
    summary: SweepSummary,
    elapsed: Duration,
}

fn sweep(scheme: SchemeKind, f: f64, restricted: bool) -> Run {
    let mut spec = SweepSpec::new(scheme, f);
    let start = Instant::now();
    let rows = if restricted {
        spec = spec.restricted();
        run_restricted_rr(&spec)
    } else {
        run_sweep(&spec)
    }
    .expect("sweep");
    Run { summary: summarize(&rows, f), elapsed: start.elapsed() }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn main() -> ExitCode {
    let mut report = Report::default();

    let cases = [
        (SchemeKind::Full, 0.7, (0.3676, 0.4059), (20.8, 31.2), 56.1),
        (SchemeKind::Full, 0.9, (0.1056, 0.1085), (30.6, 31.2), 56.2),
        (SchemeKind::Partial, 0.7, (0.3676, 0.3824), (20.5, 25.0), 74.9),
        (SchemeKind::Partial, 0.9, (0.1056, 0.1079), (24.3, 25.0), 75.0),
    ];
    let mut runs = Vec::new();
    for (scheme, f, ..) in cases {
        runs.push(sweep(scheme, f, false));
    }

    // 1. Feasibility boundaries and runtime.
    for ((scheme, f, range, ..), run) in cases.iter().zip(&runs) {
        let got = run.summary.feasible_range;
        let pass = got.is_some_and(|(lo, hi)| within(lo, range.0, RANGE_TOL) && within(hi, range.1, RANGE_TOL))
            && run.elapsed < SWEEP_TIME_LIMIT;
        report.check(
            "1",
            &format!("feasible range {scheme} F_th={f}"),
            pass,
            format!(
                "got {:?}, expected ({}, {}) ± {RANGE_TOL}, sweep took {:.1}s (limit {}s)",
                got,
                range.0,
                range.1,
                run.elapsed.as_secs_f64(),
                SWEEP_TIME_LIMIT.as_secs()
            ),
        );
    }

    // 2. Gain magnitudes.
    for ((scheme, f, _, gains, _), run) in cases.iter().zip(&runs) {
        let (lo, hi) = (run.summary.min_gain_points, run.summary.max_gain_points);
        let pass = lo.is_some_and(|x| within(x, gains.0, GAIN_TOL)) && hi.is_some_and(|x| within(x, gains.1, GAIN_TOL));
        report.check(
            "2",
            &format!("gain range {scheme} F_th={f}"),
            pass,
            format!("got [{:.3?}, {:.3?}] points, expected [{}, {}] ± {GAIN_TOL}", lo, hi, gains.0, gains.1),
        );
    }

    // 3. Peak recycled survival.
    for ((scheme, f, .., peak), run) in cases.iter().zip(&runs) {
        let got = run.summary.max_recycled_survival.map(|s| 100.0 * s);
        report.check(
            "3",
            &format!("peak survival {scheme} F_th={f}"),
            got.is_some_and(|x| within(x, *peak, SURVIVAL_TOL_POINTS)),
            format!("got {:.3?}%, expected {peak}% ± {SURVIVAL_TOL_POINTS}", got),
        );
    }

    // 4. Restricted reflected-pair-only mode.
    for (f, target) in [(0.7, 6.06), (0.9, 6.24)] {
        let run = sweep(SchemeKind::Full, f, true);
        let got = run.summary.max_gain_points;
        report.check(
            "4",
            &format!("restricted max gain F_th={f}"),
            got.is_some_and(|x| within(x, target, RESTRICTED_TOL)) && run.elapsed < SWEEP_TIME_LIMIT,
            format!("got {:.3?} points, expected {target} ± {RESTRICTED_TOL}, sweep took {:.1}s", got, run.elapsed.as_secs_f64()),
        );
    }

    // 5. Lower boundary against the unfiltered fidelity curve. Near a status
    // change the sweep grid is densified, so its local step is the fine one.
    let step = SweepSpec::new(SchemeKind::Full, 0.7).densify.map(|d| d.step).unwrap();
    let extra = sweep(SchemeKind::Full, 0.8, false);
    for (f, summary) in [(0.7, &runs[0].summary), (0.8, &extra.summary), (0.9, &runs[1].summary)] {
        let analytic = unfiltered_gamma_limit(f);
        let got = summary.feasible_range.map(|r| r.0);
        report.check(
            "5",
            &format!("lower boundary F_th={f}"),
            got.is_some_and(|lo| (lo - analytic).abs() <= 2.0 * step),
            format!("got {:?}, analytic {analytic:.6}, tolerance {} (2 grid steps)", got, 2.0 * step),
        );
    }

    // 6. Reflected-pair spectrum and entanglement on a 10×10×10 grid.
    let axis: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
    let (mut worst_eig, mut worst_mat, mut flag_mismatch, mut points) = (0.0f64, 0.0f64, 0usize, 0usize);
    let mut check_point = |alpha: f64, beta: f64, gamma: f64| {
        let rho = damped_epr(DampingParams::new(gamma).unwrap());
        let m0 = ComplexMatrix::from_diag(&[alpha, beta]).unwrap();
        let numerator = filter_numerator(rho.matrix(), Some(&m0), Some(&m0)).unwrap();
        worst_mat = worst_mat.max(numerator.max_abs_diff(&reflected_pair_closed_form(alpha, beta, gamma)));
        let r = ppt_report(&numerator).unwrap();
        let mut closed = reflected_pair_pt_eigenvalues(alpha, beta, gamma);
        closed.sort_by(f64::total_cmp);
        for (a, b) in r.eigenvalues.iter().zip(&closed) {
            worst_eig = worst_eig.max((a - b).abs());
        }
        let expected = alpha != 0.0 && beta != 0.0 && gamma != 1.0;
        if r.is_entangled != expected {
            flag_mismatch += 1;
        }
        points += 1;
    };
    for &a in &axis {
        for &b in &axis {
            for &g in &axis {
                check_point(a, b, g);
            }
        }
        for &g in &axis {
            check_point(a, 1.0 - a, g);
        }
    }
    report.check(
        "6",
        "reflected-pair eigenvalues and entanglement flag",
        worst_eig <= 1e-10 && worst_mat <= 1e-10 && flag_mismatch == 0,
        format!(
            "{points} points, max eigenvalue error {worst_eig:.2e}, max matrix error {worst_mat:.2e}, flag mismatches {flag_mismatch}"
        ),
    );

    // 7. Property suites.
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let g = k as f64 / 100.0;
        let out = apply_channel(&epr_state(), DampingParams::new(g).unwrap()).unwrap();
        worst = worst.max((out.trace() - 1.0).abs());
    }
    report.check("7a", "channel trace preservation", worst <= 1e-10, format!("101 γ values, max |Tr − 1| = {worst:.2e}"));

    let mut rng = StdRng::seed_from_u64(2024);
    let (mut worst_sum, mut worst_sym) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = rng.gen_range(0.0..1.0);
        let (a1, a2) = (rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
        let rho = damped_epr(DampingParams::new(g).unwrap());
        let (p1, p2) = (Povm::new(a1).unwrap(), Povm::new(a2).unwrap());
        let full = enumerate_full_outcomes(&rho, &p1, &p2).unwrap();
        let partial = enumerate_partial_outcomes(&rho, &p1, &p2).unwrap();
        for outs in [&full, &partial] {
            let total: f64 = outs.iter().map(|o| o.probability).sum();
            worst_sum = worst_sum.max((total - 1.0).abs());
        }
        let p = |l: &str| full.iter().find(|o| o.label.to_string() == l).unwrap().probability;
        worst_sym = worst_sym.max((p("TR/-T") - p("RT/T-")).abs()).max((p("TR/-R") - p("RT/R-")).abs());
    }
    report.check("7b", "outcome completeness", worst_sum <= 1e-10, format!("100 draws × 2 schemes, max |Σp − 1| = {worst_sum:.2e}"));

    let mut rng = StdRng::seed_from_u64(99);
    let (mut instances, mut worst_gap) = (0, f64::NEG_INFINITY);
    while instances < 20 {
        let full = instances % 2 == 0;
        let kind = if full { SchemeKind::Full } else { SchemeKind::Partial };
        let f = rng.gen_range(0.55..0.95);
        let g = rng.gen_range(unfiltered_gamma_limit(f)..0.75);
        if common::max_tier1_fidelity(g, full) < f + 1e-3 {
            continue;
        }
        let cfg = OptimizerConfig::new(f).unwrap();
        let rho = damped_epr(DampingParams::new(g).unwrap());
        let t1 = solve_tier1(&rho, kind, &cfg).unwrap();
        let (_, b1) = common::brute_tier1(g, f, full, 100_000).unwrap();
        let t2 = solve_tier2(&rho, &t1, kind, &cfg).unwrap();
        let (_, b2) = common::brute_tier2(g, t1.alpha_star, f, full, 100_000);
        worst_gap = worst_gap.max(b1 - t1.objective_value).max(b2 - t2.objective_value);
        instances += 1;
    }
    report.check(
        "7c",
        "optimizer vs brute-force grid",
        worst_gap <= 1e-9,
        format!("20 instances, max (oracle − optimizer) = {worst_gap:.2e}, allowed 1e-9"),
    );

    // Half the states come out of the filter tree, half are random X-states
    // (the form every reachable state takes), many of them separable.
    let mut rng = StdRng::seed_from_u64(7);
    let (mut mismatches, mut entangled) = (0, 0);
    for i in 0..1000 {
        let state = if i % 2 == 0 {
            let g = rng.gen_range(0.0..1.0);
            let (a1, a2) = (rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
            let rho = damped_epr(DampingParams::new(g).unwrap());
            let (p1, p2) = (Povm::new(a1).unwrap(), Povm::new(a2).unwrap());
            let outs = if rng.gen_bool(0.5) {
                enumerate_full_outcomes(&rho, &p1, &p2).unwrap()
            } else {
                enumerate_partial_outcomes(&rho, &p1, &p2).unwrap()
            };
            let pick = &outs[rng.gen_range(0..outs.len())];
            pick.state.clone().unwrap_or(rho)
        } else {
            let w: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
            let t: f64 = w.iter().sum();
            let d = w.map(|x| x / t);
            let c = rng.gen_range(-1.0..1.0) * (d[0] * d[3]).sqrt();
            let mut m = ComplexMatrix::from_diag(&d).unwrap();
            m.set(0, 3, c.into());
            m.set(3, 0, c.into());
            DensityMatrix::new(m).unwrap()
        };
        let c = concurrence(&state).unwrap();
        let r = ppt_report(state.matrix()).unwrap();
        if r.is_entangled != (c > 1e-9) {
            mismatches += 1;
        }
        entangled += r.is_entangled as usize;
    }
    report.check(
        "7d",
        "concurrence / PPT agreement",
        mismatches == 0,
        format!("1000 states ({entangled} entangled), {mismatches} disagreements"),
    );
    report.check("7e", "Pr(TR) = Pr(RT) symmetry", worst_sym <= 1e-10, format!("100 draws, max difference {worst_sym:.2e}"));

    println!("{} failure(s)", report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
