//! γ sweeps comparing the single-filter benchmark with recycling.
//!
//! For every damping value the sweep classifies the point, solves the tier-1
//! problem (benchmark) and, where that is feasible, the tier-2 problem
//! (recycling). Rows are computed in parallel and returned in ascending γ.

use std::io::Write;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::channel::{damped_epr, unfiltered_fidelity, unfiltered_gamma_limit, DampingParams};
use crate::error::{invalid, Result};
use crate::filtering::{success_labels, OutcomeLabel, SchemeKind};
use crate::optimize::{solve_tier1, solve_tier2_with_policy, OptimizerConfig, RecyclePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepStatus {
    /// The unfiltered pair already meets the threshold.
    NoFilterNeeded,
    Feasible,
    /// No first-tier filter reaches the threshold.
    Infeasible,
}

impl SweepStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepStatus::NoFilterNeeded => "no-filter-needed",
            SweepStatus::Feasible => "feasible",
            SweepStatus::Infeasible => "infeasible",
        }
    }
}

/// Extra γ points placed around each status change of the coarse pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Densify {
    pub step: f64,
    pub window: f64,
}

impl Default for Densify {
    fn default() -> Self {
        Self { step: 1e-4, window: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub scheme: SchemeKind,
    pub f_threshold: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub gamma_step: f64,
    /// Count only `TT` and `RR/TT` (full scheme only).
    pub restricted_rr_only: bool,
    pub densify: Option<Densify>,
}

impl SweepSpec {
    /// Full `[0, 1]` range at step `1e-3`, densified near status changes.
    pub fn new(scheme: SchemeKind, f_threshold: f64) -> Self {
        Self {
            scheme,
            f_threshold,
            gamma_start: 0.0,
            gamma_end: 1.0,
            gamma_step: 1e-3,
            restricted_rr_only: false,
            densify: Some(Densify::default()),
        }
    }

    pub fn with_range(mut self, start: f64, end: f64, step: f64) -> Self {
        self.gamma_start = start;
        self.gamma_end = end;
        self.gamma_step = step;
        self
    }

    pub fn restricted(mut self) -> Self {
        self.restricted_rr_only = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.gamma_start && self.gamma_start < self.gamma_end && self.gamma_end <= 1.0) {
            return Err(invalid(format!(
                "need 0 <= gamma_start < gamma_end <= 1, got [{}, {}]",
                self.gamma_start, self.gamma_end
            )));
        }
        if !(self.gamma_step > 0.0) {
            return Err(invalid(format!("gamma_step must be positive, got {}", self.gamma_step)));
        }
        if !(self.f_threshold > 0.0 && self.f_threshold < 1.0) {
            return Err(invalid(format!("fidelity threshold must lie in (0, 1), got {}", self.f_threshold)));
        }
        if let Some(d) = self.densify {
            if !(d.step > 0.0 && d.window >= 0.0) {
                return Err(invalid("densify step must be positive and window non-negative"));
            }
        }
        if self.restricted_rr_only && self.scheme != SchemeKind::Full {
            return Err(invalid("restricted RR-only mode is defined for the full scheme only"));
        }
        Ok(())
    }

    pub fn policy(&self) -> RecyclePolicy {
        if self.restricted_rr_only {
            RecyclePolicy::ReflectedPairOnly
        } else {
            RecyclePolicy::AllOutcomes
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeShare {
    pub label: OutcomeLabel,
    #[serde(serialize_with = "sig10")]
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "sig10")]
    pub gamma: f64,
    pub status: SweepStatus,
    #[serde(serialize_with = "sig10")]
    pub benchmark_survival: f64,
    #[serde(serialize_with = "sig10")]
    pub recycled_survival: f64,
    /// `100 · (recycled − benchmark)`
    #[serde(serialize_with = "sig10")]
    pub gain_points: f64,
    #[serde(serialize_with = "sig10_opt")]
    pub alpha_tier1: Option<f64>,
    #[serde(serialize_with = "sig10_opt")]
    pub alpha_tier2: Option<f64>,
    /// Counted probability of each success outcome, in reporting order.
    /// Empty unless the row is feasible.
    pub per_outcome: Vec<OutcomeShare>,
}

/// Evaluates a single damping value.
pub fn evaluate_gamma(
    gamma: f64,
    scheme: SchemeKind,
    policy: RecyclePolicy,
    cfg: &OptimizerConfig,
) -> Result<SweepRow> {
    let params = DampingParams::new(gamma)?;
    let mut row = SweepRow {
        gamma,
        status: SweepStatus::NoFilterNeeded,
        benchmark_survival: 1.0,
        recycled_survival: 1.0,
        gain_points: 0.0,
        alpha_tier1: None,
        alpha_tier2: None,
        per_outcome: Vec::new(),
    };
    if unfiltered_fidelity(gamma) >= cfg.f_threshold {
        return Ok(row);
    }
    let rho_prime = damped_epr(params);
    let tier1 = solve_tier1(&rho_prime, scheme, cfg)?;
    if !tier1.feasible {
        row.status = SweepStatus::Infeasible;
        row.benchmark_survival = 0.0;
        row.recycled_survival = 0.0;
        return Ok(row);
    }
    let tier2 = solve_tier2_with_policy(&rho_prime, &tier1, scheme, policy, cfg)?;
    row.status = SweepStatus::Feasible;
    row.benchmark_survival = tier1.objective_value;
    row.recycled_survival = tier2.objective_value;
    row.gain_points = 100.0 * (tier2.objective_value - tier1.objective_value);
    row.alpha_tier1 = Some(tier1.alpha_star);
    row.alpha_tier2 = Some(tier2.alpha_star);
    row.per_outcome = tier2
        .contributions
        .iter()
        .map(|c| OutcomeShare { label: c.label, probability: c.counted_probability() })
        .collect();
    Ok(row)
}

fn lattice(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as i64;
    (0..=n).map(|k| snap(start + k as f64 * step)).filter(|g| *g <= end).collect()
}

/// Rounds away accumulated lattice noise so γ values print cleanly.
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn evaluate_all(gammas: &[f64], spec: &SweepSpec, cfg: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    let policy = spec.policy();
    gammas
        .par_iter()
        .map(|&g| evaluate_gamma(g, spec.scheme, policy, cfg))
        .collect()
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_sweep_with(spec, &OptimizerConfig::new(spec.f_threshold)?)
}

pub fn run_sweep_with(spec: &SweepSpec, cfg: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cfg = OptimizerConfig { f_threshold: spec.f_threshold, ..*cfg };
    cfg.validate()?;
    let coarse = lattice(spec.gamma_start, spec.gamma_end, spec.gamma_step);
    let mut rows = evaluate_all(&coarse, spec, &cfg)?;

    if let Some(d) = spec.densify {
        let mut extra: Vec<f64> = Vec::new();
        for pair in rows.windows(2) {
            if pair[0].status == pair[1].status {
                continue;
            }
            let mid = 0.5 * (pair[0].gamma + pair[1].gamma);
            let lo = (mid - d.window).max(spec.gamma_start);
            let hi = (mid + d.window).min(spec.gamma_end);
            let first = (lo / d.step).ceil() as i64;
            let last = (hi / d.step).floor() as i64;
            extra.extend((first..=last).map(|k| snap(k as f64 * d.step)));
        }
        extra.sort_by(f64::total_cmp);
        extra.dedup();
        extra.retain(|g| rows.binary_search_by(|r| r.gamma.total_cmp(g)).is_err());
        rows.extend(evaluate_all(&extra, spec, &cfg)?);
        rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    }
    Ok(rows)
}

/// Sweep where recycling may only rescue pairs with both photons reflected.
pub fn run_restricted_rr(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if !spec.restricted_rr_only {
        return Err(invalid("run_restricted_rr needs a spec with restricted_rr_only set"));
    }
    run_sweep(spec)
}

/// Per-outcome contributions to a row's recycled survival rate.
pub fn breakdown(row: &SweepRow) -> Vec<(OutcomeLabel, f64)> {
    row.per_outcome.iter().map(|s| (s.label, s.probability)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub feasible_rows: usize,
    /// First and last γ with status `Feasible`.
    #[serde(serialize_with = "sig10_pair")]
    pub feasible_range: Option<(f64, f64)>,
    #[serde(serialize_with = "sig10_opt")]
    pub min_gain_points: Option<f64>,
    #[serde(serialize_with = "sig10_opt")]
    pub max_gain_points: Option<f64>,
    #[serde(serialize_with = "sig10_opt")]
    pub max_benchmark_survival: Option<f64>,
    #[serde(serialize_with = "sig10_opt")]
    pub max_recycled_survival: Option<f64>,
    /// `1 − √(2 F_th − 1)`: where the unfiltered pair drops below threshold.
    #[serde(serialize_with = "sig10")]
    pub unfiltered_gamma_limit: f64,
}

pub fn summarize(rows: &[SweepRow], f_threshold: f64) -> SweepSummary {
    let feasible: Vec<&SweepRow> = rows.iter().filter(|r| r.status == SweepStatus::Feasible).collect();
    let fold = |f: fn(&SweepRow) -> f64, pick: fn(f64, f64) -> f64| {
        feasible.iter().map(|r| f(r)).reduce(pick)
    };
    SweepSummary {
        rows: rows.len(),
        feasible_rows: feasible.len(),
        feasible_range: feasible.first().zip(feasible.last()).map(|(a, b)| (a.gamma, b.gamma)),
        min_gain_points: fold(|r| r.gain_points, f64::min),
        max_gain_points: fold(|r| r.gain_points, f64::max),
        max_benchmark_survival: fold(|r| r.benchmark_survival, f64::max),
        max_recycled_survival: fold(|r| r.recycled_survival, f64::max),
        unfiltered_gamma_limit: unfiltered_gamma_limit(f_threshold),
    }
}

/// Formats with 10 significant digits in plain decimal notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

fn sig10<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

fn sig10_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig(*v)),
        None => s.serialize_none(),
    }
}

fn sig10_pair<S: Serializer>(x: &Option<(f64, f64)>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some((a, b)) => s.serialize_some(&[round_sig(*a), round_sig(*b)]),
        None => s.serialize_none(),
    }
}

/// One header row, then one line per sweep row. Outcome columns follow the
/// scheme's success set and are blank for rows that are not feasible.
pub fn write_csv<W: Write>(rows: &[SweepRow], scheme: SchemeKind, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let labels = success_labels(scheme);
    let mut header: Vec<String> = [
        "gamma",
        "status",
        "benchmark_survival",
        "recycled_survival",
        "gain_points",
        "alpha_tier1",
        "alpha_tier2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(labels.iter().map(|l| format!("p[{l}]")));
    w.write_record(&header)?;

    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    for row in rows {
        let mut rec = vec![
            fmt_sig(row.gamma),
            row.status.as_str().to_string(),
            fmt_sig(row.benchmark_survival),
            fmt_sig(row.recycled_survival),
            fmt_sig(row.gain_points),
            opt(row.alpha_tier1),
            opt(row.alpha_tier2),
        ];
        for label in labels {
            let p = row.per_outcome.iter().find(|s| s.label == *label).map(|s| s.probability);
            rec.push(opt(p));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    spec: &'a SweepSpec,
    optimizer: &'a OptimizerConfig,
    summary: SweepSummary,
    rows: &'a [SweepRow],
}

pub fn write_json<W: Write>(spec: &SweepSpec, cfg: &OptimizerConfig, rows: &[SweepRow], mut out: W) -> Result<()> {
    let doc = SweepDocument { spec, optimizer: cfg, summary: summarize(rows, spec.f_threshold), rows };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}
