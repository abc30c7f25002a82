//! Fidelity-constrained yield maximization for the first- and second-tier filters.
//!
//! Each problem is one-dimensional once `β = 1 − α` is substituted, so the
//! solver scans a dense lattice over `α ∈ (0, 1)` and then polishes the best
//! lattice point with a golden-section search on the neighbouring bracket.
//! Constraints are handled by masking: an infeasible point is scored below
//! every feasible one, ordered by how far it misses the threshold, so the
//! refinement walks up to the constraint boundary from either side.
//!
//! Ties on a plateau go to the smallest `α`.

use serde::Serialize;

use crate::channel::{epr_state, DensityMatrix};
use crate::error::{invalid, Error, Result};
use crate::filtering::{
    enumerate_full_outcomes, enumerate_partial_outcomes, filter_branch, OutcomeLabel, Povm,
    SchemeKind,
};
use crate::metrics::fidelity;

/// Slack on `fidelity ≥ F_th` when re-checking a reported solution.
pub const FIDELITY_SLACK: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Refinement stays this far inside `(0, 1)` so `β = 1 − α` never rounds to 1.
const EDGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Lattice `k / (grid_points − 1)`; only interior points are evaluated.
    pub grid_points: usize,
    pub refine_iters: usize,
    pub f_threshold: f64,
}

impl OptimizerConfig {
    pub fn new(f_threshold: f64) -> Result<Self> {
        let cfg = Self { grid_points: 2001, refine_iters: 60, f_threshold };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(invalid(format!("grid_points must be >= 3, got {}", self.grid_points)));
        }
        if !(self.f_threshold > 0.0 && self.f_threshold < 1.0) {
            return Err(invalid(format!("fidelity threshold must lie in (0, 1), got {}", self.f_threshold)));
        }
        Ok(())
    }

    fn step(&self) -> f64 {
        1.0 / (self.grid_points - 1) as f64
    }
}

/// Which recycled outcomes may count toward the second-tier objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecyclePolicy {
    AllOutcomes,
    /// Only pairs where both photons were reflected at tier 1 (`RR/TT`).
    ReflectedPairOnly,
}

/// One success outcome's share of a solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub label: OutcomeLabel,
    /// Branch probability whether or not it is counted.
    pub probability: f64,
    pub fidelity: Option<f64>,
    /// Meets the threshold and is allowed by the recycle policy.
    pub counted: bool,
}

impl Contribution {
    pub fn counted_probability(&self) -> f64 {
        if self.counted {
            self.probability
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterSolution {
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Survival rate of the counted outcomes.
    pub objective_value: f64,
    pub feasible: bool,
    /// Lowest fidelity among counted outcomes; for an infeasible tier-1
    /// problem, the best fidelity any filter reached.
    pub constraint_fidelity: f64,
    pub contributions: Vec<Contribution>,
}

#[derive(Clone, Debug)]
struct Probe {
    x: f64,
    objective: f64,
    /// Distance below the threshold; 0 when feasible.
    shortfall: f64,
    detail: Vec<Contribution>,
    fidelity: f64,
}

impl Probe {
    fn feasible(&self) -> bool {
        self.shortfall <= 0.0
    }

    fn score(&self) -> f64 {
        if self.feasible() {
            self.objective
        } else {
            -1.0 - self.shortfall
        }
    }

    fn beats(&self, other: &Probe) -> bool {
        let (a, b) = (self.score(), other.score());
        a > b || (a == b && self.x < other.x)
    }
}

fn lattice(cfg: &OptimizerConfig) -> impl Iterator<Item = f64> {
    let n = cfg.grid_points - 1;
    (1..n).map(move |k| k as f64 / n as f64)
}

/// Golden-section search on `[lo, hi]`, returning the best probe seen.
fn golden<F>(lo: f64, hi: f64, iters: usize, eval: &F, mut best: Probe) -> Result<Probe>
where
    F: Fn(f64) -> Result<Probe>,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut p1 = eval(x1)?;
    let mut p2 = eval(x2)?;
    for _ in 0..iters {
        for p in [&p1, &p2] {
            if p.beats(&best) {
                best = p.clone();
            }
        }
        if p1.score() >= p2.score() {
            b = x2;
            x2 = x1;
            p2 = p1;
            x1 = b - INV_PHI * (b - a);
            p1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            p1 = p2;
            x2 = a + INV_PHI * (b - a);
            p2 = eval(x2)?;
        }
    }
    for p in [p1, p2] {
        if p.beats(&best) {
            best = p;
        }
    }
    Ok(best)
}

/// Lattice scan plus golden refinement. Returns the best probe, feasible or not.
fn maximize<F>(cfg: &OptimizerConfig, eval: F) -> Result<Probe>
where
    F: Fn(f64) -> Result<Probe>,
{
    let h = cfg.step();
    let mut best: Option<Probe> = None;
    for x in lattice(cfg) {
        let p = eval(x)?;
        if best.as_ref().is_none_or(|b| p.beats(b)) {
            best = Some(p);
        }
    }
    let seed = best.expect("lattice has at least one interior point");
    let lo = (seed.x - h).max(EDGE);
    let hi = (seed.x + h).min(1.0 - EDGE);
    let refined = golden(lo, hi, cfg.refine_iters, &eval, seed)?;
    if refined.feasible() {
        // A seed found by climbing the shortfall may sit on the far side of
        // the objective's peak; one more pass on the objective settles it.
        let lo = (refined.x - h).max(EDGE);
        let hi = (refined.x + h).min(1.0 - EDGE);
        return golden(lo, hi, cfg.refine_iters, &eval, refined);
    }
    Ok(refined)
}

/// Maximizes the single-filter survival rate subject to `F ≥ F_th` on the
/// transmitted pair.
pub fn solve_tier1(
    rho_prime: &DensityMatrix,
    kind: SchemeKind,
    cfg: &OptimizerConfig,
) -> Result<FilterSolution> {
    cfg.validate()?;
    rho_prime.require_normalized()?;
    let target = epr_state();
    let label = match kind {
        SchemeKind::Full => crate::filtering::FULL_SUCCESS[0],
        SchemeKind::Partial => crate::filtering::PARTIAL_SUCCESS[0],
    };
    let eval = |alpha: f64| -> Result<Probe> {
        let m1 = Povm::new(alpha)?.transmit();
        let bob = match kind {
            SchemeKind::Full => Some(&m1),
            SchemeKind::Partial => None,
        };
        let br = filter_branch(rho_prime, Some(&m1), bob)?;
        let f = match &br.state {
            Some(s) => fidelity(&target, s)?,
            None => 0.0,
        };
        Ok(Probe {
            x: alpha,
            objective: br.probability,
            shortfall: (cfg.f_threshold - f).max(0.0),
            detail: vec![Contribution {
                label,
                probability: br.probability,
                fidelity: br.state.map(|_| f),
                counted: f >= cfg.f_threshold,
            }],
            fidelity: f,
        })
    };
    let best = maximize(cfg, eval)?;
    let feasible = best.feasible();
    Ok(FilterSolution {
        alpha_star: best.x,
        beta_star: 1.0 - best.x,
        objective_value: if feasible { best.objective } else { 0.0 },
        feasible,
        constraint_fidelity: best.fidelity,
        contributions: if feasible { best.detail } else { Vec::new() },
    })
}

/// Maximizes the recycled survival rate over the shared second-tier filter,
/// counting each success outcome only if its own state reaches `F_th`.
pub fn solve_tier2(
    rho_prime: &DensityMatrix,
    tier1: &FilterSolution,
    kind: SchemeKind,
    cfg: &OptimizerConfig,
) -> Result<FilterSolution> {
    solve_tier2_with_policy(rho_prime, tier1, kind, RecyclePolicy::AllOutcomes, cfg)
}

pub fn solve_tier2_with_policy(
    rho_prime: &DensityMatrix,
    tier1: &FilterSolution,
    kind: SchemeKind,
    policy: RecyclePolicy,
    cfg: &OptimizerConfig,
) -> Result<FilterSolution> {
    cfg.validate()?;
    if !tier1.feasible {
        return Err(Error::Tier1Infeasible);
    }
    if kind == SchemeKind::Partial && policy == RecyclePolicy::ReflectedPairOnly {
        return Err(invalid("the reflected-pair-only policy needs the full scheme"));
    }
    let first = Povm::new(tier1.alpha_star)?;
    let eval = |alpha: f64| -> Result<Probe> {
        let contributions = recycled_contributions(rho_prime, &first, alpha, kind, policy, cfg.f_threshold)?;
        let objective = contributions.iter().map(Contribution::counted_probability).sum();
        let fidelity = binding_fidelity(&contributions);
        Ok(Probe { x: alpha, objective, shortfall: 0.0, detail: contributions, fidelity })
    };
    let best = maximize(cfg, eval)?;
    Ok(FilterSolution {
        alpha_star: best.x,
        beta_star: 1.0 - best.x,
        objective_value: best.objective,
        feasible: true,
        constraint_fidelity: best.fidelity,
        contributions: best.detail,
    })
}

/// Success-set outcomes for a given second-tier `α′`, with the indicator applied.
pub fn recycled_contributions(
    rho_prime: &DensityMatrix,
    tier1: &Povm,
    alpha2: f64,
    kind: SchemeKind,
    policy: RecyclePolicy,
    f_threshold: f64,
) -> Result<Vec<Contribution>> {
    let second = Povm::new(alpha2)?;
    let records = match kind {
        SchemeKind::Full => enumerate_full_outcomes(rho_prime, tier1, &second)?,
        SchemeKind::Partial => enumerate_partial_outcomes(rho_prime, tier1, &second)?,
    };
    Ok(records
        .into_iter()
        .filter(|r| r.in_success_set)
        .map(|r| {
            let allowed = match policy {
                RecyclePolicy::AllOutcomes => true,
                RecyclePolicy::ReflectedPairOnly => {
                    r.label.tier1[0] == r.label.tier1[1]
                }
            };
            let meets = r.fidelity.is_some_and(|f| f >= f_threshold);
            Contribution {
                label: r.label,
                probability: r.probability,
                fidelity: r.fidelity,
                counted: allowed && meets,
            }
        })
        .collect())
}

fn binding_fidelity(contributions: &[Contribution]) -> f64 {
    contributions
        .iter()
        .filter(|c| c.counted)
        .filter_map(|c| c.fidelity)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
}
