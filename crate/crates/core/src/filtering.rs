//! Gisin local filters and the outcome trees of one- and two-tier filtering.
//!
//! A filter is the binary POVM `{M₀, M₁}` with `M₀ = diag(α, β)` (reflection)
//! and `M₁ = diag(β, α)` (transmission), `α + β = 1`. In the full scheme both
//! arms carry a filter; in the partial scheme only Alice's arm does. Photons
//! reflected by a first-tier filter are sent through a second-tier filter with
//! its own parameters; a second reflection terminates the photon.
//!
//! Conditional states are labelled `ρ̃_{xy}` with `x` Alice's and `y` Bob's
//! first-tier result, 1 = transmitted and 0 = reflected.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::channel::{epr_state, DensityMatrix};
use crate::error::{invalid, Error, Result};
use crate::metrics::fidelity;
use crate::qmath::{hermitian_eigenvalues, psd_sqrt, tensor, ComplexMatrix};

/// Branches below this probability carry no conditional state.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;
const POVM_SUM_TOL: f64 = 1e-12;
const ELEMENT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Povm {
    alpha: f64,
    beta: f64,
}

impl Povm {
    /// Filter with `β = 1 − α`, `α ∈ (0, 1)`.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::from_pair(alpha, 1.0 - alpha)
    }

    pub fn from_pair(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if (alpha + beta - 1.0).abs() > POVM_SUM_TOL {
            return Err(invalid(format!("alpha + beta must equal 1, got {}", alpha + beta)));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `M₀ = diag(α, β)`
    pub fn reflect(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&[self.alpha, self.beta]).expect("2x2")
    }

    /// `M₁ = diag(β, α)`
    pub fn transmit(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&[self.beta, self.alpha]).expect("2x2")
    }

    pub fn element(&self, click: Click) -> Option<ComplexMatrix> {
        match click {
            Click::Transmit => Some(self.transmit()),
            Click::Reflect => Some(self.reflect()),
            Click::Absent => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Full,
    Partial,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Full => "full",
            SchemeKind::Partial => "partial",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FilterScheme {
    pub kind: SchemeKind,
    pub tier1: Povm,
    /// `None` for the classic single-filter scheme.
    pub tier2: Option<Povm>,
}

/// What a single filter did to a photon. `Absent` means no photon reached it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Click {
    Transmit,
    Reflect,
    Absent,
}

impl Click {
    fn symbol(self) -> char {
        match self {
            Click::Transmit => 'T',
            Click::Reflect => 'R',
            Click::Absent => '-',
        }
    }
}

/// A terminal outcome of the filter tree, written `<tier 1>/<tier 2>` with one
/// symbol per filtered arm: `TR/-T` is Alice transmitted at tier 1, Bob
/// reflected at tier 1 and then transmitted at tier 2. Partial-scheme labels
/// carry Alice's arm only (`R/T`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeLabel {
    pub kind: SchemeKind,
    pub tier1: [Click; 2],
    pub tier2: [Click; 2],
}

impl OutcomeLabel {
    pub const fn full(a1: Click, b1: Click, a2: Click, b2: Click) -> Self {
        Self { kind: SchemeKind::Full, tier1: [a1, b1], tier2: [a2, b2] }
    }

    pub const fn partial(a1: Click, a2: Click) -> Self {
        Self { kind: SchemeKind::Partial, tier1: [a1, Click::Absent], tier2: [a2, Click::Absent] }
    }

    /// Both photons end up transmitted by some filter (or unfiltered on Bob's
    /// side in the partial scheme).
    pub fn is_success(&self) -> bool {
        let arms = match self.kind {
            SchemeKind::Full => 2,
            SchemeKind::Partial => 1,
        };
        (0..arms).all(|i| match self.tier1[i] {
            Click::Transmit => self.tier2[i] == Click::Absent,
            Click::Reflect => self.tier2[i] == Click::Transmit,
            Click::Absent => false,
        })
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arms = if self.kind == SchemeKind::Full { 2 } else { 1 };
        let t1: String = self.tier1[..arms].iter().map(|c| c.symbol()).collect();
        let t2: String = self.tier2[..arms].iter().map(|c| c.symbol()).collect();
        write!(f, "{t1}/{t2}")
    }
}

impl Serialize for OutcomeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

use Click::{Absent as O, Reflect as R, Transmit as T};

/// Full-scheme success set, in reporting order.
pub const FULL_SUCCESS: [OutcomeLabel; 4] = [
    OutcomeLabel::full(T, T, O, O),
    OutcomeLabel::full(T, R, O, T),
    OutcomeLabel::full(R, T, T, O),
    OutcomeLabel::full(R, R, T, T),
];

/// Partial-scheme success set, in reporting order.
pub const PARTIAL_SUCCESS: [OutcomeLabel; 2] =
    [OutcomeLabel::partial(T, O), OutcomeLabel::partial(R, T)];

pub fn success_labels(kind: SchemeKind) -> &'static [OutcomeLabel] {
    match kind {
        SchemeKind::Full => &FULL_SUCCESS,
        SchemeKind::Partial => &PARTIAL_SUCCESS,
    }
}

/// Result of one filter branch: its probability and conditional state.
#[derive(Clone, Copy, Debug)]
pub struct Branch {
    pub probability: f64,
    /// `None` when the branch probability is below [`MIN_BRANCH_PROBABILITY`].
    pub state: Option<DensityMatrix>,
}

#[derive(Clone, Debug)]
pub struct OutcomeRecord {
    pub label: OutcomeLabel,
    pub probability: f64,
    pub state: Option<DensityMatrix>,
    /// Fidelity of `state` with `|Φ⁺⟩`.
    pub fidelity: Option<f64>,
    pub in_success_set: bool,
}

fn check_element(op: &ComplexMatrix) -> Result<()> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: op.dim() });
    }
    for ev in hermitian_eigenvalues(op)? {
        if !(-ELEMENT_TOL..=1.0 + ELEMENT_TOL).contains(&ev) {
            return Err(Error::NotPovmElement { eigenvalue: ev });
        }
    }
    Ok(())
}

/// `(√op_a ⊗ √op_b) ρ (√op_a ⊗ √op_b)†`; a missing operator leaves that arm alone.
pub fn filter_numerator(
    rho: &ComplexMatrix,
    op_a: Option<&ComplexMatrix>,
    op_b: Option<&ComplexMatrix>,
) -> Result<ComplexMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim() });
    }
    let identity = ComplexMatrix::identity(2)?;
    let root = |op: Option<&ComplexMatrix>| -> Result<ComplexMatrix> {
        match op {
            Some(m) => {
                check_element(m)?;
                psd_sqrt(m)
            }
            None => Ok(identity),
        }
    };
    let k = tensor(&root(op_a)?, &root(op_b)?)?;
    Ok(k.sandwich(rho))
}

pub fn filter_branch(
    rho: &DensityMatrix,
    op_a: Option<&ComplexMatrix>,
    op_b: Option<&ComplexMatrix>,
) -> Result<Branch> {
    rho.require_normalized()?;
    let numerator = filter_numerator(rho.matrix(), op_a, op_b)?;
    let probability = numerator.trace().re.max(0.0);
    let state = (probability > MIN_BRANCH_PROBABILITY)
        .then(|| DensityMatrix::trusted(numerator.scale(1.0 / probability), true));
    Ok(Branch { probability, state })
}

fn record(label: OutcomeLabel, probability: f64, state: Option<DensityMatrix>) -> Result<OutcomeRecord> {
    let fidelity = match &state {
        Some(s) => Some(fidelity(&epr_state(), s)?),
        None => None,
    };
    Ok(OutcomeRecord { label, probability, state, fidelity, in_success_set: label.is_success() })
}

/// Sends the photons of `parent` that reached the second tier through it.
/// `arms[i]` is true when arm `i` was reflected at tier 1.
fn second_tier(
    parent: &Branch,
    arms: [bool; 2],
    tier2: &Povm,
    mut label: impl FnMut([Click; 2]) -> OutcomeLabel,
    out: &mut Vec<OutcomeRecord>,
) -> Result<()> {
    let options = |reflected: bool| if reflected { vec![T, R] } else { vec![O] };
    for a in options(arms[0]) {
        for b in options(arms[1]) {
            let lbl = label([a, b]);
            match &parent.state {
                Some(state) => {
                    let ea = tier2.element(a);
                    let eb = tier2.element(b);
                    let child = filter_branch(state, ea.as_ref(), eb.as_ref())?;
                    out.push(record(lbl, parent.probability * child.probability, child.state)?);
                }
                None => out.push(record(lbl, 0.0, None)?),
            }
        }
    }
    Ok(())
}

/// All terminal outcomes of the two-tier full-filter tree.
pub fn enumerate_full_outcomes(
    rho_prime: &DensityMatrix,
    tier1: &Povm,
    tier2: &Povm,
) -> Result<Vec<OutcomeRecord>> {
    let t = tier1.transmit();
    let r = tier1.reflect();
    let tt = filter_branch(rho_prime, Some(&t), Some(&t))?;
    let tr = filter_branch(rho_prime, Some(&t), Some(&r))?;
    let rt = filter_branch(rho_prime, Some(&r), Some(&t))?;
    let rr = filter_branch(rho_prime, Some(&r), Some(&r))?;

    let mut out = Vec::with_capacity(9);
    out.push(record(OutcomeLabel::full(T, T, O, O), tt.probability, tt.state)?);
    second_tier(&tr, [false, true], tier2, |c| OutcomeLabel::full(T, R, c[0], c[1]), &mut out)?;
    second_tier(&rt, [true, false], tier2, |c| OutcomeLabel::full(R, T, c[0], c[1]), &mut out)?;
    second_tier(&rr, [true, true], tier2, |c| OutcomeLabel::full(R, R, c[0], c[1]), &mut out)?;
    sort_success_first(&mut out);
    Ok(out)
}

/// All terminal outcomes of the two-tier partial-filter tree (Alice filters, Bob does not).
pub fn enumerate_partial_outcomes(
    rho_prime: &DensityMatrix,
    tier1: &Povm,
    tier2: &Povm,
) -> Result<Vec<OutcomeRecord>> {
    let t = filter_branch(rho_prime, Some(&tier1.transmit()), None)?;
    let r = filter_branch(rho_prime, Some(&tier1.reflect()), None)?;
    let mut out = Vec::with_capacity(3);
    out.push(record(OutcomeLabel::partial(T, O), t.probability, t.state)?);
    second_tier(&r, [true, false], tier2, |c| OutcomeLabel::partial(R, c[0]), &mut out)?;
    sort_success_first(&mut out);
    Ok(out)
}

/// Outcomes of a scheme; without a second tier every reflection is terminal.
pub fn enumerate_outcomes(rho_prime: &DensityMatrix, scheme: &FilterScheme) -> Result<Vec<OutcomeRecord>> {
    match (scheme.kind, scheme.tier2) {
        (SchemeKind::Full, Some(t2)) => enumerate_full_outcomes(rho_prime, &scheme.tier1, &t2),
        (SchemeKind::Partial, Some(t2)) => enumerate_partial_outcomes(rho_prime, &scheme.tier1, &t2),
        (kind, None) => {
            let t = scheme.tier1.transmit();
            let r = scheme.tier1.reflect();
            let clicks: &[Click] = &[T, R];
            let mut out = Vec::new();
            match kind {
                SchemeKind::Full => {
                    for &a in clicks {
                        for &b in clicks {
                            let ea = if a == T { &t } else { &r };
                            let eb = if b == T { &t } else { &r };
                            let br = filter_branch(rho_prime, Some(ea), Some(eb))?;
                            out.push(record(OutcomeLabel::full(a, b, O, O), br.probability, br.state)?);
                        }
                    }
                }
                SchemeKind::Partial => {
                    for &a in clicks {
                        let ea = if a == T { &t } else { &r };
                        let br = filter_branch(rho_prime, Some(ea), None)?;
                        out.push(record(OutcomeLabel::partial(a, O), br.probability, br.state)?);
                    }
                }
            }
            Ok(out)
        }
    }
}

fn sort_success_first(records: &mut [OutcomeRecord]) {
    // stable: keeps tree order within each group
    records.sort_by_key(|r| !r.in_success_set);
}

/// Total probability of the success outcomes.
pub fn survival_rate(records: &[OutcomeRecord]) -> f64 {
    records.iter().filter(|r| r.in_success_set).map(|r| r.probability).sum()
}
