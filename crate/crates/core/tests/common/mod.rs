//! Scalar reference model used to cross-check the matrix code.
//!
//! Every state reachable from the damped Bell pair under diagonal filters is an
//! X-state with a single real coherence between |00⟩ and |11⟩, so the whole
//! filter tree reduces to a handful of products.

#![allow(dead_code)]

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XState {
    /// Diagonal in the order 00, 01, 10, 11.
    pub d: [f64; 4],
    /// Real coherence ⟨00|ρ|11⟩.
    pub c: f64,
}

impl XState {
    pub fn damped(gamma: f64) -> Self {
        let g = gamma;
        Self {
            d: [0.5 * (1.0 + g * g), 0.5 * g * (1.0 - g), 0.5 * g * (1.0 - g), 0.5 * (1.0 - g) * (1.0 - g)],
            c: 0.5 * (1.0 - g),
        }
    }

    pub fn trace(&self) -> f64 {
        self.d.iter().sum()
    }

    /// Applies diagonal POVM weights `a` (Alice) and `b` (Bob) without renormalizing.
    pub fn filter(&self, a: [f64; 2], b: [f64; 2]) -> Self {
        Self {
            d: [self.d[0] * a[0] * b[0], self.d[1] * a[0] * b[1], self.d[2] * a[1] * b[0], self.d[3] * a[1] * b[1]],
            c: self.c * (a[0] * a[1] * b[0] * b[1]).sqrt(),
        }
    }

    /// Overlap with the Bell pair after normalization.
    pub fn fidelity(&self) -> f64 {
        (self.d[0] + self.d[3] + 2.0 * self.c) / (2.0 * self.trace())
    }

    /// Minimum eigenvalue of the partial transpose, normalized.
    pub fn pt_min_eigenvalue(&self) -> f64 {
        let t = self.trace();
        let inner = 0.5 * (self.d[1] + self.d[2]) - (0.25 * (self.d[1] - self.d[2]).powi(2) + self.c * self.c).sqrt();
        inner.min(self.d[0]).min(self.d[3]) / t
    }

    /// Concurrence of an X-state, normalized.
    pub fn concurrence(&self) -> f64 {
        let t = self.trace();
        (2.0 * (self.c.abs() - (self.d[1] * self.d[2]).sqrt()).max(0.0)) / t
    }
}

pub const IDENTITY: [f64; 2] = [1.0, 1.0];

pub fn transmit(alpha: f64) -> [f64; 2] {
    [1.0 - alpha, alpha]
}

pub fn reflect(alpha: f64) -> [f64; 2] {
    [alpha, 1.0 - alpha]
}

fn compose(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    [x[0] * y[0], x[1] * y[1]]
}

/// (label, unnormalized state) for every success outcome of the full tree.
pub fn full_success(gamma: f64, a1: f64, a2: f64) -> Vec<(&'static str, XState)> {
    let rho = XState::damped(gamma);
    let t = transmit(a1);
    let r = reflect(a1);
    let rt = compose(r, transmit(a2));
    vec![
        ("TT/--", rho.filter(t, t)),
        ("TR/-T", rho.filter(t, rt)),
        ("RT/T-", rho.filter(rt, t)),
        ("RR/TT", rho.filter(rt, rt)),
    ]
}

/// (label, unnormalized state) for every outcome of the full tree.
pub fn full_all(gamma: f64, a1: f64, a2: f64) -> Vec<(&'static str, XState)> {
    let rho = XState::damped(gamma);
    let t = transmit(a1);
    let r = reflect(a1);
    let rt = compose(r, transmit(a2));
    let rr = compose(r, reflect(a2));
    vec![
        ("TT/--", rho.filter(t, t)),
        ("TR/-T", rho.filter(t, rt)),
        ("RT/T-", rho.filter(rt, t)),
        ("RR/TT", rho.filter(rt, rt)),
        ("TR/-R", rho.filter(t, rr)),
        ("RT/R-", rho.filter(rr, t)),
        ("RR/TR", rho.filter(rt, rr)),
        ("RR/RT", rho.filter(rr, rt)),
        ("RR/RR", rho.filter(rr, rr)),
    ]
}

pub fn partial_all(gamma: f64, a1: f64, a2: f64) -> Vec<(&'static str, XState)> {
    let rho = XState::damped(gamma);
    let r = reflect(a1);
    vec![
        ("T/-", rho.filter(transmit(a1), IDENTITY)),
        ("R/T", rho.filter(compose(r, transmit(a2)), IDENTITY)),
        ("R/R", rho.filter(compose(r, reflect(a2)), IDENTITY)),
    ]
}

pub fn partial_success(gamma: f64, a1: f64, a2: f64) -> Vec<(&'static str, XState)> {
    partial_all(gamma, a1, a2).into_iter().take(2).collect()
}

pub fn tier1_branch(gamma: f64, a1: f64, full: bool) -> XState {
    let t = transmit(a1);
    XState::damped(gamma).filter(t, if full { t } else { IDENTITY })
}

/// Brute-force tier-1 optimum on `n` interior points: (α, survival).
pub fn brute_tier1(gamma: f64, f_th: f64, full: bool, n: usize) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for k in 1..n {
        let a = k as f64 / n as f64;
        let s = tier1_branch(gamma, a, full);
        if s.fidelity() >= f_th && best.is_none_or(|(_, p)| s.trace() > p) {
            best = Some((a, s.trace()));
        }
    }
    best
}

/// Counted recycled survival for a fixed pair of filters.
pub fn recycled_objective(gamma: f64, a1: f64, a2: f64, f_th: f64, full: bool) -> f64 {
    let outs = if full { full_success(gamma, a1, a2) } else { partial_success(gamma, a1, a2) };
    outs.iter().filter(|(_, s)| s.fidelity() >= f_th).map(|(_, s)| s.trace()).sum()
}

/// Brute-force tier-2 optimum on `n` interior points: (α′, survival).
pub fn brute_tier2(gamma: f64, a1: f64, f_th: f64, full: bool, n: usize) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 1..n {
        let a = k as f64 / n as f64;
        let v = recycled_objective(gamma, a1, a, f_th, full);
        if v > best.1 {
            best = (a, v);
        }
    }
    best
}

/// Largest tier-1 fidelity reachable on a coarse scan.
pub fn max_tier1_fidelity(gamma: f64, full: bool) -> f64 {
    (1..10_000)
        .map(|k| tier1_branch(gamma, k as f64 / 10_000.0, full).fidelity())
        .fold(f64::NEG_INFINITY, f64::max)
}
