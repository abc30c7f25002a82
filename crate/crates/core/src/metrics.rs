//! Fidelity, PPT test and concurrence for two-qubit states.
//!
//! Fidelity is the *squared* Uhlmann form `F(ρ, σ) = (Tr √(√ρ σ √ρ))²`, which
//! reduces to `⟨ψ|σ|ψ⟩` when `ρ = |ψ⟩⟨ψ|`. All thresholds in this crate are
//! expressed in that convention.

use serde::Serialize;

use crate::channel::DensityMatrix;
use crate::error::{Error, Result};
use crate::qmath::{
    hermitian_eigenvalues, partial_transpose_b, psd_sqrt, tensor, ComplexMatrix, C64,
    HERMITIAN_TOL, PSD_TOL,
};

/// A PT eigenvalue below `-ENTANGLEMENT_TOL · Tr ρ` certifies entanglement.
pub const ENTANGLEMENT_TOL: f64 = 1e-10;
const PURITY_TOL: f64 = 1e-10;
const ROUNDOFF_REL: f64 = 64.0 * f64::EPSILON;

/// Fidelity of `sigma` with `target`. Uses `⟨ψ|σ|ψ⟩` when either state is pure.
pub fn fidelity(target: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    target.require_normalized()?;
    sigma.require_normalized()?;
    if let Some(psi) = pure_vector(target.matrix()) {
        return Ok(expectation(&psi, sigma.matrix()).clamp(0.0, 1.0));
    }
    if let Some(psi) = pure_vector(sigma.matrix()) {
        return Ok(expectation(&psi, target.matrix()).clamp(0.0, 1.0));
    }
    uhlmann(target.matrix(), sigma.matrix())
}

/// General Uhlmann fidelity, without the pure-state shortcut.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.require_normalized()?;
    sigma.require_normalized()?;
    uhlmann(rho.matrix(), sigma.matrix())
}

fn uhlmann(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let root = psd_sqrt(rho)?;
    let inner = &(&root * sigma) * &root;
    let eig = hermitian_eigenvalues(&inner)?;
    // Round-off eigenvalues of a rank-deficient product would each add ~1e-8
    // after the square root.
    let cutoff = ROUNDOFF_REL * eig[3].abs();
    let tr: f64 = eig.iter().filter(|&&l| l > cutoff).map(|&l| l.sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Recovers `|ψ⟩` (up to phase) when `rho` is a unit-trace rank-one projector.
fn pure_vector(rho: &ComplexMatrix) -> Option<[C64; 4]> {
    if (rho.frobenius_sq() - 1.0).abs() > PURITY_TOL {
        return None;
    }
    let k = (0..4).max_by(|&i, &j| rho.get(i, i).re.total_cmp(&rho.get(j, j).re))?;
    let norm = rho.get(k, k).re.sqrt();
    let mut psi = [C64::new(0.0, 0.0); 4];
    for (i, p) in psi.iter_mut().enumerate() {
        *p = rho.get(i, k) / norm;
    }
    Some(psi)
}

fn expectation(psi: &[C64; 4], sigma: &ComplexMatrix) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += psi[i].conj() * sigma.get(i, j) * psi[j];
        }
    }
    acc.re
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PptReport {
    /// Partial-transpose eigenvalues, ascending.
    pub eigenvalues: [f64; 4],
    pub min_eigenvalue: f64,
    pub is_entangled: bool,
}

/// PPT test on any positive-scaled two-qubit operator.
pub fn ppt_report(rho: &ComplexMatrix) -> Result<PptReport> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: rho.dim() });
    }
    let own = hermitian_eigenvalues(rho)?;
    let scale = rho.max_abs().max(f64::MIN_POSITIVE);
    if own[0] < -PSD_TOL * scale.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: own[0] });
    }
    let pt = hermitian_eigenvalues(&partial_transpose_b(rho)?)?;
    let eigenvalues = [pt[0], pt[1], pt[2], pt[3]];
    Ok(PptReport {
        eigenvalues,
        min_eigenvalue: pt[0],
        is_entangled: pt[0] < -ENTANGLEMENT_TOL * rho.trace().re,
    })
}

/// The unnormalized reflected-pair numerator `(√M₀ ⊗ √M₀) ρ′ (√M₀ ⊗ √M₀)†`
/// in closed form, with `M₀ = diag(α, β)`.
pub fn reflected_pair_closed_form(alpha: f64, beta: f64, gamma: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4).expect("4x4");
    let re = |x: f64| C64::new(x, 0.0);
    let coherence = 0.5 * alpha * beta * (1.0 - gamma);
    m.set(0, 0, re(alpha * alpha * (0.5 + gamma * gamma / 2.0)));
    m.set(1, 1, re(coherence * gamma));
    m.set(2, 2, re(coherence * gamma));
    m.set(3, 3, re(0.5 * beta * beta * (1.0 - gamma).powi(2)));
    m.set(0, 3, re(coherence));
    m.set(3, 0, re(coherence));
    m
}

/// Closed-form partial-transpose eigenvalues of [`reflected_pair_closed_form`],
/// in the order `λ₁..λ₄`; only `λ₁` can be negative.
pub fn reflected_pair_pt_eigenvalues(alpha: f64, beta: f64, gamma: f64) -> [f64; 4] {
    let d = gamma - 1.0;
    [
        -0.5 * alpha * beta * d * d,
        0.5 * beta * beta * d * d,
        0.5 * alpha * alpha * (1.0 + gamma * gamma),
        0.5 * alpha * beta * (1.0 - gamma * gamma),
    ]
}

/// Wootters concurrence `max(0, μ₁ − μ₂ − μ₃ − μ₄)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    rho.require_normalized()?;
    let m = rho.matrix();
    let sy = ComplexMatrix::from_entries(&[
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    ])?;
    let yy = tensor(&sy, &sy)?;
    let flipped = &(&yy * &m.conj()) * &yy;
    // ρ ρ̃ shares its spectrum with the Hermitian √ρ ρ̃ √ρ.
    let root = psd_sqrt(m)?;
    let mut inner = &(&root * &flipped) * &root;
    symmetrize(&mut inner);
    let mut mu: Vec<f64> =
        hermitian_eigenvalues(&inner)?.into_iter().map(|l| l.max(0.0).sqrt()).collect();
    mu.sort_by(|a, b| b.total_cmp(a));
    Ok((mu[0] - mu[1] - mu[2] - mu[3]).max(0.0))
}

fn symmetrize(m: &mut ComplexMatrix) {
    if m.hermitian_deviation() <= HERMITIAN_TOL {
        let adj = m.adjoint();
        *m = (&*m + &adj).scale(0.5);
    }
}
