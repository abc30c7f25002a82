//! Amplitude-damping transport of an EPR pair to Alice and Bob.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::qmath::{hermitian_eigenvalues, tensor, ComplexMatrix, C64, HERMITIAN_TOL, PSD_TOL};

/// Tolerance on `Tr ρ = 1` for normalized states.
pub const TRACE_TOL: f64 = 1e-10;

/// Damping probability `γ` of an amplitude-damping channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DampingParams {
    gamma: f64,
}

impl DampingParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid(format!("damping factor must lie in [0, 1], got {gamma}")));
        }
        Ok(Self { gamma })
    }

    /// `γ = 1 − exp(−t / T₁)` for a photon in flight for time `t`.
    pub fn from_decay(elapsed: f64, t1: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(elapsed >= 0.0) {
            return Err(invalid(format!("need t >= 0 and T1 > 0, got t={elapsed}, T1={t1}")));
        }
        Self::new(-(-elapsed / t1).exp_m1())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// A two-qubit state; either trace-normalized or an explicitly unnormalized
/// (positive-scaled) operator such as a filter numerator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    normalized: bool,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        validate_psd(&mat)?;
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { trace });
        }
        Ok(Self { mat, normalized: true })
    }

    /// Validates Hermiticity and positivity only.
    pub fn unnormalized(mat: ComplexMatrix) -> Result<Self> {
        validate_psd(&mat)?;
        Ok(Self { mat, normalized: false })
    }

    /// For states produced by completely positive maps of already-validated
    /// states, where re-running the eigen check would only cost time.
    pub(crate) fn trusted(mat: ComplexMatrix, normalized: bool) -> Self {
        debug_assert_eq!(mat.dim(), 4);
        Self { mat, normalized }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Rescales to unit trace.
    pub fn normalize(&self) -> Result<Self> {
        let trace = self.trace();
        if trace <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(Self { mat: self.mat.scale(1.0 / trace), normalized: true })
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::NotNormalized { trace: self.trace() })
        }
    }
}

fn validate_psd(mat: &ComplexMatrix) -> Result<()> {
    if mat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: mat.dim() });
    }
    let deviation = mat.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let min = hermitian_eigenvalues(mat)?[0];
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// `|Φ⁺⟩⟨Φ⁺|` with `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn epr_state() -> DensityMatrix {
    let mut m = ComplexMatrix::zeros(4).expect("4 is a supported dimension");
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m.set(i, j, C64::new(0.5, 0.0));
    }
    DensityMatrix::trusted(m, true)
}

/// Kraus pair `(E₀, E₁)` with `E₀ = diag(1, √(1−γ))` and `E₁ = √γ |0⟩⟨1|`.
pub fn kraus_pair(p: DampingParams) -> (ComplexMatrix, ComplexMatrix) {
    let g = p.gamma;
    let e0 = ComplexMatrix::from_real(&[1.0, 0.0, 0.0, (1.0 - g).sqrt()]).expect("2x2");
    let e1 = ComplexMatrix::from_real(&[0.0, g.sqrt(), 0.0, 0.0]).expect("2x2");
    (e0, e1)
}

/// Sends each qubit of `rho` through an identical damping channel.
pub fn apply_channel(rho: &DensityMatrix, p: DampingParams) -> Result<DensityMatrix> {
    apply_channel_asymmetric(rho, p, p)
}

/// Channel with independent damping on each arm. Only the symmetric case is
/// part of the model; this entry point exists for testing the Kraus sum.
#[doc(hidden)]
pub fn apply_channel_asymmetric(
    rho: &DensityMatrix,
    alice: DampingParams,
    bob: DampingParams,
) -> Result<DensityMatrix> {
    rho.require_normalized()?;
    let (a0, a1) = kraus_pair(alice);
    let (b0, b1) = kraus_pair(bob);
    let mut out = ComplexMatrix::zeros(4)?;
    for ea in [&a0, &a1] {
        for eb in [&b0, &b1] {
            let k = tensor(ea, eb)?;
            out = &out + &k.sandwich(rho.matrix());
        }
    }
    Ok(DensityMatrix::trusted(out, true))
}

/// The damped EPR pair `ρ′` written out entry by entry.
pub fn damped_epr_closed_form(p: DampingParams) -> DensityMatrix {
    let g = p.gamma;
    let mut m = ComplexMatrix::zeros(4).expect("4x4");
    let re = |x: f64| C64::new(x, 0.0);
    m.set(0, 0, re((1.0 + g * g) / 2.0));
    m.set(1, 1, re(g * (1.0 - g) / 2.0));
    m.set(2, 2, re(g * (1.0 - g) / 2.0));
    m.set(3, 3, re((1.0 - g).powi(2) / 2.0));
    m.set(0, 3, re((1.0 - g) / 2.0));
    m.set(3, 0, re((1.0 - g) / 2.0));
    DensityMatrix::trusted(m, true)
}

/// `ρ′ = E(|Φ⁺⟩⟨Φ⁺|)` via the Kraus sum.
pub fn damped_epr(p: DampingParams) -> DensityMatrix {
    apply_channel(&epr_state(), p).expect("the EPR state is normalized")
}

/// Fidelity of the unfiltered damped pair with `|Φ⁺⟩`: `1 − γ + γ²/2`.
pub fn unfiltered_fidelity(gamma: f64) -> f64 {
    1.0 - gamma + gamma * gamma / 2.0
}

/// Largest `γ` at which the unfiltered pair still reaches fidelity `f_threshold`.
pub fn unfiltered_gamma_limit(f_threshold: f64) -> f64 {
    1.0 - (2.0 * f_threshold - 1.0).max(0.0).sqrt()
}
