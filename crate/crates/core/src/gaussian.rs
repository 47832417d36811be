//! Gaussian states of one or two optical modes and their normal-ordered moments.
//!
//! Quadratures follow `x = a + a†`, `p = -i(a - a†)`, so the vacuum has unit
//! variance in every quadrature and a coherent amplitude `α` sits at
//! `(2 Re α, 2 Im α)`. The field observable is `E_φ = a e^{-iφ} + a† e^{iφ}`
//! and the intensity is `I = a†a`.
//!
//! Normal-ordered expectations are classical averages over the Glauber-Sudarshan
//! P function. For a Gaussian state that "distribution" has the same mean and the
//! covariance `cov - I` (which may be indefinite for nonclassical states); every
//! moment needed here is a covariance of polynomials of degree at most two in the
//! phase-space variables, which Wick's theorem evaluates in closed form.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{ensure_finite, HccmError, Result};
use crate::model::BeamSplitter;

/// Eigenvalue floor for the `cov + iΩ ⪰ 0` physicality test.
pub const PHYSICALITY_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Mean vector and covariance matrix of an `n`-mode Gaussian state, quadrature
/// order `(x₁, p₁, x₂, p₂, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// The three normal-ordered signal moments `⟨:(ΔI)²:⟩`, `⟨:ΔE_φ ΔI:⟩`, `⟨:(ΔE_φ)²:⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTriple {
    pub var_i: f64,
    pub anom: f64,
    pub var_e: f64,
}

impl MomentTriple {
    /// Determinant of the classical moment matrix `[[var_i, anom], [anom, var_e]]`.
    /// Nonnegative for every state with a classical P function.
    pub fn det(&self) -> f64 {
        self.var_i * self.var_e - self.anom * self.anom
    }
}

/// Weak coherent local oscillator with amplitude `E_L` and phase `φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOscillator {
    amplitude: f64,
    phase: f64,
}

impl LocalOscillator {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        ensure_finite("LO amplitude", amplitude)?;
        ensure_finite("LO phase", phase)?;
        if amplitude < 0.0 {
            return Err(HccmError::InvalidArgument(format!("LO amplitude must be nonnegative, got {amplitude}")));
        }
        Ok(Self { amplitude, phase: phase.rem_euclid(TAU) })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Phase reduced to `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

impl GaussianState {
    /// Builds a state after checking shape, symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) || dim > 4 {
            return Err(HccmError::InvalidArgument(format!("mean vector must have length 2 or 4, got {dim}")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(HccmError::InvalidArgument(format!(
                "covariance must be {dim}x{dim}, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(HccmError::InvalidArgument("non-finite state entries".into()));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(HccmError::InvalidArgument(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let state = Self { mean, cov: (&cov + cov.transpose()) * 0.5 };
        let min_eig = state.min_uncertainty_eigenvalue();
        if min_eig < -PHYSICALITY_TOL {
            return Err(HccmError::UnphysicalState(format!("cov + iΩ has eigenvalue {min_eig:.3e} < 0")));
        }
        Ok(state)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self { mean: DVector::zeros(dim), cov: DMatrix::identity(dim, dim) }
    }

    pub fn coherent(alpha: Complex64) -> Result<Self> {
        Self::squeezed_coherent(0.0, 0.0, alpha)
    }

    /// Displaced thermal state with mean thermal photon number `n_th`.
    pub fn thermal(n_th: f64, alpha: Complex64) -> Result<Self> {
        ensure_finite("thermal photon number", n_th)?;
        if n_th < 0.0 {
            return Err(HccmError::InvalidArgument(format!("thermal photon number must be nonnegative, got {n_th}")));
        }
        let v = 2.0 * n_th + 1.0;
        Self::from_quadrature_variances(v, v, 0.0, alpha)
    }

    /// Pure squeezed coherent state: variances `e^{-2r}` along angle `theta`
    /// and `e^{2r}` orthogonal to it, displaced by `alpha`.
    pub fn squeezed_coherent(r: f64, theta: f64, alpha: Complex64) -> Result<Self> {
        ensure_finite("squeezing parameter", r)?;
        ensure_finite("squeezing angle", theta)?;
        ensure_finite("Re alpha", alpha.re)?;
        ensure_finite("Im alpha", alpha.im)?;
        if r < 0.0 {
            return Err(HccmError::InvalidArgument(format!("squeezing parameter must be nonnegative, got {r}")));
        }
        Ok(Self::rotated_diagonal((-2.0 * r).exp(), (2.0 * r).exp(), theta, alpha))
    }

    /// General single-mode state with principal quadrature variances
    /// `(v_min, v_max)`, the minimum along angle `theta`. Mixed whenever
    /// `v_min · v_max > 1`.
    pub fn from_quadrature_variances(v_min: f64, v_max: f64, theta: f64, alpha: Complex64) -> Result<Self> {
        for (name, v) in [("v_min", v_min), ("v_max", v_max), ("theta", theta)] {
            ensure_finite(name, v)?;
        }
        ensure_finite("Re alpha", alpha.re)?;
        ensure_finite("Im alpha", alpha.im)?;
        if v_min <= 0.0 || v_max < v_min {
            return Err(HccmError::InvalidArgument(format!(
                "need 0 < v_min <= v_max, got v_min={v_min}, v_max={v_max}"
            )));
        }
        if v_min * v_max < 1.0 - PHYSICALITY_TOL {
            return Err(HccmError::UnphysicalState(format!(
                "v_min * v_max = {:.6} violates the uncertainty bound v_min * v_max >= 1",
                v_min * v_max
            )));
        }
        Ok(Self::rotated_diagonal(v_min, v_max, theta, alpha))
    }

    fn rotated_diagonal(v_min: f64, v_max: f64, theta: f64, alpha: Complex64) -> Self {
        let (s, c) = theta.sin_cos();
        let cov = DMatrix::from_row_slice(
            2,
            2,
            &[
                v_min * c * c + v_max * s * s,
                (v_min - v_max) * c * s,
                (v_min - v_max) * c * s,
                v_min * s * s + v_max * c * c,
            ],
        );
        let mean = DVector::from_vec(vec![2.0 * alpha.re, 2.0 * alpha.im]);
        Self { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let dim = self.cov.nrows();
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            let omega = if i / 2 != j / 2 {
                0.0
            } else if i % 2 == 0 && j == i + 1 {
                1.0
            } else if i % 2 == 1 && j + 1 == i {
                -1.0
            } else {
                0.0
            };
            Complex64::new(self.cov[(i, j)], omega)
        });
        h.symmetric_eigenvalues().min()
    }

    pub fn is_physical(&self) -> bool {
        self.min_uncertainty_eigenvalue() >= -PHYSICALITY_TOL
    }

    /// Pure loss with transmission `eta` on every mode.
    pub fn apply_loss(&self, eta: f64) -> Result<Self> {
        self.apply_loss_per_mode(&vec![eta; self.n_modes()])
    }

    /// Independent pure-loss channels, one transmission per mode.
    pub fn apply_loss_per_mode(&self, etas: &[f64]) -> Result<Self> {
        if etas.len() != self.n_modes() {
            return Err(HccmError::InvalidArgument(format!(
                "expected {} transmissions, got {}",
                self.n_modes(),
                etas.len()
            )));
        }
        if let Some(bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(HccmError::InvalidArgument(format!("loss transmission must lie in [0, 1], got {bad}")));
        }
        let dim = self.mean.len();
        let amp = |k: usize| etas[k / 2].sqrt();
        let mean = DVector::from_fn(dim, |i, _| amp(i) * self.mean[i]);
        let cov = DMatrix::from_fn(dim, dim, |i, j| {
            let vac = if i == j { 1.0 - etas[i / 2] } else { 0.0 };
            amp(i) * amp(j) * self.cov[(i, j)] + vac
        });
        Ok(Self { mean, cov })
    }

    /// Phase-space rotation `a → a e^{iδ}` applied to every mode.
    pub fn rotate(&self, delta: f64) -> Self {
        let dim = self.mean.len();
        let (s, c) = delta.sin_cos();
        let mut rot = DMatrix::zeros(dim, dim);
        for m in 0..dim / 2 {
            rot[(2 * m, 2 * m)] = c;
            rot[(2 * m, 2 * m + 1)] = -s;
            rot[(2 * m + 1, 2 * m)] = s;
            rot[(2 * m + 1, 2 * m + 1)] = c;
        }
        let cov = &rot * &self.cov * rot.transpose();
        Self { mean: &rot * &self.mean, cov: (&cov + cov.transpose()) * 0.5 }
    }

    /// Multiplies the coherent displacement by `factor`, leaving the noise untouched.
    pub fn scale_displacement(&self, factor: f64) -> Self {
        Self { mean: &self.mean * factor, cov: self.cov.clone() }
    }

    /// Mean photon number `⟨a_k† a_k⟩` of mode `k`.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        let (x, p) = (2 * mode, 2 * mode + 1);
        (self.cov[(x, x)] + self.cov[(p, p)] + self.mean[x].powi(2) + self.mean[p].powi(2) - 2.0) / 4.0
    }

    /// Quantum variance `⟨(ΔE_φ)²⟩` of the first mode's field quadrature (vacuum = 1).
    pub fn quadrature_variance(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        c * c * self.cov[(0, 0)] + 2.0 * c * s * self.cov[(0, 1)] + s * s * self.cov[(1, 1)]
    }

    fn normal_ordered_cov(&self) -> DMatrix<f64> {
        let dim = self.cov.nrows();
        &self.cov - DMatrix::<f64>::identity(dim, dim)
    }
}

/// A real polynomial `zᵀAz + bᵀz + c` in the phase-space variables.
#[derive(Debug, Clone)]
struct QuadraticForm {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl QuadraticForm {
    /// Classical intensity `|β_k|² = (X_k² + P_k²)/4` of mode `k`.
    fn intensity(mode: usize, dim: usize) -> Self {
        let mut a = DMatrix::zeros(dim, dim);
        a[(2 * mode, 2 * mode)] = 0.25;
        a[(2 * mode + 1, 2 * mode + 1)] = 0.25;
        Self { a, b: DVector::zeros(dim), c: 0.0 }
    }

    /// Classical field `X_k cos φ + P_k sin φ` of mode `k`.
    fn field(phi: f64, mode: usize, dim: usize) -> Self {
        let mut b = DVector::zeros(dim);
        b[2 * mode] = phi.cos();
        b[2 * mode + 1] = phi.sin();
        Self { a: DMatrix::zeros(dim, dim), b, c: 0.0 }
    }

    fn mean(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        (&self.a * cov).trace() + mean.dot(&(&self.a * mean)) + self.b.dot(mean) + self.c
    }

    /// `Cov(q₁, q₂)` for `z ~ N(mean, cov)`. Writing `z = mean + δ`, each form
    /// becomes `δᵀAδ + b'ᵀδ + const` with `b' = b + 2A·mean`; Wick pairings give
    /// `2 tr(A₁ cov A₂ cov) + b₁'ᵀ cov b₂'` and all odd orders vanish.
    fn covariance(&self, other: &Self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let b1 = &self.b + 2.0 * (&self.a * mean);
        let b2 = &other.b + 2.0 * (&other.a * mean);
        2.0 * (&self.a * cov * &other.a * cov).trace() + b1.dot(&(cov * b2))
    }
}

/// `⟨:(ΔI)²:⟩`, `⟨:ΔE_φ ΔI:⟩` and `⟨:(ΔE_φ)²:⟩` of a single-mode state.
pub fn normal_ordered_signal_moments(state: &GaussianState, phi: f64) -> Result<MomentTriple> {
    if state.n_modes() != 1 {
        return Err(HccmError::InvalidArgument(format!(
            "signal moments need a single-mode state, got {} modes",
            state.n_modes()
        )));
    }
    ensure_finite("phase", phi)?;
    let v = state.normal_ordered_cov();
    let mu = state.mean();
    let intensity = QuadraticForm::intensity(0, 2);
    let field = QuadraticForm::field(phi, 0, 2);
    Ok(MomentTriple {
        var_i: intensity.covariance(&intensity, mu, &v),
        anom: field.covariance(&intensity, mu, &v),
        var_e: field.covariance(&field, mu, &v),
    })
}

/// Joint state of the two beam-splitter outputs.
///
/// Detector 1 receives `t_s a + r_l α_L`, detector 2 receives `-r_s a + t_l α_L`.
/// The LO is coherent, so it only displaces the outputs; the signal's excess
/// noise `cov - I` is distributed along `(t_s, -r_s)` and the remainder is
/// vacuum, which keeps the output physical for lossy splitters too.
pub fn two_mode_output(signal: &GaussianState, lo: &LocalOscillator, bs: &BeamSplitter) -> Result<GaussianState> {
    if signal.n_modes() != 1 {
        return Err(HccmError::InvalidArgument(format!(
            "beam-splitter input must be a single-mode signal, got {} modes",
            signal.n_modes()
        )));
    }
    let (ts, tl, rs, rl) = bs.amplitudes();
    let lo_x = 2.0 * lo.amplitude() * lo.phase().cos();
    let lo_p = 2.0 * lo.amplitude() * lo.phase().sin();
    let mu = signal.mean();
    let mean = DVector::from_vec(vec![
        ts * mu[0] + rl * lo_x,
        ts * mu[1] + rl * lo_p,
        -rs * mu[0] + tl * lo_x,
        -rs * mu[1] + tl * lo_p,
    ]);
    let w = signal.normal_ordered_cov();
    let s = [ts, -rs];
    let cov = DMatrix::from_fn(4, 4, |i, j| {
        let vac = if i == j { 1.0 } else { 0.0 };
        vac + s[i / 2] * s[j / 2] * w[(i % 2, j % 2)]
    });
    Ok(GaussianState { mean, cov })
}

/// Exact photon-number covariance matrix `[[⟨(Δn₁)²⟩, ⟨Δn₁Δn₂⟩], [·, ⟨(Δn₂)²⟩]]`
/// of a two-mode state.
pub fn photocurrent_covariance(joint: &GaussianState) -> Result<Matrix2<f64>> {
    if joint.n_modes() != 2 {
        return Err(HccmError::InvalidArgument(format!(
            "photocurrent covariance needs a two-mode state, got {} modes",
            joint.n_modes()
        )));
    }
    let v = joint.normal_ordered_cov();
    let mu = joint.mean();
    let n1 = QuadraticForm::intensity(0, 4);
    let n2 = QuadraticForm::intensity(1, 4);
    // ⟨(Δn)²⟩ = ⟨:(Δn)²:⟩ + ⟨n⟩; the cross term is already normally ordered.
    let var1 = n1.covariance(&n1, mu, &v) + n1.mean(mu, &v);
    let var2 = n2.covariance(&n2, mu, &v) + n2.mean(mu, &v);
    let cross = n1.covariance(&n2, mu, &v);
    Ok(Matrix2::new(var1, cross, cross, var2))
}

/// Converts a squeezing figure in dB to a quadrature variance relative to vacuum:
/// `x dB ⇔ 10^{x/10}`, so squeezing uses a negative argument.
pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
