//! Brute-force reference on a truncated Fock space.
//!
//! States are built by applying dense displacement and squeeze operators
//! (matrix exponentials on a padded space) to the vacuum; the beam splitter acts
//! on creation operators directly. Everything here is slow and exact up to the
//! reported truncation error, and exists to validate [`crate::gaussian`].

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{ensure_finite, HccmError, Result};
use crate::gaussian::MomentTriple;
use crate::model::BeamSplitter;

/// Largest tolerated probability outside the truncated space.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-8;

/// Extra levels carried while exponentiating, so that the retained block is
/// unaffected by the artificial top of the ladder.
const PAD: usize = 40;

/// Pure single-mode state on `{|0⟩, …, |N⟩}`.
#[derive(Debug, Clone)]
pub struct FockState {
    amplitudes: DVector<Complex64>,
    truncation_error: f64,
}

/// Joint photon-number distribution `p(n₁, n₂)` on `[0..N]²`.
#[derive(Debug, Clone)]
pub struct JointPhotonPmf {
    probs: DMatrix<f64>,
    leakage: f64,
}

impl FockState {
    pub fn vacuum(n: usize) -> Self {
        let mut amplitudes = DVector::zeros(n + 1);
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, truncation_error: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `1 - ‖ψ‖²` of the retained amplitudes.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }
}

fn annihilation(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `⟨m|D(β)|n⟩` for `m, n ≤ dim - 1`.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let big = dim + PAD;
    let a = annihilation(big);
    let generator = a.adjoint() * beta - &a * beta.conj();
    generator.exp().view((0, 0), (dim, dim)).into_owned()
}

/// `⟨m|S(ξ)|n⟩` with `S(ξ) = exp[(ξ* a² - ξ a†²)/2]`.
pub fn squeeze_matrix(xi: Complex64, dim: usize) -> DMatrix<Complex64> {
    let big = dim + PAD;
    let a = annihilation(big);
    let a2 = &a * &a;
    let generator = (&a2 * xi.conj() - a2.adjoint() * xi) * Complex64::new(0.5, 0.0);
    generator.exp().view((0, 0), (dim, dim)).into_owned()
}

/// `D(α) S(r e^{2iθ}) |0⟩` truncated to `N` photons: quadrature variance
/// `e^{-2r}` along angle `θ`, matching [`crate::gaussian::GaussianState::squeezed_coherent`].
pub fn fock_squeezed_coherent(r: f64, theta: f64, alpha: Complex64, n: usize) -> Result<FockState> {
    ensure_finite("r", r)?;
    ensure_finite("theta", theta)?;
    ensure_finite("Re alpha", alpha.re)?;
    ensure_finite("Im alpha", alpha.im)?;
    if n < 1 {
        return Err(HccmError::InvalidArgument("Fock truncation needs N >= 1".into()));
    }
    let work = n + 1 + PAD;
    let xi = Complex64::from_polar(r, 2.0 * theta);
    let mut vac = DVector::zeros(work);
    vac[0] = Complex64::new(1.0, 0.0);
    let psi = displacement_matrix(alpha, work) * (squeeze_matrix(xi, work) * vac);
    let amplitudes = psi.rows(0, n + 1).into_owned();
    let deficit = (1.0 - amplitudes.norm_squared()).max(0.0);
    if deficit > DEFAULT_LEAKAGE_BOUND {
        return Err(HccmError::TruncationInsufficient { deficit, bound: DEFAULT_LEAKAGE_BOUND });
    }
    Ok(FockState { amplitudes, truncation_error: deficit })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Output photon statistics of `signal ⊗ |α_L⟩` behind the splitter.
///
/// The coherent LO only displaces the outputs by `(r_l α_L, t_l α_L)`. The
/// signal first passes a pure-loss channel of transmission `ts2 + rs2`
/// (Kraus decomposition), then a lossless split with amplitudes
/// `(t_s, -r_s)/√(ts2 + rs2)` acting on creation operators. For a lossless
/// symmetric splitter this is exactly the beam-splitter unitary.
pub fn joint_photon_statistics(
    signal: &FockState,
    lo_alpha: Complex64,
    bs: &BeamSplitter,
    n: usize,
) -> Result<JointPhotonPmf> {
    let dim = n + 1;
    let (ts, tl, rs, rl) = bs.amplitudes();
    let eta = bs.ts2() + bs.rs2();
    let (u, v) = if eta > 0.0 { (ts / eta.sqrt(), -rs / eta.sqrt()) } else { (0.0, 0.0) };
    let d1 = displacement_matrix(lo_alpha * rl, dim);
    let d2t = displacement_matrix(lo_alpha * tl, dim).transpose();
    let sig_dim = signal.dim();
    let lf = ln_factorials(sig_dim);
    let psi = signal.amplitudes();

    let mut probs = DMatrix::<f64>::zeros(dim, dim);
    let kraus_max = if eta >= 1.0 { 0 } else { sig_dim - 1 };
    for k in 0..=kraus_max {
        // A_k |m⟩ = √(C(m,k) η^{m-k} (1-η)^k) |m-k⟩
        let mut split = DMatrix::<Complex64>::zeros(dim, dim);
        let mut any = false;
        for m in k..sig_dim {
            let kept = m - k;
            let weight = (0.5 * (lf[m] - lf[k] - lf[kept])).exp()
                * eta.powi(kept as i32).sqrt()
                * (1.0 - eta).powi(k as i32).sqrt();
            let amp = psi[m] * weight;
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            any = true;
            for j in 0..=kept {
                if j >= dim || kept - j >= dim {
                    continue;
                }
                let binom = (0.5 * (lf[kept] - lf[j] - lf[kept - j])).exp();
                split[(j, kept - j)] += amp * binom * u.powi(j as i32) * v.powi((kept - j) as i32);
            }
        }
        if !any {
            continue;
        }
        let out = &d1 * split * &d2t;
        probs += out.map(|z| z.norm_sqr());
    }
    let leakage = (1.0 - probs.sum()).max(0.0);
    if leakage > DEFAULT_LEAKAGE_BOUND {
        return Err(HccmError::TruncationInsufficient { deficit: leakage, bound: DEFAULT_LEAKAGE_BOUND });
    }
    Ok(JointPhotonPmf { probs, leakage })
}

impl JointPhotonPmf {
    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn total(&self) -> f64 {
        self.probs.sum()
    }

    /// `[[Var n₁, Cov(n₁,n₂)], [·, Var n₂]]` of the truncated distribution.
    pub fn covariance(&self) -> Matrix2<f64> {
        let dim = self.probs.nrows();
        let (mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                let p = self.probs[(i, j)];
                let (x, y) = (i as f64, j as f64);
                m1 += p * x;
                m2 += p * y;
                s11 += p * x * x;
                s22 += p * y * y;
                s12 += p * x * y;
            }
        }
        let (v1, v2, c) = (s11 - m1 * m1, s22 - m2 * m2, s12 - m1 * m2);
        Matrix2::new(v1, c, c, v2)
    }
}

/// Normal-ordered signal moments from operator matrix elements.
pub fn oracle_moments(state: &FockState, phi: f64) -> MomentTriple {
    let psi = state.amplitudes();
    let a = annihilation(state.dim());
    // Lowering never leaves the truncated space, so these are exact.
    let a_psi = &a * psi;
    let a2_psi = &a * &a_psi;
    let mean_a = psi.dotc(&a_psi);
    let n = a_psi.norm_squared();
    let mean_a2 = psi.dotc(&a2_psi);
    let ada2 = a_psi.dotc(&a2_psi);
    let ad2a2 = a2_psi.norm_squared();

    let e = Complex64::from_polar(1.0, -phi);
    let mean_e = 2.0 * (e * mean_a).re;
    let var_e = 2.0 * (e * e * mean_a2).re + 2.0 * n - mean_e * mean_e;
    let anom = 2.0 * (e * ada2).re - mean_e * n;
    let var_i = ad2a2 - n * n;
    MomentTriple { var_i, anom, var_e }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{
        normal_ordered_signal_moments, photocurrent_covariance, two_mode_output, GaussianState, LocalOscillator,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x_quadrature(dim: usize) -> DMatrix<Complex64> {
        let a = annihilation(dim);
        &a + a.adjoint()
    }

    #[test]
    fn vacuum_construction() {
        let s = fock_squeezed_coherent(0.0, 0.0, c(0.0, 0.0), 10).unwrap();
        assert!((s.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(s.amplitudes().rows(1, 10).norm() < 1e-14);
    }

    #[test]
    fn coherent_amplitudes_are_poissonian() {
        let s = fock_squeezed_coherent(0.0, 0.0, c(1.0, 0.0), 40).unwrap();
        let mut fact = 1.0;
        for n in 0..=40usize {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-0.5f64).exp() / fact.sqrt();
            assert!((s.amplitudes()[n] - c(expected, 0.0)).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn squeezed_vacuum_is_even_with_closed_form_variance() {
        let s = fock_squeezed_coherent(0.2, 0.0, c(0.0, 0.0), 40).unwrap();
        for n in (1..=40).step_by(2) {
            assert!(s.amplitudes()[n].norm() < 1e-14);
        }
        let x = x_quadrature(41);
        let x2 = &x * &x;
        let var = s.amplitudes().dotc(&(x2 * s.amplitudes())).re;
        assert!((var - (-0.4f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn squeezing_angle_matches_gaussian_convention() {
        let theta = 0.7;
        let s = fock_squeezed_coherent(0.25, theta, c(0.0, 0.0), 40).unwrap();
        let a = annihilation(41);
        let e = &a * Complex64::from_polar(1.0, -theta) + a.adjoint() * Complex64::from_polar(1.0, theta);
        let var = s.amplitudes().dotc(&(&e * &e * s.amplitudes())).re;
        assert!((var - (-0.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn truncation_too_small_is_reported() {
        assert!(matches!(
            fock_squeezed_coherent(0.0, 0.0, c(1.0, 0.0), 3),
            Err(HccmError::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn vacuum_inputs_give_vacuum_outputs() {
        let bs = BeamSplitter::symmetric(0.14).unwrap();
        let pmf = joint_photon_statistics(&FockState::vacuum(20), c(0.0, 0.0), &bs, 20).unwrap();
        assert!((pmf.probs()[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coherent_lo_marginals_are_poissonian_and_uncorrelated() {
        let bs = BeamSplitter::symmetric(0.14).unwrap();
        let alpha_l = c(0.6, 0.8);
        let pmf = joint_photon_statistics(&FockState::vacuum(40), alpha_l, &bs, 40).unwrap();
        let cov = pmf.covariance();
        assert!(cov[(0, 1)].abs() < 1e-12);
        assert!((cov[(0, 0)] - 0.14).abs() < 1e-12);
        assert!((cov[(1, 1)] - 0.86).abs() < 1e-12);
        assert!(pmf.total() > 1.0 - 1e-8);
    }

    #[test]
    fn squeezed_signal_matches_wick_covariance() {
        let bs = BeamSplitter::symmetric(0.14).unwrap();
        let (r, theta, alpha) = (0.3, 0.4, c(0.8, -0.3));
        let lo = LocalOscillator::new(0.9, 1.1).unwrap();
        let fock = fock_squeezed_coherent(r, theta, alpha, 40).unwrap();
        let pmf = joint_photon_statistics(&fock, lo.complex_amplitude(), &bs, 40).unwrap();
        let gauss = GaussianState::squeezed_coherent(r, theta, alpha).unwrap();
        let analytic = photocurrent_covariance(&two_mode_output(&gauss, &lo, &bs).unwrap()).unwrap();
        assert!((pmf.covariance() - analytic).amax() < 1e-6);
    }

    #[test]
    fn lossy_splitter_matches_wick_covariance() {
        let bs = BeamSplitter::new(0.6, 0.7, 0.25, 0.2).unwrap();
        let lo = LocalOscillator::new(0.7, 2.0).unwrap();
        let fock = fock_squeezed_coherent(0.3, 1.3, c(-0.5, 0.6), 40).unwrap();
        let pmf = joint_photon_statistics(&fock, lo.complex_amplitude(), &bs, 40).unwrap();
        let gauss = GaussianState::squeezed_coherent(0.3, 1.3, c(-0.5, 0.6)).unwrap();
        let analytic = photocurrent_covariance(&two_mode_output(&gauss, &lo, &bs).unwrap()).unwrap();
        assert!((pmf.covariance() - analytic).amax() < 1e-6);
    }

    #[test]
    fn oracle_moment_examples() {
        let coh = fock_squeezed_coherent(0.0, 0.0, c(0.7, 0.2), 40).unwrap();
        let m = oracle_moments(&coh, 0.4);
        assert!(m.var_i.abs() < 1e-10 && m.anom.abs() < 1e-10 && m.var_e.abs() < 1e-10);

        let sv = fock_squeezed_coherent(0.2, 0.0, c(0.0, 0.0), 40).unwrap();
        assert!((oracle_moments(&sv, 0.0).var_e - ((-0.4f64).exp() - 1.0)).abs() < 1e-8);

        let phi = std::f64::consts::PI / 3.0;
        let ds = fock_squeezed_coherent(0.3, 0.0, c(1.0, 0.0), 40).unwrap();
        let oracle = oracle_moments(&ds, phi);
        let gauss = GaussianState::squeezed_coherent(0.3, 0.0, c(1.0, 0.0)).unwrap();
        let wick = normal_ordered_signal_moments(&gauss, phi).unwrap();
        assert!((oracle.var_i - wick.var_i).abs() < 1e-6);
        assert!((oracle.anom - wick.anom).abs() < 1e-6);
        assert!((oracle.var_e - wick.var_e).abs() < 1e-6);
    }
}
