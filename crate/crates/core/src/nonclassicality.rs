//! The `L(φ)` matrix, its determinant test and the analytic quantum condition.
//!
//! With `Lᵢⱼ` built from the separated contributions divided by the splitter
//! coefficients, `det L = ζ₁²ζ₂²𝒯²E_L² · det M` where
//! `M = [[⟨:(ΔI)²:⟩, ⟨:ΔE_φΔI:⟩], [·, ⟨:(ΔE_φ)²:⟩]]`. Classical light has a
//! nonnegative `det M`, so a significantly negative `det L` certifies
//! anomalous quantum correlations without knowing gains or efficiencies.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::analysis::{ContributionsAt, SeparatedContributions};
use crate::error::{HccmError, Result};
use crate::gaussian::{normal_ordered_signal_moments, GaussianState};
use crate::model::{delta_g_contributions, BeamSplitter, SplitterCoefficients};

pub const DEFAULT_SIGNIFICANCE_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LMatrix {
    pub phi: f64,
    pub entries: Matrix2<f64>,
    /// Covariance of `(C₀, C₁, C₂)` at `phi`.
    pub contribution_cov: Matrix3<f64>,
    pub coeffs: SplitterCoefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ClassicalConsistent,
    Nonclassical,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClassicalConsistent => "classical-consistent",
            Self::Nonclassical => "nonclassical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetResult {
    pub phi: f64,
    pub det: f64,
    pub sigma: f64,
    /// `-det/σ` for negative determinants, else 0.
    pub significance: f64,
    pub verdict: Verdict,
}

fn check_anomalous_access(coeffs: &SplitterCoefficients) -> Result<()> {
    if coeffs.t1.abs() < 1e-12 {
        return Err(HccmError::AnomalousTermInaccessible(
            "the anomalous moment is only accessible if the beam splitter is unbalanced (T1 = 0 here); \
             use an unequal intensity partition such as 14:86"
                .into(),
        ));
    }
    Ok(())
}

pub fn l_matrix_from_contributions(c: &ContributionsAt, coeffs: &SplitterCoefficients) -> Result<LMatrix> {
    check_anomalous_access(coeffs)?;
    let l00 = c.c0 / coeffs.t0;
    let l01 = c.c1 / coeffs.t1;
    let l11 = c.c2 / coeffs.t2;
    Ok(LMatrix { phi: c.phi, entries: Matrix2::new(l00, l01, l01, l11), contribution_cov: c.cov, coeffs: *coeffs })
}

pub fn build_l(sep: &SeparatedContributions, coeffs: &SplitterCoefficients, phi: f64) -> Result<LMatrix> {
    check_anomalous_access(coeffs)?;
    l_matrix_from_contributions(&sep.at(phi)?, coeffs)
}

impl LMatrix {
    pub fn det(&self) -> f64 {
        let e = &self.entries;
        e[(0, 0)] * e[(1, 1)] - e[(0, 1)] * e[(0, 1)]
    }

    /// First-order standard deviation of the determinant.
    pub fn det_sigma(&self) -> f64 {
        let e = &self.entries;
        let k = &self.coeffs;
        let grad = Vector3::new(e[(1, 1)] / k.t0, -2.0 * e[(0, 1)] / k.t1, e[(0, 0)] / k.t2);
        (grad.transpose() * self.contribution_cov * grad)[(0, 0)].max(0.0).sqrt()
    }
}

pub fn det_with_error(l: &LMatrix) -> DetResult {
    det_with_threshold(l, DEFAULT_SIGNIFICANCE_THRESHOLD)
}

pub fn det_with_threshold(l: &LMatrix, threshold: f64) -> DetResult {
    let det = l.det();
    let sigma = l.det_sigma();
    let significance = if det < 0.0 {
        if sigma > 0.0 {
            -det / sigma
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    };
    let verdict =
        if det < 0.0 && significance >= threshold { Verdict::Nonclassical } else { Verdict::ClassicalConsistent };
    DetResult { phi: l.phi, det, sigma, significance, verdict }
}

/// Determinant test at each phase.
pub fn det_scan(
    sep: &SeparatedContributions,
    coeffs: &SplitterCoefficients,
    phases: &[f64],
    threshold: f64,
) -> Result<Vec<DetResult>> {
    phases.iter().map(|&phi| Ok(det_with_threshold(&build_l(sep, coeffs, phi)?, threshold))).collect()
}

/// Whether the state's quadrature variance at `phi` is below vacuum.
pub fn is_squeezed_at(state: &GaussianState, phi: f64) -> bool {
    state.quadrature_variance(phi) < 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRangeSummary {
    pub n_phases: usize,
    pub nonclassical_fraction: f64,
    /// Runs of consecutive nonclassical phases as `(first, last)`.
    pub nonclassical_intervals: Vec<(f64, f64)>,
    /// Per input result: squeezed quadrature at that phase.
    pub squeezed: Vec<bool>,
    pub state_is_squeezed: bool,
    /// A nonclassical verdict at a phase where the quadrature is not squeezed.
    pub nonclassical_outside_squeezed: bool,
}

pub fn classify_phase_range(results: &[DetResult], state: &GaussianState) -> Result<PhaseRangeSummary> {
    if results.is_empty() {
        return Err(HccmError::InvalidArgument("no determinant results to classify".into()));
    }
    let squeezed: Vec<bool> = results.iter().map(|r| is_squeezed_at(state, r.phi)).collect();
    let nonclassical: Vec<bool> = results.iter().map(|r| r.verdict == Verdict::Nonclassical).collect();
    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for (i, r) in results.iter().enumerate() {
        if nonclassical[i] {
            start.get_or_insert(r.phi);
            if i + 1 == results.len() || !nonclassical[i + 1] {
                intervals.push((start.take().expect("open interval"), r.phi));
            }
        }
    }
    let count = nonclassical.iter().filter(|&&n| n).count();
    // Min quadrature variance of a single mode: smallest eigenvalue of the covariance.
    let state_is_squeezed = state.cov().symmetric_eigenvalues().min() < 1.0;
    Ok(PhaseRangeSummary {
        n_phases: results.len(),
        nonclassical_fraction: count as f64 / results.len() as f64,
        nonclassical_intervals: intervals,
        nonclassical_outside_squeezed: nonclassical.iter().zip(&squeezed).any(|(&n, &s)| n && !s),
        squeezed,
        state_is_squeezed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumCondition {
    /// `⟨:ΔE_φΔI:⟩²`
    pub lhs: f64,
    /// `⟨:(ΔI)²:⟩ ⟨:(ΔE_φ)²:⟩`
    pub rhs: f64,
    pub violated: bool,
}

pub fn quantum_condition_analytic(state: &GaussianState, phi: f64) -> Result<QuantumCondition> {
    let m = normal_ordered_signal_moments(state, phi)?;
    let lhs = m.anom * m.anom;
    let rhs = m.var_i * m.var_e;
    Ok(QuantumCondition { lhs, rhs, violated: lhs > rhs })
}

/// Noise-free `det L` for a signal state, LO amplitude, splitter and detector factors.
pub fn analytic_det_l(
    state: &GaussianState,
    phi: f64,
    e_l: f64,
    bs: &BeamSplitter,
    zeta1: f64,
    zeta2: f64,
) -> Result<f64> {
    let coeffs = bs.coefficients()?;
    check_anomalous_access(&coeffs)?;
    let g = delta_g_contributions(&normal_ordered_signal_moments(state, phi)?, e_l, bs)?;
    let z = zeta1 * zeta2;
    let c = ContributionsAt { phi, c0: z * g.g0, c1: z * g.g1, c2: z * g.g2, cov: Matrix3::zeros() };
    Ok(l_matrix_from_contributions(&c, &coeffs)?.det())
}
