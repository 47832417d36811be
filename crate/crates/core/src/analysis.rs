//! Correlation estimates, trigonometric regression and separation of the
//! `C₀`, `C₁(φ)`, `C₂(φ)` contributions.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector};

use crate::error::{HccmError, Result};

/// Design-matrix condition number above which a phase set is rejected.
pub const MAX_CONDITION_NUMBER: f64 = 1e8;
/// Minimum number of distinct phases for the five-parameter fit.
pub const MIN_DISTINCT_PHASES: usize = 6;

pub type Vector6 = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Vector5 = SVector<f64, 5>;

/// Mean of `c₁c₂` products with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl CorrelationEstimate {
    pub fn new(value: f64, stderr: f64, n: u64) -> Self {
        Self { value, stderr, n }
    }

    /// Sample-count weighted combination of two independent runs of the same quantity.
    pub fn pooled(&self, other: &Self) -> Self {
        let (na, nb) = (self.n as f64, other.n as f64);
        let total = na + nb;
        Self {
            value: (na * self.value + nb * other.value) / total,
            stderr: ((na * self.stderr).powi(2) + (nb * other.stderr).powi(2)).sqrt() / total,
            n: self.n + other.n,
        }
    }
}

/// Streaming accumulator of paired samples (Welford/Chan for the products).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    sum1: f64,
    sum2: f64,
}

impl PairAccumulator {
    pub fn push(&mut self, c1: f64, c2: f64) {
        let p = c1 * c2;
        self.n += 1;
        let delta = p - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (p - self.mean);
        self.sum1 += c1;
        self.sum2 += c2;
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.n += other.n;
        self.sum1 += other.sum1;
        self.sum2 += other.sum2;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Per-channel sample means `(c̄₁, c̄₂)`.
    pub fn channel_means(&self) -> (f64, f64) {
        let n = self.n.max(1) as f64;
        (self.sum1 / n, self.sum2 / n)
    }

    pub fn estimate(&self) -> Result<CorrelationEstimate> {
        if self.n < 2 {
            return Err(HccmError::InsufficientData(format!(
                "correlation estimate needs at least 2 samples, got {}",
                self.n
            )));
        }
        let var = self.m2.max(0.0) / (self.n - 1) as f64;
        Ok(CorrelationEstimate::new(self.mean, (var / self.n as f64).sqrt(), self.n))
    }
}

/// `C = (1/N) Σ c₁c₂` with the standard error of the mean of the products.
pub fn estimate_correlation(samples: &[(f64, f64)]) -> Result<CorrelationEstimate> {
    if samples.len() < 2 {
        return Err(HccmError::InsufficientData(format!(
            "correlation estimate needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|(a, b)| a * b).sum::<f64>() / n;
    let ss = samples.iter().map(|(a, b)| (a * b - mean).powi(2)).sum::<f64>();
    let sd = (ss / (n - 1.0)).sqrt();
    Ok(CorrelationEstimate::new(mean, sd / n.sqrt(), samples.len() as u64))
}

/// Removes a calibration offset (blocked-signal or dark run); errors add in quadrature.
pub fn lo_offset_correction(c: &CorrelationEstimate, offset: &CorrelationEstimate) -> CorrelationEstimate {
    CorrelationEstimate::new(c.value - offset.value, c.stderr.hypot(offset.stderr), c.n)
}

/// Drift error of the blocked-LO level: difference of two subsequent runs.
pub fn drift_error(run_a: &CorrelationEstimate, run_b: &CorrelationEstimate) -> f64 {
    (run_a.value - run_b.value).abs()
}

/// `C(φ) = a₀ + a₁ cos φ + b₁ sin φ + a₂ cos 2φ + b₂ sin 2φ` with parameter
/// covariance, in the order `(a₀, a₁, b₁, a₂, b₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigFit {
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub cov: Matrix5,
    pub chi2: f64,
    pub dof: usize,
}

fn trig_basis(phi: f64) -> Vector5 {
    let (s1, c1) = phi.sin_cos();
    let (s2, c2) = (2.0 * phi).sin_cos();
    Vector5::new(1.0, c1, s1, c2, s2)
}

impl TrigFit {
    pub fn params(&self) -> Vector5 {
        Vector5::new(self.a0, self.a1, self.b1, self.a2, self.b2)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        trig_basis(phi).dot(&self.params())
    }

    pub fn eval_stderr(&self, phi: f64) -> f64 {
        let b = trig_basis(phi);
        (b.transpose() * self.cov * b)[(0, 0)].max(0.0).sqrt()
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof as f64
    }

    /// Subtracts a constant with independent error from `a₀`.
    pub fn shift_constant(&self, offset: &CorrelationEstimate) -> Self {
        let mut out = self.clone();
        out.a0 -= offset.value;
        out.cov[(0, 0)] += offset.stderr * offset.stderr;
        out
    }
}

/// Weighted least squares on `{1, cos φ, sin φ, cos 2φ, sin 2φ}` with weights
/// `1/stderr²`; parameter covariance `(XᵀWX)⁻¹`.
pub fn fit_trig_poly(points: &[(f64, CorrelationEstimate)]) -> Result<TrigFit> {
    let n = points.len();
    if n < MIN_DISTINCT_PHASES {
        return Err(HccmError::InsufficientData(format!(
            "trigonometric fit needs at least {MIN_DISTINCT_PHASES} phases, got {n}"
        )));
    }
    if let Some((phi, c)) = points.iter().find(|(phi, c)| {
        !phi.is_finite() || !c.value.is_finite() || c.stderr.is_nan() || c.stderr <= 0.0 || !c.stderr.is_finite()
    }) {
        return Err(HccmError::InvalidArgument(format!(
            "fit point at phase {phi} needs a finite value and positive standard error, got {} ± {}",
            c.value, c.stderr
        )));
    }

    let design = DMatrix::from_fn(n, 5, |i, j| trig_basis(points[i].0)[j]);
    let sv = design.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION_NUMBER {
        return Err(HccmError::DegenerateDesign { condition, limit: MAX_CONDITION_NUMBER });
    }
    let mut reduced: Vec<f64> = points.iter().map(|(phi, _)| phi.rem_euclid(TAU)).collect();
    reduced.sort_by(f64::total_cmp);
    reduced.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if reduced.last().zip(reduced.first()).is_some_and(|(l, f)| TAU - l + f < 1e-12) {
        reduced.pop();
    }
    if reduced.len() < MIN_DISTINCT_PHASES {
        return Err(HccmError::InsufficientData(format!(
            "trigonometric fit needs at least {MIN_DISTINCT_PHASES} distinct phases, got {}",
            reduced.len()
        )));
    }

    let weighted = DMatrix::from_fn(n, 5, |i, j| design[(i, j)] / points[i].1.stderr);
    let y = DVector::from_fn(n, |i, _| points[i].1.value / points[i].1.stderr);
    let svd = weighted.svd(true, true);
    let (u, vt) = (svd.u.as_ref().expect("u requested"), svd.v_t.as_ref().expect("v_t requested"));
    let s = &svd.singular_values;
    let uty = u.transpose() * &y;
    let mut beta = Vector5::zeros();
    let mut cov = Matrix5::zeros();
    for k in 0..5 {
        let vk = vt.row(k).transpose();
        beta += &vk * (uty[k] / s[k]);
        for i in 0..5 {
            for j in 0..5 {
                cov[(i, j)] += vk[i] * vk[j] / (s[k] * s[k]);
            }
        }
    }
    let chi2 = points.iter().map(|(phi, c)| ((c.value - trig_basis(*phi).dot(&beta)) / c.stderr).powi(2)).sum();
    Ok(TrigFit {
        a0: beta[0],
        a1: beta[1],
        b1: beta[2],
        a2: beta[3],
        b2: beta[4],
        cov: (cov + cov.transpose()) * 0.5,
        chi2,
        dof: n - 5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SeparationMethod {
    ByPhase,
    /// Valid only at `phase` and `phase + π`; `C₁` and `C₂` refer to the LO
    /// amplitude `reference_lo`.
    ByLoStrength {
        phase: f64,
        reference_lo: f64,
    },
}

/// Separated contributions as the parameter vector
/// `(C₀, a₁, b₁, a₂, b₂, k₂)` with `C₁(φ) = a₁ cos φ + b₁ sin φ` and
/// `C₂(φ) = a₂ cos 2φ + b₂ sin 2φ + k₂`.
///
/// The statistical covariance and the drift error of the blocked-LO level are
/// kept apart; [`SeparatedContributions::cov`] combines them.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedContributions {
    pub method: SeparationMethod,
    pub params: Vector6,
    pub stat_cov: Matrix6,
    pub drift: f64,
}

/// `C₀`, `C₁(φ)`, `C₂(φ)` at one phase with their 3×3 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContributionsAt {
    pub phi: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub cov: Matrix3<f64>,
}

impl SeparatedContributions {
    fn drift_cov(&self) -> Matrix6 {
        let d2 = self.drift * self.drift;
        let mut m = Matrix6::zeros();
        m[(0, 0)] = d2;
        if self.method == SeparationMethod::ByPhase {
            // C₀ = C_block and k₂ = a₀ - C_block move in opposite directions.
            m[(5, 5)] = d2;
            m[(0, 5)] = -d2;
            m[(5, 0)] = -d2;
        }
        m
    }

    /// Total covariance including the drift error.
    pub fn cov(&self) -> Matrix6 {
        self.stat_cov + self.drift_cov()
    }

    /// `(C₀, σ_total)`.
    pub fn c0(&self) -> (f64, f64) {
        (self.params[0], self.cov()[(0, 0)].max(0.0).sqrt())
    }

    pub fn at(&self, phi: f64) -> Result<ContributionsAt> {
        self.evaluate(phi, &self.cov())
    }

    /// Like [`Self::at`] but with statistical errors only.
    pub fn at_stat(&self, phi: f64) -> Result<ContributionsAt> {
        self.evaluate(phi, &self.stat_cov)
    }

    fn evaluate(&self, phi: f64, cov: &Matrix6) -> Result<ContributionsAt> {
        if let SeparationMethod::ByLoStrength { phase, .. } = self.method {
            let offset = (phi - phase).rem_euclid(std::f64::consts::PI);
            if offset.min(std::f64::consts::PI - offset) > 1e-9 {
                return Err(HccmError::InvalidArgument(format!(
                    "LO-strength separation measured at {phase} and {phase}+π cannot be evaluated at {phi}"
                )));
            }
        }
        let (s1, c1) = phi.sin_cos();
        let (s2, c2) = (2.0 * phi).sin_cos();
        let jac = SMatrix::<f64, 3, 6>::from_row_slice(&[
            1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, c1, s1, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, c2, s2, 1.0,
        ]);
        let values = jac * self.params;
        Ok(ContributionsAt { phi, c0: values[0], c1: values[1], c2: values[2], cov: jac * cov * jac.transpose() })
    }
}

/// Separation by phase periodicity: `C₀ = C_block`, `C₁` from the first
/// harmonic, `C₂` from the second harmonic plus `a₀ - C_block`.
pub fn separate_by_phase(fit: &TrigFit, c_block: &CorrelationEstimate, drift: f64) -> SeparatedContributions {
    let params = Vector6::new(c_block.value, fit.a1, fit.b1, fit.a2, fit.b2, fit.a0 - c_block.value);
    // Inputs (a₀, a₁, b₁, a₂, b₂, C_block).
    let mut input = Matrix6::zeros();
    input.fixed_view_mut::<5, 5>(0, 0).copy_from(&fit.cov);
    input[(5, 5)] = c_block.stderr * c_block.stderr;
    let jac = Matrix6::from_row_slice(&[
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0, //
        0.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
        1.0, 0.0, 0.0, 0.0, 0.0, -1.0,
    ]);
    SeparatedContributions { method: SeparationMethod::ByPhase, params, stat_cov: jac * input * jac.transpose(), drift }
}

/// One LO amplitude of an LO-strength scan: correlations at `φ` and `φ + π`,
/// and the blocked-signal offset measured at that LO amplitude, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoPoint {
    pub lo_amplitude: f64,
    pub at_phi: CorrelationEstimate,
    pub at_phi_pi: CorrelationEstimate,
    pub offset: Option<CorrelationEstimate>,
}

/// Coefficients of the LO-strength fits: odd part `γ E_L`, even part `α + β E_L²`,
/// with their joint covariance in the order `(γ, α, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoFit {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cov: Matrix3<f64>,
    pub drift: f64,
}

impl LoFit {
    /// Fitted correlation at `φ` (`sign = +1`) or `φ + π` (`sign = -1`).
    pub fn eval(&self, lo_amplitude: f64, sign: f64) -> f64 {
        self.alpha + self.beta * lo_amplitude * lo_amplitude + sign * self.gamma * lo_amplitude
    }
}

/// Fits the odd part `(C(φ) - C(φ+π))/2` through the origin in `E_L` and the
/// even part `(C(φ) + C(φ+π))/2 - offset` as `α + β E_L²`.
///
/// Every fitted coefficient is linear in the measured correlations, so the
/// joint covariance is propagated exactly from the independent inputs.
pub fn fit_lo_dependence(points: &[LoPoint]) -> Result<LoFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.lo_amplitude).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(HccmError::InsufficientData(format!(
            "LO-strength separation needs at least 3 distinct LO amplitudes, got {}",
            distinct.len()
        )));
    }
    if distinct.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(HccmError::InvalidArgument("LO amplitudes must be finite and nonnegative".into()));
    }
    let Some(blocked) = points.iter().find(|p| p.lo_amplitude == 0.0) else {
        return Err(HccmError::MissingCalibration("LO-strength scan needs a blocked-LO point (E_L = 0)".into()));
    };
    for p in points {
        let measured =
            [p.at_phi, p.at_phi_pi].iter().any(|c| c.stderr.is_nan() || c.stderr <= 0.0 || !c.value.is_finite());
        let offset = p.offset.is_some_and(|o| o.stderr.is_nan() || o.stderr < 0.0 || !o.value.is_finite());
        if measured || offset {
            return Err(HccmError::InvalidArgument(format!(
                "LO point at E_L = {} needs finite values and positive standard errors",
                p.lo_amplitude
            )));
        }
    }

    // Independent inputs: for each point C(φ), C(φ+π) and the optional offset.
    let mut values = Vec::new();
    let mut variances = Vec::new();
    let mut layout = Vec::with_capacity(points.len());
    for p in points {
        let base = values.len();
        values.extend([p.at_phi.value, p.at_phi_pi.value]);
        variances.extend([p.at_phi.stderr.powi(2), p.at_phi_pi.stderr.powi(2)]);
        let off = p.offset.map(|o| {
            values.push(o.value);
            variances.push(o.stderr.powi(2));
            base + 2
        });
        layout.push((base, off));
    }
    let m = values.len();

    // Odd part through the origin: γ = Σ wE·odd / Σ wE².
    let mut k_gamma = DVector::<f64>::zeros(m);
    let denom: f64 = points
        .iter()
        .map(|p| p.lo_amplitude.powi(2) / ((p.at_phi.stderr.powi(2) + p.at_phi_pi.stderr.powi(2)) / 4.0))
        .sum();
    for (p, (base, _)) in points.iter().zip(&layout) {
        let w = 1.0 / ((p.at_phi.stderr.powi(2) + p.at_phi_pi.stderr.powi(2)) / 4.0);
        let coef = w * p.lo_amplitude / denom;
        k_gamma[*base] += 0.5 * coef;
        k_gamma[base + 1] -= 0.5 * coef;
    }

    // Even part: weighted normal equations for (α, β).
    let mut normal = nalgebra::Matrix2::<f64>::zeros();
    let mut rows = Vec::with_capacity(points.len());
    for (p, (_, off)) in points.iter().zip(&layout) {
        let mut var = (p.at_phi.stderr.powi(2) + p.at_phi_pi.stderr.powi(2)) / 4.0;
        if let Some(o) = off {
            var += variances[*o];
        }
        let w = 1.0 / var;
        let e2 = p.lo_amplitude.powi(2);
        normal += nalgebra::Matrix2::new(w, w * e2, w * e2, w * e2 * e2);
        rows.push((w, e2));
    }
    let inv = normal
        .try_inverse()
        .ok_or_else(|| HccmError::InsufficientData("LO amplitudes do not determine the quadratic fit".into()))?;
    let mut k_alpha = DVector::<f64>::zeros(m);
    let mut k_beta = DVector::<f64>::zeros(m);
    for ((w, e2), (base, off)) in rows.iter().zip(&layout) {
        let ca = inv[(0, 0)] * w + inv[(0, 1)] * w * e2;
        let cb = inv[(1, 0)] * w + inv[(1, 1)] * w * e2;
        for (k, coef) in [(&mut k_alpha, ca), (&mut k_beta, cb)] {
            k[*base] += 0.5 * coef;
            k[base + 1] += 0.5 * coef;
            if let Some(o) = off {
                k[*o] -= coef;
            }
        }
    }

    let data = DVector::from_vec(values);
    let kmat = DMatrix::from_rows(&[k_gamma.transpose(), k_alpha.transpose(), k_beta.transpose()]);
    let coeffs = &kmat * data;
    let weighted = DMatrix::from_fn(3, m, |i, j| kmat[(i, j)] * variances[j]);
    let cov = &weighted * kmat.transpose();
    Ok(LoFit {
        gamma: coeffs[0],
        alpha: coeffs[1],
        beta: coeffs[2],
        cov: Matrix3::from_fn(|i, j| cov[(i, j)]),
        drift: drift_error(&blocked.at_phi, &blocked.at_phi_pi),
    })
}

/// Separation by LO-strength scaling at `phi`: `C₀ = α`, `C₁(φ) = γ E_ref`,
/// `C₂(φ) = β E_ref²` for the reference LO amplitude `E_ref`. The drift error
/// is the difference of the two blocked-LO points.
pub fn separate_by_lo(points: &[LoPoint], phi: f64, reference_lo: f64) -> Result<SeparatedContributions> {
    if !(reference_lo > 0.0 && reference_lo.is_finite()) {
        return Err(HccmError::InvalidArgument(format!("reference LO amplitude must be positive, got {reference_lo}")));
    }
    let fit = fit_lo_dependence(points)?;
    Ok(separation_from_lo_fit(&fit, phi, reference_lo))
}

pub fn separation_from_lo_fit(fit: &LoFit, phi: f64, reference_lo: f64) -> SeparatedContributions {
    let (s, c) = phi.sin_cos();
    let e = reference_lo;
    let params = Vector6::new(fit.alpha, fit.gamma * e * c, fit.gamma * e * s, 0.0, 0.0, fit.beta * e * e);
    // Jacobian with respect to (γ, α, β).
    let jac = SMatrix::<f64, 6, 3>::from_row_slice(&[
        0.0,
        1.0,
        0.0, //
        e * c,
        0.0,
        0.0, //
        e * s,
        0.0,
        0.0, //
        0.0,
        0.0,
        0.0, //
        0.0,
        0.0,
        0.0, //
        0.0,
        0.0,
        e * e,
    ]);
    SeparatedContributions {
        method: SeparationMethod::ByLoStrength { phase: phi, reference_lo },
        params,
        stat_cov: jac * fit.cov * jac.transpose(),
        drift: fit.drift,
    }
}
