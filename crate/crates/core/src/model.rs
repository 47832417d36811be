//! Beam-splitter coefficient algebra and the three-term correlation model.
//!
//! The cross-correlation of the two output intensities separates by powers of
//! the LO amplitude `E_L`:
//!
//! ```text
//! ΔG = 𝒯 [ 𝒯₀ ⟨:(ΔI)²:⟩ + 𝒯₁ E_L ⟨:ΔE_φ ΔI:⟩ + 𝒯₂ E_L² ⟨:(ΔE_φ)²:⟩ ]
//! ```
//!
//! and the measured correlation is `C = ζ₁ζ₂ ΔG` for opaque positive detector
//! factors `ζ_k`.

use crate::error::{ensure_finite, HccmError, Result};
use crate::gaussian::MomentTriple;

const SUM_TOL: f64 = 1e-12;

/// Intensity transmittances and reflectances seen by the signal (`*_s`) and the
/// LO (`*_l`). Detector 1 sits in the signal's transmitted port.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BeamSplitter {
    ts2: f64,
    tl2: f64,
    rs2: f64,
    rl2: f64,
}

/// `(𝒯₀, 𝒯₁, 𝒯₂, 𝒯)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitterCoefficients {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub tt: f64,
}

/// `ΔG₀`, `ΔG₁(φ)` and `ΔG₂(φ)` at one phase and LO amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contributions {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl Contributions {
    pub fn total(&self) -> f64 {
        self.g0 + self.g1 + self.g2
    }
}

impl BeamSplitter {
    /// Lossy and asymmetric splitters are allowed as long as neither input
    /// port gains energy.
    pub fn new(ts2: f64, tl2: f64, rs2: f64, rl2: f64) -> Result<Self> {
        for (name, v) in [("ts2", ts2), ("tl2", tl2), ("rs2", rs2), ("rl2", rl2)] {
            ensure_finite(name, v)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(HccmError::InvalidArgument(format!(
                    "splitter coefficient {name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if ts2 + rs2 > 1.0 + SUM_TOL || tl2 + rl2 > 1.0 + SUM_TOL {
            return Err(HccmError::InvalidArgument(format!(
                "splitter gains energy: ts2+rs2={}, tl2+rl2={}",
                ts2 + rs2,
                tl2 + rl2
            )));
        }
        Ok(Self { ts2, tl2, rs2, rl2 })
    }

    /// Lossless splitter with intensity reflectance `r2` for both inputs.
    pub fn symmetric(r2: f64) -> Result<Self> {
        Self::new(1.0 - r2, 1.0 - r2, r2, r2)
    }

    pub fn ts2(&self) -> f64 {
        self.ts2
    }
    pub fn tl2(&self) -> f64 {
        self.tl2
    }
    pub fn rs2(&self) -> f64 {
        self.rs2
    }
    pub fn rl2(&self) -> f64 {
        self.rl2
    }

    /// Real amplitudes `(t_s, t_l, r_s, r_l)`.
    pub fn amplitudes(&self) -> (f64, f64, f64, f64) {
        (self.ts2.sqrt(), self.tl2.sqrt(), self.rs2.sqrt(), self.rl2.sqrt())
    }

    pub fn coefficients(&self) -> Result<SplitterCoefficients> {
        splitter_coefficients(self)
    }
}

/// Coefficients of the three-term decomposition.
///
/// With detector 1 seeing `t_s a + r_l α_L` and detector 2 seeing
/// `-r_s a + t_l α_L`, expanding the output intensity covariance gives
/// `𝒯 = t_s t_l r_s r_l`, `𝒯₀ = (r_s/r_l)(t_s/t_l)`, `𝒯₁ = r_s/t_l - t_s/r_l`
/// and `𝒯₂ = -1`. For a symmetric splitter `𝒯₁ = |R|/|T| - |T|/|R|`.
pub fn splitter_coefficients(bs: &BeamSplitter) -> Result<SplitterCoefficients> {
    if bs.ts2 * bs.tl2 * bs.rs2 * bs.rl2 == 0.0 {
        return Err(HccmError::DegenerateSplitter(format!(
            "all of ts2, tl2, rs2, rl2 must be positive (got {}, {}, {}, {})",
            bs.ts2, bs.tl2, bs.rs2, bs.rl2
        )));
    }
    let (ts, tl, rs, rl) = bs.amplitudes();
    Ok(SplitterCoefficients { t0: (rs / rl) * (ts / tl), t1: rs / tl - ts / rl, t2: -1.0, tt: ts * tl * rs * rl })
}

pub fn delta_g_contributions(m: &MomentTriple, e_l: f64, bs: &BeamSplitter) -> Result<Contributions> {
    ensure_finite("LO amplitude", e_l)?;
    if e_l < 0.0 {
        return Err(HccmError::InvalidArgument(format!("LO amplitude must be nonnegative, got {e_l}")));
    }
    let k = splitter_coefficients(bs)?;
    Ok(Contributions {
        g0: k.tt * k.t0 * m.var_i,
        g1: k.tt * k.t1 * e_l * m.anom,
        g2: k.tt * k.t2 * e_l * e_l * m.var_e,
    })
}

/// `C = ζ₁ζ₂ (g₀ + v g₁ + v² g₂)`: mode mismatch scales the interfering LO
/// amplitude by the visibility `v`.
pub fn predicted_correlation(c: &Contributions, zeta1: f64, zeta2: f64, visibility: f64) -> Result<f64> {
    if !(zeta1 > 0.0 && zeta2 > 0.0 && zeta1.is_finite() && zeta2.is_finite()) {
        return Err(HccmError::InvalidArgument(format!("detector factors must be positive, got {zeta1}, {zeta2}")));
    }
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(HccmError::InvalidArgument(format!("visibility must lie in (0, 1], got {visibility}")));
    }
    Ok(zeta1 * zeta2 * (c.g0 + visibility * c.g1 + visibility * visibility * c.g2))
}
