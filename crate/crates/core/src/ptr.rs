//! Propose-test-release for the principal eigenvector under edge privacy.
//!
//! A run has three phases:
//!
//! 1. **Gap test.** A truncated biased Laplace draw `z` gives
//!    `f̃ = (GAP − t) − z`, and the test passes when `f̃ ≥ 0`.
//! 2. **Distance to instability.** `φ` lower-bounds the number of edge flips
//!    needed to reach a graph whose local sensitivity exceeds `β`. It is
//!    privatized with Laplace noise of scale `GS_φ/ε₁`.
//! 3. **Release.** If `φ̂` clears `GS_φ·ln(1/δ)/ε₁`, the mechanism releases
//!    `v + N(0, σ²I)`, normalized, with `σ² = 2β² ln(2/δ)/ε₂²`.
//!
//! The run as a whole is `(ε₀+ε₁+ε₂, δ₀+δ)`-DP.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::Graph;
use crate::linalg::normalize;
use crate::noise::{fill_gaussian, sample_laplace, sample_tbl, tbl_delta0, NoiseError, RngStream, TblParams};
use crate::spectral::{SpectralSummary, GAP_THRESHOLD};

/// Default TBL centre, `3t`.
pub const DEFAULT_MU: f64 = 3.0 * GAP_THRESHOLD;

#[derive(Debug, Error, PartialEq)]
pub enum PtrError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigen-gap is zero")]
    ZeroGap,

    #[error("parameters infeasible: gap {gap} does not exceed target distance {tau}")]
    ParameterInfeasible { gap: f64, tau: f64 },

    #[error("beta {beta} outside ({lo}, {hi})")]
    BetaOutOfRange { beta: f64, lo: f64, hi: f64 },

    #[error("summary has {summary} entries but graph has {graph} vertices")]
    DimensionMismatch { summary: usize, graph: usize },

    #[error(transparent)]
    Noise(#[from] NoiseError),
}

pub type Result<T> = std::result::Result<T, PtrError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtrConfig {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta: f64,
    /// Success-probability knob in `(0, 1]`.
    pub p: f64,
    pub mu: f64,
}

impl Default for PtrConfig {
    fn default() -> Self {
        Self {
            eps0: 1.0,
            eps1: 3.0,
            eps2: 3.0,
            delta: 0.01,
            p: 1.0,
            mu: DEFAULT_MU,
        }
    }
}

impl PtrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PtrError::InvalidConfig(msg));
        for (name, e) in [("eps0", self.eps0), ("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("{name} must be positive, got {e}"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.mu >= 1.0 && self.mu.is_finite()) {
            return bad(format!("mu must be at least 1, got {}", self.mu));
        }
        Ok(())
    }

    pub fn eps_total(&self) -> f64 {
        self.eps0 + self.eps1 + self.eps2
    }

    pub fn delta0(&self) -> f64 {
        tbl_delta0(self.mu, self.eps0)
    }

    pub fn delta_total(&self) -> f64 {
        self.delta0() + self.delta
    }
}

/// Global ℓ1 sensitivity of `φ`: `2 + (2−√2)μ` when `−1 < f̃ < 1`, else 1.
pub fn gs_phi(f_tilde: f64, mu: f64) -> f64 {
    if f_tilde > -1.0 && f_tilde < 1.0 {
        2.0 + (2.0 - std::f64::consts::SQRT_2) * mu
    } else {
        1.0
    }
}

/// Open interval `(β_l, β_u)` of admissible local-sensitivity targets.
pub fn beta_bounds(s: &SpectralSummary) -> Result<(f64, f64)> {
    if !(s.gap > 0.0) {
        return Err(PtrError::ZeroGap);
    }
    let lo = 2.0 * s.c_pi / s.gap;
    let hi = 2.0 * std::f64::consts::SQRT_2 / s.gap * (2.0 - std::f64::consts::SQRT_2 + s.c_pi);
    Ok((lo, hi))
}

/// Target distance to instability, `(p + GS_φ)·ln(1/δ)/ε₁`.
pub fn target_distance(cfg: &PtrConfig, gs_phi: f64) -> f64 {
    (cfg.p + gs_phi) * (1.0 / cfg.delta).ln() / cfg.eps1
}

/// The `β` whose distance to instability equals [`target_distance`].
pub fn compute_beta(s: &SpectralSummary, cfg: &PtrConfig, gs_phi: f64) -> Result<f64> {
    let tau = target_distance(cfg, gs_phi);
    let denom = s.gap - tau;
    if !(denom > 0.0) {
        return Err(PtrError::ParameterInfeasible { gap: s.gap, tau });
    }
    Ok(2.0 / s.gap * (2.0 * tau + s.gap * s.c_pi) / denom)
}

/// Sufficient condition for [`compute_beta`] to land in `(β_l, β_u)`.
pub fn check_parameter_condition(s: &SpectralSummary, cfg: &PtrConfig, gs_phi: f64) -> bool {
    (1.0 / cfg.delta).ln() / cfg.eps1
        < (1.0 - std::f64::consts::FRAC_1_SQRT_2) * s.gap / (cfg.p + gs_phi)
}

const BETA_RANGE_SLACK: f64 = 1e-12;

/// Rounding slack applied before the ceiling, so a fraction that is an
/// integer up to floating-point error is not bumped to the next one.
const PHI_CEIL_SLACK: f64 = 1e-9;

/// `⌈(β·GAP² − 2·GAP·c_π)/(4 + β·GAP)⌉`, clamped at 0; 0 when the gap test
/// failed.
pub fn compute_phi(s: &SpectralSummary, beta: f64, gap_test_passed: bool) -> Result<u64> {
    if !gap_test_passed {
        return Ok(0);
    }
    let (lo, hi) = beta_bounds(s)?;
    if !(beta >= lo * (1.0 - BETA_RANGE_SLACK) && beta <= hi * (1.0 + BETA_RANGE_SLACK)) {
        return Err(PtrError::BetaOutOfRange { beta, lo, hi });
    }
    let gap = s.gap;
    let frac = (beta * gap * gap - 2.0 * gap * s.c_pi) / (4.0 + beta * gap);
    Ok((frac - PHI_CEIL_SLACK).max(0.0).ceil() as u64)
}

/// `1 − δᵖ/2`.
pub fn success_probability_lower_bound(delta: f64, p: f64) -> f64 {
    1.0 - delta.powf(p) / 2.0
}

/// Smallest `p ∈ (0, 1]` whose success bound reaches `target`, i.e.
/// `δᵖ = 2(1 − target)`. Returns 1 when even `p = 1` falls short.
pub fn p_for_target(delta: f64, target: f64) -> f64 {
    let p = (1.0 / (2.0 * (1.0 - target))).ln() / (1.0 / delta).ln();
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// `δ = ln m / m`.
pub fn auto_delta(m: usize) -> Result<f64> {
    let d = (m as f64).ln() / m as f64;
    if d > 0.0 && d < 1.0 {
        Ok(d)
    } else {
        Err(PtrError::InvalidConfig(format!("cannot derive delta from m = {m}")))
    }
}

/// Release-phase noise level `σ = β·√(2 ln(2/δ))/ε₂`.
pub fn release_sigma(beta: f64, delta: f64, eps2: f64) -> f64 {
    beta * (2.0 * (2.0 / delta).ln()).sqrt() / eps2
}

/// `v + N(0, σ²I)`, before normalization.
pub fn gaussian_perturb(v: &[f64], sigma: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    fill_gaussian(sigma, rng, &mut out)?;
    out.iter_mut().zip(v).for_each(|(o, vi)| *o += vi);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PtrStatus {
    Released(Vec<f64>),
    NoResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub z: f64,
    pub f_tilde: f64,
    pub gap_test_passed: bool,
    pub gs_phi: f64,
    pub beta: Option<f64>,
    pub beta_l: Option<f64>,
    pub beta_u: Option<f64>,
    pub phi: u64,
    pub phi_hat: f64,
    pub threshold: f64,
    pub sigma_release: Option<f64>,
    pub delta0: f64,
    pub success_lb: f64,
    pub parameter_infeasible: bool,
    pub beta_out_of_range: bool,
    pub eps_total: f64,
    pub delta_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtrOutcome {
    pub status: PtrStatus,
    pub diagnostics: Diagnostics,
}

impl PtrOutcome {
    pub fn released(&self) -> Option<&[f64]> {
        match &self.status {
            PtrStatus::Released(v) => Some(v),
            PtrStatus::NoResponse => None,
        }
    }

    /// JSON view. Diagnostics depend on the private graph and are included
    /// only when `debug_unsafe` is set.
    pub fn to_json(&self, cfg: &PtrConfig, debug_unsafe: bool) -> Value {
        let mut out = json!({
            "status": if self.released().is_some() { "released" } else { "no_response" },
            "config": cfg,
            "eps_total": self.diagnostics.eps_total,
            "delta_total": self.diagnostics.delta_total,
        });
        if let Some(v) = self.released() {
            out["v"] = json!(v);
        }
        if debug_unsafe {
            out["diagnostics"] = json!(self.diagnostics);
        }
        out
    }
}

/// Runs the mechanism on `g` with its precomputed spectral summary `s`.
///
/// Draw order on `rng`: one TBL draw, one Laplace draw, then `n` Gaussian
/// draws only when releasing.
pub fn run_ptr(g: &Graph, s: &SpectralSummary, cfg: &PtrConfig, rng: &mut RngStream) -> Result<PtrOutcome> {
    cfg.validate()?;
    if g.n() != s.n() {
        return Err(PtrError::DimensionMismatch {
            summary: s.n(),
            graph: g.n(),
        });
    }

    let tbl = TblParams::for_budget(cfg.mu, cfg.eps0)?;
    let z = sample_tbl(&tbl, rng);
    let f_tilde = (s.gap - GAP_THRESHOLD) - z;
    let gap_test_passed = f_tilde >= 0.0;

    let gs = gs_phi(f_tilde, cfg.mu);
    let bounds = beta_bounds(s).ok();
    let (beta, parameter_infeasible) = match compute_beta(s, cfg, gs) {
        Ok(b) => (Some(b), false),
        Err(PtrError::ParameterInfeasible { .. }) => (None, true),
        Err(e) => return Err(e),
    };
    let (phi, beta_out_of_range) = match beta {
        Some(b) => match compute_phi(s, b, gap_test_passed) {
            Ok(phi) => (phi, false),
            Err(PtrError::BetaOutOfRange { .. }) => (0, true),
            Err(e) => return Err(e),
        },
        None => (0, false),
    };

    let phi_hat = phi as f64 + sample_laplace(gs / cfg.eps1, rng)?;
    let threshold = gs * (1.0 / cfg.delta).ln() / cfg.eps1;
    let sigma_release = beta.map(|b| release_sigma(b, cfg.delta, cfg.eps2));

    let status = match sigma_release {
        Some(sigma) if phi_hat >= threshold && !beta_out_of_range => {
            let mut w = gaussian_perturb(&s.v, sigma, rng)?;
            normalize(&mut w);
            PtrStatus::Released(w)
        }
        _ => PtrStatus::NoResponse,
    };

    Ok(PtrOutcome {
        status,
        diagnostics: Diagnostics {
            z,
            f_tilde,
            gap_test_passed,
            gs_phi: gs,
            beta,
            beta_l: bounds.map(|b| b.0),
            beta_u: bounds.map(|b| b.1),
            phi,
            phi_hat,
            threshold,
            sigma_release,
            delta0: cfg.delta0(),
            success_lb: success_probability_lower_bound(cfg.delta, cfg.p),
            parameter_infeasible,
            beta_out_of_range,
            eps_total: cfg.eps_total(),
            delta_total: cfg.delta_total(),
        },
    })
}
