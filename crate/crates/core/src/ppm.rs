//! Private power method baseline.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::linalg::{norm_inf, normalize};
use crate::noise::{fill_gaussian, NoiseError, RngStream};
use crate::spectral::SpectralSummary;

/// Upper limit on automatically chosen iteration counts.
pub const MAX_AUTO_ITERATIONS: usize = 1000;

const MAX_RETRIES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum PpmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("automatic iteration count needs a spectral summary")]
    MissingSpectrum,

    #[error("iterate vanished after {0} retries")]
    Degenerate(usize),

    #[error(transparent)]
    Noise(#[from] NoiseError),
}

pub type Result<T> = std::result::Result<T, PpmError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Iterations {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PpmConfig {
    pub eps: f64,
    pub delta: f64,
    pub iterations: Iterations,
}

impl PpmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(PpmError::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PpmError::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.iterations == Iterations::Fixed(0) {
            return Err(PpmError::InvalidConfig("iteration count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve_iterations(&self, s: Option<&SpectralSummary>, n: usize) -> Result<usize> {
        match self.iterations {
            Iterations::Fixed(l) => Ok(l),
            Iterations::Auto => s.map(|s| auto_iterations(s, n)).ok_or(PpmError::MissingSpectrum),
        }
    }
}

/// `ε⁻¹·√(4L·ln(1/δ))`.
pub fn ppm_sigma(eps: f64, delta: f64, iterations: usize) -> f64 {
    (4.0 * iterations as f64 * (1.0 / delta).ln()).sqrt() / eps
}

/// `round(λ₁·ln n / GAP)`, at least 1 and at most [`MAX_AUTO_ITERATIONS`].
pub fn auto_iterations(s: &SpectralSummary, n: usize) -> usize {
    let l = s.lambda1.abs() * (n as f64).ln() / s.gap;
    if l.is_finite() {
        (l.round() as usize).clamp(1, MAX_AUTO_ITERATIONS)
    } else {
        MAX_AUTO_ITERATIONS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpmOutcome {
    pub v: Vec<f64>,
    pub iterations: usize,
    pub sigma: f64,
}

/// Runs the private power method. `s` is only consulted for
/// [`Iterations::Auto`].
pub fn run_ppm(g: &Graph, cfg: &PpmConfig, s: Option<&SpectralSummary>, rng: &mut RngStream) -> Result<PpmOutcome> {
    cfg.validate()?;
    let iterations = cfg.resolve_iterations(s, g.n())?;
    let sigma = ppm_sigma(cfg.eps, cfg.delta, iterations);
    let v = run_ppm_with_sigma(g, iterations, sigma, rng)?;
    Ok(PpmOutcome { v, iterations, sigma })
}

/// `L` rounds of `w = Av + N(0, ‖v‖∞²σ²I)`, `v = w/‖w‖₂` from a random unit
/// start. `sigma = 0` gives the plain power method.
pub fn run_ppm_with_sigma(g: &Graph, iterations: usize, sigma: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    let n = g.n();
    let mut v = vec![0.0; n];
    let mut tries = 0;
    loop {
        fill_gaussian(1.0, rng, &mut v)?;
        if normalize(&mut v) > 0.0 {
            break;
        }
        tries += 1;
        if tries > MAX_RETRIES {
            return Err(PpmError::Degenerate(MAX_RETRIES));
        }
    }

    let mut av = vec![0.0; n];
    let mut w = vec![0.0; n];
    for _ in 0..iterations {
        g.matvec(&v, &mut av);
        let scale = norm_inf(&v) * sigma;
        let mut tries = 0;
        loop {
            fill_gaussian(scale, rng, &mut w)?;
            w.iter_mut().zip(&av).for_each(|(wi, ai)| *wi += ai);
            if normalize(&mut w) > 0.0 {
                break;
            }
            tries += 1;
            if tries > MAX_RETRIES || scale == 0.0 {
                return Err(PpmError::Degenerate(tries));
            }
        }
        std::mem::swap(&mut v, &mut w);
    }
    Ok(v)
}
