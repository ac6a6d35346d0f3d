//! Seeded noise for the release mechanisms.
//!
//! Every sampler is an inverse CDF applied to one uniform draw from the open
//! interval `(0, 1)`. There is no rejection step, so one `(seed, stream)` pair
//! always consumes the same number of uniforms and yields the same sequence.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid truncated Laplace parameters: mu={mu}, lambda={lambda}")]
    InvalidTbl { mu: f64, lambda: f64 },
}

pub type Result<T> = std::result::Result<T, NoiseError>;

/// An independent uniform stream identified by `(seed, stream)`.
///
/// Parallel trials use `stream = trial index` under a shared seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform on the open interval `(0, 1)`: a 53-bit grid offset by half a step.
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.inner.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

fn check_scale(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(NoiseError::NonPositiveScale(s))
    }
}

/// Quantile of `Lap(0, b)` at `u ∈ (0, 1)`.
pub fn laplace_quantile(u: f64, b: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 {
        return 0.0;
    }
    -b * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

pub fn sample_laplace(b: f64, rng: &mut RngStream) -> Result<f64> {
    check_scale(b)?;
    Ok(laplace_quantile(rng.uniform_open(), b))
}

/// Standard normal quantile.
///
/// Acklam's rational approximation followed by one Halley correction step
/// against `erfc`; the result is accurate to a few ulps over `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    debug_assert!(p > 0.0 && p < 1.0);
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn sample_gaussian(sigma: f64, rng: &mut RngStream) -> Result<f64> {
    check_scale(sigma)?;
    Ok(sigma * normal_quantile(rng.uniform_open()))
}

/// Fills `out` with i.i.d. `N(0, sigma²)` draws. `sigma = 0` writes zeros
/// without consuming the stream.
pub fn fill_gaussian(sigma: f64, rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
    if sigma == 0.0 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return Ok(());
    }
    check_scale(sigma)?;
    for x in out.iter_mut() {
        *x = sigma * normal_quantile(rng.uniform_open());
    }
    Ok(())
}

/// Laplace(`mu`, `lambda`) truncated to `[0, r]` with `r = 2·mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TblParams {
    pub mu: f64,
    pub lambda: f64,
    pub r: f64,
}

impl TblParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && lambda > 0.0 && lambda.is_finite()) {
            return Err(NoiseError::InvalidTbl { mu, lambda });
        }
        Ok(Self {
            mu,
            lambda,
            r: 2.0 * mu,
        })
    }

    /// Parameters for privatizing a sensitivity-1 statistic at budget `eps0`.
    pub fn for_budget(mu: f64, eps0: f64) -> Result<Self> {
        check_scale(eps0)?;
        Self::new(mu, 1.0 / eps0)
    }

    /// CDF of the untruncated Laplace(`mu`, `lambda`).
    fn base_cdf(&self, x: f64) -> f64 {
        if x <= self.mu {
            0.5 * ((x - self.mu) / self.lambda).exp()
        } else {
            1.0 - 0.5 * (-(x - self.mu) / self.lambda).exp()
        }
    }

    fn base_quantile(&self, u: f64) -> f64 {
        if u <= 0.5 {
            self.mu + self.lambda * (2.0 * u).ln()
        } else {
            self.mu - self.lambda * (2.0 * (1.0 - u)).ln()
        }
    }

    fn f0(&self) -> f64 {
        0.5 * (-self.mu / self.lambda).exp()
    }

    fn fr(&self) -> f64 {
        1.0 - 0.5 * (-(self.r - self.mu) / self.lambda).exp()
    }

    /// CDF of the truncated distribution.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.r {
            return 1.0;
        }
        (self.base_cdf(x) - self.f0()) / (self.fr() - self.f0())
    }

    /// Quantile of the truncated distribution at `u ∈ (0, 1)`.
    ///
    /// Maps `u` into the untruncated CDF range `[F(0), F(r)]` and inverts
    /// there; the branch is taken on the mapped value.
    pub fn quantile(&self, u: f64) -> f64 {
        let (f0, fr) = (self.f0(), self.fr());
        let mapped = f0 + u * (fr - f0);
        self.base_quantile(mapped).clamp(0.0, self.r)
    }
}

pub fn sample_tbl(p: &TblParams, rng: &mut RngStream) -> f64 {
    p.quantile(rng.uniform_open())
}

/// Smallest `δ₀` for which truncated Laplace noise with centre `mu`, scale
/// `1/eps0` and support `[0, 2·mu]` is `(eps0, δ₀)`-DP on a sensitivity-1
/// statistic: `½·e^{−(μ−1)ε₀}·(1 − e^{−με₀})`.
///
/// Meaningful for `mu ≥ 1`.
pub fn tbl_delta0(mu: f64, eps0: f64) -> f64 {
    0.5 * (-(mu - 1.0) * eps0).exp() * (1.0 - (-mu * eps0).exp())
}
