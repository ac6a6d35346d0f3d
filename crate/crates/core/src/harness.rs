//! Experiment driver behind the command-line tool: statistics, Monte-Carlo
//! sweeps, timing and success-rate reports.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, VertexSubset};
use crate::linalg::normalize;
use crate::noise::{fill_gaussian, NoiseError, RngStream};
use crate::ppm::{run_ppm, Iterations, PpmConfig, PpmError};
use crate::ptr::{self, auto_delta, p_for_target, run_ptr, PtrConfig, PtrError, DEFAULT_MU};
use crate::spectral::{local_sensitivity_bound, smooth_sensitivity_diagnostic, SpectralSummary};
use crate::subset::{dks_extract, dks_upper_bound, jaccard, top_k_abs_subset, SubsetError};

/// Success probability targeted by the automatic choice of `p`.
pub const AUTO_P_TARGET: f64 = 0.95;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Ptr(#[from] PtrError),

    #[error(transparent)]
    Ppm(#[from] PpmError),

    #[error(transparent)]
    Subset(#[from] SubsetError),

    #[error(transparent)]
    Noise(#[from] NoiseError),

    #[error("failed to write report: {0}")]
    Io(#[from] std::io::Error),

    #[error("failed to encode report: {0}")]
    Csv(#[from] csv::Error),

    #[error("failed to encode report: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Ptr,
    Ppm,
    Nonprivate,
    GaussGlobal,
}

impl FromStr for Mechanism {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ptr" => Ok(Self::Ptr),
            "ppm" => Ok(Self::Ppm),
            "nonprivate" => Ok(Self::Nonprivate),
            "gauss_global" => Ok(Self::GaussGlobal),
            _ => Err(HarnessError::InvalidSpec(format!("unknown mechanism {s:?}"))),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ptr => "ptr",
            Self::Ppm => "ppm",
            Self::Nonprivate => "nonprivate",
            Self::GaussGlobal => "gauss_global",
        })
    }
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_k_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::InvalidSpec(format!("bad k grid {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step == 0 || start > stop {
            return Err(bad());
        }
        (start..=stop).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

/// A value that is either given or derived from the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Auto,
    Value(f64),
}

impl FromStr for Choice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Value)
            .map_err(|_| HarnessError::InvalidSpec(format!("expected a number or 'auto', got {s:?}")))
    }
}

/// Privacy parameters as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Budget for the PPM and global-sensitivity Gaussian baselines.
    pub eps: f64,
    pub delta: Choice,
    pub p: Choice,
    pub mu: f64,
    pub iterations: Iterations,
}

impl Default for PrivacyParams {
    fn default() -> Self {
        Self {
            eps0: 1.0,
            eps1: 3.0,
            eps2: 3.0,
            eps: 3.0,
            delta: Choice::Auto,
            p: Choice::Auto,
            mu: DEFAULT_MU,
            iterations: Iterations::Auto,
        }
    }
}

/// Parameters with every `auto` resolved against a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub ptr: PtrConfig,
    pub ppm: PpmConfig,
    pub eps: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn resolve(&self, m: usize) -> Result<ResolvedParams> {
        let delta = match self.delta {
            Choice::Auto => auto_delta(m)?,
            Choice::Value(d) => d,
        };
        if !(delta > 0.0 && delta < 1.0) {
            return Err(HarnessError::InvalidSpec(format!("delta must lie in (0, 1), got {delta}")));
        }
        let p = match self.p {
            Choice::Auto => p_for_target(delta, AUTO_P_TARGET),
            Choice::Value(p) => p,
        };
        let ptr = PtrConfig {
            eps0: self.eps0,
            eps1: self.eps1,
            eps2: self.eps2,
            delta,
            p,
            mu: self.mu,
        };
        ptr.validate()?;
        let ppm = PpmConfig {
            eps: self.eps,
            delta,
            iterations: self.iterations,
        };
        ppm.validate()?;
        Ok(ResolvedParams {
            ptr,
            ppm,
            eps: self.eps,
            delta,
        })
    }
}

/// Noise level of the Gaussian mechanism calibrated to the global ℓ2
/// sensitivity `√2` of the principal eigenvector.
pub fn gauss_global_sigma(eps: f64, delta: f64) -> f64 {
    (2.0 * 2.0 * (2.0 / delta).ln()).sqrt() / eps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub graph_name: String,
    pub mechanism: Mechanism,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub params: PrivacyParams,
}

impl ExperimentSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.k_grid.is_empty() {
            return Err(HarnessError::InvalidSpec("k grid is empty".into()));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k < 2 || k > n) {
            return Err(HarnessError::InvalidSpec(format!("k = {k} outside [2, {n}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub n: usize,
    pub m: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    pub c_pi: f64,
    pub components: usize,
    /// `None` when the local sensitivity bound does not apply.
    pub ls_bound: Option<f64>,
    /// `√2 / LS`.
    pub gs_ls_ratio: Option<f64>,
    pub smooth_bound: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub lambda2_converged: bool,
}

/// Spectral statistics. The smooth-sensitivity column uses the total PTR
/// budget `(eps_total, delta)`.
pub fn cmd_stats(g: &Graph, s: &SpectralSummary, eps_total: f64, delta: f64) -> StatsReport {
    let ls = local_sensitivity_bound(s);
    StatsReport {
        n: g.n(),
        m: g.m(),
        lambda1: s.lambda1,
        lambda2: s.lambda2,
        gap: s.gap,
        c_pi: s.c_pi,
        components: s.components,
        ls_bound: ls,
        gs_ls_ratio: ls.map(|l| std::f64::consts::SQRT_2 / l),
        smooth_bound: smooth_sensitivity_diagnostic(s, g.n(), eps_total, delta),
        iterations: s.iterations_used,
        residual: s.residual,
        lambda2_converged: s.lambda2_converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Released,
    NoResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub graph: String,
    pub mechanism: Mechanism,
    pub k: usize,
    pub trial: usize,
    pub status: RowStatus,
    pub density: Option<f64>,
    pub jaccard: Option<f64>,
    pub time_ms: Option<f64>,
    pub eps_total: Option<f64>,
    pub delta_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub k: usize,
    pub trials: usize,
    pub released: usize,
    pub no_response: usize,
    pub density_mean: Option<f64>,
    pub density_std: Option<f64>,
    pub jaccard_mean: Option<f64>,
    pub jaccard_std: Option<f64>,
    /// Non-private density of the top-`k` selection on the true eigenvector.
    pub nonprivate_density: f64,
    /// Non-private spectral upper bound on the best `k`-subset density.
    pub nonprivate_upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub resolved: ResolvedParams,
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

struct Privatized {
    v: Option<Vec<f64>>,
    elapsed_ms: f64,
}

fn privatize(
    g: &Graph,
    s: &SpectralSummary,
    mechanism: Mechanism,
    resolved: &ResolvedParams,
    rng: &mut RngStream,
) -> Result<Privatized> {
    let start = Instant::now();
    let v = match mechanism {
        Mechanism::Ptr => run_ptr(g, s, &resolved.ptr, rng)?.released().map(<[f64]>::to_vec),
        Mechanism::Ppm => Some(run_ppm(g, &resolved.ppm, Some(s), rng)?.v),
        Mechanism::Nonprivate => Some(s.v.clone()),
        Mechanism::GaussGlobal => Some(gauss_global_release(&s.v, resolved.eps, resolved.delta, rng)?),
    };
    Ok(Privatized {
        v,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn budget(mechanism: Mechanism, r: &ResolvedParams) -> (Option<f64>, Option<f64>) {
    match mechanism {
        Mechanism::Ptr => (Some(r.ptr.eps_total()), Some(r.ptr.delta_total())),
        Mechanism::Ppm | Mechanism::GaussGlobal => (Some(r.eps), Some(r.delta)),
        Mechanism::Nonprivate => (None, None),
    }
}

/// Runs `spec.trials` independent privatizations in parallel (trial `i` uses
/// stream `i` of `spec.seed`) and evaluates every `k` in the grid on each.
/// Rows come back sorted by `(k, trial)`.
pub fn cmd_run(g: &Graph, s: &SpectralSummary, spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate(g.n())?;
    let resolved = spec.params.resolve(g.m())?;
    let reference: Vec<VertexSubset> = spec
        .k_grid
        .iter()
        .map(|&k| top_k_abs_subset(&s.v, k).map(|r| r.subset))
        .collect::<std::result::Result<_, _>>()?;
    let (eps_total, delta_total) = budget(spec.mechanism, &resolved);

    let per_trial: Vec<Vec<TrialRow>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<TrialRow>> {
            let mut rng = RngStream::new(spec.seed, trial as u64);
            let out = privatize(g, s, spec.mechanism, &resolved, &mut rng)?;
            spec.k_grid
                .iter()
                .zip(&reference)
                .map(|(&k, reference)| {
                    let (status, density, jac) = match &out.v {
                        Some(v) => {
                            let r = dks_extract(g, v, k)?;
                            (RowStatus::Released, r.density, Some(jaccard(&r.subset, reference)))
                        }
                        None => (RowStatus::NoResponse, None, None),
                    };
                    Ok(TrialRow {
                        graph: spec.graph_name.clone(),
                        mechanism: spec.mechanism,
                        k,
                        trial,
                        status,
                        density,
                        jaccard: jac,
                        time_ms: Some(out.elapsed_ms),
                        eps_total,
                        delta_total,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.k, r.trial));

    let aggregates = spec
        .k_grid
        .iter()
        .zip(&reference)
        .map(|(&k, reference)| -> Result<Aggregate> {
            let at_k: Vec<&TrialRow> = rows.iter().filter(|r| r.k == k).collect();
            let densities: Vec<f64> = at_k.iter().filter_map(|r| r.density).collect();
            let jaccards: Vec<f64> = at_k.iter().filter_map(|r| r.jaccard).collect();
            let released = at_k.iter().filter(|r| r.status == RowStatus::Released).count();
            let d = mean_std(&densities);
            let j = mean_std(&jaccards);
            Ok(Aggregate {
                k,
                trials: at_k.len(),
                released,
                no_response: at_k.len() - released,
                density_mean: d.map(|x| x.0),
                density_std: d.map(|x| x.1),
                jaccard_mean: j.map(|x| x.0),
                jaccard_std: j.map(|x| x.1),
                nonprivate_density: crate::graph::edge_density(g, reference).map_err(SubsetError::from)?,
                nonprivate_upper_bound: dks_upper_bound(s, g, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RunReport {
        spec: spec.clone(),
        resolved,
        rows,
        aggregates,
    })
}

impl RunReport {
    /// Per-trial rows as CSV with columns
    /// `graph,mechanism,k,trial,status,density,jaccard,time_ms,eps_total,delta_total`.
    /// With `timing = false` the `time_ms` column is left empty so that
    /// repeated runs produce identical bytes.
    pub fn write_csv<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            if timing {
                w.serialize(row)?;
            } else {
                w.serialize(TrialRow {
                    time_ms: None,
                    ..row.clone()
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W, timing: bool) -> Result<()> {
        if timing {
            serde_json::to_writer_pretty(out, self)?;
        } else {
            let mut copy = self.clone();
            copy.rows.iter_mut().for_each(|r| r.time_ms = None);
            serde_json::to_writer_pretty(out, &copy)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub graph: String,
    pub trials: usize,
    pub ppm_iterations: usize,
    pub ptr_median_ms: f64,
    pub ppm_median_ms: f64,
    /// `ppm_median_ms / ptr_median_ms`.
    pub speedup: f64,
    pub ptr_released: usize,
    pub ptr_times_ms: Vec<f64>,
    pub ppm_times_ms: Vec<f64>,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times the privatization step only: PTR from a precomputed summary, and
/// the full PPM loop. Trials run sequentially.
pub fn cmd_bench(g: &Graph, s: &SpectralSummary, spec: &ExperimentSpec) -> Result<BenchReport> {
    if spec.trials == 0 {
        return Err(HarnessError::InvalidSpec("trials must be at least 1".into()));
    }
    let resolved = spec.params.resolve(g.m())?;
    let ppm_iterations = resolved.ppm.resolve_iterations(Some(s), g.n())?;
    let mut ptr_times = Vec::with_capacity(spec.trials);
    let mut ppm_times = Vec::with_capacity(spec.trials);
    let mut ptr_released = 0;
    for trial in 0..spec.trials {
        let mut rng = RngStream::new(spec.seed, trial as u64);
        let out = privatize(g, s, Mechanism::Ptr, &resolved, &mut rng)?;
        ptr_released += out.v.is_some() as usize;
        ptr_times.push(out.elapsed_ms);
        let mut rng = RngStream::new(spec.seed, (spec.trials + trial) as u64);
        ppm_times.push(privatize(g, s, Mechanism::Ppm, &resolved, &mut rng)?.elapsed_ms);
    }
    let (ptr_median_ms, ppm_median_ms) = (median(&ptr_times), median(&ppm_times));
    Ok(BenchReport {
        graph: spec.graph_name.clone(),
        trials: spec.trials,
        ppm_iterations,
        ptr_median_ms,
        ppm_median_ms,
        speedup: ppm_median_ms / ptr_median_ms,
        ptr_released,
        ptr_times_ms: ptr_times,
        ppm_times_ms: ppm_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub graph: String,
    pub trials: usize,
    pub released: usize,
    pub rate: f64,
    /// Binomial standard error `√(r(1−r)/N)`.
    pub std_error: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `1 − δᵖ/2`.
    pub lower_bound: f64,
    pub config: PtrConfig,
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let (k, n) = (k as f64, n as f64);
    let r = k / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (r + Z * Z / (2.0 * n)) / denom;
    let half = Z * (r * (1.0 - r) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Empirical PTR release rate over `spec.trials` runs.
pub fn cmd_mc_success(g: &Graph, s: &SpectralSummary, spec: &ExperimentSpec) -> Result<SuccessReport> {
    if spec.trials == 0 {
        return Err(HarnessError::InvalidSpec("trials must be at least 1".into()));
    }
    if spec.mechanism != Mechanism::Ptr {
        return Err(HarnessError::InvalidSpec("success rates are defined for ptr only".into()));
    }
    let cfg = spec.params.resolve(g.m())?.ptr;
    let released = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(spec.seed, trial as u64);
            run_ptr(g, s, &cfg, &mut rng).map(|o| o.released().is_some() as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let rate = released as f64 / spec.trials as f64;
    let (ci_low, ci_high) = wilson_interval(released, spec.trials);
    Ok(SuccessReport {
        graph: spec.graph_name.clone(),
        trials: spec.trials,
        released,
        rate,
        std_error: (rate * (1.0 - rate) / spec.trials as f64).sqrt(),
        ci_low,
        ci_high,
        lower_bound: ptr::success_probability_lower_bound(cfg.delta, cfg.p),
        config: cfg,
    })
}

/// `v + N(0, σ²I)`, normalized, with `σ` from [`gauss_global_sigma`].
pub fn gauss_global_release(v: &[f64], eps: f64, delta: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    fill_gaussian(gauss_global_sigma(eps, delta), rng, &mut out)?;
    out.iter_mut().zip(v).for_each(|(o, vi)| *o += vi);
    normalize(&mut out);
    Ok(out)
}

/// Writes a single-record report as a two-line CSV. Nested objects are
/// flattened with `parent.child` headers and arrays are omitted.
pub fn write_record_csv<T: Serialize, W: Write>(record: &T, out: W) -> Result<()> {
    fn flatten(prefix: &str, v: &serde_json::Value, cols: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    flatten(&key, child, cols);
                }
            }
            serde_json::Value::Array(_) => {}
            serde_json::Value::Null => cols.push((prefix.to_string(), String::new())),
            serde_json::Value::String(s) => cols.push((prefix.to_string(), s.clone())),
            other => cols.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut cols = Vec::new();
    flatten("", &serde_json::to_value(record)?, &mut cols);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cols.iter().map(|c| c.0.as_str()))?;
    w.write_record(cols.iter().map(|c| c.1.as_str()))?;
    w.flush()?;
    Ok(())
}
