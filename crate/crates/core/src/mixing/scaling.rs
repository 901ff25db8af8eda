use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{predicted_iterations, theorem1_policy, Provenance, C0};
use crate::rng::SeedKey;
use crate::stats::{ols, quantile_sorted};
use crate::targets::make_anisotropic;

use super::marginal::{mixing_time_measure, tv_from_counts, MixingMeasurement, MixingOptions};
use super::warm::WarmStart;

pub const ALLOWED_DIMS: [usize; 5] = [2, 4, 8, 16, 32];

#[derive(Debug, Clone)]
pub struct ScalingOptions {
    /// Stiff eigenvalue `L` of the `diag(L, L/d, …)` targets.
    pub l: f64,
    pub eps: f64,
    pub m_target: f64,
    pub replicas: usize,
    pub n_max: u64,
    /// Runs continue to `overshoot · tau_hat` so that resampled curves
    /// still cross the threshold.
    pub overshoot: f64,
    pub resamples: usize,
    /// `δ` used to calibrate `c₀` at the smallest dimension.
    pub calibration_delta: f64,
    pub seed: u64,
}

impl ScalingOptions {
    pub fn new(eps: f64, m_target: f64, replicas: usize, seed: u64) -> Self {
        Self {
            l: 1.0,
            eps,
            m_target,
            replicas,
            n_max: 200_000,
            overshoot: 1.5,
            resamples: 1000,
            calibration_delta: 0.05,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub dim: usize,
    pub coord: usize,
    pub eta: f64,
    pub h: f64,
    pub tau_hat: Option<u64>,
    /// Step-size-policy iteration count with `c₁ = 1`.
    pub predicted_n: f64,
    /// The same count with `Υ` replaced by `L·d`.
    pub predicted_n_naive: f64,
    pub noise_floor: f64,
    pub initial_tv: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub c0: f64,
    pub slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub predicted_slope: f64,
    pub naive_slope: f64,
    pub warnings: Vec<String>,
}

pub const SLOPE_CONFIDENCE: f64 = 0.99;
/// Resampled curves are scanned from the last grid point whose TV exceeds
/// the threshold by this much.
const BOOTSTRAP_WINDOW: f64 = 0.05;

/// Mixing time of the worst marginal on `diag(L, L/d, …, L/d)` for each
/// `d`, from a warm start with all of its warmness `M` in that marginal,
/// under the trace-aware step size with `c₀` calibrated once at the
/// smallest `d`. The log-log slope of `tau_hat` against `d` is fit by
/// least squares and bootstrapped over replicas.
pub fn scaling_experiment(dims: &[usize], opts: &ScalingOptions) -> Result<ScalingReport> {
    if dims.len() < 2 {
        return Err(Error::InvalidInput("need at least two dimensions".into()));
    }
    if let Some(d) = dims.iter().find(|d| !ALLOWED_DIMS.contains(d)) {
        return Err(Error::InvalidInput(format!(
            "dimension {d} not in {ALLOWED_DIMS:?}"
        )));
    }
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();

    let first = make_anisotropic(dims[0], opts.l)?;
    let calibrated = theorem1_policy(
        &first.profile(),
        opts.m_target,
        opts.eps,
        C0::Calibrated {
            delta: opts.calibration_delta,
        },
    )?;
    let Provenance::Theorem1(inputs) = calibrated.provenance() else {
        unreachable!("theorem1_policy always records its inputs")
    };
    let c0 = inputs.c0;

    let mut rows = Vec::new();
    let mut runs: Vec<MixingMeasurement> = Vec::new();
    let mut warnings = Vec::new();
    for &d in &dims {
        let target = make_anisotropic(d, opts.l)?;
        let profile = target.profile();
        let policy = theorem1_policy(&profile, opts.m_target, opts.eps, C0::Value(c0))?;
        let coord = super::marginal::worst_coordinate(&target)?;
        let warm = WarmStart::concentrated(&target, coord, opts.m_target)?;
        let psi = profile.psi.known().expect("catalog quadratics have a known psi");
        let mut mopts = MixingOptions::new(opts.eps, opts.replicas, opts.n_max, dim_seed(opts.seed, d));
        mopts.coord = Some(coord);
        mopts.overshoot = Some(opts.overshoot);
        let run = mixing_time_measure(&target, &warm, &policy, &mopts)?;
        if run.tau_hat.is_none() {
            warnings.push(format!("d = {d}: tau_hat not reached within {} iterations", opts.n_max));
        }
        rows.push(ScalingRow {
            dim: d,
            coord,
            eta: policy.eta(),
            h: policy.h(),
            tau_hat: run.tau_hat,
            predicted_n: predicted_iterations(opts.l, profile.upsilon, psi, opts.m_target, opts.eps, 1.0),
            predicted_n_naive: predicted_iterations(opts.l, opts.l * d as f64, psi, opts.m_target, opts.eps, 1.0),
            noise_floor: run.curve.noise_floor,
            initial_tv: run.curve.tv[0],
            acceptance_rate: run.acceptance_rate,
        });
        runs.push(run);
    }

    let log_d = |rows: &[&ScalingRow]| rows.iter().map(|r| (r.dim as f64).ln()).collect::<Vec<_>>();
    let all: Vec<&ScalingRow> = rows.iter().collect();
    let predicted_slope = ols(&log_d(&all), &all.iter().map(|r| r.predicted_n.ln()).collect::<Vec<_>>()).0;
    let naive_slope = ols(&log_d(&all), &all.iter().map(|r| r.predicted_n_naive.ln()).collect::<Vec<_>>()).0;

    let reached: Vec<usize> = (0..rows.len()).filter(|&i| matches!(rows[i].tau_hat, Some(t) if t > 0)).collect();
    let (slope, slope_ci) = if reached.len() >= 2 {
        let x: Vec<f64> = reached.iter().map(|&i| (rows[i].dim as f64).ln()).collect();
        let y: Vec<f64> = reached.iter().map(|&i| (rows[i].tau_hat.unwrap() as f64).ln()).collect();
        let slope = ols(&x, &y).0;
        let ci = bootstrap_slope(&reached.iter().map(|&i| &runs[i]).collect::<Vec<_>>(), &x, opts)?;
        (Some(slope), Some(ci))
    } else {
        warnings.push("fewer than two dimensions reached eps; no slope fitted".into());
        (None, None)
    };
    if reached.len() < rows.len() && reached.len() >= 2 {
        warnings.push(format!("slope fitted over {} of {} dimensions", reached.len(), rows.len()));
    }
    Ok(ScalingReport {
        rows,
        c0,
        slope,
        slope_ci,
        predicted_slope,
        naive_slope,
        warnings,
    })
}

fn dim_seed(seed: u64, d: usize) -> u64 {
    seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Percentile interval of the slope when the replicas of every dimension
/// are resampled with replacement.
fn bootstrap_slope(runs: &[&MixingMeasurement], log_d: &[f64], opts: &ScalingOptions) -> Result<(f64, f64)> {
    if opts.resamples == 0 {
        return Err(Error::Precondition("need at least one bootstrap resample".into()));
    }
    let stream = SeedKey::new(opts.seed).derive_str("scaling-bootstrap").stream(0);
    let mut slopes: Vec<f64> = (0..opts.resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.at(b);
            let y: Vec<f64> = runs.iter().map(|run| resampled_tau(run, &mut rng).ln()).collect();
            ols(log_d, &y).0
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - SLOPE_CONFIDENCE);
    Ok((quantile_sorted(&slopes, tail), quantile_sorted(&slopes, 1.0 - tail)))
}

fn resampled_tau<R: Rng>(run: &MixingMeasurement, rng: &mut R) -> f64 {
    let curve = &run.curve;
    let n = curve.n_replicas;
    let mut weight = vec![0u64; n];
    for _ in 0..n {
        weight[rng.random_range(0..n)] += 1;
    }
    let thr = run.eps + curve.noise_floor;
    let reference = curve.binning.gaussian_masses(curve.marginal_sd);
    let tau_idx = curve.iterations.iter().position(|&k| Some(k) == run.tau_hat).unwrap_or(0);
    let start = (0..tau_idx).rev().find(|&g| curve.tv[g] > thr + BOOTSTRAP_WINDOW).unwrap_or(0);
    let mut counts = vec![0u64; curve.binning.cells()];
    for g in start..curve.iterations.len() {
        counts.iter_mut().for_each(|c| *c = 0);
        for (cell, w) in run.cells[g].iter().zip(&weight) {
            counts[*cell as usize] += w;
        }
        if tv_from_counts(&counts, n as u64, &reference) <= thr {
            return curve.iterations[g].max(1) as f64;
        }
    }
    *curve.iterations.last().expect("nonempty grid") as f64
}
