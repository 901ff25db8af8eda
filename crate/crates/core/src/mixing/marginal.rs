use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{chain_stream, init_stream, mala_step, ChainState, StartSampler, StepSizePolicy};
use crate::rng::SeedKey;
use crate::stats::{mean, normal_interval_mass};
use crate::targets::TargetDensity;

pub const MIN_REPLICAS: usize = 10_000;
pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_HALF_WIDTH_SDS: f64 = 8.0;
pub const NOISE_BATCHES: u64 = 8;

/// Uniform bins over `[center − w·sd, center + w·sd]` plus one overflow
/// cell on each side. Cell 0 is below the range, cell `bins + 1` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalBinning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl MarginalBinning {
    pub fn for_sd(sd: f64) -> Self {
        Self {
            lo: -DEFAULT_HALF_WIDTH_SDS * sd,
            hi: DEFAULT_HALF_WIDTH_SDS * sd,
            bins: DEFAULT_BINS,
        }
    }

    pub fn cells(&self) -> usize {
        self.bins + 2
    }

    pub fn cell(&self, x: f64) -> usize {
        if x < self.lo {
            0
        } else if x >= self.hi {
            self.bins + 1
        } else {
            let w = (self.hi - self.lo) / self.bins as f64;
            1 + (((x - self.lo) / w) as usize).min(self.bins - 1)
        }
    }

    /// Cell masses of `N(0, sd²)`.
    pub fn gaussian_masses(&self, sd: f64) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.bins as f64;
        let mut m = Vec::with_capacity(self.cells());
        m.push(normal_interval_mass(f64::NEG_INFINITY, self.lo, 0.0, sd));
        for i in 0..self.bins {
            let a = self.lo + i as f64 * w;
            m.push(normal_interval_mass(a, a + w, 0.0, sd));
        }
        m.push(normal_interval_mass(self.hi, f64::INFINITY, 0.0, sd));
        m
    }
}

/// `½ Σ |empirical − reference|` over the cells.
pub fn tv_from_counts(counts: &[u64], total: u64, reference: &[f64]) -> f64 {
    let n = total as f64;
    0.5 * crate::stats::compensated_sum(counts.iter().zip(reference).map(|(&c, r)| (c as f64 / n - r).abs()))
}

/// Histogram TV between the samples of one coordinate and its exact
/// Gaussian marginal, under the default binning. A marginal TV never
/// exceeds the full TV.
pub fn tv_marginal(samples: &[f64], target: &TargetDensity, coord: usize) -> Result<f64> {
    let sd = marginal_sd(target, coord)?;
    tv_marginal_with(samples, sd, &MarginalBinning::for_sd(sd))
}

pub fn tv_marginal_with(samples: &[f64], sd: f64, binning: &MarginalBinning) -> Result<f64> {
    if samples.len() < MIN_REPLICAS {
        return Err(Error::TooFewReplicas {
            got: samples.len(),
            need: MIN_REPLICAS,
        });
    }
    let mut counts = vec![0u64; binning.cells()];
    for &x in samples {
        counts[binning.cell(x)] += 1;
    }
    Ok(tv_from_counts(&counts, samples.len() as u64, &binning.gaussian_masses(sd)))
}

fn marginal_sd(target: &TargetDensity, coord: usize) -> Result<f64> {
    target.marginal_sd(coord).ok_or_else(|| {
        Error::UnsupportedTarget(format!(
            "{} has no closed-form marginal for coordinate {coord}",
            target.label()
        ))
    })
}

/// Coordinate with the widest marginal (the slowest direction for MALA on
/// a diagonal Gaussian); ties go to the lowest index.
pub fn worst_coordinate(target: &TargetDensity) -> Result<usize> {
    let mut best = (0, marginal_sd(target, 0)?);
    for i in 1..target.dim() {
        let sd = marginal_sd(target, i)?;
        if sd > best.1 {
            best = (i, sd);
        }
    }
    Ok(best.0)
}

/// `0, 1, …` growing by at least one and by a factor `ratio`, up to `n_max`.
pub fn geometric_grid(n_max: u64, ratio: f64) -> Vec<u64> {
    let mut g = vec![0];
    let mut n = 1u64;
    while n <= n_max {
        g.push(n);
        n = (n + 1).max((n as f64 * ratio).ceil() as u64);
    }
    g
}

/// Marginal TV to the target over an iteration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TVCurve {
    pub iterations: Vec<u64>,
    pub tv: Vec<f64>,
    pub coord: usize,
    pub marginal_sd: f64,
    pub binning: MarginalBinning,
    pub n_replicas: usize,
    /// Mean TV of exact-sampler replicas through the same estimator.
    pub noise_floor: f64,
}

impl TVCurve {
    /// First recorded iteration with TV ≤ `eps` + noise floor.
    pub fn tau_hat(&self, eps: f64) -> Option<u64> {
        let thr = eps + self.noise_floor;
        self.iterations.iter().zip(&self.tv).find(|(_, &t)| t <= thr).map(|(&n, _)| n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingMeasurement {
    pub curve: TVCurve,
    pub tau_hat: Option<u64>,
    pub eps: f64,
    pub acceptance_rate: f64,
    /// Cell index of the tracked coordinate per grid point and replica,
    /// kept for resampling replicas.
    pub cells: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct MixingOptions {
    pub eps: f64,
    pub n_replicas: usize,
    pub n_max: u64,
    pub coord: Option<usize>,
    pub grid_ratio: f64,
    /// Stop once the run reaches `overshoot · tau_hat`; `None` runs to `n_max`.
    pub overshoot: Option<f64>,
    pub seed: u64,
}

impl MixingOptions {
    pub fn new(eps: f64, n_replicas: usize, n_max: u64, seed: u64) -> Self {
        Self {
            eps,
            n_replicas,
            n_max,
            coord: None,
            grid_ratio: 1.05,
            overshoot: None,
            seed,
        }
    }
}

/// Empirical noise floor of [`tv_marginal`] for `n` exact draws.
pub fn noise_floor(target: &TargetDensity, coord: usize, n: usize, seed: u64) -> Result<f64> {
    let sd = marginal_sd(target, coord)?;
    let binning = MarginalBinning::for_sd(sd);
    let key = SeedKey::new(seed).derive_str("noise-floor");
    let tvs = (0..NOISE_BATCHES)
        .map(|b| {
            let stream = key.stream(b);
            let xs: Vec<f64> = (0..n as u64)
                .into_par_iter()
                .map(|i| target.sample_exact(&mut stream.at(i)).expect("checked")[coord])
                .collect();
            tv_marginal_with(&xs, sd, &binning)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&tvs))
}

/// Runs `n_replicas` lazy MALA chains from `warm` and records the marginal
/// TV of one coordinate on a geometric iteration grid.
///
/// Replica `r` is exactly the chain `run_chain` produces with
/// `chain_id = r`, so results do not depend on scheduling.
pub fn mixing_time_measure(
    target: &TargetDensity,
    warm: &dyn StartSampler,
    policy: &StepSizePolicy,
    opts: &MixingOptions,
) -> Result<MixingMeasurement> {
    if opts.n_replicas < MIN_REPLICAS {
        return Err(Error::TooFewReplicas {
            got: opts.n_replicas,
            need: MIN_REPLICAS,
        });
    }
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {}", opts.eps)));
    }
    if !(opts.grid_ratio > 1.0) {
        return Err(Error::Precondition("grid ratio must exceed 1".into()));
    }
    if warm.dim() != target.dim() {
        return Err(Error::InvalidInput("warm start dimension mismatch".into()));
    }
    let coord = match opts.coord {
        Some(c) if c < target.dim() => c,
        Some(c) => return Err(Error::InvalidInput(format!("coordinate {c} out of range"))),
        None => worst_coordinate(target)?,
    };
    let sd = marginal_sd(target, coord)?;
    let binning = MarginalBinning::for_sd(sd);
    let reference = binning.gaussian_masses(sd);
    let floor = noise_floor(target, coord, opts.n_replicas, opts.seed)?;

    let init = init_stream(opts.seed);
    let mut states: Vec<ChainState> = (0..opts.n_replicas as u64)
        .into_par_iter()
        .map(|r| {
            let q0 = warm.draw(&mut init.at(r));
            ChainState::new(target, q0, chain_stream(opts.seed, r))
        })
        .collect::<Result<_>>()?;

    let grid = geometric_grid(opts.n_max, opts.grid_ratio);
    let mut iterations = Vec::new();
    let mut tv = Vec::new();
    let mut cells = Vec::new();
    let mut tau = None;
    for &n in &grid {
        states.par_iter_mut().for_each(|s| {
            while s.iteration() < n {
                mala_step(target, s, policy, true);
            }
        });
        let row: Vec<u8> = states.iter().map(|s| binning.cell(s.q()[coord]) as u8).collect();
        let mut counts = vec![0u64; binning.cells()];
        for &c in &row {
            counts[c as usize] += 1;
        }
        let t = tv_from_counts(&counts, opts.n_replicas as u64, &reference);
        iterations.push(n);
        tv.push(t);
        cells.push(row);
        if tau.is_none() && t <= opts.eps + floor {
            tau = Some(n);
        }
        if let (Some(k), Some(f)) = (tau, opts.overshoot) {
            if n as f64 >= f * k as f64 {
                break;
            }
        }
    }
    let stats = states
        .iter()
        .fold(crate::kernel::ChainStats::default(), |acc, s| acc.merge(s.stats()));
    Ok(MixingMeasurement {
        curve: TVCurve {
            iterations,
            tv,
            coord,
            marginal_sd: sd,
            binning,
            n_replicas: opts.n_replicas,
            noise_floor: floor,
        },
        tau_hat: tau,
        eps: opts.eps,
        acceptance_rate: stats.acceptance_rate(),
        cells,
    })
}
