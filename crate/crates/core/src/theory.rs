//! Numerical checks of the acceptance-rate analysis: the energy-difference
//! decomposition, the `Υ_ℓ` moment lemmas, the moment bounds on `B_η` and
//! `Δ_η`, the acceptance tail at the admissible step size, and the
//! Gaussian proposal-overlap inequality.
//!
//! Every estimator is a deterministic function of its inputs and seed.
//! Sample `i` always uses the random block `(seed, lemma, i)`, so results
//! do not depend on the size of the worker pool.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{energy_difference, lemma_max_eta, path_position, PhasePoint, StartSampler, Stationary};
use crate::quadrature::Legendre;
use crate::rng::{SeedKey, Stream};
use crate::stats::{binomial_stderr, PowerMean};
use crate::targets::{SmoothnessProfile, TargetDensity};
use crate::vecops::{dist_sq, dot, norm_sq};
use rand_distr::{Distribution, StandardNormal};

/// `Υ_ℓ = Υ + 2(ℓ − 1)L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpsilonEll {
    pub upsilon: f64,
    pub l: f64,
    pub ell: u32,
    pub value: f64,
}

pub fn upsilon_ell(profile: &SmoothnessProfile, ell: u32) -> Result<UpsilonEll> {
    if ell < 1 {
        return Err(Error::InvalidInput("ell must be at least 1".into()));
    }
    Ok(UpsilonEll {
        upsilon: profile.upsilon,
        l: profile.l,
        ell,
        value: profile.upsilon + 2.0 * (ell as f64 - 1.0) * profile.l,
    })
}

fn ups(profile: &SmoothnessProfile, ell: u32) -> f64 {
    profile.upsilon + 2.0 * (ell as f64 - 1.0) * profile.l
}

/// `Δ_η` next to its split into `B_η` and the gradient-difference term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDecomposition {
    pub delta: f64,
    pub b_eta: f64,
    pub grad_diff_term: f64,
    pub quadrature_order: usize,
    /// `|Δ_η − B_η − (η²/8)‖∇f(q_η) − ∇f(q₀)‖²|`.
    pub residual: f64,
}

pub const DEFAULT_QUADRATURE_ORDER: usize = 32;
pub const NON_POLYNOMIAL_QUADRATURE_ORDER: usize = 64;

fn check_step(eta: f64, l: f64, limit: f64, what: &str) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Precondition(format!("eta must be positive, got {eta}")));
    }
    if eta * eta * l > limit {
        return Err(Error::Precondition(format!(
            "{what} requires eta^2 L <= {limit}, got {}",
            eta * eta * l
        )));
    }
    Ok(())
}

/// Computes `B_η = v_ηᵀ [∇f(q₀); p₀]` by Gauss–Legendre quadrature of
///
/// ```text
/// v₁ = −∫₀^η t (∇f(q_t) − ∇f(q_η)) dt
/// v₂ =  ∫₀^η (∇f(q_t) − ½∇f(q₀) − ½∇f(q_η)) dt
/// ```
///
/// and compares `B_η + (η²/8)‖∇f(q_η) − ∇f(q₀)‖²` against the directly
/// evaluated `Δ_η`.
pub fn decomposition_check(
    target: &TargetDensity,
    phase: &PhasePoint,
    eta: f64,
    quadrature_order: usize,
) -> Result<EnergyDecomposition> {
    if quadrature_order < 2 {
        return Err(Error::InvalidInput(format!(
            "quadrature order must be at least 2, got {quadrature_order}"
        )));
    }
    check_step(eta, target.profile().l, 1.0, "decomposition check")?;
    let rule = Legendre::new(quadrature_order)?;
    Ok(decompose(target, phase, eta, &rule))
}

pub(crate) fn decompose(
    target: &TargetDensity,
    phase: &PhasePoint,
    eta: f64,
    rule: &Legendre,
) -> EnergyDecomposition {
    let d = target.dim();
    let (q0, p0) = (&phase.q, &phase.p);
    let g0 = target.gradient(q0);
    let q_eta = path_position(q0, p0, &g0, eta);
    let g_eta = target.gradient(&q_eta);
    let mut v1 = vec![0.0; d];
    let mut v2 = vec![0.0; d];
    for (t, w) in rule.mapped(0.0, eta) {
        let gt = target.gradient(&path_position(q0, p0, &g0, t));
        for i in 0..d {
            v1[i] -= w * t * (gt[i] - g_eta[i]);
            v2[i] += w * (gt[i] - 0.5 * g0[i] - 0.5 * g_eta[i]);
        }
    }
    let b_eta = dot(&v1, &g0) + dot(&v2, p0);
    let grad_diff_term = eta * eta / 8.0 * dist_sq(&g_eta, &g0);
    let delta = energy_difference(target, phase, eta);
    EnergyDecomposition {
        delta,
        b_eta,
        grad_diff_term,
        quadrature_order: rule.order(),
        residual: (delta - b_eta - grad_diff_term).abs(),
    }
}

/// `n` reproducible phase points: `q` from the target when it has an exact
/// sampler and from `N(0, I)` otherwise, `p ~ N(0, I)`.
pub fn random_phase_points(target: &TargetDensity, n: usize, seed: u64) -> Vec<PhasePoint> {
    let stream = SeedKey::new(seed).derive_str("phase-points").stream(0);
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.at(i);
            let q = target
                .sample_exact(&mut rng)
                .unwrap_or_else(|| gaussian_vec(&mut rng, target.dim()));
            let p = gaussian_vec(&mut rng, target.dim());
            PhasePoint { q, p }
        })
        .collect()
}

/// Which inequality a [`MomentReport`] checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    /// `[E‖∇f(q)‖^{2ℓ}]^{1/ℓ} ≤ Υ_ℓ`
    GradNorm,
    /// `[E_p (pᵀ∇²f_x p)^ℓ]^{1/ℓ} ≤ Υ_ℓ`
    QuadraticForm,
    /// `[E (p₀ᵀ∇²f_{q_t} p₀)^ℓ]^{1/ℓ} ≤ 2Υ_ℓ`
    QuadraticFormAtQt,
    /// `[E‖∇f(q_t) − ∇f(q₀)‖^{2ℓ}]^{1/ℓ} ≤ 4t²LΥ_ℓ`
    GradDiffStart,
    /// `[E‖∇f(q_t) − ∇f(q_η)‖^{2ℓ}]^{1/ℓ} ≤ 4(η−t)²LΥ_ℓ`
    GradDiffEnd,
    /// `[E B_η^ℓ]^{1/ℓ} ≤ η⁴LΥ + (11η⁴LΥ_{ℓ/2})^{1/2}`
    BEta,
    /// `[E Δ_η^ℓ]^{1/ℓ} ≤ 3η⁴LΥ_ℓ + 4(η⁴LΥ_{ℓ/2})^{1/2}`
    Delta,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::GradNorm => "grad-norm",
            Lemma::QuadraticForm => "quadratic-form",
            Lemma::QuadraticFormAtQt => "quadratic-form-at-qt",
            Lemma::GradDiffStart => "grad-diff-q0",
            Lemma::GradDiffEnd => "grad-diff-qeta",
            Lemma::BEta => "b-eta",
            Lemma::Delta => "delta",
        }
    }
}

/// One-sided moment test: passes when the lower end of the bootstrap
/// interval does not exceed the theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub lemma: Lemma,
    pub target: String,
    pub ell: u32,
    pub n_samples: usize,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub pass: bool,
}

impl MomentReport {
    /// `bound − estimate`; negative means the point estimate is above the bound.
    pub fn margin(&self) -> f64 {
        self.bound - self.estimate
    }
}

pub const MIN_MOMENT_SAMPLES: usize = 10_000;
pub const DEFAULT_RESAMPLES: usize = 1000;
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy)]
pub struct MomentOptions {
    pub n_samples: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl MomentOptions {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            resamples: DEFAULT_RESAMPLES,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_samples < MIN_MOMENT_SAMPLES {
            return Err(Error::Precondition(format!(
                "moment estimates need at least {MIN_MOMENT_SAMPLES} samples, got {}",
                self.n_samples
            )));
        }
        if self.resamples < 1 {
            return Err(Error::Precondition("need at least one bootstrap resample".into()));
        }
        Ok(())
    }

    fn streams(&self, label: &str) -> (Stream, Stream) {
        let key = SeedKey::new(self.seed).derive_str(label);
        (key.stream(0), key.stream(1))
    }
}

fn require_sampler(target: &TargetDensity) -> Result<()> {
    if target.has_exact_sampler() {
        Ok(())
    } else {
        Err(Error::UnsupportedTarget(format!(
            "{} has no exact sampler",
            target.label()
        )))
    }
}

fn gaussian_vec(rng: &mut dyn RngCore, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws `(q₀, p₀) ~ μ × N(0, I)` for sample `i`.
fn draw_phase(target: &TargetDensity, stream: Stream, i: u64) -> PhasePoint {
    let mut rng = stream.at(i);
    let q = target.sample_exact(&mut rng).expect("exact sampler checked");
    let p = gaussian_vec(&mut rng, target.dim());
    PhasePoint { q, p }
}

fn collect<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    lemma: Lemma,
    target: &TargetDensity,
    ell: u32,
    power: f64,
    magnitudes: &[f64],
    bound: f64,
    opts: &MomentOptions,
    boot: Stream,
) -> MomentReport {
    let pm = PowerMean::new(magnitudes, power);
    let estimate = pm.estimate();
    let (ci_lo, ci_hi) = pm.bootstrap_ci(opts.resamples, CONFIDENCE, boot);
    MomentReport {
        lemma,
        target: target.label().to_string(),
        ell,
        n_samples: magnitudes.len(),
        estimate,
        ci_lo,
        ci_hi,
        bound,
        pass: ci_lo <= bound,
    }
}

/// Estimate of `[E_{q~μ} ‖∇f(q)‖^{2ℓ}]^{1/ℓ}` against `Υ_ℓ`.
pub fn moment_grad_norm(target: &TargetDensity, ell: u32, opts: &MomentOptions) -> Result<MomentReport> {
    let bound = upsilon_ell(&target.profile(), ell)?.value;
    require_sampler(target)?;
    opts.check()?;
    let (draws, boot) = opts.streams("grad-norm");
    let mags = collect(opts.n_samples, |i| {
        let q = target.sample_exact(&mut draws.at(i)).expect("checked");
        norm_sq(&target.gradient(&q))
    });
    Ok(finish(Lemma::GradNorm, target, ell, ell as f64, &mags, bound, opts, boot))
}

/// Estimate of `[E_{p~N(0,I)} (pᵀ∇²f_x p)^ℓ]^{1/ℓ}` at a fixed point `x`
/// against `Υ_ℓ`.
pub fn moment_quadratic_form(
    target: &TargetDensity,
    x: &[f64],
    ell: u32,
    opts: &MomentOptions,
) -> Result<MomentReport> {
    let bound = upsilon_ell(&target.profile(), ell)?.value;
    if x.len() != target.dim() {
        return Err(Error::InvalidInput("point dimension mismatch".into()));
    }
    opts.check()?;
    let (draws, boot) = opts.streams("quadratic-form");
    let mags = collect(opts.n_samples, |i| {
        let p = gaussian_vec(&mut draws.at(i), target.dim());
        target.quadratic_form(x, &p).abs()
    });
    Ok(finish(Lemma::QuadraticForm, target, ell, ell as f64, &mags, bound, opts, boot))
}

/// Estimate of `[E (p₀ᵀ∇²f_{q_t} p₀)^ℓ]^{1/ℓ}` with `(q₀, p₀) ~ μ × N(0, I)`
/// against `2Υ_ℓ`.
pub fn moment_quadratic_form_at_qt(
    target: &TargetDensity,
    t: f64,
    ell: u32,
    opts: &MomentOptions,
) -> Result<MomentReport> {
    let profile = target.profile();
    let bound = 2.0 * upsilon_ell(&profile, ell)?.value;
    if !(t >= 0.0) || t * t * profile.l > 1.0 {
        return Err(Error::Precondition(format!(
            "need t >= 0 and t^2 L <= 1 (t = {t}, L = {})",
            profile.l
        )));
    }
    require_sampler(target)?;
    opts.check()?;
    let (draws, boot) = opts.streams("quadratic-form-at-qt");
    let mags = collect(opts.n_samples, |i| {
        let ph = draw_phase(target, draws, i);
        let g0 = target.gradient(&ph.q);
        let qt = path_position(&ph.q, &ph.p, &g0, t);
        target.quadratic_form(&qt, &ph.p).abs()
    });
    Ok(finish(Lemma::QuadraticFormAtQt, target, ell, ell as f64, &mags, bound, opts, boot))
}

/// Gradient-difference moments along the leapfrog path, against
/// `4t²LΥ_ℓ` (versus `q₀`) and `4(η − t)²LΥ_ℓ` (versus `q_η`).
pub fn moment_grad_diff(
    target: &TargetDensity,
    t: f64,
    eta: f64,
    ell: u32,
    opts: &MomentOptions,
) -> Result<(MomentReport, MomentReport)> {
    let profile = target.profile();
    let u = upsilon_ell(&profile, ell)?.value;
    check_step(eta, profile.l, 1.0, "gradient-difference lemma")?;
    if !(0.0..=eta).contains(&t) {
        return Err(Error::Precondition(format!("need 0 <= t <= eta (t = {t}, eta = {eta})")));
    }
    require_sampler(target)?;
    opts.check()?;
    let (draws, boot) = opts.streams("grad-diff");
    let pairs: Vec<(f64, f64)> = (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let ph = draw_phase(target, draws, i);
            let g0 = target.gradient(&ph.q);
            let gt = target.gradient(&path_position(&ph.q, &ph.p, &g0, t));
            let ge = target.gradient(&path_position(&ph.q, &ph.p, &g0, eta));
            (dist_sq(&gt, &g0), dist_sq(&gt, &ge))
        })
        .collect();
    let (start, end): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let boot_end = SeedKey::new(opts.seed).derive_str("grad-diff").stream(2);
    let l = profile.l;
    Ok((
        finish(Lemma::GradDiffStart, target, ell, ell as f64, &start, 4.0 * t * t * l * u, opts, boot),
        finish(
            Lemma::GradDiffEnd,
            target,
            ell,
            ell as f64,
            &end,
            4.0 * (eta - t) * (eta - t) * l * u,
            opts,
            boot_end,
        ),
    ))
}

fn check_even(ell: u32) -> Result<()> {
    if ell < 2 || ell % 2 != 0 {
        return Err(Error::InvalidInput(format!("ell must be even and >= 2, got {ell}")));
    }
    Ok(())
}

/// `η⁴LΥ + (11η⁴LΥ_{ℓ/2})^{1/2}`.
pub fn b_eta_bound(profile: &SmoothnessProfile, eta: f64, ell: u32) -> f64 {
    let e4 = eta.powi(4);
    e4 * profile.l * profile.upsilon + (11.0 * e4 * profile.l * ups(profile, ell / 2)).sqrt()
}

/// `3η⁴LΥ_ℓ + 4(η⁴LΥ_{ℓ/2})^{1/2}`.
pub fn delta_bound(profile: &SmoothnessProfile, eta: f64, ell: u32) -> f64 {
    let e4 = eta.powi(4);
    3.0 * e4 * profile.l * ups(profile, ell) + 4.0 * (e4 * profile.l * ups(profile, ell / 2)).sqrt()
}

/// Estimate of `[E B_η^ℓ]^{1/ℓ}` (even `ℓ`), `B_η` by quadrature.
pub fn moment_b_eta(
    target: &TargetDensity,
    eta: f64,
    ell: u32,
    quadrature_order: usize,
    opts: &MomentOptions,
) -> Result<MomentReport> {
    check_even(ell)?;
    let profile = target.profile();
    check_step(eta, profile.l, 0.5, "B_eta moment bound")?;
    require_sampler(target)?;
    opts.check()?;
    if quadrature_order < 2 {
        return Err(Error::InvalidInput("quadrature order must be at least 2".into()));
    }
    let rule = Legendre::new(quadrature_order)?;
    let (draws, boot) = opts.streams("b-eta");
    let mags = collect(opts.n_samples, |i| {
        decompose(target, &draw_phase(target, draws, i), eta, &rule).b_eta.abs()
    });
    let bound = b_eta_bound(&profile, eta, ell);
    Ok(finish(Lemma::BEta, target, ell, ell as f64, &mags, bound, opts, boot))
}

/// Estimate of `[E Δ_η^ℓ]^{1/ℓ}` (even `ℓ`), `Δ_η` evaluated directly.
pub fn moment_delta(target: &TargetDensity, eta: f64, ell: u32, opts: &MomentOptions) -> Result<MomentReport> {
    check_even(ell)?;
    let profile = target.profile();
    check_step(eta, profile.l, 0.5, "Delta_eta moment bound")?;
    require_sampler(target)?;
    opts.check()?;
    let (draws, boot) = opts.streams("delta");
    let mags = collect(opts.n_samples, |i| {
        energy_difference(target, &draw_phase(target, draws, i), eta).abs()
    });
    let bound = delta_bound(&profile, eta, ell);
    Ok(finish(Lemma::Delta, target, ell, ell as f64, &mags, bound, opts, boot))
}

/// Stationary diagnostics of `Δ_η`: for a volume-preserving map started
/// from `μ × N(0, I)`, `E e^{−Δ} = 1` exactly and hence `E Δ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaDiagnostics {
    pub mean_delta: f64,
    pub mean_exp_neg_delta: f64,
    pub stderr_exp_neg_delta: f64,
}

pub fn delta_diagnostics(target: &TargetDensity, eta: f64, n_samples: usize, seed: u64) -> Result<DeltaDiagnostics> {
    require_sampler(target)?;
    let draws = SeedKey::new(seed).derive_str("delta-diagnostics").stream(0);
    let deltas = collect(n_samples, |i| energy_difference(target, &draw_phase(target, draws, i), eta));
    let w: Vec<f64> = deltas.iter().map(|d| (-d).exp()).collect();
    Ok(DeltaDiagnostics {
        mean_delta: crate::stats::mean(&deltas),
        mean_exp_neg_delta: crate::stats::mean(&w),
        stderr_exp_neg_delta: (crate::stats::variance(&w) / n_samples as f64).sqrt(),
    })
}

/// Exceedance frequency of `Δ_η > ¼`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub target: String,
    pub delta: f64,
    pub eta: f64,
    pub n_samples: usize,
    pub exceedances: usize,
    pub estimate: f64,
    pub stderr: f64,
    /// `δ + 3·sqrt(δ(1 − δ)/n)`.
    pub threshold: f64,
    pub pass: bool,
}

pub const TAIL_LEVEL: f64 = 0.25;

/// Tail test at the largest step size the acceptance lemma admits for `delta`.
pub fn acceptance_tail(target: &TargetDensity, delta: f64, n_samples: usize, seed: u64) -> Result<TailReport> {
    let eta = lemma_max_eta(&target.profile(), delta).ok_or_else(|| {
        Error::Precondition("step-size condition is vacuous for L = 0; pass eta explicitly".into())
    })?;
    acceptance_tail_at(target, delta, eta, n_samples, seed)
}

/// Tail test at an explicit step size, with `q₀` drawn from the target.
pub fn acceptance_tail_at(
    target: &TargetDensity,
    delta: f64,
    eta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<TailReport> {
    let start = Stationary::new(target)?;
    acceptance_tail_from(target, &start, delta, eta, n_samples, seed)
}

/// Tail test with `q₀` drawn from an arbitrary start distribution.
pub fn acceptance_tail_from(
    target: &TargetDensity,
    start: &dyn StartSampler,
    delta: f64,
    eta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<TailReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Precondition(format!("eta must be positive, got {eta}")));
    }
    if n_samples == 0 {
        return Err(Error::Precondition("n_samples must be positive".into()));
    }
    let draws = SeedKey::new(seed).derive_str("acceptance-tail").stream(0);
    let exceed: usize = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = draws.at(i);
            let q = start.draw(&mut rng);
            let p = gaussian_vec(&mut rng, target.dim());
            usize::from(energy_difference(target, &PhasePoint { q, p }, eta) > TAIL_LEVEL)
        })
        .sum();
    let estimate = exceed as f64 / n_samples as f64;
    let stderr = binomial_stderr(delta, n_samples);
    let threshold = delta + 3.0 * stderr;
    Ok(TailReport {
        target: target.label().to_string(),
        delta,
        eta,
        n_samples,
        exceedances: exceed,
        estimate,
        stderr,
        threshold,
        pass: estimate <= threshold,
    })
}

/// Exact TV distance between the MALA proposals at `x` and `y` and the
/// bound `min{1, 2‖x − y‖/η}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapCheck {
    pub distance: f64,
    pub eta: f64,
    pub tv_exact: f64,
    pub tv_bound: f64,
    pub holds: bool,
}

/// The proposals are `N(z − h∇f(z), 2h I)` with a shared covariance, so
/// their TV distance is `2Φ(‖m_x − m_y‖ / (2√(2h))) − 1`.
pub fn proposal_overlap_exact(x: &[f64], y: &[f64], eta: f64, target: &TargetDensity) -> Result<OverlapCheck> {
    check_step(eta, target.profile().l, 1.0, "proposal overlap lemma")?;
    if x.len() != target.dim() || y.len() != target.dim() {
        return Err(Error::InvalidInput("point dimension mismatch".into()));
    }
    let h = 0.5 * eta * eta;
    let gx = target.gradient(x);
    let gy = target.gradient(y);
    let mean_gap: f64 = (0..x.len())
        .map(|i| {
            let m = (x[i] - h * gx[i]) - (y[i] - h * gy[i]);
            m * m
        })
        .sum::<f64>()
        .sqrt();
    let z = mean_gap / (2.0 * (2.0 * h).sqrt());
    // 2Φ(z) − 1 = erf(z/√2)
    let tv_exact = libm::erf(z / std::f64::consts::SQRT_2);
    let distance = dist_sq(x, y).sqrt();
    let tv_bound = (2.0 * distance / eta).min(1.0);
    Ok(OverlapCheck {
        distance,
        eta,
        tv_exact,
        tv_bound,
        holds: tv_exact <= tv_bound,
    })
}

/// The overlap inequality over an `n × n` grid of distance ratios
/// `‖x − y‖/η ∈ [0, max_ratio]` and step sizes `η ∈ (0, L^{−1/2}]`,
/// with `y` displaced from `x` along the diagonal direction.
pub fn proposal_overlap_grid(
    target: &TargetDensity,
    x: &[f64],
    n: usize,
    max_ratio: f64,
) -> Result<Vec<OverlapCheck>> {
    if n < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
    }
    let l = target.profile().l;
    let eta_max = if l > 0.0 { 1.0 / l.sqrt() } else { 1.0 };
    let d = target.dim();
    let dir = 1.0 / (d as f64).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let eta = eta_max * (j + 1) as f64 / n as f64;
        for i in 0..n {
            let ratio = max_ratio * i as f64 / (n - 1) as f64;
            let y: Vec<f64> = x.iter().map(|xi| xi + ratio * eta * dir).collect();
            out.push(proposal_overlap_exact(x, &y, eta, target)?);
        }
    }
    Ok(out)
}
