//! MALA written as one leapfrog step of Metropolized HMC.
//!
//! With step size `η = (2h)^{1/2}`, a momentum `p₀ ~ N(0, I)` is drawn and
//!
//! ```text
//! q_η = q₀ + η p₀ − (η²/2) ∇f(q₀)
//! p_η = p₀ − (η/2) ∇f(q₀) − (η/2) ∇f(q_η)
//! ```
//!
//! is accepted with probability `min{1, exp(−Δ_η)}` where
//! `Δ_η = f(q_η) − f(q₀) + ½‖p_η‖² − ½‖p₀‖²`.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{SeedKey, Stream};
use crate::targets::{Psi, SmoothnessProfile, TargetDensity};
use crate::trajectory::{Trajectory, TrajectoryRow};
use crate::vecops::{all_finite, norm_sq};

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "position has length {} but momentum has length {}",
                q.len(),
                p.len()
            )));
        }
        if !all_finite(&q) || !all_finite(&p) {
            return Err(Error::InvalidInput("phase point must be finite".into()));
        }
        Ok(Self { q, p })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `(q, −p)`.
    pub fn flip_momentum(&self) -> Self {
        Self {
            q: self.q.clone(),
            p: self.p.iter().map(|x| -x).collect(),
        }
    }

    /// Hamiltonian `f(q) + ½‖p‖²`.
    pub fn hamiltonian(&self, target: &TargetDensity) -> f64 {
        target.potential(&self.q) + 0.5 * norm_sq(&self.p)
    }
}

/// Position along the leapfrog path: `q_t = q₀ + t p₀ − (t²/2) g₀` with
/// `g₀ = ∇f(q₀)`.
pub fn path_position(q0: &[f64], p0: &[f64], g0: &[f64], t: f64) -> Vec<f64> {
    let half_t2 = 0.5 * t * t;
    q0.iter()
        .zip(p0)
        .zip(g0)
        .map(|((q, p), g)| q + t * p - half_t2 * g)
        .collect()
}

fn momentum_update(p0: &[f64], g0: &[f64], g1: &[f64], eta: f64) -> Vec<f64> {
    let half = 0.5 * eta;
    p0.iter()
        .zip(g0)
        .zip(g1)
        .map(|((p, a), b)| p - half * a - half * b)
        .collect()
}

/// One leapfrog step. Exactly two gradient evaluations.
pub fn leapfrog(target: &TargetDensity, start: &PhasePoint, eta: f64) -> Result<PhasePoint> {
    check_eta(eta)?;
    let g0 = target.gradient(&start.q);
    if !all_finite(&g0) {
        return Err(Error::NonFiniteGradient { q: start.q.clone() });
    }
    let q1 = path_position(&start.q, &start.p, &g0, eta);
    let g1 = target.gradient(&q1);
    if !all_finite(&g1) {
        return Err(Error::NonFiniteGradient { q: q1 });
    }
    let p1 = momentum_update(&start.p, &g0, &g1, eta);
    Ok(PhasePoint { q: q1, p: p1 })
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("step size must be positive, got {eta}")))
    }
}

/// `Δ_η(q₀, p₀)` straight from its definition. Non-finite energies come
/// back as `+∞` so that callers reject them.
pub fn energy_difference(target: &TargetDensity, start: &PhasePoint, eta: f64) -> f64 {
    let g0 = target.gradient(&start.q);
    let q1 = path_position(&start.q, &start.p, &g0, eta);
    let g1 = target.gradient(&q1);
    let p1 = momentum_update(&start.p, &g0, &g1, eta);
    let delta = target.potential(&q1) - target.potential(&start.q)
        + 0.5 * norm_sq(&p1)
        - 0.5 * norm_sq(&start.p);
    if delta.is_nan() {
        f64::INFINITY
    } else {
        delta
    }
}

/// `min{1, e^{−Δ}}`, with non-finite `Δ` treated as certain rejection.
pub fn acceptance_from_delta(delta: f64) -> f64 {
    if delta.is_nan() || delta == f64::INFINITY {
        0.0
    } else if delta <= 0.0 {
        1.0
    } else {
        (-delta).exp()
    }
}

/// The acceptance probability written as a ratio of Boltzmann weights,
/// `min{1, exp(−f(q_η) − ½‖p_η‖²) / exp(−f(q₀) − ½‖p₀‖²)}`.
pub fn acceptance_probability(target: &TargetDensity, start: &PhasePoint, eta: f64) -> Result<f64> {
    let end = leapfrog(target, start, eta)?;
    let num = (-end.hamiltonian(target)).exp();
    let den = (-start.hamiltonian(target)).exp();
    Ok((num / den).min(1.0))
}

/// Log density of the (non-lazy) MALA transition `x → y`, `y ≠ x`:
/// Gaussian proposal density times Metropolis acceptance.
pub fn log_transition_density(
    target: &TargetDensity,
    x: &[f64],
    y: &[f64],
    policy: &StepSizePolicy,
) -> f64 {
    let eta = policy.eta();
    let h = policy.h();
    let gx = target.gradient(x);
    let shift: Vec<f64> = y
        .iter()
        .zip(x)
        .zip(&gx)
        .map(|((yi, xi), gi)| yi - xi + h * gi)
        .collect();
    let d = x.len() as f64;
    let log_q = -norm_sq(&shift) / (4.0 * h) - 0.5 * d * (4.0 * std::f64::consts::PI * h).ln();
    let p0: Vec<f64> = shift.iter().map(|s| s / eta).collect();
    let start = PhasePoint { q: x.to_vec(), p: p0 };
    let delta = energy_difference(target, &start, eta);
    log_q + (-delta).min(0.0)
}

/// Where a step size came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Manual,
    Theorem1(Theorem1Inputs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Inputs {
    pub l: f64,
    pub upsilon: f64,
    pub psi: f64,
    pub warmness: f64,
    pub eps: f64,
    pub c0: f64,
}

/// Choice of the universal constant `c₀` in the trace-aware step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0 {
    Value(f64),
    /// Largest `c₀` for which `η⁴ · max{L² log(1/δ), LΥ} ≤ 1/4096`.
    Calibrated { delta: f64 },
}

impl Default for C0 {
    fn default() -> Self {
        C0::Calibrated { delta: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizePolicy {
    eta: f64,
    h: f64,
    provenance: Provenance,
}

impl StepSizePolicy {
    pub fn manual(eta: f64) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self {
            eta,
            h: 0.5 * eta * eta,
            provenance: Provenance::Manual,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `c₁ · max{…}/ψ² · log(M/ε)`, the iteration count the mixing bound
    /// predicts (up to the universal constant `c₁`). Only defined for
    /// trace-aware policies.
    pub fn predicted_iterations(&self, c1: f64) -> Option<f64> {
        match self.provenance {
            Provenance::Manual => None,
            Provenance::Theorem1(t) => Some(predicted_iterations(
                t.l, t.upsilon, t.psi, t.warmness, t.eps, c1,
            )),
        }
    }
}

/// `max{(LΥ)^{1/2}, L · log((LΥ)^{1/4} M / (ψ ε))}`.
pub fn theorem1_scale(l: f64, upsilon: f64, psi: f64, warmness: f64, eps: f64) -> f64 {
    let lu = l * upsilon;
    let log_term = l * (lu.powf(0.25) * warmness / (psi * eps)).ln();
    lu.sqrt().max(log_term)
}

pub fn predicted_iterations(
    l: f64,
    upsilon: f64,
    psi: f64,
    warmness: f64,
    eps: f64,
    c1: f64,
) -> f64 {
    c1 * theorem1_scale(l, upsilon, psi, warmness, eps) / (psi * psi) * (warmness / eps).ln()
}

/// Largest `η` with `η⁴ ≤ 1 / (4096 · max{L² log(1/δ), LΥ})`, or `None`
/// when the right-hand side is unconstrained (`L = 0`).
pub fn lemma_max_eta(profile: &SmoothnessProfile, delta: f64) -> Option<f64> {
    let k = lemma_stiffness(profile, delta);
    (k > 0.0).then(|| (4096.0 * k).powf(-0.25))
}

fn lemma_stiffness(profile: &SmoothnessProfile, delta: f64) -> f64 {
    let l = profile.l;
    (l * l * (1.0 / delta).ln()).max(l * profile.upsilon)
}

/// Trace-aware step size `h = η²/2 = c₀ / max{(LΥ)^{1/2}, L log((LΥ)^{1/4} M/(ψ ε))}`.
pub fn theorem1_policy(
    profile: &SmoothnessProfile,
    warmness: f64,
    eps: f64,
    c0: C0,
) -> Result<StepSizePolicy> {
    let psi = match profile.psi {
        Psi::Known(v) => v,
        Psi::Unknown => {
            return Err(Error::PolicyUnavailable(
                "isoperimetric coefficient unknown; supply a manual step size".into(),
            ))
        }
    };
    if !(warmness >= 1.0) {
        return Err(Error::Precondition(format!("warmness M must be >= 1, got {warmness}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    let scale = theorem1_scale(profile.l, profile.upsilon, psi, warmness, eps);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::PolicyUnavailable(format!(
            "step-size scale is not positive ({scale}) for this profile"
        )));
    }
    let c0 = match c0 {
        C0::Value(v) if v > 0.0 && v.is_finite() => v,
        C0::Value(v) => return Err(Error::Precondition(format!("c0 must be positive, got {v}"))),
        C0::Calibrated { delta } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Precondition(format!("delta must lie in (0, 1), got {delta}")));
            }
            let k = lemma_stiffness(profile, delta);
            scale / (128.0 * k.sqrt())
        }
    };
    let h = c0 / scale;
    Ok(StepSizePolicy {
        eta: (2.0 * h).sqrt(),
        h,
        provenance: Provenance::Theorem1(Theorem1Inputs {
            l: profile.l,
            upsilon: profile.upsilon,
            psi,
            warmness,
            eps,
            c0,
        }),
    })
}

/// Accept/reject/hold counters. Merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub iterations: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub held: u64,
}

impl ChainStats {
    pub fn merge(self, other: Self) -> Self {
        Self {
            iterations: self.iterations + other.iterations,
            accepted: self.accepted + other.accepted,
            rejected: self.rejected + other.rejected,
            held: self.held + other.held,
        }
    }

    /// Accepted fraction of the proposals actually made.
    pub fn acceptance_rate(&self) -> f64 {
        let proposals = self.accepted + self.rejected;
        if proposals == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / proposals as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Held,
    Accepted,
    Rejected,
}

/// Position, counters and random stream of one chain. The potential and
/// gradient at `q` are cached between steps.
#[derive(Debug, Clone)]
pub struct ChainState {
    q: Vec<f64>,
    f_q: f64,
    grad_q: Vec<f64>,
    stats: ChainStats,
    stream: Stream,
    scratch: Scratch,
}

#[derive(Debug, Clone)]
struct Scratch {
    p0: Vec<f64>,
    q1: Vec<f64>,
    g1: Vec<f64>,
}

impl ChainState {
    pub fn new(target: &TargetDensity, q: Vec<f64>, stream: Stream) -> Result<Self> {
        if q.len() != target.dim() {
            return Err(Error::InvalidInput(format!(
                "initial point has length {}, target dimension is {}",
                q.len(),
                target.dim()
            )));
        }
        if !all_finite(&q) {
            return Err(Error::InvalidInput("initial point must be finite".into()));
        }
        let d = q.len();
        Ok(Self {
            f_q: target.potential(&q),
            grad_q: target.gradient(&q),
            q,
            stats: ChainStats::default(),
            stream,
            scratch: Scratch {
                p0: vec![0.0; d],
                q1: vec![0.0; d],
                g1: vec![0.0; d],
            },
        })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn iteration(&self) -> u64 {
        self.stats.iterations
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }
}

/// One MALA transition. With `lazy`, the chain holds its position with
/// probability ½ (the iteration counter still advances).
pub fn mala_step(
    target: &TargetDensity,
    state: &mut ChainState,
    policy: &StepSizePolicy,
    lazy: bool,
) -> StepOutcome {
    let mut rng = state.stream.at(state.stats.iterations);
    state.stats.iterations += 1;
    if lazy && rng.random::<bool>() {
        state.stats.held += 1;
        return StepOutcome::Held;
    }
    let eta = policy.eta();
    let half_eta2 = 0.5 * eta * eta;
    let Scratch { p0, q1, g1 } = &mut state.scratch;
    for p in p0.iter_mut() {
        *p = rng.sample(StandardNormal);
    }
    for i in 0..q1.len() {
        q1[i] = state.q[i] + eta * p0[i] - half_eta2 * state.grad_q[i];
    }
    target.gradient_into(q1, g1);
    let f1 = target.potential(q1);
    let half = 0.5 * eta;
    let mut kinetic_change = 0.0;
    for i in 0..p0.len() {
        let p1 = p0[i] - half * state.grad_q[i] - half * g1[i];
        kinetic_change += 0.5 * (p1 * p1 - p0[i] * p0[i]);
    }
    let delta = f1 - state.f_q + kinetic_change;
    let u: f64 = rng.random();
    if u < acceptance_from_delta(delta) {
        std::mem::swap(&mut state.q, q1);
        std::mem::swap(&mut state.grad_q, g1);
        state.f_q = f1;
        state.stats.accepted += 1;
        StepOutcome::Accepted
    } else {
        state.stats.rejected += 1;
        StepOutcome::Rejected
    }
}

/// A distribution that chains can be started from.
pub trait StartSampler: Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

/// Start from the target itself (requires an exact sampler).
pub struct Stationary<'a>(pub &'a TargetDensity);

impl<'a> Stationary<'a> {
    pub fn new(target: &'a TargetDensity) -> Result<Self> {
        if target.has_exact_sampler() {
            Ok(Self(target))
        } else {
            Err(Error::UnsupportedTarget(format!(
                "{} has no exact sampler",
                target.label()
            )))
        }
    }
}

impl StartSampler for Stationary<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.0
            .sample_exact(rng)
            .expect("Stationary is only constructed for targets with exact samplers")
    }
}

pub enum Init<'a> {
    Point(Vec<f64>),
    Sampler(&'a dyn StartSampler),
}

/// Stream used for chain `chain_id` of a run seeded with `seed`.
pub fn chain_stream(seed: u64, chain_id: u64) -> Stream {
    SeedKey::new(seed).derive_str("chain").stream(chain_id)
}

/// Stream used to draw the initial point of chain `chain_id`.
pub fn init_stream(seed: u64) -> Stream {
    SeedKey::new(seed).derive_str("init").stream(0)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub n_steps: u64,
    pub thinning: u64,
    pub lazy: bool,
    pub seed: u64,
    pub chain_id: u64,
}

/// Runs one chain for `n_steps` steps, recording the start and every
/// `thinning`-th state.
pub fn run_chain(
    target: &TargetDensity,
    init: Init<'_>,
    policy: &StepSizePolicy,
    opts: &RunOptions,
) -> Result<Trajectory> {
    if opts.n_steps == 0 {
        return Err(Error::Precondition("n_steps must be at least 1".into()));
    }
    if opts.thinning == 0 {
        return Err(Error::Precondition("thinning must be at least 1".into()));
    }
    let q0 = match init {
        Init::Point(q) => q,
        Init::Sampler(s) => {
            if s.dim() != target.dim() {
                return Err(Error::InvalidInput("start sampler dimension mismatch".into()));
            }
            s.draw(&mut init_stream(opts.seed).at(opts.chain_id))
        }
    };
    let mut state = ChainState::new(target, q0, chain_stream(opts.seed, opts.chain_id))?;
    let mut rows = vec![TrajectoryRow {
        step: 0,
        q: state.q().to_vec(),
        accepted: false,
    }];
    for step in 1..=opts.n_steps {
        let outcome = mala_step(target, &mut state, policy, opts.lazy);
        if step % opts.thinning == 0 {
            rows.push(TrajectoryRow {
                step,
                q: state.q().to_vec(),
                accepted: outcome == StepOutcome::Accepted,
            });
        }
    }
    Ok(Trajectory {
        dim: target.dim(),
        rows,
        stats: state.stats(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{make_cosine_perturbed, make_flat, make_isotropic, make_quadratic};

    fn pp(q: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn free_dynamics() {
        let t = make_flat(2);
        let out = leapfrog(&t, &pp(&[1.0, -2.0], &[0.5, 0.25]), 0.3).unwrap();
        assert_eq!(out.q, vec![1.0 + 0.3 * 0.5, -2.0 + 0.3 * 0.25]);
        assert_eq!(out.p, vec![0.5, 0.25]);
        assert_eq!(energy_difference(&t, &pp(&[1.0, -2.0], &[0.5, 0.25]), 0.3), 0.0);
    }

    #[test]
    fn one_dimensional_hand_values() {
        // q_η = 1 + 0.05 − 0.005 = 1.045; p_η = 0.5 − 0.05 − 0.05225 = 0.39775
        let t = make_quadratic(&[1.0]).unwrap();
        let start = pp(&[1.0], &[0.5]);
        let out = leapfrog(&t, &start, 0.1).unwrap();
        assert!((out.q[0] - 1.045).abs() < 1e-15);
        assert!((out.p[0] - 0.39775).abs() < 1e-15);
        let want = 0.5 * 1.045f64.powi(2) - 0.5 + 0.5 * (0.39775f64.powi(2) - 0.25);
        assert!((energy_difference(&t, &start, 0.1) - want).abs() < 1e-15);
    }

    #[test]
    fn reversibility_round_trip() {
        let t = make_cosine_perturbed(3, 0.7).unwrap();
        let start = pp(&[0.3, -1.2, 2.0], &[1.1, 0.4, -0.9]);
        let end = leapfrog(&t, &start, 0.4).unwrap();
        let back = leapfrog(&t, &end.flip_momentum(), 0.4).unwrap().flip_momentum();
        for (a, b) in back.q.iter().zip(&start.q).chain(back.p.iter().zip(&start.p)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_step_and_shapes() {
        let t = make_flat(1);
        assert!(leapfrog(&t, &pp(&[0.0], &[0.0]), 0.0).is_err());
        assert!(StepSizePolicy::manual(-1.0).is_err());
        assert!(PhasePoint::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(PhasePoint::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn non_finite_energy_is_rejected() {
        assert_eq!(acceptance_from_delta(f64::INFINITY), 0.0);
        assert_eq!(acceptance_from_delta(f64::NAN), 0.0);
        assert_eq!(acceptance_from_delta(-3.0), 1.0);
    }

    #[test]
    fn theorem1_hand_values() {
        let p = SmoothnessProfile { l: 1.0, upsilon: 1.0, psi: Psi::Known(1.0) };
        let e = std::f64::consts::E;
        let pol = theorem1_policy(&p, e, 1.0 / e, C0::Value(1.0)).unwrap();
        assert!((pol.h() - 0.5).abs() < 1e-15);
        assert_eq!(pol.h(), 0.5 * pol.eta() * pol.eta());

        let p = SmoothnessProfile { l: 1.0, upsilon: 4.0, psi: Psi::Known(1.0) };
        let pol = theorem1_policy(&p, e, 0.1, C0::Value(1.0)).unwrap();
        let log_branch = (4f64.powf(0.25) * e / 0.1).ln();
        assert!((log_branch - 3.649_158_683).abs() < 1e-9);
        assert!((pol.h() - 1.0 / log_branch).abs() < 1e-15);
        assert!((pol.h() - 0.2741).abs() < 1e-4);
    }

    #[test]
    fn theorem1_doubling_upsilon_on_trace_branch() {
        // Large trace keeps the sqrt(LΥ) branch active.
        let p1 = SmoothnessProfile { l: 1.0, upsilon: 400.0, psi: Psi::Known(1.0) };
        let p2 = SmoothnessProfile { upsilon: 800.0, ..p1 };
        let h1 = theorem1_policy(&p1, 1.5, 0.5, C0::Value(0.1)).unwrap().h();
        let h2 = theorem1_policy(&p2, 1.5, 0.5, C0::Value(0.1)).unwrap().h();
        assert!((h2 / h1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn theorem1_invariant_and_errors() {
        let p = SmoothnessProfile { l: 2.0, upsilon: 7.0, psi: Psi::Known(0.3) };
        let pol = theorem1_policy(&p, 3.0, 0.05, C0::default()).unwrap();
        let Provenance::Theorem1(inp) = pol.provenance() else { panic!() };
        let scale = theorem1_scale(2.0, 7.0, 0.3, 3.0, 0.05);
        assert!((pol.h() * scale / inp.c0 - 1.0).abs() < 1e-12);
        // calibrated c0 lands exactly on the acceptance lemma's step-size limit
        let eta_max = lemma_max_eta(&p, 0.05).unwrap();
        assert!((pol.eta() / eta_max - 1.0).abs() < 1e-12);

        let unknown = SmoothnessProfile { psi: Psi::Unknown, ..p };
        assert!(matches!(
            theorem1_policy(&unknown, 3.0, 0.05, C0::default()),
            Err(Error::PolicyUnavailable(_))
        ));
        assert!(theorem1_policy(&p, 0.5, 0.05, C0::default()).is_err());
        assert!(theorem1_policy(&p, 2.0, 1.0, C0::default()).is_err());
        assert!(theorem1_policy(&p, 2.0, 0.1, C0::Value(0.0)).is_err());
        assert!(StepSizePolicy::manual(0.3).unwrap().predicted_iterations(1.0).is_none());
        assert!(pol.predicted_iterations(1.0).unwrap() > 0.0);
    }

    #[test]
    fn lemma_max_eta_values() {
        let p = SmoothnessProfile { l: 1.0, upsilon: 1.0, psi: Psi::Known(1.0) };
        let eta = lemma_max_eta(&p, 0.05).unwrap();
        assert!((eta.powi(4) - 1.0 / (4096.0 * 20f64.ln())).abs() < 1e-18);
        assert!((eta - 0.095_013_269_6).abs() < 1e-10);
        assert!((lemma_max_eta(&p, 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!(lemma_max_eta(&make_flat(2).profile(), 0.1).is_none());
    }

    #[test]
    fn flat_target_always_accepts() {
        let t = make_flat(3);
        let pol = StepSizePolicy::manual(0.8).unwrap();
        let mut s = ChainState::new(&t, vec![0.0; 3], chain_stream(1, 0)).unwrap();
        for _ in 0..500 {
            assert_eq!(mala_step(&t, &mut s, &pol, false), StepOutcome::Accepted);
        }
        assert_eq!(s.stats().accepted, 500);
    }

    #[test]
    fn tallies_sum_to_iterations() {
        let t = make_isotropic(2, 1.0).unwrap();
        let pol = StepSizePolicy::manual(1.5).unwrap();
        let mut s = ChainState::new(&t, vec![0.5, 0.5], chain_stream(9, 2)).unwrap();
        for _ in 0..1000 {
            mala_step(&t, &mut s, &pol, true);
        }
        let st = s.stats();
        assert_eq!(st.accepted + st.rejected + st.held, st.iterations);
        assert!(st.rejected > 0 && st.held > 0);
    }

    #[test]
    fn run_chain_preconditions() {
        let t = make_isotropic(1, 1.0).unwrap();
        let pol = StepSizePolicy::manual(0.5).unwrap();
        let opts = RunOptions { n_steps: 0, thinning: 1, lazy: true, seed: 1, chain_id: 0 };
        assert!(run_chain(&t, Init::Point(vec![0.0]), &pol, &opts).is_err());
        let opts = RunOptions { n_steps: 10, thinning: 0, ..opts };
        assert!(run_chain(&t, Init::Point(vec![0.0]), &pol, &opts).is_err());
        let opts = RunOptions { thinning: 3, ..opts };
        let tr = run_chain(&t, Init::Point(vec![0.0]), &pol, &opts).unwrap();
        assert_eq!(tr.rows.iter().map(|r| r.step).collect::<Vec<_>>(), vec![0, 3, 6, 9]);
        let cos = make_cosine_perturbed(1, 0.2).unwrap();
        assert!(Stationary::new(&cos).is_err());
    }

    #[test]
    fn stats_merge_is_order_independent() {
        let a = ChainStats { iterations: 5, accepted: 2, rejected: 1, held: 2 };
        let b = ChainStats { iterations: 7, accepted: 3, rejected: 4, held: 0 };
        let c = ChainStats { iterations: 1, accepted: 0, rejected: 0, held: 1 };
        assert_eq!(a.merge(b).merge(c), c.merge(a.merge(b)));
    }
}
