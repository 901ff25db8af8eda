//! Target densities `μ ∝ exp(−f)` with exact smoothness metadata.
//!
//! Hessians are only ever touched through Hessian-vector products, so the
//! moment estimators scale to a few thousand dimensions without forming
//! dense matrices.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SeedKey;
use crate::vecops::{dot, norm_sq};

/// Cheeger isoperimetric coefficient, when it is known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    Known(f64),
    Unknown,
}

impl Psi {
    pub fn known(self) -> Option<f64> {
        match self {
            Psi::Known(v) => Some(v),
            Psi::Unknown => None,
        }
    }
}

/// Operator-norm bound `l`, trace bound `upsilon` and isoperimetric
/// coefficient `psi` of the Hessian of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessProfile {
    pub l: f64,
    pub upsilon: f64,
    pub psi: Psi,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `f ≡ 0`. Not a probability density; used as a free-dynamics fixture.
    Flat,
    /// `f(q) = ½ Σ λ_i q_i²`.
    Quadratic { eig: Vec<f64> },
    /// `f(q) = ½‖q‖² + a Σ cos(q_i)`.
    Cosine { a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDensity {
    label: String,
    dim: usize,
    shape: Shape,
    profile: SmoothnessProfile,
}

/// Diagonal quadratic target with eigenvalues `eigenvalues`.
pub fn make_quadratic(eigenvalues: &[f64]) -> Result<TargetDensity> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("at least one eigenvalue required".into()));
    }
    if let Some((index, &value)) = eigenvalues
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonPositiveEigenvalue { index, value });
    }
    let l = eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let upsilon = crate::stats::compensated_sum(eigenvalues.iter().copied());
    let label = format!(
        "quadratic[{}]",
        eigenvalues
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(";")
    );
    Ok(TargetDensity {
        label,
        dim: eigenvalues.len(),
        shape: Shape::Quadratic {
            eig: eigenvalues.to_vec(),
        },
        profile: SmoothnessProfile {
            l,
            upsilon,
            psi: Psi::Known(min.sqrt()),
        },
    })
}

/// `N(0, σ² I_d)`.
pub fn make_isotropic(dim: usize, sigma: f64) -> Result<TargetDensity> {
    if dim == 0 || !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "isotropic target needs dim >= 1 and sigma > 0 (dim = {dim}, sigma = {sigma})"
        )));
    }
    let mut t = make_quadratic(&vec![1.0 / (sigma * sigma); dim])?;
    t.label = format!("isotropic(d={dim},sigma={sigma})");
    Ok(t)
}

/// Quadratic with Hessian `diag(L, L/d, …, L/d)`: one stiff direction and
/// `d − 1` soft ones, so the trace stays below `2L` at every dimension.
pub fn make_anisotropic(dim: usize, l: f64) -> Result<TargetDensity> {
    if dim == 0 || !(l > 0.0) {
        return Err(Error::InvalidInput(format!(
            "anisotropic target needs dim >= 1 and L > 0 (dim = {dim}, L = {l})"
        )));
    }
    let mut eig = vec![l / dim as f64; dim];
    eig[0] = l;
    let mut t = make_quadratic(&eig)?;
    t.label = format!("anisotropic(d={dim},L={l})");
    Ok(t)
}

/// Non-log-concave target `f(q) = ½‖q‖² + a Σ cos(q_i)`, `|a| < 1`.
pub fn make_cosine_perturbed(dim: usize, a: f64) -> Result<TargetDensity> {
    if dim == 0 {
        return Err(Error::InvalidInput("dim must be positive".into()));
    }
    if !(a.abs() < 1.0) {
        return Err(Error::PerturbationTooLarge(a));
    }
    let l = 1.0 + a.abs();
    Ok(TargetDensity {
        label: format!("cosine(d={dim},a={a})"),
        dim,
        shape: Shape::Cosine { a },
        profile: SmoothnessProfile {
            l,
            upsilon: dim as f64 * l,
            psi: Psi::Unknown,
        },
    })
}

/// Constant potential. Degenerate (improper) fixture for free dynamics.
pub fn make_flat(dim: usize) -> TargetDensity {
    TargetDensity {
        label: format!("flat(d={dim})"),
        dim,
        shape: Shape::Flat,
        profile: SmoothnessProfile {
            l: 0.0,
            upsilon: 0.0,
            psi: Psi::Unknown,
        },
    }
}

impl TargetDensity {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn profile(&self) -> SmoothnessProfile {
        self.profile
    }

    /// Hessian eigenvalues for diagonal quadratic targets.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Quadratic { eig } => Some(eig),
            _ => None,
        }
    }

    pub fn potential(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.dim);
        match &self.shape {
            Shape::Flat => 0.0,
            Shape::Quadratic { eig } => 0.5 * eig.iter().zip(q).map(|(l, x)| l * x * x).sum::<f64>(),
            Shape::Cosine { a } => 0.5 * norm_sq(q) + a * q.iter().map(|x| x.cos()).sum::<f64>(),
        }
    }

    pub fn gradient_into(&self, q: &[f64], out: &mut [f64]) {
        debug_assert_eq!(q.len(), self.dim);
        match &self.shape {
            Shape::Flat => out.iter_mut().for_each(|g| *g = 0.0),
            Shape::Quadratic { eig } => {
                for ((g, l), x) in out.iter_mut().zip(eig).zip(q) {
                    *g = l * x;
                }
            }
            Shape::Cosine { a } => {
                for (g, x) in out.iter_mut().zip(q) {
                    *g = x - a * x.sin();
                }
            }
        }
    }

    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.gradient_into(q, &mut g);
        g
    }

    /// `∇²f(q) · v`.
    pub fn hvp(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        match &self.shape {
            Shape::Flat => vec![0.0; self.dim],
            Shape::Quadratic { eig } => eig.iter().zip(v).map(|(l, x)| l * x).collect(),
            Shape::Cosine { a } => q
                .iter()
                .zip(v)
                .map(|(x, vi)| (1.0 - a * x.cos()) * vi)
                .collect(),
        }
    }

    /// `vᵀ ∇²f(q) v`.
    pub fn quadratic_form(&self, q: &[f64], v: &[f64]) -> f64 {
        dot(v, &self.hvp(q, v))
    }

    pub fn has_exact_sampler(&self) -> bool {
        matches!(self.shape, Shape::Quadratic { .. })
    }

    /// One exact draw `q ~ μ`, if the target supports it.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        match &self.shape {
            Shape::Quadratic { eig } => Some(
                eig.iter()
                    .map(|l| {
                        let z: f64 = rng.sample(StandardNormal);
                        z / l.sqrt()
                    })
                    .collect(),
            ),
            _ => None,
        }
    }

    /// Standard deviation of coordinate `coord` under `μ`, when known exactly.
    pub fn marginal_sd(&self, coord: usize) -> Option<f64> {
        self.eigenvalues()
            .and_then(|eig| eig.get(coord))
            .map(|l| 1.0 / l.sqrt())
    }
}

/// Worst-case margins found by [`validate_profile`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub probes: usize,
    /// `min over probes of L − λ_max(∇²f)`.
    pub lambda_margin: f64,
    pub lambda_worst_point: Vec<f64>,
    /// `min over probes of Υ − tr(∇²f)`.
    pub trace_margin: f64,
    pub trace_worst_point: Vec<f64>,
    pub trace_method: TraceMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    Exact,
    Hutchinson { probes: usize },
}

pub const PROFILE_TOLERANCE: f64 = 1e-6;
const EXACT_TRACE_MAX_DIM: usize = 64;
const HUTCHINSON_PROBES: usize = 256;

/// Largest eigenvalue of `∇²f(q)` by power iteration on Hessian-vector products.
pub fn lambda_max<R: Rng + ?Sized>(target: &TargetDensity, q: &[f64], rng: &mut R) -> f64 {
    let d = target.dim();
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n0 = norm_sq(&v).sqrt();
    v.iter_mut().for_each(|x| *x /= n0);
    let mut rayleigh = 0.0;
    for _ in 0..2000 {
        let hv = target.hvp(q, &v);
        let next = dot(&v, &hv);
        let nrm = norm_sq(&hv).sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        v = hv.into_iter().map(|x| x / nrm).collect();
        let converged = (next - rayleigh).abs() <= 1e-14 * next.abs().max(1.0);
        rayleigh = next;
        if converged {
            break;
        }
    }
    rayleigh
}

/// `tr ∇²f(q)`: exact basis sweep up to 64 dimensions, Rademacher
/// (Hutchinson) estimate above.
pub fn hessian_trace<R: Rng + ?Sized>(
    target: &TargetDensity,
    q: &[f64],
    rng: &mut R,
) -> (f64, TraceMethod) {
    let d = target.dim();
    if d <= EXACT_TRACE_MAX_DIM {
        let mut e = vec![0.0; d];
        let mut acc = crate::stats::NeumaierSum::default();
        for i in 0..d {
            e[i] = 1.0;
            acc.add(target.hvp(q, &e)[i]);
            e[i] = 0.0;
        }
        (acc.sum(), TraceMethod::Exact)
    } else {
        let mut acc = crate::stats::NeumaierSum::default();
        for _ in 0..HUTCHINSON_PROBES {
            let z: Vec<f64> = (0..d)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            acc.add(target.quadratic_form(q, &z));
        }
        (
            acc.sum() / HUTCHINSON_PROBES as f64,
            TraceMethod::Hutchinson {
                probes: HUTCHINSON_PROBES,
            },
        )
    }
}

/// Checks `λ_max(∇²f) ≤ L` and `tr(∇²f) ≤ Υ` at `n_probes` random points.
pub fn validate_profile(target: &TargetDensity, n_probes: usize, seed: u64) -> Result<ProfileReport> {
    if n_probes == 0 {
        return Err(Error::Precondition("n_probes must be at least 1".into()));
    }
    let stream = SeedKey::new(seed).derive_str("validate_profile").stream(0);
    let profile = target.profile();
    let mut report = ProfileReport {
        probes: n_probes,
        lambda_margin: f64::INFINITY,
        lambda_worst_point: Vec::new(),
        trace_margin: f64::INFINITY,
        trace_worst_point: Vec::new(),
        trace_method: TraceMethod::Exact,
    };
    for k in 0..n_probes as u64 {
        let mut rng = stream.at(k);
        let q: Vec<f64> = (0..target.dim())
            .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lam = lambda_max(target, &q, &mut rng);
        let (tr, method) = hessian_trace(target, &q, &mut rng);
        report.trace_method = method;
        if profile.l - lam < report.lambda_margin {
            report.lambda_margin = profile.l - lam;
            report.lambda_worst_point = q.clone();
        }
        if profile.upsilon - tr < report.trace_margin {
            report.trace_margin = profile.upsilon - tr;
            report.trace_worst_point = q.clone();
        }
    }
    if report.lambda_margin < -PROFILE_TOLERANCE {
        return Err(Error::ProfileInvalid {
            point: report.lambda_worst_point,
            detail: format!("lambda_max exceeds L by {}", -report.lambda_margin),
        });
    }
    if report.trace_margin < -PROFILE_TOLERANCE {
        return Err(Error::ProfileInvalid {
            point: report.trace_worst_point,
            detail: format!("trace exceeds upsilon by {}", -report.trace_margin),
        });
    }
    Ok(report)
}
