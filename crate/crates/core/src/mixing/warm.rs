use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::StartSampler;
use crate::targets::TargetDensity;

/// Centered diagonal Gaussian start `μ₀ = N(0, diag(σ₀²))` together with
/// its warmness `M = sup μ₀/μ` against a diagonal Gaussian target.
///
/// For `σ₀,i ≤ σ_i` the density ratio peaks at the origin, so
/// `M = Π σ_i / σ₀,i` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    sds: Vec<f64>,
    warmness: f64,
}

impl WarmStart {
    /// `N(0, σ₀² I_d)` against `N(0, σ² I_d)`: `M = (σ/σ₀)^d`.
    pub fn gaussian_pair(dim: usize, sigma0: f64, sigma: f64) -> Result<Self> {
        if dim == 0 || !(sigma0 > 0.0) || !(sigma0 <= sigma) {
            return Err(Error::InvalidInput(format!(
                "need dim >= 1 and 0 < sigma0 <= sigma (dim = {dim}, sigma0 = {sigma0}, sigma = {sigma})"
            )));
        }
        Ok(Self {
            sds: vec![sigma0; dim],
            warmness: (sigma / sigma0).powi(dim as i32),
        })
    }

    /// Arbitrary per-coordinate start scales against a catalog quadratic.
    pub fn diagonal(target: &TargetDensity, sds: Vec<f64>) -> Result<Self> {
        let eig = target
            .eigenvalues()
            .ok_or_else(|| Error::UnsupportedTarget(format!("{} is not a Gaussian target", target.label())))?;
        if sds.len() != eig.len() {
            return Err(Error::InvalidInput("start scale dimension mismatch".into()));
        }
        let mut log_m = 0.0;
        for (i, (&s0, &lambda)) in sds.iter().zip(eig).enumerate() {
            let s = 1.0 / lambda.sqrt();
            if !(s0 > 0.0 && s0 <= s) {
                return Err(Error::InvalidInput(format!(
                    "start scale {s0} in coordinate {i} must lie in (0, {s}]"
                )));
            }
            log_m += (s / s0).ln();
        }
        Ok(Self {
            sds,
            warmness: log_m.exp(),
        })
    }

    /// The target itself, with coordinate `coord` contracted by a factor
    /// `warmness`, so that `M = warmness` and the whole warm-start gap
    /// sits in one marginal.
    pub fn concentrated(target: &TargetDensity, coord: usize, warmness: f64) -> Result<Self> {
        if !(warmness >= 1.0 && warmness.is_finite()) {
            return Err(Error::InvalidInput(format!("warmness must be >= 1, got {warmness}")));
        }
        let mut sds: Vec<f64> = (0..target.dim())
            .map(|i| target.marginal_sd(i))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::UnsupportedTarget(format!("{} is not a Gaussian target", target.label())))?;
        let s = sds
            .get_mut(coord)
            .ok_or_else(|| Error::InvalidInput(format!("coordinate {coord} out of range")))?;
        *s /= warmness;
        Ok(Self { sds, warmness })
    }

    /// `μ₀ = μ`.
    pub fn stationary(target: &TargetDensity) -> Result<Self> {
        Self::concentrated(target, 0, 1.0)
    }

    pub fn warmness(&self) -> f64 {
        self.warmness
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }
}

impl StartSampler for WarmStart {
    fn dim(&self) -> usize {
        self.sds.len()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.sds
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            })
            .collect()
    }
}
