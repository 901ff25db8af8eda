use crate::error::{Error, Result};
use crate::kernel::StepSizePolicy;
use crate::quadrature::Legendre;
use crate::stats::{normal_interval_mass, NeumaierSum};
use crate::targets::TargetDensity;

/// Largest state space for which subset enumeration is performed.
pub const MAX_STATES: usize = 20;
pub const CHAIN_TOLERANCE: f64 = 1e-12;
pub const COVERAGE: f64 = 1.0 - 1e-6;

/// Lazy, reversible Markov chain on `k ≤ 20` states.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    k: usize,
    p: Vec<f64>,
    pi: Vec<f64>,
}

impl FiniteChain {
    /// Validates row-stochasticity, reversibility against `pi` and laziness.
    pub fn new(rows: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let k = rows.len();
        if k == 0 || k > MAX_STATES {
            return Err(Error::ChainInvariant(format!("state count must be in 1..={MAX_STATES}, got {k}")));
        }
        if pi.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::ChainInvariant("transition matrix must be k x k with k-vector pi".into()));
        }
        if pi.iter().any(|&x| !(x > 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOLERANCE {
            return Err(Error::ChainInvariant("pi must be a positive probability vector".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::ChainInvariant(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > CHAIN_TOLERANCE {
                return Err(Error::ChainInvariant(format!("row {i} sums to {s}")));
            }
            if row[i] < 0.5 - CHAIN_TOLERANCE {
                return Err(Error::ChainInvariant(format!("state {i} is not lazy: P_ii = {}", row[i])));
            }
        }
        for i in 0..k {
            for j in 0..i {
                let r = (pi[i] * rows[i][j] - pi[j] * rows[j][i]).abs();
                if r > CHAIN_TOLERANCE {
                    return Err(Error::ChainInvariant(format!(
                        "detailed balance fails between {i} and {j} (residual {r:e})"
                    )));
                }
            }
        }
        Ok(Self {
            k,
            p: rows.concat(),
            pi,
        })
    }

    /// `½I + ½P` for a reversible base chain `P`.
    pub fn lazify(base: &[Vec<f64>], pi: Vec<f64>) -> Result<Self> {
        let rows = base
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &x)| 0.5 * x + if i == j { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(rows, pi)
    }

    /// Lazy symmetric two-state chain with off-diagonal entry `flip ≤ ½`.
    pub fn two_state(flip: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]], vec![0.5, 0.5])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.k..(i + 1) * self.k]
    }

    /// `vᵀP`.
    pub fn step_distribution(&self, v: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|j| {
                let mut acc = NeumaierSum::default();
                for (i, vi) in v.iter().enumerate() {
                    acc.add(vi * self.entry(i, j));
                }
                acc.sum()
            })
            .collect()
    }

    /// Largest violation of `π_i P_ij = π_j P_ji`.
    pub fn reversibility_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.k {
            for j in 0..i {
                worst = worst.max((self.pi[i] * self.entry(i, j) - self.pi[j] * self.entry(j, i)).abs());
            }
        }
        worst
    }
}

/// Metropolis chain on the `k` bin centers of `[a, b]` for a 1D target.
///
/// Proposal mass `Q_ij` is the probability that the MALA proposal
/// `N(c_i − h f'(c_i), 2h)` lands in bin `j` (mass outside `[a, b]` holds).
/// Off-diagonal moves are `min{π_i Q_ij, π_j Q_ji}/π_i` against the binned
/// target mass `π`, and the result is lazified.
pub fn discretize_1d(
    target: &TargetDensity,
    a: f64,
    b: f64,
    k: usize,
    policy: &StepSizePolicy,
) -> Result<FiniteChain> {
    if target.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "discretization needs a 1D target, got dimension {}",
            target.dim()
        )));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() || k < 2 || k > MAX_STATES {
        return Err(Error::InvalidInput(format!(
            "need a < b and 2 <= k <= {MAX_STATES} (a = {a}, b = {b}, k = {k})"
        )));
    }
    let width = (b - a) / k as f64;
    let rule = Legendre::new(32)?;
    let weight = |x: f64| (-target.potential(&[x])).exp();
    let bin_mass = |lo: f64| rule.integrate_composite(lo, lo + width, 2, weight);
    let raw: Vec<f64> = (0..k).map(|i| bin_mass(a + i as f64 * width)).collect();
    let inside: f64 = crate::stats::compensated_sum(raw.iter().copied());
    let outside = tail_mass(&rule, a, width, -1.0, inside, &weight) + tail_mass(&rule, b, width, 1.0, inside, &weight);
    let coverage = inside / (inside + outside);
    if !(coverage >= COVERAGE) {
        return Err(Error::GridTooSmall { coverage });
    }
    let pi: Vec<f64> = raw.iter().map(|m| m / inside).collect();

    let h = policy.h();
    let sd = (2.0 * h).sqrt();
    let centers: Vec<f64> = (0..k).map(|i| a + (i as f64 + 0.5) * width).collect();
    let q: Vec<Vec<f64>> = centers
        .iter()
        .map(|&c| {
            let mean = c - h * target.gradient(&[c])[0];
            (0..k)
                .map(|j| {
                    let lo = a + j as f64 * width;
                    normal_interval_mass(lo, lo + width, mean, sd)
                })
                .collect()
        })
        .collect();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        let mut moved = NeumaierSum::default();
        for j in 0..k {
            if i != j {
                let flow = (pi[i] * q[i][j]).min(pi[j] * q[j][i]);
                rows[i][j] = flow / pi[i];
                moved.add(rows[i][j]);
            }
        }
        rows[i][i] = 1.0 - moved.sum();
    }
    FiniteChain::lazify(&rows, pi)
}

/// Mass of `weight` beyond `edge` in direction `dir`, integrated outward
/// panel by panel until the panels stop contributing.
fn tail_mass(rule: &Legendre, edge: f64, width: f64, dir: f64, scale: f64, weight: &dyn Fn(f64) -> f64) -> f64 {
    let mut acc = NeumaierSum::default();
    let mut lo = edge;
    for _ in 0..100_000 {
        let hi = lo + dir * width;
        let m = rule.integrate(lo.min(hi), lo.max(hi), weight);
        acc.add(m);
        if m <= 1e-20 * scale && weight(hi) <= weight(lo) {
            break;
        }
        lo = hi;
    }
    acc.sum()
}

/// `Φ_s = inf { Q(S, Sᶜ) / (min{π(S), π(Sᶜ)} − s) : s < π(S) < 1 − s }`
/// over all nonempty proper subsets, enumerated in Gray-code order with
/// incrementally updated flows.
pub fn s_conductance_exact(chain: &FiniteChain, s: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&s) {
        return Err(Error::InvalidInput(format!("s must lie in [0, 1/2), got {s}")));
    }
    let k = chain.k;
    let pi = &chain.pi;
    let total: f64 = crate::stats::compensated_sum(pi.iter().copied());
    let mut in_set = vec![false; k];
    let mut mass = NeumaierSum::default();
    let mut flow = NeumaierSum::default();
    let mut best = f64::INFINITY;
    let full = 1u64 << k;
    for g in 1..full {
        let x = g.trailing_zeros() as usize;
        // moving x across the cut changes the flow by π_x(P_x,out − P_x,in)
        let mut out = NeumaierSum::default();
        for j in 0..k {
            if j == x {
                continue;
            }
            let term = pi[x] * chain.entry(x, j);
            if in_set[j] {
                out.add(-term);
            } else {
                out.add(term);
            }
        }
        if in_set[x] {
            in_set[x] = false;
            flow.add(-out.sum());
            mass.add(-pi[x]);
        } else {
            in_set[x] = true;
            flow.add(out.sum());
            mass.add(pi[x]);
        }
        let m = mass.sum();
        if m > s && m < 1.0 - s && in_set.iter().any(|&v| !v) {
            let denom = m.min(total - m) - s;
            if denom > 0.0 {
                best = best.min(flow.sum() / denom);
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::UndefinedConductance { s })
    }
}

/// `max_i μ₀(i)/π(i)`.
pub fn exact_warmness(mu0: &[f64], pi: &[f64]) -> f64 {
    mu0.iter().zip(pi).map(|(m, p)| m / p).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LovaszRow {
    pub n: u64,
    pub tv: f64,
    pub bound: f64,
    /// `bound − tv`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LovaszReport {
    pub s: f64,
    pub phi_s: f64,
    pub warmness: f64,
    pub rows: Vec<LovaszRow>,
    pub min_slack: f64,
    pub pass: bool,
}

pub const LOVASZ_SLACK: f64 = -1e-10;

/// Exact `d_TV(μ₀Pⁿ, π)` against `Ms + M(1 − Φ_s²/2)ⁿ` for `n = 0..=n_max`.
///
/// `Φ_s` can exceed one when `s` is close to ½; the contraction factor then
/// uses `min(Φ_s, 1)`, a valid lower bound, while the report keeps the exact value.
pub fn lovasz_bound_check(
    chain: &FiniteChain,
    mu0: &[f64],
    warmness: f64,
    s: f64,
    n_max: u64,
) -> Result<LovaszReport> {
    if mu0.len() != chain.k {
        return Err(Error::InvalidInput("start vector length differs from state count".into()));
    }
    if mu0.iter().any(|&x| !(x >= 0.0)) || (mu0.iter().sum::<f64>() - 1.0).abs() > CHAIN_TOLERANCE {
        return Err(Error::InvalidInput("start vector must be a probability vector".into()));
    }
    for (state, (&m, &p)) in mu0.iter().zip(&chain.pi).enumerate() {
        if m > warmness * p * (1.0 + CHAIN_TOLERANCE) {
            return Err(Error::WarmnessViolated {
                state,
                ratio: m / p,
                warmness,
            });
        }
    }
    let phi_s = s_conductance_exact(chain, s)?;
    let phi = phi_s.min(1.0);
    let rate = 1.0 - 0.5 * phi * phi;
    let mut v = mu0.to_vec();
    let mut rows = Vec::with_capacity(n_max as usize + 1);
    let mut min_slack = f64::INFINITY;
    for n in 0..=n_max {
        if n > 0 {
            v = chain.step_distribution(&v);
        }
        let tv = 0.5 * crate::stats::compensated_sum(v.iter().zip(&chain.pi).map(|(a, b)| (a - b).abs()));
        let bound = warmness * s + warmness * rate.powf(n as f64);
        let slack = bound - tv;
        min_slack = min_slack.min(slack);
        rows.push(LovaszRow { n, tv, bound, slack });
    }
    Ok(LovaszReport {
        s,
        phi_s,
        warmness,
        rows,
        min_slack,
        pass: min_slack >= LOVASZ_SLACK,
    })
}
