//! Gauss–Legendre rules on finite intervals, including vector-valued
//! integrands (the `v_η` path integrals are vectors in R^d).

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Legendre {
    order: usize,
    pairs: Vec<(f64, f64)>,
}

impl Legendre {
    /// A rule with `order` nodes; exact for polynomials of degree `2·order − 1`.
    pub fn new(order: usize) -> Result<Self> {
        let n = NonZeroUsize::new(order)
            .ok_or_else(|| Error::InvalidInput("quadrature order must be positive".into()))?;
        let pairs = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
        Ok(Self { order, pairs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = crate::stats::NeumaierSum::default();
        for (t, w) in self.mapped(a, b) {
            acc.add(w * f(t));
        }
        acc.sum()
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut acc = crate::stats::NeumaierSum::default();
        for k in 0..panels {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == panels { b } else { lo + width };
            acc.add(self.integrate(lo, hi, &mut f));
        }
        acc.sum()
    }
}
