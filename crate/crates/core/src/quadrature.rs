//! One-dimensional quadrature rules on the unit interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let m = m as f64;
    let dp = m * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Number of Gauss–Legendre nodes per panel of a [`CompositeRule`].
pub const PANEL_NODES: usize = 8;

/// Composite Gauss–Legendre rule on [0, 1]: equal panels with
/// [`PANEL_NODES`] nodes each.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

impl CompositeRule {
    /// `order` is the total node count and must be a positive multiple of
    /// [`PANEL_NODES`].
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order % PANEL_NODES != 0 {
            return Err(Error::argument(format!(
                "quadrature order {order} must be a positive multiple of {PANEL_NODES}"
            )));
        }
        let panels = order / PANEL_NODES;
        let (ref_nodes, ref_weights) = gauss_legendre(PANEL_NODES);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(order);
        let mut weights = Vec::with_capacity(order);
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Ok(CompositeRule {
            panels,
            nodes,
            weights,
            ref_nodes,
            ref_weights,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Tail integrals `∫_{x_k}^1 f` at every node `x_k`.
    ///
    /// Whole panels to the right are summed from the node values; the partial
    /// panel containing `x_k` gets its own mapped Gauss–Legendre rule.
    pub fn tail_integrals(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let m = PANEL_NODES;
        let h = 1.0 / self.panels as f64;
        let values: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        let mut panel_sums: Vec<f64> = (0..self.panels)
            .map(|p| {
                (0..m)
                    .map(|q| self.weights[p * m + q] * values[p * m + q])
                    .sum()
            })
            .collect();
        // suffix sums: panel_sums[p] becomes the integral over panels > p
        let mut acc = 0.0;
        for p in (0..self.panels).rev() {
            let here = panel_sums[p];
            panel_sums[p] = acc;
            acc += here;
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        for p in 0..self.panels {
            let end = (p + 1) as f64 * h;
            for q in 0..m {
                let start = self.nodes[p * m + q];
                let half = 0.5 * (end - start);
                let partial: f64 = self
                    .ref_nodes
                    .iter()
                    .zip(&self.ref_weights)
                    .map(|(x, w)| w * f(start + half * (x + 1.0)))
                    .sum::<f64>()
                    * half;
                out.push(partial + panel_sums[p]);
            }
        }
        out
    }
}

/// Composite Simpson rule for `∫_a^b f` with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = if panels % 2 == 1 { panels + 1 } else { panels.max(2) };
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is exact for 8 nodes
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((approx - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_and_tails() {
        let rule = CompositeRule::new(64).unwrap();
        let v = rule.integrate(|x| (3.0 * x).exp());
        assert!((v - ((3.0f64).exp() - 1.0) / 3.0).abs() < 1e-13);
        let tails = rule.tail_integrals(|x| x * x);
        for (&x, t) in rule.nodes().iter().zip(tails) {
            assert!((t - (1.0 - x * x * x) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_order() {
        assert!(CompositeRule::new(0).is_err());
        assert!(CompositeRule::new(100).is_err());
    }

    #[test]
    fn simpson_on_sine() {
        let v = simpson(|t| (PI * t).sin(), 0.0, 0.5, 1024);
        assert!((v - 1.0 / PI).abs() < 1e-13);
    }
}
