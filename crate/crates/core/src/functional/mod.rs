//! Population measures of dependence and functional dependence, the
//! isotonic plug-in Ĉ_H, the discrete maximal canonical correlation M_L and
//! the combined measure D̂.

mod combined;
mod discrete;
mod isotonic;

pub use combined::{combined_d, Branch, CombinedMeasure};
pub use discrete::{discrete_ml, ingest_table_csv, ContingencyTable};
pub use isotonic::{isotonic_ch, pava};

use crate::error::{Error, Result};
use crate::quadrature::CompositeRule;

/// A joint density on [0,1]².
pub trait JointDensity: Sync {
    fn density(&self, u: f64, v: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64 + Sync> JointDensity for F {
    fn density(&self, u: f64, v: f64) -> f64 {
        self(u, v)
    }
}

/// Default total node count per axis for the population oracles.
pub const DEFAULT_QUAD_ORDER: usize = 256;

/// Smallest accepted quadrature order.
pub const MIN_QUAD_ORDER: usize = 64;

/// Relative change on refinement above which a result is rejected.
pub const REFINEMENT_TOLERANCE: f64 = 1e-6;

/// Node values needed by both population measures.
struct Tables {
    weights: Vec<f64>,
    /// `f(u_a, v_k)` at [a][k]
    dens: Vec<Vec<f64>>,
    /// `∫_{v_k}^1 f(u_a, v) dv` at [a][k]
    tails: Vec<Vec<f64>>,
    /// `f_X(u_a)`
    fx: Vec<f64>,
}

fn tables(h: &dyn JointDensity, order: usize) -> Result<Tables> {
    let rule = CompositeRule::new(order)?;
    let nodes = rule.nodes();
    let mut dens = Vec::with_capacity(order);
    let mut tails = Vec::with_capacity(order);
    let mut fx = Vec::with_capacity(order);
    for &u in nodes {
        let row: Vec<f64> = nodes.iter().map(|&v| h.density(u, v)).collect();
        if row.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::numeric(format!(
                "density is negative or non-finite at u = {u}"
            )));
        }
        fx.push(rule.integrate(|v| h.density(u, v)));
        tails.push(rule.tail_integrals(|v| h.density(u, v)));
        dens.push(row);
    }
    let mass: f64 = rule.weights().iter().zip(&fx).map(|(w, f)| w * f).sum();
    if !(mass > 0.0) {
        return Err(Error::degenerate("density has no mass"));
    }
    for a in 0..order {
        fx[a] /= mass;
        for k in 0..order {
            dens[a][k] /= mass;
            tails[a][k] /= mass;
        }
    }
    Ok(Tables {
        weights: rule.weights().to_vec(),
        dens,
        tails,
        fx,
    })
}

/// `C(X,Y) = ∫Var(P(Y >= t | X)) dμ(t) / ∫Var(1(Y >= t)) dμ(t)` at one order.
fn population_c_at(h: &dyn JointDensity, order: usize) -> Result<f64> {
    let t = tables(h, order)?;
    let m = t.weights.len();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..m {
        let mut fy = 0.0;
        let mut surv = 0.0;
        let mut second = 0.0;
        for a in 0..m {
            let w = t.weights[a];
            fy += w * t.dens[a][k];
            surv += w * t.tails[a][k];
            if t.fx[a] > 0.0 {
                second += w * t.tails[a][k] * t.tails[a][k] / t.fx[a];
            }
        }
        num += t.weights[k] * fy * (second - surv * surv);
        den += t.weights[k] * fy * surv * (1.0 - surv);
    }
    ratio(num, den)
}

/// `M = Var(E[G_Y(Y) | X]) / Var(G_Y(Y))` at one order.
fn population_m_at(h: &dyn JointDensity, order: usize) -> Result<f64> {
    let t = tables(h, order)?;
    let m = t.weights.len();
    // G_Y(v_k) = 1 − S_Y(v_k)
    let g: Vec<f64> = (0..m)
        .map(|k| 1.0 - (0..m).map(|a| t.weights[a] * t.tails[a][k]).sum::<f64>())
        .collect();
    let (mut eg, mut eg2) = (0.0, 0.0);
    let mut cond_second = 0.0;
    for a in 0..m {
        let mut cond = 0.0;
        for k in 0..m {
            let wd = t.weights[a] * t.weights[k] * t.dens[a][k];
            eg += wd * g[k];
            eg2 += wd * g[k] * g[k];
            cond += t.weights[k] * t.dens[a][k] * g[k];
        }
        if t.fx[a] > 0.0 {
            cond_second += t.weights[a] * cond * cond / t.fx[a];
        }
    }
    ratio(cond_second - eg * eg, eg2 - eg * eg)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if !(den > 1e-300) {
        return Err(Error::degenerate("Y is degenerate under the density"));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

fn refined(f: impl Fn(usize) -> Result<f64>, order: usize) -> Result<f64> {
    if order < MIN_QUAD_ORDER {
        return Err(Error::argument(format!(
            "quadrature order must be at least {MIN_QUAD_ORDER}"
        )));
    }
    let coarse = f(order)?;
    let fine = f(2 * order)?;
    let change = (fine - coarse).abs();
    if change > REFINEMENT_TOLERANCE * fine.abs().max(1.0) {
        return Err(Error::numeric(format!(
            "quadrature did not converge: {coarse} at order {order}, {fine} at order {}",
            2 * order
        )));
    }
    Ok(fine)
}

/// Chatterjee's population measure C(X,Y) of a density on [0,1]², checked by
/// doubling the quadrature order.
pub fn population_c(h: &dyn JointDensity, quad_order: usize) -> Result<f64> {
    refined(|m| population_c_at(h, m), quad_order)
}

/// `M(X, G_Y(Y)) = Var(E[G_Y(Y)|X]) / Var(G_Y(Y))`, checked by doubling the
/// quadrature order.
pub fn population_m(h: &dyn JointDensity, quad_order: usize) -> Result<f64> {
    refined(|m| population_m_at(h, m), quad_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fgm(theta: f64) -> impl Fn(f64, f64) -> f64 + Sync {
        move |u, v| 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)
    }

    /// Literal discrete version of C on an m×m midpoint grid.
    fn brute_c(h: &dyn Fn(f64, f64) -> f64, m: usize) -> f64 {
        let x: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let mut p = vec![vec![0.0; m]; m];
        let mut tot = 0.0;
        for i in 0..m {
            for j in 0..m {
                p[i][j] = h(x[i], x[j]);
                tot += p[i][j];
            }
        }
        for row in &mut p {
            for v in row.iter_mut() {
                *v /= tot;
            }
        }
        let px: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
        let py: Vec<f64> = (0..m).map(|j| p.iter().map(|r| r[j]).sum()).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for t in 0..m {
            // P(Y >= y_t | X = x_i)
            let s_y: f64 = py[t..].iter().sum();
            let mut second = 0.0;
            for i in 0..m {
                let s: f64 = p[i][t..].iter().sum::<f64>() / px[i];
                second += px[i] * s * s;
            }
            num += py[t] * (second - s_y * s_y);
            den += py[t] * s_y * (1.0 - s_y);
        }
        num / den
    }

    fn brute_m(h: &dyn Fn(f64, f64) -> f64, m: usize) -> f64 {
        let x: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let mut p = vec![vec![0.0; m]; m];
        let mut tot = 0.0;
        for i in 0..m {
            for j in 0..m {
                p[i][j] = h(x[i], x[j]);
                tot += p[i][j];
            }
        }
        let py: Vec<f64> = (0..m).map(|j| p.iter().map(|r| r[j]).sum::<f64>() / tot).collect();
        // mid-rank G so that the discrete G(Y) is centered like a uniform
        let mut g = vec![0.0; m];
        let mut acc = 0.0;
        for j in 0..m {
            g[j] = acc + py[j] / 2.0;
            acc += py[j];
        }
        let mut eg = 0.0;
        let mut eg2 = 0.0;
        let mut cond2 = 0.0;
        for row in &p {
            let px: f64 = row.iter().sum::<f64>() / tot;
            let c: f64 = row.iter().zip(&g).map(|(q, gj)| q / tot * gj).sum();
            eg += c;
            eg2 += row.iter().zip(&g).map(|(q, gj)| q / tot * gj * gj).sum::<f64>();
            cond2 += c * c / px;
        }
        (cond2 - eg * eg) / (eg2 - eg * eg)
    }

    #[test]
    fn independence_gives_zero() {
        let one = |_u: f64, _v: f64| 1.0;
        assert!(population_c(&one, 64).unwrap().abs() < 1e-12);
        assert!(population_m(&one, 64).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fgm_closed_forms_and_brute_force() {
        let h = fgm(0.6);
        let c = population_c(&h, DEFAULT_QUAD_ORDER).unwrap();
        let m = population_m(&h, DEFAULT_QUAD_ORDER).unwrap();
        assert!((c - 0.6f64.powi(2) / 15.0).abs() < 1e-10);
        assert!((m - 0.6f64.powi(2) / 9.0).abs() < 1e-10);
        assert!((c - brute_c(&h, 400)).abs() < 1e-4);
        assert!((m - brute_m(&h, 400)).abs() < 1e-4);
    }

    #[test]
    fn coscos_closed_form() {
        let t = 0.5;
        let h = move |u: f64, v: f64| 1.0 + t * (2.0 * PI * u).cos() * (2.0 * PI * v).cos();
        let c = population_c(&h, DEFAULT_QUAD_ORDER).unwrap();
        assert!((c - 3.0 * t * t / (8.0 * PI * PI)).abs() < 1e-9);
        assert!((c - brute_c(&h, 400)).abs() < 1e-4);
        // Spearman-blind, so M vanishes
        assert!(population_m(&h, DEFAULT_QUAD_ORDER).unwrap().abs() < 1e-10);
    }

    #[test]
    fn monotone_reparameterization_is_invariant() {
        // (X, Y) = (φ(U), φ(V)) with φ(u) = (u + u²)/2 has density
        // h(φ⁻¹(x), φ⁻¹(y)) / (φ'(φ⁻¹x) φ'(φ⁻¹y)).
        let inv = |x: f64| ((1.0 + 8.0 * x).sqrt() - 1.0) / 2.0;
        let dphi = |u: f64| 0.5 + u;
        let base = fgm(0.8);
        let moved = move |x: f64, y: f64| {
            let (u, v) = (inv(x), inv(y));
            base(u, v) / (dphi(u) * dphi(v))
        };
        let base = fgm(0.8);
        let a = population_c(&base, 256).unwrap();
        let b = population_c(&moved, 256).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        let a = population_m(&base, 256).unwrap();
        let b = population_m(&moved, 256).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn functional_dependence_limit() {
        // Y concentrated in a band of width σ around h(X) = X
        let band = |s: f64| {
            move |u: f64, v: f64| {
                let z = (v - u) / s;
                (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
            }
        };
        let values: Vec<f64> = [(0.2, 256), (0.05, 256), (0.01, 1024)]
            .iter()
            .map(|&(s, order)| population_c(&band(s), order).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
        // 1 − C shrinks in proportion to the band width
        assert!(1.0 - values[2] < 0.3 * (1.0 - values[1]), "{values:?}");
        assert!(values[2] > 0.95, "{values:?}");
    }

    #[test]
    fn order_checks() {
        let one = |_u: f64, _v: f64| 1.0;
        assert!(population_c(&one, 32).is_err());
        assert!(population_c(&one, 100).is_err());
        let neg = |u: f64, _v: f64| u - 0.5;
        assert!(matches!(population_c(&neg, 64), Err(Error::Numeric(_))));
    }
}
