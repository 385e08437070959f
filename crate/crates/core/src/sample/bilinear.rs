use std::f64::consts::PI;

use super::RankData;
use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Simpson panels used for `A(u) = ∫_0^u a` when no closed form is known.
pub const SIMPSON_PANELS: usize = 1024;

/// An integrable function on `[0,1]`, optionally with a closed-form
/// antiderivative `A(u) = ∫_0^u a`.
pub trait Primitive: Sync {
    fn eval(&self, u: f64) -> f64;

    fn antiderivative(&self, _u: f64) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64 + Sync> Primitive for F {
    fn eval(&self, u: f64) -> f64 {
        self(u)
    }
}

/// `amplitude · sin(π·freq·u)`.
#[derive(Debug, Clone, Copy)]
pub struct Sine {
    pub freq: usize,
    pub amplitude: f64,
}

impl Sine {
    pub fn new(freq: usize) -> Self {
        Sine {
            freq,
            amplitude: 1.0,
        }
    }
}

impl Primitive for Sine {
    fn eval(&self, u: f64) -> f64 {
        self.amplitude * (PI * self.freq as f64 * u).sin()
    }

    fn antiderivative(&self, u: f64) -> Option<f64> {
        let w = PI * self.freq as f64;
        Some(self.amplitude * (1.0 - (w * u).cos()) / w)
    }
}

/// Rademacher/Haar cell function: `sgn(w − ½)` with `w = 2^N·u − p` on the
/// cell `[p·2^-N, (p+1)·2^-N]`, zero elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct HaarCell {
    pub scale: u32,
    pub index: u64,
}

impl HaarCell {
    fn local(&self, u: f64) -> f64 {
        (2f64).powi(self.scale as i32) * u - self.index as f64
    }

    pub fn width(&self) -> f64 {
        (0.5f64).powi(self.scale as i32)
    }
}

impl Primitive for HaarCell {
    fn eval(&self, u: f64) -> f64 {
        let w = self.local(u);
        if !(0.0..=1.0).contains(&w) {
            0.0
        } else if w < 0.5 {
            -1.0
        } else if w > 0.5 {
            1.0
        } else {
            0.0
        }
    }

    fn antiderivative(&self, u: f64) -> Option<f64> {
        let w = self.local(u);
        if !(0.0..=1.0).contains(&w) {
            return Some(0.0);
        }
        Some(-self.width() * w.min(1.0 - w))
    }
}

/// `Ā(k/n)` for `k = 1..=n`, where `A(u) = ∫_0^u a` and the centering
/// subtracts the grid mean `(1/n)Σ_k A(k/n)`.
pub fn centered_primitive_grid(a: &dyn Primitive, n: usize) -> Result<Vec<f64>> {
    let nf = n as f64;
    let mut grid: Vec<f64> = (1..=n)
        .map(|k| {
            let u = k as f64 / nf;
            a.antiderivative(u)
                .unwrap_or_else(|| simpson(|t| a.eval(t), 0.0, u, SIMPSON_PANELS))
        })
        .collect();
    if let Some(bad) = grid.iter().position(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "antiderivative is not finite at u = {}/{n}",
            bad + 1
        )));
    }
    let mean = grid.iter().sum::<f64>() / nf;
    for g in &mut grid {
        *g -= mean;
    }
    Ok(grid)
}

/// Precomputed centered primitives for a fixed `n`, so repeated
/// evaluations only cost O(n).
#[derive(Debug, Clone)]
pub struct RankBilinear {
    a_grid: Vec<f64>,
    b_grid: Vec<f64>,
}

impl RankBilinear {
    pub fn new(a: &dyn Primitive, b: &dyn Primitive, n: usize) -> Result<Self> {
        Ok(RankBilinear {
            a_grid: centered_primitive_grid(a, n)?,
            b_grid: centered_primitive_grid(b, n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.a_grid.len()
    }

    /// `(1/√n) Σ_k Ā(R_k/n)·B̄(S_k/n)`.
    pub fn evaluate(&self, ranks: &RankData) -> Result<f64> {
        if ranks.n() != self.n() {
            return Err(Error::argument(format!(
                "prepared for n = {} but ranks have n = {}",
                self.n(),
                ranks.n()
            )));
        }
        ranks.require_tie_free("rank bilinear statistic")?;
        let s: f64 = ranks
            .global_ranks()
            .map(|(r, s)| self.a_grid[r - 1] * self.b_grid[s - 1])
            .sum();
        Ok(s / (self.n() as f64).sqrt())
    }
}

/// The rank form of `∬ T_n(u,v) a(u) b(v) du dv`.
pub fn rank_bilinear_statistic(
    a: &dyn Primitive,
    b: &dyn Primitive,
    ranks: &RankData,
) -> Result<f64> {
    RankBilinear::new(a, b, ranks.n())?.evaluate(ranks)
}
