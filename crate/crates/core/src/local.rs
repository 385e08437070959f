//! Statistics of adjacent pairs `(r_i, r_{i+1})` of the rank sequence: the
//! local copula process Ĉ_L, local Spearman, score-function statistics T̂_a,
//! M̂ and a local BKR analog.

use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::sample::RankData;
use crate::statistic::{Complexity, StatValue};

fn require_local(ranks: &RankData, name: &str) -> Result<()> {
    ranks.require_tie_free(name)?;
    if ranks.n() < 3 {
        return Err(Error::SampleTooSmall {
            n: ranks.n(),
            min: 3,
        });
    }
    Ok(())
}

fn grid_index(v: f64, n: usize) -> usize {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    ((v * n as f64 + 1e-9).floor() as usize).min(n)
}

/// `Ĉ_L(u, v1, v2) = (1/(n−1)) Σ_{i <= [nu]} 1(r_i/n <= v1, r_{i+1}/n <= v2)`.
pub fn local_copula_eval(ranks: &RankData, u: f64, v1: f64, v2: f64) -> Result<f64> {
    require_local(ranks, "local copula")?;
    let n = ranks.n();
    let last = grid_index(u, n).min(n - 1);
    let (k1, k2) = (grid_index(v1, n), grid_index(v2, n));
    let r = ranks.sequence();
    let count = (0..last).filter(|&i| r[i] <= k1 && r[i + 1] <= k2).count();
    Ok(count as f64 / (n - 1) as f64)
}

/// Ĉ_L(1, j/n, k/n) on the full n×n grid, as prefix counts.
#[derive(Debug, Clone)]
pub struct LocalProcessGrid {
    n: usize,
    counts: Vec<u32>,
}

impl LocalProcessGrid {
    pub fn new(ranks: &RankData) -> Result<Self> {
        require_local(ranks, "local copula")?;
        let n = ranks.n();
        let w = n + 1;
        let mut counts = vec![0u32; w * w];
        for p in ranks.sequence().windows(2) {
            counts[p[0] * w + p[1]] += 1;
        }
        for j in 0..=n {
            for k in 1..=n {
                counts[j * w + k] += counts[j * w + k - 1];
            }
        }
        for j in 1..=n {
            for k in 0..=n {
                counts[j * w + k] += counts[(j - 1) * w + k];
            }
        }
        Ok(LocalProcessGrid { n, counts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Ĉ_L(1, j/n, k/n)`.
    pub fn value(&self, j: usize, k: usize) -> f64 {
        let (j, k) = (j.min(self.n), k.min(self.n));
        self.counts[j * (self.n + 1) + k] as f64 / (self.n - 1) as f64
    }
}

/// `T̂_S^(L) = (12/(n−1)) Σ_{i<n} (r_i r_{i+1}/n² − 1/4)`.
pub fn local_spearman(ranks: &RankData) -> Result<StatValue> {
    require_local(ranks, "spearman-local")?;
    let n = ranks.n();
    let nf = n as f64;
    let s: f64 = ranks
        .sequence()
        .windows(2)
        .map(|w| (w[0] * w[1]) as f64 / (nf * nf) - 0.25)
        .sum();
    Ok(StatValue::new(
        "spearman-local",
        12.0 / (nf - 1.0) * s,
        0.5,
        n,
        Complexity::Linear,
    ))
}

/// Grid on which a score function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreGrid {
    /// `k/n`.
    N,
    /// `k/(n+1)`, for functions unbounded at 1.
    NPlusOne,
}

/// A strictly increasing score function `a` on (0,1).
#[derive(Clone)]
pub struct ScoreFunction {
    name: String,
    grid: ScoreGrid,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ScoreFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreFunction")
            .field("name", &self.name)
            .field("grid", &self.grid)
            .finish()
    }
}

impl ScoreFunction {
    pub fn identity() -> Self {
        ScoreFunction::custom("identity-local", ScoreGrid::N, |u| u)
    }

    /// `a = Φ⁻¹` on the `k/(n+1)` grid.
    pub fn normal_scores() -> Self {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        ScoreFunction::custom("normal-scores-local", ScoreGrid::NPlusOne, move |u| {
            normal.inverse_cdf(u)
        })
    }

    pub fn custom(
        name: impl Into<String>,
        grid: ScoreGrid,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScoreFunction {
            name: name.into(),
            grid,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `a(k/n)` or `a(k/(n+1))` for `k = 1..=n`.
    pub fn grid_values(&self, n: usize) -> Vec<f64> {
        let d = match self.grid {
            ScoreGrid::N => n as f64,
            ScoreGrid::NPlusOne => (n + 1) as f64,
        };
        (1..=n).map(|k| (self.f)(k as f64 / d)).collect()
    }
}

/// `T̂_a = [(1/(n−1)) Σ a(r_i)a(r_{i+1}) − ā²] / σ²(a)` with ā, σ²(a) the
/// mean and variance of `a` over the grid.
pub fn local_score_statistic(ranks: &RankData, a: &ScoreFunction) -> Result<StatValue> {
    require_local(ranks, a.name())?;
    let n = ranks.n();
    let nf = n as f64;
    let g = a.grid_values(n);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("{} is not finite on the grid", a.name())));
    }
    let mean = g.iter().sum::<f64>() / nf;
    let var = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    if var <= 1e-300 {
        return Err(Error::degenerate(format!(
            "score function {} is constant on the grid",
            a.name()
        )));
    }
    let cross: f64 = ranks
        .sequence()
        .windows(2)
        .map(|w| g[w[0] - 1] * g[w[1] - 1])
        .sum();
    let value = (cross / (nf - 1.0) - mean * mean) / var;
    Ok(StatValue::new(a.name(), value, 0.5, n, Complexity::Linear))
}

/// `T̂_BKR^(L) = (1/n²) Σ_{j,k} (Ĉ_L(1, j/n, k/n) − jk/n²)²`.
///
/// Computed in one O(n²) sweep in exact integers:
/// `n²(n−1)·D(j,k) = n²·count(j,k) − (n−1)·j·k`.
pub fn local_bkr(ranks: &RankData) -> Result<StatValue> {
    require_local(ranks, "bkr-local")?;
    let n = ranks.n();
    let r = ranks.sequence();
    // successor[j-1] = r_{i+1} for the i with r_i = j (none for j = r_n)
    let mut successor = vec![0usize; n];
    for w in r.windows(2) {
        successor[w[0] - 1] = w[1];
    }
    let ni = n as i64;
    let n2 = ni * ni;
    // counts and d stay below n³ in magnitude; squares are widened
    let mut counts = vec![0i64; n];
    let mut total: i128 = 0;
    for j in 1..=n {
        let s = successor[j - 1];
        if s > 0 {
            for c in &mut counts[s - 1..] {
                *c += n2;
            }
        }
        let step = (ni - 1) * j as i64;
        let mut row: i128 = 0;
        for (k, c) in counts.iter().enumerate() {
            let d = c - step * (k as i64 + 1);
            row += d as i128 * d as i128;
        }
        total += row;
    }
    let nf = n as f64;
    let scale = nf * nf * (nf - 1.0);
    let value = total as f64 / (scale * scale) / (nf * nf);
    Ok(StatValue::new("bkr-local", value, 1.0, n, Complexity::Quadratic))
}

/// `M̂ = 1 − (6/n) Σ_{i<n} (r_{i+1} − r_i)²/n²`.
pub fn m_hat(ranks: &RankData) -> Result<StatValue> {
    require_local(ranks, "m-hat")?;
    let n = ranks.n();
    let nf = n as f64;
    let s: u64 = ranks
        .sequence()
        .windows(2)
        .map(|w| {
            let d = w[0].abs_diff(w[1]) as u64;
            d * d
        })
        .sum();
    Ok(StatValue::new(
        "m-hat",
        1.0 - 6.0 / nf * s as f64 / (nf * nf),
        0.5,
        n,
        Complexity::Linear,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(s: &[usize]) -> RankData {
        RankData::from_sequence(s.to_vec()).unwrap()
    }

    fn random_ranks(n: usize, seed: u64) -> RankData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<usize> = (1..=n).collect();
        for i in (1..n).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        RankData::from_sequence(v).unwrap()
    }

    #[test]
    fn local_copula_examples() {
        let r = seq(&[1, 3, 2]);
        assert_eq!(local_copula_eval(&r, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(local_copula_eval(&r, 1.0, 1.0 / 3.0, 1.0).unwrap(), 0.5);
        assert_eq!(local_copula_eval(&r, 0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(local_copula_eval(&seq(&[2, 1]), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn grid_agrees_with_direct_evaluation() {
        let r = random_ranks(23, 4);
        let g = LocalProcessGrid::new(&r).unwrap();
        let n = 23;
        for j in 0..=n {
            for k in 0..=n {
                let direct =
                    local_copula_eval(&r, 1.0, j as f64 / n as f64, k as f64 / n as f64).unwrap();
                assert!((g.value(j, k) - direct).abs() < 1e-15);
            }
        }
        assert_eq!(g.value(n, n), 1.0);
    }

    #[test]
    fn local_spearman_identity_values() {
        // Σ_{i<100} i(i+1) = 333300
        let id: Vec<usize> = (1..=100).collect();
        let v = local_spearman(&seq(&id)).unwrap().value;
        let expected = 12.0 / 99.0 * (333300.0 / 1e4 - 99.0 / 4.0);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 1.04).abs() < 1e-12);
        let id: Vec<usize> = (1..=10_000).collect();
        assert!((local_spearman(&seq(&id)).unwrap().value - 1.0).abs() < 0.02);
    }

    #[test]
    fn local_bkr_small_instance() {
        // Ĉ_L grid for r = (1,3,2): pairs (1,3), (3,2); values /2 at
        // (j,k) ∈ {1..3}², minus jk/9, squared, summed, /9 gives 163/2916.
        let v = local_bkr(&seq(&[1, 3, 2])).unwrap().value;
        assert!((v - 163.0 / 2916.0).abs() < 1e-15);

        // brute force against the grid for a bigger sample
        let r = random_ranks(31, 8);
        let g = LocalProcessGrid::new(&r).unwrap();
        let n = 31.0;
        let mut s = 0.0;
        for j in 1..=31 {
            for k in 1..=31 {
                let d = g.value(j, k) - (j * k) as f64 / (n * n);
                s += d * d;
            }
        }
        assert!((local_bkr(&r).unwrap().value - s / (n * n)).abs() < 1e-15);
    }

    #[test]
    fn m_hat_identity_and_gap() {
        let n = 50usize;
        let id: Vec<usize> = (1..=n).collect();
        let nf = n as f64;
        let v = m_hat(&seq(&id)).unwrap().value;
        assert!((v - (1.0 - 6.0 * (nf - 1.0) / nf.powi(3))).abs() < 1e-15);
        for (n, seed) in [(100, 1), (100, 2), (1000, 3), (1000, 4)] {
            let r = random_ranks(n, seed);
            let gap = (m_hat(&r).unwrap().value - local_spearman(&r).unwrap().value).abs();
            assert!(gap <= 10.0 / n as f64, "{gap}");
        }
    }

    #[test]
    fn identity_score_close_to_local_spearman() {
        for (n, seed) in [(50, 1), (200, 2), (1000, 3)] {
            let r = random_ranks(n, seed);
            let a = local_score_statistic(&r, &ScoreFunction::identity()).unwrap().value;
            let b = local_spearman(&r).unwrap().value;
            assert!((a - b).abs() <= 10.0 / n as f64);
        }
    }

    #[test]
    fn normal_scores_at_functional_dependence() {
        let id: Vec<usize> = (1..=10_000).collect();
        let v = local_score_statistic(&seq(&id), &ScoreFunction::normal_scores())
            .unwrap()
            .value;
        assert!(v > 0.97 && v < 1.0, "{v}");
    }

    #[test]
    fn constant_score_is_degenerate() {
        let a = ScoreFunction::custom("flat", ScoreGrid::N, |_| 2.0);
        assert!(matches!(
            local_score_statistic(&seq(&[1, 2, 3]), &a),
            Err(Error::Degenerate(_))
        ));
    }

    proptest! {
        #[test]
        fn local_process_is_monotone(seq in Just((1..=20usize).collect::<Vec<_>>()).prop_shuffle()) {
            let g = LocalProcessGrid::new(&RankData::from_sequence(seq).unwrap()).unwrap();
            for j in 0..=20 {
                for k in 0..=20 {
                    let v = g.value(j, k);
                    prop_assert!((0.0..=1.0).contains(&v));
                    if j > 0 { prop_assert!(v >= g.value(j - 1, k)); }
                    if k > 0 { prop_assert!(v >= g.value(j, k - 1)); }
                }
            }
        }
    }
}
