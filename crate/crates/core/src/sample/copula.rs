use std::sync::OnceLock;

use super::RankData;

/// Largest `n` for which the full prefix-count grid is materialised.
const GRID_LIMIT: usize = 2048;

/// The empirical copula `Ĉ(j/n, k/n) = #{i : R_i <= j, S_i <= k} / n`,
/// evaluated as a right-continuous step function on `[0,1]²`.
///
/// Stored as rank pairs; the `(n+1)²` prefix-count grid is only built on the
/// first point evaluation and only for moderate `n`.
#[derive(Debug)]
pub struct EmpiricalCopula {
    n: usize,
    /// S of the point with R = j, at index j - 1.
    s_by_r: Vec<usize>,
    /// #{i : S_i <= k} at index k.
    y_margin: Vec<usize>,
    grid: OnceLock<Vec<u32>>,
    discrepancy: OnceLock<GridDiscrepancy>,
}

/// Summary of `D(j,k) = Ĉ(j/n,k/n) − Ĉ₁(j/n)Ĉ₂(k/n)` over the n×n grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDiscrepancy {
    pub sum_sq: f64,
    pub max_abs: f64,
}

impl EmpiricalCopula {
    pub fn new(ranks: &RankData) -> Self {
        let n = ranks.n();
        let mut s_by_r = vec![0; n];
        let mut y_margin = vec![0; n + 1];
        for (r, s) in ranks.global_ranks() {
            s_by_r[r - 1] = s;
            y_margin[s] += 1;
        }
        for k in 1..=n {
            y_margin[k] += y_margin[k - 1];
        }
        EmpiricalCopula {
            n,
            s_by_r,
            y_margin,
            grid: OnceLock::new(),
            discrepancy: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn index(&self, u: f64) -> usize {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        ((u * self.n as f64 + 1e-9).floor() as usize).min(self.n)
    }

    /// `#{i : R_i <= j, S_i <= k}`.
    pub fn count(&self, j: usize, k: usize) -> usize {
        let (j, k) = (j.min(self.n), k.min(self.n));
        if self.n <= GRID_LIMIT {
            let grid = self.grid.get_or_init(|| self.build_grid());
            grid[j * (self.n + 1) + k] as usize
        } else {
            self.s_by_r[..j].iter().filter(|&&s| s <= k).count()
        }
    }

    fn build_grid(&self) -> Vec<u32> {
        let w = self.n + 1;
        let mut grid = vec![0u32; w * w];
        for j in 1..=self.n {
            let s = self.s_by_r[j - 1];
            for k in 0..=self.n {
                grid[j * w + k] = grid[(j - 1) * w + k] + u32::from(k >= s);
            }
        }
        grid
    }

    /// `Ĉ(u, v)`, with arguments clamped to `[0,1]`.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.count(self.index(u), self.index(v)) as f64 / self.n as f64
    }

    /// First margin `Ĉ₁(j/n)`; always `j/n` because X ranks form a permutation.
    pub fn margin_x(&self, j: usize) -> f64 {
        j.min(self.n) as f64 / self.n as f64
    }

    /// Second margin `Ĉ₂(k/n) = #{i : S_i <= k}/n`.
    pub fn margin_y(&self, k: usize) -> f64 {
        self.y_margin[k.min(self.n)] as f64 / self.n as f64
    }

    /// Sum of squares and max absolute value of the grid discrepancy, in a
    /// single O(n²) sweep with O(n) memory.
    pub fn discrepancy(&self) -> GridDiscrepancy {
        *self.discrepancy.get_or_init(|| {
            integer_discrepancy(&self.s_by_r, &self.y_margin[1..])
        })
    }
}

/// Exact integer sweep: n²·D(j,k) = n·count(j,k) − j·margin[k-1].
fn integer_discrepancy(s_by_r: &[usize], margin: &[usize]) -> GridDiscrepancy {
    let n = s_by_r.len();
    let ni = n as i64;
    let mut counts = vec![0i64; n];
    let mut total: u128 = 0;
    let mut max_abs: i64 = 0;
    let margin: Vec<i64> = margin.iter().map(|&m| m as i64).collect();
    // |d| <= n², so a block of this many squares cannot overflow i64
    let block = (i64::MAX as u64 / (ni as u64).pow(4).max(1)).clamp(1, n as u64) as usize;
    for j in 1..=n {
        for c in &mut counts[s_by_r[j - 1] - 1..] {
            *c += ni;
        }
        let ji = j as i64;
        for (cs, ms) in counts.chunks(block).zip(margin.chunks(block)) {
            let mut part: i64 = 0;
            let (mut hi, mut lo) = (0i64, 0i64);
            for (c, m) in cs.iter().zip(ms) {
                let d = c - ji * m;
                part += d * d;
                hi = hi.max(d);
                lo = lo.min(d);
            }
            total += part as u128;
            max_abs = max_abs.max(hi).max(-lo);
        }
    }
    let n2 = (n * n) as f64;
    GridDiscrepancy {
        sum_sq: total as f64 / (n2 * n2),
        max_abs: max_abs as f64 / n2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{compute_ranks, PairedSample};
    use proptest::prelude::*;

    fn copula(seq: &[usize]) -> EmpiricalCopula {
        EmpiricalCopula::new(&RankData::from_sequence(seq.to_vec()).unwrap())
    }

    #[test]
    fn two_point_examples() {
        let c = copula(&[1, 2]);
        assert_eq!(c.eval(0.5, 0.5), 0.5);
        assert_eq!(c.eval(1.0, 1.0), 1.0);
        let c = copula(&[2, 1]);
        assert_eq!(c.eval(0.5, 0.5), 0.0);
        assert_eq!(c.eval(1.0, 1.0), 1.0);
    }

    #[test]
    fn clamps_and_boundaries() {
        let c = copula(&[3, 1, 2]);
        assert_eq!(c.eval(-1.0, 0.5), 0.0);
        assert_eq!(c.eval(0.5, 0.0), 0.0);
        assert_eq!(c.eval(2.0, 7.0), 1.0);
        // right-continuity: value just below a grid line equals the lower cell
        assert_eq!(c.eval(1.0 / 3.0 - 1e-6, 1.0), 0.0);
        assert_eq!(c.eval(1.0 / 3.0, 1.0), 1.0 / 3.0);
    }

    #[test]
    fn large_n_counts_without_grid() {
        let n = GRID_LIMIT + 5;
        let seq: Vec<usize> = (1..=n).rev().collect();
        let c = copula(&seq);
        assert_eq!(c.count(n, n), n);
        assert_eq!(c.count(1, n), 1);
        assert_eq!(c.count(1, n - 1), 0);
    }

    #[test]
    fn discrepancy_matches_pointwise_grid() {
        let c = copula(&[4, 1, 5, 2, 3]);
        let n = 5;
        let mut ss = 0.0;
        let mut mx = 0.0f64;
        for j in 1..=n {
            for k in 1..=n {
                let d = c.count(j, k) as f64 / 5.0 - c.margin_x(j) * c.margin_y(k);
                ss += d * d;
                mx = mx.max(d.abs());
            }
        }
        let g = c.discrepancy();
        assert!((g.sum_sq - ss).abs() < 1e-15);
        assert!((g.max_abs - mx).abs() < 1e-15);
    }

    #[test]
    fn tied_y_margin() {
        let s = PairedSample::new(vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 1.0]).unwrap();
        let c = EmpiricalCopula::new(&compute_ranks(&s, None).unwrap());
        assert_eq!(c.margin_y(1), 1.0 / 3.0);
        assert_eq!(c.margin_y(2), 1.0 / 3.0);
        assert_eq!(c.margin_y(3), 1.0);
    }

    proptest! {
        #[test]
        fn monotone_with_uniform_margins(seq in Just((1..=30usize).collect::<Vec<_>>()).prop_shuffle()) {
            let n = seq.len();
            let c = copula(&seq);
            for j in 0..=n {
                prop_assert_eq!(c.count(j, n), j);
                prop_assert_eq!(c.count(n, j), j);
                prop_assert_eq!(c.count(0, j), 0);
                for k in 1..=n {
                    prop_assert!(c.count(j, k) >= c.count(j, k - 1));
                    if j > 0 {
                        prop_assert!(c.count(j, k) >= c.count(j - 1, k));
                    }
                }
            }
        }
    }
}
