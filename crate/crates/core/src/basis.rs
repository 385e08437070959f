//! Basis-coefficient statistics: Fourier coefficients T̂_ij, the truncated
//! BKR sum, Rademacher (Haar) scale coefficients and the selective scan.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::sample::RankData;
use crate::statistic::{Complexity, StatValue};

/// T̂_ij with its exact null variance λ_ij = 1/(π⁴i²j²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierCoefficient {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub null_variance: f64,
}

impl FourierCoefficient {
    pub fn standardized(&self) -> f64 {
        self.value / self.null_variance.sqrt()
    }
}

/// `λ_ij = 1/(π⁴ i² j²)`.
pub fn fourier_null_variance(i: usize, j: usize) -> f64 {
    let d = PI * PI * (i * j) as f64;
    1.0 / (d * d)
}

/// `cos(π m / n)` for `m = 0..2n`, so `cos(π i R/n)` is a table lookup.
struct CosTable {
    n: usize,
    table: Vec<f64>,
}

impl CosTable {
    fn new(n: usize) -> Self {
        let table = (0..2 * n)
            .map(|m| (PI * m as f64 / n as f64).cos())
            .collect();
        CosTable { n, table }
    }

    fn get(&self, i: usize, r: usize) -> f64 {
        self.table[(i * r) % (2 * self.n)]
    }
}

fn fourier_sum(
    xs: &[f64],
    ys: &[f64],
    i: usize,
    j: usize,
    n: usize,
) -> FourierCoefficient {
    let s: f64 = xs.iter().zip(ys).map(|(a, b)| a * b).sum();
    let nf = n as f64;
    FourierCoefficient {
        i,
        j,
        value: 2.0 / nf.sqrt() * s / (PI * PI * (i * j) as f64),
        null_variance: fourier_null_variance(i, j),
    }
}

/// `T̂_ij = (2/√n) Σ_k cos(πiR_k/n)·cos(πjS_k/n) / (π²·i·j)`.
pub fn fourier_coefficient(ranks: &RankData, i: usize, j: usize) -> Result<FourierCoefficient> {
    ranks.require_tie_free("fourier")?;
    if i == 0 || j == 0 {
        return Err(Error::argument("Fourier indices start at 1"));
    }
    let n = ranks.n();
    let table = CosTable::new(n);
    let (xs, ys): (Vec<f64>, Vec<f64>) = ranks
        .global_ranks()
        .map(|(r, s)| (table.get(i, r), table.get(j, s)))
        .unzip();
    Ok(fourier_sum(&xs, &ys, i, j, n))
}

/// All T̂_ij with `1 <= i, j <= m`, row-major in (i, j).
pub fn fourier_block(ranks: &RankData, m: usize) -> Result<Vec<FourierCoefficient>> {
    ranks.require_tie_free("fourier")?;
    if m == 0 {
        return Err(Error::argument("truncation order must be at least 1"));
    }
    let n = ranks.n();
    let table = CosTable::new(n);
    let columns = |pick: fn((usize, usize)) -> usize| -> Vec<Vec<f64>> {
        (1..=m)
            .map(|i| ranks.global_ranks().map(|p| table.get(i, pick(p))).collect())
            .collect()
    };
    let cx = columns(|p| p.0);
    let cy = columns(|p| p.1);
    let mut out = Vec::with_capacity(m * m);
    for (i, x) in cx.iter().enumerate() {
        for (j, y) in cy.iter().enumerate() {
            out.push(fourier_sum(x, y, i + 1, j + 1, n));
        }
    }
    Ok(out)
}

/// `Σ_{i,j<=m} T̂_ij²`, which approaches n·T̂_BKR as m grows.
pub fn truncated_bkr(ranks: &RankData, m: usize) -> Result<StatValue> {
    let value = fourier_block(ranks, m)?
        .iter()
        .map(|c| c.value * c.value)
        .sum();
    Ok(StatValue::new(
        format!("truncated-bkr:{m}"),
        value,
        0.0,
        ranks.n(),
        Complexity::Linear,
    ))
}

/// Rademacher scale coefficient Ŝ_{N,p1,p2} with its exact null variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RademacherCoefficient {
    pub scale: u32,
    pub p1: u64,
    pub p2: u64,
    pub value: f64,
    pub null_variance: f64,
}

impl RademacherCoefficient {
    pub fn standardized(&self) -> f64 {
        self.value / self.null_variance.sqrt()
    }
}

/// Tent on [0,1]: `t` up to ½, `1 − t` after, zero outside.
fn tent(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        t.min(1.0 - t)
    } else {
        0.0
    }
}

/// `λ₀(t) = tent(t) − ¼` on [0,1].
pub fn lambda0(t: f64) -> f64 {
    tent(t) - 0.25
}

/// Null variance of the √n-scaled coefficient at scale N: `v(N)²` with
/// `v(N) = Δ³/12 − Δ⁴/16`, `Δ = 2^-N`, the variance of `Δ·tent(U/Δ − p)`.
pub fn rademacher_null_variance(scale: u32) -> f64 {
    let d = (0.5f64).powi(scale as i32);
    let v = d.powi(3) / 12.0 - d.powi(4) / 16.0;
    v * v
}

/// `λ_p(k/n) = Δ·tent(2^N k/n − p)` centered by its grid mean, `k = 1..=n`.
fn lambda_grid(n: usize, scale: u32, p: u64) -> Vec<f64> {
    let cells = (2f64).powi(scale as i32);
    let width = 1.0 / cells;
    let nf = n as f64;
    let mut g: Vec<f64> = (1..=n)
        .map(|k| width * tent(cells * k as f64 / nf - p as f64))
        .collect();
    let mean = g.iter().sum::<f64>() / nf;
    for v in &mut g {
        *v -= mean;
    }
    g
}

fn check_cell(scale: u32, p: u64) -> Result<()> {
    if scale > 30 {
        return Err(Error::argument("Rademacher scale must be at most 30"));
    }
    if p >= 1u64 << scale {
        return Err(Error::argument(format!(
            "cell index {p} out of range 0..{} at scale {scale}",
            1u64 << scale
        )));
    }
    Ok(())
}

/// `Ŝ_{N,p1,p2} = (1/√n) Σ_k λ_{p1}(R_k/n)·λ_{p2}(S_k/n)`.
pub fn rademacher_coefficient(
    ranks: &RankData,
    scale: u32,
    p1: u64,
    p2: u64,
) -> Result<RademacherCoefficient> {
    ranks.require_tie_free("rademacher")?;
    check_cell(scale, p1)?;
    check_cell(scale, p2)?;
    let n = ranks.n();
    let gx = lambda_grid(n, scale, p1);
    let gy = if p1 == p2 {
        gx.clone()
    } else {
        lambda_grid(n, scale, p2)
    };
    Ok(rademacher_from_grids(ranks, &gx, &gy, scale, p1, p2))
}

fn rademacher_from_grids(
    ranks: &RankData,
    gx: &[f64],
    gy: &[f64],
    scale: u32,
    p1: u64,
    p2: u64,
) -> RademacherCoefficient {
    let s: f64 = ranks
        .global_ranks()
        .map(|(r, s)| gx[r - 1] * gy[s - 1])
        .sum();
    RademacherCoefficient {
        scale,
        p1,
        p2,
        value: s / (ranks.n() as f64).sqrt(),
        null_variance: rademacher_null_variance(scale),
    }
}

/// Which basis a scan walks, with its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanBasis {
    /// All (i, j) with `1 <= i, j <= max_order`, by `i + j` then `i`.
    Fourier { max_order: usize },
    /// Scales `0..=max_scale`, cells by `(p1, p2)` within a scale.
    Rademacher { max_scale: u32 },
}

/// Largest Rademacher scale a scan accepts (4^N coefficients per scale).
pub const MAX_SCAN_SCALE: u32 = 8;

/// How the overall alpha is split across the scan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationPolicy {
    /// α/2, α/4, ... with the remainder on the last coefficient.
    Geometric,
    /// α/K each.
    Bonferroni,
}

impl AllocationPolicy {
    pub fn allocate(self, alpha: f64, k: usize) -> Vec<f64> {
        match self {
            AllocationPolicy::Bonferroni => vec![alpha / k as f64; k],
            AllocationPolicy::Geometric => {
                let mut out = Vec::with_capacity(k);
                let mut left = alpha;
                for idx in 0..k {
                    if idx + 1 == k {
                        out.push(left);
                    } else {
                        let a = left / 2.0;
                        out.push(a);
                        left -= a;
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for AllocationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationPolicy::Geometric => "geometric",
            AllocationPolicy::Bonferroni => "bonferroni",
        })
    }
}

impl FromStr for AllocationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(AllocationPolicy::Geometric),
            "bonferroni" => Ok(AllocationPolicy::Bonferroni),
            other => Err(Error::argument(format!(
                "unknown allocation policy '{other}' (expected geometric or bonferroni)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub basis: &'static str,
    pub index: Vec<u64>,
    pub value: f64,
    pub std_value: f64,
    pub p_value: f64,
    pub alpha_alloc: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub policy: String,
    pub alpha: f64,
    pub entries: Vec<ScanEntry>,
}

impl ScanReport {
    pub fn any_rejected(&self) -> bool {
        self.entries.iter().any(|e| e.rejected)
    }

    /// Entry with the smallest p-value (first in scan order on ties).
    pub fn most_significant(&self) -> Option<&ScanEntry> {
        self.entries
            .iter()
            .reduce(|best, e| if e.p_value < best.p_value { e } else { best })
    }
}

/// Standardizes each coefficient by its null variance, walks the basis in
/// order of wiggliness and tests each at its allocated alpha, two-sided.
pub fn selective_scan(
    ranks: &RankData,
    basis: ScanBasis,
    alpha: f64,
    policy: AllocationPolicy,
) -> Result<ScanReport> {
    ranks.require_tie_free("selective scan")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::argument("alpha must lie in (0, 1)"));
    }
    // (basis, index, value, standardized)
    let mut coefs: Vec<(&'static str, Vec<u64>, f64, f64)> = Vec::new();
    match basis {
        ScanBasis::Fourier { max_order } => {
            let block = fourier_block(ranks, max_order)?;
            let mut order: Vec<&FourierCoefficient> = block.iter().collect();
            order.sort_by_key(|c| (c.i + c.j, c.i));
            for c in order {
                coefs.push((
                    "fourier",
                    vec![c.i as u64, c.j as u64],
                    c.value,
                    c.standardized(),
                ));
            }
        }
        ScanBasis::Rademacher { max_scale } => {
            if max_scale > MAX_SCAN_SCALE {
                return Err(Error::argument(format!(
                    "max scale {max_scale} exceeds {MAX_SCAN_SCALE}"
                )));
            }
            let n = ranks.n();
            for scale in 0..=max_scale {
                let grids: Vec<Vec<f64>> =
                    (0..1u64 << scale).map(|p| lambda_grid(n, scale, p)).collect();
                for (p1, gx) in grids.iter().enumerate() {
                    for (p2, gy) in grids.iter().enumerate() {
                        let c = rademacher_from_grids(ranks, gx, gy, scale, p1 as u64, p2 as u64);
                        coefs.push((
                            "rademacher",
                            vec![scale as u64, c.p1, c.p2],
                            c.value,
                            c.standardized(),
                        ));
                    }
                }
            }
        }
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let allocs = policy.allocate(alpha, coefs.len());
    let entries = coefs
        .into_iter()
        .zip(allocs)
        .map(|((basis, index, value, z), a)| {
            let p_value = (2.0 * normal.cdf(-z.abs())).min(1.0);
            ScanEntry {
                basis,
                index,
                value,
                std_value: z,
                p_value,
                alpha_alloc: a,
                rejected: p_value <= a,
            }
        })
        .collect();
    Ok(ScanReport {
        policy: policy.to_string(),
        alpha,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::bkr_statistic;
    use crate::sample::{rank_bilinear_statistic, EmpiricalCopula, HaarCell, Primitive, Sine};
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
    fn fourier_n2_hand_value() {
        let c = fourier_coefficient(&seq(&[1, 2]), 1, 1).unwrap();
        assert!((c.value - 2f64.sqrt() / (PI * PI)).abs() < 1e-15);
        assert!((c.null_variance * PI.powi(4) - 1.0).abs() < 1e-14);
        assert!((fourier_null_variance(2, 3) * PI.powi(4) * 36.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fourier_matches_bilinear_statistic() {
        // T̂_ij − 2·bilinear(sin πi·, sin πj·) = 2δ_iδ_j/(π²ij·n^{3/2}),
        // δ = 1 for odd index: the grid centering constants.
        for seed in 0..5 {
            let r = random_ranks(60, seed);
            let n = 60f64;
            for (i, j) in [(1, 1), (1, 2), (3, 1), (2, 4), (3, 5)] {
                let t = fourier_coefficient(&r, i, j).unwrap().value;
                let b = rank_bilinear_statistic(&Sine::new(i), &Sine::new(j), &r).unwrap();
                let odd = |k: usize| (k % 2) as f64;
                let corr = 2.0 * odd(i) * odd(j) / (PI * PI * (i * j) as f64 * n.powf(1.5));
                assert!((t - 2.0 * b - corr).abs() < 1e-10, "{i},{j}");
            }
        }
    }

    #[test]
    fn block_matches_single_coefficients() {
        let r = random_ranks(37, 3);
        let block = fourier_block(&r, 4).unwrap();
        for c in &block {
            let single = fourier_coefficient(&r, c.i, c.j).unwrap();
            assert!((c.value - single.value).abs() < 1e-14);
        }
        let m1 = truncated_bkr(&r, 1).unwrap().value;
        assert!((m1 - block[0].value.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn truncated_bkr_is_monotone_and_below_full_sum() {
        let r = random_ranks(200, 11);
        let full = 200.0 * bkr_statistic(&EmpiricalCopula::new(&r)).value;
        let mut prev = 0.0;
        for m in [1, 2, 5, 10, 20, 40] {
            let v = truncated_bkr(&r, m).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
        assert!(prev <= full * 1.05);
        assert!(prev >= 0.8 * full);
    }

    #[test]
    fn lambda0_values() {
        assert_eq!(lambda0(0.5), 0.25);
        assert_eq!(lambda0(0.0), -0.25);
        assert_eq!(lambda0(1.0), -0.25);
        assert!((rademacher_null_variance(0) - 1.0 / 2304.0).abs() < 1e-18);
    }

    #[test]
    fn rademacher_null_variance_matches_tent_moments() {
        // independent oracle: Var(Δ·tent(U/Δ)) by midpoint integration
        for scale in 0..4 {
            let d = (0.5f64).powi(scale);
            let m = 200_000;
            let (mut s1, mut s2) = (0.0, 0.0);
            for k in 0..m {
                let u = (k as f64 + 0.5) / m as f64;
                let t = u / d;
                let v = if t <= 1.0 { d * t.min(1.0 - t) } else { 0.0 };
                s1 += v;
                s2 += v * v;
            }
            let var = s2 / m as f64 - (s1 / m as f64).powi(2);
            let exact = rademacher_null_variance(scale as u32);
            assert!((var * var - exact).abs() < 1e-9 * exact.max(1e-12) + 1e-15, "{scale}");
        }
    }

    #[test]
    fn rademacher_equals_haar_bilinear_statistic() {
        let r = random_ranks(64, 5);
        for (scale, p1, p2) in [(0, 0, 0), (1, 0, 1), (2, 3, 1), (3, 5, 5)] {
            let c = rademacher_coefficient(&r, scale, p1, p2).unwrap();
            let a = HaarCell { scale, index: p1 };
            let b = HaarCell { scale, index: p2 };
            let v = rank_bilinear_statistic(&a, &b, &r).unwrap();
            assert!((c.value - v).abs() < 1e-14);
        }
        assert!(rademacher_coefficient(&r, 1, 2, 0).is_err());
    }

    #[test]
    fn rademacher_sign_matches_defining_integral() {
        // Points comonotone inside the lower-left quarter, independent elsewhere.
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                if k < 80 {
                    let t = rng.random::<f64>() * 0.5;
                    (t, t)
                } else {
                    (rng.random::<f64>(), 0.5 + 0.5 * rng.random::<f64>())
                }
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let mut sorted = ys.clone();
        sorted.sort_by(f64::total_cmp);
        let s: Vec<usize> = ys
            .iter()
            .map(|y| sorted.iter().filter(|&&w| w <= *y).count())
            .collect();
        let r = RankData::from_sequence(s.clone()).unwrap();

        for (scale, p1, p2) in [(1u32, 0u64, 0u64), (1, 0, 1), (1, 1, 0), (0, 0, 0)] {
            let a = HaarCell { scale, index: p1 };
            let b = HaarCell { scale, index: p2 };
            // √n·∬(Ĉ − uv)ΨΨ: Ĉ is constant on grid cells, Ψ integrated on each
            // cell by a 16-point midpoint rule (exact: breakpoints sit on the grid).
            let cell_int = |f: &HaarCell, j: usize| -> f64 {
                (0..16)
                    .map(|q| f.eval((j as f64 + (q as f64 + 0.5) / 16.0) / n as f64))
                    .sum::<f64>()
                    / (16.0 * n as f64)
            };
            let ia: Vec<f64> = (0..n).map(|j| cell_int(&a, j)).collect();
            let ib: Vec<f64> = (0..n).map(|k| cell_int(&b, k)).collect();
            let mut integral = 0.0;
            for j in 1..=n {
                for k in 1..=n {
                    let c = s[..j].iter().filter(|&&v| v <= k).count() as f64 / n as f64;
                    // cell [j/n, (j+1)/n) carries Ĉ(j/n, ·); the last cell is empty
                    if j < n && k < n {
                        integral += c * ia[j] * ib[k];
                    }
                }
            }
            let moment = |f: &HaarCell| -> f64 {
                let m = 100_000;
                (0..m)
                    .map(|q| {
                        let u = (q as f64 + 0.5) / m as f64;
                        u * f.eval(u)
                    })
                    .sum::<f64>()
                    / m as f64
            };
            integral -= moment(&a) * moment(&b);
            let brute = (n as f64).sqrt() * integral;
            let c = rademacher_coefficient(&r, scale, p1, p2).unwrap().value;
            assert!(
                (c - brute).abs() < 0.02 * c.abs().max(1e-3),
                "N={scale} p=({p1},{p2}): {c} vs {brute}"
            );
        }
        let c = rademacher_coefficient(&r, 1, 0, 0).unwrap().value;
        assert!(c > 0.0);
    }

    #[test]
    fn geometric_and_bonferroni_allocations() {
        let g = AllocationPolicy::Geometric.allocate(0.05, 4);
        let expected = [0.025, 0.0125, 0.00625, 0.00625];
        for (a, e) in g.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!((g.iter().sum::<f64>() - 0.05).abs() < 1e-15);
        assert_eq!(AllocationPolicy::Geometric.allocate(0.05, 1), vec![0.05]);
        let b = AllocationPolicy::Bonferroni.allocate(0.05, 5);
        assert!(b.iter().all(|&a| (a - 0.01).abs() < 1e-15));
        assert!("holm".parse::<AllocationPolicy>().is_err());
    }

    #[test]
    fn scan_order_and_budget() {
        let r = random_ranks(100, 9);
        let rep = selective_scan(&r, ScanBasis::Fourier { max_order: 3 }, 0.05, AllocationPolicy::Geometric)
            .unwrap();
        let idx: Vec<Vec<u64>> = rep.entries.iter().map(|e| e.index.clone()).collect();
        assert_eq!(
            idx,
            vec![
                vec![1, 1],
                vec![1, 2],
                vec![2, 1],
                vec![1, 3],
                vec![2, 2],
                vec![3, 1],
                vec![2, 3],
                vec![3, 2],
                vec![3, 3]
            ]
        );
        let total: f64 = rep.entries.iter().map(|e| e.alpha_alloc).sum();
        assert!(total <= 0.05 + 1e-15);

        let rep = selective_scan(&r, ScanBasis::Rademacher { max_scale: 2 }, 0.05, AllocationPolicy::Bonferroni)
            .unwrap();
        assert_eq!(rep.entries.len(), 1 + 4 + 16);
        assert_eq!(rep.entries[1].index, vec![1, 0, 0]);
        assert_eq!(rep.entries[4].index, vec![1, 1, 1]);
        for e in &rep.entries {
            let c = rademacher_coefficient(&r, e.index[0] as u32, e.index[1], e.index[2]).unwrap();
            assert!((c.standardized() - e.std_value).abs() < 1e-12);
        }
        assert!(selective_scan(&r, ScanBasis::Fourier { max_order: 2 }, 1.5, AllocationPolicy::Geometric).is_err());
    }

    #[test]
    fn scan_rejects_strong_signal() {
        let r = seq(&(1..=300).collect::<Vec<_>>());
        let rep = selective_scan(&r, ScanBasis::Fourier { max_order: 2 }, 0.05, AllocationPolicy::Geometric)
            .unwrap();
        assert!(rep.entries[0].rejected);
        assert_eq!(rep.most_significant().unwrap().index, vec![1, 1]);
    }
}
