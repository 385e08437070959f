//! Global rank statistics: Chatterjee's coefficient, Spearman's correlation,
//! the Blum–Kiefer–Rosenblatt statistic and the sup-norm statistic.

use crate::error::{Error, Result};
use crate::sample::{EmpiricalCopula, RankData};
use crate::statistic::{Complexity, StatValue};

/// Chatterjee's Ĉₙ.
///
/// Without Y ties this is `1 − 3Σ|r_{i+1} − r_i| / (n² − 1)`; with ties the
/// general form `1 − nΣ|r_{i+1} − r_i| / (2Σ l_i(n − l_i))` is used.
pub fn chatterjee_cn(ranks: &RankData) -> Result<StatValue> {
    let n = ranks.n();
    let r = ranks.sequence();
    let abs_diff: u64 = r
        .windows(2)
        .map(|w| w[0].abs_diff(w[1]) as u64)
        .sum();
    let nf = n as f64;
    let value = if ranks.had_y_ties() {
        let denom: u64 = ranks
            .upper_counts()
            .iter()
            .map(|&l| (l * (n - l)) as u64)
            .sum();
        if denom == 0 {
            return Err(Error::degenerate("Y is constant"));
        }
        1.0 - nf * abs_diff as f64 / (2.0 * denom as f64)
    } else {
        1.0 - 3.0 * abs_diff as f64 / (nf * nf - 1.0)
    };
    Ok(StatValue::new("chatterjee", value, 0.5, n, Complexity::Linear))
}

/// Sample Spearman correlation: Pearson correlation of the rank pairs.
pub fn spearman_ts(ranks: &RankData) -> Result<StatValue> {
    ranks.require_tie_free("spearman")?;
    let n = ranks.n();
    let nf = n as f64;
    let mean = (nf + 1.0) / 2.0;
    let cross: f64 = ranks
        .global_ranks()
        .map(|(r, s)| (r as f64 - mean) * (s as f64 - mean))
        .sum();
    // both margins are permutations, so both variances are n(n²−1)/12
    let var = nf * (nf * nf - 1.0) / 12.0;
    Ok(StatValue::new("spearman", cross / var, 0.5, n, Complexity::Linear))
}

/// `(12/n) Σ_i (i·r_i/n² − 1/4)`, the rank-sequence form of T̂_S.
pub fn spearman_rank_form(ranks: &RankData) -> f64 {
    let nf = ranks.n() as f64;
    let s: f64 = ranks
        .sequence()
        .iter()
        .enumerate()
        .map(|(i, &r)| (i + 1) as f64 * r as f64 / (nf * nf) - 0.25)
        .sum();
    12.0 / nf * s
}

/// T̂_BKR = (1/n²) Σ_{j,k} (Ĉ(j/n,k/n) − Ĉ₁(j/n)Ĉ₂(k/n))².
pub fn bkr_statistic(copula: &EmpiricalCopula) -> StatValue {
    let n = copula.n();
    let nf = n as f64;
    let value = copula.discrepancy().sum_sq / (nf * nf);
    StatValue::new("bkr", value, 1.0, n, Complexity::Quadratic)
}

/// T̂_K = max_{j,k} |Ĉ(j/n,k/n) − Ĉ₁(j/n)Ĉ₂(k/n)|.
pub fn kolmogorov_tk(copula: &EmpiricalCopula) -> StatValue {
    StatValue::new(
        "kolmogorov",
        copula.discrepancy().max_abs,
        0.5,
        copula.n(),
        Complexity::Quadratic,
    )
}
