use rand::Rng;

use super::PairedSample;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamKey};

/// Ranks of a paired sample.
///
/// `x_ranks[i]`/`y_ranks[i]` are the global ranks `(R_i, S_i)` of observation
/// `i`; `sequence()` is `r_1..r_n`, the Y-rank of the pair holding the k-th
/// smallest X. Y ranks use the max-rank convention `#{j : Y_j <= y}`; X ties
/// are broken at random from the caller's seed, so `x_ranks` is always a
/// permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankData {
    x_ranks: Vec<usize>,
    y_ranks: Vec<usize>,
    sequence: Vec<usize>,
    upper_counts: Vec<usize>,
    had_x_ties: bool,
    had_y_ties: bool,
    tie_break_seed: Option<u64>,
}

/// Ranks `sample`; `tie_break_seed` is mandatory when X has ties.
pub fn compute_ranks(sample: &PairedSample, tie_break_seed: Option<u64>) -> Result<RankData> {
    let n = sample.n();
    let xs = sample.xs();
    let ys = sample.ys();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    let had_x_ties = order.windows(2).any(|w| xs[w[0]] == xs[w[1]]);
    if had_x_ties {
        let seed = tie_break_seed.ok_or(Error::TieBreakSeedRequired)?;
        let mut rng = StreamKey::new(seed, Domain::TieBreak, 0).rng();
        let keys: Vec<u64> = (0..n).map(|_| rng.random()).collect();
        order.sort_unstable_by(|&a, &b| {
            xs[a]
                .total_cmp(&xs[b])
                .then(keys[a].cmp(&keys[b]))
                .then(a.cmp(&b))
        });
    }
    let mut x_ranks = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        x_ranks[i] = k + 1;
    }

    let mut by_y: Vec<usize> = (0..n).collect();
    by_y.sort_unstable_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let mut y_ranks = vec![0; n];
    let mut upper = vec![0; n];
    let mut had_y_ties = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ys[by_y[end]] == ys[by_y[start]] {
            end += 1;
        }
        if end - start > 1 {
            had_y_ties = true;
        }
        for &i in &by_y[start..end] {
            y_ranks[i] = end;
            upper[i] = n - start;
        }
        start = end;
    }

    let sequence = order.iter().map(|&i| y_ranks[i]).collect();
    let upper_counts = order.iter().map(|&i| upper[i]).collect();
    Ok(RankData {
        x_ranks,
        y_ranks,
        sequence,
        upper_counts,
        had_x_ties,
        had_y_ties,
        tie_break_seed,
    })
}

impl RankData {
    /// Tie-free ranks with `R_i = i` and `S_i = sequence[i-1]`.
    pub fn from_sequence(sequence: Vec<usize>) -> Result<Self> {
        let n = sequence.len();
        if n < 2 {
            return Err(Error::SampleTooSmall { n, min: 2 });
        }
        let mut seen = vec![false; n + 1];
        for &r in &sequence {
            if r == 0 || r > n || seen[r] {
                return Err(Error::argument("sequence is not a permutation of 1..=n"));
            }
            seen[r] = true;
        }
        Ok(RankData {
            x_ranks: (1..=n).collect(),
            y_ranks: sequence.clone(),
            upper_counts: sequence.iter().map(|&r| n + 1 - r).collect(),
            sequence,
            had_x_ties: false,
            had_y_ties: false,
            tie_break_seed: None,
        })
    }

    pub fn n(&self) -> usize {
        self.sequence.len()
    }

    pub fn x_ranks(&self) -> &[usize] {
        &self.x_ranks
    }

    pub fn y_ranks(&self) -> &[usize] {
        &self.y_ranks
    }

    /// `(R_i, S_i)` pairs in observation order.
    pub fn global_ranks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.x_ranks.iter().copied().zip(self.y_ranks.iter().copied())
    }

    /// `r_1..r_n`.
    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    /// `l_i = #{j : Y_j >= Y_(i)}` in X order.
    pub fn upper_counts(&self) -> &[usize] {
        &self.upper_counts
    }

    pub fn had_x_ties(&self) -> bool {
        self.had_x_ties
    }

    pub fn had_y_ties(&self) -> bool {
        self.had_y_ties
    }

    pub fn tie_break_seed(&self) -> Option<u64> {
        self.tie_break_seed
    }

    pub(crate) fn require_tie_free(&self, statistic: &str) -> Result<()> {
        if self.had_y_ties {
            return Err(Error::TiesUnsupported {
                statistic: statistic.to_string(),
            });
        }
        Ok(())
    }
}
