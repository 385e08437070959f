//! Statistic identifiers, values and dispatch.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Serialize, Serializer};

use crate::basis::{fourier_coefficient, rademacher_coefficient, truncated_bkr};
use crate::error::{Error, Result};
use crate::functional::isotonic_ch;
use crate::global::{bkr_statistic, chatterjee_cn, kolmogorov_tk, spearman_ts};
use crate::local::{local_bkr, local_score_statistic, local_spearman, m_hat, ScoreFunction};
use crate::sample::{compute_ranks, EmpiricalCopula, PairedSample, RankData};

/// Cost of a statistic kernel given ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Complexity {
    Linear,
    Linearithmic,
    Quadratic,
}

impl Complexity {
    pub fn label(self) -> &'static str {
        match self {
            Complexity::Linear => "O(n)",
            Complexity::Linearithmic => "O(n log n)",
            Complexity::Quadratic => "O(n²)",
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Complexity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// A computed statistic.
///
/// `scale_exponent` is the power of n under which the value has a
/// non-degenerate null limit (0.5: √n·value, 1.0: n·value, 0.0: value itself).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatValue {
    pub name: String,
    pub value: f64,
    pub scale_exponent: f64,
    pub n: usize,
    pub complexity: Complexity,
}

impl StatValue {
    pub(crate) fn new(
        name: impl Into<String>,
        value: f64,
        scale_exponent: f64,
        n: usize,
        complexity: Complexity,
    ) -> Self {
        StatValue {
            name: name.into(),
            value,
            scale_exponent,
            n,
            complexity,
        }
    }

    /// `n^scale_exponent · value`.
    pub fn scaled(&self) -> f64 {
        (self.n as f64).powf(self.scale_exponent) * self.value
    }
}

/// Which tail of the null distribution counts as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Upper,
    TwoSided,
}

/// Default truncation order for `truncated-bkr`.
pub const DEFAULT_TRUNCATION: usize = 10;

/// Every statistic that can be named on the command line or in the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Chatterjee,
    Spearman,
    Bkr,
    Kolmogorov,
    SpearmanLocal,
    NormalScoresLocal,
    MHat,
    BkrLocal,
    TruncatedBkr { m: usize },
    /// Standardized Fourier coefficient T̂_ij/√λ_ij.
    Fourier { i: usize, j: usize },
    /// Standardized Rademacher coefficient.
    Rademacher { scale: u32, p1: u64, p2: u64 },
    IsotonicCh,
}

pub(crate) const VALID_IDS: &str = "chatterjee, spearman, bkr, kolmogorov, spearman-local, \
normal-scores-local, m-hat, bkr-local, truncated-bkr[:M], fourier:i:j, rademacher:N:p1:p2, isotonic-ch";

impl Statistic {
    pub fn tail(self) -> Tail {
        match self {
            Statistic::Bkr
            | Statistic::Kolmogorov
            | Statistic::BkrLocal
            | Statistic::TruncatedBkr { .. }
            | Statistic::IsotonicCh => Tail::Upper,
            _ => Tail::TwoSided,
        }
    }

    pub fn complexity(self) -> Complexity {
        match self {
            Statistic::Bkr | Statistic::Kolmogorov | Statistic::BkrLocal => Complexity::Quadratic,
            Statistic::IsotonicCh => Complexity::Linearithmic,
            _ => Complexity::Linear,
        }
    }

    /// Power of n under which the value has a non-degenerate null limit.
    pub fn scale_exponent(self) -> f64 {
        match self {
            Statistic::Bkr | Statistic::BkrLocal => 1.0,
            Statistic::TruncatedBkr { .. }
            | Statistic::Fourier { .. }
            | Statistic::Rademacher { .. }
            | Statistic::IsotonicCh => 0.0,
            _ => 0.5,
        }
    }

    /// True when √n·value has a Gaussian null limit jointly with Lₙ, which is
    /// what a Pitman efficiency needs.
    pub fn has_gaussian_limit(self) -> bool {
        !matches!(
            self,
            Statistic::Bkr
                | Statistic::Kolmogorov
                | Statistic::BkrLocal
                | Statistic::TruncatedBkr { .. }
                | Statistic::IsotonicCh
        )
    }

    pub fn evaluate(self, input: &StatInput<'_>) -> Result<StatValue> {
        let ranks = input.ranks;
        let mut v = match self {
            Statistic::Chatterjee => chatterjee_cn(ranks)?,
            Statistic::Spearman => spearman_ts(ranks)?,
            Statistic::Bkr => bkr_statistic(input.copula()),
            Statistic::Kolmogorov => kolmogorov_tk(input.copula()),
            Statistic::SpearmanLocal => local_spearman(ranks)?,
            Statistic::NormalScoresLocal => {
                local_score_statistic(ranks, &ScoreFunction::normal_scores())?
            }
            Statistic::MHat => m_hat(ranks)?,
            Statistic::BkrLocal => local_bkr(ranks)?,
            Statistic::TruncatedBkr { m } => truncated_bkr(ranks, m)?,
            Statistic::Fourier { i, j } => {
                let c = fourier_coefficient(ranks, i, j)?;
                StatValue::new("", c.standardized(), 0.0, ranks.n(), Complexity::Linear)
            }
            Statistic::Rademacher { scale, p1, p2 } => {
                let c = rademacher_coefficient(ranks, scale, p1, p2)?;
                StatValue::new("", c.standardized(), 0.0, ranks.n(), Complexity::Linear)
            }
            Statistic::IsotonicCh => isotonic_ch(input.sample)?,
        };
        v.name = self.to_string();
        debug_assert_eq!(v.scale_exponent, self.scale_exponent());
        if !v.value.is_finite() {
            return Err(Error::numeric(format!("{} is not finite", v.name)));
        }
        Ok(v)
    }

    /// Ranks `sample` and evaluates.
    pub fn compute(self, sample: &PairedSample, tie_break_seed: Option<u64>) -> Result<StatValue> {
        let ranks = compute_ranks(sample, tie_break_seed)?;
        self.evaluate(&StatInput::new(sample, &ranks))
    }

    /// Parses a comma-separated list of ids.
    pub fn parse_list(s: &str) -> Result<Vec<Statistic>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Chatterjee => f.write_str("chatterjee"),
            Statistic::Spearman => f.write_str("spearman"),
            Statistic::Bkr => f.write_str("bkr"),
            Statistic::Kolmogorov => f.write_str("kolmogorov"),
            Statistic::SpearmanLocal => f.write_str("spearman-local"),
            Statistic::NormalScoresLocal => f.write_str("normal-scores-local"),
            Statistic::MHat => f.write_str("m-hat"),
            Statistic::BkrLocal => f.write_str("bkr-local"),
            Statistic::TruncatedBkr { m } => write!(f, "truncated-bkr:{m}"),
            Statistic::Fourier { i, j } => write!(f, "fourier:{i}:{j}"),
            Statistic::Rademacher { scale, p1, p2 } => write!(f, "rademacher:{scale}:{p1}:{p2}"),
            Statistic::IsotonicCh => f.write_str("isotonic-ch"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownStatistic {
            id: s.to_string(),
            valid: VALID_IDS.to_string(),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<u64>().map_err(|_| unknown());
        let stat = match parts.as_slice() {
            ["chatterjee"] => Statistic::Chatterjee,
            ["spearman"] => Statistic::Spearman,
            ["bkr"] => Statistic::Bkr,
            ["kolmogorov"] => Statistic::Kolmogorov,
            ["spearman-local"] => Statistic::SpearmanLocal,
            ["normal-scores-local"] => Statistic::NormalScoresLocal,
            ["m-hat"] => Statistic::MHat,
            ["bkr-local"] => Statistic::BkrLocal,
            ["isotonic-ch"] => Statistic::IsotonicCh,
            ["truncated-bkr"] => Statistic::TruncatedBkr {
                m: DEFAULT_TRUNCATION,
            },
            ["truncated-bkr", m] => {
                let m = num(m)? as usize;
                if m == 0 {
                    return Err(Error::argument("truncated-bkr order must be at least 1"));
                }
                Statistic::TruncatedBkr { m }
            }
            ["fourier", i, j] => {
                let (i, j) = (num(i)? as usize, num(j)? as usize);
                if i == 0 || j == 0 {
                    return Err(Error::argument("Fourier indices start at 1"));
                }
                Statistic::Fourier { i, j }
            }
            ["rademacher", scale, p1, p2] => {
                let scale = num(scale)?;
                if scale > 30 {
                    return Err(Error::argument("Rademacher scale must be at most 30"));
                }
                let (p1, p2) = (num(p1)?, num(p2)?);
                let cells = 1u64 << scale;
                if p1 >= cells || p2 >= cells {
                    return Err(Error::argument(format!(
                        "Rademacher cell index out of range 0..{cells}"
                    )));
                }
                Statistic::Rademacher {
                    scale: scale as u32,
                    p1,
                    p2,
                }
            }
            _ => return Err(unknown()),
        };
        Ok(stat)
    }
}

/// A sample with its ranks and a lazily built empirical copula, shared by
/// every statistic evaluated on the same replicate.
#[derive(Debug)]
pub struct StatInput<'a> {
    pub sample: &'a PairedSample,
    pub ranks: &'a RankData,
    copula: OnceLock<EmpiricalCopula>,
}

impl<'a> StatInput<'a> {
    pub fn new(sample: &'a PairedSample, ranks: &'a RankData) -> Self {
        StatInput {
            sample,
            ranks,
            copula: OnceLock::new(),
        }
    }

    pub fn copula(&self) -> &EmpiricalCopula {
        self.copula.get_or_init(|| EmpiricalCopula::new(self.ranks))
    }
}
