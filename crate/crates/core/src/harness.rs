//! Monte Carlo null calibration, p-values, power under contiguous
//! alternatives and Pitman efficiencies.
//!
//! Replicate `r` of any experiment draws from the stream
//! `(seed, domain, r)` and results are collected in replicate order, so the
//! output does not depend on the number of worker threads.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{optimal_statistic, sample_family, AlternativeFamily};
use crate::rng::{Domain, StreamKey};
use crate::sample::{compute_ranks, PairedSample};
use crate::statistic::{StatInput, Statistic, Tail};

/// Fewest replicates accepted for a calibration.
pub const MIN_CALIBRATION_REPS: usize = 100;

/// z₀.₉₇₅.
pub const Z_975: f64 = 1.959_963_984_540_054;

/// Evaluates several statistics on one sample, sharing ranks and copula.
pub fn evaluate_all(
    stats: &[Statistic],
    sample: &PairedSample,
    tie_break_seed: Option<u64>,
) -> Result<Vec<f64>> {
    let ranks = compute_ranks(sample, tie_break_seed)?;
    let input = StatInput::new(sample, &ranks);
    stats.iter().map(|s| Ok(s.evaluate(&input)?.value)).collect()
}

/// n i.i.d. uniform pairs.
pub fn uniform_sample(n: usize, key: StreamKey) -> Result<PairedSample> {
    let mut rng = key.rng();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(rng.random::<f64>());
        ys.push(rng.random::<f64>());
    }
    PairedSample::new(xs, ys)
}

/// Runs `f` on replicates `0..reps` in parallel, keeping replicate order.
fn replicates<T: Send>(reps: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Sorted Monte Carlo null sample of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub statistic: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub scale_exponent: f64,
    sorted: Vec<f64>,
}

impl NullCalibration {
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn parsed_statistic(&self) -> Result<Statistic> {
        self.statistic.parse()
    }

    /// The `ceil(p·reps)`-th order statistic (`p` in (0, 1]).
    pub fn quantile(&self, p: f64) -> f64 {
        let k = (p * self.reps as f64).ceil() as usize;
        self.sorted[k.clamp(1, self.reps) - 1]
    }

    /// `n^scale_exponent · quantile(p)`.
    pub fn scaled_quantile(&self, p: f64) -> f64 {
        (self.n as f64).powf(self.scale_exponent) * self.quantile(p)
    }

    /// The `floor(p·reps)+1`-th order statistic: mirror of [`Self::quantile`]
    /// for the lower tail.
    fn lower_quantile(&self, p: f64) -> f64 {
        let k = (p * self.reps as f64).floor() as usize;
        self.sorted[k.min(self.reps - 1)]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.reps as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.sorted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (self.reps - 1) as f64
    }

    /// Whether `value` is rejected at level `alpha`: upper tail for
    /// nonnegative omnibus statistics, both tails with α/2 each otherwise.
    pub fn rejects(&self, value: f64, alpha: f64) -> Result<bool> {
        let tail = self.parsed_statistic()?.tail();
        Ok(match tail {
            Tail::Upper => value > self.quantile(1.0 - alpha),
            Tail::TwoSided => {
                value > self.quantile(1.0 - alpha / 2.0) || value < self.lower_quantile(alpha / 2.0)
            }
        })
    }

    /// Add-one Monte Carlo p-value of an observed value.
    pub fn p_value(&self, observed: f64) -> Result<f64> {
        let r = self.reps as f64;
        let above = self.sorted.len() - self.sorted.partition_point(|&v| v < observed);
        let p_hi = (1.0 + above as f64) / (r + 1.0);
        Ok(match self.parsed_statistic()?.tail() {
            Tail::Upper => p_hi,
            Tail::TwoSided => {
                let below = self.sorted.partition_point(|&v| v <= observed);
                let p_lo = (1.0 + below as f64) / (r + 1.0);
                (2.0 * p_hi.min(p_lo)).min(1.0)
            }
        })
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_CALIBRATION_REPS {
        return Err(Error::argument(format!(
            "calibration needs at least {MIN_CALIBRATION_REPS} replicates, got {reps}"
        )));
    }
    Ok(())
}

/// Null calibrations of several statistics from one shared set of uniform
/// samples. Entry `k` equals `null_calibrate(stats[k], ..)`.
pub fn null_calibrate_many(
    stats: &[Statistic],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<NullCalibration>> {
    check_reps(reps)?;
    let rows = replicates(reps, |r| {
        let key = StreamKey::new(seed, Domain::NullCalibration, r);
        let sample = uniform_sample(n, key)?;
        evaluate_all(stats, &sample, Some(key.derived_seed()))
    })?;
    Ok(stats
        .iter()
        .enumerate()
        .map(|(k, stat)| {
            let mut sorted: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            sorted.sort_by(f64::total_cmp);
            NullCalibration {
                statistic: stat.to_string(),
                n,
                reps,
                seed,
                scale_exponent: stat.scale_exponent(),
                sorted,
            }
        })
        .collect())
}

pub fn null_calibrate(stat: Statistic, n: usize, reps: usize, seed: u64) -> Result<NullCalibration> {
    Ok(null_calibrate_many(&[stat], n, reps, seed)?.remove(0))
}

/// How a p-value is obtained.
#[derive(Debug, Clone, Copy)]
pub enum PValueMethod<'a> {
    /// Against a simulated null; needs tie-free data.
    MonteCarlo(&'a NullCalibration),
    /// Against random re-pairings of Y with X.
    Permutation { reps: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValue {
    pub stat: String,
    pub value: f64,
    pub p: f64,
    pub method: &'static str,
    pub reps: usize,
    pub seed: u64,
}

pub fn p_value(stat: Statistic, sample: &PairedSample, method: PValueMethod<'_>) -> Result<PValue> {
    match method {
        PValueMethod::MonteCarlo(cal) => {
            if sample.has_x_ties() || sample.has_y_ties() {
                return Err(Error::argument(
                    "the sample has ties, so the simulated null does not apply; \
                     use the permutation method",
                ));
            }
            if cal.parsed_statistic()? != stat {
                return Err(Error::argument(format!(
                    "calibration is for {}, not {stat}",
                    cal.statistic
                )));
            }
            if cal.n != sample.n() {
                return Err(Error::argument(format!(
                    "calibration is for n = {}, sample has n = {}",
                    cal.n,
                    sample.n()
                )));
            }
            let value = stat.compute(sample, None)?.value;
            Ok(PValue {
                stat: stat.to_string(),
                value,
                p: cal.p_value(value)?,
                method: "montecarlo",
                reps: cal.reps,
                seed: cal.seed,
            })
        }
        PValueMethod::Permutation { reps, seed } => {
            check_reps(reps)?;
            let value = stat.compute(sample, Some(seed))?.value;
            let mut null = replicates(reps, |r| {
                let mut perm: Vec<usize> = (0..sample.n()).collect();
                perm.shuffle(&mut StreamKey::new(seed, Domain::Permutation, r).rng());
                Ok(stat.compute(&sample.repaired(&perm)?, Some(seed))?.value)
            })?;
            null.sort_by(f64::total_cmp);
            let cal = NullCalibration {
                statistic: stat.to_string(),
                n: sample.n(),
                reps,
                seed,
                scale_exponent: 0.0,
                sorted: null,
            };
            Ok(PValue {
                stat: stat.to_string(),
                value,
                p: cal.p_value(value)?,
                method: "permutation",
                reps,
                seed,
            })
        }
    }
}

/// Rejection rate of one statistic at one (family, t, n).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerResult {
    pub family: String,
    pub t: f64,
    pub n: usize,
    pub theta: f64,
    pub theta_clamped: bool,
    pub stat: String,
    pub alpha: f64,
    pub reps: usize,
    pub rejection_rate: f64,
    /// `z₀.₉₇₅·√(p̂(1−p̂)/reps)`.
    pub ci: f64,
}

/// Rejection rates at one `(t, n)` against given calibrations, one per
/// statistic, all for sample size `n`.
pub fn power_at(
    family: &AlternativeFamily,
    t: f64,
    n: usize,
    calibrations: &[NullCalibration],
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<PowerResult>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::argument(format!("alpha = {alpha} is not in (0, 1)")));
    }
    if reps == 0 {
        return Err(Error::argument("power needs at least one replicate"));
    }
    if let Some(c) = calibrations.iter().find(|c| c.n != n) {
        return Err(Error::argument(format!(
            "calibration of {} is for n = {}, not {n}",
            c.statistic, c.n
        )));
    }
    let stats: Vec<Statistic> = calibrations
        .iter()
        .map(NullCalibration::parsed_statistic)
        .collect::<Result<_>>()?;
    let local = family.local_theta(t, n);
    let hits = replicates(reps, |r| {
        let key = StreamKey::new(seed, Domain::Power, r);
        let sample = sample_family(family, local.theta, n, key)?;
        let values = evaluate_all(&stats, &sample, Some(key.derived_seed()))?;
        values
            .iter()
            .zip(calibrations)
            .map(|(&v, c)| c.rejects(v, alpha))
            .collect::<Result<Vec<bool>>>()
    })?;
    Ok(calibrations
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let count = hits.iter().filter(|row| row[k]).count();
            let p = count as f64 / reps as f64;
            PowerResult {
                family: family.id().to_string(),
                t,
                n,
                theta: local.theta,
                theta_clamped: local.clamped,
                stat: c.statistic.clone(),
                alpha,
                reps,
                rejection_rate: p,
                ci: Z_975 * (p * (1.0 - p) / reps as f64).sqrt(),
            }
        })
        .collect())
}

/// A grid of power experiments.
#[derive(Debug, Clone, Serialize)]
pub struct PowerConfig {
    pub family: String,
    pub ts: Vec<f64>,
    pub ns: Vec<usize>,
    pub statistics: Vec<String>,
    pub alpha: f64,
    pub reps: usize,
    /// Replicates of each null calibration, drawn on their own streams.
    pub calibration_reps: usize,
    pub seed: u64,
}

/// Runs every `(t, n)` of `config`, calibrating once per `n` (through
/// `cache` when given).
pub fn power_experiment(
    family: &AlternativeFamily,
    config: &PowerConfig,
    cache: Option<&CalibrationCache>,
) -> Result<Vec<PowerResult>> {
    let stats: Vec<Statistic> = config
        .statistics
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &n in &config.ns {
        let cals = match cache {
            Some(c) => c.get_or_compute_many(&stats, n, config.calibration_reps, config.seed)?,
            None => null_calibrate_many(&stats, n, config.calibration_reps, config.seed)?,
        };
        for &t in &config.ts {
            out.extend(power_at(family, t, n, &cals, config.alpha, config.reps, config.seed)?);
        }
    }
    Ok(out)
}

/// Squared sample correlation between a statistic and Lₙ under
/// independence: a Monte Carlo estimate of the Pitman efficiency.
pub fn pitman_efficiency(
    stat: Statistic,
    family: &AlternativeFamily,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if !stat.has_gaussian_limit() {
        return Err(Error::Unsupported(format!(
            "{stat} has no Gaussian limit, so its Pitman efficiency is undefined"
        )));
    }
    check_reps(reps)?;
    let pairs = replicates(reps, |r| {
        let key = StreamKey::new(seed, Domain::Pitman, r);
        let sample = uniform_sample(n, key)?;
        let v = stat.compute(&sample, Some(key.derived_seed()))?.scaled();
        Ok((v, optimal_statistic(family, &sample)?))
    })?;
    let k = reps as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::degenerate("a simulated statistic has zero variance"));
    }
    Ok(sxy * sxy / (sxx * syy))
}

/// Version string stored in cache headers.
pub const CACHE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the cache location.
pub const CACHE_DIR_ENV: &str = "DEP_LAB_CACHE_DIR";

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    statistic: String,
    n: usize,
    reps: usize,
    seed: u64,
    version: String,
    calibration: NullCalibration,
}

/// JSON files of null calibrations keyed by (statistic, n, reps, seed,
/// version).
#[derive(Debug, Clone)]
pub struct CalibrationCache {
    dir: PathBuf,
}

impl CalibrationCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CalibrationCache { dir: dir.into() }
    }

    /// `$DEP_LAB_CACHE_DIR`, else `$XDG_CACHE_HOME/dep-lab`, else
    /// `$HOME/.cache/dep-lab`, else a directory under the system temp dir.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        let dir = var(CACHE_DIR_ENV)
            .or_else(|| var("XDG_CACHE_HOME").map(|p| p.join("dep-lab")))
            .or_else(|| var("HOME").map(|p| p.join(".cache").join("dep-lab")))
            .unwrap_or_else(|| std::env::temp_dir().join("dep-lab"));
        CalibrationCache::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, stat: Statistic, n: usize, reps: usize, seed: u64) -> PathBuf {
        let id = stat.to_string().replace(':', "_");
        self.dir
            .join(format!("{id}-n{n}-r{reps}-s{seed}-v{CACHE_VERSION}.json"))
    }

    /// A cached calibration whose header matches, if present.
    pub fn load(&self, stat: Statistic, n: usize, reps: usize, seed: u64) -> Option<NullCalibration> {
        let text = fs::read_to_string(self.path_for(stat, n, reps, seed)).ok()?;
        let file: CacheFile = serde_json::from_str(&text).ok()?;
        let matches = file.statistic == stat.to_string()
            && file.n == n
            && file.reps == reps
            && file.seed == seed
            && file.version == CACHE_VERSION
            && file.calibration.sorted.len() == reps;
        matches.then_some(file.calibration)
    }

    pub fn store(&self, cal: &NullCalibration) -> Result<PathBuf> {
        let stat = cal.parsed_statistic()?;
        let path = self.path_for(stat, cal.n, cal.reps, cal.seed);
        let io = |source| Error::Io {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(&self.dir).map_err(io)?;
        let file = CacheFile {
            statistic: cal.statistic.clone(),
            n: cal.n,
            reps: cal.reps,
            seed: cal.seed,
            version: CACHE_VERSION.to_string(),
            calibration: cal.clone(),
        };
        let text = serde_json::to_string(&file).map_err(|e| Error::numeric(e.to_string()))?;
        // write then rename so a concurrent reader never sees half a file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(path)
    }

    /// Cached calibrations where present; the rest are simulated together
    /// and stored. Identical to [`null_calibrate_many`] either way.
    pub fn get_or_compute_many(
        &self,
        stats: &[Statistic],
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Result<Vec<NullCalibration>> {
        let mut found: Vec<Option<NullCalibration>> =
            stats.iter().map(|&s| self.load(s, n, reps, seed)).collect();
        let missing: Vec<Statistic> = stats
            .iter()
            .zip(&found)
            .filter(|(_, f)| f.is_none())
            .map(|(&s, _)| s)
            .collect();
        if !missing.is_empty() {
            let mut fresh = null_calibrate_many(&missing, n, reps, seed)?.into_iter();
            for slot in found.iter_mut().filter(|f| f.is_none()) {
                let cal = fresh.next().expect("one calibration per missing statistic");
                self.store(&cal)?;
                *slot = Some(cal);
            }
        }
        Ok(found.into_iter().map(|c| c.expect("filled")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reps_floor() {
        assert!(matches!(
            null_calibrate(Statistic::Spearman, 20, 99, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn calibration_is_reproducible_and_shared() {
        let a = null_calibrate(Statistic::Chatterjee, 30, 200, 7).unwrap();
        let b = null_calibrate(Statistic::Chatterjee, 30, 200, 7).unwrap();
        assert_eq!(a, b);
        let many =
            null_calibrate_many(&[Statistic::Spearman, Statistic::Chatterjee], 30, 200, 7).unwrap();
        assert_eq!(many[1], a);
        assert_eq!(many[0].scale_exponent, 0.5);
        let c = null_calibrate(Statistic::Chatterjee, 30, 200, 8).unwrap();
        assert_ne!(a.sorted(), c.sorted());
    }

    #[test]
    fn quantiles_are_monotone_order_statistics() {
        let cal = null_calibrate(Statistic::Spearman, 25, 400, 3).unwrap();
        assert!(cal.sorted().windows(2).all(|w| w[0] <= w[1]));
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=100 {
            let q = cal.quantile(k as f64 / 100.0);
            assert!(q >= prev);
            prev = q;
        }
        assert_eq!(cal.quantile(0.95), cal.sorted()[379]);
        assert_eq!(cal.quantile(1.0), cal.sorted()[399]);
    }

    #[test]
    fn monte_carlo_p_value_extremes() {
        let cal = null_calibrate(Statistic::Bkr, 20, 100, 2).unwrap();
        let lo = cal.sorted()[0] - 1.0;
        let hi = cal.sorted()[99] + 1.0;
        assert_eq!(cal.p_value(lo).unwrap(), 1.0);
        assert_eq!(cal.p_value(hi).unwrap(), 1.0 / 101.0);
        // two-sided: both extremes are significant
        let cal = null_calibrate(Statistic::Spearman, 20, 100, 2).unwrap();
        assert_eq!(cal.p_value(-5.0).unwrap(), 2.0 / 101.0);
        assert_eq!(cal.p_value(5.0).unwrap(), 2.0 / 101.0);
    }

    #[test]
    fn two_sided_rejection_is_balanced() {
        let cal = null_calibrate(Statistic::Spearman, 40, 1000, 4).unwrap();
        let s = cal.sorted();
        let above = s.iter().filter(|&&v| v > cal.quantile(0.975)).count();
        let below = s.iter().filter(|&&v| v < cal.lower_quantile(0.025)).count();
        assert!(above <= 25 && below <= 25);
        assert!(cal.rejects(10.0, 0.05).unwrap() && cal.rejects(-10.0, 0.05).unwrap());
        assert!(!cal.rejects(0.0, 0.05).unwrap());
    }

    #[test]
    fn montecarlo_refuses_ties() {
        let cal = null_calibrate(Statistic::Spearman, 4, 100, 1).unwrap();
        let s = PairedSample::new(vec![1.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let err = p_value(Statistic::Spearman, &s, PValueMethod::MonteCarlo(&cal)).unwrap_err();
        assert!(err.to_string().contains("permutation"));
        assert_eq!(err.exit_code(), 2);
        let p = p_value(Statistic::Spearman, &s, PValueMethod::Permutation { reps: 999, seed: 1 })
            .unwrap();
        assert!(p.p > 0.0 && p.p <= 1.0);
        assert!(((p.p * 1000.0).round() - p.p * 1000.0).abs() < 1e-9);
    }

    #[test]
    fn calibration_mismatch_is_an_error() {
        let cal = null_calibrate(Statistic::Spearman, 10, 100, 1).unwrap();
        let s = uniform_sample(12, StreamKey::new(1, Domain::Sampling, 0)).unwrap();
        assert!(p_value(Statistic::Spearman, &s, PValueMethod::MonteCarlo(&cal)).is_err());
        let s = uniform_sample(10, StreamKey::new(1, Domain::Sampling, 0)).unwrap();
        assert!(p_value(Statistic::Chatterjee, &s, PValueMethod::MonteCarlo(&cal)).is_err());
    }

    #[test]
    fn pitman_rejects_non_gaussian_statistics() {
        let fam = AlternativeFamily::fgm();
        assert!(matches!(
            pitman_efficiency(Statistic::Bkr, &fam, 50, 200, 1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn power_result_fields() {
        let fam = AlternativeFamily::fgm();
        let cals = null_calibrate_many(&[Statistic::Spearman, Statistic::Bkr], 50, 200, 1).unwrap();
        let res = power_at(&fam, 3.0, 50, &cals, 0.05, 100, 2).unwrap();
        assert_eq!(res.len(), 2);
        for r in &res {
            assert!((0.0..=1.0).contains(&r.rejection_rate));
            let p = r.rejection_rate;
            assert!((r.ci - Z_975 * (p * (1.0 - p) / 100.0).sqrt()).abs() < 1e-15);
            assert!((r.theta - 3.0 / 50f64.sqrt()).abs() < 1e-15);
        }
        assert!(power_at(&fam, 3.0, 60, &cals, 0.05, 100, 2).is_err());
        assert!(power_at(&fam, 3.0, 50, &cals, 1.5, 100, 2).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CalibrationCache::new(dir.path());
        let stats = [Statistic::Spearman, Statistic::Kolmogorov];
        let first = cache.get_or_compute_many(&stats, 20, 150, 11).unwrap();
        assert_eq!(first, null_calibrate_many(&stats, 20, 150, 11).unwrap());
        let path = cache.path_for(Statistic::Kolmogorov, 20, 150, 11);
        let header: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(header["statistic"], "kolmogorov");
        assert_eq!(header["reps"], 150);
        assert_eq!(header["version"], CACHE_VERSION);
        assert_eq!(cache.load(Statistic::Kolmogorov, 20, 150, 11).as_ref(), Some(&first[1]));
        // a corrupt file is recomputed
        fs::write(&path, "{").unwrap();
        let again = cache.get_or_compute_many(&stats, 20, 150, 11).unwrap();
        assert_eq!(again, first);
    }
}
