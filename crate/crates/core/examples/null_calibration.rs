//! Simulated null distributions, their quantiles, p-values and the on-disk
//! cache.

use dep_lab::harness::{null_calibrate_many, p_value, CalibrationCache, PValueMethod};
use dep_lab::models::{sample_family, AlternativeFamily};
use dep_lab::rng::{Domain, StreamKey};
use dep_lab::Statistic;

fn main() -> dep_lab::Result<()> {
    let stats = Statistic::parse_list("chatterjee,spearman,bkr")?;
    let n = 200;
    let cals = null_calibrate_many(&stats, n, 4000, 1)?;
    for c in &cals {
        println!(
            "{:<11} mean {:+.5}  95% {:.5}  scaled 95% {:.4}",
            c.statistic,
            c.mean(),
            c.quantile(0.95),
            c.scaled_quantile(0.95)
        );
    }

    let s = sample_family(&AlternativeFamily::fgm(), 0.5, n, StreamKey::new(2, Domain::Sampling, 0))?;
    for (stat, cal) in stats.iter().zip(&cals) {
        let mc = p_value(*stat, &s, PValueMethod::MonteCarlo(cal))?;
        let perm = p_value(*stat, &s, PValueMethod::Permutation { reps: 999, seed: 3 })?;
        println!("{stat:<11} value {:.4}  p(simulated) {:.4}  p(permutation) {:.4}", mc.value, mc.p, perm.p);
    }

    let dir = std::env::temp_dir().join("dep-lab-example-cache");
    let cache = CalibrationCache::new(&dir);
    let cached = cache.get_or_compute_many(&stats[..1], n, 1000, 1)?;
    println!("cached {} at {}", cached[0].statistic, cache.path_for(stats[0], n, 1000, 1).display());
    Ok(())
}
