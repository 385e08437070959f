use dep_lab::harness::{
    null_calibrate, null_calibrate_many, p_value, pitman_efficiency, power_at, power_experiment,
    uniform_sample, CalibrationCache, PValueMethod, PowerConfig,
};
use dep_lab::models::{optimal_statistic, sample_family, AlternativeFamily};
use dep_lab::rng::{Domain, StreamKey};
use dep_lab::Statistic;

fn stats(ids: &str) -> Vec<Statistic> {
    Statistic::parse_list(ids).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let ids = stats("spearman,bkr-local,truncated-bkr:5,rademacher:1:0:1");
    let a = in_pool(1, || null_calibrate_many(&ids, 150, 300, 9).unwrap());
    let b = in_pool(4, || null_calibrate_many(&ids, 150, 300, 9).unwrap());
    assert_eq!(a, b);
    let fam = AlternativeFamily::additive_dep_default();
    let p = in_pool(1, || power_at(&fam, 5.0, 150, &a, 0.05, 200, 9).unwrap());
    let q = in_pool(4, || power_at(&fam, 5.0, 150, &a, 0.05, 200, 9).unwrap());
    assert_eq!(p, q);
}

#[test]
fn calibration_of_one_statistic_is_independent_of_its_companions() {
    let alone = null_calibrate(Statistic::Kolmogorov, 100, 200, 3).unwrap();
    let shared = null_calibrate_many(&stats("chatterjee,kolmogorov"), 100, 200, 3).unwrap();
    assert_eq!(alone, shared[1]);
}

#[test]
fn spearman_null_quantile_is_gaussian() {
    let cal = null_calibrate(Statistic::Spearman, 1000, 5000, 17).unwrap();
    let q = cal.scaled_quantile(0.95);
    assert!((q - 1.644_853_626_951_472_2).abs() < 0.08, "{q}");
}

#[test]
fn bkr_null_mean() {
    let cal = null_calibrate(Statistic::Bkr, 500, 2000, 21).unwrap();
    let m = cal.mean() * 500.0;
    assert!((m * 36.0 - 1.0).abs() < 0.15, "{m}");
}

#[test]
fn level_at_small_n_for_every_statistic() {
    let ids = stats(
        "chatterjee,spearman,bkr,kolmogorov,spearman-local,normal-scores-local,m-hat,bkr-local,\
         truncated-bkr,fourier:1:2,rademacher:1:1:0,isotonic-ch",
    );
    let n = 100;
    let cals = null_calibrate_many(&ids, n, 20_000, 31).unwrap();
    let fgm = AlternativeFamily::fgm();
    let reps = 4000;
    let res = power_at(&fgm, 0.0, n, &cals, 0.05, reps, 32).unwrap();
    // three binomial standard errors plus calibration noise
    let band = 3.0 * (0.05f64 * 0.95 / reps as f64).sqrt() + 0.006;
    for r in res {
        assert!((r.rejection_rate - 0.05).abs() < band, "{} {}", r.stat, r.rejection_rate);
        assert_eq!(r.theta, 0.0);
    }
}

#[test]
fn permutation_and_simulated_p_values_agree() {
    let fam = AlternativeFamily::fgm();
    let cal = null_calibrate(Statistic::Chatterjee, 300, 2000, 41).unwrap();
    for r in 0..3 {
        let s = sample_family(&fam, 0.4, 300, StreamKey::new(42, Domain::Sampling, r)).unwrap();
        let mc = p_value(Statistic::Chatterjee, &s, PValueMethod::MonteCarlo(&cal)).unwrap();
        let perm = p_value(
            Statistic::Chatterjee,
            &s,
            PValueMethod::Permutation { reps: 2000, seed: 43 },
        )
        .unwrap();
        // each two-sided estimate is 2·(tail fraction); four standard errors of the difference
        let q = (mc.p + perm.p) / 4.0;
        let tol = 4.0 * (2.0 * 4.0 * q * (1.0 - q) / 2000.0).sqrt();
        assert!((mc.p - perm.p).abs() < tol, "{} vs {}", mc.p, perm.p);
    }
}

#[test]
fn optimal_statistic_mean_shift() {
    // L_n has mean t·√I under θ = t/√n, with I = 1/9 for FGM
    let fam = AlternativeFamily::fgm();
    let (n, t, reps) = (1000, 6.0, 400);
    let theta = fam.local_theta(t, n).theta;
    let mean: f64 = (0..reps)
        .map(|r| {
            let s = sample_family(&fam, theta, n, StreamKey::new(5, Domain::Sampling, r)).unwrap();
            optimal_statistic(&fam, &s).unwrap()
        })
        .sum::<f64>()
        / reps as f64;
    let target = t * fam.fisher_info().sqrt();
    assert!((mean - target).abs() < 0.15, "{mean} vs {target}");
}

#[test]
fn spearman_power_on_fgm_matches_normal_limit() {
    // Spearman is efficient for FGM: power ≈ Φ(−1.96+δ)+Φ(−1.96−δ), δ = t/3
    let fam = AlternativeFamily::fgm();
    let cal = null_calibrate_many(&stats("spearman"), 1000, 10_000, 51).unwrap();
    let res = power_at(&fam, 6.0, 1000, &cal, 0.05, 2000, 52).unwrap();
    assert!((res[0].rejection_rate - 0.516).abs() < 0.05, "{}", res[0].rejection_rate);
    assert!(res[0].ci > 0.0 && res[0].ci < 0.03);
}

#[test]
fn chatterjee_is_blind_to_coscos() {
    let fam = AlternativeFamily::coscos();
    let cal = null_calibrate_many(&stats("chatterjee,fourier:2:2"), 400, 10_000, 61).unwrap();
    let res = power_at(&fam, 4.0, 400, &cal, 0.05, 2000, 62).unwrap();
    assert!((res[0].rejection_rate - 0.05).abs() < 0.03, "{}", res[0].rejection_rate);
    assert!(res[1].rejection_rate > 0.4, "{}", res[1].rejection_rate);
}

#[test]
fn pitman_efficiency_orders_statistics() {
    let fgm = AlternativeFamily::fgm();
    let s = pitman_efficiency(Statistic::Spearman, &fgm, 500, 1500, 71).unwrap();
    let c = pitman_efficiency(Statistic::Chatterjee, &fgm, 500, 1500, 71).unwrap();
    assert!(s > 0.9 && c < 0.02, "{s} {c}");
    assert!(pitman_efficiency(Statistic::Kolmogorov, &fgm, 500, 200, 71).is_err());
}

#[test]
fn power_experiment_uses_and_fills_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = CalibrationCache::new(dir.path());
    let config = PowerConfig {
        family: "fgm".into(),
        ts: vec![0.0, 4.0],
        ns: vec![60, 90],
        statistics: vec!["spearman".into(), "bkr".into()],
        alpha: 0.1,
        reps: 100,
        calibration_reps: 200,
        seed: 81,
    };
    let fam = AlternativeFamily::fgm();
    let first = power_experiment(&fam, &config, Some(&cache)).unwrap();
    assert_eq!(first.len(), 2 * 2 * 2);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
    let again = power_experiment(&fam, &config, Some(&cache)).unwrap();
    let fresh = power_experiment(&fam, &config, None).unwrap();
    assert_eq!(first, again);
    assert_eq!(first, fresh);
}

#[test]
fn uniform_sample_is_reproducible() {
    let k = StreamKey::new(1, Domain::Custom(7), 3);
    assert_eq!(uniform_sample(50, k).unwrap(), uniform_sample(50, k).unwrap());
}
