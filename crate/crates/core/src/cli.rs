//! Command-line front end. Every run echoes its fully resolved arguments in
//! the output so it can be repeated exactly.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::basis::{selective_scan, AllocationPolicy, ScanBasis, MAX_SCAN_SCALE};
use crate::error::{Error, Result};
use crate::functional::{combined_d, discrete_ml, ingest_table_csv};
use crate::harness::{
    null_calibrate_many, p_value, power_experiment, CalibrationCache, PValueMethod, PowerConfig,
    PowerResult,
};
use crate::models::AlternativeFamily;
use crate::sample::{compute_ranks, ingest_csv, CsvOptions};
use crate::statistic::{StatInput, Statistic};

/// Id accepted by `compute --stats` for the combined measure.
pub const COMBINED_ID: &str = "d-combined";

#[derive(Debug, Parser, Serialize)]
#[command(name = "dep-lab", version, about = "Rank-based dependence statistics and local power experiments")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Compute statistics on a two-column CSV sample.
    Compute(ComputeArgs),
    /// Test independence with a Monte Carlo or permutation p-value.
    Test(TestArgs),
    /// Simulate and cache null distributions.
    Calibrate(CalibrateArgs),
    /// Rejection rates along θₙ = t/√n for an alternative family.
    Power(PowerArgs),
    /// Selective scan over Fourier or Rademacher coefficients.
    Scan(ScanArgs),
    /// Maximal canonical correlation of a contingency table.
    Discrete(DiscreteArgs),
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct CsvArgs {
    /// The first row is a header.
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl CsvArgs {
    fn options(&self) -> Result<CsvOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::argument("the delimiter must be an ASCII character"));
        }
        Ok(CsvOptions {
            header: self.header,
            delimiter: self.delimiter as u8,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ComputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated statistic ids; `d-combined` adds D̂ from --ti and --tfd.
    #[arg(long, default_value = "chatterjee,spearman")]
    pub stats: String,
    /// Independence component of D̂.
    #[arg(long, default_value = "bkr")]
    pub ti: String,
    /// Functional-dependence component of D̂.
    #[arg(long, default_value = "chatterjee")]
    pub tfd: String,
    /// Seed for breaking ties in X.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Montecarlo,
    Permutation,
}

#[derive(Debug, Args, Serialize)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "chatterjee")]
    pub stat: String,
    #[arg(long, value_enum, default_value_t = Method::Permutation)]
    pub method: Method,
    #[arg(long, default_value_t = 999)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Skip the on-disk calibration cache.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub stats: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Comma-separated upper-tail probabilities to report.
    #[arg(long, default_value = "0.9,0.95,0.99")]
    pub quantiles: String,
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct PowerArgs {
    /// fgm, coscos, tilted or additive-dep.
    #[arg(long, default_value = "fgm", conflicts_with = "family_file")]
    pub family: String,
    /// JSON grid family, instead of a built-in id.
    #[arg(long)]
    pub family_file: Option<PathBuf>,
    /// Comma-separated local parameters t.
    #[arg(long, default_value = "0,2,4,6")]
    pub t: String,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "1000")]
    pub n: String,
    #[arg(long, default_value = "chatterjee,spearman,bkr")]
    pub stats: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub calibration_reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisArg {
    Fourier,
    Rademacher,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = BasisArg::Fourier)]
    pub basis: BasisArg,
    /// Largest Fourier index M.
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    /// Largest Rademacher scale N_max.
    #[arg(long, default_value_t = 2)]
    pub max_scale: u32,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "geometric")]
    pub policy: String,
    /// Seed for breaking ties in X.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DiscreteArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let out: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::argument(format!("invalid {what} '{p}'")))
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::argument(format!("empty {what} list")));
    }
    Ok(out)
}

fn cache(no_cache: bool) -> Option<CalibrationCache> {
    (!no_cache).then(CalibrationCache::from_env)
}

fn to_json(value: &impl Serialize) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::numeric(e.to_string()))
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn cmd_compute(a: &ComputeArgs, config: Value) -> Result<String> {
    let sample = ingest_csv(&a.input, &a.csv.options()?)?;
    let ids: Vec<&str> = a.stats.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if ids.is_empty() {
        return Err(Error::argument("no statistics requested"));
    }
    let mut plain = Vec::new();
    for id in &ids {
        if *id != COMBINED_ID {
            plain.push(id.parse::<Statistic>().map_err(|e| match e {
                Error::UnknownStatistic { id, valid } => Error::UnknownStatistic {
                    id,
                    valid: format!("{valid}, {COMBINED_ID}"),
                },
                e => e,
            })?);
        }
    }
    let combined = if ids.contains(&COMBINED_ID) {
        Some((a.ti.parse::<Statistic>()?, a.tfd.parse::<Statistic>()?))
    } else {
        None
    };
    let ranks = compute_ranks(&sample, a.seed)?;
    let input = StatInput::new(&sample, &ranks);
    let mut stats = Vec::new();
    for id in &ids {
        if *id == COMBINED_ID {
            let (ti, tfd) = combined.expect("parsed above");
            let c = combined_d(&ti.evaluate(&input)?, &tfd.evaluate(&input)?);
            stats.push(json!({
                "name": COMBINED_ID,
                "value": c.d,
                "scale_exponent": 0.0,
                "branch": c.branch,
                "t_i": c.t_i,
                "t_fd": c.t_fd,
                "ti": ti.to_string(),
                "tfd": tfd.to_string(),
            }));
        } else {
            let v = id.parse::<Statistic>()?.evaluate(&input)?;
            stats.push(to_json(&v)?);
        }
    }
    Ok(pretty(&json!({
        "config": config,
        "n": sample.n(),
        "ties": {"x": ranks.had_x_ties(), "y": ranks.had_y_ties()},
        "stats": stats,
        "seed": a.seed,
    })))
}

fn cmd_test(a: &TestArgs, config: Value) -> Result<String> {
    let sample = ingest_csv(&a.input, &a.csv.options()?)?;
    let stat: Statistic = a.stat.parse()?;
    let result = match a.method {
        Method::Permutation => p_value(
            stat,
            &sample,
            PValueMethod::Permutation {
                reps: a.reps,
                seed: a.seed,
            },
        )?,
        Method::Montecarlo => {
            if sample.has_x_ties() || sample.has_y_ties() {
                return Err(Error::argument(
                    "the sample has ties, so the simulated null does not apply; \
                     rerun with --method permutation",
                ));
            }
            let cal = match cache(a.no_cache) {
                Some(c) => c.get_or_compute_many(&[stat], sample.n(), a.reps, a.seed)?,
                None => null_calibrate_many(&[stat], sample.n(), a.reps, a.seed)?,
            };
            p_value(stat, &sample, PValueMethod::MonteCarlo(&cal[0]))?
        }
    };
    let mut out = to_json(&result)?;
    out["config"] = config;
    Ok(pretty(&out))
}

fn cmd_calibrate(a: &CalibrateArgs, config: Value) -> Result<String> {
    let stats = Statistic::parse_list(&a.stats)?;
    if stats.is_empty() {
        return Err(Error::argument("no statistics requested"));
    }
    let probs: Vec<f64> = parse_list(&a.quantiles, "quantile")?;
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::argument(format!("quantile level {p} is not in (0, 1]")));
    }
    let store = cache(a.no_cache);
    let cals = match &store {
        Some(c) => c.get_or_compute_many(&stats, a.n, a.reps, a.seed)?,
        None => null_calibrate_many(&stats, a.n, a.reps, a.seed)?,
    };
    let entries: Vec<Value> = cals
        .iter()
        .zip(&stats)
        .map(|(c, &s)| {
            let quantiles: Vec<Value> = probs
                .iter()
                .map(|&p| json!({"p": p, "value": c.quantile(p), "scaled": c.scaled_quantile(p)}))
                .collect();
            json!({
                "statistic": c.statistic,
                "n": c.n,
                "reps": c.reps,
                "seed": c.seed,
                "scale_exponent": c.scale_exponent,
                "mean": c.mean(),
                "variance": c.variance(),
                "quantiles": quantiles,
                "cache_file": store.as_ref().map(|st| st.path_for(s, c.n, c.reps, c.seed)),
            })
        })
        .collect();
    Ok(pretty(&json!({"config": config, "calibrations": entries})))
}

/// Header of the power CSV.
pub const POWER_CSV_COLUMNS: [&str; 8] =
    ["family", "t", "n", "stat", "alpha", "reps", "rejection_rate", "ci"];

fn power_csv(results: &[PowerResult], config: &Value) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::numeric(e.to_string());
    w.write_record(POWER_CSV_COLUMNS).map_err(err)?;
    for r in results {
        w.write_record([
            r.family.clone(),
            r.t.to_string(),
            r.n.to_string(),
            r.stat.clone(),
            r.alpha.to_string(),
            r.reps.to_string(),
            r.rejection_rate.to_string(),
            r.ci.to_string(),
        ])
        .map_err(err)?;
    }
    let body = w.into_inner().map_err(|e| Error::numeric(e.to_string()))?;
    let body = String::from_utf8(body).expect("CSV of ASCII fields");
    Ok(format!("# config: {}\n{body}", serde_json::to_string(config).expect("JSON")))
}

fn cmd_power(a: &PowerArgs, config: Value) -> Result<String> {
    let family = match &a.family_file {
        Some(p) => AlternativeFamily::from_json_file(p)?,
        None => AlternativeFamily::by_id(&a.family)?,
    };
    let stats = Statistic::parse_list(&a.stats)?;
    let power_config = PowerConfig {
        family: family.id().to_string(),
        ts: parse_list(&a.t, "t value")?,
        ns: parse_list(&a.n, "sample size")?,
        statistics: stats.iter().map(Statistic::to_string).collect(),
        alpha: a.alpha,
        reps: a.reps,
        calibration_reps: a.calibration_reps,
        seed: a.seed,
    };
    let store = cache(a.no_cache);
    let results = power_experiment(&family, &power_config, store.as_ref())?;
    match a.format {
        Format::Csv => power_csv(&results, &config),
        Format::Json => {
            // nested by family, then statistic
            let mut by_stat = serde_json::Map::new();
            for r in &results {
                let row = json!({
                    "t": r.t,
                    "n": r.n,
                    "theta": r.theta,
                    "theta_clamped": r.theta_clamped,
                    "alpha": r.alpha,
                    "reps": r.reps,
                    "rejection_rate": r.rejection_rate,
                    "ci": r.ci,
                });
                by_stat
                    .entry(r.stat.clone())
                    .or_insert_with(|| Value::Array(Vec::new()))
                    .as_array_mut()
                    .expect("array")
                    .push(row);
            }
            let mut results_json = serde_json::Map::new();
            results_json.insert(family.id().to_string(), Value::Object(by_stat));
            Ok(pretty(&json!({"config": config, "results": results_json})))
        }
    }
}

fn cmd_scan(a: &ScanArgs, config: Value) -> Result<String> {
    let sample = ingest_csv(&a.input, &a.csv.options()?)?;
    let policy: AllocationPolicy = a.policy.parse()?;
    let basis = match a.basis {
        BasisArg::Fourier => ScanBasis::Fourier {
            max_order: a.max_order,
        },
        BasisArg::Rademacher => {
            if a.max_scale > MAX_SCAN_SCALE {
                return Err(Error::argument(format!(
                    "--max-scale must be at most {MAX_SCAN_SCALE}"
                )));
            }
            ScanBasis::Rademacher {
                max_scale: a.max_scale,
            }
        }
    };
    let ranks = compute_ranks(&sample, a.seed)?;
    let report = selective_scan(&ranks, basis, a.alpha, policy)?;
    let mut out = to_json(&report)?;
    out["any_rejected"] = json!(report.any_rejected());
    out["config"] = config;
    Ok(pretty(&out))
}

fn cmd_discrete(a: &DiscreteArgs, config: Value) -> Result<String> {
    let table = ingest_table_csv(&a.input, &a.csv.options()?)?;
    let m_l = discrete_ml(&table)?;
    Ok(pretty(&json!({
        "config": config,
        "rows": table.rows(),
        "cols": table.cols(),
        "m_l": m_l,
    })))
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// The command's full output text and its destination.
fn execute(cli: &Cli) -> Result<(String, Option<&Path>)> {
    let config = to_json(cli)?;
    Ok(match &cli.command {
        Command::Compute(a) => (cmd_compute(a, config)?, a.output.as_deref()),
        Command::Test(a) => (cmd_test(a, config)?, a.output.as_deref()),
        Command::Calibrate(a) => (cmd_calibrate(a, config)?, a.output.as_deref()),
        Command::Power(a) => (cmd_power(a, config)?, a.output.as_deref()),
        Command::Scan(a) => (cmd_scan(a, config)?, a.output.as_deref()),
        Command::Discrete(a) => (cmd_discrete(a, config)?, a.output.as_deref()),
    })
}

/// Parses `args` (program name first), runs the command on a pool of
/// `--threads` workers and returns the process exit code: 0 success, 1 I/O,
/// 2 usage, 3 numeric failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{}", e.render());
            return 2;
        }
        Err(e) => {
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            let _ = writeln!(stderr, "error: --threads must be at least 1");
            return 2;
        }
        builder = builder.num_threads(k);
    }
    let result = match builder.build() {
        Ok(pool) => pool
            .install(|| execute(&cli))
            .and_then(|(text, output)| write_output(output, &text, stdout)),
        Err(e) => Err(Error::argument(format!("cannot start worker pool: {e}"))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
