//! Command-line driver for the studies in [`crate::simulation`] and
//! [`crate::calibration`].
//!
//! Every subcommand writes one CSV document to `--output` (or stdout).
//! Numbers are printed with 17 significant digits. Settings may also come
//! from a TOML file given with `--config`: top-level `seed`, `threads` and
//! `output`, plus one table per subcommand (`[arl]`, `[carl-study]`, ...).
//! Flags win over the file.
//!
//! Exit status is 0 on success, 1 when a study fails at run time and 2 for
//! usage errors, which include values rejected by validation.

mod table;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::calibration::{calibrate_limit_with, markov_arl, MarkovSpec, DEFAULT_STATES, DEFAULT_TOLERANCE, MIN_STATES};
use crate::distributions::ProcessModel;
use crate::engines::{CusumConfig, DEFAULT_CAP, MIN_WARMUP};
use crate::simulation::{
    carl_study, estimate_arl, run_length_known, run_length_plug_in, run_length_self_starting_scenario1, t_test_levels,
    transform_check, TTestConfig,
};
use table::{num, Table};

#[derive(Debug, Parser)]
#[command(name = "cusum-lab", version, about = "CUSUM run-length experiments", propagate_version = true)]
pub struct Cli {
    /// TOML file with default settings; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find the decision limit h giving a target in-control ARL
    Calibrate(CalibrateArgs),
    /// Monte Carlo in-control ARL of one chart
    Arl(ArlArgs),
    /// Conditional ARL for many frozen warmups
    CarlStudy(CarlArgs),
    /// Unconditional and conditional levels of the two-sample t-test
    TtestAnalogy(TTestArgs),
    /// Pooled self-starting scores with KS and lag-1 correlation checks
    TransformCheck(TransformArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate(_) => "calibrate",
            Command::Arl(_) => "arl",
            Command::CarlStudy(_) => "carl-study",
            Command::TtestAnalogy(_) => "ttest-analogy",
            Command::TransformCheck(_) => "transform-check",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
struct Common {
    /// Master seed; required by every randomized command
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct CalibrateArgs {
    /// Reference value δ
    #[arg(long)]
    delta: Option<f64>,
    /// In-control ARL to hit
    #[arg(long)]
    target_arl: Option<f64>,
    /// Relative tolerance on the ARL
    #[arg(long)]
    tolerance: Option<f64>,
    /// Markov chain states (the extrapolation also uses twice as many)
    #[arg(long)]
    states: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ChartKind {
    Known,
    PlugIn,
    SelfStarting,
}

impl ChartKind {
    fn label(self) -> &'static str {
        match self {
            ChartKind::Known => "known",
            ChartKind::PlugIn => "plug-in",
            ChartKind::SelfStarting => "self-starting",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct ArlArgs {
    #[arg(long, value_enum)]
    chart: Option<ChartKind>,
    /// Reference value δ
    #[arg(long)]
    delta: Option<f64>,
    /// Decision limit h
    #[arg(long, conflicts_with = "target_arl")]
    h: Option<f64>,
    /// Calibrate h to this ARL first (instead of --h)
    #[arg(long)]
    target_arl: Option<f64>,
    /// Truncate runs at this many monitored readings
    #[arg(long)]
    cap: Option<u64>,
    /// Warmup size for the self-starting chart
    #[arg(long)]
    m: Option<usize>,
    /// Phase-I sample size for the plug-in chart
    #[arg(long)]
    phase1_size: Option<usize>,
    /// Replications
    #[arg(long)]
    runs: Option<u64>,
    /// In-control process mean
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// In-control process standard deviation
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct CarlArgs {
    /// Reference value δ
    #[arg(long)]
    delta: Option<f64>,
    /// Decision limit h
    #[arg(long, conflicts_with = "target_arl")]
    h: Option<f64>,
    /// Calibrate h to this ARL first (instead of --h)
    #[arg(long)]
    target_arl: Option<f64>,
    /// Truncate runs at this many monitored readings
    #[arg(long)]
    cap: Option<u64>,
    /// Warmup size
    #[arg(long)]
    m: Option<usize>,
    /// Number of frozen warmups
    #[arg(long)]
    warmups: Option<u64>,
    /// Phase-II runs per warmup
    #[arg(long)]
    runs_per_warmup: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct TTestArgs {
    /// X sample size
    #[arg(long)]
    nx: Option<usize>,
    /// Y sample size
    #[arg(long)]
    ny: Option<usize>,
    /// Two-sided level
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of frozen Y samples
    #[arg(long)]
    frozen_y: Option<u64>,
    /// Fresh X samples per frozen Y
    #[arg(long)]
    reps_per_y: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct TransformArgs {
    /// Independent sequences
    #[arg(long)]
    sequences: Option<u64>,
    /// Readings per sequence, warmup included
    #[arg(long)]
    length: Option<usize>,
    /// Warmup size
    #[arg(long)]
    m: Option<usize>,
    /// Print only the summary row, not the scores
    #[arg(long)]
    #[serde(skip)]
    summary_only: bool,
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    output: Option<PathBuf>,
    calibrate: CalibrateArgs,
    arl: ArlArgs,
    carl_study: CarlArgs,
    ttest_analogy: TTestArgs,
    transform_check: TransformArgs,
}

macro_rules! fill {
    ($flags:expr, $file:expr; $($field:ident),+) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field; } )+
    };
}

impl Common {
    fn fill(&mut self, file: &FileConfig) {
        self.seed = self.seed.or(file.seed);
        self.threads = self.threads.or(file.threads);
        if self.output.is_none() {
            self.output.clone_from(&file.output);
        }
    }
}

enum Failure {
    Usage { kind: ErrorKind, message: String },
    Runtime(String),
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure::Usage { kind: ErrorKind::ValueValidation, message: message.into() }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn need<T>(value: Option<T>, flag: &str) -> Outcome<T> {
    value.ok_or_else(|| Failure::Usage {
        kind: ErrorKind::MissingRequiredArgument,
        message: format!("--{flag} is required (as a flag or in the config file)"),
    })
}

/// Wraps a validation result from the library as a usage error.
fn valid<T>(r: crate::Result<T>) -> Outcome<T> {
    r.map_err(|e| Failure::usage(e.to_string()))
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Outcome<()> {
    if ok {
        Ok(())
    } else {
        Err(Failure::usage(message()))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let name = cli.command.name();
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage { kind, message }) => {
            let mut cmd = Cli::command();
            cmd.build();
            let sub = cmd.find_subcommand_mut(name).expect("subcommand exists").clone();
            let e = sub.bin_name(format!("cusum-lab {name}")).error(kind, message);
            let _ = e.print();
            2
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Outcome<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Outcome<()> {
    let file = load_config(cli.config.as_deref())?;
    let mut common = match &cli.command {
        Command::Calibrate(a) => a.common.clone(),
        Command::Arl(a) => a.common.clone(),
        Command::CarlStudy(a) => a.common.clone(),
        Command::TtestAnalogy(a) => a.common.clone(),
        Command::TransformCheck(a) => a.common.clone(),
    };
    common.fill(&file);

    // validate everything before any simulation starts
    let job: Box<dyn FnOnce() -> Outcome<String> + Send> = match cli.command {
        Command::Calibrate(mut a) => {
            let f = file.calibrate;
            fill!(a, f; delta, target_arl, tolerance, states);
            prepare_calibrate(a)?
        }
        Command::Arl(mut a) => {
            let f = file.arl;
            fill!(a, f; chart, delta, h, target_arl, cap, m, phase1_size, runs, mu, sigma);
            prepare_arl(a, need(common.seed, "seed")?)?
        }
        Command::CarlStudy(mut a) => {
            let f = file.carl_study;
            fill!(a, f; delta, h, target_arl, cap, m, warmups, runs_per_warmup);
            prepare_carl(a, need(common.seed, "seed")?)?
        }
        Command::TtestAnalogy(mut a) => {
            let f = file.ttest_analogy;
            fill!(a, f; nx, ny, alpha, frozen_y, reps_per_y);
            prepare_ttest(a, need(common.seed, "seed")?)?
        }
        Command::TransformCheck(mut a) => {
            let f = file.transform_check;
            fill!(a, f; sequences, length, m);
            prepare_transform(a, need(common.seed, "seed")?)?
        }
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = common.threads {
        check(threads >= 1, || "--threads must be at least 1".into())?;
        pool = pool.num_threads(threads);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(format!("cannot start thread pool: {e}")))?;
    let text = pool.install(job)?;
    emit(&text, common.output.as_deref())
}

fn emit(text: &str, output: Option<&Path>) -> Outcome<()> {
    let written = match output {
        Some(path) => std::fs::write(path, text).map_err(|e| (path.display().to_string(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| ("stdout".to_string(), e))
        }
    };
    written.map_err(|(to, e)| Failure::Runtime(format!("cannot write {to}: {e}")))
}

fn check_target(target: f64) -> Outcome<()> {
    check(target.is_finite() && target > 1.0, || format!("--target-arl must be a finite number above 1, got {target}"))
}

fn prepare_calibrate(a: CalibrateArgs) -> Outcome<Box<dyn FnOnce() -> Outcome<String> + Send>> {
    let delta = need(a.delta, "delta")?;
    let target = need(a.target_arl, "target-arl")?;
    let tolerance = a.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let states = a.states.unwrap_or(DEFAULT_STATES);
    check(delta.is_finite() && delta >= 0.0, || format!("--delta must be finite and >= 0, got {delta}"))?;
    check_target(target)?;
    check(tolerance > 0.0 && tolerance < 1.0, || format!("--tolerance must lie in (0, 1), got {tolerance}"))?;
    check(states >= MIN_STATES, || format!("--states must be at least {MIN_STATES}, got {states}"))?;
    Ok(Box::new(move || {
        eprintln!("calibrate: delta {delta}, target ARL {target}");
        let h = calibrate_limit_with(delta, target, tolerance, states)?;
        let arl = markov_arl(&MarkovSpec::new(states, delta, h)?)?;
        let mut t =
            Table::new(&["delta", "target_arl", "h", "states", "markov_arl", "markov_arl_doubled", "extrapolated_arl"]);
        t.row(&[
            num(delta),
            num(target),
            num(h),
            states.to_string(),
            num(arl.arl),
            num(arl.arl_doubled),
            num(arl.extrapolated),
        ]);
        Ok(t.finish())
    }))
}

/// Resolves `--h` or `--target-arl` into a chart configuration. Calibration
/// itself is cheap enough to run during validation.
fn resolve_limit(delta: Option<f64>, h: Option<f64>, target: Option<f64>, cap: Option<u64>) -> Outcome<CusumConfig> {
    let delta = need(delta, "delta")?;
    check(delta.is_finite() && delta >= 0.0, || format!("--delta must be finite and >= 0, got {delta}"))?;
    let cap = cap.unwrap_or(DEFAULT_CAP);
    let h = match (h, target) {
        (Some(_), Some(_)) => return Err(Failure::usage("give either --h or --target-arl, not both")),
        (Some(h), None) => h,
        (None, Some(target)) => {
            check_target(target)?;
            eprintln!("calibrating h for delta {delta}, target ARL {target}");
            calibrate_limit_with(delta, target, DEFAULT_TOLERANCE, DEFAULT_STATES)?
        }
        (None, None) => need(None, "h")?,
    };
    valid(CusumConfig::new(delta, h, cap))
}

fn prepare_arl(a: ArlArgs, seed: u64) -> Outcome<Box<dyn FnOnce() -> Outcome<String> + Send>> {
    let chart = need(a.chart, "chart")?;
    let runs = need(a.runs, "runs")?;
    check(runs >= 1, || "--runs must be at least 1".into())?;
    let model = valid(ProcessModel::new(a.mu.unwrap_or(0.0), a.sigma.unwrap_or(1.0)))?;
    let size = match chart {
        ChartKind::Known => None,
        ChartKind::SelfStarting => {
            let m = need(a.m, "m")?;
            check(m >= MIN_WARMUP, || format!("--m must be at least {MIN_WARMUP}, got {m}"))?;
            Some(m)
        }
        ChartKind::PlugIn => {
            let n = need(a.phase1_size, "phase1-size")?;
            check(n >= 2, || format!("--phase1-size must be at least 2, got {n}"))?;
            Some(n)
        }
    };
    let config = resolve_limit(a.delta, a.h, a.target_arl, a.cap)?;
    Ok(Box::new(move || {
        eprintln!("arl: {} chart, {runs} runs", chart.label());
        let est = match (chart, size) {
            (ChartKind::Known, _) => estimate_arl(|s| run_length_known(&config, &model, &model, s), runs, seed)?,
            (ChartKind::SelfStarting, Some(m)) => {
                estimate_arl(|s| run_length_self_starting_scenario1(&config, m, &model, s), runs, seed)?
            }
            (ChartKind::PlugIn, Some(n)) => estimate_arl(|s| run_length_plug_in(&config, n, &model, s), runs, seed)?,
            _ => unreachable!("size checked above"),
        };
        if est.is_lower_bound() {
            eprintln!("warning: {} of {runs} runs hit the cap; the mean is a lower bound", est.censored);
        }
        let mut t = Table::new(&["chart", "delta", "h", "m_or_phase1", "runs", "mean", "stderr", "censored", "seed"]);
        t.row(&[
            chart.label().to_string(),
            num(config.delta()),
            num(config.limit()),
            size.map(|n| n.to_string()).unwrap_or_default(),
            est.runs.to_string(),
            num(est.mean),
            num(est.stderr),
            est.censored.to_string(),
            seed.to_string(),
        ]);
        Ok(t.finish())
    }))
}

fn prepare_carl(a: CarlArgs, seed: u64) -> Outcome<Box<dyn FnOnce() -> Outcome<String> + Send>> {
    let m = need(a.m, "m")?;
    let warmups = need(a.warmups, "warmups")?;
    let per = need(a.runs_per_warmup, "runs-per-warmup")?;
    check(m >= MIN_WARMUP, || format!("--m must be at least {MIN_WARMUP}, got {m}"))?;
    check(warmups >= 2, || format!("--warmups must be at least 2, got {warmups}"))?;
    check(per >= 2, || format!("--runs-per-warmup must be at least 2, got {per}"))?;
    let config = resolve_limit(a.delta, a.h, a.target_arl, a.cap)?;
    Ok(Box::new(move || {
        eprintln!("carl-study: m {m}, {warmups} warmups x {per} runs");
        let study = carl_study(&config, m, warmups, per, &ProcessModel::standard(), seed)?;
        let mut t = Table::new(&[
            "record",
            "warmup_id",
            "mu_hat",
            "sigma_hat",
            "carl_mean",
            "carl_stderr",
            "runs",
            "censored",
            "tower_mean",
            "tower_stderr",
            "between_variance",
            "noise_floor",
        ]);
        for r in &study.records {
            t.row(&[
                "warmup".into(),
                r.warmup_id.to_string(),
                num(r.warmup_mean),
                num(r.warmup_sd),
                num(r.carl.mean),
                num(r.carl.stderr),
                r.carl.runs.to_string(),
                r.carl.censored.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        let tower = &study.tower;
        t.row(&[
            "summary".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            tower.runs.to_string(),
            tower.censored.to_string(),
            num(tower.mean),
            num(tower.stderr),
            num(study.between_variance),
            num(study.noise_floor),
        ]);
        Ok(t.finish())
    }))
}

fn prepare_ttest(a: TTestArgs, seed: u64) -> Outcome<Box<dyn FnOnce() -> Outcome<String> + Send>> {
    let cfg = valid(TTestConfig::new(need(a.nx, "nx")?, need(a.ny, "ny")?, a.alpha.unwrap_or(0.05)))?;
    let frozen = need(a.frozen_y, "frozen-y")?;
    let reps = need(a.reps_per_y, "reps-per-y")?;
    check(frozen >= 2, || format!("--frozen-y must be at least 2, got {frozen}"))?;
    check(reps >= 1, || "--reps-per-y must be at least 1".into())?;
    Ok(Box::new(move || {
        eprintln!("ttest-analogy: {frozen} frozen Y x {reps} reps");
        let levels = t_test_levels(&cfg, frozen, reps, seed)?;
        let mut t = Table::new(&[
            "record",
            "y_id",
            "y_mean",
            "level",
            "reps",
            "alpha",
            "critical_value",
            "unconditional_level",
            "unconditional_trials",
            "mean_conditional",
            "mean_conditional_stderr",
            "between_variance",
            "binomial_noise",
        ]);
        for c in &levels.conditional {
            let mut row = vec!["frozen-y".into(), c.y_id.to_string(), num(c.y_mean), num(c.level), c.reps.to_string()];
            row.resize(13, String::new());
            t.row(&row);
        }
        t.row(&[
            "summary".into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            num(cfg.alpha()),
            num(levels.critical_value),
            num(levels.unconditional_level),
            levels.unconditional_trials.to_string(),
            num(levels.mean_conditional),
            num(levels.mean_conditional_stderr),
            num(levels.between_variance),
            num(levels.binomial_noise),
        ]);
        Ok(t.finish())
    }))
}

fn prepare_transform(a: TransformArgs, seed: u64) -> Outcome<Box<dyn FnOnce() -> Outcome<String> + Send>> {
    let sequences = need(a.sequences, "sequences")?;
    let length = need(a.length, "length")?;
    let m = need(a.m, "m")?;
    check(sequences >= 1, || "--sequences must be at least 1".into())?;
    check(m >= MIN_WARMUP, || format!("--m must be at least {MIN_WARMUP}, got {m}"))?;
    check(length > m + 1, || format!("--length must exceed m + 1 = {}, got {length}", m + 1))?;
    let summary_only = a.summary_only;
    Ok(Box::new(move || {
        eprintln!("transform-check: {sequences} sequences of length {length}, warmup {m}");
        let check = transform_check(sequences, length, m, &ProcessModel::standard(), seed)?;
        let mut t = Table::new(&[
            "record",
            "sequence",
            "n",
            "u",
            "values",
            "ks_statistic",
            "ks_p_value",
            "autocorrelation",
            "pairs",
        ]);
        if !summary_only {
            for (i, seq) in check.sequences.iter().enumerate() {
                for (k, u) in seq.iter().enumerate() {
                    let mut row = vec!["u".into(), i.to_string(), (m + 1 + k).to_string(), num(*u)];
                    row.resize(9, String::new());
                    t.row(&row);
                }
            }
        }
        t.row(&[
            "summary".into(),
            String::new(),
            String::new(),
            String::new(),
            check.pooled_len().to_string(),
            num(check.ks.statistic),
            num(check.ks.p_value),
            num(check.autocorrelation),
            check.pairs.to_string(),
        ]);
        Ok(t.finish())
    }))
}
