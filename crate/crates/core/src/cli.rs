//! Batch front-end: `gen-data`, `train`, `price`, `diagnose`.
//!
//! Every command reads one config file (see [`crate::config`]), writes its
//! tables to `--out` and a `manifest-<command>.json` describing the run. Exit codes:
//! 0 ok, 2 config or usage error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::collocation::{
    default_xi_bar, CollocationBasis, CollocationValues, PiecewiseMap, TailDegree,
};
use crate::conditional::{self, PriceRow};
use crate::config::Config;
use crate::diagnostics::{self, Lognormal};
use crate::heston::{simulate_functional, HestonParams, Scheme, SimConfig};
use crate::payoffs::{
    mc_price, Aggregator, MonitoringSchedule, Omega, PayoffSpec, PriceEstimate, StrikeMode,
};
use crate::regressor::{
    generate_training_set, lhs_sample, train, ConditionalSpec, GenerationConfig, MlpModel,
    ParamRanges, ScheduleKind, Schema, TrainConfig, TrainingSet,
};
use crate::{rng, semianalytic, Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "heston-sc",
    version,
    about = "Collocation-compressed Monte Carlo for path-dependent Heston options"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pricing mode or diagnostic kind; overrides the config.
    #[arg(long, global = true)]
    mode: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Simulate parameter sets and write the training CSV.
    GenData,
    /// Fit the network to a training CSV and write the model JSON.
    Train,
    /// Price a strike table (modes: mc-benchmark, sc, sa, fxfla).
    Price,
    /// Error studies (kinds: interior, tail, sc-error, histogram).
    Diagnose,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::Price => "price",
            Command::Diagnose => "diagnose",
        }
    }
}

/// Resolved inputs of one command.
#[derive(Debug)]
pub struct RunConfig {
    command: Command,
    pub config: Config,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub mode: Option<String>,
}

impl RunConfig {
    /// Input path from `key`, relative to the config file; `default` is
    /// looked up in the output directory.
    fn input_path(&self, key: &str, default: &str) -> Result<PathBuf> {
        let p = match self.config.raw(key) {
            Some(v) => {
                let p = PathBuf::from(v);
                if p.is_absolute() {
                    p
                } else {
                    self.config_path.parent().unwrap_or(Path::new(".")).join(p)
                }
            }
            None => self.out_dir.join(default),
        };
        if !p.is_file() {
            return Err(Error::Config(format!(
                "{key}: input file {} not found",
                p.display()
            )));
        }
        Ok(p)
    }

    fn mode(&self, key: &str, default: &str) -> Result<String> {
        match &self.mode {
            Some(m) => Ok(m.clone()),
            None => self.config.get_or(key, default.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                3
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config_path = cli
        .config
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let config = Config::load(&config_path)?;
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_or("seed", 0u64)?,
    };
    std::fs::create_dir_all(&cli.out)?;
    let run = RunConfig {
        command: cli.command,
        config,
        config_path,
        out_dir: cli.out,
        seed,
        threads: cli.threads,
        mode: cli.mode,
    };
    set_threads(run.threads)?;
    let start = Instant::now();
    let outputs = match run.command {
        Command::GenData => cmd_gen_data(&run)?,
        Command::Train => cmd_train(&run)?,
        Command::Price => cmd_price(&run)?,
        Command::Diagnose => cmd_diagnose(&run)?,
    };
    write_manifest(&run, &outputs)?;
    println!("{} finished in {:.2?}", run.command.name(), start.elapsed());
    Ok(())
}

#[cfg(feature = "parallel")]
fn set_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A global pool can only be installed once per process; later
        // requests keep the first one.
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            log::warn!("thread pool already initialised; --threads ignored");
        }
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(n: Option<usize>) -> Result<()> {
    if n.is_some_and(|n| n != 1) {
        log::warn!("built without the parallel feature; running on one thread");
    }
    Ok(())
}

fn write_manifest(run: &RunConfig, outputs: &[PathBuf]) -> Result<()> {
    let hash = Sha256::digest(run.config.text().as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let files: Vec<String> = outputs
        .iter()
        .map(|p| {
            p.file_name().map_or_else(
                || p.display().to_string(),
                |f| f.to_string_lossy().into_owned(),
            )
        })
        .collect();
    let manifest = serde_json::json!({
        "command": run.command.name(),
        "mode": run.mode,
        "config": run.config_path.display().to_string(),
        "config_sha256": hex,
        "seed": run.seed,
        "threads": run.threads,
        "outputs": files,
        "versions": {
            "heston-sc": env!("CARGO_PKG_VERSION"),
            "training_csv": 1,
            "model_json": 1,
        },
    });
    std::fs::write(
        run.out_dir
            .join(format!("manifest-{}.json", run.command.name())),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

// ---- config readers ----

pub fn heston_params(c: &Config) -> Result<HestonParams> {
    let g = |k: &str| c.number(&format!("heston.{k}"));
    HestonParams::new(
        g("r")?,
        g("kappa")?,
        g("gamma")?,
        g("rho")?,
        g("v_bar")?,
        g("v0")?,
        c.number_or("heston.s0", 1.0)?,
    )?
    .with_shift(c.number_or("heston.shift", 0.0)?)
}

pub fn sim_config(c: &Config, seed: u64) -> Result<SimConfig> {
    let scheme: Scheme = c.get_or("sim.scheme", "aes".to_string())?.parse()?;
    Ok(SimConfig::new(c.get("sim.n_paths")?, c.number("sim.dt")?, seed).with_scheme(scheme))
}

pub fn basis(c: &Config) -> Result<CollocationBasis> {
    let tail: TailDegree = c.get_or("basis.tail", "linear".to_string())?.parse()?;
    CollocationBasis::new(
        c.get("basis.m")?,
        c.number_or("basis.xi_bar", default_xi_bar())?,
        tail,
    )
}

fn schedule_kind(c: &Config, section: &str) -> Result<ScheduleKind> {
    match c
        .get_or(&format!("{section}.schedule"), "from_origin".to_string())?
        .as_str()
    {
        "from_origin" => Ok(ScheduleKind::FromOrigin),
        "lagged" => Ok(ScheduleKind::Lagged {
            count: c.get(&format!("{section}.count"))?,
            lag: c.number(&format!("{section}.lag"))?,
        }),
        s => Err(Error::Config(format!(
            "{section}.schedule: unknown schedule {s:?} (from_origin, lagged)"
        ))),
    }
}

/// Monitoring dates up to `maturity` on the simulation grid `dt`.
fn schedule_for(kind: ScheduleKind, maturity: f64, dt: f64) -> Result<MonitoringSchedule> {
    match kind {
        ScheduleKind::FromOrigin => {
            MonitoringSchedule::from_origin(maturity, crate::payoffs::grid_index(maturity, dt)?)
        }
        ScheduleKind::Lagged { count, lag } => MonitoringSchedule::lagged(maturity, count, lag),
    }
}

/// `[payoff]`: the product priced by `price` and the sc-error diagnostic.
struct PayoffConfig {
    maturity: f64,
    omega: Omega,
    aggregator: Aggregator,
    schedule: MonitoringSchedule,
    mode: StrikeMode,
    k1: Vec<f64>,
    k2: Vec<f64>,
}

impl PayoffConfig {
    fn read(c: &Config) -> Result<Self> {
        let maturity = c.number("payoff.maturity")?;
        let omega: Omega = c.get_or("payoff.omega", "call".to_string())?.parse()?;
        let aggregator: Aggregator = c.get_or("payoff.aggregator", "mean".to_string())?.parse()?;
        let schedule = match schedule_kind(c, "payoff")? {
            ScheduleKind::FromOrigin => {
                MonitoringSchedule::from_origin(maturity, c.get("payoff.intervals")?)?
            }
            ScheduleKind::Lagged { count, lag } => {
                MonitoringSchedule::lagged(maturity, count, lag)?
            }
        };
        let mode = match c
            .get_or("payoff.strike_mode", "fixed".to_string())?
            .as_str()
        {
            "fixed" => StrikeMode::Fixed,
            "floating" => StrikeMode::Floating,
            "fixed_and_floating" => StrikeMode::FixedAndFloating,
            s => {
                return Err(Error::Config(format!(
                    "payoff.strike_mode: unknown mode {s:?}"
                )))
            }
        };
        let k1 = if mode == StrikeMode::Fixed {
            vec![0.0]
        } else {
            c.numbers("payoff.k1")?
        };
        let k2 = if mode == StrikeMode::Floating {
            vec![0.0]
        } else {
            c.numbers("payoff.strikes")?
        };
        if k1.is_empty() || k2.is_empty() {
            return Err(Error::Config("payoff: empty strike list".into()));
        }
        Ok(PayoffConfig {
            maturity,
            omega,
            aggregator,
            schedule,
            mode,
            k1,
            k2,
        })
    }

    fn specs(&self) -> Result<Vec<PayoffSpec>> {
        let mut out = Vec::new();
        for &k1 in &self.k1 {
            for &k2 in &self.k2 {
                out.push(match self.mode {
                    StrikeMode::Fixed => PayoffSpec::fixed(self.aggregator, self.omega, k2)?,
                    StrikeMode::Floating => PayoffSpec::floating(self.aggregator, self.omega, k1)?,
                    StrikeMode::FixedAndFloating => {
                        PayoffSpec::fixed_and_floating(self.aggregator, self.omega, k1, k2)?
                    }
                });
            }
        }
        Ok(out)
    }
}

fn param_ranges(c: &Config, schema: Schema) -> Result<ParamRanges> {
    let preset = c.get_or("data.ranges", schema.as_str().to_ascii_lowercase())?;
    let mut r = match preset.as_str() {
        "toy" => ParamRanges::toy(),
        "fxa" => ParamRanges::fxa(),
        "fxl" => ParamRanges::fxl(),
        "fxfla" => ParamRanges::fxfla(),
        s => return Err(Error::Config(format!("data.ranges: unknown preset {s:?}"))),
    };
    for (key, slot) in [
        ("r", &mut r.r),
        ("kappa", &mut r.kappa),
        ("gamma", &mut r.gamma),
        ("rho", &mut r.rho),
        ("v_bar", &mut r.v_bar),
        ("v0", &mut r.v0),
    ] {
        let k = format!("data.{key}");
        if c.contains(&k) {
            *slot = c.range(&k)?;
        }
    }
    Ok(r)
}

pub fn generation_config(c: &Config, seed: u64) -> Result<GenerationConfig> {
    let schema: Schema = c.get("data.schema")?;
    let conditional = if schema == Schema::FxFlA {
        Some(ConditionalSpec {
            q: c.get("conditional.q")?,
            p_min: c.number("conditional.p_min")?,
            p_max: c.number("conditional.p_max")?,
            window: c.get("conditional.window")?,
        })
    } else {
        None
    };
    Ok(GenerationConfig {
        schema,
        n_sets: c.get("data.n_sets")?,
        ranges: param_ranges(c, schema)?,
        t_min: c.number("data.t_min")?,
        t_max: c.number("data.t_max")?,
        schedule: schedule_kind(c, "data")?,
        aggregator: c.get_or("data.aggregator", "mean".to_string())?.parse()?,
        s0: c.number_or("data.s0", 1.0)?,
        shift: c.number_or("data.shift", 0.0)?,
        n_paths: c.get("data.n_paths")?,
        dt: c.number("data.dt")?,
        seed,
        basis: basis(c)?,
        conditional,
    })
}

pub fn train_config(c: &Config, seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::full_scale();
    let split = if c.contains("train.split") {
        match c.numbers("train.split")?.as_slice() {
            [a, b, t] => (*a, *b, *t),
            _ => {
                return Err(Error::Config(
                    "train.split: expected three fractions".into(),
                ))
            }
        }
    } else {
        d.split
    };
    Ok(TrainConfig {
        hidden: if c.contains("train.hidden") {
            c.list("train.hidden")?
        } else {
            d.hidden
        },
        epochs: c.get_or("train.epochs", d.epochs)?,
        batch_size: c.get_or("train.batch_size", d.batch_size)?,
        learning_rate: c.number_or("train.learning_rate", d.learning_rate)?,
        decay_rate: c.number_or("train.decay_rate", d.decay_rate)?,
        decay_step: c.get_or("train.decay_step", d.decay_step)?,
        split,
        seed,
    })
}

// ---- commands ----

pub fn cmd_gen_data(run: &RunConfig) -> Result<Vec<PathBuf>> {
    let gc = generation_config(&run.config, run.seed)?;
    let start = Instant::now();
    let ts = generate_training_set(&gc)?;
    let path = run
        .out_dir
        .join(run.config.get_or("data.file", "training.csv".to_string())?);
    ts.write_csv(&path)?;
    println!(
        "wrote {} rows to {} in {:.2?}",
        ts.len(),
        path.display(),
        start.elapsed()
    );
    Ok(vec![path])
}

pub fn cmd_train(run: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = run.input_path("train.data", "training.csv")?;
    let ts = TrainingSet::read_csv(&data)?;
    let b = basis(&run.config)?;
    let tc = train_config(&run.config, run.seed)?;
    let start = Instant::now();
    let (model, report) = train(&ts, &b, &tc)?;
    let model_path = run
        .out_dir
        .join(run.config.get_or("train.model", "model.json".to_string())?);
    model.save(&model_path)?;
    let report_path = run.out_dir.join("train_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    println!(
        "layers {:?}: best epoch {}, validation mse {:.3e}, test mse {:.3e}, worst test R^2 {:.5} ({:.2?})",
        model.layer_sizes(),
        report.best_epoch,
        report.best_val_mse,
        report.test_mse,
        report.worst_r2(),
        start.elapsed()
    );
    Ok(vec![model_path, report_path])
}

/// The collocation map used by the `sc` and `sa` modes: either the fixture
/// `price.cvs` (with `[basis]`) or the model prediction at the `[heston]`
/// parameters.
fn pricing_map(run: &RunConfig, p: &HestonParams, maturity: f64) -> Result<PiecewiseMap> {
    let c = &run.config;
    if c.contains("price.cvs") {
        let b = basis(c)?;
        return PiecewiseMap::new(b, &CollocationValues(c.numbers("price.cvs")?));
    }
    let model = MlpModel::load(&run.input_path("price.model", "model.json")?)?;
    if model.schema == Schema::FxFlA {
        return Err(Error::Config("an FxFlA model needs mode fxfla".into()));
    }
    // A is positively homogeneous in S, so a model trained at one initial
    // value serves any other by scaling (only without a shift).
    let model_s0 = run
        .config
        .number_or("price.model_s0", run.config.number_or("data.s0", p.s0)?)?;
    let scale = p.s0 / model_s0;
    if scale != 1.0 && p.shift != 0.0 {
        return Err(Error::Config(
            "rescaling a model to another S0 needs shift = 0".into(),
        ));
    }
    let inputs = model.schema.inputs(&p.with_s0(model_s0)?, maturity);
    let cvs = model.predict_cvs(&inputs)?;
    PiecewiseMap::new(
        model.collocation_basis()?,
        &CollocationValues(cvs.0.iter().map(|a| a * scale).collect()),
    )
}

pub fn cmd_price(run: &RunConfig) -> Result<Vec<PathBuf>> {
    let c = &run.config;
    let mode = run.mode("price.mode", "mc-benchmark")?;
    let p = heston_params(c)?;
    let pay = PayoffConfig::read(c)?;
    let discount = (-p.r * pay.maturity).exp();
    let n_draws = c.get_or("price.n_draws", 100_000usize)?;
    let mut extra = Vec::new();
    let rows: Vec<PriceRow> = match mode.as_str() {
        "mc-benchmark" => {
            let sim = sim_config(c, run.seed)?;
            let (a, s_t) = simulate_functional(&p, &sim, &pay.schedule, pay.aggregator)?;
            pay.specs()?
                .iter()
                .map(|spec| {
                    let e = mc_price(spec, &a, Some(&s_t), discount)?;
                    Ok(row(spec, e))
                })
                .collect::<Result<_>>()?
        }
        "sc" | "sa" => {
            if pay.mode != StrikeMode::Fixed {
                return Err(Error::Config(format!(
                    "mode {mode} prices fixed strikes only"
                )));
            }
            let map = pricing_map(run, &p, pay.maturity)?;
            let cvs_path = run.out_dir.join("cvs.csv");
            std::fs::write(
                &cvs_path,
                format!(
                    "{}\n",
                    CollocationValues(map.values().to_vec()).to_csv_row()
                ),
            )?;
            extra.push(cvs_path);
            let draws = if mode == "sc" {
                map.sample(n_draws, run.seed)
            } else {
                Vec::new()
            };
            pay.specs()?
                .iter()
                .map(|spec| {
                    let e = if mode == "sc" {
                        mc_price(spec, &draws, None, discount)?
                    } else {
                        PriceEstimate {
                            price: semianalytic::price(&map, spec.k2, spec.omega, discount)?,
                            std_err: 0.0,
                        }
                    };
                    Ok(row(spec, e))
                })
                .collect::<Result<_>>()?
        }
        "fxfla" => {
            let model = MlpModel::load(&run.input_path("price.model", "model.json")?)?;
            let sim = sim_config(c, rng::derive(run.seed, 1))?;
            let marginal = conditional::build_marginal(&p, &sim, pay.maturity)?;
            let grid = conditional::build_grid(
                &model,
                &p,
                pay.maturity,
                &marginal,
                c.get("conditional.q")?,
                c.number("conditional.p_min")?,
                c.number("conditional.p_max")?,
            )?;
            let seed = rng::derive(run.seed, 2);
            let samples = if c.get_or("price.brute_force", false)? {
                conditional::sample_joint_brute_force(
                    &model,
                    &p,
                    pay.maturity,
                    &marginal,
                    n_draws,
                    seed,
                )?
            } else {
                conditional::sample_joint(&grid, &marginal, n_draws, seed)
            };
            if samples.clamped_fraction > 0.0 {
                log::info!(
                    "{:.2}% of S(T) draws clamped to the reference range",
                    100.0 * samples.clamped_fraction
                );
            }
            let strikes: Vec<(f64, f64)> = pay
                .k1
                .iter()
                .flat_map(|&a| pay.k2.iter().map(move |&b| (a, b)))
                .collect();
            conditional::price_fxfla(&samples, &strikes, pay.omega, discount)?
        }
        m => {
            return Err(Error::Config(format!(
                "unknown pricing mode {m:?} (mc-benchmark, sc, sa, fxfla)"
            )))
        }
    };
    for r in &rows {
        println!(
            "K1 {:>8} K2 {:>8}  {:.6} +- {:.6}",
            r.k1, r.k2, r.price, r.std_err
        );
    }
    let path = run.out_dir.join("prices.csv");
    conditional::write_price_table(&path, &rows)?;
    extra.insert(0, path);
    Ok(extra)
}

fn row(spec: &PayoffSpec, e: PriceEstimate) -> PriceRow {
    PriceRow {
        k1: spec.k1,
        k2: spec.k2,
        omega: spec.omega,
        price: e.price,
        std_err: e.std_err,
    }
}

pub fn cmd_diagnose(run: &RunConfig) -> Result<Vec<PathBuf>> {
    let c = &run.config;
    let kind = run.mode("diagnose.kind", "interior")?;
    let target = Lognormal {
        mu: c.number_or("diagnose.mu", 0.0)?,
        sigma: c.number_or("diagnose.sigma", 0.4)?,
    };
    let tail: TailDegree = c.get_or("basis.tail", "linear".to_string())?.parse()?;
    let xi_bar = c.number_or("basis.xi_bar", default_xi_bar())?;
    let out = |name: &str| run.out_dir.join(name);
    match kind.as_str() {
        "interior" => {
            let ms: Vec<usize> = if c.contains("diagnose.m_values") {
                c.list("diagnose.m_values")?
            } else {
                (4..=12).collect()
            };
            let curve = diagnostics::sweep_interior_error(&target, &ms, xi_bar, tail)?;
            println!(
                "ln(epsilon_M) slope per collocation point: {:.4}",
                curve.log_slope
            );
            curve.write_csv(&out("interior_error.csv"), "m", "epsilon_m")?;
            std::fs::write(
                out("interior_error.json"),
                serde_json::to_string_pretty(&curve)?,
            )?;
            Ok(vec![out("interior_error.csv"), out("interior_error.json")])
        }
        "tail" => {
            let xbs = if c.contains("diagnose.xi_bars") {
                c.numbers("diagnose.xi_bars")?
            } else {
                vec![1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
            };
            let curve =
                diagnostics::sweep_tail_error(&target, &xbs, c.get_or("basis.m", 21usize)?, tail)?;
            println!(
                "ln(epsilon_- + epsilon_+) slope per unit xi_bar: {:.4}",
                curve.log_slope
            );
            curve.write_csv(&out("tail_error.csv"), "xi_bar", "epsilon_tails")?;
            std::fs::write(
                out("tail_error.json"),
                serde_json::to_string_pretty(&curve)?,
            )?;
            Ok(vec![out("tail_error.csv"), out("tail_error.json")])
        }
        "sc-error" => {
            let p = heston_params(c)?;
            let pay = PayoffConfig::read(c)?;
            if pay.mode != StrikeMode::Fixed {
                return Err(Error::Config(
                    "sc-error compares fixed-strike prices only".into(),
                ));
            }
            let sim = sim_config(c, run.seed)?;
            let (a, _) = simulate_functional(&p, &sim, &pay.schedule, pay.aggregator)?;
            let map = if c.contains("price.model") || c.contains("price.cvs") {
                pricing_map(run, &p, pay.maturity)?
            } else {
                let b = basis(c)?;
                let cvs = crate::collocation::cvs_from_samples(&a, &b)?;
                PiecewiseMap::new(b, &cvs)?
            };
            let n_probe = c.get_or("diagnose.n_probe", 10_000usize)?;
            let mut report =
                diagnostics::estimate_sc_error(&a, &map, n_probe, rng::derive(run.seed, 1))?;
            report.pricing = diagnostics::pricing_errors(&a, &map, &pay.k2, pay.omega)?;
            println!(
                "epsilon_sc {:.3e} = {:.3e} (left) + {:.3e} (interior) + {:.3e} (right)",
                report.epsilon_sc, report.epsilon_minus, report.epsilon_m, report.epsilon_plus
            );
            report.write_json(&out("sc_error.json"))?;
            Ok(vec![out("sc_error.json")])
        }
        "histogram" => {
            let h = fixed_strike_histogram(run)?;
            println!(
                "{:.1}% of {} cases within 3 SE",
                100.0 * h.within_3se,
                h.cases.len()
            );
            h.write_csv(&out("histogram.csv"))?;
            h.write_json(&out("histogram.json"))?;
            Ok(vec![out("histogram.csv"), out("histogram.json")])
        }
        k => Err(Error::Config(format!(
            "unknown diagnostic {k:?} (interior, tail, sc-error, histogram)"
        ))),
    }
}

/// Semi-analytic model prices against Monte Carlo at random parameter sets
/// from the `[data]` ranges, random admissible maturities and strikes
/// `moneyness * (S0 - shift)`.
fn fixed_strike_histogram(run: &RunConfig) -> Result<diagnostics::ErrorHistogram> {
    let c = &run.config;
    let model = MlpModel::load(&run.input_path("price.model", "model.json")?)?;
    if model.schema == Schema::FxFlA {
        return Err(Error::Config(
            "histogram supports fixed-strike models (FxA, FxL)".into(),
        ));
    }
    let gc = generation_config(c, run.seed)?;
    let mats = gc.maturity_indices()?;
    if mats.is_empty() {
        return Err(Error::Config(
            "no admissible maturity in the [data] range".into(),
        ));
    }
    let n_sets = c.get_or("diagnose.n_sets", 20usize)?;
    let moneyness = if c.contains("diagnose.moneyness") {
        c.numbers("diagnose.moneyness")?
    } else {
        vec![0.9, 1.0, 1.1]
    };
    let omega: Omega = c.get_or("diagnose.omega", "call".to_string())?.parse()?;
    let n_paths = c.get_or("diagnose.n_paths", 100_000usize)?;
    let sets = lhs_sample(&gc.ranges.as_array(), n_sets, rng::derive(run.seed, 11))?;
    let mut pick = rng::stream(rng::derive(run.seed, 12), 0);
    let mut cases = Vec::with_capacity(n_sets);
    for s in &sets {
        use rand::Rng as _;
        let idx = mats[pick.random_range(0..mats.len())];
        let hp =
            HestonParams::new(s[0], s[1], s[2], s[3], s[4], s[5], gc.s0)?.with_shift(gc.shift)?;
        cases.push((hp, idx as f64 * gc.dt));
    }
    let k = moneyness.len();
    let base = gc.s0 - gc.shift;
    diagnostics::error_histogram(
        n_sets * k,
        |i| (i / k, base * moneyness[i % k]),
        |&(set, strike)| {
            let (hp, t) = cases[set];
            let cvs = model.predict_cvs(&model.schema.inputs(&hp, t))?;
            let map = PiecewiseMap::new(model.collocation_basis()?, &cvs)?;
            semianalytic::price(&map, strike, omega, (-hp.r * t).exp())
        },
        |&(set, strike)| {
            let (hp, t) = cases[set];
            let sched = schedule_for(gc.schedule, t, gc.dt)?;
            // Strikes of one set share their paths.
            let sim = SimConfig::new(n_paths, gc.dt, rng::derive(run.seed, 100 + set as u64));
            let (a, _) = simulate_functional(&hp, &sim, &sched, gc.aggregator)?;
            mc_price(
                &PayoffSpec::fixed(gc.aggregator, omega, strike)?,
                &a,
                None,
                (-hp.r * t).exp(),
            )
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["heston-sc", "bogus"]), 2);
        assert_eq!(main_with_args(["heston-sc", "price"]), 2);
        assert_eq!(main_with_args(["heston-sc", "--help"]), 0);
    }

    #[test]
    fn payoff_reader() {
        let c = Config::parse(
            "[payoff]\nmaturity = 0.25\nintervals = 200\nstrike_mode = fixed_and_floating\nk1 = 0.5, 1\nstrikes = 0, 0.1\n",
        )
        .unwrap();
        let p = PayoffConfig::read(&c).unwrap();
        assert_eq!(p.schedule.len(), 201);
        assert_eq!(p.specs().unwrap().len(), 4);
    }
}
