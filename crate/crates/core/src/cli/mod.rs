//! Subcommand implementations behind the `rayleigh-fwmdn` binary.
//!
//! Every subcommand takes all randomness from a `--seed` flag, honors
//! `--threads` (or the `RAYLEIGH_FWMDN_THREADS` environment variable) and
//! writes artifacts without timestamps, so identical invocations produce
//! byte-identical files.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    generate_dataset, load_dataset, save_dataset, split_dataset, Dataset, NoiseSpec, SampleRanges,
};
use crate::dispersion::{
    dispersion_curve, uniform_grid, EarthStack, LayerParams, RootSearchConfig,
    DEFAULT_THICKNESS_KM, PAPER_OMEGA_MAX, PAPER_OMEGA_MIN, PAPER_OMEGA_POINTS,
};
use crate::eval::{
    candidate_profiles, noise_robustness_sweep, nonuniqueness_probe, toy_experiment, ForwardMode,
};
use crate::neural::{
    load_model, save_model, train, DenseNetSpec, HiddenActivation, LossKind, Model, OutputHead,
    TrainConfig, TrainData,
};
use crate::util::{resolve_threads, stream_rng, uniform_in};

/// Noise specifications matching the robustness-table column set.
pub const TABLE_NOISE_SPECS_JSON: &str = include_str!("../../assets/table4_noise_specs.json");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Dispersion(#[from] crate::dispersion::DispersionError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "rayleigh-fwmdn",
    about = "Rayleigh-wave dispersion forward modelling and MDN-based S-wave velocity inversion",
    version
)]
pub struct Cli {
    /// Worker threads (default: RAYLEIGH_FWMDN_THREADS or all cores).
    /// Results are identical for any value; 1 avoids all thread spawning.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute a dispersion curve for a velocity profile.
    Forward(ForwardArgs),
    /// Generate a (profile, curve) dataset from a range preset.
    GenData(GenDataArgs),
    /// Train a network on a dataset file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset's test split.
    Eval(EvalArgs),
    /// Run the sinusoid toy experiment.
    Toy(ToyArgs),
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    /// Comma-separated S-wave velocities [km/s], surface first.
    #[arg(long, value_delimiter = ',', required = true)]
    pub vs: Vec<f64>,
    /// Layer thickness [km].
    #[arg(long, default_value_t = DEFAULT_THICKNESS_KM)]
    pub thickness: f64,
    /// Use exact Poisson-solid parameters (lambda = mu) instead of the
    /// empirical relations.
    #[arg(long)]
    pub poisson: bool,
    /// Frequency grid as lo,hi,n [rad/s].
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG line plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Root-search bracket lower bound [km/s] (default 0.85 min vs).
    #[arg(long)]
    pub c_min: Option<f64>,
    /// Root-search bracket upper bound [km/s] (default 1.05 max vs).
    #[arg(long)]
    pub c_max: Option<f64>,
    /// Scan points across the bracket.
    #[arg(long, default_value_t = 400)]
    pub grid_points: usize,
    /// Bisection tolerance [km/s].
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

impl SearchArgs {
    fn config(&self, stack: &EarthStack) -> RootSearchConfig {
        let mut cfg = RootSearchConfig::for_stack(stack);
        if let Some(c) = self.c_min {
            cfg.c_min = c;
        }
        if let Some(c) = self.c_max {
            cfg.c_max = c;
        }
        cfg.grid_points = self.grid_points;
        cfg.tol = self.tol;
        cfg
    }
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Layer count preset (3, 5 or 9).
    #[arg(long, value_parser = ["3", "5", "9"])]
    pub layers: String,
    /// Number of samples.
    #[arg(long)]
    pub num: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Layer thickness [km].
    #[arg(long, default_value_t = DEFAULT_THICKNESS_KM)]
    pub thickness: f64,
    /// Frequency grid as lo,hi,n [rad/s] (default the 50-point grid).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainKind {
    /// Forward surrogate x -> y.
    FwFnn,
    /// Baseline inverse regression y -> x.
    Fnn,
    /// Mixture inversion with the forward-consistency loss (needs
    /// --surrogate).
    Fwmdn,
    /// Mixture inversion with the bare likelihood loss.
    MdnToy,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub kind: TrainKind,
    /// Dataset CSV produced by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON run configuration (schema in the README).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frozen forward-surrogate checkpoint (fwmdn only).
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    /// Training-log output path (default: <out>.log.json).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Overrides the run seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Model checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset CSV; evaluation runs on its test split.
    #[arg(long)]
    pub data: PathBuf,
    /// Report output path (JSON array, one entry per noise spec).
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with a list of noise specs (default: no noise). The
    /// token "table" selects the shipped robustness column set.
    #[arg(long)]
    pub noise_specs: Option<String>,
    /// Forward map for curve-space scores.
    #[arg(long, value_enum, default_value_t = ForwardChoice::Exact)]
    pub forward: ForwardChoice,
    /// Surrogate checkpoint (required for --forward surrogate).
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    /// Split seed that reproduces the training partition.
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    /// Seed for the plotted-sample selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for per-sample plot CSVs (4 random test samples).
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    /// Also run the near-duplicate-curve probe on the whole dataset and
    /// write pair data (needs --plot-dir for the CSV).
    #[arg(long)]
    pub probe: bool,
    /// Probe: relative curve radius.
    #[arg(long, default_value_t = 0.005)]
    pub probe_radius: f64,
    /// Probe: relative profile threshold.
    #[arg(long, default_value_t = 0.10)]
    pub probe_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForwardChoice {
    Exact,
    Surrogate,
    None,
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the report and scatter files.
    #[arg(long)]
    pub out: PathBuf,
}

/// Optional JSON run configuration for `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFileConfig {
    #[serde(default)]
    pub train: TrainConfig,
    /// Hidden layer widths (defaults depend on --kind).
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    /// Mixture components (mdn kinds).
    #[serde(default)]
    pub components: Option<usize>,
    #[serde(default)]
    pub sigma_scale: Option<f64>,
    #[serde(default)]
    pub alpha_w: Option<f64>,
    #[serde(default)]
    pub alpha_b: Option<f64>,
    #[serde(default)]
    pub activation: Option<HiddenActivation>,
    /// Seed of the train/validation/test partition.
    #[serde(default)]
    pub split_seed: Option<u64>,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            hidden: None,
            components: None,
            sigma_scale: None,
            alpha_w: None,
            alpha_b: None,
            activation: None,
            split_seed: None,
        }
    }
}

/// Parses the process arguments, runs the selected subcommand and maps any
/// failure to a nonzero exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs a parsed command (separated from `run` so tests can drive it).
pub fn dispatch(cli: &Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads);
    match &cli.command {
        Command::Forward(args) => cmd_forward(args),
        Command::GenData(args) => cmd_gen_data(args, threads),
        Command::Train(args) => cmd_train(args, threads),
        Command::Eval(args) => cmd_eval(args, threads),
        Command::Toy(args) => cmd_toy(args, threads),
    }
}

fn parse_grid(grid: &Option<Vec<f64>>) -> Result<Vec<f64>> {
    match grid {
        None => Ok(uniform_grid(PAPER_OMEGA_MIN, PAPER_OMEGA_MAX, PAPER_OMEGA_POINTS)),
        Some(v) => {
            if v.len() != 3 {
                return Err(CliError::Usage(format!(
                    "grid must be lo,hi,n (3 values), got {v:?}"
                )));
            }
            let n = v[2] as usize;
            if v[0] <= 0.0 || v[1] <= v[0] || n < 2 {
                return Err(CliError::Usage(format!(
                    "grid must be lo,hi,n with 0 < lo < hi and n >= 2, got {v:?}"
                )));
            }
            Ok(uniform_grid(v[0], v[1], n))
        }
    }
}

fn cmd_forward(args: &ForwardArgs) -> Result<()> {
    if args.vs.is_empty() {
        return Err(CliError::Usage("--vs needs at least one velocity".into()));
    }
    let stack = if args.poisson {
        let layers = args
            .vs
            .iter()
            .map(|&v| LayerParams::poisson_from_vs(v))
            .collect::<crate::dispersion::Result<Vec<_>>>()?;
        EarthStack::new(layers, vec![args.thickness; args.vs.len() - 1])?
    } else {
        EarthStack::from_vs_profile(&args.vs, args.thickness)?
    };
    let omegas = parse_grid(&args.grid)?;
    let cfg = args.search.config(&stack);
    let curve = dispersion_curve(&stack, &omegas, &cfg)?;

    let mut lines = vec!["omega,velocity".to_string()];
    for (w, c) in curve.omegas.iter().zip(&curve.velocities) {
        lines.push(format!("{w:.16e},{c:.16e}"));
    }
    std::fs::write(&args.out, lines.join("\n") + "\n")?;
    if let Some(svg) = &args.svg {
        plot::line_plot_svg(
            svg,
            "Rayleigh dispersion curve",
            "angular frequency [rad/s]",
            "phase velocity [km/s]",
            &[(
                "fundamental mode".to_string(),
                curve.omegas.clone(),
                curve.velocities.clone(),
            )],
        )?;
    }
    println!(
        "wrote {} points to {}",
        curve.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gen_data(args: &GenDataArgs, threads: usize) -> Result<()> {
    let layers: usize = args.layers.parse().expect("validated by clap");
    let ranges = SampleRanges::preset(layers)?;
    let grid = parse_grid(&args.grid)?;
    let report = generate_dataset(
        &ranges,
        args.num,
        &grid,
        args.seed,
        RootSearchConfig::for_stack,
        args.thickness,
        threads,
    )?;
    save_dataset(&args.out, &report.dataset)?;
    println!(
        "wrote {} samples to {} ({} draws discarded)",
        report.dataset.samples.len(),
        args.out.display(),
        report.discards
    );
    Ok(())
}

fn load_train_config(args: &TrainArgs) -> Result<TrainFileConfig> {
    let mut cfg: TrainFileConfig = match &args.config {
        None => TrainFileConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
        }
    };
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    cfg.train
        .validate()
        .map_err(|e| CliError::Usage(format!("config: {e}")))?;
    Ok(cfg)
}

/// Architecture defaults per training kind.
fn default_hidden(kind: TrainKind, n_z: usize) -> Vec<usize> {
    match kind {
        TrainKind::FwFnn => vec![40, 100, 200, 200],
        TrainKind::Fnn if n_z <= 5 => vec![150, 150, 150, 100, 100],
        TrainKind::Fnn => vec![400, 400, 300, 300, 300],
        TrainKind::Fwmdn => vec![400, 300, 300, 300, 300],
        TrainKind::MdnToy => vec![32, 32],
    }
}

fn default_alphas(kind: TrainKind) -> (f64, f64) {
    match kind {
        TrainKind::FwFnn | TrainKind::Fnn => (0.001, 0.001),
        TrainKind::Fwmdn => (1e-5, 1e-5),
        TrainKind::MdnToy => (1e-5, 1e-5),
    }
}

fn cmd_train(args: &TrainArgs, threads: usize) -> Result<()> {
    let cfg = load_train_config(args)?;
    let dataset = load_dataset(&args.data)?;
    let n = dataset.samples.len();
    let split = split_dataset(n, cfg.split_seed.unwrap_or(1))?;

    let (n_z, n_omega) = (dataset.header.n_z, dataset.header.n_omega);
    let surrogate = match (args.kind, &args.surrogate) {
        (TrainKind::Fwmdn, None) => {
            return Err(CliError::Usage(
                "--kind fwmdn requires --surrogate <fw-fnn checkpoint>".into(),
            ))
        }
        (_, Some(path)) => Some(load_model(path)?),
        _ => None,
    };
    if let Some(sur) = &surrogate {
        if sur.spec.input_dim() != n_z || sur.spec.output_dim() != n_omega {
            return Err(CliError::Usage(format!(
                "surrogate maps {} -> {}, dataset needs {n_z} -> {n_omega}",
                sur.spec.input_dim(),
                sur.spec.output_dim()
            )));
        }
    }

    let inverse = !matches!(args.kind, TrainKind::FwFnn);
    let matrices = |idx: &[usize]| -> (Array2<f64>, Array2<f64>) {
        if inverse {
            (dataset.y_matrix(idx), dataset.x_matrix(idx))
        } else {
            (dataset.x_matrix(idx), dataset.y_matrix(idx))
        }
    };
    let (train_in, train_out) = matrices(&split.train);
    let (val_in, val_out) = matrices(&split.validation);

    let hidden = cfg
        .hidden
        .clone()
        .unwrap_or_else(|| default_hidden(args.kind, n_z));
    let (alpha_w_default, alpha_b_default) = default_alphas(args.kind);
    let alpha_w = cfg.alpha_w.unwrap_or(alpha_w_default);
    let alpha_b = cfg.alpha_b.unwrap_or(alpha_b_default);
    let activation = cfg.activation.unwrap_or(HiddenActivation::Tanh);

    let (input_dim, output_dim, head) = match args.kind {
        TrainKind::FwFnn => (n_z, n_omega, OutputHead::Linear),
        TrainKind::Fnn => (n_omega, n_z, OutputHead::Linear),
        TrainKind::Fwmdn | TrainKind::MdnToy => {
            let k = cfg
                .components
                .unwrap_or(if args.kind == TrainKind::Fwmdn { 2 } else { 4 });
            let sigma_scale = cfg.sigma_scale.unwrap_or(0.001);
            (
                n_omega,
                (2 * n_z + 1) * k,
                OutputHead::Mdn {
                    components: k,
                    sigma_scale,
                },
            )
        }
    };
    let spec = DenseNetSpec::with_hidden(
        input_dim,
        &hidden,
        output_dim,
        activation,
        head,
        alpha_w,
        alpha_b,
    );

    let data = TrainData {
        train_inputs: &train_in,
        train_targets: &train_out,
        val_inputs: &val_in,
        val_targets: &val_out,
        train_curves: None,
        val_curves: None,
    };
    let kind = match (args.kind, &surrogate) {
        (TrainKind::FwFnn | TrainKind::Fnn, _) => LossKind::SquaredError,
        (TrainKind::MdnToy, _) => LossKind::MdnNll,
        (TrainKind::Fwmdn, Some(sur)) => LossKind::FwMdn { surrogate: sur },
        (TrainKind::Fwmdn, None) => unreachable!("checked above"),
    };
    let (model, log) = train(&spec, &data, &kind, &cfg.train, threads)?;
    save_model(&args.out, &model)?;
    let log_path = args
        .log
        .clone()
        .unwrap_or_else(|| args.out.with_extension("log.json"));
    std::fs::write(
        &log_path,
        serde_json::to_string_pretty(&log).expect("log serializes"),
    )?;
    println!(
        "trained {:?} for {} epochs (best validation loss {:.6} at epoch {}); checkpoint {}",
        args.kind,
        log.epochs.len(),
        log.best_validation_loss,
        log.best_epoch,
        args.out.display()
    );
    Ok(())
}

fn load_noise_specs(arg: &Option<String>) -> Result<Vec<NoiseSpec>> {
    let text = match arg {
        None => return Ok(vec![NoiseSpec::none()]),
        Some(token) if token == "table" => TABLE_NOISE_SPECS_JSON.to_string(),
        Some(path) => std::fs::read_to_string(path)?,
    };
    let specs: Vec<NoiseSpec> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("noise specs: {e}")))?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

fn cmd_eval(args: &EvalArgs, threads: usize) -> Result<()> {
    let model = load_model(&args.model)?;
    let dataset = load_dataset(&args.data)?;
    let split = split_dataset(dataset.samples.len(), args.split_seed)?;
    let test_x: Vec<Vec<f64>> = split
        .test
        .iter()
        .map(|&j| dataset.samples[j].x.clone())
        .collect();
    let test_y: Vec<Vec<f64>> = split
        .test
        .iter()
        .map(|&j| dataset.samples[j].y.clone())
        .collect();
    let specs = load_noise_specs(&args.noise_specs)?;

    let surrogate_model = args.surrogate.as_ref().map(load_model).transpose()?;
    let forward = match args.forward {
        ForwardChoice::None => None,
        ForwardChoice::Exact => Some(ForwardMode::Exact {
            thickness: dataset.header.thickness,
        }),
        ForwardChoice::Surrogate => {
            let sur = surrogate_model.as_ref().ok_or_else(|| {
                CliError::Usage("--forward surrogate requires --surrogate".into())
            })?;
            Some(ForwardMode::Surrogate(sur))
        }
    };

    let reports = noise_robustness_sweep(
        &model,
        &test_x,
        &test_y,
        &specs,
        forward.as_ref(),
        &dataset.header.grid,
        threads,
    )?;
    std::fs::write(
        &args.out,
        serde_json::to_string_pretty(&reports).expect("report serializes"),
    )?;
    for r in &reports {
        println!(
            "noise {:<22} {} = {:.4}{}",
            r.noise,
            r.metric,
            r.overall,
            r.y_r_squared
                .map(|v| format!(", curve R2 = {v:.4}"))
                .unwrap_or_default()
        );
    }

    if let Some(dir) = &args.plot_dir {
        std::fs::create_dir_all(dir)?;
        write_sample_plots(dir, &model, &dataset, &split.test, args.seed, forward.as_ref())?;
        if args.probe {
            write_probe_files(dir, &dataset, args.probe_radius, args.probe_threshold)?;
        }
    } else if args.probe {
        return Err(CliError::Usage("--probe needs --plot-dir".into()));
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

/// Per-sample prediction plot data: profile and curve CSVs for four
/// seed-chosen test samples.
fn write_sample_plots(
    dir: &Path,
    model: &Model,
    dataset: &Dataset,
    test: &[usize],
    seed: u64,
    forward: Option<&ForwardMode>,
) -> Result<()> {
    let mut rng = stream_rng(seed, 9);
    let count = 4.min(test.len());
    let mut picked = Vec::new();
    while picked.len() < count {
        let j = uniform_in(&mut rng, 0.0, test.len() as f64) as usize;
        let j = test[j.min(test.len() - 1)];
        if !picked.contains(&j) {
            picked.push(j);
        }
    }
    for (slot, &j) in picked.iter().enumerate() {
        let sample = &dataset.samples[j];
        let sets = candidate_profiles(model, &sample.y)?;
        let mut chosen = 0usize;
        let mut best = f64::INFINITY;
        for (k, mu) in sets.iter().enumerate() {
            let d: f64 = mu
                .iter()
                .zip(&sample.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best {
                best = d;
                chosen = k;
            }
        }
        let mu_star = &sets[chosen];
        let mut lines = vec!["layer,x_true,x_pred".to_string()];
        for (l, (t, p)) in sample.x.iter().zip(mu_star).enumerate() {
            lines.push(format!("{l},{t:.6},{p:.6}"));
        }
        std::fs::write(
            dir.join(format!("eval_profile_sample{slot}.csv")),
            lines.join("\n") + "\n",
        )?;

        if let Some(mode) = forward {
            let y_pred: Option<Vec<f64>> = match mode {
                ForwardMode::Surrogate(sur) => sur.forward_one(mu_star).ok(),
                ForwardMode::Exact { thickness } => {
                    EarthStack::from_vs_profile(mu_star, *thickness)
                        .ok()
                        .and_then(|stack| {
                            let cfg = RootSearchConfig::for_stack(&stack);
                            dispersion_curve(&stack, &dataset.header.grid, &cfg).ok()
                        })
                        .map(|c| c.velocities)
                }
            };
            if let Some(y_pred) = y_pred {
                let mut lines = vec!["omega,y_true,y_pred".to_string()];
                for ((w, t), p) in dataset.header.grid.iter().zip(&sample.y).zip(&y_pred) {
                    lines.push(format!("{w:.6},{t:.6},{p:.6}"));
                }
                std::fs::write(
                    dir.join(format!("eval_curve_sample{slot}.csv")),
                    lines.join("\n") + "\n",
                )?;
            }
        }
    }
    Ok(())
}

/// Near-duplicate pair list plus profile/curve data for the starkest pair.
fn write_probe_files(dir: &Path, dataset: &Dataset, radius: f64, threshold: f64) -> Result<()> {
    let pairs = nonuniqueness_probe(&dataset.samples, radius, threshold);
    let mut lines = vec!["i,j,rel_dy,rel_dx".to_string()];
    for p in &pairs {
        lines.push(format!("{},{},{:.8},{:.8}", p.i, p.j, p.rel_dy, p.rel_dx));
    }
    std::fs::write(dir.join("probe_pairs.csv"), lines.join("\n") + "\n")?;
    println!(
        "probe: {} pairs with rel_dy < {radius} and rel_dx > {threshold}",
        pairs.len()
    );
    if let Some(best) = pairs
        .iter()
        .max_by(|a, b| a.rel_dx.partial_cmp(&b.rel_dx).expect("finite"))
    {
        let (a, b) = (&dataset.samples[best.i], &dataset.samples[best.j]);
        let mut lines = vec!["layer,x_i,x_j".to_string()];
        for (l, (xi, xj)) in a.x.iter().zip(&b.x).enumerate() {
            lines.push(format!("{l},{xi:.6},{xj:.6}"));
        }
        std::fs::write(dir.join("probe_best_profiles.csv"), lines.join("\n") + "\n")?;
        let mut lines = vec!["omega,y_i,y_j".to_string()];
        for ((w, yi), yj) in dataset.header.grid.iter().zip(&a.y).zip(&b.y) {
            lines.push(format!("{w:.6},{yi:.6},{yj:.6}"));
        }
        std::fs::write(dir.join("probe_best_curves.csv"), lines.join("\n") + "\n")?;
    }
    Ok(())
}

fn cmd_toy(args: &ToyArgs, threads: usize) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let report = toy_experiment(args.seed, Some(&args.out), threads)?;
    std::fs::write(
        args.out.join("toy_report.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    println!(
        "toy: regression R2 = {:.4}, mixture M = {:.4} ({} samples)",
        report.fnn_test_r_squared, report.mdn_test_m, report.n_samples
    );
    Ok(())
}
