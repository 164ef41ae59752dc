mod manifest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use heavytail_core::eval::evaluate_traced;
use heavytail_core::rewards::{reward_surface, GridSpec, SurfaceAxes};
use heavytail_core::trainer::{train_all, write_diagnostics_csv, write_episodes_csv, TrainOutcome};
use heavytail_core::trajectory::write_jsonl;
use heavytail_core::{generate_world, run_comparison, Checkpoint, EvalMode, Family, Scenario, TrainConfig};

use manifest::{timestamp, Manifest};

#[derive(Parser, Debug)]
#[command(name = "heavytail", version, about = "Heavy-tailed policy gradient for sparse-reward navigation")]
struct Cli {
    /// Root under which run directories are created when `--out` is not given.
    #[arg(long, env = "HEAVYTAIL_OUT", default_value = "runs", global = true)]
    out_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one policy per seed.
    Train {
        #[command(flatten)]
        overrides: Overrides,
        /// Run directory (default: <out-root>/train-<scenario>-<family>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on freshly generated worlds.
    Eval(EvalArgs),
    /// Train both families on identical seeds and worlds and write aligned curves.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a reward surface grid.
    Surface(SurfaceArgs),
    /// Generate one world and write it as TOML.
    World {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<Scenario>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Command-line values override the config file, which overrides defaults.
#[derive(Args, Debug, Default, Clone)]
struct Overrides {
    /// TOML training config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    family: Option<Family>,
    /// Single seed (shorthand for `--seeds N`).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    fixed_world: bool,
}

impl Overrides {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
            None => TrainConfig::default(),
        };
        if let Some(v) = self.scenario {
            cfg.scenario = v;
        }
        if let Some(v) = self.family {
            cfg.family = v;
        }
        if let Some(v) = self.seed {
            cfg.seeds = vec![v];
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = self.episodes {
            cfg.episodes = v;
        }
        if let Some(v) = self.max_steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.phi {
            cfg.phi = v;
        }
        if let Some(v) = self.eta {
            cfg.optimizer.eta = v;
        }
        if let Some(v) = &self.hidden {
            cfg.hidden_layers = v.clone();
        }
        if self.fixed_world {
            cfg.fixed_world = true;
        }
        cfg.validate().context("invalid configuration")?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Expected policy family; defaults to the checkpoint's.
    #[arg(long)]
    family: Option<Family>,
    /// Number of evaluation episodes.
    #[arg(long, default_value_t = 50)]
    episodes: usize,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value = "deterministic")]
    mode: EvalMode,
    /// Seed for the evaluation worlds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    /// `dist_angle` or `dist_scan`.
    #[arg(long, default_value = "dist_angle")]
    axes: SurfaceAxes,
    /// Config whose `[rewards]` section parameterizes the surface.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d_points: Option<usize>,
    #[arg(long)]
    y_points: Option<usize>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    initial_distance: Option<f64>,
    /// Output CSV (default: <out-root>/surface-<axes>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

struct RunDir {
    path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(path: PathBuf) -> Result<Self> {
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            path,
            files: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.into());
        Ok(BufWriter::new(f))
    }

    fn finish(self, mut manifest: Manifest) -> Result<()> {
        manifest.files = self.files;
        manifest.files.push("manifest.toml".into());
        manifest.write(&self.path)
    }
}

fn final_mean(outcome: &TrainOutcome) -> Option<f64> {
    let r = outcome.record.returns();
    let tail = &r[r.len().saturating_sub(20)..];
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

fn write_checkpoints(dir: &mut RunDir, prefix: &str, runs: &[TrainOutcome]) -> Result<()> {
    for run in runs {
        let ckpt = Checkpoint::new(&run.params, Some(&run.optimizer));
        let mut w = dir.file(&format!("checkpoints/{prefix}seed-{}.toml", run.record.seed))?;
        w.write_all(ckpt.to_toml_string()?.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn report_runs(label: &str, runs: &[TrainOutcome]) {
    for run in runs {
        let goals = run
            .record
            .episodes
            .iter()
            .filter(|e| e.cause == heavytail_core::TerminationCause::Goal)
            .count();
        match final_mean(run) {
            Some(m) => println!(
                "{label} seed {}: {} episodes, final-20 mean return {m:.3}, {goals} goals",
                run.record.seed,
                run.record.episodes.len()
            ),
            None => println!("{label} seed {}: no episodes", run.record.seed),
        }
    }
}

fn cmd_train(out_root: &Path, overrides: &Overrides, out: Option<PathBuf>) -> Result<()> {
    let cfg = overrides.resolve()?;
    let started = timestamp();
    let path = out.unwrap_or_else(|| out_root.join(format!("train-{}-{}", cfg.scenario, cfg.family)));
    let mut dir = RunDir::create(path)?;
    let runs = train_all(&cfg).context("training aborted")?;

    write_episodes_csv(dir.file("episodes.csv")?, runs.iter().map(|r| &r.record))?;
    write_diagnostics_csv(dir.file("diagnostics.csv")?, runs.iter().map(|r| &r.record))?;
    write_checkpoints(&mut dir, "", &runs)?;
    report_runs(&cfg.family.to_string(), &runs);
    println!("wrote {}", dir.path.display());
    dir.finish(Manifest::new("train", &cfg, started))
}

fn cmd_eval(out_root: &Path, args: &EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let overrides = Overrides {
        config: args.config.clone(),
        scenario: args.scenario,
        family: Some(args.family.unwrap_or(ckpt.family)),
        max_steps: args.max_steps,
        sigma: Some(ckpt.sigma),
        ..Default::default()
    };
    let mut cfg = overrides.resolve()?;
    if args.config.is_none() && args.scenario.is_none() {
        // Without a config the scenario is inferred from the checkpoint's input width.
        cfg.scenario = [Scenario::GoalReaching, Scenario::ObstacleAvoidance, Scenario::UnevenTerrain]
            .into_iter()
            .find(|s| heavytail_core::env::observation_dim(*s) == ckpt.spec.input_dim)
            .context("checkpoint input width matches no scenario")?;
    }
    ckpt.ensure_compatible(&cfg)?;
    let params = ckpt.params()?;
    let started = timestamp();
    let stem = args
        .checkpoint
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into());
    let path = args.out.clone().unwrap_or_else(|| out_root.join(format!("eval-{stem}")));
    let mut dir = RunDir::create(path)?;

    let (report, trajectories) = evaluate_traced(&params, &cfg, args.episodes, args.mode, args.seed)?;
    report.write_rows_csv(dir.file("eval.csv")?)?;
    let mut summary = dir.file("summary.json")?;
    report.write_summary_json(&mut summary)?;
    summary.write_all(b"\n")?;
    summary.flush()?;
    let mut traces = dir.file("trajectories.jsonl")?;
    for (i, t) in trajectories.iter().enumerate() {
        write_jsonl(&mut traces, i, t)?;
    }
    traces.flush()?;

    let s = &report.summary;
    println!("episodes:        {}", s.episodes);
    println!("success rate:    {:.1}%", s.success_rate);
    match s.avg_traj_length {
        Some(l) => println!("avg traj length: {l:.1} steps (successful episodes)"),
        None => println!("avg traj length: n/a (no successful episodes)"),
    }
    println!("elevation cost:  {:.4}", s.elevation_cost);

    let mut manifest = Manifest::new("eval", &cfg, started);
    manifest.seeds = vec![args.seed];
    manifest.checkpoint = Some(args.checkpoint.display().to_string());
    dir.finish(manifest)
}

fn cmd_compare(out_root: &Path, overrides: &Overrides, out: Option<PathBuf>) -> Result<()> {
    if overrides.family.is_some() {
        bail!("compare always runs both families; drop --family");
    }
    let cauchy = TrainConfig {
        family: Family::Cauchy,
        ..overrides.resolve()?
    };
    let gaussian = TrainConfig {
        family: Family::Gaussian,
        ..cauchy.clone()
    };
    let started = timestamp();
    let path = out.unwrap_or_else(|| out_root.join(format!("compare-{}", cauchy.scenario)));
    let mut dir = RunDir::create(path)?;
    let cmp = run_comparison(&cauchy, &gaussian).context("comparison aborted")?;

    cmp.write_curves_csv(dir.file("curves.csv")?)?;
    for (family, runs) in [(Family::Cauchy, &cmp.first), (Family::Gaussian, &cmp.second)] {
        write_episodes_csv(dir.file(&format!("episodes-{family}.csv"))?, runs.iter().map(|r| &r.record))?;
        write_diagnostics_csv(dir.file(&format!("diagnostics-{family}.csv"))?, runs.iter().map(|r| &r.record))?;
        write_checkpoints(&mut dir, &format!("{family}-"), runs)?;
        report_runs(&family.to_string(), runs);
    }
    println!("wrote {}", dir.path.display());
    dir.finish(Manifest::new("compare", &cauchy, started))
}

fn cmd_surface(out_root: &Path, args: &SurfaceArgs) -> Result<()> {
    let rewards = match &args.config {
        Some(path) => {
            TrainConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?
                .rewards
        }
        None => Default::default(),
    };
    let mut grid = GridSpec::default_for(args.axes);
    if let Some(v) = args.d_points {
        grid.d_points = v;
    }
    if let Some(v) = args.y_points {
        grid.y_points = v;
    }
    if let Some(v) = args.d_min {
        grid.d_min = v;
    }
    if let Some(v) = args.d_max {
        grid.d_max = v;
    }
    if let Some(v) = args.initial_distance {
        grid.initial_distance = v;
    }
    let surface = reward_surface(args.axes, &grid, &rewards).context("invalid grid")?;
    let axes_name = match args.axes {
        SurfaceAxes::DistAngle => "dist_angle",
        SurfaceAxes::DistScan => "dist_scan",
    };
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| out_root.join(format!("surface-{axes_name}.csv")));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    surface.write_csv(BufWriter::new(f))?;
    println!(
        "{} cells, {:.2}% with |r_tot| > 1; wrote {}",
        surface.cell_count(),
        100.0 * surface.fraction_above(1.0),
        path.display()
    );
    Ok(())
}

fn cmd_world(out_root: &Path, config: Option<PathBuf>, scenario: Option<Scenario>, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let cfg = Overrides {
        config,
        scenario,
        ..Default::default()
    }
    .resolve()?;
    let world = generate_world(cfg.scenario, seed, &cfg.generation)?;
    let path = out.unwrap_or_else(|| out_root.join(format!("world-{}-{seed}.toml", cfg.scenario)));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, world.to_toml_string()?).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { overrides, out } => cmd_train(&cli.out_root, &overrides, out),
        Command::Eval(args) => cmd_eval(&cli.out_root, &args),
        Command::Compare { overrides, out } => cmd_compare(&cli.out_root, &overrides, out),
        Command::Surface(args) => cmd_surface(&cli.out_root, &args),
        Command::World {
            config,
            scenario,
            seed,
            out,
        } => cmd_world(&cli.out_root, config, scenario, seed, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
