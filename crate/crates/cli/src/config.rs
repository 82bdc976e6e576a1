// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line and config-file parsing, resolved into a [`RunConfig`].
//!
//! A config file is a flat list of `key = value` lines whose keys are long
//! flag names; `#` starts a comment. File entries are spliced in right after
//! the subcommand, so flags given on the command line win.

use std::path::{Path, PathBuf};

use bgl_sff::{
    AnalysisConfig, EnsembleSpec, Evaluator, FilterSpec, GoeParams, Model, OdeSettings, PlateauMode, PlateauReference,
    SweepParameter, SykParams, TimeGrid, XSource,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "BGLSFF_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "bglsff", version, about = "Spectral form factors under balanced gain and loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ensemble-averaged form factor curve
    Sff(SffArgs),
    /// Ramp metrics across values of gamma or delta
    Sweep(SweepArgs),
    /// Single-realization state trajectory
    Evolve(EvolveArgs),
    /// Ramp metrics of an existing curve file
    Analyze(AnalyzeArgs),
    /// SVG figure from curve or metrics files
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Syk,
    Goe,
    GoeWithX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorKind {
    Unitary,
    Bgl,
    DephasingJumps,
    Filtered,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterKind {
    Power,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XSourceKind {
    Model,
    ScaledH0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlateauKind {
    /// Mean of the curve over the last `tail-decades`
    Tail,
    /// Fixed `plateau-value`
    Value,
    /// Unitary plateau formula averaged over the realizations
    FormulaUnitary,
    /// Long-time BGL plateau formula averaged over the realizations
    FormulaBgl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Gamma,
    Delta,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Read `key = value` defaults from this file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    pub print_config: bool,
    /// Worker threads (default: $BGLSFF_WORKERS, else all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "syk")]
    pub model: ModelKind,
    /// Total Majorana count of the SYK model
    #[arg(long, default_value_t = 12)]
    pub majoranas: usize,
    /// SYK coupling scale J
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// GOE dimension
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    /// GOE scale (off-diagonal std is scale / sqrt(dim))
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Scale of the independent GOE dephasing operator
    #[arg(long, default_value_t = 1.0)]
    pub x_scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "bgl")]
    pub evaluator: EvaluatorKind,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "power")]
    pub filter: FilterKind,
    /// Exponent of the power filter exp(-gamma t |E|^delta)
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "model")]
    pub x_source: XSourceKind,
    /// Coefficient c of X = c H0 for `--x-source scaled-h0`
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub x_coeff: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub renormalize_every: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub t_max: f64,
    #[arg(long, default_value_t = 16)]
    pub points_per_decade: usize,
    #[arg(long)]
    pub include_zero: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long, default_value_t = 50)]
    pub realizations: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Smoothing window in decades of t
    #[arg(long, default_value_t = 0.5)]
    pub window: f64,
    /// Relative half-width of the plateau band
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "tail")]
    pub plateau: PlateauKind,
    #[arg(long, default_value_t = 1.0)]
    pub tail_decades: f64,
    #[arg(long)]
    pub plateau_value: Option<f64>,
    /// Start of the dip search (default: first positive grid time)
    #[arg(long)]
    pub search_from: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SffArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Curve CSV to write
    #[arg(long)]
    pub out: PathBuf,
    /// Also write ramp metrics of the curve
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long, value_enum, default_value = "gamma")]
    pub param: SweepKind,
    /// Comma-separated parameter values
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
    /// Metrics CSV, one row per value
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for one curve CSV per value
    #[arg(long)]
    pub curves_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "model")]
    pub x_source: XSourceKind,
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub x_coeff: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    #[arg(long, default_value_t = 1)]
    pub renormalize_every: usize,
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 16)]
    pub points_per_decade: usize,
    #[arg(long)]
    pub include_zero: bool,
    /// Disorder realization is derived from this seed (index 0)
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Trajectory CSV to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Curve CSV to analyze
    #[arg(long)]
    pub input: PathBuf,
    /// Metrics CSV to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    #[command(flatten)]
    pub common: Common,
    /// Curve CSVs (log-log panel) or one metrics CSV (ratio panel)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
}

/// Ordered `key = value` echo of a resolved configuration.
pub type Echo = Vec<(String, String)>;

fn push(e: &mut Echo, k: &str, v: impl ToString) {
    e.push((k.to_string(), v.to_string()));
}

fn value_name<V: ValueEnum>(v: V) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

impl ModelArgs {
    fn echo(&self, e: &mut Echo) {
        push(e, "model", value_name(self.model));
        match self.model {
            ModelKind::Syk => {
                push(e, "majoranas", self.majoranas);
                push(e, "j", self.j);
            }
            ModelKind::Goe | ModelKind::GoeWithX => {
                push(e, "dim", self.dim);
                push(e, "scale", self.scale);
                if self.model == ModelKind::GoeWithX {
                    push(e, "x-scale", self.x_scale);
                }
            }
        }
    }

    pub fn resolve(&self) -> Result<Model<f64>, CliError> {
        let model = match self.model {
            ModelKind::Syk => Model::Syk(SykParams { n_majorana: self.majoranas, j_scale: self.j, seed: 0 }),
            ModelKind::Goe => Model::Goe(GoeParams { dim: self.dim, seed: 0, scale: self.scale }),
            ModelKind::GoeWithX => {
                Model::GoeWithX { h0: GoeParams { dim: self.dim, seed: 0, scale: self.scale }, x_scale: self.x_scale }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

impl EvalArgs {
    /// Canonical evaluator: the power filter at `delta = 2` is the BGL filter
    /// and resolves to `bgl`, so both spellings give identical output.
    fn canonical(&self) -> EvaluatorKind {
        if self.evaluator == EvaluatorKind::Filtered && self.filter == FilterKind::Power && self.delta == 2.0 {
            EvaluatorKind::Bgl
        } else {
            self.evaluator
        }
    }

    fn echo(&self, e: &mut Echo) {
        let kind = self.canonical();
        push(e, "evaluator", value_name(kind));
        push(e, "beta", self.beta);
        push(e, "gamma", self.gamma);
        match kind {
            EvaluatorKind::Filtered => {
                push(e, "filter", value_name(self.filter));
                if self.filter == FilterKind::Power {
                    push(e, "delta", self.delta);
                }
            }
            EvaluatorKind::Ode => {
                push(e, "x-source", value_name(self.x_source));
                if self.x_source == XSourceKind::ScaledH0 {
                    push(e, "x-coeff", self.x_coeff);
                }
                push(e, "dt", self.dt);
                push(e, "renormalize-every", self.renormalize_every);
            }
            _ => {}
        }
    }

    pub fn resolve(&self) -> Evaluator<f64> {
        match self.canonical() {
            EvaluatorKind::Unitary => Evaluator::Unitary,
            EvaluatorKind::Bgl => Evaluator::Bgl,
            EvaluatorKind::DephasingJumps => Evaluator::DephasingJumps,
            EvaluatorKind::Filtered => Evaluator::Filtered(match self.filter {
                FilterKind::Power => FilterSpec::Power { gamma: self.gamma, delta: self.delta },
                FilterKind::Lorentzian => FilterSpec::Lorentzian { gamma: self.gamma },
            }),
            EvaluatorKind::Ode => Evaluator::Ode(OdeSettings {
                x_source: match self.x_source {
                    XSourceKind::Model => XSource::FromModel,
                    XSourceKind::ScaledH0 => XSource::ScaledH0(self.x_coeff),
                },
                dt: self.dt,
                renormalize_every: self.renormalize_every,
            }),
        }
    }
}

impl GridArgs {
    fn echo(&self, e: &mut Echo) {
        push(e, "t-min", self.t_min);
        push(e, "t-max", self.t_max);
        push(e, "points-per-decade", self.points_per_decade);
        push(e, "include-zero", self.include_zero);
    }

    pub fn resolve(&self) -> Result<TimeGrid<f64>, CliError> {
        let mut g = TimeGrid::new(self.t_min, self.t_max, self.points_per_decade)?;
        g.include_zero = self.include_zero;
        Ok(g)
    }
}

impl AnalysisArgs {
    fn echo(&self, e: &mut Echo) {
        push(e, "window", self.window);
        push(e, "epsilon", self.epsilon);
        push(e, "plateau", value_name(self.plateau));
        match self.plateau {
            PlateauKind::Tail => push(e, "tail-decades", self.tail_decades),
            PlateauKind::Value => push(e, "plateau-value", self.plateau_value.unwrap_or(f64::NAN)),
            _ => {}
        }
        if let Some(s) = self.search_from {
            push(e, "search-from", s);
        }
    }

    /// Analysis settings; formula plateaus are filled in later from spectra.
    pub fn resolve(&self) -> Result<(AnalysisConfig<f64>, Option<PlateauMode>), CliError> {
        if !(self.window >= 0.0) {
            return Err(CliError::Usage(format!("--window must be >= 0, got {}", self.window)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Usage(format!("--epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        let (plateau, formula) = match self.plateau {
            PlateauKind::Tail => {
                if !(self.tail_decades > 0.0) {
                    return Err(CliError::Usage("--tail-decades must be positive".into()));
                }
                (PlateauReference::Tail { decades: self.tail_decades }, None)
            }
            PlateauKind::Value => match self.plateau_value {
                Some(v) if v > 0.0 => (PlateauReference::Value(v), None),
                _ => return Err(CliError::Usage("--plateau value needs a positive --plateau-value".into())),
            },
            PlateauKind::FormulaUnitary => (PlateauReference::Value(f64::NAN), Some(PlateauMode::Unitary)),
            PlateauKind::FormulaBgl => (PlateauReference::Value(f64::NAN), Some(PlateauMode::BglAsymptotic)),
        };
        let cfg = AnalysisConfig {
            window_decades: self.window,
            epsilon: self.epsilon,
            search_from: self.search_from,
            plateau,
        };
        Ok((cfg, formula))
    }
}

/// One fully resolved job.
#[derive(Debug, Clone)]
pub enum Job {
    Sff {
        spec: EnsembleSpec<f64>,
        analysis: AnalysisConfig<f64>,
        formula: Option<PlateauMode>,
        out: PathBuf,
        metrics: Option<PathBuf>,
    },
    Sweep {
        template: EnsembleSpec<f64>,
        parameter: SweepParameter,
        values: Vec<f64>,
        analysis: AnalysisConfig<f64>,
        formula: Option<PlateauMode>,
        out: PathBuf,
        curves_dir: Option<PathBuf>,
    },
    Evolve {
        model: Model<f64>,
        beta: f64,
        gamma: f64,
        x_source: XSource<f64>,
        dt: f64,
        renormalize_every: usize,
        grid: TimeGrid<f64>,
        seed: u64,
        out: PathBuf,
    },
    Analyze {
        input: PathBuf,
        analysis: AnalysisConfig<f64>,
        out: PathBuf,
    },
    Plot {
        inputs: Vec<PathBuf>,
        out: PathBuf,
        title: Option<String>,
    },
}

/// A job plus its echo and execution-only settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub job: Job,
    /// Everything that determines the output, in config-file order.
    pub echo: Echo,
    pub print_config: bool,
    /// Never part of the echo: results do not depend on it.
    pub workers: Option<usize>,
}

impl RunConfig {
    /// The echo in config-file syntax.
    pub fn to_config_text(&self) -> String {
        let mut s = format!("# bglsff {} configuration\n", self.subcommand);
        for (k, v) in &self.echo {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let w = match flag {
        Some(w) => Some(w),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            _ => None,
        },
    };
    if w == Some(0) {
        return Err(CliError::Usage("worker count must be >= 1".into()));
    }
    Ok(w)
}

fn ensemble_spec(
    model: &ModelArgs,
    eval: &EvalArgs,
    grid: &GridArgs,
    ens: &EnsembleArgs,
    workers: Option<usize>,
) -> Result<EnsembleSpec<f64>, CliError> {
    let spec = EnsembleSpec {
        model: model.resolve()?,
        n_realizations: ens.realizations,
        master_seed: ens.seed,
        evaluator: eval.resolve(),
        beta: eval.beta,
        gamma: eval.gamma,
        grid: grid.resolve()?,
        workers,
    };
    spec.validate()?;
    Ok(spec)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

impl Cli {
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        match self.command {
            Command::Sff(a) => {
                let workers = resolve_workers(a.common.workers)?;
                let spec = ensemble_spec(&a.model, &a.eval, &a.grid, &a.ensemble, workers)?;
                let (analysis, formula) = a.analysis.resolve()?;
                let mut echo = Echo::new();
                a.model.echo(&mut echo);
                a.eval.echo(&mut echo);
                a.grid.echo(&mut echo);
                push(&mut echo, "realizations", a.ensemble.realizations);
                push(&mut echo, "seed", a.ensemble.seed);
                a.analysis.echo(&mut echo);
                push(&mut echo, "out", path_str(&a.out));
                if let Some(m) = &a.metrics {
                    push(&mut echo, "metrics", path_str(m));
                }
                Ok(RunConfig {
                    subcommand: "sff",
                    job: Job::Sff { spec, analysis, formula, out: a.out, metrics: a.metrics },
                    echo,
                    print_config: a.common.print_config,
                    workers,
                })
            }
            Command::Sweep(a) => {
                let workers = resolve_workers(a.common.workers)?;
                let template = ensemble_spec(&a.model, &a.eval, &a.grid, &a.ensemble, workers)?;
                let (analysis, formula) = a.analysis.resolve()?;
                if a.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(CliError::Usage("sweep values must be finite and >= 0".into()));
                }
                let parameter = match a.param {
                    SweepKind::Gamma => SweepParameter::Gamma,
                    SweepKind::Delta => {
                        if !matches!(a.eval.canonical(), EvaluatorKind::Bgl | EvaluatorKind::Filtered)
                            || (a.eval.canonical() == EvaluatorKind::Filtered && a.eval.filter != FilterKind::Power)
                        {
                            return Err(CliError::Usage(
                                "--param delta needs --evaluator bgl or the power filter".into(),
                            ));
                        }
                        SweepParameter::Delta
                    }
                };
                let mut echo = Echo::new();
                a.model.echo(&mut echo);
                a.eval.echo(&mut echo);
                a.grid.echo(&mut echo);
                push(&mut echo, "realizations", a.ensemble.realizations);
                push(&mut echo, "seed", a.ensemble.seed);
                a.analysis.echo(&mut echo);
                push(&mut echo, "param", value_name(a.param));
                push(&mut echo, "values", a.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
                push(&mut echo, "out", path_str(&a.out));
                if let Some(d) = &a.curves_dir {
                    push(&mut echo, "curves-dir", path_str(d));
                }
                Ok(RunConfig {
                    subcommand: "sweep",
                    job: Job::Sweep {
                        template,
                        parameter,
                        values: a.values,
                        analysis,
                        formula,
                        out: a.out,
                        curves_dir: a.curves_dir,
                    },
                    echo,
                    print_config: a.common.print_config,
                    workers,
                })
            }
            Command::Evolve(a) => {
                let workers = resolve_workers(a.common.workers)?;
                let model = a.model.resolve()?;
                let x_source = match a.x_source {
                    XSourceKind::Model => {
                        if a.model.model != ModelKind::GoeWithX {
                            return Err(CliError::Usage("--x-source model needs --model goe-with-x".into()));
                        }
                        XSource::FromModel
                    }
                    XSourceKind::ScaledH0 => XSource::ScaledH0(a.x_coeff),
                };
                if !(a.beta >= 0.0) || !(a.gamma >= 0.0) {
                    return Err(CliError::Usage("--beta and --gamma must be >= 0".into()));
                }
                let mut grid = TimeGrid::new(a.t_min, a.t_max, a.points_per_decade)?;
                grid.include_zero = a.include_zero;
                bgl_sff::OdeConfig {
                    renormalize_every: a.renormalize_every,
                    ..bgl_sff::OdeConfig::new(a.dt, grid.times())
                }
                .validate()?;
                let mut echo = Echo::new();
                a.model.echo(&mut echo);
                push(&mut echo, "beta", a.beta);
                push(&mut echo, "gamma", a.gamma);
                push(&mut echo, "x-source", value_name(a.x_source));
                if a.x_source == XSourceKind::ScaledH0 {
                    push(&mut echo, "x-coeff", a.x_coeff);
                }
                push(&mut echo, "dt", a.dt);
                push(&mut echo, "renormalize-every", a.renormalize_every);
                push(&mut echo, "t-min", a.t_min);
                push(&mut echo, "t-max", a.t_max);
                push(&mut echo, "points-per-decade", a.points_per_decade);
                push(&mut echo, "include-zero", a.include_zero);
                push(&mut echo, "seed", a.seed);
                push(&mut echo, "out", path_str(&a.out));
                Ok(RunConfig {
                    subcommand: "evolve",
                    job: Job::Evolve {
                        model,
                        beta: a.beta,
                        gamma: a.gamma,
                        x_source,
                        dt: a.dt,
                        renormalize_every: a.renormalize_every,
                        grid,
                        seed: a.seed,
                        out: a.out,
                    },
                    echo,
                    print_config: a.common.print_config,
                    workers,
                })
            }
            Command::Analyze(a) => {
                let (analysis, formula) = a.analysis.resolve()?;
                if formula.is_some() {
                    return Err(CliError::Usage(
                        "formula plateaus need the spectra; use --plateau tail or value with analyze".into(),
                    ));
                }
                let mut echo = Echo::new();
                push(&mut echo, "input", path_str(&a.input));
                a.analysis.echo(&mut echo);
                push(&mut echo, "out", path_str(&a.out));
                Ok(RunConfig {
                    subcommand: "analyze",
                    job: Job::Analyze { input: a.input, analysis, out: a.out },
                    echo,
                    print_config: a.common.print_config,
                    workers: None,
                })
            }
            Command::Plot(a) => {
                let mut echo = Echo::new();
                for p in &a.inputs {
                    push(&mut echo, "input", path_str(p));
                }
                push(&mut echo, "out", path_str(&a.out));
                if let Some(t) = &a.title {
                    push(&mut echo, "title", t);
                }
                Ok(RunConfig {
                    subcommand: "plot",
                    job: Job::Plot { inputs: a.inputs, out: a.out, title: a.title },
                    echo,
                    print_config: a.common.print_config,
                    workers: None,
                })
            }
        }
    }
}

/// Parses one config file into `--key value` arguments.
pub fn config_file_args(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    config_text_args(&text, &path.display().to_string())
}

pub fn config_text_args(text: &str, origin: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected `key = value`", n + 1)))?;
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(CliError::Usage(format!("{origin}:{}: invalid key {key:?}", n + 1)));
        }
        // `input` is positional for plot
        if key == "input" {
            out.push(value.to_string());
            continue;
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Splices config-file entries in after the subcommand name.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut file = None;
    for (i, a) in args.iter().enumerate().skip(2) {
        if a == "--config" {
            file = Some(args.get(i + 1).cloned().ok_or_else(|| CliError::Usage("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            file = Some(p.to_string());
        }
    }
    let Some(file) = file else { return Ok(args) };
    let extra = config_file_args(Path::new(&file))?;
    let mut out = Vec::with_capacity(args.len() + extra.len());
    out.extend_from_slice(&args[..2.min(args.len())]);
    out.extend(extra);
    out.extend_from_slice(&args[2.min(args.len())..]);
    Ok(out)
}

/// Outcome of argument parsing that is not a job.
#[derive(Debug)]
pub enum ParseOutcome {
    Run(Box<RunConfig>),
    /// `--help` or `--version`: print and exit 0.
    Info(String),
}

/// Full parse: config-file expansion, clap, resolution.
pub fn parse_config(args: Vec<String>) -> Result<ParseOutcome, CliError> {
    let args = expand_args(args)?;
    match Cli::try_parse_from(args) {
        Ok(cli) => Ok(ParseOutcome::Run(Box::new(cli.resolve()?))),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                Ok(ParseOutcome::Info(e.to_string()))
            }
            _ => Err(CliError::Usage(e.to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Result<RunConfig, CliError> {
        let args = std::iter::once("bglsff".to_string()).chain(line.split_whitespace().map(String::from)).collect();
        match parse_config(args)? {
            ParseOutcome::Run(cfg) => Ok(*cfg),
            ParseOutcome::Info(s) => panic!("unexpected info output {s}"),
        }
    }

    #[test]
    fn documented_example_parses() {
        let cfg = parse("sff --model syk --majoranas 12 --beta 5 --gamma 1e-3 --evaluator bgl --realizations 50 --seed 42 --out c.csv").unwrap();
        let Job::Sff { spec, .. } = cfg.job else { panic!() };
        assert_eq!(spec.n_realizations, 50);
        assert_eq!(spec.beta, 5.0);
        assert!(matches!(spec.evaluator, Evaluator::Bgl));
    }

    #[test]
    fn odd_majoranas_is_usage_error() {
        let err = parse("sff --majoranas 13 --out c.csv").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn power_two_is_bgl() {
        let a = parse("sff --evaluator filtered --filter power --delta 2 --gamma 1e-3 --out c.csv").unwrap();
        let b = parse("sff --evaluator bgl --gamma 1e-3 --out c.csv").unwrap();
        assert_eq!(a.echo, b.echo);
    }

    #[test]
    fn later_flags_win() {
        let cfg = parse("sff --beta 1 --beta 2 --out c.csv").unwrap();
        let Job::Sff { spec, .. } = cfg.job else { panic!() };
        assert_eq!(spec.beta, 2.0);
    }

    #[test]
    fn unknown_flag_rejected() {
        assert_eq!(parse("sff --bogus 1 --out c.csv").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_text_splices() {
        let args = config_text_args("# comment\nbeta = 3\ninclude-zero = true\nmodel = goe # trailing\n", "x").unwrap();
        assert_eq!(args, vec!["--beta", "3", "--include-zero", "--model", "goe"]);
        assert!(config_text_args("beta 3\n", "x").is_err());
        assert!(config_text_args("config = other.conf\n", "x").is_err());
    }
}
