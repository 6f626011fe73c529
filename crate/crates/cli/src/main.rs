//! `dcphase` command-line front end: single solves, Monte-Carlo success
//! tables, per-iteration traces, and second-order certificates.
//!
//! Every flag can also be given in a flat `key=value` config file
//! (`--config path`); explicit flags override file entries. Exit code 0
//! on completion, 2 on configuration errors.

use clap::{Args, Parser, Subcommand};
use dcphase::bench::{preset, run_instance, run_table, ExperimentConfig, SolverKind};
use dcphase::dc::DcConfig;
use dcphase::geometry::certify_minimizer_hessian;
use dcphase::sparse::SparseConfig;
use dcphase::{Error, FieldTag, NoiseModel, NoiseSpec};
use std::collections::HashMap;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dcphase", version, about = "DC phase-retrieval solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one seeded instance and print the outcome.
    Solve(InstanceOpts),
    /// Run a Monte-Carlo success table and emit CSV.
    Bench(BenchOpts),
    /// Solve one instance and emit the per-iteration trace CSV.
    Trace(TraceOpts),
    /// Solve one instance and certify the Hessian at the result.
    Certify(CertifyOpts),
}

/// Flags describing a single instance; every flag mirrors a config-file
/// key of the same name (dashes and underscores interchangeable).
#[derive(Args, Clone, Default)]
struct InstanceOpts {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<String>,
    /// Signal dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Measurement count.
    #[arg(long)]
    m: Option<usize>,
    /// real | complex
    #[arg(long)]
    field: Option<String>,
    /// dc | l1dc | l1dc-hard | gn
    #[arg(long)]
    solver: Option<String>,
    /// Base seed for the trial.
    #[arg(long)]
    seed: Option<u64>,
    /// Uniform noise half-width (0 disables noise).
    #[arg(long = "noise-u")]
    noise_u: Option<f64>,
    /// none | additive | inside-outside
    #[arg(long = "noise-model")]
    noise_model: Option<String>,
    /// ℓ1 penalty weight for the sparse solvers.
    #[arg(long)]
    lambda: Option<f64>,
    /// Sparsity level (enables the hard-thresholded solver's grid).
    #[arg(long)]
    s: Option<usize>,
    /// Relative success threshold on the phase-invariant distance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct BenchOpts {
    #[command(flatten)]
    instance: InstanceOpts,
    /// Named preset table1..table6 (plus table2-gn, table3-gn); explicit
    /// grid flags override preset fields.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated m/n ratios for an explicit grid.
    #[arg(long)]
    ratios: Option<String>,
    /// Comma-separated sparsity levels for sparse grids.
    #[arg(long)]
    sparsities: Option<String>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (defaults to the rayon default).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct TraceOpts {
    #[command(flatten)]
    instance: InstanceOpts,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CertifyOpts {
    #[command(flatten)]
    instance: InstanceOpts,
    /// Number of random unit directions to sample.
    #[arg(long)]
    directions: Option<usize>,
}

fn read_config_file(path: &str) -> Result<HashMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read config '{path}': {e}")))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("config line {} is not key=value", lineno + 1))
        })?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn file_get<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, Error> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("bad value '{v}' for '{key}'"))),
    }
}

/// Fully resolved instance settings: flag, else file entry, else default.
struct Settings {
    n: usize,
    m: Option<usize>,
    field: FieldTag,
    solver: String,
    seed: u64,
    noise: NoiseSpec,
    lambda: f64,
    s: Option<usize>,
    tol: Option<f64>,
}

impl Settings {
    fn resolve(opts: &InstanceOpts) -> Result<(Self, HashMap<String, String>), Error> {
        let map = match &opts.config {
            Some(p) => read_config_file(p)?,
            None => HashMap::new(),
        };
        let n = opts.n.or(file_get(&map, "n")?).unwrap_or(128);
        let m = opts.m.or(file_get(&map, "m")?);
        let field = match opts
            .field
            .clone()
            .or(file_get(&map, "field")?)
            .unwrap_or_else(|| "real".into())
            .to_lowercase()
            .as_str()
        {
            "real" => FieldTag::Real,
            "complex" => FieldTag::Complex,
            other => return Err(Error::InvalidConfig(format!("unknown field '{other}'"))),
        };
        let solver = opts
            .solver
            .clone()
            .or(file_get(&map, "solver")?)
            .unwrap_or_else(|| "dc".into())
            .to_lowercase();
        let seed = opts.seed.or(file_get(&map, "seed")?).unwrap_or(1);
        let noise_u = opts.noise_u.or(file_get(&map, "noise_u")?).unwrap_or(0.0);
        let noise_model = opts
            .noise_model
            .clone()
            .or(file_get(&map, "noise_model")?)
            .unwrap_or_else(|| if noise_u > 0.0 { "inside-outside".into() } else { "none".into() });
        let model = match noise_model.to_lowercase().as_str() {
            "none" => NoiseModel::None,
            "additive" => NoiseModel::Additive,
            "inside-outside" | "inside_outside" => NoiseModel::InsideOutside,
            other => return Err(Error::InvalidConfig(format!("unknown noise model '{other}'"))),
        };
        let lambda = opts.lambda.or(file_get(&map, "lambda")?).unwrap_or(1e-5);
        let s = opts.s.or(file_get(&map, "s")?);
        let tol = opts.tol.or(file_get(&map, "tol")?);
        Ok((
            Settings {
                n,
                m,
                field,
                solver,
                seed,
                noise: NoiseSpec { model, u: noise_u, seed: 0 },
                lambda,
                s,
                tol,
            },
            map,
        ))
    }

    fn solver_kind(&self) -> Result<SolverKind, Error> {
        let sparse = SparseConfig { lambda: self.lambda, ..SparseConfig::default() };
        match self.solver.as_str() {
            "dc" => Ok(SolverKind::Dc(DcConfig::default())),
            "gn" => Ok(SolverKind::Gn(DcConfig::default())),
            "l1dc" => Ok(SolverKind::L1Dc(sparse)),
            "l1dc-hard" | "l1dc_hard" => Ok(SolverKind::L1DcHard(sparse)),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }

    /// Single-instance experiment: one ratio chosen so floor(ratio·n)
    /// recovers the requested m exactly.
    fn single_experiment(&self) -> Result<ExperimentConfig, Error> {
        let m = self
            .m
            .ok_or_else(|| Error::InvalidConfig("m is required".into()))?;
        if m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        let solver = self.solver_kind()?;
        let sparsities = match (&solver, self.s) {
            (SolverKind::L1DcHard(_), Some(s)) => vec![s],
            (SolverKind::L1DcHard(_), None) => {
                return Err(Error::InvalidConfig("solver l1dc-hard requires --s".into()))
            }
            (_, _) => vec![],
        };
        let default_tol = if matches!(solver, SolverKind::L1Dc(_) | SolverKind::L1DcHard(_)) {
            1e-3
        } else {
            1e-5
        };
        Ok(ExperimentConfig {
            n: self.n,
            field: self.field,
            ratios: vec![(m as f64 + 0.5) / self.n as f64],
            trials: 1,
            solver,
            noise: self.noise.clone(),
            sparsities,
            success_threshold: self.tol.unwrap_or(default_tol),
            base_seed: self.seed,
        })
    }
}

fn write_out(path: &Option<String>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(Error::Io),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_solve(opts: &InstanceOpts) -> Result<(), Error> {
    let (settings, _) = Settings::resolve(opts)?;
    let cfg = settings.single_experiment()?;
    let outcome = run_instance(&cfg, 0, 0, 0)?;
    let r = &outcome.report;
    println!("seed: {}", r.seed);
    println!("final_distance: {:e}", r.final_distance);
    println!("iterations: {}", r.outer_iterations);
    if let Some(x) = &outcome.x_final {
        println!("objective: {:e}", outcome.objective.eval_f(x)?);
    }
    println!("success: {}", r.success);
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn cmd_trace(opts: &TraceOpts) -> Result<(), Error> {
    let (settings, _) = Settings::resolve(&opts.instance)?;
    let cfg = settings.single_experiment()?;
    let outcome = run_instance(&cfg, 0, 0, 0)?;
    let trace = outcome
        .trace
        .ok_or_else(|| Error::invalid("solver produced no trace"))?;
    write_out(&opts.out, &trace.to_csv())
}

fn cmd_certify(opts: &CertifyOpts) -> Result<(), Error> {
    let (settings, map) = Settings::resolve(&opts.instance)?;
    let directions = opts
        .directions
        .or(file_get(&map, "directions")?)
        .unwrap_or(200);
    let cfg = settings.single_experiment()?;
    let outcome = run_instance(&cfg, 0, 0, 0)?;
    let x = outcome
        .x_final
        .ok_or_else(|| Error::invalid("solver returned no iterate"))?;
    let grad = outcome.objective.grad_f(&x)?.norm();
    let cert = certify_minimizer_hessian(&outcome.objective, &x, directions)?;
    println!("final_distance: {:e}", outcome.report.final_distance);
    println!("grad_norm: {grad:e}");
    println!("min_quadratic_form: {:e}", cert.min_quadratic_form);
    match cert.null_direction_residual {
        Some(res) => println!("null_direction_residual: {res:e}"),
        None => println!("null_direction_residual: n/a"),
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Error> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} entry '{p}'")))
        })
        .collect()
}

fn cmd_bench(opts: &BenchOpts) -> Result<(), Error> {
    let (settings, map) = Settings::resolve(&opts.instance)?;
    let trials = opts.trials.or(file_get(&map, "trials")?).unwrap_or(100);
    let preset_name: Option<String> = opts.preset.clone().or(file_get(&map, "preset")?);
    let ratios_text: Option<String> = opts.ratios.clone().or(file_get(&map, "ratios")?);
    let sparsities_text: Option<String> =
        opts.sparsities.clone().or(file_get(&map, "sparsities")?);
    let jobs: Option<usize> = opts.jobs.or(file_get(&map, "jobs")?);
    let out: Option<String> = opts.out.clone().or(file_get(&map, "out")?);

    let mut cfg = match &preset_name {
        Some(name) => preset(name, trials, settings.seed)?,
        None => {
            let ratios = parse_list::<f64>(
                ratios_text
                    .as_deref()
                    .ok_or_else(|| Error::InvalidConfig("--preset or --ratios required".into()))?,
                "ratio",
            )?;
            ExperimentConfig {
                n: settings.n,
                field: settings.field,
                ratios,
                trials,
                solver: settings.solver_kind()?,
                noise: settings.noise.clone(),
                sparsities: vec![],
                success_threshold: settings.tol.unwrap_or(1e-5),
                base_seed: settings.seed,
            }
        }
    };
    // explicit flags refine the preset
    if preset_name.is_some() {
        if let Some(text) = &ratios_text {
            cfg.ratios = parse_list(text, "ratio")?;
        }
        if opts.instance.n.is_some() || map.contains_key("n") {
            cfg.n = settings.n;
        }
        if opts.instance.solver.is_some() || map.contains_key("solver") {
            cfg.solver = settings.solver_kind()?;
        }
        if let Some(t) = settings.tol {
            cfg.success_threshold = t;
        }
        if opts.instance.noise_u.is_some() || map.contains_key("noise_u") {
            cfg.noise = settings.noise.clone();
        }
    }
    if let Some(text) = &sparsities_text {
        cfg.sparsities = parse_list(text, "sparsity")?;
    }
    cfg.validate()?;

    let table = match jobs {
        Some(j) if j > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?
            .install(|| run_table(&cfg)),
        Some(_) => return Err(Error::InvalidConfig("jobs must be positive".into())),
        None => run_table(&cfg),
    }?;
    write_out(&out, &table.to_csv())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(o) => cmd_solve(o),
        Command::Bench(o) => cmd_bench(o),
        Command::Trace(o) => cmd_trace(o),
        Command::Certify(o) => cmd_certify(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
