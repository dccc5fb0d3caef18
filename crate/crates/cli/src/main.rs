use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use geomsched::bench::{bench, bench_glob, summarize, write_csv, write_json, write_summary};
use geomsched::eval::{check_feasible_at, npv};
use geomsched::grid::{gamma_bound, IntervalGrid};
use geomsched::io::{parse_schedule_json, read_instance};
use geomsched::mip::{build_model, write_lp, FormulationKind};
use geomsched::model::{Instance, Semantics};
use geomsched::pipeline::{run_pipeline, RunConfig, SolverChoice};
use geomsched::solver::{SolverConfig, SOLVER_ENV};

/// Exit status of `check` when the schedule violates a constraint.
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "geomsched", version, about = "Project scheduling with NPV objective on a geometric time grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve every instance matching a glob at every ε.
    Bench {
        /// Glob such as 'j30/*.sm' (quote it to keep the shell from expanding it).
        pattern: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
        /// Instances solved in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify a schedule file (JSON map job id -> completion period).
    Check {
        instance: PathBuf,
        schedule: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Write the MIP model in LP format without solving it.
    ExportModel {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the approximation factor for a rate, horizon and ε.
    Gamma {
        #[arg(long)]
        rate: f64,
        /// Horizon in periods.
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Grid parameter; `bench` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    epsilon: Vec<f64>,
    /// Discount rate per period; overrides the instance file.
    #[arg(long)]
    rate: Option<f64>,
    /// cumulative or renewable; overrides the instance file.
    #[arg(long)]
    semantics: Option<Semantics>,
    /// orig-at, agg-at or agg-by.
    #[arg(long, default_value = "agg-at")]
    formulation: FormulationKind,
    /// Profit of every non-dummy job read from a PSPLib file.
    #[arg(long, default_value_t = 1.0)]
    profit_default: f64,
    /// Keep only the maximum closure under profits scaled by this factor.
    #[arg(long)]
    alpha: Option<f64>,
    /// Remove jobs that cannot finish by this period.
    #[arg(long)]
    horizon_limit: Option<u32>,
}

#[derive(Args)]
struct SolverArgs {
    /// Command template with {model} and {solution}, optionally {time_limit} and {mip_gap}.
    #[arg(long, env = SOLVER_ENV)]
    solver_cmd: Option<String>,
    /// Seconds per solve.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0.0)]
    mip_gap: f64,
    /// Use the built-in exhaustive search instead of an external solver (tiny instances only).
    #[arg(long, conflicts_with = "solver_cmd")]
    builtin: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl ModelArgs {
    fn epsilons(&self) -> Vec<f64> {
        let mut e = self.epsilon.clone();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }

    fn run_config(&self, solver: SolverChoice) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(self.epsilon[0], self.formulation, solver);
        cfg.rate = self.rate;
        cfg.semantics = self.semantics;
        cfg.profit_default = self.profit_default;
        cfg.preprocess.nested_pit_alpha = self.alpha;
        cfg.preprocess.horizon_limit = self.horizon_limit;
        for &e in &self.epsilon {
            RunConfig { epsilon: e, ..cfg.clone() }.validate()?;
        }
        Ok(cfg)
    }

    /// Config for commands that take a single ε.
    fn single(&self, solver: SolverChoice) -> Result<RunConfig> {
        if self.epsilons().len() > 1 {
            bail!("this command takes a single --epsilon");
        }
        self.run_config(solver)
    }

    fn load(&self, path: &Path) -> Result<(RunConfig, Instance)> {
        let cfg = self.single(SolverChoice::BruteForce)?;
        let inst = read_instance(path, &cfg.psplib_options()).with_context(|| format!("reading {}", path.display()))?;
        Ok((cfg.clone(), cfg.apply(&inst)))
    }
}

impl SolverArgs {
    fn choice(&self) -> Result<SolverChoice> {
        if self.builtin {
            return Ok(SolverChoice::BruteForce);
        }
        match &self.solver_cmd {
            Some(t) => Ok(SolverChoice::External(SolverConfig::new(t.clone(), self.time_limit, self.mip_gap)?)),
            None => bail!("no solver configured: pass --solver-cmd, set {SOLVER_ENV}, or use --builtin"),
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { instance, model, solver, out } => {
            let (mut cfg, inst) = model.load(&instance)?;
            cfg.solver = solver.choice()?;
            let report = run_pipeline(&cfg, &inst)?;
            let mut w = open_output(out.output.as_deref())?;
            match out.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &report)?;
                    writeln!(w)?;
                }
                Format::Csv => {
                    writeln!(w, "job,completion")?;
                    for (id, c) in &report.schedule.completion {
                        writeln!(w, "{id},{}", c.map_or(String::new(), |c| c.to_string()))?;
                    }
                }
            }
            w.flush()?;
            if report.beyond_horizon {
                eprintln!("warning: some completions lie past the horizon T = {}", inst.horizon);
            }
            eprintln!("npv {} ub {:?} gap {} gamma {}", report.npv, report.npv_hat_ub, report.gap, report.gamma);
        }
        Command::Bench { pattern, model, solver, out, jobs } => {
            let cfg = model.run_config(solver.choice()?)?;
            let paths = bench_glob(&pattern)?;
            let epsilons = model.epsilons();
            let rows = bench(&cfg, &paths, &epsilons, jobs)?;
            let mut w = open_output(out.output.as_deref())?;
            match out.format {
                Format::Json => {
                    write_json(&rows, &mut w)?;
                    writeln!(w)?;
                }
                Format::Csv => {
                    write_csv(&rows, &mut w)?;
                    write_summary(&summarize(&rows), &mut w)?;
                }
            }
            w.flush()?;
        }
        Command::Check { instance, schedule, model } => {
            let (_, inst) = model.load(&instance)?;
            let text = std::fs::read_to_string(&schedule).with_context(|| format!("reading {}", schedule.display()))?;
            let sched = parse_schedule_json(&text, &inst)?;
            let report = check_feasible_at(&sched, &inst);
            println!("{report}");
            println!("npv {}", npv(&sched, &inst));
            if !report.is_feasible() {
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
        }
        Command::ExportModel { instance, model, output } => {
            let (cfg, inst) = model.load(&instance)?;
            let grid = IntervalGrid::new(cfg.epsilon, inst.horizon)?;
            let mip = build_model(&inst, cfg.formulation, &grid)?;
            let mut w = open_output(output.as_deref())?;
            w.write_all(write_lp(&mip)?.as_bytes())?;
            w.flush()?;
        }
        Command::Gamma { rate, horizon, epsilon } => {
            if !(rate >= 0.0 && horizon >= 0.0 && epsilon > 0.0) {
                bail!("need rate >= 0, horizon >= 0 and epsilon > 0");
            }
            println!("{}", gamma_bound(rate, horizon, epsilon));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
