//! `qtrack` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qtrack::config::ExperimentConfig;
use qtrack::detector::{generate_event_with, load_hits_csv, save_hits_csv};
use qtrack::experiments::{run_size_sweep, run_vqe_sweep};
use qtrack::qubo::{build_qubo, mask_to_bits, Assignment, Qubo};
use qtrack::seeding::{save_triplets_csv, seed_event};
use qtrack::solvers::{brute_force, simulated_annealing};
use qtrack::vqe::{run_lvqe, CvarConfig, Estimator, VqeOptions};
use qtrack::{Error, Result};

#[derive(Parser)]
#[command(name = "qtrack", version, about = "Track reconstruction as QUBO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set vqe.alphas=[0.1]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &self.overrides),
            None => ExperimentConfig::from_toml_str("", &self.overrides),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Brute,
    Anneal,
    Vqe,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one event and write its hits as CSV.
    Generate {
        #[arg(long)]
        density: usize,
        /// Defaults to the config's `master_seed`, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Seed an event file and write its QUBO.
    BuildQubo {
        #[arg(long)]
        hits: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the candidate triplets as CSV.
        #[arg(long)]
        triplets_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Minimize a QUBO file.
    Solve {
        #[arg(long)]
        qubo: PathBuf,
        #[arg(long, value_enum)]
        solver: SolverArg,
        /// Defaults to the config's `master_seed`, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// CVaR fraction for the VQE solver.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Layers added after the rotation layer for the VQE solver.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Write the VQE cost trace as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Efficiency and purity versus slice size and density.
    SweepSize(SweepArgs),
    /// VQE success fraction versus slice size, alpha, layers and noise.
    SweepVqe(SweepArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    seed: u64,
    /// Output directory; falls back to the config's `output_dir`, then `.`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

fn print_assignment(a: &Assignment) {
    println!("bits {}", a.bit_string());
    println!("energy {:?}", a.energy);
}

fn solve(
    path: &Path,
    solver: SolverArg,
    seed: u64,
    alpha: f64,
    reps: usize,
    trace_out: Option<&Path>,
    config: &ExperimentConfig,
) -> Result<()> {
    let qubo = Qubo::load(path)?;
    if qubo.n() == 0 {
        return Err(Error::InvalidInput(format!("{} has no variables", path.display())));
    }
    match solver {
        SolverArg::Brute => {
            let r = brute_force(&qubo)?;
            print_assignment(&r.best);
            println!("ground_states {}", r.all_ground_states.len());
        }
        SolverArg::Anneal => {
            let r = simulated_annealing(&qubo, &config.anneal.schedule(qubo.n()), seed)?;
            print_assignment(&r.best);
        }
        SolverArg::Vqe => {
            let v = &config.vqe;
            let options = VqeOptions {
                extra_layers: reps,
                layer_style: v.layer_style,
                cvar: CvarConfig::new(alpha, v.shots)?,
                stage_budget: v.stage_budget,
                total_budget: v.total_budget,
                estimator: Estimator::Shots { noise: None },
                optimizer: Default::default(),
            };
            let run = run_lvqe(&qubo, &options, seed)?;
            let best = Assignment::evaluate(&qubo, mask_to_bits(run.most_likely, qubo.n()))?;
            print_assignment(&best);
            println!("ground_state_component {:?}", run.final_ground_state_component);
            if let Some(out) = trace_out {
                run.save_trace_csv(out)?;
            }
        }
    }
    Ok(())
}

fn sweep_dir(args: &SweepArgs, config: &ExperimentConfig) -> PathBuf {
    args.out_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            density,
            seed,
            out,
            config,
        } => {
            let cfg = config.load()?;
            let event = generate_event_with(
                &cfg.detector.geometry()?,
                density,
                &cfg.detector.generator_options(),
                seed.or(cfg.master_seed).unwrap_or(0),
            )?;
            save_hits_csv(&event, &out)?;
            println!("wrote {} hits to {}", event.hits.len(), out.display());
        }
        Command::BuildQubo {
            hits,
            out,
            triplets_out,
            config,
        } => {
            let cfg = config.load()?;
            let event = load_hits_csv(&hits)?;
            let (triplets, links) = seed_event(&event, &cfg.seeding);
            let qubo = build_qubo(&triplets, &links, &cfg.qubo)?;
            qubo.save(&out)?;
            if let Some(t) = triplets_out {
                save_triplets_csv(&triplets, t)?;
            }
            println!(
                "wrote QUBO with {} variables and {} couplings to {}",
                qubo.n(),
                qubo.couplings().len(),
                out.display()
            );
        }
        Command::Solve {
            qubo,
            solver,
            seed,
            alpha,
            reps,
            trace_out,
            config,
        } => {
            let cfg = config.load()?;
            let seed = seed.or(cfg.master_seed).unwrap_or(0);
            solve(&qubo, solver, seed, alpha, reps, trace_out.as_deref(), &cfg)?
        }
        Command::SweepSize(args) => {
            let cfg = args.config.load()?;
            let path = run_size_sweep(&cfg, args.seed)?.write(sweep_dir(&args, &cfg), "size_sweep")?;
            println!("wrote {}", path.display());
        }
        Command::SweepVqe(args) => {
            let cfg = args.config.load()?;
            let path = run_vqe_sweep(&cfg, args.seed)?.write(sweep_dir(&args, &cfg), "vqe_sweep")?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not failures.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
