use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccqme::config::{ConfigError, ExperimentConfig};
use ccqme::io::{compare, ReferenceTrajectory};
use ccqme::runner::{self, EnergyGrid, Experiment, RunError};

#[derive(Parser)]
#[command(name = "ccqme", version, about = "Quantum master equation experiments driven by TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for method and sweep parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted and ignored: the core uses no random numbers.
    #[arg(long, global = true)]
    seed_irrelevant: Option<u64>,
    /// Run the expensive cross-check oracles and write verify.txt.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate every configured method; one CSV per method.
    Run,
    /// Evaluate the configured 2-D parameter grid.
    Sweep,
    /// Difference report of one observable between two trajectory CSVs.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "ground_pop")]
        observable: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bath correlator and rate functions; oscillator influence kernels.
    Kernels {
        /// Energy grid `start,stop,count` for W and V; default spans three model energy scales.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        energies: Option<Vec<f64>>,
    },
    /// Exact oscillator master-equation coefficients on the output grid.
    Coeffs,
    /// Steady states of every configured method.
    Steady,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("--config is required for this subcommand".into()))?;
    let cfg = ExperimentConfig::load(path)?;
    let dir = cli.out_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, dir))
}

fn verify(cli: &Cli, exp: &Experiment, dir: &Path) -> Result<(), RunError> {
    if cli.verify {
        let lines = runner::verify(exp)?;
        for l in &lines {
            eprintln!("verify: {l}");
        }
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verify.txt"), lines.join("\n") + "\n")?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::Compare { run, reference, observable, out } => {
            let a = ReferenceTrajectory::load(run)?;
            let b = ReferenceTrajectory::load(reference)?;
            let rep = compare(&a, &b, observable)?;
            let out = out.clone().unwrap_or_else(|| run.with_file_name(format!("compare_{observable}.csv")));
            rep.write(&out)?;
            println!("{observable}: max |diff| = {:.6e}, mean |diff| = {:.6e}, {} points -> {}", rep.max, rep.mean, rep.t.len(), out.display());
            Ok(())
        }
        Command::Sweep => {
            let (cfg, dir) = load(cli)?;
            let res = runner::sweep_and_write(&cfg, &dir)?;
            let failed = res.cells.iter().filter(|c| c.metrics.is_err()).count();
            println!("sweep: {} cells, {failed} failed -> {}", res.cells.len(), dir.join("sweep.csv").display());
            Ok(())
        }
        cmd => {
            let (cfg, dir) = load(cli)?;
            let exp = Experiment::new(cfg)?;
            verify(cli, &exp, &dir)?;
            match cmd {
                Command::Run => {
                    let out = runner::run_and_write(&exp, &dir)?;
                    for r in &out.trajectories {
                        let tr = r.trajectory();
                        let max_d = r.dist.as_ref().map(|d| d.iter().cloned().fold(0.0, f64::max));
                        match max_d {
                            Some(d) => println!("{}: {} snapshots, max dist_to_exact {d:.6}", r.method.as_str(), tr.len()),
                            None => println!("{}: {} snapshots", r.method.as_str(), tr.len()),
                        }
                    }
                    if !out.diagnostics.is_empty() {
                        eprintln!("{} diagnostics written to {}", out.diagnostics.len(), dir.join("warnings.txt").display());
                    }
                }
                Command::Steady => {
                    for r in runner::steady_and_write(&exp, &dir)? {
                        println!("{}: ground {:.8} min_eig {:.3e} dist_to_exact {:.3e}", r.method.as_str(), r.ground_pop, r.min_eig, r.dist_to_exact);
                    }
                }
                Command::Kernels { energies } => {
                    let grid = match energies.as_deref() {
                        None => EnergyGrid::around(exp.cfg.model.energy_scale()),
                        Some(&[start, stop, count]) if count >= 1.0 && count.fract() == 0.0 => {
                            EnergyGrid { start, stop, count: count as usize }
                        }
                        Some(_) => {
                            return Err(ConfigError::Invalid("--energies expects start,stop,count".into()).into());
                        }
                    };
                    runner::kernels_and_write(&exp, &grid, &dir)?
                }
                Command::Coeffs => {
                    let skipped = runner::coeffs_and_write(&exp, &dir)?;
                    if !skipped.is_empty() {
                        eprintln!("{} singular times skipped, see warnings.txt", skipped.len());
                    }
                }
                Command::Compare { .. } | Command::Sweep => unreachable!(),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
