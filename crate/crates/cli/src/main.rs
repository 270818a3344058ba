//! `mpet`: runs single simulations, convergence studies and the invariant
//! suite of the MPET PolyDG solver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mpet_polydg::checks::run_invariant_suite;
use mpet_polydg::config::{parse_config, ValidatedConfig};
use mpet_polydg::study::{run_single, run_study};

#[derive(Parser, Debug)]
#[command(name = "mpet", version, about = "Polytopic DG solver for dynamic multiple-network poroelasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir` of the configuration).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for mesh agglomeration and random checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the assembled matrices in coordinate format (`run` only).
    #[arg(long, global = true)]
    dump_matrices: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation: first mesh and first degree pair of the config.
    Run { config: PathBuf },
    /// Run the convergence study described by the config.
    Study { config: PathBuf },
    /// Run the invariant suite.
    Check,
}

fn load(path: &Path, cli: &Cli) -> Result<(ValidatedConfig, PathBuf), String> {
    let mut cfg = parse_config(path).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let out = cli.output_dir.clone().unwrap_or_else(|| cfg.output_dir());
    Ok((cfg, out))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, out) = load(config, cli)?;
            let art = run_single(&cfg, &out, cli.dump_matrices).map_err(|e| e.to_string())?;
            let r = &art.report;
            println!(
                "P{}-P{} h = {:.4} t = {}: err_u_dg = {:.4e}, err_p_l2 = {:.4e}",
                r.q, r.p, r.h, r.t_eval, r.err_u_dg, r.err_p_l2
            );
            for f in &art.files {
                println!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Study { config } => {
            let (cfg, out) = load(config, cli)?;
            if cli.dump_matrices {
                log::warn!("--dump-matrices is ignored by `study`");
            }
            let (study, path) = run_study(&cfg, &out).map_err(|e| e.to_string())?;
            print!("{}", study.csv);
            println!("wrote {}", path.display());
            Ok(if study.failures() == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} sweep point(s) failed", study.failures());
                ExitCode::from(2)
            })
        }
        Command::Check => {
            let results = run_invariant_suite(cli.seed.unwrap_or(0)).map_err(|e| e.to_string())?;
            let mut failed = 0;
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("{tag} {} (value {:.3e}, tolerance {:.1e})", r.name, r.value, r.tolerance);
                failed += usize::from(!r.passed);
            }
            println!("{} checks, {failed} failed", results.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
