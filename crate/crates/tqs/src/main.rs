use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tqs::harness::{self, ExperimentConfig, SweepParameter};
use tqs::overlaps::OverlapSet;

#[derive(Parser)]
#[command(name = "tqs", about = "Truncated-Taylor quantum simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a parameter sweep: one run per value plus consolidated metrics.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
    },
    /// Summarize a config, overlap-set or basis-dump file.
    Inspect { file: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = harness::run(&cfg, &out)?;
            println!("basis_size {}", summary.basis_size);
            println!("circuit_count {}", summary.circuit_count);
            println!("closure {}", summary.closed);
            for (method, terminal, min) in &summary.fidelity {
                println!("terminal_fidelity {method} {terminal:.12}");
                println!("min_fidelity {method} {min:.12}");
            }
            println!("output_dir {}", summary.out_dir.display());
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let parameter = SweepParameter::parse(&param)?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()?;
            harness::sweep(&cfg, parameter, &values, &out)?;
            println!("output_dir {}", out.display());
        }
        Command::Inspect { file } => {
            let text = std::fs::read_to_string(&file)?;
            inspect(&text)?;
        }
    }
    Ok(())
}

fn inspect(text: &str) -> anyhow::Result<()> {
    if text.starts_with("# tqs overlap set") {
        let ov = OverlapSet::parse(text)?;
        println!("kind overlap_set");
        println!("dimension {}", ov.dim());
        println!("basis {}", ov.basis_id());
        let mut names = vec!["E".to_string(), "D".to_string()];
        if ov.j().is_some() {
            names.push("J".to_string());
        }
        names.extend(ov.named_entries().iter().map(|(n, _)| n.clone()));
        println!("matrices {}", names.join(","));
    } else if text.lines().any(|l| l.trim_start().starts_with("level ")) {
        println!("kind basis_dump");
        let n = text
            .lines()
            .filter(|l| l.trim_start().starts_with("level "))
            .count();
        println!("size {n}");
    } else {
        let cfg = ExperimentConfig::parse(text)?;
        println!("kind config");
        println!("k {}", cfg.k);
        println!("dt {:e}", cfg.dt);
        println!("t_max {:e}", cfg.t_max);
        println!("n_steps {}", cfg.n_steps()?);
        println!("observables {}", cfg.observables.join(","));
    }
    Ok(())
}
