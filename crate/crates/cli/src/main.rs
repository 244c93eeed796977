use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fourier_cur_cli::{
    compare, run_approx, sweep_blocks, sweep_tau, CliError, ExperimentConfig, RawConfig,
};

#[derive(Parser)]
#[command(
    version,
    about = "CUR approximation experiments on truncated Fourier series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one approximation; writes errors.csv and summary.json
    Approx(CommandArgs),
    /// Sweep block sizes (b1, b2); writes table.csv
    SweepBlocks(CommandArgs),
    /// Sweep the stopping tolerance; writes table.csv
    SweepTau(CommandArgs),
    /// Compare the truncated series with the adaptive methods; writes table.csv
    Compare(CommandArgs),
}

#[derive(Args)]
struct CommandArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: RawConfig,
}

impl CommandArgs {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_sources(self.config.as_deref(), self.overrides)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Approx(args) => {
            let cfg = args.resolve()?;
            let out = run_approx(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&out.summary).expect("summary serializes")
            );
        }
        Command::SweepBlocks(args) => {
            let cfg = args.resolve()?;
            let table = sweep_blocks(&cfg)?;
            println!(
                "{} rows -> {}",
                table.rows.len(),
                cfg.output_dir.join("table.csv").display()
            );
        }
        Command::SweepTau(args) => {
            let cfg = args.resolve()?;
            let table = sweep_tau(&cfg)?;
            println!(
                "{} rows -> {}",
                table.rows.len(),
                cfg.output_dir.join("table.csv").display()
            );
        }
        Command::Compare(args) => {
            let cfg = args.resolve()?;
            let table = compare(&cfg)?;
            println!(
                "{} rows -> {}",
                table.rows.len(),
                cfg.output_dir.join("table.csv").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn override_flags_use_field_names() {
        let cli = Cli::try_parse_from([
            "fourier-cur",
            "sweep-blocks",
            "--tau",
            "1e-3",
            "--b1",
            "4",
            "--M1",
            "64",
            "--K",
            "3",
            "--T1",
            "-1,0,1",
            "--pairs",
            "2x2,4x6",
            "--taus",
            "0.1,0.01",
        ])
        .unwrap();
        let Command::SweepBlocks(args) = cli.command else {
            panic!("wrong subcommand");
        };
        let o = args.overrides;
        assert_eq!(
            (o.tau, o.b1, o.m1, o.k),
            (Some(1e-3), Some(4), Some(64), Some(3))
        );
        assert_eq!(o.t1, Some(vec![-1, 0, 1]));
        assert_eq!(o.pairs.unwrap().len(), 2);
        assert_eq!(o.taus, Some(vec![0.1, 0.01]));
    }
}
