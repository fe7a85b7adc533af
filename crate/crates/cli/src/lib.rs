// SPDX-License-Identifier: Apache-2.0

//! Command-line frontend: argument parsing, run configuration, and the
//! `score`, `eval`, `simulate` and `nulldist` commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;

use anyhow::Result;

use crate::args::{Cli, Command};
use crate::config::RunConfig;

/// Exit status for errors caused by degenerate data (no events, no
/// predictions).
pub const EXIT_DEGENERATE: u8 = 1;
/// Exit status for I/O and configuration errors.
pub const EXIT_CONFIG: u8 = 2;

/// Maps an error to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let degenerate = err.chain().any(|e| {
        e.downcast_ref::<tolsig::Error>()
            .is_some_and(tolsig::Error::is_degenerate)
    });
    if degenerate {
        EXIT_DEGENERATE
    } else {
        EXIT_CONFIG
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => {
            let path = commands::cmd_score(&RunConfig::from_score_args(&args)?)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Eval(args) => {
            let out = commands::cmd_eval(&RunConfig::from_eval_args(&args)?)?;
            eprintln!(
                "wrote {} and {}",
                out.recall.display(),
                out.precision.display()
            );
        }
        Command::Simulate(args) => {
            let cfg = RunConfig::from_simulate_args(&args)?;
            let out = commands::cmd_simulate(&cfg)?;
            commands::write_significance(
                std::io::stdout().lock(),
                &out.significance,
                cfg.plan.replicates(),
            )?;
            eprintln!(
                "wrote {} curve files to {}",
                out.files.len(),
                cfg.out.display()
            );
        }
        Command::Nulldist(args) => {
            let cfg = RunConfig::from_nulldist_args(&args)?;
            let out = commands::cmd_nulldist(
                &cfg,
                tolsig::Tolerance(args.delta),
                args.quantile,
                !args.null_only,
            )?;
            let mut stdout = std::io::stdout().lock();
            out.report.write(&mut stdout)?;
            stdout.flush()?;
            eprintln!(
                "wrote {}, {} and {}",
                out.recall_distribution.display(),
                out.precision_distribution.display(),
                out.report_path.display()
            );
        }
    }
    Ok(())
}
