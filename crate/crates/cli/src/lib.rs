//! Command-line runner: loads a TOML run config, dispatches a command and
//! writes a report whose status sets the exit code.

pub mod build;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

use config::{Command, Overrides, RunConfig};
use report::{Report, Verdicts};

/// Configuration problems exit 2, numeric failures exit 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[error("{operation}: {message}")]
pub struct CliError {
    pub kind: ErrorKind,
    /// The module operation that failed.
    pub operation: String,
    pub message: String,
}

impl CliError {
    pub fn config(operation: &str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            operation: operation.to_string(),
            message: message.into(),
        }
    }

    pub fn numeric(operation: &str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Numeric,
            operation: operation.to_string(),
            message: message.into(),
        }
    }

    /// Problem-definition errors are configuration errors; the rest are numeric.
    pub fn from_core(operation: &str, e: eic_core::Error) -> Self {
        use eic_core::Error as E;
        match e {
            E::InvalidProblem(_) | E::InvalidArgument(_) | E::UnsupportedClass(_) | E::InvalidSpectrum(_) => {
                Self::config(operation, e.to_string())
            }
            _ => Self::numeric(operation, e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numeric => 3,
        }
    }

    /// JSON diagnostic record.
    pub fn diagnostic(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("errors serialise")
    }
}

#[derive(Debug, Parser)]
#[command(name = "eic", version, about = "Run estimations, verification suites and axiom audits from a TOML config")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's `command`.
    #[arg(long, value_parser = ["estimate", "compare", "verify-fisher", "verify-limit", "verify-pmle", "audit-axioms", "c-function"])]
    pub command: Option<String>,
    /// Report path; without one the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"])]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted config key and value, e.g. `argmax.grid_per_axis=64`; repeatable.
    #[arg(long = "tol-override", value_name = "KEY=VALUE")]
    pub tol_override: Vec<String>,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            command: self.command.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            seed: self.seed,
            values: self.tol_override.clone(),
        }
    }
}

/// Runs a resolved config and assembles the report.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let outcome = match config.command {
        Command::AuditAxioms => commands::audit_axioms(config)?,
        command => {
            let problem = build::problem(config)?;
            match command {
                Command::Estimate => commands::estimate_cmd(config, &problem)?,
                Command::Compare => commands::compare(config, &problem)?,
                Command::VerifyFisher => commands::verify_fisher(config, &problem)?,
                Command::VerifyLimit => commands::verify_limit(config, &problem)?,
                Command::VerifyPmle => commands::verify_pmle(config, &problem)?,
                Command::CFunction => commands::c_function_cmd(config, &problem)?,
                Command::AuditAxioms => unreachable!(),
            }
        }
    };
    Ok(Report {
        command: config.command.name().to_string(),
        config: serde_json::to_value(config).expect("configs serialise"),
        values: outcome.values,
        verdicts: Verdicts::new(outcome.checks, outcome.errors),
        table: outcome.table,
    })
}

/// Full CLI flow; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let result = config::load(&cli.config, &cli.overrides()).and_then(|config| {
        let report = run(&config)?;
        match &config.output.path {
            Some(path) => {
                report.write(path, config.output.format)?;
                print!("{}", report.render());
            }
            None => match config.output.format {
                config::Format::Json => print!("{}", report.to_json()),
                config::Format::Csv => print!("{}", report.table.to_csv()?),
            },
        }
        Ok(report.verdicts.status.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
