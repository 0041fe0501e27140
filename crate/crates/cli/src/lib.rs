//! Command-line front end of the `cyberins` model.
//!
//! Exit codes: 0 success, 1 output file could not be written, 2 usage,
//! config or parameter error, 3 user not insurable, 4 numerical solver did
//! not converge.

pub mod args;
pub mod render;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use cyberins::game::NumericalConfig;
use cyberins::scenario::{Scenario, ScenarioDraft};
use serde::Serialize;

use args::{Cli, Command, Format, Shared};
use render::Render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_INSURABLE: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Model(#[from] cyberins::Error),
    #[error("cannot read config file {path}: {source}")]
    Config { path: PathBuf, source: io::Error },
    #[error("config file {path}: {source}")]
    ConfigSyntax {
        path: PathBuf,
        source: cyberins::Error,
    },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Model(cyberins::Error::NotInsurable { .. }) => EXIT_NOT_INSURABLE,
            Failure::Model(cyberins::Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
            Failure::Output { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn load_scenario(shared: &Shared) -> Result<Scenario, Failure> {
    let draft = match &shared.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Failure::Config {
                path: path.clone(),
                source,
            })?;
            ScenarioDraft::from_toml_str(&text).map_err(|source| Failure::ConfigSyntax {
                path: path.clone(),
                source,
            })?
        }
        None => ScenarioDraft::default(),
    };
    Ok(draft
        .cu(shared.cu)
        .ca(shared.ca)
        .cs(shared.cs)
        .gamma(shared.gamma)
        .coverage(shared.s)
        .premium(shared.t)
        .seed(shared.seed)
        .samples(shared.samples)
        .finish()?)
}

fn numerical_config(shared: &Shared) -> NumericalConfig {
    let mut config = NumericalConfig::default();
    if let Some(cap) = shared.max_iterations {
        config.max_iterations = cap;
    }
    config
}

fn render<T: Serialize + Render>(doc: &T, format: Format) -> String {
    match format {
        Format::Table => doc.table(),
        Format::Csv => doc.csv(),
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(doc).expect("reports contain only finite numbers");
            s.push('\n');
            s
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let shared = &cli.shared;
    let scenario = load_scenario(shared)?;
    let config = numerical_config(shared);
    let (text, code) = match &cli.command {
        Command::Spe => {
            let doc = report::spe(&scenario, &config)?;
            let code = if doc.spe.report.feasible {
                EXIT_OK
            } else {
                EXIT_NOT_INSURABLE
            };
            (render(&doc, shared.format), code)
        }
        Command::Policy => (render(&report::policy(&scenario), shared.format), EXIT_OK),
        Command::Bgne => (render(&report::bgne(&scenario)?, shared.format), EXIT_OK),
        Command::Simulate => {
            let doc = report::simulate(&scenario, &config)?;
            if let Some(a) = &doc.advisory {
                eprintln!("warning: {a}");
            }
            let code = if doc.insurable {
                EXIT_OK
            } else {
                EXIT_NOT_INSURABLE
            };
            (render(&doc, shared.format), code)
        }
        Command::Sweep(args) => {
            let doc = report::sweep_output(
                &scenario, args.param, args.from, args.to, args.steps, &config,
            )?;
            (render(&doc, shared.format), EXIT_OK)
        }
    };
    emit(shared.out.as_deref(), &text)?;
    Ok(code)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Failure::Output {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Failure::Output {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
