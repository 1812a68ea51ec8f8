use std::process::ExitCode;

use clap::Parser;
use topeval_core::taskgen::TaskKind;
use topeval_core::{ErrorKind, Result};

mod args;
mod commands;
mod settings;

use args::{Cli, Command, KindArg};
use settings::{set, FileConfig, Settings};

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut s = Settings::from_file(file);
    set(&mut s.seed, cli.seed);
    set(&mut s.out_dir, cli.out_dir);
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, s),
        Command::Metrics(a) => commands::metrics(a, s),
        Command::GenTwi(a) => commands::generate(&[TaskKind::Twi], a, s),
        Command::GenTwm(a) => commands::generate(&[TaskKind::Twm], a, s),
        Command::Generate(a) => {
            let kinds: &[TaskKind] = match a.kind {
                KindArg::Twi => &[TaskKind::Twi],
                KindArg::Twm => &[TaskKind::Twm],
                KindArg::Both => &[TaskKind::Twi, TaskKind::Twm],
            };
            commands::generate(kinds, &a.gen, s)
        }
        Command::Export(a) => commands::export(a, s),
        Command::Score(a) => commands::score_cmd(a, s),
        Command::Agreement(a) => commands::agreement(a, s),
        Command::Simulate(a) => commands::simulate(a, s),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Io => 3,
                ErrorKind::Invariant => 4,
            })
        }
    }
}
