mod args;
mod backend;
mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use mspider_core::augment::{AugmentConfig, SynthesisPolicy};

use args::{Cli, Command};
use backend::BackendChoice;
use config::FileConfig;
use error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("MSPIDER_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.jobs.or(file.jobs) {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let backend = BackendChoice {
        fixtures: cli.fixtures.clone().or(file.fixtures.clone()),
        sidecar: cli.sidecar.clone().or(file.sidecar.clone()),
        cache: cli.cache.clone().or(file.cache.clone()),
    };
    tracing::info!(command = cli.command.name(), "starting");
    match cli.command {
        Command::Stats {
            data,
            corpus_root,
            langs,
            json,
        } => commands::stats(&data, corpus_root.as_deref(), &langs, json),
        Command::Validate { data, json } => commands::validate(&data, json),
        Command::Evaluate {
            data,
            pred,
            with_values,
            out,
            json,
        } => commands::evaluate(&data, &pred, with_values, out.as_deref(), json),
        Command::Hardness { data, details, json } => commands::hardness_cmd(&data, details, json),
        Command::LinkScore {
            data,
            corpus_root,
            langs,
            json,
        } => commands::link_score(&data, corpus_root.as_deref(), &langs, json),
        Command::Augment {
            data,
            out,
            seed,
            rounds,
            intermediates,
            default_threshold,
            thresholds,
            no_probe,
            databases,
        } => {
            let base = file.augment;
            let config = AugmentConfig {
                rounds: rounds.unwrap_or(base.rounds),
                intermediates: if intermediates.is_empty() {
                    base.intermediates
                } else {
                    intermediates
                },
                thresholds: commands::thresholds_from(default_threshold, &thresholds, base.thresholds)?,
                probe_separators: base.probe_separators && !no_probe,
                databases: if databases.is_empty() { base.databases } else { Some(databases) },
                language: base.language.or(Some(data.lang)),
                separators: base.separators,
            };
            let args = commands::AugmentArgs {
                data: &data,
                out: &out,
                seed: seed.or(file.seed),
                config,
            };
            commands::augment(args, &backend)
        }
        Command::Synthesize {
            data,
            augmented,
            out,
            seed,
            variants,
            replace_probability,
        } => {
            let base = file.synthesize;
            let policy = SynthesisPolicy {
                variants_per_example: variants.unwrap_or(base.variants_per_example),
                replace_probability: replace_probability.unwrap_or(base.replace_probability),
                seed: seed.or(file.seed).unwrap_or(base.seed),
            };
            commands::synthesize(&data, &augmented, &out, policy)
        }
        Command::PrepZeroshot {
            data,
            mode,
            target,
            out,
        } => commands::prep_zeroshot(&data, mode, target, &out, &backend),
    }
}
