//! `gcstar`: batch verification of finite groupoid C*-algebra constructions.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on
//! parse or validation errors.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use commands::{Ctx, InputError};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("`{s}` is not an integer ≥ 1")),
    }
}

#[derive(Parser)]
#[command(name = "gcstar", version, about = "Verify finite groupoid C*-algebra constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Groupoid JSON file.
    #[arg(long, global = true, value_name = "FILE")]
    groupoid: Option<PathBuf>,
    /// Built-in groupoid: Z2, P2, X2, T2, W2, pair:N, group:N, space:N, trafo:N.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tolerance: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random instances per check.
    #[arg(long, global = true, default_value_t = 5, value_parser = at_least_one)]
    trials: usize,
    #[arg(long, global = true)]
    json: bool,
    /// Write matrices as binary dumps plus manifest.json into DIR.
    #[arg(long, global = true, value_name = "DIR")]
    dump: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Groupoid and Haar axioms (FILE or --groupoid/--preset).
    Validate { file: Option<PathBuf> },
    /// Measure families, the composite identities and canonical unitaries.
    Families,
    /// Structure constants and norms of the convolution algebra.
    Algebra,
    /// Check a representation bundle (`rep [check] BUNDLE`); without one,
    /// the regular representation.
    Rep {
        #[arg(num_args = 0..=2, value_name = "[check] BUNDLE")]
        args: Vec<String>,
    },
    /// Integrated form of a representation.
    Integrate { bundle: Option<PathBuf> },
    /// Disintegrate the integrated form back into a representation.
    Disintegrate { bundle: Option<PathBuf> },
    /// Integration/disintegration round trips and naturality.
    Roundtrip { bundle: Option<PathBuf> },
    /// Inverse semigroup crossed product against the groupoid algebra.
    Etale {
        #[arg(long, value_name = "FILE")]
        semigroup: Option<PathBuf>,
    },
    /// Transformation groupoid against the group crossed product.
    Trafo {
        #[arg(long, value_name = "FILE")]
        group: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        action: Option<PathBuf>,
    },
    /// The full acceptance battery.
    Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        groupoid: cli.groupoid.clone(),
        preset: cli.preset.clone(),
        tolerance: cli.tolerance,
        seed: cli.seed,
        trials: cli.trials,
        dump: cli.dump.clone(),
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Validate { file } => commands::validate(&ctx, file.as_ref()),
        Command::Families => commands::families(&ctx),
        Command::Algebra => commands::algebra(&ctx),
        Command::Rep { args } => {
            let rest: Vec<&String> = args.iter().skip_while(|a| *a == "check").collect();
            match rest.as_slice() {
                [] => commands::rep(&ctx, None),
                [b] => commands::rep(&ctx, Some(&PathBuf::from(b))),
                _ => Err(InputError("usage: rep [check] BUNDLE".into()).into()),
            }
        }
        Command::Integrate { bundle } => commands::integrate(&ctx, bundle.as_ref()),
        Command::Disintegrate { bundle } => commands::disintegrate_cmd(&ctx, bundle.as_ref()),
        Command::Roundtrip { bundle } => commands::roundtrip(&ctx, bundle.as_ref()),
        Command::Etale { semigroup } => commands::etale(&ctx, semigroup.as_ref()),
        Command::Trafo { group, action } => commands::trafo(&ctx, group.as_ref(), action.as_ref()),
        Command::Suite => commands::suite(&ctx),
    };
    match result {
        Ok(mut out) => {
            out.timing.total_ms = start.elapsed().as_secs_f64() * 1e3;
            print!("{}", if cli.json { out.json() } else { out.text() });
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if e.downcast_ref::<InputError>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
