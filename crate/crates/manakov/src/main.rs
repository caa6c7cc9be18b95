//! Thin command-line wrapper: load a run configuration (file or preset),
//! apply overrides, execute it, report the files written.

use manakov::cli::{self, CliError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
manakov - stochastic Manakov system experiment runner

USAGE:
    manakov (--config <path> | --preset <name>) [OPTIONS]

OPTIONS:
    --config <path>    run configuration file (flat key = value document)
    --preset <name>    built-in experiment preset
    --out <dir>        output directory (default: ./out)
    --workers <n>      worker threads, 0 = all cores (overrides the config)
    --seed <u64>       base seed (overrides the config)
    --scale <factor>   desk-scale divisor for samples and reference
                       resolution (power of two)
    --list-presets     print the available preset names and exit
    --help             print this help

The output directory receives manifest.txt (a re-parsable echo of the fully
resolved configuration) plus one or more CSV tables, depending on the
experiment.";

struct Args {
    config: Option<PathBuf>,
    preset: Option<String>,
    out: PathBuf,
    workers: Option<usize>,
    seed: Option<u64>,
    scale: u64,
}

fn parse_args() -> Result<Option<Args>, String> {
    let mut args = Args {
        config: None,
        preset: None,
        out: PathBuf::from("out"),
        workers: None,
        seed: None,
        scale: 1,
    };
    let mut iter = std::env::args().skip(1);
    while let Some(flag) = iter.next() {
        let mut value = |name: &str| {
            iter.next()
                .ok_or_else(|| format!("{name} expects a value"))
        };
        match flag.as_str() {
            "--config" => args.config = Some(PathBuf::from(value("--config")?)),
            "--preset" => args.preset = Some(value("--preset")?),
            "--out" => args.out = PathBuf::from(value("--out")?),
            "--workers" => {
                args.workers = Some(
                    value("--workers")?
                        .parse()
                        .map_err(|_| "--workers expects an integer".to_string())?,
                )
            }
            "--seed" => {
                args.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "--seed expects an unsigned integer".to_string())?,
                )
            }
            "--scale" => {
                args.scale = value("--scale")?
                    .parse()
                    .map_err(|_| "--scale expects an unsigned integer".to_string())?
            }
            "--list-presets" => {
                for name in cli::PRESET_NAMES {
                    println!("{name}");
                }
                return Ok(None);
            }
            "--help" | "-h" => {
                println!("{USAGE}");
                return Ok(None);
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    if args.config.is_some() == args.preset.is_some() {
        return Err("exactly one of --config or --preset is required".into());
    }
    Ok(Some(args))
}

fn load_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), None) => cli::parse_config(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => cli::preset(name)?,
        _ => unreachable!("argument parsing enforces exactly one source"),
    };
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.apply_scale(args.scale)?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(Some(args)) => args,
        Ok(None) => return ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}\n\n{USAGE}");
            return ExitCode::FAILURE;
        }
    };
    let config = match load_config(&args) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match cli::run(&config, &args.out) {
        Ok(files) => {
            for file in files {
                println!("{}", args.out.join(file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
