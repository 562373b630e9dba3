use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetsim::config::{parse_config, Preset, Scheme, KEYS, RUN_KEYS};
use hetsim::engine::{run_experiment, write_outputs};
use hetsim::Error;

#[derive(Parser)]
#[command(
    name = "hetsim",
    version,
    about = "Two-tier heterogeneous network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset under one scheme.
    Run(RunArgs),
    /// List presets, schemes or configuration keys.
    List {
        what: ListWhat,
        /// Restrict `schemes` to one preset.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Run the green_sweep preset (default scheme `sweep`).
    Sweep(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ListWhat {
    Presets,
    Schemes,
    Keys,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// `key = value` file; see `hetsim list keys`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    /// Output directory (default `hetsim-out/<preset>_<scheme>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run drops one after another on the calling thread.
    #[arg(long)]
    serial: bool,
}

fn list(what: ListWhat, preset: Option<String>) -> Result<(), Error> {
    match what {
        ListWhat::Presets => {
            for p in Preset::ALL {
                println!("{:<16} {}", p.name(), p.description());
            }
        }
        ListWhat::Schemes => {
            let presets = match preset {
                Some(p) => vec![Preset::parse(&p)?],
                None => Preset::ALL.to_vec(),
            };
            for p in presets {
                for s in p.schemes() {
                    println!("{:<16} {:<12} {}", p.name(), s.name(), s.description());
                }
            }
        }
        ListWhat::Keys => {
            for (k, kind, doc) in RUN_KEYS {
                println!("{k:<36} {kind:<28} {doc}");
            }
            for d in KEYS {
                println!("{:<36} {:<28} {}", d.key, d.kind, d.doc);
            }
        }
    }
    Ok(())
}

fn run(args: RunArgs, sweep: bool) -> Result<(), Error> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    if sweep
        && args
            .preset
            .as_deref()
            .is_some_and(|p| p != Preset::GreenSweep.name())
    {
        return Err(Error::Config {
            key: "preset".into(),
            line: 0,
            message: "`sweep` runs the green_sweep preset".into(),
        });
    }
    // `sweep` supplies its preset and scheme when neither flags nor file name them.
    let mut preset = args.preset.clone();
    let mut scheme = args.scheme.clone();
    let mut cfg = loop {
        match parse_config(&text, preset.as_deref(), scheme.as_deref()) {
            Err(Error::Config { key, .. }) if sweep && key == "preset" && preset.is_none() => {
                preset = Some(Preset::GreenSweep.name().into());
            }
            Err(Error::Config { key, .. }) if sweep && key == "scheme" && scheme.is_none() => {
                scheme = Some(Scheme::Sweep.name().into());
            }
            other => break other?,
        }
    };
    if sweep && cfg.preset != Preset::GreenSweep {
        return Err(Error::Config {
            key: "preset".into(),
            line: 0,
            message: "`sweep` runs the green_sweep preset".into(),
        });
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = args.drops {
        if d == 0 {
            return Err(Error::Config {
                key: "run.drops".into(),
                line: 0,
                message: "must be >= 1".into(),
            });
        }
        cfg.drops = d;
    }
    if args.slots.is_some() {
        cfg.slots = args.slots;
    }
    cfg.parallel = !args.serial;
    let out = args.out.clone().unwrap_or_else(|| {
        PathBuf::from("hetsim-out").join(format!("{}_{}", cfg.preset.name(), cfg.scheme.name()))
    });
    cfg.out_dir = Some(out.clone());
    let report = run_experiment(&cfg)?;
    for d in &report.skipped_drops {
        eprintln!("drop {d} skipped: layout placement infeasible");
    }
    write_outputs(&cfg, &report, &out)?;
    println!(
        "{} / {}: {} drops completed, {} skipped, outputs in {}",
        cfg.preset.name(),
        cfg.scheme.name(),
        report.completed_drops,
        report.skipped_drops.len(),
        out.display()
    );
    for r in &report.summary {
        println!(
            "  {:<28} {:>14.6} +- {:.6} (n={})",
            r.metric, r.mean, r.std_err, r.n
        );
    }
    for r in &report.sweep {
        println!(
            "  density {:>8} load {:>5}: se {:.4} ee {:.1} ce {:.4}",
            r.density, r.load, r.se, r.ee, r.ce
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List { what, preset } => list(what, preset),
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                ref e if e.is_config() => 2,
                Error::PlacementInfeasible { .. } => 3,
                _ => 1,
            })
        }
    }
}
