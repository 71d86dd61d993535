//! Command-line front end: batch scenario execution and analysis.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 physics precondition
//! violation (e.g. flip requested on a pair with absolute order).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lightcone::config::{load_config, resolve, Overrides, ResolvedScenario};
use lightcone::error::Error;
use lightcone::run;
use lightcone::spacetime::IntervalClass;

#[derive(Parser)]
#[command(
    name = "lightcone",
    version,
    about = "Deterministic exchange-network simulator: consolidated best-price \
             series under interchangeable simultaneity conventions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write arrival logs, per-convention NBBO series, and
    /// a checksum manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Only evaluate conventions of this kind.
        #[arg(long)]
        convention: Option<String>,
    },
    /// Classify a scenario event pair and construct the order-flipping frame.
    Flip {
        #[arg(long)]
        config: PathBuf,
        event_a: String,
        event_b: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emit the latency-budget table and timescale chart data for the
    /// scenario's network.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect latency-arbitrage races and summarize them.
    Races {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    convention: Option<String>,
) -> Result<ResolvedScenario, Error> {
    let parsed = load_config(config)?;
    let base = config.parent().unwrap_or_else(|| std::path::Path::new("."));
    Ok(resolve(parsed, base, &Overrides { seed, out_dir: out, convention })?)
}

fn exit_code_for(err: &Error) -> ExitCode {
    if err.is_physics_violation() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { config, out, seed, convention } => {
            let scenario = load(&config, out, seed, convention)?;
            let manifest = run::simulate_to_dir(&scenario)?;
            println!("wrote {} output files to {}", manifest.outputs.len(), scenario.out_dir.display());
            println!("config sha256: {}", manifest.config_sha256);
            for (name, sha) in &manifest.outputs {
                println!("  {name}  {sha}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Flip { config, event_a, event_b, seed } => {
            if event_a == event_b {
                eprintln!("error: flip requires two distinct event ids");
                return Ok(ExitCode::from(2));
            }
            let scenario = load(&config, None, seed, None)?;
            let report = run::flip_pair(&scenario, &event_a, &event_b)?;
            println!("pair: {} / {}", report.event_a, report.event_b);
            println!("interval s² = {} km² -> {}", report.interval_squared_km2, report.class);
            println!("lab-frame order: {}", report.lab_ordering);
            match (&report.boost_velocity_km_per_us, report.boost_beta, report.flipped_ordering) {
                (Some(v), Some(beta), Some(order)) => {
                    println!(
                        "flip boost: v = ({}, {}, {}) km/µs  (|v| = {beta:.4} c)",
                        v[0], v[1], v[2]
                    );
                    println!("boosted-frame order: {order}");
                    Ok(ExitCode::SUCCESS)
                }
                _ => {
                    match report.class {
                        IntervalClass::Timelike => println!(
                            "no flip frame exists: |Δt| > d/c, the order is absolute \
                             in every inertial frame"
                        ),
                        _ => println!(
                            "no flip frame exists: the pair sits on the light cone \
                             within tolerance"
                        ),
                    }
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Report { config, out } => {
            let scenario = load(&config, out, None, None)?;
            let report = run::report_to_dir(&scenario)?;
            println!("pair,distance_km,light_time_us,fiber_time_us");
            for row in &report.links {
                println!(
                    "{},{:.0},{:.0},{:.0}",
                    row.pair, row.distance_km, row.light_time_us, row.fiber_time_us
                );
            }
            println!(
                "feeds: direct {} µs, consolidated {} µs (ratio {:.1}:1)",
                report.direct_feed_us,
                report.sip_feed_us,
                report.sip_feed_us / report.direct_feed_us
            );
            println!("tables written to {}", scenario.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Races { config, out, seed } => {
            let scenario = load(&config, out, seed, None)?;
            let (races, summary) = run::races_to_dir(&scenario)?;
            let feeds = scenario.feeds.as_ref().expect("races_to_dir validated feeds");
            println!("races detected: {}", summary.race_count);
            println!("race window: {} µs", feeds.window_us());
            println!("feed ratio: {:.1}:1", feeds.feed_ratio());
            println!(
                "races/min/security: {:.3}  fast-win fraction: {:.3}  total profit: {} tick·shares",
                summary.races_per_minute_per_security,
                summary.fast_win_fraction,
                summary.total_profit_ticks
            );
            if let Some(first) = races.first() {
                println!(
                    "first race: {} priced through {} ({} ticks·shares)",
                    first.trigger.event.id, first.stale_quote.event.id, first.profit_ticks
                );
            }
            println!("race tables written to {}", scenario.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
