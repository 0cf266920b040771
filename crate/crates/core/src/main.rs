use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bscgame::allocator::{allocate, Announcements, TrueChannels, UserIndex};
use bscgame::bsc::CrossoverProb;
use bscgame::error::{Error, Result};
use bscgame::scenario::{Scenario, DEFAULT_EPSILON, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_SIZE};
use bscgame::strategy::{best_response, equilibrium_check, utility_sweep};
use bscgame::verify::run_all;

#[derive(Parser)]
#[command(name = "bscgame", about = "Strategic rate allocation on a two-user binary symmetric broadcast channel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the proportional-fair time-sharing coefficient for a report pair.
    Beta {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// Solve the allocation for reported parameters and print it as JSON.
    Allocate {
        /// Reported crossover probability of user 1.
        #[arg(long)]
        p1: f64,
        /// Reported crossover probability of user 2.
        #[arg(long)]
        p2: f64,
        /// True parameter of user 1 (defaults to the report).
        #[arg(long)]
        true_p1: Option<f64>,
        /// True parameter of user 2 (defaults to the report).
        #[arg(long)]
        true_p2: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sweep user 2's report against a fixed opponent report and emit CSV.
    Sweep {
        /// User 1's fixed (truthful) report.
        #[arg(long)]
        theta: f64,
        /// User 2's true crossover probability.
        #[arg(long)]
        true_p2: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_MIN)]
        grid_min: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_MAX)]
        grid_max: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print a user's epsilon-shifted best response to a fixed opponent report.
    BestResponse {
        /// The opponent's report.
        #[arg(long)]
        theta: f64,
        /// The responding user's true crossover probability.
        #[arg(long)]
        true_p: f64,
        /// Which user responds (1 or 2).
        #[arg(long, default_value_t = 2)]
        user: u8,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the unilateral-deviation scan on the profile (theta, theta + epsilon).
    Equilibrium {
        #[arg(long)]
        theta: f64,
        /// User 2's true crossover probability.
        #[arg(long)]
        true_p2: f64,
        /// User 1's true crossover probability (defaults to theta).
        #[arg(long)]
        true_p1: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Deviations scanned per side of each report.
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Evaluate the side-information model from a scenario file as JSON.
    SideInfo {
        /// TOML scenario file with a [side_info] section.
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the property-check suites; nonzero exit if any fails.
    Verify {
        /// Smaller sample counts for a fast pass.
        #[arg(long)]
        quick: bool,
    },
}

fn fmt12(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Round every number in a JSON tree to 12 significant digits so emitted
/// documents are stable under re-parsing.
fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.as_i64().is_none() && n.as_u64().is_none() => {
                let rounded: f64 = fmt12(x).parse().unwrap();
                Value::Number(serde_json::Number::from_f64(rounded).unwrap())
            }
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

fn emit(out: &OutArg, text: String) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(out: &OutArg, value: &T) -> Result<()> {
    let tree = round_json(
        serde_json::to_value(value).map_err(|e| Error::Parse(format!("serialization: {e}")))?,
    );
    let mut text = serde_json::to_string_pretty(&tree)
        .map_err(|e| Error::Parse(format!("serialization: {e}")))?;
    text.push('\n');
    emit(out, text)
}

fn crossover(name: &str, v: f64) -> Result<CrossoverProb> {
    CrossoverProb::new(v)
        .map_err(|_| Error::Validation(format!("--{name} = {v}: crossover out of (0, 0.5)")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Beta { p1, p2 } => {
            let reports = Announcements {
                p1: crossover("p1", p1)?,
                p2: crossover("p2", p2)?,
            };
            let truths = TrueChannels { p1: reports.p1, p2: reports.p2 };
            let result = allocate(reports, truths)?;
            println!("{}", fmt12(result.beta_opt.value()));
            Ok(())
        }
        Command::Allocate { p1, p2, true_p1, true_p2, out } => {
            let reports = Announcements {
                p1: crossover("p1", p1)?,
                p2: crossover("p2", p2)?,
            };
            let truths = TrueChannels {
                p1: crossover("true-p1", true_p1.unwrap_or(p1))?,
                p2: crossover("true-p2", true_p2.unwrap_or(p2))?,
            };
            emit_json(&out, &allocate(reports, truths)?)
        }
        Command::Sweep { theta, true_p2, grid, grid_min, grid_max, out } => {
            let theta = crossover("theta", theta)?;
            let truths = TrueChannels { p1: theta, p2: crossover("true-p2", true_p2)? };
            let sweep = utility_sweep(theta, truths, grid, grid_min, grid_max)?;
            let mut csv = String::from("p2_report,beta_opt,rate1_realized,rate2_realized\n");
            for s in &sweep.samples {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt12(s.p2_report),
                    fmt12(s.beta_opt),
                    fmt12(s.realized_r1),
                    fmt12(s.realized_r2)
                ));
            }
            emit(&out, csv)
        }
        Command::BestResponse { theta, true_p, user, epsilon, out } => {
            let user = UserIndex::try_from(user)
                .map_err(|_| Error::Validation(format!("--user must be 1 or 2")))?;
            let response = best_response(
                crossover("theta", theta)?,
                crossover("true-p", true_p)?,
                user,
                epsilon,
            )?;
            emit_json(&out, &response)
        }
        Command::Equilibrium { theta, true_p2, true_p1, epsilon, steps, out } => {
            let theta_p = crossover("theta", theta)?;
            let truths = TrueChannels {
                p1: crossover("true-p1", true_p1.unwrap_or(theta))?,
                p2: crossover("true-p2", true_p2)?,
            };
            emit_json(&out, &equilibrium_check(theta_p, truths, epsilon, steps)?)
        }
        Command::SideInfo { scenario, out } => {
            let text = fs::read_to_string(&scenario)?;
            let parsed = Scenario::from_toml(&text)?;
            let config = parsed.side_info.ok_or_else(|| {
                Error::Validation("scenario file has no [side_info] section".into())
            })?;
            emit_json(&out, &config.model.info_case_ordering(&config.candidates)?)
        }
        Command::Verify { quick } => {
            let outcomes = run_all(quick);
            let mut failed = 0usize;
            for c in &outcomes {
                println!(
                    "{} {} — {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                if !c.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::Validation(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
