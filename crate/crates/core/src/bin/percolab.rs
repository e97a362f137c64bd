//! Command-line front end: estimates, single-sample detection, exact
//! enumeration and the verification checks.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use percolab::estimate::{self, EventScales, EventSpec, XiMethod};
use percolab::events::EtaLadder;
use percolab::harness::{self, Settings};
use percolab::oracle::{self, TrinaryWeights};
use percolab::{check_params, CoupledField, Error, Region};

#[derive(Parser)]
#[command(name = "percolab", version, about = "Coupled bond percolation on Z^2")]
struct Cli {
    /// Worker threads for sampling; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo frequency of an event, as JSON.
    Estimate(EstimateArgs),
    /// Estimates along a list of parameters, as JSON lines and optional CSV.
    Sweep(SweepArgs),
    /// Evaluates an event on one sample.
    Detect(DetectArgs),
    /// Exact probability by enumeration.
    Oracle(OracleArgs),
    /// Correlation length estimate.
    Xi(XiArgs),
    /// Runs one check, or `all`.
    Verify(VerifyArgs),
    /// Lists the checks.
    Checks,
}

#[derive(Args, Clone)]
struct EventArgs {
    /// crossing, delta, mixed-pivotal, switch, pivotal-switch, switch-count,
    /// one-arm, mixed-three-arm or bad-event.
    #[arg(long)]
    event: String,
    /// box:<n>, box:<n>@<x>,<y>, rect:<xmin>,<xmax>,<ymin>,<ymax>, H:<n>, V:<n>
    /// or cross:<N>.
    #[arg(long)]
    region: Region,
    /// Inner scale: switch scale for switch-count, inner box for one-arm,
    /// boundary box for mixed-three-arm.
    #[arg(long)]
    n: Option<i32>,
    /// Outer scale N for pivotal-switch.
    #[arg(long = "big-n")]
    big_n: Option<i32>,
    /// Inner radius for mixed-three-arm.
    #[arg(long)]
    r: Option<i32>,
    /// Ladder for bad-event, comma-separated.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    /// Accept ladders whose successive ratios are at most 100.
    #[arg(long)]
    allow_small_ratios: bool,
}

impl EventArgs {
    fn spec(&self) -> Result<EventSpec, Error> {
        let ladder = match &self.ladder {
            None => None,
            Some(v) if self.allow_small_ratios => Some(EtaLadder::relaxed(v.clone())?),
            Some(v) => Some(EtaLadder::new(v.clone())?),
        };
        let scales = EventScales { n: self.n, big_n: self.big_n, r: self.r, ladder };
        EventSpec::from_cli(&self.event, &self.region, &scales)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    event: EventArgs,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Defaults to p.
    #[arg(long = "p-prime")]
    p_prime: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    event: EventArgs,
    /// Values of p, comma-separated.
    #[arg(long = "p-values", value_delimiter = ',', required = true)]
    p_values: Vec<f64>,
    /// p' - p at every point.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Writes one CSV row per point.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    event: EventArgs,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long = "p-prime")]
    p_prime: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stream index of the sample.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Prints witness paths.
    #[arg(long)]
    witness: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    region: Region,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long = "p-prime")]
    p_prime: Option<f64>,
    /// crossing, one-arm or delta.
    #[arg(long, default_value = "crossing")]
    event: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum XiChoice {
    DualCrossing,
    ThetaDiff,
}

impl From<XiChoice> for XiMethod {
    fn from(c: XiChoice) -> Self {
        match c {
            XiChoice::DualCrossing => XiMethod::DualCrossing,
            XiChoice::ThetaDiff => XiMethod::ThetaDiff,
        }
    }
}

#[derive(Args)]
struct XiArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = (-1.0f64).exp())]
    threshold: f64,
    #[arg(long = "l-max", default_value_t = 128)]
    l_max: i32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long = "xi-method", value_enum, default_value = "dual-crossing")]
    xi_method: XiChoice,
}

#[derive(Args)]
struct VerifyArgs {
    /// A check name or `all`.
    check: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Multiplier on default sample counts.
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Same as --budget 0.1.
    #[arg(long)]
    quick: bool,
    #[arg(long = "xi-method", value_enum, default_value = "dual-crossing")]
    xi_method: XiChoice,
    /// Writes sweep data as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Writes the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn pair(p: f64, p_prime: Option<f64>) -> Result<(f64, f64), Error> {
    let q = p_prime.unwrap_or(p);
    check_params(p, q)?;
    Ok((p, q))
}

/// Writes a line to standard output, ignoring a closed pipe.
fn emit(s: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{s}");
}

fn print_json(v: &impl serde::Serialize) {
    emit(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Estimate(a) => {
            let spec = a.event.spec()?;
            let (p, q) = pair(a.p, a.p_prime)?;
            if let EventSpec::SwitchCount { n, big_n } = spec {
                print_json(&estimate::estimate_ex(p, n, big_n, a.samples, a.seed)?);
            } else {
                print_json(&estimate::mc_estimate(&spec, p, q, a.samples, a.seed)?);
            }
        }
        Command::Sweep(a) => {
            let spec = a.event.spec()?;
            let mut csv = String::from("event,p,p_prime,trials,successes,point,lo,hi\n");
            for &p in &a.p_values {
                let q = (p + a.gap).min(1.0);
                let e = estimate::mc_estimate(&spec, p, q, a.samples, a.seed)?;
                emit(&serde_json::to_string(&e).expect("serializable"));
                csv.push_str(&format!("{},{p},{q},{},{},{},{},{}\n", e.event, e.trials, e.successes, e.point, e.ci95[0], e.ci95[1]));
            }
            if let Some(path) = a.csv {
                std::fs::write(path, csv)?;
            }
        }
        Command::Detect(a) => {
            let spec = a.event.spec()?;
            let (p, q) = pair(a.p, a.p_prime)?;
            let f = CoupledField::new(a.seed, a.stream);
            let out = spec.outcome(&f.at(p), &f.at(q), a.witness)?;
            let mut v = json!({
                "event": spec.name(),
                "params": spec.params(),
                "p": p,
                "p_prime": q,
                "seed": a.seed,
                "stream": a.stream,
                "occurred": out.occurred,
            });
            if a.witness {
                v["witnesses"] = out.witnesses.iter().map(|w| w.to_json()).collect();
            }
            print_json(&v);
        }
        Command::Oracle(a) => {
            let (p, q) = pair(a.p, a.p_prime)?;
            let e = oracle::exact_event(&a.event, &a.region, &TrinaryWeights::new(p, q)?)?;
            print_json(&json!({
                "event": a.event,
                "exact_probability": e.value,
                "edges": e.edges,
                "states_visited": e.states_visited,
            }));
        }
        Command::Xi(a) => {
            print_json(&estimate::estimate_xi_with(a.xi_method.into(), a.p, a.threshold, a.l_max, a.samples, a.seed)?);
        }
        Command::Checks => {
            for c in harness::CHECKS {
                emit(&format!("{:<24} {}", c.name, c.about));
            }
        }
        Command::Verify(a) => {
            let settings = Settings {
                seed: a.seed,
                budget: if a.quick { 0.1 } else { a.budget },
                xi_method: a.xi_method.into(),
            };
            if !(settings.budget > 0.0) {
                return Err(Error::InvalidParameter("budget must be positive".into()));
            }
            let t = Instant::now();
            let progress = |r: &harness::CheckReport| eprintln!("{:<24} {:?} ({} ms)", r.check, r.verdict, r.runtime_ms);
            let (reports, rows) = if a.check == "all" {
                harness::verify_each(&settings, progress)
            } else {
                let (r, rows) = harness::run_check(harness::find_check(&a.check)?, &settings);
                progress(&r);
                (vec![r], rows)
            };
            let body = harness::reports_json(&reports);
            match &a.out {
                Some(path) => std::fs::write(path, &body)?,
                None => emit(&body),
            }
            if let Some(path) = a.csv {
                std::fs::write(path, harness::sweep_csv(&rows))?;
            }
            eprintln!("\n{}total {} ms", harness::summary_table(&reports), t.elapsed().as_millis());
            if harness::any_failed(&reports) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
