use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use essmin::driver::{self, GreenSelector, RunConfig};
use essmin::lowerbound::Rigor;
use essmin::measures::Measure;
use essmin::upperbound::{check_admissible, eval_witness};
use essmin::verify::{run_suite, Suite};
use essmin::{Error, Result};

#[derive(Parser)]
#[command(name = "essmin", version, about = "Two-sided bounds on essential minima of heights from Green functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum RigorArg {
    Certified,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Properties,
    Golden,
}

#[derive(Subcommand)]
enum Cmd {
    /// Alternate lower and upper improvement until the gap is below eps.
    Bound {
        /// Builtin name or path to a composite spec JSON file.
        #[arg(long)]
        green: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        budget_lp: Option<usize>,
        #[arg(long)]
        budget_witness: Option<usize>,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        budget_wall: Option<f64>,
        #[arg(long, value_enum)]
        rigor: Option<RigorArg>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint; budgets and eps given here override it.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate a Green function against a measure.
    Eval {
        #[arg(long)]
        green: String,
        /// Measure JSON file.
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run built-in self-checks.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Bound {
            green,
            eps,
            budget_lp,
            budget_witness,
            budget_wall,
            rigor,
            out,
            resume,
            seed,
        } => {
            let selector = GreenSelector::parse_arg(&green)?;
            let fresh = RunConfig::new(selector);
            let mut ledger = match &resume {
                Some(path) => driver::resume_for(path, &fresh)?,
                None => driver::BoundsLedger::new(fresh)?,
            };
            let cfg = &mut ledger.config;
            if let Some(v) = eps {
                cfg.eps = v;
            }
            if let Some(v) = budget_lp {
                cfg.budget_lp = v;
            }
            if let Some(v) = budget_witness {
                cfg.budget_witness = v;
            }
            if let Some(v) = budget_wall {
                cfg.budget_wall_s = v;
            }
            if let Some(r) = rigor {
                if resume.is_some() && ledger.state.iteration > 0 {
                    return Err(Error::ConfigInvalid("rigor cannot change on resume".into()));
                }
                cfg.rigor = match r {
                    RigorArg::Certified => Rigor::Certified,
                    RigorArg::Heuristic => Rigor::Heuristic,
                };
            }
            if out.is_some() {
                cfg.out = out;
            }
            if let Some(s) = seed {
                cfg.seed = s;
                ledger.seed = s;
            }
            let outcome = driver::run_from(ledger)?;
            println!("{}", driver::report_json(&outcome.ledger, outcome.halt));
            Ok(outcome.halt.exit_code() as u8)
        }
        Cmd::Eval { green, measure, tol } => {
            let g = GreenSelector::parse_arg(&green)?.resolve()?;
            let text = std::fs::read_to_string(&measure)?;
            let m: Measure = serde_json::from_str(&text)?;
            let admissible = check_admissible(&m).is_ok();
            let (value, err) = if admissible {
                let w = eval_witness(&g, &m, tol)?;
                (w.value, w.err)
            } else {
                let q = m.integrate(&|z| g.eval(z), tol)?;
                (q.value, q.error)
            };
            let v = serde_json::json!({
                "green": g.name(),
                "measure": m,
                "value": value,
                "err": err,
                // only admissible measures give upper bounds on the essential minimum
                "upper_bound": admissible,
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(0)
        }
        Cmd::Verify { suite, seed } => {
            let suite = match suite {
                SuiteArg::Properties => Suite::Properties,
                SuiteArg::Golden => Suite::Golden,
            };
            let checks = run_suite(suite, seed);
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}
