use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use combopt::action_sets::build_action_set;
use combopt::harness::{self, EtaSetting, PlayerSpec, SweepConfig, OUT_DIR_ENV};
use combopt::oracles::verify;
use combopt::osmd::{regret_bound, tuned_eta, BoundFamily};
use combopt::{Adversary, FeedbackMode, PotentialSpec, Result, SetDescriptor};

#[derive(Parser)]
#[command(name = "combopt", version, about = "Online combinatorial optimization experiments")]
struct Cli {
    /// Directory for CSV outputs.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game and write its trace CSV.
    Run(RunArgs),
    /// Run a JSON-configured grid and write per-cell and summary CSVs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print tuned learning rates and regret bounds for both potentials.
    Bound {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Exponent of the power potential.
        #[arg(long, default_value_t = 2.0)]
        q: f64,
    },
    /// Run the oracle checks; exits nonzero if any fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    set: SetDescriptor,
    #[arg(long, value_parser = ["exp2", "osmd"])]
    player: String,
    #[arg(long, default_value = "auto")]
    eta: EtaSetting,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value = "full")]
    feedback: FeedbackMode,
    #[arg(long, default_value = "negentropy")]
    legendre: PotentialSpec,
    #[arg(long)]
    adversary: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn out_dir(cli: &Option<PathBuf>) -> PathBuf {
    cli.clone().unwrap_or_else(harness::default_output_dir)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(a) => {
            let set = build_action_set(&a.set)?;
            let adversary = Adversary::from_descriptor(&a.adversary, &set)?;
            let spec = match a.player.as_str() {
                "exp2" => PlayerSpec::exp2(a.eta, a.gamma, a.feedback),
                _ => PlayerSpec::osmd(a.legendre, a.eta, a.feedback),
            };
            let trace = harness::run_game(&spec, &adversary, &set, a.n, a.seed)?;
            let dir = out_dir(&cli.out_dir);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("trace_s{}.csv", a.seed));
            harness::write_traces(&path, "run", std::slice::from_ref(&trace))?;
            println!("player      {}", trace.player);
            println!("adversary   {}", trace.adversary);
            println!("eta         {}", trace.eta);
            println!("total loss  {}", trace.total_loss());
            println!("regret      {}", trace.final_regret());
            if let Some(b) = spec.bound(&set, a.n)? {
                println!("bound       {b}");
            }
            println!("trace       {}", path.display());
            Ok(true)
        }
        Command::Sweep { config } => {
            let mut cfg = SweepConfig::from_json_file(&config)?;
            if cli.out_dir.is_some() || cfg.output_dir.is_none() {
                cfg.output_dir = Some(out_dir(&cli.out_dir));
            }
            let cells = harness::sweep(&cfg)?;
            for c in &cells {
                let bound = c.report.bound.map(|b| format!(" bound {b:.4}")).unwrap_or_default();
                println!(
                    "{} {} vs {}: mean regret {:.4} (stderr {:.4}){bound}",
                    c.cell_id, c.player, c.adversary, c.report.mean, c.report.stderr
                );
            }
            println!("wrote {}", cfg.output_dir.unwrap().display());
            Ok(true)
        }
        Command::Bound { m, d, n, q } => {
            println!("family,q,eta,bound");
            for (family, label) in [(BoundFamily::Negentropy, "negentropy".to_string()), (BoundFamily::Power { q }, format!("inf:q={q}"))] {
                let q_col = if let BoundFamily::Power { q } = family { q.to_string() } else { String::new() };
                println!("{label},{q_col},{},{}", tuned_eta(family, m, d, n)?, regret_bound(family, m, d, n)?);
            }
            Ok(true)
        }
        Command::Verify { seed } => {
            let checks = verify::run_all(seed);
            let dir = out_dir(&cli.out_dir);
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("verify.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for c in &checks {
                w.serialize(c)?;
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            w.flush()?;
            println!("wrote {}", path.display());
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
