use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cps_ofdm::metrics::MetricReport;
use cps_ofdm::optimizer::write_trace_csv;
use cps_ofdm::scenario::{
    closed_form_report, invariant_suite, optimize_target, papr_report, resolve_users, run_resolved, transmit, ScenarioConfig,
};
use cps_ofdm::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "cpsofdm", version, about = "CPS-OFDM waveform toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize the target user's shaping vector; writes shaping.json and trace.csv.
    Optimize(Common),
    /// Full scenario run; writes the run artifact directory.
    Simulate(Common),
    /// Closed-form PSD of every user.
    Psd(Common),
    /// PAPR CCDF of every user.
    Papr(Common),
    /// BER and spectral efficiency of the target user.
    Ber(Common),
    /// Runs the invariant self-checks and, with --config, validates the config.
    Validate(Common),
}

fn load(c: &Common) -> Result<ScenarioConfig> {
    let path = c.config.as_deref().ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let mut sc = ScenarioConfig::load(path)?;
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn user_dir(out: &Path, name: &str) -> Result<PathBuf> {
    let d = out.join("users").join(name);
    std::fs::create_dir_all(&d)?;
    Ok(d)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Optimize(c) => {
            let sc = load(&c)?;
            let (_, outcome) = optimize_target(&sc)?;
            std::fs::create_dir_all(&c.out)?;
            outcome.shaping.save(&c.out.join("shaping.json"))?;
            write_trace_csv(&outcome.trace, std::fs::File::create(c.out.join("trace.csv"))?)?;
            println!(
                "U_min {:.6e}  bound {:.6e}  iterations {}",
                outcome.u_min,
                outcome.osbep_bound,
                outcome.trace.len()
            );
        }
        Command::Simulate(c) => {
            let sc = load(&c)?;
            let users = resolve_users(&sc)?;
            let art = run_resolved(&sc, &users)?;
            art.write_dir(&c.out)?;
            println!("{}", art.hash()?);
        }
        Command::Ber(c) => {
            let sc = load(&c)?;
            let art = run_resolved(&sc, &resolve_users(&sc)?)?;
            std::fs::create_dir_all(&c.out)?;
            art.write_ber_csv(std::fs::File::create(c.out.join("ber.csv"))?)?;
            for p in &art.points {
                println!("{:>6.2} dB  BER {:.4e}  SE {:.4}", p.ebn0_db, p.ber, p.spectral_efficiency);
            }
        }
        Command::Psd(c) => {
            let sc = load(&c)?;
            let qam = sc.constellation()?;
            for u in resolve_users(&sc)? {
                let r = closed_form_report(&sc, &u, &qam)?;
                r.write_psd_csv(std::fs::File::create(user_dir(&c.out, &u.name)?.join("psd.csv"))?)?;
                println!("{}  OSBEP {:.4e}", u.name, r.osbep.unwrap_or(f64::NAN));
            }
        }
        Command::Papr(c) => {
            let sc = load(&c)?;
            let qam = sc.constellation()?;
            for (i, u) in resolve_users(&sc)?.iter().enumerate() {
                let tx = transmit(&sc, u, i, sc.blocks * u.block_ratio, &qam)?;
                let r = MetricReport { papr_ccdf: papr_report(&sc, u, &tx)?, ..Default::default() };
                r.write_ccdf_csv(std::fs::File::create(user_dir(&c.out, &u.name)?.join("ccdf.csv"))?)?;
            }
        }
        Command::Validate(c) => {
            if c.config.is_some() {
                let sc = load(&c)?;
                println!("config ok: {} users, case {:?}", sc.users.len(), sc.case);
            }
            let checks = invariant_suite(c.seed.unwrap_or(0));
            for ch in &checks {
                println!("[{}] {}  ({})", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::Numeric { iterations: 0, reason: format!("{failed} invariant checks failed") });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Optimize(c) | Command::Simulate(c) | Command::Psd(c) | Command::Papr(c) | Command::Ber(c) | Command::Validate(c) => c.threads,
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
