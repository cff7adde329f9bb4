//! `ebi` command line.
//!
//! Exit codes: 0 pass, 1 I/O failure, 2 invalid input, 3 structural
//! failure, 4 inequivalent self-test.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::elegant::{bloch_csv, bloch_export, build_family, reference_experiment, FamilySpec};
use crate::error::{EbiError, Result};
use crate::optimizer::{seesaw_sweep, SeesawConfig, DEFAULT_RETRIES};
use crate::scenario::Scenario;
use crate::selftest::{self, Verdict};
use crate::structure::{self, DEFAULT_TOL};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_STRUCTURE: u8 = 3;
pub const EXIT_INEQUIVALENT: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ebi", version, about = "Elegant Bell inequality toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the two-qubit reference strategy.
    Reference {
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a family member from a spec JSON file.
    Family {
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check maximality and extract the block structure.
    Verify {
        scenario: PathBuf,
        /// Report path (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Run the SWAP-isometry self-test.
    Selftest {
        scenario: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = selftest::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Seesaw optimization over random starts.
    Seesaw {
        #[arg(long = "dA", default_value_t = 2)]
        da: usize,
        #[arg(long = "dB", default_value_t = 2)]
        db: usize,
        /// Number of runs.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        /// Fresh seeds tried for a run stuck below the bound.
        #[arg(long, default_value_t = DEFAULT_RETRIES)]
        retries: usize,
        #[arg(long, default_value = "seesaw-out")]
        out_dir: PathBuf,
    },
    /// Export Bloch vectors of all outcome eigenstates as CSV.
    Bloch {
        scenario: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Maps an error to its exit code.
pub fn exit_code(e: &EbiError) -> u8 {
    match e {
        EbiError::Io(_) => EXIT_IO,
        EbiError::NotMaximal { .. }
        | EbiError::UnequalEigenspaceSplit { .. }
        | EbiError::NonYBlock { .. }
        | EbiError::TransposeMismatch { .. }
        | EbiError::CheckFailed { .. }
        | EbiError::NotInvolution(_) => EXIT_STRUCTURE,
        _ => EXIT_INPUT,
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&fs::read_to_string(path)?)
}

fn fail(e: &EbiError) -> u8 {
    eprintln!("error: {} ({e})", e.name());
    exit_code(e)
}

fn error_report(e: &EbiError) -> String {
    let v = serde_json::json!({ "error": e.name(), "message": e.to_string(), "passed": false });
    format!(
        "{}\n",
        serde_json::to_string_pretty(&v).expect("json value")
    )
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Reference { out } => cmd_reference(out.as_deref()),
        Command::Family { spec, out } => cmd_family(&spec, out.as_deref()),
        Command::Verify {
            scenario,
            report,
            tol,
        } => cmd_verify(&scenario, report.as_deref(), tol),
        Command::Selftest {
            scenario,
            report,
            threshold,
        } => cmd_selftest(&scenario, report.as_deref(), threshold),
        Command::Seesaw {
            da,
            db,
            seeds,
            seed,
            max_iters,
            retries,
            out_dir,
        } => {
            let mut cfg = SeesawConfig::new(da, db, seed);
            cfg.max_iters = max_iters;
            cmd_seesaw(&cfg, seeds, retries, &out_dir)
        }
        Command::Bloch { scenario, out } => cmd_bloch(&scenario, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

pub fn cmd_reference(out: Option<&Path>) -> Result<u8> {
    emit(out, &reference_experiment().to_json()?)?;
    Ok(EXIT_OK)
}

pub fn cmd_family(spec_path: &Path, out: Option<&Path>) -> Result<u8> {
    let spec = FamilySpec::from_json(&fs::read_to_string(spec_path)?)?;
    let (s, _) = build_family(&spec)?;
    emit(out, &s.to_json()?)?;
    let c = selftest::correlator_prediction(&spec);
    eprintln!("ebi_value {:.9}", s.ebi_value());
    eprintln!(
        "correlator_prediction {:.9} {:+.9}i",
        c.re + 0.0,
        c.im + 0.0
    );
    Ok(EXIT_OK)
}

pub fn cmd_verify(path: &Path, report: Option<&Path>, tol: f64) -> Result<u8> {
    let s = load_scenario(path)?;
    let (rep, _) = structure::verify_scenario(&s, tol);
    emit(report, &rep.to_json()?)?;
    match (&rep.spec, &rep.error) {
        (Some(spec), _) => {
            for b in &spec.blocks {
                eprintln!("block lambda {:.7} n {} r {}", b.lambda, b.n, b.r);
            }
            Ok(EXIT_OK)
        }
        (None, err) => {
            eprintln!(
                "verification failed: {}",
                err.as_deref().unwrap_or("unknown")
            );
            Ok(EXIT_STRUCTURE)
        }
    }
}

pub fn cmd_selftest(path: &Path, report: Option<&Path>, threshold: f64) -> Result<u8> {
    let s = load_scenario(path)?;
    match selftest::run_selftest(&s, threshold, DEFAULT_TOL) {
        Ok(rep) => {
            emit(report, &rep.to_json()?)?;
            eprintln!(
                "verdict {:?} residual {:.3e} correlator {:.9} {:+.9}i",
                rep.verdict,
                rep.product_residual,
                rep.correlator[0] + 0.0,
                rep.correlator[1] + 0.0
            );
            if let Some(j) = &rep.junk_split {
                eprintln!(
                    "|chi1|^2 {:.9} |chi2|^2 {:.9}",
                    j.chi1_norm_sq, j.chi2_norm_sq
                );
            }
            Ok(match rep.verdict {
                Verdict::Equivalent => EXIT_OK,
                Verdict::Inequivalent => EXIT_INEQUIVALENT,
            })
        }
        Err(e) => {
            emit(report, &error_report(&e))?;
            Ok(fail(&e))
        }
    }
}

pub fn cmd_seesaw(cfg: &SeesawConfig, seeds: u64, retries: usize, out_dir: &Path) -> Result<u8> {
    if cfg.da < 2 || cfg.db < 2 {
        return Err(EbiError::UnsupportedDimension(format!(
            "seesaw needs dA, dB >= 2, got {}x{}",
            cfg.da, cfg.db
        )));
    }
    fs::create_dir_all(out_dir)?;
    let slots = seesaw_sweep(cfg, seeds, retries);
    let mut tried = 0;
    for slot in &slots {
        for a in &slot.attempts {
            tried += 1;
            fs::write(
                out_dir.join(format!("trace_seed{}.csv", a.seed)),
                a.trace_csv(),
            )?;
        }
    }
    let successes = slots.iter().filter(|s| s.result().is_success()).count();
    let best = slots.iter().map(|s| s.result()).fold(
        None,
        |acc: Option<&crate::optimizer::SeesawResult>, r| match acc {
            Some(b) if b.value >= r.value => Some(b),
            _ => Some(r),
        },
    );
    if let Some(b) = best {
        fs::write(out_dir.join("best.json"), b.scenario.to_json()?)?;
        let summary = format!(
            "runs {seeds} seeds_tried {tried} successes {successes} best_value {:.16e} best_seed {}\n",
            b.value, b.seed
        );
        fs::write(out_dir.join("summary.txt"), &summary)?;
        print!("{summary}");
    }
    Ok(EXIT_OK)
}

pub fn cmd_bloch(path: &Path, out: Option<&Path>) -> Result<u8> {
    let s = load_scenario(path)?;
    let points = bloch_export(&s)?;
    emit(out, &bloch_csv(&points))?;
    Ok(EXIT_OK)
}
