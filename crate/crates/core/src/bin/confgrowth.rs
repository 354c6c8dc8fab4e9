use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use confgrowth::report::{cmd_analyze, cmd_certify, cmd_insert, cmd_verify, to_canonical_json, Outcome, RunConfig};
use confgrowth::{Error, Result};

/// Growth of Schreier coset graphs of free groups
#[derive(Parser)]
#[command(name = "confgrowth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ball counts, growth estimates, Poincare sums and negligible-growth ratios
    Analyze(Flags),
    /// Confinement check and growth-gap certificate
    Certify(Flags),
    /// Build and verify the coset inflation map for a representative g
    Insert(Flags),
    /// Check the inequalities between the three growth rates
    Verify(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,

    /// trivial | abelian:W | free-product:O | cyclic:N:W | file:PATH
    #[arg(long)]
    backend: Option<String>,

    #[arg(long)]
    rank: Option<u32>,

    #[arg(long)]
    radius: Option<usize>,

    /// Confining set, e.g. --p b or --p aa,bbb
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<String>>,

    /// Coset representative as a word literal
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,

    #[arg(long)]
    piece_len: Option<usize>,

    #[arg(long, value_delimiter = ',')]
    f_candidates: Option<Vec<String>>,

    /// Exponents for Poincare sums and the count factor
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s: Option<Vec<f64>>,

    #[arg(long)]
    tol: Option<f64>,

    /// Vertex / state budget
    #[arg(long)]
    budget: Option<usize>,

    /// Seed for sampled injectivity checks
    #[arg(long)]
    seed: Option<u64>,

    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also report rates in bits
    #[arg(long)]
    log2: bool,

    /// Longest closed walk counted for w_H
    #[arg(long)]
    max_len: Option<usize>,

    /// Largest m verified exhaustively
    #[arg(long)]
    max_bits: Option<usize>,

    /// Verify injectivity on random pairs instead of all 2^m images
    #[arg(long)]
    sampled: bool,

    #[arg(long)]
    pairs: Option<usize>,
}

impl Flags {
    fn config(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let top = RunConfig {
            backend: self.backend.clone(),
            rank: self.rank,
            radius: self.radius,
            p: self.p.clone(),
            g: self.g.clone(),
            piece_len: self.piece_len,
            f_candidates: self.f_candidates.clone(),
            s: self.s.clone(),
            tol: self.tol,
            budget: self.budget,
            seed: self.seed,
            out: self.out.clone(),
            log2: self.log2.then_some(true),
            max_len: self.max_len,
            max_bits: self.max_bits,
            sampled: self.sampled.then_some(true),
            pairs: self.pairs,
        };
        Ok(base.overridden_by(top))
    }
}

fn run(cli: Cli) -> Result<i32> {
    let (flags, command): (&Flags, fn(&_) -> Result<Outcome>) = match &cli.command {
        Command::Analyze(f) => (f, cmd_analyze),
        Command::Certify(f) => (f, cmd_certify),
        Command::Insert(f) => (f, cmd_insert),
        Command::Verify(f) => (f, cmd_verify),
    };
    let config = flags.config()?;
    let resolved = config.resolve()?;
    let outcome = command(&resolved)?;
    let text = to_canonical_json(&outcome.report)?;
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if outcome.status == 2 {
        let verdict = outcome
            .report
            .get("verdict")
            .and_then(|v| v.as_str())
            .unwrap_or("hypothesis not met");
        eprintln!("confgrowth: {verdict}");
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status as u8),
        Err(err) => {
            eprintln!("confgrowth: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
