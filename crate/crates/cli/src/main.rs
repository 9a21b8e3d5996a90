//! `qsslab`: certify nonce sets, synthesize attack plans, simulate rounds and
//! merge the resulting reports.
//!
//! Exit codes: 0 success, 1 certification failure, 2 invalid input, 3
//! internal error.

mod manifest;
mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qsslab::adversary::{
    symmetric_bell_state, synthesize_plan, synthesize_plan_with_alpha, AttackPlan, Honest,
    IfrStrategy, ImrGuess, NonceGuess, Policy,
};
use qsslab::analysis::{certify, share_tables};
use qsslab::linalg::{StateVector, C64};
use qsslab::nonces::{NonceSet, Secret};
use qsslab::protocol::{
    outcome_distribution, simulate, AdversaryStrategy, DetectionEstimate, RoundConfig,
};
use qsslab::Error;
use serde::Serialize;

use manifest::RunManifest;
use report::{Artifact, CertificationArtifact, SimulationSummary, VerdictCounts, VerdictFractions};

#[derive(Debug)]
pub enum Failure {
    Certification(String),
    Validation(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Certification(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Certification(m) | Failure::Validation(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Uncertified { .. } => Failure::Certification(msg),
            Error::Parse(_)
            | Error::InvalidNonce { .. }
            | Error::InvalidSecret(_)
            | Error::UnknownNonceSet(_)
            | Error::EmptyNonceSet
            | Error::NotNormalized(_)
            | Error::NonFinite
            | Error::InvalidBloch(_)
            | Error::PlanIncomplete { .. }
            | Error::PlanMismatch(_)
            | Error::Precondition(_) => Failure::Validation(msg),
            Error::Dimension { .. }
            | Error::UnsupportedDimension(_)
            | Error::InvalidDensity(_)
            | Error::NotUnitary(_)
            | Error::UnsupportedFidelity
            | Error::Protocol(_) => Failure::Internal(msg),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qsslab", author, version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check recoverability, secrecy and IMR protection of a nonce set.
    Certify {
        /// `builtin:hsu-I`, `builtin:proposed-J` or a nonce-set JSON file.
        #[arg(long)]
        nonces: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize an intercept-forge-replace plan.
    Attack {
        #[arg(long)]
        nonces: String,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        /// `hao` for the symmetric Bell state, or a JSON array of four
        /// `[re, im]` amplitudes. Defaults to the optimal fake state.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run rounds against an adversary, or compute the exact outcome law.
    Simulate {
        #[arg(long)]
        nonces: String,
        /// `honest`, `imr-guess`, `imr-guess:J` (1-based) or `ifr:PLAN.json`.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 10_000)]
        rounds: u64,
        #[arg(long, env = "QSSLAB_SEED", default_value_t = 0)]
        seed: u64,
        /// Probability that a round is a SECRET round.
        #[arg(long, default_value_t = 0.5)]
        mode_prior: f64,
        /// Fix the dealer's bit instead of drawing it per round.
        #[arg(long)]
        secret_bit: Option<u8>,
        /// Skip sampling and report the exact distribution.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one JSON transcript per round here.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Merge report files into one JSON table and a CSV beside it.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolicyArg {
    TargetSecret,
    #[value(name = "target-01")]
    Target01,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::TargetSecret => Policy::TargetSecret,
            PolicyArg::Target01 => Policy::Target01,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Certify { nonces, tol, out } => cmd_certify(&nonces, tol, out.as_deref()),
        Command::Attack {
            nonces,
            policy,
            alpha,
            out,
        } => cmd_attack(&nonces, policy.into(), alpha.as_deref(), &out),
        Command::Simulate {
            nonces,
            strategy,
            rounds,
            seed,
            mode_prior,
            secret_bit,
            exact,
            out,
            transcripts,
        } => cmd_simulate(SimulateArgs {
            nonces,
            strategy,
            rounds,
            seed,
            mode_prior,
            secret_bit,
            exact,
            out,
            transcripts,
        }),
        Command::Report { inputs, out } => cmd_report(&inputs, &out),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_nonces(source: &str) -> Result<NonceSet, Failure> {
    match source.strip_prefix("builtin:") {
        Some(name) => Ok(NonceSet::by_name(name)?),
        None => {
            let text = read_file(Path::new(source))?;
            NonceSet::from_json(&text).map_err(|e| Failure::from(e).with_context(source))
        }
    }
}

impl Failure {
    fn with_context(self, what: &str) -> Self {
        match self {
            Failure::Certification(m) => Failure::Certification(format!("{what}: {m}")),
            Failure::Validation(m) => Failure::Validation(format!("{what}: {m}")),
            Failure::Internal(m) => Failure::Internal(format!("{what}: {m}")),
        }
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Internal(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))
}

fn cmd_certify(source: &str, tol: f64, out: Option<&Path>) -> Result<u8, Failure> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::Validation(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    let nonces = load_nonces(source)?;
    let report = certify(&nonces, tol)?;
    print!("{report}");
    println!();
    print!("{}", share_tables(&nonces)?);
    let failures = report.failures();
    let passed = report.passed();
    if let Some(path) = out {
        let artifact = Artifact::Certification(CertificationArtifact {
            manifest: RunManifest::new(source, 0, 0, 0.5)?,
            report,
        });
        write_json(path, &artifact)?;
    }
    if passed {
        Ok(0)
    } else {
        eprintln!("certification failed: {}", failures.join(", "));
        Ok(1)
    }
}

fn parse_alpha(raw: &str) -> Result<StateVector, Failure> {
    if raw == "hao" {
        return Ok(symmetric_bell_state());
    }
    let amps: Vec<[f64; 2]> = serde_json::from_str(raw).map_err(|e| {
        Failure::Validation(format!("--alpha: expected `hao` or [[re, im] x 4]: {e}"))
    })?;
    if amps.len() != 4 {
        return Err(Failure::Validation(format!(
            "--alpha: expected 4 amplitudes, found {}",
            amps.len()
        )));
    }
    let amps = amps.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    StateVector::normalize(amps).map_err(|e| Failure::Validation(format!("--alpha: {e}")))
}

fn cmd_attack(
    source: &str,
    policy: Policy,
    alpha: Option<&str>,
    out: &Path,
) -> Result<u8, Failure> {
    let nonces = load_nonces(source)?;
    let plan = match alpha {
        None => synthesize_plan(&nonces, policy)?,
        Some(raw) => synthesize_plan_with_alpha(&nonces, policy, parse_alpha(raw)?)?,
    };
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..nonces.len() {
        for s in Secret::ALL {
            let overlap = plan.entry_overlap(&nonces, i, s)?;
            let target = plan
                .policy
                .target(i, s)
                .expect("built-in policies are total");
            println!(
                "nonce {} secret {s} target {target} overlap {overlap:.9}",
                i + 1
            );
            total += overlap;
            n += 1;
        }
    }
    println!("average overlap {:.9}", total / n as f64);

    let mut value = plan.to_json_value();
    let manifest = RunManifest::new(source, 0, 0, 0.5)?;
    value["manifest"] = serde_json::to_value(&manifest)
        .map_err(|e| Failure::Internal(format!("serializing manifest: {e}")))?;
    write_json(out, &value)?;
    Ok(0)
}

fn load_plan(path: &str) -> Result<AttackPlan, Failure> {
    let text = read_file(Path::new(path))?;
    AttackPlan::from_json(&text).map_err(|e| Failure::from(e).with_context(path))
}

fn build_strategy(name: &str, nonces: &NonceSet) -> Result<Box<dyn AdversaryStrategy>, Failure> {
    if name == "honest" {
        return Ok(Box::new(Honest));
    }
    if name == "imr-guess" {
        return Ok(Box::new(ImrGuess::new(
            nonces.clone(),
            NonceGuess::Uniform,
        )?));
    }
    if let Some(j) = name.strip_prefix("imr-guess:") {
        let j: usize = j.parse().map_err(|_| {
            Failure::Validation(format!("strategy `{name}`: `{j}` is not a nonce index"))
        })?;
        if j == 0 || j > nonces.len() {
            return Err(Failure::Validation(format!(
                "strategy `{name}`: nonce index must lie in 1..={}",
                nonces.len()
            )));
        }
        return Ok(Box::new(ImrGuess::new(
            nonces.clone(),
            NonceGuess::Fixed(j - 1),
        )?));
    }
    if let Some(path) = name.strip_prefix("ifr:") {
        let plan = load_plan(path)?;
        return Ok(Box::new(
            IfrStrategy::new(nonces, plan).map_err(|e| Failure::from(e).with_context(path))?,
        ));
    }
    Err(Failure::Validation(format!(
        "unknown strategy `{name}` (expected honest, imr-guess[:J] or ifr:PLAN)"
    )))
}

struct SimulateArgs {
    nonces: String,
    strategy: String,
    rounds: u64,
    seed: u64,
    mode_prior: f64,
    secret_bit: Option<u8>,
    exact: bool,
    out: Option<PathBuf>,
    transcripts: Option<PathBuf>,
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, Failure> {
    if let Some(bit) = a.secret_bit {
        if bit > 1 {
            return Err(Failure::Validation(format!(
                "--secret-bit must be 0 or 1, got {bit}"
            )));
        }
    }
    if a.exact && a.transcripts.is_some() {
        return Err(Failure::Validation(
            "--transcripts needs sampled rounds, not --exact".into(),
        ));
    }
    let nonces = load_nonces(&a.nonces)?;
    let strategy = build_strategy(&a.strategy, &nonces)?;
    let exact = outcome_distribution(&nonces, a.mode_prior, a.secret_bit, strategy.as_ref())?;

    let summary = if a.exact {
        SimulationSummary {
            manifest: RunManifest::new(&a.nonces, a.seed, 0, a.mode_prior)?,
            nonce_set: nonces.name().to_string(),
            strategy: a.strategy.clone(),
            method: "exact".into(),
            rounds: None,
            p_detect: exact.p_detect(),
            stderr: None,
            exact_p_detect: exact.p_detect(),
            p_eve_knows_secret: exact.p_eve_knows_secret,
            p_recovered: exact.p_recovered(),
            verdicts: VerdictFractions {
                retired: exact.p_retired(),
                round_dropped: exact.p_dropped(),
                eavesdropper_detected: exact.p_detect(),
            },
            counts: None,
        }
    } else {
        let mut cfg = RoundConfig::new(nonces.clone(), a.seed).with_mode_prior(a.mode_prior);
        if let Some(bit) = a.secret_bit {
            cfg = cfg.with_secret_bit(bit);
        }
        if a.rounds == 0 {
            return Err(Failure::Validation("--rounds must be at least 1".into()));
        }
        let transcripts = simulate(&cfg, strategy.as_ref(), a.rounds)?;
        if let Some(path) = &a.transcripts {
            write_transcripts(path, &transcripts)?;
        }
        let est = DetectionEstimate::from_transcripts(&transcripts);
        let n = est.rounds as f64;
        SimulationSummary {
            manifest: RunManifest::new(&a.nonces, a.seed, a.rounds, a.mode_prior)?,
            nonce_set: nonces.name().to_string(),
            strategy: a.strategy.clone(),
            method: "monte-carlo".into(),
            rounds: Some(est.rounds),
            p_detect: est.p_detect,
            stderr: Some(est.stderr),
            exact_p_detect: exact.p_detect(),
            p_eve_knows_secret: est.eve_knows_secret as f64 / n,
            p_recovered: est.recovered as f64 / n,
            verdicts: VerdictFractions {
                retired: est.retired as f64 / n,
                round_dropped: est.dropped as f64 / n,
                eavesdropper_detected: est.detected as f64 / n,
            },
            counts: Some(VerdictCounts {
                retired: est.retired,
                round_dropped: est.dropped,
                eavesdropper_detected: est.detected,
            }),
        }
    };

    println!("nonce set       {}", summary.nonce_set);
    println!("strategy        {}", summary.strategy);
    match (summary.rounds, summary.stderr) {
        (Some(r), Some(se)) => {
            println!("rounds          {r}");
            println!("p_detect        {:.6} +/- {se:.6}", summary.p_detect);
        }
        _ => println!("p_detect        {:.9}", summary.p_detect),
    }
    println!("exact p_detect  {:.9}", summary.exact_p_detect);
    println!("p_eve_knows     {:.9}", summary.p_eve_knows_secret);
    println!("p_recovered     {:.9}", summary.p_recovered);
    if let Some(path) = &a.out {
        write_json(path, &Artifact::Simulation(summary))?;
    }
    Ok(0)
}

fn write_transcripts<T: Serialize>(path: &Path, transcripts: &[T]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Internal(format!("writing {}: {e}", path.display()));
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    for t in transcripts {
        serde_json::to_writer(&mut w, t)
            .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<u8, Failure> {
    let table = report::merge(inputs)?;
    write_json(out, &table)?;
    let csv_path = out.with_extension("csv");
    report::write_csv(&csv_path, &table)?;
    println!(
        "{} row(s) from {} input(s) -> {} and {}",
        table.rows.len(),
        inputs.len(),
        out.display(),
        csv_path.display()
    );
    Ok(0)
}
