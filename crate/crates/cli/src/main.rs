use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use padic_ergodic::analysis::{analyze, AnalysisOptions, Report};
use padic_ergodic::constructor::{generate, Profile, RandomSpec};
use padic_ergodic::criteria::Witness;
use padic_ergodic::document::SpecDocument;
use padic_ergodic::stream::{clear_for_streaming, state_period, Keystream};
use padic_ergodic::{compile, FunctionSpec, PrimeConfig};

#[derive(Parser)]
#[command(
    name = "padic-ergodic",
    version,
    about = "Coefficient criteria and cycle checks for 1-Lipschitz p-adic maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a spec document against every applicable criterion and the oracle.
    Check {
        path: PathBuf,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Check an integer polynomial given by its coefficients.
    Poly {
        /// Comma-separated decimal coefficients a_0,a_1,...; a_0 must be 1.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        coeffs: Vec<String>,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long)]
        precision: Option<u32>,
        #[command(flatten)]
        out: OutputFlags,
    },
    /// Write a seeded random spec document.
    Gen {
        #[arg(long, value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the low byte of each state of x <- f(x) mod 2^N.
    Stream {
        path: PathBuf,
        /// Number of bytes to emit.
        #[arg(long, default_value_t = 1024)]
        count: u64,
        /// Initial state.
        #[arg(long, default_value_t = 0)]
        state: u64,
        /// Stream even if the map is not transitive.
        #[arg(long)]
        force: bool,
    },
    /// Check every *.json spec document in a directory.
    Sweep {
        dir: PathBuf,
        #[arg(long)]
        max_level: Option<u32>,
    },
}

#[derive(Args)]
struct OutputFlags {
    /// Check levels 1..=max-level only.
    #[arg(long)]
    max_level: Option<u32>,
    /// Emit the spec document with a `report` object instead of text.
    #[arg(long)]
    json: bool,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Profile::ALL.iter().map(|p| p.name()).collect();
        format!(
            "unknown profile {s:?}; expected one of {}",
            names.join(", ")
        )
    })
}

fn default_precision(p: u32) -> u32 {
    if p == 2 {
        10
    } else {
        6
    }
}

fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

fn options(max_level: Option<u32>) -> AnalysisOptions {
    AnalysisOptions {
        max_level,
        ..Default::default()
    }
}

fn load(path: &Path) -> Result<(SpecDocument, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = SpecDocument::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((doc, digest(text.as_bytes())))
}

/// Prints the report and returns whether it is clean.
fn emit(doc: SpecDocument, report: &Report, input_digest: &str, json: bool) -> Result<bool> {
    if json {
        let mut value = serde_json::to_value(report)?;
        value["input_digest"] = input_digest.into();
        let out = SpecDocument {
            report: Some(value),
            ..doc
        };
        print!("{}", out.to_json());
    } else {
        print!("{}", render(report, input_digest));
    }
    Ok(report.disagreements() == 0)
}

fn render(r: &Report, input_digest: &str) -> String {
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("input     {input_digest}"));
    line(format!(
        "spec      {} p={} N={}, checked to level {}",
        r.kind, r.p, r.precision, r.level
    ));
    if let Some(w) = &r.lipschitz_violation {
        line(format!("lipschitz violated: {w}"));
    }
    line("criteria".into());
    for v in &r.verdicts {
        let status = if v.passed { "PASS" } else { "FAIL" };
        let detail = match v.first_failure() {
            Some(c) => match &c.witness {
                Some(Witness::Index { m, value }) => {
                    format!("  first failure {} at m = {m} (value {value})", c.label)
                }
                Some(Witness::Level { n, value }) => {
                    format!("  first failure {} at level {n} (value {value})", c.label)
                }
                None => format!("  first failure {}", c.label),
            },
            None => String::new(),
        };
        line(format!("  {status} {}{detail}", v.criterion));
    }
    for sk in &r.skipped {
        line(format!("  SKIP {}  {}", sk.check, sk.reason));
    }
    match r.oracle.first_failure {
        None => line(format!(
            "oracle    single cycle at every level 1..={}",
            r.oracle.max_level
        )),
        Some(n) => {
            let reason = r
                .oracle
                .level(n)
                .and_then(|l| l.reason.clone())
                .unwrap_or_default();
            line(format!(
                "oracle    level {n} is not a single cycle: {reason}"
            ));
        }
    }
    match r.first_non_permutation {
        None => line(format!(
            "          permutation at every level 1..={}",
            r.level
        )),
        Some(n) => line(format!("          not a permutation at level {n}")),
    }
    if !r.agreement.is_empty() {
        line(format!(
            "agreement levels 1..={}  (= agree, X disagree, . n/a)",
            r.level
        ));
        let width = r
            .agreement
            .iter()
            .map(|a| a.criterion.len())
            .max()
            .unwrap_or(0);
        for a in &r.agreement {
            let cells: String = a.cells.iter().map(|c| c.symbol()).collect();
            line(format!("  {:width$}  {cells}", a.criterion));
        }
    }
    let n = r.disagreements();
    line(if n == 0 {
        "status    ok".into()
    } else {
        format!("status    {n} disagreement(s)")
    });
    s
}

fn cmd_check(path: &Path, out: &OutputFlags) -> Result<bool> {
    let (doc, input_digest) = load(path)?;
    let report = analyze(&doc.spec, &options(out.max_level))?;
    emit(doc, &report, &input_digest, out.json)
}

fn cmd_poly(coeffs: &[String], p: u32, precision: Option<u32>, out: &OutputFlags) -> Result<bool> {
    let coeffs = coeffs
        .iter()
        .map(|c| {
            c.trim()
                .parse::<BigInt>()
                .with_context(|| format!("coefficient {c:?} is not a decimal integer"))
        })
        .collect::<Result<Vec<_>>>()?;
    if coeffs.first() != Some(&BigInt::from(1)) {
        bail!("a_0 must be 1");
    }
    let cfg = PrimeConfig::new(p, precision.unwrap_or(default_precision(p)))?;
    let spec = FunctionSpec::polynomial(cfg, coeffs);
    let text = padic_ergodic::document::serialize(&spec);
    let report = analyze(&spec, &options(out.max_level))?;
    emit(
        SpecDocument::new(spec),
        &report,
        &digest(text.as_bytes()),
        out.json,
    )
}

fn cmd_gen(
    profile: Profile,
    p: u32,
    precision: Option<u32>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = PrimeConfig::new(p, precision.unwrap_or(default_precision(p)))?;
    if cfg.ring().is_err() || cfg.pow(cfg.precision()).is_none_or(|len| len > 1 << 24) {
        bail!("p^N = {p}^{} is too large to generate", cfg.precision());
    }
    let text = generate(&RandomSpec { seed, cfg, profile }).to_json();
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_stream(path: &Path, count: u64, state: u64, force: bool) -> Result<()> {
    let (doc, _) = load(path)?;
    let n = doc.spec.cfg().precision();
    let table = compile(&doc.spec, n)?;
    let clearance = clear_for_streaming(&table, force)
        .context("refusing to stream (use --force to override)")?;
    let stream = Keystream::new(&table, state)?;
    let mut err = io::stderr().lock();
    match state_period(&table, state) {
        Some(period) => writeln!(err, "period {period} (state space 2^{n})")?,
        None => writeln!(err, "state {state} is not on a cycle")?,
    }
    if clearance.forced {
        writeln!(
            err,
            "warning: map is not transitive modulo 2^{n}; streaming because of --force"
        )?;
    }
    let bytes: Vec<u8> = stream.take(count as usize).collect();
    let mut stdout = io::stdout().lock();
    stdout.write_all(&bytes)?;
    stdout.flush()?;
    Ok(())
}

fn cmd_sweep(dir: &Path, max_level: Option<u32>) -> Result<bool> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut clean = true;
    println!(
        "{:<32} {:>3} {:>3} {:<12} {:>6} {:>6} {:>6}  status",
        "file", "p", "N", "kind", "mp", "erg", "disagr"
    );
    for path in &paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let row = load(path).and_then(|(doc, _)| Ok(analyze(&doc.spec, &options(max_level))?));
        match row {
            Ok(r) => {
                let mp = match r.first_non_permutation {
                    None => "yes".to_string(),
                    Some(n) => format!("no@{n}"),
                };
                let erg = match r.oracle.first_failure {
                    None => "yes".to_string(),
                    Some(n) => format!("no@{n}"),
                };
                let d = r.disagreements();
                clean &= d == 0;
                let status = if d == 0 { "ok" } else { "DISAGREE" };
                println!(
                    "{name:<32} {:>3} {:>3} {:<12} {mp:>6} {erg:>6} {d:>6}  {status}",
                    r.p, r.level, r.kind
                );
            }
            Err(e) => {
                clean = false;
                println!("{name:<32} error: {e:#}");
            }
        }
    }
    println!(
        "{} file(s), {}",
        paths.len(),
        if clean { "all ok" } else { "problems found" }
    );
    Ok(clean)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Check { path, out } => cmd_check(&path, &out),
        Command::Poly {
            coeffs,
            p,
            precision,
            out,
        } => cmd_poly(&coeffs, p, precision, &out),
        Command::Gen {
            profile,
            p,
            precision,
            seed,
            out,
        } => cmd_gen(profile, p, precision, seed, out.as_deref()).map(|_| true),
        Command::Stream {
            path,
            count,
            state,
            force,
        } => cmd_stream(&path, count, state, force).map(|_| true),
        Command::Sweep { dir, max_level } => cmd_sweep(&dir, max_level),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
