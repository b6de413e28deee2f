//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::correlation::{correlation_from_state, random_strategy};
use crate::error::{validation, Error, Result};
use crate::games::{named_game, sandwich_report, BellCertificate, Game, SandwichConfig, CORPUS};
use crate::io::{correlation_from_json, correlation_to_json, effects_from_json, effects_to_json, game_from_json, round_sig, to_json};
use crate::npa::npa_membership;
use crate::povm::normalize_to_povm;
use crate::strategies::local_membership;

#[derive(Debug, Parser)]
#[command(name = "qcorr", version, about = "Bounds and membership tests for bipartite quantum correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical, see-saw and NPA values of a game.
    Value,
    /// Local and NPA membership of a correlation.
    Membership,
    /// Repairs an almost-POVM.
    PovmNormalize {
        #[arg(long)]
        eps: f64,
    },
    /// Correlation of a random state and random POVMs.
    GenCorr {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Sandwich reports for the named games.
    Corpus,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 1)]
    pub level: usize,
    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Named game from the corpus.
    #[arg(long, global = true)]
    pub game: Option<String>,
}

impl RunConfig {
    fn sandwich(&self) -> SandwichConfig {
        SandwichConfig { dim: self.dim, level: self.level, seed: self.seed, restarts: self.restarts, tol: self.tol }
    }

    fn read_input(&self) -> Result<String> {
        let path = self.input.as_ref().ok_or_else(|| validation("--in <file> is required"))?;
        fs::read_to_string(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))
    }

    fn load_game(&self) -> Result<Game> {
        match (&self.game, &self.input) {
            (Some(name), None) => named_game(name)
                .ok_or_else(|| validation(format!("unknown game {name:?}; known: {}", CORPUS.join(", ")))),
            (None, Some(_)) => game_from_json(&self.read_input()?),
            _ => Err(validation("give exactly one of --game <name> or --in <file>")),
        }
    }
}

/// Exit status: 0 success, 1 membership separated, 2 input or contract
/// error, 3 solver failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let cfg = &cli.config;
    if !(cfg.tol > 0.0) {
        return Err(validation("--tol must be positive"));
    }
    match &cli.command {
        Command::Value => value(cfg, stdout).map(|_| 0),
        Command::Membership => membership(cfg, stdout),
        Command::PovmNormalize { eps } => {
            let effects = effects_from_json(&cfg.read_input()?)?;
            let povm = normalize_to_povm(&effects, *eps)?;
            emit(cfg.out.as_deref(), &effects_to_json(povm.effects()), stdout)?;
            Ok(0)
        }
        Command::GenCorr { k, n } => {
            if cfg.dim == 0 || *k == 0 || *n == 0 {
                return Err(validation("--dim, --k and --n must be positive"));
            }
            let (s, alice, bob) = random_strategy(cfg.dim, *k, *n, cfg.seed);
            let p = correlation_from_state(&s, &alice, &bob)?;
            emit(cfg.out.as_deref(), &correlation_to_json(&p), stdout)?;
            Ok(0)
        }
        Command::Corpus => corpus(cfg, stdout).map(|_| 0),
    }
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| validation(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| validation(format!("cannot write output: {e}"))),
    }
}

/// Same number format as the JSON output.
fn fmt(x: f64) -> String {
    serde_json::to_string(&round_sig(x)).expect("finite floats serialize")
}

fn csv_line(fields: &[String]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(fields).map_err(|e| validation(e.to_string()))?;
    String::from_utf8(w.into_inner().map_err(|e| validation(e.to_string()))?).map_err(|e| validation(e.to_string()))
}

#[derive(Serialize)]
struct ValueRecord {
    classical: f64,
    seesaw: f64,
    npa: f64,
    gap: f64,
}

/// JSON goes to `--out` (with the CSV line beside it, extension `.csv`) or,
/// without `--out`, both go to stdout.
fn value(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let g = cfg.load_game()?;
    let r = sandwich_report(&g, &cfg.sandwich())?;
    let rec = ValueRecord { classical: round_sig(r.classical), seesaw: round_sig(r.seesaw), npa: round_sig(r.npa), gap: round_sig(r.gap) };
    let json = to_json(&rec);
    let csv = csv_line(&[fmt(r.classical), fmt(r.seesaw), fmt(r.npa), fmt(r.gap)])?;
    match &cfg.out {
        Some(p) => {
            emit(Some(p), &json, stdout)?;
            emit(Some(&p.with_extension("csv")), &csv, stdout)
        }
        None => emit(None, &(json + &csv), stdout),
    }
}

#[derive(Serialize)]
struct CertificateRecord {
    source: &'static str,
    value: f64,
    bound: f64,
    functional: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CertificateRecord {
    fn new(source: &'static str, c: &BellCertificate) -> Self {
        let f = &c.functional;
        let functional = (0..f.k)
            .map(|x| {
                (0..f.k)
                    .map(|y| (0..f.n).map(|a| (0..f.n).map(|b| round_sig(f.coeff(x, y, a, b))).collect()).collect())
                    .collect()
            })
            .collect();
        Self { source, value: round_sig(c.value), bound: round_sig(c.bound), functional }
    }
}

#[derive(Serialize)]
struct MembershipRecord {
    /// `null` when the local polytope is too large to enumerate.
    local: Option<bool>,
    npa_feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateRecord>,
}

fn membership(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    let p = correlation_from_json(&cfg.read_input()?)?;
    let local = match local_membership(&p, cfg.tol) {
        Ok(m) => Some(m),
        Err(Error::Resource(_)) => None,
        Err(e) => return Err(e),
    };
    let npa = npa_membership(&p, cfg.level, cfg.tol)?;
    let certificate = match (&npa.certificate, local.as_ref().and_then(|m| m.certificate.as_ref())) {
        (Some(c), _) => Some(CertificateRecord::new("npa", c)),
        (None, Some(c)) => Some(CertificateRecord::new("local", c)),
        (None, None) => None,
    };
    let rec = MembershipRecord { local: local.map(|m| m.member), npa_feasible: npa.feasible, certificate };
    emit(cfg.out.as_deref(), &to_json(&rec), stdout)?;
    Ok(if npa.feasible { 0 } else { 1 })
}

fn corpus(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let names: Vec<&str> = match &cfg.game {
        Some(name) => vec![name.as_str()],
        None => CORPUS.to_vec(),
    };
    let mut out = csv_line(&["game", "classical", "seesaw", "npa", "gap"].map(String::from))?;
    for name in names {
        let g = named_game(name).ok_or_else(|| validation(format!("unknown game {name:?}")))?;
        let r = sandwich_report(&g, &cfg.sandwich())?;
        out += &csv_line(&[name.to_string(), fmt(r.classical), fmt(r.seesaw), fmt(r.npa), fmt(r.gap)])?;
    }
    emit(cfg.out.as_deref(), &out, stdout)
}
