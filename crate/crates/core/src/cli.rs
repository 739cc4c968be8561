//! Command line front end: argument parsing, dispatch and JSON output.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::certs;
use crate::dsl;
use crate::engine::{Config, Engine, Status, Verdict, Witness};
use crate::homology::{self, GroupOrder, IntMatrix};
use crate::loopmodel;
use crate::seifert;
use crate::slopes::Slope;
use crate::tree::{BoundaryRef, GmTree};

/// Exit code for definite answers.
pub const EXIT_OK: i32 = 0;
/// Exit code for errors and rejected certificates.
pub const EXIT_ERROR: i32 = 1;
/// Exit code when the search bound was reached without a decision.
pub const EXIT_UNKNOWN: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lspace", version, about = "L-space decisions for graph manifolds")]
pub struct Cli {
    /// Search bound before answering UNKNOWN: probed slopes p/q have |p| and search-frame coordinates at most this.
    #[arg(long, global = true, default_value_t = 4096)]
    pub max_denominator: i64,
    /// Worker threads for the probe searches (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the JSON result to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a closed manifold is an L-space.
    Decide { file: PathBuf },
    /// Bracket the non-strict-L-space slopes at one boundary.
    Interval {
        file: PathBuf,
        /// Boundary as NAME.INDEX (1-based); a glued boundary is cut first.
        #[arg(long)]
        boundary: String,
    },
    /// Produce a non-L-space certificate.
    Certify { file: PathBuf },
    /// Recheck a certificate independently.
    Verify {
        file: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// First homology of a manifold.
    H1 { file: PathBuf },
    /// Loop-count bookkeeping: from a one-boundary manifold, a presentation, or a word.
    LoopCount {
        /// One-boundary manifold; its boundary curves play the roles of α and β.
        file: Option<PathBuf>,
        /// Loop word such as "c2 d1 e".
        #[arg(long)]
        word: Option<String>,
        /// Relation rows "a,b;c,d" (empty for a free group).
        #[arg(long, allow_hyphen_values = true)]
        relations: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
    },
}

/// Result of a command: JSON text and exit code.
pub struct Outcome {
    pub json: String,
    pub code: i32,
}

#[derive(Serialize)]
struct DecideReport {
    verdict: Status,
    taut_foliation: Option<bool>,
    left_orderable: Option<bool>,
    h1_order: GroupOrder,
}

fn read_tree(path: &Path) -> Result<GmTree, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    dsl::parse_manifold(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn boundary_sensitive(tree: &GmTree, verdict: &Verdict) -> bool {
    match verdict.witness() {
        Some(Witness::ClosedSeifert { boundary_sensitive, .. }) => *boundary_sensitive,
        _ if tree.pieces().len() == 1 && tree.is_closed() => {
            seifert::is_lspace_sfs(&tree.pieces()[0]).map(|d| d.boundary_sensitive).unwrap_or(false)
        }
        _ => false,
    }
}

fn decide(tree: &GmTree, config: Config, err: &mut dyn Write) -> Result<Outcome, String> {
    let verdict = Engine::new(config).decide_closed(tree).map_err(|e| e.to_string())?;
    if boundary_sensitive(tree, &verdict) {
        let _ = writeln!(err, "note: BOUNDARY_SENSITIVE: the verdict sits on the boundary of the realizability inequalities");
    }
    let status = verdict.status();
    let topological = match status {
        Status::Unknown => None,
        s => Some(s != Status::LSpace),
    };
    if let Verdict::Unknown { bound } = verdict {
        let _ = writeln!(err, "undecided at denominator bound {bound}; raise --max-denominator");
    }
    let report = DecideReport {
        verdict: status,
        taut_foliation: topological,
        left_orderable: topological,
        h1_order: homology::h1_invariants(tree).order,
    };
    Ok(Outcome { json: to_json(&report), code: if status == Status::Unknown { EXIT_UNKNOWN } else { EXIT_OK } })
}

/// The one-boundary tree whose open boundary is `spec` (`NAME.INDEX`).
pub fn boundary_tree(tree: &GmTree, spec: &str) -> Result<GmTree, String> {
    let (name, idx) = spec.rsplit_once('.').ok_or_else(|| format!("boundary `{spec}` is not NAME.INDEX"))?;
    let piece = tree.piece_index(name).ok_or_else(|| format!("unknown piece `{name}`"))?;
    let idx: usize = idx.parse().map_err(|_| format!("boundary `{spec}` is not NAME.INDEX"))?;
    if idx < 1 || idx > tree.pieces()[piece].boundaries {
        return Err(format!("piece `{name}` has no boundary {idx}"));
    }
    let b = BoundaryRef::new(piece, idx - 1);
    let Some(edge) = tree.edges().iter().find(|e| e.a == b || e.b == b) else {
        return Ok(tree.clone());
    };
    let cut = tree.cut_edge(&edge.id).map_err(|e| e.to_string())?;
    Ok(if edge.a == b { cut.side_a } else { cut.side_b })
}

fn parse_vector(text: &str) -> Result<Vec<i128>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<i128>().map_err(|_| format!("`{t}` is not an integer")))
        .collect()
}

fn loop_count(
    file: Option<&Path>,
    word: Option<&str>,
    relations: Option<&str>,
    alpha: Option<&str>,
    beta: Option<&str>,
) -> Result<Outcome, String> {
    if let Some(w) = word {
        let w = loopmodel::parse_loop_word(w).map_err(|e| e.to_string())?;
        let (black, white) = loopmodel::vertex_counts(&w);
        return Ok(Outcome { json: json!({"word": w.to_string(), "black": black, "white": white}).to_string(), code: EXIT_OK });
    }
    let (matrix, a, b) = if let Some(path) = file {
        let tree = read_tree(path)?;
        let open = tree.open_boundaries();
        if open.len() != 1 {
            return Err(format!("expected one open boundary, found {}", open.len()));
        }
        let pres = homology::h1_presentation(&tree);
        let a = pres.slope_class(open[0], Slope::INFINITY);
        let b = pres.slope_class(open[0], Slope::ZERO);
        (pres.matrix, a, b)
    } else {
        let (Some(alpha), Some(beta)) = (alpha, beta) else {
            return Err("loop-count needs FILE, --word, or --relations with --alpha and --beta".into());
        };
        let a = parse_vector(alpha)?;
        let b = parse_vector(beta)?;
        let mut m = IntMatrix::zeros(0, a.len());
        for row in relations.unwrap_or("").split(';').filter(|r| !r.trim().is_empty()) {
            let row = parse_vector(row)?;
            if row.len() != a.len() {
                return Err(format!("relation of length {} does not match {} generators", row.len(), a.len()));
            }
            m.push_row(&row);
        }
        (m, a, b)
    };
    let count = loopmodel::predicted_loop_count(&matrix, &a, &b).map_err(|e| e.to_string())?;
    Ok(Outcome { json: json!({"loops": count}).to_string(), code: EXIT_OK })
}

fn dispatch(cli: &Cli, err: &mut dyn Write) -> Result<Outcome, String> {
    let config = Config { max_denominator: cli.max_denominator, ..Config::default() };
    match &cli.command {
        Command::Decide { file } => decide(&read_tree(file)?, config, err),
        Command::Interval { file, boundary } => {
            let side = boundary_tree(&read_tree(file)?, boundary)?;
            let est = Engine::new(config).lspace_arc(&side).map_err(|e| e.to_string())?;
            Ok(Outcome { json: to_json(&est), code: if est.exact { EXIT_OK } else { EXIT_UNKNOWN } })
        }
        Command::Certify { file } => {
            let tree = read_tree(file)?;
            match Engine::new(config).certificate_search(&tree) {
                Ok(Some(cert)) => Ok(Outcome { json: certs::serialize_certificate(&cert), code: EXIT_OK }),
                Ok(None) => {
                    let _ = writeln!(err, "L_SPACE: no certificate exists");
                    Ok(Outcome { json: "null".into(), code: EXIT_OK })
                }
                Err(crate::engine::EngineError::Unknown(bound)) => {
                    let _ = writeln!(err, "undecided at denominator bound {bound}; raise --max-denominator");
                    Ok(Outcome { json: "null".into(), code: EXIT_UNKNOWN })
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Verify { file, cert } => {
            let tree = read_tree(file)?;
            let text = fs::read_to_string(cert).map_err(|e| format!("{}: {e}", cert.display()))?;
            let cert = certs::parse_certificate(&text).map_err(|e| e.to_string())?;
            let report = certs::verify_certificate(&tree, &cert, &config).map_err(|e| e.to_string())?;
            for m in &report.mismatches {
                let _ = writeln!(err, "mismatch: {m}");
            }
            Ok(Outcome {
                json: serde_json::to_string_pretty(&report).expect("serializable"),
                code: if report.accepted { EXIT_OK } else { EXIT_ERROR },
            })
        }
        Command::H1 { file } => {
            let h = homology::h1_invariants(&read_tree(file)?);
            let value = json!({"b1": h.b1, "torsion": h.torsion, "order": h.order, "group": h.to_string()});
            Ok(Outcome { json: value.to_string(), code: EXIT_OK })
        }
        Command::LoopCount { file, word, relations, alpha, beta } => loop_count(
            file.as_deref(),
            word.as_deref(),
            relations.as_deref(),
            alpha.as_deref(),
            beta.as_deref(),
        ),
    }
}

/// Runs the command line `args` (program name first), writing results to
/// `out` (or `--output`) and diagnostics to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let mut notes = Vec::new();
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(&cli, &mut notes)),
        Err(e) => Err(e.to_string()),
    };
    let _ = err.write_all(&notes);
    match result {
        Ok(outcome) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, format!("{}\n", outcome.json)).map_err(|e| format!("{}: {e}", path.display())),
                None => writeln!(out, "{}", outcome.json).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => outcome.code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_ERROR
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
