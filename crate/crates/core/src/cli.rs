//! Command-line interface.
//!
//! Every command reads and writes line-delimited JSON. Results go to
//! standard output (or `--out`), diagnostics to standard error. Exit status
//! is 0 on success, 1 when validation fails, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};

use crate::augment::{augment_corpus, find_eligible, AugmentConfig, DEFAULT_REVERSE_PROB};
use crate::canonical::{
    canonicalize_document, canonicalize_gold, classify, to_canonical, type_disagreements, type_histogram,
    ConstraintType,
};
use crate::corpus::{load_corpus, write_corpus, EntityLabel, GoldDecl, Problem};
use crate::embed::{EmbeddingTables, Matrix, Scalar, DEFAULT_LAMBDA};
use crate::ir::{parse_ir, print_ir, Document};
use crate::rational::{format_rational, Rational};
use crate::scorer::{read_predictions, score};

#[derive(Debug, Parser)]
#[command(name = "autoform", version, about = "Parse, order, convert, score and augment LP word-problem formulations")]
pub struct Cli {
    /// Write results to this file instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Human-readable output
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus, check every invariant, and cross-check annotated constraint types
    Validate { corpus: PathBuf },
    /// Parse IR text and print its canonical form
    Parse {
        /// IR document, e.g. "maximize 3x + 4y ; 3x + 4y <= 50"
        ir: Option<String>,
        /// Read one IR document per line from this file
        #[arg(long, conflicts_with = "ir")]
        file: Option<PathBuf>,
        /// Width of the canonical vectors (default: highest alias used)
        #[arg(long)]
        vars: Option<usize>,
    },
    /// Emit the ordered IR target of every corpus problem
    Canonicalize { corpus: PathBuf },
    /// Convert {id, ir} records into {id, canonical} records
    Convert {
        ir_file: PathBuf,
        /// Take vector widths from this corpus
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Declaration-level mapping accuracy of predictions against a gold corpus
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Append constraint-direction reversals of a corpus
    Augment {
        corpus: PathBuf,
        /// Probability of reversing each eligible constraint
        #[arg(long = "p", default_value_t = DEFAULT_REVERSE_PROB)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compose token, position and scaled tag embeddings
    EmbedCheck {
        /// Token table (matrix file: "rows cols" then row-major values)
        #[arg(long)]
        tok: PathBuf,
        /// Position table
        #[arg(long)]
        pos: PathBuf,
        /// Tag table; zero-initialized when omitted
        #[arg(long)]
        tag: Option<PathBuf>,
        /// Comma-separated token ids
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        tokens: Vec<usize>,
        /// Comma-separated tag ids or labels (O, VAR, PARAM, LIMIT, CONST_DIR, OBJ_DIR, OBJ_NAME)
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        tags: Vec<String>,
        /// Weight of the tag embedding
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Use exact rational arithmetic
        #[arg(long)]
        exact: bool,
    },
}

enum Failure {
    Usage(String),
    Invalid(String),
}

type CmdResult = Result<String, Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    2
                }
            };
        }
    };
    let result = dispatch(&cli, stderr).and_then(|output| match &cli.out {
        Some(path) => std::fs::write(path, output.as_bytes())
            .map(|_| String::new())
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => Ok(output),
    });
    match result {
        Ok(output) => {
            let _ = write!(stdout, "{output}");
            0
        }
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}\n");
            let _ = write!(stderr, "{}", Cli::command().render_usage());
            let _ = writeln!(stderr, "\n\nFor more information, try '--help'.");
            2
        }
    }
}

fn dispatch(cli: &Cli, stderr: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Validate { corpus } => validate(corpus, cli.pretty),
        Command::Parse { ir, file, vars } => parse(ir.as_deref(), file.as_deref(), *vars, cli.pretty),
        Command::Canonicalize { corpus } => canonicalize(corpus),
        Command::Convert { ir_file, gold } => convert(ir_file, gold.as_deref()),
        Command::Score { pred, gold } => run_score(pred, gold, cli.pretty, stderr),
        Command::Augment { corpus, p, seed } => augment(corpus, *p, *seed, stderr),
        Command::EmbedCheck { tok, pos, tag, tokens, tags, lambda, exact } => {
            let tags = tags.iter().map(|s| parse_tag(s)).collect::<Result<Vec<_>, _>>()?;
            let paths = (tok.as_path(), pos.as_path(), tag.as_deref());
            if *exact {
                embed_check::<Rational>(paths, tokens, &tags, &lambda.to_string(), cli.pretty)
            } else {
                embed_check::<f64>(paths, tokens, &tags, &lambda.to_string(), cli.pretty)
            }
        }
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("no such file: {}", path.display())))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    require_file(path)?;
    File::open(path).map(BufReader::new).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn corpus(path: &Path) -> Result<Vec<Problem>, Failure> {
    require_file(path)?;
    load_corpus(path).map_err(invalid)
}

fn lines(values: impl IntoIterator<Item = Value>) -> String {
    values.into_iter().map(|v| format!("{v}\n")).collect()
}

fn validate(path: &Path, pretty: bool) -> CmdResult {
    let problems = corpus(path)?;
    let mut types = Vec::new();
    let mut disagreements = Vec::new();
    let mut link_errors = Vec::new();
    for p in &problems {
        for gold in &p.gold {
            if let GoldDecl::Constraint { ctype, .. } = gold {
                let decl = gold.to_decl().map_err(invalid)?;
                types.push(classify(&decl, *ctype == Some(ConstraintType::Ratio)).map_err(invalid)?);
            }
        }
        disagreements.extend(type_disagreements(p));
        if let Err(e) = find_eligible(p) {
            link_errors.push(e.to_string());
        }
        canonicalize_gold(p).map_err(invalid)?;
    }
    let declarations: usize = problems.iter().map(|p| p.gold.len()).sum();
    let histogram: serde_json::Map<String, Value> =
        type_histogram(&types).into_iter().map(|(t, n)| (t.as_str().to_string(), json!(n))).collect();
    let ok = disagreements.is_empty() && link_errors.is_empty();
    let out = if pretty {
        let mut s = format!("{} problems, {declarations} declarations\n", problems.len());
        for (t, n) in &histogram {
            s.push_str(&format!("  {t:<10} {n}\n"));
        }
        for d in &disagreements {
            s.push_str(&format!(
                "type mismatch: {} declaration {}: annotated {}, classified {}\n",
                d.id,
                d.index,
                d.declared.as_str(),
                d.computed.as_str()
            ));
        }
        for e in &link_errors {
            s.push_str(&format!("link error: {e}\n"));
        }
        s
    } else {
        lines([json!({
            "problems": problems.len(),
            "declarations": declarations,
            "constraint_types": histogram,
            "type_disagreements": disagreements,
            "link_errors": link_errors,
        })])
    };
    if ok {
        Ok(out)
    } else {
        Err(Failure::Invalid(format!(
            "{out}corpus has {} type disagreements and {} link errors",
            disagreements.len(),
            link_errors.len()
        )))
    }
}

fn canonical_record(doc: &Document, vars: Option<usize>) -> Result<Value, Failure> {
    let sorted = canonicalize_document(doc).map_err(invalid)?;
    let cf = to_canonical(&sorted, vars.unwrap_or_else(|| sorted.var_count())).map_err(invalid)?;
    Ok(json!({ "ir": print_ir(&sorted), "canonical": cf }))
}

fn parse(ir: Option<&str>, file: Option<&Path>, vars: Option<usize>, pretty: bool) -> CmdResult {
    let sources: Vec<String> = match (ir, file) {
        (Some(s), None) => vec![s.to_string()],
        (None, Some(path)) => open(path)?
            .lines()
            .collect::<Result<Vec<_>, _>>()
            .map_err(invalid)?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect(),
        _ => return Err(Failure::Usage("give an IR string or --file".into())),
    };
    let mut out = String::new();
    for (i, src) in sources.iter().enumerate() {
        let doc = parse_ir(src).map_err(|e| Failure::Invalid(format!("input {}: {e}", i + 1)))?;
        let record = canonical_record(&doc, vars)?;
        if pretty {
            out.push_str(&serde_json::to_string_pretty(&record).expect("json"));
            out.push('\n');
        } else {
            out.push_str(&format!("{record}\n"));
        }
    }
    Ok(out)
}

fn canonicalize(path: &Path) -> CmdResult {
    let problems = corpus(path)?;
    let mut records = Vec::with_capacity(problems.len());
    for p in &problems {
        let doc = canonicalize_gold(p).map_err(invalid)?;
        records.push(json!({ "id": p.id, "ir": print_ir(&doc) }));
    }
    Ok(lines(records))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct IrRecord {
    id: String,
    ir: String,
}

fn convert(path: &Path, gold: Option<&Path>) -> CmdResult {
    let widths: std::collections::HashMap<String, usize> = match gold {
        Some(g) => corpus(g)?.into_iter().map(|p| (p.id, p.variables.len())).collect(),
        None => Default::default(),
    };
    let mut records = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(invalid)?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |e: &dyn std::fmt::Display| Failure::Invalid(format!("line {}: {e}", i + 1));
        let rec: IrRecord = serde_json::from_str(&line).map_err(|e| at(&e))?;
        let doc = parse_ir(&rec.ir).map_err(|e| at(&e))?;
        let sorted = canonicalize_document(&doc).map_err(|e| at(&e))?;
        let width = widths.get(&rec.id).copied().unwrap_or_else(|| sorted.var_count());
        let cf = to_canonical(&sorted, width).map_err(|e| at(&e))?;
        records.push(json!({ "id": rec.id, "canonical": cf }));
    }
    Ok(lines(records))
}

fn run_score(pred: &Path, gold: &Path, pretty: bool, stderr: &mut dyn Write) -> CmdResult {
    let golds = corpus(gold)?;
    let preds = read_predictions(open(pred)?).map_err(invalid)?;
    let report = score(&preds, &golds).map_err(invalid)?;
    for id in &report.unparsed {
        let _ = writeln!(stderr, "warning: prediction for {id} did not parse and was scored as empty");
    }
    Ok(if pretty { format!("{report}\n") } else { lines([report.to_json()]) })
}

fn augment(path: &Path, p: f64, seed: u64, stderr: &mut dyn Write) -> CmdResult {
    let config = AugmentConfig::new(p, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let problems = corpus(path)?;
    let out = augment_corpus(&problems, &config).map_err(invalid)?;
    let _ = writeln!(stderr, "{} problems, {} augmented variants", problems.len(), out.len() - problems.len());
    let mut buf = Vec::new();
    write_corpus(&mut buf, &out).map_err(invalid)?;
    Ok(String::from_utf8(buf).expect("utf-8 json"))
}

fn parse_tag(s: &str) -> Result<usize, Failure> {
    if let Ok(id) = s.trim().parse() {
        return Ok(id);
    }
    let name = s.trim().to_uppercase();
    if name == "O" {
        return Ok(0);
    }
    EntityLabel::ALL
        .iter()
        .find(|l| serde_json::to_value(l).ok().and_then(|v| v.as_str().map(|s| s == name)).unwrap_or(false))
        .map(|l| l.tag_id())
        .ok_or_else(|| Failure::Usage(format!("unknown tag {s:?}")))
}

trait JsonScalar {
    fn to_json(&self) -> Value;
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        json!(self)
    }
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        json!(format_rational(self))
    }
}

fn embed_check<T: Scalar + JsonScalar>(
    (tok, pos, tag): (&Path, &Path, Option<&Path>),
    tokens: &[usize],
    tags: &[usize],
    lambda: &str,
    pretty: bool,
) -> CmdResult {
    let lambda = T::parse_scalar(lambda).ok_or_else(|| Failure::Usage(format!("invalid lambda {lambda:?}")))?;
    let load = |p: &Path| -> Result<Matrix<T>, Failure> {
        require_file(p)?;
        Matrix::load(p).map_err(invalid)
    };
    let (tok, pos) = (load(tok)?, load(pos)?);
    let tables = match tag {
        Some(t) => EmbeddingTables::with_tag_table(tok, pos, load(t)?, lambda),
        None => EmbeddingTables::new(tok, pos, lambda),
    }
    .map_err(invalid)?;
    let composed = tables.compose(tokens, tags).map_err(invalid)?;
    let baseline = tables.baseline_compose(tokens).map_err(invalid)?;
    let to_json = |rows: &[Vec<T>]| -> Value {
        Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(JsonScalar::to_json).collect())).collect())
    };
    let record = json!({
        "lambda": tables.lambda().to_json(),
        "embeddings": to_json(&composed),
        "baseline": to_json(&baseline),
        "matches_baseline": composed == baseline,
    });
    Ok(if pretty { format!("{}\n", serde_json::to_string_pretty(&record).expect("json")) } else { lines([record]) })
}
