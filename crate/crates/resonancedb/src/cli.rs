//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data or validation failure, 2 state conflict,
//! 64 usage error. Data goes to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use resonance_core::{Hit, KernelKind, OperatorSpec, WavePattern};

use crate::bench::{
    measure_latency, operator_eval, populate, CacheMode, OperatorEvalConfig, SyntheticPatterns, LATENCY_CSV_HEADER,
};
use crate::error::Error;
use crate::ingest::{content_id, vector_to_pattern, IngestRecord, MapMode};
use crate::query::{default_workers, top_k, QueryConfig, WORKERS_ENV};
use crate::segment::{segment_file_name, SegmentHeader, DEFAULT_SEGMENT_RECORDS, MAGIC};
use crate::store::Store;
use crate::verify::{self, Scorer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_CONFLICT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "resonancedb",
    version,
    about = "Phase-aware pattern store with exact resonance search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty store.
    Init(InitArgs),
    /// Insert patterns from JSON Lines or a raw f32 matrix.
    Ingest(IngestArgs),
    /// Exact top-k search for one query.
    Query(QueryArgs),
    /// Print the header fields of a segment.
    DumpHeader(DumpHeaderArgs),
    /// Measure top-k latency.
    Bench(BenchArgs),
    /// Operator retrieval and distance experiment.
    OpsEval(OpsEvalArgs),
    /// Run the randomized property suite of the resonance score.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: u32,
    #[arg(long, default_value_t = DEFAULT_SEGMENT_RECORDS, value_parser = clap::value_parser!(u32).range(1..))]
    pub segment_records: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum InputFormat {
    #[default]
    Jsonl,
    /// Rows of `dim` little-endian f32 values, mapped with `--map`.
    F32le,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Input file, or `-` for stdin.
    #[arg(long)]
    pub input: String,
    #[arg(long, value_enum, default_value_t = MapMode::SignPhase)]
    pub map: MapMode,
    #[arg(long, value_enum, default_value_t = InputFormat::Jsonl)]
    pub input_format: InputFormat,
    /// Expected dimension; must match the store when given.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// One JSON record in ingest format; `id` is ignored.
    #[arg(long)]
    pub query_json: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub topk: u64,
    #[arg(long, env = WORKERS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long, default_value = "scalar", value_parser = parse_kernel)]
    pub kernel: KernelKind,
    #[arg(long, value_enum, default_value_t = MapMode::SignPhase)]
    pub map: MapMode,
}

#[derive(Debug, Args)]
pub struct DumpHeaderArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub segment: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["db", "synthetic"])))]
pub struct BenchArgs {
    /// Benchmark an existing store.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Benchmark a temporary store of this many synthetic patterns.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: Option<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub topk: Vec<usize>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, env = WORKERS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "scalar", value_parser = parse_kernel)]
    pub kernel: KernelKind,
    /// Reopen the store for every repetition (best effort cold cache).
    #[arg(long)]
    pub cold: bool,
    /// Number of distinct synthetic query patterns.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub queries: u64,
}

#[derive(Debug, Args)]
pub struct OpsEvalArgs {
    #[arg(long, default_value_t = 50)]
    pub bases: usize,
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated operators, e.g. `neg,shift:0.7854,int_up:3,int_down:0.5`.
    #[arg(long, alias = "op", value_delimiter = ',', num_args = 1.., default_value = "neg,shift,int_up,int_down", value_parser = parse_op)]
    pub ops: Vec<OperatorSpec>,
    #[arg(long, default_value_t = 0.01)]
    pub jitter: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "scalar", value_parser = parse_kernel)]
    pub kernel: KernelKind,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub cases: u64,
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: resonance_core::Error| e.to_string())
}

fn parse_op(s: &str) -> Result<OperatorSpec, String> {
    s.parse().map_err(|e: resonance_core::Error| e.to_string())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Conflict(_) | Error::DuplicateId(_) => EXIT_CONFLICT,
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Init(a) => cmd_init(&a, err),
        Command::Ingest(a) => return cmd_ingest(&a, out, err),
        Command::Query(a) => cmd_query(&a, out),
        Command::DumpHeader(a) => cmd_dump_header(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::OpsEval(a) => cmd_ops_eval(&a, out, err),
        Command::Verify(a) => return cmd_verify(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn workers_or_default(w: Option<u64>) -> usize {
    w.map_or_else(default_workers, |w| w as usize)
}

fn cmd_init(a: &InitArgs, err: &mut dyn Write) -> Result<(), Error> {
    let store = Store::create(&a.db, a.dim as usize, a.segment_records)?;
    let _ = writeln!(err, "initialized {} (dim {})", store.dir().display(), store.dim());
    Ok(())
}

fn open_input(input: &str) -> io::Result<Box<dyn Read>> {
    if input == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        Ok(Box::new(fs::File::open(input)?))
    }
}

fn cmd_ingest(a: &IngestArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let store = match Store::open_existing(&a.db) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(d) = a.dim {
        if d != store.dim() {
            let _ = writeln!(err, "error: --dim {d} does not match store dimension {}", store.dim());
            return EXIT_DATA;
        }
    }
    let input = match open_input(&a.input) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: cannot open {}: {e}", a.input);
            return EXIT_DATA;
        }
    };
    let (ok, failed) = match a.input_format {
        InputFormat::Jsonl => ingest_jsonl(&store, input, a.map, err),
        InputFormat::F32le => {
            if a.map == MapMode::Native {
                let _ = writeln!(
                    err,
                    "error: f32le input holds plain vectors; use --map sign-phase or zero-phase"
                );
                return EXIT_USAGE;
            }
            ingest_f32le(&store, input, a.map, err)
        }
    };
    if let Err(e) = store.flush() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_DATA;
    }
    let _ = writeln!(out, "ingested {ok}");
    if failed > 0 {
        let _ = writeln!(err, "{failed} record(s) failed");
        EXIT_DATA
    } else {
        EXIT_OK
    }
}

fn ingest_jsonl(store: &Store, input: Box<dyn Read>, map: MapMode, err: &mut dyn Write) -> (usize, usize) {
    let (mut ok, mut failed) = (0, 0);
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                let _ = writeln!(err, "line {lineno}: {e}");
                failed += 1;
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let result = IngestRecord::parse(&line).and_then(|r| {
            let p = r.to_pattern(map, store.dim())?;
            let id = r.resolve_id(&p)?;
            store.insert(id, &p).map_err(|e| e.to_string())
        });
        match result {
            Ok(()) => ok += 1,
            Err(e) => {
                let _ = writeln!(err, "line {lineno}: {e}");
                failed += 1;
            }
        }
    }
    (ok, failed)
}

fn ingest_f32le(store: &Store, mut input: Box<dyn Read>, map: MapMode, err: &mut dyn Write) -> (usize, usize) {
    let mut bytes = Vec::new();
    if let Err(e) = input.read_to_end(&mut bytes) {
        let _ = writeln!(err, "read error: {e}");
        return (0, 1);
    }
    let row_len = 4 * store.dim();
    let (mut ok, mut failed) = (0, 0);
    if bytes.len() % row_len != 0 {
        let _ = writeln!(
            err,
            "input is {} bytes, not a multiple of the {row_len}-byte row size",
            bytes.len()
        );
        failed += 1;
    }
    for (i, row) in bytes.chunks_exact(row_len).enumerate() {
        let values = row
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        let result =
            vector_to_pattern(values, map).and_then(|p| store.insert(content_id(&p), &p).map_err(|e| e.to_string()));
        match result {
            Ok(()) => ok += 1,
            Err(e) => {
                let _ = writeln!(err, "row {}: {e}", i + 1);
                failed += 1;
            }
        }
    }
    (ok, failed)
}

/// One output line of `query`.
pub fn hit_json(hit: &Hit) -> String {
    serde_json::json!({ "id": hit.id.to_string(), "score": hit.score }).to_string()
}

fn parse_query(json: &str, map: MapMode, dim: usize) -> Result<WavePattern, Error> {
    let record = IngestRecord::parse(json).map_err(Error::InvalidRecord)?;
    record.to_pattern(map, dim).map_err(Error::InvalidRecord)
}

fn cmd_query(a: &QueryArgs, out: &mut dyn Write) -> Result<(), Error> {
    let store = Store::open_existing(&a.db)?;
    let query = parse_query(&a.query_json, a.map, store.dim())?;
    let cfg = QueryConfig::new(a.topk as usize)
        .with_workers(workers_or_default(a.workers))
        .with_kernel(a.kernel);
    for hit in top_k(&store, &query, &cfg)? {
        writeln!(out, "{}", hit_json(&hit))?;
    }
    Ok(())
}

fn cmd_dump_header(a: &DumpHeaderArgs, out: &mut dyn Write) -> Result<(), Error> {
    let path = a.db.join(segment_file_name(a.segment));
    if !path.exists() {
        return Err(Error::NotAStore(path));
    }
    let h = SegmentHeader::read_from(&path)?;
    let value = serde_json::json!({
        "path": path.display().to_string(),
        "magic": String::from_utf8_lossy(&MAGIC),
        "format_version": h.format_version,
        "dim": h.dim,
        "record_capacity": h.record_capacity,
        "record_len": h.record_len(),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
    Ok(())
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    if a.topk.is_empty() || a.topk.contains(&0) {
        return Err(Error::InvalidArgument("--topk values must be at least 1".into()));
    }
    let _tmp;
    let store = match (&a.db, a.synthetic) {
        (Some(db), _) => {
            let s = Store::open_existing(db)?;
            if let Some(d) = a.dim {
                if d as usize != s.dim() {
                    return Err(Error::DimMismatch {
                        requested: d as usize,
                        found: s.dim(),
                    });
                }
            }
            s
        }
        (None, Some(n)) => {
            let dim = a
                .dim
                .ok_or_else(|| Error::InvalidArgument("--synthetic requires --dim".into()))?;
            if n == 0 {
                return Err(Error::InvalidArgument("--synthetic must be at least 1".into()));
            }
            let tmp = tempfile::tempdir()?;
            let s = Store::create(tmp.path(), dim as usize, DEFAULT_SEGMENT_RECORDS)?;
            let _ = writeln!(err, "generating {n} synthetic patterns (dim {dim}, seed {})", a.seed);
            populate(&s, n, a.seed)?;
            _tmp = tmp;
            s
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let queries: Vec<WavePattern> =
        SyntheticPatterns::new(a.queries as usize, store.dim(), a.seed ^ 0x9e37_79b9_7f4a_7c15).collect();
    let mode = if a.cold { CacheMode::Cold } else { CacheMode::Warm };
    let workers = workers_or_default(a.workers);
    let mut csv = format!("{LATENCY_CSV_HEADER}\n");
    for &k in &a.topk {
        let cfg = QueryConfig::new(k).with_workers(workers).with_kernel(a.kernel);
        let report = measure_latency(&store, &queries, &cfg, a.reps as usize, mode)?;
        let row = report.csv_row();
        writeln!(out, "{row}")?;
        csv.push_str(&row);
        csv.push('\n');
    }
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("latency.csv"), csv)?;
    Ok(())
}

fn cmd_ops_eval(a: &OpsEvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let cfg = OperatorEvalConfig {
        bases: a.bases,
        dim: a.dim as usize,
        seed: a.seed,
        ops: a.ops.clone(),
        jitter: a.jitter,
        kernel: a.kernel,
    };
    let report = operator_eval(&cfg)?;
    report.write_csvs(&a.out)?;
    let _ = writeln!(
        err,
        "p1_cos is the cosine baseline computed on amplitude vectors; wrote CSVs to {}",
        a.out.display()
    );
    write!(out, "{}", report.summary_csv())?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> i32 {
    let results = verify::run_suite(a.seed, a.cases as usize);
    report_verify(&results, out)
}

/// Runs the property suite with a custom scorer and reports like `verify`.
pub fn verify_with(seed: u64, cases: usize, scorer: Scorer<'_>, out: &mut dyn Write) -> i32 {
    let results = verify::run_suite_with(seed, cases, scorer);
    report_verify(&results, out)
}

fn report_verify(results: &[verify::PropertyResult], out: &mut dyn Write) -> i32 {
    for r in results {
        let _ = writeln!(out, "{r}");
    }
    if verify::all_passed(results) {
        EXIT_OK
    } else {
        EXIT_DATA
    }
}

/// Used by `main`; returns the process exit code.
pub fn main_with_stdio() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
