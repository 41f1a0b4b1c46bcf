use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use prxq_core::engine::{
    baseline_query, pi_query, ApproxParams, Decision, Mode, QueryOutcome,
};
use prxq_core::eval::{run_bench, write_csv, BenchSpec};
use prxq_core::pi_index::{
    build_indexes, document_checksum, load_ki, load_pi, save_ki, save_pi, KiIndex, PiIndex,
};
use prxq_core::prxml::{generate_prxml, parse_prxml, serialize_prxml, KindRatio, PrxmlDocument};
use prxq_core::worlds::{quasi_oracle, DEFAULT_BUDGET};
use prxq_core::Error;

const BUDGET_VAR: &str = "PRXQ_ORACLE_BUDGET";

#[derive(Parser)]
#[command(name = "prxq", version, about = "Threshold keyword queries over probabilistic XML")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryMode {
    Ba,
    Piea,
    Piaa,
}

#[derive(Subcommand)]
enum Command {
    /// Build the PI and KI index files for a document.
    Index {
        #[arg(short = 'd', long = "doc")]
        doc: PathBuf,
        /// Output prefix; writes PREFIX.pix and PREFIX.kix.
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Answer a threshold keyword query. Prints `dewey,probability,method`.
    Query {
        #[arg(short = 'd', long = "doc")]
        doc: PathBuf,
        /// Index prefix written by `index`. Built in memory when omitted.
        #[arg(short = 'i', long = "index")]
        index: Option<PathBuf>,
        /// Query keyword; repeat for each keyword.
        #[arg(short = 'k', long = "keyword", required = true)]
        keywords: Vec<String>,
        #[arg(long, value_parser = parse_sigma)]
        sigma: f64,
        #[arg(long, value_enum, default_value = "piea")]
        mode: QueryMode,
        /// Share of descendants computed exactly in piaa mode.
        #[arg(long, default_value_t = 0.5)]
        select_fraction: f64,
        /// Per-node bounds and decisions as CSV on stderr.
        #[arg(long)]
        explain: bool,
        /// Pop-by-pop decisions and counters on stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Possible-worlds reference answer. Prints `dewey,probability,qualified`.
    Oracle {
        #[arg(short = 'd', long = "doc")]
        doc: PathBuf,
        #[arg(short = 'k', long = "keyword", required = true)]
        keywords: Vec<String>,
        #[arg(long, value_parser = parse_sigma)]
        sigma: f64,
    },
    /// Turn a deterministic document into a probabilistic one.
    Generate {
        #[arg(short = 'd', long = "doc")]
        doc: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// IND:MUX:ORD weights.
        #[arg(long, default_value = "3:3:4")]
        ratio: KindRatio,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Run a benchmark described by a TOML file and write a CSV report.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

fn parse_sigma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("sigma must lie in (0,1], got {v}"))
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IndexMismatch { .. } => 3,
            Error::BudgetExceeded { .. } | Error::CorpusTooLarge { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_doc(path: &Path) -> Result<PrxmlDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    if text.trim().is_empty() {
        return Err(Failure {
            code: 2,
            message: format!("{}: empty document", path.display()),
        });
    }
    Ok(parse_prxml(&text)?)
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_failure(path, e))
}

/// Probability with at most 9 decimals and no trailing zeros.
fn fmt_prob(p: f64) -> String {
    let s = format!("{p:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn load_indexes(doc: &PrxmlDocument, prefix: Option<&Path>) -> Result<(PiIndex, KiIndex), Failure> {
    let Some(prefix) = prefix else {
        return Ok(build_indexes(doc));
    };
    let pi = load_pi(open(&with_ext(prefix, "pix"))?)?;
    let ki = load_ki(open(&with_ext(prefix, "kix"))?)?;
    let checksum = document_checksum(doc);
    for index in [pi.checksum, ki.checksum] {
        if index != checksum {
            return Err(Error::IndexMismatch {
                index,
                document: checksum,
            }
            .into());
        }
    }
    Ok((pi, ki))
}

fn oracle_budget() -> Result<usize, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| Failure {
            code: 2,
            message: format!("{BUDGET_VAR} must be a non-negative integer, got {v:?}"),
        }),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn print_explain(out: &QueryOutcome, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "dewey,lb,ub,decision")?;
    for e in &out.trace {
        let d = match e.decision {
            Decision::BoundEmit => "boundEmit".to_string(),
            Decision::Computed { emitted: true, .. } => "emitted".to_string(),
            Decision::Computed { emitted: false, .. } => "below".to_string(),
            Decision::Pruned => "pruned".to_string(),
        };
        writeln!(w, "{},{},{},{d}", e.node, fmt_prob(e.lb), fmt_prob(e.ub))?;
    }
    Ok(())
}

fn print_trace(out: &QueryOutcome, w: &mut impl Write) -> io::Result<()> {
    for e in &out.trace {
        let d = match e.decision {
            Decision::BoundEmit => "emit on lower bound".to_string(),
            Decision::Computed { prob, emitted } => format!(
                "computed {} -> {}",
                fmt_prob(prob),
                if emitted { "emit" } else { "keep" }
            ),
            Decision::Pruned => "prune".to_string(),
        };
        writeln!(w, "pop {} lb={} ub={}: {d}", e.node, fmt_prob(e.lb), fmt_prob(e.ub))?;
    }
    let c = out.counters;
    writeln!(
        w,
        "popped={} pruned={} bound_emits={} computed={} convolutions={}",
        c.popped, c.pruned, c.bound_emits, c.computed, c.convolutions
    )
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    let io_err = |e: io::Error| Failure::from(Error::Io(e));
    match cli.command {
        Command::Index { doc, out } => {
            let d = read_doc(&doc)?;
            let (pi, ki) = build_indexes(&d);
            let pix = with_ext(&out, "pix");
            let kix = with_ext(&out, "kix");
            let mut w = create(&pix)?;
            save_pi(&pi, &mut w)?;
            w.flush().map_err(|e| io_failure(&pix, e))?;
            let mut w = create(&kix)?;
            save_ki(&ki, &mut w)?;
            w.flush().map_err(|e| io_failure(&kix, e))?;
            let c = d.kind_counts();
            writeln!(
                stdout,
                "nodes={} ordinary={} ind={} mux={} terms={} profiles={} parts={}",
                d.len(),
                c.ordinary,
                c.ind,
                c.mux,
                pi.vocab.len(),
                pi.profiles.len(),
                pi.part_count()
            )
            .map_err(io_err)?;
        }
        Command::Query {
            doc,
            index,
            keywords,
            sigma,
            mode,
            select_fraction,
            explain,
            trace,
        } => {
            let d = read_doc(&doc)?;
            let (pi, ki) = load_indexes(&d, index.as_deref())?;
            let params = ApproxParams {
                select_fraction,
                ..ApproxParams::default()
            };
            let out = match mode {
                QueryMode::Ba => baseline_query(&ki, &d, &keywords, sigma)?,
                QueryMode::Piea => pi_query(&ki, &pi, &d, &keywords, sigma, Mode::Exact, &params)?,
                QueryMode::Piaa => pi_query(&ki, &pi, &d, &keywords, sigma, Mode::Approx, &params)?,
            };
            writeln!(stdout, "dewey,probability,method").map_err(io_err)?;
            for r in &out.results {
                writeln!(stdout, "{},{},{}", r.node, fmt_prob(r.prob), r.method).map_err(io_err)?;
            }
            let stderr = io::stderr();
            let mut stderr = stderr.lock();
            if explain {
                print_explain(&out, &mut stderr).map_err(io_err)?;
            }
            if trace {
                print_trace(&out, &mut stderr).map_err(io_err)?;
            }
        }
        Command::Oracle {
            doc,
            keywords,
            sigma,
        } => {
            let d = read_doc(&doc)?;
            let result = quasi_oracle(&d, &keywords, sigma, oracle_budget()?)?;
            writeln!(stdout, "dewey,probability,qualified").map_err(io_err)?;
            for (node, p) in &result.per_node {
                writeln!(stdout, "{node},{},{}", fmt_prob(*p), result.is_qualified(node)).map_err(io_err)?;
            }
        }
        Command::Generate {
            doc,
            seed,
            ratio,
            out,
        } => {
            let d = read_doc(&doc)?;
            let g = generate_prxml(&d, seed, ratio);
            fs::write(&out, serialize_prxml(&g)).map_err(|e| io_failure(&out, e))?;
        }
        Command::Bench { spec, out } => {
            let text = fs::read_to_string(&spec).map_err(|e| io_failure(&spec, e))?;
            let spec = BenchSpec::from_toml(&text)?;
            let reports = run_bench(&spec)?;
            let mut w = create(&out)?;
            write_csv(&reports, &mut w)?;
            w.flush().map_err(|e| io_failure(&out, e))?;
        }
    }
    stdout.flush().map_err(io_err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("prxq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
