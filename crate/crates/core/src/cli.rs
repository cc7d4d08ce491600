//! The `cvcsp` command line.
//!
//! Exit codes: 0 tractable / success, 1 check failed, 2 NP-hard, 3 unknown at
//! budget, 64 malformed input, 65 capability exceeded, 66 unreadable file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certificate::{verify, CertificateFile};
use crate::classify::{classify, Budgets, Hardness, Verdict, MAX_DOMAIN};
use crate::error::Error;
use crate::express::{binary_closure_with, express_gadget, ClosureBudget, Gadget};
use crate::function::CostFunction;
use crate::gen::{random_instance, random_language, rng, LanguageParams};
use crate::graph::{build_pair_graph, check_graph_properties};
use crate::language::{Instance, Language, UnaryClosure};
use crate::ops::{check_m_conditions, check_multimorphism, MajorityStrategy, Operations, PairSet};
use crate::reduce::{cap_reduce, derive_language, minhom_reduce, DeriveMode};
use crate::solver::brute_force_solve_with;

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CAPABILITY: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;

#[derive(Parser, Debug)]
#[command(name = "cvcsp", version, about = "Conservative valued CSP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ClosureArgs {
    /// Closure rounds.
    #[arg(long, default_value_t = ClosureBudget::default().rounds)]
    budget_rounds: usize,
    /// Closure member cap.
    #[arg(long, default_value_t = ClosureBudget::default().size)]
    budget_size: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl ClosureArgs {
    fn budget(&self) -> ClosureBudget {
        ClosureBudget {
            rounds: self.budget_rounds,
            size: self.budget_size,
            workers: self.workers.max(1),
            ..ClosureBudget::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a conservative language as tractable, NP-hard or unknown.
    Classify {
        language: PathBuf,
        #[command(flatten)]
        closure: ClosureArgs,
        #[arg(long, default_value_t = MAX_DOMAIN)]
        max_domain: usize,
        /// Write the certificate file here.
        #[arg(long)]
        emit_certificate: Option<PathBuf>,
        /// Write the pipeline trace here.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Majority search strategy (default: exhaustive up to 3 labels).
        #[arg(long, value_enum)]
        strategy: Option<MajorityStrategy>,
        /// Node budget of the backtracking majority search.
        #[arg(long)]
        majority_nodes: Option<u64>,
        /// Recorded in the certificate; the pipeline itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustively minimize an instance.
    Solve {
        instance: PathBuf,
        language: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Check a multimorphism or polymorphism file against a language.
    CheckMm {
        operations: PathBuf,
        language: PathBuf,
        /// Also check the STP / MJN conditions for this pair set, e.g. "0-1,1-2".
        #[arg(long)]
        m_set: Option<String>,
    },
    /// Evaluate a gadget, or print the binary closure when no gadget is given.
    Express {
        language: PathBuf,
        #[arg(long)]
        gadget: Option<PathBuf>,
        #[command(flatten)]
        closure: ClosureArgs,
    },
    /// Build the pair graph.
    Graph {
        language: PathBuf,
        /// Print Graphviz instead of JSON.
        #[arg(long)]
        dot: bool,
        #[command(flatten)]
        closure: ClosureArgs,
    },
    /// Transform a language or instance.
    Reduce {
        language: PathBuf,
        #[arg(long, value_enum)]
        mode: ReduceMode,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// JSON object mapping function indices to their valued originals
        /// (minhom-reduce).
        #[arg(long)]
        originals: Option<PathBuf>,
    },
    /// Replay a certificate against a language.
    Verify {
        certificate: PathBuf,
        language: PathBuf,
    },
    /// Emit a random language or instance.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReduceMode {
    Feas,
    Minhom,
    Bar,
    Cap,
    MinhomReduce,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    Language {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        domain: usize,
        #[arg(long, default_value_t = 1)]
        functions: usize,
        #[arg(long, default_value_t = 2)]
        min_arity: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        #[arg(long, default_value_t = 3)]
        max_cost: u64,
        #[arg(long, default_value_t = 20)]
        infinity_percent: u32,
        #[arg(long)]
        crisp: bool,
        #[arg(long, value_enum, default_value_t = ClosureFlag::Finite)]
        unary_closure: ClosureFlag,
    },
    Instance {
        language: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        terms: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ClosureFlag {
    None,
    Finite,
    General,
}

impl From<ClosureFlag> for UnaryClosure {
    fn from(c: ClosureFlag) -> Self {
        match c {
            ClosureFlag::None => UnaryClosure::None,
            ClosureFlag::Finite => UnaryClosure::Finite,
            ClosureFlag::General => UnaryClosure::General,
        }
    }
}

/// A failure with its exit code.
struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Structural(_) => EXIT_USAGE,
            Error::Capability(_) => EXIT_CAPABILITY,
            Error::Precondition(_) | Error::MuConflict(_) => EXIT_CHECK_FAILED,
        };
        Failure(code, e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line on `argv` (including the program name) with the
/// process's standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn load_language(path: &Path) -> Result<Language, Failure> {
    Language::from_json(&read(path)?)
        .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read(path)?)
        .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(EXIT_NO_INPUT, format!("stdout: {e}")))
}

fn parse_pairs(text: &str) -> Result<PairSet, Failure> {
    let mut set = PairSet::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || {
            Failure(
                EXIT_USAGE,
                format!("pair {item:?}: expected two distinct labels like 0-1"),
            )
        };
        let (a, b) = item.split_once('-').ok_or_else(bad)?;
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a == b {
            return Err(bad());
        }
        set.insert(a, b);
    }
    Ok(set)
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Classify {
            language,
            closure,
            max_domain,
            emit_certificate,
            log,
            strategy,
            majority_nodes,
            seed,
        } => {
            let lang = load_language(&language)?;
            let mut budgets = Budgets {
                rounds: closure.budget_rounds,
                size: closure.budget_size,
                strategy,
                max_domain,
                workers: closure.workers.max(1),
                ..Budgets::default()
            };
            if majority_nodes.is_some() {
                budgets.majority_nodes = majority_nodes;
            }
            let c = classify(&lang, &budgets)?;
            let mut trace = c.trace.join("\n");
            trace.push('\n');
            let _ = err.write_all(trace.as_bytes());
            if let Some(path) = log {
                write_file(&path, &trace)?;
            }
            let mut text = format!("verdict: {}\n", c.verdict.name());
            match &c.verdict {
                Verdict::Tractable(t) => {
                    text += &format!("M: {}\nmu entries: {}\n", t.m_set, t.mu.entries.len());
                }
                Verdict::NpHard(Hardness::SoftSelfLoop(w)) => {
                    text += &format!("soft self-loop at ({},{})\n", w.node.0, w.node.1);
                }
                Verdict::NpHard(Hardness::NoMajority(log)) => {
                    text += &format!("refutation leaves: {}\n", log.leaves.len());
                }
                Verdict::UnknownAtBudget { stage, .. } => {
                    text += &format!(
                        "stage: {}\n",
                        serde_json::to_value(stage).expect("serializable")
                    );
                }
            }
            emit(out, &text)?;
            if let Some(path) = emit_certificate {
                write_file(
                    &path,
                    &CertificateFile::new(&lang, &c, &budgets, seed).to_json(),
                )?;
            }
            Ok(c.verdict.exit_code())
        }
        Command::Solve {
            instance,
            language,
            workers,
        } => {
            let lang = load_language(&language)?;
            let inst = load_instance(&instance)?;
            let s = brute_force_solve_with(&inst, &lang, workers.max(1))?;
            emit(
                out,
                &format!(
                    "assignment: {}\ncost: {}\nfeasible: {}\n",
                    s.assignment, s.cost, s.feasible
                ),
            )?;
            Ok(0)
        }
        Command::CheckMm {
            operations,
            language,
            m_set,
        } => {
            let lang = load_language(&language)?;
            let ops: Operations = load_json(&operations)?;
            if ops.domain_size() != lang.domain_size() {
                return Err(Failure(
                    EXIT_USAGE,
                    "operations and language have different domains".into(),
                ));
            }
            let mut report = BTreeMap::new();
            let mm = check_multimorphism(&ops, &lang)?;
            let mut holds = mm.holds;
            report.insert("multimorphism", mm);
            if let Some(text) = m_set {
                let m = parse_pairs(&text)?;
                let r = check_m_conditions(&ops, &m)?;
                holds &= r.holds;
                report.insert("m_conditions", r);
            }
            emit(out, &json(&report))?;
            Ok(if holds { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Express {
            language,
            gadget,
            closure,
        } => {
            let lang = load_language(&language)?;
            match gadget {
                Some(path) => {
                    let g: Gadget = load_json(&path)?;
                    let g = Gadget::new(g.instance, g.exposed)?;
                    emit(out, &json(&express_gadget(&g, &lang)?))?;
                }
                None => emit(out, &json(&binary_closure_with(&lang, &closure.budget())?))?,
            }
            Ok(0)
        }
        Command::Graph {
            language,
            dot,
            closure,
        } => {
            let lang = load_language(&language)?.with_unary_closure(UnaryClosure::General);
            let c = binary_closure_with(&lang, &closure.budget())?;
            let g = build_pair_graph(&c);
            if dot {
                emit(out, &g.to_dot())?;
            } else {
                #[derive(Serialize)]
                struct GraphReport<'a> {
                    graph: &'a crate::graph::PairGraph,
                    properties: crate::graph::GraphPropertyReport,
                }
                emit(
                    out,
                    &json(&GraphReport {
                        graph: &g,
                        properties: check_graph_properties(&g),
                    }),
                )?;
            }
            Ok(0)
        }
        Command::Reduce {
            language,
            mode,
            instance,
            originals,
        } => {
            let lang = load_language(&language)?;
            let need_instance = || {
                instance
                    .as_deref()
                    .ok_or_else(|| Failure(EXIT_USAGE, "this mode needs --instance".into()))
                    .and_then(load_instance)
            };
            match mode {
                ReduceMode::Feas => emit(out, &json(&derive_language(&lang, DeriveMode::Feas)))?,
                ReduceMode::Minhom => {
                    emit(out, &json(&derive_language(&lang, DeriveMode::Minhom)))?
                }
                ReduceMode::Bar => emit(out, &json(&derive_language(&lang, DeriveMode::Bar)))?,
                ReduceMode::Cap => emit(out, &json(&cap_reduce(&need_instance()?, &lang)?))?,
                ReduceMode::MinhomReduce => {
                    let path = originals.ok_or_else(|| {
                        Failure(EXIT_USAGE, "minhom-reduce needs --originals".into())
                    })?;
                    let raw: BTreeMap<String, CostFunction> = load_json(&path)?;
                    let mut map = BTreeMap::new();
                    for (k, f) in raw {
                        let i = k.parse::<usize>().map_err(|_| {
                            Failure(EXIT_USAGE, format!("originals key {k:?} is not an index"))
                        })?;
                        map.insert(i, f);
                    }
                    emit(out, &json(&minhom_reduce(&need_instance()?, &lang, &map)?))?
                }
            }
            Ok(0)
        }
        Command::Verify {
            certificate,
            language,
        } => {
            let lang = load_language(&language)?;
            let cert = CertificateFile::from_json(&read(&certificate)?)
                .map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", certificate.display())))?;
            match verify(&cert, &lang) {
                Ok(()) => {
                    emit(
                        out,
                        &format!("certificate valid ({})\n", cert.verdict.name()),
                    )?;
                    Ok(0)
                }
                Err(reason) => {
                    emit(out, &format!("certificate invalid: {reason}\n"))?;
                    Ok(EXIT_CHECK_FAILED)
                }
            }
        }
        Command::Gen { what } => match what {
            GenCommand::Language {
                seed,
                domain,
                functions,
                min_arity,
                max_arity,
                max_cost,
                infinity_percent,
                crisp,
                unary_closure,
            } => {
                let p = LanguageParams {
                    domain_size: domain,
                    functions,
                    min_arity,
                    max_arity,
                    max_cost,
                    infinity_percent,
                    crisp,
                    unary_closure: unary_closure.into(),
                };
                emit(
                    out,
                    &(random_language(&mut rng(seed), &p)?.to_json() + "\n"),
                )?;
                Ok(0)
            }
            GenCommand::Instance {
                language,
                seed,
                vars,
                terms,
            } => {
                let lang = load_language(&language)?;
                emit(
                    out,
                    &(random_instance(&mut rng(seed), &lang, vars, terms)?.to_json() + "\n"),
                )?;
                Ok(0)
            }
        },
    }
}
