use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use treemeasure::automaton::{
    parse_automaton, parse_automaton_json, parse_process, parse_process_json, parse_unchecked, parse_unchecked_json,
    validate_weak, BranchingProcess, WeakAutomaton,
};
use treemeasure::distribution::{apply_f, Scalar, StateSetDistribution};
use treemeasure::engine::{
    compare, decimal_bound, enclose, enclose_branching, plan_stages, run_pipeline, run_pipeline_branching,
    Comparison, PipelineOptions, PipelineResult, Relation,
};
use treemeasure::formula::{build_compare, build_psi, build_psi_branching, emit_smt2, CompareRel, PsiOptions};
use treemeasure::game_oracle::{enum_stage_distribution, enumeration_work, monte_carlo, DEFAULT_WORK_BOUND};

const THREADS_ENV: &str = "TREEMEASURE_THREADS";

/// Measures of tree languages of weak alternating parity automata.
#[derive(Debug, Parser)]
#[command(name = "treemeasure", version)]
struct Cli {
    /// Worker threads (default: all cores; also read from TREEMEASURE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the main output to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an automaton and check that it is weak.
    Validate {
        automaton: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Point estimate of the measure.
    Measure(MeasureArgs),
    /// Sound interval around the measure.
    Enclose(MeasureArgs),
    /// Decide how the measure compares with a rational threshold.
    Compare {
        #[command(flatten)]
        run: MeasureArgs,
        /// Threshold in [0,1], e.g. `1/2`.
        threshold: String,
        /// Relation of interest, used for the formula hint.
        #[arg(long, value_enum, default_value_t = RelArg::Eq)]
        rel: RelArg,
    },
    /// Emit the real-arithmetic formula for the measure as SMT-LIB.
    EmitFormula {
        automaton: PathBuf,
        #[arg(long)]
        process: Option<PathBuf>,
        /// Emit the sentence `q ⋈ measure` instead of the open formula.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long, value_enum, default_value_t = RelArg::Eq)]
        rel: RelArg,
        /// Refuse formulas whose estimated atom count exceeds this.
        #[arg(long, default_value_t = PsiOptions::default().max_atoms)]
        max_atoms: u64,
        /// Print {atoms, variables, blocks, bytes} as JSON.
        #[arg(long)]
        stats: bool,
    },
    /// Independent checks by enumeration and sampling.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Subcommand)]
enum OracleCommand {
    /// `i` steps of the recurrence by listing labelled prefixes.
    Enum {
        automaton: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = BaseArg::Full)]
        base: BaseArg,
        #[arg(long, default_value_t = DEFAULT_WORK_BOUND)]
        work_bound: u128,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo estimate from sampled tree prefixes.
    Sample {
        automaton: PathBuf,
        #[arg(long)]
        process: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct MeasureArgs {
    automaton: PathBuf,
    /// Branching process file; the coin-flipping measure when absent.
    #[arg(long)]
    process: Option<PathBuf>,
    /// Iterations per stage.
    #[arg(long, default_value_t = 30)]
    budget: usize,
    /// Per-stage budgets, comma separated; stage n uses entry n.
    #[arg(long, value_delimiter = ',')]
    stage_budgets: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Float mode stopping threshold.
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    /// Exact mode denominator cap in bits, or `none`.
    #[arg(long, default_value = "4096")]
    max_bits: String,
    /// Print one line per stage after the summary.
    #[arg(long)]
    report: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelArg {
    Lt,
    Eq,
    Gt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaseArg {
    Full,
    Empty,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] treemeasure::engine::EngineError),
    #[error(transparent)]
    Formula(#[from] treemeasure::formula::FormulaError),
    #[error(transparent)]
    Oracle(#[from] treemeasure::game_oracle::OracleError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

struct Outcome {
    text: String,
    code: u8,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn load_automaton(path: &Path) -> Result<WeakAutomaton, CliError> {
    let text = read(path)?;
    let parsed = if is_json(path) { parse_automaton_json(&text) } else { parse_automaton(&text) };
    parsed.map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

fn load_process(path: &Path) -> Result<BranchingProcess, CliError> {
    let text = read(path)?;
    let parsed = if is_json(path) { parse_process_json(&text) } else { parse_process(&text) };
    parsed.map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })
}

fn parse_threshold(text: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Invalid(format!("threshold `{text}` is not a rational number"));
    let t = text.trim();
    let q = if let Some((int, frac)) = t.split_once('.') {
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
        BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32))
    } else {
        t.parse::<BigRational>().map_err(|_| bad())?
    };
    if q < BigRational::zero() || q > BigRational::from_integer(1.into()) {
        return Err(CliError::Invalid(format!("threshold {q} is outside [0,1]")));
    }
    Ok(q)
}

impl MeasureArgs {
    fn options(&self) -> Result<PipelineOptions, CliError> {
        if self.budget == 0 || self.stage_budgets.contains(&0) {
            return Err(CliError::Invalid("budgets must be at least 1".into()));
        }
        let options = match self.mode {
            ModeArg::Exact => {
                let bits = match self.max_bits.as_str() {
                    "none" => None,
                    s => Some(s.parse::<u64>().map_err(|_| CliError::Invalid(format!("bad --max-bits `{s}`")))?),
                };
                PipelineOptions::new(self.budget).with_max_bits(bits)
            }
            ModeArg::Float => {
                if self.epsilon.is_nan() || self.epsilon <= 0.0 {
                    return Err(CliError::Invalid("epsilon must be positive".into()));
                }
                PipelineOptions::float(self.budget, self.epsilon)
            }
        };
        Ok(options.with_stage_budgets(self.stage_budgets.clone()))
    }

    fn run(&self, enclosure: bool) -> Result<PipelineResult, CliError> {
        let aut = load_automaton(&self.automaton)?;
        let options = self.options()?;
        let process = self.process.as_deref().map(load_process).transpose()?;
        Ok(match (process, enclosure) {
            (None, false) => run_pipeline(&aut, &options)?,
            (None, true) => enclose(&aut, &options)?,
            (Some(p), false) => run_pipeline_branching(&aut, &p, &options)?,
            (Some(p), true) => enclose_branching(&aut, &p, &options)?,
        })
    }

    fn render(&self, result: &PipelineResult) -> String {
        if self.json {
            return pretty(&result.report_json());
        }
        if self.report {
            result.report_text()
        } else {
            format!("{}\n", result.summary())
        }
    }
}

fn pretty(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("serializable"))
}

fn bound_text(value: &Scalar, round_up: bool) -> String {
    value.exact_text().unwrap_or_else(|| decimal_bound(value, round_up))
}

fn validate(path: &Path, as_json: bool) -> Result<Outcome, CliError> {
    let text = read(path)?;
    let parsed = if is_json(path) { parse_unchecked_json(&text) } else { parse_unchecked(&text) };
    let aut = parsed.map_err(|e| CliError::Input { path: path.display().to_string(), message: e.to_string() })?;
    let report = validate_weak(&aut);
    let violations: Vec<String> = report
        .violations
        .iter()
        .map(|v| {
            format!(
                "delta({}, {}) reaches ({} {}) with priority {} > {}",
                aut.states()[v.state],
                aut.alphabet()[v.letter],
                v.direction,
                aut.states()[v.target],
                aut.priority(v.target),
                aut.priority(v.state)
            )
        })
        .collect();
    let code = if report.is_weak() { 0 } else { 1 };
    let top = report.is_weak().then(|| plan_stages(&WeakAutomaton::new(aut.clone()).expect("weak")).top);
    if as_json {
        let v = json!({
            "weak": report.is_weak(),
            "states": aut.num_states(),
            "letters": aut.num_letters(),
            "N": top,
            "violations": violations,
        });
        return Ok(Outcome { text: pretty(&v), code });
    }
    let text = match top {
        Some(top) => format!("weak: {} states, {} letters, N = {top}\n", aut.num_states(), aut.num_letters()),
        None => {
            let mut s = format!("not weak: {} violation(s)\n", violations.len());
            for v in &violations {
                s.push_str(&format!("  {v}\n"));
            }
            s
        }
    };
    Ok(Outcome { text, code })
}

fn rel_text(rel: RelArg) -> &'static str {
    match rel {
        RelArg::Lt => "lt",
        RelArg::Eq => "eq",
        RelArg::Gt => "gt",
    }
}

fn compare_command(run: &MeasureArgs, threshold: &str, rel: RelArg) -> Result<Outcome, CliError> {
    let q = parse_threshold(threshold)?;
    let enclosure = run.run(true)?;
    let mut decision: Comparison = compare(&enclosure, &q)?;
    if decision.relation == Relation::Unknown {
        let point = run.run(false)?;
        let fallback = compare(&point, &q)?;
        if fallback.relation != Relation::Unknown {
            decision = fallback;
        } else {
            if fallback.lo.cmp_scalar(&decision.lo).is_gt() {
                decision.lo = fallback.lo;
            }
            if fallback.hi.cmp_scalar(&decision.hi).is_lt() {
                decision.hi = fallback.hi;
            }
        }
    }
    let code = if decision.relation == Relation::Unknown { 2 } else { 0 };
    let (lo, hi) = (bound_text(&decision.lo, false), bound_text(&decision.hi, true));
    if run.json {
        let v = json!({
            "relation": decision.relation,
            "threshold": q.to_string(),
            "rel": rel_text(rel),
            "lo": lo,
            "hi": hi,
        });
        return Ok(Outcome { text: pretty(&v), code });
    }
    let text = match decision.relation {
        Relation::Unknown => format!(
            "UNKNOWN (interval [{lo}, {hi}]); try emit-formula --compare {q} --rel {}\n",
            rel_text(rel)
        ),
        r => format!("{r}\n"),
    };
    Ok(Outcome { text, code })
}

#[allow(clippy::too_many_arguments)]
fn emit_formula(
    automaton: &Path,
    process: Option<&Path>,
    threshold: Option<&str>,
    rel: RelArg,
    max_atoms: u64,
    stats: bool,
    output: Option<&Path>,
) -> Result<Outcome, CliError> {
    let aut = load_automaton(automaton)?;
    let options = PsiOptions { max_atoms };
    let psi = match process {
        None => build_psi(&aut, &options)?,
        Some(p) => build_psi_branching(&aut, &load_process(p)?, &options)?,
    };
    let formula = match threshold {
        None => psi,
        Some(t) => {
            let rel = match rel {
                RelArg::Lt => CompareRel::Lt,
                RelArg::Eq => CompareRel::Eq,
                RelArg::Gt => CompareRel::Gt,
            };
            build_compare(&psi, &parse_threshold(t)?, rel)?
        }
    };
    if stats {
        if let Some(path) = output {
            fs::write(path, emit_smt2(&formula))?;
        }
        return Ok(Outcome::ok(pretty(&serde_json::to_value(formula.stats()).expect("serializable"))));
    }
    Ok(Outcome::ok(emit_smt2(&formula)))
}

fn oracle_enum(path: &Path, steps: usize, base: BaseArg, work_bound: u128, as_json: bool) -> Result<Outcome, CliError> {
    let aut = load_automaton(path)?;
    let n = aut.num_states();
    let start = match base {
        BaseArg::Full => StateSetDistribution::dirac(n, aut.all_states()),
        BaseArg::Empty => StateSetDistribution::dirac(n, treemeasure::automaton::SubsetMask::EMPTY),
    };
    let enumerated = enum_stage_distribution(&aut, &start, steps, work_bound)?;
    let iterated = (0..steps).fold(start, |d, _| apply_f(&d, &aut));
    let agrees = enumerated == iterated;
    let work = enumeration_work(aut.num_letters(), 1, steps);
    if as_json {
        let k = aut.num_subsets();
        let entries: Vec<Value> = (0..k)
            .map(|p| {
                let set = treemeasure::automaton::SubsetMask(p as u64);
                json!({ "set": aut.format_subset(set), "value": enumerated.get(set).to_string() })
            })
            .collect();
        let v = json!({
            "steps": steps,
            "base": match base { BaseArg::Full => "full", BaseArg::Empty => "empty" },
            "work": work.to_string(),
            "distribution": entries,
            "agrees_with_operator": agrees,
        });
        return Ok(Outcome::ok(pretty(&v)));
    }
    let mut text = enumerated.dump(&aut);
    text.push_str(&format!("# agrees with F^{steps}: {}\n", if agrees { "yes" } else { "no" }));
    Ok(Outcome::ok(text))
}

fn oracle_sample(path: &Path, process: Option<&Path>, samples: u64, depth: usize, seed: u64) -> Result<Outcome, CliError> {
    if samples == 0 {
        return Err(CliError::Invalid("samples must be at least 1".into()));
    }
    let aut = load_automaton(path)?;
    let process = match process {
        Some(p) => load_process(p)?,
        None => BranchingProcess::uniform(aut.alphabet()),
    };
    let result = monte_carlo(&aut, &process, samples, depth, seed)?;
    Ok(Outcome::ok(pretty(&serde_json::to_value(result).expect("serializable"))))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Validate { automaton, json } => validate(automaton, *json),
        Command::Measure(args) => Ok(Outcome::ok(args.render(&args.run(false)?))),
        Command::Enclose(args) => Ok(Outcome::ok(args.render(&args.run(true)?))),
        Command::Compare { run, threshold, rel } => compare_command(run, threshold, *rel),
        Command::EmitFormula { automaton, process, compare, rel, max_atoms, stats } => emit_formula(
            automaton,
            process.as_deref(),
            compare.as_deref(),
            *rel,
            *max_atoms,
            *stats,
            cli.output.as_deref(),
        ),
        Command::Oracle(OracleCommand::Enum { automaton, steps, base, work_bound, json }) => {
            oracle_enum(automaton, *steps, *base, *work_bound, *json)
        }
        Command::Oracle(OracleCommand::Sample { automaton, process, samples, depth, seed }) => {
            oracle_sample(automaton, process.as_deref(), *samples, *depth, *seed)
        }
    }
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{THREADS_ENV}=`{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = thread_count(&cli).and_then(|threads| {
        if let Some(n) = threads.filter(|&n| n > 0) {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Invalid(e.to_string()))?;
        }
        execute(&cli)
    });
    match result {
        Ok(outcome) => {
            let written = match (&cli.output, &cli.command) {
                (Some(path), Command::EmitFormula { stats: true, .. }) => {
                    eprintln!("wrote {}; check with e.g. `z3 {}`", path.display(), path.display());
                    print!("{}", outcome.text);
                    Ok(())
                }
                (Some(path), command) => fs::write(path, &outcome.text).map(|_| {
                    if matches!(command, Command::EmitFormula { .. }) {
                        eprintln!("wrote {}; check with e.g. `z3 {}`", path.display(), path.display());
                    }
                }),
                (None, _) => {
                    print!("{}", outcome.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
