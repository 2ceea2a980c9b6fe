use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Map, Value as Json};

use dqsynth_core::corpus::{random_dqbf, random_problem, ProblemShape};
use dqsynth_core::dqdimacs::{parse_qdimacs, write_dqdimacs};
use dqsynth_core::frontend::{
    emit_definitions, parse_definitions, parse_problem, print_problem, SynthProblem,
};
use dqsynth_core::lift::{verify_lifted, LiftedVerification};
use dqsynth_core::pipeline::{
    compile, solve_instance, synthesize, Engine, PipelineConfig, PipelineError, Verdict,
};
use dqsynth_core::qbf2sygus::convert;
use dqsynth_core::sat::Budget;
use dqsynth_core::solver::{
    verify_solution, write_certificate, SolveOutcome, DEFAULT_EXPANSION_BOUND,
};

const EXIT_POSITIVE: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_EXTERNAL: u8 = 4;
const EXIT_NEGATIVE: u8 = 20;

/// Synthesis of bitvector functions through dependency quantified Boolean formulas.
#[derive(Parser)]
#[command(name = "dqsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a SyGuS problem and print define-funs.
    Synth {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        dump: DumpArgs,
        /// Print a JSON result record instead of definitions.
        #[arg(long)]
        json: bool,
    },
    /// Translate a SyGuS problem to DQDIMACS.
    Compile {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        dump: DumpArgs,
    },
    /// Translate a QDIMACS or DQDIMACS instance to SyGuS.
    Convert {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Decide a QDIMACS or DQDIMACS instance.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Print the Henkin functions after TRUE.
        #[arg(long)]
        certificate: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check define-funs against a SyGuS problem.
    Verify {
        problem: PathBuf,
        definitions: PathBuf,
    },
    /// Print a random problem (or instance) for testing.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit a random DQDIMACS instance instead.
        #[arg(long)]
        dqbf: bool,
        /// Require a function with several call signatures.
        #[arg(long)]
        multiple: bool,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// expansion, 2qbf, auto or external:<path>
    #[arg(long, default_value = "auto")]
    engine: Engine,
    /// Largest number of universals the expansion engine accepts.
    #[arg(long, default_value_t = DEFAULT_EXPANSION_BOUND)]
    expansion_bound: usize,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
}

impl SolveArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            engine: self.engine.clone(),
            expansion_bound: self.expansion_bound,
            timeout: self.timeout.map(Duration::from_secs_f64),
            max_conflicts: None,
        }
    }
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    dump_callsigns: bool,
    #[arg(long)]
    dump_ackermann: bool,
    #[arg(long)]
    dump_dqf: bool,
}

impl DumpArgs {
    fn any(&self) -> bool {
        self.dump_callsigns || self.dump_ackermann || self.dump_dqf
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn pipeline(e: PipelineError, engine: &Engine) -> Self {
        let external = matches!(engine, Engine::External(_));
        let code = match &e {
            PipelineError::Problem(_) => EXIT_PARSE,
            PipelineError::ResourceLimit(_) => EXIT_RESOURCE,
            PipelineError::External(_) | PipelineError::MissingCertificate => EXIT_EXTERNAL,
            PipelineError::InvalidCertificate(_) if external => EXIT_EXTERNAL,
            _ => EXIT_ERROR,
        };
        Failure::new(code, e)
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_problem(path: &Path) -> Result<SynthProblem, Failure> {
    let text = read(path)?;
    parse_problem(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", path.display())))
}

fn dump(problem: &SynthProblem, flags: &DumpArgs) -> Result<(), Failure> {
    let (c, _) = compile(problem, &PipelineConfig::default())
        .map_err(|e| Failure::pipeline(e, &Engine::Auto))?;
    if flags.dump_callsigns {
        eprint!(";; callsigns\n{}", c.callsigns);
    }
    if flags.dump_ackermann {
        eprint!(";; ackermann\n{}", c.trace);
    }
    if flags.dump_dqf {
        eprintln!(";; dqf\n{}", c.dqf);
    }
    Ok(())
}

fn stage_times(times: impl Iterator<Item = (&'static str, Duration)>) -> Json {
    let mut m = Map::new();
    for (stage, d) in times {
        m.insert(stage.to_string(), json!(d.as_secs_f64() * 1000.0));
    }
    Json::Object(m)
}

fn run_synth(file: &Path, args: &SolveArgs, flags: &DumpArgs, as_json: bool) -> Outcome {
    let problem = load_problem(file)?;
    if flags.any() {
        dump(&problem, flags)?;
    }
    let report =
        synthesize(&problem, &args.config()).map_err(|e| Failure::pipeline(e, &args.engine))?;
    let (word, code, defs) = match &report.verdict {
        Verdict::Realizable(defs) => ("realizable", EXIT_POSITIVE, Some(emit_definitions(defs))),
        Verdict::Unrealizable => ("unrealizable", EXIT_NEGATIVE, None),
    };
    if as_json {
        let record = json!({
            "verdict": word,
            "stage_times_ms": stage_times(report.times.iter()),
            "n_vars": report.n_vars(),
            "n_clauses": report.n_clauses(),
            "n_functions": problem.functions.len(),
            "callsign_class": report.callsign_class().to_string(),
            "definitions": defs,
        });
        println!("{record:#}");
    } else {
        match defs {
            Some(text) => print!("{text}"),
            None => println!("unrealizable"),
        }
    }
    Ok(code)
}

fn run_compile(file: &Path, output: Option<&Path>, flags: &DumpArgs) -> Outcome {
    let problem = load_problem(file)?;
    if flags.any() {
        dump(&problem, flags)?;
    }
    let (c, _) = compile(&problem, &PipelineConfig::default())
        .map_err(|e| Failure::pipeline(e, &Engine::Auto))?;
    write_out(output, &write_dqdimacs(&c.instance))?;
    Ok(EXIT_POSITIVE)
}

fn run_convert(file: &Path, output: Option<&Path>) -> Outcome {
    let text = read(file)?;
    let inst = parse_qdimacs(&text)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", file.display())))?;
    let problem = convert(&inst).map_err(|e| Failure::new(EXIT_ERROR, e))?;
    write_out(output, &print_problem(&problem))?;
    Ok(EXIT_POSITIVE)
}

fn run_solve(file: &Path, args: &SolveArgs, certificate: bool, as_json: bool) -> Outcome {
    let text = read(file)?;
    let inst = parse_qdimacs(&text)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", file.display())))?;
    let config = args.config();
    let budget = Budget {
        deadline: config.timeout.map(|t| Instant::now() + t),
        max_conflicts: None,
    };
    let start = Instant::now();
    let outcome = solve_instance(&inst, &config, &budget)
        .map_err(|e| Failure::pipeline(e, &config.engine))?;
    let solve_time = start.elapsed();
    if let SolveOutcome::True(sol) = &outcome {
        let check = verify_solution(&inst, sol);
        if !check.is_valid() {
            let code = match config.engine {
                Engine::External(_) => EXIT_EXTERNAL,
                _ => EXIT_ERROR,
            };
            return Err(Failure::new(code, format!("solution rejected: {check:?}")));
        }
    }
    let cert = match (&outcome, certificate) {
        (SolveOutcome::True(sol), true) => Some(write_certificate(&inst, sol)),
        _ => None,
    };
    if as_json {
        let record = json!({
            "verdict": if outcome.is_true() { "TRUE" } else { "FALSE" },
            "stage_times_ms": stage_times(std::iter::once(("solve", solve_time))),
            "n_vars": inst.num_vars,
            "n_clauses": inst.clauses.len(),
            "certificate": cert,
        });
        println!("{record:#}");
    } else {
        println!("{}", if outcome.is_true() { "TRUE" } else { "FALSE" });
        if let Some(c) = cert {
            print!("{c}");
        }
    }
    Ok(if outcome.is_true() {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    })
}

fn run_verify(problem: &Path, definitions: &Path) -> Outcome {
    let p = load_problem(problem)?;
    let text = read(definitions)?;
    let defs = parse_definitions(&text)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}:{e}", definitions.display())))?;
    match verify_lifted(&defs, &p).map_err(|e| Failure::new(EXIT_ERROR, e))? {
        LiftedVerification::Valid => {
            println!("valid");
            Ok(EXIT_POSITIVE)
        }
        LiftedVerification::Counterexample(cex) => {
            println!("invalid");
            for (name, value) in cex {
                println!("  {name} = {}", value.to_term());
            }
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn run_gen(seed: u64, dqbf: bool, multiple: bool) -> Outcome {
    let mut rng = StdRng::seed_from_u64(seed);
    if dqbf {
        print!("{}", write_dqdimacs(&random_dqbf(&mut rng, 3, 2, 6, true)));
    } else {
        let shape = ProblemShape {
            require_multiple_callsigns: multiple,
            ..Default::default()
        };
        print!("{}", print_problem(&random_problem(&mut rng, &shape)));
    }
    Ok(EXIT_POSITIVE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_POSITIVE
            });
        }
    };
    let result = match &cli.command {
        Command::Synth {
            file,
            solve,
            dump,
            json,
        } => run_synth(file, solve, dump, *json),
        Command::Compile { file, output, dump } => run_compile(file, output.as_deref(), dump),
        Command::Convert { file, output } => run_convert(file, output.as_deref()),
        Command::Solve {
            file,
            solve,
            certificate,
            json,
        } => run_solve(file, solve, *certificate, *json),
        Command::Verify {
            problem,
            definitions,
        } => run_verify(problem, definitions),
        Command::Gen {
            seed,
            dqbf,
            multiple,
        } => run_gen(*seed, *dqbf, *multiple),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
