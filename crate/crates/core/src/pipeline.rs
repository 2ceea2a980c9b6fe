//! End-to-end orchestration: compile a synthesis problem to a DQBF, solve
//! it, lift the Henkin functions and check them against the input problem.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::info;
use thiserror::Error;

use crate::ackermann::{to_single_callsign, AckermannTrace};
use crate::bitblast::{blast, BlastError, DqbfInstance};
use crate::callsig::{analyze, normalize_arguments, CallSignClass, CallSignIndex};
use crate::dqf::{to_dqf, DqfError, DqfFormula};
use crate::frontend::{FunctionDefinition, ProblemError, SynthProblem};
use crate::lift::{lift, verify_lifted, LiftError, LiftedVerification};
use crate::sat::{Budget, SatError};
use crate::solver::{
    run_external, solve_2qbf, solve_expansion, verify_solution, ExternalError, SolveError,
    SolveOutcome, Verification, DEFAULT_EXPANSION_BOUND,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Engine {
    Expansion,
    TwoQbf,
    /// 2-QBF engine when every existential depends on all universals,
    /// expansion otherwise.
    Auto,
    External(PathBuf),
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expansion" => Ok(Engine::Expansion),
            "2qbf" => Ok(Engine::TwoQbf),
            "auto" => Ok(Engine::Auto),
            _ => match s.strip_prefix("external:") {
                Some(path) if !path.is_empty() => Ok(Engine::External(path.into())),
                _ => Err(format!(
                    "unknown engine `{s}` (expected expansion, 2qbf, auto or external:<path>)"
                )),
            },
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::Expansion => f.write_str("expansion"),
            Engine::TwoQbf => f.write_str("2qbf"),
            Engine::Auto => f.write_str("auto"),
            Engine::External(p) => write!(f, "external:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub engine: Engine,
    pub expansion_bound: usize,
    pub timeout: Option<Duration>,
    pub max_conflicts: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            engine: Engine::Auto,
            expansion_bound: DEFAULT_EXPANSION_BOUND,
            timeout: None,
            max_conflicts: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Dqf(#[from] DqfError),
    #[error(transparent)]
    Blast(#[from] BlastError),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("{0}")]
    Engine(SolveError),
    #[error("external solver: {0}")]
    External(#[from] ExternalError),
    #[error("external solver reported TRUE without a certificate")]
    MissingCertificate,
    #[error("solution rejected: {0:?}")]
    InvalidCertificate(Verification),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error("lifted definitions fail on {0:?}")]
    Unsound(LiftedVerification),
}

impl From<SolveError> for PipelineError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Sat(SatError::ResourceLimit) => {
                PipelineError::ResourceLimit("SAT budget exhausted".into())
            }
            SolveError::ExpansionBound { .. } => PipelineError::ResourceLimit(e.to_string()),
            other => PipelineError::Engine(other),
        }
    }
}

/// Pipeline stages in execution order.
pub const STAGES: [&str; 9] = [
    "normalize",
    "callsigns",
    "ackermann",
    "dqf",
    "blast",
    "solve",
    "certify",
    "lift",
    "verify",
];

/// Wall-clock time per stage; stages that did not run are recorded as zero.
#[derive(Clone, Debug, Default)]
pub struct StageTimes(Vec<(&'static str, Duration)>);

impl StageTimes {
    fn record(&mut self, stage: &'static str, d: Duration) {
        debug_assert!(STAGES.contains(&stage));
        self.0.push((stage, d));
    }

    fn fill_missing(&mut self) {
        for s in STAGES {
            if !self.0.iter().any(|(n, _)| *n == s) {
                self.0.push((s, Duration::ZERO));
            }
        }
        self.0
            .sort_by_key(|(n, _)| STAGES.iter().position(|s| s == n));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Duration)> + '_ {
        self.0.iter().copied()
    }

    pub fn get(&self, stage: &str) -> Option<Duration> {
        self.0.iter().find(|(n, _)| *n == stage).map(|(_, d)| *d)
    }
}

struct Clock {
    deadline: Option<Instant>,
    max_conflicts: Option<u64>,
    times: StageTimes,
}

impl Clock {
    fn new(config: &PipelineConfig) -> Self {
        Clock {
            deadline: config.timeout.map(|t| Instant::now() + t),
            max_conflicts: config.max_conflicts,
            times: StageTimes::default(),
        }
    }

    fn stage<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce(&Budget) -> T,
    ) -> Result<T, PipelineError> {
        let budget = Budget {
            deadline: self.deadline,
            max_conflicts: self.max_conflicts,
        };
        if budget.expired() {
            return Err(PipelineError::ResourceLimit(format!(
                "timeout before {name}"
            )));
        }
        let start = Instant::now();
        let out = f(&budget);
        self.times.record(name, start.elapsed());
        Ok(out)
    }
}

/// Everything produced before solving.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub normalized: SynthProblem,
    pub callsigns: CallSignIndex,
    pub single: SynthProblem,
    pub trace: AckermannTrace,
    pub dqf: DqfFormula,
    pub instance: DqbfInstance,
}

fn compile_timed(problem: &SynthProblem, clock: &mut Clock) -> Result<Compiled, PipelineError> {
    problem.validate()?;
    let normalized = clock.stage("normalize", |_| normalize_arguments(problem))?;
    let callsigns = clock.stage("callsigns", |_| analyze(&normalized))?;
    let (single, trace) = clock.stage("ackermann", |_| match callsigns.class {
        CallSignClass::Single => (normalized.clone(), AckermannTrace::default()),
        CallSignClass::Multiple => to_single_callsign(&normalized, &callsigns),
    })?;
    let dqf = clock.stage("dqf", |_| to_dqf(&single))??;
    let instance = clock.stage("blast", |_| blast(&dqf))??;
    info!(
        "compiled: {} vars, {} clauses, {}",
        instance.num_vars,
        instance.clauses.len(),
        callsigns.class
    );
    Ok(Compiled {
        normalized,
        callsigns,
        single,
        trace,
        dqf,
        instance,
    })
}

/// Runs every stage up to DQBF emission.
pub fn compile(
    problem: &SynthProblem,
    config: &PipelineConfig,
) -> Result<(Compiled, StageTimes), PipelineError> {
    let mut clock = Clock::new(config);
    let c = compile_timed(problem, &mut clock)?;
    Ok((c, clock.times))
}

/// Decides an instance with the configured engine. Solutions are returned
/// unchecked; callers certify them with [`verify_solution`].
pub fn solve_instance(
    instance: &DqbfInstance,
    config: &PipelineConfig,
    budget: &Budget,
) -> Result<SolveOutcome, PipelineError> {
    let engine = match &config.engine {
        Engine::Auto if instance.is_2qbf() => &Engine::TwoQbf,
        Engine::Auto => &Engine::Expansion,
        e => e,
    };
    Ok(match engine {
        Engine::Expansion => solve_expansion(instance, config.expansion_bound, budget)?,
        Engine::TwoQbf => solve_2qbf(instance, budget)?,
        Engine::External(path) => {
            let remaining = budget
                .deadline
                .map(|d| d.saturating_duration_since(Instant::now()));
            let out = run_external(path, instance, remaining)?;
            match (out.verdict, out.certificate) {
                (false, _) => SolveOutcome::False,
                (true, Some(sol)) => SolveOutcome::True(sol),
                (true, None) => return Err(PipelineError::MissingCertificate),
            }
        }
        Engine::Auto => unreachable!(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Realizable(Vec<FunctionDefinition>),
    Unrealizable,
}

impl Verdict {
    pub fn is_realizable(&self) -> bool {
        matches!(self, Verdict::Realizable(_))
    }
}

#[derive(Clone, Debug)]
pub struct SynthReport {
    pub verdict: Verdict,
    pub compiled: Compiled,
    pub times: StageTimes,
}

impl SynthReport {
    pub fn n_vars(&self) -> u32 {
        self.compiled.instance.num_vars
    }

    pub fn n_clauses(&self) -> usize {
        self.compiled.instance.clauses.len()
    }

    pub fn callsign_class(&self) -> CallSignClass {
        self.compiled.callsigns.class
    }
}

/// Full pipeline. Realizable results have been checked against `problem`.
pub fn synthesize(
    problem: &SynthProblem,
    config: &PipelineConfig,
) -> Result<SynthReport, PipelineError> {
    let mut clock = Clock::new(config);
    let compiled = compile_timed(problem, &mut clock)?;
    let outcome = clock.stage("solve", |b| solve_instance(&compiled.instance, config, b))??;
    let verdict = match outcome {
        SolveOutcome::False => Verdict::Unrealizable,
        SolveOutcome::True(sol) => {
            let check = clock.stage("certify", |_| verify_solution(&compiled.instance, &sol))?;
            if !check.is_valid() {
                return Err(PipelineError::InvalidCertificate(check));
            }
            let defs = clock.stage("lift", |_| lift(&sol, &compiled.dqf, &compiled.trace))??;
            let v = clock.stage("verify", |_| verify_lifted(&defs, problem))??;
            if !v.is_valid() {
                return Err(PipelineError::Unsound(v));
            }
            Verdict::Realizable(defs)
        }
    };
    clock.times.fill_missing();
    Ok(SynthReport {
        verdict,
        compiled,
        times: clock.times,
    })
}
