//! Synthesis-problem front end: a SyGuS-v2 subset restricted to the Core and
//! bitvector theories, plus printing of problems and `define-fun` solutions.
//!
//! Grammars attached to `synth-fun` are kept as opaque text and never used to
//! restrict the search space: every function may use the full bitvector
//! vocabulary.

mod eval;
mod parser;
mod printer;
pub mod sexp;
mod term;

use std::collections::{BTreeMap, HashSet};

pub use eval::{apply, eval, eval_closed, EvalError, Value};
pub use parser::{parse_definitions, parse_problem, ParseError, ParseErrorKind};
pub use printer::{emit_definitions, print_problem};
pub use term::{BvConst, Op, Sort, SortError, Term, TermKind, MAX_WIDTH};

/// A typed variable: a universally quantified input or a function parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    pub name: String,
    pub sort: Sort,
}

impl Variable {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Variable {
            name: name.into(),
            sort,
        }
    }

    pub fn term(&self) -> Term {
        Term::var(self.name.clone(), self.sort)
    }
}

/// Signature of a function to synthesize.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SynthFun {
    pub name: String,
    pub params: Vec<Variable>,
    pub ret: Sort,
}

impl SynthFun {
    pub fn param_sorts(&self) -> Vec<Sort> {
        self.params.iter().map(|p| p.sort).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthProblem {
    pub inputs: Vec<Variable>,
    pub functions: Vec<SynthFun>,
    /// Conjoined to form the formula to satisfy.
    pub constraints: Vec<Term>,
    /// Grammar text per function, for diagnostics only.
    pub source_grammars: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("free variable `{0}` is not a declared input")]
    FreeVariable(String),
    #[error("application of undeclared function `{0}`")]
    UndeclaredFunction(String),
    #[error("application of `{0}` does not match its signature")]
    BadApplication(String),
    #[error("constraint is not Bool-sorted: {0}")]
    NotBool(String),
}

impl SynthProblem {
    pub fn new(inputs: Vec<Variable>, functions: Vec<SynthFun>, constraints: Vec<Term>) -> Self {
        SynthProblem {
            inputs,
            functions,
            constraints,
            source_grammars: BTreeMap::new(),
        }
    }

    /// The conjunction of all constraints.
    pub fn spec(&self) -> Term {
        Term::and(self.constraints.clone())
    }

    pub fn function(&self, name: &str) -> Option<&SynthFun> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&Variable> {
        self.inputs.iter().find(|v| v.name == name)
    }

    /// Structural equality that ignores retained grammar text.
    pub fn eq_ignoring_grammars(&self, other: &SynthProblem) -> bool {
        self.inputs == other.inputs
            && self.functions == other.functions
            && self.constraints == other.constraints
    }

    /// Total AST node count (declarations count one node per variable or symbol).
    pub fn size(&self) -> usize {
        self.inputs.len()
            + self
                .functions
                .iter()
                .map(|f| 1 + f.params.len())
                .sum::<usize>()
            + self.constraints.iter().map(Term::size).sum::<usize>()
    }

    /// Every name used by the problem, including function parameters.
    pub fn used_names(&self) -> HashSet<String> {
        let mut names: HashSet<String> = self.inputs.iter().map(|v| v.name.clone()).collect();
        for f in &self.functions {
            names.insert(f.name.clone());
            names.extend(f.params.iter().map(|p| p.name.clone()));
        }
        names
    }

    /// Checks the structural invariants of a problem.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let mut seen = HashSet::new();
        for name in self
            .inputs
            .iter()
            .map(|v| &v.name)
            .chain(self.functions.iter().map(|f| &f.name))
        {
            if !seen.insert(name) {
                return Err(ProblemError::Duplicate(name.clone()));
            }
        }
        for c in &self.constraints {
            if c.sort() != Sort::Bool {
                return Err(ProblemError::NotBool(c.to_string()));
            }
            for v in c.free_vars() {
                match self.input(&v) {
                    Some(_) => {}
                    None => return Err(ProblemError::FreeVariable(v)),
                }
            }
            let mut bad = None;
            c.visit(&mut |t| {
                if let Some((name, args)) = t.as_call() {
                    match self.function(name) {
                        None => bad = Some(ProblemError::UndeclaredFunction(name.to_string())),
                        Some(f) => {
                            let ok = f.ret == t.sort()
                                && f.params.len() == args.len()
                                && f.params.iter().zip(args).all(|(p, a)| p.sort == a.sort());
                            if !ok {
                                bad = Some(ProblemError::BadApplication(name.to_string()));
                            }
                        }
                    }
                }
            });
            if let Some(e) = bad {
                return Err(e);
            }
        }
        Ok(())
    }
}

/// A closed-form solution for one synthesized function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDefinition {
    pub name: String,
    pub params: Vec<Variable>,
    pub ret: Sort,
    pub body: Term,
}

impl FunctionDefinition {
    /// Instantiates the body at the given arguments.
    pub fn apply(&self, args: &[Term]) -> Term {
        let map: BTreeMap<&str, &Term> = self
            .params
            .iter()
            .map(|p| p.name.as_str())
            .zip(args)
            .collect();
        self.body.substitute(&|v| map.get(v).map(|t| (*t).clone()))
    }

    /// Evaluates the definition at concrete argument values.
    pub fn eval(&self, args: &[Value]) -> Result<Value, EvalError> {
        let env: BTreeMap<&str, Value> = self
            .params
            .iter()
            .map(|p| p.name.as_str())
            .zip(args.iter().copied())
            .collect();
        eval(&self.body, &|v| env.get(v).copied(), &mut |_, _| None)
    }
}

/// Replaces every application of a defined function in `term` by the
/// definition's body instantiated at the (already inlined) arguments.
pub fn inline_definitions(term: &Term, defs: &[FunctionDefinition]) -> Term {
    term.rewrite_bottom_up(&mut |t| {
        if let Some((name, args)) = t.as_call() {
            if let Some(d) = defs.iter().find(|d| d.name == name) {
                return d.apply(args);
            }
        }
        t
    })
}
