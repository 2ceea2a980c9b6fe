//! Dependency-quantified formulas over bitvectors.
//!
//! A single-callsign problem becomes `forall X. exists^{H_1} y_1 ... exists^{H_m} y_m. phi`
//! where `y_i` stands for every application of `f_i` and `H_i` is the set of
//! variables in `f_i`'s one call signature.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::callsig::{analyze, FreshNames};
use crate::frontend::{SynthProblem, Term, Variable};

/// Where an output variable came from, for lifting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub function: String,
    /// Declared parameters of the function.
    pub params: Vec<Variable>,
    /// Arguments at the unique call signature; empty if never applied.
    pub args: Vec<Variable>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HenkinVar {
    pub var: Variable,
    /// Subset of the universals, deduplicated, in call-signature order.
    pub deps: Vec<Variable>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DqfFormula {
    pub universals: Vec<Variable>,
    pub existentials: Vec<HenkinVar>,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DqfError {
    #[error("`{0}` has more than one call signature; reduce to single-callsign first")]
    MultipleCallSigns(String),
    #[error("`{0}` is applied to a non-variable argument; normalize arguments first")]
    NotNormalized(String),
}

/// Replaces every application of each function by its output variable.
pub fn to_dqf(problem: &SynthProblem) -> Result<DqfFormula, DqfError> {
    for c in &problem.constraints {
        for call in c.calls() {
            let (name, args) = call.as_call().unwrap();
            if args.iter().any(|a| a.as_var().is_none()) {
                return Err(DqfError::NotNormalized(name.to_string()));
            }
        }
    }
    let index = analyze(problem);
    if let Some(f) = index.functions.iter().find(|f| f.callsigns.len() > 1) {
        return Err(DqfError::MultipleCallSigns(f.function.clone()));
    }

    let mut names = FreshNames::for_problem(problem);
    let mut existentials = Vec::with_capacity(problem.functions.len());
    for f in &problem.functions {
        let sig = index.callsigns(&f.name).first();
        let var = Variable::new(names.fresh(&format!("{}!out", f.name)), f.ret);
        existentials.push(HenkinVar {
            var,
            deps: sig.map(|s| s.dependency_set()).unwrap_or_default(),
            origin: Origin {
                function: f.name.clone(),
                params: f.params.clone(),
                args: sig.map(|s| s.args.clone()).unwrap_or_default(),
            },
        });
    }

    let body = problem
        .spec()
        .rewrite_bottom_up(&mut |t| match t.as_call() {
            Some((name, _)) => {
                let y = existentials
                    .iter()
                    .find(|e| e.origin.function == name)
                    .expect("calls reference declared functions");
                y.var.term()
            }
            None => t,
        });

    Ok(DqfFormula {
        universals: problem.inputs.clone(),
        existentials,
        body,
    })
}

/// True iff every existential depends on all universals.
pub fn is_2qbf(formula: &DqfFormula) -> bool {
    let all: BTreeSet<&str> = formula.universals.iter().map(|v| v.name.as_str()).collect();
    formula.existentials.iter().all(|e| {
        let deps: BTreeSet<&str> = e.deps.iter().map(|v| v.name.as_str()).collect();
        deps == all
    })
}

impl fmt::Display for DqfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = |vs: &[Variable]| {
            vs.iter()
                .map(|v| format!("({} {})", v.name, v.sort))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "(forall ({})", vars(&self.universals))?;
        for e in &self.existentials {
            let deps: Vec<&str> = e.deps.iter().map(|v| v.name.as_str()).collect();
            let args: Vec<&str> = e.origin.args.iter().map(|v| v.name.as_str()).collect();
            writeln!(
                f,
                "  (exists-henkin ({} {}) ({})) ; {}({})",
                e.var.name,
                e.var.sort,
                deps.join(" "),
                e.origin.function,
                args.join(", ")
            )?;
        }
        writeln!(f, "  {})", self.body)
    }
}
