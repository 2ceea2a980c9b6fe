//! Call signatures of synthesized functions.
//!
//! A call signature is the ordered argument list a function is applied to at
//! one invocation site. Two invocations with the same list share a signature;
//! `f(a, b)` and `f(b, a)` do not.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::frontend::{SynthProblem, Term, Variable};

/// Produces names that collide with nothing already in use.
#[derive(Debug, Clone)]
pub struct FreshNames {
    used: HashSet<String>,
}

impl FreshNames {
    pub fn new(used: HashSet<String>) -> Self {
        FreshNames { used }
    }

    pub fn for_problem(p: &SynthProblem) -> Self {
        FreshNames::new(p.used_names())
    }

    /// Returns `base` if free, else `base` with a numeric suffix.
    pub fn fresh(&mut self, base: &str) -> String {
        let mut candidate = base.to_string();
        let mut k = 0;
        while self.used.contains(&candidate) {
            k += 1;
            candidate = format!("{base}~{k}");
        }
        self.used.insert(candidate.clone());
        candidate
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }
}

/// Replaces every non-variable argument `t` of a synthesized-function
/// application by a fresh universal input `x`, and assumes `x = t`.
///
/// The definitions become antecedents of the constraint conjunction:
/// `(=> (and (= x1 t1) ...) spec)`. Identical argument terms share one
/// variable. A problem whose applications already take only variables is
/// returned unchanged.
pub fn normalize_arguments(problem: &SynthProblem) -> SynthProblem {
    let mut names = FreshNames::for_problem(problem);
    let mut bound: HashMap<Term, String> = HashMap::new();
    let mut defs: Vec<(Variable, Term)> = Vec::new();

    let rewritten: Vec<Term> = problem
        .constraints
        .iter()
        .map(|c| {
            c.rewrite_bottom_up(&mut |t| {
                let Some((_, args)) = t.as_call() else {
                    return t;
                };
                if args.iter().all(|a| a.as_var().is_some()) {
                    return t;
                }
                let new_args = args
                    .iter()
                    .map(|a| {
                        if a.as_var().is_some() {
                            return a.clone();
                        }
                        let name = bound.entry(a.clone()).or_insert_with(|| {
                            let name = names.fresh(&format!("arg!{}", defs.len()));
                            defs.push((Variable::new(name.clone(), a.sort()), a.clone()));
                            name
                        });
                        Term::var(name.clone(), a.sort())
                    })
                    .collect();
                t.with_children(new_args)
            })
        })
        .collect();

    if defs.is_empty() {
        return problem.clone();
    }

    let mut out = problem.clone();
    out.inputs.extend(defs.iter().map(|(v, _)| v.clone()));
    let assumptions = Term::and(
        defs.into_iter()
            .map(|(v, t)| Term::eq(v.term(), t))
            .collect(),
    );
    out.constraints = vec![Term::implies(assumptions, Term::and(rewritten))];
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CallSign {
    pub function: String,
    pub args: Vec<Variable>,
}

impl CallSign {
    /// Argument variables with repeats removed, in first-occurrence order.
    pub fn dependency_set(&self) -> Vec<Variable> {
        let mut seen = HashSet::new();
        self.args
            .iter()
            .filter(|v| seen.insert(v.name.clone()))
            .cloned()
            .collect()
    }
}

impl fmt::Display for CallSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.args.iter().map(|v| v.name.as_str()).collect();
        write!(f, "<{}>", names.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CallSignClass {
    Single,
    Multiple,
}

impl fmt::Display for CallSignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CallSignClass::Single => "single-callsign",
            CallSignClass::Multiple => "multiple-callsign",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionCallSigns {
    pub function: String,
    /// Distinct signatures in first-occurrence order.
    pub callsigns: Vec<CallSign>,
    pub invocations: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSignIndex {
    /// One entry per declared function, in declaration order.
    pub functions: Vec<FunctionCallSigns>,
    pub class: CallSignClass,
}

impl CallSignIndex {
    pub fn get(&self, function: &str) -> Option<&FunctionCallSigns> {
        self.functions.iter().find(|f| f.function == function)
    }

    pub fn callsigns(&self, function: &str) -> &[CallSign] {
        self.get(function)
            .map(|f| f.callsigns.as_slice())
            .unwrap_or(&[])
    }
}

impl fmt::Display for CallSignIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.functions {
            writeln!(
                f,
                "{}: {} invocation(s), {} callsign(s)",
                entry.function,
                entry.invocations,
                entry.callsigns.len()
            )?;
            for (j, cs) in entry.callsigns.iter().enumerate() {
                writeln!(f, "  [{j}] {cs}")?;
            }
        }
        writeln!(f, "class: {}", self.class)
    }
}

/// Computes call signatures over the constraints, left to right.
///
/// Panics if an application has a non-variable argument; run
/// [`normalize_arguments`] first.
pub fn analyze(problem: &SynthProblem) -> CallSignIndex {
    let mut functions: Vec<FunctionCallSigns> = problem
        .functions
        .iter()
        .map(|f| FunctionCallSigns {
            function: f.name.clone(),
            callsigns: Vec::new(),
            invocations: 0,
        })
        .collect();
    let slot: HashMap<&str, usize> = problem
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();

    for c in &problem.constraints {
        for call in c.calls() {
            let (name, args) = call.as_call().unwrap();
            let args: Vec<Variable> = args
                .iter()
                .map(|a| {
                    let v = a.as_var().unwrap_or_else(|| {
                        panic!("argument `{a}` of `{name}` is not a variable; normalize first")
                    });
                    Variable::new(v, a.sort())
                })
                .collect();
            let entry = &mut functions[slot[name]];
            entry.invocations += 1;
            let cs = CallSign {
                function: name.to_string(),
                args,
            };
            if !entry.callsigns.contains(&cs) {
                entry.callsigns.push(cs);
            }
        }
    }

    // A function that is never applied is unconstrained and does not make the
    // problem multiple-callsign.
    let class = if functions.iter().all(|f| f.callsigns.len() <= 1) {
        CallSignClass::Single
    } else {
        CallSignClass::Multiple
    };
    CallSignIndex { functions, class }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_problem;

    fn four_call_phi() -> SynthProblem {
        parse_problem(
            r#"
            (synth-fun f ((x Bool) (y Bool)) Bool)
            (declare-var a Bool) (declare-var b Bool) (declare-var c Bool)
            (constraint (and (f a b) (f b c) (f b a) (f a b)))
        "#,
        )
        .unwrap()
    }

    #[test]
    fn multiple_callsign_example() {
        let idx = analyze(&four_call_phi());
        let f = idx.get("f").unwrap();
        assert_eq!(f.invocations, 4);
        let sigs: Vec<String> = f.callsigns.iter().map(|c| c.to_string()).collect();
        assert_eq!(sigs, ["<a, b>", "<b, c>", "<b, a>"]);
        assert_eq!(idx.class, CallSignClass::Multiple);
    }

    #[test]
    fn identical_invocations_are_single() {
        let p = parse_problem(
            "(synth-fun f ((x Bool)) Bool) (declare-var a Bool) (constraint (and (f a) (not (f a))))",
        )
        .unwrap();
        let idx = analyze(&p);
        assert_eq!(idx.get("f").unwrap().callsigns.len(), 1);
        assert_eq!(idx.get("f").unwrap().invocations, 2);
        assert_eq!(idx.class, CallSignClass::Single);
    }

    #[test]
    fn two_single_functions_are_single() {
        let p = parse_problem(
            "(synth-fun f ((x Bool)) Bool) (synth-fun g ((x Bool)) Bool)
             (declare-var a Bool) (declare-var b Bool) (constraint (xor (f a) (g b)))",
        )
        .unwrap();
        assert_eq!(analyze(&p).class, CallSignClass::Single);
    }

    #[test]
    fn normalization_introduces_assumed_inputs() {
        let p = parse_problem(
            "(synth-fun f ((x (_ BitVec 2))) (_ BitVec 2))
             (declare-var a (_ BitVec 2)) (declare-var b (_ BitVec 2))
             (constraint (= (f (bvadd a b)) (f (bvadd a b))))",
        )
        .unwrap();
        let n = normalize_arguments(&p);
        assert_eq!(n.inputs.len(), 3);
        assert_eq!(n.inputs[2].name, "arg!0");
        assert_eq!(
            n.constraints[0].to_string(),
            "(=> (= arg!0 (bvadd a b)) (= (f arg!0) (f arg!0)))"
        );
        n.validate().unwrap();
        let idx = analyze(&n);
        assert_eq!(idx.class, CallSignClass::Single);
    }

    #[test]
    fn normalization_is_identity_on_variable_arguments() {
        let p = four_call_phi();
        assert_eq!(normalize_arguments(&p), p);
    }

    #[test]
    fn nested_applications_are_flattened() {
        let p = parse_problem(
            "(synth-fun f ((x Bool)) Bool) (synth-fun g ((x Bool)) Bool)
             (declare-var a Bool) (constraint (f (g (not a))))",
        )
        .unwrap();
        let n = normalize_arguments(&p);
        assert_eq!(
            n.constraints[0].to_string(),
            "(=> (and (= arg!0 (not a)) (= arg!1 (g arg!0))) (f arg!1))"
        );
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let mut names = FreshNames::new(["arg!0".to_string()].into_iter().collect());
        assert_eq!(names.fresh("arg!0"), "arg!0~1");
        assert_eq!(names.fresh("arg!0"), "arg!0~2");
        assert_eq!(names.fresh("z"), "z");
    }
}
