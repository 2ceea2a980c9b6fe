//! Reduction of multiple-callsign problems to single-callsign problems.
//!
//! For a function `f` with call signatures `s_0 .. s_{l-1}` (l > 1), every
//! application `f(s_j)` becomes `f!j(s_j)`, a fresh block of universal inputs
//! `Z` is introduced, and for each `j` the constraint
//! `(s_j = Z) => f!j(s_j) = f!l(Z)` is conjoined. The canonical symbol `f!l`
//! is the function that is finally synthesized for `f`. Agreement through the
//! canonical symbol keeps the encoding linear in the number of signatures.

use std::collections::HashMap;
use std::fmt;

use crate::callsig::{CallSignIndex, FreshNames};
use crate::frontend::{SynthFun, SynthProblem, Term, Variable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementConstraint {
    /// Component-wise equality of the call arguments with `Z`.
    pub guard: Term,
    /// `f!j(args) = f!l(Z)`.
    pub consequence: Term,
}

impl AgreementConstraint {
    pub fn to_term(&self) -> Term {
        Term::implies(self.guard.clone(), self.consequence.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AckermannEntry {
    pub original: String,
    pub z: Vec<Variable>,
    /// `f!0 .. f!{l-1}`, one per call signature.
    pub renamed: Vec<String>,
    /// `f!l`.
    pub canonical: String,
    pub constraints: Vec<AgreementConstraint>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AckermannTrace {
    pub entries: Vec<AckermannEntry>,
}

impl AckermannTrace {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The symbol whose solution is the solution of `original`.
    pub fn canonical_of(&self, original: &str) -> Option<&AckermannEntry> {
        self.entries.iter().find(|e| e.original == original)
    }
}

impl fmt::Display for AckermannTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return writeln!(f, "no multiple-callsign functions");
        }
        for e in &self.entries {
            let z: Vec<String> =
                e.z.iter()
                    .map(|v| format!("({} {})", v.name, v.sort))
                    .collect();
            writeln!(
                f,
                "{} -> [{}], canonical {} over ({})",
                e.original,
                e.renamed.join(", "),
                e.canonical,
                z.join(" ")
            )?;
            for c in &e.constraints {
                writeln!(f, "  {}", c.to_term())?;
            }
        }
        Ok(())
    }
}

/// Number of fresh universal variables [`to_single_callsign`] will add.
pub fn fresh_variable_budget(index: &CallSignIndex) -> usize {
    index
        .functions
        .iter()
        .filter(|f| f.callsigns.len() > 1)
        .map(|f| f.callsigns[0].args.len())
        .sum()
}

/// Makes every function single-callsign. Problems that already are come back
/// unchanged with an empty trace.
pub fn to_single_callsign(
    problem: &SynthProblem,
    index: &CallSignIndex,
) -> (SynthProblem, AckermannTrace) {
    let mut names = FreshNames::for_problem(problem);
    let mut trace = AckermannTrace::default();
    let mut functions: Vec<SynthFun> = Vec::new();
    let mut inputs = problem.inputs.clone();
    // (original, args) -> renamed symbol
    let mut renaming: HashMap<(String, Vec<String>), String> = HashMap::new();

    for f in &problem.functions {
        let sigs = index.callsigns(&f.name);
        if sigs.len() <= 1 {
            functions.push(f.clone());
            continue;
        }
        let arity = sigs[0].args.len();
        for s in sigs {
            let sorts: Vec<_> = s.args.iter().map(|v| v.sort).collect();
            assert!(
                s.args.len() == arity && sorts == f.param_sorts(),
                "call signature {s} of `{}` disagrees with its declaration",
                f.name
            );
        }
        let l = sigs.len();
        let z: Vec<Variable> = sigs[0]
            .args
            .iter()
            .enumerate()
            .map(|(k, v)| Variable::new(names.fresh(&format!("{}!z{}", f.name, k + 1)), v.sort))
            .collect();
        let renamed: Vec<String> = (0..l)
            .map(|j| names.fresh(&format!("{}!{j}", f.name)))
            .collect();
        let canonical = names.fresh(&format!("{}!{l}", f.name));
        let z_terms: Vec<Term> = z.iter().map(Variable::term).collect();
        let canonical_call = Term::call(canonical.clone(), z_terms.clone(), f.ret);

        let mut constraints = Vec::with_capacity(l);
        for (j, s) in sigs.iter().enumerate() {
            let args: Vec<Term> = s.args.iter().map(Variable::term).collect();
            let guard = Term::and(
                args.iter()
                    .zip(&z_terms)
                    .map(|(a, z)| Term::eq(a.clone(), z.clone()))
                    .collect(),
            );
            let consequence = Term::eq(
                Term::call(renamed[j].clone(), args, f.ret),
                canonical_call.clone(),
            );
            constraints.push(AgreementConstraint { guard, consequence });
            renaming.insert(
                (
                    f.name.clone(),
                    s.args.iter().map(|v| v.name.clone()).collect(),
                ),
                renamed[j].clone(),
            );
        }

        for name in renamed.iter().chain(std::iter::once(&canonical)) {
            functions.push(SynthFun {
                name: name.clone(),
                params: f.params.clone(),
                ret: f.ret,
            });
        }
        inputs.extend(z.iter().cloned());
        trace.entries.push(AckermannEntry {
            original: f.name.clone(),
            z,
            renamed,
            canonical,
            constraints,
        });
    }

    if trace.is_empty() {
        return (problem.clone(), trace);
    }

    let mut constraints: Vec<Term> = problem
        .constraints
        .iter()
        .map(|c| {
            c.rewrite_bottom_up(&mut |t| {
                let Some((name, args)) = t.as_call() else {
                    return t;
                };
                let key = (
                    name.to_string(),
                    args.iter()
                        .map(|a| {
                            a.as_var()
                                .expect("arguments must be normalized")
                                .to_string()
                        })
                        .collect(),
                );
                match renaming.get(&key) {
                    Some(new_name) => Term::call(new_name.clone(), args.to_vec(), t.sort()),
                    None => t,
                }
            })
        })
        .collect();
    constraints.extend(
        trace
            .entries
            .iter()
            .flat_map(|e| e.constraints.iter().map(AgreementConstraint::to_term)),
    );

    let out = SynthProblem {
        inputs,
        functions,
        constraints,
        source_grammars: problem.source_grammars.clone(),
    };
    (out, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::callsig::{analyze, CallSignClass};
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
    fn four_invocation_structure() {
        let p = four_call_phi();
        let idx = analyze(&p);
        assert_eq!(fresh_variable_budget(&idx), 2);
        let (out, trace) = to_single_callsign(&p, &idx);
        let names: Vec<&str> = out.functions.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["f!0", "f!1", "f!2", "f!3"]);
        let inputs: Vec<&str> = out.inputs.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(inputs, ["a", "b", "c", "f!z1", "f!z2"]);
        assert_eq!(
            out.constraints[0].to_string(),
            "(and (f!0 a b) (f!1 b c) (f!2 b a) (f!0 a b))"
        );
        assert_eq!(out.constraints.len(), 4);
        assert_eq!(
            out.constraints[1].to_string(),
            "(=> (and (= a f!z1) (= b f!z2)) (= (f!0 a b) (f!3 f!z1 f!z2)))"
        );
        assert_eq!(
            out.constraints[2].to_string(),
            "(=> (and (= b f!z1) (= c f!z2)) (= (f!1 b c) (f!3 f!z1 f!z2)))"
        );
        assert_eq!(
            out.constraints[3].to_string(),
            "(=> (and (= b f!z1) (= a f!z2)) (= (f!2 b a) (f!3 f!z1 f!z2)))"
        );
        let e = trace.canonical_of("f").unwrap();
        assert_eq!(e.canonical, "f!3");
        assert_eq!(e.z.len(), 2);

        let after = analyze(&out);
        assert_eq!(after.class, CallSignClass::Single);
        assert!(after.functions.iter().all(|f| f.callsigns.len() == 1));
        out.validate().unwrap();
    }

    #[test]
    fn single_callsign_is_unchanged() {
        let p =
            parse_problem("(synth-fun f ((x Bool)) Bool) (declare-var a Bool) (constraint (f a))")
                .unwrap();
        let idx = analyze(&p);
        assert_eq!(fresh_variable_budget(&idx), 0);
        let (out, trace) = to_single_callsign(&p, &idx);
        assert_eq!(out, p);
        assert!(trace.is_empty());
    }

    #[test]
    fn budget_sums_arities() {
        let p = parse_problem(
            "(synth-fun f ((x Bool) (y Bool) (z Bool)) Bool) (synth-fun g ((x Bool)) Bool)
             (declare-var a Bool) (declare-var b Bool)
             (constraint (and (f a a b) (f b a a) (g a) (g b)))",
        )
        .unwrap();
        assert_eq!(fresh_variable_budget(&analyze(&p)), 4);
    }

    #[test]
    fn fresh_symbols_do_not_collide() {
        let p = parse_problem(
            "(synth-fun f ((x Bool)) Bool) (declare-var f!z1 Bool) (declare-var b Bool)
             (constraint (and (f f!z1) (f b)))",
        )
        .unwrap();
        let (out, _) = to_single_callsign(&p, &analyze(&p));
        out.validate().unwrap();
        assert!(out.input("f!z1~1").is_some());
    }
}
