use std::fmt::Write;

use super::{FunctionDefinition, SynthProblem, Variable};

fn params(ps: &[Variable]) -> String {
    let inner: Vec<String> = ps
        .iter()
        .map(|p| format!("({} {})", p.name, p.sort))
        .collect();
    format!("({})", inner.join(" "))
}

/// One `define-fun` per line.
pub fn emit_definitions(defs: &[FunctionDefinition]) -> String {
    let mut out = String::new();
    for d in defs {
        writeln!(
            out,
            "(define-fun {} {} {} {})",
            d.name,
            params(&d.params),
            d.ret,
            d.body
        )
        .unwrap();
    }
    out
}

/// Prints a problem in the accepted input syntax. Grammars are not printed.
pub fn print_problem(p: &SynthProblem) -> String {
    let mut out = String::from("(set-logic BV)\n");
    for f in &p.functions {
        writeln!(
            out,
            "(synth-fun {} {} {})",
            f.name,
            params(&f.params),
            f.ret
        )
        .unwrap();
    }
    for v in &p.inputs {
        writeln!(out, "(declare-var {} {})", v.name, v.sort).unwrap();
    }
    for c in &p.constraints {
        writeln!(out, "(constraint {c})").unwrap();
    }
    out.push_str("(check-synth)\n");
    out
}
