//! DQDIMACS / QDIMACS reading and writing.
//!
//! Written files have the shape
//!
//! ```text
//! c bv in a 1 2          (bit map: one line per bitvector variable, LSB first)
//! c bv out f!out 3 4
//! p cnf <vars> <clauses>
//! a <universals> 0
//! e <existentials depending on all universals> 0
//! d <existential> <dependencies> 0
//! <clauses>
//! ```
//!
//! The `e` line holds auxiliaries and every existential whose dependency set
//! is the full universal set; a 2-QBF instance therefore has no `d` lines and
//! is plain QDIMACS. Empty prefix lines are omitted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write;

use log::warn;
use thiserror::Error;

use crate::bitblast::{BitMap, BitRole, DqbfInstance, Existential, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefixKind {
    Universal,
    Existential,
    Dependency,
}

/// One quantifier line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixLine {
    pub kind: PrefixKind,
    pub vars: Vec<Var>,
    /// Only for `d` lines.
    pub deps: Vec<Var>,
}

impl PrefixLine {
    fn render(&self) -> String {
        let head = match self.kind {
            PrefixKind::Universal => "a",
            PrefixKind::Existential => "e",
            PrefixKind::Dependency => "d",
        };
        let mut s = head.to_string();
        for v in self.vars.iter().chain(&self.deps) {
            write!(s, " {v}").unwrap();
        }
        s.push_str(" 0");
        s
    }
}

/// The quantifier prefix as it will be written.
pub fn prefix_lines(instance: &DqbfInstance) -> Vec<PrefixLine> {
    let all: HashSet<Var> = instance.universals.iter().copied().collect();
    let mut lines = Vec::new();
    if !instance.universals.is_empty() {
        lines.push(PrefixLine {
            kind: PrefixKind::Universal,
            vars: instance.universals.clone(),
            deps: vec![],
        });
    }
    let full = |e: &Existential| e.deps.iter().copied().collect::<HashSet<_>>() == all;
    let e_block: Vec<Var> = instance
        .existentials
        .iter()
        .filter(|e| full(e))
        .map(|e| e.var)
        .chain(instance.auxiliaries.iter().copied())
        .collect();
    if !e_block.is_empty() {
        lines.push(PrefixLine {
            kind: PrefixKind::Existential,
            vars: e_block,
            deps: vec![],
        });
    }
    for e in instance.existentials.iter().filter(|e| !full(e)) {
        lines.push(PrefixLine {
            kind: PrefixKind::Dependency,
            vars: vec![e.var],
            deps: e.deps.clone(),
        });
    }
    lines
}

pub fn write_dqdimacs(instance: &DqbfInstance) -> String {
    let mut out = String::new();
    for entry in instance.bitmap.entries() {
        let role = match entry.role {
            BitRole::Input => "in",
            BitRole::Output => "out",
        };
        write!(out, "c bv {role} {}", entry.name).unwrap();
        for b in &entry.bits {
            write!(out, " {b}").unwrap();
        }
        out.push('\n');
    }
    writeln!(
        out,
        "p cnf {} {}",
        instance.num_vars,
        instance.clauses.len()
    )
    .unwrap();
    for line in prefix_lines(instance) {
        out.push_str(&line.render());
        out.push('\n');
    }
    for c in &instance.clauses {
        for l in c {
            write!(out, "{l} ").unwrap();
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {0}: malformed header: {1}")]
    MalformedHeader(usize, String),
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("line {line}: variable {var} is not declared in the prefix")]
    Undeclared { line: usize, var: Var },
    #[error("line {0}: variable {1} is quantified twice")]
    Duplicate(usize, Var),
    #[error("line {0}: quantifier alternation deeper than forall-exists is not supported")]
    Alternation(usize),
    #[error("clause not terminated by 0 at end of input")]
    Unterminated,
}

/// Parses QDIMACS (`a`/`e` lines) or DQDIMACS (`a`/`e`/`d` lines).
///
/// Variables on `e` lines depend on every universal. A universal block after
/// an existential one is rejected, as are variables that are used in clauses
/// without being quantified.
pub fn parse_qdimacs(text: &str) -> Result<DqbfInstance, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut universals: Vec<Var> = Vec::new();
    let mut existentials: Vec<Existential> = Vec::new();
    let mut declared: HashSet<Var> = HashSet::new();
    let mut seen_existential = false;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut pending: Vec<i32> = Vec::new();
    let mut bitmap = BitMap::default();
    let mut in_matrix = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('c') {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if let ["bv", role, name, ids @ ..] = toks.as_slice() {
                    let role = match *role {
                        "in" => Some(BitRole::Input),
                        "out" => Some(BitRole::Output),
                        _ => None,
                    };
                    let ids: Option<Vec<Var>> = ids.iter().map(|t| t.parse().ok()).collect();
                    if let (Some(role), Some(ids)) = (role, ids) {
                        bitmap.push(*name, role, ids);
                    }
                }
                continue;
            }
        }
        let mut toks = line.split_whitespace();
        let first = toks.next().unwrap();
        if first == "p" {
            if header.is_some() {
                return Err(DimacsError::MalformedHeader(lineno, "second header".into()));
            }
            let rest: Vec<&str> = toks.collect();
            match rest.as_slice() {
                ["cnf", v, c] => {
                    let v = v.parse().map_err(|_| {
                        DimacsError::MalformedHeader(lineno, format!("bad variable count `{v}`"))
                    })?;
                    let c = c.parse().map_err(|_| {
                        DimacsError::MalformedHeader(lineno, format!("bad clause count `{c}`"))
                    })?;
                    header = Some((v, c));
                }
                _ => {
                    return Err(DimacsError::MalformedHeader(
                        lineno,
                        "expected `p cnf <vars> <clauses>`".into(),
                    ))
                }
            }
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(DimacsError::MalformedHeader(
                lineno,
                "missing `p cnf` header".into(),
            ));
        };
        let parse_var = |t: &str| -> Result<Var, DimacsError> {
            let v: Var = t
                .parse()
                .map_err(|_| DimacsError::Syntax(lineno, format!("bad variable `{t}`")))?;
            if v == 0 || v > num_vars {
                return Err(DimacsError::Syntax(
                    lineno,
                    format!("variable {v} out of range"),
                ));
            }
            Ok(v)
        };
        let terminated_vars = |toks: Vec<&str>| -> Result<Vec<Var>, DimacsError> {
            match toks.split_last() {
                Some((&"0", body)) => body.iter().map(|t| parse_var(t)).collect(),
                _ => Err(DimacsError::Syntax(
                    lineno,
                    "prefix line must end with 0".into(),
                )),
            }
        };
        match first {
            "a" | "e" | "d" if in_matrix => {
                return Err(DimacsError::Syntax(
                    lineno,
                    "quantifier after clauses".into(),
                ));
            }
            "a" => {
                if seen_existential {
                    return Err(DimacsError::Alternation(lineno));
                }
                for v in terminated_vars(toks.collect())? {
                    if !declared.insert(v) {
                        return Err(DimacsError::Duplicate(lineno, v));
                    }
                    universals.push(v);
                }
            }
            "e" => {
                seen_existential = true;
                for v in terminated_vars(toks.collect())? {
                    if !declared.insert(v) {
                        return Err(DimacsError::Duplicate(lineno, v));
                    }
                    existentials.push(Existential {
                        var: v,
                        deps: universals.clone(),
                    });
                }
            }
            "d" => {
                seen_existential = true;
                let vars = terminated_vars(toks.collect())?;
                let Some((&var, deps)) = vars.split_first() else {
                    return Err(DimacsError::Syntax(lineno, "empty `d` line".into()));
                };
                if let Some(&bad) = deps.iter().find(|d| !universals.contains(d)) {
                    return Err(DimacsError::Syntax(
                        lineno,
                        format!("dependency {bad} is not a previously declared universal"),
                    ));
                }
                if !declared.insert(var) {
                    return Err(DimacsError::Duplicate(lineno, var));
                }
                existentials.push(Existential {
                    var,
                    deps: deps.to_vec(),
                });
            }
            _ => {
                in_matrix = true;
                for t in std::iter::once(first).chain(toks) {
                    let l: i32 = t
                        .parse()
                        .map_err(|_| DimacsError::Syntax(lineno, format!("bad literal `{t}`")))?;
                    if l == 0 {
                        clauses.push(std::mem::take(&mut pending));
                        continue;
                    }
                    let v = l.unsigned_abs();
                    if !declared.contains(&v) {
                        return Err(DimacsError::Undeclared {
                            line: lineno,
                            var: v,
                        });
                    }
                    pending.push(l);
                }
            }
        }
    }
    if !pending.is_empty() {
        return Err(DimacsError::Unterminated);
    }
    let Some((num_vars, num_clauses)) = header else {
        return Err(DimacsError::MalformedHeader(
            0,
            "missing `p cnf` header".into(),
        ));
    };
    if num_clauses != clauses.len() {
        warn!(
            "header announces {num_clauses} clauses, found {}",
            clauses.len()
        );
    }
    Ok(DqbfInstance {
        num_vars,
        universals,
        existentials,
        auxiliaries: Vec::new(),
        clauses,
        bitmap,
    })
}

/// Quantifier structure as a map from existential to dependency set.
pub fn dependency_map(instance: &DqbfInstance) -> BTreeMap<Var, BTreeSet<Var>> {
    instance
        .all_existentials()
        .into_iter()
        .map(|(v, deps)| (v, deps.into_iter().collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> DqbfInstance {
        DqbfInstance {
            num_vars: 3,
            universals: vec![1, 2],
            existentials: vec![Existential {
                var: 3,
                deps: vec![1],
            }],
            auxiliaries: vec![],
            clauses: vec![vec![3, -1], vec![-3, 1]],
            bitmap: BitMap::default(),
        }
    }

    #[test]
    fn hand_assembled_instance() {
        let text = write_dqdimacs(&minimal());
        assert_eq!(text, "p cnf 3 2\na 1 2 0\nd 3 1 0\n3 -1 0\n-3 1 0\n");
        let back = parse_qdimacs(&text).unwrap();
        assert_eq!(back, minimal());
    }

    #[test]
    fn two_qbf_has_no_d_lines() {
        let mut inst = minimal();
        inst.existentials[0].deps = vec![1, 2];
        let text = write_dqdimacs(&inst);
        assert_eq!(text, "p cnf 3 2\na 1 2 0\ne 3 0\n3 -1 0\n-3 1 0\n");
    }

    #[test]
    fn empty_clause_list() {
        let mut inst = minimal();
        inst.clauses.clear();
        assert_eq!(write_dqdimacs(&inst), "p cnf 3 0\na 1 2 0\nd 3 1 0\n");
    }

    #[test]
    fn smallest_forall_exists() {
        let inst = parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n2 -1 0\n").unwrap();
        assert_eq!(inst.universals, vec![1]);
        assert_eq!(
            inst.existentials,
            vec![Existential {
                var: 2,
                deps: vec![1]
            }]
        );
        assert_eq!(inst.clauses, vec![vec![2, -1]]);
    }

    #[test]
    fn explicit_dependencies() {
        let inst = parse_qdimacs("p cnf 3 1\na 1 2 0\nd 3 1 0\n3 1 2 0\n").unwrap();
        assert_eq!(inst.existentials[0].deps, vec![1]);
        assert!(!inst.is_2qbf());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_qdimacs("p dnf 1 1\n"),
            Err(DimacsError::MalformedHeader(..))
        ));
        assert!(matches!(
            parse_qdimacs("a 1 0\n"),
            Err(DimacsError::MalformedHeader(..))
        ));
        assert!(matches!(
            parse_qdimacs("p cnf 2 1\na 1 0\n1 2 0\n"),
            Err(DimacsError::Undeclared { var: 2, .. })
        ));
        assert_eq!(
            parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1 2\n"),
            Err(DimacsError::Unterminated)
        );
        assert!(matches!(
            parse_qdimacs("p cnf 3 0\na 1 0\ne 2 0\na 3 0\n"),
            Err(DimacsError::Alternation(4))
        ));
        assert!(matches!(
            parse_qdimacs("p cnf 3 0\na 1 0\nd 2 3 0\n"),
            Err(DimacsError::Syntax(..))
        ));
    }

    #[test]
    fn bitmap_comments_round_trip() {
        let mut inst = minimal();
        inst.bitmap.push("x", BitRole::Input, vec![1, 2]);
        inst.bitmap.push("f!out", BitRole::Output, vec![3]);
        let text = write_dqdimacs(&inst);
        assert!(text.starts_with("c bv in x 1 2\nc bv out f!out 3\np cnf"));
        let back = parse_qdimacs(&text).unwrap();
        assert_eq!(back.bitmap, inst.bitmap);
        assert_eq!(write_dqdimacs(&back), text);
    }

    #[test]
    fn clauses_may_span_lines() {
        let inst = parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1\n-2 0\n").unwrap();
        assert_eq!(inst.clauses, vec![vec![1, -2]]);
    }
}
