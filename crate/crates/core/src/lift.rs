//! Lifting propositional Henkin functions back to bitvector definitions.
//!
//! Each output bit becomes a Boolean term over single-bit tests
//! `(= ((_ extract k k) p) #b1)` of the function's parameters; the bits are
//! recombined with `concat`, most significant first. A small simplifier
//! cleans up the result.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ackermann::AckermannTrace;
use crate::bitblast::{blast, Var};
use crate::dqf::{DqfFormula, HenkinVar};
use crate::frontend::{
    apply, inline_definitions, BvConst, FunctionDefinition, Op, Sort, SynthProblem, Term, TermKind,
    Value, Variable,
};
use crate::sat::{sat_solve, Budget, SatResult};
use crate::solver::{BitFunction, Circuit, HenkinSolution, Node, NodeId};

/// Functions with at most this many inputs are re-tabulated before lifting.
const RETABULATE_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("no function for output bit {bit} of `{name}`")]
    MissingBit { name: String, bit: u32 },
    #[error("output `{0}` has no bit map entry")]
    MissingOutput(String),
    #[error("input bit {0} does not belong to a parameter of `{1}`")]
    UnmappedInput(Var, String),
    #[error("no definition for `{0}`")]
    MissingDefinition(String),
    #[error("definition of `{name}` does not match its declaration")]
    SignatureMismatch { name: String },
    #[error("definition of `{name}` refers to `{var}`, which is not a parameter")]
    ForeignVariable { name: String, var: String },
}

/// Lifts a solution of `blast(dqf)` to one definition per synthesized
/// function of the problem `dqf` was built from. With a non-empty trace the
/// definitions are named after the original functions and taken from the
/// canonical copies.
pub fn lift(
    sol: &HenkinSolution,
    dqf: &DqfFormula,
    trace: &AckermannTrace,
) -> Result<Vec<FunctionDefinition>, LiftError> {
    let mut defs = Vec::new();
    for y in &dqf.existentials {
        let function = &y.origin.function;
        let name = if let Some(e) = trace.entries.iter().find(|e| &e.canonical == function) {
            e.original.clone()
        } else if trace.entries.iter().any(|e| e.renamed.contains(function)) {
            continue;
        } else {
            function.clone()
        };
        defs.push(lift_output(sol, y, name)?);
    }
    Ok(defs)
}

fn lift_output(
    sol: &HenkinSolution,
    y: &HenkinVar,
    name: String,
) -> Result<FunctionDefinition, LiftError> {
    let params = &y.origin.params;
    // Universal name -> parameter (first position it is passed in).
    let mut param_of: HashMap<&str, &Variable> = HashMap::new();
    for (arg, p) in y.origin.args.iter().zip(params) {
        param_of.entry(arg.name.as_str()).or_insert(p);
    }
    let test = |v: Var| -> Result<Term, LiftError> {
        let (input, k) = sol
            .bitmap
            .lookup(v)
            .ok_or_else(|| LiftError::UnmappedInput(v, name.clone()))?;
        let p = param_of
            .get(input)
            .ok_or_else(|| LiftError::UnmappedInput(v, name.clone()))?;
        Ok(match p.sort {
            Sort::Bool => p.term(),
            Sort::BitVec(_) => Term::eq(Term::extract(k, k, p.term()), Term::bv_value(1, 1)),
        })
    };
    let entry = sol
        .bitmap
        .get(&y.var.name)
        .ok_or_else(|| LiftError::MissingOutput(y.var.name.clone()))?;
    let mut bits = Vec::with_capacity(entry.bits.len());
    for (k, &b) in entry.bits.iter().enumerate() {
        let f = sol.function(b).ok_or_else(|| LiftError::MissingBit {
            name: name.clone(),
            bit: k as u32,
        })?;
        bits.push(bit_term(f, &test)?);
    }
    let body = match y.var.sort {
        Sort::Bool => bits.pop().expect("one bit"),
        Sort::BitVec(_) => {
            let mut words = bits.into_iter().rev().map(bool_to_bit);
            let first = words.next().expect("width >= 1");
            words.fold(first, Term::concat)
        }
    };
    Ok(FunctionDefinition {
        name,
        params: params.clone(),
        ret: y.var.sort,
        body: simplify(&body),
    })
}

fn bool_to_bit(b: Term) -> Term {
    Term::ite(b, Term::bv_value(1, 1), Term::bv_value(1, 0))
}

/// Boolean term for one bit function.
fn bit_term(
    f: &BitFunction,
    test: &dyn Fn(Var) -> Result<Term, LiftError>,
) -> Result<Term, LiftError> {
    let (circuit, root) = f.to_circuit();
    let direct = circuit_term(&circuit, root, test)?;
    let support: Vec<Var> = circuit.inputs(root).into_iter().collect();
    if matches!(f, BitFunction::Table { .. }) || support.len() > RETABULATE_LIMIT {
        return Ok(direct);
    }
    let rows: Vec<bool> = (0usize..1 << support.len())
        .map(|r| {
            circuit.eval(root, &|v| {
                support
                    .iter()
                    .position(|&s| s == v)
                    .is_some_and(|k| (r >> k) & 1 == 1)
            })
        })
        .collect();
    let mut tree = Circuit::new();
    let troot = tree.from_table(&support, &rows);
    let tabulated = circuit_term(&tree, troot, test)?;
    Ok(if tabulated.size() < direct.size() {
        tabulated
    } else {
        direct
    })
}

fn circuit_term(
    c: &Circuit,
    root: NodeId,
    test: &dyn Fn(Var) -> Result<Term, LiftError>,
) -> Result<Term, LiftError> {
    let mut terms: BTreeMap<NodeId, Term> = BTreeMap::new();
    for id in c.reachable(root) {
        let t = match c.node(id) {
            Node::Const(b) => Term::bool(b),
            Node::Input(v) => test(v)?,
            Node::Not(a) => Term::not(terms[&a].clone()),
            Node::And(a, b) => Term::and(vec![terms[&a].clone(), terms[&b].clone()]),
            Node::Or(a, b) => Term::or(vec![terms[&a].clone(), terms[&b].clone()]),
            Node::Ite(x, t, e) => {
                Term::ite(terms[&x].clone(), terms[&t].clone(), terms[&e].clone())
            }
        };
        terms.insert(id, t);
    }
    Ok(terms.remove(&root).unwrap())
}

fn bv_const(t: &Term) -> Option<BvConst> {
    match t.kind() {
        TermKind::BvConst(c) => Some(*c),
        _ => None,
    }
}

fn is_bit(t: &Term, v: u128) -> bool {
    bv_const(t) == Some(BvConst::new(1, v))
}

fn as_extract(t: &Term) -> Option<(u32, u32, &Term)> {
    match t.kind() {
        TermKind::App(Op::Extract { hi, lo }, a) => Some((*hi, *lo, &a[0])),
        _ => None,
    }
}

fn as_constant(t: &Term) -> Option<Value> {
    match t.kind() {
        TermKind::BoolConst(b) => Some(Value::Bool(*b)),
        TermKind::BvConst(c) => Some(Value::Bv(*c)),
        _ => None,
    }
}

fn fuse(hi: &Term, lo: &Term) -> Option<Term> {
    let (h1, l1, a) = as_extract(hi)?;
    let (h2, l2, b) = as_extract(lo)?;
    (a == b && l1 == h2 + 1).then(|| simplify_node(Term::extract(h1, l2, a.clone())))
}

fn simplify_node(t: Term) -> Term {
    let TermKind::App(op, args) = t.kind() else {
        return t;
    };
    if !args.is_empty() {
        if let Some(vals) = args.iter().map(as_constant).collect::<Option<Vec<_>>>() {
            return apply(*op, &vals).to_term();
        }
    }
    match op {
        Op::Not => match args[0].kind() {
            TermKind::App(Op::Not, inner) => inner[0].clone(),
            _ => t,
        },
        Op::BvNot => match args[0].kind() {
            TermKind::App(Op::BvNot, inner) => inner[0].clone(),
            _ => t,
        },
        Op::And | Op::Or => {
            let unit = *op == Op::And;
            if args
                .iter()
                .any(|a| as_constant(a) == Some(Value::Bool(!unit)))
            {
                return Term::bool(!unit);
            }
            let kept: Vec<Term> = args
                .iter()
                .filter(|a| as_constant(a) != Some(Value::Bool(unit)))
                .cloned()
                .collect();
            if kept.len() == args.len() {
                t
            } else if unit {
                Term::and(kept)
            } else {
                Term::or(kept)
            }
        }
        Op::Ite => {
            let (c, a, b) = (&args[0], &args[1], &args[2]);
            if c.is_true() || a == b {
                return a.clone();
            }
            if c.is_false() {
                return b.clone();
            }
            if a.is_true() && b.is_false() {
                return c.clone();
            }
            if a.is_false() && b.is_true() {
                return simplify_node(Term::not(c.clone()));
            }
            // ite((= x #b1), #b1, #b0) on a single bit x is x itself.
            if let TermKind::App(Op::Eq, eq) = c.kind() {
                if eq[0].sort() == Sort::BitVec(1) && is_bit(&eq[1], 1) {
                    if is_bit(a, 1) && is_bit(b, 0) {
                        return eq[0].clone();
                    }
                    if is_bit(a, 0) && is_bit(b, 1) {
                        return simplify_node(Term::app(Op::BvNot, vec![eq[0].clone()]).unwrap());
                    }
                }
            }
            t
        }
        Op::Eq => {
            // (= (ite c #b1 #b0) #b1) is c.
            if is_bit(&args[1], 1) {
                if let TermKind::App(Op::Ite, ite) = args[0].kind() {
                    if is_bit(&ite[1], 1) && is_bit(&ite[2], 0) {
                        return ite[0].clone();
                    }
                }
            }
            t
        }
        Op::Extract { hi, lo } => {
            if *lo == 0 && hi + 1 == args[0].sort().bits() {
                return args[0].clone();
            }
            if let Some((_, l, inner)) = as_extract(&args[0]) {
                return simplify_node(Term::extract(hi + l, lo + l, inner.clone()));
            }
            t
        }
        Op::Concat => {
            let (hi, lo) = (&args[0], &args[1]);
            if let Some(f) = fuse(hi, lo) {
                return f;
            }
            // (concat (concat a x) y) with x, y adjacent extracts.
            if let TermKind::App(Op::Concat, inner) = hi.kind() {
                if let Some(f) = fuse(&inner[1], lo) {
                    return simplify_node(Term::concat(inner[0].clone(), f));
                }
            }
            t
        }
        _ => t,
    }
}

/// Semantics-preserving cleanup: constant folding, double negation,
/// extract/concat fusion and single-bit `ite` removal.
pub fn simplify(t: &Term) -> Term {
    t.rewrite_bottom_up(&mut simplify_node)
}

/// Outcome of checking definitions against a problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiftedVerification {
    Valid,
    /// Input values under which some constraint fails.
    Counterexample(BTreeMap<String, Value>),
}

impl LiftedVerification {
    pub fn is_valid(&self) -> bool {
        *self == LiftedVerification::Valid
    }
}

/// Substitutes `defs` into `problem` and checks validity with the SAT core.
pub fn verify_lifted(
    defs: &[FunctionDefinition],
    problem: &SynthProblem,
) -> Result<LiftedVerification, LiftError> {
    for f in &problem.functions {
        let d = defs
            .iter()
            .find(|d| d.name == f.name)
            .ok_or_else(|| LiftError::MissingDefinition(f.name.clone()))?;
        if d.ret != f.ret || d.params.iter().map(|p| p.sort).ne(f.param_sorts()) {
            return Err(LiftError::SignatureMismatch {
                name: d.name.clone(),
            });
        }
        if let Some(var) = d
            .body
            .free_vars()
            .into_iter()
            .find(|v| !d.params.iter().any(|p| &p.name == v))
        {
            return Err(LiftError::ForeignVariable {
                name: d.name.clone(),
                var,
            });
        }
    }
    let body = Term::not(inline_definitions(&problem.spec(), defs));
    let formula = DqfFormula {
        universals: problem.inputs.clone(),
        existentials: vec![],
        body,
    };
    let inst = blast(&formula).expect("inlined constraints are closed over the inputs");
    match sat_solve(&inst.clauses, inst.num_vars, &Budget::unlimited()) {
        Ok(SatResult::Unsat) => Ok(LiftedVerification::Valid),
        Ok(SatResult::Sat(m)) => {
            let mut cex = BTreeMap::new();
            for x in &problem.inputs {
                let bits: Vec<bool> = inst
                    .bitmap
                    .get(&x.name)
                    .unwrap()
                    .bits
                    .iter()
                    .map(|&b| m.value(b))
                    .collect();
                let v = match x.sort {
                    Sort::Bool => Value::Bool(bits[0]),
                    Sort::BitVec(_) => Value::Bv(BvConst::from_bits(&bits)),
                };
                cex.insert(x.name.clone(), v);
            }
            Ok(LiftedVerification::Counterexample(cex))
        }
        Err(_) => unreachable!("unlimited budget"),
    }
}
