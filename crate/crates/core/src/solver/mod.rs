//! Built-in certifying DQBF solving.
//!
//! [`solve_expansion`] decides any instance by universal expansion to SAT.
//! [`solve_2qbf`] is a counterexample-guided abstraction refinement loop for
//! instances whose existentials all depend on every universal. Both return a
//! [`HenkinSolution`] that [`verify_solution`] checks independently.

mod circuit;
mod expansion;
mod external;
mod qbf;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

pub use circuit::{Circuit, Node, NodeId};
pub use expansion::{solve_expansion, DEFAULT_EXPANSION_BOUND};
pub use external::{
    parse_certificate, run_external, write_certificate, ExternalError, ExternalOutcome,
};
pub use qbf::solve_2qbf;

use crate::bitblast::{Bit, BitMap, CnfBuilder, DqbfInstance, Var};
use crate::sat::{sat_solve, Budget, SatError, SatResult};

/// Functions over at most this many dependency bits are kept as tables.
pub const TABLE_LIMIT: usize = 10;

/// Total assignment to a set of propositional variables.
pub type Assignment = BTreeMap<Var, bool>;

#[derive(Clone, Debug)]
pub enum BitFunction {
    /// Row `r` is the output when `deps[k]` equals bit `k` of `r`.
    Table { deps: Vec<Var>, rows: Vec<bool> },
    Circuit {
        deps: Vec<Var>,
        circuit: Arc<Circuit>,
        root: NodeId,
    },
}

impl BitFunction {
    pub fn constant(value: bool) -> Self {
        BitFunction::Table {
            deps: vec![],
            rows: vec![value],
        }
    }

    /// A table for small dependency sets, a decision tree otherwise.
    pub fn from_rows(deps: Vec<Var>, rows: Vec<bool>) -> Self {
        if deps.len() <= TABLE_LIMIT {
            BitFunction::Table { deps, rows }
        } else {
            let mut c = Circuit::new();
            let root = c.from_table(&deps, &rows);
            BitFunction::Circuit {
                deps,
                circuit: Arc::new(c),
                root,
            }
        }
    }

    pub fn deps(&self) -> &[Var] {
        match self {
            BitFunction::Table { deps, .. } | BitFunction::Circuit { deps, .. } => deps,
        }
    }

    pub fn eval(&self, value: &dyn Fn(Var) -> bool) -> bool {
        match self {
            BitFunction::Table { deps, rows } => {
                let row = deps
                    .iter()
                    .enumerate()
                    .fold(0usize, |r, (k, &d)| r | (usize::from(value(d)) << k));
                rows[row]
            }
            BitFunction::Circuit { circuit, root, .. } => circuit.eval(*root, value),
        }
    }

    /// The function as a circuit, plus its root.
    pub fn to_circuit(&self) -> (Arc<Circuit>, NodeId) {
        match self {
            BitFunction::Table { deps, rows } => {
                let mut c = Circuit::new();
                let root = c.from_table(deps, rows);
                (Arc::new(c), root)
            }
            BitFunction::Circuit { circuit, root, .. } => (circuit.clone(), *root),
        }
    }

    /// Variables the representation actually reads.
    pub fn support(&self) -> Vec<Var> {
        match self {
            BitFunction::Table { deps, .. } => deps.clone(),
            BitFunction::Circuit { circuit, root, .. } => {
                circuit.inputs(*root).into_iter().collect()
            }
        }
    }

    /// Table entries for a table, reachable node count for a circuit.
    pub fn size(&self) -> usize {
        match self {
            BitFunction::Table { rows, .. } => rows.len(),
            BitFunction::Circuit { circuit, root, .. } => circuit.reachable(*root).len(),
        }
    }
}

/// One function per existential bit, auxiliaries included.
#[derive(Clone, Debug, Default)]
pub struct HenkinSolution {
    pub functions: BTreeMap<Var, BitFunction>,
    pub bitmap: BitMap,
}

impl HenkinSolution {
    pub fn function(&self, var: Var) -> Option<&BitFunction> {
        self.functions.get(&var)
    }
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    True(HenkinSolution),
    False,
}

impl SolveOutcome {
    pub fn is_true(&self) -> bool {
        matches!(self, SolveOutcome::True(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("{universals} universal bits exceed the expansion bound of {bound}")]
    ExpansionBound { universals: usize, bound: usize },
    #[error("instance is not 2-QBF shaped")]
    Not2Qbf,
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    Valid,
    /// Universal assignment under which the substituted matrix is false.
    Counterexample(Assignment),
    Missing(Var),
    /// `function` reads `var`, which is outside its dependency set.
    OutOfDependencies {
        function: Var,
        var: Var,
    },
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        *self == Verification::Valid
    }
}

/// Tseitin-encodes a circuit node into `cnf`, with inputs taken from `input`.
pub(crate) fn encode_circuit(
    circuit: &Circuit,
    root: NodeId,
    input: &dyn Fn(Var) -> Bit,
    cnf: &mut CnfBuilder,
) -> Bit {
    let mut bits: BTreeMap<NodeId, Bit> = BTreeMap::new();
    for id in circuit.reachable(root) {
        let b = match circuit.node(id) {
            Node::Const(v) => Bit::Const(v),
            Node::Input(v) => input(v),
            Node::Not(a) => bits[&a].not(),
            Node::And(a, b) => cnf.and(bits[&a], bits[&b]),
            Node::Or(a, b) => cnf.or(bits[&a], bits[&b]),
            Node::Ite(c, t, e) => cnf.ite(bits[&c], bits[&t], bits[&e]),
        };
        bits.insert(id, b);
    }
    bits[&root]
}

/// Checks that substituting the solution into the matrix yields a formula
/// true under every universal assignment.
pub fn verify_solution(instance: &DqbfInstance, sol: &HenkinSolution) -> Verification {
    let mut cnf = CnfBuilder::new(instance.num_vars + 1);
    let universal = |v: Var| Bit::Lit(v as i32);
    for (var, deps) in instance.all_existentials() {
        let Some(f) = sol.function(var) else {
            return Verification::Missing(var);
        };
        if let Some(&bad) = f.support().iter().find(|v| !deps.contains(v)) {
            return Verification::OutOfDependencies {
                function: var,
                var: bad,
            };
        }
        let (circuit, root) = f.to_circuit();
        let out = encode_circuit(&circuit, root, &universal, &mut cnf);
        let y = Bit::Lit(var as i32);
        let same = cnf.xnor(y, out);
        cnf.assert_bit(same);
    }
    // Some clause is falsified.
    let mut falsified = Vec::with_capacity(instance.clauses.len());
    for c in &instance.clauses {
        let lits: Vec<Bit> = c.iter().map(|&l| Bit::Lit(-l)).collect();
        falsified.push(cnf.and_n(&lits));
    }
    let any = cnf.or_n(&falsified);
    cnf.assert_bit(any);
    let num_vars = cnf.num_vars();
    match sat_solve(&cnf.clauses, num_vars, &Budget::unlimited()) {
        Ok(SatResult::Unsat) => Verification::Valid,
        Ok(SatResult::Sat(m)) => Verification::Counterexample(
            instance
                .universals
                .iter()
                .map(|&u| (u, m.value(u)))
                .collect(),
        ),
        Err(_) => unreachable!("unlimited budget"),
    }
}
