use std::collections::{HashMap, HashSet};

use log::debug;

use super::{BitFunction, HenkinSolution, SolveError, SolveOutcome};
use crate::bitblast::{DqbfInstance, Var};
use crate::sat::{Budget, SatError, SatResult, Solver};

pub const DEFAULT_EXPANSION_BOUND: usize = 16;

struct Copies {
    var: Var,
    deps: Vec<Var>,
    /// Position of each dependency in the universal list.
    positions: Vec<usize>,
    base: i32,
}

impl Copies {
    fn row(&self, assignment: u64) -> usize {
        self.positions.iter().enumerate().fold(0, |r, (k, &p)| {
            r | ((((assignment >> p) & 1) as usize) << k)
        })
    }
}

/// Decides `instance` by universal expansion.
///
/// Every existential gets one copy per assignment to its dependencies; the
/// matrix is instantiated once per universal assignment and handed to the
/// SAT core. Tables are read back from the model.
pub fn solve_expansion(
    instance: &DqbfInstance,
    bound: usize,
    budget: &Budget,
) -> Result<SolveOutcome, SolveError> {
    let n = instance.universals.len();
    if n > bound || n >= 63 {
        return Err(SolveError::ExpansionBound {
            universals: n,
            bound,
        });
    }
    let position: HashMap<Var, usize> = instance
        .universals
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i))
        .collect();

    let mut copies = Vec::new();
    let mut index: HashMap<Var, usize> = HashMap::new();
    let mut next = 1i64;
    for (var, deps) in instance.all_existentials() {
        let positions = deps.iter().map(|d| position[d]).collect();
        index.insert(var, copies.len());
        copies.push(Copies {
            var,
            base: next as i32,
            positions,
            deps,
        });
        next += 1i64 << copies.last().unwrap().deps.len();
    }
    if next > i32::MAX as i64 {
        return Err(SolveError::ExpansionBound {
            universals: n,
            bound,
        });
    }

    let mut solver = Solver::with_vars((next - 1) as u32);
    solver.set_budget(*budget);
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    let mut consistent = true;
    'outer: for a in 0u64..1 << n {
        if a % 256 == 0 && budget.expired() {
            return Err(SatError::ResourceLimit.into());
        }
        for clause in &instance.clauses {
            let mut inst = Vec::with_capacity(clause.len());
            let mut satisfied = false;
            for &l in clause {
                let v = l.unsigned_abs();
                if let Some(&p) = position.get(&v) {
                    if ((a >> p) & 1 == 1) == (l > 0) {
                        satisfied = true;
                        break;
                    }
                } else {
                    let c = &copies[index[&v]];
                    let id = c.base + c.row(a) as i32;
                    inst.push(if l > 0 { id } else { -id });
                }
            }
            if satisfied {
                continue;
            }
            inst.sort_unstable();
            inst.dedup();
            if seen.insert(inst.clone()) && !solver.add_clause(&inst) {
                consistent = false;
                break 'outer;
            }
        }
    }
    debug!(
        "expansion: {} copies, {} distinct clauses",
        next - 1,
        seen.len()
    );
    if !consistent {
        return Ok(SolveOutcome::False);
    }
    match solver.solve(&[])? {
        SatResult::Unsat => Ok(SolveOutcome::False),
        SatResult::Sat(model) => {
            let mut sol = HenkinSolution {
                functions: Default::default(),
                bitmap: instance.bitmap.clone(),
            };
            for c in copies {
                let rows = (0..1i32 << c.deps.len())
                    .map(|r| model.value((c.base + r) as u32))
                    .collect();
                sol.functions
                    .insert(c.var, BitFunction::from_rows(c.deps, rows));
            }
            Ok(SolveOutcome::True(sol))
        }
    }
}
