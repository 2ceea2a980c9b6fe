use std::collections::HashMap;
use std::sync::Arc;

use log::debug;

use super::{BitFunction, Circuit, HenkinSolution, SolveError, SolveOutcome};
use crate::bitblast::{DqbfInstance, Var};
use crate::sat::{Budget, SatError, SatResult, Solver};

/// Decides a forall-exists instance by counterexample-guided abstraction
/// refinement over existential strategies.
///
/// A candidate universal assignment is checked against the matrix; if some
/// existential completion exists it becomes a new strategy (a full
/// assignment to the existentials, auxiliaries included), and the
/// abstraction learns that the next candidate must defeat it too. The
/// solution is the decision list "first strategy whose instantiated matrix
/// holds", which is total once the abstraction is unsatisfiable.
pub fn solve_2qbf(instance: &DqbfInstance, budget: &Budget) -> Result<SolveOutcome, SolveError> {
    if !instance.is_2qbf() {
        return Err(SolveError::Not2Qbf);
    }
    let existentials: Vec<Var> = instance
        .all_existentials()
        .into_iter()
        .map(|(v, _)| v)
        .collect();

    let mut check = Solver::with_vars(instance.num_vars);
    check.set_budget(*budget);
    let mut consistent = true;
    for c in &instance.clauses {
        consistent &= check.add_clause(c);
    }
    if !consistent {
        return Ok(SolveOutcome::False);
    }

    let mut abstraction = Solver::with_vars(instance.num_vars);
    abstraction.set_budget(*budget);
    // Indicator per residual universal clause: "this clause is falsified".
    let mut falsified: HashMap<Vec<i32>, i32> = HashMap::new();
    let mut strategies: Vec<Vec<bool>> = Vec::new();

    loop {
        if budget.expired() {
            return Err(SatError::ResourceLimit.into());
        }
        let candidate = match abstraction.solve(&[])? {
            SatResult::Unsat => break,
            SatResult::Sat(m) => m,
        };
        let assumptions: Vec<i32> = instance
            .universals
            .iter()
            .map(|&u| {
                if candidate.value(u) {
                    u as i32
                } else {
                    -(u as i32)
                }
            })
            .collect();
        let model = match check.solve(&assumptions)? {
            SatResult::Unsat => {
                debug!("2qbf: counterexample after {} strategies", strategies.len());
                return Ok(SolveOutcome::False);
            }
            SatResult::Sat(m) => m,
        };
        let strategy: Vec<bool> = existentials.iter().map(|&e| model.value(e)).collect();
        let value: HashMap<Var, bool> = existentials
            .iter()
            .copied()
            .zip(strategy.iter().copied())
            .collect();

        // The next candidate must falsify some clause under this strategy.
        let mut refinement = Vec::new();
        for c in &instance.clauses {
            let mut rest = Vec::new();
            let mut sat = false;
            for &l in c {
                match value.get(&l.unsigned_abs()) {
                    Some(&b) if b == (l > 0) => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => rest.push(l),
                }
            }
            if sat {
                continue;
            }
            debug_assert!(
                !rest.is_empty(),
                "strategy violates a purely existential clause"
            );
            rest.sort_unstable();
            rest.dedup();
            let ind = match falsified.get(&rest) {
                Some(&i) => i,
                None => {
                    let i = abstraction.new_var();
                    // i -> every literal of the residual clause is false.
                    for &l in &rest {
                        abstraction.add_clause(&[-i, -l]);
                    }
                    falsified.insert(rest, i);
                    i
                }
            };
            refinement.push(ind);
        }
        strategies.push(strategy);
        if !abstraction.add_clause(&refinement) {
            break;
        }
    }
    debug!("2qbf: valid with {} strategies", strategies.len());
    Ok(SolveOutcome::True(decision_list(
        instance,
        &existentials,
        &strategies,
    )))
}

fn decision_list(
    instance: &DqbfInstance,
    existentials: &[Var],
    strategies: &[Vec<bool>],
) -> HenkinSolution {
    let mut c = Circuit::new();
    let mut guards = Vec::with_capacity(strategies.len());
    for s in strategies {
        let value: HashMap<Var, bool> = existentials
            .iter()
            .copied()
            .zip(s.iter().copied())
            .collect();
        let mut clauses = Vec::new();
        for cl in &instance.clauses {
            let mut lits = Vec::new();
            let mut sat = false;
            for &l in cl {
                match value.get(&l.unsigned_abs()) {
                    Some(&b) if b == (l > 0) => sat = true,
                    Some(_) => {}
                    None => lits.push(c.literal(l)),
                }
            }
            if !sat {
                clauses.push(c.or_all(lits));
            }
        }
        guards.push(c.and_all(clauses));
    }
    let mut roots = Vec::with_capacity(existentials.len());
    for (k, _) in existentials.iter().enumerate() {
        let last = strategies.last().is_some_and(|s| s[k]);
        let mut node = c.constant(last);
        for (g, s) in guards.iter().zip(strategies).rev().skip(1) {
            let v = c.constant(s[k]);
            node = c.ite(*g, v, node);
        }
        roots.push(node);
    }
    let circuit = Arc::new(c);
    let deps = instance.universals.clone();
    let functions = existentials
        .iter()
        .zip(roots)
        .map(|(&e, root)| {
            (
                e,
                BitFunction::Circuit {
                    deps: deps.clone(),
                    circuit: circuit.clone(),
                    root,
                },
            )
        })
        .collect();
    HenkinSolution {
        functions,
        bitmap: instance.bitmap.clone(),
    }
}
