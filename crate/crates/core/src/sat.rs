//! A CDCL SAT solver: two-watched-literal propagation, first-UIP clause
//! learning, VSIDS branching with phase saving, and Luby restarts.
//!
//! The solver is incremental: clauses may be added between calls to
//! [`Solver::solve`], and each call may pass assumption literals.
//! Literals at the API boundary use DIMACS conventions (non-zero `i32`).

use std::time::Instant;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        debug_assert!(l != 0);
        let v = l.unsigned_abs() - 1;
        Lit(2 * v + (l < 0) as u32)
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn negative(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

/// Limits on one `solve` call.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub max_conflicts: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("SAT resource limit exceeded")]
    ResourceLimit,
}

/// A total assignment to variables `1..=num_vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn value(&self, var: u32) -> bool {
        self.0[var as usize - 1]
    }

    pub fn lit(&self, lit: i32) -> bool {
        self.value(lit.unsigned_abs()) == (lit > 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

/// Max-heap of variables keyed by activity.
#[derive(Debug, Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r]] > act[self.heap[l]] {
                r
            } else {
                l
            };
            if act[self.heap[c]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i]] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v] = Some(i);
        self.up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
}

/// Luby sequence value at index `i` (0-based): 1 1 2 1 1 2 4 ...
fn luby(mut i: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1u64 << seq
}

#[derive(Debug, Default)]
pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    num_learnts: usize,
    max_learnts: f64,
    pub conflicts: u64,
    pub decisions: u64,
    budget: Budget,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_BASE: u64 = 100;

impl Solver {
    pub fn new() -> Self {
        Solver {
            var_inc: 1.0,
            cla_inc: 1.0,
            ok: true,
            ..Default::default()
        }
    }

    pub fn with_vars(n: u32) -> Self {
        let mut s = Solver::new();
        s.ensure_vars(n);
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    /// Makes variables `1..=n` available.
    pub fn ensure_vars(&mut self, n: u32) {
        let n = n as usize;
        let old = self.assigns.len();
        if n <= old {
            return;
        }
        self.assigns.resize(n, LBool::Undef);
        self.level.resize(n, 0);
        self.reason.resize(n, None);
        self.activity.resize(n, 0.0);
        self.polarity.resize(n, true);
        self.seen.resize(n, false);
        self.watches.resize(2 * n, Vec::new());
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v, &self.activity);
        }
    }

    /// Allocates one fresh variable and returns its DIMACS id.
    pub fn new_var(&mut self) -> i32 {
        let n = self.num_vars() + 1;
        self.ensure_vars(n);
        n as i32
    }

    fn value(&self, l: Lit) -> LBool {
        match self.assigns[l.var()] {
            LBool::Undef => LBool::Undef,
            LBool::True if l.negative() => LBool::False,
            LBool::False if l.negative() => LBool::True,
            v => v,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        debug_assert_eq!(self.assigns[v], LBool::Undef);
        self.assigns[v] = if l.negative() {
            LBool::False
        } else {
            LBool::True
        };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause. Returns false once the clause set is known unsatisfiable.
    pub fn add_clause(&mut self, clause: &[i32]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let max_var = clause.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0);
        self.ensure_vars(max_var);
        let mut lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
        lits.sort_unstable();
        lits.dedup();
        let mut kept = Vec::with_capacity(lits.len());
        for (i, &l) in lits.iter().enumerate() {
            if i + 1 < lits.len() && lits[i + 1] == !l {
                return true; // tautology
            }
            match self.value(l) {
                LBool::True => return true,
                LBool::False => {}
                LBool::Undef => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(kept[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(kept, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> usize {
        let cr = self.clauses.len();
        self.watches[lits[0].index()].push(cr);
        self.watches[lits[1].index()].push(cr);
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cr
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                if self.clauses[cr].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cr].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cr].lits[0];
                if self.value(first) == LBool::True {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cr].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cr].lits[k];
                    if self.value(l) != LBool::False {
                        self.clauses[cr].lits.swap(1, k);
                        self.watches[l.index()].push(cr);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cr;
                j += 1;
                if self.value(first) == LBool::False {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cr));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cr: usize) {
        let c = &mut self.clauses[cr];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..self.clauses[confl].lits.len() {
                let q = self.clauses[confl].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by other literals of the clause.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| i == 0 || !self.redundant(l))
            .collect();
        for &l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var()];
        }
        (learnt, bt)
    }

    /// Local minimization: `l` is redundant if every other literal of its
    /// reason is already in the learnt clause (marked seen) or fixed at level 0.
    fn redundant(&self, l: Lit) -> bool {
        let Some(r) = self.reason[l.var()] else {
            return false;
        };
        self.clauses[r].lits[1..]
            .iter()
            .all(|q| self.seen[q.var()] || self.level[q.var()] == 0)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var();
            self.assigns[v] = LBool::Undef;
            self.reason[v] = None;
            self.polarity[v] = l.negative();
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == LBool::Undef {
                return Some(Lit(2 * v as u32 + self.polarity[v] as u32));
            }
        }
        None
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lits.len() > 2
            })
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap()
        });
        let locked = |s: &Solver, cr: usize| {
            let l = s.clauses[cr].lits[0];
            s.value(l) == LBool::True && s.reason[l.var()] == Some(cr)
        };
        for &cr in &learnts[..learnts.len() / 2] {
            if !locked(self, cr) {
                self.clauses[cr].deleted = true;
                self.clauses[cr].lits = Vec::new();
                self.num_learnts -= 1;
            }
        }
        let clauses = &self.clauses;
        for w in &mut self.watches {
            w.retain(|&cr| !clauses[cr].deleted);
        }
    }

    /// Solves under the given assumption literals.
    pub fn solve(&mut self, assumptions: &[i32]) -> Result<SatResult, SatError> {
        if !self.ok {
            return Ok(SatResult::Unsat);
        }
        let max_var = assumptions
            .iter()
            .map(|l| l.unsigned_abs())
            .max()
            .unwrap_or(0);
        self.ensure_vars(max_var);
        let assumptions: Vec<Lit> = assumptions.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return Ok(SatResult::Unsat);
        }
        if self.max_learnts == 0.0 {
            self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        }
        let start_conflicts = self.conflicts;
        let mut restart = 0u64;
        let mut until_restart = luby(restart) * RESTART_BASE;
        let result = loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    break Ok(SatResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let asserting = learnt[0];
                    let cr = self.attach(learnt, true);
                    self.bump_clause(cr);
                    self.enqueue(asserting, Some(cr));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;

                let used = self.conflicts - start_conflicts;
                if self.budget.max_conflicts.is_some_and(|m| used >= m)
                    || (used.is_multiple_of(64) && self.budget.expired())
                {
                    break Err(SatError::ResourceLimit);
                }
                until_restart = until_restart.saturating_sub(1);
                if until_restart == 0 {
                    restart += 1;
                    until_restart = luby(restart) * RESTART_BASE;
                    self.cancel_until(0);
                }
                if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                continue;
            }

            let next = if (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    LBool::True => {
                        self.trail_lim.push(self.trail.len());
                        continue;
                    }
                    LBool::False => break Ok(SatResult::Unsat),
                    LBool::Undef => a,
                }
            } else {
                self.decisions += 1;
                if self.decisions.is_multiple_of(4096) && self.budget.expired() {
                    break Err(SatError::ResourceLimit);
                }
                match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        let model = self.assigns.iter().map(|&a| a == LBool::True).collect();
                        break Ok(SatResult::Sat(Model(model)));
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        };
        self.cancel_until(0);
        result
    }
}

/// One-shot satisfiability check of a CNF over variables `1..=num_vars`.
pub fn sat_solve(
    clauses: &[Vec<i32>],
    num_vars: u32,
    budget: &Budget,
) -> Result<SatResult, SatError> {
    let mut s = Solver::with_vars(num_vars);
    s.set_budget(*budget);
    for c in clauses {
        if !s.add_clause(c) {
            return Ok(SatResult::Unsat);
        }
    }
    s.solve(&[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn brute_force(clauses: &[Vec<i32>], n: u32) -> bool {
        (0u64..1 << n).any(|m| {
            clauses.iter().all(|c| {
                c.iter().any(|&l| {
                    let bit = (m >> (l.unsigned_abs() - 1)) & 1 == 1;
                    bit == (l > 0)
                })
            })
        })
    }

    fn satisfies(model: &Model, clauses: &[Vec<i32>]) -> bool {
        clauses.iter().all(|c| c.iter().any(|&l| model.lit(l)))
    }

    #[test]
    fn contradictory_units() {
        let r = sat_solve(&[vec![1], vec![-1]], 1, &Budget::unlimited()).unwrap();
        assert_eq!(r, SatResult::Unsat);
    }

    #[test]
    fn empty_formula_is_sat() {
        let r = sat_solve(&[], 3, &Budget::unlimited()).unwrap();
        match r {
            SatResult::Sat(m) => assert_eq!(m.len(), 3),
            SatResult::Unsat => panic!("expected SAT"),
        }
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn random_3cnf_matches_enumeration() {
        let n = 12;
        for seed in 0..200 {
            let mut rng = StdRng::seed_from_u64(seed);
            let m = rng.gen_range(30..70);
            let clauses: Vec<Vec<i32>> = (0..m)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            let v = rng.gen_range(1..=n) as i32;
                            if rng.gen() {
                                v
                            } else {
                                -v
                            }
                        })
                        .collect()
                })
                .collect();
            let expected = brute_force(&clauses, n);
            match sat_solve(&clauses, n, &Budget::unlimited()).unwrap() {
                SatResult::Sat(model) => {
                    assert!(
                        expected,
                        "seed {seed}: solver says SAT, enumeration says UNSAT"
                    );
                    assert!(satisfies(&model, &clauses), "seed {seed}: bad model");
                }
                SatResult::Unsat => assert!(!expected, "seed {seed}: missed a model"),
            }
        }
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 6 pigeons, 5 holes.
        let (p, h) = (6, 5);
        let var = |i: i32, j: i32| i * h + j + 1;
        let mut clauses = Vec::new();
        for i in 0..p {
            clauses.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    clauses.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let r = sat_solve(&clauses, (p * h) as u32, &Budget::unlimited()).unwrap();
        assert_eq!(r, SatResult::Unsat);
    }

    #[test]
    fn conflict_budget_is_reported() {
        let (p, h) = (9, 8);
        let var = |i: i32, j: i32| i * h + j + 1;
        let mut clauses = Vec::new();
        for i in 0..p {
            clauses.push((0..h).map(|j| var(i, j)).collect());
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    clauses.push(vec![-var(a, j), -var(b, j)]);
                }
            }
        }
        let budget = Budget {
            deadline: None,
            max_conflicts: Some(10),
        };
        assert_eq!(
            sat_solve(&clauses, (p * h) as u32, &budget),
            Err(SatError::ResourceLimit)
        );
    }

    #[test]
    fn incremental_with_assumptions() {
        let mut s = Solver::new();
        assert!(s.add_clause(&[1, 2]));
        assert!(s.add_clause(&[-1, 3]));
        assert!(s.solve(&[-2]).unwrap().is_sat());
        assert_eq!(s.solve(&[-2, -3]).unwrap(), SatResult::Unsat);
        // Assumption failure does not poison the solver.
        assert!(s.solve(&[]).unwrap().is_sat());
        assert!(s.add_clause(&[-3]));
        match s.solve(&[]).unwrap() {
            SatResult::Sat(m) => {
                assert!(!m.value(1) && m.value(2) && !m.value(3));
            }
            SatResult::Unsat => panic!(),
        }
        assert!(!s.add_clause(&[-2]));
        assert_eq!(s.solve(&[]).unwrap(), SatResult::Unsat);
    }
}
