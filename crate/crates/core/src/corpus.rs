//! Seeded random generators for synthesis problems and (D)QBF instances.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ackermann::to_single_callsign;
use crate::bitblast::{BitMap, DqbfInstance, Existential, Var};
use crate::callsig::{analyze, normalize_arguments, CallSignClass};
use crate::frontend::{Op, Sort, SynthFun, SynthProblem, Term, Variable};

#[derive(Clone, Debug)]
pub struct ProblemShape {
    pub max_inputs: usize,
    pub max_width: u32,
    pub max_functions: usize,
    pub max_arity: usize,
    pub max_callsigns: usize,
    pub max_constraints: usize,
    /// Probability that a call argument is a compound term.
    pub compound_arg_probability: f64,
    /// Reject problems whose single-callsign form has more universal bits.
    pub max_universal_bits: Option<u32>,
    pub require_multiple_callsigns: bool,
}

impl Default for ProblemShape {
    fn default() -> Self {
        ProblemShape {
            max_inputs: 3,
            max_width: 3,
            max_functions: 2,
            max_arity: 2,
            max_callsigns: 3,
            max_constraints: 3,
            compound_arg_probability: 0.1,
            max_universal_bits: Some(12),
            require_multiple_callsigns: false,
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    width: u32,
    inputs: Vec<Variable>,
    functions: Vec<SynthFun>,
    /// Argument lists each function is applied to.
    pools: Vec<Vec<Vec<Term>>>,
}

const UNARY: [Op; 2] = [Op::BvNot, Op::BvNeg];
const BINARY: [Op; 11] = [
    Op::BvAnd,
    Op::BvOr,
    Op::BvXor,
    Op::BvAdd,
    Op::BvSub,
    Op::BvMul,
    Op::BvUdiv,
    Op::BvUrem,
    Op::BvShl,
    Op::BvLshr,
    Op::BvAshr,
];
const RELATIONS: [Op; 6] = [
    Op::Eq,
    Op::BvUle,
    Op::BvUge,
    Op::BvUlt,
    Op::BvSle,
    Op::BvSgt,
];

impl<R: Rng> Gen<'_, R> {
    fn sort(&self) -> Sort {
        Sort::BitVec(self.width)
    }

    fn input(&mut self) -> Term {
        self.inputs.choose(self.rng).unwrap().term()
    }

    fn call(&mut self) -> Term {
        let i = self.rng.gen_range(0..self.functions.len());
        let args = self.pools[i].choose(self.rng).unwrap().clone();
        Term::call(self.functions[i].name.clone(), args, self.sort())
    }

    fn leaf(&mut self, calls: bool) -> Term {
        match self.rng.gen_range(0..10) {
            0..=5 => self.input(),
            6..=7 => {
                let v = self.rng.gen_range(0..1u128 << self.width);
                Term::bv_value(self.width, v)
            }
            _ if calls => self.call(),
            _ => self.input(),
        }
    }

    fn word(&mut self, depth: u32, calls: bool) -> Term {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.leaf(calls);
        }
        match self.rng.gen_range(0..8) {
            0 => {
                let op = *UNARY.choose(self.rng).unwrap();
                Term::app(op, vec![self.word(depth - 1, calls)]).unwrap()
            }
            1 => {
                let c = self.relation(depth - 1, calls);
                Term::ite(c, self.word(depth - 1, calls), self.word(depth - 1, calls))
            }
            _ => {
                let op = *BINARY.choose(self.rng).unwrap();
                let a = self.word(depth - 1, calls);
                let b = self.word(depth - 1, calls);
                Term::app(op, vec![a, b]).unwrap()
            }
        }
    }

    fn relation(&mut self, depth: u32, calls: bool) -> Term {
        let op = *RELATIONS.choose(self.rng).unwrap();
        let a = self.word(depth, calls);
        let b = self.word(depth, calls);
        Term::app(op, vec![a, b]).unwrap()
    }

    /// A relation with at least one synthesized-function application.
    fn constraint(&mut self) -> Term {
        let op = *RELATIONS.choose(self.rng).unwrap();
        let lhs = self.call();
        let nested = self.rng.gen_bool(0.3);
        let rhs = self.word(2, nested);
        let atom = Term::app(op, vec![lhs, rhs]).unwrap();
        match self.rng.gen_range(0..6) {
            0 => Term::or(vec![atom, self.relation(1, true)]),
            1 => Term::implies(self.relation(1, false), atom),
            _ => atom,
        }
    }
}

/// Draws one problem. All inputs, parameters and results share one width.
pub fn random_problem<R: Rng>(rng: &mut R, shape: &ProblemShape) -> SynthProblem {
    loop {
        let p = draw_problem(rng, shape);
        if accept(&p, shape) {
            return p;
        }
    }
}

fn accept(p: &SynthProblem, shape: &ProblemShape) -> bool {
    let normalized = normalize_arguments(p);
    let index = analyze(&normalized);
    if shape.require_multiple_callsigns && index.class != CallSignClass::Multiple {
        return false;
    }
    let Some(limit) = shape.max_universal_bits else {
        return true;
    };
    let single = match index.class {
        CallSignClass::Single => normalized,
        CallSignClass::Multiple => to_single_callsign(&normalized, &index).0,
    };
    single.inputs.iter().map(|v| v.sort.bits()).sum::<u32>() <= limit
}

fn draw_problem<R: Rng>(rng: &mut R, shape: &ProblemShape) -> SynthProblem {
    let width = rng.gen_range(1..=shape.max_width);
    let sort = Sort::BitVec(width);
    let n_inputs = rng.gen_range(1..=shape.max_inputs);
    let inputs: Vec<Variable> = ["a", "b", "c", "d", "e"][..n_inputs]
        .iter()
        .map(|n| Variable::new(*n, sort))
        .collect();
    let n_functions = rng.gen_range(1..=shape.max_functions);
    let functions: Vec<SynthFun> = ["f", "g", "h"][..n_functions]
        .iter()
        .map(|n| {
            let arity = rng.gen_range(1..=shape.max_arity);
            SynthFun {
                name: n.to_string(),
                params: ["x", "y", "z"][..arity]
                    .iter()
                    .map(|p| Variable::new(*p, sort))
                    .collect(),
                ret: sort,
            }
        })
        .collect();
    let mut g = Gen {
        rng,
        width,
        inputs,
        functions,
        pools: vec![],
    };
    for i in 0..g.functions.len() {
        let k = g.rng.gen_range(1..=shape.max_callsigns);
        let arity = g.functions[i].params.len();
        let mut pool: Vec<Vec<Term>> = Vec::new();
        for _ in 0..k {
            let args: Vec<Term> = (0..arity)
                .map(|_| {
                    if g.rng.gen_bool(shape.compound_arg_probability) {
                        let x = g.input();
                        let y = g.input();
                        let op = *[Op::BvAdd, Op::BvXor].choose(g.rng).unwrap();
                        Term::app(op, vec![x, y]).unwrap()
                    } else {
                        g.input()
                    }
                })
                .collect();
            if !pool.contains(&args) {
                pool.push(args);
            }
        }
        g.pools.push(pool);
    }
    let n = g.rng.gen_range(1..=shape.max_constraints);
    let constraints = (0..n).map(|_| g.constraint()).collect();
    SynthProblem::new(g.inputs, g.functions, constraints)
}

/// Random instance with existentials `n+1..=n+m` over universals `1..=n`.
/// With `henkin` each dependency set is a random subset, otherwise all
/// universals.
pub fn random_dqbf<R: Rng>(
    rng: &mut R,
    n: u32,
    m: u32,
    clauses: usize,
    henkin: bool,
) -> DqbfInstance {
    let universals: Vec<Var> = (1..=n).collect();
    let existentials = (n + 1..=n + m)
        .map(|var| Existential {
            var,
            deps: if henkin {
                universals
                    .iter()
                    .copied()
                    .filter(|_| rng.gen_bool(0.5))
                    .collect()
            } else {
                universals.clone()
            },
        })
        .collect();
    let clauses = (0..clauses)
        .map(|_| {
            let len = rng.gen_range(1..=3);
            (0..len)
                .map(|_| {
                    let v = rng.gen_range(1..=n + m) as i32;
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect();
    DqbfInstance {
        num_vars: n + m,
        universals,
        existentials,
        auxiliaries: vec![],
        clauses,
        bitmap: BitMap::default(),
    }
}
