//! Compilation of a bitvector DQF formula into a propositional DQBF in CNF.
//!
//! Variable numbering is deterministic: universal bits first (inputs in
//! order, least significant bit first), then the bits of each output
//! variable, then Tseitin auxiliaries in creation order. Output bits depend on
//! the bits of their variable's dependency set; auxiliaries depend on every
//! universal bit.

mod gates;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use gates::{Bit, CnfBuilder};

use crate::dqf::DqfFormula;
use crate::frontend::{Op, Sort, Term, TermKind};

/// Propositional variable id (positive).
pub type Var = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitRole {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMapEntry {
    pub name: String,
    pub role: BitRole,
    /// Bit `i` of the variable is `bits[i]`.
    pub bits: Vec<Var>,
}

/// Correspondence between bitvector variables and propositional variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitMap {
    entries: Vec<BitMapEntry>,
    reverse: HashMap<Var, (usize, u32)>,
}

impl BitMap {
    pub fn push(&mut self, name: impl Into<String>, role: BitRole, bits: Vec<Var>) {
        let idx = self.entries.len();
        for (i, &b) in bits.iter().enumerate() {
            let prev = self.reverse.insert(b, (idx, i as u32));
            assert!(prev.is_none(), "propositional variable {b} mapped twice");
        }
        self.entries.push(BitMapEntry {
            name: name.into(),
            role,
            bits,
        });
    }

    pub fn entries(&self) -> &[BitMapEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&BitMapEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// The bitvector variable and bit index a propositional variable encodes.
    pub fn lookup(&self, var: Var) -> Option<(&str, u32)> {
        self.reverse
            .get(&var)
            .map(|&(e, i)| (self.entries[e].name.as_str(), i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Existential {
    pub var: Var,
    pub deps: Vec<Var>,
}

/// A DQBF in prenex CNF form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DqbfInstance {
    pub num_vars: u32,
    pub universals: Vec<Var>,
    /// Existentials with explicit dependency sets.
    pub existentials: Vec<Existential>,
    /// Existentials that depend on every universal.
    pub auxiliaries: Vec<Var>,
    pub clauses: Vec<Vec<i32>>,
    pub bitmap: BitMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClauseStats {
    pub vars: usize,
    pub clauses: usize,
    pub aux: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("variable {0} declared more than once")]
    DuplicateVariable(Var),
    #[error("variable {0} is out of range")]
    OutOfRange(Var),
    #[error("clause {0} mentions undeclared variable {1}")]
    Undeclared(usize, Var),
    #[error("existential {0} depends on {1}, which is not universal")]
    BadDependency(Var, Var),
}

impl DqbfInstance {
    /// Every existential variable (explicit ones first, then auxiliaries)
    /// with its dependency set.
    pub fn all_existentials(&self) -> Vec<(Var, Vec<Var>)> {
        self.existentials
            .iter()
            .map(|e| (e.var, e.deps.clone()))
            .chain(
                self.auxiliaries
                    .iter()
                    .map(|&v| (v, self.universals.clone())),
            )
            .collect()
    }

    /// True iff every existential depends on all universals.
    pub fn is_2qbf(&self) -> bool {
        let all: HashSet<Var> = self.universals.iter().copied().collect();
        self.existentials
            .iter()
            .all(|e| e.deps.iter().copied().collect::<HashSet<_>>() == all)
    }

    pub fn clause_stats(&self) -> ClauseStats {
        ClauseStats {
            vars: self.universals.len() + self.existentials.len() + self.auxiliaries.len(),
            clauses: self.clauses.len(),
            aux: self.auxiliaries.len(),
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let mut declared = HashSet::new();
        let universals: HashSet<Var> = self.universals.iter().copied().collect();
        let all = self
            .universals
            .iter()
            .chain(self.existentials.iter().map(|e| &e.var))
            .chain(&self.auxiliaries);
        for &v in all {
            if v == 0 || v > self.num_vars {
                return Err(InstanceError::OutOfRange(v));
            }
            if !declared.insert(v) {
                return Err(InstanceError::DuplicateVariable(v));
            }
        }
        for e in &self.existentials {
            if let Some(&d) = e.deps.iter().find(|d| !universals.contains(d)) {
                return Err(InstanceError::BadDependency(e.var, d));
            }
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if let Some(&l) = c.iter().find(|l| !declared.contains(&l.unsigned_abs())) {
                return Err(InstanceError::Undeclared(i, l.unsigned_abs()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BlastError {
    #[error("unbound variable `{0}` in formula body")]
    UnboundVariable(String),
    #[error("function application `{0}` survived into the formula body")]
    UnexpectedCall(String),
}

struct Blaster<'a> {
    cnf: CnfBuilder,
    env: &'a HashMap<String, Vec<Bit>>,
}

impl Blaster<'_> {
    fn word(&mut self, t: &Term) -> Result<Vec<Bit>, BlastError> {
        match t.kind() {
            TermKind::Var(v) => self
                .env
                .get(v)
                .cloned()
                .ok_or_else(|| BlastError::UnboundVariable(v.clone())),
            TermKind::BoolConst(b) => Ok(vec![Bit::Const(*b)]),
            TermKind::BvConst(c) => Ok(c.to_bits().into_iter().map(Bit::Const).collect()),
            TermKind::Call(name, _) => Err(BlastError::UnexpectedCall(name.clone())),
            TermKind::App(op, args) => {
                let words = args
                    .iter()
                    .map(|a| self.word(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(self.apply(*op, &words))
            }
        }
    }

    fn apply(&mut self, op: Op, w: &[Vec<Bit>]) -> Vec<Bit> {
        use Op::*;
        let c = &mut self.cnf;
        let one = |b: Bit| vec![b];
        match op {
            Not => one(w[0][0].not()),
            And => {
                let bits: Vec<Bit> = w.iter().map(|x| x[0]).collect();
                one(c.and_n(&bits))
            }
            Or => {
                let bits: Vec<Bit> = w.iter().map(|x| x[0]).collect();
                one(c.or_n(&bits))
            }
            Xor => one(c.xor(w[0][0], w[1][0])),
            Implies => one(c.or(w[0][0].not(), w[1][0])),
            Eq => one(c.eq_words(&w[0], &w[1])),
            Ite => c.ite_words(w[0][0], &w[1], &w[2]),
            BvNot => w[0].iter().map(|b| b.not()).collect(),
            BvAnd => w[0].iter().zip(&w[1]).map(|(&x, &y)| c.and(x, y)).collect(),
            BvOr => w[0].iter().zip(&w[1]).map(|(&x, &y)| c.or(x, y)).collect(),
            BvXor => w[0].iter().zip(&w[1]).map(|(&x, &y)| c.xor(x, y)).collect(),
            BvNeg => c.neg_word(&w[0]),
            BvAdd => c.add_words(&w[0], &w[1], Bit::FALSE).0,
            BvSub => c.sub_words(&w[0], &w[1]),
            BvMul => c.mul_words(&w[0], &w[1]),
            BvUdiv => c.udivrem_words(&w[0], &w[1]).0,
            BvUrem => c.udivrem_words(&w[0], &w[1]).1,
            BvShl => c.shift_words(&w[0], &w[1], false, false),
            BvLshr => c.shift_words(&w[0], &w[1], true, false),
            BvAshr => c.shift_words(&w[0], &w[1], true, true),
            Concat => w[1].iter().chain(&w[0]).copied().collect(),
            Extract { hi, lo } => w[0][lo as usize..=hi as usize].to_vec(),
            BvUlt => one(c.ult(&w[0], &w[1])),
            BvUgt => one(c.ult(&w[1], &w[0])),
            BvUle => one(c.ult(&w[1], &w[0]).not()),
            BvUge => one(c.ult(&w[0], &w[1]).not()),
            BvSlt => one(c.slt(&w[0], &w[1])),
            BvSgt => one(c.slt(&w[1], &w[0])),
            BvSle => one(c.slt(&w[1], &w[0]).not()),
            BvSge => one(c.slt(&w[0], &w[1]).not()),
        }
    }
}

/// Result of encoding a term: the signals for its bits plus the clauses and
/// auxiliaries that define them.
pub struct EncodedTerm {
    pub bits: Vec<Bit>,
    pub builder: CnfBuilder,
}

/// Encodes `term` over variables whose bits are given by `env`, allocating
/// auxiliaries from `first_free` upward.
pub fn encode_term(
    term: &Term,
    env: &HashMap<String, Vec<Bit>>,
    first_free: u32,
) -> Result<EncodedTerm, BlastError> {
    let mut b = Blaster {
        cnf: CnfBuilder::new(first_free),
        env,
    };
    let bits = b.word(term)?;
    Ok(EncodedTerm {
        bits,
        builder: b.cnf,
    })
}

/// Bit-blasts a DQF formula.
pub fn blast(formula: &DqfFormula) -> Result<DqbfInstance, BlastError> {
    let mut next: Var = 1;
    let mut alloc = |sort: Sort| -> Vec<Var> {
        let bits: Vec<Var> = (next..next + sort.bits()).collect();
        next += sort.bits();
        bits
    };
    let mut bitmap = BitMap::default();
    let mut env: HashMap<String, Vec<Bit>> = HashMap::new();
    let mut universals = Vec::new();
    for v in &formula.universals {
        let bits = alloc(v.sort);
        universals.extend(&bits);
        env.insert(
            v.name.clone(),
            bits.iter().map(|&b| Bit::Lit(b as i32)).collect(),
        );
        bitmap.push(v.name.clone(), BitRole::Input, bits);
    }
    let mut existentials = Vec::new();
    for y in &formula.existentials {
        let bits = alloc(y.var.sort);
        let deps: Vec<Var> = y
            .deps
            .iter()
            .flat_map(|d| {
                bitmap
                    .get(&d.name)
                    .expect("dependencies are universals")
                    .bits
                    .clone()
            })
            .collect();
        existentials.extend(bits.iter().map(|&var| Existential {
            var,
            deps: deps.clone(),
        }));
        env.insert(
            y.var.name.clone(),
            bits.iter().map(|&b| Bit::Lit(b as i32)).collect(),
        );
        bitmap.push(y.var.name.clone(), BitRole::Output, bits);
    }

    let mut enc = encode_term(&formula.body, &env, next)?;
    debug_assert_eq!(enc.bits.len(), 1);
    enc.builder.assert_bit(enc.bits[0]);
    let num_vars = enc.builder.num_vars().max(next - 1);
    Ok(DqbfInstance {
        num_vars,
        universals,
        existentials,
        auxiliaries: enc.builder.aux,
        clauses: enc.builder.clauses,
        bitmap,
    })
}
