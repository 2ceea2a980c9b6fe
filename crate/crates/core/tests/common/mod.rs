//! Brute-force oracles shared by the integration tests. None of them call
//! into the solver, the bit-blaster or the SAT core.

#![allow(dead_code)]

use std::collections::HashMap;

use dqsynth_core::bitblast::DqbfInstance;
use dqsynth_core::frontend::{eval, BvConst, Sort, SynthProblem, Value};

/// Clause as bit masks over a dense variable numbering.
struct MaskClause {
    pos: u64,
    neg: u64,
}

/// Decides a DQBF by enumerating every vector of Henkin function tables.
pub fn henkin_oracle(inst: &DqbfInstance) -> bool {
    let exist = inst.all_existentials();
    let mut slot: HashMap<u32, usize> = HashMap::new();
    for (i, &u) in inst.universals.iter().enumerate() {
        slot.insert(u, i);
    }
    let n = inst.universals.len();
    for (j, (e, _)) in exist.iter().enumerate() {
        slot.insert(*e, n + j);
    }
    assert!(n + exist.len() <= 64);
    let clauses: Vec<MaskClause> = inst
        .clauses
        .iter()
        .map(|c| {
            let mut m = MaskClause { pos: 0, neg: 0 };
            for &l in c {
                let bit = 1u64 << slot[&l.unsigned_abs()];
                if l > 0 {
                    m.pos |= bit;
                } else {
                    m.neg |= bit;
                }
            }
            m
        })
        .collect();
    // Table layout: function j occupies bits [offset_j, offset_j + 2^|deps_j|).
    let mut offsets = Vec::new();
    let mut total = 0u32;
    for (_, deps) in &exist {
        offsets.push(total);
        total += 1 << deps.len();
    }
    assert!(total <= 24, "oracle table space too large");
    let dep_slots: Vec<Vec<usize>> = exist
        .iter()
        .map(|(_, d)| d.iter().map(|v| slot[v]).collect())
        .collect();
    'tables: for code in 0u64..1 << total {
        for a in 0u64..1 << n {
            let mut full = a;
            for (j, deps) in dep_slots.iter().enumerate() {
                let row = deps
                    .iter()
                    .enumerate()
                    .fold(0u32, |r, (k, &s)| r | ((((a >> s) & 1) as u32) << k));
                if (code >> (offsets[j] + row)) & 1 == 1 {
                    full |= 1 << (n + j);
                }
            }
            if clauses
                .iter()
                .any(|c| full & c.pos == 0 && !full & c.neg == 0)
            {
                continue 'tables;
            }
        }
        return true;
    }
    false
}

/// Number of bits needed to tabulate every synthesized function.
pub fn table_bits(problem: &SynthProblem) -> u32 {
    problem
        .functions
        .iter()
        .map(|f| {
            let k: u32 = f.params.iter().map(|p| p.sort.bits()).sum();
            f.ret.bits() << k
        })
        .sum()
}

fn value_from(sort: Sort, bits: u64) -> Value {
    match sort {
        Sort::Bool => Value::Bool(bits & 1 == 1),
        Sort::BitVec(w) => Value::Bv(BvConst::new(w, u128::from(bits))),
    }
}

fn value_bits(v: Value) -> u64 {
    match v {
        Value::Bool(b) => u64::from(b),
        Value::Bv(c) => c.value() as u64,
    }
}

/// Decides realizability by enumerating every function table and every
/// input assignment, evaluating the constraints directly.
pub fn table_oracle(problem: &SynthProblem) -> bool {
    let total = table_bits(problem);
    assert!(total <= 16, "oracle table space too large");
    let input_bits: u32 = problem.inputs.iter().map(|v| v.sort.bits()).sum();
    let spec = problem.spec();
    let mut offsets = HashMap::new();
    let mut off = 0u32;
    for f in &problem.functions {
        let k: u32 = f.params.iter().map(|p| p.sort.bits()).sum();
        offsets.insert(f.name.clone(), (off, f.ret));
        off += f.ret.bits() << k;
    }
    'tables: for code in 0u64..1 << total {
        for a in 0u64..1 << input_bits {
            let mut env = HashMap::new();
            let mut shift = 0;
            for v in &problem.inputs {
                let w = v.sort.bits();
                env.insert(
                    v.name.clone(),
                    value_from(v.sort, (a >> shift) & ((1 << w) - 1)),
                );
                shift += w;
            }
            let mut call = |name: &str, args: &[Value]| -> Option<Value> {
                let (base, ret) = offsets[name];
                let mut row = 0u64;
                let mut s = 0;
                for arg in args {
                    let (bits, w) = match arg {
                        Value::Bool(b) => (u64::from(*b), 1),
                        Value::Bv(c) => (c.value() as u64, c.width()),
                    };
                    row |= bits << s;
                    s += w;
                }
                let w = ret.bits() as u64;
                let start = base as u64 + row * w;
                Some(value_from(ret, (code >> start) & ((1 << w) - 1)))
            };
            let holds = eval(&spec, &|n| env.get(n).copied(), &mut call)
                .expect("closed problem")
                .as_bool();
            if !holds {
                continue 'tables;
            }
        }
        return true;
    }
    false
}

/// Integer semantics of the bitvector operators at width `w`, written
/// independently of the library's evaluator.
pub mod reference {
    pub fn mask(w: u32) -> u64 {
        (1u64 << w) - 1
    }

    pub fn signed(x: u64, w: u32) -> i64 {
        if (x >> (w - 1)) & 1 == 1 {
            x as i64 - (1i64 << w)
        } else {
            x as i64
        }
    }

    pub fn unary(op: &str, a: u64, w: u32) -> u64 {
        let m = mask(w);
        match op {
            "bvnot" => !a & m,
            "bvneg" => a.wrapping_neg() & m,
            _ => panic!("{op}"),
        }
    }

    pub fn binary(op: &str, a: u64, b: u64, w: u32) -> u64 {
        let m = mask(w);
        match op {
            "bvand" => a & b,
            "bvor" => a | b,
            "bvxor" => a ^ b,
            "bvadd" => a.wrapping_add(b) & m,
            "bvsub" => a.wrapping_sub(b) & m,
            "bvmul" => a.wrapping_mul(b) & m,
            "bvudiv" => {
                if b == 0 {
                    m
                } else {
                    a / b
                }
            }
            "bvurem" => {
                if b == 0 {
                    a
                } else {
                    a % b
                }
            }
            "bvshl" => {
                if b >= w as u64 {
                    0
                } else {
                    (a << b) & m
                }
            }
            "bvlshr" => {
                if b >= w as u64 {
                    0
                } else {
                    a >> b
                }
            }
            "bvashr" => {
                let s = signed(a, w);
                let shifted = if b >= w as u64 { s >> 63 } else { s >> b };
                shifted as u64 & m
            }
            _ => panic!("{op}"),
        }
    }

    pub fn compare(op: &str, a: u64, b: u64, w: u32) -> bool {
        let (sa, sb) = (signed(a, w), signed(b, w));
        match op {
            "=" => a == b,
            "bvult" => a < b,
            "bvule" => a <= b,
            "bvugt" => a > b,
            "bvuge" => a >= b,
            "bvslt" => sa < sb,
            "bvsle" => sa <= sb,
            "bvsgt" => sa > sb,
            "bvsge" => sa >= sb,
            _ => panic!("{op}"),
        }
    }
}

pub fn value_to_u64(v: Value) -> u64 {
    value_bits(v)
}
