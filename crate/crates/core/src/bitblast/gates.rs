//! Tseitin gate construction with constant folding and structural hashing.

use std::collections::HashMap;

/// A propositional signal: a constant or a DIMACS literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Const(bool),
    Lit(i32),
}

impl Bit {
    pub const TRUE: Bit = Bit::Const(true);
    pub const FALSE: Bit = Bit::Const(false);

    pub fn not(self) -> Bit {
        match self {
            Bit::Const(b) => Bit::Const(!b),
            Bit::Lit(l) => Bit::Lit(-l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum GateKey {
    And(Vec<i32>),
    Xor(i32, i32),
    Ite(i32, i32, i32),
}

/// Accumulates CNF clauses; every gate output is a fresh auxiliary variable.
#[derive(Debug, Default)]
pub struct CnfBuilder {
    next_var: u32,
    pub clauses: Vec<Vec<i32>>,
    pub aux: Vec<u32>,
    cache: HashMap<GateKey, i32>,
}

impl CnfBuilder {
    /// `first_free` is the first variable id the builder may allocate.
    pub fn new(first_free: u32) -> Self {
        CnfBuilder {
            next_var: first_free,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.next_var - 1
    }

    fn fresh_aux(&mut self) -> i32 {
        let v = self.next_var;
        self.next_var += 1;
        self.aux.push(v);
        v as i32
    }

    pub fn add_clause(&mut self, clause: Vec<i32>) {
        self.clauses.push(clause);
    }

    /// Asserts that `b` holds.
    pub fn assert_bit(&mut self, b: Bit) {
        match b {
            Bit::Lit(l) => self.add_clause(vec![l]),
            Bit::Const(value) => {
                let t = self.fresh_aux();
                self.add_clause(vec![t]);
                if !value {
                    self.add_clause(vec![-t]);
                }
            }
        }
    }

    pub fn and_n(&mut self, inputs: &[Bit]) -> Bit {
        let mut lits: Vec<i32> = Vec::with_capacity(inputs.len());
        for b in inputs {
            match *b {
                Bit::Const(false) => return Bit::FALSE,
                Bit::Const(true) => {}
                Bit::Lit(l) => lits.push(l),
            }
        }
        lits.sort_unstable_by_key(|l| (l.abs(), *l));
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == -w[1]) {
            return Bit::FALSE;
        }
        match lits.len() {
            0 => return Bit::TRUE,
            1 => return Bit::Lit(lits[0]),
            _ => {}
        }
        let key = GateKey::And(lits.clone());
        if let Some(&t) = self.cache.get(&key) {
            return Bit::Lit(t);
        }
        let t = self.fresh_aux();
        for &l in &lits {
            self.add_clause(vec![-t, l]);
        }
        let mut long = vec![t];
        long.extend(lits.iter().map(|l| -l));
        self.add_clause(long);
        self.cache.insert(key, t);
        Bit::Lit(t)
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        self.and_n(&[a, b])
    }

    pub fn or_n(&mut self, inputs: &[Bit]) -> Bit {
        let negated: Vec<Bit> = inputs.iter().map(|b| b.not()).collect();
        self.and_n(&negated).not()
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        self.or_n(&[a, b])
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        let (a, b) = match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => return Bit::Const(x ^ y),
            (Bit::Const(x), other) | (other, Bit::Const(x)) => {
                return if x { other.not() } else { other };
            }
            (Bit::Lit(a), Bit::Lit(b)) => (a, b),
        };
        if a == b {
            return Bit::FALSE;
        }
        if a == -b {
            return Bit::TRUE;
        }
        // Factor signs out so that both operands are positive.
        let flip = (a < 0) ^ (b < 0);
        let (x, y) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
        let key = GateKey::Xor(x, y);
        let t = match self.cache.get(&key) {
            Some(&t) => t,
            None => {
                let t = self.fresh_aux();
                self.add_clause(vec![-t, x, y]);
                self.add_clause(vec![-t, -x, -y]);
                self.add_clause(vec![t, -x, y]);
                self.add_clause(vec![t, x, -y]);
                self.cache.insert(key, t);
                t
            }
        };
        if flip {
            Bit::Lit(-t)
        } else {
            Bit::Lit(t)
        }
    }

    pub fn xnor(&mut self, a: Bit, b: Bit) -> Bit {
        self.xor(a, b).not()
    }

    pub fn ite(&mut self, c: Bit, a: Bit, b: Bit) -> Bit {
        match c {
            Bit::Const(true) => return a,
            Bit::Const(false) => return b,
            Bit::Lit(_) => {}
        }
        if a == b {
            return a;
        }
        match (a, b) {
            (Bit::Const(true), _) => return self.or(c, b),
            (Bit::Const(false), _) => return self.and(c.not(), b),
            (_, Bit::Const(true)) => return self.or(c.not(), a),
            (_, Bit::Const(false)) => return self.and(c, a),
            _ => {}
        }
        if a == b.not() {
            return self.xnor(c, a);
        }
        let (Bit::Lit(mut cl), Bit::Lit(mut al), Bit::Lit(mut bl)) = (c, a, b) else {
            unreachable!()
        };
        if cl < 0 {
            cl = -cl;
            std::mem::swap(&mut al, &mut bl);
        }
        let key = GateKey::Ite(cl, al, bl);
        if let Some(&t) = self.cache.get(&key) {
            return Bit::Lit(t);
        }
        let t = self.fresh_aux();
        self.add_clause(vec![-t, -cl, al]);
        self.add_clause(vec![-t, cl, bl]);
        self.add_clause(vec![t, -cl, -al]);
        self.add_clause(vec![t, cl, -bl]);
        self.cache.insert(key, t);
        Bit::Lit(t)
    }

    // Word-level circuits. Words are least-significant bit first.

    /// Ripple-carry addition; returns (sum, carry out).
    pub fn add_words(&mut self, a: &[Bit], b: &[Bit], carry_in: Bit) -> (Vec<Bit>, Bit) {
        debug_assert_eq!(a.len(), b.len());
        let mut carry = carry_in;
        let mut sum = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let p = self.xor(x, y);
            sum.push(self.xor(p, carry));
            let g = self.and(x, y);
            let pc = self.and(p, carry);
            carry = self.or(g, pc);
        }
        (sum, carry)
    }

    pub fn sub_words(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let nb: Vec<Bit> = b.iter().map(|x| x.not()).collect();
        self.add_words(a, &nb, Bit::TRUE).0
    }

    pub fn neg_word(&mut self, a: &[Bit]) -> Vec<Bit> {
        let na: Vec<Bit> = a.iter().map(|x| x.not()).collect();
        let zero = vec![Bit::FALSE; a.len()];
        self.add_words(&na, &zero, Bit::TRUE).0
    }

    /// Shift-and-add multiplication, truncated to the operand width.
    pub fn mul_words(&mut self, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        let w = a.len();
        let mut acc = vec![Bit::FALSE; w];
        for i in 0..w {
            if b[i] == Bit::FALSE {
                continue;
            }
            let partial: Vec<Bit> = (i..w).map(|j| self.and(a[j - i], b[i])).collect();
            let (high, _) = self.add_words(&acc[i..], &partial, Bit::FALSE);
            acc.splice(i.., high);
        }
        acc
    }

    /// a < b, unsigned.
    pub fn ult(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let mut lt = Bit::FALSE;
        for (&x, &y) in a.iter().zip(b) {
            let differ = self.xor(x, y);
            lt = self.ite(differ, y, lt);
        }
        lt
    }

    /// a < b, two's complement.
    pub fn slt(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let flip = |w: &[Bit]| {
            let mut w = w.to_vec();
            let top = w.len() - 1;
            w[top] = w[top].not();
            w
        };
        self.ult(&flip(a), &flip(b))
    }

    pub fn eq_words(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let bits: Vec<Bit> = a.iter().zip(b).map(|(&x, &y)| self.xnor(x, y)).collect();
        self.and_n(&bits)
    }

    pub fn ite_words(&mut self, c: Bit, a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        a.iter().zip(b).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    /// Restoring division with SMT-LIB totalization: a udiv 0 = all ones and
    /// a urem 0 = a both fall out of the construction.
    pub fn udivrem_words(&mut self, a: &[Bit], b: &[Bit]) -> (Vec<Bit>, Vec<Bit>) {
        let w = a.len();
        let mut rem = vec![Bit::FALSE; w];
        let mut quot = vec![Bit::FALSE; w];
        let mut divisor = b.to_vec();
        divisor.push(Bit::FALSE);
        for i in (0..w).rev() {
            let mut shifted = Vec::with_capacity(w + 1);
            shifted.push(a[i]);
            shifted.extend_from_slice(&rem);
            let lt = self.ult(&shifted, &divisor);
            let fits = lt.not();
            let diff = self.sub_words(&shifted, &divisor);
            let next = self.ite_words(fits, &diff[..w], &shifted[..w]);
            rem = next;
            quot[i] = fits;
        }
        (quot, rem)
    }

    /// Barrel shifter. `right` selects direction; `arith` fills with the sign bit.
    pub fn shift_words(&mut self, a: &[Bit], amount: &[Bit], right: bool, arith: bool) -> Vec<Bit> {
        let w = a.len();
        let fill = if arith { a[w - 1] } else { Bit::FALSE };
        let mut cur = a.to_vec();
        for (k, &s) in amount.iter().enumerate() {
            let step = 1usize.checked_shl(k as u32).unwrap_or(usize::MAX);
            let shifted: Vec<Bit> = (0..w)
                .map(|i| {
                    if right {
                        match i.checked_add(step) {
                            Some(j) if j < w => cur[j],
                            _ => fill,
                        }
                    } else if i >= step {
                        cur[i - step]
                    } else {
                        Bit::FALSE
                    }
                })
                .collect();
            cur = self.ite_words(s, &shifted, &cur);
        }
        cur
    }
}
