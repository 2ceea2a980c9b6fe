//! Concrete evaluation of terms, following SMT-LIB semantics (including the
//! total definitions of `bvudiv`/`bvurem` on a zero divisor).

use thiserror::Error;

use super::term::{mask, BvConst, Op, Term, TermKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Bv(BvConst),
}

impl Value {
    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Bv(_) => panic!("expected a Bool value"),
        }
    }

    pub fn as_bv(self) -> BvConst {
        match self {
            Value::Bv(c) => c,
            Value::Bool(_) => panic!("expected a bitvector value"),
        }
    }

    /// Propositional bits, least significant first. Bool is a single bit.
    pub fn to_bits(self) -> Vec<bool> {
        match self {
            Value::Bool(b) => vec![b],
            Value::Bv(c) => c.to_bits(),
        }
    }

    pub fn to_term(self) -> Term {
        match self {
            Value::Bool(b) => Term::bool(b),
            Value::Bv(c) => Term::bv(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("no interpretation for function `{0}`")]
    UnknownFunction(String),
}

/// Evaluates `term` with variables looked up in `env` and function applications
/// interpreted by `call` (which returns `None` for unknown symbols).
pub fn eval(
    term: &Term,
    env: &dyn Fn(&str) -> Option<Value>,
    call: &mut dyn FnMut(&str, &[Value]) -> Option<Value>,
) -> Result<Value, EvalError> {
    match term.kind() {
        TermKind::Var(v) => env(v).ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        TermKind::BoolConst(b) => Ok(Value::Bool(*b)),
        TermKind::BvConst(c) => Ok(Value::Bv(*c)),
        TermKind::Call(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval(a, env, call))
                .collect::<Result<Vec<_>, _>>()?;
            call(name, &vals).ok_or_else(|| EvalError::UnknownFunction(name.clone()))
        }
        TermKind::App(op, args) => {
            // Short-circuiting is irrelevant for total semantics; evaluate eagerly.
            let vals = args
                .iter()
                .map(|a| eval(a, env, call))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(apply(*op, &vals))
        }
    }
}

/// Evaluates a closed, call-free term.
pub fn eval_closed(term: &Term) -> Result<Value, EvalError> {
    eval(term, &|_| None, &mut |_, _| None)
}

fn to_signed(c: BvConst) -> i128 {
    let w = c.width();
    if w == 128 {
        return c.value() as i128;
    }
    if c.bit(w - 1) {
        c.value() as i128 - (1i128 << w)
    } else {
        c.value() as i128
    }
}

/// Applies an operator to already-evaluated operands.
pub fn apply(op: Op, vals: &[Value]) -> Value {
    use Op::*;
    let bv = |i: usize| vals[i].as_bv();
    let b = |i: usize| vals[i].as_bool();
    let mk = |w: u32, v: u128| Value::Bv(BvConst::new(w, v));
    match op {
        Not => Value::Bool(!b(0)),
        And => Value::Bool(vals.iter().all(|v| v.as_bool())),
        Or => Value::Bool(vals.iter().any(|v| v.as_bool())),
        Xor => Value::Bool(b(0) ^ b(1)),
        Implies => Value::Bool(!b(0) || b(1)),
        Eq => Value::Bool(vals[0] == vals[1]),
        Ite => {
            if b(0) {
                vals[1]
            } else {
                vals[2]
            }
        }
        BvNot => mk(bv(0).width(), !bv(0).value()),
        BvNeg => mk(bv(0).width(), bv(0).value().wrapping_neg()),
        BvAnd => mk(bv(0).width(), bv(0).value() & bv(1).value()),
        BvOr => mk(bv(0).width(), bv(0).value() | bv(1).value()),
        BvXor => mk(bv(0).width(), bv(0).value() ^ bv(1).value()),
        BvAdd => mk(bv(0).width(), bv(0).value().wrapping_add(bv(1).value())),
        BvSub => mk(bv(0).width(), bv(0).value().wrapping_sub(bv(1).value())),
        BvMul => mk(bv(0).width(), bv(0).value().wrapping_mul(bv(1).value())),
        BvUdiv => {
            let (x, y) = (bv(0), bv(1));
            if y.value() == 0 {
                mk(x.width(), mask(x.width()))
            } else {
                mk(x.width(), x.value() / y.value())
            }
        }
        BvUrem => {
            let (x, y) = (bv(0), bv(1));
            if y.value() == 0 {
                Value::Bv(x)
            } else {
                mk(x.width(), x.value() % y.value())
            }
        }
        BvShl => {
            let (x, s) = (bv(0), bv(1));
            if s.value() >= x.width() as u128 {
                mk(x.width(), 0)
            } else {
                mk(x.width(), x.value() << s.value())
            }
        }
        BvLshr => {
            let (x, s) = (bv(0), bv(1));
            if s.value() >= x.width() as u128 {
                mk(x.width(), 0)
            } else {
                mk(x.width(), x.value() >> s.value())
            }
        }
        BvAshr => {
            let (x, s) = (bv(0), bv(1));
            let w = x.width();
            let negative = x.bit(w - 1);
            if s.value() >= w as u128 {
                mk(w, if negative { mask(w) } else { 0 })
            } else {
                let s = s.value() as u32;
                let shifted = x.value() >> s;
                let fill = if negative && s > 0 {
                    mask(w) & !(mask(w) >> s)
                } else {
                    0
                };
                mk(w, shifted | fill)
            }
        }
        Concat => {
            let (hi, lo) = (bv(0), bv(1));
            mk(
                hi.width() + lo.width(),
                (hi.value() << lo.width()) | lo.value(),
            )
        }
        Extract { hi, lo } => mk(hi - lo + 1, bv(0).value() >> lo),
        BvUlt => Value::Bool(bv(0).value() < bv(1).value()),
        BvUle => Value::Bool(bv(0).value() <= bv(1).value()),
        BvUgt => Value::Bool(bv(0).value() > bv(1).value()),
        BvUge => Value::Bool(bv(0).value() >= bv(1).value()),
        BvSlt => Value::Bool(to_signed(bv(0)) < to_signed(bv(1))),
        BvSle => Value::Bool(to_signed(bv(0)) <= to_signed(bv(1))),
        BvSgt => Value::Bool(to_signed(bv(0)) > to_signed(bv(1))),
        BvSge => Value::Bool(to_signed(bv(0)) >= to_signed(bv(1))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(w: u32, x: u128) -> Value {
        Value::Bv(BvConst::new(w, x))
    }

    #[test]
    fn division_by_zero_is_total() {
        assert_eq!(apply(Op::BvUdiv, &[v(3, 5), v(3, 0)]), v(3, 7));
        assert_eq!(apply(Op::BvUrem, &[v(3, 5), v(3, 0)]), v(3, 5));
        assert_eq!(apply(Op::BvUdiv, &[v(3, 7), v(3, 2)]), v(3, 3));
    }

    #[test]
    fn shifts_saturate() {
        assert_eq!(apply(Op::BvShl, &[v(3, 0b011), v(3, 1)]), v(3, 0b110));
        assert_eq!(apply(Op::BvShl, &[v(3, 0b011), v(3, 3)]), v(3, 0));
        assert_eq!(apply(Op::BvAshr, &[v(3, 0b100), v(3, 1)]), v(3, 0b110));
        assert_eq!(apply(Op::BvAshr, &[v(3, 0b100), v(3, 5)]), v(3, 0b111));
        assert_eq!(apply(Op::BvLshr, &[v(3, 0b100), v(3, 2)]), v(3, 0b001));
    }

    #[test]
    fn signed_comparison() {
        // 0b11 = -1 < 0b01 = 1
        assert_eq!(apply(Op::BvSlt, &[v(2, 3), v(2, 1)]), Value::Bool(true));
        assert_eq!(apply(Op::BvUlt, &[v(2, 3), v(2, 1)]), Value::Bool(false));
    }

    #[test]
    fn concat_and_extract() {
        assert_eq!(apply(Op::Concat, &[v(2, 0b10), v(1, 1)]), v(3, 0b101));
        assert_eq!(
            apply(Op::Extract { hi: 2, lo: 1 }, &[v(4, 0b0110)]),
            v(2, 0b11)
        );
    }
}
