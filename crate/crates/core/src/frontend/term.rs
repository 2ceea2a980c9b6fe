//! Sorted terms over the Core and fixed-size bitvector theories.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Largest bitvector width the term layer accepts.
pub const MAX_WIDTH: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    BitVec(u32),
}

impl Sort {
    /// Number of propositional bits a value of this sort occupies.
    pub fn bits(self) -> u32 {
        match self {
            Sort::Bool => 1,
            Sort::BitVec(w) => w,
        }
    }

    pub fn is_bv(self) -> bool {
        matches!(self, Sort::BitVec(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "Bool"),
            Sort::BitVec(w) => write!(f, "(_ BitVec {w})"),
        }
    }
}

/// A bitvector literal. Bits above `width` are always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BvConst {
    width: u32,
    value: u128,
}

pub(crate) fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

impl BvConst {
    pub fn new(width: u32, value: u128) -> Self {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bitvector width {width} out of range"
        );
        BvConst {
            width,
            value: value & mask(width),
        }
    }

    pub fn zero(width: u32) -> Self {
        Self::new(width, 0)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn bit(&self, i: u32) -> bool {
        (self.value >> i) & 1 == 1
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i));
        Self::new(bits.len() as u32, value)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.bit(i)).collect()
    }
}

impl fmt::Display for BvConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#b")?;
        for i in (0..self.width).rev() {
            write!(f, "{}", if self.bit(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    // Core
    Not,
    And,
    Or,
    Xor,
    Implies,
    Eq,
    Ite,
    // Bitvector
    BvNot,
    BvAnd,
    BvOr,
    BvXor,
    BvNeg,
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvUrem,
    BvShl,
    BvLshr,
    BvAshr,
    Concat,
    Extract { hi: u32, lo: u32 },
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    BvSlt,
    BvSle,
    BvSgt,
    BvSge,
}

impl Op {
    /// Surface name used by the printer, for every operator except `Extract`.
    pub fn name(self) -> &'static str {
        use Op::*;
        match self {
            Not => "not",
            And => "and",
            Or => "or",
            Xor => "xor",
            Implies => "=>",
            Eq => "=",
            Ite => "ite",
            BvNot => "bvnot",
            BvAnd => "bvand",
            BvOr => "bvor",
            BvXor => "bvxor",
            BvNeg => "bvneg",
            BvAdd => "bvadd",
            BvSub => "bvsub",
            BvMul => "bvmul",
            BvUdiv => "bvudiv",
            BvUrem => "bvurem",
            BvShl => "bvshl",
            BvLshr => "bvlshr",
            BvAshr => "bvashr",
            Concat => "concat",
            Extract { .. } => "extract",
            BvUlt => "bvult",
            BvUle => "bvule",
            BvUgt => "bvugt",
            BvUge => "bvuge",
            BvSlt => "bvslt",
            BvSle => "bvsle",
            BvSgt => "bvsgt",
            BvSge => "bvsge",
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        use Op::*;
        Some(match name {
            "not" => Not,
            "and" => And,
            "or" => Or,
            "xor" => Xor,
            "=>" => Implies,
            "=" => Eq,
            "ite" => Ite,
            "bvnot" => BvNot,
            "bvand" => BvAnd,
            "bvor" => BvOr,
            "bvxor" => BvXor,
            "bvneg" => BvNeg,
            "bvadd" => BvAdd,
            "bvsub" => BvSub,
            "bvmul" => BvMul,
            "bvudiv" => BvUdiv,
            "bvurem" => BvUrem,
            "bvshl" => BvShl,
            "bvlshr" => BvLshr,
            "bvashr" => BvAshr,
            "concat" => Concat,
            "bvult" => BvUlt,
            "bvule" => BvUle,
            "bvugt" => BvUgt,
            "bvuge" => BvUge,
            "bvslt" => BvSlt,
            "bvsle" => BvSle,
            "bvsgt" => BvSgt,
            "bvsge" => BvSge,
            _ => return None,
        })
    }

    /// Every binary bitvector operator that returns a bitvector of its operands' width.
    pub const BV_BINARY: [Op; 11] = [
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

    pub const BV_COMPARISONS: [Op; 8] = [
        Op::BvUlt,
        Op::BvUle,
        Op::BvUgt,
        Op::BvUge,
        Op::BvSlt,
        Op::BvSle,
        Op::BvSgt,
        Op::BvSge,
    ];

    /// Result sort of applying `self` to operands of the given sorts.
    pub fn result_sort(self, args: &[Sort]) -> Result<Sort, SortError> {
        use Op::*;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(SortError::Arity {
                    op: self.to_string(),
                    expected: n,
                    found: args.len(),
                })
            }
        };
        let mismatch = || SortError::Mismatch {
            op: self.to_string(),
            found: args.to_vec(),
        };
        match self {
            Not => {
                arity(1)?;
                (args[0] == Sort::Bool)
                    .then_some(Sort::Bool)
                    .ok_or_else(mismatch)
            }
            And | Or => {
                if args.is_empty() {
                    return Err(SortError::Arity {
                        op: self.to_string(),
                        expected: 1,
                        found: 0,
                    });
                }
                args.iter()
                    .all(|s| *s == Sort::Bool)
                    .then_some(Sort::Bool)
                    .ok_or_else(mismatch)
            }
            Xor | Implies => {
                arity(2)?;
                (args[0] == Sort::Bool && args[1] == Sort::Bool)
                    .then_some(Sort::Bool)
                    .ok_or_else(mismatch)
            }
            Eq => {
                arity(2)?;
                (args[0] == args[1])
                    .then_some(Sort::Bool)
                    .ok_or_else(mismatch)
            }
            Ite => {
                arity(3)?;
                (args[0] == Sort::Bool && args[1] == args[2])
                    .then_some(args[1])
                    .ok_or_else(mismatch)
            }
            BvNot | BvNeg => {
                arity(1)?;
                args[0].is_bv().then_some(args[0]).ok_or_else(mismatch)
            }
            BvAnd | BvOr | BvXor | BvAdd | BvSub | BvMul | BvUdiv | BvUrem | BvShl | BvLshr
            | BvAshr => {
                arity(2)?;
                (args[0].is_bv() && args[0] == args[1])
                    .then_some(args[0])
                    .ok_or_else(mismatch)
            }
            BvUlt | BvUle | BvUgt | BvUge | BvSlt | BvSle | BvSgt | BvSge => {
                arity(2)?;
                (args[0].is_bv() && args[0] == args[1])
                    .then_some(Sort::Bool)
                    .ok_or_else(mismatch)
            }
            Concat => {
                arity(2)?;
                match (args[0], args[1]) {
                    (Sort::BitVec(a), Sort::BitVec(b)) if a + b <= MAX_WIDTH => {
                        Ok(Sort::BitVec(a + b))
                    }
                    _ => Err(mismatch()),
                }
            }
            Extract { hi, lo } => {
                arity(1)?;
                match args[0] {
                    Sort::BitVec(w) if lo <= hi && hi < w => Ok(Sort::BitVec(hi - lo + 1)),
                    _ => Err(mismatch()),
                }
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Extract { hi, lo } => write!(f, "(_ extract {hi} {lo})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("`{op}` expects {expected} argument(s), found {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("`{op}` is not defined on argument sorts {found:?}")]
    Mismatch { op: String, found: Vec<Sort> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Var(String),
    BoolConst(bool),
    BvConst(BvConst),
    App(Op, Vec<Term>),
    /// Application of a function symbol that is being synthesized (or defined).
    Call(String, Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    kind: TermKind,
    sort: Sort,
}

impl Term {
    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term {
            kind: TermKind::Var(name.into()),
            sort,
        }
    }

    pub fn bool(b: bool) -> Term {
        Term {
            kind: TermKind::BoolConst(b),
            sort: Sort::Bool,
        }
    }

    pub fn bv(c: BvConst) -> Term {
        Term {
            sort: Sort::BitVec(c.width()),
            kind: TermKind::BvConst(c),
        }
    }

    pub fn bv_value(width: u32, value: u128) -> Term {
        Term::bv(BvConst::new(width, value))
    }

    /// Sort-checked operator application.
    pub fn app(op: Op, args: Vec<Term>) -> Result<Term, SortError> {
        let sorts: Vec<Sort> = args.iter().map(|a| a.sort).collect();
        let sort = op.result_sort(&sorts)?;
        Ok(Term {
            kind: TermKind::App(op, args),
            sort,
        })
    }

    /// Application of a function symbol with a known return sort. Argument sorts are the
    /// caller's responsibility.
    pub fn call(name: impl Into<String>, args: Vec<Term>, ret: Sort) -> Term {
        Term {
            kind: TermKind::Call(name.into(), args),
            sort: ret,
        }
    }

    // Infallible builders for callers that already know the operands are well sorted.

    pub fn not(t: Term) -> Term {
        Term::app(Op::Not, vec![t]).expect("not: operand must be Bool")
    }

    pub fn and(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::bool(true),
            1 => ts.pop().unwrap(),
            _ => Term::app(Op::And, ts).expect("and: operands must be Bool"),
        }
    }

    pub fn or(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::bool(false),
            1 => ts.pop().unwrap(),
            _ => Term::app(Op::Or, ts).expect("or: operands must be Bool"),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::app(Op::Implies, vec![a, b]).expect("=>: operands must be Bool")
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::app(Op::Eq, vec![a, b]).expect("=: operand sorts must agree")
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::app(Op::Ite, vec![c, t, e]).expect("ite: ill-sorted operands")
    }

    pub fn extract(hi: u32, lo: u32, t: Term) -> Term {
        Term::app(Op::Extract { hi, lo }, vec![t]).expect("extract: range out of bounds")
    }

    pub fn concat(hi: Term, lo: Term) -> Term {
        Term::app(Op::Concat, vec![hi, lo]).expect("concat: operands must be bitvectors")
    }

    pub fn kind(&self) -> &TermKind {
        &self.kind
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn children(&self) -> &[Term] {
        match &self.kind {
            TermKind::App(_, args) | TermKind::Call(_, args) => args,
            _ => &[],
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            TermKind::Var(name) => Some(name),
            _ => None,
        }
    }

    pub fn as_call(&self) -> Option<(&str, &[Term])> {
        match &self.kind {
            TermKind::Call(name, args) => Some((name, args)),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self.kind, TermKind::BoolConst(true))
    }

    pub fn is_false(&self) -> bool {
        matches!(self.kind, TermKind::BoolConst(false))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Term::size).sum::<usize>()
    }

    /// Rebuilds this node with new children of identical sorts.
    pub fn with_children(&self, children: Vec<Term>) -> Term {
        let kind = match &self.kind {
            TermKind::App(op, _) => TermKind::App(*op, children),
            TermKind::Call(name, _) => TermKind::Call(name.clone(), children),
            other => {
                debug_assert!(children.is_empty());
                other.clone()
            }
        };
        Term {
            kind,
            sort: self.sort,
        }
    }

    /// Bottom-up rewrite: `f` sees each node after its children have been rewritten.
    pub fn rewrite_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let rebuilt = if self.children().is_empty() {
            self.clone()
        } else {
            let children = self
                .children()
                .iter()
                .map(|c| c.rewrite_bottom_up(f))
                .collect();
            self.with_children(children)
        };
        f(rebuilt)
    }

    /// Preorder traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let TermKind::Var(v) = &t.kind {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Every `Call` node, in preorder.
    pub fn calls(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
            if matches!(t.kind, TermKind::Call(..)) {
                out.push(t);
            }
            for c in t.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= matches!(t.kind, TermKind::Call(..)));
        found
    }

    /// Simultaneous substitution of variables by terms of the same sort.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Term>) -> Term {
        self.rewrite_bottom_up(&mut |t| match &t.kind {
            TermKind::Var(v) => map(v).unwrap_or(t),
            _ => t,
        })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TermKind::Var(v) => f.write_str(v),
            TermKind::BoolConst(b) => write!(f, "{b}"),
            TermKind::BvConst(c) => write!(f, "{c}"),
            TermKind::App(op, args) => {
                write!(f, "({op}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            TermKind::Call(name, args) => {
                if args.is_empty() {
                    return f.write_str(name);
                }
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_checking_rejects_mixed_widths() {
        let a = Term::var("a", Sort::BitVec(4));
        let b = Term::var("b", Sort::BitVec(3));
        assert!(Term::app(Op::BvAdd, vec![a.clone(), b.clone()]).is_err());
        let c = Term::app(Op::Concat, vec![a.clone(), b]).unwrap();
        assert_eq!(c.sort(), Sort::BitVec(7));
        assert!(Term::app(Op::Extract { hi: 4, lo: 0 }, vec![a.clone()]).is_err());
        assert_eq!(
            Term::app(Op::BvUlt, vec![a.clone(), a]).unwrap().sort(),
            Sort::Bool
        );
    }

    #[test]
    fn bool_and_bv1_are_distinct() {
        let p = Term::var("p", Sort::Bool);
        let q = Term::var("q", Sort::BitVec(1));
        assert!(Term::app(Op::Eq, vec![p, q]).is_err());
        assert_eq!(Sort::Bool.bits(), Sort::BitVec(1).bits());
    }

    #[test]
    fn constants_print_in_binary() {
        assert_eq!(BvConst::new(4, 5).to_string(), "#b0101");
        assert_eq!(BvConst::new(2, 7).value(), 3);
        assert_eq!(BvConst::from_bits(&[true, false, true]).value(), 5);
    }
}
