use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::warn;
use thiserror::Error;

use super::sexp::{read_all, Pos, Sexp, SexpKind};
use super::term::{Op, Sort, Term, MAX_WIDTH};
use super::{FunctionDefinition, SynthFun, SynthProblem, Variable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownOperator,
    UnknownSymbol,
    SortMismatch,
    Duplicate,
    Unsupported,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownOperator => "unknown operator",
            ParseErrorKind::UnknownSymbol => "unknown symbol",
            ParseErrorKind::SortMismatch => "sort mismatch",
            ParseErrorKind::Duplicate => "duplicate declaration",
            ParseErrorKind::Unsupported => "unsupported feature",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{pos}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Pos,
    pub message: String,
}

type Result<T> = std::result::Result<T, ParseError>;

fn error(kind: ParseErrorKind, at: &Sexp, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        pos: at.pos,
        message: message.into(),
    }
}

/// SMT-LIB operators that exist but are outside the supported subset.
const KNOWN_UNSUPPORTED: &[&str] = &[
    "distinct",
    "bvnand",
    "bvnor",
    "bvxnor",
    "bvcomp",
    "bvsdiv",
    "bvsrem",
    "bvsmod",
    "bvredor",
    "bvredand",
    "zero_extend",
    "sign_extend",
    "rotate_left",
    "rotate_right",
    "repeat",
    "forall",
    "exists",
    "!",
];

/// A `define-fun` macro, inlined at each use.
struct Macro {
    params: Vec<Variable>,
    ret: Sort,
    body: Term,
}

#[derive(Default)]
struct Context {
    inputs: Vec<Variable>,
    input_sorts: HashMap<String, Sort>,
    functions: Vec<SynthFun>,
    macros: HashMap<String, Macro>,
    grammars: BTreeMap<String, String>,
    constraints: Vec<Term>,
}

/// Lexically scoped bindings: let-bound terms and function parameters.
type Scope = Vec<HashMap<String, Term>>;

impl Context {
    fn is_global(&self, name: &str) -> bool {
        self.input_sorts.contains_key(name)
            || self.macros.contains_key(name)
            || self.functions.iter().any(|f| f.name == name)
    }

    fn parse_sort(&self, s: &Sexp) -> Result<Sort> {
        match &s.kind {
            SexpKind::Atom(a) if a == "Bool" => Ok(Sort::Bool),
            SexpKind::Atom(a) => Err(error(
                ParseErrorKind::Unsupported,
                s,
                format!("sort `{a}` is not supported (only Bool and bitvectors)"),
            )),
            SexpKind::List(items) => match items.as_slice() {
                [u, bv, w] if u.atom() == Some("_") && bv.atom() == Some("BitVec") => {
                    let width = parse_numeral(w)?;
                    if width == 0 || width > MAX_WIDTH as u128 {
                        return Err(error(
                            ParseErrorKind::Unsupported,
                            w,
                            format!("bitvector width must be in 1..={MAX_WIDTH}"),
                        ));
                    }
                    Ok(Sort::BitVec(width as u32))
                }
                _ => Err(error(
                    ParseErrorKind::Unsupported,
                    s,
                    "only Bool and (_ BitVec n) sorts are supported",
                )),
            },
            SexpKind::Str(_) => Err(error(ParseErrorKind::Syntax, s, "expected a sort")),
        }
    }

    fn parse_params(&self, s: &Sexp) -> Result<Vec<Variable>> {
        let items = s
            .list()
            .ok_or_else(|| error(ParseErrorKind::Syntax, s, "expected a parameter list"))?;
        let mut params: Vec<Variable> = Vec::new();
        for item in items {
            match item.list() {
                Some([name, sort]) => {
                    let name = symbol(name)?;
                    if params.iter().any(|p| p.name == name) {
                        return Err(error(
                            ParseErrorKind::Duplicate,
                            item,
                            format!("parameter `{name}` declared twice"),
                        ));
                    }
                    params.push(Variable::new(name, self.parse_sort(sort)?));
                }
                _ => {
                    return Err(error(
                        ParseErrorKind::Syntax,
                        item,
                        "expected `(name sort)`",
                    ))
                }
            }
        }
        Ok(params)
    }

    fn parse_term(&self, s: &Sexp, scope: &mut Scope) -> Result<Term> {
        match &s.kind {
            SexpKind::Str(_) => Err(error(
                ParseErrorKind::Unsupported,
                s,
                "string literals are not supported",
            )),
            SexpKind::Atom(a) => self.parse_atom(a, s, scope),
            SexpKind::List(items) => {
                let Some(head) = items.first() else {
                    return Err(error(ParseErrorKind::Syntax, s, "empty application"));
                };
                let args = &items[1..];
                if let Some(indexed) = head.list() {
                    return self.parse_indexed(indexed, head, args, s, scope);
                }
                let name = head
                    .atom()
                    .ok_or_else(|| error(ParseErrorKind::Syntax, head, "expected an operator"))?;
                match name {
                    "let" => return self.parse_let(args, s, scope),
                    "_" => return parse_indexed_constant(items, s),
                    _ => {}
                }
                let mut parsed = Vec::with_capacity(args.len());
                for a in args {
                    parsed.push(self.parse_term(a, scope)?);
                }
                self.apply_named(name, parsed, s)
            }
        }
    }

    fn parse_atom(&self, a: &str, s: &Sexp, scope: &Scope) -> Result<Term> {
        if let Some(t) = scope.iter().rev().find_map(|m| m.get(a)) {
            return Ok(t.clone());
        }
        match a {
            "true" => return Ok(Term::bool(true)),
            "false" => return Ok(Term::bool(false)),
            _ => {}
        }
        if let Some(digits) = a.strip_prefix("#b") {
            return parse_binary(digits, s);
        }
        if let Some(digits) = a.strip_prefix("#x") {
            return parse_hex(digits, s);
        }
        if a.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            return Err(error(
                ParseErrorKind::Unsupported,
                s,
                "integer literals are not supported",
            ));
        }
        if let Some(sort) = self.input_sorts.get(a) {
            return Ok(Term::var(a, *sort));
        }
        if self.functions.iter().any(|f| f.name == a) || self.macros.contains_key(a) {
            return self.apply_named(a, Vec::new(), s);
        }
        Err(error(
            ParseErrorKind::UnknownSymbol,
            s,
            format!("unknown symbol `{a}`"),
        ))
    }

    fn parse_let(&self, args: &[Sexp], s: &Sexp, scope: &mut Scope) -> Result<Term> {
        let [bindings, body] = args else {
            return Err(error(
                ParseErrorKind::Syntax,
                s,
                "expected `(let (bindings) body)`",
            ));
        };
        let items = bindings
            .list()
            .ok_or_else(|| error(ParseErrorKind::Syntax, bindings, "expected a binding list"))?;
        // Parallel let: every right-hand side is parsed in the outer scope.
        let mut frame = HashMap::new();
        for b in items {
            match b.list() {
                Some([name, value]) => {
                    let name = symbol(name)?;
                    let value = self.parse_term(value, scope)?;
                    if frame.insert(name.clone(), value).is_some() {
                        return Err(error(
                            ParseErrorKind::Duplicate,
                            b,
                            format!("`{name}` bound twice in one let"),
                        ));
                    }
                }
                _ => return Err(error(ParseErrorKind::Syntax, b, "expected `(name term)`")),
            }
        }
        scope.push(frame);
        let out = self.parse_term(body, scope);
        scope.pop();
        out
    }

    fn parse_indexed(
        &self,
        indexed: &[Sexp],
        head: &Sexp,
        args: &[Sexp],
        s: &Sexp,
        scope: &mut Scope,
    ) -> Result<Term> {
        match indexed {
            [u, name, hi, lo] if u.atom() == Some("_") && name.atom() == Some("extract") => {
                let hi = parse_numeral(hi)?;
                let lo = parse_numeral(lo)?;
                if hi > MAX_WIDTH as u128 || lo > hi {
                    return Err(error(
                        ParseErrorKind::SortMismatch,
                        head,
                        "bad extract range",
                    ));
                }
                let [arg] = args else {
                    return Err(error(
                        ParseErrorKind::SortMismatch,
                        s,
                        format!("`extract` expects 1 argument, found {}", args.len()),
                    ));
                };
                let arg = self.parse_term(arg, scope)?;
                Term::app(
                    Op::Extract {
                        hi: hi as u32,
                        lo: lo as u32,
                    },
                    vec![arg],
                )
                .map_err(|e| error(ParseErrorKind::SortMismatch, s, e.to_string()))
            }
            [u, name, ..] if u.atom() == Some("_") => {
                let name = name.atom().unwrap_or("?");
                if KNOWN_UNSUPPORTED.contains(&name) {
                    Err(error(
                        ParseErrorKind::Unsupported,
                        head,
                        format!("operator `{name}` is not supported"),
                    ))
                } else {
                    Err(error(
                        ParseErrorKind::UnknownOperator,
                        head,
                        format!("unknown indexed operator `{name}`"),
                    ))
                }
            }
            _ => Err(error(ParseErrorKind::Syntax, head, "malformed operator")),
        }
    }

    fn apply_named(&self, name: &str, args: Vec<Term>, s: &Sexp) -> Result<Term> {
        if let Some(f) = self.functions.iter().find(|f| f.name == name) {
            check_signature(name, &f.param_sorts(), &args, s)?;
            return Ok(Term::call(name, args, f.ret));
        }
        if let Some(m) = self.macros.get(name) {
            let sorts: Vec<Sort> = m.params.iter().map(|p| p.sort).collect();
            check_signature(name, &sorts, &args, s)?;
            let map: HashMap<&str, &Term> = m
                .params
                .iter()
                .map(|p| p.name.as_str())
                .zip(&args)
                .collect();
            let body = m.body.substitute(&|v| map.get(v).map(|t| (*t).clone()));
            debug_assert_eq!(body.sort(), m.ret);
            return Ok(body);
        }
        let Some(op) = Op::from_name(name) else {
            let kind = if KNOWN_UNSUPPORTED.contains(&name) {
                ParseErrorKind::Unsupported
            } else {
                ParseErrorKind::UnknownOperator
            };
            return Err(error(kind, s, format!("unknown operator `{name}`")));
        };
        let sort_err = |e: super::SortError| error(ParseErrorKind::SortMismatch, s, e.to_string());
        let at_least = |n: usize| {
            if args.len() < n {
                Err(error(
                    ParseErrorKind::SortMismatch,
                    s,
                    format!(
                        "`{name}` expects at least {n} arguments, found {}",
                        args.len()
                    ),
                ))
            } else {
                Ok(())
            }
        };
        match op {
            // Left-associative operators are folded to binary applications.
            Op::Xor | Op::BvAnd | Op::BvOr | Op::BvXor | Op::BvAdd | Op::BvMul | Op::Concat => {
                at_least(2)?;
                let mut it = args.into_iter();
                let first = it.next().unwrap();
                it.try_fold(first, |acc, t| Term::app(op, vec![acc, t]))
                    .map_err(sort_err)
            }
            Op::Implies => {
                at_least(2)?;
                let mut it = args.into_iter().rev();
                let last = it.next().unwrap();
                it.try_fold(last, |acc, t| Term::app(op, vec![t, acc]))
                    .map_err(sort_err)
            }
            Op::Eq if args.len() > 2 => {
                let pairs = args
                    .windows(2)
                    .map(|w| Term::app(Op::Eq, w.to_vec()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(sort_err)?;
                Ok(Term::and(pairs))
            }
            _ => Term::app(op, args).map_err(sort_err),
        }
    }

    fn command(&mut self, cmd: &Sexp, src: &str) -> Result<()> {
        let items = cmd
            .list()
            .ok_or_else(|| error(ParseErrorKind::Syntax, cmd, "expected a command"))?;
        let head = items
            .first()
            .and_then(Sexp::atom)
            .ok_or_else(|| error(ParseErrorKind::Syntax, cmd, "expected a command"))?;
        match head {
            "set-logic" | "set-option" | "set-info" | "check-synth" => Ok(()),
            "declare-var" => {
                let [_, name, sort] = items else {
                    return Err(error(
                        ParseErrorKind::Syntax,
                        cmd,
                        "expected `(declare-var name sort)`",
                    ));
                };
                let name_str = symbol(name)?;
                if self.is_global(&name_str) {
                    return Err(error(
                        ParseErrorKind::Duplicate,
                        name,
                        format!("`{name_str}` is already declared"),
                    ));
                }
                let sort = self.parse_sort(sort)?;
                self.input_sorts.insert(name_str.clone(), sort);
                self.inputs.push(Variable::new(name_str, sort));
                Ok(())
            }
            "synth-fun" => {
                if items.len() < 4 {
                    return Err(error(
                        ParseErrorKind::Syntax,
                        cmd,
                        "expected `(synth-fun name (params) sort [grammar])`",
                    ));
                }
                let name_str = symbol(&items[1])?;
                if self.is_global(&name_str) {
                    return Err(error(
                        ParseErrorKind::Duplicate,
                        &items[1],
                        format!("`{name_str}` is already declared"),
                    ));
                }
                let params = self.parse_params(&items[2])?;
                let ret = self.parse_sort(&items[3])?;
                if items.len() > 4 {
                    let start = items[4].span.start;
                    let end = items.last().unwrap().span.end;
                    warn!(
                        "{}: grammar for `{name_str}` ignored; synthesizing over the full bitvector vocabulary",
                        items[4].pos
                    );
                    self.grammars
                        .insert(name_str.clone(), src[start..end].to_string());
                }
                self.functions.push(SynthFun {
                    name: name_str,
                    params,
                    ret,
                });
                Ok(())
            }
            "define-fun" => {
                let def = self.parse_define_fun(cmd, items)?;
                self.macros.insert(
                    def.name,
                    Macro {
                        params: def.params,
                        ret: def.ret,
                        body: def.body,
                    },
                );
                Ok(())
            }
            "constraint" => {
                let [_, body] = items else {
                    return Err(error(
                        ParseErrorKind::Syntax,
                        cmd,
                        "expected `(constraint term)`",
                    ));
                };
                let t = self.parse_term(body, &mut Vec::new())?;
                if t.sort() != Sort::Bool {
                    return Err(error(
                        ParseErrorKind::SortMismatch,
                        body,
                        format!("constraint has sort {}, expected Bool", t.sort()),
                    ));
                }
                self.constraints.push(t);
                Ok(())
            }
            other => Err(error(
                ParseErrorKind::Unsupported,
                cmd,
                format!("command `{other}` is not supported"),
            )),
        }
    }

    fn parse_define_fun(&self, cmd: &Sexp, items: &[Sexp]) -> Result<FunctionDefinition> {
        let [_, name, params, ret, body] = items else {
            return Err(error(
                ParseErrorKind::Syntax,
                cmd,
                "expected `(define-fun name (params) sort body)`",
            ));
        };
        let name_str = symbol(name)?;
        if self.is_global(&name_str) {
            return Err(error(
                ParseErrorKind::Duplicate,
                name,
                format!("`{name_str}` is already declared"),
            ));
        }
        let params = self.parse_params(params)?;
        let ret = self.parse_sort(ret)?;
        let frame = params
            .iter()
            .map(|p| (p.name.clone(), p.term()))
            .collect::<HashMap<_, _>>();
        let body_term = self.parse_term(body, &mut vec![frame])?;
        if body_term.sort() != ret {
            return Err(error(
                ParseErrorKind::SortMismatch,
                body,
                format!("body has sort {}, declared {}", body_term.sort(), ret),
            ));
        }
        Ok(FunctionDefinition {
            name: name_str,
            params,
            ret,
            body: body_term,
        })
    }
}

fn check_signature(name: &str, sorts: &[Sort], args: &[Term], s: &Sexp) -> Result<()> {
    if sorts.len() != args.len() {
        return Err(error(
            ParseErrorKind::SortMismatch,
            s,
            format!(
                "`{name}` expects {} argument(s), found {}",
                sorts.len(),
                args.len()
            ),
        ));
    }
    for (i, (expected, a)) in sorts.iter().zip(args).enumerate() {
        if *expected != a.sort() {
            return Err(error(
                ParseErrorKind::SortMismatch,
                s,
                format!(
                    "argument {} of `{name}` has sort {}, expected {expected}",
                    i + 1,
                    a.sort()
                ),
            ));
        }
    }
    Ok(())
}

fn symbol(s: &Sexp) -> Result<String> {
    match s.atom() {
        Some(a)
            if !a.starts_with('#')
                && !a.starts_with(':')
                && !a.starts_with(|c: char| c.is_ascii_digit()) =>
        {
            Ok(a.to_string())
        }
        _ => Err(error(ParseErrorKind::Syntax, s, "expected a symbol")),
    }
}

fn parse_numeral(s: &Sexp) -> Result<u128> {
    s.atom()
        .and_then(|a| a.parse::<u128>().ok())
        .ok_or_else(|| error(ParseErrorKind::Syntax, s, "expected a numeral"))
}

fn parse_binary(digits: &str, s: &Sexp) -> Result<Term> {
    let width = digits.len() as u32;
    if width == 0 || width > MAX_WIDTH || !digits.chars().all(|c| c == '0' || c == '1') {
        return Err(error(
            ParseErrorKind::Lexical,
            s,
            format!("malformed binary literal `#b{digits}`"),
        ));
    }
    let value = u128::from_str_radix(digits, 2).expect("validated binary digits");
    Ok(Term::bv_value(width, value))
}

fn parse_hex(digits: &str, s: &Sexp) -> Result<Term> {
    let width = 4 * digits.len() as u32;
    if width == 0 || width > MAX_WIDTH || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(error(
            ParseErrorKind::Lexical,
            s,
            format!("malformed hexadecimal literal `#x{digits}`"),
        ));
    }
    let value = u128::from_str_radix(digits, 16).expect("validated hex digits");
    Ok(Term::bv_value(width, value))
}

/// `(_ bvN w)`
fn parse_indexed_constant(items: &[Sexp], s: &Sexp) -> Result<Term> {
    if let [_, name, width] = items {
        if let Some(value) = name.atom().and_then(|a| a.strip_prefix("bv")) {
            let value: u128 = value.parse().map_err(|_| {
                error(
                    ParseErrorKind::Lexical,
                    name,
                    "malformed bitvector constant",
                )
            })?;
            let width = parse_numeral(width)?;
            if width == 0 || width > MAX_WIDTH as u128 {
                return Err(error(
                    ParseErrorKind::Unsupported,
                    s,
                    "bitvector width out of range",
                ));
            }
            return Ok(Term::bv_value(width as u32, value));
        }
    }
    Err(error(
        ParseErrorKind::Syntax,
        s,
        "malformed indexed constant",
    ))
}

/// Parses a synthesis problem. Grammars are retained as text but not used.
pub fn parse_problem(text: &str) -> Result<SynthProblem> {
    let forms = read_all(text).map_err(|e| ParseError {
        kind: ParseErrorKind::Lexical,
        pos: e.pos,
        message: e.message,
    })?;
    let mut ctx = Context::default();
    for f in &forms {
        ctx.command(f, text)?;
    }
    Ok(SynthProblem {
        inputs: ctx.inputs,
        functions: ctx.functions,
        constraints: ctx.constraints,
        source_grammars: ctx.grammars,
    })
}

/// Parses a document of `define-fun` forms, such as solver output.
/// Later definitions may use earlier ones; those uses are inlined.
pub fn parse_definitions(text: &str) -> Result<Vec<FunctionDefinition>> {
    let forms = read_all(text).map_err(|e| ParseError {
        kind: ParseErrorKind::Lexical,
        pos: e.pos,
        message: e.message,
    })?;
    let mut ctx = Context::default();
    let mut defs = Vec::new();
    for f in &forms {
        let items = f
            .list()
            .ok_or_else(|| error(ParseErrorKind::Syntax, f, "expected `define-fun`"))?;
        if items.first().and_then(Sexp::atom) != Some("define-fun") {
            return Err(error(ParseErrorKind::Syntax, f, "expected `define-fun`"));
        }
        let def = ctx.parse_define_fun(f, items)?;
        ctx.macros.insert(
            def.name.clone(),
            Macro {
                params: def.params.clone(),
                ret: def.ret,
                body: def.body.clone(),
            },
        );
        defs.push(def);
    }
    Ok(defs)
}
