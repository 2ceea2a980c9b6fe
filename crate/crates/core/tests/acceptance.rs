//! Acceptance gate. Runs every criterion and prints one PASS/FAIL line each;
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dqsynth_core::ackermann::to_single_callsign;
use dqsynth_core::bitblast::{blast, DqbfInstance, Existential};
use dqsynth_core::callsig::{analyze, normalize_arguments, CallSignClass};
use dqsynth_core::corpus::{random_dqbf, random_problem, ProblemShape};
use dqsynth_core::dqdimacs::{dependency_map, parse_qdimacs, write_dqdimacs};
use dqsynth_core::dqf::{to_dqf, DqfFormula, HenkinVar, Origin};
use dqsynth_core::frontend::{parse_problem, Op, Sort, Term, Variable};
use dqsynth_core::lift::verify_lifted;
use dqsynth_core::pipeline::{solve_instance, synthesize, Engine, PipelineConfig, Verdict};
use dqsynth_core::qbf2sygus::convert;
use dqsynth_core::sat::{sat_solve, Budget, SatResult};
use dqsynth_core::solver::{
    solve_expansion, verify_solution, SolveOutcome, DEFAULT_EXPANSION_BOUND,
};

use common::{henkin_oracle, reference, table_bits, table_oracle};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn end_to_end_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let shape = ProblemShape::default();
    let (mut realizable, mut unrealizable, mut cross_checked) = (0, 0, 0);
    for i in 0..200 {
        let p = random_problem(&mut rng, &shape);
        let report =
            synthesize(&p, &PipelineConfig::default()).map_err(|e| format!("problem {i}: {e}"))?;
        match &report.verdict {
            Verdict::Realizable(defs) => {
                realizable += 1;
                let v = verify_lifted(defs, &p).map_err(|e| format!("problem {i}: {e}"))?;
                ensure(v.is_valid(), || format!("problem {i}: {v:?}"))?;
            }
            Verdict::Unrealizable => unrealizable += 1,
        }
        if table_bits(&p) <= 10 {
            cross_checked += 1;
            let expected = table_oracle(&p);
            ensure(expected == report.verdict.is_realizable(), || {
                format!("problem {i}: oracle says {expected}")
            })?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "200 problems ({realizable} realizable, {unrealizable} unrealizable, \
         {cross_checked} oracle-checked) in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

/// Fixed bound on transformed size over normalized size.
const ACKERMANN_SIZE_FACTOR: f64 = 4.0;

fn ackermann_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    let shape = ProblemShape {
        max_width: 2,
        require_multiple_callsigns: true,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    let (mut n, mut realizable) = (0, 0);
    while n < 100 {
        let p = random_problem(&mut rng, &shape);
        if table_bits(&p) > 12 {
            continue;
        }
        n += 1;
        let normalized = normalize_arguments(&p);
        let index = analyze(&normalized);
        ensure(index.class == CallSignClass::Multiple, || {
            "generator".into()
        })?;
        let (single, _) = to_single_callsign(&normalized, &index);
        ensure(analyze(&single).class == CallSignClass::Single, || {
            format!("problem {n} still multiple-callsign")
        })?;
        let inst =
            blast(&to_dqf(&single).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let got = solve_expansion(&inst, DEFAULT_EXPANSION_BOUND, &Budget::unlimited())
            .map_err(|e| e.to_string())?
            .is_true();
        let expected = table_oracle(&p);
        ensure(got == expected, || {
            format!("problem {n}: transformed {got}, oracle {expected}")
        })?;
        realizable += usize::from(expected);
        worst = worst.max(single.size() as f64 / normalized.size() as f64);
    }
    ensure(worst <= ACKERMANN_SIZE_FACTOR, || {
        format!("size ratio {worst:.2}")
    })?;
    Ok(format!(
        "100 problems ({realizable} realizable) agree with table oracle; max size ratio {worst:.2} <= {ACKERMANN_SIZE_FACTOR}"
    ))
}

fn instance(
    universals: &[u32],
    existentials: &[(u32, &[u32])],
    clauses: &[&[i32]],
) -> DqbfInstance {
    parse_qdimacs(&write_dqdimacs(&DqbfInstance {
        num_vars: (universals.len() + existentials.len()) as u32,
        universals: universals.to_vec(),
        existentials: existentials
            .iter()
            .map(|(v, d)| Existential {
                var: *v,
                deps: d.to_vec(),
            })
            .collect(),
        auxiliaries: vec![],
        clauses: clauses.iter().map(|c| c.to_vec()).collect(),
        bitmap: Default::default(),
    }))
    .unwrap()
}

fn dqbf_solver_correctness() -> Outcome {
    let expand = |i: &DqbfInstance| {
        solve_expansion(i, DEFAULT_EXPANSION_BOUND, &Budget::unlimited()).map_err(|e| e.to_string())
    };
    let good = instance(&[1, 2], &[(3, &[1])], &[&[3, -1], &[-3, 1]]);
    ensure(expand(&good)?.is_true(), || {
        "y<->x1 with H={x1} not TRUE".into()
    })?;
    let bad = instance(&[1, 2], &[(3, &[1])], &[&[3, -2], &[-3, 2]]);
    ensure(!expand(&bad)?.is_true(), || {
        "y<->x2 with H={x1} not FALSE".into()
    })?;

    let mut rng = StdRng::seed_from_u64(303);
    let mut trues = 0;
    for k in 0..300 {
        let n = rng.gen_range(0..=3);
        let m = rng.gen_range(1..=2);
        let c = rng.gen_range(1..=8);
        let text = write_dqdimacs(&random_dqbf(&mut rng, n, m, c, true));
        let inst = parse_qdimacs(&text).map_err(|e| e.to_string())?;
        let expected = henkin_oracle(&inst);
        let got = expand(&inst)?;
        ensure(got.is_true() == expected, || {
            format!("instance {k}: oracle {expected}\n{text}")
        })?;
        if let SolveOutcome::True(sol) = got {
            trues += 1;
            let v = verify_solution(&inst, &sol);
            ensure(v.is_valid(), || format!("instance {k}: {v:?}"))?;
        }
    }
    Ok(format!(
        "2 named instances + 300 random ({trues} TRUE) agree with table oracle"
    ))
}

/// Checks that the CNF for `r = rhs` determines `r` as `expected` for every
/// input assignment.
fn check_encoding(
    inputs: &[(&str, Sort)],
    rhs: Term,
    expected: &dyn Fn(&[u64]) -> u64,
) -> Result<usize, String> {
    let universals: Vec<Variable> = inputs.iter().map(|(n, s)| Variable::new(*n, *s)).collect();
    let r = Variable::new("r!", rhs.sort());
    let formula = DqfFormula {
        universals: universals.clone(),
        existentials: vec![HenkinVar {
            var: r.clone(),
            deps: universals.clone(),
            origin: Origin {
                function: "r".into(),
                params: vec![],
                args: vec![],
            },
        }],
        body: Term::eq(r.term(), rhs.clone()),
    };
    let inst = blast(&formula).map_err(|e| e.to_string())?;
    let total: u32 = universals.iter().map(|v| v.sort.bits()).sum();
    let r_bits = &inst.bitmap.get("r!").unwrap().bits;
    for a in 0u64..1 << total {
        let mut clauses = inst.clauses.clone();
        let mut values = Vec::new();
        let mut shift = 0;
        for v in &universals {
            let w = v.sort.bits();
            values.push((a >> shift) & reference::mask(w));
            for (k, &b) in inst.bitmap.get(&v.name).unwrap().bits.iter().enumerate() {
                let on = (a >> (shift + k as u32)) & 1 == 1;
                clauses.push(vec![if on { b as i32 } else { -(b as i32) }]);
            }
            shift += w;
        }
        let want = expected(&values);
        let SatResult::Sat(m) = sat_solve(&clauses, inst.num_vars, &Budget::unlimited()).unwrap()
        else {
            return Err(format!("{rhs}: no model at {values:?}"));
        };
        let got = r_bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | (u64::from(m.value(b)) << k));
        ensure(got == want, || {
            format!("{rhs} at {values:?}: {got} != {want}")
        })?;
        // The value is forced, not merely allowed.
        clauses.push(
            r_bits
                .iter()
                .enumerate()
                .map(|(k, &b)| {
                    if (want >> k) & 1 == 1 {
                        -(b as i32)
                    } else {
                        b as i32
                    }
                })
                .collect(),
        );
        ensure(
            !sat_solve(&clauses, inst.num_vars, &Budget::unlimited())
                .unwrap()
                .is_sat(),
            || format!("{rhs} at {values:?}: result not unique"),
        )?;
    }
    Ok(1 << total)
}

fn bitblast_equivalence() -> Outcome {
    let mut cases = 0;
    let mut zero_divisors = 0;
    let bv = |w| Sort::BitVec(w);
    let var = |n: &str, w| Term::var(n, Sort::BitVec(w));
    for name in ["bvnot", "bvneg"] {
        for w in 1..=3 {
            let t = Term::app(Op::from_name(name).unwrap(), vec![var("a", w)]).unwrap();
            cases += check_encoding(&[("a", bv(w))], t, &|v| reference::unary(name, v[0], w))?;
        }
    }
    for name in [
        "bvand", "bvor", "bvxor", "bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvshl", "bvlshr",
        "bvashr",
    ] {
        let max = if matches!(name, "bvadd" | "bvsub") {
            4
        } else {
            3
        };
        for w in 1..=max {
            let t =
                Term::app(Op::from_name(name).unwrap(), vec![var("a", w), var("b", w)]).unwrap();
            cases += check_encoding(&[("a", bv(w)), ("b", bv(w))], t, &|v| {
                reference::binary(name, v[0], v[1], w)
            })?;
            if matches!(name, "bvudiv" | "bvurem") {
                zero_divisors += 1 << w;
            }
        }
    }
    for name in [
        "=", "bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge",
    ] {
        for w in 1..=4 {
            let t =
                Term::app(Op::from_name(name).unwrap(), vec![var("a", w), var("b", w)]).unwrap();
            cases += check_encoding(&[("a", bv(w)), ("b", bv(w))], t, &|v| {
                u64::from(reference::compare(name, v[0], v[1], w))
            })?;
        }
    }
    for wa in 1..=3 {
        for wb in 1..=3 {
            let t = Term::concat(var("a", wa), var("b", wb));
            cases += check_encoding(&[("a", bv(wa)), ("b", bv(wb))], t, &|v| (v[0] << wb) | v[1])?;
        }
        for hi in 0..wa {
            for lo in 0..=hi {
                let t = Term::extract(hi, lo, var("a", wa));
                cases += check_encoding(&[("a", bv(wa))], t, &|v| {
                    (v[0] >> lo) & reference::mask(hi - lo + 1)
                })?;
            }
        }
        let t = Term::ite(Term::var("c", Sort::Bool), var("a", wa), var("b", wa));
        cases += check_encoding(
            &[("c", Sort::Bool), ("a", bv(wa)), ("b", bv(wa))],
            t,
            &|v| if v[0] == 1 { v[1] } else { v[2] },
        )?;
    }
    let p = || Term::var("p", Sort::Bool);
    let q = || Term::var("q", Sort::Bool);
    let bools = [("p", Sort::Bool), ("q", Sort::Bool)];
    let connectives: [(Term, fn(u64, u64) -> u64); 5] = [
        (Term::not(p()), |a, _| 1 - a),
        (Term::and(vec![p(), q()]), |a, b| a & b),
        (Term::or(vec![p(), q()]), |a, b| a | b),
        (Term::app(Op::Xor, vec![p(), q()]).unwrap(), |a, b| a ^ b),
        (Term::implies(p(), q()), |a, b| (1 - a) | b),
    ];
    for (t, f) in connectives {
        cases += check_encoding(&bools, t, &|v| f(v[0], v[1]))?;
    }
    Ok(format!(
        "{cases} input assignments over all operators, {zero_divisors} with a zero divisor"
    ))
}

fn format_fidelity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(55);
    let mut fixpoints = 0;
    for k in 0..120 {
        let inst = if k % 2 == 0 {
            let n = rng.gen_range(0..=6);
            let m = rng.gen_range(0..=5);
            let c = rng.gen_range(0..=12);
            random_dqbf(&mut rng, n, m, c, k % 4 == 0)
        } else {
            let p = random_problem(&mut rng, &ProblemShape::default());
            let (compiled, _) = dqsynth_core::pipeline::compile(&p, &PipelineConfig::default())
                .map_err(|e| e.to_string())?;
            compiled.instance
        };
        let text = write_dqdimacs(&inst);
        let back = parse_qdimacs(&text).map_err(|e| format!("instance {k}: {e}"))?;
        ensure(write_dqdimacs(&back) == text, || {
            format!("instance {k} not a fixpoint")
        })?;
        ensure(dependency_map(&back) == dependency_map(&inst), || {
            format!("instance {k}: prefix")
        })?;
        let mut a = inst.clauses.clone();
        let mut b = back.clauses.clone();
        a.sort();
        b.sort();
        ensure(a == b, || format!("instance {k}: clauses"))?;
        fixpoints += 1;
    }

    let mut preserved = 0;
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=2);
        let c = rng.gen_range(1..=8);
        let text = write_dqdimacs(&random_dqbf(&mut rng, n, m, c, false));
        let inst = parse_qdimacs(&text).map_err(|e| e.to_string())?;
        ensure(inst.is_2qbf(), || {
            "generator produced a Henkin prefix".into()
        })?;
        let p = convert(&inst).map_err(|e| e.to_string())?;
        let literals: usize = inst.clauses.iter().map(Vec::len).sum();
        worst = worst.max(p.size() as f64 / literals.max(1) as f64);
        let r =
            synthesize(&p, &PipelineConfig::default()).map_err(|e| format!("instance {k}: {e}"))?;
        let expected = henkin_oracle(&inst);
        ensure(r.verdict.is_realizable() == expected, || {
            format!(
                "instance {k}: converted {}, original {expected}\n{text}",
                r.verdict.is_realizable()
            )
        })?;
        preserved += 1;
    }
    Ok(format!(
        "{fixpoints} byte fixpoints; {preserved} QDIMACS conversions preserve the verdict \
         (max {worst:.1} nodes per literal)"
    ))
}

const MAX2: &str = "(set-logic BV)
(synth-fun max2 ((x (_ BitVec W)) (y (_ BitVec W))) (_ BitVec W))
(declare-var a (_ BitVec W))
(declare-var b (_ BitVec W))
(constraint (bvuge (max2 a b) a))
(constraint (bvuge (max2 a b) b))
(constraint (or (= (max2 a b) a) (= (max2 a b) b)))
(check-synth)";

fn named_examples() -> Outcome {
    let phi = parse_problem(
        "(synth-fun f ((x (_ BitVec 1)) (y (_ BitVec 1))) Bool)
         (declare-var a (_ BitVec 1))
         (declare-var b (_ BitVec 1))
         (declare-var c (_ BitVec 1))
         (constraint (and (f a b) (f b c) (f b a) (f a b)))",
    )
    .map_err(|e| e.to_string())?;
    let idx = analyze(&phi);
    let sigs: Vec<String> = idx.callsigns("f").iter().map(|s| s.to_string()).collect();
    ensure(sigs == ["<a, b>", "<b, c>", "<b, a>"], || {
        format!("callsigns {sigs:?}")
    })?;
    ensure(idx.get("f").unwrap().invocations == 4, || {
        "invocations".into()
    })?;
    ensure(idx.class == CallSignClass::Multiple, || "class".into())?;

    let mut times = Vec::new();
    for w in [2, 4] {
        let p = parse_problem(&MAX2.replace('W', &w.to_string())).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let r = synthesize(&p, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let Verdict::Realizable(defs) = r.verdict else {
            return Err(format!("max2 width {w} unrealizable"));
        };
        ensure(verify_lifted(&defs, &p).unwrap().is_valid(), || {
            format!("max2 width {w}")
        })?;
        let t = start.elapsed();
        ensure(t < Duration::from_secs(10), || {
            format!("max2 width {w} took {t:?}")
        })?;
        times.push(t);
    }

    let xor = "(synth-fun f ((x (_ BitVec 1))) (_ BitVec 1))
         (synth-fun g ((x (_ BitVec 1))) (_ BitVec 1))
         (declare-var a (_ BitVec 1))
         (declare-var b (_ BitVec 1))
         (constraint (= (bvxor (f a) (g b)) (bvxor a b)))";
    let open = parse_problem(xor).map_err(|e| e.to_string())?;
    ensure(table_oracle(&open), || {
        "oracle: xor alone should be realizable".into()
    })?;
    ensure(
        synthesize(&open, &PipelineConfig::default())
            .unwrap()
            .verdict
            .is_realizable(),
        || "xor alone reported unrealizable".into(),
    )?;
    let forced =
        parse_problem(&format!("{xor}\n(constraint (= (f a) b))")).map_err(|e| e.to_string())?;
    ensure(!table_oracle(&forced), || {
        "oracle: forced xor should be unrealizable".into()
    })?;
    for engine in [Engine::Auto, Engine::Expansion] {
        let config = PipelineConfig {
            engine,
            ..Default::default()
        };
        let v = synthesize(&forced, &config)
            .map_err(|e| e.to_string())?
            .verdict;
        ensure(v == Verdict::Unrealizable, || {
            "forced xor reported realizable".into()
        })?;
    }
    Ok(format!(
        "callsigns {{<a, b>, <b, c>, <b, a>}} x4; max2 w2 {:.0?}, w4 {:.0?}; forced xor unrealizable",
        times[0], times[1]
    ))
}

fn directional_asymmetry() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let naive = PipelineConfig {
        engine: Engine::Expansion,
        ..Default::default()
    };
    let mut trues = 0;
    for k in 0..20 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=3);
        let c = rng.gen_range(2..=2 * n) as usize;
        let mut inst = random_dqbf(&mut rng, n, m, c, false);
        // Every clause gets an existential literal so both verdicts occur.
        for clause in &mut inst.clauses {
            let e = rng.gen_range(n + 1..=n + m) as i32;
            clause.push(if rng.gen_bool(0.5) { e } else { -e });
        }
        let inst = parse_qdimacs(&write_dqdimacs(&inst)).map_err(|e| e.to_string())?;
        let budget = Budget {
            deadline: Some(Instant::now() + Duration::from_secs(10)),
            max_conflicts: None,
        };
        let direct = solve_instance(&inst, &PipelineConfig::default(), &budget)
            .map_err(|e| format!("instance {k}: {e}"))?
            .is_true();
        let p = convert(&inst).map_err(|e| e.to_string())?;
        let routed = synthesize(&p, &naive).map_err(|e| format!("instance {k}: {e}"))?;
        ensure(routed.verdict.is_realizable() == direct, || {
            format!("instance {k}: verdicts differ")
        })?;
        trues += usize::from(direct);
    }
    Ok(format!(
        "20 instances ({trues} TRUE) solved directly and via the synthesis pipeline agree"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 end-to-end soundness", end_to_end_soundness),
        ("2 ackermannization correctness", ackermann_correctness),
        ("3 dqbf solver correctness", dqbf_solver_correctness),
        ("4 bit-blasting equivalence", bitblast_equivalence),
        ("5 format fidelity", format_fidelity),
        ("6 named-example regressions", named_examples),
        ("7 directional asymmetry smoke test", directional_asymmetry),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
