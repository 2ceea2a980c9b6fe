mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dqsynth_core::ackermann::to_single_callsign;
use dqsynth_core::callsig::{analyze, normalize_arguments, CallSignClass};
use dqsynth_core::corpus::{random_dqbf, random_problem, ProblemShape};
use dqsynth_core::dqdimacs::{dependency_map, parse_qdimacs, write_dqdimacs};
use dqsynth_core::frontend::{eval, parse_problem, print_problem, BvConst, Value};
use dqsynth_core::lift::simplify;
use dqsynth_core::pipeline::{synthesize, PipelineConfig, Verdict};
use dqsynth_core::sat::{sat_solve, Budget, SatResult};
use dqsynth_core::solver::{
    solve_2qbf, solve_expansion, verify_solution, SolveOutcome, DEFAULT_EXPANSION_BOUND,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_problems_parse_back(seed in any::<u64>()) {
        let p = random_problem(&mut StdRng::seed_from_u64(seed), &ProblemShape::default());
        let text = print_problem(&p);
        let back = parse_problem(&text).unwrap();
        prop_assert!(back.eq_ignoring_grammars(&p), "{}", text);
    }

    #[test]
    fn ackermann_yields_single_callsign_and_linear_size(seed in any::<u64>()) {
        let shape = ProblemShape { require_multiple_callsigns: true, max_universal_bits: None, ..Default::default() };
        let p = normalize_arguments(&random_problem(&mut StdRng::seed_from_u64(seed), &shape));
        let index = analyze(&p);
        let (single, trace) = to_single_callsign(&p, &index);
        prop_assert_eq!(analyze(&single).class, CallSignClass::Single);
        prop_assert!(!trace.is_empty());
        prop_assert!(single.size() <= 4 * p.size());
        single.validate().unwrap();
    }

    #[test]
    fn dqdimacs_round_trip(seed in any::<u64>(), n in 0u32..8, m in 0u32..6, c in 0usize..20, henkin in any::<bool>()) {
        let c = if n + m == 0 { 0 } else { c };
        let inst = random_dqbf(&mut StdRng::seed_from_u64(seed), n, m, c, henkin);
        let text = write_dqdimacs(&inst);
        let back = parse_qdimacs(&text).unwrap();
        prop_assert_eq!(write_dqdimacs(&back), text.clone());
        prop_assert_eq!(dependency_map(&back), dependency_map(&inst));
        prop_assert_eq!(&back.clauses, &inst.clauses);
        prop_assert_eq!(write_dqdimacs(&inst), text);
    }

    #[test]
    fn solutions_certify_and_respect_dependencies(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = random_dqbf(&mut rng, 3, 2, 6, true);
        let out = solve_expansion(&inst, DEFAULT_EXPANSION_BOUND, &Budget::unlimited()).unwrap();
        prop_assert_eq!(out.is_true(), common::henkin_oracle(&inst));
        if let SolveOutcome::True(sol) = out {
            prop_assert!(verify_solution(&inst, &sol).is_valid());
            for e in &inst.existentials {
                let f = sol.function(e.var).unwrap();
                for a in 0u32..8 {
                    for u in inst.universals.iter().filter(|u| !e.deps.contains(u)) {
                        let at = |x: u32| move |v: u32| (x >> (v - 1)) & 1 == 1;
                        prop_assert_eq!(f.eval(&at(a)), f.eval(&at(a ^ (1 << (u - 1)))));
                    }
                }
            }
        }
    }

    #[test]
    fn engines_agree(seed in any::<u64>(), n in 0u32..=6, m in 1u32..=4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let c = rng.gen_range(1..=2 * (n + m) as usize);
        let inst = random_dqbf(&mut rng, n, m, c, false);
        let a = solve_expansion(&inst, DEFAULT_EXPANSION_BOUND, &Budget::unlimited()).unwrap();
        let b = solve_2qbf(&inst, &Budget::unlimited()).unwrap();
        prop_assert_eq!(a.is_true(), b.is_true());
        if let SolveOutcome::True(sol) = b {
            prop_assert!(verify_solution(&inst, &sol).is_valid());
        }
    }

    #[test]
    fn simplifier_preserves_lifted_meaning(seed in any::<u64>()) {
        let p = random_problem(&mut StdRng::seed_from_u64(seed), &ProblemShape { max_universal_bits: Some(8), ..Default::default() });
        let r = synthesize(&p, &PipelineConfig::default()).unwrap();
        if let Verdict::Realizable(defs) = r.verdict {
            let w = p.inputs[0].sort.bits();
            for d in &defs {
                let again = simplify(&d.body);
                for a in 0u128..1 << (w * d.params.len() as u32) {
                    let env: Vec<(String, Value)> = d.params.iter().enumerate()
                        .map(|(k, x)| (x.name.clone(), Value::Bv(BvConst::new(w, (a >> (k as u32 * w)) & ((1 << w) - 1)))))
                        .collect();
                    let look = |n: &str| env.iter().find(|(m, _)| m == n).map(|(_, v)| *v);
                    let x = eval(&d.body, &look, &mut |_, _| None).unwrap();
                    let y = eval(&again, &look, &mut |_, _| None).unwrap();
                    prop_assert_eq!(x, y);
                }
            }
        }
    }
}

/// Random 3-CNF near the threshold, compared against exhaustive enumeration.
#[test]
fn sat_core_matches_enumeration_at_20_vars() {
    const N: u32 = 20;
    for seed in 0..100 {
        let mut rng = StdRng::seed_from_u64(seed);
        let clauses: Vec<Vec<i32>> = (0..85)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let v = rng.gen_range(1..=N as i32);
                        if rng.gen_bool(0.5) {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect()
            })
            .collect();
        let masks: Vec<(u32, u32)> = clauses
            .iter()
            .map(|c| {
                c.iter().fold((0, 0), |(p, n), &l| {
                    let b = 1 << (l.unsigned_abs() - 1);
                    if l > 0 {
                        (p | b, n)
                    } else {
                        (p, n | b)
                    }
                })
            })
            .collect();
        let expected =
            (0u32..1 << N).any(|a| masks.iter().all(|&(p, n)| a & p != 0 || !a & n != 0));
        match sat_solve(&clauses, N, &Budget::unlimited()).unwrap() {
            SatResult::Sat(m) => {
                assert!(expected, "seed {seed}");
                assert!(clauses.iter().all(|c| c.iter().any(|&l| m.lit(l))));
            }
            SatResult::Unsat => assert!(!expected, "seed {seed}"),
        }
    }
}
