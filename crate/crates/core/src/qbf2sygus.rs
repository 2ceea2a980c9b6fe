//! QBF/DQBF to synthesis conversion.
//!
//! Universal `u` becomes the input `x<u> : (_ BitVec 1)`; existential `e`
//! becomes `(synth-fun y<e> ((x<d> (_ BitVec 1)) ...) (_ BitVec 1))` over its
//! dependencies. The matrix is a single constraint, one disjunction per
//! clause, with literals written `(= v #b1)` or `(= v #b0)`.

use crate::bitblast::{DqbfInstance, InstanceError, Var};
use crate::frontend::{Sort, SynthFun, SynthProblem, Term, Variable};

const BIT: Sort = Sort::BitVec(1);

fn input_name(v: Var) -> String {
    format!("x{v}")
}

fn function_name(v: Var) -> String {
    format!("y{v}")
}

pub fn convert(instance: &DqbfInstance) -> Result<SynthProblem, InstanceError> {
    instance.validate()?;
    let inputs: Vec<Variable> = instance
        .universals
        .iter()
        .map(|&u| Variable::new(input_name(u), BIT))
        .collect();
    let existentials = instance.all_existentials();
    let functions: Vec<SynthFun> = existentials
        .iter()
        .map(|(e, deps)| SynthFun {
            name: function_name(*e),
            params: deps
                .iter()
                .map(|&d| Variable::new(input_name(d), BIT))
                .collect(),
            ret: BIT,
        })
        .collect();
    let value_of = |v: Var| -> Term {
        match existentials.iter().find(|(e, _)| *e == v) {
            Some((_, deps)) => Term::call(
                function_name(v),
                deps.iter()
                    .map(|&d| Term::var(input_name(d), BIT))
                    .collect(),
                BIT,
            ),
            None => Term::var(input_name(v), BIT),
        }
    };
    let clauses: Vec<Term> = instance
        .clauses
        .iter()
        .map(|c| {
            Term::or(
                c.iter()
                    .map(|&l| {
                        Term::eq(
                            value_of(l.unsigned_abs()),
                            Term::bv_value(1, u128::from(l > 0)),
                        )
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(SynthProblem::new(
        inputs,
        functions,
        vec![Term::and(clauses)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqdimacs::parse_qdimacs;
    use crate::frontend::print_problem;
    use crate::pipeline::{synthesize, PipelineConfig};

    #[test]
    fn smallest_example() {
        let inst = parse_qdimacs("p cnf 2 2\na 1 0\ne 2 0\n2 -1 0\n-2 1 0\n").unwrap();
        let p = convert(&inst).unwrap();
        assert_eq!(
            print_problem(&p),
            "(set-logic BV)\n\
             (synth-fun y2 ((x1 (_ BitVec 1))) (_ BitVec 1))\n\
             (declare-var x1 (_ BitVec 1))\n\
             (constraint (and (or (= (y2 x1) #b1) (= x1 #b0)) (or (= (y2 x1) #b0) (= x1 #b1))))\n\
             (check-synth)\n"
        );
        let r = synthesize(&p, &PipelineConfig::default()).unwrap();
        assert!(r.verdict.is_realizable());
    }

    #[test]
    fn no_existentials() {
        let taut = parse_qdimacs("p cnf 1 1\na 1 0\n1 -1 0\n").unwrap();
        let p = convert(&taut).unwrap();
        assert!(p.functions.is_empty());
        assert!(synthesize(&p, &PipelineConfig::default())
            .unwrap()
            .verdict
            .is_realizable());

        let not_taut = parse_qdimacs("p cnf 1 1\na 1 0\n1 0\n").unwrap();
        let p = convert(&not_taut).unwrap();
        assert!(!synthesize(&p, &PipelineConfig::default())
            .unwrap()
            .verdict
            .is_realizable());
    }

    #[test]
    fn henkin_dependencies_become_parameters() {
        let inst = parse_qdimacs("p cnf 3 2\na 1 2 0\nd 3 1 0\n3 -2 0\n-3 2 0\n").unwrap();
        let p = convert(&inst).unwrap();
        assert_eq!(p.functions[0].params, vec![Variable::new("x1", BIT)]);
        assert!(!synthesize(&p, &PipelineConfig::default())
            .unwrap()
            .verdict
            .is_realizable());
    }
}
