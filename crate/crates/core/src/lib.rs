//! Grammar-free (theory-constrained) synthesis of bitvector functions by
//! reduction to Dependency Quantified Boolean Formulas.
//!
//! The pipeline:
//!
//! 1. [`frontend`] parses a SyGuS-style problem.
//! 2. [`callsig`] normalizes call arguments to variables and computes call signatures.
//! 3. [`ackermann`] turns a multiple-callsign problem into a single-callsign one.
//! 4. [`dqf`] replaces each function by a Henkin-quantified output variable.
//! 5. [`bitblast`] compiles the bitvector formula to a CNF DQBF.
//! 6. [`solver`] decides the DQBF and extracts Henkin functions.
//! 7. [`lift`] turns the propositional functions back into bitvector definitions
//!    and checks them against the original problem.
//!
//! [`dqdimacs`] and [`qbf2sygus`] handle the solver file format and the reverse
//! conversion from QBF benchmarks to synthesis problems.

pub mod ackermann;
pub mod bitblast;
pub mod callsig;
pub mod corpus;
pub mod dqdimacs;
pub mod dqf;
pub mod frontend;
pub mod lift;
pub mod pipeline;
pub mod qbf2sygus;
pub mod sat;
pub mod solver;
