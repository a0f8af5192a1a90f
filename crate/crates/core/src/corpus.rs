//! Small reference triples and measures used by tests, the acceptance suite
//! and the CLI examples.
//!
//! * `t1`: the full shift on {A, B} collapsed onto the one-point shift {b}.
//! * `t3`: two disjoint full 2-shifts {a1, b1} and {a2, b2}, with the index
//!   forgotten; class degree 2.
//! * `identity_golden_mean`: the golden mean shift mapped to itself.

use crate::measures::MarkovMeasure;
use crate::shift::{FactorTriple, Sft};

pub fn full2() -> Sft {
    Sft::full(&["A", "B"]).expect("nonempty")
}

pub fn golden_mean() -> Sft {
    Sft::build(&["0", "1"], &[("0", "0"), ("0", "1"), ("1", "0")]).expect("golden mean is nonempty")
}

pub fn t1() -> FactorTriple {
    FactorTriple::new(full2(), &[("A", "b"), ("B", "b")]).expect("valid code")
}

pub fn t3_shift() -> Sft {
    let mut pairs = Vec::new();
    for i in ["1", "2"] {
        let a = format!("a{i}");
        let b = format!("b{i}");
        for (s, t) in [(&a, &a), (&a, &b), (&b, &a), (&b, &b)] {
            pairs.push((s.clone(), t.clone()));
        }
    }
    Sft::build(&["a1", "a2", "b1", "b2"], &pairs).expect("nonempty")
}

pub fn t3() -> FactorTriple {
    FactorTriple::new(t3_shift(), &[("a1", "a"), ("a2", "a"), ("b1", "b"), ("b2", "b")]).expect("valid code")
}

pub fn identity_golden_mean() -> FactorTriple {
    FactorTriple::identity(golden_mean()).expect("valid code")
}

/// Bernoulli measure on the domain of `t1` with `P(A) = p`.
pub fn bernoulli(t: &FactorTriple, p: f64) -> MarkovMeasure {
    MarkovMeasure::bernoulli(t.x().clone(), &[p, 1.0 - p]).expect("valid probabilities")
}

/// Equal-weight mixture of the same Bernoulli(`q` for `a`) walk on each
/// component of `t3`; the two components are never mixed.
pub fn t3_measure(q: f64) -> MarkovMeasure {
    let s = t3_shift();
    // order: a1, a2, b1, b2
    let rows = vec![
        vec![q, 0.0, 1.0 - q, 0.0],
        vec![0.0, q, 0.0, 1.0 - q],
        vec![q, 0.0, 1.0 - q, 0.0],
        vec![0.0, q, 0.0, 1.0 - q],
    ];
    let pi = vec![q / 2.0, q / 2.0, (1.0 - q) / 2.0, (1.0 - q) / 2.0];
    MarkovMeasure::new(s, rows, Some(pi)).expect("valid measure")
}
