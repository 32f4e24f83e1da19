//! Values computed offline (extended precision sums, exhaustive enumeration,
//! SVD) and frozen here.

#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use seqnorm::multilinear::{divergence_probe, Permuted, ProbeVerdict, RankOneBilinear};
use seqnorm::optim::NormConfig;
use seqnorm::seqclasses::{FiniteSeq, SeqClass, SeqFamily};
use seqnorm::spaces::{Exponent, Functional, Space};

const EX36_TRACE: [(usize, f64); 9] = [
    (16, 2.685871736675244),
    (32, 3.1944108231035175),
    (64, 3.7163514005511879),
    (128, 4.2462636970861544),
    (256, 4.7808009860062131),
    (512, 5.3179711590712871),
    (1024, 5.8566181358811309),
    (2048, 6.3960837253949242),
    (4096, 6.9359987308088151),
];

fn seq(space: &str, items: &[&[f64]]) -> FiniteSeq {
    FiniteSeq::new(
        space.parse().unwrap(),
        items.iter().map(|x| x.to_vec()).collect(),
    )
    .unwrap()
}

const S1: [&[f64]; 4] = [&[1.0, -2.0], &[0.5, 0.25], &[-1.5, 1.0], &[0.0, 3.0]];
const S2: [&[f64]; 3] = [&[1.0, 0.0, -1.0], &[2.0, 1.0, 0.5], &[-0.5, -0.5, 2.0]];

fn norm(class: &str, s: &FiniteSeq) -> f64 {
    class
        .parse::<SeqClass>()
        .unwrap()
        .norm(s, &NormConfig::default())
        .unwrap()
}

#[test]
fn transposed_rank_one_trace() {
    let e = Space::new(4096, Exponent::INFINITY).unwrap();
    let a = RankOneBilinear::new(Functional::coordinate(e, 0).unwrap(), None).unwrap();
    let at = Permuted::transpose(&a).unwrap();
    let mut e1 = vec![0.0; 4096];
    e1[0] = 1.0;
    let trace = divergence_probe(
        &at,
        &[
            SeqClass::LpWeak(Exponent::ONE),
            SeqClass::LpWeak(Exponent::TWO),
        ],
        &SeqClass::LpAbs(Exponent::ONE),
        &[
            SeqFamily::UnitVectors,
            SeqFamily::scaled_pattern(e1, 1.0).unwrap(),
        ],
        4096,
        &NormConfig::default(),
    )
    .unwrap();
    assert_eq!(trace.points.len(), EX36_TRACE.len());
    for (p, (k, rho)) in trace.points.iter().zip(EX36_TRACE) {
        assert_eq!(p.k, k);
        assert_relative_eq!(p.rho, rho, max_relative = 1e-12);
    }
    assert!(trace.strictly_increasing);
    // The trace grows like log k, so over this range it stays below the
    // divergence ratio.
    assert_relative_eq!(
        trace.growth,
        EX36_TRACE[8].1 / EX36_TRACE[0].1,
        max_relative = 1e-12
    );
    assert_eq!(trace.verdict, ProbeVerdict::NotDiverging);
}

#[test]
fn rademacher_norms() {
    assert_relative_eq!(
        norm("rad", &seq("lp:3:2", &S1)),
        4.0283308203309725,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        norm("rad", &seq("lp:inf:2", &S1)),
        3.958771905528279,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        norm("rad", &seq("lp:1:3", &S2)),
        5.220153254455275,
        max_relative = 1e-13
    );
}

#[test]
fn weak_norms() {
    assert_relative_eq!(
        norm("lpw:3/2", &seq("lp:1:3", &S2)),
        5.2349075053744185,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        norm("lpw:3", &seq("lp:inf:3", &S2)),
        2.089669598190616,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        norm("lpw:2", &seq("lp:2:3", &S2)),
        2.6422130841892573,
        max_relative = 1e-12
    );
}

#[test]
fn strong_and_cohen_norms() {
    let s = seq("lp:2:3", &S2);
    assert_relative_eq!(
        norm("lp:3/2", &seq("lp:3:3", &S2)),
        3.7656177292598727,
        max_relative = 1e-13
    );
    assert_relative_eq!(norm("cohen:1", &s), 5.826821753410657, max_relative = 1e-12);
    assert_relative_eq!(norm("cohen:2", &s), 5.2595205513162435, max_relative = 1e-6);
    assert_relative_eq!(
        norm("dual(lpw:2)", &s),
        5.2595205513162435,
        max_relative = 1e-6
    );
}
