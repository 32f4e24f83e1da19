use proptest::prelude::*;
use seqnorm::io::{operator_to_json, parse_operator, parse_sequence, sequence_to_json};
use seqnorm::multilinear::{summing_ratio, MultilinearMap, MultilinearOp, Permuted};
use seqnorm::optim::NormConfig;
use seqnorm::seqclasses::{cohen_norm_with, fd_norm, FiniteSeq, SeqClass};
use seqnorm::spaces::{lp_norm, norming_functional, pair, Exponent, Functional, Space};

fn exponent() -> impl Strategy<Value = Exponent> {
    prop::sample::select(vec!["1", "3/2", "2", "3", "inf"]).prop_map(|s| s.parse().unwrap())
}

fn space(max_dim: usize) -> impl Strategy<Value = Space> {
    (1..=max_dim, exponent()).prop_map(|(d, e)| Space::new(d, e).unwrap())
}

fn seq_in(e: Space, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = FiniteSeq> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, e.dim()), len)
        .prop_map(move |items| FiniteSeq::new(e, items).unwrap())
}

fn seq(max_dim: usize, max_len: usize) -> impl Strategy<Value = FiniteSeq> {
    space(max_dim).prop_flat_map(move |e| seq_in(e, 0..=max_len))
}

/// Classes whose norm is computed by an exact backend on every space.
fn exact_class() -> impl Strategy<Value = SeqClass> {
    prop_oneof![
        exponent().prop_map(SeqClass::LpAbs),
        Just(SeqClass::LInfSup),
        Just(SeqClass::Rad)
    ]
}

fn cfg() -> NormConfig {
    NormConfig::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn holder_and_norming(e in space(4), seed in prop::collection::vec(-3.0..3.0f64, 4), f in prop::collection::vec(-3.0..3.0f64, 4)) {
        let x = e.vector(seed[..e.dim()].to_vec()).unwrap();
        let g = Functional::new(e, f[..e.dim()].to_vec()).unwrap();
        prop_assert!(pair(&g, &x).unwrap().abs() <= g.norm() * x.norm() * (1.0 + 1e-12) + 1e-12);
        if !x.is_zero() {
            let n = norming_functional(&x);
            prop_assert!(close(n.norm(), 1.0, 1e-12));
            prop_assert!(close(pair(&n, &x).unwrap(), x.norm(), 1e-12));
        }
    }

    #[test]
    fn norms_are_homogeneous(class in exact_class(), s in seq(3, 6), lambda in -4.0..4.0f64) {
        let scaled = s.scaled(&vec![lambda; s.len()]).unwrap();
        let a = class.norm(&scaled, &cfg()).unwrap();
        let b = lambda.abs() * class.norm(&s, &cfg()).unwrap();
        prop_assert!(close(a, b, 1e-12), "{a} vs {b}");
    }

    #[test]
    fn zero_insertion_and_reversal(class in exact_class(), s in seq(3, 6), pos in 0usize..7) {
        let base = class.norm(&s, &cfg()).unwrap();
        let z = class.norm(&s.with_zero_at(pos.min(s.len())), &cfg()).unwrap();
        prop_assert!(close(base, z, 1e-12));
        let reversed: Vec<usize> = (0..s.len()).rev().collect();
        let r = class.norm(&s.select(&reversed), &cfg()).unwrap();
        prop_assert!(close(base, r, 1e-12));
    }

    #[test]
    fn class_chain(s in seq(3, 6), p in exponent()) {
        let sup = SeqClass::LInfSup.norm(&s, &cfg()).unwrap();
        let weak = SeqClass::LpWeak(p).norm(&s, &cfg()).unwrap();
        let strong = SeqClass::LpAbs(p).norm(&s, &cfg()).unwrap();
        // The weak value may be an ascent lower bound, hence the slack.
        prop_assert!(sup <= weak * (1.0 + 1e-6) + 1e-9, "sup {sup} > weak {weak}");
        prop_assert!(weak <= strong * (1.0 + 1e-12) + 1e-12, "weak {weak} > strong {strong}");
        let rad = SeqClass::Rad.norm(&s, &cfg()).unwrap();
        prop_assert!(sup <= rad * (1.0 + 1e-12) + 1e-12);
        prop_assert!(rad <= SeqClass::LpAbs(Exponent::ONE).norm(&s, &cfg()).unwrap() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn rademacher_is_square_sum_in_hilbert_space(d in 1usize..4, items in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 0..8)) {
        let e = Space::new(d, Exponent::TWO).unwrap();
        let s = FiniteSeq::new(e, items.iter().map(|x| x[..d].to_vec()).collect()).unwrap();
        let expected = s.item_norms().iter().map(|n| n * n).sum::<f64>().sqrt();
        prop_assert!(close(SeqClass::Rad.norm(&s, &cfg()).unwrap(), expected, 1e-12));
    }

    #[test]
    fn fd_dominates_and_matches_shrinking_classes(class in exact_class(), s in seq(3, 6)) {
        let c = class.norm(&s, &cfg()).unwrap();
        let f = fd_norm(&class, &s).unwrap();
        prop_assert!(f >= c);
        prop_assert!(close(f, c, 1e-12));
        let wrapped: SeqClass = format!("u(fd({class}))").parse().unwrap();
        prop_assert_eq!(wrapped.norm(&s, &cfg()).unwrap(), f);
    }

    #[test]
    fn sequence_json_round_trip(s in seq(4, 5)) {
        prop_assert_eq!(parse_sequence(&sequence_to_json(&s)).unwrap(), s);
    }

    #[test]
    fn class_spec_round_trip(class in exact_class(), wrap in 0usize..4) {
        let spec = match wrap {
            0 => class.to_string(),
            1 => format!("fd({class})"),
            2 => format!("u({class})"),
            _ => format!("u(fd({class}))"),
        };
        let parsed: SeqClass = spec.parse().unwrap();
        prop_assert_eq!(parsed.to_string(), spec);
    }
}

fn operator(arity: usize) -> impl Strategy<Value = MultilinearOp> {
    (space(3), 1usize..3).prop_flat_map(move |(e, df)| {
        let len = e.dim().pow(arity as u32) * df;
        prop::collection::vec(-3.0..3.0f64, len).prop_map(move |c| {
            MultilinearOp::new(vec![e; arity], Space::new(df, Exponent::TWO).unwrap(), c).unwrap()
        })
    })
}

fn args_for(a: &MultilinearOp) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let dims: Vec<usize> = a.domains().iter().map(Space::dim).collect();
    dims.into_iter()
        .map(|d| prop::collection::vec(-3.0..3.0f64, d))
        .collect::<Vec<_>>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn multilinear_in_each_slot(
        (a, x, y) in (2usize..4).prop_flat_map(operator).prop_flat_map(|a| {
            let (x, y) = (args_for(&a), args_for(&a));
            (Just(a), x, y)
        }),
        slot in 0usize..3,
        alpha in -2.0..2.0f64,
    ) {
        let slot = slot % a.arity();
        let refs = |v: &[Vec<f64>]| -> Vec<Vec<f64>> { v.to_vec() };
        let mut mixed = refs(&x);
        mixed[slot] = x[slot].iter().zip(&y[slot]).map(|(p, q)| alpha * p + q).collect();
        let mut other = refs(&x);
        other[slot] = y[slot].clone();
        let eval = |v: &[Vec<f64>]| a.apply_coords(&v.iter().map(Vec::as_slice).collect::<Vec<_>>());
        let lhs = eval(&mixed);
        let rhs: Vec<f64> = eval(&x).iter().zip(eval(&other)).map(|(p, q)| alpha * p + q).collect();
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn symmetrization_is_an_idempotent_permutation_average(a in (2usize..4).prop_flat_map(operator), shift in 0usize..6) {
        let s = a.symmetrize().unwrap();
        let again = s.symmetrize().unwrap();
        for (p, q) in s.coeffs().iter().zip(again.coeffs()) {
            prop_assert!((p - q).abs() <= 1e-14);
        }
        let n = a.arity();
        let sigma: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let dense = a.permute(&sigma).unwrap();
        let lazy = Permuted::new(&a, sigma).unwrap();
        let unit: Vec<Vec<f64>> = a.domains().iter().map(|d| vec![1.0; d.dim()]).collect();
        let args: Vec<&[f64]> = unit.iter().map(Vec::as_slice).collect();
        for (p, q) in dense.apply_coords(&args).iter().zip(lazy.apply_coords(&args)) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
        for (p, q) in dense.symmetrize().unwrap().coeffs().iter().zip(s.coeffs()) {
            prop_assert!((p - q).abs() <= 1e-14);
        }
    }

    #[test]
    fn transpose_is_an_involution(a in operator(2)) {
        prop_assert_eq!(a.transpose().unwrap().transpose().unwrap(), a);
    }

    #[test]
    fn operator_json_round_trip(a in (1usize..4).prop_flat_map(operator)) {
        prop_assert_eq!(parse_operator(&operator_to_json(&a)).unwrap(), a);
    }

    #[test]
    fn ratio_scales_with_the_operator(a in operator(2), k in 1usize..5, c in 0.1..3.0f64, seed in any::<u64>()) {
        let e = a.domains()[0];
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let w: Vec<FiniteSeq> = (0..2)
            .map(|_| {
                let items = (0..k).map(|_| (0..e.dim()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect()).collect();
                FiniteSeq::new(e, items).unwrap()
            })
            .collect();
        let inputs = [SeqClass::LInfSup, SeqClass::LpAbs(Exponent::TWO)];
        let output = SeqClass::LpAbs(Exponent::ONE);
        let r = summing_ratio(&a, &inputs, &output, &w, k, &cfg());
        let rc = summing_ratio(&a.scaled(c), &inputs, &output, &w, k, &cfg());
        if let (Ok(r), Ok(rc)) = (r, rc) {
            prop_assert!(close(rc, c * r, 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cohen_bounds_bracket_and_dominate_the_strong_norm(s in space(2).prop_filter("euclidean", |e| e.is_euclidean()).prop_flat_map(|e| seq_in(e, 1..=3)), p in prop::sample::select(vec!["3/2", "2", "3"])) {
        let p: Exponent = p.parse().unwrap();
        let est = cohen_norm_with(&s, p, &cfg()).unwrap();
        let upper = est.upper_bound.unwrap();
        prop_assert!(est.value <= upper * (1.0 + 1e-9) + 1e-12);
        let strong = lp_norm(&s.item_norms(), p);
        prop_assert!(strong <= upper * (1.0 + 1e-9) + 1e-12, "strong {strong} > upper {upper}");
        prop_assert!(est.value <= SeqClass::LpAbs(Exponent::ONE).norm(&s, &cfg()).unwrap() * (1.0 + 1e-9) + 1e-12);
    }
}
