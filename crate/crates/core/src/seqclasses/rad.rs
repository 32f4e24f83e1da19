//! Rademacher norm of a finite sequence:
//! `(2^{-n} Σ_{ε ∈ {±1}^n} ‖Σ_j ε_j x_j‖²)^{1/2}`, by exhaustive enumeration.

use super::FiniteSeq;
use crate::error::{Error, Result};
use crate::spaces::{lp_norm, DEFAULT_ENUMERATION_CAP};

pub fn rad_norm(s: &FiniteSeq) -> Result<f64> {
    rad_norm_capped(s, DEFAULT_ENUMERATION_CAP)
}

/// Errors when the length exceeds `cap` instead of approximating.
pub fn rad_norm_capped(s: &FiniteSeq, cap: usize) -> Result<f64> {
    let n = s.len();
    if n > cap {
        return Err(Error::EnumerationCap {
            what: "Rademacher sign patterns",
            size: n,
            cap,
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let p = s.space().exponent();
    let items = s.items();
    // ‖Σ ε_j x_j‖ = ‖Σ (-ε_j) x_j‖: fix ε_1 = +1 and average over the other
    // 2^{n-1} patterns, visited in Gray-code order.
    let mut signs = vec![1.0; n];
    let mut sum: Vec<f64> = (0..s.space().dim())
        .map(|i| items.iter().map(|x| x[i]).sum())
        .collect();
    let mut total = lp_norm(&sum, p).powi(2);
    for step in 1u64..(1u64 << (n - 1)) {
        let j = step.trailing_zeros() as usize + 1;
        let old = signs[j];
        signs[j] = -old;
        for (acc, c) in sum.iter_mut().zip(&items[j]) {
            *acc -= 2.0 * old * c;
        }
        total += lp_norm(&sum, p).powi(2);
    }
    Ok((total / (1u64 << (n - 1)) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::spaces::Space;

    fn seq(space: &str, items: &[&[f64]]) -> FiniteSeq {
        FiniteSeq::new(
            space.parse().unwrap(),
            items.iter().map(|x| x.to_vec()).collect(),
        )
        .unwrap()
    }

    /// Direct enumeration over all 2^n patterns, no symmetry or Gray code.
    fn brute(s: &FiniteSeq) -> f64 {
        let n = s.len();
        let d = s.space().dim();
        let mut total = 0.0;
        for mask in 0..1u64 << n {
            let mut v = vec![0.0; d];
            for (j, x) in s.items().iter().enumerate() {
                let e = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
                for i in 0..d {
                    v[i] += e * x[i];
                }
            }
            total += lp_norm(&v, s.space().exponent()).powi(2);
        }
        (total / (1u64 << n) as f64).sqrt()
    }

    #[test]
    fn small_examples() {
        let x = [1.0, -2.0, 0.5];
        let single = seq("lp:3:3", &[&x]);
        assert_abs_diff_eq!(
            rad_norm(&single).unwrap(),
            single.item(0).norm(),
            epsilon = 1e-15
        );
        let twice = seq("lp:3:3", &[&x, &x]);
        assert_abs_diff_eq!(
            rad_norm(&twice).unwrap(),
            2f64.sqrt() * single.item(0).norm(),
            epsilon = 1e-14
        );
        let e = seq("lp:2:2", &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_abs_diff_eq!(rad_norm(&e).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn agrees_with_brute_force() {
        let s = seq(
            "lp:inf:2",
            &[&[1.0, 0.2], &[-0.3, 0.8], &[0.5, 0.5], &[2.0, -1.0]],
        );
        assert_abs_diff_eq!(rad_norm(&s).unwrap(), brute(&s), epsilon = 1e-13);
        let s = s.reinterpret("lp:1:2".parse().unwrap()).unwrap();
        assert_abs_diff_eq!(rad_norm(&s).unwrap(), brute(&s), epsilon = 1e-13);
    }

    #[test]
    fn euclidean_value_is_the_square_function() {
        // orthogonality of the Rademacher functions in Hilbert space
        let s = seq(
            "lp:2:3",
            &[&[1.0, 0.2, 0.0], &[-0.3, 0.8, 1.0], &[0.5, 0.5, 0.5]],
        );
        let sq: f64 = s.item_norms().iter().map(|n| n * n).sum();
        assert_abs_diff_eq!(rad_norm(&s).unwrap(), sq.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let space: Space = "lp:2:1".parse().unwrap();
        let s = FiniteSeq::new(space, vec![vec![1.0]; 5]).unwrap();
        assert!(matches!(
            rad_norm_capped(&s, 4),
            Err(Error::EnumerationCap {
                size: 5,
                cap: 4,
                ..
            })
        ));
        let long = FiniteSeq::new(space, vec![vec![1.0]; 21]).unwrap();
        assert!(rad_norm(&long).is_err());
    }
}
