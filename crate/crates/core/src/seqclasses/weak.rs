//! `‖(x_j)‖_{ℓ_p^w(E)} = sup_{f ∈ B_{E*}} (Σ_j |f(x_j)|^p)^{1/p}`.
//!
//! The objective is convex in `f`, so the supremum over the dual ball sits at
//! an extreme point. When the dual ball is a polytope (`E = ℓ_1` or `ℓ_∞`) the
//! vertices are enumerated; when `p = 2` and `E` is Euclidean the value is the
//! top singular value of the matrix with columns `x_j`. Otherwise a multistart
//! ascent on the dual sphere returns a lower bound certified by its maximizer.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use super::FiniteSeq;
use crate::error::{Error, Result};
use crate::optim::{gaussian_vec, multistart, restart_rng, NormConfig};
use crate::spaces::{dot, lp_norm, norming_coords, retract_in_place, Exponent, Functional, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeakBackend {
    /// Pick the exact backend when one applies, ascent otherwise.
    Auto,
    /// `p = ∞`: the supremum of item norms.
    ClosedForm,
    Enumeration,
    Singular,
    Ascent,
}

impl fmt::Display for WeakBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WeakBackend::Auto => "auto",
            WeakBackend::ClosedForm => "closed-form",
            WeakBackend::Enumeration => "extreme-points",
            WeakBackend::Singular => "singular-value",
            WeakBackend::Ascent => "ascent",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakNorm {
    pub value: f64,
    pub backend: WeakBackend,
    /// A unit functional of `E*` attaining `value`.
    pub certificate: Functional,
}

pub(crate) fn auto_backend(space: &Space, p: Exponent) -> WeakBackend {
    let dual = space.dual().exponent();
    if p.is_infinite() {
        WeakBackend::ClosedForm
    } else if dual.is_one() || dual.is_infinite() {
        WeakBackend::Enumeration
    } else if p.is_two() && space.is_euclidean() {
        WeakBackend::Singular
    } else {
        WeakBackend::Ascent
    }
}

pub fn weak_norm(s: &FiniteSeq, p: Exponent) -> Result<f64> {
    Ok(weak_norm_with(s, p, &NormConfig::default(), WeakBackend::Auto)?.value)
}

pub fn weak_norm_with(
    s: &FiniteSeq,
    p: Exponent,
    cfg: &NormConfig,
    backend: WeakBackend,
) -> Result<WeakNorm> {
    let space = s.space();
    let backend = match backend {
        WeakBackend::Auto => auto_backend(&space, p),
        b => b,
    };
    if s.is_empty() {
        return Ok(WeakNorm {
            value: 0.0,
            backend,
            certificate: Functional::coordinate(space, 0)?,
        });
    }
    let (value, coords) = match backend {
        WeakBackend::Auto => unreachable!(),
        WeakBackend::ClosedForm => closed_form(s, p)?,
        WeakBackend::Enumeration => enumerate(s, p, cfg.enumeration_cap)?,
        WeakBackend::Singular => singular(s, p)?,
        WeakBackend::Ascent => ascent(s, p, cfg, &[]),
    };
    Ok(WeakNorm {
        value,
        backend,
        certificate: Functional::new(space, coords)?,
    })
}

/// Like the automatic backend choice, but an ascent additionally starts from
/// each of `warm` (dual coordinates). Used when many nearby sequences are
/// evaluated in turn.
pub(crate) fn weak_norm_warm(
    s: &FiniteSeq,
    p: Exponent,
    cfg: &NormConfig,
    warm: &[Vec<f64>],
) -> Result<WeakNorm> {
    let space = s.space();
    if auto_backend(&space, p) != WeakBackend::Ascent || s.is_empty() {
        return weak_norm_with(s, p, cfg, WeakBackend::Auto);
    }
    let (value, coords) = ascent(s, p, cfg, warm);
    Ok(WeakNorm {
        value,
        backend: WeakBackend::Ascent,
        certificate: Functional::new(space, coords)?,
    })
}

/// `(Σ_j |f(x_j)|^p)^{1/p}` for dual coordinates `f`.
pub(crate) fn objective(items: &[Vec<f64>], f: &[f64], p: Exponent) -> f64 {
    let evals: Vec<f64> = items.iter().map(|x| dot(f, x)).collect();
    lp_norm(&evals, p)
}

fn closed_form(s: &FiniteSeq, p: Exponent) -> Result<(f64, Vec<f64>)> {
    if !p.is_infinite() {
        return Err(Error::UnsupportedExponent {
            exponent: p.to_string(),
            operation: "closed-form weak norm",
        });
    }
    let norms = s.item_norms();
    let (j, &v) =
        norms.iter().enumerate().fold(
            (0, &0.0),
            |best, (j, v)| if *v > *best.1 { (j, v) } else { best },
        );
    Ok((v, norming_coords(&s.items()[j], s.space().exponent())))
}

/// Exact maximum over the vertices of the dual ball.
fn enumerate(s: &FiniteSeq, p: Exponent, cap: usize) -> Result<(f64, Vec<f64>)> {
    let space = s.space();
    let d = space.dim();
    let dual = space.dual().exponent();
    let items = s.items();
    if dual.is_one() {
        // vertices ±e_i: the evaluations are the i-th coordinates
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..d {
            let v = lp_norm(&items.iter().map(|x| x[i]).collect::<Vec<_>>(), p);
            if v > best.0 {
                best = (v, i);
            }
        }
        let mut f = vec![0.0; d];
        f[best.1] = 1.0;
        Ok((best.0, f))
    } else if dual.is_infinite() {
        if d > cap {
            return Err(Error::EnumerationCap {
                what: "sign vectors of the l_inf ball",
                size: d,
                cap,
            });
        }
        // The objective is even, so fix the first sign and walk the other
        // 2^{d-1} sign vectors in Gray-code order.
        let mut signs = vec![1.0; d];
        let mut evals: Vec<f64> = items.iter().map(|x| x.iter().sum()).collect();
        let mut best = (lp_norm(&evals, p), signs.clone());
        for step in 1u64..(1u64 << (d - 1)) {
            let i = step.trailing_zeros() as usize + 1;
            let old = signs[i];
            signs[i] = -old;
            for (e, x) in evals.iter_mut().zip(items) {
                *e -= 2.0 * old * x[i];
            }
            let v = lp_norm(&evals, p);
            if v > best.0 {
                best = (v, signs.clone());
            }
        }
        // recompute at the winner to shed accumulated rounding
        let value = objective(items, &best.1, p);
        Ok((value, best.1))
    } else {
        Err(Error::UnsupportedExponent {
            exponent: space.exponent().to_string(),
            operation: "weak-norm vertex enumeration",
        })
    }
}

/// Top singular value of the `d × k` matrix with columns `x_j`.
fn singular(s: &FiniteSeq, p: Exponent) -> Result<(f64, Vec<f64>)> {
    let space = s.space();
    if !p.is_two() || !space.is_euclidean() {
        return Err(Error::UnsupportedExponent {
            exponent: p.to_string(),
            operation: "singular-value weak norm",
        });
    }
    let d = space.dim();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for x in s.items() {
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] += x[a] * x[b];
            }
        }
    }
    let eig = SymmetricEigen::new(gram);
    let (imax, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &l)| {
                if l > best.1 {
                    (i, l)
                } else {
                    best
                }
            });
    let mut f: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
    retract_in_place(&mut f, Exponent::TWO);
    // evaluate the certificate directly rather than trusting sqrt(λ)
    let value = objective(s.items(), &f, p);
    Ok((value, f))
}

/// Multistart ascent on the dual sphere.
///
/// Each step moves toward `h = argmax_{‖h‖_{E*} ≤ 1} ⟨∇φ(f), h⟩` and retracts
/// radially, halving the step until the objective does not decrease. By
/// convexity of `φ` the full step never decreases it, so this is a monotone
/// generalized power iteration. Starts: norming functionals of the items,
/// then Gaussian directions.
fn ascent(s: &FiniteSeq, p: Exponent, cfg: &NormConfig, warm: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let space = s.space();
    let items = s.items();
    let d = space.dim();
    let dual_exp = space.dual().exponent();
    let shift = warm.len();
    let best = multistart(cfg.restarts + shift, |idx| {
        let r = idx.wrapping_sub(shift);
        let mut f = if let Some(w) = warm.get(idx) {
            let mut w = w.clone();
            if retract_in_place(&mut w, dual_exp) == 0.0 {
                w[0] = 1.0;
            }
            w
        } else if r < items.len() && items[r].iter().any(|&c| c != 0.0) {
            norming_coords(&items[r], space.exponent())
        } else {
            let mut rng = restart_rng(cfg.seed, r);
            let mut g = gaussian_vec(&mut rng, d);
            retract_in_place(&mut g, dual_exp);
            g
        };
        let value = climb(items, &mut f, p, space.exponent(), dual_exp, cfg);
        (value, f)
    });
    (best.value, best.payload)
}

fn climb(
    items: &[Vec<f64>],
    f: &mut Vec<f64>,
    p: Exponent,
    primal: Exponent,
    dual: Exponent,
    cfg: &NormConfig,
) -> f64 {
    let mut value = objective(items, f, p);
    let mut last_gain = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        if value == 0.0 {
            break;
        }
        let g = gradient(items, f, p, value);
        let h = norming_coords(&g, primal);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let mut cand: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + t * (b - a)).collect();
            if retract_in_place(&mut cand, dual) > 0.0 {
                let v = objective(items, &cand, p);
                if v >= value {
                    accepted = Some((v, cand));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((v, cand)) => {
                let gain = v - value;
                *f = cand;
                value = v;
                // Geometric convergence leaves about gain * r / (1 - r) to go.
                let r = gain / last_gain;
                let remaining = if r < 1.0 {
                    gain * r / (1.0 - r)
                } else {
                    f64::INFINITY
                };
                last_gain = gain;
                if gain <= cfg.rel_tol * value && remaining <= cfg.rel_tol * value {
                    break;
                }
            }
            None => break,
        }
    }
    value
}

/// Gradient (first attaining subgradient at ties) of `φ` at `f`, in primal coordinates.
fn gradient(items: &[Vec<f64>], f: &[f64], p: Exponent, value: f64) -> Vec<f64> {
    let d = f.len();
    let mut g = vec![0.0; d];
    let evals: Vec<f64> = items.iter().map(|x| dot(f, x)).collect();
    match p {
        Exponent::Infinity => {
            let j = evals.iter().position(|e| e.abs() == value).unwrap_or(0);
            for (gi, xi) in g.iter_mut().zip(&items[j]) {
                *gi = evals[j].signum() * xi;
            }
        }
        _ => {
            let pv = p.value();
            for (x, e) in items.iter().zip(&evals) {
                let w = if p.is_one() {
                    e.signum()
                } else {
                    e.signum() * (e.abs() / value).powf(pv - 1.0)
                };
                if w != 0.0 {
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += w * xi;
                    }
                }
            }
        }
    }
    g
}
