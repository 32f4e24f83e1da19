//! Norms defined by pairing against a unit ball of functional tuples:
//! `sup { Σ_j |f_j(x_j)| : (f_j) ∈ B_{X(E*)} }`.
//!
//! With `X = ℓ_{p*}^w` this is the Cohen strongly `p`-summable norm. Two
//! independent routes are provided:
//!
//! * [`cohen_norm`] alternates between a linear program over the tuple
//!   `(f_j)` (constrained by finitely many supporting half-spaces of the
//!   weak ball, plus the box `|f_{j,i}| ≤ 1`) and the weak-norm oracle, which
//!   returns the most violated half-space `Σ_j β_j f_j(x) ≤ 1` for the LP
//!   optimum. The LP value is an upper bound; the LP point rescaled onto the
//!   ball is a lower bound.
//! * [`dual_norm`] runs a multistart ratio ascent for any supported inner
//!   class, using only norm evaluations and their subgradients.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};

use super::weak::{weak_norm_warm, weak_norm_with, WeakBackend};
use super::{FiniteSeq, SeqClass};
use crate::error::{Error, Result};
use crate::optim::{gaussian_vec, multistart, restart_rng, NormConfig};
use crate::spaces::{dot, lp_norm, norming_coords, Exponent, Space};

/// A lower estimate of a pairing norm with the functional tuple attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct DualEstimate {
    /// Certified lower bound whenever `exact_constraint` holds.
    pub value: f64,
    /// Upper bound, when the method produces one.
    pub upper_bound: Option<f64>,
    /// `(f_j)` in `E*`, normalized to constraint value 1.
    pub witness: FiniteSeq,
    /// Whether the constraint norm of the witness was evaluated exactly.
    pub exact_constraint: bool,
    pub iterations: usize,
}

fn pairing(items: &[Vec<f64>], fs: &[Vec<f64>]) -> f64 {
    items.iter().zip(fs).map(|(x, f)| dot(f, x).abs()).sum()
}

/// Aligned start: `f_j = w_j · (norming functional of x_j)` with
/// `w_j = ‖x_j‖^{r-1}` (`r = ∞` puts all weight on the largest item).
fn aligned_tuple(s: &FiniteSeq, r: Exponent) -> Vec<Vec<f64>> {
    let norms = s.item_norms();
    let e = s.space().exponent();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    s.items()
        .iter()
        .zip(&norms)
        .map(|(x, &n)| {
            let w = match r {
                Exponent::Infinity => {
                    if n == top {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ if r.is_one() => 1.0,
                _ if n == 0.0 => 0.0,
                _ => (n / top).powf(r.value() - 1.0),
            };
            norming_coords(x, e).into_iter().map(|c| w * c).collect()
        })
        .collect()
}

pub fn cohen_norm(s: &FiniteSeq, p: Exponent) -> Result<f64> {
    Ok(cohen_norm_with(s, p, &NormConfig::default())?.value)
}

/// `‖(x_j)‖_{ℓ_p⟨E⟩}` by the alternating cutting-plane method.
pub fn cohen_norm_with(s: &FiniteSeq, p: Exponent, cfg: &NormConfig) -> Result<DualEstimate> {
    let space = s.space();
    let dual = space.dual();
    let q = p.conjugate();
    let k = s.len();
    let d = space.dim();
    if k == 0 || s.is_zero() {
        return Ok(DualEstimate {
            value: 0.0,
            upper_bound: Some(0.0),
            witness: FiniteSeq::new(dual, vec![vec![0.0; d]; k])?,
            exact_constraint: true,
            iterations: 0,
        });
    }
    let constraint = |fs: &[Vec<f64>], cfg: &NormConfig| -> Result<(f64, Vec<f64>, bool)> {
        let seq = FiniteSeq::new(dual, fs.to_vec())?;
        let w = weak_norm_with(&seq, q, cfg, WeakBackend::Auto)?;
        Ok((
            w.value,
            w.certificate.coords().to_vec(),
            w.backend != WeakBackend::Ascent,
        ))
    };

    let aligned = aligned_tuple(s, p);
    let mut candidate = aligned.clone();
    let mut candidate_value = f64::NEG_INFINITY;

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Vec<Variable>> = s
        .items()
        .iter()
        .map(|x| x.iter().map(|&c| problem.add_var(c, (-1.0, 1.0))).collect())
        .collect();
    let mut solution = problem
        .solve()
        .map_err(|e| Error::Io(format!("linear program: {e}")))?;
    let mut upper = f64::INFINITY;
    let mut rounds = 0;
    for _ in 0..cfg.cut_rounds.max(1) {
        rounds += 1;
        upper = upper.min(solution.objective());
        let fs: Vec<Vec<f64>> = vars
            .iter()
            .map(|row| row.iter().map(|v| *solution.var_value(*v)).collect())
            .collect();
        let (c, x_star, _) = constraint(&fs, cfg)?;
        if c > 0.0 {
            let v = pairing(s.items(), &fs) / c;
            if v > candidate_value {
                candidate_value = v;
                candidate = fs.clone();
            }
        }
        if upper - candidate_value <= 1e-7 * upper.abs() || c <= 1.0 + 1e-12 {
            break;
        }
        // most violated supporting half-space: Σ_j β_j f_j(x*) ≤ 1
        let evals: Vec<f64> = fs.iter().map(|f| dot(f, &x_star)).collect();
        let beta = norming_coords(&evals, q);
        let mut terms = Vec::new();
        for (row, &b) in vars.iter().zip(&beta) {
            for (v, &xi) in row.iter().zip(&x_star) {
                let coeff = b * xi;
                if coeff != 0.0 {
                    terms.push((*v, coeff));
                }
            }
        }
        if terms.is_empty() {
            break;
        }
        solution = match solution.add_constraint(terms, ComparisonOp::Le, 1.0) {
            Ok(sol) => sol,
            Err(_) => break,
        };
    }

    let mut best: Option<(f64, Vec<Vec<f64>>, bool)> = None;
    for fs in [aligned, candidate] {
        let (c, _, exact) = constraint(&fs, cfg)?;
        if c > 0.0 {
            let v = pairing(s.items(), &fs) / c;
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((
                    v,
                    fs.iter()
                        .map(|f| f.iter().map(|a| a / c).collect())
                        .collect(),
                    exact,
                ));
            }
        }
    }
    let (value, fs, exact) = best.expect("the aligned tuple of a nonzero sequence is nonzero");
    Ok(DualEstimate {
        value,
        upper_bound: if upper.is_finite() { Some(upper) } else { None },
        witness: FiniteSeq::new(dual, fs)?,
        exact_constraint: exact,
        iterations: rounds,
    })
}

/// The inner classes whose unit ball on `E*` can be used as the constraint.
fn supported(inner: &SeqClass) -> Result<Exponent> {
    match inner {
        SeqClass::LpAbs(r) | SeqClass::LpWeak(r) => Ok(*r),
        other => Err(Error::UnsupportedClass(format!(
            "dual({other}): inner class must be lp:<r> or lpw:<r>"
        ))),
    }
}

pub fn dual_norm(inner: &SeqClass, s: &FiniteSeq) -> Result<f64> {
    Ok(dual_norm_with(inner, s, &NormConfig::default())?.value)
}

/// `sup { Σ_j |f_j(x_j)| : ‖(f_j)‖_{X(E*)} ≤ 1 }` by multistart ratio ascent,
/// followed by an ellipsoid refinement of the best tuple.
pub fn dual_norm_with(inner: &SeqClass, s: &FiniteSeq, cfg: &NormConfig) -> Result<DualEstimate> {
    let r = supported(inner)?;
    let space = s.space();
    let dual = space.dual();
    let k = s.len();
    let d = space.dim();
    if k == 0 || s.is_zero() {
        return Ok(DualEstimate {
            value: 0.0,
            upper_bound: Some(0.0),
            witness: FiniteSeq::new(dual, vec![vec![0.0; d]; k])?,
            exact_constraint: true,
            iterations: 0,
        });
    }
    let items = s.items();
    let constraint = Constraint {
        inner: inner.clone(),
        dual,
        cfg: cfg.inner(),
    };
    let full = Constraint {
        inner: inner.clone(),
        dual,
        cfg: cfg.clone(),
    };
    let aligned = aligned_tuple(s, r.conjugate());

    let outcome = multistart(cfg.restarts, |idx| {
        let start = if idx == 0 {
            aligned.clone()
        } else {
            let mut rng = restart_rng(cfg.seed, idx);
            (0..k).map(|_| gaussian_vec(&mut rng, d)).collect()
        };
        let run = ratio_ascent(items, start, &constraint, cfg).and_then(|(_, mut fs, it)| {
            let c = full.value_and_subgradient(&fs)?.0;
            fs.iter_mut()
                .flat_map(|f| f.iter_mut())
                .for_each(|v| *v /= c);
            Ok((pairing(items, &fs), fs, it))
        });
        match run {
            Ok((v, fs, it)) => (v, Some((fs, it))),
            Err(_) => (f64::NEG_INFINITY, None),
        }
    });
    let (fs, ascent_iters) = outcome
        .payload
        .ok_or_else(|| Error::UnsupportedClass(format!("dual({inner}) on {space}")))?;
    let refined = ellipsoid_refine(items, &fs, &constraint, cfg)?;
    let refined = refined.renormalized(items, &full)?;
    let exact = inner.is_exact_on(&dual);
    let (value, fs) = if refined.value > outcome.value {
        (refined.value, refined.tuple)
    } else {
        (outcome.value, fs)
    };
    Ok(DualEstimate {
        value,
        upper_bound: refined.upper.filter(|_| exact),
        exact_constraint: exact,
        witness: FiniteSeq::new(dual, fs)?,
        iterations: ascent_iters + refined.iterations,
    })
}

struct Refined {
    value: f64,
    tuple: Vec<Vec<f64>>,
    upper: Option<f64>,
    iterations: usize,
}

impl Refined {
    fn renormalized(mut self, items: &[Vec<f64>], full: &Constraint) -> Result<Refined> {
        let c = full.value_and_subgradient(&self.tuple)?.0;
        if c > 0.0 {
            self.tuple.iter_mut().flatten().for_each(|v| *v /= c);
            self.value = pairing(items, &self.tuple);
        }
        Ok(self)
    }
}

/// Central-cut ellipsoid method for `min ‖F‖_X` on the hyperplane
/// `Σ_j f_j(x_j) = 1` (signs of `f_j` aligned with the start), whose optimal
/// value is the reciprocal of the dual norm. The start fixes the centre; the
/// initial ball has radius `2√n ‖F_start‖_X`, which contains every tuple on
/// the hyperplane with a smaller constraint value because coordinates are
/// bounded by item norms and item norms by the constraint norm.
fn ellipsoid_refine(
    items: &[Vec<f64>],
    start: &[Vec<f64>],
    constraint: &Constraint,
    cfg: &NormConfig,
) -> Result<Refined> {
    let k = items.len();
    let d = items[0].len();
    let n = k * d;
    let signs: Vec<f64> = items
        .iter()
        .zip(start)
        .map(|(x, f)| if dot(f, x) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let x_flat: Vec<f64> = items.iter().flatten().copied().collect();
    let unflatten = |v: &DVector<f64>| -> Vec<Vec<f64>> {
        (0..k)
            .map(|j| (0..d).map(|i| signs[j] * v[j * d + i]).collect())
            .collect()
    };
    let xv = DVector::from_vec(x_flat);
    let xx = xv.norm_squared();
    let f0 = &xv / xx;
    // Householder reflection taking e_1 to x/‖x‖; its other columns span x^⊥
    let u = &xv / xx.sqrt();
    let mut v = u.clone();
    v[0] -= 1.0;
    let basis = if v.norm() < 1e-14 {
        DMatrix::identity(n, n)
    } else {
        DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared())
    };
    let basis = basis.columns(1, n - 1).into_owned();

    let start_flat = DVector::from_iterator(
        n,
        start
            .iter()
            .zip(&signs)
            .flat_map(|(f, &sg)| f.iter().map(move |c| sg * c)),
    );
    let level = start_flat.dot(&xv);
    let mut warm = Vec::new();
    let mut evaluate = |fl: &DVector<f64>| constraint.evaluate(&unflatten(fl), Some(&mut warm));
    if n == 1 || level <= 0.0 {
        let (c, _) = evaluate(&f0)?;
        let tuple = unflatten(&(&f0 / c));
        return Ok(Refined {
            value: 1.0 / c,
            tuple,
            upper: Some(1.0 / c),
            iterations: 0,
        });
    }
    let on_plane = &start_flat / level;
    let (c_start, _) = evaluate(&on_plane)?;
    let m = n - 1;
    let mut centre = basis.transpose() * (&on_plane - &f0);
    let radius = 2.0 * (n as f64).sqrt() * c_start * 1.01;
    let mut shape = DMatrix::<f64>::identity(m, m) * (radius * radius);
    let mut best = (c_start, on_plane);
    let mut lower = 0.0f64;
    let cap = 40 * m * (m + 1) + 200;
    let mut iterations = 0;
    let mf = m as f64;
    while iterations < cap {
        iterations += 1;
        let point = &f0 + &basis * &centre;
        let (c, grad) = evaluate(&point)?;
        if c < best.0 {
            best = (c, point.clone());
        }
        let g_flat = DVector::from_iterator(
            n,
            grad.iter()
                .zip(&signs)
                .flat_map(|(g, &sg)| g.iter().map(move |c| sg * c)),
        );
        let g = basis.transpose() * g_flat;
        let pg = &shape * &g;
        let spread = g.dot(&pg);
        if spread.is_nan() || spread <= 0.0 {
            lower = lower.max(c);
            break;
        }
        let width = spread.sqrt();
        lower = lower.max(c - width);
        if width <= cfg.rel_tol * best.0 || best.0 - lower <= cfg.rel_tol * best.0 {
            break;
        }
        let gt = &pg / width;
        if m == 1 {
            centre -= &gt * 0.5;
            shape *= 0.25;
        } else {
            centre -= &gt * (1.0 / (mf + 1.0));
            shape = (&shape - (&gt * gt.transpose()) * (2.0 / (mf + 1.0)))
                * (mf * mf / (mf * mf - 1.0));
            shape = (&shape + shape.transpose()) * 0.5;
        }
    }
    let (c_best, point) = best;
    Ok(Refined {
        value: 1.0 / c_best,
        tuple: unflatten(&(&point / c_best)),
        upper: (lower > 0.0).then(|| 1.0 / lower),
        iterations,
    })
}

const WARM_POOL: usize = 8;

fn remember(pool: &mut Vec<Vec<f64>>, x: &[f64]) {
    let close = |y: &Vec<f64>| {
        let same: f64 = y
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let opposite: f64 = y
            .iter()
            .zip(x)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        same.min(opposite) < 1e-6
    };
    if let Some(i) = pool.iter().position(close) {
        pool.remove(i);
    } else if pool.len() == WARM_POOL {
        pool.remove(0);
    }
    pool.push(x.to_vec());
}

struct Constraint {
    inner: SeqClass,
    dual: Space,
    cfg: NormConfig,
}

impl Constraint {
    /// Value of the constraint norm and a subgradient with respect to the tuple.
    fn value_and_subgradient(&self, fs: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        self.evaluate(fs, None)
    }

    /// As [`Self::value_and_subgradient`]; a weak-norm ascent also starts from
    /// every point of `warm`, which keeps the most recent distinct maximizers.
    fn evaluate(
        &self,
        fs: &[Vec<f64>],
        warm: Option<&mut Vec<Vec<f64>>>,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let dual_exp = self.dual.exponent();
        let k = fs.len();
        let d = self.dual.dim();
        match &self.inner {
            SeqClass::LpAbs(r) => {
                let norms: Vec<f64> = fs.iter().map(|f| lp_norm(f, dual_exp)).collect();
                let value = lp_norm(&norms, *r);
                let mut grad = vec![vec![0.0; d]; k];
                if value == 0.0 {
                    return Ok((0.0, grad));
                }
                let first_max = norms.iter().position(|&n| n == value);
                for (j, f) in fs.iter().enumerate() {
                    let w = match r {
                        Exponent::Infinity => {
                            if Some(j) == first_max {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        _ => (norms[j] / value).powf(r.value() - 1.0),
                    };
                    if w != 0.0 && norms[j] > 0.0 {
                        let h = norming_coords(f, dual_exp);
                        grad[j] = h.into_iter().map(|c| w * c).collect();
                    }
                }
                Ok((value, grad))
            }
            SeqClass::LpWeak(r) => {
                let seq = FiniteSeq::new(self.dual, fs.to_vec())?;
                let w = match warm {
                    Some(warm) => {
                        let w = weak_norm_warm(&seq, *r, &self.cfg, warm)?;
                        remember(warm, w.certificate.coords());
                        w
                    }
                    None => weak_norm_with(&seq, *r, &self.cfg, WeakBackend::Auto)?,
                };
                let x = w.certificate.coords();
                let evals: Vec<f64> = fs.iter().map(|f| dot(f, x)).collect();
                let weights = norming_coords(&evals, *r);
                let grad = weights
                    .iter()
                    .map(|&b| x.iter().map(|c| b * c).collect())
                    .collect();
                Ok((w.value, grad))
            }
            _ => unreachable!("checked by supported()"),
        }
    }
}

/// Ascent on `log Σ_j |f_j(x_j)| - log ‖(f_j)‖_X`, with a random probe of the
/// same length whenever the subgradient step fails.
fn ratio_ascent(
    items: &[Vec<f64>],
    mut fs: Vec<Vec<f64>>,
    constraint: &Constraint,
    cfg: &NormConfig,
) -> Result<(f64, Vec<Vec<f64>>, usize)> {
    let normalize = |fs: &mut Vec<Vec<f64>>| -> Result<f64> {
        let (c, _) = constraint.value_and_subgradient(fs)?;
        if c > 0.0 {
            fs.iter_mut()
                .flat_map(|f| f.iter_mut())
                .for_each(|v| *v /= c);
        }
        Ok(c)
    };
    if normalize(&mut fs)? == 0.0 {
        return Ok((0.0, fs, 0));
    }
    let mut value = pairing(items, &fs);
    let mut step = 0.5;
    let mut rng = restart_rng(cfg.seed ^ 0xC0FFEE, items.len());
    let budget = (cfg.max_iters / 50).max(20);
    let mut it = 0;
    while it < budget && step > 1e-12 {
        it += 1;
        let (_, cgrad) = constraint.value_and_subgradient(&fs)?;
        let g = value.max(1e-300);
        let dir: Vec<Vec<f64>> = fs
            .iter()
            .zip(items)
            .zip(&cgrad)
            .map(|((f, x), cg)| {
                let sgn = dot(f, x).signum();
                x.iter().zip(cg).map(|(xi, ci)| sgn * xi / g - ci).collect()
            })
            .collect();
        let dn = dir.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let mut improved = false;
        for attempt in 0..2 {
            let mut cand: Vec<Vec<f64>> = if attempt == 0 && dn > 0.0 {
                fs.iter()
                    .zip(&dir)
                    .map(|(f, dr)| f.iter().zip(dr).map(|(a, b)| a + step * b / dn).collect())
                    .collect()
            } else {
                let noise = gaussian_vec(&mut rng, items.len() * items[0].len());
                let nn = noise.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                fs.iter()
                    .enumerate()
                    .map(|(j, f)| {
                        f.iter()
                            .enumerate()
                            .map(|(i, a)| a + step * noise[j * f.len() + i] / nn)
                            .collect()
                    })
                    .collect()
            };
            if normalize(&mut cand)? <= 0.0 {
                continue;
            }
            let v = pairing(items, &cand);
            if v > value {
                let gain = v - value;
                fs = cand;
                value = v;
                improved = true;
                if gain <= cfg.rel_tol * value * 1e-2 {
                    step *= 0.5;
                }
                break;
            }
        }
        if improved {
            step = (step * 1.5).min(1.0);
        } else {
            step *= 0.5;
        }
    }
    Ok((value, fs, it))
}
