//! Multilinear operators between finite-dimensional `ℓ_p` spaces and lower
//! estimates of their summing norms.
//!
//! A dense operator stores its coefficients with shape `(d_1, …, d_n, d_F)`
//! in row-major order, so that
//! `A(x_1, …, x_n)_o = Σ a[i_1, …, i_n, o] x_1[i_1] ⋯ x_n[i_n]`.
//! Operators whose dense form would be too large (the rank-one maps used on
//! `ℓ_∞^{4096}`) are represented through the [`MultilinearMap`] trait.

use std::io::Write;

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{gaussian_vec, multistart, restart_rng, NormConfig};
use crate::seqclasses::{FiniteSeq, SeqClass, SeqFamily, SequenceNorm};
use crate::spaces::{dot, Functional, Space, Vector};

/// Anything that evaluates like an n-linear map `E_1 × ⋯ × E_n → F`.
pub trait MultilinearMap: Send + Sync {
    fn domains(&self) -> &[Space];

    fn codomain(&self) -> Space;

    fn arity(&self) -> usize {
        self.domains().len()
    }

    /// Evaluation on raw coordinates; callers guarantee the lengths.
    fn apply_coords(&self, args: &[&[f64]]) -> Vec<f64>;

    fn apply(&self, args: &[Vector]) -> Result<Vector> {
        if args.len() != self.arity() {
            return Err(Error::ShapeMismatch(format!(
                "{} arguments for arity {}",
                args.len(),
                self.arity()
            )));
        }
        for (x, space) in args.iter().zip(self.domains()) {
            space.ensure_eq(&x.space())?;
        }
        let coords: Vec<&[f64]> = args.iter().map(|x| x.coords()).collect();
        Vector::new(self.codomain(), self.apply_coords(&coords))
    }
}

fn check_permutation(sigma: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(sigma.to_vec()));
    }
    for &s in sigma {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidPermutation(sigma.to_vec()));
        }
    }
    Ok(())
}

/// `A ∘ σ` needs slot `t` and slot `σ(t)` to carry the same space.
fn check_permutable(domains: &[Space], sigma: &[usize]) -> Result<()> {
    check_permutation(sigma, domains.len())?;
    if sigma
        .iter()
        .enumerate()
        .any(|(t, &s)| domains[t] != domains[s])
    {
        return Err(Error::UnequalDomains);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearOp {
    domains: Vec<Space>,
    codomain: Space,
    coeffs: Vec<f64>,
}

impl MultilinearOp {
    pub fn new(domains: Vec<Space>, codomain: Space, coeffs: Vec<f64>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::ShapeMismatch(
                "an operator needs at least one slot".into(),
            ));
        }
        let expected: usize = domains.iter().map(Space::dim).product::<usize>() * codomain.dim();
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {expected} entries",
                coeffs.len()
            )));
        }
        Ok(MultilinearOp {
            domains,
            codomain,
            coeffs,
        })
    }

    pub fn zeros(domains: Vec<Space>, codomain: Space) -> Result<Self> {
        let len = domains.iter().map(Space::dim).product::<usize>() * codomain.dim();
        MultilinearOp::new(domains, codomain, vec![0.0; len])
    }

    /// Coefficients from a function of the multi-index `(i_1, …, i_n, o)`.
    pub fn from_fn(
        domains: Vec<Space>,
        codomain: Space,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let mut op = MultilinearOp::zeros(domains, codomain)?;
        let shape = op.shape();
        for (flat, idx) in shape
            .iter()
            .map(|&d| 0..d)
            .multi_cartesian_product()
            .enumerate()
        {
            op.coeffs[flat] = f(&idx);
        }
        Ok(op)
    }

    /// The identity `E → E` as a 1-linear operator.
    pub fn identity(space: Space) -> Self {
        MultilinearOp::from_fn(
            vec![space],
            space,
            |idx| if idx[0] == idx[1] { 1.0 } else { 0.0 },
        )
        .expect("shape is consistent")
    }

    /// `(λ_1, …, λ_n) ↦ λ_1 ⋯ λ_n` on scalars.
    pub fn scalar_product(n: usize) -> Self {
        let k = Space::scalars();
        MultilinearOp::new(vec![k; n.max(1)], k, vec![1.0]).expect("shape is consistent")
    }

    /// `A(x, y) = f(x) · u(y)` for a linear `u`.
    pub fn rank_one_bilinear(f: &Functional, u: &MultilinearOp) -> Result<Self> {
        if u.arity() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "u must be linear, has arity {}",
                u.arity()
            )));
        }
        let (dx, dy, df) = (f.primal().dim(), u.domains[0].dim(), u.codomain.dim());
        let mut coeffs = Vec::with_capacity(dx * dy * df);
        for &fi in f.coords() {
            coeffs.extend(u.coeffs.iter().map(|c| fi * c));
        }
        MultilinearOp::new(vec![f.primal(), u.domains[0]], u.codomain, coeffs)
    }

    /// `(x_1, …, x_n) ↦ f_1(x_1) ⋯ f_n(x_n) · y`.
    pub fn rank_one(fs: &[Functional], y: &Vector) -> Result<Self> {
        let domains: Vec<Space> = fs.iter().map(Functional::primal).collect();
        MultilinearOp::from_fn(domains, y.space(), |idx| {
            let (slots, o) = idx.split_at(fs.len());
            slots
                .iter()
                .zip(fs)
                .map(|(&i, f)| f.coords()[i])
                .product::<f64>()
                * y.coords()[o[0]]
        })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.domains
            .iter()
            .map(Space::dim)
            .chain([self.codomain.dim()])
            .collect()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scaled(&self, a: f64) -> Self {
        MultilinearOp {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
            ..self.clone()
        }
    }

    /// `B(x_1, …, x_n) = A(x_{σ(1)}, …, x_{σ(n)})` with zero-based `σ`.
    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        check_permutable(&self.domains, sigma)?;
        let n = self.arity();
        let shape = self.shape();
        let strides = strides(&shape);
        let mut out = self.clone();
        for (flat, idx) in shape
            .iter()
            .map(|&d| 0..d)
            .multi_cartesian_product()
            .enumerate()
        {
            let src: usize = (0..n).map(|t| idx[sigma[t]] * strides[t]).sum::<usize>() + idx[n];
            out.coeffs[flat] = self.coeffs[src];
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Result<Self> {
        self.permute(&[1, 0])
    }

    /// `A_s = (1/n!) Σ_σ A ∘ σ`.
    pub fn symmetrize(&self) -> Result<Self> {
        let n = self.arity();
        if self.domains.iter().any(|d| *d != self.domains[0]) {
            return Err(Error::UnequalDomains);
        }
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        let mut acc = vec![0.0; self.coeffs.len()];
        for sigma in &perms {
            let p = self.permute(sigma)?;
            for (a, c) in acc.iter_mut().zip(&p.coeffs) {
                *a += c;
            }
        }
        let m = perms.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        MultilinearOp::new(self.domains.clone(), self.codomain, acc)
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for t in (0..shape.len().saturating_sub(1)).rev() {
        s[t] = s[t + 1] * shape[t + 1];
    }
    s
}

impl MultilinearMap for MultilinearOp {
    fn domains(&self) -> &[Space] {
        &self.domains
    }

    fn codomain(&self) -> Space {
        self.codomain
    }

    /// Contracts the leading slot first, so the work is dominated by one pass
    /// over the coefficients.
    fn apply_coords(&self, args: &[&[f64]]) -> Vec<f64> {
        let mut current: Vec<f64> = self.coeffs.clone();
        for x in args {
            let rest = current.len() / x.len();
            let mut next = vec![0.0; rest];
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    for (n, c) in next.iter_mut().zip(&current[i * rest..(i + 1) * rest]) {
                        *n += xi * c;
                    }
                }
            }
            current = next;
        }
        current
    }
}

/// `A(x, y) = f(x) · u(y)` without materializing coefficients; `u = None` is
/// the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneBilinear {
    f: Functional,
    u: Option<MultilinearOp>,
    domains: [Space; 2],
}

impl RankOneBilinear {
    pub fn new(f: Functional, u: Option<MultilinearOp>) -> Result<Self> {
        let y_space = match &u {
            Some(u) if u.arity() != 1 => {
                return Err(Error::ShapeMismatch(format!(
                    "u must be linear, has arity {}",
                    u.arity()
                )))
            }
            Some(u) => u.domains[0],
            None => f.primal(),
        };
        Ok(RankOneBilinear {
            domains: [f.primal(), y_space],
            f,
            u,
        })
    }

    pub fn to_dense(&self) -> Result<MultilinearOp> {
        let id;
        let u = match &self.u {
            Some(u) => u,
            None => {
                id = MultilinearOp::identity(self.domains[1]);
                &id
            }
        };
        MultilinearOp::rank_one_bilinear(&self.f, u)
    }
}

impl MultilinearMap for RankOneBilinear {
    fn domains(&self) -> &[Space] {
        &self.domains
    }

    fn codomain(&self) -> Space {
        self.u.as_ref().map_or(self.domains[1], |u| u.codomain)
    }

    fn apply_coords(&self, args: &[&[f64]]) -> Vec<f64> {
        let s = dot(self.f.coords(), args[0]);
        let uy = match &self.u {
            Some(u) => u.apply_coords(&args[1..]),
            None => args[1].to_vec(),
        };
        uy.into_iter().map(|c| s * c).collect()
    }
}

/// `(A ∘ σ)(x_1, …, x_n) = A(x_{σ(1)}, …, x_{σ(n)})` for any map `A`.
pub struct Permuted<M> {
    inner: M,
    sigma: Vec<usize>,
}

impl<M: MultilinearMap> Permuted<M> {
    pub fn new(inner: M, sigma: Vec<usize>) -> Result<Self> {
        check_permutable(inner.domains(), &sigma)?;
        Ok(Permuted { inner, sigma })
    }

    pub fn transpose(inner: M) -> Result<Self> {
        Permuted::new(inner, vec![1, 0])
    }
}

impl<M: MultilinearMap> MultilinearMap for Permuted<M> {
    fn domains(&self) -> &[Space] {
        self.inner.domains()
    }

    fn codomain(&self) -> Space {
        self.inner.codomain()
    }

    fn apply_coords(&self, args: &[&[f64]]) -> Vec<f64> {
        let shuffled: Vec<&[f64]> = self.sigma.iter().map(|&s| args[s]).collect();
        self.inner.apply_coords(&shuffled)
    }
}

impl<M: MultilinearMap + ?Sized> MultilinearMap for &M {
    fn domains(&self) -> &[Space] {
        (**self).domains()
    }

    fn codomain(&self) -> Space {
        (**self).codomain()
    }

    fn apply_coords(&self, args: &[&[f64]]) -> Vec<f64> {
        (**self).apply_coords(args)
    }
}

/// The pieces of one prefix ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioParts {
    pub k: usize,
    pub rho: f64,
    pub output_norm: f64,
    pub slot_norms: Vec<f64>,
}

/// The output sequence `(A(x_j^1, …, x_j^n))_{j ≤ k}`.
pub fn output_sequence(
    a: &dyn MultilinearMap,
    witnesses: &[FiniteSeq],
    k: usize,
) -> Result<FiniteSeq> {
    if witnesses.len() != a.arity() {
        return Err(Error::ShapeMismatch(format!(
            "{} witnesses for arity {}",
            witnesses.len(),
            a.arity()
        )));
    }
    for (w, space) in witnesses.iter().zip(a.domains()) {
        space.ensure_eq(&w.space())?;
        if w.len() < k {
            return Err(Error::ShapeMismatch(format!(
                "witness of length {} cut at {k}",
                w.len()
            )));
        }
    }
    let items = (0..k)
        .map(|j| {
            let args: Vec<&[f64]> = witnesses.iter().map(|w| w.items()[j].as_slice()).collect();
            a.apply_coords(&args)
        })
        .collect();
    FiniteSeq::new(a.codomain(), items)
}

pub fn ratio_parts(
    a: &dyn MultilinearMap,
    inputs: &[&dyn SequenceNorm],
    output: &dyn SequenceNorm,
    witnesses: &[FiniteSeq],
    k: usize,
    cfg: &NormConfig,
) -> Result<RatioParts> {
    if inputs.len() != a.arity() {
        return Err(Error::ShapeMismatch(format!(
            "{} input classes for arity {}",
            inputs.len(),
            a.arity()
        )));
    }
    let out = output_sequence(a, witnesses, k)?;
    let slot_norms = inputs
        .iter()
        .zip(witnesses)
        .map(|(x, w)| {
            if w.len() == k {
                x.norm(w, cfg)
            } else {
                x.norm(&w.prefix(k), cfg)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let denominator: f64 = slot_norms.iter().product();
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(Error::ZeroDenominator(format!(
            "a witness prefix of length {k} has norm zero"
        )));
    }
    let output_norm = output.norm(&out, cfg)?;
    Ok(RatioParts {
        k,
        rho: output_norm / denominator,
        output_norm,
        slot_norms,
    })
}

/// `ρ_k = ‖(A(x_j^1, …, x_j^n))_{j ≤ k}‖_Y / Π_i ‖(x_j^i)_{j ≤ k}‖_{X_i}`.
pub fn summing_ratio(
    a: &dyn MultilinearMap,
    inputs: &[SeqClass],
    output: &SeqClass,
    witnesses: &[FiniteSeq],
    k: usize,
    cfg: &NormConfig,
) -> Result<f64> {
    let inputs: Vec<&dyn SequenceNorm> = inputs.iter().map(|c| c as &dyn SequenceNorm).collect();
    Ok(ratio_parts(a, &inputs, output, witnesses, k, cfg)?.rho)
}

/// A lower estimate of `‖A‖_{Π_{X_1, …, X_n; Y}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummingEstimate {
    /// `max` over `trace`.
    pub value: f64,
    pub witnesses: Vec<Vec<Vec<f64>>>,
    /// `(m, ρ_m)` over the prefixes of the witnesses.
    pub trace: Vec<(usize, f64)>,
    /// Whether every input norm was evaluated by an exact backend, which makes
    /// `value` a certified lower bound.
    pub certified: bool,
}

fn canonical_witness(space: Space, k: usize, constant: bool) -> FiniteSeq {
    let d = space.dim();
    let items = (0..k)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[if constant { 0 } else { j % d }] = 1.0;
            e
        })
        .collect();
    FiniteSeq::new(space, items).expect("unit vectors match the space")
}

/// Hill climbing over witness entries. Restart 0 starts from unit vectors,
/// restart 1 from a constant `e_1` sequence, the rest from Gaussian entries.
/// Each step perturbs one item of one slot by a Gaussian step scaled to that
/// item and keeps it if `ρ_k` improves; accepted slots are rescaled to unit
/// norm. `budget` bounds the steps per restart.
pub fn lower_bound_search(
    a: &dyn MultilinearMap,
    inputs: &[SeqClass],
    output: &SeqClass,
    k: usize,
    budget: usize,
    cfg: &NormConfig,
) -> Result<SummingEstimate> {
    let n = a.arity();
    if inputs.len() != n || k == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} input classes for arity {n}, k = {k}",
            inputs.len()
        )));
    }
    let spaces = a.domains().to_vec();
    let rho = |w: &[FiniteSeq]| -> f64 {
        match summing_ratio(a, inputs, output, w, k, cfg) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    };
    let best = multistart(cfg.restarts, |r| {
        let mut rng = restart_rng(cfg.seed, r);
        let mut w: Vec<FiniteSeq> = spaces
            .iter()
            .map(|&s| match r {
                0 => canonical_witness(s, k, false),
                1 => canonical_witness(s, k, true),
                _ => FiniteSeq::new(s, (0..k).map(|_| gaussian_vec(&mut rng, s.dim())).collect())
                    .expect("dimensions match"),
            })
            .collect();
        let mut value = rho(&w);
        let mut step = 0.5;
        for _ in 0..budget {
            let slot = rng.gen_range(0..n);
            let j = rng.gen_range(0..k);
            let item = &w[slot].items()[j];
            let scale = item.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-3);
            let noise = gaussian_vec(&mut rng, item.len());
            let moved: Vec<f64> = item
                .iter()
                .zip(&noise)
                .map(|(c, g)| c + step * scale * g)
                .collect();
            let mut items = w[slot].items().to_vec();
            items[j] = moved;
            let mut cand = w.clone();
            cand[slot] = FiniteSeq::new(spaces[slot], items).expect("dimensions match");
            let v = rho(&cand);
            if v > value {
                if let Ok(norm) = inputs[slot].norm(&cand[slot], cfg) {
                    if norm > 0.0 {
                        cand[slot] = cand[slot]
                            .scaled(&vec![1.0 / norm; k])
                            .expect("lengths match");
                    }
                }
                w = cand;
                value = v;
                step = (step * 1.25).min(2.0);
            } else {
                step = (step * 0.95).max(1e-4);
            }
        }
        (value, w)
    });
    let witnesses = best.payload;
    let trace: Vec<(usize, f64)> = (1..=k)
        .filter_map(|m| {
            summing_ratio(a, inputs, output, &witnesses, m, cfg)
                .ok()
                .map(|v| (m, v))
        })
        .collect();
    let value = trace.iter().map(|p| p.1).fold(0.0, f64::max);
    let certified = inputs.iter().zip(&spaces).all(|(c, s)| c.is_exact_on(s));
    Ok(SummingEstimate {
        value,
        witnesses: witnesses.iter().map(|w| w.items().to_vec()).collect(),
        trace,
        certified,
    })
}

/// Growth ratio `ρ_last / ρ_first` above which a strictly increasing trace is
/// called diverging.
pub const DIVERGENCE_RATIO: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    Diverging,
    NotDiverging,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeTrace {
    pub points: Vec<RatioParts>,
    pub growth: f64,
    pub strictly_increasing: bool,
    pub verdict: ProbeVerdict,
}

impl ProbeTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let slots = self.points.first().map_or(0, |p| p.slot_norms.len());
        let mut header = vec!["k".to_string(), "rho".into(), "output_norm".into()];
        header.extend((1..=slots).map(|i| format!("slot{i}_norm")));
        out.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![
                p.k.to_string(),
                format!("{:.17e}", p.rho),
                format!("{:.17e}", p.output_norm),
            ];
            row.extend(p.slot_norms.iter().map(|v| format!("{v:.17e}")));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `k = 16, 32, …` up to `k_max` (just `k_max` when it is below 16).
pub fn doubling_schedule(k_max: usize) -> Vec<usize> {
    if k_max < 16 {
        return vec![k_max.max(1)];
    }
    std::iter::successors(Some(16usize), |k| Some(k * 2))
        .take_while(|&k| k <= k_max)
        .collect()
}

/// `ρ_k` along the doubling schedule for witnesses drawn from `families`.
pub fn divergence_probe(
    a: &dyn MultilinearMap,
    inputs: &[SeqClass],
    output: &SeqClass,
    families: &[SeqFamily],
    k_max: usize,
    cfg: &NormConfig,
) -> Result<ProbeTrace> {
    if families.len() != a.arity() {
        return Err(Error::ShapeMismatch(format!(
            "{} families for arity {}",
            families.len(),
            a.arity()
        )));
    }
    let inputs: Vec<&dyn SequenceNorm> = inputs.iter().map(|c| c as &dyn SequenceNorm).collect();
    let mut points = Vec::new();
    for k in doubling_schedule(k_max) {
        let witnesses = families
            .iter()
            .zip(a.domains())
            .map(|(f, &s)| f.instantiate(s, k))
            .collect::<Result<Vec<_>>>()?;
        points.push(ratio_parts(a, &inputs, output, &witnesses, k, cfg)?);
    }
    Ok(classify_probe(points))
}

fn classify_probe(points: Vec<RatioParts>) -> ProbeTrace {
    let strictly_increasing = points.windows(2).all(|w| w[1].rho > w[0].rho);
    let growth = match (points.first(), points.last()) {
        (Some(f), Some(l)) if f.rho > 0.0 => l.rho / f.rho,
        _ => f64::NAN,
    };
    let verdict = if points.len() > 1 && strictly_increasing && growth > DIVERGENCE_RATIO {
        ProbeVerdict::Diverging
    } else {
        ProbeVerdict::NotDiverging
    };
    ProbeTrace {
        points,
        growth,
        strictly_increasing,
        verdict,
    }
}
