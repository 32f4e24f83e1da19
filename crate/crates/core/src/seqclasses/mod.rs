//! Sequence classes evaluated on finite sequences.
//!
//! Every class is a rule `E ↦ X(E)`; here only finite sections are ever
//! evaluated, so a class is represented by the norm it induces on finite
//! lists of vectors. The derived constructions are wrappers: `Fd` takes the
//! supremum over prefixes, `U` restricts to sequences with null tails (its
//! finite-section norm is the inner one; the restriction only shows up in
//! tail traces) and `Dual` pairs against the unit ball of the inner class on
//! the dual space.

mod cohen;
mod family;
mod rad;
mod weak;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::NormConfig;
use crate::spaces::{lp_norm, lp_norm_iter, Exponent, Space, Vector};

pub use cohen::{cohen_norm, cohen_norm_with, dual_norm, dual_norm_with, DualEstimate};
pub use family::{u_tail_trace, SeqFamily, TailTrace, TailVerdict};
pub use rad::{rad_norm, rad_norm_capped};
pub use weak::{weak_norm, weak_norm_with, WeakBackend, WeakNorm};

pub use crate::propcheck::{fin_leq_falsify, jointly_dominated_check};

/// An ordered finite list of vectors of one space. The empty list is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSeq {
    space: Space,
    items: Vec<Vec<f64>>,
}

impl FiniteSeq {
    pub fn new(space: Space, items: Vec<Vec<f64>>) -> Result<Self> {
        for item in &items {
            if item.len() != space.dim() {
                return Err(Error::DimensionMismatch {
                    dim: space.dim(),
                    found: item.len(),
                });
            }
        }
        Ok(FiniteSeq { space, items })
    }

    pub fn empty(space: Space) -> Self {
        FiniteSeq {
            space,
            items: Vec::new(),
        }
    }

    pub fn from_vectors(space: Space, vectors: &[Vector]) -> Result<Self> {
        let mut s = FiniteSeq::empty(space);
        for v in vectors {
            s.push_vector(v)?;
        }
        Ok(s)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Vec<f64>] {
        &self.items
    }

    pub fn item(&self, j: usize) -> Vector {
        Vector::new(self.space, self.items[j].clone()).expect("items match the space")
    }

    pub fn push(&mut self, coords: Vec<f64>) -> Result<()> {
        if coords.len() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                dim: self.space.dim(),
                found: coords.len(),
            });
        }
        self.items.push(coords);
        Ok(())
    }

    pub fn push_vector(&mut self, v: &Vector) -> Result<()> {
        self.space.ensure_eq(&v.space())?;
        self.items.push(v.coords().to_vec());
        Ok(())
    }

    /// `(x_1, …, x_m)`; saturates at the full length.
    pub fn prefix(&self, m: usize) -> FiniteSeq {
        FiniteSeq {
            space: self.space,
            items: self.items[..m.min(self.len())].to_vec(),
        }
    }

    /// `(x_n, …, x_k)` with `n` one-based.
    pub fn tail_from(&self, n: usize) -> FiniteSeq {
        let start = n.saturating_sub(1).min(self.len());
        FiniteSeq {
            space: self.space,
            items: self.items[start..].to_vec(),
        }
    }

    /// The sequence with the item at zero-based `k` removed.
    pub fn without(&self, k: usize) -> FiniteSeq {
        let mut items = self.items.clone();
        if k < items.len() {
            items.remove(k);
        }
        FiniteSeq {
            space: self.space,
            items,
        }
    }

    /// The sequence with a zero vector inserted before zero-based `pos`.
    pub fn with_zero_at(&self, pos: usize) -> FiniteSeq {
        let mut items = self.items.clone();
        items.insert(pos.min(items.len()), vec![0.0; self.space.dim()]);
        FiniteSeq {
            space: self.space,
            items,
        }
    }

    /// Order-preserving selection by zero-based indices.
    pub fn select(&self, indices: &[usize]) -> FiniteSeq {
        FiniteSeq {
            space: self.space,
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// `(α_j x_j)_j`.
    pub fn scaled(&self, alphas: &[f64]) -> Result<FiniteSeq> {
        if alphas.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} scalars for {} items",
                alphas.len(),
                self.len()
            )));
        }
        let items = self
            .items
            .iter()
            .zip(alphas)
            .map(|(x, a)| x.iter().map(|c| a * c).collect())
            .collect();
        Ok(FiniteSeq {
            space: self.space,
            items,
        })
    }

    /// `(T x_j)_j` for a row-major matrix `T: self.space → target`.
    pub fn mapped(&self, matrix: &[Vec<f64>], target: Space) -> Result<FiniteSeq> {
        if matrix.len() != target.dim() || matrix.iter().any(|row| row.len() != self.space.dim()) {
            return Err(Error::ShapeMismatch(
                "linear map does not match the spaces".into(),
            ));
        }
        let items = self
            .items
            .iter()
            .map(|x| {
                matrix
                    .iter()
                    .map(|row| crate::spaces::dot(row, x))
                    .collect()
            })
            .collect();
        Ok(FiniteSeq {
            space: target,
            items,
        })
    }

    /// The same coordinates read in another space of equal dimension.
    pub fn reinterpret(&self, space: Space) -> Result<FiniteSeq> {
        FiniteSeq::new(space, self.items.clone())
    }

    pub fn item_norms(&self) -> Vec<f64> {
        self.items
            .iter()
            .map(|x| lp_norm(x, self.space.exponent()))
            .collect()
    }

    /// `max_j ‖x_j‖`, the `ℓ_∞(E)` norm of the section.
    pub fn sup_norm(&self) -> f64 {
        self.item_norms().into_iter().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.items.iter().all(|x| x.iter().all(|&c| c == 0.0))
    }
}

/// Properties a class is known to have. Built-in flags record what is known
/// about the infinite-sequence class; wrappers derive theirs from the inner
/// class. The flags are independent: none is inferred from another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlags {
    pub finitely_determined: bool,
    pub finitely_shrinking: bool,
    pub finitely_zero_invariant: bool,
    pub subsequence_invariant: bool,
    pub spherically_complete: bool,
}

impl ClassFlags {
    const ALL: ClassFlags = ClassFlags {
        finitely_determined: true,
        finitely_shrinking: true,
        finitely_zero_invariant: true,
        subsequence_invariant: true,
        spherically_complete: true,
    };
}

/// A sequence class, as a tagged descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SeqClass {
    /// `ℓ_p(E)`, absolutely `p`-summable.
    LpAbs(Exponent),
    /// `ℓ_∞(E)`; on finite sections also `c_0(E)` and `c(E)`.
    LInfSup,
    /// `ℓ_p^w(E)`, weakly `p`-summable.
    LpWeak(Exponent),
    /// Almost unconditionally summable (Rademacher average).
    Rad,
    /// `ℓ_p⟨E⟩`, Cohen strongly `p`-summable.
    Cohen(Exponent),
    Fd(Box<SeqClass>),
    U(Box<SeqClass>),
    Dual(Box<SeqClass>),
}

impl SeqClass {
    pub fn fd(inner: SeqClass) -> Self {
        SeqClass::Fd(Box::new(inner))
    }

    pub fn u(inner: SeqClass) -> Self {
        SeqClass::U(Box::new(inner))
    }

    pub fn dual(inner: SeqClass) -> Self {
        SeqClass::Dual(Box::new(inner))
    }

    pub fn flags(&self) -> ClassFlags {
        use SeqClass::*;
        match self {
            LpAbs(_) | LInfSup | LpWeak(_) | Cohen(_) => ClassFlags::ALL,
            // RAD is not listed among the subsequence invariant classes.
            Rad => ClassFlags {
                subsequence_invariant: false,
                ..ClassFlags::ALL
            },
            Fd(inner) => {
                let f = inner.flags();
                ClassFlags {
                    finitely_determined: true,
                    finitely_shrinking: f.finitely_shrinking,
                    finitely_zero_invariant: f.finitely_zero_invariant,
                    subsequence_invariant: false,
                    spherically_complete: false,
                }
            }
            U(inner) => {
                let f = inner.flags();
                ClassFlags {
                    finitely_determined: false,
                    finitely_shrinking: f.finitely_shrinking,
                    finitely_zero_invariant: f.finitely_zero_invariant,
                    subsequence_invariant: false,
                    spherically_complete: f.spherically_complete && f.finitely_shrinking,
                }
            }
            Dual(inner) => ClassFlags {
                finitely_determined: inner.flags().spherically_complete,
                finitely_shrinking: false,
                finitely_zero_invariant: false,
                subsequence_invariant: false,
                spherically_complete: inner.flags().spherically_complete,
            },
        }
    }

    /// Constant `C` in `‖(α_j x_j)‖ ≤ C ‖α‖_∞ ‖(x_j)‖` (real scalars).
    pub fn contraction_constant(&self) -> f64 {
        match self {
            SeqClass::Fd(inner) | SeqClass::U(inner) | SeqClass::Dual(inner) => {
                inner.contraction_constant()
            }
            _ => 1.0,
        }
    }

    /// The scalar component `X(𝕂)` as a readable label.
    pub fn scalar_component(&self) -> String {
        use SeqClass::*;
        match self {
            LpAbs(p) | LpWeak(p) | Cohen(p) => format!("l_{p}"),
            LInfSup => "l_inf".into(),
            Rad => "l_2".into(),
            Fd(inner) => format!("fd({})", inner.scalar_component()),
            U(inner) => format!("u({})", inner.scalar_component()),
            Dual(inner) => format!("dual({})", inner.scalar_component()),
        }
    }

    /// Whether evaluation on `space` goes through an exact backend.
    pub fn is_exact_on(&self, space: &Space) -> bool {
        use SeqClass::*;
        match self {
            LpAbs(_) | LInfSup | Rad => true,
            LpWeak(p) => weak::auto_backend(space, *p) != WeakBackend::Ascent,
            Cohen(_) | Dual(_) => false,
            Fd(inner) | U(inner) => inner.is_exact_on(space),
        }
    }

    pub fn norm(&self, s: &FiniteSeq, cfg: &NormConfig) -> Result<f64> {
        Ok(self.evaluate(s, cfg)?.value)
    }

    /// Norm with the backend used and, where available, a certificate.
    pub fn evaluate(&self, s: &FiniteSeq, cfg: &NormConfig) -> Result<NormReport> {
        use SeqClass::*;
        let exact = |value: f64, backend: &str| NormReport {
            value,
            backend: backend.to_string(),
            exact: true,
            certificate: None,
        };
        if s.is_empty() {
            return Ok(exact(0.0, "empty"));
        }
        match self {
            LpAbs(p) => Ok(exact(
                lp_norm_iter(s.item_norms().into_iter(), *p),
                "closed-form",
            )),
            LInfSup => Ok(exact(s.sup_norm(), "closed-form")),
            LpWeak(p) => {
                let w = weak_norm_with(s, *p, cfg, WeakBackend::Auto)?;
                Ok(NormReport {
                    value: w.value,
                    backend: w.backend.to_string(),
                    exact: w.backend != WeakBackend::Ascent,
                    certificate: Some(Certificate::Functional(w.certificate.coords().to_vec())),
                })
            }
            Rad => Ok(exact(
                rad_norm_capped(s, cfg.enumeration_cap)?,
                "sign-enumeration",
            )),
            Cohen(p) => {
                let e = cohen_norm_with(s, *p, cfg)?;
                Ok(NormReport {
                    value: e.value,
                    backend: "cutting-plane".into(),
                    exact: false,
                    certificate: Some(Certificate::Tuple(e.witness.items().to_vec())),
                })
            }
            Fd(inner) => {
                let (value, m) = fd_norm_with_index(inner, s, cfg)?;
                let r = inner.evaluate(&s.prefix(m), cfg)?;
                Ok(NormReport {
                    value,
                    backend: format!("prefix-max[{m}]/{}", r.backend),
                    ..r
                })
            }
            U(inner) => inner.evaluate(s, cfg),
            Dual(inner) => {
                let e = dual_norm_with(inner, s, cfg)?;
                Ok(NormReport {
                    value: e.value,
                    backend: "ratio-ascent".into(),
                    exact: false,
                    certificate: Some(Certificate::Tuple(e.witness.items().to_vec())),
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// A single norming functional.
    Functional(Vec<f64>),
    /// A tuple of functionals, one per item.
    Tuple(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub backend: String,
    pub exact: bool,
    pub certificate: Option<Certificate>,
}

/// `‖(x_j)_{j=1}^k‖_{X(E)}` with default settings.
pub fn class_norm(class: &SeqClass, s: &FiniteSeq) -> Result<f64> {
    class.norm(s, &NormConfig::default())
}

/// `max_{1 ≤ m ≤ k} ‖(x_j)_{j=1}^m‖_X`; zero on the empty sequence.
pub fn fd_norm(class: &SeqClass, s: &FiniteSeq) -> Result<f64> {
    fd_norm_with(class, s, &NormConfig::default())
}

pub fn fd_norm_with(class: &SeqClass, s: &FiniteSeq, cfg: &NormConfig) -> Result<f64> {
    Ok(fd_norm_with_index(class, s, cfg)?.0)
}

/// Maximum prefix norm and the (first) prefix length attaining it.
fn fd_norm_with_index(class: &SeqClass, s: &FiniteSeq, cfg: &NormConfig) -> Result<(f64, usize)> {
    let mut best = (0.0, 0);
    for m in 1..=s.len() {
        let v = class.norm(&s.prefix(m), cfg)?;
        if v > best.0 {
            best = (v, m);
        }
    }
    Ok(best)
}

impl fmt::Display for SeqClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SeqClass::*;
        match self {
            LpAbs(p) => write!(f, "lp:{p}"),
            LInfSup => write!(f, "linf"),
            LpWeak(p) => write!(f, "lpw:{p}"),
            Rad => write!(f, "rad"),
            Cohen(p) => write!(f, "cohen:{p}"),
            Fd(inner) => write!(f, "fd({inner})"),
            U(inner) => write!(f, "u({inner})"),
            Dual(inner) => write!(f, "dual({inner})"),
        }
    }
}

impl FromStr for SeqClass {
    type Err = Error;

    /// Grammar: `lp:<p> | lpw:<p> | linf | rad | cohen:<p> | fd(<spec>) | u(<spec>) | dual(<spec>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        for (name, ctor) in [
            ("fd", SeqClass::fd as fn(SeqClass) -> SeqClass),
            ("u", SeqClass::u),
            ("dual", SeqClass::dual),
        ] {
            if let Some(rest) = s
                .strip_prefix(name)
                .and_then(|r| r.trim_start().strip_prefix('('))
            {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in `{s}`")))?;
                return Ok(ctor(inner.parse()?));
            }
        }
        match s.split_once(':') {
            Some(("lp", p)) => Ok(SeqClass::LpAbs(p.parse()?)),
            Some(("lpw", p)) => Ok(SeqClass::LpWeak(p.parse()?)),
            Some(("cohen", p)) => Ok(SeqClass::Cohen(p.parse()?)),
            None if s == "linf" => Ok(SeqClass::LInfSup),
            None if s == "rad" => Ok(SeqClass::Rad),
            _ => Err(Error::Parse(format!("unknown class spec `{s}`"))),
        }
    }
}

impl Serialize for SeqClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SeqClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Anything that assigns a norm to finite sequences. The property checkers
/// work against this trait so that deliberately broken classes can be fed to
/// them.
pub trait SequenceNorm: Send + Sync {
    fn label(&self) -> String;
    fn norm(&self, s: &FiniteSeq, cfg: &NormConfig) -> Result<f64>;
    fn flags(&self) -> ClassFlags;
    fn contraction_constant(&self) -> f64;
    fn is_exact_on(&self, space: &Space) -> bool;
}

impl SequenceNorm for SeqClass {
    fn label(&self) -> String {
        self.to_string()
    }

    fn norm(&self, s: &FiniteSeq, cfg: &NormConfig) -> Result<f64> {
        SeqClass::norm(self, s, cfg)
    }

    fn flags(&self) -> ClassFlags {
        SeqClass::flags(self)
    }

    fn contraction_constant(&self) -> f64 {
        SeqClass::contraction_constant(self)
    }

    fn is_exact_on(&self, space: &Space) -> bool {
        SeqClass::is_exact_on(self, space)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn sp(s: &str) -> Space {
        s.parse().unwrap()
    }

    fn seq(space: &str, items: &[&[f64]]) -> FiniteSeq {
        FiniteSeq::new(sp(space), items.iter().map(|x| x.to_vec()).collect()).unwrap()
    }

    #[test]
    fn class_norm_examples() {
        let e = seq("lp:2:2", &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_abs_diff_eq!(
            class_norm(&"lp:2".parse().unwrap(), &e).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-15
        );
        let s = seq("lp:2:2", &[&[3.0, 4.0], &[1.0, 0.0]]);
        assert_eq!(class_norm(&SeqClass::LInfSup, &s).unwrap(), 5.0);
        let unit = seq("lp:2:1", &[&[1.0]]);
        assert_eq!(
            class_norm(&SeqClass::LpAbs(Exponent::ONE), &unit).unwrap(),
            1.0
        );
    }

    #[test]
    fn empty_sequence_has_norm_zero_everywhere() {
        let empty = FiniteSeq::empty(sp("lp:3:2"));
        for c in [
            "lp:2",
            "linf",
            "lpw:2",
            "rad",
            "cohen:2",
            "fd(lpw:3)",
            "u(rad)",
            "dual(lp:2)",
        ] {
            assert_eq!(class_norm(&c.parse().unwrap(), &empty).unwrap(), 0.0, "{c}");
        }
    }

    #[test]
    fn singletons_have_the_vector_norm() {
        let s = seq("lp:3:3", &[&[1.0, -2.0, 0.5]]);
        let expected = s.item(0).norm();
        let cfg = NormConfig::default().with_restarts(8);
        for c in [
            "lp:1",
            "lp:3/2",
            "linf",
            "lpw:2",
            "lpw:1",
            "rad",
            "cohen:2",
            "fd(lpw:2)",
            "u(lp:2)",
        ] {
            let v = c.parse::<SeqClass>().unwrap().norm(&s, &cfg).unwrap();
            assert!(
                (v - expected).abs() <= 1e-6 * expected,
                "{c}: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn fd_norm_examples() {
        let s = seq("lp:2:2", &[&[1.0, 2.0], &[-1.0, 0.5], &[0.0, 3.0]]);
        let l1 = SeqClass::LpAbs(Exponent::ONE);
        assert_abs_diff_eq!(
            fd_norm(&l1, &s).unwrap(),
            class_norm(&l1, &s).unwrap(),
            epsilon = 1e-12
        );
        let w2 = SeqClass::LpWeak(Exponent::TWO);
        assert_abs_diff_eq!(
            fd_norm(&w2, &s).unwrap(),
            weak_norm(&s, Exponent::TWO).unwrap(),
            epsilon = 1e-12
        );
        assert_eq!(fd_norm(&w2, &FiniteSeq::empty(sp("lp:2:2"))).unwrap(), 0.0);
    }

    #[test]
    fn grammar() {
        for text in [
            "lp:2",
            "lpw:4/3",
            "linf",
            "rad",
            "cohen:3",
            "fd(lpw:2)",
            "dual(lpw:inf)",
            "u(fd(rad))",
        ] {
            assert_eq!(text.parse::<SeqClass>().unwrap().to_string(), text);
        }
        assert_eq!(
            "fd( lp:1.5 )".parse::<SeqClass>().unwrap(),
            SeqClass::fd(SeqClass::LpAbs("3/2".parse().unwrap()))
        );
        for bad in ["lq:2", "fd(lp:2", "lp:0.5", "", "rad:2"] {
            assert!(bad.parse::<SeqClass>().is_err(), "{bad}");
        }
    }

    #[test]
    fn wrapper_flags() {
        let fd = SeqClass::fd(SeqClass::Rad);
        assert!(
            fd.flags().finitely_determined
                && fd.flags().finitely_shrinking
                && fd.flags().finitely_zero_invariant
        );
        assert!(
            !SeqClass::u(SeqClass::LpWeak(Exponent::TWO))
                .flags()
                .finitely_determined
        );
        assert!(!SeqClass::Rad.flags().subsequence_invariant);
        assert_eq!(SeqClass::Rad.scalar_component(), "l_2");
    }

    #[test]
    fn sequence_edits() {
        let s = seq("lp:2:1", &[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(s.without(1).items(), &[vec![1.0], vec![3.0]]);
        assert_eq!(s.with_zero_at(0).items()[0], vec![0.0]);
        assert_eq!(s.with_zero_at(9).len(), 4);
        assert_eq!(s.tail_from(3).items(), &[vec![3.0]]);
        assert_eq!(s.select(&[0, 2]).len(), 2);
        assert!(s.scaled(&[1.0]).is_err());
        assert!(FiniteSeq::new(sp("lp:2:2"), vec![vec![1.0]]).is_err());
    }

    fn exponent_strategy() -> impl Strategy<Value = Exponent> {
        prop_oneof![
            Just(Exponent::ONE),
            Just(Exponent::TWO),
            (1u64..40, 1u64..10).prop_filter_map("p >= 1", |(n, d)| Exponent::ratio(n, d).ok()),
            Just(Exponent::Infinity)
        ]
    }

    fn class_strategy() -> impl Strategy<Value = SeqClass> {
        let leaf = prop_oneof![
            exponent_strategy().prop_map(SeqClass::LpAbs),
            exponent_strategy().prop_map(SeqClass::LpWeak),
            exponent_strategy().prop_map(SeqClass::Cohen),
            Just(SeqClass::LInfSup),
            Just(SeqClass::Rad),
        ];
        leaf.prop_recursive(3, 8, 1, |inner| {
            prop_oneof![
                inner.clone().prop_map(SeqClass::fd),
                inner.clone().prop_map(SeqClass::u),
                inner.prop_map(SeqClass::dual)
            ]
        })
    }

    proptest! {
        #[test]
        fn grammar_round_trips(class in class_strategy()) {
            prop_assert_eq!(class.to_string().parse::<SeqClass>().unwrap(), class);
        }
    }
}
