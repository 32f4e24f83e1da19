//! Bounded random falsification of structural properties of sequence classes.
//!
//! Each checker draws finite sequences (and whatever else the property
//! quantifies over) from a seeded sampler and compares two norm values. A
//! report either carries the first counterexample, by sample index, or states
//! that none was found; it never claims the property holds.
//!
//! Tolerances default to `1e-12` when every norm involved is computed by an
//! exact backend and `1e-6` otherwise, relative to `max(1, |rhs|)`. Optimized
//! backends return lower bounds, so a violation is only flagged when the gap
//! exceeds that tolerance.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{gaussian_vec, restart_rng, NormConfig};
use crate::seqclasses::{ClassFlags, FiniteSeq, SeqClass, SequenceNorm};
use crate::spaces::{Exponent, Space};

pub const EXACT_TOL: f64 = 1e-12;
pub const OPTIMIZED_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub dims: Vec<usize>,
    pub exponents: Vec<Exponent>,
    pub min_len: usize,
    pub max_len: usize,
    pub samples: usize,
    pub seed: u64,
    /// Overrides the per-backend default tolerance.
    pub tolerance: Option<f64>,
    pub norm: NormConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            dims: vec![1, 2, 3],
            exponents: ["1", "3/2", "2", "3", "inf"]
                .iter()
                .map(|p| p.parse().expect("valid exponent"))
                .collect(),
            min_len: 1,
            max_len: 6,
            samples: 1000,
            seed: 0,
            tolerance: None,
            norm: NormConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.norm.seed = seed;
        self
    }

    fn rng(&self, sample: usize) -> ChaCha8Rng {
        restart_rng(self.seed, sample)
    }

    fn space(&self, rng: &mut ChaCha8Rng) -> Space {
        let d = *self.dims.choose(rng).expect("nonempty dims");
        let p = *self.exponents.choose(rng).expect("nonempty exponents");
        Space::new(d, p).expect("sampler dimensions are positive")
    }

    fn length(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.min_len..=self.max_len.max(self.min_len))
    }

    /// Gaussian items, occasionally zero or a signed repeat of the previous one.
    fn items(&self, rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
        let mut items: Vec<Vec<f64>> = Vec::with_capacity(k);
        for _ in 0..k {
            let r: f64 = rng.gen();
            let item = if r < 0.08 {
                vec![0.0; d]
            } else if r < 0.16 && !items.is_empty() {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                items
                    .last()
                    .expect("nonempty")
                    .iter()
                    .map(|c| s * c)
                    .collect()
            } else {
                gaussian_vec(rng, d)
            };
            items.push(item);
        }
        items
    }

    fn sequence(&self, rng: &mut ChaCha8Rng) -> FiniteSeq {
        let space = self.space(rng);
        let k = self.length(rng);
        FiniteSeq::new(space, self.items(rng, space.dim(), k)).expect("dimensions match")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoCounterexample,
    Counterexample,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NoCounterexample => "no-counterexample",
            Verdict::Counterexample => "counterexample",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    Le,
    /// `lhs = rhs`
    Eq,
}

/// Everything a property quantifies over for one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Sequence {
        space: Space,
        items: Vec<Vec<f64>>,
    },
    /// The scalar sequence `e_position` (one-based).
    UnitScalar {
        position: usize,
    },
    Drop {
        space: Space,
        items: Vec<Vec<f64>>,
        position: usize,
    },
    ZeroInsert {
        space: Space,
        items: Vec<Vec<f64>>,
        position: usize,
    },
    Selection {
        space: Space,
        items: Vec<Vec<f64>>,
        indices: Vec<usize>,
    },
    Scaling {
        space: Space,
        items: Vec<Vec<f64>>,
        alphas: Vec<f64>,
    },
    /// `T: E → E` as row-major rows.
    Map {
        space: Space,
        items: Vec<Vec<f64>>,
        matrix: Vec<Vec<f64>>,
    },
    Scalars {
        sequences: Vec<Vec<f64>>,
    },
}

impl Witness {
    fn seq(space: Space, items: &[Vec<f64>]) -> Result<FiniteSeq> {
        FiniteSeq::new(space, items.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    /// Whether both sides come from exact backends.
    pub exact: bool,
}

impl Outcome {
    fn tolerance(&self, cfg: &SamplerConfig) -> f64 {
        cfg.tolerance
            .unwrap_or(if self.exact { EXACT_TOL } else { OPTIMIZED_TOL })
    }

    /// Amount by which the relation fails, after the tolerance allowance.
    pub fn excess(&self, tol: f64) -> f64 {
        let gap = match self.relation {
            Relation::Le => self.lhs - self.rhs,
            Relation::Eq => (self.lhs - self.rhs).abs(),
        };
        if gap.is_nan() {
            return f64::INFINITY;
        }
        gap - tol * self.rhs.abs().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub sample: usize,
    pub witness: Witness,
    /// For multi-class checks, the index of the offending class.
    pub class_index: Option<usize>,
    pub outcome: Outcome,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub classes: Vec<String>,
    pub verdict: Verdict,
    pub samples_tested: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub counterexample: Option<Counterexample>,
}

impl PropertyReport {
    pub fn found(&self) -> bool {
        self.verdict == Verdict::Counterexample
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn summary(&self) -> String {
        let head = format!(
            "[{}] {} on {}: {} samples, seed {}",
            self.verdict,
            self.property,
            self.classes.join(", "),
            self.samples_tested,
            self.seed
        );
        match &self.counterexample {
            None => head,
            Some(c) => {
                let rel = if c.outcome.relation == Relation::Le {
                    "<="
                } else {
                    "=="
                };
                format!(
                    "{head}; sample {} violates lhs {rel} rhs: lhs = {:.12e}, rhs = {:.12e} (tol {:e})",
                    c.sample, c.outcome.lhs, c.outcome.rhs, c.tolerance
                )
            }
        }
    }
}

const CHUNK: usize = 128;

/// Evaluates samples in parallel chunks and keeps the lowest failing index,
/// so the report does not depend on scheduling.
/// With `indexed`, the position of the failing outcome is recorded as the class index.
fn falsify<D, E>(
    property: &str,
    classes: Vec<String>,
    indexed: bool,
    cfg: &SamplerConfig,
    draw: D,
    eval: E,
) -> Result<PropertyReport>
where
    D: Fn(&mut ChaCha8Rng) -> Witness + Sync,
    E: Fn(&Witness) -> Result<Vec<Outcome>> + Sync,
{
    let mut start = 0;
    while start < cfg.samples {
        let end = (start + CHUNK).min(cfg.samples);
        let results: Vec<Result<Option<Counterexample>>> = (start..end)
            .into_par_iter()
            .map(|sample| {
                let witness = draw(&mut cfg.rng(sample));
                let outcomes = eval(&witness)?;
                Ok(outcomes.into_iter().enumerate().find_map(|(i, outcome)| {
                    let tolerance = outcome.tolerance(cfg);
                    (outcome.excess(tolerance) > 0.0).then(|| Counterexample {
                        sample,
                        witness: witness.clone(),
                        class_index: indexed.then_some(i),
                        outcome,
                        tolerance,
                    })
                }))
            })
            .collect();
        for r in results {
            if let Some(c) = r? {
                return Ok(PropertyReport {
                    property: property.to_string(),
                    classes,
                    verdict: Verdict::Counterexample,
                    samples_tested: c.sample + 1,
                    seed: cfg.seed,
                    tolerance: cfg.tolerance,
                    counterexample: Some(c),
                });
            }
        }
        start = end;
    }
    Ok(PropertyReport {
        property: property.to_string(),
        classes,
        verdict: Verdict::NoCounterexample,
        samples_tested: cfg.samples,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        counterexample: None,
    })
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown property `{s}`")))
    }
}

/// The single-class properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Axioms,
    FinitelyShrinking,
    ZeroInvariant,
    SubsequenceInvariant,
    Contraction,
    SphericalCompleteness,
    LinearStability,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Axioms,
        Property::FinitelyShrinking,
        Property::ZeroInvariant,
        Property::SubsequenceInvariant,
        Property::Contraction,
        Property::SphericalCompleteness,
        Property::LinearStability,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Property::Axioms => "axioms",
            Property::FinitelyShrinking => "finitely-shrinking",
            Property::ZeroInvariant => "zero-invariant",
            Property::SubsequenceInvariant => "subsequence-invariant",
            Property::Contraction => "contraction",
            Property::SphericalCompleteness => "spherical-completeness",
            Property::LinearStability => "linear-stability",
        }
    }

    /// The deliberately broken class this checker must catch.
    pub fn mutant(&self, genuine: SeqClass) -> Mutant {
        let inner = Box::new(genuine);
        match self {
            Property::Axioms => Mutant::Scaled { inner, factor: 0.5 },
            Property::FinitelyShrinking => Mutant::DropBonus { inner },
            Property::ZeroInvariant => Mutant::PositionWeighted,
            Property::SubsequenceInvariant => Mutant::FrontWeighted,
            Property::Contraction => Mutant::WithConstant {
                inner,
                constant: 0.5,
            },
            Property::SphericalCompleteness => Mutant::SignSkewed { inner },
            Property::LinearStability => Mutant::Reweighted {
                inner,
                factor: 10.0,
            },
        }
    }

    fn draw(&self, cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Witness {
        let s = cfg.sequence(rng);
        let (space, items, k) = (s.space(), s.items().to_vec(), s.len());
        match self {
            Property::Axioms => {
                if rng.gen_range(0..4) == 0 {
                    Witness::UnitScalar {
                        position: rng.gen_range(1..=cfg.max_len.max(1)),
                    }
                } else {
                    Witness::Sequence { space, items }
                }
            }
            Property::FinitelyShrinking => Witness::Drop {
                space,
                items,
                position: rng.gen_range(0..k),
            },
            Property::ZeroInvariant => Witness::ZeroInsert {
                space,
                items,
                position: rng.gen_range(0..=k),
            },
            Property::SubsequenceInvariant => {
                let mut indices: Vec<usize> = (0..k).filter(|_| rng.gen::<bool>()).collect();
                if indices.is_empty() {
                    indices.push(rng.gen_range(0..k));
                }
                Witness::Selection {
                    space,
                    items,
                    indices,
                }
            }
            Property::Contraction => {
                let signs_only = rng.gen::<bool>();
                let alphas = (0..k)
                    .map(|_| {
                        if signs_only {
                            if rng.gen::<bool>() {
                                1.0
                            } else {
                                -1.0
                            }
                        } else {
                            rng.gen_range(-1.0..=1.0)
                        }
                    })
                    .collect();
                Witness::Scaling {
                    space,
                    items,
                    alphas,
                }
            }
            Property::SphericalCompleteness => {
                let alphas = (0..k)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                Witness::Scaling {
                    space,
                    items,
                    alphas,
                }
            }
            Property::LinearStability => {
                let d = space.dim();
                let matrix = match rng.gen_range(0..4) {
                    0 => (0..d)
                        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                        .collect(),
                    1 => (0..d)
                        .map(|i| {
                            let a = rng.gen_range(-1.0..=1.0);
                            (0..d).map(|j| if i == j { a } else { 0.0 }).collect()
                        })
                        .collect(),
                    2 => {
                        let mut perm: Vec<usize> = (0..d).collect();
                        perm.shuffle(rng);
                        perm.iter()
                            .map(|&p| (0..d).map(|j| if j == p { 1.0 } else { 0.0 }).collect())
                            .collect()
                    }
                    _ => (0..d).map(|_| gaussian_vec(rng, d)).collect(),
                };
                Witness::Map {
                    space,
                    items,
                    matrix,
                }
            }
        }
    }

    /// The two sides of the property at one witness.
    pub fn evaluate(
        &self,
        class: &dyn SequenceNorm,
        w: &Witness,
        cfg: &NormConfig,
    ) -> Result<Outcome> {
        let mismatch = || Error::Parse(format!("witness does not fit the {} check", self.name()));
        let norm = |s: &FiniteSeq| class.norm(s, cfg);
        match (self, w) {
            (Property::Axioms, Witness::Sequence { space, items }) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: s.sup_norm(),
                    rhs: norm(&s)?,
                    relation: Relation::Le,
                    exact: class.is_exact_on(space),
                })
            }
            (Property::Axioms, Witness::UnitScalar { position }) => {
                let k = Space::scalars();
                let mut items = vec![vec![0.0]; *position];
                items[position - 1][0] = 1.0;
                let s = FiniteSeq::new(k, items)?;
                Ok(Outcome {
                    lhs: norm(&s)?,
                    rhs: 1.0,
                    relation: Relation::Eq,
                    exact: class.is_exact_on(&k),
                })
            }
            (
                Property::FinitelyShrinking,
                Witness::Drop {
                    space,
                    items,
                    position,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: norm(&s.without(*position))?,
                    rhs: norm(&s)?,
                    relation: Relation::Le,
                    exact: class.is_exact_on(space),
                })
            }
            (
                Property::ZeroInvariant,
                Witness::ZeroInsert {
                    space,
                    items,
                    position,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: norm(&s.with_zero_at(*position))?,
                    rhs: norm(&s)?,
                    relation: Relation::Eq,
                    exact: class.is_exact_on(space),
                })
            }
            (
                Property::SubsequenceInvariant,
                Witness::Selection {
                    space,
                    items,
                    indices,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: norm(&s.select(indices))?,
                    rhs: norm(&s)?,
                    relation: Relation::Le,
                    exact: class.is_exact_on(space),
                })
            }
            (
                Property::Contraction,
                Witness::Scaling {
                    space,
                    items,
                    alphas,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                let sup = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
                Ok(Outcome {
                    lhs: norm(&s.scaled(alphas)?)?,
                    rhs: class.contraction_constant() * sup * norm(&s)?,
                    relation: Relation::Le,
                    exact: class.is_exact_on(space),
                })
            }
            (
                Property::SphericalCompleteness,
                Witness::Scaling {
                    space,
                    items,
                    alphas,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: norm(&s.scaled(alphas)?)?,
                    rhs: norm(&s)?,
                    relation: Relation::Eq,
                    exact: class.is_exact_on(space),
                })
            }
            (
                Property::LinearStability,
                Witness::Map {
                    space,
                    items,
                    matrix,
                },
            ) => {
                let s = Witness::seq(*space, items)?;
                Ok(Outcome {
                    lhs: norm(&s.mapped(matrix, *space)?)?,
                    rhs: operator_norm_bound(matrix, space.exponent()) * norm(&s)?,
                    relation: Relation::Le,
                    exact: class.is_exact_on(space),
                })
            }
            _ => Err(mismatch()),
        }
    }

    pub fn check(&self, class: &dyn SequenceNorm, cfg: &SamplerConfig) -> Result<PropertyReport> {
        falsify(
            self.name(),
            vec![class.label()],
            false,
            cfg,
            |rng| self.draw(cfg, rng),
            |w| Ok(vec![self.evaluate(class, w, &cfg.norm)?]),
        )
    }

    /// Whether a stored counterexample still violates the property.
    pub fn replay(
        &self,
        class: &dyn SequenceNorm,
        c: &Counterexample,
        cfg: &NormConfig,
    ) -> Result<bool> {
        Ok(self.evaluate(class, &c.witness, cfg)?.excess(c.tolerance) > 0.0)
    }
}

/// `‖T: ℓ_p^d → ℓ_p^d‖`, exactly for `p ∈ {1, 2, ∞}` and otherwise the
/// Riesz–Thorin bound `‖T‖_{1→1}^{1/p} ‖T‖_{∞→∞}^{1-1/p}`, which can only
/// overestimate.
pub fn operator_norm_bound(matrix: &[Vec<f64>], p: Exponent) -> f64 {
    let col_sum = (0..matrix.first().map_or(0, Vec::len))
        .map(|j| matrix.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let row_sum = matrix
        .iter()
        .map(|row| row.iter().map(|c| c.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    match p {
        Exponent::Infinity => row_sum,
        _ if p.is_one() => col_sum,
        _ if p.is_two() => {
            let m = DMatrix::from_fn(matrix.len(), matrix[0].len(), |i, j| matrix[i][j]);
            m.singular_values().iter().copied().fold(0.0, f64::max)
        }
        _ => {
            let t = 1.0 / p.value();
            col_sum.powf(t) * row_sum.powf(1.0 - t)
        }
    }
}

pub fn check_seqclass_axioms(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::Axioms.check(class, cfg)
}

pub fn check_finitely_shrinking(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::FinitelyShrinking.check(class, cfg)
}

pub fn check_zero_invariant(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::ZeroInvariant.check(class, cfg)
}

pub fn check_subsequence_invariant(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::SubsequenceInvariant.check(class, cfg)
}

pub fn check_contraction(class: &dyn SequenceNorm, cfg: &SamplerConfig) -> Result<PropertyReport> {
    Property::Contraction.check(class, cfg)
}

pub fn check_spherical_completeness(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::SphericalCompleteness.check(class, cfg)
}

pub fn check_linear_stability(
    class: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    Property::LinearStability.check(class, cfg)
}

fn draw_scalars(cfg: &SamplerConfig, rng: &mut ChaCha8Rng, n: usize) -> Witness {
    let k = cfg.length(rng);
    let sequences = (0..n)
        .map(|_| cfg.items(rng, 1, k).into_iter().map(|x| x[0]).collect())
        .collect();
    Witness::Scalars { sequences }
}

fn scalar_outcome(
    inputs: &[&dyn SequenceNorm],
    output: &dyn SequenceNorm,
    w: &Witness,
    cfg: &NormConfig,
) -> Result<Outcome> {
    let Witness::Scalars { sequences } = w else {
        return Err(Error::Parse("witness does not fit the scalar check".into()));
    };
    let k = Space::scalars();
    let as_seq = |v: &[f64]| FiniteSeq::new(k, v.iter().map(|&c| vec![c]).collect());
    let len = sequences.first().map_or(0, Vec::len);
    let products: Vec<f64> = (0..len)
        .map(|j| sequences.iter().map(|s| s[j]).product())
        .collect();
    let mut rhs = 1.0;
    for (x, s) in inputs.iter().zip(sequences) {
        rhs *= x.norm(&as_seq(s)?, cfg)?;
    }
    let exact = inputs.iter().all(|x| x.is_exact_on(&k)) && output.is_exact_on(&k);
    Ok(Outcome {
        lhs: output.norm(&as_seq(&products)?, cfg)?,
        rhs,
        relation: Relation::Le,
        exact,
    })
}

/// `‖(λ_j^1 ⋯ λ_j^n)_j‖_{Y(𝕂)} ≤ Π_i ‖(λ_j^i)_j‖_{X_i(𝕂)}` on sampled scalar sequences.
pub fn check_scalar_condition(
    inputs: &[&dyn SequenceNorm],
    output: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    let mut labels: Vec<String> = inputs.iter().map(|x| x.label()).collect();
    labels.push(output.label());
    falsify(
        "scalar-condition",
        labels,
        false,
        cfg,
        |rng| draw_scalars(cfg, rng, inputs.len()),
        |w| Ok(vec![scalar_outcome(inputs, output, w, &cfg.norm)?]),
    )
}

pub fn replay_scalar_condition(
    inputs: &[&dyn SequenceNorm],
    output: &dyn SequenceNorm,
    c: &Counterexample,
    cfg: &NormConfig,
) -> Result<bool> {
    Ok(scalar_outcome(inputs, output, &c.witness, cfg)?.excess(c.tolerance) > 0.0)
}

fn dominance_outcome(
    x: &dyn SequenceNorm,
    y: &dyn SequenceNorm,
    w: &Witness,
    cfg: &NormConfig,
) -> Result<Outcome> {
    let Witness::Sequence { space, items } = w else {
        return Err(Error::Parse(
            "witness does not fit the domination check".into(),
        ));
    };
    let s = Witness::seq(*space, items)?;
    Ok(Outcome {
        lhs: x.norm(&s, cfg)?,
        rhs: y.norm(&s, cfg)?,
        relation: Relation::Le,
        exact: x.is_exact_on(space) && y.is_exact_on(space),
    })
}

fn draw_sequence(cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Witness {
    let s = cfg.sequence(rng);
    Witness::Sequence {
        space: s.space(),
        items: s.items().to_vec(),
    }
}

/// Searches for a finite sequence with `‖s‖_X > ‖s‖_Y`.
pub fn fin_leq_falsify(
    x: &dyn SequenceNorm,
    y: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    falsify(
        "fin-leq",
        vec![x.label(), y.label()],
        false,
        cfg,
        |rng| draw_sequence(cfg, rng),
        |w| Ok(vec![dominance_outcome(x, y, w, &cfg.norm)?]),
    )
}

pub fn replay_dominance(
    x: &dyn SequenceNorm,
    y: &dyn SequenceNorm,
    c: &Counterexample,
    cfg: &NormConfig,
) -> Result<bool> {
    Ok(dominance_outcome(x, y, &c.witness, cfg)?.excess(c.tolerance) > 0.0)
}

/// Searches for a sequence and an index `i` with `‖s‖_{X_i} > ‖s‖_X`.
pub fn jointly_dominated_check(
    classes: &[&dyn SequenceNorm],
    x: &dyn SequenceNorm,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    let mut labels: Vec<String> = classes.iter().map(|c| c.label()).collect();
    labels.push(x.label());
    falsify(
        "jointly-dominated",
        labels,
        true,
        cfg,
        |rng| draw_sequence(cfg, rng),
        |w| {
            classes
                .iter()
                .map(|c| dominance_outcome(*c, x, w, &cfg.norm))
                .collect()
        },
    )
}

/// Deliberately broken classes used to show that each checker can fail.
#[derive(Clone, Debug, PartialEq)]
pub enum Mutant {
    /// `factor · ‖s‖_X`
    Scaled { inner: Box<SeqClass>, factor: f64 },
    /// `‖s‖_X + (L - k)` for a fixed reference length `L`: every dropped item adds 1.
    DropBonus { inner: Box<SeqClass> },
    /// `Σ_j j ‖x_j‖`
    PositionWeighted,
    /// `Σ_j ‖x_j‖ / j`
    FrontWeighted,
    /// The genuine norm with a declared contraction constant that is too small.
    WithConstant { inner: Box<SeqClass>, constant: f64 },
    /// `‖s‖_X + ½ |Σ_j x_j[0]|`
    SignSkewed { inner: Box<SeqClass> },
    /// `‖(D x_j)‖_X` with `D` scaling the first coordinate by `factor`.
    Reweighted { inner: Box<SeqClass>, factor: f64 },
}

const DROP_BONUS_LENGTH: f64 = 64.0;

impl Mutant {
    fn inner(&self) -> Option<&SeqClass> {
        match self {
            Mutant::Scaled { inner, .. }
            | Mutant::DropBonus { inner }
            | Mutant::WithConstant { inner, .. }
            | Mutant::SignSkewed { inner }
            | Mutant::Reweighted { inner, .. } => Some(inner),
            Mutant::PositionWeighted | Mutant::FrontWeighted => None,
        }
    }
}

impl SequenceNorm for Mutant {
    fn label(&self) -> String {
        match self {
            Mutant::Scaled { inner, factor } => format!("mutant:scaled({inner}, {factor})"),
            Mutant::DropBonus { inner } => format!("mutant:drop-bonus({inner})"),
            Mutant::PositionWeighted => "mutant:position-weighted".into(),
            Mutant::FrontWeighted => "mutant:front-weighted".into(),
            Mutant::WithConstant { inner, constant } => {
                format!("mutant:constant({inner}, {constant})")
            }
            Mutant::SignSkewed { inner } => format!("mutant:sign-skewed({inner})"),
            Mutant::Reweighted { inner, factor } => format!("mutant:reweighted({inner}, {factor})"),
        }
    }

    fn norm(&self, s: &FiniteSeq, cfg: &NormConfig) -> Result<f64> {
        let weighted = |w: &dyn Fn(f64) -> f64| -> f64 {
            s.item_norms()
                .iter()
                .enumerate()
                .map(|(j, n)| w((j + 1) as f64) * n)
                .sum()
        };
        match self {
            Mutant::Scaled { inner, factor } => Ok(factor * inner.norm(s, cfg)?),
            Mutant::DropBonus { inner } => {
                Ok(inner.norm(s, cfg)? + DROP_BONUS_LENGTH - s.len() as f64)
            }
            Mutant::PositionWeighted => Ok(weighted(&|j| j)),
            Mutant::FrontWeighted => Ok(weighted(&|j| 1.0 / j)),
            Mutant::WithConstant { inner, .. } => inner.norm(s, cfg),
            Mutant::SignSkewed { inner } => {
                let skew: f64 = s.items().iter().map(|x| x[0]).sum();
                Ok(inner.norm(s, cfg)? + 0.5 * skew.abs())
            }
            Mutant::Reweighted { inner, factor } => {
                let items = s
                    .items()
                    .iter()
                    .map(|x| {
                        let mut y = x.clone();
                        y[0] *= factor;
                        y
                    })
                    .collect();
                inner.norm(&FiniteSeq::new(s.space(), items)?, cfg)
            }
        }
    }

    fn flags(&self) -> ClassFlags {
        self.inner()
            .map_or_else(|| SeqClass::LpAbs(Exponent::ONE).flags(), SeqClass::flags)
    }

    fn contraction_constant(&self) -> f64 {
        match self {
            Mutant::WithConstant { constant, .. } => *constant,
            _ => self.inner().map_or(1.0, SeqClass::contraction_constant),
        }
    }

    fn is_exact_on(&self, space: &Space) -> bool {
        self.inner().is_none_or(|c| c.is_exact_on(space))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(samples: usize) -> SamplerConfig {
        SamplerConfig::default().with_samples(samples).with_seed(3)
    }

    fn class(s: &str) -> SeqClass {
        s.parse().unwrap()
    }

    #[test]
    fn genuine_lp_passes_everything() {
        let c = class("lp:2");
        for p in Property::ALL {
            let r = p.check(&c, &cfg(200)).unwrap();
            assert!(!r.found(), "{}", r.summary());
        }
    }

    #[test]
    fn mutants_are_caught_and_replay() {
        let genuine = class("lp:3/2");
        let norm = NormConfig::default();
        for p in Property::ALL {
            let m = p.mutant(genuine.clone());
            let r = p.check(&m, &cfg(2000)).unwrap();
            assert!(r.found(), "{} missed {}", p.name(), m.label());
            let c = r.counterexample.as_ref().unwrap();
            assert!(p.replay(&m, c, &norm).unwrap());
            assert!(
                !p.replay(&genuine, c, &norm).unwrap(),
                "{}: genuine class fails at the witness",
                p.name()
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let a = Property::FinitelyShrinking
            .check(&class("rad"), &cfg(300))
            .unwrap();
        let b = Property::FinitelyShrinking
            .check(&class("rad"), &cfg(300))
            .unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn fin_leq_examples() {
        let weak = class("lpw:2");
        let strong = class("lp:2");
        assert!(!fin_leq_falsify(&weak, &strong, &cfg(300)).unwrap().found());
        let r = fin_leq_falsify(&strong, &weak, &cfg(300)).unwrap();
        assert!(r.found());
        assert!(replay_dominance(
            &strong,
            &weak,
            r.counterexample.as_ref().unwrap(),
            &NormConfig::default()
        )
        .unwrap());
        assert!(!fin_leq_falsify(&strong, &strong, &cfg(100))
            .unwrap()
            .found());
    }

    #[test]
    fn jointly_dominated_examples() {
        let w = class("lpw:2");
        let fdw = class("fd(lpw:2)");
        assert!(!jointly_dominated_check(&[&w, &fdw], &fdw, &cfg(200))
            .unwrap()
            .found());
        let r = jointly_dominated_check(&[&class("lp:2")], &w, &cfg(200)).unwrap();
        assert!(r.found());
        assert_eq!(r.counterexample.unwrap().class_index, Some(0));
    }

    #[test]
    fn scalar_condition_examples() {
        let two = class("lp:2");
        let one = class("lp:1");
        let linf = class("linf");
        assert!(!check_scalar_condition(&[&two, &two], &one, &cfg(500))
            .unwrap()
            .found());
        assert!(!check_scalar_condition(&[&one, &one], &one, &cfg(500))
            .unwrap()
            .found());
        let r = check_scalar_condition(&[&linf, &linf], &one, &cfg(500)).unwrap();
        assert!(r.found());
        assert!(replay_scalar_condition(
            &[&linf, &linf],
            &one,
            r.counterexample.as_ref().unwrap(),
            &NormConfig::default()
        )
        .unwrap());
    }

    #[test]
    fn operator_norms() {
        let t = vec![vec![1.0, -2.0], vec![0.5, 0.0]];
        assert_eq!(operator_norm_bound(&t, Exponent::ONE), 2.0);
        assert_eq!(operator_norm_bound(&t, Exponent::INFINITY), 3.0);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((operator_norm_bound(&id, Exponent::TWO) - 1.0).abs() < 1e-15);
        assert_eq!(operator_norm_bound(&id, "3".parse().unwrap()), 1.0);
    }
}
