use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FiniteSeq, SeqClass};
use crate::error::{Error, Result};
use crate::optim::NormConfig;
use crate::spaces::Space;

/// A rule producing arbitrarily long prefixes of a fixed infinite sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqFamily {
    /// `x_j = e_j`; the prefix length is bounded by the dimension.
    UnitVectors,
    /// `x_j = j^{-s} z`.
    ScaledPattern {
        z: Vec<f64>,
        decay: f64,
    },
    /// `x_j = z` for every `j`.
    Constant {
        z: Vec<f64>,
    },
    Zero,
    /// A fixed list; prefixes longer than the list are rejected.
    Explicit {
        items: Vec<Vec<f64>>,
    },
}

impl SeqFamily {
    pub fn scaled_pattern(z: Vec<f64>, decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::Parse(format!("decay must be positive, got {decay}")));
        }
        Ok(SeqFamily::ScaledPattern { z, decay })
    }

    pub fn explicit(s: &FiniteSeq) -> Self {
        SeqFamily::Explicit {
            items: s.items().to_vec(),
        }
    }

    /// The first `len` terms in `space`.
    pub fn instantiate(&self, space: Space, len: usize) -> Result<FiniteSeq> {
        let d = space.dim();
        let check_z = |z: &[f64]| {
            if z.len() == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    dim: d,
                    found: z.len(),
                })
            }
        };
        let items = match self {
            SeqFamily::UnitVectors => {
                if len > d {
                    return Err(Error::FamilyHorizon {
                        requested: len,
                        reason: format!("only {d} unit vectors exist in {space}"),
                    });
                }
                (0..len)
                    .map(|j| {
                        let mut e = vec![0.0; d];
                        e[j] = 1.0;
                        e
                    })
                    .collect()
            }
            SeqFamily::ScaledPattern { z, decay } => {
                check_z(z)?;
                (1..=len)
                    .map(|j| {
                        let a = (j as f64).powf(-decay);
                        z.iter().map(|c| a * c).collect()
                    })
                    .collect()
            }
            SeqFamily::Constant { z } => {
                check_z(z)?;
                vec![z.clone(); len]
            }
            SeqFamily::Zero => vec![vec![0.0; d]; len],
            SeqFamily::Explicit { items } => {
                if len > items.len() {
                    return Err(Error::FamilyHorizon {
                        requested: len,
                        reason: format!("explicit family has {} terms", items.len()),
                    });
                }
                items[..len].to_vec()
            }
        };
        FiniteSeq::new(space, items)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    /// The trace falls to a small fraction of its initial value.
    TailToZero,
    /// The second half of the trace stays above half the initial value.
    NonNullTail,
    Inconclusive,
}

impl fmt::Display for TailVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailVerdict::TailToZero => "tail->0 evidence",
            TailVerdict::NonNullTail => "non-null tail evidence",
            TailVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// `(n, ‖(x_n, …, x_N)‖_X)` for `n = 1..N`. Evidence about null tails, not a proof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailTrace {
    pub horizon: usize,
    pub points: Vec<(usize, f64)>,
    pub verdict: TailVerdict,
}

const NULL_FRACTION: f64 = 0.1;
const PERSIST_FRACTION: f64 = 0.5;

impl TailTrace {
    fn classify(points: &[(usize, f64)]) -> TailVerdict {
        let Some(&(_, first)) = points.first() else {
            return TailVerdict::Inconclusive;
        };
        if first == 0.0 {
            return TailVerdict::TailToZero;
        }
        let last = points.last().map_or(first, |p| p.1);
        if last <= NULL_FRACTION * first {
            TailVerdict::TailToZero
        } else if points[points.len() / 2..]
            .iter()
            .all(|&(_, v)| v >= PERSIST_FRACTION * first)
        {
            TailVerdict::NonNullTail
        } else {
            TailVerdict::Inconclusive
        }
    }
}

/// Tail norms of the first `horizon` terms of `family`. Only meaningful for
/// finitely shrinking classes, where the trace is nonincreasing.
pub fn u_tail_trace(
    class: &SeqClass,
    family: &SeqFamily,
    space: Space,
    horizon: usize,
    cfg: &NormConfig,
) -> Result<TailTrace> {
    if !class.flags().finitely_shrinking {
        return Err(Error::UnsupportedClass(format!(
            "{class} is not flagged finitely shrinking"
        )));
    }
    if horizon == 0 {
        return Err(Error::FamilyHorizon {
            requested: 0,
            reason: "empty horizon".into(),
        });
    }
    let s = family.instantiate(space, horizon)?;
    let points = (1..=horizon)
        .map(|n| Ok((n, class.norm(&s.tail_from(n), cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let verdict = TailTrace::classify(&points);
    Ok(TailTrace {
        horizon,
        points,
        verdict,
    })
}
