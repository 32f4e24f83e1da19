//! Shared configuration and the deterministic multistart driver used by every
//! ascent backend.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spaces::DEFAULT_ENUMERATION_CAP;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConfig {
    /// Number of independent restarts of every ascent.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Stop once the relative improvement of an iteration drops below this.
    pub rel_tol: f64,
    pub seed: u64,
    /// Cap for exhaustive sign enumeration (Rademacher averages and `ℓ_∞` vertices).
    pub enumeration_cap: usize,
    /// Cutting-plane rounds for the Cohen norm.
    pub cut_rounds: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            restarts: 64,
            max_iters: 10_000,
            rel_tol: 1e-10,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            cut_rounds: 400,
        }
    }
}

impl NormConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }

    /// A cheaper configuration for norm evaluations nested inside another
    /// search. Values obtained with it are re-evaluated before being reported.
    pub(crate) fn inner(&self) -> NormConfig {
        NormConfig {
            restarts: self.restarts.min(4),
            max_iters: self.max_iters.min(500),
            ..self.clone()
        }
    }
}

/// Seed of restart `index` derived from a base seed. Independent of scheduling.
pub fn restart_seed(base: u64, index: usize) -> u64 {
    let mut z = base ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn restart_rng(base: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(restart_seed(base, index))
}

pub(crate) fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Result of one restart: its objective value and payload.
pub(crate) struct Candidate<T> {
    pub index: usize,
    pub value: f64,
    pub payload: T,
}

fn better<T>(a: Candidate<T>, b: Candidate<T>) -> Candidate<T> {
    let va = if a.value.is_nan() {
        f64::NEG_INFINITY
    } else {
        a.value
    };
    let vb = if b.value.is_nan() {
        f64::NEG_INFINITY
    } else {
        b.value
    };
    if va > vb || (va == vb && a.index < b.index) {
        a
    } else {
        b
    }
}

/// Runs `restarts` independent ascents and keeps the maximum, ties going to
/// the lowest restart index, so the outcome does not depend on scheduling.
pub(crate) fn multistart<T, F>(restarts: usize, run: F) -> Candidate<T>
where
    T: Send,
    F: Fn(usize) -> (f64, T) + Sync + Send,
{
    (0..restarts.max(1))
        .into_par_iter()
        .map(|index| {
            let (value, payload) = run(index);
            Candidate {
                index,
                value,
                payload,
            }
        })
        .reduce_with(better)
        .expect("at least one restart")
}
