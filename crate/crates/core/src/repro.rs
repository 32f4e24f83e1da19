//! A registry of reproducible numerical experiments.
//!
//! Every case is a pure function of [`ReproOptions`]: it draws whatever random
//! data it needs from the seed, evaluates, and returns a CSV trace together
//! with a list of named checks. Writing files is left to the caller so that
//! the same outcome can be compared byte for byte.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multilinear::{
    divergence_probe, summing_ratio, MultilinearOp, Permuted, ProbeTrace, ProbeVerdict,
    RankOneBilinear,
};
use crate::optim::{gaussian_vec, restart_rng, NormConfig};
use crate::seqclasses::{
    class_norm, cohen_norm_with, dual_norm_with, fd_norm, rad_norm, u_tail_trace, FiniteSeq,
    SeqClass, SeqFamily, TailVerdict,
};
use crate::spaces::{Exponent, Functional, Space};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproOptions {
    pub seed: u64,
    /// Overrides the exactness tolerance of every case that has one.
    pub tol: Option<f64>,
    /// Overrides the number of random samples drawn by sampling cases.
    pub budget: Option<usize>,
    pub k_max: usize,
}

impl Default for ReproOptions {
    fn default() -> Self {
        ReproOptions {
            seed: 0,
            tol: None,
            budget: None,
            k_max: 4096,
        }
    }
}

impl ReproOptions {
    /// The options line printed above every summary.
    pub fn header(&self) -> String {
        let show = |v: Option<String>| v.unwrap_or_else(|| "default".into());
        format!(
            "# seqnorm repro seed={} tol={} budget={} kmax={} rad_len<={RAD_LEN}",
            self.seed,
            show(self.tol.map(|t| format!("{t:e}"))),
            show(self.budget.map(|b| b.to_string())),
            self.k_max,
        )
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn budget_or(&self, default: usize) -> usize {
        self.budget.unwrap_or(default).max(1)
    }

    fn cfg(&self) -> NormConfig {
        NormConfig::default().with_seed(self.seed)
    }
}

/// Longest sequence handed to a Rademacher enumeration by any case.
pub const RAD_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    EqualityWithinTol,
    BoundedTrace,
    DivergingTrace,
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expectation::EqualityWithinTol => "equality within tolerance",
            Expectation::BoundedTrace => "bounded trace",
            Expectation::DivergingTrace => "diverging trace",
        })
    }
}

/// Runs a case, returning its checks and CSV body.
type CaseFn = fn(&ReproOptions) -> Result<(Vec<Check>, String)>;

pub struct ReproCase {
    pub id: &'static str,
    pub description: &'static str,
    pub expectation: Expectation,
    run: CaseFn,
}

impl fmt::Debug for ReproCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReproCase")
            .field("id", &self.id)
            .field("expectation", &self.expectation)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            label: label.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproOutcome {
    pub id: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub csv: String,
}

impl ReproOutcome {
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let details = self
            .checks
            .iter()
            .map(|c| format!("{} [{}]", c.detail, if c.pass { "ok" } else { "FAILED" }));
        format!("{} {verdict}: {}", self.id, details.format("; "))
    }
}

static REGISTRY: [ReproCase; 8] = [
    ReproCase {
        id: "ex36",
        description: "rank-one bilinear map on l_inf^N with l_1^w x l_2^w inputs and l_1 output: A^t diverges, A stays bounded",
        expectation: Expectation::DivergingTrace,
        run: ex36,
    },
    ReproCase {
        id: "p34",
        description: "same map with an l_inf-bounded second input: A^t grows linearly, A stays bounded",
        expectation: Expectation::DivergingTrace,
        run: p34,
    },
    ReproCase {
        id: "radlemma",
        description: "inserting a zero vector anywhere leaves the Rademacher norm unchanged",
        expectation: Expectation::EqualityWithinTol,
        run: radlemma,
    },
    ReproCase {
        id: "fdprefix",
        description: "the largest prefix norm equals the class norm for finitely shrinking classes",
        expectation: Expectation::EqualityWithinTol,
        run: fdprefix,
    },
    ReproCase {
        id: "dualcohen",
        description: "dual of the weak class and the Cohen strong norm agree on small Euclidean samples",
        expectation: Expectation::EqualityWithinTol,
        run: dualcohen,
    },
    ReproCase {
        id: "ucoincide",
        description: "ratio traces over finite witnesses coincide for a class and its u-restriction",
        expectation: Expectation::EqualityWithinTol,
        run: ucoincide,
    },
    ReproCase {
        id: "symavg",
        description: "the symmetrized ratio never exceeds the largest ratio over argument permutations",
        expectation: Expectation::BoundedTrace,
        run: symavg,
    },
    ReproCase {
        id: "radtail",
        description: "Rademacher tails vanish for a decaying pattern and persist for unit vectors",
        expectation: Expectation::BoundedTrace,
        run: radtail,
    },
];

pub fn registry() -> &'static [ReproCase] {
    &REGISTRY
}

pub fn find(id: &str) -> Result<&'static ReproCase> {
    REGISTRY
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownCase(id.to_string()))
}

impl ReproCase {
    pub fn run(&self, opts: &ReproOptions) -> Result<ReproOutcome> {
        let (checks, csv) = (self.run)(opts)?;
        let pass = checks.iter().all(|c| c.pass);
        Ok(ReproOutcome {
            id: self.id.to_string(),
            pass,
            checks,
            csv,
        })
    }
}

pub fn run_case(id: &str, opts: &ReproOptions) -> Result<ReproOutcome> {
    find(id)?.run(opts)
}

/// Runs the whole registry. The result is in registry order either way.
pub fn run_all(opts: &ReproOptions, parallel: bool) -> Result<Vec<ReproOutcome>> {
    if parallel {
        REGISTRY.par_iter().map(|c| c.run(opts)).collect()
    } else {
        REGISTRY.iter().map(|c| c.run(opts)).collect()
    }
}

/// Writes `<id>.csv` into `dir` and returns the path.
pub fn write_csv(outcome: &ReproOutcome, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let path = dir.as_ref().join(format!("{}.csv", outcome.id));
    fs::write(&path, &outcome.csv)?;
    Ok(path)
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

struct Table {
    out: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header)?;
        Ok(Table { out })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.out.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> Result<String> {
        let bytes = self
            .out
            .into_inner()
            .map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn exp(s: &str) -> Exponent {
    s.parse().expect("literal exponent")
}

fn random_seq(rng: &mut impl Rng, space: Space, len: usize) -> FiniteSeq {
    let items = (0..len)
        .map(|_| gaussian_vec_from(rng, space.dim()))
        .collect();
    FiniteSeq::new(space, items).expect("generated to the space dimension")
}

fn gaussian_vec_from(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect()
}

// Rank-one witnesses.

fn probe_rows(
    table: &mut Table,
    label: &str,
    trace: &ProbeTrace,
    formula: impl Fn(usize) -> f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in &trace.points {
        let f = formula(p.k);
        worst = worst.max((p.rho - f).abs() / f.abs());
        let mut row = vec![
            label.to_string(),
            p.k.to_string(),
            num(p.rho),
            num(p.output_norm),
        ];
        row.extend(p.slot_norms.iter().map(|&v| num(v)));
        row.push(num(f));
        table.row(&row)?;
    }
    Ok(worst)
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

fn inverse_squares_root(k: usize) -> f64 {
    (1..=k)
        .map(|j| 1.0 / (j as f64 * j as f64))
        .sum::<f64>()
        .sqrt()
}

struct RankOneSetup {
    inputs: [SeqClass; 2],
    families: [SeqFamily; 2],
    transposed_formula: fn(usize) -> f64,
    plain_formula: fn(usize) -> f64,
}

fn rank_one_case(opts: &ReproOptions, setup: RankOneSetup) -> Result<(Vec<Check>, String)> {
    let tol = opts.tol_or(1e-9);
    let space = Space::new(opts.k_max.max(16), Exponent::INFINITY)?;
    let a = RankOneBilinear::new(Functional::coordinate(space, 0)?, None)?;
    let at = Permuted::transpose(&a)?;
    let output = SeqClass::LpAbs(Exponent::ONE);
    let cfg = opts.cfg();
    let t = divergence_probe(
        &at,
        &setup.inputs,
        &output,
        &setup.families,
        opts.k_max,
        &cfg,
    )?;
    let plain = divergence_probe(
        &a,
        &setup.inputs,
        &output,
        &setup.families,
        opts.k_max,
        &cfg,
    )?;

    let mut table = Table::new(&[
        "operator",
        "k",
        "rho",
        "output_norm",
        "slot1_norm",
        "slot2_norm",
        "formula",
    ])?;
    let err_t = probe_rows(&mut table, "At", &t, setup.transposed_formula)?;
    let err_a = probe_rows(&mut table, "A", &plain, setup.plain_formula)?;
    let sup_a = plain.points.iter().map(|p| p.rho).fold(0.0, f64::max);

    let checks = vec![
        Check::new(
            "transpose diverges",
            t.verdict == ProbeVerdict::Diverging,
            format!(
                "A^t {} (growth {:.4}, strictly increasing {})",
                match t.verdict {
                    ProbeVerdict::Diverging => "diverging",
                    ProbeVerdict::NotDiverging => "not diverging",
                },
                t.growth,
                t.strictly_increasing
            ),
        ),
        Check::new(
            "formula",
            err_t <= tol && err_a <= tol,
            format!("max formula error {:.2e}", err_t.max(err_a)),
        ),
        Check::new(
            "A bounded",
            sup_a <= 1.0 + tol,
            format!("sup rho(A) = {sup_a:.6}"),
        ),
    ];
    Ok((checks, table.finish()?))
}

fn ex36(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let d = opts.k_max.max(16);
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    rank_one_case(
        opts,
        RankOneSetup {
            inputs: [
                SeqClass::LpWeak(Exponent::ONE),
                SeqClass::LpWeak(Exponent::TWO),
            ],
            families: [SeqFamily::UnitVectors, SeqFamily::scaled_pattern(e1, 1.0)?],
            transposed_formula: |k| harmonic(k) / inverse_squares_root(k),
            plain_formula: |k| 1.0 / inverse_squares_root(k),
        },
    )
}

fn p34(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let d = opts.k_max.max(16);
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    rank_one_case(
        opts,
        RankOneSetup {
            inputs: [SeqClass::LpWeak(Exponent::ONE), SeqClass::LInfSup],
            families: [SeqFamily::UnitVectors, SeqFamily::Constant { z: e1 }],
            transposed_formula: |k| k as f64,
            plain_formula: |_| 1.0,
        },
    )
}

// Sampling cases.

fn sample_space(rng: &mut impl Rng, max_dim: usize) -> Space {
    let e = ["1", "3/2", "2", "3", "inf"]
        .choose(rng)
        .copied()
        .unwrap_or("2");
    Space::new(rng.gen_range(1..=max_dim), exp(e)).expect("valid sampled space")
}

fn radlemma(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let tol = opts.tol_or(1e-12);
    let mut rng = restart_rng(opts.seed, 0x7261_646c);
    let mut table = Table::new(&[
        "sample",
        "space",
        "len",
        "position",
        "base",
        "with_zero",
        "deviation",
    ])?;
    let mut worst: f64 = 0.0;
    for sample in 0..opts.budget_or(100) {
        let space = sample_space(&mut rng, 6);
        let len = rng.gen_range(1..RAD_LEN);
        let s = random_seq(&mut rng, space, len);
        let base = rad_norm(&s)?;
        for pos in 0..=len {
            let z = rad_norm(&s.with_zero_at(pos))?;
            let dev = (z - base).abs();
            worst = worst.max(dev);
            table.row(&[
                sample.to_string(),
                space.to_string(),
                len.to_string(),
                pos.to_string(),
                num(base),
                num(z),
                num(dev),
            ])?;
        }
    }
    let check = Check::new(
        "zero insertion",
        worst <= tol,
        format!("max deviation {worst:.2e} (tol {tol:.0e})"),
    );
    Ok((vec![check], table.finish()?))
}

fn fdprefix(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let tol = opts.tol_or(1e-12);
    let mut rng = restart_rng(opts.seed, 0x6664_7072);
    let mut table = Table::new(&[
        "sample",
        "class",
        "space",
        "len",
        "class_norm",
        "fd_norm",
        "deviation",
    ])?;
    let mut worst: f64 = 0.0;
    let per_class = opts.budget_or(100);
    for kind in 0..4 {
        for sample in 0..per_class {
            let (class, space) = match kind {
                0 => {
                    let p = ["1", "3/2", "2", "3", "inf"]
                        .choose(&mut rng)
                        .copied()
                        .unwrap_or("1");
                    (SeqClass::LpAbs(exp(p)), sample_space(&mut rng, 6))
                }
                1 => (SeqClass::LInfSup, sample_space(&mut rng, 6)),
                2 => {
                    // Weak classes whose norm is computed exactly.
                    let e = ["1", "2", "inf"].choose(&mut rng).copied().unwrap_or("2");
                    let space = Space::new(rng.gen_range(1..=6), exp(e))?;
                    let p = if e == "2" {
                        "2"
                    } else {
                        ["1", "3/2", "2", "3"]
                            .choose(&mut rng)
                            .copied()
                            .unwrap_or("2")
                    };
                    (SeqClass::LpWeak(exp(p)), space)
                }
                _ => (SeqClass::Rad, sample_space(&mut rng, 6)),
            };
            let len = rng.gen_range(1..=12);
            let s = random_seq(&mut rng, space, len);
            let c = class_norm(&class, &s)?;
            let f = fd_norm(&class, &s)?;
            let dev = (f - c).abs();
            worst = worst.max(dev);
            table.row(&[
                sample.to_string(),
                class.to_string(),
                space.to_string(),
                len.to_string(),
                num(c),
                num(f),
                num(dev),
            ])?;
        }
    }
    let check = Check::new(
        "prefix identity",
        worst <= tol,
        format!("max deviation {worst:.2e} (tol {tol:.0e})"),
    );
    Ok((vec![check], table.finish()?))
}

/// `σ_1 + σ_2` of the matrix with rows `x_j ∈ R^d`, `d ≤ 2`, from the trace
/// and determinant of its Gram matrix.
fn nuclear_small(s: &FiniteSeq) -> f64 {
    let col = |i: usize| s.items().iter().map(|x| x[i]).collect::<Vec<_>>();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    if s.space().dim() == 1 {
        let c = col(0);
        return dot(&c, &c).sqrt();
    }
    let (c0, c1) = (col(0), col(1));
    let (g00, g11, g01) = (dot(&c0, &c0), dot(&c1, &c1), dot(&c0, &c1));
    let det = (g00 * g11 - g01 * g01).max(0.0);
    (g00 + g11 + 2.0 * det.sqrt()).sqrt()
}

fn dualcohen(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let mut rng = restart_rng(opts.seed, 0x6475_616c);
    let cfg = opts.cfg();
    let mut table = Table::new(&[
        "sample",
        "p",
        "d",
        "k",
        "cohen",
        "cohen_upper",
        "dual",
        "relative_gap",
        "oracle",
        "oracle_error",
    ])?;
    let (mut worst_gap, mut worst_oracle): (f64, f64) = (0.0, 0.0);
    for sample in 0..12 {
        let p = exp(["2", "3/2", "3"][sample % 3]);
        let d = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=4);
        let space = Space::new(d, Exponent::TWO)?;
        let s = random_seq(&mut rng, space, k);
        let c = cohen_norm_with(&s, p, &cfg)?;
        let du = dual_norm_with(&SeqClass::LpWeak(p.conjugate()), &s, &cfg)?;
        let gap = (c.value - du.value).abs() / c.value.max(du.value).max(f64::MIN_POSITIVE);
        worst_gap = worst_gap.max(gap);
        let (oracle, oracle_err) = if p.is_two() && d <= 2 && k <= 3 {
            let o = nuclear_small(&s);
            let err = (c.value - o).abs().max((du.value - o).abs());
            worst_oracle = worst_oracle.max(err);
            (num(o), num(err))
        } else {
            (String::new(), String::new())
        };
        table.row(&[
            sample.to_string(),
            p.to_string(),
            d.to_string(),
            k.to_string(),
            num(c.value),
            c.upper_bound.map(num).unwrap_or_default(),
            num(du.value),
            num(gap),
            oracle,
            oracle_err,
        ])?;
    }
    let checks = vec![
        Check::new(
            "agreement",
            worst_gap <= 0.05,
            format!("max relative gap {worst_gap:.2e} (tol 5e-2)"),
        ),
        Check::new(
            "oracle",
            worst_oracle <= 1e-3,
            format!("max oracle error {worst_oracle:.2e} (tol 1e-3)"),
        ),
    ];
    Ok((checks, table.finish()?))
}

fn ucoincide(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let mut rng = restart_rng(opts.seed, 0x7563_6f69);
    let e: Space = "lp:2:3".parse()?;
    let f: Space = "lp:2:2".parse()?;
    let a = MultilinearOp::new(vec![e, e], f, gaussian_vec(&mut rng, 18))?;
    let witnesses = vec![
        random_seq(&mut rng, e, RAD_LEN),
        random_seq(&mut rng, e, RAD_LEN),
    ];
    let x = [SeqClass::LpWeak(Exponent::TWO), SeqClass::Rad];
    let y = SeqClass::LpAbs(Exponent::ONE);
    let xu = x.clone().map(SeqClass::u);
    let yu = SeqClass::u(y.clone());
    let cfg = opts.cfg();

    let mut table = Table::new(&["m", "rho_x", "rho_u"])?;
    let mut identical = true;
    for m in 1..=RAD_LEN {
        let r = num(summing_ratio(&a, &x, &y, &witnesses, m, &cfg)?);
        let ru = num(summing_ratio(&a, &xu, &yu, &witnesses, m, &cfg)?);
        identical &= r == ru;
        table.row(&[m.to_string(), r, ru])?;
    }
    let check = Check::new(
        "traces identical",
        identical,
        if identical {
            "traces identical"
        } else {
            "traces differ"
        },
    );
    Ok((vec![check], table.finish()?))
}

/// A class and space pair on which the class norm is exact.
fn exact_class(rng: &mut impl Rng) -> (SeqClass, Space) {
    let e = ["1", "2", "inf"].choose(rng).copied().unwrap_or("2");
    let space = Space::new(rng.gen_range(1..=3), exp(e)).expect("valid space");
    let class = match rng.gen_range(0..4) {
        0 => SeqClass::LpAbs(exp(["1", "2", "3"].choose(rng).copied().unwrap_or("1"))),
        1 => SeqClass::LInfSup,
        2 => SeqClass::Rad,
        _ => SeqClass::LpWeak(exp(if e == "2" {
            "2"
        } else {
            ["1", "2"].choose(rng).copied().unwrap_or("1")
        })),
    };
    (class, space)
}

fn symavg(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let tol = opts.tol_or(1e-9);
    let mut rng = restart_rng(opts.seed, 0x7379_6d61);
    let cfg = opts.cfg();
    let mut table = Table::new(&[
        "instance", "arity", "space", "class", "output", "k", "rho_sym", "max_perm", "slack",
    ])?;
    let (mut violations, mut min_slack) = (0usize, f64::INFINITY);
    let instances = opts.budget_or(200);
    for instance in 0..instances {
        let n = rng.gen_range(2..=3);
        let (class, space) = exact_class(&mut rng);
        let codomain = Space::new(rng.gen_range(1..=2), Exponent::TWO)?;
        let output = [
            SeqClass::LpAbs(Exponent::ONE),
            SeqClass::LpAbs(Exponent::TWO),
            SeqClass::LInfSup,
        ]
        .choose(&mut rng)
        .cloned()
        .unwrap_or(SeqClass::LInfSup);
        let len = space.dim().pow(n as u32) * codomain.dim();
        let a = MultilinearOp::new(vec![space; n], codomain, gaussian_vec_from(&mut rng, len))?;
        let k = rng.gen_range(1..=6);
        let witnesses: Vec<FiniteSeq> = (0..n).map(|_| random_seq(&mut rng, space, k)).collect();
        let inputs = vec![class.clone(); n];

        let sym = a.symmetrize()?;
        let rho_sym = summing_ratio(&sym, &inputs, &output, &witnesses, k, &cfg)?;
        let mut max_perm = f64::NEG_INFINITY;
        for sigma in (0..n).permutations(n) {
            let permuted = Permuted::new(&a, sigma)?;
            max_perm = max_perm.max(summing_ratio(
                &permuted, &inputs, &output, &witnesses, k, &cfg,
            )?);
        }
        let slack = max_perm - rho_sym;
        min_slack = min_slack.min(slack);
        if rho_sym > max_perm + tol {
            violations += 1;
        }
        table.row(&[
            instance.to_string(),
            n.to_string(),
            space.to_string(),
            class.to_string(),
            output.to_string(),
            k.to_string(),
            num(rho_sym),
            num(max_perm),
            num(slack),
        ])?;
    }
    let check = Check::new(
        "permutation bound",
        violations == 0,
        format!("{violations} violations in {instances} instances (min slack {min_slack:.2e})"),
    );
    Ok((vec![check], table.finish()?))
}

fn radtail(opts: &ReproOptions) -> Result<(Vec<Check>, String)> {
    let tol = opts.tol_or(1e-12);
    let mut rng = restart_rng(opts.seed, 0x7274_6169);
    let space = Space::new(RAD_LEN, Exponent::INFINITY)?;
    let z = gaussian_vec(&mut rng, RAD_LEN);
    let z_sup = z.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let cfg = opts.cfg();
    let scaled = u_tail_trace(
        &SeqClass::Rad,
        &SeqFamily::scaled_pattern(z, 1.0)?,
        space,
        RAD_LEN,
        &cfg,
    )?;
    let units = u_tail_trace(
        &SeqClass::Rad,
        &SeqFamily::UnitVectors,
        space,
        RAD_LEN,
        &cfg,
    )?;

    let mut table = Table::new(&["family", "n", "rad_norm", "formula"])?;
    let mut worst: f64 = 0.0;
    for &(n, v) in &scaled.points {
        let f = z_sup
            * (n..=RAD_LEN)
                .map(|j| 1.0 / (j * j) as f64)
                .sum::<f64>()
                .sqrt();
        worst = worst.max((v - f).abs());
        table.row(&["scaled_pattern".into(), n.to_string(), num(v), num(f)])?;
    }
    for &(n, v) in &units.points {
        worst = worst.max((v - 1.0).abs());
        table.row(&["unit_vectors".into(), n.to_string(), num(v), num(1.0)])?;
    }
    let checks = vec![
        Check::new(
            "decaying tail",
            scaled.verdict == TailVerdict::TailToZero,
            format!("scaled pattern: {}", scaled.verdict),
        ),
        Check::new(
            "persistent tail",
            units.verdict == TailVerdict::NonNullTail,
            format!("unit vectors: {}", units.verdict),
        ),
        Check::new(
            "enumeration",
            worst <= tol,
            format!("max formula error {worst:.2e}"),
        ),
    ];
    Ok((checks, table.finish()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ReproOptions {
        ReproOptions {
            seed: 3,
            tol: None,
            budget: Some(4),
            k_max: 128,
        }
    }

    #[test]
    fn registry_ids_are_unique_and_findable() {
        let ids: Vec<_> = registry().iter().map(|c| c.id).collect();
        assert_eq!(ids.iter().unique().count(), ids.len());
        for id in ids {
            assert_eq!(find(id).unwrap().id, id);
        }
        assert!(matches!(find("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn p34_grows_linearly() {
        let out = run_case("p34", &small()).unwrap();
        assert!(out.pass, "{}", out.summary());
        assert!(out.csv.starts_with("operator,k,rho"));
    }

    #[test]
    fn cheap_cases_pass_and_repeat() {
        for id in ["radlemma", "fdprefix", "ucoincide", "symavg", "radtail"] {
            let a = run_case(id, &small()).unwrap();
            let b = run_case(id, &small()).unwrap();
            assert!(a.pass, "{}", a.summary());
            assert_eq!(a.csv, b.csv, "{id}");
        }
    }

    #[test]
    fn header_records_defaults() {
        let h = ReproOptions::default().header();
        assert!(h.contains("seed=0") && h.contains("tol=default") && h.contains("kmax=4096"));
    }
}
