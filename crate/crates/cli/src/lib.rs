//! The `seqnorm` command line, as a library so it can be driven in-process.
//!
//! Exit codes: 0 when everything passes, 2 when a property check finds a
//! counterexample or a repro case fails, 1 on any error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seqnorm::io::{read_operator, read_sequence};
use seqnorm::multilinear::lower_bound_search;
use seqnorm::optim::NormConfig;
use seqnorm::propcheck::{
    check_scalar_condition, fin_leq_falsify, jointly_dominated_check, Property, PropertyReport,
    SamplerConfig,
};
use seqnorm::repro::{self, ReproOptions};
use seqnorm::seqclasses::{Certificate, SeqClass, SequenceNorm};
use seqnorm::spaces::Space;

/// Norms of vector-valued sequence classes, summing ratios of multilinear
/// maps, and property falsification.
#[derive(Parser, Debug)]
#[command(name = "seqnorm", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override for checks and repro cases.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Samples for `check` and sampling repro cases, steps per restart for `search`.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Largest prefix length probed by divergence cases.
    #[arg(long, global = true, default_value_t = 4096)]
    kmax: usize,
    /// Run independent repro cases concurrently.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the norm of a finite sequence in a class.
    Norm {
        /// Class, e.g. `lp:2`, `lpw:3/2`, `linf`, `rad`, `cohen:2`, `fd(lpw:1)`.
        class: SeqClass,
        /// Space such as `lp:2:3` (exponent, dimension).
        space: Space,
        /// Sequence JSON file.
        file: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Search for a counterexample to a property.
    ///
    /// Single-class properties take one class. `scalar-condition` takes the
    /// input classes followed by the output class, `fin-leq` takes X and Y,
    /// and `jointly-dominated` takes X_1 .. X_m followed by X.
    Check {
        property: String,
        #[arg(required = true)]
        classes: Vec<SeqClass>,
        /// Check the designated mutant of the class instead.
        #[arg(long)]
        mutant: bool,
        #[arg(long)]
        json: bool,
    },
    /// Adversarial lower bound of the summing norm of an operator.
    Search {
        /// Operator JSON file.
        operator: PathBuf,
        /// Input classes, one per slot, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<SeqClass>,
        #[arg(long)]
        output: SeqClass,
        /// Witness length.
        #[arg(short, long, default_value_t = 8)]
        k: usize,
        /// Write the best witnesses as JSON.
        #[arg(long)]
        witnesses: Option<PathBuf>,
    },
    /// Run a registry case (or `all`), writing `<id>.csv`.
    Repro {
        /// Case id, or `all`.
        #[arg(required_unless_present = "list")]
        id: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// List the registry and exit.
        #[arg(long)]
        list: bool,
    },
}

/// Pass, or a property counterexample / repro failure.
enum Status {
    Pass,
    Fail,
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Regular output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, out) {
        Ok(Status::Pass) => 0,
        Ok(Status::Fail) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<Status> {
    let g = cli.global;
    let norm_cfg = NormConfig::default().with_seed(g.seed);
    match cli.command {
        Command::Norm {
            class,
            space,
            file,
            json,
        } => {
            let s = read_sequence(&file).with_context(|| format!("reading {}", file.display()))?;
            let s = s
                .reinterpret(space)
                .context("sequence does not fit the given space")?;
            let report = class.evaluate(&s, &norm_cfg)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                writeln!(out, "{:.15e}", report.value)?;
                writeln!(
                    out,
                    "backend: {}{}",
                    report.backend,
                    if report.exact {
                        " (exact)"
                    } else {
                        " (lower bound)"
                    }
                )?;
                match &report.certificate {
                    Some(Certificate::Functional(f)) => {
                        writeln!(out, "certificate: functional {f:?}")?
                    }
                    Some(Certificate::Tuple(t)) => writeln!(out, "certificate: functionals {t:?}")?,
                    None => {}
                }
            }
            Ok(Status::Pass)
        }
        Command::Check {
            property,
            classes,
            mutant,
            json,
        } => {
            let mut cfg = SamplerConfig::default().with_seed(g.seed);
            if let Some(b) = g.budget {
                cfg = cfg.with_samples(b);
            }
            cfg.tolerance = g.tol;
            let report = check(&property, &classes, mutant, &cfg)?;
            if json {
                writeln!(out, "{}", report.to_json())?;
            } else {
                writeln!(out, "{}", report.summary())?;
            }
            Ok(if report.found() {
                Status::Fail
            } else {
                Status::Pass
            })
        }
        Command::Search {
            operator,
            inputs,
            output,
            k,
            witnesses,
        } => {
            let a = read_operator(&operator)
                .with_context(|| format!("reading {}", operator.display()))?;
            let est =
                lower_bound_search(&a, &inputs, &output, k, g.budget.unwrap_or(2000), &norm_cfg)?;
            writeln!(
                out,
                "lower bound {:.15e} ({})",
                est.value,
                if est.certified {
                    "certified"
                } else {
                    "uncertified"
                }
            )?;
            for (m, rho) in &est.trace {
                writeln!(out, "{m},{rho:.17e}")?;
            }
            if let Some(path) = witnesses {
                std::fs::write(&path, serde_json::to_string_pretty(&est.witnesses)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Status::Pass)
        }
        Command::Repro { id, out_dir, list } => {
            if list {
                for c in repro::registry() {
                    writeln!(
                        out,
                        "{:<10} {:<26} {}",
                        c.id,
                        c.expectation.to_string(),
                        c.description
                    )?;
                }
                return Ok(Status::Pass);
            }
            let id = id.unwrap_or_default();
            let opts = ReproOptions {
                seed: g.seed,
                tol: g.tol,
                budget: g.budget,
                k_max: g.kmax,
            };
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let outcomes = if id == "all" {
                repro::run_all(&opts, g.parallel)?
            } else {
                vec![repro::run_case(&id, &opts)?]
            };
            writeln!(out, "{}", opts.header())?;
            for o in &outcomes {
                repro::write_csv(o, &out_dir)?;
                writeln!(out, "{}", o.summary())?;
            }
            Ok(if outcomes.iter().all(|o| o.pass) {
                Status::Pass
            } else {
                Status::Fail
            })
        }
    }
}

fn check(
    property: &str,
    classes: &[SeqClass],
    mutant: bool,
    cfg: &SamplerConfig,
) -> Result<PropertyReport> {
    let mutants: Vec<Box<dyn SequenceNorm>>;
    let norms: Vec<&dyn SequenceNorm> = if mutant {
        let Ok(p) = property.parse::<Property>() else {
            bail!("--mutant applies to single-class properties only");
        };
        mutants = classes
            .iter()
            .map(|c| Box::new(p.mutant(c.clone())) as Box<dyn SequenceNorm>)
            .collect();
        mutants.iter().map(|m| m.as_ref()).collect()
    } else {
        classes.iter().map(|c| c as &dyn SequenceNorm).collect()
    };
    let report = match property {
        "scalar-condition" => {
            let Some((output, inputs)) = norms.split_last().filter(|(_, i)| !i.is_empty()) else {
                bail!("scalar-condition needs input classes and an output class");
            };
            check_scalar_condition(inputs, *output, cfg)?
        }
        "fin-leq" => {
            let [x, y] = norms[..] else {
                bail!("fin-leq takes exactly two classes");
            };
            fin_leq_falsify(x, y, cfg)?
        }
        "jointly-dominated" => {
            let Some((x, rest)) = norms.split_last().filter(|(_, r)| !r.is_empty()) else {
                bail!("jointly-dominated needs at least two classes");
            };
            jointly_dominated_check(rest, *x, cfg)?
        }
        name => {
            let p: Property = name.parse()?;
            let [class] = norms[..] else {
                bail!("{name} takes exactly one class");
            };
            p.check(class, cfg)?
        }
    };
    Ok(report)
}
