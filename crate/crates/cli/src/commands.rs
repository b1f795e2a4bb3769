//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use tmfe::base::seeded;
use tmfe::complexity::{estimate_lipschitz, i0_bound, n0_bound, t0_bound, BoundInputs, DForm, LipschitzConstants, T0Mode};
use tmfe::envs::{ordered_pairs, verify_sc};
use tmfe::solvers::{run, tbr_run, Algorithm, SolverConfig};
use tmfe::tq::LearningRate;
use tmfe::{GameModel, MeanField};

use crate::config::{Config, Reference};
use crate::output::{summary_row, write_aggregate, write_pairwise, write_summary, write_trace, RunOutcome};

/// Shared command-line context.
pub struct Session {
    pub config: Config,
    pub quiet: bool,
}

impl Session {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn warn(&self, line: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("warning: {}", line.as_ref());
        }
    }
}

/// The reference field, solved by T-BR with the configured trembling
/// probability and default budgets.
fn reference(ctx: &Session, cfg: &Config, model: &dyn GameModel) -> Result<Option<MeanField>> {
    if cfg.output.reference == Reference::None {
        return Ok(None);
    }
    let res = tbr_run(model, &SolverConfig { epsilon: cfg.solver.epsilon, ..Default::default() })?;
    if !res.converged {
        ctx.warn("reference T-BR run did not converge; using its last field");
    }
    Ok(Some(res.final_field))
}

fn timed_run(algorithm: Algorithm, model: &dyn GameModel, solver: &SolverConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let result = run(algorithm, model, solver)?;
    Ok(RunOutcome { seed: solver.seed, result, wall_ms: start.elapsed().as_millis() })
}

fn trace_path(dir: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    dir.join(format!("trace_{}_seed{seed}.csv", algorithm.name()))
}

/// One seeded run of `algorithm`: a trace CSV and a one-line summary CSV.
pub fn single(ctx: &Session, algorithm: Algorithm) -> Result<()> {
    let cfg = &ctx.config;
    let model = cfg.game.build()?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let solver = SolverConfig { reference: reference(ctx, cfg, model.as_ref())?, ..cfg.solver.clone() };
    let outcome = timed_run(algorithm, model.as_ref(), &solver)?;
    for w in &outcome.result.warnings {
        ctx.warn(w);
    }
    if cfg.output.traces {
        write_trace(&trace_path(dir, algorithm, outcome.seed), &outcome.result, outcome.seed)?;
    }
    write_summary(&dir.join(format!("summary_{}_seed{}.csv", algorithm.name(), outcome.seed)), std::slice::from_ref(&outcome))?;
    ctx.say(summary_row(&outcome).join(","));
    Ok(())
}

/// Grid points as (directory label, overrides).
fn grid_points(cfg: &Config) -> Vec<(String, Vec<(String, toml::Value)>)> {
    let mut points = vec![(String::new(), Vec::new())];
    for (key, values) in &cfg.sweep.grid {
        let short = key.rsplit('.').next().unwrap_or(key);
        let mut next = Vec::new();
        for (label, sets) in &points {
            for v in values {
                let text = match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let label = if label.is_empty() { format!("{short}={text}") } else { format!("{label}_{short}={text}") };
                let mut sets = sets.clone();
                sets.push((key.clone(), v.clone()));
                next.push((label, sets));
            }
        }
        points = next;
    }
    points
}

/// Every algorithm of `[sweep]` over `seeds` runs at each grid point.
pub fn sweep(ctx: &Session) -> Result<()> {
    let base = &ctx.config;
    for (label, sets) in grid_points(base) {
        let mut cfg = base.clone();
        for (key, value) in &sets {
            cfg = cfg.with(key, value.clone()).with_context(|| format!("grid point {label}"))?;
        }
        let dir = if label.is_empty() { cfg.output.dir.clone() } else { cfg.output.dir.join(&label) };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let model = cfg.game.build()?;
        let reference = reference(ctx, &cfg, model.as_ref())?;
        let jobs: Vec<(Algorithm, u64)> = cfg.sweep.algorithms.iter().flat_map(|&a| (0..cfg.sweep.seeds).map(move |r| (a, r))).collect();
        let runs: Vec<RunOutcome> = jobs
            .par_iter()
            .map(|&(algorithm, r)| {
                let solver = SolverConfig { seed: cfg.solver.seed + r, reference: reference.clone(), ..cfg.solver.clone() };
                timed_run(algorithm, model.as_ref(), &solver)
            })
            .collect::<Result<_>>()?;
        for outcome in &runs {
            for w in &outcome.result.warnings {
                ctx.warn(format!("{} seed {}: {w}", outcome.result.algorithm.name(), outcome.seed));
            }
            if cfg.output.traces {
                write_trace(&trace_path(&dir, outcome.result.algorithm, outcome.seed), &outcome.result, outcome.seed)?;
            }
        }
        write_summary(&dir.join("summary.csv"), &runs)?;
        write_aggregate(&dir.join("aggregate.csv"), &runs)?;
        write_pairwise(&dir.join("pairwise.csv"), &runs)?;
        ctx.say(format!("{}: {} runs written to {}", if label.is_empty() { "sweep" } else { &label }, runs.len(), dir.display()));
    }
    Ok(())
}

/// Checks the complementarity clauses; returns whether all of them hold.
pub fn verify(ctx: &Session, pairs: usize, tol: f64) -> Result<bool> {
    let cfg = &ctx.config;
    let model = cfg.game.build()?;
    let z_pairs = ordered_pairs(model.num_states(), pairs, &mut seeded(cfg.solver.seed));
    let report = verify_sc(model.as_ref(), &z_pairs, tol)?;
    ctx.say(report.to_string().trim_end());
    Ok(report.all_passed())
}

pub struct BoundArgs {
    pub pairs: usize,
    pub constants: Option<(f64, f64, f64)>,
    pub eps_bar: f64,
    pub delta_bar: f64,
    pub k0: u32,
    pub covering: f64,
    pub d_form: DForm,
}

/// Prints the three sample-complexity bounds (up to absolute constants) and
/// writes them to `bounds.csv`.
pub fn bounds(ctx: &Session, args: &BoundArgs) -> Result<()> {
    let cfg = &ctx.config;
    let model = cfg.game.build()?;
    let eps = cfg.solver.epsilon;
    let c = match args.constants {
        Some((c1, c2, c3)) => LipschitzConstants::new(c1, c2, c3),
        None => estimate_lipschitz(model.as_ref(), eps, args.pairs, &mut seeded(cfg.solver.seed))?.constants,
    };
    let w = match cfg.solver.rate {
        LearningRate::Polynomial { w } => w,
        _ => BoundInputs::default().w,
    };
    let inp = BoundInputs {
        eps_bar: args.eps_bar,
        delta_bar: args.delta_bar,
        k0: args.k0,
        w,
        num_states: model.num_states(),
        num_actions: model.num_actions(),
        gamma: model.gamma(),
        d_form: args.d_form,
    };
    let t0 = t0_bound(&c, &inp, args.covering, T0Mode::General)?;
    let i0 = i0_bound(&c, &inp, cfg.game.zeta(), eps)?;
    let n0 = n0_bound(&c, &inp)?;
    let rows = [
        ("c1", c.c1, c.c1.log10()),
        ("c2", c.c2, c.c2.log10()),
        ("c3", c.c3, c.c3.log10()),
        ("d", c.d(inp.gamma, inp.d_form), c.d(inp.gamma, inp.d_form).log10()),
        ("t0", t0.value, t0.log10),
        ("i0", i0.value, i0.log10),
        ("n0", n0.value, n0.log10),
    ];
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let mut out = csv::Writer::from_path(dir.join("bounds.csv"))?;
    out.write_record(["quantity", "value", "log10"])?;
    ctx.say("bounds up to absolute constants");
    for (name, value, log10) in rows {
        out.write_record([name.to_string(), format!("{value:e}"), format!("{log10:.6}")])?;
        ctx.say(format!("{name:>3} = {value:.6e} (log10 {log10:.3})"));
    }
    out.flush()?;
    Ok(())
}
