//! CSV artifacts: per-run traces, run summaries, cross-seed aggregates and
//! pairwise final-field distances.

use std::path::Path;

use anyhow::Result;
use tmfe::solvers::SolverResult;
use tmfe::MeanField;

pub const SUMMARY_HEADER: [&str; 7] = ["algorithm", "seed", "converged", "final_mean_state", "final_l1_to_ref", "total_samples", "wall_ms"];
pub const AGGREGATE_HEADER: [&str; 6] = ["k", "algorithm", "mean_of_mean_state", "std_of_mean_state", "mean_l1_to_ref", "std_l1_to_ref"];
pub const PAIRWISE_HEADER: [&str; 4] = ["algorithm_a", "algorithm_b", "l1_of_mean_fields", "mean_l1_per_seed"];

/// Formats `x` rounded to 12 significant digits, in shortest form.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

pub fn trace_header(num_states: usize) -> Vec<String> {
    let mut h: Vec<String> = ["k", "algorithm", "seed", "mean_state", "l1_step", "l1_to_ref", "samples"].iter().map(|s| s.to_string()).collect();
    h.extend((0..num_states).map(|s| format!("z_{s}")));
    h
}

pub fn write_trace(path: &Path, result: &SolverResult, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trace_header(result.final_field.len()))?;
    for r in &result.trace {
        let mut row = vec![
            r.k.to_string(),
            result.algorithm.name().to_string(),
            seed.to_string(),
            sig12(r.mean_state),
            sig12(r.l1_to_previous),
            opt(r.l1_to_reference),
            r.samples.to_string(),
        ];
        row.extend(r.mean_field.probs().iter().map(|&p| sig12(p)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A finished run with its seed and wall-clock time.
pub struct RunOutcome {
    pub seed: u64,
    pub result: SolverResult,
    pub wall_ms: u128,
}

pub fn summary_row(run: &RunOutcome) -> Vec<String> {
    let r = &run.result;
    vec![
        r.algorithm.name().to_string(),
        run.seed.to_string(),
        r.converged.to_string(),
        sig12(r.final_mean_state()),
        opt(r.final_l1_to_reference()),
        r.samples_used.to_string(),
        run.wall_ms.to_string(),
    ]
}

pub fn write_summary(path: &Path, runs: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for run in runs {
        w.write_record(summary_row(run))?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and standard deviation; the deviation is 0 for one value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-iteration statistics across the runs of each algorithm. A run that
/// stopped early contributes its last record to every later `k`.
pub fn write_aggregate(path: &Path, runs: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    let mut algorithms: Vec<_> = runs.iter().map(|r| r.result.algorithm).collect();
    algorithms.dedup();
    for algorithm in algorithms {
        let group: Vec<&RunOutcome> = runs.iter().filter(|r| r.result.algorithm == algorithm).collect();
        let horizon = group.iter().map(|r| r.result.trace.len()).max().unwrap_or(0);
        for k in 0..horizon {
            let records: Vec<_> = group.iter().map(|r| &r.result.trace[k.min(r.result.trace.len() - 1)]).collect();
            let (m, s) = mean_std(&records.iter().map(|r| r.mean_state).collect::<Vec<_>>());
            let refs: Option<Vec<f64>> = records.iter().map(|r| r.l1_to_reference).collect();
            let (rm, rs) = match refs {
                Some(v) => {
                    let (a, b) = mean_std(&v);
                    (sig12(a), sig12(b))
                }
                None => (String::new(), String::new()),
            };
            w.write_record([k.to_string(), algorithm.name().to_string(), sig12(m), sig12(s), rm, rs])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Average of several fields on one state space.
pub fn average_field(fields: &[&MeanField]) -> Result<MeanField> {
    let mut acc = vec![0.0; fields[0].len()];
    for z in fields {
        for (a, p) in acc.iter_mut().zip(z.probs()) {
            *a += p;
        }
    }
    Ok(MeanField::from_weights(acc)?)
}

/// For every pair of algorithms: the L1 distance between their seed-averaged
/// final fields and the mean of per-seed final-field distances.
pub fn write_pairwise(path: &Path, runs: &[RunOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PAIRWISE_HEADER)?;
    let mut algorithms: Vec<_> = runs.iter().map(|r| r.result.algorithm).collect();
    algorithms.dedup();
    let finals = |a| -> Vec<(u64, &MeanField)> { runs.iter().filter(|r| r.result.algorithm == a).map(|r| (r.seed, &r.result.final_field)).collect() };
    for (i, &a) in algorithms.iter().enumerate() {
        for &b in &algorithms[i + 1..] {
            let (fa, fb) = (finals(a), finals(b));
            let avg_a = average_field(&fa.iter().map(|x| x.1).collect::<Vec<_>>())?;
            let avg_b = average_field(&fb.iter().map(|x| x.1).collect::<Vec<_>>())?;
            let mut per_seed = Vec::new();
            for (seed, za) in &fa {
                if let Some((_, zb)) = fb.iter().find(|(s, _)| s == seed) {
                    per_seed.push(za.l1_distance(zb)?);
                }
            }
            w.write_record([a.name().to_string(), b.name().to_string(), sig12(avg_a.l1_distance(&avg_b)?), sig12(mean_std(&per_seed).0)])?;
        }
    }
    w.flush()?;
    Ok(())
}
