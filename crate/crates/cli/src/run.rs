//! Dispatch of a validated [`RunConfig`] to the library and writing of its
//! artifacts.

use std::path::{Path, PathBuf};

use frontier_core::estimator::{estimate, strip_maxima};
use frontier_core::experiments::{run_clt, run_gap_rate, run_sandwich, run_weight_sum};
use frontier_core::report::{self, format_f64, Table};
use frontier_core::sim::{sample_poisson_process, sample_uniform};
use frontier_core::{Result, SampleSet};
use serde::Serialize;

use crate::config::{EstimateJob, Format, Job, Process, RunConfig, SampleJob};

#[derive(Debug, Serialize)]
struct EstimatePoint {
    x: f64,
    estimate: f64,
    truth: f64,
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    frontier: String,
    kernel: String,
    n: usize,
    k: usize,
    h: f64,
    seed: u64,
    empty_strips: usize,
    points: Vec<EstimatePoint>,
}

#[derive(Debug, Serialize)]
struct SampleOutput<'a> {
    frontier: String,
    seed: u64,
    #[serde(flatten)]
    sample: &'a SampleSet,
}

fn write(format: Format, out: &Path, json: &impl Serialize, table: impl FnOnce() -> Table) -> Result<()> {
    match format {
        Format::Json => report::write_json(out, json),
        Format::Csv => table().write_csv(out),
    }
}

/// `dir/stem_summary.csv` next to `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}_summary.csv"))
}

fn list(values: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", values.into_iter().collect::<Vec<_>>().join(","))
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

/// Runs the job, writes its artifacts and returns the one-line summary.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    let out = cfg.out.as_path();
    let detail = match &cfg.job {
        Job::Plan(plan) => {
            write(cfg.format, out, plan, || report::plan_table(plan))?;
            let failed: Vec<&str> = plan
                .checks
                .named()
                .iter()
                .filter(|(_, ok)| !ok)
                .map(|(name, _)| *name)
                .collect();
            format!(
                "alpha={} a={} b={} valid={}{}",
                plan.alpha,
                plan.a,
                plan.b,
                plan.valid,
                if failed.is_empty() { String::new() } else { format!(" failed={}", failed.join(",")) }
            )
        }
        Job::Sample(job) => run_sample(job, cfg.format, out)?,
        Job::Estimate(job) => run_estimate(job, cfg.format, out)?,
        Job::Clt(c) => {
            let rep = run_clt(c)?;
            match cfg.format {
                Format::Json => report::write_json(out, &rep)?,
                Format::Csv => {
                    report::clt_errors_table(&rep).write_csv(out)?;
                    report::clt_summary_table(&rep).write_csv(&summary_path(out))?;
                }
            }
            format!(
                "sigma={} n={} ks={} mean={}",
                short(rep.sigma_theory),
                list(rep.per_n.iter().map(|p| p.n.to_string())),
                list(rep.per_n.iter().map(|p| short(p.ks_distance))),
                list(rep.per_n.iter().map(|p| short(p.mean))),
            )
        }
        Job::Sandwich(c) => {
            let rep = run_sandwich(c)?;
            write(cfg.format, out, &rep, || report::sandwich_table(&rep))?;
            format!(
                "n={} gamma={} ordering_violations={} p_en_fail={} bound={}",
                rep.n,
                short(rep.gamma),
                rep.ordering_violations,
                short(rep.p_en_fail_hat),
                short(rep.lemma2_bound)
            )
        }
        Job::GapRate(c) => {
            let rep = run_gap_rate(c)?;
            write(cfg.format, out, &rep, || report::rate_table(&rep))?;
            format!(
                "n={} ratio={}",
                list(rep.per_n.iter().map(|p| p.n.to_string())),
                list(rep.per_n.iter().map(|p| short(p.ratio)))
            )
        }
        Job::WeightSum(job) => {
            let pts = run_weight_sum(&job.kernel, &job.plan, &job.n_grid, job.x)?;
            write(cfg.format, out, &pts, || report::weight_sum_table(&pts))?;
            format!(
                "x={} n={} weight_sum={}",
                job.x,
                list(pts.iter().map(|p| p.n.to_string())),
                list(pts.iter().map(|p| format!("{:.6}", p.weight_sum)))
            )
        }
    };
    Ok(format!("{}: {detail} -> {}", cfg.command.name(), out.display()))
}

fn run_sample(job: &SampleJob, format: Format, out: &Path) -> Result<String> {
    let set = match job.process {
        Process::Uniform => sample_uniform(&job.frontier, job.n, job.seed)?,
        Process::Poisson => sample_poisson_process(&job.frontier, job.n, job.seed)?,
    };
    let payload = SampleOutput {
        frontier: job.frontier.to_string(),
        seed: job.seed,
        sample: &set,
    };
    write(format, out, &payload, || report::points_table(set.points()))?;
    Ok(format!("frontier={} points={}", job.frontier, set.len()))
}

fn run_estimate(job: &EstimateJob, format: Format, out: &Path) -> Result<String> {
    let p = &job.params;
    let sample = sample_uniform(&job.frontier, p.n(), job.seed)?;
    let maxima = strip_maxima(sample.points(), p.k());
    let points = job
        .xs
        .iter()
        .map(|&x| {
            Ok(EstimatePoint {
                x,
                estimate: estimate(p, &maxima, x)?,
                truth: job.frontier.evaluate(x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let payload = EstimateOutput {
        frontier: job.frontier.to_string(),
        kernel: p.kernel().to_string(),
        n: p.n(),
        k: p.k(),
        h: p.h(),
        seed: job.seed,
        empty_strips: maxima.empty_strips.len(),
        points,
    };
    write(format, out, &payload, || {
        let mut t = Table::new(["x", "estimate", "truth"]);
        for e in &payload.points {
            t.push(vec![format_f64(e.x), format_f64(e.estimate), format_f64(e.truth)]);
        }
        t
    })?;
    Ok(format!(
        "n={} k={} h={} estimate={}",
        p.n(),
        p.k(),
        short(p.h()),
        list(payload.points.iter().map(|e| format!("{:.6}", e.estimate)))
    ))
}
