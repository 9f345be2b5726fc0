//! Monte Carlo checks of the asymptotic behaviour of the estimator.
//!
//! Each experiment runs independent replicates on their own ChaCha streams
//! (`stream_id(grid_index, replicate)` under the master seed). Replicates are
//! evaluated in parallel, collected in index order and reduced sequentially,
//! so reports do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    apply_weights, kernel_sum, strip_maxima, strip_maxima_prefixes, weights, EstimatorParams,
    ExponentPlan,
};
use crate::model::{sigma_theoretical, Frontier, Kernel};
use crate::sim::{replicate_rng, sample_sandwich_with, sample_uniform_with, stream_id};
use crate::stats::mean_var;

pub use crate::stats::{ks_distance, normal_cdf};

/// Below this many replicates, Monte Carlo summaries are flagged as noisy.
pub const MIN_STABLE_REPLICATES: usize = 30;

/// Smallest `n gamma^2` at which the bracketing-failure bound is checked.
pub const LEMMA2_MIN_N_GAMMA_SQ: f64 = 16.0;

/// Coupling width `gamma` between the lower and upper Poisson processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum GammaPolicy {
    Fixed(f64),
    /// `gamma = k^{-1/2}`.
    InverseSqrtStrips,
}

impl GammaPolicy {
    pub fn resolve(&self, k: usize) -> Result<f64> {
        let g = match *self {
            GammaPolicy::Fixed(g) => g,
            GammaPolicy::InverseSqrtStrips => 1.0 / (k as f64).sqrt(),
        };
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::domain("gamma", g, "0 < gamma < 1"));
        }
        Ok(g)
    }
}

/// `2 exp(-n gamma^2 / 8)`.
pub fn lemma2_bound(n: usize, gamma: f64) -> f64 {
    2.0 * (-(n as f64) * gamma * gamma / 8.0).exp()
}

fn validate_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::Empty("n grid"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parameter("n grid must be strictly increasing"));
    }
    if n_grid[0] < 2 {
        return Err(Error::parameter("n grid entries must be at least 2"));
    }
    Ok(())
}

fn validate_replicates(replicates: usize) -> Result<()> {
    if replicates == 0 {
        return Err(Error::Empty("replicates must be at least 1"));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CltConfig {
    pub frontier: Frontier,
    pub kernel: Kernel,
    pub plan: ExponentPlan,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub x: f64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltAtN {
    pub n: usize,
    pub k: usize,
    pub h: f64,
    /// `n h^{1/2} / k^{1/2}`
    pub error_scale: f64,
    pub replicates: usize,
    pub standardized_errors: Vec<f64>,
    pub mean: f64,
    pub sd: Option<f64>,
    pub ks_distance: f64,
    pub sigma_theory: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub frontier: String,
    pub kernel: String,
    pub plan: ExponentPlan,
    pub x: f64,
    pub master_seed: u64,
    pub sigma_theory: f64,
    pub n_grid: Vec<usize>,
    pub per_n: Vec<CltAtN>,
}

/// Distribution of `(n h^{1/2}/k^{1/2}) (f_hat(x) - f(x))` over i.i.d.
/// samples, compared with `N(0, sigma^2)`, `sigma = ||K||_2 * area`.
pub fn run_clt(cfg: &CltConfig) -> Result<CltReport> {
    if !cfg.plan.valid {
        return Err(Error::parameter(format!(
            "exponent plan (a = {}, b = {}, alpha = {}) violates the rate conditions",
            cfg.plan.a, cfg.plan.b, cfg.plan.alpha
        )));
    }
    validate_grid(&cfg.n_grid)?;
    validate_replicates(cfg.replicates)?;
    let truth = cfg.frontier.evaluate(cfg.x)?;
    let sigma = sigma_theoretical(&cfg.kernel, &cfg.frontier);

    let mut per_n = Vec::with_capacity(cfg.n_grid.len());
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        let params = cfg.plan.params(n, cfg.kernel)?;
        if !params.is_interior(cfg.x) {
            let (lo, hi) = params.interior_window();
            return Err(Error::parameter(format!(
                "x = {} outside the interior window [{lo}, {hi}] at n = {n}",
                cfg.x
            )));
        }
        let beta = weights(&params, cfg.x);
        let scale = params.error_scale();
        let errors: Vec<f64> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_rng(cfg.master_seed, stream_id(gi, rep));
                let sample = sample_uniform_with(&cfg.frontier, n, &mut rng);
                let u = strip_maxima(sample.points(), params.k());
                scale * (apply_weights(&beta, &u.u) - truth)
            })
            .collect();

        let (mean, var) = mean_var(&errors)?;
        let mut notes = Vec::new();
        if var.is_none() {
            notes.push("sd undefined: a single replicate".to_string());
        }
        if cfg.replicates < MIN_STABLE_REPLICATES {
            notes.push(format!(
                "only {} replicates: moments and KS distance are noisy",
                cfg.replicates
            ));
        }
        let ks = ks_distance(&errors, |e| normal_cdf(e / sigma))?;
        per_n.push(CltAtN {
            n,
            k: params.k(),
            h: params.h(),
            error_scale: scale,
            replicates: cfg.replicates,
            standardized_errors: errors,
            mean,
            sd: var.map(f64::sqrt),
            ks_distance: ks,
            sigma_theory: sigma,
            notes,
        });
    }

    Ok(CltReport {
        frontier: cfg.frontier.to_string(),
        kernel: cfg.kernel.to_string(),
        plan: cfg.plan,
        x: cfg.x,
        master_seed: cfg.master_seed,
        sigma_theory: sigma,
        n_grid: cfg.n_grid.clone(),
        per_n,
    })
}

#[derive(Debug, Clone)]
pub struct SandwichConfig {
    pub frontier: Frontier,
    pub params: EstimatorParams,
    pub gamma: GammaPolicy,
    pub replicates: usize,
    pub x: f64,
    pub master_seed: u64,
    /// Stream namespace, so several configurations under one seed stay
    /// independent.
    pub grid_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub frontier: String,
    pub kernel: String,
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    pub h: f64,
    pub x: f64,
    pub replicates: usize,
    pub master_seed: u64,
    /// Replicates where the sample is not bracketed (`N1 > n` or `N2 < n`).
    pub e_n_failures: usize,
    pub p_en_fail_hat: f64,
    /// `2 exp(-n gamma^2 / 8)`
    pub lemma2_bound: f64,
    /// `n gamma^2 >= 16`; below that the bound is not meaningful.
    pub lemma2_applicable: bool,
    /// `3 sqrt(p(1-p)/R)`
    pub lemma2_ci_slack: f64,
    pub lemma2_holds: Option<bool>,
    /// Strict violations of `f1 <= f0 <= f2`, plus of `f1 <= f_n <= f2` on
    /// bracketed replicates.
    pub ordering_violations: usize,
    /// Replicates on which `f1 <= f_n <= f2` was checked.
    pub bracket_checks: usize,
    /// Mean of `f2(x) - f1(x)`.
    pub mean_estimator_gap: f64,
    /// `n h^{1/2} / k^{1/2}` times `mean_estimator_gap`.
    pub scaled_estimator_gap: f64,
    pub notes: Vec<String>,
}

struct SandwichDraw {
    f1: f64,
    f0: f64,
    f2: f64,
    fn_: f64,
    e_n: bool,
}

/// Builds coupled triples and checks the pathwise ordering of the
/// estimators together with the frequency of bracketing failures.
pub fn run_sandwich(cfg: &SandwichConfig) -> Result<SandwichReport> {
    validate_replicates(cfg.replicates)?;
    let params = &cfg.params;
    let gamma = cfg.gamma.resolve(params.k())?;
    let (n, k) = (params.n(), params.k());
    let beta = weights(params, cfg.x);

    let draws: Vec<SandwichDraw> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| -> Result<SandwichDraw> {
            let mut rng = replicate_rng(cfg.master_seed, stream_id(cfg.grid_index, rep));
            let triple = sample_sandwich_with(&cfg.frontier, n, gamma, &mut rng)?;
            let c = triple.counts();
            let m = strip_maxima_prefixes(triple.stream(), k, &[c.n1, c.n0, c.n2, n]);
            Ok(SandwichDraw {
                f1: apply_weights(&beta, &m[0].u),
                f0: apply_weights(&beta, &m[1].u),
                f2: apply_weights(&beta, &m[2].u),
                fn_: apply_weights(&beta, &m[3].u),
                e_n: triple.e_n_holds(),
            })
        })
        .collect::<Result<_>>()?;

    let mut violations = 0;
    let mut bracket_checks = 0;
    let mut failures = 0;
    let mut gap_sum = 0.0;
    for d in &draws {
        if !(d.f1 <= d.f0 && d.f0 <= d.f2) {
            violations += 1;
        }
        if d.e_n {
            bracket_checks += 1;
            if !(d.f1 <= d.fn_ && d.fn_ <= d.f2) {
                violations += 1;
            }
        } else {
            failures += 1;
        }
        gap_sum += d.f2 - d.f1;
    }

    let r = cfg.replicates as f64;
    let p_hat = failures as f64 / r;
    let bound = lemma2_bound(n, gamma);
    let slack = 3.0 * (p_hat * (1.0 - p_hat) / r).sqrt();
    let applicable = n as f64 * gamma * gamma >= LEMMA2_MIN_N_GAMMA_SQ;
    let mean_gap = gap_sum / r;

    let mut notes = Vec::new();
    if !applicable {
        notes.push(format!(
            "n gamma^2 = {:.3} < {LEMMA2_MIN_N_GAMMA_SQ}: bracketing bound not checked",
            n as f64 * gamma * gamma
        ));
    }
    if cfg.replicates < MIN_STABLE_REPLICATES {
        notes.push(format!("only {} replicates", cfg.replicates));
    }

    Ok(SandwichReport {
        frontier: cfg.frontier.to_string(),
        kernel: params.kernel().to_string(),
        gamma,
        n,
        k,
        h: params.h(),
        x: cfg.x,
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        e_n_failures: failures,
        p_en_fail_hat: p_hat,
        lemma2_bound: bound,
        lemma2_applicable: applicable,
        lemma2_ci_slack: slack,
        lemma2_holds: applicable.then_some(p_hat <= bound + slack),
        ordering_violations: violations,
        bracket_checks,
        mean_estimator_gap: mean_gap,
        scaled_estimator_gap: params.error_scale() * mean_gap,
        notes,
    })
}

#[derive(Debug, Clone)]
pub struct GapRateConfig {
    pub frontier: Frontier,
    pub plan: ExponentPlan,
    pub gamma_policy: GammaPolicy,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateAtN {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub replicates: usize,
    /// Average of `U2_r - U1_r` over strips and replicates.
    pub mean_u_gap: f64,
    /// Standard error of `mean_u_gap` across replicates.
    pub gap_std_error: Option<f64>,
    /// `mean_u_gap * n / (k gamma)`
    pub ratio: f64,
    /// Strips with `U2 < U1`; containment makes this 0.
    pub negative_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub frontier: String,
    pub plan: ExponentPlan,
    pub gamma_policy: GammaPolicy,
    pub master_seed: u64,
    pub n_grid: Vec<usize>,
    pub per_n: Vec<RateAtN>,
    /// Largest ratio divided by smallest ratio across the grid.
    pub ratio_spread: Option<f64>,
    pub wide_variance_warning: bool,
}

/// Mean strip-maximum gap between the upper and lower Poisson processes,
/// normalized by `k gamma / n`.
pub fn run_gap_rate(cfg: &GapRateConfig) -> Result<RateReport> {
    validate_grid(&cfg.n_grid)?;
    validate_replicates(cfg.replicates)?;
    if !cfg.plan.coupling_gap_condition() {
        return Err(Error::parameter(format!(
            "plan violates n = O(k^(1+alpha)): a (1 + alpha) = {} < 1",
            cfg.plan.a * (1.0 + cfg.plan.alpha)
        )));
    }

    let mut per_n = Vec::with_capacity(cfg.n_grid.len());
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        let k = cfg.plan.strips(n);
        if k >= n {
            return Err(Error::parameter(format!("k = {k} is not below n = {n}")));
        }
        let gamma = cfg.gamma_policy.resolve(k)?;
        let per_rep: Vec<(f64, usize)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| -> Result<(f64, usize)> {
                let mut rng = replicate_rng(cfg.master_seed, stream_id(gi, rep));
                let triple = sample_sandwich_with(&cfg.frontier, n, gamma, &mut rng)?;
                let c = triple.counts();
                let m = strip_maxima_prefixes(triple.stream(), k, &[c.n1, c.n2]);
                let mut total = 0.0;
                let mut negative = 0;
                for (lo, hi) in m[0].u.iter().zip(&m[1].u) {
                    let d = hi - lo;
                    if d < 0.0 {
                        negative += 1;
                    }
                    total += d;
                }
                Ok((total / k as f64, negative))
            })
            .collect::<Result<_>>()?;

        let gaps: Vec<f64> = per_rep.iter().map(|g| g.0).collect();
        let (mean_gap, var) = mean_var(&gaps)?;
        per_n.push(RateAtN {
            n,
            k,
            gamma,
            replicates: cfg.replicates,
            mean_u_gap: mean_gap,
            gap_std_error: var.map(|v| (v / cfg.replicates as f64).sqrt()),
            ratio: mean_gap * n as f64 / (k as f64 * gamma),
            negative_gaps: per_rep.iter().map(|g| g.1).sum(),
        });
    }

    let max = per_n.iter().map(|p| p.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = per_n.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    Ok(RateReport {
        frontier: cfg.frontier.to_string(),
        plan: cfg.plan,
        gamma_policy: cfg.gamma_policy,
        master_seed: cfg.master_seed,
        n_grid: cfg.n_grid.clone(),
        per_n,
        ratio_spread: (min > 0.0).then(|| max / min),
        wide_variance_warning: cfg.replicates < MIN_STABLE_REPLICATES,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSumPoint {
    pub n: usize,
    pub k: usize,
    pub h: f64,
    /// `sum_r beta_r(x)`
    pub weight_sum: f64,
    /// `1/k sum_r K_h(x - x_r)`
    pub kernel_sum: f64,
}

/// Deterministic `sum_r beta_r(x)` along the plan.
pub fn run_weight_sum(
    kernel: &Kernel,
    plan: &ExponentPlan,
    n_grid: &[usize],
    x: f64,
) -> Result<Vec<WeightSumPoint>> {
    if !plan.valid {
        return Err(Error::parameter("weight-sum convergence needs a valid exponent plan"));
    }
    validate_grid(n_grid)?;
    n_grid
        .iter()
        .map(|&n| {
            let params = plan.params(n, *kernel)?;
            Ok(WeightSumPoint {
                n,
                k: params.k(),
                h: params.h(),
                weight_sum: weights(&params, x).iter().sum(),
                kernel_sum: kernel_sum(&params, x),
            })
        })
        .collect()
}
