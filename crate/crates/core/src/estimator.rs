//! Strip maxima, the bias-corrected kernel boundary estimator and the
//! planner for the rate conditions on `(k_n, h_n)`.
//!
//! With `k` strips `I_r = [(r-1)/k, r/k)` and strip maxima `U_r`, the
//! estimator is
//!
//! ```text
//! f_hat(x) = 1/k * sum_r K_h(x - x_r) * (U_r + 1/(n-k) * sum_s U_s)
//!          = sum_r beta_r(x) * U_r
//! beta_r(x) = K_h(x - x_r) / k + sum_s K_h(x - x_s) / (k (n - k))
//! ```
//!
//! where `x_r = (r - 1/2)/k` is the strip center. All weights are
//! nonnegative, so the estimate is monotone in the point set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Kernel;
use crate::sim::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorParams {
    n: usize,
    k: usize,
    h: f64,
    kernel: Kernel,
}

impl EstimatorParams {
    pub fn new(n: usize, k: usize, h: f64, kernel: Kernel) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::parameter(format!(
                "strip count must satisfy 0 < k < n, got k = {k}, n = {n}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain("h", h, "finite h > 0"));
        }
        Ok(EstimatorParams { n, k, h, kernel })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Center of strip `r`, 1-based.
    pub fn strip_center(&self, r: usize) -> f64 {
        (r as f64 - 0.5) / self.k as f64
    }

    /// Normalization `n h^{1/2} / k^{1/2}` of the estimation error.
    pub fn error_scale(&self) -> f64 {
        self.n as f64 * self.h.sqrt() / (self.k as f64).sqrt()
    }

    /// Evaluation window `[A h + 1/k, 1 - A h - 1/k]` on which the kernel
    /// never reaches past the unit interval.
    pub fn interior_window(&self) -> (f64, f64) {
        let margin = self.kernel.support_radius() * self.h + 1.0 / self.k as f64;
        (margin, 1.0 - margin)
    }

    pub fn is_interior(&self, x: f64) -> bool {
        let (lo, hi) = self.interior_window();
        lo <= x && x <= hi
    }
}

/// Maximum ordinate per strip; `0` for strips without points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripMaxima {
    /// `u[r - 1]` is the maximum in strip `r`.
    pub u: Vec<f64>,
    /// 0-based indices of strips that received no point.
    pub empty_strips: Vec<usize>,
}

impl StripMaxima {
    fn from_running(u: Vec<f64>, occupied: &[bool]) -> Self {
        let empty_strips = occupied
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| (!o).then_some(i))
            .collect();
        StripMaxima { u, empty_strips }
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }
}

/// 0-based strip index of abscissa `x` under `I_r = [(r-1)/k, r/k)`, with
/// `x = 1` assigned to the last strip.
///
/// `floor(x k)` can land one strip off near a boundary because of rounding,
/// so the guess is corrected against the interval endpoints `(r-1)/k` and
/// `r/k` as computed in floating point.
pub fn strip_index(x: f64, k: usize) -> usize {
    let kf = k as f64;
    let mut i = ((x * kf).floor().max(0.0) as usize).min(k - 1);
    if i > 0 && x < i as f64 / kf {
        i -= 1;
    } else if i + 1 < k && x >= (i + 1) as f64 / kf {
        i += 1;
    }
    i
}

/// Strip maxima of `points` over `k` equal strips of `[0, 1]`.
pub fn strip_maxima(points: &[Point], k: usize) -> StripMaxima {
    assert!(k >= 1, "strip count must be positive");
    let mut u = vec![0.0; k];
    let mut occupied = vec![false; k];
    for p in points {
        let i = strip_index(p.x, k);
        occupied[i] = true;
        if p.y > u[i] {
            u[i] = p.y;
        }
    }
    StripMaxima::from_running(u, &occupied)
}

/// Strip maxima of several prefixes `points[..len]` in a single pass.
/// Results are returned in the order of `prefix_lens`.
pub fn strip_maxima_prefixes(points: &[Point], k: usize, prefix_lens: &[usize]) -> Vec<StripMaxima> {
    assert!(k >= 1, "strip count must be positive");
    let mut order: Vec<usize> = (0..prefix_lens.len()).collect();
    order.sort_by_key(|&i| prefix_lens[i]);

    let mut u = vec![0.0; k];
    let mut occupied = vec![false; k];
    let mut out: Vec<Option<StripMaxima>> = vec![None; prefix_lens.len()];
    let mut consumed = 0;
    for &which in &order {
        let end = prefix_lens[which].min(points.len());
        for p in &points[consumed..end.max(consumed)] {
            let i = strip_index(p.x, k);
            occupied[i] = true;
            if p.y > u[i] {
                u[i] = p.y;
            }
        }
        consumed = consumed.max(end);
        out[which] = Some(StripMaxima::from_running(u.clone(), &occupied));
    }
    out.into_iter().map(|m| m.expect("every prefix visited")).collect()
}

/// `1/k * sum_r K_h(x - x_r)`, the Riemann sum that tends to 1.
pub fn kernel_sum(params: &EstimatorParams, x: f64) -> f64 {
    kernel_terms(params, x).iter().sum::<f64>() / params.k as f64
}

/// `n/(n-k) * 1/k * sum_r K_h(x - x_r)`, the closed form of `sum_r beta_r(x)`.
pub fn weight_sum_identity(params: &EstimatorParams, x: f64) -> f64 {
    params.n as f64 / (params.n - params.k) as f64 * kernel_sum(params, x)
}

fn kernel_terms(params: &EstimatorParams, x: f64) -> Vec<f64> {
    (1..=params.k)
        .map(|r| params.kernel.scaled_unchecked(params.h, x - params.strip_center(r)))
        .collect()
}

/// Weights `beta_r(x)`, `r = 1..k`, of the linear form `f_hat(x) = sum beta_r U_r`.
pub fn weights(params: &EstimatorParams, x: f64) -> Vec<f64> {
    let k = params.k as f64;
    let terms = kernel_terms(params, x);
    let shared = terms.iter().sum::<f64>() / (k * (params.n - params.k) as f64);
    terms.into_iter().map(|t| t / k + shared).collect()
}

/// `sum_r beta_r * u_r`.
pub(crate) fn apply_weights(beta: &[f64], u: &[f64]) -> f64 {
    beta.iter().zip(u).map(|(b, u)| b * u).sum()
}

/// Boundary estimate at `x` from strip maxima `u`.
pub fn estimate(params: &EstimatorParams, u: &StripMaxima, x: f64) -> Result<f64> {
    if u.k() != params.k {
        return Err(Error::parameter(format!(
            "strip maxima have length {}, parameters expect k = {}",
            u.k(),
            params.k
        )));
    }
    Ok(apply_weights(&weights(params, x), &u.u))
}

/// Recomputes the estimate straight from the points, sharing no code with
/// [`strip_maxima`] or [`weights`]: points are sorted by abscissa and swept
/// strip by strip against the interval endpoints, then the estimator is
/// evaluated in its bracketed form `1/k sum K_h(x - x_r)(U_r + S/(n-k))`.
pub fn estimate_oracle(points: &[Point], params: &EstimatorParams, x: f64) -> Result<f64> {
    let (n, k, h) = (params.n, params.k, params.h);
    let mut sorted: Vec<Point> = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));

    let mut maxima = Vec::with_capacity(k);
    let mut cursor = 0;
    for r in 1..=k {
        let lo = (r - 1) as f64 / k as f64;
        let hi = r as f64 / k as f64;
        let mut best = 0.0f64;
        while cursor < sorted.len() {
            let p = sorted[cursor];
            let inside = lo <= p.x && (p.x < hi || (r == k && p.x <= 1.0));
            if !inside {
                if p.x < lo {
                    return Err(Error::parameter(format!("abscissa {} outside [0, 1]", p.x)));
                }
                break;
            }
            best = best.max(p.y);
            cursor += 1;
        }
        maxima.push(best);
    }
    if cursor != sorted.len() {
        return Err(Error::parameter("abscissa outside [0, 1]"));
    }

    let total: f64 = maxima.iter().sum();
    let correction = total / (n - k) as f64;
    let mut acc = 0.0;
    for (r, m) in maxima.iter().enumerate() {
        let center = (2 * r + 1) as f64 / (2 * k) as f64;
        let t = (x - center) / h;
        acc += params.kernel.evaluate(t) / h * (m + correction);
    }
    Ok(acc / k as f64)
}

/// Outcome of the four rate conditions for the power laws `k_n = n^a`,
/// `h_n = n^{-b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanChecks {
    /// `h_n k_n -> inf`  iff  `a > b`.
    pub bandwidth_strips_diverge: bool,
    /// `n = o(k^{1/2} h^{-1/2-alpha})`  iff  `a/2 + b(1/2 + alpha) > 1`.
    pub holder_bias_negligible: bool,
    /// `n = o(k^{5/2} h^{3/2})`  iff  `5a/2 - 3b/2 > 1`.
    pub discretization_negligible: bool,
    /// `k_n = o(n / ln n)`  iff  `a < 1`.
    pub strips_sublinear: bool,
}

impl PlanChecks {
    pub fn all(&self) -> bool {
        self.bandwidth_strips_diverge
            && self.holder_bias_negligible
            && self.discretization_negligible
            && self.strips_sublinear
    }

    pub fn named(&self) -> [(&'static str, bool); 4] {
        [
            ("bandwidth_strips_diverge", self.bandwidth_strips_diverge),
            ("holder_bias_negligible", self.holder_bias_negligible),
            ("discretization_negligible", self.discretization_negligible),
            ("strips_sublinear", self.strips_sublinear),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPlan {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub checks: PlanChecks,
    pub valid: bool,
}

impl ExponentPlan {
    /// `k_n = round(n^a)`, at least 1.
    pub fn strips(&self, n: usize) -> usize {
        ((n as f64).powf(self.a).round() as usize).max(1)
    }

    /// `h_n = n^{-b}`.
    pub fn bandwidth(&self, n: usize) -> f64 {
        (n as f64).powf(-self.b)
    }

    /// `n = O(k_n^{1+alpha})`  iff  `a (1 + alpha) >= 1`.
    pub fn coupling_gap_condition(&self) -> bool {
        self.a * (1.0 + self.alpha) >= 1.0
    }

    pub fn params(&self, n: usize, kernel: Kernel) -> Result<EstimatorParams> {
        EstimatorParams::new(n, self.strips(n), self.bandwidth(n), kernel)
    }
}

/// Translates the rate conditions into inequalities on the exponents.
/// Only the exponents are checked; the little-o conditions carry no
/// constants.
pub fn plan_sequences(alpha: f64, a: f64, b: f64) -> Result<ExponentPlan> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha", alpha, "0 < alpha <= 1"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain("a", a, "a > 0"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::domain("b", b, "b > 0"));
    }
    let checks = PlanChecks {
        bandwidth_strips_diverge: a > b,
        holder_bias_negligible: a / 2.0 + b * (0.5 + alpha) > 1.0,
        discretization_negligible: 2.5 * a - 1.5 * b > 1.0,
        strips_sublinear: a < 1.0,
    };
    Ok(ExponentPlan {
        alpha,
        a,
        b,
        checks,
        valid: checks.all(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Frontier;
    use crate::sim::{rng_from_seed, sample_uniform_with};
    use proptest::prelude::*;
    use rand::Rng;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn strip_maxima_examples() {
        let m = strip_maxima(&pts(&[(0.1, 0.5), (0.3, 0.2), (0.6, 0.9)]), 2);
        assert_eq!(m.u, vec![0.5, 0.9]);
        assert!(m.empty_strips.is_empty());

        let m = strip_maxima(&[], 5);
        assert_eq!(m.u, vec![0.0; 5]);
        assert_eq!(m.empty_strips, vec![0, 1, 2, 3, 4]);

        let m = strip_maxima(&pts(&[(0.999, 0.4)]), 4);
        assert_eq!(m.u, vec![0.0, 0.0, 0.0, 0.4]);
        assert_eq!(m.empty_strips, vec![0, 1, 2]);
    }

    #[test]
    fn right_endpoint_goes_to_last_strip() {
        let m = strip_maxima(&pts(&[(1.0, 0.3), (0.0, 0.2)]), 3);
        assert_eq!(m.u, vec![0.2, 0.0, 0.3]);
    }

    #[test]
    fn strip_index_matches_interval_endpoints() {
        for k in [1usize, 3, 7, 10, 49, 1000, 3981] {
            for r in 1..=k {
                let lo = (r - 1) as f64 / k as f64;
                assert_eq!(strip_index(lo, k), r - 1, "k={k} r={r}");
                let below = f64::from_bits(lo.to_bits().saturating_sub(1));
                if r > 1 {
                    assert_eq!(strip_index(below, k), r - 2, "k={k} r={r}");
                }
            }
            assert_eq!(strip_index(1.0, k), k - 1);
        }
    }

    #[test]
    fn prefix_maxima_match_individual() {
        let f = Frontier::cosine(1.0, 0.3).unwrap();
        let s = sample_uniform_with(&f, 3000, &mut rng_from_seed(4));
        let cuts = [1200, 0, 3000, 2500, 5000];
        let all = strip_maxima_prefixes(s.points(), 37, &cuts);
        for (m, &c) in all.iter().zip(&cuts) {
            assert_eq!(*m, strip_maxima(&s.points()[..c.min(3000)], 37));
        }
    }

    #[test]
    fn params_validation() {
        let e = Kernel::epanechnikov();
        assert!(EstimatorParams::new(10, 10, 0.1, e).is_err());
        assert!(EstimatorParams::new(10, 0, 0.1, e).is_err());
        assert!(EstimatorParams::new(10, 11, 0.1, e).is_err());
        assert!(EstimatorParams::new(10, 5, 0.0, e).is_err());
        assert!(EstimatorParams::new(10, 5, f64::NAN, e).is_err());
        assert!(EstimatorParams::new(10, 5, 0.2, e).is_ok());
    }

    #[test]
    fn weights_vanish_outside_kernel_reach() {
        let p = EstimatorParams::new(100, 10, 0.05, Kernel::epanechnikov()).unwrap();
        assert!(weights(&p, 3.0).iter().all(|&w| w == 0.0));
        assert!(weights(&p, -0.5).iter().all(|&w| w == 0.0));
    }

    #[test]
    fn weight_sum_identity_example() {
        let p = EstimatorParams::new(100, 10, 0.3, Kernel::epanechnikov()).unwrap();
        let direct: f64 = weights(&p, 0.5).iter().sum();
        // recomputed independently of kernel_terms
        let mut ks = 0.0;
        for r in 1..=10 {
            let xr = (r as f64 - 0.5) / 10.0;
            let t = (0.5 - xr) / 0.3;
            if t.abs() <= 1.0 {
                ks += 0.75 * (1.0 - t * t) / 0.3;
            }
        }
        let closed = 100.0 / 90.0 * ks / 10.0;
        assert!((direct - closed).abs() < 1e-12, "{direct} vs {closed}");
        assert!(weights(&p, 0.5).iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn estimate_linear_examples() {
        let p = EstimatorParams::new(200, 20, 0.2, Kernel::biweight()).unwrap();
        let c0 = 1.7;
        let u = StripMaxima { u: vec![c0; 20], empty_strips: vec![] };
        let sum: f64 = weights(&p, 0.45).iter().sum();
        assert!((estimate(&p, &u, 0.45).unwrap() - c0 * sum).abs() < 1e-12);
        let z = StripMaxima { u: vec![0.0; 20], empty_strips: (0..20).collect() };
        assert_eq!(estimate(&p, &z, 0.45).unwrap(), 0.0);
    }

    #[test]
    fn estimate_rejects_length_mismatch() {
        let p = EstimatorParams::new(200, 20, 0.2, Kernel::biweight()).unwrap();
        let u = StripMaxima { u: vec![1.0; 19], empty_strips: vec![] };
        assert!(matches!(estimate(&p, &u, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn oracle_small_example() {
        let points = pts(&[(0.1, 0.5), (0.3, 0.2), (0.6, 0.9)]);
        let p = EstimatorParams::new(100, 2, 0.5, Kernel::epanechnikov()).unwrap();
        let via = estimate(&p, &strip_maxima(&points, 2), 0.5).unwrap();
        let oracle = estimate_oracle(&points, &p, 0.5).unwrap();
        assert!((via - oracle).abs() <= 1e-15);
        // hand value: K_h(0.25) at h=0.5 is 0.75*(1-0.25)/0.5 = 1.125 for both strips
        let expected = 0.5 * (1.125 * (0.5 + 1.4 / 98.0) + 1.125 * (0.9 + 1.4 / 98.0));
        assert!((via - expected).abs() < 1e-14);
        assert_eq!(estimate_oracle(&[], &p, 0.5).unwrap(), 0.0);
        assert_eq!(estimate(&p, &strip_maxima(&[], 2), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rejects_points_outside_unit_interval() {
        let p = EstimatorParams::new(100, 4, 0.5, Kernel::epanechnikov()).unwrap();
        assert!(estimate_oracle(&pts(&[(1.2, 0.1)]), &p, 0.5).is_err());
        assert!(estimate_oracle(&pts(&[(-0.2, 0.1)]), &p, 0.5).is_err());
    }

    #[test]
    fn bracketed_form_agrees_with_weight_form() {
        let mut rng = rng_from_seed(77);
        for _ in 0..500 {
            let k = rng.gen_range(2..60);
            let n = rng.gen_range(k + 1..2000);
            let h = rng.gen_range(0.05..0.5);
            let p = EstimatorParams::new(n, k, h, Kernel::triangular()).unwrap();
            let u: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..3.0)).collect();
            let x = rng.gen_range(0.0..1.0);
            let s: f64 = u.iter().sum();
            let bracketed = (1..=k)
                .map(|r| p.kernel().scaled_evaluate(h, x - p.strip_center(r)).unwrap() * (u[r - 1] + s / (n - k) as f64))
                .sum::<f64>()
                / k as f64;
            let m = StripMaxima { u, empty_strips: vec![] };
            assert!((estimate(&p, &m, x).unwrap() - bracketed).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_truth_table() {
        let p = plan_sequences(1.0, 0.9, 0.5).unwrap();
        assert!(p.valid && p.checks.all());
        let p = plan_sequences(1.0, 0.5, 0.5).unwrap();
        assert!(!p.valid && !p.checks.bandwidth_strips_diverge);
        let p = plan_sequences(1.0, 0.8, 0.3).unwrap();
        assert!(!p.valid && !p.checks.holder_bias_negligible);
        assert!(p.checks.bandwidth_strips_diverge && p.checks.strips_sublinear);
    }

    #[test]
    fn plan_rejects_bad_exponents() {
        assert!(plan_sequences(0.0, 0.9, 0.5).is_err());
        assert!(plan_sequences(1.1, 0.9, 0.5).is_err());
        assert!(plan_sequences(1.0, 0.0, 0.5).is_err());
        assert!(plan_sequences(1.0, 0.9, -0.5).is_err());
        assert!(!plan_sequences(1.0, 1.2, 0.5).unwrap().checks.strips_sublinear);
    }

    #[test]
    fn plan_sizes() {
        let p = plan_sequences(1.0, 0.9, 0.5).unwrap();
        assert_eq!(p.strips(10_000), 3981);
        assert_eq!(p.strips(1_000_000), 251_189);
        assert!((p.bandwidth(10_000) - 0.01).abs() < 1e-15);
        assert!(p.coupling_gap_condition());
        let q = plan_sequences(0.3, 0.7, 0.3).unwrap();
        assert!(!q.coupling_gap_condition());
    }

    proptest! {
        #[test]
        fn estimate_monotone_under_insertion(
            raw in prop::collection::vec((0.0f64..=1.0, 0.0f64..2.0), 0..80),
            extra in (0.0f64..=1.0, 0.0f64..2.0),
            k in 1usize..25,
            h in 0.05f64..0.6,
            x in 0.0f64..1.0,
        ) {
            let p = EstimatorParams::new(200, k, h, Kernel::epanechnikov()).unwrap();
            let before = pts(&raw);
            let mut after = before.clone();
            after.push(Point::new(extra.0, extra.1));
            let (mb, ma) = (strip_maxima(&before, k), strip_maxima(&after, k));
            for (b, a) in mb.u.iter().zip(&ma.u) {
                prop_assert!(a >= b);
            }
            prop_assert!(estimate(&p, &ma, x).unwrap() >= estimate(&p, &mb, x).unwrap());
        }

        #[test]
        fn weight_sum_identity_holds(n in 10usize..20_000, kfrac in 0.01f64..0.9, h in 0.01f64..0.5, x in -0.2f64..1.2) {
            let k = ((n as f64 * kfrac) as usize).clamp(1, n - 1);
            let p = EstimatorParams::new(n, k, h, Kernel::biweight()).unwrap();
            let s: f64 = weights(&p, x).iter().sum();
            let id = weight_sum_identity(&p, x);
            prop_assert!((s - id).abs() <= 1e-12 * id.max(1.0));
        }

        #[test]
        fn weights_ignore_ordinates(ys in prop::collection::vec(0.0f64..5.0, 12)) {
            let p = EstimatorParams::new(50, 12, 0.2, Kernel::triangular()).unwrap();
            let shifted: Vec<f64> = ys.iter().map(|y| y + 1.0).collect();
            let w = weights(&p, 0.4);
            let direct = estimate(&p, &StripMaxima { u: shifted.clone(), empty_strips: vec![] }, 0.4).unwrap();
            prop_assert!((direct - apply_weights(&w, &shifted)).abs() < 1e-12);
        }
    }

    #[test]
    fn maxima_bounded_by_strip_extrema() {
        let f = Frontier::cosine(1.0, 0.3).unwrap();
        let s = sample_uniform_with(&f, 20_000, &mut rng_from_seed(10));
        let k = 50;
        let m = strip_maxima(s.points(), k);
        for r in 1..=k {
            let (_, top) = f.strip_extrema(k, r).unwrap();
            assert!(m.u[r - 1] <= top);
        }
    }
}
