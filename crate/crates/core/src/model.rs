//! Frontier functions, smoothing kernels and the constants derived from them.
//!
//! Every frontier family has closed-form area and exact extrema on any
//! subinterval, so `c = 1 / area`, `sup f` and the strip extrema used by the
//! experiments carry no discretization error.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontierFamily {
    /// `f(x) = level`
    Constant,
    /// `f(x) = intercept + slope * x`
    Affine,
    /// `f(x) = base + amplitude * cos(2 pi x)`
    Cosine,
    /// Linear interpolation of heights at equally spaced knots `0, 1/m, ..., 1`.
    PiecewiseLinear,
}

impl FrontierFamily {
    pub fn name(self) -> &'static str {
        match self {
            FrontierFamily::Constant => "constant",
            FrontierFamily::Affine => "affine",
            FrontierFamily::Cosine => "cosine",
            FrontierFamily::PiecewiseLinear => "piecewise-linear",
        }
    }
}

impl fmt::Display for FrontierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upper boundary `f` of the support set `D`.
///
/// Immutable once built. `alpha` and `lip_const` describe a Hölder bound
/// `|f(x) - f(y)| <= lip_const * |x - y|^alpha` on `[0, 1]`. All families are
/// Lipschitz, so `alpha = 1` by default; a smaller exponent may be declared
/// with [`Frontier::with_alpha`] because `|x - y| <= |x - y|^alpha` on the unit
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    family: FrontierFamily,
    params: Vec<f64>,
    alpha: f64,
    lip_const: f64,
    min_height: f64,
    max_height: f64,
    area: f64,
}

impl Frontier {
    pub fn new(family: FrontierFamily, params: Vec<f64>) -> Result<Self> {
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::parameter(format!(
                "{family} frontier parameter {bad} is not finite"
            )));
        }
        let expect_len = |len: usize| -> Result<()> {
            if params.len() != len {
                return Err(Error::parameter(format!(
                    "{family} frontier takes {len} parameter(s), got {}",
                    params.len()
                )));
            }
            Ok(())
        };

        let (lip_const, min_height, max_height, area) = match family {
            FrontierFamily::Constant => {
                expect_len(1)?;
                let level = params[0];
                (0.0, level, level, level)
            }
            FrontierFamily::Affine => {
                expect_len(2)?;
                let (c0, c1) = (params[0], params[1]);
                let (lo, hi) = if c1 >= 0.0 { (c0, c0 + c1) } else { (c0 + c1, c0) };
                (c1.abs(), lo, hi, c0 + 0.5 * c1)
            }
            FrontierFamily::Cosine => {
                expect_len(2)?;
                let (base, amp) = (params[0], params[1]);
                (2.0 * PI * amp.abs(), base - amp.abs(), base + amp.abs(), base)
            }
            FrontierFamily::PiecewiseLinear => {
                if params.len() < 2 {
                    return Err(Error::parameter(
                        "piecewise-linear frontier needs at least two knot heights",
                    ));
                }
                let segments = (params.len() - 1) as f64;
                let lip = params
                    .windows(2)
                    .map(|w| (w[1] - w[0]).abs() * segments)
                    .fold(0.0, f64::max);
                let lo = params.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = params.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let area = params.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / segments;
                (lip, lo, hi, area)
            }
        };

        if min_height <= 0.0 {
            return Err(Error::parameter(format!(
                "{family} frontier must be strictly positive on [0,1], minimum is {min_height}"
            )));
        }

        Ok(Frontier {
            family,
            params,
            alpha: 1.0,
            lip_const,
            min_height,
            max_height,
            area,
        })
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::new(FrontierFamily::Constant, vec![level])
    }

    pub fn affine(intercept: f64, slope: f64) -> Result<Self> {
        Self::new(FrontierFamily::Affine, vec![intercept, slope])
    }

    pub fn cosine(base: f64, amplitude: f64) -> Result<Self> {
        Self::new(FrontierFamily::Cosine, vec![base, amplitude])
    }

    pub fn piecewise_linear(heights: Vec<f64>) -> Result<Self> {
        Self::new(FrontierFamily::PiecewiseLinear, heights)
    }

    /// Declares a Hölder exponent `alpha` in `(0, 1]`. The Lipschitz constant
    /// is kept, which remains a valid Hölder constant on `[0, 1]`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain("alpha", alpha, "0 < alpha <= 1"));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn family(&self) -> FrontierFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lip_const(&self) -> f64 {
        self.lip_const
    }

    pub fn min_height(&self) -> f64 {
        self.min_height
    }

    /// `M = sup f`.
    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    /// Lebesgue measure of `D`, i.e. the integral of `f` over `[0, 1]`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Intensity constant `c = 1 / area`.
    pub fn c(&self) -> f64 {
        1.0 / self.area
    }

    /// `f(x)`, rejecting `x` outside `[0, 1]`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain("x", x, "0 <= x <= 1"));
        }
        Ok(self.value_at(x))
    }

    /// `f(x)` without the domain check. Callers guarantee `x` in `[0, 1]`.
    pub(crate) fn value_at(&self, x: f64) -> f64 {
        let p = &self.params;
        match self.family {
            FrontierFamily::Constant => p[0],
            FrontierFamily::Affine => p[0] + p[1] * x,
            FrontierFamily::Cosine => p[0] + p[1] * (2.0 * PI * x).cos(),
            FrontierFamily::PiecewiseLinear => {
                let segments = p.len() - 1;
                let pos = x * segments as f64;
                let i = (pos.floor() as usize).min(segments - 1);
                let t = pos - i as f64;
                p[i] + t * (p[i + 1] - p[i])
            }
        }
    }

    /// `(min f, max f)` over the closure of strip `r` (1-based) among `k`
    /// equal strips of `[0, 1]`.
    ///
    /// Exact: the candidates are the strip endpoints plus every interior
    /// critical point of the family (the trough of the cosine, the knots of
    /// a piecewise-linear frontier).
    pub fn strip_extrema(&self, k: usize, r: usize) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::parameter("number of strips must be positive"));
        }
        if r == 0 || r > k {
            return Err(Error::domain("r", r as f64, "1 <= r <= k"));
        }
        let lo = (r - 1) as f64 / k as f64;
        let hi = r as f64 / k as f64;

        let mut candidates = vec![lo, hi];
        match self.family {
            FrontierFamily::Cosine => candidates.push(0.5),
            FrontierFamily::PiecewiseLinear => {
                let segments = self.params.len() - 1;
                candidates.extend((1..segments).map(|j| j as f64 / segments as f64));
            }
            FrontierFamily::Constant | FrontierFamily::Affine => {}
        }

        let (m, big_m) = candidates
            .into_iter()
            .filter(|&t| t >= lo && t <= hi)
            .map(|t| self.value_at(t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(m, mm), v| {
                (m.min(v), mm.max(v))
            });
        Ok((m, big_m))
    }
}

impl fmt::Display for Frontier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.family)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        if self.alpha != 1.0 {
            write!(f, "@{}", self.alpha)?;
        }
        Ok(())
    }
}

/// Parses `family:p1,p2,...[@alpha]`, e.g. `cosine:1.0,0.3` or
/// `piecewise-linear:1,1.4,0.9@0.5`.
impl FromStr for Frontier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            what: "frontier",
            input: s.to_string(),
            reason,
        };
        let (body, alpha) = match s.split_once('@') {
            Some((body, a)) => {
                let a = a
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad alpha: {e}")))?;
                (body, Some(a))
            }
            None => (s, None),
        };
        let (name, args) = body
            .split_once(':')
            .ok_or_else(|| parse_err("expected family:param1,param2,...".into()))?;
        let family = match name.trim().to_ascii_lowercase().as_str() {
            "constant" | "const" => FrontierFamily::Constant,
            "affine" | "linear" => FrontierFamily::Affine,
            "cosine" | "cos" => FrontierFamily::Cosine,
            "piecewise-linear" | "piecewise_linear" | "pwl" => FrontierFamily::PiecewiseLinear,
            other => return Err(parse_err(format!("unknown frontier family {other:?}"))),
        };
        let params = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(format!("bad parameter: {e}")))?;
        let frontier = Frontier::new(family, params)?;
        match alpha {
            Some(a) => frontier.with_alpha(a),
            None => Ok(frontier),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `3/4 (1 - t^2)` on `[-1, 1]`
    #[default]
    Epanechnikov,
    /// `15/16 (1 - t^2)^2` on `[-1, 1]`
    Biweight,
    /// `1 - |t|` on `[-1, 1]`
    Triangular,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Epanechnikov,
        KernelFamily::Biweight,
        KernelFamily::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Biweight => "biweight",
            KernelFamily::Triangular => "triangular",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Compactly supported, bounded probability density used for smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel {
    family: KernelFamily,
    support_radius: f64,
    l2_norm_sq: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::new(KernelFamily::default())
    }
}

impl Kernel {
    pub fn new(family: KernelFamily) -> Self {
        let l2_norm_sq = match family {
            KernelFamily::Epanechnikov => 3.0 / 5.0,
            KernelFamily::Biweight => 5.0 / 7.0,
            KernelFamily::Triangular => 2.0 / 3.0,
        };
        Kernel {
            family,
            support_radius: 1.0,
            l2_norm_sq,
        }
    }

    pub fn epanechnikov() -> Self {
        Self::new(KernelFamily::Epanechnikov)
    }

    pub fn biweight() -> Self {
        Self::new(KernelFamily::Biweight)
    }

    pub fn triangular() -> Self {
        Self::new(KernelFamily::Triangular)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// `A` such that `K` vanishes outside `[-A, A]`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `integral of K^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq.sqrt()
    }

    /// Supremum of `|K'|` where the derivative exists.
    pub fn derivative_bound(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 1.5,
            // max of 15/4 t (1 - t^2), attained at t = 1/sqrt(3)
            KernelFamily::Biweight => 15.0 / (6.0 * 3f64.sqrt()),
            KernelFamily::Triangular => 1.0,
        }
    }

    /// Points in `(-A, A)` where `K` is not twice differentiable, besides
    /// the support edges.
    pub fn interior_kinks(&self) -> &'static [f64] {
        match self.family {
            KernelFamily::Triangular => &[0.0],
            KernelFamily::Epanechnikov | KernelFamily::Biweight => &[],
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let a = t.abs();
        if a > self.support_radius {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - a * a),
            KernelFamily::Biweight => {
                let s = 1.0 - a * a;
                0.9375 * s * s
            }
            KernelFamily::Triangular => 1.0 - a,
        }
    }

    /// `K_h(t) = K(t / h) / h`.
    pub fn scaled_evaluate(&self, h: f64, t: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::domain("h", h, "h > 0"));
        }
        Ok(self.scaled_unchecked(h, t))
    }

    #[inline]
    pub(crate) fn scaled_unchecked(&self, h: f64, t: f64) -> f64 {
        self.evaluate(t / h) / h
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let family = match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => KernelFamily::Epanechnikov,
            "biweight" | "quartic" => KernelFamily::Biweight,
            "triangular" | "triangle" => KernelFamily::Triangular,
            other => {
                return Err(Error::Parse {
                    what: "kernel",
                    input: s.to_string(),
                    reason: format!("unknown kernel family {other:?}"),
                })
            }
        };
        Ok(Kernel::new(family))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.family.fmt(f)
    }
}

/// Limiting standard deviation of the standardized estimation error:
/// `||K||_2 / c = ||K||_2 * area`.
pub fn sigma_theoretical(kernel: &Kernel, frontier: &Frontier) -> f64 {
    kernel.l2_norm() * frontier.area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    fn catalogue() -> Vec<Frontier> {
        vec![
            Frontier::constant(1.0).unwrap(),
            Frontier::constant(2.5).unwrap(),
            Frontier::affine(0.5, 1.0).unwrap(),
            Frontier::affine(1.5, -1.0).unwrap(),
            Frontier::cosine(1.0, 0.3).unwrap(),
            Frontier::cosine(2.0, -0.5).unwrap(),
            Frontier::piecewise_linear(vec![1.0, 1.5, 0.8]).unwrap(),
            Frontier::piecewise_linear(vec![0.4, 2.0, 1.1, 1.1, 0.3]).unwrap(),
        ]
    }

    #[test]
    fn frontier_eval_examples() {
        assert_eq!(Frontier::constant(1.0).unwrap().evaluate(0.37).unwrap(), 1.0);
        assert_eq!(Frontier::cosine(1.0, 0.3).unwrap().evaluate(0.0).unwrap(), 1.3);
        assert_eq!(Frontier::affine(0.5, 1.0).unwrap().evaluate(1.0).unwrap(), 1.5);
    }

    #[test]
    fn frontier_eval_rejects_outside_unit_interval() {
        let f = Frontier::constant(1.0).unwrap();
        assert!(matches!(f.evaluate(-0.01), Err(Error::Domain { .. })));
        assert!(matches!(f.evaluate(1.5), Err(Error::Domain { .. })));
        assert!(f.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn rejects_non_positive_frontiers() {
        assert!(Frontier::constant(0.0).is_err());
        assert!(Frontier::affine(0.5, -0.6).is_err());
        assert!(Frontier::cosine(0.3, 0.3).is_err());
        assert!(Frontier::piecewise_linear(vec![1.0, -0.1]).is_err());
        assert!(Frontier::piecewise_linear(vec![1.0]).is_err());
        assert!(Frontier::new(FrontierFamily::Affine, vec![1.0]).is_err());
    }

    #[test]
    fn strip_extrema_examples() {
        let c = Frontier::constant(1.0).unwrap();
        assert_eq!(c.strip_extrema(10, 3).unwrap(), (1.0, 1.0));
        let a = Frontier::affine(0.5, 1.0).unwrap();
        assert_eq!(a.strip_extrema(4, 1).unwrap(), (0.5, 0.75));
        let cos = Frontier::cosine(1.0, 0.3).unwrap();
        let (m, mm) = cos.strip_extrema(2, 1).unwrap();
        assert!((m - 0.7).abs() < 1e-15 && (mm - 1.3).abs() < 1e-15, "{m} {mm}");
    }

    #[test]
    fn strip_extrema_rejects_bad_index() {
        let c = Frontier::constant(1.0).unwrap();
        assert!(c.strip_extrema(5, 0).is_err());
        assert!(c.strip_extrema(5, 6).is_err());
        assert!(c.strip_extrema(0, 1).is_err());
    }

    #[test]
    fn heights_within_declared_bounds_on_grid() {
        for f in catalogue() {
            for i in 0..=10_000 {
                let v = f.value_at(i as f64 / 10_000.0);
                assert!(v >= f.min_height() && v <= f.max_height(), "{f} at {i}: {v}");
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_bound_holds_on_grid() {
        for f in catalogue() {
            let f = f.with_alpha(0.7).unwrap();
            let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
            for &x in &grid {
                for &y in &grid {
                    let lhs = (f.value_at(x) - f.value_at(y)).abs();
                    let rhs = f.lip_const() * (x - y).abs().powf(f.alpha());
                    assert!(lhs <= rhs + 1e-12, "{f}: x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn area_matches_quadrature() {
        for f in catalogue() {
            let mut q = 0.0;
            // split at knots so Simpson sees smooth pieces
            let breaks: Vec<f64> = match f.family() {
                FrontierFamily::PiecewiseLinear => {
                    let m = f.params().len() - 1;
                    (0..=m).map(|j| j as f64 / m as f64).collect()
                }
                _ => vec![0.0, 1.0],
            };
            for w in breaks.windows(2) {
                q += adaptive_simpson(|x| f.value_at(x), w[0], w[1], 1e-14);
            }
            assert!(((q - f.area()) / f.area()).abs() < 1e-12, "{f}: {q} vs {}", f.area());
        }
    }

    #[test]
    fn parse_frontier_specs() {
        let f: Frontier = "cosine:1.0,0.3".parse().unwrap();
        assert_eq!(f, Frontier::cosine(1.0, 0.3).unwrap());
        let g: Frontier = "pwl:1,1.4,0.9@0.5".parse().unwrap();
        assert_eq!(g.alpha(), 0.5);
        assert_eq!(g.family(), FrontierFamily::PiecewiseLinear);
        assert_eq!(g.to_string().parse::<Frontier>().unwrap(), g);
        assert!("cosine".parse::<Frontier>().is_err());
        assert!("spline:1,2".parse::<Frontier>().is_err());
        assert!("constant:x".parse::<Frontier>().is_err());
        assert!("constant:1@1.5".parse::<Frontier>().is_err());
    }

    #[test]
    fn kernel_eval_examples() {
        let e = Kernel::epanechnikov();
        assert_eq!(e.evaluate(0.0), 0.75);
        assert_eq!(e.evaluate(2.0), 0.0);
        assert_eq!(Kernel::triangular().evaluate(0.5), 0.5);
    }

    #[test]
    fn kernel_scaled_examples() {
        let e = Kernel::epanechnikov();
        assert_eq!(e.scaled_evaluate(0.5, 0.0).unwrap(), 1.5);
        assert_eq!(e.scaled_evaluate(0.1, 0.2).unwrap(), 0.0);
        for k in KernelFamily::ALL.map(Kernel::new) {
            for t in [-1.2, -0.3, 0.0, 0.45, 0.99] {
                assert_eq!(k.scaled_evaluate(1.0, t).unwrap(), k.evaluate(t));
            }
        }
        assert!(e.scaled_evaluate(0.0, 0.1).is_err());
        assert!(e.scaled_evaluate(-1.0, 0.1).is_err());
    }

    #[test]
    fn kernel_support_and_sign() {
        for k in KernelFamily::ALL.map(Kernel::new) {
            for i in -3000..=3000 {
                let t = i as f64 / 1000.0;
                let v = k.evaluate(t);
                assert!(v >= 0.0);
                if t.abs() > k.support_radius() {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn kernel_slopes_bounded() {
        for k in KernelFamily::ALL.map(Kernel::new) {
            let step = 1e-4;
            let mut worst: f64 = 0.0;
            let mut t = -1.5;
            while t < 1.5 {
                let slope = (k.evaluate(t + step) - k.evaluate(t)) / step;
                worst = worst.max(slope.abs());
                t += step;
            }
            assert!(worst <= k.derivative_bound() + 1e-6, "{k}: {worst}");
        }
    }

    #[test]
    fn sigma_examples() {
        let e = Kernel::epanechnikov();
        let one = Frontier::constant(1.0).unwrap();
        let two = Frontier::constant(2.0).unwrap();
        assert!((sigma_theoretical(&e, &one) - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((sigma_theoretical(&e, &one) - 0.774597).abs() < 1e-6);
        assert!((sigma_theoretical(&e, &two) - 2.0 * 0.6f64.sqrt()).abs() < 1e-15);
        for k in KernelFamily::ALL.map(Kernel::new) {
            assert_eq!(sigma_theoretical(&k, &one), k.l2_norm_sq().sqrt());
        }
    }

    #[test]
    fn sigma_linear_in_area() {
        let k = Kernel::biweight();
        for a in [0.3, 1.0, 1.7] {
            let s1 = sigma_theoretical(&k, &Frontier::constant(a).unwrap());
            let s2 = sigma_theoretical(&k, &Frontier::constant(2.0 * a).unwrap());
            assert!((s2 - 2.0 * s1).abs() < 1e-15);
        }
    }
}
