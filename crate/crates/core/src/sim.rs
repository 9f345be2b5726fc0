//! Random point sets on `D`: i.i.d. samples, homogeneous Poisson processes
//! and the coupled lower/upper Poisson pair that brackets a sample.
//!
//! All generators are deterministic functions of their parameters and a
//! seed. Experiments derive one independent ChaCha stream per replicate from
//! a master seed (see [`replicate_rng`]), so replicates can run in any order
//! or in parallel without changing any output bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Frontier;

pub type SimRng = ChaCha8Rng;

/// Generator seeded from a single 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `master_seed`.
pub fn replicate_rng(master_seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for replicate `replicate` at grid position `grid_index`.
pub fn stream_id(grid_index: usize, replicate: usize) -> u64 {
    ((grid_index as u64) << 32) | replicate as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Fixed-size i.i.d. sample.
    SampleN,
    /// Homogeneous Poisson process with mean measure `n c Leb|_D`.
    Poisson,
    SandwichLower,
    SandwichUpper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    points: Vec<Point>,
    provenance: Provenance,
    n_nominal: usize,
}

impl SampleSet {
    pub fn new(points: Vec<Point>, provenance: Provenance, n_nominal: usize) -> Self {
        SampleSet {
            points,
            provenance,
            n_nominal,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_nominal(&self) -> usize {
        self.n_nominal
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when every point satisfies `0 <= x <= 1` and `0 <= y <= f(x)`.
    pub fn lies_in(&self, frontier: &Frontier) -> bool {
        all_in_support(&self.points, frontier)
    }
}

pub(crate) fn all_in_support(points: &[Point], frontier: &Frontier) -> bool {
    points.iter().all(|p| {
        (0.0..=1.0).contains(&p.x) && p.y >= 0.0 && p.y <= frontier.value_at(p.x)
    })
}

/// One point uniform on `D`, by rejection from `[0,1] x [0, sup f]`.
pub fn uniform_point<R: Rng + ?Sized>(frontier: &Frontier, rng: &mut R) -> Point {
    let top = frontier.max_height();
    loop {
        let x: f64 = rng.gen();
        let y = top * rng.gen::<f64>();
        if y <= frontier.value_at(x) {
            return Point { x, y };
        }
    }
}

fn uniform_points<R: Rng + ?Sized>(frontier: &Frontier, count: usize, rng: &mut R) -> Vec<Point> {
    (0..count).map(|_| uniform_point(frontier, rng)).collect()
}

pub fn sample_uniform_with<R: Rng + ?Sized>(frontier: &Frontier, n: usize, rng: &mut R) -> SampleSet {
    SampleSet::new(uniform_points(frontier, n, rng), Provenance::SampleN, n)
}

/// `n` i.i.d. points uniform on `D`.
pub fn sample_uniform(frontier: &Frontier, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::parameter("sample size n must be at least 1"));
    }
    Ok(sample_uniform_with(frontier, n, &mut rng_from_seed(seed)))
}

/// Poisson(`mean`) variate. `mean = 0` yields 0.
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::domain("mean", mean, "finite mean >= 0"));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::parameter(e.to_string()))?;
    let v: f64 = dist.sample(rng);
    Ok(v as u64)
}

pub fn sample_poisson_process_with<R: Rng + ?Sized>(
    frontier: &Frontier,
    n: usize,
    rng: &mut R,
) -> Result<SampleSet> {
    // Mean measure n c Leb|_D has total mass n c area(D) = n.
    let count = poisson_draw(n as f64, rng)? as usize;
    Ok(SampleSet::new(uniform_points(frontier, count, rng), Provenance::Poisson, n))
}

/// Homogeneous Poisson process on `D` with total expected count `n`.
pub fn sample_poisson_process(frontier: &Frontier, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::parameter("intensity n must be at least 1"));
    }
    sample_poisson_process_with(frontier, n, &mut rng_from_seed(seed))
}

/// Poisson counts behind a [`SandwichTriple`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichCounts {
    pub n1: usize,
    pub m1: usize,
    pub m2: usize,
    /// `n1 + m1`
    pub n0: usize,
    /// `n0 + m2`
    pub n2: usize,
}

/// Lower process `sigma1`, Poisson process `sigma0`, upper process `sigma2`
/// and the sample `sigma_n`, all prefixes of one i.i.d. uniform stream.
///
/// `N1 ~ Poisson(n(1-gamma))`, `M1, M2 ~ Poisson(n gamma)` independently,
/// `N0 = N1 + M1`, `N2 = N0 + M2`. The stream has `max(N2, n)` points so that
/// the sample exists even when it is not bracketed.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichTriple {
    stream: Vec<Point>,
    counts: SandwichCounts,
    n: usize,
    gamma: f64,
    e_n_holds: bool,
}

impl SandwichTriple {
    pub fn counts(&self) -> SandwichCounts {
        self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `N1 <= n <= N2`: the lower process is contained in the sample, which
    /// is contained in the upper process.
    pub fn e_n_holds(&self) -> bool {
        self.e_n_holds
    }

    pub fn stream(&self) -> &[Point] {
        &self.stream
    }

    pub fn sigma1(&self) -> &[Point] {
        &self.stream[..self.counts.n1]
    }

    pub fn sigma0(&self) -> &[Point] {
        &self.stream[..self.counts.n0]
    }

    pub fn sigma2(&self) -> &[Point] {
        &self.stream[..self.counts.n2]
    }

    pub fn sigma_n(&self) -> &[Point] {
        &self.stream[..self.n]
    }

    /// Owned copies of `(sigma1, sigma0, sigma2, sigma_n)`.
    pub fn sample_sets(&self) -> [SampleSet; 4] {
        let n = self.n;
        [
            SampleSet::new(self.sigma1().to_vec(), Provenance::SandwichLower, n),
            SampleSet::new(self.sigma0().to_vec(), Provenance::Poisson, n),
            SampleSet::new(self.sigma2().to_vec(), Provenance::SandwichUpper, n),
            SampleSet::new(self.sigma_n().to_vec(), Provenance::SampleN, n),
        ]
    }
}

pub fn sample_sandwich_with<R: Rng + ?Sized>(
    frontier: &Frontier,
    n: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<SandwichTriple> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain("gamma", gamma, "0 < gamma < 1"));
    }
    if n == 0 {
        return Err(Error::parameter("sample size n must be at least 1"));
    }
    let nf = n as f64;
    let n1 = poisson_draw(nf * (1.0 - gamma), rng)? as usize;
    let m1 = poisson_draw(nf * gamma, rng)? as usize;
    let m2 = poisson_draw(nf * gamma, rng)? as usize;
    let n0 = n1 + m1;
    let n2 = n0 + m2;
    let stream = uniform_points(frontier, n2.max(n), rng);
    Ok(SandwichTriple {
        stream,
        counts: SandwichCounts { n1, m1, m2, n0, n2 },
        n,
        gamma,
        e_n_holds: n1 <= n && n <= n2,
    })
}

pub fn sample_sandwich(frontier: &Frontier, n: usize, gamma: f64, seed: u64) -> Result<SandwichTriple> {
    sample_sandwich_with(frontier, n, gamma, &mut rng_from_seed(seed))
}
