//! Monte Carlo transport in an infinite homogeneous medium with unit total cross
//! section, as an independent check on the deterministic densities.
//!
//! Particles carry a weight that is multiplied by the albedo at each collision
//! (implicit capture) and are rouletted below `1e-6`. Scalar flux is tallied by track
//! length in spherical shells, split by the number of scatterings so far. Every
//! history draws from its own ChaCha stream keyed by `(seed, history)`, and batches
//! are reduced in a fixed order, so estimates do not depend on the thread count.

use crate::error::{Error, Result};
use crate::special::legendre::legendre_p_real_nonneg;
use crate::special::{Direction, PhaseFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const BATCH: u64 = 8192;
const ROULETTE_THRESHOLD: f64 = 1e-6;
const ROULETTE_SURVIVAL: f64 = 1e-5;
const CDF_INTERVALS: usize = 2048;
const SCAN_POINTS: usize = 8192;

/// Number of collision-order buckets: uncollided, once scattered, twice or more.
pub const ORDER_BUCKETS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Unit point source emitting uniformly over the sphere.
    IsotropicPoint,
    /// Unit point source emitting along one direction.
    Beam(Direction),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub histories: u64,
    pub seed: u64,
    /// Shell edges; shell `i` is `shells[i] <= |x| < shells[i + 1]`.
    pub shells: Vec<f64>,
    pub source: Source,
    /// Histories end at the collision after this many scatterings. `Some(0)` removes
    /// scattering altogether.
    pub max_scatter_order: Option<u32>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.histories == 0 {
            return Err(Error::InvalidInput("at least one history is needed".into()));
        }
        if self.shells.len() < 2 {
            return Err(Error::InvalidInput("at least two shell radii are needed".into()));
        }
        if !self.shells.iter().all(|r| *r > 0.0 && r.is_finite()) || self.shells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("shell radii must be positive and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn shell_count(&self) -> usize {
        self.shells.len() - 1
    }
}

/// Scalar flux per source particle averaged over each shell, with its standard error,
/// in total and by collision order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub shells: Vec<f64>,
    pub histories: u64,
    pub density: Vec<f64>,
    pub std_error: Vec<f64>,
    pub order_density: [Vec<f64>; ORDER_BUCKETS],
    pub order_std_error: [Vec<f64>; ORDER_BUCKETS],
}

impl McEstimate {
    /// `(inner, outer)` radii of shell `i`.
    pub fn shell(&self, i: usize) -> (f64, f64) {
        (self.shells[i], self.shells[i + 1])
    }
}

/// Densities split into uncollided, once-collided and multiply-collided parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionOrders {
    pub uncollided: Vec<f64>,
    pub once: Vec<f64>,
    pub multiple: Vec<f64>,
    pub uncollided_std_error: Vec<f64>,
    pub once_std_error: Vec<f64>,
    pub multiple_std_error: Vec<f64>,
}

pub fn decompose_collision_orders(estimate: &McEstimate) -> CollisionOrders {
    let [u, o, m] = estimate.order_density.clone();
    let [ue, oe, me] = estimate.order_std_error.clone();
    CollisionOrders { uncollided: u, once: o, multiple: m, uncollided_std_error: ue, once_std_error: oe, multiple_std_error: me }
}

/// Inverse-CDF sampler for the scattering cosine with density `(1/2) sum beta_l P_l`.
#[derive(Clone, Debug)]
pub struct CosineSampler {
    beta: Vec<f64>,
    mu: Vec<f64>,
    cdf: Vec<f64>,
    peak: f64,
}

impl CosineSampler {
    /// Tabulates the CDF on 2048 intervals after a dense scan for negative density.
    pub fn new(phase: &PhaseFunction) -> Result<Self> {
        let beta = phase.beta().to_vec();
        let mut peak: f64 = 0.0;
        for i in 0..=SCAN_POINTS {
            let mu = -1.0 + 2.0 * i as f64 / SCAN_POINTS as f64;
            let d = phase.cosine_density(mu);
            if d < -1e-12 {
                return Err(Error::InvalidPhase(format!("scattering density {d:e} < 0 at cosine {mu}")));
            }
            peak = peak.max(d);
        }
        let mut s = CosineSampler { beta, mu: Vec::new(), cdf: Vec::new(), peak: 1.01 * peak };
        s.mu = (0..=CDF_INTERVALS).map(|i| -1.0 + 2.0 * i as f64 / CDF_INTERVALS as f64).collect();
        s.cdf = s.mu.iter().map(|&m| s.exact_cdf(m)).collect();
        Ok(s)
    }

    fn isotropic(&self) -> bool {
        self.beta.len() == 1
    }

    fn density(&self, mu: f64) -> f64 {
        let p = legendre_p_real_nonneg(self.beta.len() - 1, 0, mu);
        0.5 * p.iter().zip(&self.beta).map(|(p, b)| p * b).sum::<f64>()
    }

    /// `F(mu) = (1/2)[(mu + 1) + sum_{l>=1} beta_l (P_{l+1} - P_{l-1})/(2l + 1)]`.
    pub fn exact_cdf(&self, mu: f64) -> f64 {
        let big_l = self.beta.len() - 1;
        let p = legendre_p_real_nonneg(big_l + 1, 0, mu);
        let mut f = mu + 1.0;
        for l in 1..=big_l {
            f += self.beta[l] * (p[l + 1] - p[l - 1]) / (2 * l + 1) as f64;
        }
        (0.5 * f).clamp(0.0, 1.0)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if self.isotropic() {
            return 2.0 * u - 1.0;
        }
        let i = self.cdf.partition_point(|&f| f <= u).clamp(1, CDF_INTERVALS) - 1;
        let (mut lo, mut hi) = (self.mu[i], self.mu[i + 1]);
        let (flo, fhi) = (self.cdf[i], self.cdf[i + 1]);
        let mut x = if fhi > flo { lo + (hi - lo) * (u - flo) / (fhi - flo) } else { 0.5 * (lo + hi) };
        for _ in 0..60 {
            let g = self.exact_cdf(x) - u;
            if g.abs() < 1e-15 {
                return x;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.density(x);
            let newton = x - g / d;
            x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                return x;
            }
        }
        self.rejection(rng)
    }

    fn rejection<R: Rng>(&self, rng: &mut R) -> f64 {
        loop {
            let mu = 2.0 * rng.gen::<f64>() - 1.0;
            if rng.gen::<f64>() * self.peak <= self.density(mu) {
                return mu;
            }
        }
    }
}

fn isotropic_direction<R: Rng>(rng: &mut R) -> [f64; 3] {
    let mu = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.gen::<f64>();
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), mu]
}

/// Turn `d` through the polar cosine `mu` at a uniform azimuth.
fn scatter<R: Rng>(d: [f64; 3], mu: f64, rng: &mut R) -> [f64; 3] {
    let phi = 2.0 * PI * rng.gen::<f64>();
    let (sp, cp) = phi.sin_cos();
    let st = (1.0 - mu * mu).max(0.0).sqrt();
    let [u, v, w] = d;
    let out = if w.abs() > 0.99999 {
        [st * cp, st * sp, w.signum() * mu]
    } else {
        let t = (1.0 - w * w).sqrt();
        [
            mu * u + st * (u * w * cp - v * sp) / t,
            mu * v + st * (v * w * cp + u * sp) / t,
            mu * w - st * cp * t,
        ]
    };
    let n = (out[0] * out[0] + out[1] * out[1] + out[2] * out[2]).sqrt();
    [out[0] / n, out[1] / n, out[2] / n]
}

/// Length of `p + t d`, `0 <= t <= s`, inside the ball of squared radius `r2`, with
/// `b = p.d` and `pp = |p|^2`.
fn chord(b: f64, pp: f64, s: f64, r2: f64) -> f64 {
    let disc = b * b - (pp - r2);
    if disc <= 0.0 {
        return 0.0;
    }
    let q = disc.sqrt();
    ((-b + q).min(s) - (-b - q).max(0.0)).max(0.0)
}

struct Accumulator {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator { sum: vec![0.0; n], sumsq: vec![0.0; n] }
    }

    fn add(&mut self, other: &Accumulator) {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sumsq[i] += other.sumsq[i];
        }
    }
}

/// One history's track lengths, indexed `[order * shells + shell]`; the total sits in
/// the last block.
fn run_history(
    rng: &mut ChaCha8Rng,
    config: &McConfig,
    c: f64,
    sampler: &CosineSampler,
    radii_sq: &[f64],
    tally: &mut [f64],
) {
    let n = config.shell_count();
    let outer_sq = *radii_sq.last().expect("validated");
    let mut pos = [0.0f64; 3];
    let mut dir = match config.source {
        Source::IsotropicPoint => isotropic_direction(rng),
        Source::Beam(d) => d.to_vector(),
    };
    let mut weight = 1.0;
    let mut order = 0u32;
    let mut inside = vec![0.0; config.shells.len()];
    loop {
        let s = -(1.0 - rng.gen::<f64>()).ln();
        let pp = pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2];
        let b = pos[0] * dir[0] + pos[1] * dir[1] + pos[2] * dir[2];
        let t = (-b).clamp(0.0, s);
        if pp + 2.0 * b * t + t * t < outer_sq {
            for (len, r2) in inside.iter_mut().zip(radii_sq) {
                *len = chord(b, pp, s, *r2);
            }
            let bucket = (order as usize).min(ORDER_BUCKETS - 1);
            for i in 0..n {
                tally[bucket * n + i] += weight * (inside[i + 1] - inside[i]);
            }
        }
        for k in 0..3 {
            pos[k] += s * dir[k];
        }
        if config.max_scatter_order.is_some_and(|m| order >= m) {
            return;
        }
        weight *= c;
        order += 1;
        dir = scatter(dir, sampler.sample(rng), rng);
        if weight < ROULETTE_THRESHOLD {
            if rng.gen::<f64>() * ROULETTE_SURVIVAL < weight {
                weight = ROULETTE_SURVIVAL;
            } else {
                return;
            }
        }
    }
}

/// Track-length Monte Carlo estimate of the shell-averaged scalar flux.
pub fn simulate(phase: &PhaseFunction, config: &McConfig) -> Result<McEstimate> {
    config.validate()?;
    let sampler = CosineSampler::new(phase)?;
    let n = config.shell_count();
    let width = (ORDER_BUCKETS + 1) * n;
    let radii_sq: Vec<f64> = config.shells.iter().map(|r| r * r).collect();
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let batches = config.histories.div_ceil(BATCH);
    let c = phase.c();
    let parts: Vec<Accumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = Accumulator::new(width);
            let mut tally = vec![0.0; width];
            let end = ((b + 1) * BATCH).min(config.histories);
            for h in b * BATCH..end {
                let mut rng = base.clone();
                rng.set_stream(h);
                tally.iter_mut().for_each(|v| *v = 0.0);
                run_history(&mut rng, config, c, &sampler, &radii_sq, &mut tally);
                for i in 0..n {
                    tally[ORDER_BUCKETS * n + i] = (0..ORDER_BUCKETS).map(|o| tally[o * n + i]).sum();
                }
                for (i, v) in tally.iter().enumerate() {
                    acc.sum[i] += v;
                    acc.sumsq[i] += v * v;
                }
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(width);
    for p in &parts {
        total.add(p);
    }
    let hist = config.histories as f64;
    let stats = |block: usize| -> (Vec<f64>, Vec<f64>) {
        (0..n)
            .map(|i| {
                let vol = 4.0 * PI / 3.0 * (config.shells[i + 1].powi(3) - config.shells[i].powi(3));
                let j = block * n + i;
                let mean = total.sum[j] / hist;
                let var = if config.histories > 1 { ((total.sumsq[j] / hist - mean * mean) / (hist - 1.0)).max(0.0) } else { 0.0 };
                (mean / vol, var.sqrt() / vol)
            })
            .unzip()
    };
    let (density, std_error) = stats(ORDER_BUCKETS);
    let orders: Vec<(Vec<f64>, Vec<f64>)> = (0..ORDER_BUCKETS).map(stats).collect();
    let order_density = [orders[0].0.clone(), orders[1].0.clone(), orders[2].0.clone()];
    let order_std_error = [orders[0].1.clone(), orders[1].1.clone(), orders[2].1.clone()];
    Ok(McEstimate { shells: config.shells.clone(), histories: config.histories, density, std_error, order_density, order_std_error })
}
