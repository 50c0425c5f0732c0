//! Monte Carlo for critical BBM killed at 0, built on the discrete Brownian
//! snake: a Galton–Watson tree with exponential(1) lifetimes and Brownian
//! displacements along the edges.
//!
//! Absorption inside a step is decided with the Brownian-bridge crossing
//! probability `exp(−2ab/h)`, and the maximum over a step is drawn from the
//! bridge-maximum law, so neither statistic carries a step-size bias to first
//! order. Randomness comes from [`rng`](crate::rng) streams addressed by tree
//! position, which makes every run reproducible under any thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::rng::{child_id, RunKey, ROOT};

pub const DEFAULT_MAX_BIRTHS: u64 = 10_000_000;
const TRUNCATION_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Stepping {
    /// Steps of exactly `dt` (the last one in a lifetime is shorter).
    Fixed,
    /// Steps of `max(dt, (γ·x)²)` at height `x`: long strides far from 0,
    /// `dt` next to it.
    Adaptive { gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct SnakeConfig {
    pub y0: f64,
    pub dist: OffspringDistribution<f64>,
    pub dt: f64,
    pub max_births: u64,
    pub seed: u64,
    /// Level whose crossing is recorded in [`SimOutcome::reached`].
    pub upper_record: Option<f64>,
    pub stepping: Stepping,
    /// Set to false to switch absorption off (for coupling checks).
    pub killing: bool,
}

impl SnakeConfig {
    pub fn new(dist: OffspringDistribution<f64>, y0: f64, dt: f64, seed: u64) -> Self {
        Self {
            y0,
            dist,
            dt,
            max_births: DEFAULT_MAX_BIRTHS,
            seed,
            upper_record: None,
            stepping: Stepping::Adaptive { gamma: 0.5 },
            killing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y0 > 0.0) || !self.y0.is_finite() {
            return Err(Error::DomainError(format!("y0 must be positive, got {}", self.y0)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::DomainError(format!("dt must be positive, got {}", self.dt)));
        }
        if self.max_births == 0 {
            return Err(Error::DomainError("max_births must be at least 1".into()));
        }
        if let Stepping::Adaptive { gamma } = self.stepping {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(Error::DomainError(format!("gamma = {gamma} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOutcome {
    /// Supremum of all particle positions.
    pub m: f64,
    /// Number of particles absorbed at 0.
    pub n: u64,
    /// Number of branching events.
    pub births: u64,
    pub truncated: bool,
    /// Whether `M >= upper_record`, when a record level was set.
    pub reached: Option<bool>,
}

struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    fn new(dist: &OffspringDistribution<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = dist
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    fn offspring(&self, u: f64) -> usize {
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.cdf.len() - 1)
    }
}

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// One realisation of `(M, N, births)`.
pub fn simulate_once(cfg: &SnakeConfig, run: u64) -> SimOutcome {
    simulate_with(cfg, &Sampler::new(&cfg.dist), run)
}

fn simulate_with(cfg: &SnakeConfig, sampler: &Sampler, run: u64) -> SimOutcome {
    let key = RunKey::new(cfg.seed, run);
    let mut stack: Vec<(u64, f64)> = vec![(ROOT, cfg.y0)];
    let mut m = cfg.y0;
    let mut n = 0u64;
    let mut births = 0u64;
    let mut truncated = false;
    while let Some((id, start)) = stack.pop() {
        let mut rng = key.particle(id);
        let lifetime = -uniform_open(&mut rng).ln();
        let kids = sampler.offspring(rng.random::<f64>());
        let mut x = start;
        let mut left = lifetime;
        let mut alive = true;
        while left > 0.0 {
            let h = match cfg.stepping {
                Stepping::Fixed => cfg.dt.min(left),
                Stepping::Adaptive { gamma } => {
                    let g = gamma * x;
                    cfg.dt.max(g * g).min(left)
                }
            };
            // fixed budget of four draws per step
            let (u1, u2) = (uniform_open(&mut rng), rng.random::<f64>());
            let u_kill = rng.random::<f64>();
            let u_max = uniform_open(&mut rng);
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            let b = x + h.sqrt() * z;
            if cfg.killing && (b <= 0.0 || u_kill < (-2.0 * x * b / h).exp()) {
                m = m.max(x);
                n += 1;
                alive = false;
                break;
            }
            let d = b - x;
            let peak = 0.5 * (x + b + (d * d - 2.0 * h * u_max.ln()).sqrt());
            m = m.max(peak);
            x = b;
            left -= h;
        }
        if !alive {
            continue;
        }
        births += 1;
        if births >= cfg.max_births {
            truncated = true;
            break;
        }
        for i in 0..kids {
            stack.push((child_id(id, i as u64), x));
        }
    }
    SimOutcome { m, n, births, truncated, reached: cfg.upper_record.map(|lvl| m >= lvl) }
}

/// Runs `0..n_runs`, in parallel, collected in run order.
pub fn simulate_batch(cfg: &SnakeConfig, n_runs: u64) -> Result<Vec<SimOutcome>> {
    cfg.validate()?;
    let sampler = Sampler::new(&cfg.dist);
    Ok((0..n_runs).into_par_iter().map(|r| simulate_with(cfg, &sampler, r)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Statistic {
    /// `P(M >= x)`.
    HitLevel(f64),
    /// `P(N >= k)`.
    KilledAtLeast(u64),
    /// `E[N]`.
    MeanKilled,
}

impl Statistic {
    fn sample(&self, o: &SimOutcome) -> f64 {
        match *self {
            Statistic::HitLevel(x) => f64::from(u8::from(o.m >= x)),
            Statistic::KilledAtLeast(k) => f64::from(u8::from(o.n >= k)),
            Statistic::MeanKilled => o.n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchEstimate {
    pub statistic: Statistic,
    pub mean: f64,
    /// Sample standard deviation over `√n_runs`.
    pub std_error: f64,
    /// Runs that entered the estimate.
    pub n_runs: u64,
    pub n_truncated: u64,
    /// `3·std_error`.
    pub half_width: f64,
}

impl BatchEstimate {
    /// Whether `value` lies within three standard errors.
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

/// Estimate from finished runs. Truncated runs are left out and counted.
pub fn estimate_from(outcomes: &[SimOutcome], statistic: Statistic) -> Result<BatchEstimate> {
    let n_truncated = outcomes.iter().filter(|o| o.truncated).count() as u64;
    let total = outcomes.len() as u64;
    if n_truncated as f64 > TRUNCATION_LIMIT * total as f64 {
        return Err(Error::ExcessTruncation { truncated: n_truncated as usize, runs: total as usize });
    }
    let kept: Vec<f64> = outcomes.iter().filter(|o| !o.truncated).map(|o| statistic.sample(o)).collect();
    let n = kept.len();
    if n < 2 {
        return Err(Error::DomainError(format!("{n} usable runs")));
    }
    let mean = kept.iter().sum::<f64>() / n as f64;
    let var = kept.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let std_error = (var / n as f64).sqrt();
    Ok(BatchEstimate { statistic, mean, std_error, n_runs: n as u64, n_truncated, half_width: 3.0 * std_error })
}

/// Runs `n_runs` replicates and estimates one statistic.
pub fn estimate(cfg: &SnakeConfig, statistic: Statistic, n_runs: u64) -> Result<BatchEstimate> {
    if n_runs < 100 {
        return Err(Error::DomainError(format!("n_runs = {n_runs} below 100")));
    }
    estimate_from(&simulate_batch(cfg, n_runs)?, statistic)
}
