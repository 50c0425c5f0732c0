//! The end-to-end check suite: closed forms, independent solvers and Monte
//! Carlo compared against each other at pinned tolerances.
//!
//! Each check returns a [`CheckResult`] instead of panicking so callers can
//! print or serialise the whole report.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::{self, AehLattice};
use crate::error::Result;
use crate::hitting::{self, DecayingSolution};
use crate::killed;
use crate::offspring::OffspringDistribution;
use crate::simulate::{self, SnakeConfig, Statistic};

pub const CHECK_COUNT: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub n_runs: u64,
    pub dt: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 42, n_runs: 100_000, dt: 1e-4 }
    }
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub measured: Vec<Measured>,
    pub error: Option<String>,
}

impl CheckResult {
    /// `PASS`/`FAIL` line with the measured values.
    pub fn summary(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("{status} [{:>2}] {} ({:.2}s of {}s)", self.id, self.name, self.seconds, self.budget_seconds);
        for m in &self.measured {
            s.push_str(&format!(
                "\n       {} {} = {:.9e} (target {:.9e}, {})",
                if m.ok { "ok " } else { "BAD" },
                m.name,
                m.value,
                m.target,
                m.tolerance
            ));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n       error: {e}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn abs_check(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Measured {
    Measured {
        name: name.into(),
        value,
        target,
        tolerance: format!("|diff| <= {tol:e}"),
        ok: (value - target).abs() <= tol,
    }
}

fn rel_check(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Measured {
    Measured {
        name: name.into(),
        value,
        target,
        tolerance: format!("rel diff <= {tol:e}"),
        ok: (value - target).abs() <= tol * target.abs(),
    }
}

fn range_check(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Measured {
    Measured {
        name: name.into(),
        value,
        target: 0.5 * (lo + hi),
        tolerance: format!("in [{lo}, {hi}]"),
        ok: (lo..=hi).contains(&value),
    }
}

fn max_check(name: impl Into<String>, value: f64, bound: f64) -> Measured {
    Measured { name: name.into(), value, target: 0.0, tolerance: format!("<= {bound:e}"), ok: value <= bound }
}

fn check_period() -> Result<Vec<Measured>> {
    let s = elliptic::solve_period_for_target(1.0f64)?;
    Ok(vec![abs_check("omega_1", s.omega_x, 9.88285, 1e-4), abs_check("g3(L_1)", s.g3_x, -0.023786, 1e-5)])
}

fn check_constants() -> Result<Vec<Measured>> {
    let c = hitting::moranian_asymptotic_constants::<f64>(&[])?;
    Ok(vec![abs_check("c_1", c.c1, 3.29428, 1e-4), abs_check("C_1", c.c1_big, 33.0822, 1e-3)])
}

fn check_exact_vs_series() -> Result<Vec<Measured>> {
    let mut out = Vec::new();
    for y in [0.5, 1.0, 2.0, 5.0] {
        let series = killed::moranian_series(y, 50)?;
        let mut worst = 0.0f64;
        for k in 1..=50 {
            let exact = killed::moranian_tail_exact(y, k)?;
            let s = series.tail_at(k).expect("k within range");
            worst = worst.max((exact - s).abs() / s);
        }
        out.push(max_check(format!("max rel diff, y = {y}"), worst, 1e-10));
    }
    Ok(out)
}

fn check_tail_power_law() -> Result<Vec<Measured>> {
    let k = 10_000usize;
    let (tail, pmf) = killed::moranian_tail_and_pmf_exact(1.0, k)?;
    let c = killed::killed_asymptotic_constants(&OffspringDistribution::<f64>::moranian());
    let kf = k as f64;
    Ok(vec![
        range_check("k^1.5 P(N>=k) / (y/sqrt(6 pi))", kf.powf(1.5) * tail / c.c5, 0.97, 1.03),
        range_check("k^2.5 P(N=k) / (3y/(2 sqrt(6 pi)))", kf.powf(2.5) * pmf / c.c6, 0.95, 1.05),
    ])
}

fn check_hit_power_law() -> Result<Vec<Measured>> {
    let c = hitting::moranian_asymptotic_constants::<f64>(&[])?;
    let x = 200.0f64;
    let u = hitting::moranian_hit_prob(x, 1.0)?;
    Ok(vec![range_check("x^3 u_x(1) / C_1 at x = 200", x.powi(3) * u / c.c1_big, 0.97, 1.03)])
}

fn check_cross_solver() -> Result<Vec<Measured>> {
    let d = OffspringDistribution::<f64>::moranian();
    [(3.0, 1.5), (10.0, 1.0), (10.0, 9.0)]
        .into_iter()
        .map(|(x, y)| {
            let a = hitting::general_hit_prob(&d, x, y)?;
            let b = hitting::moranian_hit_prob(x, y)?;
            Ok(abs_check(format!("shooting u_{x}({y})"), a, b, 1e-7))
        })
        .collect()
}

fn check_pinch() -> Result<Vec<Measured>> {
    let d = OffspringDistribution::<f64>::new(&[0.25, 0.5, 0.25])?;
    let x = 50.0;
    let pb = hitting::pinch_bounds(&d, x, 0.1)?;
    let ys: Vec<f64> = (1..=50).map(|i| pb.length * i as f64 / 50.0).collect();
    let prof = hitting::general_profile(&d, x, &ys)?;
    let mut below = 0.0f64;
    let mut above = 0.0f64;
    for (&y, &u) in ys.iter().zip(&prof.values) {
        // positive when a bound is violated, relative to u
        below = below.max((pb.lower(y)? - u) / u);
        above = above.max((u - pb.upper(y)?) / u);
    }
    Ok(vec![
        max_check("max (lower - u)/u over 50 points", below, 1e-9),
        max_check("max (u - upper)/u over 50 points", above, 1e-9),
    ])
}

fn check_sawyer_fleischman() -> Result<Vec<Measured>> {
    let t = 100.0f64;
    let one = Complex::new(1.0, 0.0);
    let mut out = Vec::new();
    for (label, d) in [
        ("double-or-nothing", OffspringDistribution::<f64>::moranian()),
        ("binomial(2, 1/2)", OffspringDistribution::<f64>::new(&[0.25, 0.5, 0.25])?),
    ] {
        let w = DecayingSolution::new(&d).solve(one, t)?.re;
        out.push(range_check(format!("sigma^2 t^2 w(t)/6, {label}"), d.sigma2() * t * t * w / 6.0, 0.95, 1.05));
        if d.is_moranian() {
            let closed = 6.0 / (t + 6f64.sqrt()).powi(2);
            out.push(abs_check("w(t) vs 6/(t+sqrt 6)^2", w, closed, 1e-8));
        }
    }
    Ok(out)
}

fn check_monte_carlo(opts: &VerifyOptions) -> Result<Vec<Measured>> {
    let mut cfg = SnakeConfig::new(OffspringDistribution::moranian(), 1.0, opts.dt, opts.seed);
    cfg.upper_record = Some(3.0);
    let runs = simulate::simulate_batch(&cfg, opts.n_runs)?;
    let targets = [
        (Statistic::MeanKilled, "E[N]", 1.0),
        (Statistic::KilledAtLeast(1), "P(N>=1)", 6.0 / (1.0 + 6f64.sqrt()).powi(2)),
        (Statistic::KilledAtLeast(5), "P(N>=5)", killed::moranian_tail_exact(1.0, 5)?),
        (Statistic::HitLevel(3.0), "P(M>=3)", hitting::moranian_hit_prob(3.0, 1.0)?),
    ];
    targets
        .into_iter()
        .map(|(stat, name, target)| {
            let e = simulate::estimate_from(&runs, stat)?;
            Ok(Measured {
                name: format!("{name} (se {:.3e}, {} truncated)", e.std_error, e.n_truncated),
                value: e.mean,
                target,
                tolerance: format!("|diff| <= 3 se = {:.3e}", e.half_width),
                ok: e.covers(target),
            })
        })
        .collect()
}

fn check_tauberian() -> Result<Vec<Measured>> {
    let m = 10_000usize;
    let tail = killed::moranian_series(1.0, m)?;
    let c7 = killed::killed_asymptotic_constants(&OffspringDistribution::<f64>::moranian()).c7;
    let ratio = tail.weighted_tail_sum(m) / (2.0 * c7 * (m as f64).sqrt());
    Ok(vec![range_check("sum k P(N>=k) / (2 C_7 sqrt m) at m = 1e4", ratio, 0.95, 1.05)])
}

fn check_singular_expansion() -> Result<Vec<Measured>> {
    let d = OffspringDistribution::<f64>::new(&[0.25, 0.5, 0.25])?;
    let s = 1.0 - 1e-6;
    let v = killed::general_gf(&d, 1.0, Complex::new(s, 0.0))?;
    let ratio = (1.0 - v.h.re) / (1.0 - s).sqrt();
    Ok(vec![rel_check("(1 - H(1,s))/sqrt(1-s)", ratio, 2.0 * d.sigma() / 6f64.sqrt(), 0.02)])
}

fn check_elliptic_invariants() -> Result<Vec<Measured>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_917);
    let (mut ode, mut scaling, mut period, mut zeros, mut reality) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let omega = rng.random_range(0.2..20.0);
        let lat = AehLattice::<f64>::from_omega(omega)?;
        let (ga, gb) = lat.generators();
        // a point of the period cell away from the lattice points
        let z = loop {
            let z = ga * rng.random_range(0.0..1.0) + gb * rng.random_range(0.0..1.0);
            let near = [ga * 0.0, ga, gb, ga + gb].iter().map(|p| (z - p).norm()).fold(f64::MAX, f64::min);
            if near > 0.05 * omega {
                break z;
            }
        };
        let (p, dp) = lat.wp(z)?;
        let scale = p.norm().max(omega.powi(-2));
        ode = ode.max((dp * dp - p * p * p * 4.0 + lat.g3()).norm() / (4.0 * scale.powi(3)));

        let beta: f64 = rng.random_range(0.5..2.0);
        let scaled = AehLattice::<f64>::from_g3(lat.g3() * beta.powi(-6))?;
        let (ps, _) = scaled.wp(z * beta)?;
        scaling = scaling.max((ps * beta * beta - p).norm() / scale);

        for shift in [ga, gb, ga * 2.0 - gb * 3.0] {
            period = period.max((lat.wp(z + shift)?.0 - p).norm() / scale);
        }

        for frac in [1.0 / 3.0, 2.0 / 3.0] {
            zeros = zeros.max(lat.wp_real(frac * omega)?.0.abs() * omega * omega);
        }

        let xr = omega * rng.random_range(0.05..0.95);
        let (pr, _) = lat.wp(Complex::new(xr, 0.0))?;
        reality = reality.max(pr.im.abs() / pr.norm().max(omega.powi(-2)));
    }
    Ok(vec![
        max_check("ODE residual (rel)", ode, 1e-10),
        max_check("scaling law (rel)", scaling, 1e-10),
        max_check("periodicity (rel)", period, 1e-10),
        max_check("zeros at Omega/3, 2 Omega/3 (scaled)", zeros, 1e-10),
        max_check("imaginary part on real axis (rel)", reality, 1e-10),
    ])
}

fn budget(id: u32) -> f64 {
    match id {
        1 | 2 => 1.0,
        3 | 6 | 11 | 12 => 5.0,
        4 | 7 | 10 => 10.0,
        5 | 8 => 2.0,
        _ => 600.0,
    }
}

fn name(id: u32) -> &'static str {
    match id {
        1 => "period numerics",
        2 => "hitting constants",
        3 => "exact vs series tail",
        4 => "killed-count power law",
        5 => "hitting power law",
        6 => "shooting vs elliptic",
        7 => "pinch containment",
        8 => "no-killing reach probability",
        9 => "Monte Carlo concordance",
        10 => "Tauberian partial sum",
        11 => "singular expansion",
        12 => "elliptic invariants",
        _ => "unknown",
    }
}

/// Runs check `id` (1 to [`CHECK_COUNT`]).
pub fn run_check(id: u32, opts: &VerifyOptions) -> CheckResult {
    let start = Instant::now();
    let outcome = match id {
        1 => check_period(),
        2 => check_constants(),
        3 => check_exact_vs_series(),
        4 => check_tail_power_law(),
        5 => check_hit_power_law(),
        6 => check_cross_solver(),
        7 => check_pinch(),
        8 => check_sawyer_fleischman(),
        9 => check_monte_carlo(opts),
        10 => check_tauberian(),
        11 => check_singular_expansion(),
        12 => check_elliptic_invariants(),
        _ => Err(crate::Error::DomainError(format!("no check {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let budget_seconds = budget(id);
    let (measured, error) = match outcome {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let passed = error.is_none() && seconds <= budget_seconds && measured.iter().all(|m| m.ok);
    CheckResult { id, name: name(id), passed, seconds, budget_seconds, measured, error }
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let checks: Vec<CheckResult> = (1..=CHECK_COUNT).map(|id| run_check(id, opts)).collect();
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { options: *opts, checks, passed }
}
