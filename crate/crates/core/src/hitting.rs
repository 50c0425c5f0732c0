//! `u_x(y) = P^y(M ≥ x)` for critical BBM killed at 0.
//!
//! `u` solves `u″ = h(u)` on `[0, x]` with `u(0) = 0`, `u(x) = 1`. For the
//! double-or-nothing law `h(u) = u²` and the solution is `6℘(y + 2ω_x/3)` on
//! the lattice from [`elliptic::solve_period_for_target`]. For any other law
//! we shoot on `u′(0)`, and bracket the answer between two rescaled
//! ℘-solutions of `v″ = σ²(1 ± δ)v²`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::elliptic::{self, PeriodSolution};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::offspring::OffspringDistribution;
use crate::quad::{self, Tolerance};
use crate::real::Real;
use crate::Method;

const CLAMP_TOL: f64 = 1e-12;
const SLOPE_MIN: f64 = 1e-12;
const SLOPE_MAX: f64 = 1e3;
// u stays increasing while it is below 2, so overshoot is detected there.
const OVERSHOOT: f64 = 2.0;

fn clamp_y<T: Real>(x: T, y: T) -> Result<T> {
    let tol = T::lit(CLAMP_TOL) * x.max(T::one());
    if !(y >= -tol && y <= x + tol) {
        return Err(Error::DomainError(format!("y = {y} outside [0, {x}]")));
    }
    Ok(y.max(T::zero()).min(x))
}

fn check_x<T: Real>(x: T) -> Result<()> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::DomainError(format!("target must be positive, got {x}")));
    }
    Ok(())
}

/// `u_x(y)` for the double-or-nothing law.
pub fn moranian_hit_prob<T: Real>(x: T, y: T) -> Result<T> {
    check_x(x)?;
    let y = clamp_y(x, y)?;
    let sol = elliptic::solve_period_for_target(x)?;
    eval_period(&sol, y)
}

fn eval_period<T: Real>(sol: &PeriodSolution<T>, y: T) -> Result<T> {
    if y == T::zero() {
        return Ok(T::zero());
    }
    Ok(sol.profile(y)?.max(T::zero()).min(sol.level))
}

/// Grid on `[0, x]`: 512 uniform points plus geometric refinement towards
/// both ends.
pub fn profile_grid<T: Real>(x: T) -> Vec<T> {
    let mut g: Vec<T> = (0..512).map(|i| x * T::from_usize_lossy(i) / T::lit(511.0)).collect();
    for j in 5..=36 {
        let d = x * T::lit(10f64.powf(-(j as f64) / 4.0));
        g.push(d);
        g.push(x - d);
    }
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    g.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * x);
    g
}

#[derive(Debug, Clone)]
pub struct HitProfile<T> {
    pub x: T,
    pub dist: OffspringDistribution<T>,
    pub ys: Vec<T>,
    pub values: Vec<T>,
    /// `u_x′(0)`.
    pub slope_at_zero: T,
    pub method: Method,
    /// Lattice data, for the elliptic route only.
    pub period: Option<PeriodSolution<T>>,
}

/// Elliptic-route profile on the given grid.
pub fn moranian_profile<T: Real>(x: T, ys: &[T]) -> Result<HitProfile<T>> {
    check_x(x)?;
    let sol = elliptic::solve_period_for_target(x)?;
    let ys: Vec<T> = ys.iter().map(|&y| clamp_y(x, y)).collect::<Result<_>>()?;
    let values = ys.par_iter().map(|&y| eval_period(&sol, y)).collect::<Result<Vec<_>>>()?;
    Ok(HitProfile {
        x,
        dist: OffspringDistribution::moranian(),
        ys,
        values,
        slope_at_zero: sol.profile_slope(T::zero())?,
        method: Method::Elliptic,
        period: Some(sol),
    })
}

struct Shooter<'a, T> {
    dist: &'a OffspringDistribution<T>,
    dh: Vec<T>,
    x: T,
    opts: OdeOptions<T>,
}

enum Shot<T> {
    Hit { end: T, sensitivity: T },
    Overshoot,
}

impl<'a, T: Real> Shooter<'a, T> {
    fn new(dist: &'a OffspringDistribution<T>, x: T) -> Self {
        let h = dist.h_coeffs();
        let dh = h.iter().enumerate().skip(1).map(|(j, &c)| c * T::from_usize_lossy(j)).collect();
        let opts = OdeOptions { rtol: T::lit(1e-11), atol: T::lit(1e-300), h0: x * T::lit(1e-4), max_steps: 1_000_000 };
        Self { dist, dh, x, opts }
    }

    fn rhs(&self, s: &[T; 4]) -> [T; 4] {
        let dh = self.dh.iter().rev().fold(T::zero(), |a, &c| a * s[0] + c);
        [s[1], self.dist.h_real(s[0]), s[3], dh * s[2]]
    }

    fn run(&self, slope: T, outputs: &[T]) -> Result<ode::OdeOutcome<T, 4>> {
        let lim = T::lit(OVERSHOOT);
        ode::solve(|_, s| self.rhs(s), T::zero(), [T::zero(), slope, T::zero(), T::one()], outputs, self.opts, |_, s| {
            s[0] > lim
        })
    }

    fn shoot(&self, slope: T) -> Result<Shot<T>> {
        let out = self.run(slope, &[self.x])?;
        if out.stopped_at.is_some() {
            return Ok(Shot::Overshoot);
        }
        Ok(Shot::Hit { end: out.last[0], sensitivity: out.last[2] })
    }

    /// Initial slope with `u(x) = target`.
    fn slope_for(&self, target: T) -> Result<T> {
        let (mut lo, mut hi) = (T::lit(SLOPE_MIN), T::lit(SLOPE_MAX));
        match self.shoot(lo)? {
            Shot::Hit { end, .. } if end < target => {}
            _ => return Err(Error::ShootingBracketError(format!("u(x) >= {target} already at slope {lo}"))),
        }
        if let Shot::Hit { end, .. } = self.shoot(hi)? {
            if end < target {
                return Err(Error::ShootingBracketError(format!("u(x) < {target} still at slope {hi}")));
            }
        }
        // large-x behaviour is u′(0) ≈ 33/(σ²x³), small-x is 1/x
        let x = self.x;
        let mut s = target / (x + self.dist.sigma2() * x * x * x / T::lit(33.0));
        s = s.max(lo).min(hi);
        for _ in 0..300 {
            let next = match self.shoot(s)? {
                Shot::Overshoot => {
                    hi = s;
                    None
                }
                Shot::Hit { end, sensitivity } => {
                    let f = end - target;
                    if f.abs() <= T::lit(1e-14) * target {
                        return Ok(s);
                    }
                    if f > T::zero() {
                        hi = s;
                    } else {
                        lo = s;
                    }
                    let n = s - f / sensitivity;
                    (n > lo && n < hi && n.is_finite()).then_some(n)
                }
            };
            if hi - lo <= T::lit(4.0) * T::epsilon() * hi {
                return Ok((lo + hi) / T::lit(2.0));
            }
            s = next.unwrap_or_else(|| (lo * hi).sqrt());
        }
        Err(Error::ConvergenceError(format!("initial slope iteration at x = {x}")))
    }
}

/// Profile of `u_x` by shooting, evaluated on `ys`.
pub fn general_profile<T: Real>(dist: &OffspringDistribution<T>, x: T, ys: &[T]) -> Result<HitProfile<T>> {
    check_x(x)?;
    let ys: Vec<T> = ys.iter().map(|&y| clamp_y(x, y)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].partial_cmp(&ys[b]).expect("finite"));
    let sorted: Vec<T> = order.iter().map(|&i| ys[i]).collect();
    let shooter = Shooter::new(dist, x);
    let slope = shooter.slope_for(T::one())?;
    let out = shooter.run(slope, &sorted)?;
    let mut values = vec![T::zero(); ys.len()];
    for (k, &i) in order.iter().enumerate() {
        values[i] = out.values[k][0].max(T::zero()).min(T::one());
    }
    Ok(HitProfile { x, dist: dist.clone(), ys, values, slope_at_zero: slope, method: Method::Shooting, period: None })
}

/// `u_x(y)` for an arbitrary critical law, by shooting.
pub fn general_hit_prob<T: Real>(dist: &OffspringDistribution<T>, x: T, y: T) -> Result<T> {
    Ok(general_profile(dist, x, &[y])?.values[0])
}

/// `u_x′(0)` by shooting.
pub fn initial_slope<T: Real>(dist: &OffspringDistribution<T>, x: T) -> Result<T> {
    check_x(x)?;
    Shooter::new(dist, x).slope_for(T::one())
}

/// Elliptic route for the double-or-nothing law, shooting otherwise.
pub fn hit_profile<T: Real>(dist: &OffspringDistribution<T>, x: T, ys: &[T]) -> Result<HitProfile<T>> {
    if dist.is_moranian() {
        moranian_profile(x, ys)
    } else {
        general_profile(dist, x, ys)
    }
}

#[derive(Debug, Clone)]
pub struct AsymptoticConstants<T> {
    pub sigma2: T,
    /// `ω₁/3`.
    pub c1: T,
    /// `lim x³u_x(y)/y` for the double-or-nothing law.
    pub c1_big: T,
    pub s_grid: Vec<T>,
    /// `lim x²u_x(sx)` for the double-or-nothing law, on `s_grid`.
    pub c2: Vec<T>,
    /// `C₁/σ²`.
    pub c3: T,
    /// `C₂(s)/σ²` on `s_grid`.
    pub c4: Vec<T>,
}

/// Power-law constants of `u_x` for a law with variance `sigma2`.
pub fn asymptotic_constants<T: Real>(sigma2: T, s_grid: &[T]) -> Result<AsymptoticConstants<T>> {
    if let Some(s) = s_grid.iter().find(|s| !(**s > T::zero() && **s < T::one())) {
        return Err(Error::DomainError(format!("s = {s} outside (0, 1)")));
    }
    let sol = elliptic::solve_period_for_target(T::one())?;
    let lat = &sol.lattice;
    let c1 = sol.omega_x / T::lit(3.0);
    let alpha = sol.alpha_x;
    let six = T::lit(6.0);
    let c1_big = six * c1 * c1 * c1 * lat.wp_real(alpha)?.1;
    let c2 = s_grid
        .iter()
        .map(|&s| Ok(six * c1 * c1 * lat.wp_real(alpha + s * c1)?.0))
        .collect::<Result<Vec<_>>>()?;
    let c4 = c2.iter().map(|&c| c / sigma2).collect();
    Ok(AsymptoticConstants { sigma2, c1, c1_big, s_grid: s_grid.to_vec(), c2, c3: c1_big / sigma2, c4 })
}

pub fn moranian_asymptotic_constants<T: Real>(s_grid: &[T]) -> Result<AsymptoticConstants<T>> {
    asymptotic_constants(T::one(), s_grid)
}

pub fn general_asymptotic_constants<T: Real>(
    dist: &OffspringDistribution<T>,
    s_grid: &[T],
) -> Result<AsymptoticConstants<T>> {
    asymptotic_constants(dist.sigma2(), s_grid)
}

/// Solutions of `v″ = h(v)` that decay at infinity, through the integrated
/// form `∫_v^z dt/√κ₂(t) = y`.
///
/// Writing `κ₂(t) = (2σ²/3)t³q(t)` with `q(0) = 1` and `K = √(3/(2σ²))`,
/// `∫_w^z = 2K(w^{-1/2} − z^{-1/2}) + K∫_{√w}^{√z} 2τ⁻²(q(τ²)^{-1/2} − 1)dτ`;
/// the second integrand is smooth at 0, and Newton runs in `p = w^{-1/2}`.
#[derive(Debug, Clone)]
pub struct DecayingSolution<T> {
    k: T,
    q: Vec<T>,
    roots: Option<Vec<Complex<T>>>,
    hypothesis_ok: bool,
}

impl<T: Real> DecayingSolution<T> {
    pub fn new(dist: &OffspringDistribution<T>) -> Self {
        let q = dist.kappa2_reduced_coeffs();
        let report = dist.hypothesis_check().ok();
        Self {
            k: (T::lit(1.5) / dist.sigma2()).sqrt(),
            q,
            hypothesis_ok: report.as_ref().is_some_and(|r| r.passes),
            roots: report.map(|r| r.all_zeros),
        }
    }

    pub fn hypothesis_ok(&self) -> bool {
        self.hypothesis_ok
    }

    fn sqrt_q(&self, t: Complex<T>) -> Complex<T> {
        match &self.roots {
            // principal branch of each factor: continuous while |t| < min |root|
            Some(roots) => roots.iter().fold(Complex::new(T::one(), T::zero()), |acc, r| {
                acc * (Complex::new(T::one(), T::zero()) - t / r).sqrt()
            }),
            None => self.q.iter().rev().fold(Complex::new(T::zero(), T::zero()), |a, &c| a * t + c).sqrt(),
        }
    }

    fn smooth_part(&self, tau: Complex<T>) -> Complex<T> {
        let t = tau * tau;
        let r = self.q[1..].iter().rev().fold(Complex::new(T::zero(), T::zero()), |a, &c| a * t + c);
        let sq = self.sqrt_q(t);
        -(r * T::lit(2.0)) / (sq * (sq + T::one()))
    }

    /// `∫_w^z dt/√κ₂(t)` with `w = p⁻²`, and its derivative in `p`.
    fn travel(&self, p: Complex<T>, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let a = p.inv();
        let b = z.sqrt();
        let two_k = self.k * T::lit(2.0);
        let mut g = (p - b.inv()) * two_k;
        if self.q.len() > 1 {
            let d = b - a;
            let tol = Tolerance::new(1e-18, 1e-14);
            let r = quad::integrate(|th: T| self.smooth_part(a + d * th) * d, T::zero(), T::one(), tol);
            g = g + r.value * self.k;
        }
        let w = a * a;
        let dg = self.sqrt_q(w).inv() * two_k;
        (g, dg)
    }

    /// The value `w` with `∫_w^z dt/√κ₂ = y`, i.e. the decaying solution with
    /// `v(0) = z` evaluated at distance `y`.
    pub fn solve(&self, z: Complex<T>, y: T) -> Result<Complex<T>> {
        if y == T::zero() {
            return Ok(z);
        }
        if z.norm() == T::zero() {
            return Ok(z);
        }
        let zr = z.sqrt().inv();
        let mut p = zr + Complex::new(y / (self.k * T::lit(2.0)), T::zero());
        let (mut g, mut dg) = self.travel(p, z);
        let mut resid = (g - y).norm();
        for _ in 0..100 {
            let step = (g - y) / dg;
            let mut damp = T::one();
            let mut accepted = false;
            for _ in 0..40 {
                let cand = p - step * damp;
                let (gc, dgc) = self.travel(cand, z);
                let rc = (gc - y).norm();
                if rc.is_finite() && (rc < resid || rc <= T::lit(1e-15) * y.max(T::one())) {
                    p = cand;
                    g = gc;
                    dg = dgc;
                    resid = rc;
                    accepted = true;
                    break;
                }
                damp = damp / T::lit(2.0);
            }
            let small = step.norm() * damp <= T::lit(1e-14) * p.norm();
            if small || !accepted {
                if resid <= T::lit(1e-11) * y.max(T::one()) {
                    return Ok((p * p).inv());
                }
                if !accepted {
                    break;
                }
            }
        }
        Err(Error::InversionFailure(format!("z = {z}, y = {y}: residual {resid}")))
    }
}

/// `w_∞(t) = P^0(M ≥ t)` for BBM without killing, started at 0.
pub fn no_kill_reach_prob<T: Real>(dist: &OffspringDistribution<T>, t: T) -> Result<T> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::DomainError(format!("t must be nonnegative, got {t}")));
    }
    if dist.is_moranian() {
        let r6 = T::lit(6.0).sqrt();
        return Ok(T::lit(6.0) / ((t + r6) * (t + r6)));
    }
    let w = DecayingSolution::new(dist).solve(Complex::new(T::one(), T::zero()), t)?;
    Ok(w.re)
}

/// `∫_a^1 dw/√κ₂(w)`: the distance over which `w_∞` falls from 1 to `a`.
fn descent_length<T: Real>(dist: &OffspringDistribution<T>, a: T) -> T {
    if a >= T::one() {
        return T::zero();
    }
    let tol = Tolerance::new(1e-300, 1e-13);
    quad::integrate(|w: T| dist.kappa2_real(w).sqrt().recip(), a, T::one(), tol).value
}

#[derive(Debug, Clone)]
pub struct PinchBounds<T> {
    pub delta: T,
    pub a_plus: T,
    pub a_minus: T,
    /// Smallness level below which `|h(z) − σ²z²| <= δσ²z²`.
    pub eps: T,
    pub t_eps: T,
    /// `u_x(x − t_ε)`.
    pub eta: T,
    /// Bounds hold on `[0, length]`, `length = x − t_ε`.
    pub length: T,
    lower_sol: PeriodSolution<T>,
    upper_sol: PeriodSolution<T>,
}

impl<T: Real> PinchBounds<T> {
    /// Solution of `v″ = σ²(1+δ)v²` with the same boundary values.
    pub fn lower(&self, y: T) -> Result<T> {
        let y = clamp_y(self.length, y)?;
        Ok(eval_period(&self.lower_sol, y)? / self.a_plus)
    }

    /// Solution of `v″ = σ²(1−δ)v²` with the same boundary values.
    pub fn upper(&self, y: T) -> Result<T> {
        let y = clamp_y(self.length, y)?;
        Ok(eval_period(&self.upper_sol, y)? / self.a_minus)
    }
}

/// Brackets `u_x` on `[0, x − t_ε]` between rescaled ℘-solutions.
pub fn pinch_bounds<T: Real>(dist: &OffspringDistribution<T>, x: T, delta: T) -> Result<PinchBounds<T>> {
    check_x(x)?;
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::DomainError(format!("delta = {delta} outside (0, 1)")));
    }
    let sigma2 = dist.sigma2();
    let psi3 = dist.psi_third_derivative_at_one();
    // h(z) = σ²z² − Ψ‴(ξ)z³/3 with 0 <= Ψ‴(ξ) <= Ψ‴(1)
    let eps = if psi3 > T::zero() { (T::lit(3.0) * delta * sigma2 / psi3).min(T::one()) } else { T::one() };
    let t_eps = descent_length(dist, eps);
    let length = x - t_eps;
    if !(length > T::zero()) {
        return Err(Error::RegionError(format!("x = {x} does not exceed t_eps = {t_eps}")));
    }
    let eta = if t_eps == T::zero() { T::one() } else { general_hit_prob(dist, x, length)? };
    if eta > eps {
        return Err(Error::RegionError(format!("u_x(x − t_eps) = {eta} exceeds eps = {eps}")));
    }
    let a_plus = sigma2 * (T::one() + delta);
    let a_minus = sigma2 * (T::one() - delta);
    let lower_sol = elliptic::solve_period_for_level(length, a_plus * eta)?;
    let upper_sol = elliptic::solve_period_for_level(length, a_minus * eta)?;
    Ok(PinchBounds { delta, a_plus, a_minus, eps, t_eps, eta, length, lower_sol, upper_sol })
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = OffspringDistribution<f64>;

    #[test]
    fn boundaries() {
        assert_eq!(moranian_hit_prob(2.0, 0.0).unwrap(), 0.0);
        assert!((moranian_hit_prob(2.0f64, 2.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(moranian_hit_prob(2.0, 2.1).is_err());
        assert_eq!(moranian_hit_prob(2.0, 2.0 + 1e-13).unwrap(), moranian_hit_prob(2.0, 2.0).unwrap());
    }

    #[test]
    fn shooting_matches_elliptic() {
        let d = D::moranian();
        for (x, y) in [(3.0, 1.5), (10.0, 1.0), (10.0, 9.0)] {
            let a = general_hit_prob(&d, x, y).unwrap();
            let b = moranian_hit_prob(x, y).unwrap();
            assert!((a - b).abs() < 1e-9, "({x},{y}): {a} vs {b}");
        }
    }

    #[test]
    fn no_kill_closed_forms() {
        let d = D::new(&[0.25, 0.5, 0.25]).unwrap();
        for t in [0.0, 0.3, 1.0, 10.0, 100.0] {
            let w = no_kill_reach_prob(&d, t).unwrap();
            let exact = 12.0 / (t + 2.0 * 3f64.sqrt()).powi(2);
            assert!((w - exact).abs() < 1e-12 * exact.max(1e-3), "{t}: {w} vs {exact}");
        }
    }

    #[test]
    fn decaying_solution_general_law() {
        let d = D::new(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        let ds = DecayingSolution::new(&d);
        let w = ds.solve(Complex::new(1.0, 0.0), 2.0).unwrap().re;
        // check against direct quadrature of ∫_w^1 dt/√κ₂
        let len = descent_length(&d, w);
        assert!((len - 2.0).abs() < 1e-9, "{len}");
    }

    #[test]
    fn constants() {
        let c = moranian_asymptotic_constants::<f64>(&[0.01, 0.5]).unwrap();
        assert!((c.c1 - 3.29428).abs() < 1e-4);
        assert!((c.c1_big - 33.0822).abs() < 1e-3);
        let r = c.c2[0] / (c.c1_big * 0.01);
        assert!((0.95..=1.05).contains(&r), "{r}");
    }
}
