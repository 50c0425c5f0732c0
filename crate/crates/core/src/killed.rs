//! The number `N` of particles killed at 0.
//!
//! `H(y, s) = Σ_{k>=1} P^y(N ≥ k) s^k` and `φ(y, s) = E^y[s^N]` are tied by
//! `φ = 1 + H(s − 1)/s`, and `u(y, z) = 1 − φ(y, 1 − z)` is the solution of
//! `u″ = h(u)` with `u(0) = z` decaying at infinity. For the double-or-nothing
//! law everything is algebraic in `c = y/√6`:
//! `H = s(1 + c√(1−s))⁻²`, and the tail has the closed form `A_k + B_k`.

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hitting::DecayingSolution;
use crate::offspring::OffspringDistribution;
use crate::real::Real;
use crate::{Dd, Method};

/// Closest `c²` may come to 1 before the closed-form tail is refused.
pub const NEAR_SINGULAR: f64 = 0.05;
const SERIES_K_MAX: usize = 10_000;
// Largest k for the exact-rational tier of the closed form.
const RATIONAL_K_MAX: usize = 2_000;
const COEFF_REL_TOL: f64 = 1e-9;
// Relative accuracy of one general_gf evaluation.
const GF_REL_ERR: f64 = 2e-14;

fn check_y<T: Real>(y: T) -> Result<()> {
    if !(y > T::zero()) || !y.is_finite() {
        return Err(Error::DomainError(format!("start position must be positive, got {y}")));
    }
    Ok(())
}

/// `(H(y, s), φ(y, s))` for the double-or-nothing law, `s ∈ [0, 1]`.
pub fn moranian_gf<T: Real>(y: T, s: T) -> Result<(T, T)> {
    if !(y >= T::zero()) || !y.is_finite() {
        return Err(Error::DomainError(format!("start position must be nonnegative, got {y}")));
    }
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::DomainError(format!("s = {s} outside [0, 1]")));
    }
    let r6 = T::lit(6.0).sqrt();
    let q = (T::one() - s).sqrt();
    let g = T::one() + y * q / r6;
    let d = y * q + r6;
    Ok((s / (g * g), T::one() - T::lit(6.0) * (T::one() - s) / (d * d)))
}

/// `P^y(N = 0) = 1 − 6/(y + √6)²` for the double-or-nothing law.
pub fn moranian_no_kill<T: Real>(y: T) -> T {
    let d = y + T::lit(6.0).sqrt();
    T::one() - T::lit(6.0) / (d * d)
}

struct ClosedForm<T> {
    tail: T,
    pmf: T,
    // Σ of absolute values of the summed terms, for error bounds
    mag_tail: T,
    mag_pmf: T,
}

/// `A_k + B_k` and `A_k − A_{k+1} + B_k − B_{k+1}` in the scalar `T`.
/// Everything that cancels depends on `c² = y²/6` only, which is formed by an
/// exact-as-possible division rather than through a square root.
fn closed_form<T: Real>(y: T, k: usize) -> ClosedForm<T> {
    let c2 = (y * y).quot(T::lit(6.0));
    let c = y.quot(T::lit(6.0).sqrt_refined());
    let m = c2 - T::one();
    let x = c2.quot(m);
    let inv_m2 = T::one().quot(m * m);
    let kk = T::from_usize_lossy(k);
    let two = T::lit(2.0);
    // base_j = x^{j−1}/(c²−1)²
    let mut xk1 = T::one();
    for _ in 1..k {
        xk1 = xk1 * x;
    }
    let a_k = (two * kk - T::one() + c2) * xk1 * inv_m2;
    let a_k1 = (two * kk + T::one() + c2) * xk1 * x * inv_m2;
    // d_i = −[s^i]√(1−s) = (2i−3)!!/(2^i i!), e_i = d_i − d_{i+1}
    let mut d = vec![T::zero(); k + 1];
    d[0] = -T::one();
    for i in 1..=k {
        d[i] = (d[i - 1] * (T::from_usize_lossy(2 * i) - T::lit(3.0))).quot(T::from_usize_lossy(2 * i));
    }
    let mut b = T::zero();
    let mut b_abs = T::zero();
    let mut db = T::zero();
    let mut db_abs = T::zero();
    let mut base = inv_m2;
    for j in 1..=k {
        let i = k - j;
        let w = T::from_usize_lossy(j) * base;
        let tb = d[i] * w;
        let e = (d[i] * T::lit(3.0)).quot(T::from_usize_lossy(2 * i + 2));
        let te = e * w;
        b = b + tb;
        b_abs = b_abs + tb.abs();
        db = db + te;
        db_abs = db_abs + te.abs();
        base = base * x;
    }
    // j = k + 1 term of B_{k+1}, with d_0 = −1
    let last = T::from_usize_lossy(k + 1) * base;
    db = db + last;
    db_abs = db_abs + last.abs();
    ClosedForm {
        tail: a_k + two * c * b,
        pmf: a_k - a_k1 + two * c * db,
        mag_tail: a_k.abs() + two * c * b_abs,
        mag_pmf: a_k.abs() + a_k1.abs() + two * c * db_abs,
    }
}

/// `(P^y(N ≥ k), P^y(N = k))` from the closed form, double-or-nothing law.
///
/// Runs in `f64`; when the running-error bound says cancellation has eaten
/// more than `1e-12` relative accuracy it reruns in double-double, and gives
/// up with [`Error::PrecisionLoss`] past that.
pub fn moranian_tail_and_pmf_exact(y: f64, k: usize) -> Result<(f64, f64)> {
    check_y(y)?;
    if k == 0 {
        return Err(Error::DomainError("k must be at least 1".into()));
    }
    let c = y / 6f64.sqrt();
    let gap = c * c - 1.0;
    if gap.abs() < NEAR_SINGULAR {
        return Err(Error::NearSingularParameter(gap));
    }
    let kf = k as f64;
    let ratio = (c * c / gap).abs();
    if (kf + 1.0) * ratio.ln() > 650.0 {
        return Err(Error::PrecisionLoss(format!("terms of size {ratio:.3}^{k} overflow")));
    }
    let ok = |v: f64, mag: f64, unit: f64| v > 0.0 && 2.0 * (kf + 8.0) * unit * mag <= 1e-12 * v;
    let f = closed_form(y, k);
    if ok(f.tail, f.mag_tail, f64::EPSILON) && ok(f.pmf, f.mag_pmf, f64::EPSILON) {
        return Ok((f.tail, f.pmf));
    }
    let dd = closed_form(Dd::from(y), k);
    let (t, p) = (f64::from(dd.tail), f64::from(dd.pmf));
    let (mt, mp) = (f64::from(dd.mag_tail), f64::from(dd.mag_pmf));
    let unit = 2f64.powi(-104);
    if ok(t, mt, unit) && ok(p, mp, unit) {
        return Ok((t, p));
    }
    if k <= RATIONAL_K_MAX {
        if let Some(r) = closed_form_rational(y, k) {
            return Ok(r);
        }
    }
    Err(Error::PrecisionLoss(format!(
        "cancellation factor {:.3e} at y = {y}, k = {k}",
        mt / t.abs().max(f64::MIN_POSITIVE)
    )))
}

/// `a + 2c·b` for rational `a`, `b` and `c = √c2`, without cancellation:
/// when the two terms have opposite signs, use `(a² − 4c²b²)/(a − 2cb)`
/// whose numerator is formed exactly.
fn combine_exact(a: &BigRational, b: &BigRational, c2: &BigRational) -> Option<f64> {
    let c = c2.to_f64()?.sqrt();
    let (af, bf) = (a.to_f64()?, b.to_f64()?);
    if a.is_negative() == b.is_negative() || a.is_zero() || b.is_zero() {
        return Some(af + 2.0 * c * bf);
    }
    let four = BigRational::from_integer(BigInt::from(4));
    let num = a * a - four * c2 * b * b;
    Some(num.to_f64()? / (af - 2.0 * c * bf))
}

/// The closed form in exact rational arithmetic; `y` is read as the exact
/// binary fraction it is stored as.
fn closed_form_rational(y: f64, k: usize) -> Option<(f64, f64)> {
    let int = |n: usize| BigRational::from_integer(BigInt::from(n));
    let yr = BigRational::from_float(y)?;
    let c2 = &yr * &yr / int(6);
    let m = &c2 - BigRational::one();
    let x = &c2 / &m;
    let inv_m2 = (&m * &m).recip();
    let mut d = vec![-BigRational::one()];
    for i in 1..=k {
        let next = &d[i - 1] * BigRational::new(BigInt::from(2 * i) - 3, BigInt::from(2 * i));
        d.push(next);
    }
    // Horner in x over j = k..1 of j·d_{k−j} and j·e_{k−j}
    let mut b = BigRational::zero();
    let mut db = BigRational::zero();
    for j in (1..=k).rev() {
        let i = k - j;
        let e = &d[i] * BigRational::new(BigInt::from(3), BigInt::from(2 * i + 2));
        b = b * &x + &d[i] * int(j);
        db = db * &x + e * int(j);
    }
    let mut xk1 = BigRational::one();
    for _ in 1..k {
        xk1 *= &x;
    }
    let xk = &xk1 * &x;
    db += int(k + 1) * &xk;
    let a_k = (int(2 * k - 1) + &c2) * &xk1 * &inv_m2;
    let a_k1 = (int(2 * k + 1) + &c2) * &xk * &inv_m2;
    let tail = combine_exact(&a_k, &(b * &inv_m2), &c2)?;
    let pmf = combine_exact(&(a_k - a_k1), &(db * &inv_m2), &c2)?;
    Some((tail, pmf))
}

/// `P^y(N ≥ k) = A_k + B_k` for the double-or-nothing law.
pub fn moranian_tail_exact(y: f64, k: usize) -> Result<f64> {
    moranian_tail_and_pmf_exact(y, k).map(|r| r.0)
}

#[derive(Debug, Clone)]
pub struct KilledTail<T> {
    pub y: T,
    pub dist: OffspringDistribution<T>,
    /// `tail[k − 1] = P^y(N ≥ k)` for `k = 1..=k_max`.
    pub tail: Vec<T>,
    /// `pmf[k − 1] = P^y(N = k)`.
    pub pmf: Vec<T>,
    /// Absolute error estimate per tail coefficient.
    pub error: Vec<T>,
    /// `P^y(N = 0)`.
    pub p_zero: T,
    pub method: Method,
}

impl<T: Real> KilledTail<T> {
    pub fn k_max(&self) -> usize {
        self.tail.len()
    }

    pub fn tail_at(&self, k: usize) -> Option<T> {
        k.checked_sub(1).and_then(|i| self.tail.get(i).copied())
    }

    pub fn pmf_at(&self, k: usize) -> Option<T> {
        if k == 0 {
            return Some(self.p_zero);
        }
        self.pmf.get(k - 1).copied()
    }

    /// `Σ_{k<=k_max} k·P(N = k)`, which tends to `E[N] = 1`.
    pub fn partial_mean(&self) -> T {
        self.pmf.iter().enumerate().fold(T::zero(), |a, (i, &p)| a + T::from_usize_lossy(i + 1) * p)
    }

    /// `Σ_{k<=m} k·P(N ≥ k)`.
    pub fn weighted_tail_sum(&self, m: usize) -> T {
        self.tail.iter().take(m).enumerate().fold(T::zero(), |a, (i, &t)| a + T::from_usize_lossy(i + 1) * t)
    }
}

fn pmf_from_tail<T: Real>(tail: &[T], next: T) -> Vec<T> {
    (0..tail.len()).map(|i| tail[i] - tail.get(i + 1).copied().unwrap_or(next)).collect()
}

/// Taylor coefficients of `H(y, ·)` for the double-or-nothing law, from
/// `1/(1 + c√(1−s))` by the power-series reciprocal recurrence. All terms are
/// positive, so the recurrence is stable for any `c`.
pub fn moranian_series<T: Real>(y: T, k_max: usize) -> Result<KilledTail<T>> {
    check_y(y)?;
    if k_max == 0 || k_max > SERIES_K_MAX {
        return Err(Error::DomainError(format!("k_max = {k_max} outside 1..={SERIES_K_MAX}")));
    }
    let n = k_max + 1;
    let c = y / T::lit(6.0).sqrt();
    let g0 = T::one() + c;
    let mut d = vec![T::zero(); n];
    d[0] = -T::one();
    for i in 1..n {
        d[i] = d[i - 1] * (T::from_usize_lossy(2 * i) - T::lit(3.0)) / T::from_usize_lossy(2 * i);
    }
    // 1/g with g = (1 + c) − c Σ_{i>=1} d_i s^i
    let mut r = vec![T::zero(); n];
    r[0] = g0.recip();
    for m in 1..n {
        let mut s = T::zero();
        for i in 1..=m {
            s = s + d[i] * r[m - i];
        }
        r[m] = c * s / g0;
    }
    // H/s = 1/g², so P(N ≥ k) = [s^{k−1}] r*r
    let mut sq = vec![T::zero(); n];
    for (m, out) in sq.iter_mut().enumerate() {
        let mut s = T::zero();
        for i in 0..=m {
            s = s + r[i] * r[m - i];
        }
        *out = s;
    }
    let tail: Vec<T> = sq[..k_max].to_vec();
    let pmf = pmf_from_tail(&tail, sq[k_max]);
    let error = tail.iter().map(|&t| t * T::epsilon() * T::from_usize_lossy(4 * k_max)).collect();
    Ok(KilledTail {
        y,
        dist: OffspringDistribution::moranian(),
        p_zero: T::one() - tail[0],
        tail,
        pmf,
        error,
        method: Method::Series,
    })
}

/// Tail table for the double-or-nothing law: the closed form where it is
/// well conditioned, the series otherwise (visible in `method`). Tables
/// longer than 2000 rows always use the series, which costs `O(k_max²)` in
/// total against `O(k)` per row for the closed form.
pub fn moranian_killed_tail(y: f64, k_max: usize) -> Result<KilledTail<f64>> {
    check_y(y)?;
    if k_max > RATIONAL_K_MAX {
        return moranian_series(y, k_max);
    }
    let exact: Result<Vec<(f64, f64)>> = (1..=k_max).into_par_iter().map(|k| moranian_tail_and_pmf_exact(y, k)).collect();
    match exact {
        Ok(rows) => Ok(KilledTail {
            y,
            dist: OffspringDistribution::moranian(),
            tail: rows.iter().map(|r| r.0).collect(),
            pmf: rows.iter().map(|r| r.1).collect(),
            error: rows.iter().map(|r| r.0 * 1e-12).collect(),
            p_zero: moranian_no_kill(y),
            method: Method::ExactMoranian,
        }),
        Err(Error::NearSingularParameter(_)) | Err(Error::PrecisionLoss(_)) => moranian_series(y, k_max),
        Err(e) => Err(e),
    }
}

/// `H` and `φ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfValue<T> {
    pub h: Complex<T>,
    pub phi: Complex<T>,
}

/// Generating functions of `N` for an arbitrary critical law, through the
/// integral equation for `u(y, z)`.
#[derive(Debug, Clone)]
pub struct GfSolver<T> {
    inner: DecayingSolution<T>,
}

impl<T: Real> GfSolver<T> {
    pub fn new(dist: &OffspringDistribution<T>) -> Self {
        Self { inner: DecayingSolution::new(dist) }
    }

    /// `u(y, z) = 1 − φ(y, 1 − z)`.
    pub fn u(&self, y: T, z: Complex<T>) -> Result<Complex<T>> {
        self.inner.solve(z, y)
    }

    pub fn eval(&self, y: T, s: Complex<T>) -> Result<GfValue<T>> {
        check_y(y)?;
        let one = Complex::new(T::one(), T::zero());
        let real = s.im == T::zero() && s.re >= T::zero() && s.re <= T::one();
        if !real {
            if s.norm() > T::lit(0.9 * (1.0 + 1e-12)) {
                return Err(Error::DomainError(format!("|s| = {} exceeds 0.9", s.norm())));
            }
            if !self.inner.hypothesis_ok() {
                return Err(Error::HypothesisViolated(format!("cannot continue to s = {s}")));
            }
        }
        if s == one {
            return Ok(GfValue { h: one, phi: one });
        }
        let z = one - s;
        let u = self.u(y, z)?;
        Ok(GfValue { h: s * u / z, phi: one - u })
    }
}

/// `(H(y, s), φ(y, s))` for an arbitrary critical law.
pub fn general_gf<T: Real>(dist: &OffspringDistribution<T>, y: T, s: Complex<T>) -> Result<GfValue<T>> {
    GfSolver::new(dist).eval(y, s)
}

/// Taylor coefficients of `H(y, ·)` by a discrete Cauchy integral on
/// `|s| = radius`. Each coefficient carries the bound
/// `ε·max|H|·r^{-k} + r^N/(1 − r^N)` (roundoff plus aliasing).
pub fn tail_from_series_general(
    dist: &OffspringDistribution<f64>,
    y: f64,
    k_max: usize,
    radius: f64,
) -> Result<KilledTail<f64>> {
    check_y(y)?;
    if k_max == 0 || k_max > SERIES_K_MAX {
        return Err(Error::DomainError(format!("k_max = {k_max} outside 1..={SERIES_K_MAX}")));
    }
    if !(radius > 0.0 && radius <= 0.9) {
        return Err(Error::DomainError(format!("radius {radius} outside (0, 0.9]")));
    }
    let alias_nodes = (1e-17f64.ln() / radius.ln()).ceil() as usize;
    let n = (2 * (k_max + 1)).max(alias_nodes).next_multiple_of(2);
    let solver = GfSolver::new(dist);
    let half: Vec<Complex64> = (0..=n / 2)
        .into_par_iter()
        .map(|j| {
            let s = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / n as f64);
            solver.eval(y, s).map(|v| v.h)
        })
        .collect::<Result<_>>()?;
    let mut buf: Vec<Complex64> = (0..n).map(|j| if j <= n / 2 { half[j] } else { half[n - j].conj() }).collect();
    let max_h = half.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let rn = radius.powi(n as i32);
    let alias = rn / (1.0 - rn);
    let mut tail = Vec::with_capacity(k_max + 1);
    let mut error = Vec::with_capacity(k_max + 1);
    let mut scale = 1.0 / n as f64;
    for (k, v) in buf.iter().enumerate().take(k_max + 2) {
        if k > 0 {
            tail.push(v.re * scale);
            error.push(GF_REL_ERR * max_h * scale * n as f64 + alias);
        }
        scale /= radius;
    }
    for k in 0..k_max {
        if error[k] > COEFF_REL_TOL * tail[k].abs() {
            return Err(Error::PrecisionLoss(format!(
                "coefficient {} = {:.3e} has error bound {:.3e} on |s| = {radius}",
                k + 1,
                tail[k],
                error[k]
            )));
        }
    }
    let next = tail[k_max];
    tail.truncate(k_max);
    error.truncate(k_max);
    let pmf = pmf_from_tail(&tail, next);
    Ok(KilledTail { y, dist: dist.clone(), p_zero: 1.0 - tail[0], tail, pmf, error, method: Method::Series })
}

/// Coefficient extraction for any law: the exact recurrence for the
/// double-or-nothing law, a Cauchy integral on `|s| = 0.9` otherwise.
pub fn tail_from_series(dist: &OffspringDistribution<f64>, y: f64, k_max: usize) -> Result<KilledTail<f64>> {
    if dist.is_moranian() {
        moranian_series(y, k_max)
    } else {
        tail_from_series_general(dist, y, k_max, 0.9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KilledConstants<T> {
    /// `lim k^{3/2}P^y(N ≥ k)/y`, σ = 1.
    pub c5: T,
    /// `lim k^{5/2}P^y(N = k)/y`, σ = 1.
    pub c6: T,
    /// `σ/√(6π)`.
    pub c7: T,
    /// `3σ/(2√(6π))`.
    pub c8: T,
}

pub fn killed_asymptotic_constants<T: Real>(dist: &OffspringDistribution<T>) -> KilledConstants<T> {
    let base = (T::lit(6.0) * T::PI()).sqrt().recip();
    let sigma = dist.sigma();
    let three_halves = T::lit(1.5);
    KilledConstants { c5: base, c6: three_halves * base, c7: sigma * base, c8: three_halves * sigma * base }
}

/// `E^y[N]`, which is 1 for every critical law and every `y > 0`.
pub fn expected_killed<T: Real>(_dist: &OffspringDistribution<T>, y: T) -> Result<T> {
    check_y(y)?;
    Ok(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf_boundaries() {
        let (h, phi) = moranian_gf(1.0f64, 1.0).unwrap();
        assert_eq!((h, phi), (1.0, 1.0));
        let (h, phi) = moranian_gf(1.0f64, 0.0).unwrap();
        assert_eq!(h, 0.0);
        assert!((phi - moranian_no_kill(1.0)).abs() < 1e-15);
        let (h, _) = moranian_gf(0.0f64, 0.3).unwrap();
        assert!((h - 0.3).abs() < 1e-15);
        for s in [0.1, 0.5, 0.9] {
            let (h, phi) = moranian_gf(2.0f64, s).unwrap();
            assert!((phi - (1.0 + h * (s - 1.0) / s)).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_matches_series() {
        for y in [0.5, 1.0, 2.0, 5.0] {
            let s = moranian_series(y, 51).unwrap();
            for k in 1..=50 {
                let (t, p) = moranian_tail_and_pmf_exact(y, k).unwrap();
                let ts = s.tail_at(k).unwrap();
                assert!((t - ts).abs() <= 1e-12 * ts, "y={y} k={k}: {t} vs {ts}");
                let ps = s.pmf_at(k).unwrap();
                assert!((p - ps).abs() <= 1e-10 * ps, "y={y} k={k}: {p} vs {ps}");
            }
        }
    }

    #[test]
    fn near_singular_is_refused() {
        let y = 6f64.sqrt();
        assert!(matches!(moranian_tail_exact(y, 3), Err(Error::NearSingularParameter(_))));
        let t = moranian_killed_tail(y, 5).unwrap();
        assert_eq!(t.method, Method::Series);
        assert!((t.tail[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn first_tail_is_kill_probability() {
        for y in [0.3, 1.0, 4.0] {
            let t = moranian_tail_exact(y, 1).unwrap();
            assert!((t - 6.0 / (y + 6f64.sqrt()).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn general_gf_reduces_to_moranian() {
        let d = OffspringDistribution::<f64>::moranian();
        let v = general_gf(&d, 1.0, Complex::new(0.5, 0.0)).unwrap();
        let (h, phi) = moranian_gf(1.0, 0.5).unwrap();
        assert!((v.h.re - h).abs() < 1e-12 && (v.phi.re - phi).abs() < 1e-12);
    }

    #[test]
    fn cauchy_extraction_binomial_law() {
        // h = z²/2 maps H(y, s) to the double-or-nothing H at y/√2
        let d = OffspringDistribution::<f64>::new(&[0.25, 0.5, 0.25]).unwrap();
        let t = tail_from_series_general(&d, 1.0, 30, 0.9).unwrap();
        let m = moranian_series(1.0 / 2f64.sqrt(), 30).unwrap();
        for k in 1..=30 {
            let (a, b) = (t.tail_at(k).unwrap(), m.tail_at(k).unwrap());
            assert!((a - b).abs() < 1e-10 * b, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn constants() {
        let c = killed_asymptotic_constants(&OffspringDistribution::<f64>::moranian());
        assert!((c.c5 - 0.230329).abs() < 1e-6);
        assert!((c.c6 - 0.345494).abs() < 1e-6);
        assert_eq!(c.c5, c.c7);
    }
}
