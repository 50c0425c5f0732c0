//! Weierstrass ℘ on lattices with `g₂ = 0`, `g₃ < 0`.
//!
//! Such a lattice is hexagonal, generated by `(Ω/√3)e^{iπ/6}` and `(Ω/√3)i`,
//! with real period `Ω`. By homogeneity, `g₃(βL) = β⁻⁶g₃(L)` and
//! `℘_{βL}(βz) = β⁻²℘_L(z)`, so every evaluation is done on the unit lattice
//! (`Ω = 1`) whose `g₃` is summed once.
//!
//! On the real axis ℘ has double poles at `nΩ` and simple zeros at `Ω/3`,
//! `2Ω/3`; it increases from 0 to ∞ on `(2Ω/3, Ω)`, which is the branch the
//! hitting probabilities live on.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::real::Real;

const DOUBLING_RADIUS: f64 = 0.188; // 0.35 · sqrt(covolume) on the unit lattice
const POLE_TOL: f64 = 1e-12;
const LAURENT_TERMS: usize = 24;

/// `g₃` of the unit lattice, by direct Eisenstein summation over
/// `|m|, |n| <= 400` with the `N⁻⁴` tail removed by extrapolation.
pub fn reference_g3() -> f64 {
    static G3: OnceLock<f64> = OnceLock::new();
    *G3.get_or_init(|| {
        let (a, b) = unit_generators::<f64>();
        let partial = |n: i64| {
            let mut s = Complex::new(0.0, 0.0);
            for i in -n..=n {
                for j in -n..=n {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let l = a * i as f64 + b * j as f64;
                    let l2 = l * l;
                    s += (l2 * l2 * l2).inv();
                }
            }
            140.0 * s.re
        };
        let (s1, s2) = (partial(200), partial(400));
        (16.0 * s2 - s1) / 15.0
    })
}

fn unit_generators<T: Real>() -> (Complex<T>, Complex<T>) {
    let r3 = T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    (Complex::new(half, half / r3), Complex::new(T::zero(), T::one() / r3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AehLattice<T> {
    omega: T,
    g3: T,
    // Laurent coefficients of the unit lattice: ℘(z) = z⁻² + Σ_j a_j z^{6j−2}.
    laurent: Vec<T>,
}

impl<T: Real> AehLattice<T> {
    /// Lattice with the given invariant `g₃ < 0`.
    pub fn from_g3(g3: T) -> Result<Self> {
        if !(g3 < T::zero()) {
            return Err(Error::DomainError(format!("g3 must be negative, got {g3}")));
        }
        let omega = (g3 / T::lit(reference_g3())).powf(T::lit(-1.0 / 6.0));
        Ok(Self::build(omega, g3))
    }

    /// Lattice with real period `omega > 0`.
    pub fn from_omega(omega: T) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::DomainError(format!("real period must be positive, got {omega}")));
        }
        let g3 = T::lit(reference_g3()) * omega.powi(-6);
        Ok(Self::build(omega, g3))
    }

    fn build(omega: T, g3: T) -> Self {
        let g = T::lit(reference_g3());
        // c_k with ℘ = z⁻² + Σ_{k>=2} c_k z^{2k−2}; only k ≡ 0 mod 3 survive.
        let kmax = 3 * LAURENT_TERMS;
        let mut c = vec![T::zero(); kmax + 1];
        c[3] = g / T::lit(28.0);
        for k in 4..=kmax {
            let mut s = T::zero();
            for m in 2..=k - 2 {
                s = s + c[m] * c[k - m];
            }
            c[k] = T::lit(3.0) * s / T::from_usize_lossy((2 * k + 1) * (k - 3));
        }
        let laurent = (1..=LAURENT_TERMS).map(|j| c[3 * j]).collect();
        Self { omega, g3, laurent }
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn g3(&self) -> T {
        self.g3
    }

    pub fn generators(&self) -> (Complex<T>, Complex<T>) {
        let (a, b) = unit_generators::<T>();
        (a * self.omega, b * self.omega)
    }

    /// Reduces `zeta` (unit-lattice coordinates) to the nearest-point cell.
    fn reduce(zeta: Complex<T>) -> Complex<T> {
        let (a, b) = unit_generators::<T>();
        let r3 = T::lit(3.0).sqrt();
        let p = T::lit(2.0) * zeta.re;
        let q = r3 * zeta.im - p / T::lit(2.0);
        let (p0, q0) = (p.floor(), q.floor());
        let mut best = zeta - (a * p0 + b * q0);
        for (dp, dq) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let cand = zeta - (a * (p0 + T::lit(dp)) + b * (q0 + T::lit(dq)));
            if cand.norm_sqr() < best.norm_sqr() {
                best = cand;
            }
        }
        best
    }

    fn series(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let z2 = z * z;
        let z6 = z2 * z2 * z2;
        let inv2 = z2.inv();
        // Σ a_j z^{6j−2} = z⁴ Σ a_j (z⁶)^{j−1}
        let mut s = Complex::new(T::zero(), T::zero());
        let mut ds = Complex::new(T::zero(), T::zero());
        for (j, &a) in self.laurent.iter().enumerate().rev() {
            let e = T::from_usize_lossy(6 * (j + 1) - 2);
            s = s * z6 + a;
            ds = ds * z6 + a * e;
        }
        let z4 = z2 * z2;
        let p = inv2 + z4 * s;
        let dp = -(inv2 * T::lit(2.0)) / z + z2 * z * ds;
        (p, dp)
    }

    /// ℘ and ℘′ on the unit lattice.
    fn unit_wp(&self, zeta: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let mut w = Self::reduce(zeta);
        if w.norm() < T::lit(POLE_TOL) {
            return Err(Error::PoleError(format!("{zeta}·Ω")));
        }
        let mut halvings = 0;
        while w.norm() > T::lit(DOUBLING_RADIUS) {
            w = w / T::lit(2.0);
            halvings += 1;
        }
        let (mut p, mut dp) = self.series(w);
        for _ in 0..halvings {
            let p2 = p * p;
            let p3 = p2 * p;
            let p4 = p2 * p2;
            let inv = dp.inv();
            let inv2 = inv * inv;
            let np = p4 * inv2 * T::lit(9.0) - p * T::lit(2.0);
            let ndp = p3 * inv * T::lit(18.0) - p3 * p3 * inv2 * inv * T::lit(54.0) - dp;
            p = np;
            dp = ndp;
        }
        Ok((p, dp))
    }

    /// `(℘(z), ℘′(z))`.
    pub fn wp(&self, z: Complex<T>) -> Result<(Complex<T>, Complex<T>)> {
        let (p, dp) = self.unit_wp(z / self.omega)?;
        let o2 = self.omega * self.omega;
        Ok((p / o2, dp / (o2 * self.omega)))
    }

    /// ℘ and ℘′ at a real argument.
    pub fn wp_real(&self, x: T) -> Result<(T, T)> {
        let (p, dp) = self.wp(Complex::new(x, T::zero()))?;
        Ok((p.re, dp.re))
    }

    /// The real `z` on the increasing branch `(2Ω/3, Ω)` with `℘(z) = w`,
    /// for `w >= 0`.
    pub fn wp_inverse_real(&self, w: T) -> Result<T> {
        Ok(self.omega - elliptic_integral_inverse(w, self.g3)?)
    }
}

/// `∫_w^∞ dt / √(4t³ − g₃)`: the distance from the pole at `Ω` back to the
/// point where ℘ equals `w` on the increasing real branch.
pub fn elliptic_integral_inverse<T: Real>(w: T, g3: T) -> Result<T> {
    if !(g3 < T::zero()) {
        return Err(Error::DomainError(format!("g3 must be negative, got {g3}")));
    }
    let four = T::lit(4.0);
    if !(four * w * w * w - g3 > T::zero()) || !w.is_finite() {
        return Err(Error::DomainError(format!("4w³ − g₃ vanishes on the path from w = {w}")));
    }
    let split = (w + w.abs()).max(T::one());
    let tol = Tolerance::new(1e-300, 1e-14);
    // t = w + s² on [w, split]
    let head = quad::integrate(
        |s: T| {
            let t = w + s * s;
            let d = four * t * t * t - g3;
            T::lit(2.0) * s / d.sqrt()
        },
        T::zero(),
        (split - w).sqrt(),
        tol,
    );
    // t = 1/r² on [split, ∞)
    let tail = quad::integrate(
        |r: T| {
            let r3 = r * r * r;
            T::lit(2.0) / (four - g3 * r3 * r3).sqrt()
        },
        T::zero(),
        split.sqrt().recip(),
        tol,
    );
    if !head.converged || !tail.converged {
        return Err(Error::ConvergenceError(format!(
            "elliptic integral from {w}: quadrature error {}",
            head.error + tail.error
        )));
    }
    Ok(head.value + tail.value)
}

/// `∫₀^{w} dt / √(4t³ − g₃)` for `w >= 0`, computed directly rather than as a
/// difference of two tails.
pub fn elliptic_integral_from_zero<T: Real>(w: T, g3: T) -> T {
    let four = T::lit(4.0);
    // Scale so the bump near t = 0 has unit width: t = τ·(−g₃/4)^{1/3}.
    let t0 = (-g3 / four).cbrt();
    let f = |tau: T| {
        let t = tau * t0;
        t0 / (four * t * t * t - g3).sqrt()
    };
    let upper = w / t0;
    let tol = Tolerance::new(1e-300, 1e-14);
    let knee = upper.min(T::lit(4.0));
    let mut total = quad::integrate(f, T::zero(), knee, tol).value;
    if upper > knee {
        // σ = τ^{-1/2} turns the τ^{-3/2} decay into a smooth integrand
        let g = |sig: T| {
            let tau = (sig * sig).recip();
            T::lit(2.0) * f(tau) * tau * tau.sqrt()
        };
        total = total + quad::integrate(g, upper.sqrt().recip(), knee.sqrt().recip(), tol).value;
    }
    total
}

/// Lattice data matching the boundary condition at a target `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSolution<T> {
    pub x: T,
    /// The boundary value `6℘(x + α_x)`; 1 for the hitting problem.
    pub level: T,
    pub omega_x: T,
    pub g3_x: T,
    /// `ω₁/ω_x`.
    pub lambda_x: T,
    /// `2ω_x/3`, the zero of ℘ that sits at `y = 0`.
    pub alpha_x: T,
    pub lattice: AehLattice<T>,
}

impl<T: Real> PeriodSolution<T> {
    /// `6℘(y + α_x)`.
    pub fn profile(&self, y: T) -> Result<T> {
        Ok(T::lit(6.0) * self.lattice.wp_real(y + self.alpha_x)?.0)
    }

    /// `6℘′(y + α_x)`.
    pub fn profile_slope(&self, y: T) -> Result<T> {
        Ok(T::lit(6.0) * self.lattice.wp_real(y + self.alpha_x)?.1)
    }
}

fn solve_g3<T: Real>(x: T, level: T) -> Result<T> {
    let w = level / T::lit(6.0);
    let resid = |lg: T| elliptic_integral_from_zero(w, -lg.exp()) - x;
    // x ≈ Ω/3 for small level/large x; start there and widen.
    let guess = (T::lit(-reference_g3()) * (T::lit(3.0) * x).powi(-6)).ln();
    let step = T::lit(2.0);
    let (mut lo, mut hi) = (guess - step, guess + step);
    let (mut flo, mut fhi) = (resid(lo), resid(hi));
    let mut widen = 0;
    // resid decreases in log(−g₃)
    while !(flo > T::zero() && fhi < T::zero()) {
        widen += 1;
        if widen > 200 {
            return Err(Error::ConvergenceError(format!("no bracket for g3 at x = {x}")));
        }
        if flo <= T::zero() {
            lo = lo - step * T::from_usize_lossy(widen);
            flo = resid(lo);
        }
        if fhi >= T::zero() {
            hi = hi + step * T::from_usize_lossy(widen);
            fhi = resid(hi);
        }
    }
    // Illinois regula falsi
    let mut side = 0i8;
    for _ in 0..200 {
        let mid = (lo * fhi - hi * flo) / (fhi - flo);
        let mid = if mid > lo && mid < hi { mid } else { (lo + hi) / T::lit(2.0) };
        let fm = resid(mid);
        if fm == T::zero() || (hi - lo) <= T::lit(4.0) * T::epsilon() * mid.abs().max(T::one()) {
            return Ok(-mid.exp());
        }
        if fm > T::zero() {
            lo = mid;
            flo = fm;
            if side == 1 {
                fhi = fhi / T::lit(2.0);
            }
            side = 1;
        } else {
            hi = mid;
            fhi = fm;
            if side == -1 {
                flo = flo / T::lit(2.0);
            }
            side = -1;
        }
        if (hi - lo) <= T::lit(8.0) * T::epsilon() * lo.abs().max(T::one()) {
            return Ok(-((lo + hi) / T::lit(2.0)).exp());
        }
    }
    Err(Error::ConvergenceError(format!("g3 iteration did not settle at x = {x}")))
}

/// Solves `x = ∫₀^{1/6} dt/√(4t³ − g₃)` for the lattice with
/// `6℘(x + 2ω_x/3) = 1`.
pub fn solve_period_for_target<T: Real>(x: T) -> Result<PeriodSolution<T>> {
    solve_period_for_level(x, T::one())
}

/// As [`solve_period_for_target`] with boundary value `6℘(x + α_x) = level`.
pub fn solve_period_for_level<T: Real>(x: T, level: T) -> Result<PeriodSolution<T>> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::DomainError(format!("target must be positive, got {x}")));
    }
    if !(level > T::zero()) || !level.is_finite() {
        return Err(Error::DomainError(format!("boundary level must be positive, got {level}")));
    }
    let g3 = solve_g3(x, level)?;
    let lattice = AehLattice::from_g3(g3)?;
    let omega_1 = AehLattice::from_g3(solve_g3(T::one(), T::one())?)?.omega();
    let omega_x = lattice.omega();
    let sol = PeriodSolution {
        x,
        level,
        omega_x,
        g3_x: g3,
        lambda_x: omega_1 / omega_x,
        alpha_x: T::lit(2.0) * omega_x / T::lit(3.0),
        lattice,
    };
    let check = sol.profile(x)?;
    if (check - level).abs() > T::lit(1e-9) * level.max(T::one()) {
        return Err(Error::ConvergenceError(format!(
            "boundary identity off: 6℘(x + α) = {check}, wanted {level}"
        )));
    }
    Ok(sol)
}

/// `ω₁`, the real period of the lattice for `x = 1`.
pub fn omega_1<T: Real>() -> Result<T> {
    Ok(AehLattice::from_g3(solve_g3(T::one(), T::one())?)?.omega())
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    #[test]
    fn zeros_and_ode() {
        let lat = AehLattice::<f64>::from_omega(2.7).unwrap();
        let o = lat.omega();
        assert!(lat.wp_real(o / 3.0).unwrap().0.abs() < 1e-12);
        assert!(lat.wp_real(2.0 * o / 3.0).unwrap().0.abs() < 1e-12);
        let (p, dp) = lat.wp(C::new(0.41 * o, 0.0)).unwrap();
        assert!((dp * dp - 4.0 * p * p * p + lat.g3()).norm() < 1e-9);
    }

    #[test]
    fn periodic() {
        let lat = AehLattice::<f64>::from_g3(-0.023786).unwrap();
        let o = lat.omega();
        let z = C::new(0.37 * o, 0.2 * o);
        let (a, _) = lat.wp(z).unwrap();
        let (b, _) = lat.wp(z + o).unwrap();
        let (g1, g2) = lat.generators();
        let (c, _) = lat.wp(z + g1 * 3.0 - g2).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        assert!((a - c).norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn pole_is_reported() {
        let lat = AehLattice::<f64>::from_omega(1.0).unwrap();
        assert!(matches!(lat.wp(C::new(2.0, 0.0)), Err(Error::PoleError(_))));
        assert!(AehLattice::<f64>::from_g3(0.1).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let lat = AehLattice::<f64>::from_g3(-0.023786).unwrap();
        for w in [0.2, 1.0, 5.0] {
            let z = lat.wp_inverse_real(w).unwrap();
            assert!((lat.wp_real(z).unwrap().0 - w).abs() < 1e-8 * w);
        }
    }

    #[test]
    fn integral_from_zero_matches_difference() {
        let g3 = -0.023786;
        let a: f64 = elliptic_integral_inverse(0.0, g3).unwrap() - elliptic_integral_inverse(1.0 / 6.0, g3).unwrap();
        let b = elliptic_integral_from_zero(1.0 / 6.0, g3);
        assert!((a - b).abs() < 1e-12);
        assert!((a - 1.0).abs() < 1e-4);
    }

    #[test]
    fn period_at_one() {
        let s = solve_period_for_target(1.0f64).unwrap();
        assert!((s.omega_x - 9.88285).abs() < 1e-4, "{}", s.omega_x);
        assert!((s.g3_x + 0.023786).abs() < 1e-5, "{}", s.g3_x);
        assert!((s.lambda_x - 1.0).abs() < 1e-13);
    }
}
