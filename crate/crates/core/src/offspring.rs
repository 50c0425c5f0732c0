//! Critical offspring laws with finite support and the analytic objects
//! derived from them: the pgf Ψ, the forcing term `h(z) = 2[Ψ(1−z) − (1−z)]`,
//! and its antiderivative `κ₂(z) = 2∫₀^z h`.

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::poly;
use crate::real::Real;

const STRICT_TOL: f64 = 1e-12;
const LENIENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution<T> {
    probs: Vec<T>,
    sigma2: T,
    third_moment: T,
    h: Vec<T>,
    kappa2: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport<T> {
    /// Always true for finite support: h and κ are polynomials.
    pub analytic_radius_ok: bool,
    /// Zeros of κ(z)/z³ with `0 < |z| <= 2`.
    pub kappa_zeros_in_disk: Vec<Complex<T>>,
    /// Every zero of κ(z)/z³, wherever it lies.
    pub all_zeros: Vec<Complex<T>>,
    pub passes: bool,
}

fn binom<T: Real>(n: usize, k: usize) -> T {
    let mut r = T::one();
    for i in 0..k {
        r = r * T::from_usize_lossy(n - i) / T::from_usize_lossy(i + 1);
    }
    r
}

fn eval_real<T: Real>(c: &[T], z: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &a| acc * z + a)
}

fn eval_complex<T: Real>(c: &[T], z: Complex<T>) -> Complex<T> {
    c.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &a| acc * z + a)
}

impl<T: Real> OffspringDistribution<T> {
    /// Validates `probs` (indexed from 0 offspring) to tolerance 1e-12.
    pub fn new(probs: &[T]) -> Result<Self> {
        let tol = T::lit(STRICT_TOL);
        if probs.is_empty() {
            return Err(Error::NotProbability("empty list".into()));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < T::zero()) {
            return Err(Error::NotProbability(format!("p_{k} = {p}")));
        }
        let sum = probs.iter().fold(T::zero(), |a, &p| a + p);
        if (sum - T::one()).abs() > tol {
            return Err(Error::NotProbability(format!("probabilities sum to {sum}")));
        }
        let mean = Self::moment(probs, 1);
        if (mean - T::one()).abs() > tol {
            return Err(Error::NotCritical(mean.to_f64_lossy()));
        }
        let mut probs = probs.to_vec();
        while probs.len() > 1 && probs[probs.len() - 1] == T::zero() {
            probs.pop();
        }
        let sigma2 = Self::moment(&probs, 2) - mean * mean;
        if sigma2 <= tol {
            return Err(Error::Degenerate);
        }
        let third_moment = Self::moment(&probs, 3);

        let m = probs.len() - 1;
        let mut h = vec![T::zero(); m.max(2) + 1];
        for (j, hj) in h.iter_mut().enumerate().skip(2) {
            let s = probs.iter().enumerate().fold(T::zero(), |a, (k, &p)| if k >= j { a + p * binom::<T>(k, j) } else { a });
            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
            *hj = T::lit(2.0) * sign * s;
        }
        let mut kappa2 = vec![T::zero(); h.len() + 1];
        for (j, &hj) in h.iter().enumerate() {
            kappa2[j + 1] = T::lit(2.0) * hj / T::from_usize_lossy(j + 1);
        }
        Ok(Self { probs, sigma2, third_moment, h, kappa2 })
    }

    /// Like [`new`](Self::new) but accepts input within 1e-9 of a valid
    /// critical law, renormalising and moving mass between 0 and the top of
    /// the support so the mean is exactly 1.
    pub fn from_config(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() || raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NotProbability(format!("{raw:?}")));
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > LENIENT_TOL {
            return Err(Error::NotProbability(format!("probabilities sum to {sum}")));
        }
        let mut p: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        while p.len() > 1 && p[p.len() - 1] == 0.0 {
            p.pop();
        }
        let mean: f64 = p.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
        if (mean - 1.0).abs() > LENIENT_TOL {
            return Err(Error::NotCritical(mean));
        }
        let top = p.len() - 1;
        if top >= 2 {
            let eps = (1.0 - mean) / top as f64;
            if p[0] - eps >= 0.0 && p[top] + eps >= 0.0 {
                p[0] -= eps;
                p[top] += eps;
            }
        }
        Self::new(&p.into_iter().map(T::lit).collect::<Vec<_>>())
    }

    /// Double-or-nothing reproduction, Ψ(t) = (1 + t²)/2.
    pub fn moranian() -> Self {
        Self::new(&[T::lit(0.5), T::zero(), T::lit(0.5)]).expect("valid law")
    }

    fn moment(p: &[T], r: i32) -> T {
        p.iter().enumerate().fold(T::zero(), |a, (k, &x)| a + x * T::from_usize_lossy(k).powi(r))
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    /// E[L³].
    pub fn third_moment(&self) -> T {
        self.third_moment
    }

    /// Ψ‴(1) = E[L(L−1)(L−2)].
    pub fn psi_third_derivative_at_one(&self) -> T {
        self.probs.iter().enumerate().fold(T::zero(), |a, (k, &p)| {
            let k = T::from_usize_lossy(k);
            a + p * k * (k - T::one()) * (k - T::lit(2.0))
        })
    }

    pub fn max_offspring(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn is_moranian(&self) -> bool {
        self.probs.len() == 3
            && (self.probs[0] - T::lit(0.5)).abs() <= T::lit(STRICT_TOL)
            && (self.probs[2] - T::lit(0.5)).abs() <= T::lit(STRICT_TOL)
    }

    pub fn pgf(&self, z: Complex<T>) -> Complex<T> {
        eval_complex(&self.probs, z)
    }

    pub fn pgf_real(&self, z: T) -> T {
        eval_real(&self.probs, z)
    }

    /// Coefficients of h, lowest degree first; the first two are exactly 0.
    pub fn h_coeffs(&self) -> &[T] {
        &self.h
    }

    pub fn h(&self, z: Complex<T>) -> Complex<T> {
        eval_complex(&self.h, z)
    }

    pub fn h_real(&self, z: T) -> T {
        eval_real(&self.h, z)
    }

    pub fn kappa2_coeffs(&self) -> &[T] {
        &self.kappa2
    }

    /// 2∫₀^z h, so that (u′)² = κ₂(u) along decaying solutions of u″ = h(u).
    pub fn kappa2(&self, z: Complex<T>) -> Complex<T> {
        eval_complex(&self.kappa2, z)
    }

    pub fn kappa2_real(&self, z: T) -> T {
        eval_real(&self.kappa2, z)
    }

    /// ∫₀^z h, the convention used when locating zeros.
    pub fn kappa(&self, z: Complex<T>) -> Complex<T> {
        self.kappa2(z) * T::lit(0.5)
    }

    /// Coefficients of q with κ₂(t) = (2σ²/3)·t³·q(t) and q(0) = 1.
    pub fn kappa2_reduced_coeffs(&self) -> Vec<T> {
        let scale = T::lit(2.0) * self.sigma2 / T::lit(3.0);
        self.kappa2[3..].iter().map(|&c| c / scale).collect()
    }

    /// Checks that κ has no zeros in `0 < |z| <= 2`.
    pub fn hypothesis_check(&self) -> Result<HypothesisReport<T>> {
        let q: Vec<f64> = self.kappa2_reduced_coeffs().iter().map(|c| c.to_f64_lossy()).collect();
        let zeros = poly::roots(&q, 1e-10)?;
        let radius = 2.0;
        let inside: Vec<Complex64> = zeros.iter().copied().filter(|z| z.norm() <= radius).collect();
        let strictly_inside = zeros.iter().filter(|z| z.norm() < radius - 1e-9).count() as i64;
        let near_contour = zeros.iter().any(|z| (z.norm() - radius).abs() <= 1e-9);
        if !near_contour {
            let wound = poly::winding_count(&q, radius, 4096)?;
            if wound != strictly_inside {
                return Err(Error::RootFindingFailure(format!(
                    "companion roots give {strictly_inside} zeros in |z|<2, contour count gives {wound}"
                )));
            }
        }
        let conv = |z: &Complex64| Complex::new(T::lit(z.re), T::lit(z.im));
        Ok(HypothesisReport {
            analytic_radius_ok: true,
            passes: inside.is_empty(),
            kappa_zeros_in_disk: inside.iter().map(conv).collect(),
            all_zeros: zeros.iter().map(conv).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = OffspringDistribution<f64>;

    #[test]
    fn moranian_basics() {
        let d = D::new(&[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.sigma2(), 1.0);
        assert!(d.is_moranian());
        assert!((d.pgf_real(0.5) - 0.625).abs() < 1e-15);
        assert_eq!(d.pgf_real(1.0), 1.0);
        assert_eq!(d.h_coeffs(), &[0.0, 0.0, 1.0]);
        let z = Complex::new(0.3, -0.2);
        assert!((d.kappa2(z) - z * z * z * (2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        assert_eq!(D::new(&[0.0, 1.0]), Err(Error::Degenerate));
        assert!(matches!(D::new(&[0.5, 0.5]), Err(Error::NotCritical(_))));
        assert!(matches!(D::new(&[0.6, 0.0, 0.5]), Err(Error::NotProbability(_))));
        assert!(matches!(D::new(&[-0.1, 1.2, -0.1]), Err(Error::NotProbability(_))));
    }

    #[test]
    fn lenient_config() {
        let d = D::from_config(&[0.25 + 4e-10, 0.5, 0.25]).unwrap();
        assert!((d.sigma2() - 0.5).abs() < 1e-9);
        let mean: f64 = d.probs().iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean - 1.0).abs() < 1e-15);
        assert!(D::from_config(&[0.3, 0.5, 0.25]).is_err());
    }

    #[test]
    fn binomial_law() {
        let d = D::new(&[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(d.sigma2(), 0.5);
        assert_eq!(d.pgf_real(-1.0), 0.0);
        assert!((d.h_real(0.7) - 0.49 / 2.0).abs() < 1e-15);
        let r = d.hypothesis_check().unwrap();
        assert!(r.passes && r.all_zeros.is_empty());
    }

    #[test]
    fn hypothesis_finds_zeros() {
        let p10 = 0.08;
        let p1 = 1.0 - 10.0 * p10;
        let d = D::new(&[1.0 - p1 - p10, p1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p10]).unwrap();
        let r = d.hypothesis_check().unwrap();
        assert_eq!(r.all_zeros.len(), 8);
        assert_eq!(r.passes, r.kappa_zeros_in_disk.is_empty());
        for z in &r.all_zeros {
            assert!(d.kappa(*z).norm() < 1e-9 * z.norm().powi(3).max(1.0));
        }
    }
}
