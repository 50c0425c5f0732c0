//! Polynomial helpers: evaluation, certified roots, argument-principle counts.
//! Coefficients are stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Value and derivative at `z`.
pub fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn trimmed(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= 1e-15 * scale {
        n -= 1;
    }
    &coeffs[..n]
}

/// All complex roots, from companion-matrix eigenvalues refined by Newton.
/// Each returned root has a final Newton correction below `tol`.
pub fn roots(coeffs: &[f64], tol: f64) -> Result<Vec<Complex64>> {
    let c = trimmed(coeffs);
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    let n = c.len() - 1;
    let lead = c[n];
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    let eig = comp.complex_eigenvalues();
    let mut out = Vec::with_capacity(n);
    for &z0 in eig.iter() {
        let mut z = z0;
        let mut step = f64::INFINITY;
        for _ in 0..60 {
            let (p, dp) = horner(c, z);
            if dp.norm() == 0.0 {
                break;
            }
            let d = p / dp;
            z -= d;
            step = d.norm();
            if step <= 1e-3 * tol * z.norm().max(1.0) {
                break;
            }
        }
        if !(step <= tol * z.norm().max(1.0)) {
            return Err(Error::RootFindingFailure(format!(
                "Newton refinement of eigenvalue {z0} stalled (last step {step:.3e})"
            )));
        }
        out.push(z);
    }
    Ok(out)
}

/// Number of zeros inside `|z| = radius`, from the winding of `p` around the
/// circle sampled at `nodes` points.
pub fn winding_count(coeffs: &[f64], radius: f64, nodes: usize) -> Result<i64> {
    let c = trimmed(coeffs);
    let mut total = 0.0;
    let at = |j: usize| {
        let th = std::f64::consts::TAU * j as f64 / nodes as f64;
        horner(c, Complex64::from_polar(radius, th)).0
    };
    let mut prev = at(0);
    for j in 1..=nodes {
        let cur = at(j % nodes);
        if cur.norm() == 0.0 {
            return Err(Error::RootFindingFailure(format!("zero on the contour |z| = {radius}")));
        }
        let d = (cur / prev).arg();
        if d.abs() > 2.5 {
            return Err(Error::RootFindingFailure("contour under-resolved".into()));
        }
        total += d;
        prev = cur;
    }
    Ok((total / std::f64::consts::TAU).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        // (z-1)(z+2)(z-3i)(z+3i) = (z² + z - 2)(z² + 9)
        let c = [-18.0, 9.0, 7.0, 1.0, 1.0];
        let r = roots(&c, 1e-12).unwrap();
        assert_eq!(r.len(), 4);
        for z in [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(0.0, 3.0)] {
            assert!(r.iter().any(|w| (w - z).norm() < 1e-10), "{z} missing from {r:?}");
        }
        assert_eq!(winding_count(&c, 2.5, 4096).unwrap(), 2);
        assert_eq!(winding_count(&c, 3.5, 4096).unwrap(), 4);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(roots(&[3.0, 0.0, 0.0], 1e-10).unwrap().is_empty());
        assert_eq!(winding_count(&[3.0], 2.0, 64).unwrap(), 0);
    }
}
