//! Independent references: Gamma-function closed forms, brute-force lattice
//! sums, and the exact rescaling between the binomial(2, 1/2) and
//! double-or-nothing laws.

use critbbm::elliptic::{self, AehLattice};
use critbbm::{hitting, killed, Complex, Offspring};
use statrs::function::gamma::gamma;

// real period of the g₂ = 0 lattice with invariant g₃ < 0
fn omega_closed_form(g3: f64) -> f64 {
    (-g3).powf(-1.0 / 6.0) * 4f64.powf(-1.0 / 3.0) * gamma(1.0 / 3.0) * gamma(1.0 / 6.0) / std::f64::consts::PI.sqrt()
}

#[test]
fn real_period_matches_gamma_closed_form() {
    for g3 in [-1e-6, -0.023786, -1.0, -250.0] {
        let lat = AehLattice::<f64>::from_g3(g3).unwrap();
        let exact = omega_closed_form(g3);
        assert!((lat.omega() - exact).abs() < 1e-11 * exact, "g3={g3}: {} vs {exact}", lat.omega());
    }
    let unit = omega_closed_form(elliptic::reference_g3());
    assert!((unit - 1.0).abs() < 1e-12, "{unit}");
}

// ℘ by symmetric summation over |m|, |n| <= n, Richardson on the N⁻² tail
fn wp_brute(lat: &AehLattice<f64>, z: Complex) -> Complex {
    let (a, b) = lat.generators();
    let partial = |n: i64| {
        let mut s = z.powi(-2);
        for i in -n..=n {
            for j in -n..=n {
                if i == 0 && j == 0 {
                    continue;
                }
                let w = a * i as f64 + b * j as f64;
                s += (z - w).powi(-2) - w.powi(-2);
            }
        }
        s
    };
    let (s1, s2) = (partial(150), partial(300));
    (s2 * 4.0 - s1) / 3.0
}

#[test]
fn wp_matches_lattice_sum() {
    let lat = AehLattice::<f64>::from_omega(2.0).unwrap();
    for z in [Complex::new(0.3, 0.1), Complex::new(1.1, 0.45), Complex::new(0.7, -0.9)] {
        let (p, _) = lat.wp(z).unwrap();
        let q = wp_brute(&lat, z);
        assert!((p - q).norm() < 1e-7 * p.norm(), "z={z}: {p} vs {q}");
    }
}

#[test]
fn rotation_by_sixth_turn() {
    // the hexagonal lattice is invariant under z -> e^{iπ/3}z
    let lat = AehLattice::<f64>::from_g3(-0.023786).unwrap();
    let rot = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    for z in [Complex::new(1.3, 0.4), Complex::new(4.0, -2.5), Complex::new(0.2, 7.1)] {
        let (p, _) = lat.wp(z).unwrap();
        let (q, _) = lat.wp(rot * z).unwrap();
        assert!((q * rot * rot - p).norm() < 1e-11 * p.norm(), "z={z}");
    }
}

#[test]
fn elliptic_integral_by_substitution() {
    // ∫_w^∞ dt/√(4t³ − g₃) = (−g₃/4)^{−1/6} ∫_{w/a}^∞ ds/(2√(s³ + 1)),
    // compared with a brute trapezoid in s = w/a + (v/(1 − v))², which is
    // smooth on [0, 1] with value 1 at v = 1
    let g3 = -0.5f64;
    let a = (-g3 / 4.0).powf(1.0 / 3.0);
    let w = 0.7;
    let n = 2_000_000;
    let s0 = w / a;
    let f = |v: f64| {
        let r = v / (1.0 - v);
        let s = s0 + r * r;
        v / ((s * s * s + 1.0).sqrt() * (1.0 - v).powi(3))
    };
    let h = 1.0 / n as f64;
    let mut acc = 0.5 * (f(0.0) + 1.0);
    for i in 1..n {
        acc += f(i as f64 * h);
    }
    let brute = acc * h / a.sqrt();
    let got = elliptic::elliptic_integral_inverse(w, g3).unwrap();
    assert!((got - brute).abs() < 1e-9, "{got} vs {brute}");
}

#[test]
fn binomial_law_is_rescaled_double_or_nothing() {
    // h(z) = z²/2 versus z²: u_x(y) = ū_{x/√2}(y/√2)
    let d = Offspring::new(&[0.25, 0.5, 0.25]).unwrap();
    let r2 = 2f64.sqrt();
    for (x, y) in [(1.0, 0.5), (4.0, 1.0), (20.0, 3.0), (20.0, 19.5)] {
        let a = hitting::general_hit_prob(&d, x, y).unwrap();
        let b = hitting::moranian_hit_prob(x / r2, y / r2).unwrap();
        assert!((a - b).abs() < 1e-9 * b.max(1e-3), "({x},{y}): {a} vs {b}");
    }
    for s in [0.2, 0.7, 0.99] {
        let v = killed::general_gf(&d, 1.5, Complex::new(s, 0.0)).unwrap();
        let (h, phi) = killed::moranian_gf(1.5 / r2, s).unwrap();
        assert!((v.h.re - h).abs() < 1e-11 && (v.phi.re - phi).abs() < 1e-11, "s={s}");
    }
}

#[test]
fn killed_probability_closed_form() {
    for y in [0.1, 1.0, 3.0, 40.0] {
        let t = killed::moranian_killed_tail(y, 1).unwrap();
        let p = 6.0 / (y + 6f64.sqrt()).powi(2);
        assert!((t.tail[0] - p).abs() < 1e-14, "y={y}");
        let (h0, phi0) = killed::moranian_gf(y, 0.0).unwrap();
        assert_eq!(h0, 0.0);
        assert!((phi0 - (1.0 - p)).abs() < 1e-14);
    }
}

#[test]
fn asymptotic_constants_closed_forms() {
    let c = killed::killed_asymptotic_constants(&Offspring::moranian());
    let base = 1.0 / (6.0 * std::f64::consts::PI).sqrt();
    assert!((c.c5 - base).abs() < 1e-15 && (c.c6 - 1.5 * base).abs() < 1e-15);
    let d = Offspring::new(&[0.25, 0.5, 0.25]).unwrap();
    let h = hitting::general_asymptotic_constants(&d, &[0.5]).unwrap();
    let m = hitting::moranian_asymptotic_constants::<f64>(&[0.5]).unwrap();
    assert!((h.c3 - 2.0 * m.c1_big).abs() < 1e-9 * h.c3);
    assert!((h.c4[0] - 2.0 * m.c2[0]).abs() < 1e-9 * h.c4[0]);
}
