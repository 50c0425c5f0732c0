use critbbm::elliptic::AehLattice;
use critbbm::{hitting, killed, Complex, Offspring};
use proptest::prelude::*;

/// Critical laws on {0, .., n}: mass t·w_i on i >= 2, p₀ = Σ(i − 1)p_i, the
/// rest on 1.
fn critical_law() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0.0f64..1.0, 1..5), 0.1f64..1.0).prop_map(|(w, frac)| {
        let w: Vec<f64> = w.iter().map(|v| v + 0.05).collect();
        let norm: f64 = w.iter().enumerate().map(|(i, v)| (i + 2) as f64 * v).sum();
        let t = frac / norm;
        let tail: Vec<f64> = w.iter().map(|v| t * v).collect();
        let p0: f64 = tail.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum();
        let p1 = 1.0 - p0 - tail.iter().sum::<f64>();
        let mut p = vec![p0, p1.max(0.0)];
        p.extend(tail);
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn offspring_h_is_quadratic_at_zero(p in critical_law()) {
        let d = Offspring::new(&p).unwrap();
        prop_assert!(d.sigma2() > 0.0);
        prop_assert_eq!(d.h_real(0.0), 0.0);
        let z = 1e-4;
        prop_assert!((d.h_real(z) / (z * z) - d.sigma2()).abs() < 1e-3 * d.sigma2().max(1.0));
        let mut prev = 0.0;
        for i in 1..=20 {
            let z = i as f64 / 20.0;
            let h = d.h_real(z);
            let k = d.kappa2_real(z);
            prop_assert!(h >= 0.0 && k > prev);
            prev = k;
        }
    }

    #[test]
    fn kappa2_is_twice_integral_of_h(p in critical_law(), z in 0.01f64..1.0) {
        let d = Offspring::new(&p).unwrap();
        let n = 2000;
        let step = z / n as f64;
        let simpson: f64 = (0..n).map(|i| {
            let a = i as f64 * step;
            (d.h_real(a) + 4.0 * d.h_real(a + step / 2.0) + d.h_real(a + step)) * step / 6.0
        }).sum();
        prop_assert!((d.kappa2_real(z) - 2.0 * simpson).abs() < 1e-12);
    }

    #[test]
    fn moranian_hit_prob_monotone(x in 0.2f64..40.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let ul = hitting::moranian_hit_prob(x, lo * x).unwrap();
        let uh = hitting::moranian_hit_prob(x, hi * x).unwrap();
        prop_assert!((0.0..=1.0).contains(&ul) && (0.0..=1.0).contains(&uh));
        prop_assert!(ul <= uh + 1e-12);
        // a farther target is harder to reach
        let farther = hitting::moranian_hit_prob(x * 1.5, lo * x).unwrap();
        prop_assert!(farther <= ul + 1e-12);
    }

    #[test]
    fn shooting_profile_is_monotone(p in critical_law(), x in 2.0f64..15.0) {
        let d = Offspring::new(&p).unwrap();
        let ys: Vec<f64> = (0..=20).map(|i| x * i as f64 / 20.0).collect();
        let prof = hitting::general_profile(&d, x, &ys).unwrap();
        prop_assert!(prof.values[0].abs() < 1e-12);
        prop_assert!((prof.values[20] - 1.0).abs() < 1e-8);
        for w in prof.values.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12);
        }
        prop_assert!(prof.slope_at_zero > 0.0);
    }

    #[test]
    fn killed_tail_is_a_tail(y in 0.05f64..8.0) {
        prop_assume!((y * y / 6.0 - 1.0).abs() > 0.06);
        let t = killed::moranian_killed_tail(y, 40).unwrap();
        let s = killed::moranian_series(y, 40).unwrap();
        prop_assert!((t.p_zero + t.tail[0] - 1.0).abs() < 1e-14);
        for k in 1..=40 {
            let (a, b) = (t.tail_at(k).unwrap(), s.tail_at(k).unwrap());
            prop_assert!((a - b).abs() <= 1e-10 * b);
            prop_assert!(t.pmf_at(k).unwrap() >= 0.0);
            if k > 1 {
                prop_assert!(a <= t.tail_at(k - 1).unwrap());
            }
        }
        prop_assert!(t.partial_mean() < 1.0);
    }

    #[test]
    fn gf_is_monotone_in_s(y in 0.1f64..5.0, s in 0.0f64..0.99) {
        let (h1, p1) = killed::moranian_gf(y, s).unwrap();
        let (h2, p2) = killed::moranian_gf(y, s + 0.01).unwrap();
        prop_assert!(h1 <= h2 && p1 <= p2);
        prop_assert!((0.0..=1.0).contains(&h1) && (0.0..=1.0).contains(&p1));
    }

    #[test]
    fn wp_ode_and_homogeneity(omega in 0.1f64..30.0, u in 0.05f64..0.95, v in 0.05f64..0.95, beta in 0.2f64..5.0) {
        let lat = AehLattice::<f64>::from_omega(omega).unwrap();
        let (a, b) = lat.generators();
        let z = a * u + b * v;
        let (p, dp) = lat.wp(z).unwrap();
        let scale = p.norm().max(omega.powi(-2));
        prop_assert!((dp * dp - p * p * p * 4.0 + lat.g3()).norm() <= 1e-10 * 4.0 * scale.powi(3));
        let big = AehLattice::<f64>::from_g3(lat.g3() * beta.powi(-6)).unwrap();
        let (q, _) = big.wp(z * beta).unwrap();
        prop_assert!((q * beta * beta - p).norm() <= 1e-10 * scale);
        // ℘ is even and real on the real axis
        let (m, _) = lat.wp(-z).unwrap();
        prop_assert!((m - p).norm() <= 1e-12 * scale);
        let (r, _) = lat.wp(Complex::new(u * omega, 0.0)).unwrap();
        prop_assert!(r.im.abs() <= 1e-10 * r.norm().max(omega.powi(-2)));
    }

    #[test]
    fn wp_inverse_round_trip(g3 in -50.0f64..-1e-4, w in 0.0f64..100.0) {
        let lat = AehLattice::<f64>::from_g3(g3).unwrap();
        let z = lat.wp_inverse_real(w).unwrap();
        prop_assert!(z > 2.0 * lat.omega() / 3.0 - 1e-12 && z < lat.omega());
        let (p, _) = lat.wp_real(z).unwrap();
        prop_assert!((p - w).abs() <= 1e-8 * w.max(lat.omega().powi(-2)));
    }
}
