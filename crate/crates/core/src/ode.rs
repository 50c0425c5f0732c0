//! Dormand–Prince 5(4) integrator with step-size control, for small systems
//! with a fixed number of components.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h0: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self { rtol: T::lit(1e-10), atol: T::lit(1e-14), h0: T::lit(1e-3), max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOutcome<T, const N: usize> {
    /// State at each requested output point that was reached.
    pub values: Vec<[T; N]>,
    /// Independent variable at which `guard` fired, if it did.
    pub stopped_at: Option<T>,
    /// State where the integration ended (last output or guard point).
    pub last: [T; N],
    pub steps: usize,
}

fn fr<T: Real>(a: f64, b: f64) -> T {
    T::lit(a) / T::lit(b)
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(T, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

struct Tableau<T> {
    c: [T; 6],
    a: [[T; 6]; 6],
    e: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let z = T::zero();
        Self {
            c: [fr(1., 5.), fr(3., 10.), fr(4., 5.), fr(8., 9.), T::one(), T::one()],
            a: [
                [fr(1., 5.), z, z, z, z, z],
                [fr(3., 40.), fr(9., 40.), z, z, z, z],
                [fr(44., 45.), fr(-56., 15.), fr(32., 9.), z, z, z],
                [fr(19372., 6561.), fr(-25360., 2187.), fr(64448., 6561.), fr(-212., 729.), z, z],
                [fr(9017., 3168.), fr(-355., 33.), fr(46732., 5247.), fr(49., 176.), fr(-5103., 18656.), z],
                [fr(35., 384.), z, fr(500., 1113.), fr(125., 192.), fr(-2187., 6784.), fr(11., 84.)],
            ],
            e: [
                fr(71., 57600.),
                z,
                fr(-71., 16695.),
                fr(71., 1920.),
                fr(-17253., 339200.),
                fr(22., 525.),
                fr(-1., 40.),
            ],
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0`, reporting the state at each point of
/// `outputs` (ascending, all ≥ `t0`). Steps are shortened to land exactly on
/// output points. Integration stops early once `guard(t, y)` returns true.
pub fn solve<T, const N: usize, F, G>(
    f: F,
    t0: T,
    y0: [T; N],
    outputs: &[T],
    opts: OdeOptions<T>,
    mut guard: G,
) -> Result<OdeOutcome<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
    G: FnMut(T, &[T; N]) -> bool,
{
    let tab = Tableau::<T>::new();
    let mut values = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h0;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    let tiny = T::epsilon() * T::lit(16.0);
    for &target in outputs {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StiffnessError(opts.max_steps));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let k2 = f(t + tab.c[0] * hs, &axpy(&y, hs, &[(tab.a[0][0], &k1)]));
            let k3 = f(t + tab.c[1] * hs, &axpy(&y, hs, &[(tab.a[1][0], &k1), (tab.a[1][1], &k2)]));
            let k4 = f(
                t + tab.c[2] * hs,
                &axpy(&y, hs, &[(tab.a[2][0], &k1), (tab.a[2][1], &k2), (tab.a[2][2], &k3)]),
            );
            let k5 = f(
                t + tab.c[3] * hs,
                &axpy(
                    &y,
                    hs,
                    &[(tab.a[3][0], &k1), (tab.a[3][1], &k2), (tab.a[3][2], &k3), (tab.a[3][3], &k4)],
                ),
            );
            let k6 = f(
                t + hs,
                &axpy(
                    &y,
                    hs,
                    &[
                        (tab.a[4][0], &k1),
                        (tab.a[4][1], &k2),
                        (tab.a[4][2], &k3),
                        (tab.a[4][3], &k4),
                        (tab.a[4][4], &k5),
                    ],
                ),
            );
            let y_new = axpy(
                &y,
                hs,
                &[(tab.a[5][0], &k1), (tab.a[5][2], &k3), (tab.a[5][3], &k4), (tab.a[5][4], &k5), (tab.a[5][5], &k6)],
            );
            let t_new = if last { target } else { t + hs };
            let k7 = f(t_new, &y_new);
            steps += 1;

            let mut err = T::zero();
            for i in 0..N {
                let ei = hs
                    * (tab.e[0] * k1[i]
                        + tab.e[2] * k3[i]
                        + tab.e[3] * k4[i]
                        + tab.e[4] * k5[i]
                        + tab.e[5] * k6[i]
                        + tab.e[6] * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err + (ei / sc) * (ei / sc);
            }
            let err = (err / T::from_usize_lossy(N)).sqrt();
            if !err.is_finite() {
                h = hs * T::lit(0.2);
                if h <= tiny * t.abs().max(T::one()) {
                    return Err(Error::StiffnessError(steps));
                }
                continue;
            }
            let fac = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
            };
            if err <= T::one() {
                t = t_new;
                y = y_new;
                k1 = k7;
                // keep the controller's step if we only shortened it to hit the target
                h = if last { h.max(hs * fac) } else { hs * fac };
                if guard(t, &y) {
                    return Ok(OdeOutcome { values, stopped_at: Some(t), last: y, steps });
                }
            } else {
                h = hs * fac.min(T::one());
                if h <= tiny * t.abs().max(T::one()) {
                    return Err(Error::StiffnessError(steps));
                }
            }
        }
        values.push(y);
    }
    Ok(OdeOutcome { values, stopped_at: None, last: y, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let out = solve(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            &[1.0, std::f64::consts::PI, 10.0],
            OdeOptions::default(),
            |_, _| false,
        )
        .unwrap();
        assert!((out.values[0][0] - 1f64.sin()).abs() < 1e-9);
        assert!(out.values[1][0].abs() < 1e-9);
        assert!((out.values[2][1] - 10f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn guard_stops_blowup() {
        // y' = y², y(0) = 1 blows up at t = 1
        let out = solve(|_t, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], &[2.0], OdeOptions::default(), |_, y| {
            y[0] > 10.0
        })
        .unwrap();
        let t = out.stopped_at.unwrap();
        assert!(t > 0.89 && t < 0.95, "{t}");
        assert!(out.values.is_empty());
    }
}
