//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! Used for the radial Riccati equations of the eigen test functions. The
//! integrator always lands exactly on each requested output abscissa, so the
//! solution at grid nodes does not depend on interpolation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` through every abscissa in `targets`
/// (monotone, in the direction of integration) and returns the state at each.
pub fn solve<const N: usize, F>(
    f: F,
    x0: f64,
    y0: [f64; N],
    targets: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(targets.len());
    let Some(&last) = targets.last() else {
        return Ok(out);
    };
    let dir = if last >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let span = (last - x0).abs().max(f64::MIN_POSITIVE);
    let mut h = dir * (span * 1e-3).max(1e-10 * x0.abs().max(1.0));
    let mut steps = 0usize;

    for &target in targets {
        if (target - x) * dir < 0.0 {
            return Err(Error::InvalidInput(format!(
                "ODE output abscissa {target} is behind the integrator at {x}"
            )));
        }
        while (target - x) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::QuadratureFailure(format!(
                    "ODE step budget exhausted at x = {x}"
                )));
            }
            let remaining = target - x;
            let landing = (h.abs() >= remaining.abs()) || (remaining.abs() - h.abs()).abs() < 1e-12 * remaining.abs();
            let hs = if landing { remaining } else { h };

            let k2 = f(x + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
            let k3 = f(x + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(x + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
            let k5 = f(
                x + C5 * hs,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = f(
                x + hs,
                &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
            );
            let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let k7 = f(x + hs, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                h = 0.25 * hs;
                if h.abs() < 1e-300 {
                    return Err(Error::QuadratureFailure(format!("ODE blew up near x = {x}")));
                }
                continue;
            }
            if err <= 1.0 {
                x = if landing { target } else { x + hs };
                y = y_new;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the unclipped step when we only shortened it to land.
                if !landing || hs.abs() >= h.abs() {
                    h = hs * grow;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if (h.abs()) < 1e-14 * x.abs().max(1e-300) {
                    return Err(Error::QuadratureFailure(format!(
                        "ODE step size underflow at x = {x}"
                    )));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_lands_on_targets() {
        let targets: Vec<f64> = (1..=10).map(|i| i as f64 * 0.7).collect();
        let ys = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], &targets, OdeOptions::default()).unwrap();
        for (t, y) in targets.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-10, "{t}");
            assert!((y[1] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_integration() {
        let ys = solve(|_, y: &[f64; 1]| [y[0]], 2.0, [1.0], &[1.0, 0.0], OdeOptions::default()).unwrap();
        assert!((ys[1][0] - (-2.0f64).exp()).abs() < 1e-12);
    }
}
