//! Adaptive Dormand-Prince 4(5) integration over flat f64 state vectors.

use crate::error::{Error, Result};

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
// 5th order solution weights
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded 4th order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

/// Integrate dy/dt = f(t, y) from t0 to t1 in place, with standard embedded
/// error control on the mixed tolerance atol + rtol * |y|.
pub fn dp45<F>(f: F, t0: f64, t1: f64, y: &mut [f64], rtol: f64, atol: f64) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut t = t0;
    let mut h = span / 16.0;
    let h_min = span.abs() * 1e-14;

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    f(t, y, &mut k1);
    let mut steps = 0usize;
    let max_steps = 2_000_000usize;
    while (t1 - t) * dir > 0.0 {
        if steps > max_steps {
            return Err(Error::Convergence {
                what: "adaptive RK integration".to_string(),
                residual: ((t1 - t) / span).abs(),
                iterations: steps,
            });
        }
        steps += 1;
        if ((t + h) - t1) * dir > 0.0 {
            h = t1 - t;
        }

        for i in 0..dim {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + h / 5.0, &stage, &mut k2);
        for i in 0..dim {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + 3.0 * h / 10.0, &stage, &mut k3);
        for i in 0..dim {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + 4.0 * h / 5.0, &stage, &mut k4);
        for i in 0..dim {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + 8.0 * h / 9.0, &stage, &mut k5);
        for i in 0..dim {
            stage[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &stage, &mut k6);
        for i in 0..dim {
            y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, &y5, &mut k7);

        let mut err: f64 = 0.0;
        for i in 0..dim {
            let y4 = y[i]
                + h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                    + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            let d = (y5[i] - y4) / sc;
            err += d * d;
        }
        err = (err / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            k1.copy_from_slice(&k7);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(Error::Convergence {
                what: "adaptive RK integration (step size underflow)".to_string(),
                residual: err,
                iterations: steps,
            });
        }
    }
    Ok(())
}
