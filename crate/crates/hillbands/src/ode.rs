//! Dormand–Prince 5(4) for complex-valued first-order systems on a real
//! interval.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
    pub max_steps: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are the last row of A; these are (b5 - b4)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` with state `y0`, returning the state at
/// each of `outputs` (ascending, all `> x0`). Steps are clipped to land on the
/// output points exactly.
pub fn dopri5<T, F>(
    mut f: F,
    x0: T,
    y0: &[Complex<T>],
    outputs: &[T],
    tol: Tolerances<T>,
) -> Result<Vec<Vec<Complex<T>>>>
where
    T: Real,
    F: FnMut(T, &[Complex<T>], &mut [Complex<T>]) -> Result<()>,
{
    let n = y0.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut k: Vec<Vec<Complex<T>>> = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut y = y0.to_vec();
    let mut x = x0;
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&x_last) = outputs.last() else {
        return Ok(out);
    };
    let span = x_last - x0;
    let mut h = span * lit(0.01);
    let mut steps = 0usize;
    let mut next_out = 0usize;
    f(x, &y, &mut k[0])?;
    let safety: T = lit(0.9);
    let fac_min: T = lit(0.2);
    let fac_max: T = lit(5.0);
    let tiny = T::epsilon() * lit(16.0);
    while next_out < outputs.len() {
        let target = outputs[next_out];
        if target - x <= tiny * (T::one() + x.abs()) {
            out.push(y.clone());
            next_out += 1;
            continue;
        }
        if steps >= tol.max_steps {
            return Err(Error::Integration {
                x: x.to_f64().unwrap_or(f64::NAN),
                steps,
            });
        }
        let landing = h >= target - x;
        let step = if landing { target - x } else { h };
        for s in 1..7 {
            for i in 0..n {
                let mut acc = zero;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc = acc + kj[i] * lit::<T>(a);
                    }
                }
                tmp[i] = y[i] + acc * step;
            }
            f(x + step * lit(C[s]), &tmp, &mut k[s])?;
        }
        // tmp now holds the fifth-order solution (stage 7 is FSAL)
        let mut err = T::zero();
        for i in 0..n {
            let mut e = zero;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e = e + kj[i] * lit::<T>(E[j]);
                }
            }
            let scale = tol.abs + tol.rel * y[i].norm().max(tmp[i].norm());
            err = err.max((e * step).norm() / scale);
        }
        steps += 1;
        if !err.is_finite() {
            h = step * lit(0.25);
            continue;
        }
        if err <= T::one() {
            x = if landing { target } else { x + step };
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
            let fac = if err == T::zero() {
                fac_max
            } else {
                (safety * err.powf(lit(-0.2))).min(fac_max).max(fac_min)
            };
            // a step clipped to land on an output point says little about h
            h = if landing { h.max(step * fac) } else { step * fac };
        } else {
            h = step * (safety * err.powf(lit(-0.2))).max(fac_min);
        }
    }
    Ok(out)
}
