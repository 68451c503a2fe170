//! Adaptive Dormand–Prince 5(4) integration on complex state vectors.

use num_complex::Complex64;

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
            rtol: 1e-9,
            atol: 1e-15,
            max_steps: 4_000_000,
        }
    }
}

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate dy/dx = f(x, y) from `x0` to `x1`, stepping exactly onto every
/// position in `samples` (sorted, within [x0, x1]) and calling `observe`
/// there. Returns the final state.
pub fn integrate<F, O>(
    f: F,
    x0: f64,
    x1: f64,
    y0: &[Complex64],
    samples: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]),
{
    let dim = y0.len();
    let span = x1 - x0;
    if span < 0.0 {
        return Err(Error::Numerical("integration span must be non-negative".into()));
    }
    let mut y = y0.to_vec();
    let mut x = x0;
    let mut sample_iter = samples.iter().copied().peekable();
    while let Some(&s) = sample_iter.peek() {
        if s <= x0 {
            observe(s, &y);
            sample_iter.next();
        } else {
            break;
        }
    }
    if span == 0.0 {
        for s in sample_iter {
            observe(s, &y);
        }
        return Ok(y);
    }

    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::default(); dim]).collect();
    let mut y_stage = vec![Complex64::default(); dim];
    let mut y_new = vec![Complex64::default(); dim];

    f(x, &y, &mut k[0]);
    let mut h = (span / 100.0).min(2.0).max(span * 1e-9);
    let mut steps = 0usize;

    while x < x1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!(
                "step budget exhausted at x = {x:.1} cells"
            )));
        }
        let next_stop = sample_iter.peek().copied().unwrap_or(x1).min(x1);
        let mut h_try = h.min(next_stop - x).max(1e-14);
        if h_try < span * 1e-12 && next_stop - x > span * 1e-12 {
            return Err(Error::Numerical(format!(
                "step size underflow at x = {x:.3} cells"
            )));
        }
        h_try = h_try.min(x1 - x);

        // Stages 2..6.
        let tableau: [(&[f64], f64); 5] = [
            (&A2, 1.0 / 5.0),
            (&A3, 3.0 / 10.0),
            (&A4, 4.0 / 5.0),
            (&A5, 8.0 / 9.0),
            (&A6, 1.0),
        ];
        for (stage, (coeffs, c)) in tableau.iter().enumerate() {
            for i in 0..dim {
                let mut acc = Complex64::default();
                for (j, &a) in coeffs.iter().enumerate() {
                    acc += k[j][i] * a;
                }
                y_stage[i] = y[i] + acc * h_try;
            }
            let ks = &mut k[stage + 1];
            f(x + c * h_try, &y_stage, ks);
        }
        // 5th-order solution.
        for i in 0..dim {
            let mut acc = Complex64::default();
            for (j, &b) in B.iter().enumerate() {
                acc += k[j][i] * b;
            }
            y_new[i] = y[i] + acc * h_try;
        }
        let k7 = &mut k[6];
        f(x + h_try, &y_new, k7);

        // Embedded error estimate.
        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..dim {
            let mut e = Complex64::default();
            for (j, &c) in E.iter().enumerate() {
                e += k[j][i] * c;
            }
            let e = e * h_try;
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / scale).powi(2);
            finite &= y_new[i].re.is_finite() && y_new[i].im.is_finite();
        }
        if !finite {
            return Err(Error::Numerical(format!(
                "non-finite state at x = {x:.3} cells"
            )));
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            x += h_try;
            std::mem::swap(&mut y, &mut y_new);
            let (first, tail) = k.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut tail[5]); // FSAL
            while let Some(&s) = sample_iter.peek() {
                if s <= x + 1e-12 * span.max(1.0) {
                    observe(s, &y);
                    sample_iter.next();
                } else {
                    break;
                }
            }
        } else {
            // Rejected: the first stage derivative is still valid.
            f(x, &y, &mut k[0]);
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h_try * factor).min(span);
    }
    for s in sample_iter {
        observe(s, &y);
    }
    Ok(y)
}
