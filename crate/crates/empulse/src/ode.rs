//! Embedded Dormand-Prince 5(4) integrator with dense output.
//!
//! Fixed-size state vectors, adaptive step control on the standard mixed
//! absolute/relative error norm, and quartic dense output inside each
//! accepted step. Deterministic: identical inputs produce identical step
//! sequences.

use thiserror::Error;

use crate::float::Real;

const STAGES: usize = 7;

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

const CNODES: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

/// 5th-order weights (row 7 of A is the solution itself: FSAL).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Error weights: difference between the 5th and embedded 4th order solutions.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOpts<T> {
    pub rtol: T,
    pub atol: T,
    pub h_initial: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOpts<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-9),
            atol: T::of(1e-12),
            h_initial: None,
            h_max: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Error, Clone)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h}); integration stopped at the last good state")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum step count {0} exceeded")]
    MaxSteps(usize),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

/// Dense interpolant over one accepted step `[t0, t0 + h]`.
pub struct DenseStep<'a, T, const N: usize> {
    pub t0: T,
    pub h: T,
    pub y0: &'a [T; N],
    pub y1: &'a [T; N],
    cont: &'a [[T; N]; 5],
}

impl<'a, T: Real, const N: usize> DenseStep<'a, T, N> {
    /// Evaluate the interpolant at `t` inside the step.
    pub fn eval(&self, t: T) -> [T; N] {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let mut out = [T::zero(); N];
        for i in 0..N {
            out[i] = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
        out
    }

    pub fn t1(&self) -> T {
        self.t0 + self.h
    }
}

/// Caller decision after each accepted step.
pub enum StepControl {
    Continue,
    Stop,
}

/// Integrate `dy/dt = f(t, y)` from `(t0, y0)` forward until the callback
/// stops it or `t_end` is passed; the callback sees every accepted step with
/// dense output.
///
/// Returns the final `(t, y)` plus statistics.
pub fn integrate<T: Real, const N: usize, F, G>(
    f: F,
    t0: T,
    t_end: T,
    y0: [T; N],
    opts: &OdeOpts<T>,
    mut on_step: G,
) -> Result<(T, [T; N], OdeStats), (OdeError, T, [T; N], OdeStats)>
where
    F: Fn(T, &[T; N]) -> [T; N],
    G: FnMut(&DenseStep<'_, T, N>) -> StepControl,
{
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k: [[T; N]; STAGES] = [[T::zero(); N]; STAGES];
    k[0] = f(t, &y);
    stats.rhs_evals += 1;

    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span.abs());
    let mut h = match opts.h_initial {
        Some(h0) => h0,
        None => initial_step(&f, t, &y, &k[0], opts, &mut stats).min(h_max),
    };

    let safety = T::of(0.9);
    let min_scale = T::of(0.2);
    let max_scale = T::of(5.0);
    let order_exp = T::of(0.2);

    loop {
        if t >= t_end {
            return Ok((t, y, stats));
        }
        if stats.steps_accepted + stats.steps_rejected > opts.max_steps {
            return Err((OdeError::MaxSteps(opts.max_steps), t, y, stats));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if !(h > T::zero()) || t + h == t {
            return Err((
                OdeError::StepUnderflow {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    h: h.to_f64().unwrap_or(f64::NAN),
                },
                t,
                y,
                stats,
            ));
        }

        // stages
        for s in 1..STAGES {
            let mut ys = [T::zero(); N];
            for i in 0..N {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc = acc + T::of(a) * kj[i];
                    }
                }
                ys[i] = y[i] + h * acc;
            }
            let ts = t + T::of(CNODES[s - 1]) * h;
            k[s] = f(ts, &ys);
        }
        stats.rhs_evals += STAGES - 1;

        // 5th order solution and scaled error norm
        let mut y_new = [T::zero(); N];
        let mut err_norm = T::zero();
        for i in 0..N {
            let mut acc = T::zero();
            let mut eacc = T::zero();
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    acc = acc + T::of(B[j]) * kj[i];
                }
                if E[j] != 0.0 {
                    eacc = eacc + T::of(E[j]) * kj[i];
                }
            }
            y_new[i] = y[i] + h * acc;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e = h * eacc / scale;
            err_norm = err_norm + e * e;
        }
        err_norm = (err_norm / T::of_usize(N)).sqrt();

        if err_norm <= T::one() {
            // accept: build dense output
            let k_new = f(t + h, &y_new);
            stats.rhs_evals += 1;
            let mut cont = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k_new[i] - bspl;
                let mut dsum = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        dsum = dsum + T::of(D[j]) * kj[i];
                    }
                }
                cont[4][i] = h * dsum;
            }
            stats.steps_accepted += 1;
            let dense = DenseStep { t0: t, h, y0: &y, y1: &y_new, cont: &cont };
            let control = on_step(&dense);
            t = t + h;
            y = y_new;
            k[0] = k_new; // FSAL
            if matches!(control, StepControl::Stop) {
                return Ok((t, y, stats));
            }
            let scale = if err_norm == T::zero() {
                max_scale
            } else {
                (safety / err_norm.powf(order_exp)).min(max_scale).max(min_scale)
            };
            h = (h * scale).min(h_max);
        } else {
            stats.steps_rejected += 1;
            let scale = (safety / err_norm.powf(order_exp)).max(min_scale);
            h = h * scale;
        }
    }
}

/// Cheap initial step heuristic from the magnitude of the first derivative.
fn initial_step<T: Real, const N: usize, F>(
    f: &F,
    t: T,
    y: &[T; N],
    k0: &[T; N],
    opts: &OdeOpts<T>,
    stats: &mut OdeStats,
) -> T
where
    F: Fn(T, &[T; N]) -> [T; N],
{
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..N {
        let scale = opts.atol + opts.rtol * y[i].abs();
        d0 = d0 + (y[i] / scale) * (y[i] / scale);
        d1 = d1 + (k0[i] / scale) * (k0[i] / scale);
    }
    d0 = (d0 / T::of_usize(N)).sqrt();
    d1 = (d1 / T::of_usize(N)).sqrt();
    let h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * d0 / d1
    };
    // one Euler probe to bound the second derivative
    let mut y1 = [T::zero(); N];
    for i in 0..N {
        y1[i] = y[i] + h0 * k0[i];
    }
    let k1 = f(t + h0, &y1);
    stats.rhs_evals += 1;
    let mut d2 = T::zero();
    for i in 0..N {
        let scale = opts.atol + opts.rtol * y[i].abs();
        let dd = (k1[i] - k0[i]) / scale;
        d2 = d2 + dd * dd;
    }
    d2 = (d2 / T::of_usize(N)).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / dm).powf(T::of(0.2))
    };
    (h0 * T::of(100.0)).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOpts::<f64>::default();
        let (t, y, stats) =
            integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, 2.0, [1.0], &opts, |_| StepControl::Continue)
                .unwrap();
        assert_eq!(t, 2.0);
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-10);
        assert!(stats.steps_accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = OdeOpts { rtol: 1e-11, atol: 1e-13, ..OdeOpts::<f64>::default() };
        let mut samples: Vec<(f64, f64)> = Vec::new();
        let mut next = 0.25f64;
        let (_, y, _) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            10.0,
            [1.0, 0.0],
            &opts,
            |step| {
                while next <= step.t1() {
                    let yi = step.eval(next);
                    samples.push((next, yi[0]));
                    next += 0.25;
                }
                StepControl::Continue
            },
        )
        .unwrap();
        assert!((y[0] - 10.0f64.cos()).abs() < 1e-9);
        assert!(samples.len() >= 39);
        for (t, v) in samples {
            assert!((v - t.cos()).abs() < 1e-8, "dense output at {t}: {v}");
        }
    }

    #[test]
    fn tolerance_halving_improves_accuracy() {
        let run = |rtol: f64| {
            let opts = OdeOpts { rtol, atol: rtol * 1e-3, ..OdeOpts::<f64>::default() };
            let (_, y, _) = integrate(
                |t: f64, y: &[f64; 1]| [t.sin() * y[0]],
                0.0,
                3.0,
                [1.0],
                &opts,
                |_| StepControl::Continue,
            )
            .unwrap();
            y[0]
        };
        let exact = (1.0 - 3.0f64.cos()).exp();
        let coarse = (run(1e-6) - exact).abs();
        let fine = (run(1e-9) - exact).abs();
        assert!(fine < coarse);
        assert!(fine < 1e-9);
    }
}
