//! Dormand–Prince 5(4) with step-size control, sampled at prescribed times.

/// Why integration stopped early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Halt {
    /// The right-hand side refused the state (returned `None`).
    Rejected,
    /// The controller drove the step below the floor.
    StepTooSmall,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights equal the last row of A (FSAL).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// `(t, y(t))` at each requested time that was reached.
pub type Samples<const N: usize> = Vec<(f64, [f64; N])>;

/// Integrates `y' = f(t, y)` from `(t0, y0)` and records the state at each
/// of `times` (non-decreasing, all `>= t0`). Steps are shortened to land on
/// the sample times exactly. Returns the samples reached and, if the
/// integration stopped early, the reason together with the last time.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    times: &[f64],
    tol: Tolerances,
) -> (Samples<N>, Option<(Halt, f64)>)
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0;
    let Some(mut k0) = f(t, &y) else {
        return (out, Some((Halt::Rejected, t)));
    };
    let span = times.last().map_or(0.0, |&te| te - t0);
    let mut h = if span > 0.0 { 1e-3 * span } else { 1e-3 };
    let h_min = 1e-14 * span.max(1.0);

    for &target in times {
        while t < target {
            let to_target = target - t;
            let landing = h >= to_target;
            let step = if landing { to_target } else { h };

            let mut k = [[0.0; N]; 7];
            k[0] = k0;
            let mut rejected = false;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += step * a * kj[i];
                        }
                    }
                }
                match f(t + C[s] * step, &ys) {
                    Some(v) => k[s] = v,
                    None => {
                        rejected = true;
                        break;
                    }
                }
            }

            let mut err: f64 = 0.0;
            let mut y5 = y;
            if !rejected {
                for i in 0..N {
                    let mut d5 = 0.0;
                    let mut d4 = 0.0;
                    for s in 0..7 {
                        d5 += B5[s] * k[s][i];
                        d4 += B4[s] * k[s][i];
                    }
                    y5[i] = y[i] + step * d5;
                    let sc = tol.abs + tol.rel * y[i].abs().max(y5[i].abs());
                    let e = step * (d5 - d4) / sc;
                    err += e * e;
                }
                err = (err / N as f64).sqrt();
            }

            if rejected || !err.is_finite() {
                h = 0.25 * step;
            } else if err <= 1.0 {
                t = if landing { target } else { t + step };
                y = y5;
                k0 = k[6];
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !landing || grow < 1.0 {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if h < h_min {
                let halt = if rejected { Halt::Rejected } else { Halt::StepTooSmall };
                return (out, Some((halt, t)));
            }
        }
        out.push((t, y));
    }
    (out, None)
}
