//! Dormand–Prince 5(4) with PI step control, FSAL, and step clamping to
//! requested output times.

/// Right-hand side `dy = f(y)` of an autonomous system.
pub trait Rhs {
    fn eval(&self, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates from `t = 0` and calls `out(i, t_i, y)` at each output time.
///
/// `outputs` must be sorted and nonnegative. The system is autonomous, so
/// the stage time offsets never enter.
pub fn integrate<F: Rhs>(f: &F, y0: &[f64], outputs: &[f64], tol: Tolerance, mut out: impl FnMut(usize, f64, &[f64])) -> Stats {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut stats = Stats::default();
    let mut t = 0.0;
    let mut h: f64 = 1e-3;
    let mut err_prev: f64 = 1e-4;
    f.eval(&y, &mut k[0]);
    let mut next = 0;
    while next < outputs.len() && outputs[next] <= 0.0 {
        out(next, outputs[next].max(0.0), &y);
        next += 1;
    }
    while next < outputs.len() {
        let target = outputs[next];
        let mut clamp = false;
        let h_free = h;
        if t + h >= target - 1e-14 * target.max(1.0) {
            h = target - t;
            clamp = true;
        }
        stage(&y, &k, h, &[A21], &mut tmp);
        f.eval(&tmp, &mut k[1]);
        stage(&y, &k, h, &[A31, A32], &mut tmp);
        f.eval(&tmp, &mut k[2]);
        stage(&y, &k, h, &[A41, A42, A43], &mut tmp);
        f.eval(&tmp, &mut k[3]);
        stage(&y, &k, h, &[A51, A52, A53, A54], &mut tmp);
        f.eval(&tmp, &mut k[4]);
        stage(&y, &k, h, &[A61, A62, A63, A64, A65], &mut tmp);
        f.eval(&tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f.eval(&ynew, &mut k[6]);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = if clamp { target } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = err.max(1e-4);
            let hn = h * fac.clamp(0.2, 5.0);
            if clamp {
                while next < outputs.len() && outputs[next] <= t + 1e-14 * t.max(1.0) {
                    out(next, outputs[next], &y);
                    next += 1;
                }
                h = h_free;
            } else {
                h = hn;
            }
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    stats
}

#[inline]
fn stage(y: &[f64], k: &[Vec<f64>], h: f64, a: &[f64], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (j, aj) in a.iter().enumerate() {
            s += aj * k[j][i];
        }
        out[i] = y[i] + h * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl Rhs for Decay {
        fn eval(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = -y[0];
            dy[1] = y[0] - 0.5 * y[1];
        }
    }

    #[test]
    fn linear_system_matches_closed_form() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let tol = Tolerance { rtol: 1e-11, atol: 1e-14 };
        integrate(&Decay, &[1.0, 0.0], &times, tol, |_, t, y| {
            let e1 = (-t).exp();
            let e2 = 2.0 * ((-0.5 * t).exp() - e1);
            assert!((y[0] - e1).abs() < 1e-10, "t={t}");
            assert!((y[1] - e2).abs() < 1e-10, "t={t}");
        });
    }

    struct Osc;
    impl Rhs for Osc {
        fn eval(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn oscillator_phase_is_accurate() {
        let tol = Tolerance { rtol: 1e-10, atol: 1e-12 };
        let mut last = vec![];
        integrate(&Osc, &[1.0, 0.0], &[50.0], tol, |_, _, y| last = y.to_vec());
        assert!((last[0] - 50f64.cos()).abs() < 1e-7);
    }
}
