//! Adaptive Dormand-Prince 5(4) integrator for small real systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
// 5th-order weights are the last row of A; these are (b5 - b4).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct Dopri5<F, const N: usize> {
    rhs: F,
    pub t: f64,
    pub y: [f64; N],
    pub h: f64,
    rtol: f64,
    atol: f64,
    pub steps: usize,
}

impl<F, const N: usize> Dopri5<F, N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, t0: f64, y0: [f64; N], rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rhs,
            t: t0,
            y: y0,
            h: 1e-3,
            rtol,
            atol,
            steps: 0,
        }
    }

    /// One attempted step of size `h`; returns the new state and the scaled error.
    fn trial(&mut self, h: f64) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = (self.rhs)(self.t, &self.y);
        for s in 1..7 {
            let mut ys = self.y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for i in 0..N {
                    ys[i] += h * A[s][j] * kj[i];
                }
            }
            k[s] = (self.rhs)(self.t + C[s] * h, &ys);
        }
        let mut y_new = self.y;
        for (j, kj) in k.iter().enumerate().take(6) {
            for i in 0..N {
                y_new[i] += h * A[6][j] * kj[i];
            }
        }
        let mut err = 0.0_f64;
        for i in 0..N {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = self.atol + self.rtol * self.y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        (y_new, err)
    }

    /// Advances exactly to `t_end`, stopping early (and returning `false`) as
    /// soon as `stop(t, y)` holds after an accepted step.
    pub fn advance_to(&mut self, t_end: f64, mut stop: impl FnMut(f64, &[f64; N]) -> bool) -> bool {
        while self.t < t_end {
            let mut h = self.h.min(t_end - self.t);
            loop {
                let (y_new, err) = self.trial(h);
                if !y_new.iter().all(|v| v.is_finite()) {
                    h *= 0.25;
                    continue;
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 {
                    let last = h >= t_end - self.t;
                    self.t = if last { t_end } else { self.t + h };
                    self.y = y_new;
                    self.steps += 1;
                    // keep the proposal from collapsing onto short final steps
                    if !last || factor < 1.0 {
                        self.h = h * factor;
                    }
                    break;
                }
                h *= factor;
                if h < 1e-14 {
                    return false;
                }
            }
            if stop(self.t, &self.y) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut ode = Dopri5::new(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 1e-12, 1e-14);
        assert!(ode.advance_to(10.0, |_, _| false));
        assert!((ode.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((ode.y[1] + 10f64.sin()).abs() < 1e-10);
        assert_eq!(ode.t, 10.0);
    }

    #[test]
    fn stop_condition_halts() {
        let mut ode = Dopri5::new(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 1e-10, 1e-12);
        assert!(!ode.advance_to(5.0, |_, y| y[0] > 1.0));
        assert!(ode.t < 5.0 && ode.y[0] > 1.0);
    }
}
