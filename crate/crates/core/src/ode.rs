//! Adaptive Dormand-Prince 5(4) integrator with sign-change event location.

use crate::error::{Error, Result};

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

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Where a monitored function changed sign.
#[derive(Debug, Clone, Copy)]
pub struct Event<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self { tol, h_max: 0.1, max_steps: 2_000_000 }
    }

    /// One embedded step; returns the 5th-order solution and the scaled error.
    pub fn step<const D: usize, F>(&self, f: &F, t: f64, y: &[f64; D], h: f64) -> ([f64; D], f64)
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let mut k = [[0.0; D]; 7];
        k[0] = f(t, y);
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for d in 0..D {
                        ys[d] += h * a * kj[d];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for d in 0..D {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][d];
                s4 += B4[s] * k[s][d];
            }
            y5[d] += h * s5;
            let scale = self.tol * (1.0 + y[d].abs().max(y5[d].abs()));
            err = err.max((h * (s5 - s4)).abs() / scale);
        }
        (y5, err)
    }

    fn next_h(h: f64, err: f64) -> f64 {
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h * factor
    }

    /// Integrate from `t0` to `t1` (forward only).
    pub fn integrate<const D: usize, F>(&self, f: &F, t0: f64, y0: [f64; D], t1: f64) -> Result<[f64; D]>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let mut t = t0;
        let mut y = y0;
        let mut h = (1e-3f64).min(self.h_max).min(t1 - t0);
        let mut steps = 0;
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration(format!("step limit reached at t = {t}")));
            }
            let hh = h.min(t1 - t);
            let (yn, err) = self.step(f, t, &y, hh);
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                t = if hh == t1 - t { t1 } else { t + hh };
                y = yn;
            }
            h = Self::next_h(hh, err).min(self.h_max);
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        Ok(y)
    }

    /// Fixed-step integration with steps no longer than `h_max`. Unlike
    /// [`Self::integrate`] the error is a smooth function of `t1`, which keeps
    /// finely sampled trajectories free of sample-to-sample noise.
    pub fn integrate_fixed<const D: usize, F>(&self, f: &F, t0: f64, y0: [f64; D], t1: f64, h_max: f64) -> [f64; D]
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let steps = ((t1 - t0) / h_max).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let mut y = y0;
        for k in 0..steps {
            y = self.step(f, t0 + k as f64 * h, &y, h).0;
        }
        y
    }

    /// Integrate until `g` changes sign in the requested direction
    /// (`+1` rising, `-1` falling), or until `abort` returns true or `t_max`.
    pub fn until_event<const D: usize, F, G, S>(
        &self,
        f: &F,
        t0: f64,
        y0: [f64; D],
        t_max: f64,
        g: &G,
        direction: f64,
        abort: &S,
    ) -> Result<Option<Event<D>>>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        G: Fn(f64, &[f64; D]) -> f64,
        S: Fn(f64, &[f64; D]) -> bool,
    {
        let mut t = t0;
        let mut y = y0;
        let mut gv = g(t, &y);
        let mut h = 1e-3f64.min(self.h_max);
        let mut steps = 0;
        while t < t_max {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration(format!("step limit reached at t = {t}")));
            }
            let hh = h.min(t_max - t);
            let (yn, err) = self.step(f, t, &y, hh);
            if !err.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                let gn = g(t + hh, &yn);
                let crossed = gv * gn <= 0.0 && gn != gv && (gn - gv) * direction > 0.0 && gv != 0.0;
                if crossed {
                    return Ok(Some(self.locate(f, g, t, &y, gv, hh)));
                }
                t += hh;
                y = yn;
                gv = gn;
                if abort(t, &y) {
                    return Ok(None);
                }
            }
            h = Self::next_h(hh, err).min(self.h_max);
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        Ok(None)
    }

    fn locate<const D: usize, F, G>(&self, f: &F, g: &G, t: f64, y: &[f64; D], g0: f64, h: f64) -> Event<D>
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        G: Fn(f64, &[f64; D]) -> f64,
    {
        let (mut lo, mut hi) = (0.0, h);
        let mut best = *y;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (ym, _) = self.step(f, t, y, mid);
            let gm = g(t + mid, &ym);
            if gm == 0.0 {
                return Event { t: t + mid, y: ym };
            }
            if (gm > 0.0) == (g0 > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            best = ym;
            if hi - lo <= 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        Event { t: t + 0.5 * (lo + hi), y: best }
    }
}
