//! Dormand–Prince 5(4) integrator with step clipping at requested outputs.

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

pub enum Stop {
    Reached,
    Event,
}

impl Dopri5 {
    /// Integrates from `t` to `t_end`, calling `record(t, y)` when a time in
    /// `outputs` (ascending) is hit exactly and `event(t, y)` after every
    /// accepted step; a `true` event stops the integration.
    #[allow(clippy::too_many_arguments)]
    pub fn integrate<const D: usize, F, E, R>(
        &self,
        f: F,
        mut t: f64,
        mut y: [f64; D],
        t_end: f64,
        outputs: &[f64],
        mut event: E,
        mut record: R,
    ) -> (Stop, f64, [f64; D])
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
        E: FnMut(f64, &[f64; D]) -> bool,
        R: FnMut(usize, f64, &[f64; D]),
    {
        let mut h = (self.h_max).min(1e-3);
        let mut out_idx = outputs.partition_point(|&o| o < t);
        let mut k1 = f(t, &y);
        while t < t_end {
            let mut target = t_end;
            let mut hits_output = false;
            if out_idx < outputs.len() && outputs[out_idx] <= t_end {
                target = outputs[out_idx];
                hits_output = true;
            }
            let mut step = h.min(self.h_max);
            let mut clipped = false;
            if t + step >= target {
                step = target - t;
                clipped = true;
            }
            if step <= 0.0 {
                if hits_output {
                    record(out_idx, t, &y);
                    out_idx += 1;
                    continue;
                }
                break;
            }
            let (yn, k7, err) = self.stage(&f, t, &y, &k1, step);
            if err <= 1.0 {
                t = if clipped { target } else { t + step };
                y = yn;
                k1 = k7;
                if clipped && hits_output {
                    record(out_idx, t, &y);
                    out_idx += 1;
                }
                if event(t, &y) {
                    return (Stop::Event, t, y);
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !clipped || fac < 1.0 {
                    h = step * fac;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return (Stop::Event, t, y);
            }
        }
        (Stop::Reached, t, y)
    }

    fn stage<const D: usize, F>(
        &self,
        f: &F,
        t: f64,
        y: &[f64; D],
        k1: &[f64; D],
        h: f64,
    ) -> ([f64; D], [f64; D], f64)
    where
        F: Fn(f64, &[f64; D]) -> [f64; D],
    {
        let comb = |coefs: &[(f64, &[f64; D])]| {
            let mut o = *y;
            for (c, k) in coefs {
                for i in 0..D {
                    o[i] += h * c * k[i];
                }
            }
            o
        };
        let k2 = f(t + C2 * h, &comb(&[(A21, k1)]));
        let k3 = f(t + C3 * h, &comb(&[(A31, k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &comb(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &comb(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let yn = comb(&[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &yn);
        let mut err = 0.0f64;
        for i in 0..D {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(yn[i].abs());
            err = err.max((e / sc).abs());
        }
        (yn, k7, err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let ode = Dopri5 {
            rtol: 1e-12,
            atol: 1e-14,
            h_max: 0.5,
        };
        let outs: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let mut seen = Vec::new();
        let (_, t, y) = ode.integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            10.0,
            &outs,
            |_, _| false,
            |_, t, y| seen.push((t, y[0])),
        );
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.sin()).abs() < 1e-10);
        assert_eq!(seen.len(), 10);
        for (t, v) in seen {
            assert!((v - t.sin()).abs() < 1e-10);
        }
    }
}
