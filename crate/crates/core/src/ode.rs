//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems
//! `dy/dt = f(t, y)`.

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Step-size control for [`integrate`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the output spacing when absent.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-9,
            atol: 1e-11,
            initial_step: None,
            min_step: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::param("step_control", "tolerances must be positive"));
        }
        if !(self.min_step > 0.0 && self.max_step >= self.min_step) {
            return Err(Error::param("step_control", "need 0 < min_step <= max_step"));
        }
        Ok(())
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
// b - b*, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates from `times[0]` and returns the state at every entry of
/// `times`, which must be non-decreasing. Steps are clipped so that each
/// output time is hit exactly.
pub fn integrate<F>(mut rhs: F, y0: &[C64], times: &[f64], ctrl: &StepControl) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    ctrl.validate()?;
    if times.is_empty() {
        return Ok(vec![]);
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::param("t_grid", "times must be finite and non-decreasing"));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(times.len());
    out.push(y.clone());

    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::default(); n]);
    let mut tmp = vec![C64::default(); n];
    let mut ynew = vec![C64::default(); n];

    let mut t = times[0];
    let span = times[times.len() - 1] - t;
    let mut h = ctrl
        .initial_step
        .unwrap_or_else(|| (span / 100.0).max(ctrl.min_step * 10.0))
        .min(ctrl.max_step);
    if !(h > 0.0) {
        h = ctrl.min_step;
    }
    rhs(t, &y, &mut k[0]);
    let mut steps = 0usize;

    for &target in &times[1..] {
        while t < target {
            if steps >= ctrl.max_steps {
                return Err(Error::StepUnderflow { t });
            }
            steps += 1;
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };

            macro_rules! stage {
                ($dst:expr, $c:expr, $( ($a:expr, $j:expr) ),* ) => {{
                    for i in 0..n {
                        let mut acc = y[i];
                        $( acc += k[$j][i] * ($a * hs); )*
                        tmp[i] = acc;
                    }
                    rhs(t + $c * hs, &tmp, &mut k[$dst]);
                }};
            }
            stage!(1, C2, (A21, 0));
            stage!(2, C3, (A31, 0), (A32, 1));
            stage!(3, C4, (A41, 0), (A42, 1), (A43, 2));
            stage!(4, C5, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
            stage!(5, 1.0, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
            for i in 0..n {
                ynew[i] = y[i]
                    + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * hs;
            }
            rhs(t + hs, &ynew, &mut k[6]);
            let mut err2 = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1
                    + k[2][i] * E3
                    + k[3][i] * E4
                    + k[4][i] * E5
                    + k[5][i] * E6
                    + k[6][i] * E7)
                    * hs;
                let sc = ctrl.atol + ctrl.rtol * y[i].norm().max(ynew[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = if n > 0 { (err2 / n as f64).sqrt() } else { 0.0 };
            if !err.is_finite() {
                return Err(Error::Divergence { t });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = (hs * fac).min(ctrl.max_step);
                } else {
                    h = h.max(hs * fac).min(ctrl.max_step);
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < ctrl.min_step {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence { t });
        }
        out.push(y.clone());
    }
    Ok(out)
}
