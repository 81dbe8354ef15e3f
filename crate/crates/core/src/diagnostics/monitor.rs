use serde::Serialize;

use crate::coeffs::LeslieCoefficients;
use crate::error::{Error, Result};
use crate::physics::{penalty, FieldState};
use crate::spectral::{curl, gradient, l2_norm, lambda_s, laplacian, sobolev_norm, sup_norm, sup_norm_refined, Field};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorSample {
    pub time: f64,
    pub sup_curl_u: f64,
    pub sup_grad_d: f64,
}

/// Running blow-up indicators. Unknown analytic constants are set to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupMonitorState {
    pub history: Vec<MonitorSample>,
    /// Trapezoid approximation of `int (||curl u||_inf + ||grad d||_inf^4) dt`.
    pub b_integral: f64,
    /// `1 + a + b^2 + (mu5+mu6)^2 b^(8/3) + mu1 b^4` at the latest sample,
    /// with `a = ||curl u||_inf`, `b = ||grad d||_inf`.
    pub g_bracket: f64,
    pub y3: f64,
    pub a_qty: f64,
    pub logsob_ratio: f64,
    mu1: f64,
    mu56: f64,
    refine: usize,
}

impl BlowupMonitorState {
    pub fn new(c: &LeslieCoefficients) -> Self {
        BlowupMonitorState {
            history: Vec::new(),
            b_integral: 0.0,
            g_bracket: f64::NAN,
            y3: f64::NAN,
            a_qty: f64::NAN,
            logsob_ratio: f64::NAN,
            mu1: c.mu1,
            mu56: c.mu56(),
            refine: 1,
        }
    }

    /// Evaluate sup norms after spectral interpolation onto a grid `factor`
    /// times finer (a power of two; 1 means the collocation grid).
    pub fn with_refinement(mut self, factor: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(Error::Parameter(format!("refinement factor must be a power of two, got {factor}")));
        }
        self.refine = factor;
        Ok(self)
    }

    fn sup(&self, f: &Field) -> Result<f64> {
        if self.refine == 1 {
            sup_norm(f)
        } else {
            sup_norm_refined(f, self.refine)
        }
    }

    /// Records the sup norms at `time` and advances the time integral and
    /// the bracket.
    pub fn update_from_norms(&mut self, time: f64, sup_curl_u: f64, sup_grad_d: f64) -> Result<()> {
        if let Some(last) = self.history.last() {
            if !(time > last.time) {
                return Err(Error::NonMonotoneTime { last: last.time, got: time });
            }
            let f0 = last.sup_curl_u + last.sup_grad_d.powi(4);
            let f1 = sup_curl_u + sup_grad_d.powi(4);
            self.b_integral += 0.5 * (time - last.time) * (f0 + f1);
        }
        let b = sup_grad_d;
        self.g_bracket = 1.0 + sup_curl_u + b * b + self.mu56 * self.mu56 * b.powf(8.0 / 3.0) + self.mu1 * b.powi(4);
        self.history.push(MonitorSample { time, sup_curl_u, sup_grad_d });
        Ok(())
    }

    pub fn update(&mut self, state: &FieldState) -> Result<()> {
        if let Some(last) = self.history.last() {
            if !(state.time > last.time) {
                return Err(Error::NonMonotoneTime { last: last.time, got: state.time });
            }
        }
        let w = curl(&state.u)?;
        let grad_u = gradient(&state.u)?;
        let sup_w = self.sup(&w)?;
        let sup_gd = self.sup(&gradient(&state.d)?)?;
        let sup_gu = self.sup(&grad_u)?;
        self.update_from_norms(state.time, sup_w, sup_gd)?;
        self.y3 = quantity_ys(state, 3.0)?;
        self.a_qty = quantity_a(state)?;
        let h3 = sobolev_norm(&state.u, 3.0)?;
        self.logsob_ratio = sup_gu / (1.0 + l2_norm(&w) + sup_w * (std::f64::consts::E + h3).ln());
        Ok(())
    }

    pub fn latest(&self) -> Option<&MonitorSample> {
        self.history.last()
    }
}

/// Functional form of [`BlowupMonitorState::update`].
pub fn blowup_update(mut mon: BlowupMonitorState, state: &FieldState) -> Result<BlowupMonitorState> {
    mon.update(state)?;
    Ok(mon)
}

/// `||grad u||^2 + ||lap d - grad_d W(d)||^2`.
pub fn quantity_a(state: &FieldState) -> Result<f64> {
    let gu = l2_norm(&gradient(&state.u)?);
    let (_, gw) = penalty(&state.d, state.coeffs.epsilon)?;
    let h = &laplacian(&state.d)? - &gw;
    let hn = l2_norm(&h);
    Ok(gu * gu + hn * hn)
}

/// `||Lambda^s u||^2 + ||grad Lambda^s d||^2`.
pub fn quantity_ys(state: &FieldState, s: f64) -> Result<f64> {
    let a = sobolev_norm(&state.u, s)?;
    let b = l2_norm(&gradient(&lambda_s(&state.d, s)?)?);
    Ok(a * a + b * b)
}
