//! Time integration.
//!
//! The stiff linear parts (`(mu4/2) lap u` and `-(1/lambda1) lap d`) are
//! diagonal in Fourier space and handled exactly; everything else is
//! explicit. `SemiImplicitEuler` is the first-order integrating-factor
//! scheme `q' = exp(dt L) (q + dt F(q))`; `ImexBdf2` is the second-order
//! semi-implicit backward differentiation scheme with extrapolated forcing.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::LeslieCoefficients;
use crate::error::{Error, Result};
use crate::physics::{
    director_explicit_hat, linear_symbols, momentum_explicit_hat, momentum_force_hat, ConstitutiveBundle,
    FieldState, RLaplacian, RhsOptions,
};
use crate::spectral::ops::{curl, sup_norm};
use crate::spectral::{Field, Shape, SpectralGrid};

type Modes = Vec<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    SemiImplicitEuler,
    ImexBdf2,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SemiImplicitEuler => "semi-implicit-euler",
            Scheme::ImexBdf2 => "imex-bdf2",
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeStepperConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default)]
    pub reconstruct_pressure: bool,
    /// Stop with a blow-up report once `sup |curl u|` exceeds this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vorticity_limit: Option<f64>,
}

impl TimeStepperConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Self {
        TimeStepperConfig { dt, t_end, scheme, dealias: true, reconstruct_pressure: false, vorticity_limit: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Parameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::Parameter(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if let Some(v) = self.vorticity_limit {
            if !(v > 0.0) {
                return Err(Error::Parameter(format!("vorticity limit must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` from time 0; the last one may be
    /// shorter than `dt`.
    pub fn n_steps(&self) -> usize {
        steps_over(self.t_end, self.dt)
    }
}

fn steps_over(duration: f64, dt: f64) -> usize {
    if duration <= 0.0 {
        return 0;
    }
    let ratio = duration / dt;
    let r = ratio.round();
    if (ratio - r).abs() <= 1e-9 * ratio.max(1.0) {
        (r as usize).max(1)
    } else {
        ratio.ceil() as usize
    }
}

fn default_r() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    #[serde(default)]
    pub enabled: bool,
    pub m: usize,
    #[serde(default = "default_r")]
    pub r: f64,
    /// Galerkin dimension surrogate; defaults to the grid's `n / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
}

impl RegularizationConfig {
    pub fn new(m: usize, r: f64) -> Self {
        RegularizationConfig { enabled: true, m, r, n_modes: None }
    }

    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Parameter("M must be positive".into()));
        }
        if !(self.r > 10.0 / 3.0 && self.r.is_finite()) {
            return Err(Error::Parameter(format!("r must exceed 10/3, got {}", self.r)));
        }
        let n_modes = self.n_modes.unwrap_or(grid.n() / 2);
        if n_modes > grid.n() / 2 {
            return Err(Error::Parameter(format!("N_modes = {n_modes} exceeds the grid's n/2 = {}", grid.n() / 2)));
        }
        if self.m > n_modes {
            return Err(Error::Parameter(format!("M = {} exceeds N_modes = {n_modes}", self.m)));
        }
        Ok(())
    }

    pub(crate) fn rhs_options(&self, dealias: bool) -> RhsOptions {
        RhsOptions {
            dealias,
            advect_modes: Some(self.m),
            r_laplacian: Some(RLaplacian { weight: 1.0 / self.m as f64, r: self.r }),
        }
    }
}

struct History {
    u: Vec<Modes>,
    d: Vec<Modes>,
    fu: Vec<Modes>,
    fd: Vec<Modes>,
    dt: f64,
}

/// Stateful stepper; keeps the previous step for the two-step scheme.
pub struct Integrator {
    grid: Arc<SpectralGrid>,
    coeffs: LeslieCoefficients,
    cfg: TimeStepperConfig,
    opts: RhsOptions,
    lu: Vec<f64>,
    ld: Vec<f64>,
    history: Option<History>,
}

/// Result of one step, with the bundle of the state the step started from.
pub struct StepOutput {
    pub next: FieldState,
    pub bundle: ConstitutiveBundle,
}

impl Integrator {
    pub fn new(
        grid: &Arc<SpectralGrid>,
        coeffs: LeslieCoefficients,
        cfg: &TimeStepperConfig,
        reg: Option<&RegularizationConfig>,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(coeffs.lambda1 < 0.0) || !(coeffs.mu4 > 0.0) {
            return Err(Error::Regime("stepping needs lambda1 < 0 and mu4 > 0".into()));
        }
        let opts = match reg.filter(|r| r.enabled) {
            Some(r) => {
                r.validate(grid)?;
                r.rhs_options(cfg.dealias)
            }
            None => RhsOptions { dealias: cfg.dealias, ..Default::default() },
        };
        let (lu, ld) = linear_symbols(grid, &coeffs);
        Ok(Integrator { grid: grid.clone(), coeffs, cfg: cfg.clone(), opts, lu, ld, history: None })
    }

    pub fn config(&self) -> &TimeStepperConfig {
        &self.cfg
    }

    pub fn rhs_options(&self) -> &RhsOptions {
        &self.opts
    }

    /// Forgets the previous step (the next two-step update restarts).
    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn step(&mut self, state: &FieldState) -> Result<FieldState> {
        Ok(self.step_with(state, self.cfg.dt)?.next)
    }

    /// Advances by `dt` and returns the new state together with the
    /// constitutive bundle of `state`.
    pub fn step_with(&mut self, state: &FieldState, dt: f64) -> Result<StepOutput> {
        if **state.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let grid = &self.grid;
        let u_hat = state.u.to_spectral();
        let d_hat = state.d.to_spectral();
        let bundle = ConstitutiveBundle::from_spectral(state, &u_hat, &d_hat, self.opts.dealias)?;
        let fu = momentum_explicit_hat(state, &bundle, &u_hat, &self.opts)?;
        let fd = director_explicit_hat(state, &bundle, &self.opts);

        let two_step = self.cfg.scheme == Scheme::ImexBdf2
            && self.history.as_ref().is_some_and(|h| (h.dt - dt).abs() <= 1e-12 * dt);
        let (nu, nd) = if two_step {
            let h = self.history.as_ref().unwrap();
            (bdf2(&u_hat, &h.u, &fu, &h.fu, &self.lu, dt), bdf2(&d_hat, &h.d, &fd, &h.fd, &self.ld, dt))
        } else {
            (if_euler(&u_hat, &fu, &self.lu, dt), if_euler(&d_hat, &fd, &self.ld, dt))
        };
        if self.cfg.scheme == Scheme::ImexBdf2 {
            self.history = Some(History { u: u_hat, d: d_hat, fu, fd, dt });
        }
        let dim = grid.dim();
        let next = FieldState {
            time: state.time + dt,
            u: Field::from_spectral(grid, Shape::Vector(dim), nu),
            d: Field::from_spectral(grid, Shape::Vector(3), nd),
            coeffs: self.coeffs,
        };
        Ok(StepOutput { next, bundle })
    }
}

fn if_euler(q: &[Modes], f: &[Modes], l: &[f64], dt: f64) -> Vec<Modes> {
    let decay: Vec<f64> = l.iter().map(|l| (dt * l).exp()).collect();
    q.iter()
        .zip(f)
        .map(|(qc, fc)| qc.iter().zip(fc).zip(&decay).map(|((a, b), e)| (a + dt * b) * e).collect())
        .collect()
}

fn bdf2(q: &[Modes], q_prev: &[Modes], f: &[Modes], f_prev: &[Modes], l: &[f64], dt: f64) -> Vec<Modes> {
    let denom: Vec<f64> = l.iter().map(|l| 1.0 / (3.0 - 2.0 * dt * l)).collect();
    (0..q.len())
        .map(|c| {
            (0..l.len())
                .map(|m| {
                    (4.0 * q[c][m] - q_prev[c][m] + 2.0 * dt * (2.0 * f[c][m] - f_prev[c][m])) * denom[m]
                })
                .collect()
        })
        .collect()
}

/// One step of the plain scheme from `state` (a two-step scheme takes its
/// first-order start step here).
pub fn step(state: &FieldState, cfg: &TimeStepperConfig) -> Result<FieldState> {
    let mut it = Integrator::new(state.grid(), state.coeffs, cfg, None)?;
    let next = it.step(state)?;
    check_finite(&next, 1, state)?;
    Ok(next)
}

/// One step of the regularized scheme: the velocity is advected by its
/// truncation to modes `|k_j| <= M` and the momentum equation gains
/// `(1/M) div(|grad u|^(r-2) grad u)`.
pub fn step_regularized(state: &FieldState, cfg: &TimeStepperConfig, reg: &RegularizationConfig) -> Result<FieldState> {
    if !reg.enabled {
        return Err(Error::Parameter("regularization is disabled".into()));
    }
    let mut it = Integrator::new(state.grid(), state.coeffs, cfg, Some(reg))?;
    let next = it.step(state)?;
    check_finite(&next, 1, state)?;
    Ok(next)
}

fn check_finite(next: &FieldState, step: usize, last: &FieldState) -> Result<()> {
    if next.is_finite() {
        Ok(())
    } else {
        Err(Error::BlowupDetected {
            step,
            time: next.time,
            reason: "non-finite sample".into(),
            last_state: Box::new(last.clone()),
        })
    }
}

/// Hands every due step to an observer.
pub trait Observer {
    fn start(&mut self, _initial: &FieldState) -> Result<()> {
        Ok(())
    }

    /// `prev` is the state immediately before `next` (not the previous
    /// observed state); `bundle` belongs to `prev`.
    fn observe(&mut self, step: usize, prev: &FieldState, next: &FieldState, bundle: &ConstitutiveBundle, dt: f64) -> Result<()>;
}

impl Observer for () {
    fn observe(&mut self, _: usize, _: &FieldState, _: &FieldState, _: &ConstitutiveBundle, _: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupInfo {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Last state reached (the last finite one after a blow-up).
    pub final_state: FieldState,
    pub steps: usize,
    /// Times at which the observer was invoked.
    pub observed_times: Vec<f64>,
    pub blowup: Option<BlowupInfo>,
}

/// Steps from `initial` to the absolute time `cfg.t_end`, calling `observer` every `cadence`
/// steps and after the last one. A blow-up ends the run early and is
/// reported in the trajectory rather than as an error.
pub fn run(
    initial: &FieldState,
    cfg: &TimeStepperConfig,
    reg: Option<&RegularizationConfig>,
    cadence: usize,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    if cadence == 0 {
        return Err(Error::Parameter("cadence must be positive".into()));
    }
    let mut it = Integrator::new(initial.grid(), initial.coeffs, cfg, reg)?;
    let start = initial.time;
    let duration = cfg.t_end - start;
    if duration < -1e-12 * cfg.t_end.abs().max(1.0) {
        return Err(Error::Parameter(format!("initial time {start} is past t_end = {}", cfg.t_end)));
    }
    let steps = steps_over(duration, cfg.dt);
    let mut state = initial.clone();
    let mut observed = Vec::new();
    observer.start(initial)?;
    for k in 1..=steps {
        let target = if k == steps { cfg.t_end } else { start + k as f64 * cfg.dt };
        let dt = target - state.time;
        let out = it.step_with(&state, dt).map_err(|e| annotate(e, k, state.time))?;
        let mut next = out.next;
        next.time = target;
        let reason = if !next.is_finite() {
            Some("non-finite sample".to_string())
        } else if let Some(limit) = cfg.vorticity_limit {
            let w = sup_norm(&curl(&next.u)?)?;
            (w > limit).then(|| format!("sup |curl u| = {w:e} exceeds {limit:e}"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Ok(Trajectory {
                final_state: state,
                steps: k - 1,
                observed_times: observed,
                blowup: Some(BlowupInfo { step: k, time: target, reason }),
            });
        }
        if k % cadence == 0 || k == steps {
            observer.observe(k, &state, &next, &out.bundle, dt).map_err(|e| annotate(e, k, target))?;
            observed.push(target);
        }
        state = next;
    }
    Ok(Trajectory { final_state: state, steps, observed_times: observed, blowup: None })
}

fn annotate(e: Error, step: usize, time: f64) -> Error {
    match e {
        Error::BlowupDetected { .. } | Error::Io(_) => e,
        other => Error::Parameter(format!("step {step} (t = {time}): {other}")),
    }
}

/// Pressure (zero mean) from `lap P = div F`, where `F` is the momentum
/// forcing before projection.
pub fn reconstruct_pressure(state: &FieldState) -> Result<Field> {
    let grid = state.grid();
    let u_hat = state.u.to_spectral();
    let d_hat = state.d.to_spectral();
    let bundle = ConstitutiveBundle::from_spectral(state, &u_hat, &d_hat, true)?;
    let force = momentum_force_hat(state, &bundle, &u_hat, &RhsOptions::default())?;
    let dim = grid.dim();
    let p_hat: Modes = (0..grid.len())
        .map(|m| {
            let k = grid.deriv_wavenumber(m);
            let kk: f64 = k[..dim].iter().map(|v| v * v).sum();
            if kk == 0.0 {
                return Complex64::default();
            }
            let kf: Complex64 = (0..dim).map(|a| k[a] * force[a][m]).sum();
            -Complex64::i() * kf / kk
        })
        .collect();
    Ok(Field::from_spectral(grid, Shape::Scalar, vec![p_hat]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::tests::random_state;
    use crate::spectral::ops::{divergence, l2_norm};
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn tg_state(n: usize, c: LeslieCoefficients) -> FieldState {
        let g = SpectralGrid::shared(2, n).unwrap();
        let u = Field::from_fn(&g, Shape::Vector(2), |x, o| {
            let (a, b) = (TAU * x[0], TAU * x[1]);
            o[0] = a.sin() * b.cos();
            o[1] = -a.cos() * b.sin();
        });
        let d = Field::constant(&g, Shape::Vector(3), &[0.0, 0.0, 1.0]);
        FieldState::new(0.0, u, d, c).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TimeStepperConfig::new(0.0, 1.0, Scheme::default()).validate().is_err());
        assert!(TimeStepperConfig::new(0.5, 0.1, Scheme::default()).validate().is_err());
        assert!(TimeStepperConfig::new(0.1, 0.0, Scheme::default()).validate().is_ok());
        assert_eq!(TimeStepperConfig::new(1e-3, 0.1, Scheme::default()).n_steps(), 100);
        assert_eq!(TimeStepperConfig::new(0.3, 1.0, Scheme::default()).n_steps(), 4);
        let g = SpectralGrid::new(2, 32).unwrap();
        assert!(RegularizationConfig::new(8, 4.0).validate(&g).is_ok());
        assert!(RegularizationConfig::new(8, 3.0).validate(&g).is_err());
        assert!(RegularizationConfig::new(17, 4.0).validate(&g).is_err());
        let mut r = RegularizationConfig::new(8, 4.0);
        r.n_modes = Some(4);
        assert!(r.validate(&g).is_err());
    }

    #[test]
    fn quiescent_state_is_fixed() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        let s = FieldState::quiescent(&g, LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap());
        let next = step(&s, &TimeStepperConfig::new(1e-3, 1.0, Scheme::SemiImplicitEuler)).unwrap();
        assert!((&next.u - &s.u).max_abs() < 1e-14 && (&next.d - &s.d).max_abs() < 1e-14);
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let c = LeslieCoefficients::from_alpha(0.5, 1.0, 0.1).unwrap();
        let s = tg_state(32, c);
        let cfg = TimeStepperConfig::new(1e-3, 0.02, Scheme::SemiImplicitEuler);
        let traj = run(&s, &cfg, None, 1, &mut ()).unwrap();
        let decay = (-0.5 * c.mu4 * 2.0 * TAU * TAU * 0.02).exp();
        let err = (&traj.final_state.u - &s.u.scale(decay)).max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn velocity_stays_divergence_free_with_zero_mean() {
        let g = SpectralGrid::shared(2, 32).unwrap();
        let s = random_state(&g, LeslieCoefficients::from_alpha(0.7, 1.0, 0.5).unwrap(), 2, 3);
        for scheme in [Scheme::SemiImplicitEuler, Scheme::ImexBdf2] {
            let cfg = TimeStepperConfig::new(1e-3, 0.005, scheme);
            let traj = run(&s, &cfg, None, 1, &mut ()).unwrap();
            let u = &traj.final_state.u;
            assert!(divergence(u).unwrap().max_abs() < 1e-10);
            assert!(u.mean().iter().all(|m| m.abs() < 1e-14));
        }
    }

    #[test]
    fn regularized_step_matches_plain_for_zero_velocity() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        let s = random_state(&g, LeslieCoefficients::from_alpha(1.0, 1.0, 0.5).unwrap(), 7, 2);
        let s = FieldState { u: Field::zeros(&g, Shape::Vector(2)), ..s };
        let cfg = TimeStepperConfig::new(1e-3, 1.0, Scheme::SemiImplicitEuler);
        let a = step(&s, &cfg).unwrap();
        let b = step_regularized(&s, &cfg, &RegularizationConfig::new(4, 4.0)).unwrap();
        assert!((&a.u - &b.u).max_abs() < 1e-15 && (&a.d - &b.d).max_abs() < 1e-15);
    }

    #[test]
    fn zero_length_run_returns_initial_state() {
        let c = LeslieCoefficients::from_alpha(0.5, 1.0, 0.1).unwrap();
        let s = tg_state(16, c);
        let traj = run(&s, &TimeStepperConfig::new(1e-3, 0.0, Scheme::SemiImplicitEuler), None, 1, &mut ()).unwrap();
        assert_eq!(traj.steps, 0);
        assert!(traj.observed_times.is_empty());
        assert_eq!(traj.final_state.u.data(), s.u.data());
    }

    #[test]
    fn vorticity_limit_stops_the_run() {
        let c = LeslieCoefficients::from_alpha(0.5, 1.0, 0.1).unwrap();
        let s = tg_state(16, c);
        let mut cfg = TimeStepperConfig::new(1e-3, 0.01, Scheme::SemiImplicitEuler);
        cfg.vorticity_limit = Some(1.0);
        let traj = run(&s, &cfg, None, 1, &mut ()).unwrap();
        let info = traj.blowup.expect("limit should trip");
        assert_eq!(info.step, 1);
        assert_eq!(traj.final_state.time, 0.0);
    }

    #[test]
    fn non_finite_state_reports_blowup() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        // an absurd penalty scale makes the explicit penalty term overflow
        let c = LeslieCoefficients::from_alpha(1.0, 1.0, 1e-160).unwrap();
        let d = Field::constant(&g, Shape::Vector(3), &[0.0, 0.0, 2.0]);
        let s = FieldState::new(0.0, Field::zeros(&g, Shape::Vector(2)), d, c).unwrap();
        let err = step(&s, &TimeStepperConfig::new(1e-3, 1.0, Scheme::SemiImplicitEuler)).unwrap_err();
        assert!(matches!(err, Error::BlowupDetected { step: 1, .. }));
        let traj = run(&s, &TimeStepperConfig::new(1e-3, 0.01, Scheme::SemiImplicitEuler), None, 1, &mut ()).unwrap();
        assert!(traj.blowup.is_some() && traj.final_state.is_finite());
    }

    #[test]
    fn taylor_green_pressure() {
        let c = LeslieCoefficients::from_alpha(0.5, 1.0, 0.1).unwrap();
        let s = tg_state(32, c);
        let p = reconstruct_pressure(&s).unwrap();
        let exact = Field::from_fn(s.grid(), Shape::Scalar, |x, o| {
            o[0] = 0.25 * ((2.0 * TAU * x[0]).cos() + (2.0 * TAU * x[1]).cos());
        });
        assert!((&p - &exact).max_abs() < 1e-6);
        let q = FieldState::quiescent(s.grid(), c);
        assert!(reconstruct_pressure(&q).unwrap().max_abs() < 1e-15);
        assert!(p.mean()[0].abs() < 1e-15);
    }

    fn solution_at(scheme: Scheme, dt: f64, s: &FieldState) -> FieldState {
        run(s, &TimeStepperConfig::new(dt, 0.1, scheme), None, usize::MAX, &mut ()).unwrap().final_state
    }

    #[test]
    fn temporal_convergence_orders() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        let s = random_state(&g, LeslieCoefficients::from_alpha(0.8, 1.0, 0.5).unwrap(), 21, 2);
        for (scheme, order) in [(Scheme::SemiImplicitEuler, 1.0), (Scheme::ImexBdf2, 2.0)] {
            let dt = 0.1 / 16.0;
            let reference = solution_at(scheme, dt / 8.0, &s);
            let errs: Vec<f64> = [dt, dt / 2.0, dt / 4.0]
                .iter()
                .map(|&h| {
                    let x = solution_at(scheme, h, &s);
                    (l2_norm(&(&x.u - &reference.u)).powi(2) + l2_norm(&(&x.d - &reference.d)).powi(2)).sqrt()
                })
                .collect();
            let p1 = (errs[0] / errs[1]).log2();
            let p2 = (errs[1] / errs[2]).log2();
            assert!(p1 >= 0.9 * order && p2 >= 0.9 * order, "{scheme:?}: {errs:?} orders {p1} {p2}");
        }
    }
}
