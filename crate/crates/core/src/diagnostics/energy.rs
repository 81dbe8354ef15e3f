use serde::Serialize;

use crate::error::{Error, Result};
use crate::physics::{penalty, ConstitutiveBundle, FieldState};
use crate::solver::RegularizationConfig;
use crate::spectral::{gradient, inner, l2_norm};

/// Energies, dissipation channels and energy-law residuals for one audited
/// step. Channels are evaluated at the state the step started from;
/// energies belong to `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct EnergyReport {
    pub time: f64,
    pub E_total: f64,
    pub E_kinetic: f64,
    pub E_elastic: f64,
    pub E_penalty: f64,
    pub D_mu1: f64,
    pub D_visc: f64,
    pub D_Ad: f64,
    pub D_N: f64,
    pub D_cross: f64,
    pub D_case1_director: f64,
    pub D_case1_Ad: f64,
    pub D_reg: f64,
    pub residual_general: f64,
    pub residual_case1: f64,
    /// `||A d||^2` and `||N||^2`, for the Case 2 lower bound.
    pub norm_ad_sq: f64,
    pub norm_n_sq: f64,
    /// `E(time) - E(previous state)` for an audited step.
    pub energy_change: f64,
}

/// `(1/M) int |grad u|^r` in the regularized scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationTerm {
    pub weight: f64,
    pub r: f64,
}

impl RegularizationTerm {
    /// The term of an enabled regularization config.
    pub fn of(reg: Option<&RegularizationConfig>) -> Option<Self> {
        reg.filter(|r| r.enabled).map(|r| RegularizationTerm { weight: 1.0 / r.m as f64, r: r.r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub kinetic: f64,
    pub elastic: f64,
    pub penalty: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.penalty
    }
}

pub fn energies(state: &FieldState) -> Result<Energies> {
    let ku = l2_norm(&state.u);
    let gd = l2_norm(&gradient(&state.d)?);
    let (w, _) = penalty(&state.d, state.coeffs.epsilon)?;
    Ok(Energies { kinetic: 0.5 * ku * ku, elastic: 0.5 * gd * gd, penalty: w.mean()[0] })
}

/// `E = ||u||^2 / 2 + ||grad d||^2 / 2 + int W(d)`; the dissipation and
/// residual fields of the report are NaN.
pub fn total_energy(state: &FieldState) -> Result<EnergyReport> {
    let e = energies(state)?;
    Ok(EnergyReport {
        time: state.time,
        E_total: e.total(),
        E_kinetic: e.kinetic,
        E_elastic: e.elastic,
        E_penalty: e.penalty,
        D_mu1: f64::NAN,
        D_visc: f64::NAN,
        D_Ad: f64::NAN,
        D_N: f64::NAN,
        D_cross: f64::NAN,
        D_case1_director: f64::NAN,
        D_case1_Ad: f64::NAN,
        D_reg: f64::NAN,
        residual_general: f64::NAN,
        residual_case1: f64::NAN,
        norm_ad_sq: f64::NAN,
        norm_n_sq: f64::NAN,
        energy_change: f64::NAN,
    })
}

impl EnergyReport {
    /// Energy rate predicted by the general grouping (negative when dissipative).
    pub fn rate_general(&self) -> f64 {
        -(self.D_mu1 + self.D_visc + self.D_Ad + self.D_N + self.D_cross + self.D_reg)
    }

    /// Energy rate predicted by the Case 1 grouping.
    pub fn rate_case1(&self) -> f64 {
        -(self.D_mu1 + self.D_visc + self.D_case1_director + self.D_case1_Ad + self.D_reg)
    }

    /// Case 1 channels that came out negative, by name.
    pub fn negative_case1_channels(&self, tol: f64) -> Vec<&'static str> {
        [
            ("D_mu1", self.D_mu1),
            ("D_visc", self.D_visc),
            ("D_case1_director", self.D_case1_director),
            ("D_case1_Ad", self.D_case1_Ad),
            ("D_reg", self.D_reg),
        ]
        .into_iter()
        .filter(|(_, v)| *v < -tol)
        .map(|(n, _)| n)
        .collect()
    }
}

/// Fills the dissipation channels of `report` from the bundle of `state`.
pub fn fill_channels(
    report: &mut EnergyReport,
    state: &FieldState,
    b: &ConstitutiveBundle,
    reg: Option<RegularizationTerm>,
) -> Result<()> {
    let c = &state.coeffs;
    let ad2 = inner(&b.ad, &b.ad)?;
    let n2 = inner(&b.n, &b.n)?;
    let gu = l2_norm(&b.grad_u);
    report.D_mu1 = c.mu1 * inner(&b.d_a_d, &b.d_a_d)?;
    report.D_visc = 0.5 * c.mu4 * gu * gu;
    report.D_Ad = c.mu56() * ad2;
    report.D_N = -c.lambda1 * n2;
    report.D_cross = -(c.lambda2 - c.mu2 - c.mu3) * inner(&b.n, &b.ad)?;
    report.D_case1_director = -inner(&b.h, &b.h)? / c.lambda1;
    report.D_case1_Ad = (c.mu56() + c.lambda2 * c.lambda2 / c.lambda1) * ad2;
    report.D_reg = match reg {
        Some(rt) => {
            let dim2 = b.grad_u.ncomp();
            let len = b.grad_u.grid().len();
            let mut acc = 0.0;
            for p in 0..len {
                let g2: f64 = (0..dim2).map(|k| b.grad_u.comp(k)[p].powi(2)).sum();
                acc += g2.powf(0.5 * rt.r);
            }
            rt.weight * acc / len as f64
        }
        None => 0.0,
    };
    report.norm_ad_sq = ad2;
    report.norm_n_sq = n2;
    Ok(())
}

/// Energies and dissipation channels of one state; residuals are NaN.
pub fn energy_report(state: &FieldState, b: &ConstitutiveBundle, reg: Option<RegularizationTerm>) -> Result<EnergyReport> {
    let mut r = total_energy(state)?;
    fill_channels(&mut r, state, b, reg)?;
    Ok(r)
}

/// Audits one step: residual = (E(next) - E(prev)) / dt minus the predicted
/// rate evaluated at `prev`, for both groupings.
pub fn energy_law_audit(
    prev: &FieldState,
    next: &FieldState,
    dt: f64,
    reg: Option<RegularizationTerm>,
) -> Result<EnergyReport> {
    let b = ConstitutiveBundle::new(prev)?;
    audit_with_bundle(prev, &b, next, dt, reg)
}

pub fn audit_with_bundle(
    prev: &FieldState,
    b: &ConstitutiveBundle,
    next: &FieldState,
    dt: f64,
    reg: Option<RegularizationTerm>,
) -> Result<EnergyReport> {
    if !prev.u.same_grid(&next.u) {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("audit step must be positive, got {dt}")));
    }
    let e0 = energies(prev)?.total();
    let mut r = total_energy(next)?;
    fill_channels(&mut r, prev, b, reg)?;
    r.energy_change = r.E_total - e0;
    let slope = r.energy_change / dt;
    r.residual_general = slope - r.rate_general();
    r.residual_case1 = slope - r.rate_case1();
    Ok(r)
}

/// `D_N + D_cross + D_Ad >= eta (||Ad||^2 + ||N||^2) - tol`.
pub fn case2_lower_bound_check(report: &EnergyReport, eta: f64, tol: f64) -> bool {
    report.D_N + report.D_cross + report.D_Ad >= eta * (report.norm_ad_sq + report.norm_n_sq) - tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{eta_margin, LeslieCoefficients};
    use crate::physics::tests::random_state;
    use crate::spectral::{Field, Shape, SpectralGrid};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn coeffs() -> LeslieCoefficients {
        LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn energy_examples() {
        let g = SpectralGrid::shared(2, 32).unwrap();
        let q = FieldState::quiescent(&g, coeffs());
        assert_eq!(total_energy(&q).unwrap().E_total, 0.0);

        let d = Field::from_fn(&g, Shape::Vector(3), |x, o| {
            o[0] = (TAU * x[0]).cos();
            o[1] = (TAU * x[0]).sin();
        });
        let s = FieldState::new(0.0, Field::zeros(&g, Shape::Vector(2)), d, coeffs()).unwrap();
        let e = total_energy(&s).unwrap();
        assert!((e.E_total - 2.0 * PI * PI).abs() < 1e-10);
        assert!(e.E_penalty.abs() < 1e-12);

        let u = Field::from_fn(&g, Shape::Vector(2), |x, o| o[0] = (TAU * x[1]).sin());
        let s = FieldState { u, ..q };
        assert!((total_energy(&s).unwrap().E_total - 0.25).abs() < 1e-14);
    }

    #[test]
    fn equilibrium_audit_is_zero() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        let q = FieldState::quiescent(&g, coeffs());
        let r = energy_law_audit(&q, &q, 1e-3, None).unwrap();
        assert!(r.residual_general.abs() <= 1e-12 && r.residual_case1.abs() <= 1e-12);
    }

    #[test]
    fn groupings_agree_under_parodi() {
        let g = SpectralGrid::shared(2, 32).unwrap();
        for seed in 0..4 {
            let alpha = 0.25 * seed as f64;
            let s = random_state(&g, LeslieCoefficients::from_alpha(alpha, 1.3, 0.3).unwrap(), seed, 3);
            let b = ConstitutiveBundle::new(&s).unwrap();
            let r = energy_report(&s, &b, None).unwrap();
            let (a, c) = (r.rate_general(), r.rate_case1());
            assert!((a - c).abs() <= 1e-10 * a.abs(), "{a} vs {c}");
            assert!(r.negative_case1_channels(0.0).is_empty());
        }
    }

    #[test]
    fn case2_bound_trivial_and_diagonal() {
        let g = SpectralGrid::shared(2, 16).unwrap();
        let s = random_state(&g, coeffs(), 3, 2);
        let b = ConstitutiveBundle::new(&s).unwrap();
        let r = energy_report(&s, &b, None).unwrap();
        assert!(case2_lower_bound_check(&r, 0.0, 1e-12));
        // a_nn = 2, a_na = 0, a_aa = 1
        let c = LeslieCoefficients::new(-2.0, 0.0, [0.0, -1.0, 1.0, 1.0, 0.5, 0.5], 0.3).unwrap();
        let s = FieldState { coeffs: c, ..s };
        let b = ConstitutiveBundle::new(&s).unwrap();
        let r = energy_report(&s, &b, None).unwrap();
        assert!(case2_lower_bound_check(&r, 1.0, 1e-12));
    }

    fn case2_set() -> impl Strategy<Value = LeslieCoefficients> {
        // lambda1 < 0, mu5 + mu6 > 0, cross term strictly inside the bound
        (0.2f64..3.0, 0.1f64..3.0, -0.95f64..0.95, 0.0f64..1.0, -1.0f64..1.0)
            .prop_map(|(nl1, mu56, frac, mu1, mu2)| {
                let l1 = -nl1;
                let bound = 2.0 * nl1.sqrt() * mu56.sqrt();
                // lambda2 - mu2 - mu3 = frac * bound, with mu3 = mu2 - lambda1
                let mu3 = mu2 - l1;
                let l2 = frac * bound + mu2 + mu3;
                let mu5 = 0.5 * (mu56 + l2);
                let mu6 = 0.5 * (mu56 - l2);
                LeslieCoefficients::new(l1, l2, [mu1, mu2, mu3, 1.0, mu5, mu6], 0.4).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn case2_bound_holds_with_sharp_eta(c in case2_set(), seed in 0u64..1000) {
            let g = SpectralGrid::shared(2, 16).unwrap();
            let s = random_state(&g, c, seed, 2);
            let b = ConstitutiveBundle::new(&s).unwrap();
            let r = energy_report(&s, &b, None).unwrap();
            let eta = eta_margin(&c).unwrap();
            prop_assert!(eta > 0.0);
            prop_assert!(case2_lower_bound_check(&r, eta, 1e-10));
        }
    }
}
