//! Leslie and kinematic coefficients, the admissibility constraints on them,
//! and the pointwise dissipation quadratic form.
//!
//! Two coefficient regimes guarantee that the total energy dissipates:
//!
//! * **Case 1** assumes Parodi's relation `mu2 + mu3 = mu6 - mu5` together with
//!   `lambda2^2 / (-lambda1) <= mu5 + mu6`.
//! * **Case 2** drops Parodi's relation and instead asks that the cross
//!   coefficient be strictly dominated,
//!   `|lambda2 - mu2 - mu3| < 2 sqrt(-lambda1) sqrt(mu5 + mu6)`.
//!
//! Both share the base constraints `lambda1 < 0`, `mu1 >= 0`, `mu4 > 0`,
//! `mu5 + mu6 >= 0`, `lambda1 = mu2 - mu3` and `lambda2 = mu5 - mu6`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for the equality constraints unless the caller
/// supplies one.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Material parameters of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeslieCoefficients {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Plays the role of the fluid viscosity.
    pub mu4: f64,
    pub mu5: f64,
    pub mu6: f64,
    /// Ginzburg-Landau penalty scale.
    pub epsilon: f64,
}

impl LeslieCoefficients {
    /// Builds a coefficient set from explicit values. Only `epsilon > 0` is
    /// enforced here; use [`validate`] for the dissipation constraints.
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        mu: [f64; 6],
        epsilon: f64,
    ) -> Result<Self> {
        let c = LeslieCoefficients {
            lambda1,
            lambda2,
            mu1: mu[0],
            mu2: mu[1],
            mu3: mu[2],
            mu4: mu[3],
            mu5: mu[4],
            mu6: mu[5],
            epsilon,
        };
        c.check_finite()?;
        if !(epsilon > 0.0) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(c)
    }

    /// The one-parameter family describing ellipsoidal molecules: `alpha = 1`
    /// is rod-like, `alpha = 0` disc-like and `alpha = 1/2` spherical.
    pub fn from_alpha(alpha: f64, nu: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Parameter(format!("nu must be positive, got {nu}")));
        }
        let s = 2.0 * alpha - 1.0;
        Self::new(
            -1.0,
            s,
            [0.0, -alpha, 1.0 - alpha, nu, alpha * s, (alpha - 1.0) * s],
            epsilon,
        )
    }

    /// Multiplies every viscous and kinematic coefficient by `t`, leaving
    /// `epsilon` untouched.
    pub fn scaled(&self, t: f64) -> Self {
        LeslieCoefficients {
            lambda1: t * self.lambda1,
            lambda2: t * self.lambda2,
            mu1: t * self.mu1,
            mu2: t * self.mu2,
            mu3: t * self.mu3,
            mu4: t * self.mu4,
            mu5: t * self.mu5,
            mu6: t * self.mu6,
            epsilon: self.epsilon,
        }
    }

    pub fn mu56(&self) -> f64 {
        self.mu5 + self.mu6
    }

    fn check_finite(&self) -> Result<()> {
        let all = [
            self.lambda1, self.lambda2, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5, self.mu6,
            self.epsilon,
        ];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("coefficients"))
        }
    }
}

/// Outcome of a single constraint evaluation. `residual` is the amount by
/// which the constraint is violated (zero when satisfied, up to tolerance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub satisfied: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    /// Base constraints in the order `lambda1<0`, `mu1>=0`, `mu4>0`,
    /// `mu5+mu6>=0`, `lambda1=mu2-mu3`, `lambda2=mu5-mu6`.
    pub base: Vec<ConstraintCheck>,
    pub parodi_holds: bool,
    pub parodi_residual: f64,
    pub case1: bool,
    /// `mu5 + mu6 - lambda2^2 / (-lambda1)`; nonnegative when the Case 1
    /// inequality holds. NaN when `lambda1 >= 0`.
    pub case1_margin: f64,
    pub case2: bool,
    /// `2 sqrt(-lambda1) sqrt(mu5 + mu6) - |lambda2 - mu2 - mu3|`; positive
    /// when the Case 2 inequality holds. NaN when `lambda1 >= 0`.
    pub case2_margin: f64,
    /// Every failed base constraint, plus Parodi's relation when it fails.
    pub violations: Vec<ConstraintCheck>,
}

impl RegimeReport {
    pub fn satisfies_base_constraints(&self) -> bool {
        self.base.iter().all(|c| c.satisfied)
    }

    /// True when the set belongs to at least one dissipative regime.
    pub fn is_admissible(&self) -> bool {
        self.case1 || self.case2
    }

    pub fn regime_label(&self) -> &'static str {
        match (self.case1, self.case2) {
            (true, true) => "case1+case2",
            (true, false) => "case1",
            (false, true) => "case2",
            (false, false) => "none",
        }
    }
}

fn check(name: &'static str, residual: f64) -> ConstraintCheck {
    ConstraintCheck { name, satisfied: residual <= 0.0, residual: residual.max(0.0) }
}

/// Evaluates every constraint. Equalities and non-strict inequalities are
/// relaxed by the absolute tolerance `tol`; `lambda1 < 0` and `mu4 > 0` are
/// checked strictly. Nothing is thrown: failures are listed in the report.
pub fn validate(c: &LeslieCoefficients, tol: f64) -> RegimeReport {
    let slack = |r: f64| if r.abs() <= tol { 0.0 } else { r.abs() };
    let base = vec![
        ConstraintCheck {
            name: "lambda1<0",
            satisfied: c.lambda1 < 0.0,
            residual: c.lambda1.max(0.0),
        },
        check("mu1>=0", -c.mu1 - tol),
        ConstraintCheck { name: "mu4>0", satisfied: c.mu4 > 0.0, residual: (-c.mu4).max(0.0) },
        check("mu5+mu6>=0", -c.mu56() - tol),
        check("lambda1=mu2-mu3", slack(c.lambda1 - (c.mu2 - c.mu3))),
        check("lambda2=mu5-mu6", slack(c.lambda2 - (c.mu5 - c.mu6))),
    ];
    let base_ok = base.iter().all(|b| b.satisfied);

    let parodi_gap = (c.mu2 + c.mu3) - (c.mu6 - c.mu5);
    let parodi_holds = parodi_gap.abs() <= tol;

    let (case1_margin, case2_margin) = if c.lambda1 < 0.0 {
        let m1 = c.mu56() - c.lambda2 * c.lambda2 / (-c.lambda1);
        let m2 = 2.0 * (-c.lambda1).sqrt() * c.mu56().max(0.0).sqrt()
            - (c.lambda2 - c.mu2 - c.mu3).abs();
        (m1, m2)
    } else {
        (f64::NAN, f64::NAN)
    };
    let case1 = base_ok && parodi_holds && case1_margin + tol >= 0.0;
    let case2 = base_ok && case2_margin > tol;

    let mut violations: Vec<ConstraintCheck> =
        base.iter().filter(|b| !b.satisfied).cloned().collect();
    if !parodi_holds {
        violations.push(ConstraintCheck {
            name: "mu2+mu3=mu6-mu5",
            satisfied: false,
            residual: parodi_gap.abs(),
        });
    }

    RegimeReport {
        base,
        parodi_holds,
        parodi_residual: parodi_gap.abs(),
        case1,
        case1_margin,
        case2,
        case2_margin,
        violations,
    }
}

/// Coefficients of `D(n, a) = a_nn n^2 + a_na n a + a_aa a^2`, the part of the
/// dissipation that couples `|N|` and `|Ad|`. The `mu1 |d^T A d|^2` channel is
/// not part of it; it is separately nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationForm {
    pub a_nn: f64,
    pub a_na: f64,
    pub a_aa: f64,
    pub psd: bool,
}

impl DissipationForm {
    /// Semidefiniteness test `a_na^2 <= 4 a_nn (a_aa + tol)`. Written this way
    /// it coincides with the Case 1 inequality under Parodi's relation.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.a_nn >= 0.0
            && self.a_aa >= -tol
            && self.a_na * self.a_na <= 4.0 * self.a_nn * (self.a_aa + tol)
    }

    /// Pointwise value of the form.
    pub fn eval(&self, n: f64, a: f64) -> f64 {
        self.a_nn * n * n + self.a_na * n * a + self.a_aa * a * a
    }

    /// Smaller eigenvalue of `[[a_nn, a_na/2], [a_na/2, a_aa]]`.
    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.a_nn + self.a_aa);
        let half_diff = 0.5 * (self.a_nn - self.a_aa);
        let off = 0.5 * self.a_na;
        mean - half_diff.hypot(off)
    }
}

pub fn dissipation_form(c: &LeslieCoefficients) -> DissipationForm {
    let mut f = DissipationForm {
        a_nn: -c.lambda1,
        a_na: -(c.lambda2 - c.mu2 - c.mu3),
        a_aa: c.mu56(),
        psd: false,
    };
    f.psd = f.is_psd(DEFAULT_TOL);
    f
}

/// Largest `eta` with `D(n, a) >= eta (n^2 + a^2)`, i.e. the smaller
/// eigenvalue of the form, clamped at zero in the singular case.
pub fn eta_margin(c: &LeslieCoefficients) -> Result<f64> {
    let form = dissipation_form(c);
    if !form.psd {
        return Err(Error::Regime(format!(
            "dissipation form is indefinite: a_na^2 = {} > 4 a_nn a_aa = {}",
            form.a_na * form.a_na,
            4.0 * form.a_nn * form.a_aa
        )));
    }
    Ok(form.min_eigenvalue().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn explicit(l1: f64, l2: f64, mu: [f64; 6]) -> LeslieCoefficients {
        LeslieCoefficients::new(l1, l2, mu, 0.1).unwrap()
    }

    #[test]
    fn rod_like_preset_is_case1_at_equality() {
        let c = LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap();
        assert_eq!(
            (c.lambda1, c.lambda2, c.mu1, c.mu2, c.mu3, c.mu4, c.mu5, c.mu6),
            (-1.0, 1.0, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0)
        );
        let r = validate(&c, DEFAULT_TOL);
        assert!(r.parodi_holds);
        assert!(r.case1);
        assert_eq!(r.case1_margin, 0.0);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn spherical_preset_is_case1_not_case2() {
        let c = LeslieCoefficients::from_alpha(0.5, 1.0, 0.1).unwrap();
        assert_eq!((c.lambda2, c.mu2, c.mu3, c.mu5, c.mu6), (0.0, -0.5, 0.5, 0.0, 0.0));
        let r = validate(&c, DEFAULT_TOL);
        assert!(r.case1);
        assert!(!r.case2, "both sides of the strict inequality vanish");
    }

    #[test]
    fn disc_like_preset_values() {
        let c = LeslieCoefficients::from_alpha(0.0, 2.0, 0.1).unwrap();
        assert_eq!((c.lambda2, c.mu2, c.mu3, c.mu4, c.mu5, c.mu6), (-1.0, 0.0, 1.0, 2.0, 0.0, 1.0));
    }

    #[test]
    fn positive_lambda1_is_reported() {
        let c = explicit(1.0, 1.0, [0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        let r = validate(&c, DEFAULT_TOL);
        assert!(r.violations.iter().any(|v| v.name == "lambda1<0"));
        assert!(!r.case1 && !r.case2);
    }

    #[test]
    fn parodi_free_set_is_case2_only() {
        let c = explicit(-1.0, 0.2, [0.0, -0.4, 0.6, 1.0, 0.7, 0.5]);
        let r = validate(&c, DEFAULT_TOL);
        assert!(r.satisfies_base_constraints());
        assert!(!r.parodi_holds);
        assert!(!r.case1);
        assert!(r.case2);
        assert_eq!(r.regime_label(), "case2");
    }

    #[test]
    fn from_alpha_rejects_bad_parameters() {
        assert!(matches!(LeslieCoefficients::from_alpha(1.5, 1.0, 0.1), Err(Error::Parameter(_))));
        assert!(matches!(LeslieCoefficients::from_alpha(-0.1, 1.0, 0.1), Err(Error::Parameter(_))));
        assert!(matches!(LeslieCoefficients::from_alpha(0.5, 0.0, 0.1), Err(Error::Parameter(_))));
        assert!(matches!(LeslieCoefficients::from_alpha(0.5, 1.0, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn alpha_grid_is_case1() {
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            let c = LeslieCoefficients::from_alpha(alpha, 1.0, 0.1).unwrap();
            assert!(validate(&c, DEFAULT_TOL).case1, "alpha = {alpha}");
        }
    }

    #[test]
    fn dissipation_form_examples() {
        let rod = dissipation_form(&LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap());
        assert_eq!((rod.a_nn, rod.a_na, rod.a_aa, rod.psd), (1.0, -2.0, 1.0, true));

        let f = dissipation_form(&explicit(-1.0, 0.0, [0.0, -0.5, 0.5, 1.0, 0.0, 0.0]));
        assert_eq!((f.a_nn, f.a_na, f.a_aa, f.psd), (1.0, 0.0, 0.0, true));

        // mu2 + mu3 = 0, lambda2 = 3, mu5 + mu6 = 1: a_na^2 = 9 > 4.
        let bad = dissipation_form(&explicit(-1.0, 3.0, [0.0, -0.5, 0.5, 1.0, 2.0, -1.0]));
        assert_eq!(bad.a_na, -3.0);
        assert!(!bad.psd);
    }

    #[test]
    fn eta_margin_examples() {
        // identity form: lambda1 = -1, cross term 0, mu5 + mu6 = 1
        let id = explicit(-1.0, 0.0, [0.0, -0.5, 0.5, 1.0, 0.5, 0.5]);
        assert!((eta_margin(&id).unwrap() - 1.0).abs() < 1e-15);

        let rod = LeslieCoefficients::from_alpha(1.0, 1.0, 0.1).unwrap();
        assert!(eta_margin(&rod).unwrap().abs() < 1e-15);

        let diag = explicit(-2.0, 0.0, [0.0, -1.0, 1.0, 1.0, 0.5, 0.5]);
        assert!((eta_margin(&diag).unwrap() - 1.0).abs() < 1e-15);

        let bad = explicit(-1.0, 3.0, [0.0, -0.5, 0.5, 1.0, 2.0, -1.0]);
        assert!(matches!(eta_margin(&bad), Err(Error::Regime(_))));
    }

    #[test]
    fn degenerate_mu56_is_not_case2() {
        // mu5 + mu6 = 0 forces the cross coefficient to vanish, which the
        // strict inequality cannot accept.
        let c = explicit(-1.0, 0.0, [0.0, -0.5, 0.5, 1.0, 0.0, 0.0]);
        let r = validate(&c, DEFAULT_TOL);
        assert!(r.satisfies_base_constraints());
        assert!(!r.case2);
    }

    /// Coefficient sets satisfying the base constraints and Parodi's relation.
    fn parodi_set() -> impl Strategy<Value = LeslieCoefficients> {
        (0.05..5.0f64, -3.0..3.0f64, 0.0..2.0f64, 0.05..3.0f64, 0.0..4.0f64)
            .prop_map(|(neg_l1, l2, mu1, mu4, mu56)| {
                let l1 = -neg_l1;
                // lambda2 = mu5 - mu6 and mu5 + mu6 = mu56
                let mu5 = 0.5 * (mu56 + l2);
                let mu6 = 0.5 * (mu56 - l2);
                // lambda1 = mu2 - mu3 and Parodi mu2 + mu3 = mu6 - mu5 = -lambda2
                let mu2 = 0.5 * (l1 - l2);
                let mu3 = 0.5 * (-l2 - l1);
                LeslieCoefficients {
                    lambda1: l1,
                    lambda2: l2,
                    mu1,
                    mu2,
                    mu3,
                    mu4,
                    mu5,
                    mu6,
                    epsilon: 0.1,
                }
            })
    }

    proptest! {
        #[test]
        fn psd_iff_case1_under_parodi(c in parodi_set()) {
            let r = validate(&c, DEFAULT_TOL);
            prop_assume!(r.satisfies_base_constraints() && r.parodi_holds);
            prop_assume!(r.case1_margin.abs() > 1e-9);
            prop_assert_eq!(dissipation_form(&c).psd, r.case1);
        }

        #[test]
        fn case2_has_positive_eta(
            neg_l1 in 0.05..5.0f64, mu56 in 0.01..4.0f64, frac in -0.999..0.999f64,
            l2 in -2.0..2.0f64, mu4 in 0.1..2.0f64,
        ) {
            let l1 = -neg_l1;
            let bound = 2.0 * neg_l1.sqrt() * mu56.sqrt();
            let cross = frac * bound; // lambda2 - mu2 - mu3
            let s = l2 - cross;       // mu2 + mu3
            let mu2 = 0.5 * (s + l1);
            let mu3 = 0.5 * (s - l1);
            let c = LeslieCoefficients {
                lambda1: l1, lambda2: l2, mu1: 0.0, mu2, mu3, mu4,
                mu5: 0.5 * (mu56 + l2), mu6: 0.5 * (mu56 - l2), epsilon: 0.1,
            };
            let r = validate(&c, DEFAULT_TOL);
            prop_assume!(r.case2_margin > 1e-9);
            prop_assert!(r.case2);
            let eta = eta_margin(&c).unwrap();
            prop_assert!(eta > 0.0);
            // the converse direction
            let f = dissipation_form(&c);
            prop_assert!(f.a_na.abs() < 2.0 * f.a_nn.sqrt() * f.a_aa.sqrt());
        }

        #[test]
        fn from_alpha_always_case1(alpha in 0.0..=1.0f64, nu in 1e-3..10.0f64) {
            let c = LeslieCoefficients::from_alpha(alpha, nu, 0.1).unwrap();
            prop_assert!(validate(&c, DEFAULT_TOL).case1);
        }

        #[test]
        fn validate_is_scale_invariant(
            l1 in -3.0..3.0f64, l2 in -3.0..3.0f64,
            mu in proptest::array::uniform6(-3.0..3.0f64),
            t in 0.1..10.0f64,
            exact_relations in any::<bool>(),
        ) {
            let mut c = LeslieCoefficients {
                lambda1: l1, lambda2: l2, mu1: mu[0], mu2: mu[1], mu3: mu[2], mu4: mu[3],
                mu5: mu[4], mu6: mu[5], epsilon: 0.1,
            };
            if exact_relations {
                c.lambda1 = c.mu2 - c.mu3;
                c.lambda2 = c.mu5 - c.mu6;
            }
            let a = validate(&c, DEFAULT_TOL);
            let b = validate(&c.scaled(t), DEFAULT_TOL);
            prop_assume!(a.case1_margin.is_nan() || a.case1_margin.abs() > 1e-9);
            prop_assume!(a.case2_margin.is_nan() || a.case2_margin.abs() > 1e-9);
            prop_assume!(a.parodi_residual == 0.0 || a.parodi_residual > 1e-9);
            let flags = |r: &RegimeReport| {
                (r.base.iter().map(|b| b.satisfied).collect::<Vec<_>>(), r.parodi_holds, r.case1, r.case2)
            };
            prop_assert_eq!(flags(&a), flags(&b));
        }
    }
}
