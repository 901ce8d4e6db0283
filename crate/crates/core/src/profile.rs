//! Mass profiles, the auxiliary coordinate, ordering parameters, and
//! superpotential families.
//!
//! The mass enters everything through `U(x) = m(x)^{-1/2}` and through the
//! auxiliary coordinate `mu(x) = ∫ dx / U`, which rectifies the
//! position-dependent kinetic term. Profiles with closed-form `U` carry
//! analytic first and second derivatives; tabulated profiles fall back to
//! fourth-order finite differences.

use crate::error::{CoreError, Result};
use crate::grid::{cumulative_simpson, d1_fourth_order, d2_fourth_order, Grid, GridFunction};

/// Built-in and user-supplied mass profiles `m(x) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum MassProfile {
    /// Unit constant mass.
    Constant,
    /// `m(x) = ((a0 + x^2) / (1 + x^2))^2`; requires `a0 > 0`.
    Rational { a0: f64 },
    /// `m(x) = (1 + x^2)^{-2}`, i.e. `U = 1 + x^2`.
    InverseQuadratic,
    /// Node samples of `m`; derivatives of `U` by finite differences.
    Tabulated { m: Vec<f64> },
}

impl MassProfile {
    /// Stable identifier used in reports and output files.
    pub fn label(&self) -> &'static str {
        match self {
            MassProfile::Constant => "constant",
            MassProfile::Rational { .. } => "rational",
            MassProfile::InverseQuadratic => "inverse-quadratic",
            MassProfile::Tabulated { .. } => "tabulated",
        }
    }

    /// Whether `U` derivatives come from closed forms.
    pub fn analytic_derivatives(&self) -> bool {
        !matches!(self, MassProfile::Tabulated { .. })
    }
}

/// Node samples of the mass, `U`, its derivatives, and the auxiliary
/// coordinate, all on one grid.
#[derive(Debug, Clone)]
pub struct EvaluatedProfile {
    pub grid: Grid,
    /// Mass samples `m(x_i)`.
    pub m: Vec<f64>,
    /// `U = m^{-1/2}`.
    pub u: Vec<f64>,
    /// `U'`.
    pub up: Vec<f64>,
    /// `U''`.
    pub upp: Vec<f64>,
    /// Auxiliary coordinate anchored at the left wall: `mu(x_min) = 0`.
    pub mu: Vec<f64>,
    /// `mu` shifted to vanish at the center node; constant shifts of `mu`
    /// are a gauge choice, and the centered gauge keeps catalog
    /// superpotentials well balanced over the box.
    pub mu_centered: Vec<f64>,
    /// True when derivatives are closed-form.
    pub analytic: bool,
}

/// Evaluates a mass profile on a grid: `m`, `U`, `U'`, `U''` plus the
/// auxiliary coordinate in both gauges.
pub fn eval_profile(p: &MassProfile, grid: Grid) -> Result<EvaluatedProfile> {
    let xs = grid.nodes();
    let n = grid.n();
    let (m, u, up, upp, analytic) = match p {
        MassProfile::Constant => (
            vec![1.0; n],
            vec![1.0; n],
            vec![0.0; n],
            vec![0.0; n],
            true,
        ),
        MassProfile::Rational { a0 } => {
            if !(*a0 > 0.0) {
                return Err(CoreError::RejectedProfile {
                    reason: format!(
                        "rational profile needs a0 > 0 (got {a0}): a zero of m \
                         makes U singular, which is the rejected singular case"
                    ),
                });
            }
            let mut m = Vec::with_capacity(n);
            let mut u = Vec::with_capacity(n);
            let mut up = Vec::with_capacity(n);
            let mut upp = Vec::with_capacity(n);
            for &x in &xs {
                let s = a0 + x * x;
                let t = 1.0 + x * x;
                m.push((s / t) * (s / t));
                u.push(t / s);
                up.push(2.0 * x * (a0 - 1.0) / (s * s));
                upp.push(2.0 * (a0 - 1.0) * (s - 4.0 * x * x) / (s * s * s));
            }
            (m, u, up, upp, true)
        }
        MassProfile::InverseQuadratic => {
            let mut m = Vec::with_capacity(n);
            let mut u = Vec::with_capacity(n);
            for &x in &xs {
                let t = 1.0 + x * x;
                m.push(1.0 / (t * t));
                u.push(t);
            }
            let up = xs.iter().map(|&x| 2.0 * x).collect();
            (m, u, up, vec![2.0; n], true)
        }
        MassProfile::Tabulated { m } => {
            if m.len() != n {
                return Err(CoreError::TabulatedLength { len: m.len(), n });
            }
            for (i, &mi) in m.iter().enumerate() {
                if !(mi > 0.0) || !mi.is_finite() {
                    return Err(CoreError::NonpositiveMass {
                        index: i,
                        x: grid.x(i),
                        m: mi,
                    });
                }
            }
            let u: Vec<f64> = m.iter().map(|&mi| 1.0 / mi.sqrt()).collect();
            let up = d1_fourth_order(&u, grid.h());
            let upp = d2_fourth_order(&u, grid.h());
            (m.clone(), u, up, upp, false)
        }
    };

    // mu' = 1/U; anchor mu(x_min) = 0.
    let inv_u: Vec<f64> = u.iter().map(|&ui| 1.0 / ui).collect();
    let mu = cumulative_simpson(&inv_u, grid.h());
    let mu_center = mu[grid.center_index()];
    let mu_centered = mu.iter().map(|v| v - mu_center).collect();

    Ok(EvaluatedProfile {
        grid,
        m,
        u,
        up,
        upp,
        mu,
        mu_centered,
        analytic,
    })
}

/// The auxiliary coordinate `mu(x) = ∫_{x_min}^x dη / U(η)` as a grid
/// function, anchored so that `mu(x_min) = 0`.
pub fn auxiliary_mu(p: &MassProfile, grid: Grid) -> Result<GridFunction> {
    let prof = eval_profile(p, grid)?;
    GridFunction::from_real(grid, &prof.mu)
}

/// Outcome of profile admissibility screening.
#[derive(Debug, Clone)]
pub struct ProfileClassification {
    /// False exactly when `m` has a zero (singular `U`), the rejected case.
    pub accepted: bool,
    /// True when `U` dips to (numerical) zero somewhere — the accepted
    /// singular-mass case.
    pub u_has_zeros: bool,
    /// Lower edge of the admissible ordering-parameter interval (always 0).
    pub alpha_min: f64,
    /// Upper edge `1 / n_index` of the admissible interval.
    pub alpha_max: f64,
    /// Human-readable rationale.
    pub detail: String,
}

/// Screens a profile: rejects masses with zeros (singular `U`), accepts
/// masses with singularities (`U` with zeros), and reports the admissible
/// ordering interval `0 <= alpha <= 1/n_index`.
pub fn classify_profile(
    p: &MassProfile,
    grid: Grid,
    n_index: usize,
) -> ProfileClassification {
    assert!(n_index >= 1, "ordering index must be at least 1");
    let alpha_max = 1.0 / n_index as f64;
    match eval_profile(p, grid) {
        Err(err) => ProfileClassification {
            accepted: false,
            u_has_zeros: false,
            alpha_min: 0.0,
            alpha_max,
            detail: format!("rejected: {err}"),
        },
        Ok(prof) => {
            let u_max = prof.u.iter().cloned().fold(0.0f64, f64::max);
            let u_min = prof.u.iter().cloned().fold(f64::INFINITY, f64::min);
            let u_has_zeros = u_min < 1e-6 * u_max;
            ProfileClassification {
                accepted: true,
                u_has_zeros,
                alpha_min: 0.0,
                alpha_max,
                detail: if u_has_zeros {
                    "accepted: U reaches zero (singular mass), admissible case".into()
                } else {
                    "accepted: U strictly positive on the box".into()
                },
            }
        }
    }
}

/// Membership report for the discrete admissible ordering set
/// `{0} ∪ {1/k : k = 1..n_max}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSetMembership {
    pub member: bool,
    pub nearest: f64,
}

/// Tests `alpha` against the discrete set `{1, 1/2, …, 1/n_max} ∪ {0}` and
/// returns the nearest member (ties resolved toward the larger value).
pub fn alpha_set_membership(alpha: f64, n_max: usize) -> AlphaSetMembership {
    assert!(n_max >= 1, "set size must be at least 1");
    let mut candidates: Vec<f64> = (1..=n_max).map(|k| 1.0 / k as f64).collect();
    candidates.push(0.0);
    // Descending order, so a strict `<` comparison keeps the larger member
    // on exact distance ties.
    let mut nearest = candidates[0];
    let mut best = (alpha - nearest).abs();
    for &c in &candidates[1..] {
        let d = (alpha - c).abs();
        if d < best {
            best = d;
            nearest = c;
        }
    }
    AlphaSetMembership {
        member: best <= 1e-12,
        nearest,
    }
}

/// Kinetic-ordering parameters: the single label `alpha` in `[0,1]` and the
/// derived exponent pair `(a, b)` with `2a + 2b = -1` held exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingParams {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl OrderingParams {
    /// Builds the exponent pair `a = -alpha/2`, `b = (alpha - 1)/2` from the
    /// ordering label; `b` is computed as `-1/2 - a` so the constraint
    /// `2a + 2b = -1` holds bit-exactly.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(CoreError::AlphaOutOfRange { alpha });
        }
        let a = -0.5 * alpha;
        let b = -0.5 - a;
        Ok(Self { alpha, a, b })
    }
}

/// How a superpotential family depends on the ordering label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Same function for every `alpha`.
    AlphaIndependent,
    /// Closed form with explicit `alpha` dependence.
    ClosedFormInAlpha,
    /// The special family `(alpha - 1/2) U'` that freezes the uncertainty
    /// product and makes the effective potential ordering-independent.
    Saturating,
}

/// Catalog of superpotential families `W_alpha(x)`.
///
/// The `mu`-based members use the centered gauge of the auxiliary
/// coordinate; a constant shift of `mu` only re-labels the family member and
/// every physical check is invariant under it.
#[derive(Debug, Clone, PartialEq)]
pub enum SuperpotentialFamily {
    /// `W = omega * x`, independent of `alpha` and of the profile.
    LinearX { omega: f64 },
    /// `W = omega * mu_centered(x)`: harmonic in the auxiliary coordinate.
    LinearMu { omega: f64 },
    /// `W_alpha = mu_centered - ((1 - 2 alpha)/2) U'`: tuned so the deformed
    /// commutator function is identically 1 (canonical algebra).
    Canonical,
    /// `W_alpha = (alpha - 1/2) U'`: zero commutator function, frozen
    /// uncertainty product, ordering-independent effective potential.
    Saturating,
    /// User-supplied node samples, with an optional exact derivative.
    Tabulated {
        values: Vec<f64>,
        derivative: Option<Vec<f64>>,
    },
}

impl SuperpotentialFamily {
    pub fn kind(&self) -> FamilyKind {
        match self {
            SuperpotentialFamily::LinearX { .. }
            | SuperpotentialFamily::LinearMu { .. }
            | SuperpotentialFamily::Tabulated { .. } => FamilyKind::AlphaIndependent,
            SuperpotentialFamily::Canonical => FamilyKind::ClosedFormInAlpha,
            SuperpotentialFamily::Saturating => FamilyKind::Saturating,
        }
    }

    /// Stable identifier used in reports and output files.
    pub fn label(&self) -> &'static str {
        match self {
            SuperpotentialFamily::LinearX { .. } => "linear-x",
            SuperpotentialFamily::LinearMu { .. } => "linear-mu",
            SuperpotentialFamily::Canonical => "canonical",
            SuperpotentialFamily::Saturating => "saturating",
            SuperpotentialFamily::Tabulated { .. } => "tabulated",
        }
    }

    /// Node samples of `W_alpha` and `W_alpha'` for a given ordering label.
    pub fn eval(&self, alpha: f64, prof: &EvaluatedProfile) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(CoreError::AlphaOutOfRange { alpha });
        }
        let n = prof.grid.n();
        match self {
            SuperpotentialFamily::LinearX { omega } => {
                let w = prof.grid.nodes().iter().map(|x| omega * x).collect();
                let wp = vec![*omega; n];
                Ok((w, wp))
            }
            SuperpotentialFamily::LinearMu { omega } => {
                let w = prof.mu_centered.iter().map(|v| omega * v).collect();
                let wp = prof.u.iter().map(|ui| omega / ui).collect();
                Ok((w, wp))
            }
            SuperpotentialFamily::Canonical => {
                let s = 0.5 * (1.0 - 2.0 * alpha);
                let w = prof
                    .mu_centered
                    .iter()
                    .zip(&prof.up)
                    .map(|(mc, up)| mc - s * up)
                    .collect();
                let wp = prof
                    .u
                    .iter()
                    .zip(&prof.upp)
                    .map(|(ui, upp)| 1.0 / ui - s * upp)
                    .collect();
                Ok((w, wp))
            }
            SuperpotentialFamily::Saturating => {
                let s = alpha - 0.5;
                let w = prof.up.iter().map(|up| s * up).collect();
                let wp = prof.upp.iter().map(|upp| s * upp).collect();
                Ok((w, wp))
            }
            SuperpotentialFamily::Tabulated { values, derivative } => {
                if values.len() != n {
                    return Err(CoreError::TabulatedLength {
                        len: values.len(),
                        n,
                    });
                }
                let wp = match derivative {
                    Some(d) => {
                        if d.len() != n {
                            return Err(CoreError::TabulatedLength { len: d.len(), n });
                        }
                        d.clone()
                    }
                    None => d1_fourth_order(values, prof.grid.h()),
                };
                Ok((values.clone(), wp))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::differentiate;
    use approx::assert_abs_diff_eq;

    fn grid(a: f64, b: f64, n: usize) -> Grid {
        Grid::new(a, b, n).unwrap()
    }

    #[test]
    fn constant_profile_is_trivial() {
        let g = grid(-3.0, 3.0, 101);
        let p = eval_profile(&MassProfile::Constant, g).unwrap();
        assert!(p.u.iter().all(|&u| u == 1.0));
        assert!(p.up.iter().all(|&v| v == 0.0));
        assert!(p.upp.iter().all(|&v| v == 0.0));
        // mu = x - x_min for unit mass.
        for i in 0..g.n() {
            assert_abs_diff_eq!(p.mu[i], g.x(i) + 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_quadratic_derivatives_are_exact() {
        let g = grid(-2.0, 2.0, 81);
        let p = eval_profile(&MassProfile::InverseQuadratic, g).unwrap();
        for i in 0..g.n() {
            let x = g.x(i);
            assert_abs_diff_eq!(p.u[i], 1.0 + x * x, epsilon = 1e-14);
            assert_abs_diff_eq!(p.up[i], 2.0 * x, epsilon = 1e-14);
            assert_abs_diff_eq!(p.upp[i], 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rational_derivatives_match_finite_differences() {
        let g = grid(-4.0, 4.0, 3201);
        let p = eval_profile(&MassProfile::Rational { a0: 0.5 }, g).unwrap();
        let uf = GridFunction::from_real(g, &p.u).unwrap();
        let d1 = differentiate(&uf, 1).unwrap();
        let d2 = differentiate(&uf, 2).unwrap();
        for i in 5..g.n() - 5 {
            assert_abs_diff_eq!(p.up[i], d1.values()[i].re, epsilon = 1e-7);
            assert_abs_diff_eq!(p.upp[i], d2.values()[i].re, epsilon = 1e-5);
        }
    }

    #[test]
    fn rational_requires_positive_parameter() {
        let g = grid(-1.0, 1.0, 21);
        let err = eval_profile(&MassProfile::Rational { a0: -0.25 }, g).unwrap_err();
        assert!(matches!(err, CoreError::RejectedProfile { .. }));
    }

    #[test]
    fn tabulated_zero_mass_is_rejected_with_location() {
        let g = grid(0.0, 1.0, 11);
        let mut m = vec![1.0; 11];
        m[4] = 0.0;
        let err = eval_profile(&MassProfile::Tabulated { m }, g).unwrap_err();
        match err {
            CoreError::NonpositiveMass { index, .. } => assert_eq!(index, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn auxiliary_mu_matches_arctan() {
        let g = grid(0.0, 1.0, 401);
        let mu = auxiliary_mu(&MassProfile::InverseQuadratic, g).unwrap();
        assert_abs_diff_eq!(
            mu.values()[g.n() - 1].re,
            std::f64::consts::FRAC_PI_4,
            epsilon = 1e-8
        );
        // Strictly increasing.
        for i in 1..g.n() {
            assert!(mu.values()[i].re > mu.values()[i - 1].re);
        }
    }

    #[test]
    fn mu_derivative_times_u_is_one() {
        let g = grid(-3.0, 3.0, 601);
        let prof = eval_profile(&MassProfile::Rational { a0: 0.5 }, g).unwrap();
        let mu = GridFunction::from_real(g, &prof.mu).unwrap();
        let dmu = differentiate(&mu, 1).unwrap();
        for i in 0..g.n() {
            assert_abs_diff_eq!(dmu.values()[i].re * prof.u[i], 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn classification_accepts_catalog_and_reports_interval() {
        let g = grid(-2.0, 2.0, 51);
        let c = classify_profile(&MassProfile::Constant, g, 1);
        assert!(c.accepted && !c.u_has_zeros);
        assert_abs_diff_eq!(c.alpha_max, 1.0, epsilon = 0.0);
        let c4 = classify_profile(&MassProfile::InverseQuadratic, g, 4);
        assert!(c4.accepted);
        assert_abs_diff_eq!(c4.alpha_max, 0.25, epsilon = 0.0);
    }

    #[test]
    fn classification_rejects_mass_zeros() {
        let g = grid(0.0, 1.0, 11);
        let mut m = vec![1.0; 11];
        m[5] = 0.0;
        let c = classify_profile(&MassProfile::Tabulated { m }, g, 1);
        assert!(!c.accepted);
        assert!(c.detail.contains("rejected"));
    }

    #[test]
    fn alpha_set_examples() {
        assert!(alpha_set_membership(0.5, 10).member);
        assert!(alpha_set_membership(0.0, 3).member);
        let r = alpha_set_membership(0.4, 10);
        assert!(!r.member);
        assert_abs_diff_eq!(r.nearest, 1.0 / 3.0, epsilon = 1e-15);
        // Exact tie between 1 and 1/2 resolves to the larger member.
        let tie = alpha_set_membership(0.75, 10);
        assert_abs_diff_eq!(tie.nearest, 1.0, epsilon = 0.0);
    }

    #[test]
    fn ordering_constraint_is_exact() {
        for alpha in [0.0, 0.1, 0.3, 0.5, 0.7, 1.0] {
            let o = OrderingParams::from_alpha(alpha).unwrap();
            assert_eq!(2.0 * o.a + 2.0 * o.b, -1.0);
            assert_abs_diff_eq!(o.a, -alpha / 2.0, epsilon = 0.0);
        }
        assert!(OrderingParams::from_alpha(1.5).is_err());
        assert!(OrderingParams::from_alpha(-0.1).is_err());
    }

    #[test]
    fn family_derivatives_agree_with_finite_differences() {
        let g = grid(-4.0, 4.0, 3201);
        let prof = eval_profile(&MassProfile::Rational { a0: 0.5 }, g).unwrap();
        let families = [
            SuperpotentialFamily::LinearX { omega: 1.0 },
            SuperpotentialFamily::LinearMu { omega: 1.0 },
            SuperpotentialFamily::Canonical,
            SuperpotentialFamily::Saturating,
        ];
        for fam in families {
            let (w, wp) = fam.eval(0.3, &prof).unwrap();
            let wf = GridFunction::from_real(g, &w).unwrap();
            let dw = differentiate(&wf, 1).unwrap();
            for i in 10..g.n() - 10 {
                assert_abs_diff_eq!(wp[i], dw.values()[i].re, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn canonical_family_yields_unit_commutator_function() {
        let g = grid(-5.0, 5.0, 501);
        let prof = eval_profile(&MassProfile::InverseQuadratic, g).unwrap();
        for alpha in [0.0, 0.3, 0.5, 1.0] {
            let (_, wp) = SuperpotentialFamily::Canonical.eval(alpha, &prof).unwrap();
            for i in 0..g.n() {
                let c = prof.u[i] * wp[i] + 0.5 * (1.0 - 2.0 * alpha) * prof.u[i] * prof.upp[i];
                assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn saturating_family_kills_commutator_function() {
        let g = grid(-5.0, 5.0, 501);
        let prof = eval_profile(&MassProfile::Rational { a0: 0.5 }, g).unwrap();
        for alpha in [0.0, 0.7, 1.0] {
            let (_, wp) = SuperpotentialFamily::Saturating.eval(alpha, &prof).unwrap();
            for i in 0..g.n() {
                let c = prof.u[i] * wp[i] + 0.5 * (1.0 - 2.0 * alpha) * prof.u[i] * prof.upp[i];
                assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tabulated_family_uses_supplied_or_numeric_derivative() {
        let g = grid(-2.0, 2.0, 201);
        let prof = eval_profile(&MassProfile::Constant, g).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let exact: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let fam = SuperpotentialFamily::Tabulated {
            values: vals.clone(),
            derivative: Some(exact.clone()),
        };
        let (_, wp) = fam.eval(0.5, &prof).unwrap();
        assert_eq!(wp, exact);
        let fam_fd = SuperpotentialFamily::Tabulated {
            values: vals,
            derivative: None,
        };
        let (_, wp_fd) = fam_fd.eval(0.5, &prof).unwrap();
        for i in 0..g.n() {
            assert_abs_diff_eq!(wp_fd[i], exact[i], epsilon = 1e-6);
        }
    }
}
