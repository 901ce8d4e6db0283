//! Hamiltonian assembly: factorized, direct flux form, and the classic
//! kinetic-ordering realizations, plus effective potentials and the
//! ground-energy offset.
//!
//! All spectra come from symmetric tridiagonal matrices (flux-form kinetic
//! plus diagonal potential, or the Gram product of a staggered ladder
//! factor). Fourth-order nodal expansions of the kinetic orderings exist
//! alongside the matrices for residual diagnostics.

use num_complex::Complex64;

use crate::eig::solve_eig;
use crate::error::Result;
use crate::grid::{
    differentiate, gaussian_test_set, midpoint_interp, Grid, GridFunction,
};
use crate::ladder::LadderPair;
use crate::linop::{flux_kinetic, LinearDifferentialOperator};
use crate::profile::{eval_profile, EvaluatedProfile, MassProfile, SuperpotentialFamily};

/// Which assembly produced a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyPath {
    /// Gram product of a ladder pair plus the ground offset.
    Factorized,
    /// Flux-form kinetic plus effective potential plus offset.
    Direct,
    /// One of the classic kinetic orderings plus a supplied potential.
    Table1(Table1Variant),
}

/// The three classic kinetic-operator orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table1Variant {
    /// `(1/2) U P^2 U` — the ordering labelled by `alpha = 0`.
    ZK,
    /// `(1/2) P U^2 P` — the ordering labelled by `alpha = 1`.
    BDD,
    /// `(1/2) sqrt(U) P U P sqrt(U)` — the symmetric `alpha = 1/2` ordering.
    BBQT,
}

impl Table1Variant {
    pub fn alpha(&self) -> f64 {
        match self {
            Table1Variant::ZK => 0.0,
            Table1Variant::BDD => 1.0,
            Table1Variant::BBQT => 0.5,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Table1Variant::ZK => "ZK",
            Table1Variant::BDD => "BDD",
            Table1Variant::BBQT => "BBQT",
        }
    }
}

/// A symmetric assembled Hamiltonian with its bookkeeping.
#[derive(Debug, Clone)]
pub struct HamiltonianBundle {
    pub assembly_path: AssemblyPath,
    pub operator: LinearDifferentialOperator,
    pub alpha: f64,
    /// Ground-energy offset added to the matrix (once).
    pub epsilon: f64,
    /// The offset-free effective potential, when the path has one.
    pub veff: Option<GridFunction>,
}

/// The effective potential split into its superpotential part, its
/// ordering part, and their sum. All three are the offset-free
/// combinations: assembly adds the ground offset exactly once.
#[derive(Debug, Clone)]
pub struct EffectivePotential {
    /// `(1/2) W^2 - (1/2) U W' + ((1-2 alpha)/2) U' W` (the potential minus
    /// the ground offset).
    pub v_alpha: GridFunction,
    /// `(alpha (alpha-1)/2) U'^2 + ((alpha-1)/2) U'' U`.
    pub v_u: GridFunction,
    /// Sum of the two parts.
    pub v_eff: GridFunction,
    /// Offset carried for bookkeeping; not folded into the arrays.
    pub epsilon: f64,
}

fn v_alpha_values(w: &[f64], wp: &[f64], prof: &EvaluatedProfile, alpha: f64) -> Vec<f64> {
    let s = 0.5 * (1.0 - 2.0 * alpha);
    w.iter()
        .zip(wp)
        .zip(prof.u.iter().zip(&prof.up))
        .map(|((wi, wpi), (ui, upi))| 0.5 * wi * wi - 0.5 * ui * wpi + s * upi * wi)
        .collect()
}

fn v_u_values(prof: &EvaluatedProfile, alpha: f64) -> Vec<f64> {
    prof.up
        .iter()
        .zip(&prof.upp)
        .zip(&prof.u)
        .map(|((upi, uppi), ui)| {
            0.5 * alpha * (alpha - 1.0) * upi * upi + 0.5 * (alpha - 1.0) * uppi * ui
        })
        .collect()
}

/// Evaluates the effective potential for one ordering label.
pub fn effective_potential(
    p: &MassProfile,
    w_fam: &SuperpotentialFamily,
    alpha: f64,
    epsilon: f64,
    grid: Grid,
) -> Result<EffectivePotential> {
    let prof = eval_profile(p, grid)?;
    let (w, wp) = w_fam.eval(alpha, &prof)?;
    effective_potential_from_arrays(&prof, &w, &wp, alpha, epsilon)
}

/// [`effective_potential`] from already-evaluated superpotential arrays.
pub fn effective_potential_from_arrays(
    prof: &EvaluatedProfile,
    w: &[f64],
    wp: &[f64],
    alpha: f64,
    epsilon: f64,
) -> Result<EffectivePotential> {
    let va = v_alpha_values(w, wp, prof, alpha);
    let vu = v_u_values(prof, alpha);
    let veff: Vec<f64> = va.iter().zip(&vu).map(|(a, b)| a + b).collect();
    Ok(EffectivePotential {
        v_alpha: GridFunction::from_real(prof.grid, &va)?,
        v_u: GridFunction::from_real(prof.grid, &vu)?,
        v_eff: GridFunction::from_real(prof.grid, &veff)?,
        epsilon,
    })
}

/// The mirrored (`alpha -> 1 - alpha`) effective-potential parts, built from
/// their own closed forms: the cross-term sign flips and the ordering part
/// takes the `-(alpha/2) U'' U` structure.
pub fn mirrored_effective_potential(
    p: &MassProfile,
    w_fam: &SuperpotentialFamily,
    alpha: f64,
    epsilon: f64,
    grid: Grid,
) -> Result<EffectivePotential> {
    let prof = eval_profile(p, grid)?;
    let mirror = 1.0 - alpha;
    let (w, wp) = w_fam.eval(mirror, &prof)?;
    let s = 0.5 * (1.0 - 2.0 * alpha);
    let va: Vec<f64> = w
        .iter()
        .zip(&wp)
        .zip(prof.u.iter().zip(&prof.up))
        .map(|((wi, wpi), (ui, upi))| 0.5 * wi * wi - 0.5 * ui * wpi - s * upi * wi)
        .collect();
    let vu: Vec<f64> = prof
        .up
        .iter()
        .zip(&prof.upp)
        .zip(&prof.u)
        .map(|((upi, uppi), ui)| {
            0.5 * alpha * (alpha - 1.0) * upi * upi - 0.5 * alpha * uppi * ui
        })
        .collect();
    let veff: Vec<f64> = va.iter().zip(&vu).map(|(a, b)| a + b).collect();
    Ok(EffectivePotential {
        v_alpha: GridFunction::from_real(grid, &va)?,
        v_u: GridFunction::from_real(grid, &vu)?,
        v_eff: GridFunction::from_real(grid, &veff)?,
        epsilon,
    })
}

/// Assembles the factorized Hamiltonian `raise . lower + epsilon I` as an
/// exactly symmetric tridiagonal matrix (Gram product of the staggered
/// lowering factor).
pub fn assemble_factorized(pair: &LadderPair, epsilon: f64) -> HamiltonianBundle {
    let mut op = pair.lower.gram();
    op.shift_diagonal(epsilon);
    HamiltonianBundle {
        assembly_path: AssemblyPath::Factorized,
        operator: op,
        alpha: pair.alpha,
        epsilon,
        veff: None,
    }
}

/// Assembles the direct Hamiltonian `-1/2 d/dx U^2 d/dx + v_eff + epsilon I`
/// in flux form with midpoint `U^2` values.
pub fn assemble_direct(
    p: &MassProfile,
    v_eff: &GridFunction,
    epsilon: f64,
    grid: Grid,
) -> Result<HamiltonianBundle> {
    grid.ensure_same(v_eff.grid())?;
    let prof = eval_profile(p, grid)?;
    let u_mid = midpoint_interp(&prof.u);
    let u2_mid: Vec<f64> = u_mid.iter().map(|u| u * u).collect();
    let mut op = flux_kinetic(grid, &u2_mid)?;
    let diag: Vec<f64> = v_eff.values().iter().map(|v| v.re + epsilon).collect();
    op.add_diagonal(&diag);
    Ok(HamiltonianBundle {
        assembly_path: AssemblyPath::Direct,
        operator: op,
        alpha: f64::NAN,
        epsilon,
        veff: Some(v_eff.clone()),
    })
}

/// Assembles one of the classic kinetic orderings plus a supplied potential,
/// as a symmetric tridiagonal matrix.
pub fn assemble_table1(
    p: &MassProfile,
    variant: Table1Variant,
    v: &GridFunction,
    grid: Grid,
) -> Result<HamiltonianBundle> {
    grid.ensure_same(v.grid())?;
    let prof = eval_profile(p, grid)?;
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let u_mid = midpoint_interp(&prof.u);

    let mut op = match variant {
        Table1Variant::BDD => {
            let u2_mid: Vec<f64> = u_mid.iter().map(|u| u * u).collect();
            flux_kinetic(grid, &u2_mid)?
        }
        Table1Variant::ZK => {
            // -1/2 U d^2 U: symmetric because the node factor appears on
            // both sides of the plain second difference.
            let mut op = LinearDifferentialOperator::zeros(grid);
            let u = &prof.u;
            for i in 0..n {
                op.set(i, 0, u[i] * u[i] / h2);
                if i + 1 < n {
                    let coupling = -0.5 * u[i] * u[i + 1] / h2;
                    op.set(i, 1, coupling);
                    op.set(i + 1, -1, coupling);
                }
            }
            op.into_symmetric()?
        }
        Table1Variant::BBQT => {
            // -1/2 sqrt(U) dU d sqrt(U): flux form conjugated by sqrt(U).
            let mut op = LinearDifferentialOperator::zeros(grid);
            let su: Vec<f64> = prof.u.iter().map(|u| u.sqrt()).collect();
            for i in 0..n {
                let left = if i > 0 { u_mid[i - 1] } else { 0.0 };
                let right = if i < n - 1 { u_mid[i] } else { 0.0 };
                op.set(i, 0, 0.5 * su[i] * su[i] * (left + right) / h2);
                if i + 1 < n {
                    let coupling = -0.5 * su[i] * u_mid[i] * su[i + 1] / h2;
                    op.set(i, 1, coupling);
                    op.set(i + 1, -1, coupling);
                }
            }
            op.into_symmetric()?
        }
    };

    let diag: Vec<f64> = v.values().iter().map(|c| c.re).collect();
    op.add_diagonal(&diag);
    Ok(HamiltonianBundle {
        assembly_path: AssemblyPath::Table1(variant),
        operator: op,
        alpha: variant.alpha(),
        epsilon: 0.0,
        veff: Some(v.clone()),
    })
}

/// Applies one kinetic-ordering form with fourth-order nodal stencils
/// (diagnostic path, independent of the matrix assemblies).
pub fn apply_table1_d4(
    variant: Table1Variant,
    prof: &EvaluatedProfile,
    f: &GridFunction,
) -> Result<GridFunction> {
    prof.grid.ensure_same(f.grid())?;
    let mul = |g: &GridFunction, coeff: &[f64]| -> Result<GridFunction> {
        let values = g
            .values()
            .iter()
            .zip(coeff)
            .map(|(v, c)| v * *c)
            .collect();
        GridFunction::new(prof.grid, values)
    };
    match variant {
        Table1Variant::ZK => {
            let uf = mul(f, &prof.u)?;
            let d2 = differentiate(&uf, 2)?;
            mul(&d2, &prof.u)?.scale_ok(Complex64::new(-0.5, 0.0))
        }
        Table1Variant::BDD => {
            let df = differentiate(f, 1)?;
            let u2: Vec<f64> = prof.u.iter().map(|u| u * u).collect();
            let inner = mul(&df, &u2)?;
            differentiate(&inner, 1)?.scale_ok(Complex64::new(-0.5, 0.0))
        }
        Table1Variant::BBQT => {
            let su: Vec<f64> = prof.u.iter().map(|u| u.sqrt()).collect();
            let sf = mul(f, &su)?;
            let dsf = differentiate(&sf, 1)?;
            let inner = mul(&dsf, &prof.u)?;
            let outer = differentiate(&inner, 1)?;
            mul(&outer, &su)?.scale_ok(Complex64::new(-0.5, 0.0))
        }
    }
}

impl GridFunction {
    fn scale_ok(&self, factor: Complex64) -> Result<GridFunction> {
        Ok(self.scale(factor))
    }
}

/// Worst normalized residuals of the two kinetic-ordering identities
/// (`alpha = 0` and `alpha = 1/2` forms against the `alpha = 1` form plus
/// their ordering potentials), measured with fourth-order applications on
/// the Gaussian probe set.
pub fn kinetic_ordering_residuals(p: &MassProfile, grid: Grid) -> Result<(f64, f64)> {
    let prof = eval_profile(p, grid)?;
    let vu0 = v_u_values(&prof, 0.0);
    let vu_half = v_u_values(&prof, 0.5);
    let mut worst_zk = 0.0f64;
    let mut worst_bbqt = 0.0f64;
    for f in gaussian_test_set(&grid) {
        let f_norm = f.norm_l2();
        let bdd = apply_table1_d4(Table1Variant::BDD, &prof, &f)?;
        let zk = apply_table1_d4(Table1Variant::ZK, &prof, &f)?;
        let bbqt = apply_table1_d4(Table1Variant::BBQT, &prof, &f)?;
        let zk_pred_vals: Vec<Complex64> = bdd
            .values()
            .iter()
            .zip(f.values())
            .zip(&vu0)
            .map(|((b, fv), vu)| b + fv * *vu)
            .collect();
        let bbqt_pred_vals: Vec<Complex64> = bdd
            .values()
            .iter()
            .zip(f.values())
            .zip(&vu_half)
            .map(|((b, fv), vu)| b + fv * *vu)
            .collect();
        let zk_pred = GridFunction::new(grid, zk_pred_vals)?;
        let bbqt_pred = GridFunction::new(grid, bbqt_pred_vals)?;
        let dz = zk
            .add_scaled(Complex64::new(-1.0, 0.0), &zk_pred)?
            .norm_l2();
        let db = bbqt
            .add_scaled(Complex64::new(-1.0, 0.0), &bbqt_pred)?
            .norm_l2();
        worst_zk = worst_zk.max(dz / f_norm);
        worst_bbqt = worst_bbqt.max(db / f_norm);
    }
    Ok((worst_zk, worst_bbqt))
}

/// Lowest eigenvalue of an assembled Hamiltonian — the ground-energy offset
/// used by every downstream construction.
pub fn ground_energy_epsilon(h: &HamiltonianBundle) -> Result<f64> {
    Ok(solve_eig(&h.operator, 1)?.eigenvalues[0])
}

/// Canonical ground-energy offset for a configuration.
///
/// The factorized operator is only defined up to an additive constant; this
/// pins it by solving the reference operator whose potential keeps the
/// `(1/2) W^2` well and the ordering part but drops the factorization
/// cross-terms. In the constant-mass harmonic case the reference operator
/// is the textbook oscillator, so the offset is exactly the zero-point
/// energy.
pub fn reference_epsilon(
    p: &MassProfile,
    w_fam: &SuperpotentialFamily,
    alpha: f64,
    grid: Grid,
) -> Result<f64> {
    let prof = eval_profile(p, grid)?;
    let (w, _) = w_fam.eval(alpha, &prof)?;
    reference_epsilon_from_arrays(p, &prof, &w, alpha, grid)
}

/// [`reference_epsilon`] from already-evaluated arrays.
pub fn reference_epsilon_from_arrays(
    p: &MassProfile,
    prof: &EvaluatedProfile,
    w: &[f64],
    alpha: f64,
    grid: Grid,
) -> Result<f64> {
    let vu = v_u_values(prof, alpha);
    let v_ref: Vec<f64> = w
        .iter()
        .zip(&vu)
        .map(|(wi, vui)| 0.5 * wi * wi + vui)
        .collect();
    let v = GridFunction::from_real(grid, &v_ref)?;
    let bundle = assemble_direct(p, &v, 0.0, grid)?;
    ground_energy_epsilon(&bundle)
}

/// Grid-convergence gate: rebuilds the operator on a doubled grid
/// (`2n - 1` keeps the nodes nested) and returns the worst change among the
/// first `k` eigenvalues.
pub fn spectral_stability_gate<F>(assemble: F, n: usize, k: usize) -> Result<f64>
where
    F: Fn(usize) -> Result<LinearDifferentialOperator>,
{
    let coarse = solve_eig(&assemble(n)?, k)?;
    let fine = solve_eig(&assemble(2 * n - 1)?, k)?;
    let mut worst = 0.0f64;
    for j in 0..k {
        worst = worst.max((coarse.eigenvalues[j] - fine.eigenvalues[j]).abs());
    }
    Ok(worst)
}
