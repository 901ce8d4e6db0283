//! Spectrum subcommand: base and deformed level tables per ordering label
//! and deformation parameter, with normalizability and grid-convergence
//! verdicts.

use super::{num_list, screen_profile, summary_skeleton, Document, RunContext};
use crate::output::{fmt12, json_bytes, json_num, Csv};
use anyhow::{Context, Result};
use pdm_core::eig::solve_eig;
use pdm_core::grid::Grid;
use pdm_core::hamiltonian::{
    assemble_direct, effective_potential_from_arrays, reference_epsilon_from_arrays,
    spectral_stability_gate,
};
use pdm_core::isospectral::missing_state;
use pdm_core::ladder::{build_w_from_arrays, ground_state_xi0};
use pdm_core::profile::{alpha_set_membership, eval_profile, OrderingParams};
use serde_json::{json, Value};

/// Worst eigenvalue drift under grid doubling below which a spectrum
/// counts as converged; matches the tolerance of the analytic level
/// checks.
const CONVERGENCE_TOLERANCE: f64 = 1e-4;

pub fn run(ctx: &RunContext) -> Result<Vec<Document>> {
    let grid = ctx.grid;
    let levels = ctx.cfg.transform.levels;
    let screening = screen_profile(ctx)?;

    let mut csv = Csv::new(&[
        "alpha",
        "lambda",
        "level",
        "e_base",
        "e_transformed",
        "abs_diff",
    ]);
    let mut records: Vec<Value> = Vec::new();

    for &alpha in &ctx.cfg.ordering.alpha {
        let ord = OrderingParams::from_alpha(alpha)?;
        let prof = eval_profile(&ctx.profile, grid)?;
        let (w, wp) = ctx.family.eval(alpha, &prof)?;

        let overridden = ctx.cfg.ordering.epsilon_override.is_some();
        let epsilon = match ctx.cfg.ordering.epsilon_override {
            Some(value) => value,
            None => reference_epsilon_from_arrays(&ctx.profile, &prof, &w, alpha, grid)?,
        };

        let base_pot = effective_potential_from_arrays(&prof, &w, &wp, alpha, epsilon)?;
        let base_h = assemble_direct(&ctx.profile, &base_pot.v_eff, epsilon, grid)?;
        let base_sol = solve_eig(&base_h.operator, levels)?;
        log::info!(
            "alpha = {alpha}: epsilon = {:.6}, ground level = {:.6}",
            epsilon,
            base_sol.eigenvalues[0]
        );

        let xi0 = ground_state_xi0(&ctx.profile, &ctx.family, ord, grid)?;
        let missing = missing_state(&ctx.profile, &ctx.family, ord, grid)?;

        let drift = spectral_stability_gate(
            |m| {
                let fine = Grid::new(grid.x_min(), grid.x_max(), m)?;
                let prof_m = eval_profile(&ctx.profile, fine)?;
                let (wm, wpm) = ctx.family.eval(alpha, &prof_m)?;
                let pot = effective_potential_from_arrays(&prof_m, &wm, &wpm, alpha, epsilon)?;
                Ok(assemble_direct(&ctx.profile, &pot.v_eff, epsilon, fine)?.operator)
            },
            grid.n(),
            levels,
        )?;

        let mut deformations: Vec<Value> = Vec::new();
        for &lambda in &ctx.cfg.transform.lambda {
            let shift = build_w_from_arrays(lambda, &xi0, &prof, &w, &wp, alpha)
                .with_context(|| format!("deformation parameter lambda = {lambda}"))?;
            let shifted_pot = effective_potential_from_arrays(
                &prof,
                &shift.w_shifted,
                &shift.w_shifted_deriv,
                alpha,
                epsilon,
            )?;
            let shifted_h = assemble_direct(&ctx.profile, &shifted_pot.v_eff, epsilon, grid)?;
            let shifted_sol = solve_eig(&shifted_h.operator, levels)?;

            let mut worst_excited = 0.0f64;
            for level in 0..levels {
                let e_base = base_sol.eigenvalues[level];
                let e_transformed = shifted_sol.eigenvalues[level];
                let diff = (e_transformed - e_base).abs();
                if level >= 1 {
                    worst_excited = worst_excited.max(diff);
                }
                csv.row(&[
                    fmt12(alpha),
                    fmt12(lambda),
                    level.to_string(),
                    fmt12(e_base),
                    fmt12(e_transformed),
                    fmt12(diff),
                ]);
            }

            deformations.push(json!({
                "lambda": json_num(lambda),
                "levels_base": num_list(&base_sol.eigenvalues),
                "levels_transformed": num_list(&shifted_sol.eigenvalues),
                "worst_excited_diff": json_num(worst_excited),
            }));
        }

        let membership = alpha_set_membership(alpha, ctx.cfg.ordering.n_index);
        records.push(json!({
            "alpha": json_num(alpha),
            "epsilon": json_num(epsilon),
            "epsilon_overridden": overridden,
            "ordering_set": {
                "member": membership.member,
                "nearest": json_num(membership.nearest),
            },
            "deleted_state": {
                "normalizable": missing.normalizable,
                "mass_ratio": json_num(missing.mass_ratio),
            },
            "convergence": {
                "base_level_drift": json_num(drift),
                "within_tolerance": drift < CONVERGENCE_TOLERANCE,
            },
            "deformations": deformations,
        }));
    }

    let mut summary = summary_skeleton("spectrum", ctx, screening)?;
    summary.insert("runs".into(), Value::Array(records));

    let mut documents = Vec::new();
    if ctx.format.wants_csv() {
        documents.push(Document::new("spectrum.csv", csv.into_bytes()));
    }
    if ctx.format.wants_json() {
        documents.push(Document::new(
            "spectrum.json",
            json_bytes(&Value::Object(summary))?,
        ));
    }
    Ok(documents)
}
