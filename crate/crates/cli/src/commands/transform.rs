//! Transform subcommand: the deformed superpotential, the shift profile,
//! the deformed ground state, and the deleted-state samples per
//! deformation parameter. Deformation parameters that hit the shift pole
//! are recorded as rejections and the run continues.

use super::{num_list, screen_profile, summary_skeleton, Document, RunContext};
use crate::output::{fmt12, json_bytes, json_num, Csv};
use anyhow::Result;
use pdm_core::eig::solve_eig;
use pdm_core::hamiltonian::{
    assemble_direct, effective_potential_from_arrays, reference_epsilon_from_arrays,
};
use pdm_core::isospectral::{missing_state, transform_state, transformed_ground};
use pdm_core::ladder::{build_pair_from_w, build_w_from_arrays, ground_state_xi0};
use pdm_core::profile::{eval_profile, OrderingParams};
use pdm_core::CoreError;
use serde_json::{json, Value};

pub fn run(ctx: &RunContext) -> Result<Vec<Document>> {
    let grid = ctx.grid;
    let levels = ctx.cfg.transform.levels;
    let screening = screen_profile(ctx)?;

    // The deformation acts on one factorization at a time; with several
    // labels configured the first one is used.
    let alpha = ctx.cfg.ordering.alpha[0];
    if ctx.cfg.ordering.alpha.len() > 1 {
        log::info!("transform uses the first ordering label, alpha = {alpha}");
    }
    let ord = OrderingParams::from_alpha(alpha)?;
    let prof = eval_profile(&ctx.profile, grid)?;
    let (w, wp) = ctx.family.eval(alpha, &prof)?;

    let overridden = ctx.cfg.ordering.epsilon_override.is_some();
    let epsilon = match ctx.cfg.ordering.epsilon_override {
        Some(value) => value,
        None => reference_epsilon_from_arrays(&ctx.profile, &prof, &w, alpha, grid)?,
    };

    let xi0 = ground_state_xi0(&ctx.profile, &ctx.family, ord, grid)?;
    let base_pair = build_pair_from_w(grid, &prof, alpha, &w, &wp, None)?;
    let missing = missing_state(&ctx.profile, &ctx.family, ord, grid)?;
    let upsilon = missing.state.real_values();

    // Base eigenstates feed the per-level route comparison of the mapped
    // excited states.
    let base_pot = effective_potential_from_arrays(&prof, &w, &wp, alpha, epsilon)?;
    let base_h = assemble_direct(&ctx.profile, &base_pot.v_eff, epsilon, grid)?;
    let base_sol = solve_eig(&base_h.operator, levels)?;

    let mut csv = Csv::new(&[
        "lambda",
        "x",
        "w_base",
        "w_shifted",
        "phi",
        "xi0_deformed",
        "upsilon",
    ]);
    let mut accepted: Vec<Value> = Vec::new();
    let mut rejections: Vec<Value> = Vec::new();

    for &lambda in &ctx.cfg.transform.lambda {
        let shift = match build_w_from_arrays(lambda, &xi0, &prof, &w, &wp, alpha) {
            Ok(shift) => shift,
            Err(CoreError::ShiftPole {
                x,
                interval_lo,
                interval_hi,
                ..
            }) => {
                log::warn!(
                    "lambda = {lambda} rejected: shift pole near x = {x:.6}; \
                     admissible parameters lie outside [{interval_lo:.6}, {interval_hi:.6}]"
                );
                rejections.push(json!({
                    "lambda": json_num(lambda),
                    "pole_x": json_num(x),
                    "excluded_interval": [json_num(interval_lo), json_num(interval_hi)],
                }));
                continue;
            }
            Err(other) => return Err(other.into()),
        };

        let xi0_deformed = transformed_ground(lambda, &xi0, grid)?;
        let shifted_pair = build_pair_from_w(
            grid,
            &prof,
            alpha,
            &shift.w_shifted,
            &shift.w_shifted_deriv,
            Some(lambda),
        )?;

        let mut route_distances = Vec::with_capacity(levels.saturating_sub(1));
        for level in 1..levels {
            let mapped = transform_state(
                &base_sol.eigenvectors[level],
                base_sol.eigenvalues[level],
                epsilon,
                &shift,
                &base_pair,
                &shifted_pair,
            )?;
            route_distances.push(mapped.route_distance);
        }

        let max_shift = shift.phi.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let deformed_values = xi0_deformed.real_values();
        for i in 0..grid.n() {
            csv.row(&[
                fmt12(lambda),
                fmt12(grid.x(i)),
                fmt12(w[i]),
                fmt12(shift.w_shifted[i]),
                fmt12(shift.phi[i]),
                fmt12(deformed_values[i]),
                fmt12(upsilon[i]),
            ]);
        }

        accepted.push(json!({
            "lambda": json_num(lambda),
            "max_shift": json_num(max_shift),
            "phi_at_center": json_num(shift.phi[grid.center_index()]),
            "route_distances": num_list(&route_distances),
        }));
    }

    let mut summary = summary_skeleton("transform", ctx, screening)?;
    summary.insert("alpha".into(), json_num(alpha));
    summary.insert("epsilon".into(), json_num(epsilon));
    summary.insert("epsilon_overridden".into(), Value::Bool(overridden));
    summary.insert(
        "deleted_state".into(),
        json!({
            "normalizable": missing.normalizable,
            "mass_ratio": json_num(missing.mass_ratio),
        }),
    );
    summary.insert("accepted".into(), Value::Array(accepted));
    summary.insert("rejections".into(), Value::Array(rejections));

    let mut documents = Vec::new();
    if ctx.format.wants_csv() {
        documents.push(Document::new("transform.csv", csv.into_bytes()));
    }
    if ctx.format.wants_json() {
        documents.push(Document::new(
            "transform.json",
            json_bytes(&Value::Object(summary))?,
        ));
    }
    Ok(documents)
}
