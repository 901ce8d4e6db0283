//! Symmetry subcommand: reflection-intertwiner residuals per ordering
//! label, the fixed-point identity at the midpoint label, and the
//! coefficient-matching solution against its closed form. Labels that are
//! mirror images of each other share one record.

use super::{num_list, screen_profile, summary_skeleton, Document, RunContext};
use crate::output::{fmt12, json_bytes, json_num, Csv};
use anyhow::Result;
use pdm_core::grid::gaussian_test_set;
use pdm_core::ladder::build_qalpha_pair;
use pdm_core::symmetry::{
    build_intertwiner_z, fixed_point_check, intertwiner_residual, solve_intertwiner_coefficients,
};
use serde_json::{json, Value};

/// Groups the configured labels into mirror classes: `alpha` joins an
/// existing class when it equals the representative or its reflection.
/// The comparison uses the same `1 - alpha` arithmetic as the reflection
/// itself, so dyadic pairs and exact repeats collapse while distinct
/// labels stay separate.
fn mirror_classes(alphas: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let mut classes: Vec<(f64, Vec<f64>)> = Vec::new();
    'next: for &alpha in alphas {
        for (representative, covered) in classes.iter_mut() {
            let r = *representative;
            if alpha == r || alpha == 1.0 - r || r == 1.0 - alpha {
                covered.push(alpha);
                continue 'next;
            }
        }
        classes.push((alpha, vec![alpha]));
    }
    classes
}

pub fn run(ctx: &RunContext) -> Result<Vec<Document>> {
    let grid = ctx.grid;
    let screening = screen_profile(ctx)?;
    let test_set = gaussian_test_set(&grid);

    // The midpoint label is its own mirror image; there the intertwiner
    // must coincide with the lowering operator as a matrix identity.
    let midpoint = build_intertwiner_z(&ctx.profile, &ctx.family, 0.5, grid)?;
    let midpoint_pair = build_qalpha_pair(&ctx.profile, &ctx.family, 0.5, grid)?;
    let fixed_point_gap = midpoint
        .assembled
        .max_entry_difference(&midpoint_pair.lower)?;
    let fixed_point_probe = fixed_point_check(&ctx.profile, &ctx.family, grid, &test_set)?;

    let mut csv = Csv::new(&[
        "alpha",
        "mirror",
        "worst_relation_residual",
        "coefficient_residual",
        "closed_form_discrepancy",
        "flagged",
    ]);
    let mut records: Vec<Value> = Vec::new();

    for (alpha, covered) in mirror_classes(&ctx.cfg.ordering.alpha) {
        let mirror = 1.0 - alpha;
        let intertwiner = build_intertwiner_z(&ctx.profile, &ctx.family, alpha, grid)?;
        let pair_alpha = build_qalpha_pair(&ctx.profile, &ctx.family, alpha, grid)?;
        let pair_mirror = build_qalpha_pair(&ctx.profile, &ctx.family, mirror, grid)?;
        let relation =
            intertwiner_residual(&intertwiner, &pair_alpha, &pair_mirror, &test_set)?;
        let coefficients =
            solve_intertwiner_coefficients(&ctx.profile, &ctx.family, alpha, grid)?;
        if coefficients.flagged {
            log::warn!(
                "alpha = {alpha}: coefficient matching disagrees with the closed form \
                 (discrepancy {:.3e})",
                coefficients.closed_form_discrepancy
            );
        }

        csv.row(&[
            fmt12(alpha),
            fmt12(mirror),
            fmt12(relation.worst),
            fmt12(coefficients.residual),
            fmt12(coefficients.closed_form_discrepancy),
            coefficients.flagged.to_string(),
        ]);
        records.push(json!({
            "alpha": json_num(alpha),
            "mirror": json_num(mirror),
            "covers": num_list(&covered),
            "relation_residual": {
                "worst": json_num(relation.worst),
                "per_function": num_list(&relation.per_function),
            },
            "coefficient_matching": {
                "residual": json_num(coefficients.residual),
                "closed_form_discrepancy": json_num(coefficients.closed_form_discrepancy),
                "flagged": coefficients.flagged,
            },
        }));
    }

    let mut summary = summary_skeleton("symmetry", ctx, screening)?;
    summary.insert(
        "fixed_point".into(),
        json!({
            "matrix_gap": json_num(fixed_point_gap),
            "probe_residual": json_num(fixed_point_probe),
        }),
    );
    summary.insert("records".into(), Value::Array(records));

    let mut documents = Vec::new();
    if ctx.format.wants_csv() {
        documents.push(Document::new("symmetry.csv", csv.into_bytes()));
    }
    if ctx.format.wants_json() {
        documents.push(Document::new(
            "symmetry.json",
            json_bytes(&Value::Object(summary))?,
        ));
    }
    Ok(documents)
}
