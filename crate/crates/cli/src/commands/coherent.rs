//! Coherent subcommand: displaced ground states per (ordering label,
//! displacement label), their moment tables in both conventions, and the
//! uncertainty-product classification, plus a plot-ready density table.

use super::{num_list, screen_profile, summary_skeleton, Document, RunContext};
use crate::output::{fmt12, json_bytes, json_num, Csv};
use anyhow::Result;
use pdm_core::coherent::{
    cs_construct, expectations, gur_product, minimization_and_sign, GurClassification,
    MomentColumn, SignVerdict,
};
use serde_json::{json, Value};

fn classification_label(c: GurClassification) -> &'static str {
    match c {
        GurClassification::Saturated => "saturated",
        GurClassification::Minimized => "minimized",
        GurClassification::ViolatedTolerance => "violated-tolerance",
    }
}

fn sign_label(v: SignVerdict) -> &'static str {
    match v {
        SignVerdict::Positive => "positive",
        SignVerdict::Negative => "negative",
        SignVerdict::Indeterminate => "indeterminate",
        SignVerdict::SaturatedUnconstrained => "saturated-unconstrained",
    }
}

fn moment_json(column: &MomentColumn) -> Value {
    json!({
        "w_mean": json_num(column.w_mean),
        "pi_mean": json_num(column.pi_mean),
        "w_second": json_num(column.w_second),
        "pi_second": json_num(column.pi_second),
    })
}

pub fn run(ctx: &RunContext) -> Result<Vec<Document>> {
    let grid = ctx.grid;
    let screening = screen_profile(ctx)?;
    let labels = ctx.cfg.displacement_labels()?;

    let mut csv = Csv::new(&[
        "alpha",
        "z_im",
        "x",
        "density",
        "w_mean_pointwise",
        "w_second_pointwise",
        "pi_second_pointwise",
        "r_correction",
    ]);
    let mut records: Vec<Value> = Vec::new();

    for &alpha in &ctx.cfg.ordering.alpha {
        let sign = minimization_and_sign(&ctx.profile, &ctx.family, alpha, grid)?;
        let mut states: Vec<Value> = Vec::new();

        for &z in &labels {
            let state = cs_construct(z, alpha, &ctx.profile, &ctx.family, grid)?;
            let moments = expectations(&state, &ctx.profile, &ctx.family, grid)?;
            let gur = gur_product(&state, &ctx.profile, &ctx.family, alpha, grid)?;
            log::info!(
                "alpha = {alpha}, z = {z}: product = {:.6}, {}",
                gur.product,
                classification_label(gur.classification)
            );

            let density = state.psi.abs2();
            let w_mean_point = moments.w_mean_pointwise.real_values();
            let w_second_point = moments.w_second_pointwise.real_values();
            let pi_second_point = moments.pi_second_pointwise.real_values();
            let r_point = gur.r_alpha_values.real_values();
            for i in 0..grid.n() {
                csv.row(&[
                    fmt12(alpha),
                    fmt12(z.im),
                    fmt12(grid.x(i)),
                    fmt12(density[i]),
                    fmt12(w_mean_point[i]),
                    fmt12(w_second_point[i]),
                    fmt12(pi_second_point[i]),
                    fmt12(r_point[i]),
                ]);
            }

            let psi_re: Vec<f64> = state.psi.values().iter().map(|v| v.re).collect();
            let psi_im: Vec<f64> = state.psi.values().iter().map(|v| v.im).collect();
            states.push(json!({
                "z": [json_num(z.re), json_num(z.im)],
                "eigen_residual": json_num(state.eigen_residual),
                "norm_before": json_num(state.norm_before),
                "moments": {
                    "quadrature": moment_json(&moments.quadrature),
                    "closed_form": moment_json(&moments.closed_form),
                },
                "uncertainty": {
                    "var_w": json_num(gur.var_w),
                    "var_pi": json_num(gur.var_pi),
                    "commutator_expect": json_num(gur.commutator_expect),
                    "r_expect": json_num(gur.r_expect),
                    "product": json_num(gur.product),
                    "bound": json_num(gur.bound),
                    "classification": classification_label(gur.classification),
                    "sign_of_w": sign_label(gur.sign_of_w),
                },
                "psi_re": num_list(&psi_re),
                "psi_im": num_list(&psi_im),
            }));
        }

        records.push(json!({
            "alpha": json_num(alpha),
            "sign_analysis": {
                "verdict": sign_label(sign.verdict),
                "negative_fraction": json_num(sign.negative_fraction),
                "positive_fraction": json_num(sign.positive_fraction),
                "requirement_met_fraction": json_num(sign.requirement_met_fraction),
            },
            "states": states,
        }));
    }

    let mut summary = summary_skeleton("coherent", ctx, screening)?;
    summary.insert("runs".into(), Value::Array(records));

    let mut documents = Vec::new();
    if ctx.format.wants_csv() {
        documents.push(Document::new("coherent.csv", csv.into_bytes()));
    }
    if ctx.format.wants_json() {
        documents.push(Document::new(
            "coherent.json",
            json_bytes(&Value::Object(summary))?,
        ));
    }
    Ok(documents)
}
