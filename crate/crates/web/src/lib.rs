//! WebAssembly front end for the static demo page in `www/`. The exported
//! functions return SVG or JSON text; the page only swaps it into the DOM.
//!
//! Everything is implemented in plain Rust functions first so it can be
//! tested natively; the `#[wasm_bindgen]` wrappers just convert errors.

use serde_json::json;
use wasm_bindgen::prelude::*;

use tectum_core::data::{render_profile_svg, fixture};
use tectum_core::fdm::{self, DifferentiationSchedule};
use tectum_core::params::{cfl_margin, BiologicalInputs};
use tectum_core::pipeline::{self, DiffusionMode, Stage};
use tectum_core::{Phase, PhaseField};

fn preset(name: &str) -> Result<Stage, String> {
    match name {
        "e2e4" => Ok(Stage::E2E4),
        "e4e6" => Ok(Stage::E4E6),
        other => Err(format!("unknown stage '{other}'")),
    }
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Biological inputs of a preset stage as editable JSON.
pub fn preset_inputs(stage: &str) -> Result<String, String> {
    serde_json::to_string_pretty(&preset(stage)?.inputs()).map_err(text)
}

/// Parameters, selected mesh and stability margins for a JSON stage
/// description.
pub fn derive(inputs_json: &str) -> Result<String, String> {
    let inputs = BiologicalInputs::from_json(inputs_json).map_err(text)?;
    let setup = pipeline::stage_setup(&Stage::Custom(inputs)).map_err(text)?;
    let p = &setup.derivation.params;
    let report = json!({
        "v1": p.v1,
        "v2": p.v2,
        "diffusion": p.diffusion,
        "expansion_factor": p.expansion_factor,
        "projected_cells": setup.derivation.projected_total.cells,
        "final_length_um": setup.derivation.final_length,
        "final_sections": setup.derivation.final_sections,
        "mesh": setup.mesh,
        "cfl_margin_interphase": cfl_margin(p, &setup.mesh, p.v1),
        "cfl_margin_mitosis": cfl_margin(p, &setup.mesh, p.v2),
    });
    serde_json::to_string_pretty(&report).map_err(text)
}

/// Reduced-pipeline profile of a preset stage plotted against the model and
/// experimental columns of its table.
pub fn reduced_svg(stage: &str, mode: &str) -> Result<String, String> {
    let stage = preset(stage)?;
    let mode = mode.parse::<DiffusionMode>().map_err(text)?;
    let run = pipeline::reduced(&stage, None, mode).map_err(text)?;
    let table = fixture(if matches!(stage, Stage::E2E4) { 3 } else { 5 }).map_err(text)?;
    let mut curves = vec![run.interpolated.relabeled("reduced model")];
    for column in ["model", "experimental"] {
        curves.push(table.column(column).map_err(text)?.relabeled(format!("published {column}")));
    }
    render_profile_svg(&curves, &format!("Reduced profile, {} ({} diffusion)", run.stage, mode.name())).map_err(text)
}

/// Full finite-difference run of a preset stage with a constant
/// differentiation rate `q`.
pub fn simulate_svg(stage: &str, q: f64) -> Result<String, String> {
    let stage = preset(stage)?;
    let setup = pipeline::stage_setup(&stage).map_err(text)?;
    let schedule = DifferentiationSchedule::constant(q).map_err(text)?;
    let (interphase, mitotic, _) = pipeline::simulation_seed(&stage, &setup).map_err(text)?;
    let field = PhaseField::seeded_uniform_in_age(&setup.mesh, &interphase, &mitotic).map_err(text)?;
    let (last, _) = fdm::run(&field, &setup.mesh, &setup.derivation.params, &schedule).map_err(text)?;
    render_profile_svg(
        &[
            interphase.relabeled("initial interphase"),
            fdm::section_totals(&last).relabeled("final interphase"),
            fdm::phase_section_totals(&last, Phase::Mitosis).relabeled("final mitotic"),
            fdm::postmitotic_profile(&last).relabeled("postmitotic"),
        ],
        &format!("Finite-difference run, {}, q = {q}", stage.label()),
    )
    .map_err(text)
}

#[wasm_bindgen(js_name = presetInputs)]
pub fn preset_inputs_js(stage: &str) -> Result<String, JsError> {
    preset_inputs(stage).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = derive)]
pub fn derive_js(inputs_json: &str) -> Result<String, JsError> {
    derive(inputs_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = reducedSvg)]
pub fn reduced_svg_js(stage: &str, mode: &str) -> Result<String, JsError> {
    reduced_svg(stage, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulateSvg)]
pub fn simulate_svg_js(stage: &str, q: f64) -> Result<String, JsError> {
    simulate_svg(stage, q).map_err(|e| JsError::new(&e))
}
