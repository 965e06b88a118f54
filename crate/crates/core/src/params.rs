//! Stage calibration: from cycle durations, cell counts and densities to a
//! complete [`StageParameters`] and a stable [`Mesh`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{growth_exponent, projected_total, Mesh, Phase, ProjectedTotal, StageParameters, SECTION_LENGTH_UM};

/// Largest CFL margin accepted when choosing the age resolution. The
/// selection is strict, so a mesh sitting exactly on the ceiling is
/// rejected in favour of the next coarser one.
pub const CFL_CEILING: f64 = 0.95;

const HOURS_PER_DAY: f64 = 24.0;

/// Biological description of a developmental interval, as read from a
/// stage JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiologicalInputs {
    #[serde(default)]
    pub label: Option<String>,
    /// G1+S+G2+M, hours.
    pub cycle_duration: f64,
    pub interphase_fraction: f64,
    /// Hours.
    pub horizon: f64,
    pub initial_cell_count: f64,
    /// Cells per µm.
    pub linear_density: f64,
    /// µm; must be a whole number of 25 µm sections.
    pub initial_length: f64,
    #[serde(default)]
    pub v1_override: Option<f64>,
    #[serde(default)]
    pub v2_override: Option<f64>,
    /// µm²/h. When absent, D is taken numerically equal to the length
    /// expansion factor of the stage.
    #[serde(default)]
    pub diffusion: Option<f64>,
    /// Literal number of cycles, used instead of `horizon / cycle_duration`
    /// when the published calibration rounds it.
    #[serde(default)]
    pub cycles_override: Option<f64>,
}

impl BiologicalInputs {
    /// E2 → E4: 16 sections, 800 cells, 13.6 h cycles.
    pub fn e2e4() -> Self {
        BiologicalInputs {
            label: Some("e2e4".into()),
            cycle_duration: 13.6,
            interphase_fraction: 0.96,
            horizon: 48.0,
            initial_cell_count: 800.0,
            linear_density: 3.85,
            initial_length: 400.0,
            v1_override: Some(0.54),
            v2_override: Some(0.023),
            diffusion: Some(6.0),
            cycles_override: Some(3.53),
        }
    }

    /// E4 → E6: 96 sections, 9241 cells, 38.25 h cycles.
    pub fn e4e6() -> Self {
        BiologicalInputs {
            label: Some("e4e6".into()),
            cycle_duration: 38.25,
            interphase_fraction: 0.96,
            horizon: 48.0,
            initial_cell_count: 9241.0,
            linear_density: 3.85,
            initial_length: 2400.0,
            v1_override: Some(1.53),
            v2_override: Some(0.064),
            diffusion: Some(2.4),
            cycles_override: Some(1.255),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn initial_sections(&self) -> Result<usize> {
        let exact = self.initial_length / SECTION_LENGTH_UM;
        let whole = exact.round();
        if !(whole >= 1.0) || (exact - whole).abs() > 1e-9 * whole.max(1.0) {
            return Err(Error::Domain(format!(
                "initial_length {} µm is not a positive whole number of {SECTION_LENGTH_UM} µm sections",
                self.initial_length
            )));
        }
        Ok(whole as usize)
    }
}

/// Everything [`derive_stage`] computes, including the unrounded
/// intermediates that the parameter set itself does not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDerivation {
    pub params: StageParameters,
    pub interphase_duration: f64,
    pub mitosis_duration: f64,
    /// Cycle count used for the projection (the override when present).
    pub growth_exponent: f64,
    /// `horizon / cycle_duration` without any override.
    pub growth_exponent_exact: f64,
    pub projected_total: ProjectedTotal,
    pub final_length: f64,
    /// `final_length / 25 µm` before rounding.
    pub final_sections_exact: f64,
    pub final_sections: usize,
    /// `final_length / initial_length` before rounding.
    pub expansion_exact: f64,
}

pub fn derive_stage(inputs: &BiologicalInputs) -> Result<StageDerivation> {
    if !(inputs.interphase_fraction > 0.0 && inputs.interphase_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "interphase_fraction must lie in (0, 1), got {}",
            inputs.interphase_fraction
        )));
    }
    if !(inputs.linear_density > 0.0) {
        return Err(Error::Domain(format!(
            "linear_density must be positive, got {}",
            inputs.linear_density
        )));
    }
    if !(inputs.initial_cell_count >= 0.0) {
        return Err(Error::Domain(format!(
            "initial_cell_count must be nonnegative, got {}",
            inputs.initial_cell_count
        )));
    }
    let initial_sections = inputs.initial_sections()?;
    let growth_exponent_exact = growth_exponent(inputs.horizon, inputs.cycle_duration)?;
    let exponent = inputs.cycles_override.unwrap_or(growth_exponent_exact);
    let projected = projected_total(inputs.initial_cell_count, exponent)?;

    let interphase_duration = inputs.interphase_fraction * inputs.cycle_duration;
    let mitosis_duration = (1.0 - inputs.interphase_fraction) * inputs.cycle_duration;

    let final_length = projected.value / inputs.linear_density;
    let expansion_exact = final_length / inputs.initial_length;
    // Expansion is quoted to one decimal (×6, ×2.4); the expanded domain is
    // that many copies of the initial sections.
    let expansion_factor = (expansion_exact * 10.0).round() / 10.0;
    if !(expansion_factor > 0.0) {
        return Err(Error::Domain(format!(
            "stage does not grow: expansion factor {expansion_exact:.4}"
        )));
    }
    let final_sections = (initial_sections as f64 * expansion_factor).round() as usize;

    // Rates follow the per-day phase counts: 1/v = 24 h / duration.
    let v1 = inputs.v1_override.unwrap_or(interphase_duration / HOURS_PER_DAY);
    let v2 = inputs.v2_override.unwrap_or(mitosis_duration / HOURS_PER_DAY);
    let diffusion = inputs.diffusion.unwrap_or(expansion_factor);

    let params = StageParameters {
        cycle_duration: inputs.cycle_duration,
        interphase_fraction: inputs.interphase_fraction,
        horizon: inputs.horizon,
        v1,
        v2,
        diffusion,
        initial_cell_count: inputs.initial_cell_count,
        linear_density: inputs.linear_density,
        initial_sections,
        expansion_factor,
    };
    params.validate()?;

    Ok(StageDerivation {
        params,
        interphase_duration,
        mitosis_duration,
        growth_exponent: exponent,
        growth_exponent_exact,
        projected_total: projected,
        final_length,
        final_sections_exact: final_length / SECTION_LENGTH_UM,
        final_sections,
        expansion_exact,
    })
}

/// Left-hand side of the explicit-scheme stability condition,
/// `v·dt/da + 2·D·dt/dx²`. The scheme is stable iff this is at most 1.
pub fn cfl_margin(params: &StageParameters, mesh: &Mesh, phase_rate: f64) -> f64 {
    margin(phase_rate, params.diffusion, mesh.dt, mesh.da, mesh.dx)
}

fn margin(rate: f64, diffusion: f64, dt: f64, da: f64, dx: f64) -> f64 {
    rate * dt / da + 2.0 * diffusion * dt / (dx * dx)
}

/// Fails with [`Error::Stability`] naming the first phase whose margin
/// exceeds 1.
pub fn check_cfl(params: &StageParameters, mesh: &Mesh) -> Result<()> {
    for phase in [Phase::Interphase, Phase::Mitosis] {
        let m = cfl_margin(params, mesh, params.rate(phase));
        if !(m <= 1.0) {
            return Err(Error::Stability {
                phase: phase.name(),
                margin: m,
            });
        }
    }
    Ok(())
}

pub fn is_stable(params: &StageParameters, mesh: &Mesh) -> bool {
    check_cfl(params, mesh).is_ok()
}

/// Chooses the finest age grid `da = 1/I` whose CFL margin stays strictly
/// below [`CFL_CEILING`] for both phases, on a mesh spanning the stage
/// horizon with time step `dt` and the initial domain with spacing `dx`.
pub fn select_age_resolution(params: &StageParameters, dt: f64, dx: f64) -> Result<Mesh> {
    select_age_resolution_with_ceiling(params, dt, dx, CFL_CEILING)
}

pub fn select_age_resolution_with_ceiling(params: &StageParameters, dt: f64, dx: f64, ceiling: f64) -> Result<Mesh> {
    if !(dt > 0.0 && dx > 0.0) {
        return Err(Error::Domain(format!("dt and dx must be positive (got {dt}, {dx})")));
    }
    if !(ceiling > 0.0 && ceiling <= 1.0) {
        return Err(Error::Domain(format!("CFL ceiling must lie in (0, 1], got {ceiling}")));
    }
    params.validate()?;
    let steps = whole_ratio(params.horizon, dt, "horizon / dt")?;
    let sections = whole_ratio(params.initial_length(), dx, "initial length / dx")?;

    let fastest = params.v1.max(params.v2);
    let worst = |age_cells: usize| margin(fastest, params.diffusion, dt, 1.0 / age_cells as f64, dx);

    if worst(1) >= ceiling {
        let phase = if params.v1 >= params.v2 { "v1" } else { "v2" };
        return Err(Error::Infeasible(format!(
            "{phase}·dt/da + 2·D·dt/dx² = {:.6} is not below {ceiling} even at da = 1",
            worst(1)
        )));
    }
    let diffusion_part = 2.0 * params.diffusion * dt / (dx * dx);
    let estimate = ((ceiling - diffusion_part) / (fastest * dt)).floor().max(1.0) as usize;
    let mut age_cells = estimate;
    while age_cells > 1 && worst(age_cells) >= ceiling {
        age_cells -= 1;
    }
    while worst(age_cells + 1) < ceiling {
        age_cells += 1;
    }

    Mesh::new(params.horizon, params.initial_length(), steps, age_cells, sections)
}

fn whole_ratio(numerator: f64, denominator: f64, what: &str) -> Result<usize> {
    let exact = numerator / denominator;
    let whole = exact.round();
    if !(whole >= 1.0) || (exact - whole).abs() > 1e-9 * whole.max(1.0) {
        return Err(Error::Domain(format!("{what} = {exact} is not a positive integer")));
    }
    Ok(whole as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e2e4() -> StageParameters {
        derive_stage(&BiologicalInputs::e2e4()).unwrap().params
    }

    fn e4e6() -> StageParameters {
        derive_stage(&BiologicalInputs::e4e6()).unwrap().params
    }

    fn mesh_with_da(params: &StageParameters, da: f64) -> Mesh {
        Mesh {
            dt: 1.0 / 6.0,
            da,
            dx: 25.0,
            steps: 288,
            age_cells: (1.0 / da).round() as usize,
            sections: params.initial_sections,
        }
    }

    #[test]
    fn e2e4_derivation() {
        let d = derive_stage(&BiologicalInputs::e2e4()).unwrap();
        assert_eq!(d.projected_total.cells, 9241.0);
        assert!((d.final_length - 2400.0).abs() <= 1.0, "{}", d.final_length);
        assert_eq!(d.final_sections, 96);
        assert_eq!(d.params.expansion_factor, 6.0);
        assert_eq!(d.params.initial_sections, 16);
        assert_relative_eq!(d.interphase_duration, 13.056, epsilon = 1e-12);
        assert_relative_eq!(d.mitosis_duration, 0.544, epsilon = 1e-12);
        assert_eq!((d.params.v1, d.params.v2, d.params.diffusion), (0.54, 0.023, 6.0));
    }

    #[test]
    fn e4e6_derivation() {
        let d = derive_stage(&BiologicalInputs::e4e6()).unwrap();
        assert_eq!(d.projected_total.cells, 22055.0);
        assert!((d.final_length - 5729.0).abs() <= 2.0, "{}", d.final_length);
        assert_eq!(d.final_sections, 230);
        assert_eq!(d.params.expansion_factor, 2.4);
        assert!((d.final_sections_exact - 229.16).abs() < 0.05);
    }

    #[test]
    fn symmetric_split() {
        let inputs = BiologicalInputs {
            cycle_duration: 10.0,
            interphase_fraction: 0.5,
            ..BiologicalInputs::e2e4()
        };
        let d = derive_stage(&inputs).unwrap();
        assert_eq!(d.interphase_duration, 5.0);
        assert_eq!(d.mitosis_duration, 5.0);
    }

    #[test]
    fn unrounded_rates_follow_daily_phase_counts() {
        let inputs = BiologicalInputs {
            v1_override: None,
            v2_override: None,
            diffusion: None,
            ..BiologicalInputs::e4e6()
        };
        let d = derive_stage(&inputs).unwrap();
        assert_relative_eq!(d.params.v1, 1.53, epsilon = 1e-12);
        assert!((d.params.v2 - 0.064).abs() < 0.001);
        assert_eq!(d.params.diffusion, 2.4);
    }

    #[test]
    fn derive_rejects_bad_inputs() {
        let bad_fraction = BiologicalInputs {
            interphase_fraction: 1.0,
            ..BiologicalInputs::e2e4()
        };
        assert!(matches!(derive_stage(&bad_fraction), Err(Error::Domain(_))));
        let zero_density = BiologicalInputs {
            linear_density: 0.0,
            ..BiologicalInputs::e2e4()
        };
        assert!(matches!(derive_stage(&zero_density), Err(Error::Domain(_))));
        let ragged = BiologicalInputs {
            initial_length: 410.0,
            ..BiologicalInputs::e2e4()
        };
        assert!(matches!(derive_stage(&ragged), Err(Error::Domain(_))));
    }

    #[test]
    fn final_length_times_density_is_total() {
        for inputs in [BiologicalInputs::e2e4(), BiologicalInputs::e4e6()] {
            let d = derive_stage(&inputs).unwrap();
            assert!((d.final_length * d.params.linear_density - d.projected_total.value).abs() <= 0.5);
        }
    }

    #[test]
    fn cfl_margins() {
        let p = e2e4();
        let m = cfl_margin(&p, &mesh_with_da(&p, 0.1), 0.54);
        assert_relative_eq!(m, 0.9032, epsilon = 1e-12);
        assert!(cfl_margin(&p, &mesh_with_da(&p, 0.09), 0.54) > 1.0);
        let still = StageParameters { diffusion: 0.0, ..p };
        assert_eq!(cfl_margin(&still, &mesh_with_da(&still, 0.1), 0.0), 0.0);
    }

    #[test]
    fn age_resolution_for_both_stages() {
        let mesh = select_age_resolution(&e2e4(), 1.0 / 6.0, 25.0).unwrap();
        assert_eq!((mesh.age_cells, mesh.steps, mesh.sections), (10, 288, 16));
        assert_relative_eq!(mesh.da, 0.1);
        let mesh = select_age_resolution(&e4e6(), 1.0 / 6.0, 25.0).unwrap();
        assert_eq!((mesh.age_cells, mesh.steps, mesh.sections), (3, 288, 96));
        assert_relative_eq!(mesh.da, 1.0 / 3.0);
    }

    #[test]
    fn boundary_margin_is_rejected() {
        // v·dt = 0.25 and no diffusion: I = 4 lands exactly on margin 1.
        let p = StageParameters {
            v1: 1.5,
            v2: 0.1,
            diffusion: 0.0,
            ..e2e4()
        };
        let mesh = select_age_resolution_with_ceiling(&p, 1.0 / 6.0, 25.0, 1.0).unwrap();
        assert_eq!(mesh.age_cells, 3);
    }

    #[test]
    fn fast_phase_is_infeasible() {
        let p = StageParameters { v1: 12.0, ..e2e4() };
        let err = select_age_resolution(&p, 1.0 / 6.0, 25.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(ref m) if m.contains("v1")), "{err}");
    }

    #[test]
    fn stage_json_round_trip() {
        let json = serde_json::to_string(&BiologicalInputs::e4e6()).unwrap();
        assert!(json.contains("\"cycle_duration\""));
        assert_eq!(BiologicalInputs::from_json(&json).unwrap(), BiologicalInputs::e4e6());
        let minimal = r#"{"cycle_duration":13.6,"interphase_fraction":0.96,"horizon":48,
            "initial_cell_count":800,"linear_density":3.85,"initial_length":400}"#;
        let parsed = BiologicalInputs::from_json(minimal).unwrap();
        assert_eq!(parsed.v1_override, None);
    }
}
