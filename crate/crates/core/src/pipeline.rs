//! End-to-end reduced runs for the two developmental intervals, producing
//! the anchor profiles and interpolated expanded-domain profiles, and their
//! comparison against the annexe tables.

use serde::{Deserialize, Serialize};

use crate::aggregate::{
    self, beta_profile_e4e6, calibrate_uniform_alpha, closed_form_growth, induction_run, interpolate_profile,
    right_extrapolation_anchor, AlphaBetaProfile,
};
use crate::data::{self, fixture};
use crate::error::{Error, Result};
use crate::model::{round_count, ComparisonReport, Mesh, SectionProfile, SECTION_LENGTH_UM};
use crate::params::{derive_stage, select_age_resolution, BiologicalInputs, StageDerivation};
use crate::validation::compare;

/// Ten minutes, in hours: 288 steps over 48 h.
pub const TIME_STEP_HOURS: f64 = 1.0 / 6.0;

/// The stage a command runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    E2E4,
    E4E6,
    Custom(BiologicalInputs),
}

impl Stage {
    pub fn inputs(&self) -> BiologicalInputs {
        match self {
            Stage::E2E4 => BiologicalInputs::e2e4(),
            Stage::E4E6 => BiologicalInputs::e4e6(),
            Stage::Custom(inputs) => inputs.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Stage::E2E4 => "e2e4".into(),
            Stage::E4E6 => "e4e6".into(),
            Stage::Custom(inputs) => inputs.label.clone().unwrap_or_else(|| "custom".into()),
        }
    }

    /// Reduced-step diffusion weight as printed for the preset stages.
    fn printed_diffusion_weight(&self) -> Option<f64> {
        match self {
            Stage::E2E4 => Some(0.0032),
            Stage::E4E6 => Some(0.00064),
            Stage::Custom(_) => None,
        }
    }
}

/// How the reduced step's diffusion weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionMode {
    /// `2·D·dt/dx²` for every stage.
    #[default]
    Formula,
    /// The constant printed for the preset stage (half the formula value for
    /// E4–E6); custom stages fall back to the formula.
    Paper,
}

impl DiffusionMode {
    pub fn name(self) -> &'static str {
        match self {
            DiffusionMode::Formula => "formula",
            DiffusionMode::Paper => "paper",
        }
    }
}

impl std::str::FromStr for DiffusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(DiffusionMode::Formula),
            "paper" => Ok(DiffusionMode::Paper),
            other => Err(Error::Domain(format!("unknown diffusion mode '{other}' (expected formula or paper)"))),
        }
    }
}

/// Derived parameters plus the mesh selected for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSetup {
    pub derivation: StageDerivation,
    pub mesh: Mesh,
}

pub fn stage_setup(stage: &Stage) -> Result<StageSetup> {
    let derivation = derive_stage(&stage.inputs())?;
    let mesh = select_age_resolution(&derivation.params, TIME_STEP_HOURS, SECTION_LENGTH_UM)?;
    Ok(StageSetup { derivation, mesh })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRun {
    pub stage: String,
    pub setup: StageSetup,
    /// Initial interphase section totals.
    pub initial: SectionProfile,
    pub growth: AlphaBetaProfile,
    /// Expanded-domain average density of each source section, in whole
    /// cells.
    pub anchors: SectionProfile,
    /// Virtual anchor one spacing past the right end.
    pub right_anchor: f64,
    /// Interpolated profile on the expanded domain, in whole cells.
    pub interpolated: SectionProfile,
    pub diffusion_mode: DiffusionMode,
    pub diffusion_weight: f64,
    /// Largest per-section relative gap between the stepped reduced system
    /// with diffusion and its diffusionless closed form.
    pub diffusion_neglect: f64,
}

/// Runs the reduced pipeline. `initial` defaults to the annexe E2 counts for
/// E2–E4 and to the E2–E4 interpolated output for E4–E6.
pub fn reduced(stage: &Stage, initial: Option<SectionProfile>, mode: DiffusionMode) -> Result<ReducedRun> {
    let setup = stage_setup(stage)?;
    let params = &setup.derivation.params;
    let mesh = &setup.mesh;
    let coupling = params.v1 * mesh.dt / mesh.da;
    let steps = mesh.steps as u32;
    let expansion = params.expansion_factor;

    let initial = match (initial, stage) {
        (Some(p), _) => p,
        (None, Stage::E4E6) => reduced(&Stage::E2E4, None, mode)?.interpolated,
        (None, _) => data::table1().interphase(),
    };
    if initial.len() < 2 {
        return Err(Error::Contract(format!("initial profile needs at least 2 sections, got {}", initial.len())));
    }

    let growth = match stage {
        Stage::E4E6 => {
            let p = beta_profile_e4e6(initial.len())?;
            // The published profile is tied to the preset mesh coupling.
            AlphaBetaProfile::from_beta(p.beta, coupling, steps, expansion)?
        }
        _ => {
            // Calibrate on the mean section: from N0/J0 cells to the final
            // count per expanded source section, both in whole cells.
            let initial_mean = params.initial_cell_count / params.initial_sections as f64;
            let final_mean = round_count(
                setup.derivation.projected_total.cells / setup.derivation.final_sections as f64 * expansion,
            );
            let (alpha, _) = calibrate_uniform_alpha(initial_mean, final_mean, coupling, steps, expansion)?;
            AlphaBetaProfile::uniform(initial.len(), alpha, coupling, steps, expansion)?
        }
    };

    let diffusion_weight = match (mode, stage.printed_diffusion_weight()) {
        (DiffusionMode::Paper, Some(w)) => w,
        _ => aggregate::diffusion_weight(params.diffusion, mesh.dt, mesh.dx),
    };
    let closed = closed_form_growth(&initial, &growth)?;
    let stepped = induction_run(&initial, &growth, diffusion_weight)?;
    let diffusion_neglect = closed
        .values
        .iter()
        .zip(&stepped.values)
        .filter(|(c, _)| **c > 0.0)
        .map(|(c, s)| ((s - c) / c).abs())
        .fold(0.0, f64::max);

    // Averaged over the expanded copy of each section, U(K)/e = β·U(0).
    // Multiplying by β directly keeps exact halves (1.125 × 100) exact.
    let anchors = SectionProfile {
        label: format!("{} model", stage.label()),
        start: initial.start,
        values: initial.values.iter().zip(&growth.beta).map(|(u, b)| round_count(u * b)).collect(),
    };
    let last = growth.len() - 1;
    let right_anchor = round_count(growth.beta[last] * right_extrapolation_anchor(&initial)?);

    let spacing = expansion;
    // E2–E4 sections are numbered from 1 with anchors at 1 + 6(j−1); E4–E6
    // positions start at 0 with anchors at 2.4(j−1).
    let (origin, target_start, targets) = match stage {
        Stage::E4E6 => (0.0, 0, setup.derivation.final_sections + 1),
        _ => (1.0, 1, (expansion * initial.len() as f64).round() as usize),
    };
    let interpolated = interpolate_profile(&anchors, spacing, origin, target_start, targets, right_anchor)?.rounded();

    Ok(ReducedRun {
        stage: stage.label(),
        setup,
        initial,
        growth,
        anchors,
        right_anchor,
        interpolated,
        diffusion_mode: mode,
        diffusion_weight,
        diffusion_neglect,
    })
}

/// Initial interphase and mitotic section totals for a full run, and a tag
/// naming how they were obtained.
pub fn simulation_seed(stage: &Stage, setup: &StageSetup) -> Result<(SectionProfile, SectionProfile, &'static str)> {
    let p = &setup.derivation.params;
    if let Stage::E2E4 = stage {
        let t1 = data::table1();
        return Ok((t1.interphase(), t1.mitotic(), "table1"));
    }
    let interphase = match stage {
        Stage::E4E6 => reduced(&Stage::E2E4, None, DiffusionMode::Formula)?.interpolated,
        _ => SectionProfile::new(
            "uniform",
            1,
            vec![p.initial_cell_count * p.interphase_fraction / p.initial_sections as f64; p.initial_sections],
        )?,
    };
    // Mitotic cells in proportion to the time spent in mitosis.
    let ratio = (1.0 - p.interphase_fraction) / p.interphase_fraction;
    let mitotic = SectionProfile {
        label: "mitotic".into(),
        start: interphase.start,
        values: interphase.values.iter().map(|v| v * ratio).collect(),
    };
    let how = if matches!(stage, Stage::E4E6) { "chained:e2e4+phase-ratio" } else { "uniform+phase-ratio" };
    Ok((interphase, mitotic, how))
}

/// Reduced run output set against one annexe column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub name: String,
    pub report: ComparisonReport,
}

/// Comparisons of a reduced run against the model and experimental columns
/// of the annexe tables for its stage. Custom stages have none.
pub fn reproductions(run: &ReducedRun) -> Result<Vec<Reproduction>> {
    let (anchor_table, interp_table, exclusions) = match run.stage.as_str() {
        "e2e4" => (2, 3, vec![]),
        "e4e6" => (4, 5, data::table4_value_anomalies()),
        _ => return Ok(vec![]),
    };
    let mut out = Vec::new();
    for (profile, table, excl, what) in [
        (&run.anchors, anchor_table, &exclusions[..], "anchors"),
        (&run.interpolated, interp_table, &[][..], "interpolated"),
    ] {
        let t = fixture(table)?;
        for column in ["model", "experimental"] {
            let reference = t.column(column)?;
            if reference.len() != profile.len() || reference.start != profile.start {
                continue;
            }
            // Anomalies only matter when reproducing the model column.
            let excl = if column == "model" { excl } else { &[] };
            out.push(Reproduction {
                name: format!("{what}_vs_table{table}_{column}"),
                report: compare(profile, &reference, excl)?,
            });
        }
    }
    Ok(out)
}
