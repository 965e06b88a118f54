//! Shared domain types: stage parameters, the space-age-time mesh, phase
//! density fields, section profiles and comparison reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of one histological section along the cephalic-caudal axis, in µm.
pub const SECTION_LENGTH_UM: f64 = 25.0;

/// Cell-cycle compartment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// G1 + S + G2.
    Interphase,
    /// M.
    Mitosis,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Interphase => "interphase",
            Phase::Mitosis => "mitotic",
        }
    }
}

/// Calibrated parameters for one developmental interval.
///
/// `v1` and `v2` hold the literal phase rates used by the stability checks
/// and the reduced coefficients; see [`crate::params::derive_stage`] for how
/// they are obtained from cycle durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageParameters {
    /// Full cycle G1+S+G2+M, hours.
    pub cycle_duration: f64,
    pub interphase_fraction: f64,
    /// Stage length T, hours.
    pub horizon: f64,
    /// Interphase rate, 1/h.
    pub v1: f64,
    /// Mitotic rate, 1/h.
    pub v2: f64,
    /// Effective cellular diffusion D, µm²/h.
    pub diffusion: f64,
    pub initial_cell_count: f64,
    /// Cells per µm.
    pub linear_density: f64,
    /// Number of 25 µm sections at stage start.
    pub initial_sections: usize,
    /// Ratio of domain lengths across the stage.
    pub expansion_factor: f64,
}

impl StageParameters {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cycle_duration", self.cycle_duration),
            ("horizon", self.horizon),
            ("v1", self.v1),
            ("v2", self.v2),
            ("expansion_factor", self.expansion_factor),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.interphase_fraction > 0.0 && self.interphase_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "interphase_fraction must lie in (0, 1), got {}",
                self.interphase_fraction
            )));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Domain(format!(
                "diffusion must be nonnegative, got {}",
                self.diffusion
            )));
        }
        if self.initial_sections == 0 {
            return Err(Error::Domain("initial_sections must be at least 1".into()));
        }
        Ok(())
    }

    pub fn interphase_duration(&self) -> f64 {
        self.interphase_fraction * self.cycle_duration
    }

    pub fn mitosis_duration(&self) -> f64 {
        (1.0 - self.interphase_fraction) * self.cycle_duration
    }

    /// Number of full cycles completed over the horizon.
    pub fn cycles(&self) -> f64 {
        self.horizon / self.cycle_duration
    }

    pub fn initial_length(&self) -> f64 {
        self.initial_sections as f64 * SECTION_LENGTH_UM
    }

    pub fn rate(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Interphase => self.v1,
            Phase::Mitosis => self.v2,
        }
    }
}

/// The (k, i, j) lattice: `steps` time steps, `age_cells + 1` age nodes
/// (a = i·da, i = 0..=I) and `sections` spatial cells of width `dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dt: f64,
    pub da: f64,
    pub dx: f64,
    pub steps: usize,
    pub age_cells: usize,
    pub sections: usize,
}

impl Mesh {
    /// Builds a mesh for a horizon `T`, unit age interval and domain length
    /// `x₊`, so that `dt·K = T`, `da·I = 1` and `dx·J = x₊`.
    pub fn new(horizon: f64, domain_length: f64, steps: usize, age_cells: usize, sections: usize) -> Result<Self> {
        if steps == 0 || age_cells == 0 || sections == 0 {
            return Err(Error::Domain(format!(
                "mesh counts must be at least 1 (K={steps}, I={age_cells}, J={sections})"
            )));
        }
        if !(horizon > 0.0 && domain_length > 0.0) {
            return Err(Error::Domain(format!(
                "horizon and domain length must be positive (T={horizon}, x₊={domain_length})"
            )));
        }
        Ok(Mesh {
            dt: horizon / steps as f64,
            da: 1.0 / age_cells as f64,
            dx: domain_length / sections as f64,
            steps,
            age_cells,
            sections,
        })
    }

    /// Number of age nodes, `I + 1`.
    pub fn age_nodes(&self) -> usize {
        self.age_cells + 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn domain_length(&self) -> f64 {
        self.dx * self.sections as f64
    }
}

/// Cell densities of both proliferative compartments at one time index,
/// plus the accumulated postmitotic population.
///
/// Arrays are row-major over (age node i, section j) with `I + 1` rows and
/// `J` columns. Sections are the physical cells j = 1..=J of the discrete
/// model; the ghost columns j = 0 and j = J + 1 are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseField {
    age_nodes: usize,
    sections: usize,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub n3: Vec<f64>,
    pub time_index: usize,
}

impl PhaseField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::zeros_with_shape(mesh.age_nodes(), mesh.sections)
    }

    pub fn zeros_with_shape(age_nodes: usize, sections: usize) -> Self {
        PhaseField {
            age_nodes,
            sections,
            u1: vec![0.0; age_nodes * sections],
            u2: vec![0.0; age_nodes * sections],
            n3: vec![0.0; sections],
            time_index: 0,
        }
    }

    /// Fills both compartments from `f(phase, i, j)`.
    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(Phase, usize, usize) -> f64) -> Self {
        let mut field = Self::zeros(mesh);
        for i in 0..field.age_nodes {
            for j in 0..field.sections {
                field.u1[i * field.sections + j] = f(Phase::Interphase, i, j);
                field.u2[i * field.sections + j] = f(Phase::Mitosis, i, j);
            }
        }
        field
    }

    /// Spreads per-section totals uniformly over the age nodes of each
    /// compartment, so that summing over age recovers the totals.
    pub fn seeded_uniform_in_age(mesh: &Mesh, interphase: &SectionProfile, mitotic: &SectionProfile) -> Result<Self> {
        for profile in [interphase, mitotic] {
            if profile.len() != mesh.sections {
                return Err(Error::Contract(format!(
                    "profile '{}' has {} sections, mesh has {}",
                    profile.label,
                    profile.len(),
                    mesh.sections
                )));
            }
        }
        let share = 1.0 / mesh.age_nodes() as f64;
        Ok(Self::from_fn(mesh, |phase, _, j| match phase {
            Phase::Interphase => interphase.values[j] * share,
            Phase::Mitosis => mitotic.values[j] * share,
        }))
    }

    pub fn age_nodes(&self) -> usize {
        self.age_nodes
    }

    pub fn sections(&self) -> usize {
        self.sections
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.age_nodes == mesh.age_nodes()
            && self.sections == mesh.sections
            && self.u1.len() == self.age_nodes * self.sections
            && self.u2.len() == self.age_nodes * self.sections
            && self.n3.len() == self.sections
    }

    pub fn density(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::Interphase => &self.u1,
            Phase::Mitosis => &self.u2,
        }
    }

    pub fn get(&self, phase: Phase, i: usize, j: usize) -> f64 {
        self.density(phase)[i * self.sections + j]
    }

    pub fn total(&self, phase: Phase) -> f64 {
        self.density(phase).iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.u1.iter().chain(&self.u2).chain(&self.n3).all(|&v| v >= 0.0)
    }
}

/// Cells per 25 µm section, in axis order. `start` is the abscissa of the
/// first value (1 for the 1-based section numbering of the E2/E4 tables, 0
/// for the E6 abscissae).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionProfile {
    pub label: String,
    pub start: usize,
    pub values: Vec<f64>,
}

impl SectionProfile {
    pub fn new(label: impl Into<String>, start: usize, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if let Some((idx, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "profile '{label}' has invalid value {v} at section {}",
                start + idx
            )));
        }
        Ok(SectionProfile { label, start, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `(abscissa, value)` pairs.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| (self.start + k, v))
    }

    pub fn value_at(&self, index: usize) -> Option<f64> {
        index.checked_sub(self.start).and_then(|k| self.values.get(k).copied())
    }

    /// Whole-cell presentation of the profile.
    pub fn rounded(&self) -> SectionProfile {
        SectionProfile {
            label: self.label.clone(),
            start: self.start,
            values: self.values.iter().map(|&v| round_count(v)).collect(),
        }
    }

    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Round half away from zero, used wherever counts are presented.
pub fn round_count(value: f64) -> f64 {
    value.round()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionDelta {
    pub index: usize,
    pub model: f64,
    pub reference: f64,
    /// `model - reference`.
    pub delta: f64,
}

/// Per-section deviations between a model profile and a reference profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub per_section_delta: Vec<SectionDelta>,
    /// Section indices left out of the aggregates.
    pub excluded: Vec<usize>,
    pub max_abs_delta: f64,
    /// Index of the first section attaining `max_abs_delta`.
    pub max_abs_index: Option<usize>,
    pub mean_abs_delta: f64,
    pub rmse: f64,
    pub fraction_within_one: f64,
}

impl ComparisonReport {
    pub fn from_deltas(per_section_delta: Vec<SectionDelta>, excluded: Vec<usize>) -> Self {
        let n = per_section_delta.len();
        let mut max_abs_delta = 0.0;
        let mut max_abs_index = None;
        for d in &per_section_delta {
            if max_abs_index.is_none() || d.delta.abs() > max_abs_delta {
                max_abs_delta = d.delta.abs();
                max_abs_index = Some(d.index);
            }
        }
        let (mean_abs_delta, rmse, fraction_within_one) = if n == 0 {
            (0.0, 0.0, 1.0)
        } else {
            let nf = n as f64;
            let sum_abs: f64 = per_section_delta.iter().map(|d| d.delta.abs()).sum();
            let sum_sq: f64 = per_section_delta.iter().map(|d| d.delta * d.delta).sum();
            let within = per_section_delta.iter().filter(|d| within_one(d.delta)).count();
            (sum_abs / nf, (sum_sq / nf).sqrt(), within as f64 / nf)
        };
        ComparisonReport {
            per_section_delta,
            excluded,
            max_abs_delta,
            max_abs_index,
            mean_abs_delta,
            rmse,
            fraction_within_one,
        }
    }

    pub fn count_within_one(&self) -> usize {
        self.per_section_delta.iter().filter(|d| within_one(d.delta)).count()
    }

    /// Sections whose deviation exceeds one cell.
    pub fn outside_one(&self) -> Vec<&SectionDelta> {
        self.per_section_delta.iter().filter(|d| !within_one(d.delta)).collect()
    }

    /// Recomputes the aggregates from the per-section list.
    pub fn is_self_consistent(&self) -> bool {
        let again = Self::from_deltas(self.per_section_delta.clone(), self.excluded.clone());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        close(again.max_abs_delta, self.max_abs_delta)
            && close(again.mean_abs_delta, self.mean_abs_delta)
            && close(again.rmse, self.rmse)
            && close(again.fraction_within_one, self.fraction_within_one)
            && again.max_abs_index == self.max_abs_index
    }
}

fn within_one(delta: f64) -> bool {
    delta.abs() <= 1.0 + 1e-9
}

/// Number of full cycles over a horizon: `horizon / cycle_duration`.
pub fn growth_exponent(horizon: f64, cycle_duration: f64) -> Result<f64> {
    if !(horizon > 0.0 && cycle_duration > 0.0) {
        return Err(Error::Domain(format!(
            "horizon and cycle duration must be positive (got {horizon}, {cycle_duration})"
        )));
    }
    Ok(horizon / cycle_duration)
}

/// Population after `exponent` doublings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedTotal {
    pub value: f64,
    pub cells: f64,
}

pub fn projected_total(initial: f64, exponent: f64) -> Result<ProjectedTotal> {
    if !(initial >= 0.0) || !exponent.is_finite() {
        return Err(Error::Domain(format!(
            "initial count must be nonnegative and exponent finite (got {initial}, {exponent})"
        )));
    }
    let value = initial * exponent.exp2();
    Ok(ProjectedTotal {
        value,
        cells: round_count(value),
    })
}
