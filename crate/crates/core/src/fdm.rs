//! Explicit finite-difference solver for the two-compartment age/space
//! transport-diffusion system.
//!
//! Each compartment is advanced with first-order upwinding in age and
//! centred second differences in space:
//!
//! ```text
//! u(k+1,i,j) = u(k,i,j) - v·dt/da·(u(k,i,j) - u(k,i-1,j))
//!            + D·dt/dx²·(u(k,i,j+1) - 2u(k,i,j) + u(k,i,j-1))
//! ```
//!
//! for i = 1..=I, with mirrored ghost sections at both ends of the axis.
//! The age-0 rows are then set from the division coupling
//!
//! ```text
//! v2·u2(k+1,0,j) = v1·u1(k+1,I,j)
//! v1·u1(k+1,0,j) = (2 - q(k,j))·v2·u2(k+1,I,j)
//! ```
//!
//! and postmitotic neurons accumulate as `n3 += dt·q·v2·u2(k,I,j)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mesh, Phase, PhaseField, SectionProfile, StageParameters};
use crate::params::check_cfl;

/// Fraction of divisions that are asymmetric (one daughter leaves the
/// proliferative pool), over time step and section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DifferentiationSchedule {
    Constant(f64),
    /// Row-major `rows × sections` table. Row `k` applies at time step `k`;
    /// steps past the last row reuse it.
    Table { sections: usize, values: Vec<f64> },
}

impl DifferentiationSchedule {
    pub fn constant(q: f64) -> Result<Self> {
        check_fraction(q, 0, 0)?;
        Ok(DifferentiationSchedule::Constant(q))
    }

    pub fn table(sections: usize, values: Vec<f64>) -> Result<Self> {
        if sections == 0 || values.is_empty() || values.len() % sections != 0 {
            return Err(Error::Contract(format!(
                "differentiation table of {} values does not split into rows of {sections} sections",
                values.len()
            )));
        }
        for (n, &q) in values.iter().enumerate() {
            check_fraction(q, n / sections, n % sections)?;
        }
        Ok(DifferentiationSchedule::Table { sections, values })
    }

    /// Reads `section,q` rows (time-invariant) or `step,section,q` rows.
    /// Sections are 1-based; steps are 0-based.
    pub fn from_csv(path: &Path, sections: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, sections)
    }

    pub fn parse_csv(text: &str, sections: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
            .clone();
        let timed = match headers.iter().collect::<Vec<_>>().as_slice() {
            ["section", "q"] => false,
            ["step", "section", "q"] => true,
            other => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header 'section,q' or 'step,section,q', got {other:?}"),
                })
            }
        };
        let mut entries = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let line = n + 2;
            let record = record.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            let field = |idx: usize| -> Result<f64> {
                record
                    .get(idx)
                    .ok_or_else(|| Error::Parse { line, message: "missing column".into() })?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line, message: e.to_string() })
            };
            let (step, section, q) = if timed {
                (field(0)?, field(1)?, field(2)?)
            } else {
                (0.0, field(0)?, field(1)?)
            };
            if step < 0.0 || step.fract() != 0.0 || section < 1.0 || section.fract() != 0.0 || section as usize > sections {
                return Err(Error::Parse {
                    line,
                    message: format!("step {step} / section {section} out of range 1..={sections}"),
                });
            }
            entries.push((step as usize, section as usize - 1, q));
        }
        let rows = entries.iter().map(|e| e.0 + 1).max().unwrap_or(1);
        let mut values = vec![f64::NAN; rows * sections];
        for (step, section, q) in entries {
            values[step * sections + section] = q;
        }
        if let Some(n) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Validation(format!(
                "differentiation table has no entry for step {} section {}",
                n / sections,
                n % sections + 1
            )));
        }
        Self::table(sections, values)
    }

    pub fn at(&self, step: usize, section: usize) -> f64 {
        match self {
            DifferentiationSchedule::Constant(q) => *q,
            DifferentiationSchedule::Table { sections, values } => {
                let rows = values.len() / sections;
                values[step.min(rows - 1) * sections + section]
            }
        }
    }

    fn sections(&self) -> Option<usize> {
        match self {
            DifferentiationSchedule::Constant(_) => None,
            DifferentiationSchedule::Table { sections, .. } => Some(*sections),
        }
    }
}

fn check_fraction(q: f64, step: usize, section: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "differentiation rate {q} at step {step}, section {} is outside [0, 1]",
            section + 1
        )));
    }
    Ok(())
}

/// External source terms and prescribed age-0 inflow, replacing the
/// division coupling. Used to verify the scheme against manufactured
/// solutions.
pub trait Forcing {
    /// Source added to the right-hand side at `(t, a, x)`.
    fn source(&self, phase: Phase, t: f64, a: f64, x: f64) -> f64;
    /// Density at age 0 at time `t`.
    fn inflow(&self, phase: Phase, t: f64, x: f64) -> f64;
}

/// Cell-centred abscissa of section `j` (0-based).
pub fn section_centre(mesh: &Mesh, j: usize) -> f64 {
    (j as f64 + 0.5) * mesh.dx
}

/// Advances the field by one time step under the model's division coupling.
pub fn step(
    field: &PhaseField,
    mesh: &Mesh,
    params: &StageParameters,
    q: &DifferentiationSchedule,
) -> Result<PhaseField> {
    check_step_inputs(field, mesh, params, q)?;
    if field.time_index == 0 {
        warn_incompatible(field, params);
    }
    Ok(advance(field, mesh, params, Boundary::Division(q)))
}

/// Advances the field by one time step with external forcing in place of the
/// division coupling.
pub fn step_forced(
    field: &PhaseField,
    mesh: &Mesh,
    params: &StageParameters,
    forcing: &dyn Forcing,
) -> Result<PhaseField> {
    check_step_inputs(field, mesh, params, &DifferentiationSchedule::Constant(0.0))?;
    Ok(advance(field, mesh, params, Boundary::Forced(forcing)))
}

fn check_step_inputs(field: &PhaseField, mesh: &Mesh, params: &StageParameters, q: &DifferentiationSchedule) -> Result<()> {
    if !field.matches(mesh) {
        return Err(Error::Contract(format!(
            "field shape {}×{} does not match mesh {}×{}",
            field.age_nodes(),
            field.sections(),
            mesh.age_nodes(),
            mesh.sections
        )));
    }
    if let Some(sections) = q.sections() {
        if sections != mesh.sections {
            return Err(Error::Contract(format!(
                "differentiation table has {sections} sections, mesh has {}",
                mesh.sections
            )));
        }
    }
    if !(params.v1 >= 0.0 && params.v2 >= 0.0 && params.diffusion >= 0.0) {
        return Err(Error::Domain("phase rates and diffusion must be nonnegative".into()));
    }
    check_cfl(params, mesh)
}

enum Boundary<'a> {
    Division(&'a DifferentiationSchedule),
    Forced(&'a dyn Forcing),
}

fn advance(field: &PhaseField, mesh: &Mesh, params: &StageParameters, boundary: Boundary<'_>) -> PhaseField {
    let ages = mesh.age_nodes();
    let last = mesh.age_cells;
    let sections = mesh.sections;
    let k = field.time_index;
    let t = k as f64 * mesh.dt;
    let diffusion_number = params.diffusion * mesh.dt / (mesh.dx * mesh.dx);

    let mut next = PhaseField::zeros_with_shape(ages, sections);
    next.time_index = k + 1;

    for phase in [Phase::Interphase, Phase::Mitosis] {
        let u = field.density(phase);
        let courant = params.rate(phase) * mesh.dt / mesh.da;
        let out = match phase {
            Phase::Interphase => &mut next.u1,
            Phase::Mitosis => &mut next.u2,
        };
        // Age 0 is overwritten below unless the phase does not move in age.
        let first = if params.rate(phase) > 0.0 { 1 } else { 0 };
        for i in first..ages {
            let row = i * sections;
            for j in 0..sections {
                let centre = u[row + j];
                let left = u[row + j.saturating_sub(1)];
                let right = u[row + (j + 1).min(sections - 1)];
                let upwind = if i > 0 { u[row - sections + j] } else { centre };
                let mut value = centre - courant * (centre - upwind) + diffusion_number * (right - 2.0 * centre + left);
                if let Boundary::Forced(forcing) = boundary {
                    value += mesh.dt * forcing.source(phase, t, i as f64 * mesh.da, section_centre(mesh, j));
                }
                out[row + j] = value;
            }
        }
    }

    match boundary {
        Boundary::Division(q) => {
            for j in 0..sections {
                if params.v2 > 0.0 {
                    next.u2[j] = params.v1 * next.u1[last * sections + j] / params.v2;
                }
                if params.v1 > 0.0 {
                    next.u1[j] = (2.0 - q.at(k, j)) * params.v2 * next.u2[last * sections + j] / params.v1;
                }
                next.n3[j] = field.n3[j] + mesh.dt * q.at(k, j) * params.v2 * field.u2[last * sections + j];
            }
        }
        Boundary::Forced(forcing) => {
            let t_next = (k + 1) as f64 * mesh.dt;
            for j in 0..sections {
                let x = section_centre(mesh, j);
                if params.v1 > 0.0 {
                    next.u1[j] = forcing.inflow(Phase::Interphase, t_next, x);
                }
                if params.v2 > 0.0 {
                    next.u2[j] = forcing.inflow(Phase::Mitosis, t_next, x);
                }
                next.n3[j] = field.n3[j];
            }
        }
    }
    next
}

/// Largest violation of the discrete compatibility condition
/// `v1·u1(I,j) = v2·u2(0,j)` over sections.
pub fn compatibility_violation(field: &PhaseField, params: &StageParameters) -> f64 {
    let sections = field.sections();
    let last = field.age_nodes() - 1;
    (0..sections)
        .map(|j| (params.v1 * field.u1[last * sections + j] - params.v2 * field.u2[j]).abs())
        .fold(0.0, f64::max)
}

fn warn_incompatible(field: &PhaseField, params: &StageParameters) {
    let violation = compatibility_violation(field, params);
    if violation > 1e-9 {
        log::warn!("initial data violate v1·u1(I,j) = v2·u2(0,j); max violation {violation:.6}");
    }
}

/// Whole-domain totals of each compartment at one time index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTotals {
    pub step: usize,
    pub interphase: f64,
    pub mitotic: f64,
    pub postmitotic: f64,
    /// `da·Σ_{i≥1}(u1 + u2)`: the age integral that the scheme's fluxes
    /// balance exactly. It changes per step by `dt·Σ_j (1−q)·v2·u2(I,j)`
    /// once the boundary coupling holds, so it cannot decrease.
    pub proliferative_cells: f64,
}

impl StepTotals {
    fn of(field: &PhaseField, da: f64) -> Self {
        let skip_age_zero = field.sections();
        let integral = |p: Phase| field.density(p)[skip_age_zero..].iter().sum::<f64>() * da;
        StepTotals {
            step: field.time_index,
            interphase: field.total(Phase::Interphase),
            mitotic: field.total(Phase::Mitosis),
            postmitotic: field.n3.iter().sum(),
            proliferative_cells: integral(Phase::Interphase) + integral(Phase::Mitosis),
        }
    }

    pub fn proliferative(&self) -> f64 {
        self.interphase + self.mitotic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Totals at every time index, starting with the initial field.
    pub totals: Vec<StepTotals>,
    /// Compatibility violation of the initial field.
    pub initial_compatibility_violation: f64,
}

/// Applies [`step`] `mesh.steps` times.
pub fn run(
    initial: &PhaseField,
    mesh: &Mesh,
    params: &StageParameters,
    q: &DifferentiationSchedule,
) -> Result<(PhaseField, Trajectory)> {
    run_for(initial, mesh, params, q, mesh.steps)
}

pub fn run_for(
    initial: &PhaseField,
    mesh: &Mesh,
    params: &StageParameters,
    q: &DifferentiationSchedule,
    steps: usize,
) -> Result<(PhaseField, Trajectory)> {
    check_step_inputs(initial, mesh, params, q)?;
    let initial_compatibility_violation = compatibility_violation(initial, params);
    let mut totals = Vec::with_capacity(steps + 1);
    totals.push(StepTotals::of(initial, mesh.da));
    let mut field = initial.clone();
    for _ in 0..steps {
        field = step(&field, mesh, params, q)?;
        totals.push(StepTotals::of(&field, mesh.da));
    }
    Ok((
        field,
        Trajectory {
            totals,
            initial_compatibility_violation,
        },
    ))
}

/// Sum over age of the interphase density in every section.
pub fn section_totals(field: &PhaseField) -> SectionProfile {
    phase_section_totals(field, Phase::Interphase)
}

pub fn phase_section_totals(field: &PhaseField, phase: Phase) -> SectionProfile {
    let sections = field.sections();
    let density = field.density(phase);
    let values = (0..sections)
        .map(|j| (0..field.age_nodes()).map(|i| density[i * sections + j]).sum())
        .collect();
    SectionProfile {
        label: format!("{} section totals", phase.name()),
        start: 1,
        values,
    }
}

pub fn postmitotic_profile(field: &PhaseField) -> SectionProfile {
    SectionProfile {
        label: "postmitotic".into(),
        start: 1,
        values: field.n3.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::params::{derive_stage, select_age_resolution, BiologicalInputs};
    use approx::assert_relative_eq;

    fn e2e4() -> (StageParameters, Mesh) {
        let params = derive_stage(&BiologicalInputs::e2e4()).unwrap().params;
        let mesh = select_age_resolution(&params, 1.0 / 6.0, 25.0).unwrap();
        (params, mesh)
    }

    fn toy() -> (StageParameters, Mesh) {
        let params = StageParameters {
            v1: 1.0,
            v2: 2.0,
            diffusion: 1.0,
            ..e2e4().0
        };
        // I = 2, J = 1, dt = 0.1, dx = 1.
        let mesh = Mesh {
            dt: 0.1,
            da: 0.5,
            dx: 1.0,
            steps: 1,
            age_cells: 2,
            sections: 1,
        };
        (params, mesh)
    }

    #[test]
    fn uniform_field_is_steady_without_transport() {
        let (params, mesh) = e2e4();
        let still = StageParameters {
            v1: 0.0,
            v2: 0.0,
            ..params
        };
        let field = PhaseField::from_fn(&mesh, |_, _, _| 3.0);
        let next = step(&field, &mesh, &still, &DifferentiationSchedule::Constant(0.0)).unwrap();
        assert_eq!(next.u1, field.u1);
        assert_eq!(next.u2, field.u2);
    }

    #[test]
    fn interior_weights_for_e2e4() {
        let (params, mesh) = e2e4();
        let sections = mesh.sections;
        // Unit impulse at (i, j) = (4, 7) of the interphase compartment.
        let mut field = PhaseField::zeros(&mesh);
        field.u1[4 * sections + 7] = 1.0;
        let next = step(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0)).unwrap();
        assert_relative_eq!(next.u1[4 * sections + 7], 1.0 - 0.9 - 0.0032, epsilon = 1e-12);
        assert_relative_eq!(next.u1[5 * sections + 7], 0.9, epsilon = 1e-12);
        assert_relative_eq!(next.u1[4 * sections + 8], 0.0016, epsilon = 1e-12);
        assert_relative_eq!(next.u1[4 * sections + 6], 0.0016, epsilon = 1e-12);
    }

    #[test]
    fn full_differentiation_keeps_one_daughter() {
        let (params, mesh) = e2e4();
        let field = PhaseField::from_fn(&mesh, |_, _, _| 1.0);
        let q = DifferentiationSchedule::Constant(1.0);
        let next = step(&field, &mesh, &params, &q).unwrap();
        let s = mesh.sections;
        let last = mesh.age_cells;
        for j in 0..s {
            assert_relative_eq!(params.v1 * next.u1[j], params.v2 * next.u2[last * s + j], epsilon = 1e-12);
            assert_relative_eq!(next.n3[j], mesh.dt * params.v2 * field.u2[last * s + j], epsilon = 1e-15);
        }
    }

    // Hand evaluation on I = 2, J = 1 with v1 = 1, v2 = 2, D = 1, dt = 0.1,
    // da = 0.5, dx = 1: courant 0.2 / 0.4, diffusion number 0.1, and the
    // single section's ghosts equal itself so diffusion drops out.
    //   u1 = (1, 2, 3) -> interior i=1: 2 - 0.2·(2-1) = 1.8; i=2: 3 - 0.2·(3-2) = 2.8
    //   u2 = (4, 5, 6) -> i=1: 5 - 0.4·(5-4) = 4.6; i=2: 6 - 0.4·(6-5) = 5.6
    //   u2(0) = v1·u1(I)/v2 = 2.8/2 = 1.4
    //   u1(0) = 2·v2·u2(I)/v1 = 2·2·5.6 = 22.4
    #[test]
    fn toy_grid_golden() {
        let (params, mesh) = toy();
        let mut field = PhaseField::zeros(&mesh);
        field.u1 = vec![1.0, 2.0, 3.0];
        field.u2 = vec![4.0, 5.0, 6.0];
        let next = step(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0)).unwrap();
        let expect_u1 = [22.4, 1.8, 2.8];
        let expect_u2 = [1.4, 4.6, 5.6];
        for i in 0..3 {
            assert_relative_eq!(next.u1[i], expect_u1[i], epsilon = 1e-12);
            assert_relative_eq!(next.u2[i], expect_u2[i], epsilon = 1e-12);
        }
        assert_eq!(next.n3, vec![0.0]);
        assert_eq!(next.time_index, 1);
    }

    #[test]
    fn zero_steps_returns_initial() {
        let (params, mesh) = e2e4();
        let field = PhaseField::from_fn(&mesh, |_, i, j| (i + j) as f64);
        let (out, traj) = run_for(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0), 0).unwrap();
        assert_eq!(out, field);
        assert_eq!(traj.totals.len(), 1);
    }

    #[test]
    fn uniform_start_stays_uniform_without_diffusion() {
        let (params, mesh) = e2e4();
        let params = StageParameters { diffusion: 0.0, ..params };
        let field = PhaseField::from_fn(&mesh, |p, i, _| match p {
            Phase::Interphase => 1.0 + i as f64,
            Phase::Mitosis => 0.5,
        });
        let (out, _) = run_for(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0), 40).unwrap();
        let totals = section_totals(&out);
        for v in &totals.values {
            assert_relative_eq!(*v, totals.values[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let (params, mesh) = e2e4();
        let coarse = Mesh { da: 0.09, ..mesh };
        let field = PhaseField::zeros(&coarse);
        let err = step(&field, &coarse, &params, &DifferentiationSchedule::Constant(0.0)).unwrap_err();
        assert!(matches!(err, Error::Stability { phase: "interphase", .. }), "{err}");
    }

    #[test]
    fn shape_mismatch_is_a_contract_error() {
        let (params, mesh) = e2e4();
        let field = PhaseField::zeros_with_shape(3, 16);
        let err = step(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn section_totals_sum_over_age() {
        let (_, mesh) = e2e4();
        assert!(section_totals(&PhaseField::zeros(&mesh)).values.iter().all(|&v| v == 0.0));
        let ones = PhaseField::from_fn(&mesh, |_, _, _| 1.0);
        assert!(section_totals(&ones).values.iter().all(|&v| v == 11.0));
    }

    #[test]
    fn table_one_embedding_recovers_counts() {
        let (_, mesh) = e2e4();
        let t1 = data::table1();
        let field = PhaseField::seeded_uniform_in_age(&mesh, &t1.interphase(), &t1.mitotic()).unwrap();
        let totals = section_totals(&field);
        for (got, want) in totals.values.iter().zip(&t1.interphase().values) {
            assert_relative_eq!(*got, *want, epsilon = 1e-12);
        }
        let mitotic = phase_section_totals(&field, Phase::Mitosis);
        assert_relative_eq!(mitotic.total(), 18.0, epsilon = 1e-12);
    }

    #[test]
    fn table_one_run_is_frozen() {
        let (params, mesh) = e2e4();
        let t1 = data::table1();
        let field = PhaseField::seeded_uniform_in_age(&mesh, &t1.interphase(), &t1.mitotic()).unwrap();
        let (_, traj) = run(&field, &mesh, &params, &DifferentiationSchedule::Constant(0.0)).unwrap();
        assert_eq!(traj.totals.len(), 289);
        let end = traj.totals.last().unwrap();
        // Far from the 9241 cells the calibrated exponent predicts: the raw
        // scheme with these rates and uniform-in-age seeding grows slowly.
        assert_relative_eq!(end.proliferative(), FROZEN_NODE_SUM, max_relative = 1e-9);
        assert_relative_eq!(end.proliferative_cells, FROZEN_CELLS, max_relative = 1e-9);
        assert_eq!(end.postmitotic, 0.0);
        assert!(traj.totals.windows(2).all(|w| w[1].proliferative_cells >= w[0].proliferative_cells));
    }

    const FROZEN_NODE_SUM: f64 = 1395.8722657408903;
    const FROZEN_CELLS: f64 = 120.2024662265257;

    proptest::proptest! {
        #[test]
        fn random_runs_keep_invariants(
            values in proptest::collection::vec(0.0f64..50.0, 2 * 4 * 3),
            q in 0.0f64..=1.0,
            steps in 1usize..30,
        ) {
            // I = 3, J = 3, well inside the stable region.
            let mesh = Mesh { dt: 0.1, da: 1.0 / 3.0, dx: 1.0, steps, age_cells: 3, sections: 3 };
            let params = StageParameters { v1: 2.0, v2: 1.5, diffusion: 0.5, ..e2e4().0 };
            let mut field = PhaseField::zeros(&mesh);
            field.u1.copy_from_slice(&values[..12]);
            field.u2.copy_from_slice(&values[12..]);
            let schedule = DifferentiationSchedule::Constant(q);
            let (out, traj) = run(&field, &mesh, &params, &schedule).unwrap();
            proptest::prop_assert!(out.is_nonnegative());
            for w in traj.totals.windows(2).skip(1) {
                proptest::prop_assert!(w[1].proliferative_cells >= w[0].proliferative_cells * (1.0 - 1e-12));
            }
            if q == 0.0 {
                for j in 0..3 {
                    let lhs = params.v1 * out.u1[j];
                    let rhs = 2.0 * params.v2 * out.u2[3 * 3 + j];
                    proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
                }
            }

            let still = StageParameters { v1: 0.0, v2: 0.0, ..params };
            let (diffused, _) = run(&field, &mesh, &still, &schedule).unwrap();
            for i in 0..4 {
                let before: f64 = field.u1[3 * i..3 * i + 3].iter().sum();
                let after: f64 = diffused.u1[3 * i..3 * i + 3].iter().sum();
                proptest::prop_assert!((before - after).abs() <= 1e-12 * before.max(1e-300));
            }
        }
    }

    #[test]
    fn schedule_parsing() {
        let q = DifferentiationSchedule::parse_csv("section,q\n1,0.5\n2,0.25\n", 2).unwrap();
        assert_eq!(q.at(0, 1), 0.25);
        assert_eq!(q.at(100, 0), 0.5);
        let q = DifferentiationSchedule::parse_csv("step,section,q\n0,1,0\n1,1,1\n", 1).unwrap();
        assert_eq!((q.at(0, 0), q.at(1, 0), q.at(7, 0)), (0.0, 1.0, 1.0));
        assert!(DifferentiationSchedule::parse_csv("section,q\n1,1.5\n", 1).is_err());
        assert!(DifferentiationSchedule::parse_csv("section,q\n1,0.5\n", 2).is_err());
        assert!(DifferentiationSchedule::parse_csv("x,y\n", 1).is_err());
        assert!(DifferentiationSchedule::constant(-0.1).is_err());
    }
}
