//! Executable checks of the solver: refinement studies against a
//! manufactured solution, equivalence with a naive re-implementation, and
//! profile comparison reports.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::format_number;
use crate::error::{Error, Result};
use crate::fdm::{self, DifferentiationSchedule, Forcing};
use crate::model::{ComparisonReport, Mesh, Phase, PhaseField, SectionDelta, SectionProfile, StageParameters};
use crate::params::cfl_margin;

/// Stage parameters carrying only what the solver reads.
fn solver_params(v1: f64, v2: f64, diffusion: f64, horizon: f64) -> StageParameters {
    StageParameters {
        cycle_duration: 1.0,
        interphase_fraction: 0.5,
        horizon,
        v1,
        v2,
        diffusion,
        initial_cell_count: 1.0,
        linear_density: 1.0,
        initial_sections: 1,
        expansion_factor: 1.0,
    }
}

/// `u(t,a,x) = A·e^{t/T}·(1+a)²·(2 + cos(πx/L))`, used for both compartments.
///
/// The quadratic age dependence matters: with `(1+a)` the upwind difference
/// is exact and the age error vanishes identically.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub amplitude: f64,
    pub horizon: f64,
    pub length: f64,
    pub velocity: f64,
    pub diffusion: f64,
}

impl Manufactured {
    pub fn exact(&self, t: f64, a: f64, x: f64) -> f64 {
        self.amplitude * (t / self.horizon).exp() * (1.0 + a).powi(2) * (2.0 + (PI * x / self.length).cos())
    }
}

impl Forcing for Manufactured {
    fn source(&self, _phase: Phase, t: f64, a: f64, x: f64) -> f64 {
        let growth = self.amplitude * (t / self.horizon).exp();
        let k = PI / self.length;
        let shape = 2.0 + (k * x).cos();
        growth / self.horizon * (1.0 + a).powi(2) * shape
            + self.velocity * growth * 2.0 * (1.0 + a) * shape
            + self.diffusion * growth * (1.0 + a).powi(2) * k * k * (k * x).cos()
    }

    fn inflow(&self, _phase: Phase, t: f64, x: f64) -> f64 {
        self.exact(t, 0.0, x)
    }
}

/// Which mesh spacing a study refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    Dt,
    Da,
    Dx,
    /// All three at once, with dt shrinking fast enough to stay stable.
    All,
}

impl Refinement {
    pub fn name(self) -> &'static str {
        match self {
            Refinement::Dt => "dt",
            Refinement::Da => "da",
            Refinement::Dx => "dx",
            Refinement::All => "all",
        }
    }

    pub fn nominal_order(self) -> Option<f64> {
        match self {
            Refinement::Dt | Refinement::Da => Some(1.0),
            Refinement::Dx => Some(2.0),
            Refinement::All => None,
        }
    }

    /// Mesh counts `(K, I, J)` and diffusion coefficient at `level`. The
    /// spacings not under study are fine enough that their error sits well
    /// below the one being measured.
    fn setup(self, level: u32) -> (usize, usize, usize, f64) {
        let p = 1usize << level;
        match self {
            Refinement::Dt => (25 * p, 100, 8, 0.05),
            Refinement::Da => (2000, 4 * p, 32, 0.05),
            Refinement::Dx => (4000, 400, 4 * p, 0.2),
            Refinement::All => (50 * p * p, 8 * p, 4 * p, 0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub level: u32,
    pub dt: f64,
    pub da: f64,
    pub dx: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub refinement: Refinement,
    pub rows: Vec<LevelError>,
    /// Mean of `log2(e_l / e_{l+1})` over consecutive levels.
    pub observed_order: f64,
    pub nominal_order: Option<f64>,
}

impl Study {
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].max_error <= w[0].max_error)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.nominal_order
            .map_or(true, |n| (self.observed_order - n).abs() <= tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: u32,
    pub studies: Vec<Study>,
}

impl ConvergenceReport {
    pub fn study(&self, refinement: Refinement) -> &Study {
        self.studies.iter().find(|s| s.refinement == refinement).expect("all studies are run")
    }
}

pub const MMS_HORIZON: f64 = 1.0;
pub const MMS_LENGTH: f64 = 1.0;
pub const MMS_VELOCITY: f64 = 0.1;
pub const ORDER_TOLERANCE: f64 = 0.3;

/// Runs the solver on the manufactured solution over `levels` refinements
/// of each spacing separately and of all of them together.
pub fn manufactured_convergence(levels: u32) -> Result<ConvergenceReport> {
    manufactured_convergence_with(levels, 1.0)
}

pub fn manufactured_convergence_with(levels: u32, amplitude: f64) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Domain(format!("a refinement study needs at least 2 levels, got {levels}")));
    }
    let studies = [Refinement::Dt, Refinement::Da, Refinement::Dx, Refinement::All]
        .into_iter()
        .map(|r| run_study(r, levels, amplitude))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { levels, studies })
}

fn run_study(refinement: Refinement, levels: u32, amplitude: f64) -> Result<Study> {
    let mut rows = Vec::with_capacity(levels as usize);
    for level in 0..levels {
        let (k, i, j, diffusion) = refinement.setup(level);
        let mesh = Mesh::new(MMS_HORIZON, MMS_LENGTH, k, i, j)?;
        let params = solver_params(MMS_VELOCITY, MMS_VELOCITY, diffusion, MMS_HORIZON);
        let margin = cfl_margin(&params, &mesh, MMS_VELOCITY);
        if margin > 1.0 {
            return Err(Error::Infeasible(format!(
                "{} refinement level {level} (K={k}, I={i}, J={j}) has CFL margin {margin:.4} > 1",
                refinement.name()
            )));
        }
        let solution = Manufactured {
            amplitude,
            horizon: MMS_HORIZON,
            length: MMS_LENGTH,
            velocity: MMS_VELOCITY,
            diffusion,
        };
        rows.push(LevelError {
            level,
            dt: mesh.dt,
            da: mesh.da,
            dx: mesh.dx,
            max_error: mms_error(&mesh, &params, &solution)?,
        });
    }
    let ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[0].max_error / w[1].max_error).log2())
        .filter(|r| r.is_finite())
        .collect();
    let observed_order = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    Ok(Study {
        refinement,
        rows,
        observed_order,
        nominal_order: refinement.nominal_order(),
    })
}

/// Largest nodal error over all time steps.
fn mms_error(mesh: &Mesh, params: &StageParameters, solution: &Manufactured) -> Result<f64> {
    let sections = mesh.sections;
    let ages: Vec<f64> = (0..mesh.age_nodes()).map(|i| (1.0 + i as f64 * mesh.da).powi(2)).collect();
    let shape: Vec<f64> = (0..sections)
        .map(|j| 2.0 + (PI * fdm::section_centre(mesh, j) / solution.length).cos())
        .collect();
    let mut field = PhaseField::from_fn(mesh, |_, i, j| solution.amplitude * ages[i] * shape[j]);
    let mut worst: f64 = 0.0;
    for k in 1..=mesh.steps {
        field = fdm::step_forced(&field, mesh, params, solution)?;
        let scale = solution.amplitude * (k as f64 * mesh.dt / solution.horizon).exp();
        for (i, age) in ages.iter().enumerate() {
            for (j, s) in shape.iter().enumerate() {
                let exact = scale * age * s;
                let n = i * sections + j;
                worst = worst.max((field.u1[n] - exact).abs()).max((field.u2[n] - exact).abs());
            }
        }
    }
    Ok(worst)
}

pub fn convergence_csv(study: &Study) -> String {
    let mut out = String::from("level,dt,da,dx,max_error\n");
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6e}",
            r.level,
            format_number(r.dt),
            format_number(r.da),
            format_number(r.dx),
            r.max_error
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub refinement: Refinement,
    pub observed_order: f64,
    pub nominal_order: Option<f64>,
    pub within_tolerance: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub levels: u32,
    pub tolerance: f64,
    pub orders: Vec<OrderSummary>,
}

pub fn convergence_summary(report: &ConvergenceReport) -> ConvergenceSummary {
    ConvergenceSummary {
        levels: report.levels,
        tolerance: ORDER_TOLERANCE,
        orders: report
            .studies
            .iter()
            .map(|s| OrderSummary {
                refinement: s.refinement,
                observed_order: s.observed_order,
                nominal_order: s.nominal_order,
                within_tolerance: s.within(ORDER_TOLERANCE),
                monotone: s.is_monotone(),
            })
            .collect(),
    }
}

/// Naive evaluation of one explicit step, written independently of
/// [`fdm::step`]: padded arrays with explicit ghost columns and the
/// boundary coupling spelled out per phase. `perturbation` is added to
/// one interior node so the comparison itself can be tested.
fn naive_step(
    u1: &[Vec<f64>],
    u2: &[Vec<f64>],
    n3: &[f64],
    v: [f64; 2],
    d: f64,
    dt: f64,
    da: f64,
    dx: f64,
    q: &[f64],
    perturbation: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let big_i = u1.len() - 1;
    let big_j = u1[0].len();
    let pad = |u: &[Vec<f64>]| -> Vec<Vec<f64>> {
        u.iter()
            .map(|row| {
                let mut p = vec![row[0]];
                p.extend_from_slice(row);
                p.push(row[big_j - 1]);
                p
            })
            .collect()
    };
    let mut new = [vec![vec![0.0; big_j]; big_i + 1], vec![vec![0.0; big_j]; big_i + 1]];
    for (c, u) in [pad(u1), pad(u2)].iter().enumerate() {
        for i in 0..=big_i {
            for jj in 1..=big_j {
                let diff = d * dt / (dx * dx) * (u[i][jj + 1] - 2.0 * u[i][jj] + u[i][jj - 1]);
                new[c][i][jj - 1] = if i == 0 {
                    if v[c] == 0.0 {
                        u[0][jj] + diff
                    } else {
                        0.0
                    }
                } else {
                    u[i][jj] - v[c] * dt / da * (u[i][jj] - u[i - 1][jj]) + diff
                };
            }
        }
    }
    let [mut a, mut b] = new;
    if big_i >= 1 {
        a[1][0] += perturbation;
    }
    let mut n3_new = n3.to_vec();
    for j in 0..big_j {
        if v[1] != 0.0 {
            b[0][j] = v[0] * a[big_i][j] / v[1];
        }
        if v[0] != 0.0 {
            a[0][j] = (2.0 - q[j]) * v[1] * b[big_i][j] / v[0];
        }
        n3_new[j] += dt * q[j] * v[1] * u2[big_i][j];
    }
    (a, b, n3_new)
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300) || a == b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub trials: usize,
    pub agreements: usize,
    pub max_relative_difference: f64,
}

/// A random tiny stable configuration.
struct Trial {
    mesh: Mesh,
    params: StageParameters,
    q: Vec<f64>,
    field: PhaseField,
}

fn random_trial(rng: &mut ChaCha8Rng) -> Trial {
    let age_cells = rng.gen_range(1..=3);
    let sections = rng.gen_range(1..=4);
    let steps = rng.gen_range(1..=5);
    let horizon = rng.gen_range(0.1..2.0);
    let length = rng.gen_range(0.5..4.0);
    let mesh = Mesh::new(horizon, length, steps, age_cells, sections).expect("positive counts");
    // Pick Courant and diffusion numbers inside the stable region, then
    // back out the physical coefficients.
    let r = rng.gen_range(0.0..0.2);
    let courant = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..(1.0 - 2.0 * r)) };
    let (c1, c2) = (courant(rng), courant(rng));
    let params = solver_params(
        c1 * mesh.da / mesh.dt,
        c2 * mesh.da / mesh.dt,
        r * mesh.dx * mesh.dx / mesh.dt,
        horizon,
    );
    let q = (0..sections).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let field = PhaseField::from_fn(&mesh, |_, _, _| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..10.0) });
    Trial { mesh, params, q, field }
}

fn rows(field: &PhaseField, phase: Phase) -> Vec<Vec<f64>> {
    field.density(phase).chunks(field.sections()).map(|r| r.to_vec()).collect()
}

pub fn oracle_equivalence(trials: usize, seed: u64) -> Result<OracleReport> {
    oracle_equivalence_with(trials, seed, 0.0)
}

/// As [`oracle_equivalence`], with a deliberate error injected into the
/// oracle.
pub fn oracle_equivalence_with(trials: usize, seed: u64, perturbation: f64) -> Result<OracleReport> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agreements = 0;
    let mut max_relative_difference: f64 = 0.0;
    for _ in 0..trials {
        let t = random_trial(&mut rng);
        let schedule = DifferentiationSchedule::table(t.mesh.sections, t.q.clone())?;
        let (fast, _) = fdm::run(&t.field, &t.mesh, &t.params, &schedule)?;

        let (mut u1, mut u2, mut n3) = (rows(&t.field, Phase::Interphase), rows(&t.field, Phase::Mitosis), t.field.n3.clone());
        for _ in 0..t.mesh.steps {
            (u1, u2, n3) = naive_step(
                &u1,
                &u2,
                &n3,
                [t.params.v1, t.params.v2],
                t.params.diffusion,
                t.mesh.dt,
                t.mesh.da,
                t.mesh.dx,
                &t.q,
                perturbation,
            );
        }
        let naive = u1.concat().into_iter().chain(u2.concat()).chain(n3);
        let solver = fast.u1.iter().chain(&fast.u2).chain(&fast.n3).copied();
        let mut ok = true;
        for (a, b) in solver.zip(naive) {
            if !agree(a, b) {
                ok = false;
                max_relative_difference = max_relative_difference.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
        agreements += ok as usize;
    }
    Ok(OracleReport {
        trials,
        agreements,
        max_relative_difference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub trials: usize,
    pub nonnegative: usize,
    pub diffusion_conserving: usize,
    pub doubling_identity: usize,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.nonnegative == self.trials && self.diffusion_conserving == self.trials && self.doubling_identity == self.trials
    }
}

/// Checks, on random tiny grids: nonnegativity under CFL, conservation of
/// each age row's spatial sum when only diffusion acts, and the q = 0
/// doubling identity `v1·u1(k,0,j) = 2·v2·u2(k,I,j)`.
pub fn solver_invariants(trials: usize, seed: u64) -> Result<InvariantReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InvariantReport {
        trials,
        nonnegative: 0,
        diffusion_conserving: 0,
        doubling_identity: 0,
    };
    for _ in 0..trials {
        let t = random_trial(&mut rng);
        let schedule = DifferentiationSchedule::table(t.mesh.sections, t.q.clone())?;
        let (out, _) = fdm::run(&t.field, &t.mesh, &t.params, &schedule)?;
        report.nonnegative += out.is_nonnegative() as usize;

        let still = StageParameters { v1: 0.0, v2: 0.0, ..t.params.clone() };
        let (diffused, _) = fdm::run(&t.field, &t.mesh, &still, &schedule)?;
        let sections = t.mesh.sections;
        let conserved = [Phase::Interphase, Phase::Mitosis].iter().all(|&p| {
            t.field
                .density(p)
                .chunks(sections)
                .zip(diffused.density(p).chunks(sections))
                .all(|(a, b)| {
                    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                    (sa - sb).abs() <= 1e-12 * sa.abs().max(1e-300) || sa == sb
                })
        });
        report.diffusion_conserving += conserved as usize;

        let moving = StageParameters {
            v1: t.params.v1.max(1e-3 * t.mesh.da / t.mesh.dt),
            v2: t.params.v2.max(1e-3 * t.mesh.da / t.mesh.dt),
            ..t.params.clone()
        };
        let doubled = fdm::run(&t.field, &t.mesh, &moving, &DifferentiationSchedule::Constant(0.0));
        let holds = match doubled {
            Ok((f, _)) => {
                let last = t.mesh.age_cells;
                (0..sections).all(|j| {
                    agree(moving.v1 * f.u1[j], 2.0 * moving.v2 * f.u2[last * sections + j])
                })
            }
            // Nudging a zero rate can only breach CFL on a knife edge;
            // report it as a failure rather than hide it.
            Err(_) => false,
        };
        report.doubling_identity += holds as usize;
    }
    Ok(report)
}

/// Per-section comparison of `model` against `reference`, skipping the
/// section indices in `exclusions`.
pub fn compare(model: &SectionProfile, reference: &SectionProfile, exclusions: &[usize]) -> Result<ComparisonReport> {
    if model.len() != reference.len() || model.start != reference.start {
        return Err(Error::Contract(format!(
            "profiles cover different sections: {}..{} vs {}..{}",
            model.start,
            model.start + model.len(),
            reference.start,
            reference.start + reference.len()
        )));
    }
    let mut excluded = Vec::new();
    let mut deltas = Vec::new();
    for ((index, m), &r) in model.indexed().zip(&reference.values) {
        if exclusions.contains(&index) {
            excluded.push(index);
            continue;
        }
        deltas.push(SectionDelta {
            index,
            model: m,
            reference: r,
            delta: m - r,
        });
    }
    Ok(ComparisonReport::from_deltas(deltas, excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixture;
    use approx::assert_relative_eq;

    #[test]
    fn manufactured_source_is_consistent() {
        // Finite-difference check of u_t + v u_a - D u_xx against the source.
        let m = Manufactured { amplitude: 1.0, horizon: 1.0, length: 1.0, velocity: 0.3, diffusion: 0.07 };
        let (t, a, x, h) = (0.4, 0.3, 0.2, 1e-4);
        let ut = (m.exact(t + h, a, x) - m.exact(t - h, a, x)) / (2.0 * h);
        let ua = (m.exact(t, a + h, x) - m.exact(t, a - h, x)) / (2.0 * h);
        let uxx = (m.exact(t, a, x + h) - 2.0 * m.exact(t, a, x) + m.exact(t, a, x - h)) / (h * h);
        let residual = ut + m.velocity * ua - m.diffusion * uxx;
        assert_relative_eq!(residual, m.source(Phase::Interphase, t, a, x), max_relative = 1e-5);
    }

    #[test]
    fn zero_solution_has_zero_error() {
        let report = manufactured_convergence_with(2, 0.0).unwrap();
        for s in &report.studies {
            assert!(s.rows.iter().all(|r| r.max_error == 0.0));
        }
    }

    #[test]
    fn convergence_needs_two_levels() {
        assert!(manufactured_convergence(1).is_err());
    }

    #[test]
    fn excessive_levels_are_infeasible() {
        assert!(matches!(run_study(Refinement::Dx, 7, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn oracle_agrees_and_detects_perturbation() {
        let report = oracle_equivalence(100, 7).unwrap();
        assert_eq!(report.agreements, 100, "{report:?}");
        let broken = oracle_equivalence_with(20, 7, 1e-6).unwrap();
        assert_eq!(broken.agreements, 0);
    }

    #[test]
    fn invariants_hold() {
        let report = solver_invariants(100, 11).unwrap();
        assert!(report.all_hold(), "{report:?}");
    }

    #[test]
    fn compare_identical_and_swapped() {
        let t3 = fixture(3).unwrap();
        let m = t3.column("model").unwrap();
        let e = t3.column("experimental").unwrap();
        let same = compare(&m, &m, &[]).unwrap();
        assert_eq!((same.max_abs_delta, same.mean_abs_delta, same.rmse, same.fraction_within_one), (0.0, 0.0, 0.0, 1.0));
        let ab = compare(&m, &e, &[]).unwrap();
        let ba = compare(&e, &m, &[]).unwrap();
        assert_eq!(ab.max_abs_delta, ba.max_abs_delta);
        assert_eq!(ab.mean_abs_delta, ba.mean_abs_delta);
        assert_eq!(ab.rmse, ba.rmse);
        for (x, y) in ab.per_section_delta.iter().zip(&ba.per_section_delta) {
            assert_eq!(x.delta, -y.delta);
        }
        assert!(ab.is_self_consistent());
        let short = SectionProfile::new("s", 1, vec![1.0]).unwrap();
        assert!(matches!(compare(&m, &short, &[]), Err(Error::Contract(_))));
    }

    #[test]
    fn compare_exclusions() {
        let t4 = fixture(4).unwrap();
        let m = t4.column("model").unwrap();
        let r = compare(&m, &m, &[32, 33]).unwrap();
        assert_eq!(r.excluded, vec![32, 33]);
        assert_eq!(r.per_section_delta.len(), 94);
    }

    #[test]
    fn table5_model_versus_experiment_is_frozen() {
        let t5 = fixture(5).unwrap();
        let r = compare(&t5.column("model").unwrap(), &t5.column("experimental").unwrap(), &[]).unwrap();
        assert_eq!(r.count_within_one(), 66);
        assert!((r.fraction_within_one - 66.0 / 231.0).abs() < 1e-12);
        assert_eq!(r.max_abs_delta, 13.0);
        assert_eq!(r.max_abs_index, Some(227));
    }
}
