//! Command implementations behind the `tectum` binary. Kept in a library so
//! the integration and acceptance tests can drive them in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use tectum_core::data::{self, format_number, RunManifest};
use tectum_core::fdm::{self, DifferentiationSchedule};
use tectum_core::model::{Phase, PhaseField};
use tectum_core::params::{cfl_margin, derive_stage, BiologicalInputs};
use tectum_core::pipeline::{self, reproductions, DiffusionMode, Reproduction, Stage, StageSetup};
use tectum_core::validation::{self, convergence_csv, convergence_summary, Refinement};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] tectum_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "tectum", version, about = "Optic tectum proliferation model: parameters, reduced profiles, simulation, convergence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive stage parameters and the stable mesh.
    DeriveParams {
        /// e2e4, e4e6 or a stage JSON file.
        #[arg(long)]
        stage: String,
        #[arg(long, env = "TECTUM_OUT", default_value = "tectum-out")]
        out: PathBuf,
    },
    /// Reduced section-total pipeline: anchor and interpolated profiles.
    Reduced {
        #[arg(long)]
        stage: String,
        /// Cell proliferation record (`window,mitotic,total`) to start from.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Reduced-step diffusion weight: formula or paper.
        #[arg(long, default_value = "formula")]
        diffusion_mode: String,
        #[arg(long, env = "TECTUM_OUT", default_value = "tectum-out")]
        out: PathBuf,
    },
    /// Full finite-difference run over the stage horizon.
    Simulate {
        #[arg(long)]
        stage: String,
        /// Differentiation rate: const:<v> or csv:<file>.
        #[arg(long, default_value = "const:0")]
        q: String,
        #[arg(long, env = "TECTUM_OUT", default_value = "tectum-out")]
        out: PathBuf,
    },
    /// Manufactured-solution refinement study.
    Converge {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
        levels: u32,
        #[arg(long, env = "TECTUM_OUT", default_value = "tectum-out")]
        out: PathBuf,
    },
}

/// What a command produced: files written and the text for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
}

/// Parses arguments and runs the command, returning the process exit code.
/// Messages go to stdout/stderr as a binary would print them.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::DeriveParams { stage, out } => derive_params(&parse_stage(stage)?, out),
        Command::Reduced {
            stage,
            input,
            diffusion_mode,
            out,
        } => {
            let mode = diffusion_mode
                .parse::<DiffusionMode>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            reduced(&parse_stage(stage)?, input.as_deref(), mode, out)
        }
        Command::Simulate { stage, q, out } => simulate(&parse_stage(stage)?, q, out),
        Command::Converge { levels, out } => converge(*levels, out),
    }
}

/// `e2e4`, `e4e6`, or a JSON file of biological inputs. Configuration that
/// does not derive to a valid parameter set is a usage error.
pub fn parse_stage(spec: &str) -> Result<Stage> {
    let stage = match spec {
        "e2e4" => Stage::E2E4,
        "e4e6" => Stage::E4E6,
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read stage file '{path}': {e}")))?;
            let inputs = BiologicalInputs::from_json(&text)
                .map_err(|e| CliError::Usage(format!("invalid stage file '{path}': {e}")))?;
            Stage::Custom(inputs)
        }
    };
    derive_stage(&stage.inputs()).map_err(|e| CliError::Usage(format!("invalid stage '{spec}': {e}")))?;
    Ok(stage)
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Writer { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| tectum_core::Error::Io { path: p, source: e })?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(tectum_core::Error::from)?;
        text.push('\n');
        self.text(name, &text)
    }

    fn manifest(&mut self, mut manifest: RunManifest, name: &str) -> Result<()> {
        manifest.outputs = self
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let p = self.path(name);
        data::write_manifest_json(&manifest, &p)?;
        Ok(())
    }
}

fn stage_manifest(command: &str, stage: &Stage, setup: &StageSetup) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.stage = Some(stage.label());
    m.parameters = Some(setup.derivation.params.clone());
    m.mesh = Some(setup.mesh);
    m.settings.insert("cfl_ceiling".into(), format_number(tectum_core::params::CFL_CEILING));
    m.settings.insert("time_step_hours".into(), format_number(pipeline::TIME_STEP_HOURS));
    m.settings.insert("growth_exponent".into(), format_number(setup.derivation.growth_exponent));
    m
}

fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key:<24} {value}");
}

pub fn derive_params(stage: &Stage, out: &Path) -> Result<Outcome> {
    let setup = pipeline::stage_setup(stage)?;
    let d = &setup.derivation;
    let p = &d.params;
    let m = &setup.mesh;
    let mut text = String::new();
    line(&mut text, "stage", stage.label());
    line(&mut text, "interphase_duration_h", format_number(d.interphase_duration));
    line(&mut text, "mitosis_duration_h", format_number(d.mitosis_duration));
    line(&mut text, "v1", format_number(p.v1));
    line(&mut text, "v2", format_number(p.v2));
    line(&mut text, "D", format_number(p.diffusion));
    line(&mut text, "growth_exponent", format_number(d.growth_exponent));
    line(&mut text, "final_cell_count", format_number(d.projected_total.cells));
    line(&mut text, "final_length_um", format_number(d.final_length));
    line(&mut text, "expansion_factor", format_number(p.expansion_factor));
    line(&mut text, "final_sections", d.final_sections);
    line(&mut text, "K", m.steps);
    line(&mut text, "I", m.age_cells);
    line(&mut text, "J", m.sections);
    line(&mut text, "dt_h", format_number(m.dt));
    line(&mut text, "da", format_number(m.da));
    line(&mut text, "dx_um", format_number(m.dx));
    line(&mut text, "cfl_margin_interphase", format_number(cfl_margin(p, m, p.v1)));
    line(&mut text, "cfl_margin_mitosis", format_number(cfl_margin(p, m, p.v2)));

    let label = stage.label();
    let mut w = Writer::new(out)?;
    w.json(&format!("{label}_params.json"), &setup)?;
    w.manifest(stage_manifest("derive-params", stage, &setup), &format!("{label}_derive-params_manifest.json"))?;
    Ok(Outcome { files: w.files, stdout: text })
}

#[derive(Serialize)]
struct ComparisonSummary<'a> {
    name: &'a str,
    compared: usize,
    within_one: usize,
    fraction_within_one: f64,
    max_abs_delta: f64,
    max_abs_index: Option<usize>,
    mean_abs_delta: f64,
    rmse: f64,
    excluded: &'a [usize],
    deviations: Vec<&'a tectum_core::SectionDelta>,
}

#[derive(Serialize)]
struct ReducedReport<'a> {
    stage: &'a str,
    diffusion_mode: &'a str,
    diffusion_weight: f64,
    diffusion_neglect: f64,
    right_anchor: f64,
    beta: &'a [f64],
    comparisons: Vec<ComparisonSummary<'a>>,
}

fn summarise(r: &Reproduction) -> ComparisonSummary<'_> {
    ComparisonSummary {
        name: &r.name,
        compared: r.report.per_section_delta.len(),
        within_one: r.report.count_within_one(),
        fraction_within_one: r.report.fraction_within_one,
        max_abs_delta: r.report.max_abs_delta,
        max_abs_index: r.report.max_abs_index,
        mean_abs_delta: r.report.mean_abs_delta,
        rmse: r.report.rmse,
        excluded: &r.report.excluded,
        deviations: r.report.outside_one(),
    }
}

pub fn reduced(stage: &Stage, input: Option<&Path>, mode: DiffusionMode, out: &Path) -> Result<Outcome> {
    let initial = match input {
        Some(path) => {
            let records = data::load_cpr_path(path)?;
            Some(data::cpr_profiles(&records).0)
        }
        None => None,
    };
    let run = pipeline::reduced(stage, initial, mode)?;
    let repro = reproductions(&run)?;
    let label = stage.label();

    let mut w = Writer::new(out)?;
    let anchors = w.path(&format!("{label}_anchors.csv"));
    data::write_profile_csv(&run.anchors, &anchors)?;
    let profile = w.path(&format!("{label}_profile.csv"));
    data::write_profile_csv(&run.interpolated, &profile)?;
    for r in &repro {
        let p = w.path(&format!("{label}_{}.csv", r.name));
        data::write_comparison_csv(&r.report, &p)?;
    }
    w.json(
        &format!("{label}_report.json"),
        &ReducedReport {
            stage: &label,
            diffusion_mode: mode.name(),
            diffusion_weight: run.diffusion_weight,
            diffusion_neglect: run.diffusion_neglect,
            right_anchor: run.right_anchor,
            beta: &run.growth.beta,
            comparisons: repro.iter().map(summarise).collect(),
        },
    )?;

    let mut curves = vec![run.interpolated.clone().relabeled("model")];
    let table = match stage {
        Stage::E2E4 => Some(3),
        Stage::E4E6 => Some(5),
        Stage::Custom(_) => None,
    };
    if let (Some(t), None) = (table, input) {
        let fixture = data::fixture(t)?;
        curves.push(fixture.column("model")?.relabeled(format!("table {t} model")));
        curves.push(fixture.column("experimental")?.relabeled("experimental"));
    }
    let svg = w.path(&format!("{label}_profile.svg"));
    data::write_profile_svg(&curves, &format!("Interphase cells per section after {label}"), &svg)?;

    let mut manifest = stage_manifest("reduced", stage, &run.setup);
    manifest.diffusion_mode = Some(mode.name().into());
    manifest.seeding = Some(match input {
        Some(p) => format!("cpr:{}", p.display()),
        None if matches!(stage, Stage::E4E6) => "chained:e2e4".into(),
        None => "table1".into(),
    });
    w.manifest(manifest, &format!("{label}_reduced_manifest.json"))?;

    let mut text = String::new();
    line(&mut text, "stage", &label);
    line(&mut text, "anchor_sections", run.anchors.len());
    line(&mut text, "profile_sections", run.interpolated.len());
    line(&mut text, "right_anchor", format_number(run.right_anchor));
    line(&mut text, "diffusion_weight", format_number(run.diffusion_weight));
    line(&mut text, "diffusion_neglect", format_number(run.diffusion_neglect));
    for r in &repro {
        line(
            &mut text,
            &r.name,
            format!(
                "{}/{} within ±1, max |Δ| {}",
                r.report.count_within_one(),
                r.report.per_section_delta.len(),
                format_number(r.report.max_abs_delta)
            ),
        );
    }
    Ok(Outcome { files: w.files, stdout: text })
}

fn parse_q(spec: &str, sections: usize) -> Result<DifferentiationSchedule> {
    if let Some(v) = spec.strip_prefix("const:") {
        let q: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid differentiation rate '{v}'")))?;
        return DifferentiationSchedule::constant(q).map_err(|e| CliError::Usage(e.to_string()));
    }
    if let Some(path) = spec.strip_prefix("csv:") {
        return DifferentiationSchedule::from_csv(Path::new(path), sections).map_err(|e| CliError::Usage(e.to_string()));
    }
    Err(CliError::Usage(format!("--q expects const:<v> or csv:<file>, got '{spec}'")))
}

pub fn simulate(stage: &Stage, q: &str, out: &Path) -> Result<Outcome> {
    let setup = pipeline::stage_setup(stage)?;
    let schedule = parse_q(q, setup.mesh.sections)?;
    let (interphase, mitotic, seeding) = pipeline::simulation_seed(stage, &setup)?;
    let field = PhaseField::seeded_uniform_in_age(&setup.mesh, &interphase, &mitotic)?;
    let (last, trajectory) = fdm::run(&field, &setup.mesh, &setup.derivation.params, &schedule)?;
    let label = stage.label();

    let mut w = Writer::new(out)?;
    let mut totals = String::from("step,interphase,mitotic,postmitotic,proliferative_cells\n");
    for t in &trajectory.totals {
        let _ = writeln!(
            totals,
            "{},{},{},{},{}",
            t.step,
            format_number(t.interphase),
            format_number(t.mitotic),
            format_number(t.postmitotic),
            format_number(t.proliferative_cells)
        );
    }
    w.text(&format!("{label}_totals.csv"), &totals)?;
    let final_profile = fdm::section_totals(&last);
    let p = w.path(&format!("{label}_final_profile.csv"));
    data::write_profile_csv(&final_profile, &p)?;
    let n3 = fdm::postmitotic_profile(&last);
    let p = w.path(&format!("{label}_postmitotic.csv"));
    data::write_profile_csv(&n3, &p)?;
    let svg = w.path(&format!("{label}_simulate.svg"));
    data::write_profile_svg(
        &[
            interphase.clone().relabeled("initial interphase"),
            final_profile.clone().relabeled("final interphase"),
            fdm::phase_section_totals(&last, Phase::Mitosis).relabeled("final mitotic"),
            n3.clone().relabeled("postmitotic"),
        ],
        &format!("Finite-difference run, {label}"),
        &svg,
    )?;
    let mut manifest = stage_manifest("simulate", stage, &setup);
    manifest.seeding = Some(seeding.into());
    manifest.settings.insert("q".into(), q.into());
    w.manifest(manifest, &format!("{label}_simulate_manifest.json"))?;

    let first = trajectory.totals.first().expect("initial totals");
    let end = trajectory.totals.last().expect("final totals");
    let mut text = String::new();
    line(&mut text, "stage", &label);
    line(&mut text, "steps", setup.mesh.steps);
    line(&mut text, "initial_node_sum", format_number(first.proliferative()));
    line(&mut text, "final_node_sum", format_number(end.proliferative()));
    line(&mut text, "initial_cells", format_number(first.proliferative_cells));
    line(&mut text, "final_cells", format_number(end.proliferative_cells));
    line(&mut text, "final_postmitotic", format_number(end.postmitotic));
    line(&mut text, "compatibility_violation", format_number(trajectory.initial_compatibility_violation));
    Ok(Outcome { files: w.files, stdout: text })
}

pub fn converge(levels: u32, out: &Path) -> Result<Outcome> {
    if levels < 2 {
        return Err(CliError::Usage(format!("--levels must be at least 2, got {levels}")));
    }
    let report = validation::manufactured_convergence(levels)?;
    let summary = convergence_summary(&report);
    let mut w = Writer::new(out)?;
    w.text("convergence.csv", &convergence_csv(report.study(Refinement::All)))?;
    for r in [Refinement::Dt, Refinement::Da, Refinement::Dx] {
        w.text(&format!("convergence_{}.csv", r.name()), &convergence_csv(report.study(r)))?;
    }
    w.json("convergence.json", &summary)?;
    let mut manifest = RunManifest::new("converge");
    manifest.settings.insert("levels".into(), levels.to_string());
    manifest.settings.insert("velocity".into(), format_number(validation::MMS_VELOCITY));
    manifest.settings.insert("solution".into(), "exp(t)(1+a)^2(2+cos(pi x))".into());
    w.manifest(manifest, "converge_manifest.json")?;

    let mut text = String::new();
    for o in &summary.orders {
        let nominal = o.nominal_order.map_or("-".to_string(), format_number);
        line(
            &mut text,
            &format!("order_{}", o.refinement.name()),
            format!("{:.3} (nominal {nominal}, monotone {})", o.observed_order, o.monotone),
        );
    }
    Ok(Outcome { files: w.files, stdout: text })
}
