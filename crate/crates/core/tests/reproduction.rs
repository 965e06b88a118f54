use tectum_core::data::{self, fixture};
use tectum_core::pipeline::{reduced, reproductions, stage_setup, DiffusionMode, Stage};
use tectum_core::validation::compare;

#[test]
fn e2e4_reproduces_both_model_tables() {
    let run = reduced(&Stage::E2E4, None, DiffusionMode::Formula).unwrap();
    let anchors = compare(&run.anchors, &fixture(2).unwrap().column("model").unwrap(), &[]).unwrap();
    let interpolated = compare(&run.interpolated, &fixture(3).unwrap().column("model").unwrap(), &[]).unwrap();
    assert_eq!(anchors.count_within_one(), 16);
    assert_eq!(interpolated.count_within_one(), 96);
    assert!(anchors.is_self_consistent() && interpolated.is_self_consistent());
}

#[test]
fn e4e6_anchor_misses_are_the_known_anomalies() {
    let run = reduced(&Stage::E4E6, None, DiffusionMode::Formula).unwrap();
    let all = compare(&run.anchors, &fixture(4).unwrap().column("model").unwrap(), &[]).unwrap();
    let anomalies = data::table4_value_anomalies();
    for miss in all.outside_one() {
        assert!(anomalies.contains(&miss.index), "unexpected miss at {}", miss.index);
    }
}

#[test]
fn reproduction_set_per_stage() {
    let e2 = reduced(&Stage::E2E4, None, DiffusionMode::Formula).unwrap();
    let names: Vec<_> = reproductions(&e2).unwrap().into_iter().map(|r| r.name).collect();
    assert!(names.contains(&"anchors_vs_table2_model".to_string()));
    assert!(names.contains(&"interpolated_vs_table3_model".to_string()));

    let e4 = reduced(&Stage::E4E6, None, DiffusionMode::Paper).unwrap();
    let t4 = reproductions(&e4)
        .unwrap()
        .into_iter()
        .find(|r| r.name == "anchors_vs_table4_model")
        .unwrap();
    assert_eq!(t4.report.excluded, data::table4_value_anomalies());
}

#[test]
fn preset_meshes_are_stable() {
    for stage in [Stage::E2E4, Stage::E4E6] {
        let setup = stage_setup(&stage).unwrap();
        assert_eq!(setup.mesh.steps, 288);
        assert!(setup.mesh.da > 0.0 && setup.mesh.dx == 25.0);
    }
}
