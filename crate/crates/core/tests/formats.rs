use proptest::prelude::*;
use tectum_core::data::{self, format_number, load_cpr, RunManifest};
use tectum_core::SectionProfile;

#[test]
fn table1_record_round_trips_through_csv() {
    let records = data::table1().as_cpr();
    let text = data::cpr_to_csv(&records);
    assert_eq!(load_cpr(text.as_bytes()).unwrap(), records);
}

#[test]
fn record_errors_carry_line_numbers() {
    let err = load_cpr("window,mitotic,total\n1,2,3\n2,x,3\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
    assert!(load_cpr("window,mitotic,total\n1,5,3\n".as_bytes()).is_err());
    assert!(load_cpr("a,b,c\n1,2,3\n".as_bytes()).is_err());
}

#[test]
fn profile_csv_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/profile.csv");
    let profile = SectionProfile::new("p", 0, vec![1.0, 2.5, 1e-3, 12345.0]).unwrap();
    data::write_profile_csv(&profile, &path).unwrap();
    let back = data::read_profile_csv(&path, "p").unwrap();
    assert_eq!(back, profile);
}

#[test]
fn svg_has_fixed_viewport_and_is_stable() {
    let a = SectionProfile::new("a", 1, vec![3.0, 4.0, 8.0]).unwrap();
    let b = SectionProfile::new("b", 1, vec![1.0, 0.0, 2.0]).unwrap();
    let svg = data::render_profile_svg(&[a.clone(), b.clone()], "t").unwrap();
    assert!(svg.contains("viewBox=\"0 0 800 400\""));
    assert_eq!(svg, data::render_profile_svg(&[a, b], "t").unwrap());
}

#[test]
fn manifest_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new("reduced");
    m.settings.insert("z".into(), "1".into());
    m.settings.insert("a".into(), "2".into());
    let p1 = dir.path().join("1.json");
    let p2 = dir.path().join("2.json");
    data::write_manifest_json(&m, &p1).unwrap();
    data::write_manifest_json(&m, &p2).unwrap();
    let text = std::fs::read_to_string(&p1).unwrap();
    assert_eq!(text, std::fs::read_to_string(&p2).unwrap());
    assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
}

proptest! {
    #[test]
    fn formatted_numbers_keep_six_digits(v in -1e6f64..1e6) {
        let parsed: f64 = format_number(v).parse().unwrap();
        prop_assert!((parsed - v).abs() <= 1e-5 * v.abs().max(1e-1));
    }
}
