use geomflow_core::exact::ExactSolution;
use geomflow_core::flow::Scheme;
use geomflow_core::geometry::invariant_report;
use geomflow_core::grid::{rosenau_layout, sample_grid, GridLayout};
use geomflow_core::io::*;
use geomflow_core::rescaling::{pick_point, rosenau_backward_data};

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/grid.json");
    let ds = ExactSolution::DsSoliton { beta: 0.7, delta: 2.5, center: [0.25, -1.0] };
    let g = sample_grid(&ds, GridLayout::radial(7.3, 97).unwrap(), 0.123).unwrap();
    write_checkpoint(&path, &g, None).unwrap();
    let back = read_checkpoint(&path).unwrap();
    assert_eq!(back.layout, g.layout);
    assert_eq!(back.provenance, g.provenance);
    assert!(back.u.iter().zip(&g.u).all(|(a, b)| a.to_bits() == b.to_bits()));
    let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "temporary files left behind");
}

#[test]
fn malformed_checkpoints_are_parse_errors() {
    assert!(matches!(Checkpoint::parse("{"), Err(geomflow_core::Error::Parse(_))));
    let g = sample_grid(&ExactSolution::Flat, GridLayout::radial(1.0, 16).unwrap(), 0.0).unwrap();
    let text = Checkpoint::from_grid(&g, Some(Scheme::ExplicitRK2)).render().replace("\"n\": 16", "\"n\": 17");
    assert!(Checkpoint::parse(&text).is_err());
}

#[test]
fn invariant_rows_keep_their_column_order() {
    let g = sample_grid(&ExactSolution::Cigar { r0: 4.0 }, GridLayout::radial(50.0, 2000).unwrap(), 0.0).unwrap();
    let table = invariant_table(&[invariant_report(&g).unwrap()]).render();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), INVARIANT_COLUMNS.join(","));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| parse_cell(c).unwrap()).collect();
    assert_eq!(row.len(), 8);
    assert!((row[1] / std::f64::consts::TAU - 1.0).abs() < 0.01);
    let json = invariant_record(&invariant_report(&g).unwrap()).render();
    let keys: Vec<&str> = json.lines().filter_map(|l| l.trim().strip_prefix('"')?.split('"').next()).collect();
    assert_eq!(keys, INVARIANT_COLUMNS);
}

#[test]
fn compact_reports_mark_missing_values() {
    let g = sample_grid(&ExactSolution::Rosenau, rosenau_layout(10.0, 401).unwrap(), -1.0).unwrap();
    let rep = invariant_report(&g).unwrap();
    let json: serde_json::Value = serde_json::from_str(&invariant_record(&rep).render()).unwrap();
    assert!(json["aperture"].is_null() && json["circumference"].is_null());
    let row = invariant_table(&[rep]).render();
    assert_eq!(row.lines().nth(1).unwrap().matches("nan").count(), 5);
}

#[test]
fn pick_record_has_the_documented_keys() {
    let traj = rosenau_backward_data(-4.0, 0.1, None).unwrap();
    let pick = pick_point(&traj, -4.0, 0.8, 2).unwrap();
    let json: serde_json::Value = serde_json::from_str(&pick_record(&pick, Some(0.1)).render()).unwrap();
    let obj = json.as_object().unwrap();
    let keys: Vec<&str> = obj.keys().map(|k| k.as_str()).collect();
    let mut expected = ["j", "T_j", "gamma_j", "t_j", "x_j", "M_j", "alpha_j", "omega_j", "profile_distance"];
    expected.sort();
    assert_eq!(keys, expected);
    assert_eq!(json["M_j"].as_f64().unwrap().to_bits(), pick.m_j.to_bits());
}

#[test]
fn infinities_are_strings_in_json() {
    let text = JsonRecord::new().num("c", f64::INFINITY).opt("a", None).render();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["c"], "inf");
    assert!(v["a"].is_null());
}

#[test]
fn scheme_names_match_their_serialized_form() {
    for s in [Scheme::SemiImplicit, Scheme::ExplicitRK2] {
        assert_eq!(serde_json::to_value(s).unwrap(), s.name());
    }
}
