use std::collections::BTreeMap;

use proptest::prelude::*;

use geomflow::config::*;
use geomflow_core::exact::ExactSolution;
use geomflow_core::flow::Scheme;

fn family() -> impl Strategy<Value = ExactSolution> {
    prop_oneof![
        Just(ExactSolution::Rosenau),
        Just(ExactSolution::Sphere),
        Just(ExactSolution::Flat),
        (1e-3f64..1e3).prop_map(|r0| ExactSolution::Cigar { r0 }),
        (1e-2f64..10.0, 1e-2f64..10.0, -5.0f64..5.0, -5.0f64..5.0)
            .prop_map(|(beta, delta, x, y)| ExactSolution::DsSoliton { beta, delta, center: [x, y] }),
    ]
}

const TASKS: [Task; 6] = [Task::Verify, Task::Simulate, Task::Invariants, Task::Rescale, Task::Classify, Task::Embed];

prop_compose! {
    fn scenario()(
        name in "[a-z][a-z0-9-]{0,12}",
        sol in family(),
        extent in 1e-2f64..1e3,
        n in 16usize..20_000,
        t0 in -1e3f64..1e3,
        span in 1e-6f64..1e3,
        outputs in prop::collection::vec(0.0f64..1.0, 0..5),
        cfl in 1e-6f64..=1.0,
        explicit in any::<bool>(),
        mask in 1u8..64,
        levels in 1u32..10,
        tols in prop::collection::btree_map(0usize..DEFAULT_TOLERANCES.len(), 1e-12f64..1e3, 0..4),
        out in "[a-z]{1,8}(/[a-z]{1,8}){0,2}",
    ) -> ScenarioConfig {
        let tasks = TASKS.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|p| *p.1).collect();
        let tolerances: BTreeMap<String, f64> =
            tols.into_iter().map(|(k, v)| (DEFAULT_TOLERANCES[k].0.to_string(), v)).collect();
        ScenarioConfig {
            name,
            initial: Initial::Exact(sol),
            grid: GridConfig { chart: ChartChoice::Auto, extent, n, lo: None },
            times: TimeConfig { t0, t1: t0 + span, outputs: outputs.iter().map(|f| t0 + f * span).collect() },
            cfl,
            scheme: if explicit { Scheme::ExplicitRK2 } else { Scheme::SemiImplicit },
            tasks,
            levels,
            tolerances,
            out: out.into(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_serialize_parse_is_identity(c in scenario()) {
        let once = ScenarioConfig::parse(&c.to_json()).unwrap();
        prop_assert_eq!(&once, &c);
        let twice = ScenarioConfig::parse(&once.to_json()).unwrap();
        prop_assert_eq!(twice.to_json(), c.to_json());
    }
}

#[test]
fn checkpoint_sources_round_trip() {
    let text = r#"{
        "name": "resume",
        "initial": {"checkpoint": "runs/a/checkpoint_final.json"},
        "grid": {"chart": "radial", "extent": 20.0, "n": 801},
        "times": {"t0": 0.5, "t1": 0.8},
        "cfl": 0.4,
        "scheme": "explicit_rk2",
        "tasks": ["simulate"],
        "out": "runs/b"
    }"#;
    let c = ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{e:#}"));
    assert_eq!(c.initial, Initial::Checkpoint("runs/a/checkpoint_final.json".into()));
    assert_eq!(c.levels, 6);
    assert!(c.tolerances.is_empty());
    assert_eq!(ScenarioConfig::parse(&c.to_json()).unwrap(), c);
}

#[test]
fn invariants_of_the_config_are_enforced() {
    let base = r#"{"name": "x", "initial": {"exact": {"family": "flat"}},
        "grid": {"chart": "radial", "extent": 10.0, "n": N},
        "times": {"t0": 0.0, "t1": 1.0}, "cfl": CFL, "scheme": "semi_implicit",
        "tasks": TASKS, "out": "o"}"#;
    let make = |n: &str, cfl: &str, tasks: &str| base.replace('N', n).replace("CFL", cfl).replace("TASKS", tasks);
    assert!(ScenarioConfig::parse(&make("16", "1.0", r#"["invariants"]"#)).is_ok());
    assert!(ScenarioConfig::parse(&make("15", "0.4", r#"["invariants"]"#)).is_err());
    assert!(ScenarioConfig::parse(&make("64", "0.0", r#"["invariants"]"#)).is_err());
    assert!(ScenarioConfig::parse(&make("64", "1.5", r#"["invariants"]"#)).is_err());
    assert!(ScenarioConfig::parse(&make("64", "0.4", "[]")).is_err());
    assert!(ScenarioConfig::parse(&make("64", "0.4", r#"["plot"]"#)).is_err());
    assert!(ScenarioConfig::parse(&base.replace("\"flat\"", "\"torus\"")).is_err());
}
