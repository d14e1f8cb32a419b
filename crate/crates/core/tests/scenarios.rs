use std::path::PathBuf;

use causal_fa_core::faults::Fault;
use causal_fa_core::scenario::{ScenarioError, ScenarioSpec};
use causal_fa_core::*;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

const HEADER: &str = "name = \"t\"\n[ambient]\ntopology = \"cylinder\"\nt = 12\nx = 4\n";

fn load(body: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_toml(&format!("{HEADER}{body}"))
}

#[test]
fn shipped_scenarios_load() {
    let smoke = Scenario::load(&shipped("cylinder_smoke.toml")).unwrap();
    assert_eq!(smoke.regions.len(), 10);
    assert_eq!(smoke.suites, Suite::ALL.to_vec());
    assert!(smoke.faults.is_empty());
    assert_eq!(smoke.compositions.len(), 1);
    assert_eq!(smoke.tuples["quad"].len(), 4);

    let faults = Scenario::load(&shipped("fault_injection.toml")).unwrap();
    assert_eq!(faults.faults, Fault::ALL.to_vec());
}

#[test]
fn json_mirror_matches_toml() {
    let text = std::fs::read_to_string(shipped("cylinder_smoke.toml")).unwrap();
    let spec: ScenarioSpec = toml::from_str(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("smoke.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let from_json = Scenario::load(&path).unwrap();
    let from_toml = Scenario::from_toml(&text).unwrap();
    let points = |sc: &Scenario| sc.regions.iter().map(|(k, r)| (k.clone(), r.points())).collect::<Vec<_>>();
    assert_eq!(points(&from_json), points(&from_toml));
    assert_eq!(from_json.tuples.keys().collect::<Vec<_>>(), from_toml.tuples.keys().collect::<Vec<_>>());
}

#[test]
fn region_shapes_build_the_expected_sets() {
    let sc = load(
        "[regions.s]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n\
         [regions.d]\ntype = \"diamond\"\napex_past = [2, 1]\napex_future = [4, 1]\n\
         [regions.b]\ntype = \"band\"\nlower = [2, 3, 2, 3]\nupper = [5, 5, 5, 5]\n\
         [regions.p]\ntype = \"points\"\npoints = [[7, 0]]\n",
    )
    .unwrap();
    assert_eq!(sc.regions["s"].len(), 8);
    assert_eq!(sc.regions["d"].len(), 5);
    assert_eq!(sc.regions["b"].len(), 14);
    assert_eq!(sc.regions["p"].points(), vec![Point::new(7, 0)]);
    assert_eq!(sc.region_name(&sc.regions["d"]), Some("d"));
}

#[test]
fn non_convex_regions_are_rejected() {
    let err = load("[regions.gap]\ntype = \"points\"\npoints = [[2, 0], [4, 0]]\n").err().unwrap();
    assert!(matches!(err, ScenarioError::Region { ref name, .. } if name == "gap"), "{err}");
    assert!(err.to_string().contains("(3,0)"), "{err}");
}

#[test]
fn unknown_names_are_reported() {
    let err = load("[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n[tuples.t]\ntarget = \"a\"\nparts = [\"zz\"]\n")
        .err()
        .unwrap();
    assert!(matches!(err, ScenarioError::Unresolved { ref missing, .. } if missing == "zz"), "{err}");

    let err = load(
        "[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n[tuples.t]\ntarget = \"a\"\nparts = [\"a\"]\n\
         [compositions.c]\nouter = \"t\"\ninners = [\"nope\"]\n",
    )
    .err()
    .unwrap();
    assert!(matches!(err, ScenarioError::Unresolved { kind: "tuple", .. }), "{err}");
}

#[test]
fn overlapping_parts_are_rejected() {
    let err = load(
        "[regions.n]\ntype = \"slab\"\nt_min = 1\nt_max = 9\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n\
         [regions.b]\ntype = \"slab\"\nt_min = 3\nt_max = 4\n[tuples.t]\ntarget = \"n\"\nparts = [\"a\", \"b\"]\n",
    )
    .err()
    .unwrap();
    assert!(matches!(err, ScenarioError::Tuple { .. }), "{err}");
}

#[test]
fn mismatched_compositions_are_rejected() {
    let err = load(
        "[regions.n]\ntype = \"slab\"\nt_min = 1\nt_max = 9\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n\
         [regions.b]\ntype = \"slab\"\nt_min = 6\nt_max = 7\n\
         [tuples.outer]\ntarget = \"n\"\nparts = [\"a\", \"b\"]\n[tuples.inner]\ntarget = \"b\"\nparts = [\"b\"]\n\
         [compositions.c]\nouter = \"outer\"\ninners = [\"inner\", \"inner\"]\n",
    )
    .err()
    .unwrap();
    assert!(matches!(err, ScenarioError::Composition { .. }), "{err}");
}

#[test]
fn malformed_fields_are_parse_errors() {
    for body in [
        "[regions.a]\ntype = \"slab\"\nt_min = 2\n",
        "[regions.a]\ntype = \"cone\"\n",
        "suites = [\"everything\"]\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n",
        "faults = [\"gremlins\"]\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n",
    ] {
        let text = if body.starts_with("suites") || body.starts_with("faults") {
            format!("{body}{HEADER}")
        } else {
            format!("{HEADER}{body}")
        };
        let err = Scenario::from_toml(&text).err().unwrap();
        assert!(matches!(err, ScenarioError::Toml(_)), "{body}: {err}");
    }
}

#[test]
fn theory_parameters_are_validated() {
    let err = load("[theory]\ndegree_cap = 0\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n").err().unwrap();
    assert!(matches!(err, ScenarioError::Theory(_)));
    let err = load("[theory]\nmass_squared = -1.0\n[regions.a]\ntype = \"slab\"\nt_min = 2\nt_max = 3\n").err().unwrap();
    assert!(matches!(err, ScenarioError::Theory(_)));
}

#[test]
fn empty_ambient_is_rejected() {
    let err = Scenario::from_toml("name = \"t\"\n[ambient]\ntopology = \"cylinder\"\nt = 0\nx = 4\n[regions]\n").err().unwrap();
    assert!(matches!(err, ScenarioError::Ambient(_)));
}
