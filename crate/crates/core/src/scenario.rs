//! Scenario files: an ambient lattice, named regions, named tuples and the
//! theory and suite selection.
//!
//! TOML layout (JSON mirrors it):
//!
//! ```toml
//! name = "smoke"
//! seed = 7
//! suites = ["spacetime", "theory"]   # optional, default: all
//! faults = ["scaled_product"]        # optional
//!
//! [ambient]
//! topology = "cylinder"
//! t = 16
//! x = 6
//!
//! [theory]
//! mass_squared = 0.25
//! degree_cap = 3
//! samples = 48
//! margin = 2
//! toy_commutative = false
//!
//! [regions.N]
//! type = "slab"
//! t_min = 3
//! t_max = 12
//!
//! [regions.spot]
//! type = "points"
//! points = [[3, 0]]
//!
//! [tuples.pair]
//! target = "N"
//! parts = ["late", "early"]
//!
//! [compositions.nested]
//! outer = "pair"
//! inners = ["late_inner", "early_inner"]
//! ```
//!
//! Region shapes: `points` (`points = [[t, x], …]`), `slab` (`t_min`,
//! `t_max`), `diamond` (`apex_past = [t, x]`, `apex_future = [t, x]`) and
//! `band` (`lower`, `upper`: one time per column). Every region must be
//! causally convex.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::faults::Fault;
use crate::lattice::{CauchySurfaceGraph, LatticeError, LatticeSpacetime, Point, Region, Topology};
use crate::suites::Suite;
use crate::time_order::{DisjointTuple, TimeOrderError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("ambient lattice: {0}")]
    Ambient(LatticeError),
    #[error("region `{name}`: {source}")]
    Region { name: String, source: LatticeError },
    #[error("{what} `{name}` refers to unknown {kind} `{missing}`")]
    Unresolved { what: &'static str, name: String, kind: &'static str, missing: String },
    #[error("tuple `{name}`: {source}")]
    Tuple { name: String, source: TimeOrderError },
    #[error("composition `{name}`: {reason}")]
    Composition { name: String, reason: String },
    #[error("theory: {0}")]
    Theory(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientSpec {
    pub topology: Topology,
    pub t: usize,
    pub x: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Points { points: Vec<[i32; 2]> },
    Slab { t_min: i32, t_max: i32 },
    Diamond { apex_past: [i32; 2], apex_future: [i32; 2] },
    Band { lower: Vec<i32>, upper: Vec<i32> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleSpec {
    pub target: String,
    pub parts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionSpec {
    pub outer: String,
    pub inners: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySpec {
    pub mass_squared: f64,
    pub degree_cap: usize,
    pub samples: usize,
    pub margin: usize,
    /// Commutative product (kernel switched off) instead of the star product.
    pub toy_commutative: bool,
}

impl Default for TheorySpec {
    fn default() -> Self {
        TheorySpec { mass_squared: 0.25, degree_cap: 3, samples: 48, margin: 2, toy_commutative: false }
    }
}

/// The file as written.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub faults: Vec<Fault>,
    pub ambient: AmbientSpec,
    #[serde(default)]
    pub theory: TheorySpec,
    pub regions: BTreeMap<String, RegionSpec>,
    #[serde(default)]
    pub tuples: BTreeMap<String, TupleSpec>,
    #[serde(default)]
    pub compositions: BTreeMap<String, CompositionSpec>,
}

fn default_seed() -> u64 {
    7
}

pub struct Composition {
    pub name: String,
    pub outer: DisjointTuple,
    pub inners: Vec<DisjointTuple>,
}

/// A validated scenario.
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub faults: Vec<Fault>,
    pub ambient: Arc<LatticeSpacetime>,
    pub theory: TheorySpec,
    pub regions: BTreeMap<String, Region>,
    pub tuples: BTreeMap<String, DisjointTuple>,
    pub compositions: Vec<Composition>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        let spec: ScenarioSpec = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        Self::from_spec(spec)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Self::from_spec(toml::from_str(text)?)
    }

    pub fn from_spec(spec: ScenarioSpec) -> Result<Self, ScenarioError> {
        let a = &spec.ambient;
        let ambient = LatticeSpacetime::new(a.t, a.x, a.topology).map_err(ScenarioError::Ambient)?;
        let th = &spec.theory;
        if th.degree_cap == 0 || th.samples == 0 || !(th.mass_squared.is_finite() && th.mass_squared >= 0.0) {
            return Err(ScenarioError::Theory("degree_cap and samples must be positive, mass_squared nonnegative".into()));
        }

        let mut regions = BTreeMap::new();
        for (name, r) in &spec.regions {
            regions.insert(name.clone(), build_region(&ambient, name, r)?);
        }
        let region = |what: &'static str, owner: &str, n: &str| {
            regions.get(n).cloned().ok_or_else(|| ScenarioError::Unresolved {
                what,
                name: owner.to_string(),
                kind: "region",
                missing: n.to_string(),
            })
        };
        let mut tuples = BTreeMap::new();
        for (name, t) in &spec.tuples {
            let target = region("tuple", name, &t.target)?;
            let parts = t.parts.iter().map(|p| region("tuple", name, p)).collect::<Result<Vec<_>, _>>()?;
            let tuple = DisjointTuple::new(target, parts)
                .map_err(|source| ScenarioError::Tuple { name: name.clone(), source })?;
            tuples.insert(name.clone(), tuple);
        }
        let tuple = |owner: &str, n: &str| {
            tuples.get(n).cloned().ok_or_else(|| ScenarioError::Unresolved {
                what: "composition",
                name: owner.to_string(),
                kind: "tuple",
                missing: n.to_string(),
            })
        };
        let mut compositions = Vec::new();
        for (name, c) in &spec.compositions {
            let outer = tuple(name, &c.outer)?;
            let inners = c.inners.iter().map(|i| tuple(name, i)).collect::<Result<Vec<_>, _>>()?;
            crate::time_order::compose_tuples(&outer, &inners)
                .map_err(|e| ScenarioError::Composition { name: name.clone(), reason: e.to_string() })?;
            compositions.push(Composition { name: name.clone(), outer, inners });
        }
        let suites = if spec.suites.is_empty() { Suite::ALL.to_vec() } else { spec.suites.clone() };
        Ok(Scenario {
            name: spec.name,
            seed: spec.seed,
            suites,
            faults: spec.faults,
            ambient,
            theory: spec.theory,
            regions,
            tuples,
            compositions,
        })
    }

    /// Name of a region, if it is one of the named ones.
    pub fn region_name(&self, r: &Region) -> Option<&str> {
        self.regions.iter().find(|(_, v)| *v == r).map(|(k, _)| k.as_str())
    }
}

fn build_region(amb: &Arc<LatticeSpacetime>, name: &str, spec: &RegionSpec) -> Result<Region, ScenarioError> {
    let err = |source| ScenarioError::Region { name: name.to_string(), source };
    let pts: Vec<Point> = match spec {
        RegionSpec::Points { points } => points.iter().map(|&[t, x]| Point::new(t, x)).collect(),
        RegionSpec::Slab { t_min, t_max } => return Region::slab(amb, *t_min, *t_max).map_err(err),
        RegionSpec::Diamond { apex_past, apex_future } => {
            let (a, b) = (Point::new(apex_past[0], apex_past[1]), Point::new(apex_future[0], apex_future[1]));
            return Region::diamond(amb, a, b).map_err(err);
        }
        RegionSpec::Band { lower, upper } => {
            let lo = CauchySurfaceGraph::new(amb, lower.clone()).map_err(err)?;
            let hi = CauchySurfaceGraph::new(amb, upper.clone()).map_err(err)?;
            return Region::band(amb, &lo, &hi).map_err(err);
        }
    };
    Region::new(amb, &pts).map_err(err)
}
