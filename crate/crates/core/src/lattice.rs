//! Finite causal lattices: points, causal cones, causally convex regions,
//! Cauchy surfaces and the domain-of-dependence machinery.
//!
//! Dependence is measured with the leapfrog stencil. The future stencil of
//! `(t, x)` is `(t+1, x-1)`, `(t+1, x)`, `(t+1, x+1)`, `(t+2, x)`, which is
//! exactly the set of points whose Klein–Gordon update reads `(t, x)`. The
//! past stencil is its mirror image.
//!
//! # Cauchy subregions
//!
//! `p` lies in the future domain of dependence `D⁺(U)` inside `M` when `p ∈ U`
//! or every past-stencil point of `p` lies in `M` and in `D⁺(U)`. A stencil
//! point outside `M` counts as an escape. `U` is Cauchy in `M` when
//! `U ∪ D⁺(U) ∪ D⁻(U) = M`.
//!
//! The independent oracle works with through-paths. A through-path is a
//! sequence in `M` joined by forward-stencil steps. It starts at a point that
//! has a past-stencil point outside `M` and ends at a point that has a
//! future-stencil point outside `M`. The two notions agree:
//!
//! * If `p ∉ U ∪ D⁺(U)`, some past-stencil point of `p` is outside `M` or lies
//!   in `M \ (U ∪ D⁺(U))`. Iterating gives a backward chain in `M \ U` that
//!   ends at a start point. The dual argument gives a forward chain to an end
//!   point, so a point missed by the fixed point sits on a through-path that
//!   avoids `U`.
//! * Conversely, take a through-path that avoids `U`, with every point in
//!   `D⁺ ∪ D⁻`. Its first point is not in `D⁺`, since it has an escaping past
//!   stencil, so it is in `D⁻`. `D⁻` propagates along forward steps outside
//!   `U`, which puts the last point in `D⁻`. That is impossible, because the
//!   last point has an escaping future stencil.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub t: i32,
    pub x: i32,
}

impl Point {
    pub const fn new(t: i32, x: i32) -> Self {
        Point { t, x }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.t, self.x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Space is periodic.
    Cylinder,
    /// Space is bounded; points are restricted to a global causal diamond.
    Strip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Future,
    Past,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeMode {
    /// `J`: non-strict, `t' - t >= d`.
    Causal,
    /// `I`: strict, `t' - t > d`.
    Chronological,
}

fn list_points(pts: &[Point]) -> String {
    pts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice extents must be positive (got T={t}, X={x})")]
    EmptyLattice { t: usize, x: usize },
    #[error("point {0} is not in the ambient lattice")]
    OutsideAmbient(Point),
    #[error("point set is not causally convex; missing points: {}", list_points(.missing))]
    NotConvex { missing: Vec<Point> },
    #[error("region {0} is not contained in the enclosing region")]
    NotSubregion(String),
    #[error("surface slope bound violated between x={x} and its neighbour")]
    SlopeViolation { x: usize },
    #[error("surface has {got} entries, expected {expected}")]
    SurfaceLength { got: usize, expected: usize },
    #[error("surface point {0} lies outside the region")]
    SurfaceOutsideRegion(Point),
    #[error("slab {0} of the surface is empty")]
    EmptySlab(&'static str),
    #[error("points {0} and {1} are chronologically related")]
    NotAchronal(Point, Point),
    #[error("two points share the spatial index {0}")]
    SharedColumn(i32),
    #[error("no surface strictly above the join fits in the region's time window")]
    NoSurfaceAbove,
    #[error("path enumeration exceeded the budget of {0} paths")]
    BudgetExceeded(usize),
    #[error("region is empty")]
    EmptyRegion,
}

/// Fixed-width bitset over the points of one ambient lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    words: SmallVec<[u64; 4]>,
}

impl PointSet {
    pub fn empty(len: usize) -> Self {
        PointSet { words: smallvec::smallvec![0; len.div_ceil(64)] }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn difference(&self, other: &Self) -> Self {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// One slot of a stencil: a lattice point index or an escape out of the
/// ambient window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Inside(usize),
    Outside,
}

#[derive(Debug, PartialEq, Eq)]
pub struct LatticeSpacetime {
    t_extent: usize,
    x_extent: usize,
    topology: Topology,
    member: Vec<bool>,
    /// Future and past stencils per rectangle slot.
    stencils: [Vec<SmallVec<[Slot; 4]>>; 2],
}

impl LatticeSpacetime {
    pub fn new(t_extent: usize, x_extent: usize, topology: Topology) -> Result<Arc<Self>, LatticeError> {
        if t_extent == 0 || x_extent == 0 {
            return Err(LatticeError::EmptyLattice { t: t_extent, x: x_extent });
        }
        let mut s = LatticeSpacetime {
            t_extent,
            x_extent,
            topology,
            member: vec![true; t_extent * x_extent],
            stencils: [Vec::new(), Vec::new()],
        };
        if topology == Topology::Strip {
            let c = ((x_extent - 1) / 2) as i32;
            let bottom = Point::new(0, c);
            let top = Point::new(t_extent as i32 - 1, c);
            for i in 0..s.member.len() {
                let p = s.point(i);
                s.member[i] = s.causal_le(bottom, p) && s.causal_le(p, top);
            }
        }
        s.stencils = [Direction::Future, Direction::Past]
            .map(|d| (0..s.capacity()).map(|i| s.compute_stencil(s.point(i), d)).collect());
        Ok(Arc::new(s))
    }

    pub fn cylinder(t_extent: usize, x_extent: usize) -> Arc<Self> {
        Self::new(t_extent, x_extent, Topology::Cylinder).expect("positive extents")
    }

    pub fn strip(t_extent: usize, x_extent: usize) -> Arc<Self> {
        Self::new(t_extent, x_extent, Topology::Strip).expect("positive extents")
    }

    pub fn time_extent(&self) -> usize {
        self.t_extent
    }

    pub fn space_extent(&self) -> usize {
        self.x_extent
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Number of slots in the `(t, x)` rectangle; indices of [`PointSet`].
    pub fn capacity(&self) -> usize {
        self.t_extent * self.x_extent
    }

    pub fn in_rectangle(&self, p: Point) -> bool {
        p.t >= 0 && (p.t as usize) < self.t_extent && p.x >= 0 && (p.x as usize) < self.x_extent
    }

    pub fn contains(&self, p: Point) -> bool {
        self.in_rectangle(p) && self.member[self.index(p)]
    }

    #[inline]
    pub fn index(&self, p: Point) -> usize {
        p.t as usize * self.x_extent + p.x as usize
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point {
        Point::new((i / self.x_extent) as i32, (i % self.x_extent) as i32)
    }

    /// All ambient points in `(t, x)` order.
    pub fn points(&self) -> Vec<Point> {
        (0..self.capacity()).filter(|&i| self.member[i]).map(|i| self.point(i)).collect()
    }

    pub fn all(&self) -> PointSet {
        let mut s = PointSet::empty(self.capacity());
        for i in 0..self.capacity() {
            if self.member[i] {
                s.insert(i);
            }
        }
        s
    }

    pub fn set_of(&self, pts: &[Point]) -> Result<PointSet, LatticeError> {
        let mut s = PointSet::empty(self.capacity());
        for &p in pts {
            if !self.contains(p) {
                return Err(LatticeError::OutsideAmbient(p));
            }
            s.insert(self.index(p));
        }
        Ok(s)
    }

    pub fn points_of(&self, s: &PointSet) -> Vec<Point> {
        s.iter().map(|i| self.point(i)).collect()
    }

    pub fn distance(&self, a: i32, b: i32) -> i32 {
        let d = (a - b).abs();
        match self.topology {
            Topology::Cylinder => {
                let x = self.x_extent as i32;
                let d = d.rem_euclid(x);
                d.min(x - d)
            }
            Topology::Strip => d,
        }
    }

    /// `q ∈ J⁺(p)`.
    #[inline]
    pub fn causal_le(&self, p: Point, q: Point) -> bool {
        q.t - p.t >= self.distance(p.x, q.x)
    }

    /// `q ∈ I⁺(p)`.
    #[inline]
    pub fn chrono_lt(&self, p: Point, q: Point) -> bool {
        q.t - p.t > self.distance(p.x, q.x)
    }

    fn related(&self, p: Point, q: Point, dir: Direction, mode: ConeMode) -> bool {
        let (a, b) = match dir {
            Direction::Future => (p, q),
            Direction::Past => (q, p),
        };
        match mode {
            ConeMode::Causal => self.causal_le(a, b),
            ConeMode::Chronological => self.chrono_lt(a, b),
        }
    }

    fn shift_x(&self, x: i32, dx: i32) -> Option<i32> {
        let y = x + dx;
        match self.topology {
            Topology::Cylinder => Some(y.rem_euclid(self.x_extent as i32)),
            Topology::Strip => (y >= 0 && (y as usize) < self.x_extent).then_some(y),
        }
    }

    fn slot(&self, t: i32, x: Option<i32>) -> Slot {
        match x {
            Some(x) if self.contains(Point::new(t, x)) => Slot::Inside(self.index(Point::new(t, x))),
            _ => Slot::Outside,
        }
    }

    /// Leapfrog stencil of `p` in the given direction, deduplicated.
    #[inline]
    pub fn stencil(&self, p: Point, dir: Direction) -> &[Slot] {
        let k = match dir {
            Direction::Future => 0,
            Direction::Past => 1,
        };
        &self.stencils[k][self.index(p)]
    }

    fn compute_stencil(&self, p: Point, dir: Direction) -> SmallVec<[Slot; 4]> {
        let s = match dir {
            Direction::Future => 1,
            Direction::Past => -1,
        };
        let mut out = SmallVec::new();
        for slot in [
            self.slot(p.t + s, self.shift_x(p.x, -1)),
            self.slot(p.t + s, Some(p.x)),
            self.slot(p.t + s, self.shift_x(p.x, 1)),
            self.slot(p.t + 2 * s, Some(p.x)),
        ] {
            if !out.contains(&slot) || slot == Slot::Outside {
                out.push(slot);
            }
        }
        out
    }

    /// `∪_{p∈S} cone(p)` intersected with the ambient lattice.
    pub fn cone(&self, s: &PointSet, dir: Direction, mode: ConeMode) -> PointSet {
        let src: Vec<Point> = self.points_of(s);
        let mut out = PointSet::empty(self.capacity());
        for i in 0..self.capacity() {
            if !self.member[i] {
                continue;
            }
            let q = self.point(i);
            if src.iter().any(|&p| self.related(p, q, dir, mode)) {
                out.insert(i);
            }
        }
        out
    }

    /// Points of `J⁺(S) ∩ J⁻(S)` missing from `S`.
    pub fn convexity_violations(&self, s: &PointSet) -> Vec<Point> {
        let hull = self
            .cone(s, Direction::Future, ConeMode::Causal)
            .intersection(&self.cone(s, Direction::Past, ConeMode::Causal));
        self.points_of(&hull.difference(s))
    }

    pub fn is_causally_convex(&self, s: &PointSet) -> bool {
        self.convexity_violations(s).is_empty()
    }

    pub fn are_causally_disjoint(&self, a: &PointSet, b: &PointSet) -> bool {
        let reach = self
            .cone(a, Direction::Future, ConeMode::Causal)
            .union(&self.cone(a, Direction::Past, ConeMode::Causal));
        reach.is_disjoint(b)
    }
}

/// A causally convex set of lattice points in a fixed ambient lattice.
#[derive(Clone)]
pub struct Region {
    ambient: Arc<LatticeSpacetime>,
    set: PointSet,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ambient, &other.ambient) && self.set == other.set
    }
}

impl Eq for Region {}

impl std::hash::Hash for Region {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.set.hash(state);
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.points()).finish()
    }
}

impl Region {
    /// Validates membership and causal convexity.
    pub fn new(ambient: &Arc<LatticeSpacetime>, points: &[Point]) -> Result<Self, LatticeError> {
        let set = ambient.set_of(points)?;
        Self::from_set(ambient, set)
    }

    pub fn from_set(ambient: &Arc<LatticeSpacetime>, set: PointSet) -> Result<Self, LatticeError> {
        let missing = ambient.convexity_violations(&set);
        if !missing.is_empty() {
            return Err(LatticeError::NotConvex { missing });
        }
        Ok(Region { ambient: ambient.clone(), set })
    }

    /// The empty region, used only as tuple padding.
    pub fn empty(ambient: &Arc<LatticeSpacetime>) -> Self {
        Region { ambient: ambient.clone(), set: PointSet::empty(ambient.capacity()) }
    }

    pub fn whole(ambient: &Arc<LatticeSpacetime>) -> Self {
        Region { ambient: ambient.clone(), set: ambient.all() }
    }

    /// Rows `t_min..=t_max`, clipped to the ambient lattice.
    pub fn slab(ambient: &Arc<LatticeSpacetime>, t_min: i32, t_max: i32) -> Result<Self, LatticeError> {
        let pts: Vec<Point> = ambient.points().into_iter().filter(|p| p.t >= t_min && p.t <= t_max).collect();
        if pts.is_empty() {
            return Err(LatticeError::EmptyRegion);
        }
        Self::new(ambient, &pts)
    }

    /// `J⁺(a) ∩ J⁻(b)`.
    pub fn diamond(ambient: &Arc<LatticeSpacetime>, a: Point, b: Point) -> Result<Self, LatticeError> {
        for p in [a, b] {
            if !ambient.contains(p) {
                return Err(LatticeError::OutsideAmbient(p));
            }
        }
        let pts: Vec<Point> =
            ambient.points().into_iter().filter(|&p| ambient.causal_le(a, p) && ambient.causal_le(p, b)).collect();
        if pts.is_empty() {
            return Err(LatticeError::EmptyRegion);
        }
        Self::new(ambient, &pts)
    }

    /// Points between two surfaces, `lower(x) <= t <= upper(x)`.
    pub fn band(
        ambient: &Arc<LatticeSpacetime>,
        lower: &CauchySurfaceGraph,
        upper: &CauchySurfaceGraph,
    ) -> Result<Self, LatticeError> {
        let pts: Vec<Point> = ambient
            .points()
            .into_iter()
            .filter(|p| lower.at(p.x) <= p.t && p.t <= upper.at(p.x))
            .collect();
        if pts.is_empty() {
            return Err(LatticeError::EmptyRegion);
        }
        Self::new(ambient, &pts)
    }

    pub fn ambient(&self) -> &Arc<LatticeSpacetime> {
        &self.ambient
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn points(&self) -> Vec<Point> {
        self.ambient.points_of(&self.set)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.ambient.contains(p) && self.set.contains(self.ambient.index(p))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn is_subregion_of(&self, other: &Region) -> bool {
        self.set.is_subset(&other.set)
    }

    /// `(min t, max t)` over the region's points.
    pub fn time_window(&self) -> Option<(i32, i32)> {
        let pts = self.points();
        let lo = pts.iter().map(|p| p.t).min()?;
        let hi = pts.iter().map(|p| p.t).max()?;
        Some((lo, hi))
    }

    /// True when every column of the ambient meets the region.
    pub fn wraps_space(&self) -> bool {
        let mut seen = vec![false; self.ambient.space_extent()];
        for p in self.points() {
            seen[p.x as usize] = true;
        }
        seen.into_iter().all(|b| b)
    }
}

/// Integer-valued graph `x ↦ σ(x)` with a slope bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CauchySurfaceGraph {
    sigma: Vec<i32>,
}

impl CauchySurfaceGraph {
    pub fn new(ambient: &LatticeSpacetime, sigma: Vec<i32>) -> Result<Self, LatticeError> {
        Self::with_max_slope(ambient, sigma, 1)
    }

    /// `max_slope` is 1 (lightlike segments allowed) or 0 (flat only).
    pub fn with_max_slope(ambient: &LatticeSpacetime, sigma: Vec<i32>, max_slope: i32) -> Result<Self, LatticeError> {
        let n = ambient.space_extent();
        if sigma.len() != n {
            return Err(LatticeError::SurfaceLength { got: sigma.len(), expected: n });
        }
        let pairs = match ambient.topology() {
            Topology::Cylinder if n > 1 => n,
            _ => n.saturating_sub(1),
        };
        for x in 0..pairs {
            if (sigma[(x + 1) % n] - sigma[x]).abs() > max_slope {
                return Err(LatticeError::SlopeViolation { x });
            }
        }
        Ok(CauchySurfaceGraph { sigma })
    }

    pub fn flat(ambient: &LatticeSpacetime, t: i32) -> Self {
        CauchySurfaceGraph { sigma: vec![t; ambient.space_extent()] }
    }

    pub fn values(&self) -> &[i32] {
        &self.sigma
    }

    pub fn at(&self, x: i32) -> i32 {
        self.sigma[x as usize]
    }

    /// Graph points that belong to the ambient lattice.
    pub fn graph(&self, ambient: &LatticeSpacetime) -> Vec<Point> {
        self.sigma
            .iter()
            .enumerate()
            .map(|(x, &t)| Point::new(t, x as i32))
            .filter(|&p| ambient.contains(p))
            .collect()
    }

    pub fn pointwise_max(&self, other: &Self) -> Self {
        CauchySurfaceGraph { sigma: self.sigma.iter().zip(&other.sigma).map(|(a, b)| *a.max(b)).collect() }
    }

    pub fn pointwise_min(&self, other: &Self) -> Self {
        CauchySurfaceGraph { sigma: self.sigma.iter().zip(&other.sigma).map(|(a, b)| *a.min(b)).collect() }
    }
}

/// Future (`Direction::Future`) or past domain of dependence of `u` in `m`.
pub fn domain_of_dependence(u: &PointSet, m: &PointSet, amb: &LatticeSpacetime, dir: Direction) -> PointSet {
    let mut d = PointSet::empty(amb.capacity());
    let mut order: SmallVec<[usize; 128]> = m.iter().collect();
    let look = match dir {
        Direction::Future => Direction::Past,
        Direction::Past => {
            order.reverse();
            Direction::Future
        }
    };
    // `d ⊆ m`, so membership in `d` already implies membership in `m`.
    for i in order {
        let inside = u.contains(i)
            || amb.stencil(amb.point(i), look).iter().all(|s| match *s {
                Slot::Inside(j) => d.contains(j),
                Slot::Outside => false,
            });
        if inside {
            d.insert(i);
        }
    }
    d
}

/// `U` contains a Cauchy surface of `M`, computed by the stencil fixed point.
pub fn is_cauchy_subregion(u: &Region, m: &Region) -> Result<bool, LatticeError> {
    if !u.is_subregion_of(m) {
        return Err(LatticeError::NotSubregion(format!("{u:?}")));
    }
    Ok(cauchy_by_dependence(u.set(), m.set(), m.ambient()))
}

pub fn cauchy_by_dependence(u: &PointSet, m: &PointSet, amb: &LatticeSpacetime) -> bool {
    let fut = domain_of_dependence(u, m, amb, Direction::Future);
    let past = domain_of_dependence(u, m, amb, Direction::Past);
    m.is_subset(&fut.union(&past))
}

/// Maximum path count, read from `CAUSAL_FA_BUDGET` (default one million).
pub fn path_budget() -> usize {
    std::env::var("CAUSAL_FA_BUDGET").ok().and_then(|v| v.parse().ok()).unwrap_or(1_000_000)
}

fn escapes(amb: &LatticeSpacetime, m: &PointSet, p: Point, dir: Direction) -> bool {
    amb.stencil(p, dir).iter().any(|s| match *s {
        Slot::Inside(j) => !m.contains(j),
        Slot::Outside => true,
    })
}

/// All through-paths of `M` (see the module docs), as point sequences.
pub fn enumerate_chronological_paths(m: &Region, budget: usize) -> Result<Vec<Vec<Point>>, LatticeError> {
    let amb = m.ambient();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for s in m.set().iter() {
        if !escapes(amb, m.set(), amb.point(s), Direction::Past) {
            continue;
        }
        stack.push(s);
        walk_paths(amb, m.set(), &mut stack, &mut |path| {
            if out.len() >= budget {
                return Err(LatticeError::BudgetExceeded(budget));
            }
            out.push(path.iter().map(|&i| amb.point(i)).collect());
            Ok(())
        })?;
        stack.pop();
    }
    Ok(out)
}

fn walk_paths(
    amb: &LatticeSpacetime,
    m: &PointSet,
    stack: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]) -> Result<(), LatticeError>,
) -> Result<(), LatticeError> {
    let here = *stack.last().expect("non-empty path");
    if escapes(amb, m, amb.point(here), Direction::Future) {
        emit(stack)?;
    }
    for &s in amb.stencil(amb.point(here), Direction::Future) {
        if let Slot::Inside(j) = s {
            if m.contains(j) {
                stack.push(j);
                walk_paths(amb, m, stack, emit)?;
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Through-paths not contained, as point sets, in a longer through-path.
pub fn maximal_paths(paths: &[Vec<Point>]) -> Vec<Vec<Point>> {
    let sets: Vec<BTreeSet<Point>> = paths.iter().map(|p| p.iter().copied().collect()).collect();
    paths
        .iter()
        .enumerate()
        .filter(|(i, _)| !sets.iter().enumerate().any(|(j, s)| j != *i && sets[*i].is_subset(s) && s.len() > sets[*i].len()))
        .map(|(_, p)| p.clone())
        .collect()
}

/// Through-paths of `M` enumerated once, as deduplicated point sets, for
/// repeated verdicts against many candidate subregions.
pub struct PathOracle {
    paths: Vec<PointSet>,
    /// Single-word copies when the ambient has at most 64 slots.
    narrow: Option<Vec<u64>>,
}

impl PathOracle {
    pub fn new(m: &Region, budget: usize) -> Result<Self, LatticeError> {
        let amb = m.ambient();
        let mut paths = Vec::new();
        let mut stack = Vec::new();
        for s in m.set().iter() {
            if !escapes(amb, m.set(), amb.point(s), Direction::Past) {
                continue;
            }
            stack.push(s);
            walk_paths(amb, m.set(), &mut stack, &mut |path| {
                if paths.len() >= budget {
                    return Err(LatticeError::BudgetExceeded(budget));
                }
                let mut set = PointSet::empty(amb.capacity());
                path.iter().for_each(|&i| set.insert(i));
                paths.push(set);
                Ok(())
            })?;
            stack.pop();
        }
        paths.sort_unstable();
        paths.dedup();
        let narrow = (amb.capacity() <= 64).then(|| paths.iter().map(|p| p.words[0]).collect());
        Ok(PathOracle { paths, narrow })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Every through-path meets `u`.
    pub fn verdict(&self, u: &PointSet) -> bool {
        match &self.narrow {
            Some(w) => {
                let u = u.words[0];
                w.iter().all(|&p| p & u != 0)
            }
            None => self.paths.iter().all(|p| !p.is_disjoint(u)),
        }
    }
}

/// Path-oracle verdict: every through-path of `M` meets `U`.
pub fn cauchy_by_paths(u: &Region, m: &Region, budget: usize) -> Result<bool, LatticeError> {
    Ok(PathOracle::new(m, budget)?.verdict(u.set()))
}

/// Directed-set join of two subregions of `M`.
///
/// With `K = U1 ∪ U2`, the flat surface one row above `K` and
/// `S = J⁺(K) ∩ J⁻(Σ)`, returns `I⁺(K') ∩ I⁻(S) ∩ M`, where `K'` is `K`
/// together with its one-step past. For integer times `I⁺(K') = J⁺(K)`.
pub fn rc_join(u1: &Region, u2: &Region, m: &Region) -> Result<Region, LatticeError> {
    let amb = m.ambient();
    for u in [u1, u2] {
        if !u.is_subregion_of(m) {
            return Err(LatticeError::NotSubregion(format!("{u:?}")));
        }
    }
    let k = u1.set().union(u2.set());
    let kp = amb.points_of(&k);
    let (_, m_hi) = m.time_window().ok_or(LatticeError::EmptyRegion)?;
    let top = kp.iter().map(|p| p.t).max().ok_or(LatticeError::EmptyRegion)? + 1;
    if top > m_hi {
        return Err(LatticeError::NoSurfaceAbove);
    }
    let sigma = amb.set_of(&CauchySurfaceGraph::flat(amb, top).graph(amb))?;
    let s = amb
        .cone(&k, Direction::Future, ConeMode::Causal)
        .intersection(&amb.cone(&sigma, Direction::Past, ConeMode::Causal));
    let sp = amb.points_of(&s);
    let mut out = PointSet::empty(amb.capacity());
    for i in m.set().iter() {
        let r = amb.point(i);
        let after_thickened = kp.iter().any(|&q| amb.chrono_lt(Point::new(q.t - 1, q.x), r));
        let before_s = sp.iter().any(|&q| amb.chrono_lt(r, q));
        if after_thickened && before_s {
            out.insert(i);
        }
    }
    if !k.is_subset(&out) {
        return Err(LatticeError::NoSurfaceAbove);
    }
    Region::from_set(amb, out)
}

/// `Σ⁺ = I⁺(graph σ) ∩ M` and `Σ⁻ = I⁻(graph σ) ∩ M`.
pub fn surface_slabs(sigma: &CauchySurfaceGraph, m: &Region) -> Result<(Region, Region), LatticeError> {
    let amb = m.ambient();
    let graph: Vec<Point> = sigma.values().iter().enumerate().map(|(x, &t)| Point::new(t, x as i32)).collect();
    for &p in &graph {
        if !m.contains(p) {
            return Err(LatticeError::SurfaceOutsideRegion(p));
        }
    }
    let g = amb.set_of(&graph)?;
    let plus = amb.cone(&g, Direction::Future, ConeMode::Chronological).intersection(m.set());
    let minus = amb.cone(&g, Direction::Past, ConeMode::Chronological).intersection(m.set());
    if plus.is_empty() {
        return Err(LatticeError::EmptySlab("future"));
    }
    if minus.is_empty() {
        return Err(LatticeError::EmptySlab("past"));
    }
    Ok((Region::from_set(amb, plus)?, Region::from_set(amb, minus)?))
}

/// Extends an achronal set to a slope-bounded surface inside `M`'s time
/// window, preferring the window midpoint wherever the data leave freedom.
pub fn extend_to_cauchy_surface(a: &[Point], m: &Region) -> Result<CauchySurfaceGraph, LatticeError> {
    let amb = m.ambient();
    let (lo, hi) = m.time_window().ok_or(LatticeError::EmptyRegion)?;
    let mut cols = BTreeSet::new();
    for (i, &p) in a.iter().enumerate() {
        if !m.contains(p) {
            return Err(LatticeError::OutsideAmbient(p));
        }
        if !cols.insert(p.x) {
            return Err(LatticeError::SharedColumn(p.x));
        }
        for &q in &a[i + 1..] {
            if amb.chrono_lt(p, q) || amb.chrono_lt(q, p) {
                return Err(LatticeError::NotAchronal(p, q));
            }
        }
    }
    let mid = lo + (hi - lo) / 2;
    let sigma = (0..amb.space_extent() as i32)
        .map(|x| {
            let lower = a.iter().map(|p| p.t - amb.distance(x, p.x)).max().unwrap_or(i32::MIN);
            let upper = a.iter().map(|p| p.t + amb.distance(x, p.x)).min().unwrap_or(i32::MAX);
            mid.clamp(lower, upper).clamp(lo, hi)
        })
        .collect();
    CauchySurfaceGraph::new(amb, sigma)
}

/// Every causally convex subset of `m` (including the empty set), or `None`
/// when more than `limit` exist.
pub fn enumerate_convex_subsets(m: &Region, limit: usize) -> Option<Vec<PointSet>> {
    let amb = m.ambient();
    let pts: Vec<usize> = m.set().iter().collect();
    let n = pts.len();
    let fut: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && amb.causal_le(amb.point(pts[i]), amb.point(pts[j]))).collect())
        .collect();
    let past: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && amb.causal_le(amb.point(pts[j]), amb.point(pts[i]))).collect())
        .collect();
    let mut out = Vec::new();
    let mut chosen = vec![false; n];
    let mut forbidden = vec![0u32; n];
    fn rec(
        i: usize,
        st: &mut (Vec<bool>, Vec<u32>),
        ctx: (&[usize], &[Vec<usize>], &[Vec<usize>], usize, usize),
        out: &mut Vec<PointSet>,
        limit: usize,
    ) -> bool {
        let (pts, fut, past, n, cap) = ctx;
        if i == n {
            if out.len() >= limit {
                return false;
            }
            let mut s = PointSet::empty(cap);
            for (k, &c) in st.0.iter().enumerate() {
                if c {
                    s.insert(pts[k]);
                }
            }
            out.push(s);
            return true;
        }
        if st.1[i] == 0 {
            st.0[i] = true;
            let ok = rec(i + 1, st, ctx, out, limit);
            st.0[i] = false;
            if !ok {
                return false;
            }
        }
        let blocks = past[i].iter().any(|&j| st.0[j]);
        if blocks {
            for &j in &fut[i] {
                st.1[j] += 1;
            }
        }
        let ok = rec(i + 1, st, ctx, out, limit);
        if blocks {
            for &j in &fut[i] {
                st.1[j] -= 1;
            }
        }
        ok
    }
    let mut st = (std::mem::take(&mut chosen), std::mem::take(&mut forbidden));
    // Points are visited in (t, x) order, so every causal predecessor of a
    // point is decided before the point itself.
    if rec(0, &mut st, (&pts, &fut, &past, n, amb.capacity()), &mut out, limit) {
        Some(out)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(i32, i32)]) -> Vec<Point> {
        v.iter().map(|&(t, x)| Point::new(t, x)).collect()
    }

    #[test]
    fn future_cone_one_step() {
        let a = LatticeSpacetime::cylinder(16, 8);
        let s = a.set_of(&pts(&[(3, 2)])).unwrap();
        let c = a.cone(&s, Direction::Future, ConeMode::Causal);
        let row: Vec<Point> = a.points_of(&c).into_iter().filter(|p| p.t == 4).collect();
        assert_eq!(row, pts(&[(4, 1), (4, 2), (4, 3)]));
    }

    #[test]
    fn cone_wraps_small_cylinder() {
        let a = LatticeSpacetime::cylinder(4, 4);
        let s = a.set_of(&pts(&[(0, 0)])).unwrap();
        let c = a.cone(&s, Direction::Future, ConeMode::Causal);
        assert_eq!(a.points_of(&c).into_iter().filter(|p| p.t == 2).count(), 4);
    }

    #[test]
    fn strict_cone_drops_lightlike() {
        let a = LatticeSpacetime::cylinder(4, 4);
        let s = a.set_of(&pts(&[(0, 0)])).unwrap();
        let i = a.cone(&s, Direction::Future, ConeMode::Chronological);
        let j = a.cone(&s, Direction::Future, ConeMode::Causal);
        let p = a.index(Point::new(1, 1));
        assert!(!i.contains(p) && j.contains(p));
    }

    #[test]
    fn convexity_examples() {
        let a = LatticeSpacetime::cylinder(12, 8);
        assert!(Region::diamond(&a, Point::new(2, 3), Point::new(8, 3)).is_ok());
        let Err(LatticeError::NotConvex { missing }) = Region::new(&a, &pts(&[(0, 0), (2, 0)])) else {
            panic!("expected a convexity failure");
        };
        assert!(missing.contains(&Point::new(1, 0)));
        assert!(Region::new(&a, &pts(&[(5, 5)])).is_ok());
    }

    #[test]
    fn disjointness_examples() {
        let a = LatticeSpacetime::cylinder(4, 16);
        let s = |p| a.set_of(&[p]).unwrap();
        assert!(a.are_causally_disjoint(&s(Point::new(0, 0)), &s(Point::new(0, 4))));
        assert!(!a.are_causally_disjoint(&s(Point::new(0, 0)), &s(Point::new(1, 1))));
    }

    #[test]
    fn cauchy_examples() {
        let a = LatticeSpacetime::cylinder(16, 8);
        let m = Region::slab(&a, 2, 13).unwrap();
        let u = Region::slab(&a, 7, 8).unwrap();
        assert!(is_cauchy_subregion(&u, &m).unwrap());
        assert!(!is_cauchy_subregion(&Region::slab(&a, 7, 7).unwrap(), &m).unwrap());
        assert!(!is_cauchy_subregion(&Region::new(&a, &pts(&[(7, 0)])).unwrap(), &m).unwrap());
        assert!(is_cauchy_subregion(&m, &m).unwrap());
        let outside = Region::new(&a, &pts(&[(0, 0)])).unwrap();
        assert!(is_cauchy_subregion(&outside, &m).is_err());
    }

    #[test]
    fn path_examples() {
        let a = LatticeSpacetime::cylinder(4, 3);
        let one = Region::new(&a, &pts(&[(1, 1)])).unwrap();
        assert_eq!(enumerate_chronological_paths(&one, 10).unwrap(), vec![pts(&[(1, 1)])]);
        let two = Region::new(&a, &pts(&[(1, 1), (2, 1)])).unwrap();
        let paths = enumerate_chronological_paths(&two, 10).unwrap();
        assert_eq!(paths.len(), 3);
        assert_eq!(maximal_paths(&paths), vec![pts(&[(1, 1), (2, 1)])]);
    }

    #[test]
    fn path_budget_is_enforced() {
        let a = LatticeSpacetime::cylinder(8, 4);
        let m = Region::whole(&a);
        assert_eq!(enumerate_chronological_paths(&m, 5), Err(LatticeError::BudgetExceeded(5)));
    }

    #[test]
    fn surface_slab_example() {
        let a = LatticeSpacetime::cylinder(10, 8);
        let m = Region::whole(&a);
        let (p, q) = surface_slabs(&CauchySurfaceGraph::flat(&a, 4), &m).unwrap();
        assert_eq!(p, Region::slab(&a, 5, 9).unwrap());
        assert_eq!(q, Region::slab(&a, 0, 3).unwrap());
        assert!(surface_slabs(&CauchySurfaceGraph::flat(&a, 0), &m).is_err());
    }

    #[test]
    fn extension_examples() {
        let a = LatticeSpacetime::cylinder(12, 8);
        let m = Region::whole(&a);
        let flat = extend_to_cauchy_surface(&[], &m).unwrap();
        assert_eq!(flat.values(), &[5; 8]);
        let s = extend_to_cauchy_surface(&pts(&[(5, 0), (6, 3)]), &m).unwrap();
        assert_eq!(s.at(0), 5);
        assert_eq!(s.at(3), 6);
        let again = extend_to_cauchy_surface(&s.graph(&a), &m).unwrap();
        assert_eq!(again, s);
        assert!(matches!(
            extend_to_cauchy_surface(&pts(&[(2, 0), (6, 1)]), &m),
            Err(LatticeError::NotAchronal(..))
        ));
    }

    #[test]
    fn join_examples() {
        let a = LatticeSpacetime::cylinder(12, 8);
        let m = Region::whole(&a);
        let p = Region::new(&a, &pts(&[(4, 1)])).unwrap();
        let j = rc_join(&p, &p, &m).unwrap();
        assert!(j.contains(Point::new(4, 1)));
        let q = Region::new(&a, &pts(&[(4, 5)])).unwrap();
        let j = rc_join(&p, &q, &m).unwrap();
        assert!(j.contains(Point::new(4, 1)) && j.contains(Point::new(4, 5)));
        let top = Region::new(&a, &pts(&[(11, 0)])).unwrap();
        assert_eq!(rc_join(&top, &p, &m), Err(LatticeError::NoSurfaceAbove));
    }

    #[test]
    fn strip_is_a_diamond() {
        let a = LatticeSpacetime::strip(5, 5);
        assert!(a.contains(Point::new(0, 2)));
        assert!(!a.contains(Point::new(0, 1)));
        assert!(a.contains(Point::new(2, 0)));
        assert!(a.is_causally_convex(&a.all()));
    }

    #[test]
    fn convex_subset_counts() {
        // Counts from an independent brute force over all subsets.
        let a = LatticeSpacetime::cylinder(3, 3);
        let m = Region::whole(&a);
        let all = enumerate_convex_subsets(&m, usize::MAX).unwrap();
        let pts = a.points();
        let brute = (0u32..1 << pts.len())
            .filter(|mask| {
                let sel: Vec<Point> = (0..pts.len()).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
                a.is_causally_convex(&a.set_of(&sel).unwrap())
            })
            .count();
        assert_eq!(all.len(), brute);
        assert!(enumerate_convex_subsets(&m, 3).is_none());
    }
}
