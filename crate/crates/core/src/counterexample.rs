//! A pairwise disjoint pair with no time ordering.
//!
//! Two lightlike staircases on a cylinder each reach the other after winding
//! around, so neither order works. The same points on a strip can be ordered.

use std::sync::Arc;

use serde::Serialize;

use crate::lattice::{LatticeSpacetime, Point, Region, Topology};
use crate::time_order::{all_time_orderings, find_time_ordering, DisjointTuple};

pub const T_EXTENT: usize = 16;
pub const X_EXTENT: usize = 8;

pub fn staircases() -> (Vec<Point>, Vec<Point>) {
    let a = (0..4).map(|k| Point::new(5 + k, k)).collect();
    let b = (0..4).map(|k| Point::new(5 + k, k + 4)).collect();
    (a, b)
}

pub fn staircase_tuple(topology: Topology) -> DisjointTuple {
    let amb = LatticeSpacetime::new(T_EXTENT, X_EXTENT, topology).expect("fixed extents are valid");
    let (a, b) = staircases();
    let a = Region::new(&amb, &a).expect("staircase is causally convex");
    let b = Region::new(&amb, &b).expect("staircase is causally convex");
    DisjointTuple::new(Region::whole(&amb), vec![a, b]).expect("staircases are disjoint")
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub topology: Topology,
    /// Result of the polynomial search, as a one-line permutation.
    pub search: Option<Vec<usize>>,
    /// Every ordering found by scanning all permutations.
    pub brute_force: Vec<Vec<usize>>,
    /// `(a, b)` with `a ∈ A`, `b ∈ B` and `a ≤ b`, if any.
    pub a_reaches_b: Option<(Point, Point)>,
    pub b_reaches_a: Option<(Point, Point)>,
    pub picture: String,
}

fn witness(amb: &LatticeSpacetime, from: &Region, to: &Region) -> Option<(Point, Point)> {
    let to = to.points();
    from.points().into_iter().find_map(|p| to.iter().find(|&&q| amb.causal_le(p, q)).map(|&q| (p, q)))
}

pub fn verdict(topology: Topology) -> Verdict {
    let tuple = staircase_tuple(topology);
    let amb = tuple.target().ambient().clone();
    let (a, b) = (&tuple.parts()[0], &tuple.parts()[1]);
    Verdict {
        topology,
        search: find_time_ordering(&tuple).map(|p| p.one_line()),
        brute_force: all_time_orderings(&tuple).iter().map(|p| p.one_line()).collect(),
        a_reaches_b: witness(&amb, a, b),
        b_reaches_a: witness(&amb, b, a),
        picture: render(&amb, &[('A', a), ('B', b)]),
    }
}

/// Rows from latest time down, `x` left to right. `+` marks points in the
/// causal future of both regions.
pub fn render(amb: &Arc<LatticeSpacetime>, labelled: &[(char, &Region)]) -> String {
    let futures: Vec<_> = labelled
        .iter()
        .map(|(_, r)| amb.cone(r.set(), crate::lattice::Direction::Future, crate::lattice::ConeMode::Causal))
        .collect();
    let mut out = String::new();
    for t in (0..amb.time_extent() as i32).rev() {
        out.push_str(&format!("{t:>3} "));
        for x in 0..amb.space_extent() as i32 {
            let p = Point::new(t, x);
            let i = amb.index(p);
            let c = labelled
                .iter()
                .find(|(_, r)| r.contains(p))
                .map(|(c, _)| *c)
                .unwrap_or_else(|| if futures.len() > 1 && futures.iter().all(|f| f.contains(i)) { '+' } else { '.' });
            out.push(c);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cylinder_pair_has_no_ordering() {
        let v = verdict(Topology::Cylinder);
        assert!(v.search.is_none());
        assert!(v.brute_force.is_empty());
        assert!(v.a_reaches_b.is_some() && v.b_reaches_a.is_some());
    }

    #[test]
    fn strip_pair_is_ordered() {
        let v = verdict(Topology::Strip);
        assert!(v.search.is_some());
        assert_eq!(v.brute_force.len(), 1);
        assert_eq!(v.search.as_ref(), v.brute_force.first());
        assert!(v.picture.contains('A') && v.picture.contains('B'));
    }
}
