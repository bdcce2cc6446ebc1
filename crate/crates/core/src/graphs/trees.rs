//! Enumeration of trivalent trees with marked legs.
//!
//! Two modes mirror the two ways covers are later counted:
//!
//! * **Fully labelled**: all trees with legs marked `1..=m`, generated by the
//!   classic leg-insertion recursion.  There are `(2m-5)!!` of them.
//! * **Leg-1 rooted shapes**: trees with leg 1 distinguished while legs
//!   `2..=m` are interchangeable.  Each shape representative carries its
//!   orbit size `(m-1)! / |Aut|` under relabelling of legs `2..=m`, so sums
//!   over shapes weighted by orbit reproduce sums over labelled trees.

use super::iso::{automorphism_count, IsoOpts, MarkingMode};
use super::{DiscreteGraph, GraphBuilder};
use crate::error::{Error, Result};

/// All trivalent trees with legs marked `1..=m`, in a deterministic order.
pub fn labelled_trivalent_trees(m: u32) -> Result<Vec<DiscreteGraph>> {
    if m < 3 {
        return Err(Error::UsageError(format!(
            "need at least 3 legs for a trivalent tree, got {m}"
        )));
    }
    // Seed: one vertex with legs 1, 2, 3.
    let mut b = GraphBuilder::new();
    let v = b.vertex();
    for i in 1..=3 {
        b.marked_leg(v, i, None);
    }
    let mut trees = vec![b.build().expect("seed tree is valid")];

    for next in 4..=m {
        let mut bigger = Vec::with_capacity(trees.len() * (2 * next as usize - 5));
        for t in &trees {
            // Insert the new leg into every edge...
            for &(a, bflag) in t.edges() {
                bigger.push(insert_into_edge(t, (a, bflag), next));
            }
            // ...and into every leg.
            for &l in t.legs() {
                bigger.push(insert_into_leg(t, l, next));
            }
        }
        trees = bigger;
    }
    Ok(trees)
}

/// Subdivide edge `(a,b)` with a new vertex carrying leg `new_leg`.
fn insert_into_edge(t: &DiscreteGraph, e: (usize, usize), new_leg: u32) -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let verts: Vec<_> = t.vertices().to_vec();
    let vmap: std::collections::BTreeMap<usize, usize> =
        verts.iter().map(|&v| (v, 0)).collect();
    let mut vmap = vmap;
    for &v in &verts {
        vmap.insert(v, b.vertex());
    }
    let w = b.vertex();
    for &(x, y) in t.edges() {
        if (x, y) == e {
            b.edge(vmap[&t.root(x)], w);
            b.edge(w, vmap[&t.root(y)]);
        } else {
            b.edge(vmap[&t.root(x)], vmap[&t.root(y)]);
        }
    }
    for &l in t.legs() {
        let f = b.leg(vmap[&t.root(l)]);
        if let Some(i) = t.marking_of(l) {
            b.mark(i, f);
        }
    }
    b.marked_leg(w, new_leg, None);
    b.build().expect("edge insertion preserves validity")
}

/// Replace leg `l` at `v` by an edge `v-w` carrying legs `l` and `new_leg` at `w`.
fn insert_into_leg(t: &DiscreteGraph, l: usize, new_leg: u32) -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let mut vmap = std::collections::BTreeMap::new();
    for &v in t.vertices() {
        vmap.insert(v, b.vertex());
    }
    let w = b.vertex();
    for &(x, y) in t.edges() {
        b.edge(vmap[&t.root(x)], vmap[&t.root(y)]);
    }
    for &leg in t.legs() {
        let at = if leg == l { w } else { vmap[&t.root(leg)] };
        let f = b.leg(at);
        if let Some(i) = t.marking_of(leg) {
            b.mark(i, f);
        }
    }
    b.edge(vmap[&t.root(l)], w);
    b.marked_leg(w, new_leg, None);
    b.build().expect("leg insertion preserves validity")
}

/// A leg-1 rooted tree shape with its orbit size under relabelling the
/// remaining legs.
#[derive(Debug, Clone)]
pub struct TreeShape {
    /// Representative with a concrete (but arbitrary) labelling `2..=m`.
    pub tree: DiscreteGraph,
    /// Number of labelled trees in the relabelling orbit.
    pub orbit: u64,
}

/// Binary tree shapes on `k` unlabelled leaves (children unordered).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

fn shapes(k: usize, memo: &mut Vec<Option<Vec<Shape>>>) -> Vec<Shape> {
    if let Some(s) = &memo[k] {
        return s.clone();
    }
    let out = if k == 1 {
        vec![Shape::Leaf]
    } else {
        let mut out = Vec::new();
        for i in 1..=k / 2 {
            let left = shapes(i, memo);
            let right = shapes(k - i, memo);
            for a in &left {
                for c in &right {
                    if i < k - i || a <= c {
                        out.push(Shape::Node(Box::new(a.clone()), Box::new(c.clone())));
                    }
                }
            }
        }
        out
    };
    memo[k] = Some(out.clone());
    out
}

fn shape_to_tree(s: &Shape, m: u32) -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let root = b.vertex();
    b.marked_leg(root, 1, None);
    let mut next = 2u32;
    fn grow(b: &mut GraphBuilder, s: &Shape, at: usize, next: &mut u32) {
        match s {
            Shape::Leaf => {
                b.marked_leg(at, *next, None);
                *next += 1;
            }
            Shape::Node(l, r) => {
                let w = b.vertex();
                b.edge(at, w);
                grow(b, l, w, next);
                grow(b, r, w, next);
            }
        }
    }
    match s {
        Shape::Node(l, r) => {
            grow(&mut b, l, root, &mut next);
            grow(&mut b, r, root, &mut next);
        }
        Shape::Leaf => unreachable!("shapes with one leaf need m = 2"),
    }
    debug_assert_eq!(next, m + 1);
    b.build().expect("shape tree is valid")
}

/// All leg-1 rooted shapes of trivalent trees with `m` legs, each with its
/// relabelling orbit size.
pub fn tree_shapes(m: u32) -> Result<Vec<TreeShape>> {
    if m < 3 {
        return Err(Error::UsageError(format!(
            "need at least 3 legs for a trivalent tree, got {m}"
        )));
    }
    let k = (m - 1) as usize;
    let mut memo = vec![None; k + 1];
    let mut out = Vec::new();
    let factorial: u64 = (1..=k as u64).product();
    for s in shapes(k, &mut memo) {
        let tree = shape_to_tree(&s, m);
        let aut = automorphism_count(
            &tree,
            IsoOpts {
                markings: MarkingMode::FixLeg(1),
                weights: false,
            },
        );
        debug_assert_eq!(factorial % aut, 0);
        out.push(TreeShape {
            tree,
            orbit: factorial / aut,
        });
    }
    Ok(out)
}

/// `(2m-5)!!`, the number of trivalent trees with `m` labelled legs.
pub fn double_factorial_count(m: u32) -> u64 {
    let mut acc = 1u64;
    let mut k = 2 * m as i64 - 5;
    while k > 1 {
        acc *= k as u64;
        k -= 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::iso::{graph_canonical_form, MarkingMode};
    use std::collections::BTreeSet;

    #[test]
    fn labelled_counts_match_double_factorial() {
        for m in 3..=7 {
            let trees = labelled_trivalent_trees(m).unwrap();
            assert_eq!(trees.len() as u64, double_factorial_count(m), "m={m}");
            for t in &trees {
                assert!(t.is_trivalent());
                assert_eq!(t.genus(), 0);
                assert_eq!(t.legs().len(), m as usize);
            }
        }
        assert_eq!(double_factorial_count(6), 105);
        assert_eq!(double_factorial_count(9), 135_135);
    }

    #[test]
    fn labelled_trees_are_pairwise_distinct() {
        let trees = labelled_trivalent_trees(6).unwrap();
        let keys: BTreeSet<Vec<u64>> = trees
            .iter()
            .map(|t| graph_canonical_form(t, MarkingMode::Strict))
            .collect();
        assert_eq!(keys.len(), trees.len(), "insertion never repeats a tree");
    }

    #[test]
    fn shape_counts_follow_wedderburn_etherington() {
        // Shapes on m-1 unlabelled leaves: 3, 23, 207 for m = 6, 9, 12.
        assert_eq!(tree_shapes(6).unwrap().len(), 3);
        assert_eq!(tree_shapes(9).unwrap().len(), 23);
        assert_eq!(tree_shapes(12).unwrap().len(), 207);
    }

    #[test]
    fn shape_orbits_sum_to_labelled_count() {
        for m in 4..=7 {
            let total: u64 = tree_shapes(m).unwrap().iter().map(|s| s.orbit).sum();
            assert_eq!(total, double_factorial_count(m), "m={m}");
        }
    }

    #[test]
    fn six_leg_shapes_have_expected_orbits() {
        // The caterpillar (pairs at both ends) has orbit 60 or 30 depending on
        // where leg 1 sits, and the three-branch star has orbit 15.
        let mut orbits: Vec<u64> = tree_shapes(6).unwrap().iter().map(|s| s.orbit).collect();
        orbits.sort_unstable();
        assert_eq!(orbits, vec![15, 30, 60]);
    }

    #[test]
    fn shapes_are_pairwise_nonisomorphic() {
        let shapes = tree_shapes(9).unwrap();
        let keys: BTreeSet<Vec<u64>> = shapes
            .iter()
            .map(|s| graph_canonical_form(&s.tree, MarkingMode::FixLeg(1)))
            .collect();
        assert_eq!(keys.len(), shapes.len());
    }
}
