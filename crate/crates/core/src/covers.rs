//! Finite covers of graphs with legs.
//!
//! A cover is a map of flag sets that commutes with the root and involution
//! maps, together with a positive integer *expansion factor* on every flag.
//! [`Cover::new`] validates the whole package: the map must send edges to
//! edges and legs to legs, the factors must be constant across each edge,
//! every source vertex must be harmonic over every direction at its image,
//! the local Riemann-Hurwitz defect must vanish at every source vertex, and
//! the total expansion over every target flag must be the same global degree.
//!
//! Covers induce metrics on the source: each source edge inherits the length
//! of its image edge divided by its expansion factor, optionally rescaled by
//! the least common multiple of the factors in its fiber so that all edges of
//! one fiber get commensurable lengths (see [`MetricConvention`]).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::lcm;

use crate::divisors::{Divisor, MetricGraph, Point};
use crate::error::{Error, Result};
use crate::graphs::{DiscreteGraph, Edge, Flag};
use crate::rational::Rat;

/// Which length a cover induces on a source edge from its target edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricConvention {
    /// `len(e) = len(pi(e)) / d(e)`: on metric realizations the cover
    /// restricts to each edge as a linear stretch by its expansion factor.
    Harmonic,
    /// `len(e) = lcm * len(pi(e)) / d(e)`, where `lcm` runs over the
    /// expansion factors in the fiber of `pi(e)`.  All edges of one fiber
    /// then have integer length ratios, which is the convention used when
    /// reading off point positions on a stabilized source.
    Rescaled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    source: DiscreteGraph,
    target: DiscreteGraph,
    map: Vec<Flag>,
    degree: Vec<u64>,
    deg: u64,
}

impl Cover {
    /// Validate a flag map with expansion factors and build a cover.
    ///
    /// Checks, in order: shapes and ranges; commutation with root and
    /// involution; no edge or leg collapses; factors constant across edges;
    /// harmonicity at every source vertex; local Riemann-Hurwitz vanishing;
    /// constant total expansion over every target flag.
    pub fn new(
        source: DiscreteGraph,
        target: DiscreteGraph,
        map: Vec<Flag>,
        degree: Vec<u64>,
    ) -> Result<Self> {
        let n = source.n_flags();
        if map.len() != n || degree.len() != n {
            return Err(Error::UsageError(format!(
                "flag map and degrees must cover all {n} source flags"
            )));
        }
        if target.vertices().is_empty() {
            return Err(Error::UsageError("target graph has no vertices".into()));
        }
        for f in 0..n {
            if map[f] >= target.n_flags() {
                return Err(Error::UsageError(format!(
                    "flag {f} maps to {}, outside the target",
                    map[f]
                )));
            }
            if degree[f] == 0 {
                return Err(Error::UsageError(format!(
                    "expansion factor at flag {f} must be positive"
                )));
            }
        }
        for f in 0..n {
            if target.root(map[f]) != map[source.root(f)]
                || target.inv(map[f]) != map[source.inv(f)]
            {
                return Err(Error::UsageError(format!(
                    "flag map does not commute with the graph structure at flag {f}"
                )));
            }
        }
        for f in 0..n {
            if source.is_edge_flag(f) && !target.is_edge_flag(map[f]) {
                return Err(Error::MapContractsEdge(f));
            }
            if source.is_leg(f) && !target.is_leg(map[f]) {
                return Err(Error::MapContractsEdge(f));
            }
        }
        for f in 0..n {
            if degree[f] != degree[source.inv(f)] {
                return Err(Error::UsageError(format!(
                    "expansion factor differs across the edge at flag {f}"
                )));
            }
        }
        for &v in source.vertices() {
            let w = map[v];
            for h in target.flags_at(w) {
                let s: u64 = source
                    .flags_at(v)
                    .iter()
                    .filter(|&&f| map[f] == h)
                    .map(|&f| degree[f])
                    .sum();
                if s != degree[v] {
                    return Err(Error::NotHarmonic(v));
                }
            }
        }
        for &v in source.vertices() {
            let local = source.val(v) as i64 - 2;
            let below = degree[v] as i64 * (target.val(map[v]) as i64 - 2);
            if local != below {
                return Err(Error::RHNonzero(v));
            }
        }
        let top = target.vertices()[0];
        let deg: u64 = source
            .vertices()
            .iter()
            .filter(|&&v| map[v] == top)
            .map(|&v| degree[v])
            .sum();
        if deg == 0 {
            return Err(Error::FiberDegreeMismatch(top));
        }
        for t in 0..target.n_flags() {
            let s: u64 = (0..n).filter(|&f| map[f] == t).map(|f| degree[f]).sum();
            if s != deg {
                return Err(Error::FiberDegreeMismatch(target.root(t)));
            }
        }
        Ok(Cover {
            source,
            target,
            map,
            degree,
            deg,
        })
    }

    pub fn source(&self) -> &DiscreteGraph {
        &self.source
    }

    pub fn target(&self) -> &DiscreteGraph {
        &self.target
    }

    /// Global degree: total expansion over any target flag.
    pub fn deg(&self) -> u64 {
        self.deg
    }

    pub fn flag_map(&self) -> &[Flag] {
        &self.map
    }

    pub fn map_of(&self, f: Flag) -> Flag {
        self.map[f]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degree
    }

    pub fn degree_of(&self, f: Flag) -> u64 {
        self.degree[f]
    }

    /// Expansion factor of a source edge (equal on both half-edges).
    pub fn edge_degree(&self, e: Edge) -> u64 {
        self.degree[e.0]
    }

    /// Source flags over a target flag, ascending.
    pub fn fiber(&self, t: Flag) -> Vec<Flag> {
        (0..self.source.n_flags())
            .filter(|&f| self.map[f] == t)
            .collect()
    }

    /// Expansion factors over a target flag, sorted descending: a partition
    /// of the global degree.
    pub fn fiber_profile(&self, t: Flag) -> Vec<u64> {
        let mut p: Vec<u64> = self.fiber(t).into_iter().map(|f| self.degree[f]).collect();
        p.sort_unstable_by(|a, b| b.cmp(a));
        p
    }

    /// Least common multiple of the expansion factors over a target flag.
    pub fn fiber_lcm(&self, t: Flag) -> u64 {
        self.fiber(t)
            .into_iter()
            .map(|f| self.degree[f])
            .fold(1, lcm)
    }

    /// The length a source edge inherits per unit length of its image.
    pub fn length_factor(&self, e: Edge, conv: MetricConvention) -> Rat {
        let d = self.edge_degree(e);
        let num: u64 = match conv {
            MetricConvention::Harmonic => 1,
            MetricConvention::Rescaled => self.fiber_lcm(self.map[e.0]),
        };
        Rat::new(BigInt::from(num), BigInt::from(d))
    }

    /// Length factors as a matrix: rows are source edges, columns are target
    /// edges (both in `edges()` order), with one nonzero entry per row.
    pub fn length_matrix(&self, conv: MetricConvention) -> Vec<Vec<Rat>> {
        let rows = self.source.edges();
        let cols = self.target.edges();
        let mut m = vec![vec![Rat::from(BigInt::from(0)); cols.len()]; rows.len()];
        for (i, &e) in rows.iter().enumerate() {
            let j = self
                .target
                .edge_index(self.map[e.0])
                .expect("edge flags map to edge flags");
            m[i][j] = self.length_factor(e, conv);
        }
        m
    }

    /// Induced source edge lengths, keyed by source edge id, from target
    /// lengths keyed by target edge id.
    pub fn pulled_back_lengths(
        &self,
        target_lengths: &BTreeMap<Flag, Rat>,
        conv: MetricConvention,
    ) -> Result<BTreeMap<Flag, Rat>> {
        let mut out = BTreeMap::new();
        for &e in self.source.edges() {
            let te = self.target.edge_of(self.map[e.0]);
            let len = target_lengths.get(&te.0).ok_or_else(|| {
                Error::UsageError(format!("no length for target edge {}", te.0))
            })?;
            out.insert(e.0, self.length_factor(e, conv) * len);
        }
        Ok(out)
    }

    /// The source as a metric graph: legs dropped, edges carrying the induced
    /// lengths.  Fails if the legless source is disconnected.
    pub fn realize_source(
        &self,
        target_lengths: &BTreeMap<Flag, Rat>,
        conv: MetricConvention,
    ) -> Result<MetricGraph> {
        let lens = self.pulled_back_lengths(target_lengths, conv)?;
        metric_without_legs(&self.source, &lens)
    }

    /// The target as a metric graph with the given lengths, legs dropped.
    pub fn realize_target(&self, target_lengths: &BTreeMap<Flag, Rat>) -> Result<MetricGraph> {
        metric_without_legs(&self.target, target_lengths)
    }

    /// Pull back a vertex-supported divisor: a target vertex contributes each
    /// of its preimages with multiplicity equal to the local degree there.
    pub fn pullback(&self, on_target: &Divisor) -> Result<Divisor> {
        let mut out = Divisor::new();
        for (p, c) in on_target.entries() {
            let &Point::Vertex(w) = p else {
                return Err(Error::UsageError(
                    "pullback needs a vertex-supported divisor".into(),
                ));
            };
            for &v in self.source.vertices() {
                if self.map[v] == w {
                    out.add(Point::Vertex(v), self.degree[v] as i64 * c);
                }
            }
        }
        Ok(out)
    }

    /// Push a vertex-supported divisor forward along the cover, preserving
    /// coefficients.
    pub fn pushforward(&self, on_source: &Divisor) -> Result<Divisor> {
        let mut out = Divisor::new();
        for (p, c) in on_source.entries() {
            let &Point::Vertex(v) = p else {
                return Err(Error::UsageError(
                    "pushforward needs a vertex-supported divisor".into(),
                ));
            };
            out.add(Point::Vertex(self.map[v]), c);
        }
        Ok(out)
    }

    /// The global degree/Euler-characteristic identity, with the local defect
    /// at every source vertex.  A validated cover always satisfies it; the
    /// report exists so callers can print the certificate.
    pub fn rh_identity(&self) -> RhReport {
        let euler = |g: &DiscreteGraph| -> i64 {
            g.vertices().iter().map(|&v| g.val(v) as i64 - 2).sum()
        };
        let source_euler = euler(&self.source);
        let target_euler = euler(&self.target);
        let local_defects = self
            .source
            .vertices()
            .iter()
            .map(|&v| {
                let d = (self.source.val(v) as i64 - 2)
                    - self.degree[v] as i64 * (self.target.val(self.map[v]) as i64 - 2);
                (v, d)
            })
            .collect::<BTreeMap<_, _>>();
        let expected_source_euler = self.deg as i64 * target_euler;
        RhReport {
            degree: self.deg,
            source_euler,
            target_euler,
            expected_source_euler,
            holds: source_euler == expected_source_euler
                && local_defects.values().all(|&d| d == 0),
            local_defects,
        }
    }
}

/// A printable certificate for the degree/Euler identity of a cover.
///
/// `source_euler` is the sum of `val(v) - 2` over source vertices (which is
/// `2g - 2 + #legs` for a connected graph), and must equal `degree` times the
/// same sum for the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhReport {
    pub degree: u64,
    pub source_euler: i64,
    pub target_euler: i64,
    pub expected_source_euler: i64,
    pub local_defects: BTreeMap<Flag, i64>,
    pub holds: bool,
}

/// Strip legs and attach lengths (keyed by edge ids of the original graph).
fn metric_without_legs(g: &DiscreteGraph, lengths: &BTreeMap<Flag, Rat>) -> Result<MetricGraph> {
    let bare = g.without_legs();
    let mut lens = BTreeMap::new();
    for &(p, q) in bare.edges() {
        let orig = (bare.ext_ids()[p] as Flag, bare.ext_ids()[q] as Flag);
        let len = lengths.get(&orig.0.min(orig.1)).ok_or_else(|| {
            Error::UsageError(format!("no length for edge {}", orig.0.min(orig.1)))
        })?;
        lens.insert(p, len.clone());
    }
    MetricGraph::new(bare, lens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphBuilder;
    use crate::rational::parse_rat;

    /// One vertex with three marked legs.
    fn star() -> DiscreteGraph {
        let mut b = GraphBuilder::new();
        let w = b.vertex();
        for i in 1..=3 {
            b.marked_leg(w, i, None);
        }
        b.build().unwrap()
    }

    /// Degree-2 cover of the star by one vertex with four legs: two legs are
    /// doubled, the third direction splits into two simple legs.
    fn star_double_cover() -> Cover {
        let mut b = GraphBuilder::new();
        let v = b.vertex();
        for _ in 0..4 {
            b.leg(v);
        }
        let src = b.build().unwrap();
        Cover::new(src, star(), vec![0, 1, 2, 3, 3], vec![2, 2, 2, 1, 1]).unwrap()
    }

    /// Degree-2 cover of a two-vertex path (two legs per end) whose middle
    /// edge is doubled.
    fn path_double_cover() -> Cover {
        let mut b = GraphBuilder::new();
        let w1 = b.vertex();
        let w2 = b.vertex();
        b.edge(w1, w2); // flags 2, 3
        b.leg(w1); // 4
        b.leg(w1); // 5
        b.leg(w2); // 6
        b.leg(w2); // 7
        let tgt = b.build().unwrap();

        let mut b = GraphBuilder::new();
        let v1 = b.vertex();
        let v2 = b.vertex();
        b.edge(v1, v2); // flags 2, 3
        b.leg(v1); // 4 -> leg 4
        b.leg(v1); // 5 -> leg 4
        b.leg(v1); // 6 -> leg 5, doubled
        b.leg(v2); // 7 -> leg 6
        b.leg(v2); // 8 -> leg 6
        b.leg(v2); // 9 -> leg 7, doubled
        let src = b.build().unwrap();

        let map = vec![0, 1, 2, 3, 4, 4, 5, 6, 6, 7];
        let deg = vec![2, 2, 2, 2, 1, 1, 2, 1, 1, 2];
        Cover::new(src, tgt, map, deg).unwrap()
    }

    #[test]
    fn star_cover_validates() {
        let c = star_double_cover();
        assert_eq!(c.deg(), 2);
        assert_eq!(c.fiber_profile(1), vec![2]);
        assert_eq!(c.fiber_profile(3), vec![1, 1]);
        assert_eq!(c.fiber_lcm(3), 1);
        let r = c.rh_identity();
        assert!(r.holds);
        assert_eq!(r.source_euler, 2);
        assert_eq!(r.target_euler, 1);
    }

    #[test]
    fn path_cover_metrics() {
        let c = path_double_cover();
        assert_eq!(c.deg(), 2);
        let e = c.source().edges()[0];
        assert_eq!(c.edge_degree(e), 2);
        assert_eq!(c.length_factor(e, MetricConvention::Harmonic), parse_rat("1/2").unwrap());
        // The middle fiber is a single doubled edge, so lcm = 2 and the
        // rescaled factor is 1.
        assert_eq!(c.length_factor(e, MetricConvention::Rescaled), parse_rat("1").unwrap());

        let tlens: BTreeMap<usize, Rat> = [(2, parse_rat("5").unwrap())].into();
        let lens = c
            .pulled_back_lengths(&tlens, MetricConvention::Harmonic)
            .unwrap();
        assert_eq!(lens[&2], parse_rat("5/2").unwrap());

        let mg = c.realize_source(&tlens, MetricConvention::Harmonic).unwrap();
        assert_eq!(mg.graph().edges().len(), 1);
        assert_eq!(mg.genus(), 0);

        let m = c.length_matrix(MetricConvention::Harmonic);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0][0], parse_rat("1/2").unwrap());
    }

    #[test]
    fn divisor_transfer() {
        let c = path_double_cover();
        let dw = Divisor::of([(Point::Vertex(0), 1), (Point::Vertex(1), 3)]);
        let pulled = c.pullback(&dw).unwrap();
        assert_eq!(pulled.degree(), 2 * dw.degree());
        assert_eq!(pulled.coeff(&Point::Vertex(0)), 2);
        assert_eq!(pulled.coeff(&Point::Vertex(1)), 6);
        let back = c.pushforward(&pulled).unwrap();
        assert_eq!(back, dw.scaled(2));

        let interior = Divisor::of([(
            Point::Interior {
                edge: 2,
                offset: parse_rat("1/2").unwrap(),
            },
            1,
        )]);
        assert!(c.pullback(&interior).is_err());
    }

    #[test]
    fn harmonicity_is_enforced() {
        let mut b = GraphBuilder::new();
        let v = b.vertex();
        for _ in 0..4 {
            b.leg(v);
        }
        let src = b.build().unwrap();
        // Degree 2 at flag 3 makes direction 3 sum to 3 over a degree-2 vertex.
        let err = Cover::new(src, star(), vec![0, 1, 2, 3, 3], vec![2, 2, 2, 2, 1]).unwrap_err();
        assert_eq!(err, Error::NotHarmonic(0));
    }

    #[test]
    fn local_defect_is_enforced() {
        // Three doubled legs over the star: harmonic, but val(v) - 2 = 1
        // while d * (val(w) - 2) = 2.
        let mut b = GraphBuilder::new();
        let v = b.vertex();
        for _ in 0..3 {
            b.leg(v);
        }
        let src = b.build().unwrap();
        let err = Cover::new(src, star(), vec![0, 1, 2, 3], vec![2, 2, 2, 2]).unwrap_err();
        assert_eq!(err, Error::RHNonzero(0));
    }

    #[test]
    fn collapses_and_edge_inconsistencies_are_rejected() {
        // Collapse: squash the whole source onto one target vertex star,
        // sending the middle edge into a leg.  The map still commutes with
        // roots and involutions, so the contraction check is what fires.
        let c = path_double_cover();
        let map = vec![0, 0, 4, 4, 4, 4, 5, 5, 5, 5];
        let err = Cover::new(
            c.source().clone(),
            c.target().clone(),
            map,
            c.degrees().to_vec(),
        )
        .unwrap_err();
        assert_eq!(err, Error::MapContractsEdge(2));

        // Factor mismatch across the middle edge.
        let mut deg = c.degrees().to_vec();
        deg[3] = 1;
        let err = Cover::new(
            c.source().clone(),
            c.target().clone(),
            c.flag_map().to_vec(),
            deg,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UsageError(_)));
    }

    #[test]
    fn disconnected_source_with_constant_fiber_degree_is_fine() {
        // Identity star plus the degree-2 star cover: a valid degree-3 cover.
        let mut b = GraphBuilder::new();
        let v1 = b.vertex();
        b.leg(v1); // 1
        b.leg(v1); // 2
        b.leg(v1); // 3
        let v2 = b.vertex(); // 4
        b.leg(v2); // 5
        b.leg(v2); // 6
        b.leg(v2); // 7
        b.leg(v2); // 8
        let src = b.build().unwrap();
        let map = vec![0, 1, 2, 3, 0, 1, 2, 3, 3];
        let deg = vec![1, 1, 1, 1, 2, 2, 2, 1, 1];
        let c = Cover::new(src, star(), map, deg).unwrap();
        assert_eq!(c.deg(), 3);
        assert_eq!(c.fiber_profile(3), vec![1, 1, 1]);
    }

    #[test]
    fn missing_fiber_over_second_component() {
        // Target with two star components, source covering only the first.
        let mut b = GraphBuilder::new();
        let w1 = b.vertex();
        b.leg(w1); // 1
        b.leg(w1); // 2
        b.leg(w1); // 3
        let w2 = b.vertex(); // 4
        b.leg(w2); // 5
        b.leg(w2); // 6
        b.leg(w2); // 7
        let tgt = b.build().unwrap();
        let mut b = GraphBuilder::new();
        let v = b.vertex();
        b.leg(v);
        b.leg(v);
        b.leg(v);
        let src = b.build().unwrap();
        let err = Cover::new(src, tgt, vec![0, 1, 2, 3], vec![1, 1, 1, 1]).unwrap_err();
        assert_eq!(err, Error::FiberDegreeMismatch(4));
    }
}
