//! Graphs with legs, encoded as finite flag sets.
//!
//! A graph is a finite set of flags `0..n` together with a root map `r` and an
//! involution `iota`.  Vertices are the fixed points of `r` (equivalently its
//! image), which `iota` must also fix.  A non-vertex flag is a *half-edge*:
//! half-edges swapped by `iota` form an edge, half-edges fixed by `iota` are
//! *legs* (labelled ends).  Legs can carry an optional marking (a bijection
//! with `1..=n`) and an optional positive integer weight; both are used when a
//! graph is the source or target of a cover.
//!
//! Edges are identified externally by the smaller of their two flag ids, so
//! identifiers survive serialization round trips.

pub mod families;
pub mod iso;
pub mod stab;
pub mod trees;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub type Flag = usize;

/// An unoriented edge, stored as its two half-edge flags with the smaller
/// flag first.  The smaller flag doubles as the edge's external identifier.
pub type Edge = (Flag, Flag);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteGraph {
    root: Vec<Flag>,
    inv: Vec<Flag>,
    /// External ids, one per flag, for serialization round trips.
    ext: Vec<u64>,
    /// Marking index -> leg flag.  Empty when the graph is unmarked.
    marking: BTreeMap<u32, Flag>,
    /// Leg flag -> positive weight.  Empty when legs are unweighted.
    leg_weights: BTreeMap<Flag, u64>,
    // Derived, cached at construction:
    vertices: Vec<Flag>,
    edges: Vec<Edge>,
    legs: Vec<Flag>,
}

impl DiscreteGraph {
    /// Validate raw flag data and build a graph.
    ///
    /// Checks, in order: `iota` is an involution; `r` is a retraction whose
    /// image `iota` fixes pointwise; the marking (if any) is a bijection from
    /// `1..=k` onto a subset of the legs and weights (if any) are positive and
    /// live on legs.
    pub fn new(
        root: Vec<Flag>,
        inv: Vec<Flag>,
        marking: BTreeMap<u32, Flag>,
        leg_weights: BTreeMap<Flag, u64>,
    ) -> Result<Self> {
        let n = root.len();
        if inv.len() != n {
            return Err(Error::UsageError(format!(
                "root and involution have different sizes ({} vs {})",
                n,
                inv.len()
            )));
        }
        for f in 0..n {
            if root[f] >= n || inv[f] >= n {
                return Err(Error::UsageError(format!("flag {f} maps outside 0..{n}")));
            }
        }
        for f in 0..n {
            if inv[inv[f]] != f {
                return Err(Error::InvolutionNotIdempotent(f));
            }
        }
        for f in 0..n {
            // r must retract onto its image, and iota must fix every vertex.
            if root[root[f]] != root[f] || inv[root[f]] != root[f] {
                return Err(Error::RootInvolutionIncompatible(f));
            }
        }

        let vertices: Vec<Flag> = (0..n).filter(|&f| root[f] == f).collect();
        let mut edges = Vec::new();
        let mut legs = Vec::new();
        for f in 0..n {
            if root[f] == f {
                continue;
            }
            if inv[f] == f {
                legs.push(f);
            } else if f < inv[f] {
                edges.push((f, inv[f]));
            }
        }

        let leg_set: BTreeSet<Flag> = legs.iter().copied().collect();
        if !marking.is_empty() {
            let k = marking.len() as u32;
            let mut seen = BTreeSet::new();
            for (&i, &f) in &marking {
                if i == 0 || i > k {
                    return Err(Error::MarkingNotBijective(format!(
                        "marking indices must be 1..={k}, got {i}"
                    )));
                }
                if !leg_set.contains(&f) {
                    return Err(Error::MarkingNotBijective(format!(
                        "marking {i} points at flag {f}, which is not a leg"
                    )));
                }
                if !seen.insert(f) {
                    return Err(Error::MarkingNotBijective(format!(
                        "leg flag {f} is marked twice"
                    )));
                }
            }
        }
        for (&f, &w) in &leg_weights {
            if !leg_set.contains(&f) {
                return Err(Error::MarkingNotBijective(format!(
                    "weight on flag {f}, which is not a leg"
                )));
            }
            if w == 0 {
                return Err(Error::MarkingNotBijective(format!(
                    "leg flag {f} has weight 0; weights must be positive"
                )));
            }
        }

        let ext = (0..n as u64).collect();
        Ok(DiscreteGraph {
            root,
            inv,
            ext,
            marking,
            leg_weights,
            vertices,
            edges,
            legs,
        })
    }

    pub fn n_flags(&self) -> usize {
        self.root.len()
    }

    pub fn root(&self, f: Flag) -> Flag {
        self.root[f]
    }

    pub fn inv(&self, f: Flag) -> Flag {
        self.inv[f]
    }

    pub fn is_vertex(&self, f: Flag) -> bool {
        self.root[f] == f
    }

    pub fn is_leg(&self, f: Flag) -> bool {
        self.root[f] != f && self.inv[f] == f
    }

    pub fn is_edge_flag(&self, f: Flag) -> bool {
        self.root[f] != f && self.inv[f] != f
    }

    pub fn vertices(&self) -> &[Flag] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn legs(&self) -> &[Flag] {
        &self.legs
    }

    /// The edge containing flag `f`, as a canonical pair.
    pub fn edge_of(&self, f: Flag) -> Edge {
        let g = self.inv[f];
        (f.min(g), f.max(g))
    }

    /// Position of an edge in `edges()`, given either half-edge flag.
    pub fn edge_index(&self, f: Flag) -> Option<usize> {
        self.edges.binary_search(&self.edge_of(f)).ok()
    }

    /// Is this edge a loop (both endpoints equal)?
    pub fn is_loop(&self, e: Edge) -> bool {
        self.root[e.0] == self.root[e.1]
    }

    /// Non-vertex flags rooted at `v`, ascending.
    pub fn flags_at(&self, v: Flag) -> Vec<Flag> {
        (0..self.n_flags())
            .filter(|&f| f != v && self.root[f] == v)
            .collect()
    }

    /// Valence: the number of half-edges and legs at `v`.
    pub fn val(&self, v: Flag) -> usize {
        self.flags_at(v).len()
    }

    /// Number of legs at `v`.
    pub fn legval(&self, v: Flag) -> usize {
        self.flags_at(v).iter().filter(|&&f| self.is_leg(f)).count()
    }

    pub fn marking(&self) -> &BTreeMap<u32, Flag> {
        &self.marking
    }

    /// The marking index of a leg, if it has one.
    pub fn marking_of(&self, leg: Flag) -> Option<u32> {
        self.marking.iter().find(|&(_, &f)| f == leg).map(|(&i, _)| i)
    }

    pub fn leg_weights(&self) -> &BTreeMap<Flag, u64> {
        &self.leg_weights
    }

    /// Weight of a leg (defaults to 1 when unweighted).
    pub fn leg_weight(&self, leg: Flag) -> u64 {
        self.leg_weights.get(&leg).copied().unwrap_or(1)
    }

    pub fn ext_ids(&self) -> &[u64] {
        &self.ext
    }

    pub fn set_ext_ids(&mut self, ext: Vec<u64>) -> Result<()> {
        if ext.len() != self.n_flags() {
            return Err(Error::UsageError("wrong number of external ids".into()));
        }
        let set: BTreeSet<u64> = ext.iter().copied().collect();
        if set.len() != ext.len() {
            return Err(Error::UsageError("external ids must be distinct".into()));
        }
        self.ext = ext;
        Ok(())
    }

    /// Number of connected components.
    pub fn n_components(&self) -> usize {
        let n = self.n_flags();
        if n == 0 {
            return 0;
        }
        let mut uf = UnionFind::new(n);
        for f in 0..n {
            uf.union(f, self.root[f]);
            uf.union(f, self.inv[f]);
        }
        let mut reps = BTreeSet::new();
        for f in 0..n {
            reps.insert(uf.find(f));
        }
        reps.len()
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() <= 1
    }

    /// First Betti number: `#edges - #vertices + #components`.
    pub fn genus(&self) -> u64 {
        (self.edges.len() as i64 - self.vertices.len() as i64 + self.n_components() as i64) as u64
    }

    /// Contract the edges listed by id.  The edge set must be a disjoint
    /// union of trees (no cycles); legs cannot be contracted.
    pub fn contract(&self, edge_ids: &[Flag]) -> Result<DiscreteGraph> {
        let mut chosen: BTreeSet<Edge> = BTreeSet::new();
        for &id in edge_ids {
            if id >= self.n_flags() || self.is_vertex(id) {
                return Err(Error::UsageError(format!("{id} is not an edge id")));
            }
            if self.is_leg(id) {
                return Err(Error::SubgraphHasLegs(id));
            }
            chosen.insert(self.edge_of(id));
        }
        let mut uf = UnionFind::new(self.n_flags());
        for &(a, b) in &chosen {
            let (u, v) = (self.root[a], self.root[b]);
            if uf.find(u) == uf.find(v) {
                return Err(Error::SubgraphHasCycle);
            }
            uf.union(u, v);
        }
        // Representative vertex per merged class: the smallest member.
        let mut rep: BTreeMap<Flag, Flag> = BTreeMap::new();
        for &v in &self.vertices {
            let r = uf.find(v);
            let e = rep.entry(r).or_insert(v);
            *e = (*e).min(v);
        }

        let dead: BTreeSet<Flag> = chosen.iter().flat_map(|&(a, b)| [a, b]).collect();
        let keep: Vec<Flag> = (0..self.n_flags())
            .filter(|f| !dead.contains(f) && (!self.is_vertex(*f) || rep[&uf.find(*f)] == *f))
            .collect();
        let index: BTreeMap<Flag, Flag> = keep.iter().enumerate().map(|(i, &f)| (f, i)).collect();

        let mut root = Vec::with_capacity(keep.len());
        let mut inv = Vec::with_capacity(keep.len());
        for &f in &keep {
            root.push(index[&rep[&uf.find(self.root[f])]]);
            inv.push(index[&self.inv[f]]);
        }
        let marking = self.marking.iter().map(|(&i, f)| (i, index[f])).collect();
        let weights = self.leg_weights.iter().map(|(f, &w)| (index[f], w)).collect();
        let mut g = DiscreteGraph::new(root, inv, marking, weights)?;
        g.ext = keep.iter().map(|&f| self.ext[f]).collect();
        Ok(g)
    }

    /// Remove all legs, keeping every vertex.  Markings and weights vanish.
    pub fn without_legs(&self) -> DiscreteGraph {
        let keep: Vec<Flag> = (0..self.n_flags()).filter(|&f| !self.is_leg(f)).collect();
        let index: BTreeMap<Flag, Flag> = keep.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let root = keep.iter().map(|&f| index[&self.root[f]]).collect();
        let inv = keep.iter().map(|&f| index[&self.inv[f]]).collect();
        let mut g = DiscreteGraph::new(root, inv, BTreeMap::new(), BTreeMap::new())
            .expect("leg removal preserves validity");
        g.ext = keep.iter().map(|&f| self.ext[f]).collect();
        g
    }

    /// Is every vertex trivalent once legs are counted?
    pub fn is_trivalent(&self) -> bool {
        self.vertices.iter().all(|&v| self.val(v) == 3)
    }
}

/// Incremental construction of a [`DiscreteGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    root: Vec<Flag>,
    inv: Vec<Flag>,
    marking: BTreeMap<u32, Flag>,
    leg_weights: BTreeMap<Flag, u64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a vertex; returns its (self-rooted) flag.
    pub fn vertex(&mut self) -> Flag {
        let f = self.root.len();
        self.root.push(f);
        self.inv.push(f);
        f
    }

    /// Add an edge between two vertices; returns the two half-edge flags
    /// (first one rooted at `u`).
    pub fn edge(&mut self, u: Flag, v: Flag) -> (Flag, Flag) {
        let a = self.root.len();
        let b = a + 1;
        self.root.push(u);
        self.root.push(v);
        self.inv.push(b);
        self.inv.push(a);
        (a, b)
    }

    /// Add a leg at a vertex; returns its flag.
    pub fn leg(&mut self, v: Flag) -> Flag {
        let f = self.root.len();
        self.root.push(v);
        self.inv.push(f);
        f
    }

    /// Add a leg with a marking index (and optional weight) in one go.
    pub fn marked_leg(&mut self, v: Flag, index: u32, weight: Option<u64>) -> Flag {
        let f = self.leg(v);
        self.marking.insert(index, f);
        if let Some(w) = weight {
            self.leg_weights.insert(f, w);
        }
        f
    }

    pub fn mark(&mut self, index: u32, leg: Flag) {
        self.marking.insert(index, leg);
    }

    pub fn weight(&mut self, leg: Flag, w: u64) {
        self.leg_weights.insert(leg, w);
    }

    pub fn build(self) -> Result<DiscreteGraph> {
        DiscreteGraph::new(self.root, self.inv, self.marking, self.leg_weights)
    }
}

/// Plain union-find over `0..n`.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller representative for determinism.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dumbbell() -> DiscreteGraph {
        families::dumbbell()
    }

    #[test]
    fn builder_produces_valid_graphs() {
        let mut b = GraphBuilder::new();
        let u = b.vertex();
        let v = b.vertex();
        b.edge(u, v);
        b.leg(u);
        let g = b.build().unwrap();
        assert_eq!(g.vertices(), &[0, 1]);
        assert_eq!(g.edges(), &[(2, 3)]);
        assert_eq!(g.legs(), &[4]);
        assert_eq!(g.val(0), 2);
        assert_eq!(g.legval(0), 1);
        assert_eq!(g.val(1), 1);
        assert_eq!(g.genus(), 0);
    }

    #[test]
    fn involution_must_be_involutive() {
        // Three flags: 0 is a vertex, 1 -> 2 -> 1 would be fine, but 1 -> 2 -> 0 is not.
        let err = DiscreteGraph::new(
            vec![0, 0, 0],
            vec![0, 2, 1],
            BTreeMap::new(),
            BTreeMap::new(),
        );
        assert!(err.is_ok());
        let err = DiscreteGraph::new(
            vec![0, 0, 0],
            vec![0, 2, 0],
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvolutionNotIdempotent(_)));
    }

    #[test]
    fn root_must_be_retraction_fixed_by_involution() {
        // Root of flag 1 is flag 2, which is itself rooted at 0: not a retraction.
        let err = DiscreteGraph::new(
            vec![0, 2, 0],
            vec![0, 1, 2],
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RootInvolutionIncompatible(_)));
        // A "vertex" moved by iota is also rejected: iota swaps 0 and 1 but both are roots.
        let err = DiscreteGraph::new(
            vec![0, 1],
            vec![1, 0],
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::RootInvolutionIncompatible(_)));
    }

    #[test]
    fn marking_validation() {
        let mut b = GraphBuilder::new();
        let v = b.vertex();
        let l = b.leg(v);
        b.mark(2, l); // index 2 with only one leg: not a bijection with 1..=1
        assert!(matches!(
            b.build().unwrap_err(),
            Error::MarkingNotBijective(_)
        ));

        let mut b = GraphBuilder::new();
        let v = b.vertex();
        b.leg(v);
        b.weight(v, 1); // weight on a vertex flag
        assert!(matches!(
            b.build().unwrap_err(),
            Error::MarkingNotBijective(_)
        ));
    }

    #[test]
    fn dumbbell_invariants() {
        let g = dumbbell();
        assert_eq!(g.vertices().len(), 2);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.legs().len(), 0);
        assert_eq!(g.genus(), 2);
        assert!(g.is_trivalent());
        let loops: Vec<Edge> = g.edges().iter().copied().filter(|&e| g.is_loop(e)).collect();
        assert_eq!(loops.len(), 2);
    }

    #[test]
    fn contract_bridge_of_dumbbell() {
        let g = dumbbell();
        let bridge = *g
            .edges()
            .iter()
            .find(|&&e| !g.is_loop(e))
            .expect("dumbbell has a bridge");
        let c = g.contract(&[bridge.0]).unwrap();
        assert_eq!(c.vertices().len(), 1);
        assert_eq!(c.edges().len(), 2);
        assert_eq!(c.genus(), 2, "contraction of a tree subgraph preserves genus");
    }

    #[test]
    fn contract_rejects_cycles_and_legs() {
        let g = dumbbell();
        let lp = *g.edges().iter().find(|&&e| g.is_loop(e)).unwrap();
        assert_eq!(g.contract(&[lp.0]).unwrap_err(), Error::SubgraphHasCycle);

        let mut b = GraphBuilder::new();
        let v = b.vertex();
        let l = b.leg(v);
        let g = b.build().unwrap();
        assert_eq!(g.contract(&[l]).unwrap_err(), Error::SubgraphHasLegs(l));
    }

    #[test]
    fn theta_has_genus_two() {
        let g = families::theta();
        assert_eq!(g.vertices().len(), 2);
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.genus(), 2);
        assert!(g.is_trivalent());
        assert!(g.edges().iter().all(|&e| !g.is_loop(e)));
    }

    #[test]
    fn without_legs_keeps_vertices() {
        let mut b = GraphBuilder::new();
        let u = b.vertex();
        let v = b.vertex();
        b.edge(u, v);
        b.marked_leg(u, 1, Some(2));
        let g = b.build().unwrap();
        let h = g.without_legs();
        assert_eq!(h.vertices().len(), 2);
        assert_eq!(h.edges().len(), 1);
        assert!(h.legs().is_empty());
        assert!(h.marking().is_empty());
    }
}
