//! Stabilization of a graph with legs.
//!
//! Stabilizing means: drop all legs, repeatedly prune 1-valent vertices, and
//! merge maximal paths through 2-valent vertices into single edges.  The
//! result is recorded together with the full bookkeeping needed later:
//! which source edges were *expunged* (pruned, i.e. their column in the
//! edge-incidence matrix is zero), which survive inside which merged chain,
//! and where every source vertex ends up.

use std::collections::{BTreeMap, BTreeSet};

use super::{DiscreteGraph, Edge, Flag, GraphBuilder};
use crate::error::{Error, Result};

/// A maximal merged path of surviving edges between branch vertices.
#[derive(Debug, Clone)]
pub struct Chain {
    /// Source vertices along the chain; first and last are branch vertices
    /// (equal for a chain that closes into a loop).
    pub vertices: Vec<Flag>,
    /// Source edges along the chain; `edges[i]` joins `vertices[i]` and
    /// `vertices[i+1]`.
    pub edges: Vec<Edge>,
    /// Travelling `vertices[i] -> vertices[i+1]` leaves through this flag.
    pub out_flags: Vec<Flag>,
}

/// Where a source vertex lands after stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexFate {
    /// Survives as this vertex flag of the stabilized graph.
    Branch(Flag),
    /// Merged into the interior of chain `chain` at `vertices[pos]`.
    OnChain { chain: usize, pos: usize },
    /// Pruned away entirely.
    Expunged,
}

#[derive(Debug, Clone)]
pub struct Stabilization {
    /// The stabilized graph (no legs, every vertex at least trivalent).
    pub graph: DiscreteGraph,
    /// `chains[i]` is the source path merged into `graph.edges()[i]`.  The
    /// orientation convention: walking `graph.edges()[i].0 -> .1` corresponds
    /// to walking `chains[i].vertices` front to back.
    pub chains: Vec<Chain>,
    /// Source edges whose incidence column is zero (pruned).
    pub expunged_edges: Vec<Edge>,
    /// Source vertices pruned away entirely.
    pub expunged_vertices: Vec<Flag>,
    /// Branch source vertex -> stabilized vertex flag.
    pub vertex_to_stab: BTreeMap<Flag, Flag>,
    /// Surviving source edge -> (chain index, position along the chain).
    pub edge_to_chain: BTreeMap<Edge, (usize, usize)>,
    fate: BTreeMap<Flag, VertexFate>,
}

impl Stabilization {
    pub fn fate_of(&self, src_vertex: Flag) -> VertexFate {
        self.fate[&src_vertex]
    }

    /// Is this source edge expunged (zero incidence column)?
    pub fn is_expunged_edge(&self, e: Edge) -> bool {
        !self.edge_to_chain.contains_key(&e)
    }

    /// Flags of surviving source edges (these are exactly the flags a
    /// stabilization-trivial automorphism must fix pointwise).
    pub fn surviving_flags(&self) -> BTreeSet<Flag> {
        self.edge_to_chain
            .keys()
            .flat_map(|&(a, b)| [a, b])
            .collect()
    }

    /// 0/1 incidence matrix: rows are stabilized edges (chains), columns are
    /// source edges in `source.edges()` order.
    pub fn incidence_matrix(&self, source: &DiscreteGraph) -> Vec<Vec<u64>> {
        let cols = source.edges();
        let mut m = vec![vec![0u64; cols.len()]; self.chains.len()];
        for (ci, chain) in self.chains.iter().enumerate() {
            for e in &chain.edges {
                let j = cols.binary_search(e).expect("chain edge belongs to source");
                m[ci][j] = 1;
            }
        }
        m
    }

    /// The stabilized image of a source automorphism given as a flag map.
    /// Returns `None` if the automorphism does not descend (it must permute
    /// surviving edges).
    pub fn induced_map(&self, source: &DiscreteGraph, psi: &[Flag]) -> Option<Vec<Flag>> {
        let stab = &self.graph;
        let mut out = vec![usize::MAX; stab.n_flags()];
        for (&v, &sv) in &self.vertex_to_stab {
            let img = psi[v];
            let &img_stab = self.vertex_to_stab.get(&img)?;
            out[sv] = img_stab;
        }
        for (ci, chain) in self.chains.iter().enumerate() {
            // Where does the first oriented edge go?
            let f = psi[chain.out_flags[0]];
            let e = (f.min(source.inv(f)), f.max(source.inv(f)));
            let &(cj, pos) = self.edge_to_chain.get(&e)?;
            let tgt_chain = &self.chains[cj];
            let forward = tgt_chain.out_flags[pos] == f;
            // chain ci (as stabilized edge i) maps onto stabilized edge cj,
            // preserving or reversing orientation.
            let (a, b) = self.graph.edges()[ci];
            let (c, d) = self.graph.edges()[cj];
            let (c, d) = if forward { (c, d) } else { (d, c) };
            out[a] = c;
            out[b] = d;
        }
        if out.iter().any(|&x| x == usize::MAX) {
            return None;
        }
        Some(out)
    }
}

/// Stabilize a graph.  Fails when nothing at least trivalent remains (genus
/// below 2, e.g. circles or trees).
pub fn stabilize(g: &DiscreteGraph) -> Result<Stabilization> {
    let mut alive: BTreeSet<Edge> = g.edges().iter().copied().collect();
    let core_deg = |alive: &BTreeSet<Edge>, v: Flag| -> usize {
        alive
            .iter()
            .map(|&(a, b)| usize::from(g.root(a) == v) + usize::from(g.root(b) == v))
            .sum()
    };

    // Prune hanging trees: repeatedly delete the edge at any 1-valent vertex.
    loop {
        let prunable = g
            .vertices()
            .iter()
            .copied()
            .find(|&v| core_deg(&alive, v) == 1);
        match prunable {
            None => break,
            Some(v) => {
                let e = *alive
                    .iter()
                    .find(|&&(a, b)| g.root(a) == v || g.root(b) == v)
                    .expect("1-valent vertex has an edge");
                alive.remove(&e);
            }
        }
    }

    let expunged_edges: Vec<Edge> = g
        .edges()
        .iter()
        .copied()
        .filter(|e| !alive.contains(e))
        .collect();
    let expunged_vertices: Vec<Flag> = g
        .vertices()
        .iter()
        .copied()
        .filter(|&v| core_deg(&alive, v) == 0)
        .collect();
    let branch: Vec<Flag> = g
        .vertices()
        .iter()
        .copied()
        .filter(|&v| core_deg(&alive, v) >= 3)
        .collect();
    if branch.is_empty() {
        return Err(Error::GenusTooSmall(g.genus()));
    }

    // Walk chains from branch vertices.
    let mut visited: BTreeSet<Edge> = BTreeSet::new();
    let mut chains: Vec<Chain> = Vec::new();
    let alive_flags_at = |v: Flag| -> Vec<Flag> {
        g.flags_at(v)
            .into_iter()
            .filter(|&f| !g.is_leg(f) && alive.contains(&g.edge_of(f)))
            .collect()
    };
    for &v in &branch {
        for f in alive_flags_at(v) {
            if visited.contains(&g.edge_of(f)) {
                continue;
            }
            let mut vertices = vec![v];
            let mut edges = Vec::new();
            let mut out_flags = Vec::new();
            let mut cur = f;
            loop {
                let e = g.edge_of(cur);
                visited.insert(e);
                edges.push(e);
                out_flags.push(cur);
                let next_v = g.root(g.inv(cur));
                vertices.push(next_v);
                if core_deg(&alive, next_v) >= 3 {
                    break;
                }
                // 2-valent: continue through the unique other alive flag.
                cur = alive_flags_at(next_v)
                    .into_iter()
                    .find(|&h| h != g.inv(cur))
                    .expect("2-valent vertex has another edge");
            }
            chains.push(Chain {
                vertices,
                edges,
                out_flags,
            });
        }
    }

    // Assemble the stabilized graph; builder flag order makes its edges()
    // come out in chain discovery order.
    let mut b = GraphBuilder::new();
    let mut vertex_to_stab = BTreeMap::new();
    for &v in &branch {
        vertex_to_stab.insert(v, b.vertex());
    }
    for chain in &chains {
        let u = vertex_to_stab[chain.vertices.first().unwrap()];
        let w = vertex_to_stab[chain.vertices.last().unwrap()];
        b.edge(u, w);
    }
    let graph = b.build().expect("stabilized graph is valid");
    debug_assert_eq!(graph.edges().len(), chains.len());

    let mut edge_to_chain = BTreeMap::new();
    for (ci, chain) in chains.iter().enumerate() {
        for (pos, &e) in chain.edges.iter().enumerate() {
            edge_to_chain.insert(e, (ci, pos));
        }
    }
    let mut fate: BTreeMap<Flag, VertexFate> = BTreeMap::new();
    for &v in &expunged_vertices {
        fate.insert(v, VertexFate::Expunged);
    }
    for (&v, &sv) in &vertex_to_stab {
        fate.insert(v, VertexFate::Branch(sv));
    }
    for (ci, chain) in chains.iter().enumerate() {
        for (pos, &v) in chain.vertices.iter().enumerate() {
            fate.entry(v).or_insert(VertexFate::OnChain { chain: ci, pos });
        }
    }

    Ok(Stabilization {
        graph,
        chains,
        expunged_edges,
        expunged_vertices,
        vertex_to_stab,
        edge_to_chain,
        fate,
    })
}
