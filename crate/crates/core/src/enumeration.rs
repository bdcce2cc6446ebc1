//! Exhaustive enumeration of degree-`g` covers of marked trivalent trees.
//!
//! Over a trivalent target vertex, the fiber of a validated cover is a
//! disjoint union of single source vertices, each described by its local
//! degree `d` and one partition of `d` per incident target direction.  Two
//! conditions cut out the vertices that can actually occur: the partition
//! lengths must sum to `d + 2` (local genus zero) and the genus-zero Hurwitz
//! number of the partition triple must be positive, otherwise no smoothing of
//! the vertex exists.  Such a vertex is a [`LocalBlock`]; a full fiber is a
//! [`LocalCover`].
//!
//! Covers over a fixed tree are assembled depth-first from the vertex that
//! carries leg 1: the fiber over an already-crossed edge prescribes a list of
//! open half-edges ("stubs"), [`local_covers`] lists the admissible block
//! decompositions of the next fiber, and an [`EdgeMatching`] glues the stubs
//! to the half-edges the new blocks expose.  Completed assemblies are
//! validated as [`Cover`]s, filtered to connected sources of the expected
//! genus, and deduplicated up to isomorphism over the target.
//!
//! [`enumerate_all`] runs this over every labelled tree (the brute-force
//! mode, comfortable at `g = 2` where there are 105 trees) or over
//! leg-1-rooted tree shapes with orbit bookkeeping (the mode that scales to
//! `g = 3` and `4`).  The rest of the module checks structural facts about
//! the results — degrees of pruned material, the shapes of loops, and the
//! rigid weight pattern on covers whose stabilized source is a garland of
//! loops — which later multiplicity computations silently rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use num_traits::Zero;
use rayon::prelude::*;

use crate::covers::Cover;
use crate::error::{Error, Result};
use crate::graphs::iso::{find_isomorphisms, find_isomorphisms_colored, IsoOpts, MarkingMode};
use crate::graphs::stab::{stabilize, Stabilization};
use crate::graphs::trees::{labelled_trivalent_trees, tree_shapes};
use crate::graphs::{DiscreteGraph, Flag, GraphBuilder};
use crate::hurwitz::{cover_automorphisms, hurwitz_genus0, partitions_of, transfer_matrix, Partition};

/// Branching data for a cover of a tree with `m` marked legs: one partition
/// of the degree per leg, indexed by the leg marking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamificationProfile {
    degree: u64,
    /// `profiles[i]` sits over the leg marked `i + 1`.
    profiles: Vec<Partition>,
}

impl RamificationProfile {
    /// The profile whose covers locate Weierstrass points: degree `g`, full
    /// ramification `(g)` over leg 1 and a simple branch point `(2,1^{g-2})`
    /// over each of the remaining `3g - 1` legs.
    pub fn weierstrass(g: u64) -> Result<Self> {
        if g < 2 {
            return Err(Error::GenusTooSmall(g));
        }
        let simple: Partition = std::iter::once(2)
            .chain(std::iter::repeat(1).take(g as usize - 2))
            .collect();
        let mut profiles = vec![vec![g]];
        profiles.extend(std::iter::repeat(simple).take(3 * g as usize - 1));
        Ok(RamificationProfile {
            degree: g,
            profiles,
        })
    }

    /// Arbitrary branching data; the machinery below is profile-generic even
    /// though only the Weierstrass entry point is public.
    #[cfg(test)]
    pub(crate) fn custom(degree: u64, profiles: Vec<Partition>) -> Result<Self> {
        for p in &profiles {
            if p.iter().sum::<u64>() != degree {
                return Err(Error::ProfileSumMismatch(degree));
            }
        }
        Ok(RamificationProfile { degree, profiles })
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// Number of marked legs on the target.
    pub fn n_legs(&self) -> usize {
        self.profiles.len()
    }

    /// Partition over the leg with the given marking (1-based).
    pub fn leg_profile(&self, marking: u32) -> &Partition {
        &self.profiles[marking as usize - 1]
    }

    /// Number of marked points on the source, one per partition part.
    pub fn n_marked_points(&self) -> u64 {
        self.profiles.iter().map(|p| p.len() as u64).sum()
    }

    /// Genus every connected source must have, from the global count of
    /// half-edge directions: `sum(val - 2)` over the source equals `degree`
    /// times the same sum over the target.
    pub fn source_genus(&self) -> u64 {
        let m = self.n_legs() as i64;
        let d = self.degree as i64;
        let n = self.n_marked_points() as i64;
        let twice = d * (m - 2) - n + 2;
        debug_assert!(twice >= 0 && twice % 2 == 0, "inconsistent profile");
        (twice / 2) as u64
    }
}

/// A single source vertex over a trivalent target vertex: its local degree
/// and one partition of that degree per target direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LocalBlock {
    pub degree: u64,
    pub profiles: [Partition; 3],
}

/// A complete fiber over a trivalent target vertex: a multiset of blocks
/// whose degrees sum to the cover degree and whose direction-wise partitions
/// concatenate to the fiber partition of each direction.  `legs` records
/// which of the three directions are marked legs of the target, so that the
/// assembler turns those parts into weighted marked points rather than open
/// half-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCover {
    pub blocks: Vec<LocalBlock>,
    pub legs: [bool; 3],
}

/// All single-vertex local covers of degrees `1..=cap`: partition triples
/// with length sum `degree + 2` and positive Hurwitz number.  Sorted
/// descending so that multiset enumeration can walk it monotonically.
fn block_catalog(cap: u64) -> Result<Arc<Vec<LocalBlock>>> {
    static CACHE: OnceLock<Mutex<BTreeMap<u64, Arc<Vec<LocalBlock>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(hit) = cache.lock().expect("catalog cache poisoned").get(&cap) {
        return Ok(hit.clone());
    }
    let mut blocks = Vec::new();
    for d in 1..=cap {
        let parts = partitions_of(d);
        for (a, b, c) in itertools::iproduct!(&parts, &parts, &parts) {
            if a.len() + b.len() + c.len() != d as usize + 2 {
                continue;
            }
            let h = hurwitz_genus0(d, &[a.clone(), b.clone(), c.clone()])?;
            if !h.is_zero() {
                blocks.push(LocalBlock {
                    degree: d,
                    profiles: [a.clone(), b.clone(), c.clone()],
                });
            }
        }
    }
    blocks.sort_unstable_by(|x, y| y.cmp(x));
    let shared = Arc::new(blocks);
    cache
        .lock()
        .expect("catalog cache poisoned")
        .insert(cap, shared.clone());
    Ok(shared)
}

/// Remove `parts` from each direction's remaining multiset, or report that
/// some part is not available.
fn remove_parts(remaining: &[Vec<u64>; 3], profiles: &[Partition; 3]) -> Option<[Vec<u64>; 3]> {
    let mut next = remaining.clone();
    for dir in 0..3 {
        for &p in &profiles[dir] {
            let i = next[dir].iter().position(|&q| q == p)?;
            next[dir].swap_remove(i);
        }
    }
    Some(next)
}

/// All decompositions of a fiber with the given direction partitions into
/// admissible blocks.  Duplicate-free: blocks are chosen in a fixed
/// descending order, so each multiset appears exactly once.
pub fn local_covers(
    d: u64,
    profiles: &[Partition; 3],
    legs: [bool; 3],
) -> Result<Vec<LocalCover>> {
    let mut targets: [Vec<u64>; 3] = Default::default();
    for dir in 0..3 {
        if profiles[dir].iter().any(|&p| p == 0) {
            return Err(Error::UsageError("partition parts must be positive".into()));
        }
        if profiles[dir].iter().sum::<u64>() != d {
            return Err(Error::ProfileSumMismatch(d));
        }
        targets[dir] = profiles[dir].clone();
        targets[dir].sort_unstable_by(|a, b| b.cmp(a));
    }
    let catalog = block_catalog(d)?;
    let usable: Vec<&LocalBlock> = catalog
        .iter()
        .filter(|b| b.degree <= d && remove_parts(&targets, &b.profiles).is_some())
        .collect();

    fn search(
        usable: &[&LocalBlock],
        from: usize,
        remaining: &[Vec<u64>; 3],
        left: u64,
        acc: &mut Vec<LocalBlock>,
        legs: [bool; 3],
        out: &mut Vec<LocalCover>,
    ) {
        if left == 0 {
            if remaining.iter().all(|r| r.is_empty()) {
                out.push(LocalCover {
                    blocks: acc.clone(),
                    legs,
                });
            }
            return;
        }
        for j in from..usable.len() {
            let b = usable[j];
            if b.degree > left {
                continue;
            }
            if let Some(next) = remove_parts(remaining, &b.profiles) {
                acc.push(b.clone());
                search(usable, j, &next, left - b.degree, acc, legs, out);
                acc.pop();
            }
        }
    }

    let mut out = Vec::new();
    search(&usable, 0, &targets, d, &mut Vec::new(), legs, &mut out);
    Ok(out)
}

/// A weight-preserving pairing between the open half-edges on the two sides
/// of one target edge.  `pairs[k] = (stub, slot)`: index `stub` on the
/// already-built side is glued to index `slot` on the fresh fiber's side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMatching {
    pub pairs: Vec<(usize, usize)>,
}

/// All weight-preserving bijections between two lists of half-edge weights.
/// Empty when the weight multisets differ.
pub fn edge_matchings(stubs: &[u64], slots: &[u64]) -> Vec<EdgeMatching> {
    let mut stub_groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &w) in stubs.iter().enumerate() {
        stub_groups.entry(w).or_default().push(i);
    }
    let mut slot_groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &w) in slots.iter().enumerate() {
        slot_groups.entry(w).or_default().push(i);
    }
    if stub_groups.len() != slot_groups.len()
        || stub_groups
            .iter()
            .zip(slot_groups.iter())
            .any(|((wa, ga), (wb, gb))| wa != wb || ga.len() != gb.len())
    {
        return Vec::new();
    }
    // Per weight class, fix the stubs in ascending order and permute the
    // slots; the cartesian product over classes lists every bijection once.
    let class_choices: Vec<Vec<Vec<(usize, usize)>>> = stub_groups
        .iter()
        .map(|(w, ga)| {
            let gb = &slot_groups[w];
            gb.iter()
                .copied()
                .permutations(gb.len())
                .map(|perm| ga.iter().copied().zip(perm).collect())
                .collect()
        })
        .collect();
    class_choices
        .into_iter()
        .multi_cartesian_product()
        .map(|combo| {
            let mut pairs: Vec<(usize, usize)> = combo.concat();
            pairs.sort_unstable();
            EdgeMatching { pairs }
        })
        .collect()
}

/// Slot provenance inside a fresh fiber: which block exposes it and with
/// which weight.
#[derive(Debug, Clone, Copy)]
struct SlotInfo {
    block: usize,
    weight: u64,
}

/// Keep one representative matching per obvious symmetry: equal-weight slots
/// of one block are interchangeable (a flag permutation at a single source
/// vertex), and entire identical blocks are interchangeable (their subtrees
/// are enumerated independently later).  Demanding ascending stub ids within
/// each symmetry class selects exactly one member per orbit.
fn canonical_matching(m: &EdgeMatching, slots: &[SlotInfo], blocks: &[LocalBlock]) -> bool {
    let mut by_slot = vec![usize::MAX; slots.len()];
    for &(stub, slot) in &m.pairs {
        by_slot[slot] = stub;
    }
    // Within one block, slots of equal weight must receive ascending stubs.
    let mut last: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    for (slot, info) in slots.iter().enumerate() {
        if let Some(&prev) = last.get(&(info.block, info.weight)) {
            if by_slot[slot] < prev {
                return false;
            }
        }
        last.insert((info.block, info.weight), by_slot[slot]);
    }
    // Runs of identical blocks must receive ascending stub sets.
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for (slot, info) in slots.iter().enumerate() {
        tuples[info.block].push(by_slot[slot]);
    }
    for t in &mut tuples {
        t.sort_unstable();
    }
    for i in 1..blocks.len() {
        if blocks[i] == blocks[i - 1] && tuples[i] < tuples[i - 1] {
            return false;
        }
    }
    true
}

/// One direction at a tree vertex, seen from the assembly walk.
#[derive(Debug, Clone, Copy)]
enum DirPlan {
    /// Crossed already: glue to the stubs the parent created.  `flag` is the
    /// half-edge at this vertex, `built_flag` its mate at the parent.
    Parent { flag: Flag, built_flag: Flag },
    /// Still to cross: spawn stubs for the vertex processed at `pos`.
    Child { pos: usize },
    /// A marked leg with a pinned fiber partition.
    Leg { flag: Flag, marking: u32 },
}

struct VertexPlan {
    target: Flag,
    dirs: Vec<DirPlan>,
}

/// Assembly state: the partial source graph in flat arrays, grown and
/// truncated as the walk backtracks.
#[derive(Default)]
struct Assembly {
    vertex_target: Vec<Flag>,
    vertex_degree: Vec<u64>,
    /// `(built vertex, new vertex, target flag at built side, at new side, weight)`
    edges: Vec<(usize, usize, Flag, Flag, u64)>,
    /// `(vertex, target leg flag, weight)`
    legs: Vec<(usize, Flag, u64)>,
}

struct Walk<'a> {
    tree: &'a DiscreteGraph,
    profile: &'a RamificationProfile,
    plans: Vec<VertexPlan>,
    /// Candidate fiber partitions for a free edge direction.
    candidates: Vec<Partition>,
}

impl Walk<'_> {
    /// Realize a completed assembly as a validated cover with canonical
    /// source leg markings: fibers in target-leg order, heavier legs first.
    fn realize(&self, asm: &Assembly) -> Result<Cover> {
        let mut b = GraphBuilder::new();
        let mut map: Vec<Flag> = Vec::new();
        let mut deg: Vec<u64> = Vec::new();
        let vs: Vec<Flag> = asm
            .vertex_target
            .iter()
            .zip(&asm.vertex_degree)
            .map(|(&t, &d)| {
                let v = b.vertex();
                map.push(t);
                deg.push(d);
                v
            })
            .collect();
        for &(va, vb, ta, tb, w) in &asm.edges {
            b.edge(vs[va], vs[vb]);
            map.push(ta);
            deg.push(w);
            map.push(tb);
            deg.push(w);
        }
        let mut made_legs: Vec<(u32, u64, Flag)> = Vec::new();
        for &(v, tleg, w) in &asm.legs {
            let f = b.leg(vs[v]);
            b.weight(f, w);
            map.push(tleg);
            deg.push(w);
            let marking = self
                .tree
                .marking_of(tleg)
                .expect("leg directions carry markings");
            made_legs.push((marking, w, f));
        }
        // Canonical source markings: sort by (target leg, weight descending,
        // creation order) and number consecutively.
        made_legs.sort_by(|a, b| (a.0, std::cmp::Reverse(a.1), a.2).cmp(&(b.0, std::cmp::Reverse(b.1), b.2)));
        for (i, &(_, _, f)) in made_legs.iter().enumerate() {
            b.mark(i as u32 + 1, f);
        }
        Cover::new(b.build()?, self.tree.clone(), map, deg)
    }

    fn extend(
        &self,
        pos: usize,
        pending: &mut Vec<Vec<(usize, u64)>>,
        asm: &mut Assembly,
        out: &mut Vec<Cover>,
    ) -> Result<()> {
        if pos == self.plans.len() {
            let cover = self.realize(asm)?;
            if cover.source().is_connected() {
                debug_assert_eq!(cover.source().genus(), self.profile.source_genus());
                out.push(cover);
            }
            return Ok(());
        }
        let plan = &self.plans[pos];
        let d = self.profile.degree;

        // Pin the three direction profiles: parent from the pending stubs,
        // legs from the branching data, free edges from the candidate list.
        let mut fixed: Vec<Option<Partition>> = Vec::with_capacity(3);
        let mut free: Vec<usize> = Vec::new();
        let mut legs_mask = [false; 3];
        for (i, dir) in plan.dirs.iter().enumerate() {
            match dir {
                DirPlan::Parent { .. } => {
                    let mut ws: Vec<u64> = pending[pos].iter().map(|&(_, w)| w).collect();
                    ws.sort_unstable_by(|a, b| b.cmp(a));
                    fixed.push(Some(ws));
                }
                DirPlan::Child { .. } => {
                    fixed.push(None);
                    free.push(i);
                }
                DirPlan::Leg { marking, .. } => {
                    fixed.push(Some(self.profile.leg_profile(*marking).clone()));
                    legs_mask[i] = true;
                }
            }
        }

        let combos: Vec<Vec<&Partition>> = if free.is_empty() {
            vec![Vec::new()]
        } else {
            free.iter()
                .map(|_| self.candidates.iter().collect::<Vec<_>>())
                .multi_cartesian_product()
                .collect()
        };
        for combo in combos {
            let mut profiles: [Partition; 3] = Default::default();
            let mut pick = combo.iter();
            for i in 0..3 {
                profiles[i] = match &fixed[i] {
                    Some(p) => p.clone(),
                    None => (*pick.next().expect("one candidate per free direction")).clone(),
                };
            }
            for lc in local_covers(d, &profiles, legs_mask)? {
                self.place(pos, &lc, pending, asm, out)?;
            }
        }
        Ok(())
    }

    /// Install one block decomposition at `pos` (for every admissible gluing
    /// to the parent stubs) and recurse.
    fn place(
        &self,
        pos: usize,
        lc: &LocalCover,
        pending: &mut Vec<Vec<(usize, u64)>>,
        asm: &mut Assembly,
        out: &mut Vec<Cover>,
    ) -> Result<()> {
        let plan = &self.plans[pos];
        let base = asm.vertex_target.len();

        // Gluing choices toward the parent, if any.
        let parent_dir = plan.dirs.iter().position(|d| matches!(d, DirPlan::Parent { .. }));
        let matchings: Vec<(Vec<(usize, usize)>, Vec<SlotInfo>)> = match parent_dir {
            None => vec![(Vec::new(), Vec::new())],
            Some(pd) => {
                let stubs = &pending[pos];
                let stub_ws: Vec<u64> = stubs.iter().map(|&(_, w)| w).collect();
                let mut slots: Vec<SlotInfo> = Vec::new();
                for (bi, block) in lc.blocks.iter().enumerate() {
                    for &w in &block.profiles[pd] {
                        slots.push(SlotInfo { block: bi, weight: w });
                    }
                }
                let slot_ws: Vec<u64> = slots.iter().map(|s| s.weight).collect();
                edge_matchings(&stub_ws, &slot_ws)
                    .into_iter()
                    .filter(|m| canonical_matching(m, &slots, &lc.blocks))
                    .map(|m| (m.pairs, slots.clone()))
                    .collect()
            }
        };

        for (pairs, slots) in matchings {
            let vlen = asm.vertex_target.len();
            let elen = asm.edges.len();
            let llen = asm.legs.len();

            for block in &lc.blocks {
                asm.vertex_target.push(plan.target);
                asm.vertex_degree.push(block.degree);
            }
            if let Some(pd) = parent_dir {
                let (flag, built_flag) = match plan.dirs[pd] {
                    DirPlan::Parent { flag, built_flag } => (flag, built_flag),
                    _ => unreachable!(),
                };
                for &(stub, slot) in &pairs {
                    let (sv, w) = pending[pos][stub];
                    debug_assert_eq!(w, slots[slot].weight);
                    asm.edges.push((sv, base + slots[slot].block, built_flag, flag, w));
                }
            }
            let mut spawned: Vec<(usize, Vec<(usize, u64)>)> = Vec::new();
            for (i, dir) in plan.dirs.iter().enumerate() {
                match *dir {
                    DirPlan::Leg { flag, .. } => {
                        for (bi, block) in lc.blocks.iter().enumerate() {
                            for &w in &block.profiles[i] {
                                asm.legs.push((base + bi, flag, w));
                            }
                        }
                    }
                    DirPlan::Child { pos: child, .. } => {
                        let mut stubs = Vec::new();
                        for (bi, block) in lc.blocks.iter().enumerate() {
                            for &w in &block.profiles[i] {
                                stubs.push((base + bi, w));
                            }
                        }
                        spawned.push((child, stubs));
                    }
                    DirPlan::Parent { .. } => {}
                }
            }
            for (child, stubs) in &spawned {
                pending[*child] = stubs.clone();
            }

            self.extend(pos + 1, pending, asm, out)?;

            for (child, _) in &spawned {
                pending[*child].clear();
            }
            asm.vertex_target.truncate(vlen);
            asm.vertex_degree.truncate(vlen);
            asm.edges.truncate(elen);
            asm.legs.truncate(llen);
        }
        Ok(())
    }
}

/// Do two covers of the same tree differ only by a source isomorphism (over
/// the given relabelling of the target)?  Source leg markings are ignored:
/// they are canonical bookkeeping, not structure.
fn isomorphic_over(a: &Cover, b: &Cover, target_relabel: &[Flag]) -> bool {
    let n = a.target().n_flags() as u64;
    let ca: Vec<u64> = (0..a.source().n_flags())
        .map(|f| a.degree_of(f) * n + target_relabel[a.map_of(f)] as u64)
        .collect();
    let cb: Vec<u64> = (0..b.source().n_flags())
        .map(|f| b.degree_of(f) * n + b.map_of(f) as u64)
        .collect();
    !find_isomorphisms_colored(a.source(), b.source(), &ca, &cb).is_empty()
}

/// Are two covers of the same tree isomorphic as marked covers (identity on
/// the target)?
pub fn covers_isomorphic(a: &Cover, b: &Cover) -> bool {
    debug_assert_eq!(a.target(), b.target());
    let id: Vec<Flag> = (0..a.target().n_flags()).collect();
    isomorphic_over(a, b, &id)
}

/// All isomorphism classes of covers of the tree `t` with the given
/// branching data.  The tree must be trivalent with legs marked `1..=m`.
pub fn enumerate_covers_over_tree(
    t: &DiscreteGraph,
    profile: &RamificationProfile,
) -> Result<Vec<Cover>> {
    for &v in t.vertices() {
        if t.val(v) != 3 {
            return Err(Error::NotTrivalent(v));
        }
    }
    if !t.is_connected() || t.genus() != 0 {
        return Err(Error::UsageError("target must be a connected tree".into()));
    }
    let m = profile.n_legs();
    if t.legs().len() != m {
        return Err(Error::UsageError(format!(
            "profile lists {m} legs, tree has {}",
            t.legs().len()
        )));
    }
    for i in 1..=m as u32 {
        if !t.marking().contains_key(&i) {
            return Err(Error::UsageError(format!("tree has no leg marked {i}")));
        }
    }

    // Breadth-first walk from the vertex carrying leg 1.
    let root = t.root(t.marking()[&1]);
    let mut order: Vec<Flag> = vec![root];
    let mut position: BTreeMap<Flag, usize> = BTreeMap::new();
    position.insert(root, 0);
    let mut parent_flag: BTreeMap<Flag, (Flag, Flag)> = BTreeMap::new();
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for f in t.flags_at(v) {
            if t.is_leg(f) {
                continue;
            }
            let u = t.root(t.inv(f));
            if !position.contains_key(&u) {
                position.insert(u, order.len());
                parent_flag.insert(u, (t.inv(f), f));
                order.push(u);
            }
        }
    }

    let plans: Vec<VertexPlan> = order
        .iter()
        .map(|&v| {
            let dirs = t
                .flags_at(v)
                .into_iter()
                .map(|f| {
                    if t.is_leg(f) {
                        DirPlan::Leg {
                            flag: f,
                            marking: t.marking_of(f).expect("all legs are marked"),
                        }
                    } else if parent_flag.get(&v).is_some_and(|&(pf, _)| pf == f) {
                        let (_, built) = parent_flag[&v];
                        DirPlan::Parent {
                            flag: f,
                            built_flag: built,
                        }
                    } else {
                        DirPlan::Child {
                            pos: position[&t.root(t.inv(f))],
                        }
                    }
                })
                .collect();
            VertexPlan { target: v, dirs }
        })
        .collect();

    let walk = Walk {
        tree: t,
        profile,
        plans,
        candidates: partitions_of(profile.degree),
    };
    let mut pending: Vec<Vec<(usize, u64)>> = vec![Vec::new(); order.len()];
    let mut raw = Vec::new();
    walk.extend(0, &mut pending, &mut Assembly::default(), &mut raw)?;

    let mut kept: Vec<Cover> = Vec::new();
    for c in raw {
        if !kept.iter().any(|k| covers_isomorphic(k, &c)) {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// How a tree enumeration treats the interchangeable legs `2..=3g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationMode {
    /// Every labelled tree separately; each cover has orbit size 1.
    FullyLabelled,
    /// One tree per leg-1-rooted shape; covers deduplicated under target
    /// automorphisms fixing leg 1 and weighted by their orbit sizes.
    Quotient,
}

/// A cover together with its enumeration bookkeeping.
#[derive(Debug, Clone)]
pub struct EnumeratedCover {
    pub cover: Cover,
    /// Number of fully-labelled covers this entry stands for.
    pub orbit: u64,
    /// Whether the cover can carry nonzero multiplicity: the stabilized
    /// source is trivalent with `3g - 3` edges and the length-transfer
    /// matrix is invertible.  Everything else has a vanishing determinant
    /// factor.
    pub contributing: bool,
}

/// Default cap on the genus accepted by [`enumerate_all`].
pub const DEFAULT_GENUS_CAP: u64 = 4;

/// Order of the relabelling group: `(3g-1)!` for the simple legs of the
/// target times `((g-2)!)^(3g-1)` for the weight-1 marked points in each
/// simple fiber.
pub fn marking_group_order(g: u64) -> u128 {
    let fact = |k: u64| -> u128 { (1..=k as u128).product() };
    fact(3 * g - 1) * fact(g - 2).pow(3 * g as u32 - 1)
}

/// Does the cover carry a nonzero determinant factor: stabilized source
/// trivalent with `3g - 3` edges (a square length system) and the transfer
/// matrix invertible?
fn carries_weight(pi: &Cover, st: &Stabilization, g: u64) -> bool {
    st.graph.is_trivalent()
        && st.graph.edges().len() as u64 == 3 * g - 3
        && !crate::rational::det(&transfer_matrix(pi, st)).is_zero()
}

/// All degree-`g` covers with the Weierstrass profile over trivalent
/// `3g`-leg trees, with the default genus cap.
pub fn enumerate_all(g: u64, mode: EnumerationMode) -> Result<Vec<EnumeratedCover>> {
    enumerate_all_capped(g, mode, DEFAULT_GENUS_CAP)
}

/// As [`enumerate_all`] with an explicit genus cap.
pub fn enumerate_all_capped(
    g: u64,
    mode: EnumerationMode,
    cap: u64,
) -> Result<Vec<EnumeratedCover>> {
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    if g > cap {
        return Err(Error::GenusCapExceeded { genus: g, cap });
    }
    let profile = RamificationProfile::weierstrass(g)?;
    let m = 3 * g as u32;

    let finish = |cover: Cover, orbit: u64| -> Result<EnumeratedCover> {
        let st = stabilize(cover.source())?;
        let contributing = carries_weight(&cover, &st, g);
        Ok(EnumeratedCover {
            cover,
            orbit,
            contributing,
        })
    };

    match mode {
        EnumerationMode::FullyLabelled => {
            let trees = labelled_trivalent_trees(m)?;
            let lists: Vec<Result<Vec<Cover>>> = trees
                .par_iter()
                .map(|t| enumerate_covers_over_tree(t, &profile))
                .collect();
            let mut out = Vec::new();
            for list in lists {
                for c in list? {
                    out.push(finish(c, 1)?);
                }
            }
            Ok(out)
        }
        EnumerationMode::Quotient => {
            let shapes = tree_shapes(m)?;
            let lists: Vec<Result<Vec<EnumeratedCover>>> = shapes
                .par_iter()
                .map(|shape| {
                    let covers = enumerate_covers_over_tree(&shape.tree, &profile)?;
                    // Fold classes that a target automorphism fixing leg 1
                    // identifies.
                    let auts = find_isomorphisms(
                        &shape.tree,
                        &shape.tree,
                        IsoOpts {
                            markings: MarkingMode::FixLeg(1),
                            weights: false,
                        },
                    );
                    let mut kept: Vec<Cover> = Vec::new();
                    'next: for c in covers {
                        for k in &kept {
                            if auts.iter().any(|a| isomorphic_over(k, &c, a)) {
                                continue 'next;
                            }
                        }
                        kept.push(c);
                    }
                    kept.into_iter()
                        .map(|c| {
                            let orbit = labelled_orbit_size(&c, g)?;
                            finish(c, orbit)
                        })
                        .collect()
                })
                .collect();
            let mut out = Vec::new();
            for list in lists {
                out.extend(list?);
            }
            Ok(out)
        }
    }
}

/// Number of fully-labelled covers in the relabelling orbit of `c`, by
/// orbit–stabilizer: the group order times the count of automorphisms that
/// fix the tree and every source leg, divided by the count of all
/// weight-preserving cover automorphisms.
fn labelled_orbit_size(c: &Cover, g: u64) -> Result<u64> {
    let auts = cover_automorphisms(c);
    let src = c.source();
    let strict = auts
        .iter()
        .filter(|a| {
            a.on_target.iter().enumerate().all(|(i, &f)| i == f)
                && src.legs().iter().all(|&l| a.on_source[l] == l)
        })
        .count() as u128;
    let order = marking_group_order(g);
    let total = order * strict;
    assert!(
        total % auts.len() as u128 == 0,
        "orbit size must divide the group order"
    );
    u64::try_from(total / auts.len() as u128)
        .map_err(|_| Error::UsageError("orbit size exceeds u64".into()))
}

// ---------------------------------------------------------------------------
// Structural checks on enumerated covers.
// ---------------------------------------------------------------------------

/// Pruned source vertices and edges must be unramified: every expunged
/// vertex has local degree 1 and every expunged edge weight 1.
pub fn check_expunged_degrees(pi: &Cover, st: &Stabilization) -> Result<()> {
    for &v in &st.expunged_vertices {
        if pi.degree_of(v) != 1 {
            return Err(Error::WrongProfile(format!(
                "expunged vertex {v} has local degree {}",
                pi.degree_of(v)
            )));
        }
    }
    for &e in &st.expunged_edges {
        if pi.edge_degree(e) != 1 {
            return Err(Error::WrongProfile(format!(
                "expunged edge at flag {} has weight {}",
                e.0,
                pi.edge_degree(e)
            )));
        }
    }
    Ok(())
}

/// The three shapes a loop of a contributing cover can take.  In each case
/// the loop is a two-edge chain lying over the edge of a leaf of the target
/// tree (a vertex with one edge and two legs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopShape {
    /// The leaf carries the fully-ramified leg; the loop splits over the
    /// leaf edge into arms of weights `(a, b)` with `a + b = deg`, and the
    /// chain vertex between the arms carries the heavy marked point.
    FacingHeavyLeg { arms: (u64, u64) },
    /// The loop vertex itself carries the fully-ramified leg; both arms have
    /// weight 1 and the outgoing edge carries the full degree.
    CarryingHeavyLeg,
    /// The loop is away from the heavy leg: arms of weight 1, a weight-2
    /// branch vertex over the leaf, and a weight-2 outgoing edge.
    Plain,
}

/// Classification of one loop of the stabilized source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopReport {
    /// Chain index in the stabilization (also the stab edge index).
    pub chain: usize,
    /// The branch source vertex the loop is attached to.
    pub vertex: Flag,
    pub shape: LoopShape,
}

fn vertex_fiber(pi: &Cover, w: Flag) -> Vec<u64> {
    let mut ds: Vec<u64> = pi
        .source()
        .vertices()
        .iter()
        .filter(|&&v| pi.map_of(v) == w)
        .map(|&v| pi.degree_of(v))
        .collect();
    ds.sort_unstable_by(|a, b| b.cmp(a));
    ds
}

fn simple_partition(g: u64) -> Vec<u64> {
    std::iter::once(2)
        .chain(std::iter::repeat(1).take(g as usize - 2))
        .collect()
}

/// Classify every loop of the stabilized source of a cover in the
/// Weierstrass profile.  Errors describe any structural violation — a loop
/// spread over several target edges, a loop vertex not facing a leaf, or
/// fiber data that fits none of the three admissible shapes.
pub fn classify_loops(pi: &Cover, st: &Stabilization) -> Result<Vec<LoopReport>> {
    let t = pi.target();
    let g = pi.deg();
    let heavy_leg = *t
        .marking()
        .get(&1)
        .ok_or_else(|| Error::WrongProfile("target has no leg marked 1".into()))?;
    let heavy_root = t.root(heavy_leg);
    let heavy_source = {
        let fiber = pi.fiber(heavy_leg);
        let fiber: Vec<Flag> = fiber
            .into_iter()
            .filter(|&f| pi.source().is_leg(f))
            .collect();
        if fiber.len() != 1 {
            return Err(Error::WrongProfile(
                "the fully-ramified leg must have a single leg over it".into(),
            ));
        }
        fiber[0]
    };

    let mut reports = Vec::new();
    for (i, &e) in st.graph.edges().iter().enumerate() {
        if !st.graph.is_loop(e) {
            continue;
        }
        let chain = &st.chains[i];
        let v = chain.vertices[0];
        let fail = |msg: String| Err(Error::WrongProfile(format!("loop at chain {i}: {msg}")));

        let e1 = t.edge_of(pi.map_of(chain.edges[0].0));
        if chain
            .edges
            .iter()
            .any(|&ce| t.edge_of(pi.map_of(ce.0)) != e1)
        {
            return fail("spread over several target edges".into());
        }
        let pv = pi.map_of(v);
        let (r0, r1) = (t.root(e1.0), t.root(e1.1));
        if pv != r0 && pv != r1 {
            return fail("vertex does not sit on the loop's target edge".into());
        }
        let w = if r0 == pv { r1 } else { r0 };
        if t.legval(pv) != 1 {
            return fail(format!("target vertex {pv} must carry exactly one leg"));
        }
        if t.legval(w) != 2 {
            return fail(format!("far target vertex {w} is not a leaf"));
        }
        if chain.edges.len() != 2 {
            return fail(format!("chain has {} edges, expected 2", chain.edges.len()));
        }
        let arms = (
            pi.edge_degree(chain.edges[0]),
            pi.edge_degree(chain.edges[1]),
        );
        // The third direction at pv: its unique edge flag besides e1's.
        let e1_flag_at_pv = if t.root(e1.0) == pv { e1.0 } else { e1.1 };
        let e2_flag = t
            .flags_at(pv)
            .into_iter()
            .find(|&f| t.is_edge_flag(f) && f != e1_flag_at_pv)
            .ok_or_else(|| {
                Error::WrongProfile(format!("target vertex {pv} has no outgoing edge"))
            })?;

        let shape = if heavy_root == w {
            if arms.0 + arms.1 != g {
                return fail(format!("arms {arms:?} do not sum to the degree"));
            }
            if pi.fiber_profile(e1.0) != {
                let mut a = vec![arms.0, arms.1];
                a.sort_unstable_by(|x, y| y.cmp(x));
                a
            } {
                return fail("loop edge carries extra material".into());
            }
            if pi.fiber_profile(e2_flag) != vec![g] {
                return fail("outgoing edge is not fully ramified".into());
            }
            if pi.source().root(heavy_source) != chain.vertices[1] {
                return fail("heavy marked point is not on the loop".into());
            }
            LoopShape::FacingHeavyLeg { arms }
        } else if heavy_root == pv {
            if arms != (1, 1) {
                return fail(format!("arms {arms:?} should both be simple"));
            }
            if pi.fiber_profile(e1.0) != vec![1; g as usize] {
                return fail("loop edge profile is not all ones".into());
            }
            if vertex_fiber(pi, w) != simple_partition(g) {
                return fail("leaf fiber is not a simple branch vertex".into());
            }
            if pi.fiber_profile(e2_flag) != vec![g] {
                return fail("outgoing edge is not fully ramified".into());
            }
            if pi.source().root(heavy_source) != v {
                return fail("heavy marked point is not at the loop vertex".into());
            }
            LoopShape::CarryingHeavyLeg
        } else {
            if arms != (1, 1) {
                return fail(format!("arms {arms:?} should both be simple"));
            }
            if pi.fiber_profile(e1.0) != vec![1; g as usize] {
                return fail("loop edge profile is not all ones".into());
            }
            if vertex_fiber(pi, pv) != simple_partition(g) {
                return fail("loop vertex fiber is not a simple branch vertex".into());
            }
            if pi.fiber_profile(e2_flag) != simple_partition(g) {
                return fail("outgoing edge profile is not simple".into());
            }
            LoopShape::Plain
        };
        reports.push(LoopReport {
            chain: i,
            vertex: v,
            shape,
        });
    }
    Ok(reports)
}

/// Check the rigid weight pattern on covers whose stabilized source is a
/// garland of `g` loops: non-loop chains carry a constant weight, exactly
/// one loop-incident bridge carries the full degree `g` while the others
/// carry 2, at the far end of the heavy bridge the two other chains' weights
/// sum to `g + 1`, at the far end of every other bridge they differ by 1,
/// and each loop's shape matches the weight of its bridge.  Returns
/// `Ok(false)` when the stabilized source is not a loop garland (nothing to
/// check), `Ok(true)` when every condition holds.
pub fn check_garland_weights(pi: &Cover, st: &Stabilization) -> Result<bool> {
    let g = pi.deg();
    let stab = &st.graph;
    let loops: Vec<usize> = (0..stab.edges().len())
        .filter(|&i| stab.is_loop(stab.edges()[i]))
        .collect();
    if loops.len() as u64 != g {
        return Ok(false);
    }
    let fail = |msg: String| Err(Error::WrongProfile(format!("garland weights: {msg}")));

    // Constant weight along every non-loop chain.
    let chain_weight = |i: usize| -> Result<u64> {
        let ws: BTreeSet<u64> = st.chains[i]
            .edges
            .iter()
            .map(|&e| pi.edge_degree(e))
            .collect();
        if ws.len() != 1 {
            return Err(Error::WrongProfile(format!(
                "garland weights: chain {i} has mixed weights {ws:?}"
            )));
        }
        Ok(*ws.iter().next().expect("nonempty chain"))
    };

    let loop_vertices: BTreeSet<Flag> = loops
        .iter()
        .map(|&i| stab.root(stab.edges()[i].0))
        .collect();
    let mut bridges: Vec<(usize, u64)> = Vec::new();
    let mut others: Vec<(usize, u64)> = Vec::new();
    for i in 0..stab.edges().len() {
        if loops.contains(&i) {
            continue;
        }
        let (a, b) = stab.edges()[i];
        let w = chain_weight(i)?;
        if loop_vertices.contains(&stab.root(a)) || loop_vertices.contains(&stab.root(b)) {
            bridges.push((i, w));
        } else {
            others.push((i, w));
        }
    }

    let mut bw: Vec<u64> = bridges.iter().map(|&(_, w)| w).collect();
    bw.sort_unstable_by(|a, b| b.cmp(a));
    let expected: Vec<u64> = std::iter::once(g)
        .chain(std::iter::repeat(2).take(bridges.len().saturating_sub(1)))
        .collect();
    if bw != expected {
        return fail(format!("bridge weights {bw:?}, expected {expected:?}"));
    }

    // Weight relations at the far (non-loop) end of each bridge.
    for &(i, w) in &bridges {
        let (a, b) = stab.edges()[i];
        let ends = [stab.root(a), stab.root(b)];
        let far: Vec<Flag> = ends
            .iter()
            .copied()
            .filter(|u| !loop_vertices.contains(u))
            .collect();
        let Some(&u) = far.first() else {
            continue; // both ends carry loops: the two-loop garland's single bridge
        };
        let incident: Vec<u64> = (0..stab.edges().len())
            .filter(|&j| j != i)
            .flat_map(|j| {
                let (x, y) = stab.edges()[j];
                let mut hits = Vec::new();
                if stab.root(x) == u {
                    hits.push(j);
                }
                if stab.root(y) == u && stab.root(x) != stab.root(y) {
                    hits.push(j);
                }
                hits
            })
            .map(chain_weight)
            .collect::<Result<_>>()?;
        if incident.len() != 2 {
            return fail(format!("bridge {i} far vertex has {} neighbours", incident.len()));
        }
        if w == g && bridges.len() > 1 {
            if incident[0] + incident[1] != g + 1 {
                return fail(format!(
                    "heavy bridge neighbours {incident:?} do not sum to {}",
                    g + 1
                ));
            }
        } else if w == 2 {
            let d = incident[0].abs_diff(incident[1]);
            if d != 1 {
                return fail(format!(
                    "simple bridge neighbours {incident:?} differ by {d}, expected 1"
                ));
            }
        }
    }

    // Loop shapes must match their bridge weights: the unique loop that
    // reacts to the heavy leg sits on the weight-`g` bridge, every plain
    // loop on a weight-2 bridge.  (At `g = 2` the two coincide.)
    let reports = classify_loops(pi, st)?;
    let heavy_loops = reports
        .iter()
        .filter(|r| !matches!(r.shape, LoopShape::Plain))
        .count();
    if heavy_loops != 1 {
        return fail(format!("{heavy_loops} loops react to the heavy leg, expected 1"));
    }
    for r in &reports {
        let sv = stab.root(stab.edges()[r.chain].0);
        let bridge = bridges
            .iter()
            .find(|&&(j, _)| {
                let (x, y) = stab.edges()[j];
                stab.root(x) == sv || stab.root(y) == sv
            })
            .copied();
        let Some((_, w)) = bridge else {
            return fail(format!("loop chain {} has no bridge", r.chain));
        };
        let want = if matches!(r.shape, LoopShape::Plain) { 2 } else { g };
        if w != want {
            return fail(format!(
                "loop chain {chain} has shape {shape:?} on a bridge of weight {w}, expected {want}",
                chain = r.chain,
                shape = r.shape
            ));
        }
    }
    Ok(true)
}
