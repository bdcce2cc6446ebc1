//! Isomorphism search and canonical forms for flag structures.
//!
//! Two engines live here:
//!
//! * [`find_isomorphisms`] enumerates all flag bijections between two graphs
//!   that commute with root and involution (optionally respecting leg
//!   markings and weights).  It is used for model recognition, automorphism
//!   groups, and witness enumeration.
//! * [`ColoredFlags::canonical_form`] computes a canonical encoding of an
//!   arbitrary colored flag structure, optionally carrying one extra
//!   self-map (used to canonicalize a cover source *together with* its
//!   target).  Structures are equal up to color-preserving isomorphism if
//!   and only if their canonical forms are equal byte for byte.


use super::{DiscreteGraph, Flag};

/// How leg markings constrain an isomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingMode {
    /// Every marked leg must map to the leg with the same index.
    Strict,
    /// Only the leg with this index is pinned; other legs move freely.
    FixLeg(u32),
    /// Markings are ignored entirely.
    Ignore,
}

#[derive(Debug, Clone, Copy)]
pub struct IsoOpts {
    pub markings: MarkingMode,
    /// Require equal leg weights.
    pub weights: bool,
}

impl IsoOpts {
    pub fn strict() -> Self {
        IsoOpts {
            markings: MarkingMode::Strict,
            weights: true,
        }
    }

    pub fn shape_only() -> Self {
        IsoOpts {
            markings: MarkingMode::Ignore,
            weights: false,
        }
    }
}

/// All isomorphisms `a -> b` as flag maps (`map[f]` is the image of `f`).
pub fn find_isomorphisms(a: &DiscreteGraph, b: &DiscreteGraph, opts: IsoOpts) -> Vec<Vec<Flag>> {
    let sig = |g: &DiscreteGraph, f: Flag| -> u64 {
        // (kind, valence of root, legs at root, weight, marking constraint)
        let kind = if g.is_vertex(f) {
            0
        } else if g.is_leg(f) {
            1
        } else {
            2
        };
        let v = g.root(f);
        let w = if g.is_leg(f) { g.leg_weight(f) } else { 0 };
        let m = match (opts.markings, g.is_leg(f)) {
            (MarkingMode::Strict, true) => g.marking_of(f).map(|i| i as u64 + 1).unwrap_or(0),
            (MarkingMode::FixLeg(i), true) => u64::from(g.marking_of(f) == Some(i)),
            _ => 0,
        };
        let w = if opts.weights { w } else { 0 };
        fnv(&[kind, g.val(v) as u64, g.legval(v) as u64, w, m])
    };
    let keys_a: Vec<u64> = (0..a.n_flags()).map(|f| sig(a, f)).collect();
    let keys_b: Vec<u64> = (0..b.n_flags()).map(|f| sig(b, f)).collect();
    search_isomorphisms(a, b, &keys_a, &keys_b)
}

/// All isomorphisms `a -> b` preserving caller-supplied per-flag colors
/// (`ca[f] == cb[map[f]]`).  Used to search for cover compatibilities, where
/// the color encodes the flag's image under the cover map and its weight.
pub fn find_isomorphisms_colored(
    a: &DiscreteGraph,
    b: &DiscreteGraph,
    ca: &[u64],
    cb: &[u64],
) -> Vec<Vec<Flag>> {
    assert_eq!(ca.len(), a.n_flags());
    assert_eq!(cb.len(), b.n_flags());
    let key = |g: &DiscreteGraph, c: &[u64], f: Flag| -> u64 {
        let kind = if g.is_vertex(f) {
            0
        } else if g.is_leg(f) {
            1
        } else {
            2
        };
        fnv(&[kind, c[f]])
    };
    let keys_a: Vec<u64> = (0..a.n_flags()).map(|f| key(a, ca, f)).collect();
    let keys_b: Vec<u64> = (0..b.n_flags()).map(|f| key(b, cb, f)).collect();
    search_isomorphisms(a, b, &keys_a, &keys_b)
}

fn search_isomorphisms(
    a: &DiscreteGraph,
    b: &DiscreteGraph,
    keys_a: &[u64],
    keys_b: &[u64],
) -> Vec<Vec<Flag>> {
    let n = a.n_flags();
    if n != b.n_flags()
        || a.vertices().len() != b.vertices().len()
        || a.edges().len() != b.edges().len()
        || a.legs().len() != b.legs().len()
    {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut map: Vec<Option<Flag>> = vec![None; n];
    let mut used = vec![false; n];
    // Assign flags in a fixed order; root/involution images of already
    // assigned flags prune the search hard.
    fn rec(
        a: &DiscreteGraph,
        b: &DiscreteGraph,
        keys_a: &[u64],
        keys_b: &[u64],
        f: Flag,
        map: &mut Vec<Option<Flag>>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<Flag>>,
    ) {
        let n = a.n_flags();
        if f == n {
            out.push(map.iter().map(|m| m.unwrap()).collect());
            return;
        }
        for g in 0..n {
            if used[g] || keys_a[f] != keys_b[g] {
                continue;
            }
            // Consistency with images already chosen.
            let ra = a.root(f);
            if let Some(rb) = map[ra] {
                if b.root(g) != rb {
                    continue;
                }
            } else if ra < f {
                continue; // already assigned slot shouldn't be None
            }
            let ia = a.inv(f);
            if let Some(ib) = map[ia] {
                if b.inv(g) != ib {
                    continue;
                }
            }
            // Reverse direction: anything already mapped *to* g's relatives.
            map[f] = Some(g);
            used[g] = true;
            rec(a, b, keys_a, keys_b, f + 1, map, used, out);
            map[f] = None;
            used[g] = false;
        }
    }
    rec(a, b, keys_a, keys_b, 0, &mut map, &mut used, &mut out);
    out.retain(|m| (0..n).all(|f| b.root(m[f]) == m[a.root(f)] && b.inv(m[f]) == m[a.inv(f)]));
    out
}

/// All automorphisms of a graph under the given options.
pub fn automorphisms(g: &DiscreteGraph, opts: IsoOpts) -> Vec<Vec<Flag>> {
    find_isomorphisms(g, g, opts)
}

/// A flag structure with per-flag colors and one optional extra self-map,
/// ready for canonicalization.
#[derive(Debug, Clone)]
pub struct ColoredFlags {
    pub root: Vec<usize>,
    pub inv: Vec<usize>,
    /// Extra structure map (e.g. a cover's flag map embedded in a disjoint
    /// union).  Use the identity where there is nothing to record.
    pub fmap: Vec<usize>,
    pub color: Vec<u64>,
}

/// 64-bit FNV-1a over words; deterministic across processes.
pub(crate) fn fnv(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

impl ColoredFlags {
    pub fn from_graph(g: &DiscreteGraph, color: impl Fn(Flag) -> u64) -> Self {
        let n = g.n_flags();
        ColoredFlags {
            root: (0..n).map(|f| g.root(f)).collect(),
            inv: (0..n).map(|f| g.inv(f)).collect(),
            fmap: (0..n).collect(),
            color: (0..n).map(color).collect(),
        }
    }

    fn n(&self) -> usize {
        self.root.len()
    }

    /// Iterated neighborhood refinement of the colors.  The result is an
    /// isomorphism-invariant per-flag color; it only guides the search and
    /// never affects correctness of the canonical form.
    fn refine(&self) -> Vec<u64> {
        let n = self.n();
        let mut c = self.color.clone();
        let mut classes = 0usize;
        for _ in 0..n {
            let mut next = vec![0u64; n];
            for f in 0..n {
                let mut kids: Vec<u64> = (0..n)
                    .filter(|&g| self.root[g] == f && g != f)
                    .map(|g| c[g])
                    .collect();
                kids.sort_unstable();
                let mut words = vec![c[f], c[self.root[f]], c[self.inv[f]], c[self.fmap[f]]];
                words.extend(kids);
                next[f] = fnv(&words);
            }
            let mut sorted = next.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() == classes {
                return next;
            }
            classes = sorted.len();
            c = next;
        }
        c
    }

    /// Canonical encoding: minimal flag relabelling encoding over all greedy
    /// searches.  Equal canonical forms characterize color-isomorphism.
    pub fn canonical_form(&self) -> Vec<u64> {
        let n = self.n();
        if n == 0 {
            return Vec::new();
        }
        let refined = self.refine();
        const UNSET: u64 = u64::MAX;

        // order[i] = original flag labelled i; pos = inverse (UNSET if not yet).
        let mut order: Vec<usize> = Vec::with_capacity(n);
        let mut pos: Vec<u64> = vec![UNSET; n];

        // The key is isomorphism-equivariant: original colors, refined colors,
        // and positions of already-labelled relatives.
        let key = |f: usize, pos: &[u64]| -> [u64; 5] {
            [
                self.color[f],
                refined[f],
                pos[self.root[f]],
                pos[self.inv[f]],
                pos[self.fmap[f]],
            ]
        };

        fn encode(cf: &ColoredFlags, order: &[usize], pos: &[u64]) -> Vec<u64> {
            let mut out = Vec::with_capacity(order.len() * 4);
            for &f in order {
                out.push(cf.color[f]);
                out.push(pos[cf.root[f]]);
                out.push(pos[cf.inv[f]]);
                out.push(pos[cf.fmap[f]]);
            }
            out
        }

        struct Search<'a> {
            cf: &'a ColoredFlags,
            key: &'a dyn Fn(usize, &[u64]) -> [u64; 5],
            best: Option<Vec<u64>>,
        }

        impl Search<'_> {
            fn go(&mut self, order: &mut Vec<usize>, pos: &mut Vec<u64>) {
                let n = self.cf.n();
                if order.len() == n {
                    let enc = encode(self.cf, order, pos);
                    if self.best.as_ref().map_or(true, |b| enc < *b) {
                        self.best = Some(enc);
                    }
                    return;
                }
                let mut cands: Vec<usize> = Vec::new();
                let mut min_key: Option<[u64; 5]> = None;
                for f in 0..n {
                    if pos[f] != u64::MAX {
                        continue;
                    }
                    let k = (self.key)(f, pos);
                    match &min_key {
                        None => {
                            min_key = Some(k);
                            cands.push(f);
                        }
                        Some(m) if k < *m => {
                            min_key = Some(k);
                            cands.clear();
                            cands.push(f);
                        }
                        Some(m) if k == *m => cands.push(f),
                        _ => {}
                    }
                }
                for f in cands {
                    pos[f] = order.len() as u64;
                    order.push(f);
                    self.go(order, pos);
                    order.pop();
                    pos[f] = u64::MAX;
                }
            }
        }

        let mut s = Search {
            cf: self,
            key: &key,
            best: None,
        };
        s.go(&mut order, &mut pos);
        s.best.expect("canonical search visits at least one ordering")
    }
}

/// Canonical form of a bare graph where legs are colored by marking index
/// (strict mode) or only leg 1 is distinguished.
pub fn graph_canonical_form(g: &DiscreteGraph, markings: MarkingMode) -> Vec<u64> {
    let cf = ColoredFlags::from_graph(g, |f| {
        if g.is_vertex(f) {
            1
        } else if g.is_leg(f) {
            let m = match markings {
                MarkingMode::Strict => g.marking_of(f).map(|i| i as u64 + 1).unwrap_or(0),
                MarkingMode::FixLeg(i) => u64::from(g.marking_of(f) == Some(i)),
                MarkingMode::Ignore => 0,
            };
            fnv(&[2, m, g.leg_weight(f)])
        } else {
            3
        }
    });
    cf.canonical_form()
}

/// Count automorphisms; convenience wrapper used for orbit sizes.
pub fn automorphism_count(g: &DiscreteGraph, opts: IsoOpts) -> u64 {
    automorphisms(g, opts).len() as u64
}

/// Automorphisms that send every edge to itself (possibly reversing it).
/// These are exactly the maps that remain isometries for *any* assignment of
/// edge lengths, e.g. flips of loops and the simultaneous reversal of a
/// two-vertex multigraph.
pub fn edge_fixing_automorphisms(g: &DiscreteGraph) -> Vec<Vec<Flag>> {
    automorphisms(g, IsoOpts::shape_only())
        .into_iter()
        .filter(|m| {
            g.edges()
                .iter()
                .all(|&(a, b)| (m[a] == a && m[b] == b) || (m[a] == b && m[b] == a))
        })
        .collect()
}

/// Close a set of flag permutations under composition.  The identity is
/// always included; the result is sorted, so equal subgroups compare equal.
pub fn group_closure(gens: impl IntoIterator<Item = Vec<Flag>>) -> Vec<Vec<Flag>> {
    let mut set: std::collections::BTreeSet<Vec<Flag>> = gens.into_iter().collect();
    let n = match set.iter().next() {
        Some(p) => p.len(),
        None => return vec![Vec::new()],
    };
    set.insert((0..n).collect());
    loop {
        let mut fresh = Vec::new();
        for a in &set {
            for b in &set {
                let c: Vec<Flag> = a.iter().map(|&i| b[i]).collect();
                if !set.contains(&c) {
                    fresh.push(c);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        set.extend(fresh);
    }
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::families;
    use crate::graphs::GraphBuilder;

    #[test]
    fn dumbbell_has_eight_automorphisms() {
        // Swap the two loops, and flip each loop independently: 2 * 2 * 2.
        let g = families::dumbbell();
        assert_eq!(automorphism_count(&g, IsoOpts::shape_only()), 8);
    }

    #[test]
    fn theta_has_twelve_automorphisms() {
        // Permute the three parallel edges and swap the endpoints: 3! * 2.
        let g = families::theta();
        assert_eq!(automorphism_count(&g, IsoOpts::shape_only()), 12);
    }

    #[test]
    fn loop_garland_automorphisms() {
        // g = 3: junction legs are symmetric under permuting the three loop
        // branches and flipping each loop: 3! * 2^3 = 48.
        let g = families::loop_garland(3).unwrap();
        assert_eq!(automorphism_count(&g, IsoOpts::shape_only()), 48);
        // g = 4: the junction path can be reversed; each loop flips; the two
        // loops at each end swap only together with the reversal: 2^4 * 2 * 2.
        let g = families::loop_garland(4).unwrap();
        assert_eq!(automorphism_count(&g, IsoOpts::shape_only()), 2u64.pow(4) * 8);
    }

    #[test]
    fn dumbbell_and_theta_are_not_isomorphic() {
        let a = families::dumbbell();
        let b = families::theta();
        assert!(find_isomorphisms(&a, &b, IsoOpts::shape_only()).is_empty());
    }

    #[test]
    fn canonical_form_separates_and_identifies() {
        let a = families::dumbbell();
        let b = families::theta();
        let ca = graph_canonical_form(&a, MarkingMode::Ignore);
        let cb = graph_canonical_form(&b, MarkingMode::Ignore);
        assert_ne!(ca, cb);

        // Same graph built in a different flag order must canonicalize equally.
        let mut bld = GraphBuilder::new();
        let v2 = bld.vertex();
        let v1 = bld.vertex();
        bld.edge(v1, v2);
        bld.edge(v2, v2);
        bld.edge(v1, v1);
        let a2 = bld.build().unwrap();
        assert_eq!(ca, graph_canonical_form(&a2, MarkingMode::Ignore));
    }

    #[test]
    fn marking_modes_constrain_isomorphisms() {
        // Swapping which end carries which mark still yields a marked
        // isomorphism (the map follows the marks), so the discriminating
        // example pairs two marks on one vertex against a split placement.
        let mk = |together: bool| {
            let mut b = GraphBuilder::new();
            let u = b.vertex();
            let v = b.vertex();
            b.edge(u, v);
            b.marked_leg(u, 1, None);
            b.marked_leg(if together { u } else { v }, 2, None);
            b.marked_leg(v, 3, None);
            b.build().unwrap()
        };
        let a = mk(true);
        let b = mk(false);
        assert_eq!(find_isomorphisms(&a, &b, IsoOpts::strict()).len(), 0);
        assert_eq!(
            find_isomorphisms(
                &a,
                &b,
                IsoOpts {
                    markings: MarkingMode::Ignore,
                    weights: false
                }
            )
            .len(),
            2
        );
        // Pinning only leg 1: still impossible against `b` (its leg 1 roots
        // at the wrong valence), but rearranging marks 2 and 3 while leg 1
        // stays put is fine -- and unique, unlike the ignore count.
        let fix1 = IsoOpts {
            markings: MarkingMode::FixLeg(1),
            weights: false,
        };
        assert_eq!(find_isomorphisms(&a, &b, fix1).len(), 0);
        let mut cb = GraphBuilder::new();
        let u = cb.vertex();
        let v = cb.vertex();
        cb.edge(u, v);
        cb.marked_leg(u, 1, None);
        cb.marked_leg(u, 3, None);
        cb.marked_leg(v, 2, None);
        let c = cb.build().unwrap();
        assert_eq!(find_isomorphisms(&a, &c, IsoOpts::strict()).len(), 0);
        assert_eq!(find_isomorphisms(&a, &c, fix1).len(), 1);
        // A relabelled end-for-end swap remains strictly isomorphic.
        let mut bb = GraphBuilder::new();
        let u = bb.vertex();
        let v = bb.vertex();
        bb.edge(u, v);
        bb.marked_leg(u, 3, None);
        bb.marked_leg(v, 2, None);
        bb.marked_leg(v, 1, None);
        let swapped = bb.build().unwrap();
        assert_eq!(find_isomorphisms(&a, &swapped, IsoOpts::strict()).len(), 1);
    }

    #[test]
    fn edge_fixing_automorphisms_of_small_families() {
        // Dumbbell: each loop can flip independently, nothing else.
        assert_eq!(edge_fixing_automorphisms(&families::dumbbell()).len(), 4);
        // Theta: only the simultaneous reversal of all three edges.
        assert_eq!(edge_fixing_automorphisms(&families::theta()).len(), 2);
        // Loop garland: one flip per loop.
        assert_eq!(
            edge_fixing_automorphisms(&families::loop_garland(3).unwrap()).len(),
            8
        );
    }

    #[test]
    fn group_closure_generates_subgroups() {
        let theta = families::theta();
        let all = automorphisms(&theta, IsoOpts::shape_only());
        let fixing = edge_fixing_automorphisms(&theta);
        // Both inputs are already groups: closure is a no-op.
        assert_eq!(group_closure(fixing.clone()).len(), fixing.len());
        assert_eq!(group_closure(all.clone()).len(), all.len());
        // The reversal together with any map outside its span generates a
        // strictly larger subgroup.
        let identity: Vec<Flag> = (0..theta.n_flags()).collect();
        let flip = fixing.iter().find(|m| **m != identity).unwrap();
        let odd = all.iter().find(|m| !fixing.contains(m)).unwrap();
        let gen = group_closure(vec![flip.clone(), odd.clone()]);
        assert!(gen.len() > fixing.len());
        assert_eq!(all.len() % gen.len(), 0, "subgroup order divides");
        // Identity comes back even from an empty generating set.
        assert_eq!(group_closure(Vec::<Vec<Flag>>::new()).len(), 1);
    }

    #[test]
    fn colored_search_restricts_plain_search() {
        // Color both loop edges of the dumbbell differently: only the maps
        // fixing each loop survive.
        let g = families::dumbbell();
        let mut color = vec![0u64; g.n_flags()];
        for (i, &(a, b)) in g.edges().iter().enumerate() {
            if g.is_loop((a, b)) {
                color[a] = i as u64 + 1;
                color[b] = i as u64 + 1;
            }
        }
        let plain = find_isomorphisms(&g, &g, IsoOpts::shape_only()).len();
        let colored = find_isomorphisms_colored(&g, &g, &color, &color).len();
        assert_eq!(plain, 8);
        assert_eq!(colored, 4, "loop swap is ruled out, flips remain");
    }

    #[test]
    fn colored_canonical_form_with_fmap() {
        // Two 2-flag structures whose fmap differs by a swap are isomorphic.
        let a = ColoredFlags {
            root: vec![0, 1],
            inv: vec![0, 1],
            fmap: vec![1, 0],
            color: vec![7, 7],
        };
        let b = a.clone();
        assert_eq!(a.canonical_form(), b.canonical_form());
        let c = ColoredFlags {
            root: vec![0, 1],
            inv: vec![0, 1],
            fmap: vec![0, 1],
            color: vec![7, 7],
        };
        assert_ne!(a.canonical_form(), c.canonical_form());
    }
}
