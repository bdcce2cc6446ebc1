//! Geometric Weierstrass points of a trivalent metric graph.
//!
//! Fix a connected trivalent metric graph `Γ` of genus `g ≥ 2` with no legs
//! and generic rational edge lengths.  A point `x ∈ Γ` is located by a
//! *witness*: a cover `π` from the enumeration, an isomorphism of the
//! stabilized source onto the model of `Γ`, and a strictly positive exact
//! solution `δ` of the length-transfer system — pulling `δ` back along `π`
//! realizes the source metrically, and the root of its weight-`g` marked
//! point lands at `x`.  Witnesses of one cover that differ by a symmetry
//! every marked cover retains — a cover automorphism trivial on the target
//! and on all source legs — describe the same marked realization and are
//! deduplicated.
//!
//! Witnesses are then grouped into *marked classes*: the remaining cover
//! automorphisms relabel the target edges and thereby permute the length
//! cell, and two witnesses of one cover belong to the same class when their
//! `δ`s lie in one orbit of that action.  Such witnesses realize isomorphic
//! marked covers, so a class marks one point.  The multiplicity of a class
//! comes from [`cover_multiplicity`] on its representative and is
//! cross-checked against a direct count of the fully-labelled fiber: `orbit
//! · #witnesses · ϖ·|det| / |relabelling group|` per class.  Summing
//! multiplicities over all classes of a generic `Γ` gives `g³ − g`, and the
//! weighted fiber itself sums to `(3g−1)! · ((g−2)!)^{3g−1} · (g³ − g)` —
//! both identities are what [`count_gwp`] and [`pushforward_total`]
//! certify.
//!
//! "Generic" is operationalized, not assumed: a zero component in some `δ`,
//! or two distinct classes colliding at one point, flags the lengths as
//! non-generic.  The default sampler draws lengths `p/q` from distinct small
//! primes, which keeps exact rank checks within the subdivision budget.

use std::collections::{BTreeMap, BTreeSet};

use num::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::covers::{Cover, MetricConvention};
use crate::divisors::metric_from_lengths;
use crate::divisors::{is_weierstrass, MetricGraph, Point, DEFAULT_SUBDIVISION_BUDGET};
use crate::enumeration::{enumerate_all, marking_group_order, EnumeratedCover, EnumerationMode};
use crate::error::{Error, Result};
use crate::graphs::families::loop_garland;
use crate::graphs::iso::{find_isomorphisms, IsoOpts};
use crate::graphs::stab::{stabilize, Stabilization, VertexFate};
use crate::graphs::Flag;
use crate::hurwitz::{cover_automorphisms, cover_multiplicity, standard_weight, transfer_matrix};
use crate::rational::{det, fmt_rat, rat_uint, solve, Rat};

/// One realization of a cover over the concrete metric graph: the cover, an
/// isomorphism of its stabilized source onto the model of `Γ`, the solved
/// target edge lengths, and the located point.
#[derive(Debug, Clone)]
pub struct GwpWitness {
    pub cover: Cover,
    /// Index of the cover in the enumeration this witness was built from.
    pub entry: usize,
    /// Orbit size carried over from the enumeration.
    pub orbit: u64,
    /// Stabilized-source flag -> model flag.
    pub source_iso: Vec<Flag>,
    /// Target edge lengths, indexed like `target().edges()`; all positive.
    pub delta: Vec<Rat>,
    /// Location of the weight-`g` marked point on `Γ` (canonical form).
    pub point: Point,
}

/// A set of witnesses identified under edge-fixing model automorphisms,
/// marking one point with one multiplicity.
#[derive(Debug, Clone)]
pub struct MarkedClass {
    pub witnesses: Vec<GwpWitness>,
    pub point: Point,
    pub multiplicity: u64,
}

/// The full accounting for one metric graph.
#[derive(Debug, Clone)]
pub struct GwpReport {
    pub classes: Vec<MarkedClass>,
    /// Point -> total multiplicity over all classes at that point.
    pub point_table: BTreeMap<Point, u64>,
    /// Sum of all class multiplicities.
    pub total: u64,
    /// True when no genericity problem was detected and the cross-checks
    /// ran clean; only then is `total = g³ − g` asserted.
    pub certified: bool,
    /// Human-readable records of skipped checks and violations.
    pub notes: Vec<String>,
}

/// `(a ∘ b)[f] = a[b[f]]` — apply `b`, then `a`.
fn compose(a: &[Flag], b: &[Flag]) -> Vec<Flag> {
    b.iter().map(|&f| a[f]).collect()
}

/// The image in the stabilized source of the cover automorphisms that fix
/// the target pointwise and every source leg — the symmetries every marked
/// cover retains, acting trivially on the length cell.
fn marked_stab_group(pi: &Cover, st: &Stabilization) -> Vec<Vec<Flag>> {
    let src = pi.source();
    let mut set: BTreeSet<Vec<Flag>> = BTreeSet::new();
    for a in cover_automorphisms(pi) {
        if a.on_target.iter().enumerate().all(|(i, &f)| i == f)
            && src.legs().iter().all(|&l| a.on_source[l] == l)
        {
            set.insert(
                st.induced_map(src, &a.on_source)
                    .expect("automorphisms preserve the stable part"),
            );
        }
    }
    set.into_iter().collect()
}

/// Canonical representative of `sigma` composed on the right with the group.
fn right_canonical(sigma: &[Flag], group: &[Vec<Flag>]) -> Vec<Flag> {
    group
        .iter()
        .map(|k| compose(sigma, k))
        .min()
        .unwrap_or_else(|| sigma.to_vec())
}

/// How the target relabellings of the cover automorphisms permute the
/// length-cell coordinates: for each automorphism, the index map `perm` with
/// `(a · δ)[perm[i]] = δ[i]`.
fn cell_actions(pi: &Cover) -> Vec<Vec<usize>> {
    let tgt = pi.target();
    let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
    for a in cover_automorphisms(pi) {
        set.insert(
            tgt.edges()
                .iter()
                .map(|&(f, _)| {
                    tgt.edge_index(a.on_target[f])
                        .expect("automorphisms map edge flags to edge flags")
                })
                .collect(),
        );
    }
    set.into_iter().collect()
}

/// Canonical representative of the orbit of `delta` under the cell actions.
fn canonical_cell_point(delta: &[Rat], actions: &[Vec<usize>]) -> Vec<Rat> {
    actions
        .iter()
        .map(|perm| {
            let mut out = vec![Rat::zero(); delta.len()];
            for (i, &j) in perm.iter().enumerate() {
                out[j] = delta[i].clone();
            }
            out
        })
        .min()
        .unwrap_or_else(|| delta.to_vec())
}

/// Locate the root of the weight-`g` marked point on `Γ`, given the solved
/// target lengths.  Interior positions come out as exact offsets along the
/// model edge, measured from the root of its id flag; on loop edges the two
/// traversal directions describe mirror realizations, so the offset is
/// folded to the smaller of `t` and `L - t`.
fn heavy_point(
    gamma: &MetricGraph,
    pi: &Cover,
    st: &Stabilization,
    sigma: &[Flag],
    delta: &[Rat],
) -> Result<Point> {
    let t = pi.target();
    let model = gamma.graph();
    let heavy_leg = *t
        .marking()
        .get(&1)
        .ok_or_else(|| Error::WrongProfile("target has no leg marked 1".into()))?;
    let roots: Vec<Flag> = pi
        .source()
        .legs()
        .iter()
        .copied()
        .filter(|&l| pi.map_of(l) == heavy_leg)
        .collect();
    let [leg] = roots.as_slice() else {
        return Err(Error::WrongProfile(format!(
            "expected one source leg over the fully-ramified leg, found {}",
            roots.len()
        )));
    };
    let v = pi.source().root(*leg);
    match st.fate_of(v) {
        VertexFate::Branch(sv) => Ok(Point::Vertex(model.root(sigma[sv]))),
        VertexFate::OnChain { chain, pos } => {
            let ch = &st.chains[chain];
            let mut dist = Rat::zero();
            for &e in &ch.edges[..pos] {
                let j = t
                    .edge_index(pi.map_of(e.0))
                    .expect("edge flags map to edge flags");
                dist += pi.length_factor(e, MetricConvention::Rescaled) * &delta[j];
            }
            let stab_edge = st.graph.edges()[chain];
            let me = model.edge_of(sigma[stab_edge.0]);
            let len = gamma.length(me.0).clone();
            let mut offset = if sigma[stab_edge.0] == me.0 {
                dist
            } else {
                &len - &dist
            };
            if model.is_loop(me) && &offset * rat_uint(2) > len {
                offset = &len - &offset;
            }
            if !offset.is_positive() || offset >= len {
                return Err(Error::WrongProfile(
                    "marked point does not land in the edge interior".into(),
                ));
            }
            Ok(Point::Interior {
                edge: me.0,
                offset,
            })
        }
        VertexFate::Expunged => Err(Error::WrongProfile(
            "the weight-g marked point was pruned by stabilization".into(),
        )),
    }
}

/// Witnesses contributed by a single enumerated cover, with genericity
/// incidents reported instead of raised.
fn entry_witnesses(
    gamma: &MetricGraph,
    entry: usize,
    ec: &EnumeratedCover,
) -> Result<(Vec<GwpWitness>, Vec<String>)> {
    let mut out = Vec::new();
    let mut notes = Vec::new();
    if !ec.contributing {
        return Ok((out, notes));
    }
    let pi = &ec.cover;
    let st = stabilize(pi.source())?;
    let isos = find_isomorphisms(&st.graph, gamma.graph(), IsoOpts::shape_only());
    if isos.is_empty() {
        return Ok((out, notes));
    }
    let marked = marked_stab_group(pi, &st);
    let system = transfer_matrix(pi, &st);
    let mut seen: BTreeSet<Vec<Flag>> = BTreeSet::new();
    for sigma in &isos {
        let canon = right_canonical(sigma, &marked);
        if !seen.insert(canon.clone()) {
            continue;
        }
        let rhs: Vec<Rat> = st
            .graph
            .edges()
            .iter()
            .map(|&(f, _)| gamma.length(gamma.graph().edge_of(canon[f]).0).clone())
            .collect();
        let Some(delta) = solve(&system, &rhs) else {
            notes.push(format!(
                "cover {entry}: singular length system skipped despite nonzero determinant"
            ));
            continue;
        };
        if let Some(j) = delta.iter().position(|d| d.is_zero()) {
            notes.push(format!(
                "cover {entry}: solved length of target edge {j} is exactly zero"
            ));
            continue;
        }
        if !delta.iter().all(|d| d.is_positive()) {
            continue;
        }
        let point = heavy_point(gamma, pi, &st, &canon, &delta)?;
        out.push(GwpWitness {
            cover: pi.clone(),
            entry,
            orbit: ec.orbit,
            source_iso: canon,
            delta,
            point,
        });
    }
    Ok((out, notes))
}

fn check_model(gamma: &MetricGraph) -> Result<u64> {
    let model = gamma.graph();
    for &v in model.vertices() {
        if model.val(v) != 3 {
            return Err(Error::NonTrivalentModel(v));
        }
    }
    let g = gamma.genus();
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    debug_assert_eq!(model.edges().len() as u64, 3 * g - 3);
    Ok(g)
}

fn search(
    gamma: &MetricGraph,
    entries: &[EnumeratedCover],
) -> Result<(Vec<GwpWitness>, Vec<String>)> {
    let per_entry: Vec<Result<(Vec<GwpWitness>, Vec<String>)>> = entries
        .par_iter()
        .enumerate()
        .map(|(i, ec)| entry_witnesses(gamma, i, ec))
        .collect();
    let mut witnesses = Vec::new();
    let mut notes = Vec::new();
    for r in per_entry {
        let (ws, ns) = r?;
        witnesses.extend(ws);
        notes.extend(ns);
    }
    Ok((witnesses, notes))
}

/// All witnesses the enumerated covers place over `Γ`.  Zero components in a
/// solved length system mean the lengths are not generic and raise
/// [`Error::GenericityViolation`]; use [`count_gwp`] for a tolerant run that
/// reports such incidents instead.
pub fn fiber_witnesses(
    gamma: &MetricGraph,
    entries: &[EnumeratedCover],
) -> Result<Vec<GwpWitness>> {
    check_model(gamma)?;
    let (witnesses, notes) = search(gamma, entries)?;
    if let Some(n) = notes.first() {
        return Err(Error::GenericityViolation(n.clone()));
    }
    Ok(witnesses)
}

/// Recompute the location of a witness's marked point from scratch.
pub fn locate_point(gamma: &MetricGraph, w: &GwpWitness) -> Result<Point> {
    let st = stabilize(w.cover.source())?;
    heavy_point(gamma, &w.cover, &st, &w.source_iso, &w.delta)
}

/// Group witnesses into marked classes.  Witnesses must all come from one
/// quotient-mode enumeration over one `Γ`.
pub fn marked_classes(gamma: &MetricGraph, witnesses: &[GwpWitness]) -> Result<Vec<MarkedClass>> {
    check_model(gamma)?;
    let mut actions: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    let mut grouped: BTreeMap<(usize, Vec<Rat>), Vec<GwpWitness>> = BTreeMap::new();
    for w in witnesses {
        let acts = actions
            .entry(w.entry)
            .or_insert_with(|| cell_actions(&w.cover));
        let key = canonical_cell_point(&w.delta, acts);
        grouped.entry((w.entry, key)).or_default().push(w.clone());
    }

    let mut classes = Vec::new();
    for (_, members) in grouped {
        let rep = &members[0];
        let point = rep.point.clone();
        for m in &members[1..] {
            if m.point != point {
                return Err(Error::InconsistentClassMultiplicity(format!(
                    "witnesses of one class at different points: {:?} vs {:?}",
                    point, m.point
                )));
            }
        }
        let st = stabilize(rep.cover.source())?;
        let system = transfer_matrix(&rep.cover, &st);
        let multiplicity = cover_multiplicity(&rep.cover, &system)?;

        // Cross-check against the fully-labelled fiber: this class stands
        // for `orbit` labelled covers with `#members` realizations each,
        // every one weighted by `ϖ·|det|`; dividing by the order of the
        // relabelling group must reproduce the multiplicity.
        let g = rep.cover.deg();
        let weight = standard_weight(&rep.cover)?.weight * det(&system).abs();
        let fiber_sum = weight
            * Rat::from_integer(BigInt::from(rep.orbit) * BigInt::from(members.len() as u64));
        let grp = Rat::from_integer(BigInt::from(marking_group_order(g)));
        let from_fiber = fiber_sum / grp;
        if from_fiber != rat_uint(multiplicity) {
            return Err(Error::InconsistentClassMultiplicity(format!(
                "cover multiplicity {multiplicity} but labelled fiber gives {}",
                fmt_rat(&from_fiber)
            )));
        }
        classes.push(MarkedClass {
            witnesses: members,
            point,
            multiplicity,
        });
    }
    classes.sort_by(|a, b| (&a.point, a.witnesses[0].entry).cmp(&(&b.point, b.witnesses[0].entry)));
    Ok(classes)
}

/// Full pipeline with an explicit subdivision budget for the exact rank
/// cross-check (`None` skips the check).  Classification always runs on the
/// quotient enumeration: class bookkeeping needs orbit sizes.
pub fn count_gwp_with(gamma: &MetricGraph, rank_budget: Option<u64>) -> Result<GwpReport> {
    let g = check_model(gamma)?;
    let entries = enumerate_all(g, EnumerationMode::Quotient)?;
    let (witnesses, mut notes) = search(gamma, &entries)?;
    let classes = marked_classes(gamma, &witnesses)?;

    let mut point_table: BTreeMap<Point, u64> = BTreeMap::new();
    let mut total = 0u64;
    for c in &classes {
        *point_table.entry(c.point.clone()).or_insert(0) += c.multiplicity;
        total += c.multiplicity;
    }
    if point_table.len() != classes.len() {
        notes.push(
            "distinct classes collide at one point; lengths are not generic".into(),
        );
    }

    if let Some(budget) = rank_budget {
        for p in point_table.keys() {
            match is_weierstrass(gamma, p, budget) {
                Ok(true) => {}
                Ok(false) => notes.push(format!(
                    "rank check failed at {p:?}: g·[p] does not move"
                )),
                Err(Error::SubdivisionTooLarge { needed, budget: cap }) => notes.push(format!(
                    "rank check skipped at {p:?}: subdivision needs {needed} vertices, budget {cap}"
                )),
                Err(e) => return Err(e),
            }
        }
    }

    // Rank-check skips are warnings; anything else on record voids the
    // certificate.
    let fatal = notes
        .iter()
        .any(|n| !n.starts_with("rank check skipped"));
    let expected = g * g * g - g;
    let certified = !fatal && total == expected;
    if !fatal && total != expected {
        notes.push(format!("total {total} differs from g³−g = {expected}"));
    }
    Ok(GwpReport {
        classes,
        point_table,
        total,
        certified,
        notes,
    })
}

/// Count the geometric Weierstrass points of `Γ` with multiplicity:
/// enumerate covers, solve for witnesses, classify, cross-check each point
/// with the exact rank test, and certify the total `g³ − g`.
pub fn count_gwp(gamma: &MetricGraph) -> Result<GwpReport> {
    count_gwp_with(gamma, Some(DEFAULT_SUBDIVISION_BUDGET))
}

/// The degree of the weighted pushforward over `Γ`: every witness counted
/// with `orbit · ϖ·|det|`.  For generic lengths this is
/// `(3g−1)! · ((g−2)!)^{3g−1} · (g³−g)`, independent of the model.
pub fn pushforward_total_over(gamma: &MetricGraph, mode: EnumerationMode) -> Result<Rat> {
    let g = check_model(gamma)?;
    let entries = enumerate_all(g, mode)?;
    let witnesses = fiber_witnesses(gamma, &entries)?;
    let mut by_entry: BTreeMap<usize, u64> = BTreeMap::new();
    for w in &witnesses {
        *by_entry.entry(w.entry).or_insert(0) += 1;
    }
    let mut total = Rat::zero();
    for (entry, count) in by_entry {
        let ec = &entries[entry];
        let st = stabilize(ec.cover.source())?;
        let system = transfer_matrix(&ec.cover, &st);
        let weight = standard_weight(&ec.cover)?.weight * det(&system).abs();
        total += weight * Rat::from_integer(BigInt::from(ec.orbit) * BigInt::from(count));
    }
    Ok(total)
}

/// [`pushforward_total_over`] on the garland of `g` loops with fixed
/// pairwise-distinct prime lengths.
pub fn pushforward_total(g: u64, mode: EnumerationMode) -> Result<Rat> {
    pushforward_total_over(&garland_model(g)?, mode)
}

/// The value the pushforward total must take.
pub fn expected_pushforward_total(g: u64) -> Rat {
    Rat::from_integer(
        BigInt::from(marking_group_order(g)) * BigInt::from(g * g * g - g),
    )
}

fn primes(count: usize) -> Vec<u64> {
    let mut ps: Vec<u64> = Vec::with_capacity(count);
    let mut n = 2u64;
    while ps.len() < count {
        if ps.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            ps.push(n);
        }
        n += 1;
    }
    ps
}

/// The garland of `g` loops with deterministic generic lengths: distinct odd
/// primes, one per edge.  Small denominators keep the rank cross-check
/// inside the default subdivision budget.
pub fn garland_model(g: u64) -> Result<MetricGraph> {
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    let graph = loop_garland(g)?;
    let n = graph.edges().len();
    let lens: Vec<Rat> = primes(n + 1)[1..].iter().map(|&p| rat_uint(p)).collect();
    metric_from_lengths(graph, &lens)
}

/// Seeded generic lengths: `n` ratios `p/q` of pairwise-distinct primes
/// drawn without replacement from the first `2n + 20` odd primes.
pub fn generic_lengths(n: usize, seed: u64) -> Vec<Rat> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pool = primes(2 * n + 21);
    let picks: Vec<u64> = pool[1..].choose_multiple(&mut rng, 2 * n).copied().collect();
    picks
        .chunks(2)
        .map(|pq| Rat::new(BigInt::from(pq[0]), BigInt::from(pq[1])))
        .collect()
}
