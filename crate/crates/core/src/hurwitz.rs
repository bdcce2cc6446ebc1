//! Genus-zero Hurwitz counts and the multiplicity data of tree covers.
//!
//! Everything here feeds the weighted count of covers: the classical
//! genus-zero Hurwitz number of a ramification profile (computed by exact
//! enumeration in small symmetric groups, with memoization), the local
//! vertex factors `H(v)` and `CF(v)` of a cover, the product weight, the
//! horizontal/vertical stabilizer sizes, and finally [`cover_multiplicity`],
//! which combines them with the determinant of the edge-length transfer
//! matrix into a non-negative integer.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{Signed, ToPrimitive};

use crate::covers::{Cover, MetricConvention};
use crate::error::{Error, Result};
use crate::graphs::iso::{
    automorphisms, edge_fixing_automorphisms, find_isomorphisms_colored, group_closure, IsoOpts,
    MarkingMode,
};
use crate::graphs::stab::{stabilize, Stabilization};
use crate::graphs::{Flag, UnionFind};
use crate::rational::{det, fmt_rat, is_nonneg_integer, rat_uint, Rat};

/// A ramification profile: a weakly decreasing list of positive parts.
pub type Partition = Vec<u64>;

/// Largest symmetric group we are willing to enumerate.  `8! = 40320`
/// permutations keep every call interactive; all covers in this crate have
/// local degrees far below this.
pub const MAX_SHEETS: u64 = 8;

/// Guard on the number of permutation tuples a single count may visit.
const MAX_TUPLES: u64 = 100_000_000;

/// All partitions of `d`, each weakly decreasing, in descending
/// lexicographic order.  `partitions_of(0)` is the single empty partition.
pub fn partitions_of(d: u64) -> Vec<Partition> {
    fn rec(left: u64, max: u64, prefix: &mut Partition, out: &mut Vec<Partition>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=left.min(max)).rev() {
            prefix.push(part);
            rec(left - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, d.max(1), &mut Vec::new(), &mut out);
    out
}

fn validate_profile(d: u64, p: &[u64]) -> Result<Partition> {
    if p.iter().any(|&x| x == 0) {
        return Err(Error::UsageError(
            "partition parts must be positive".into(),
        ));
    }
    if p.iter().sum::<u64>() != d {
        return Err(Error::ProfileSumMismatch(d));
    }
    let mut sorted = p.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Ok(sorted)
}

/// `m_j`-style symmetry factor: `z(lambda) = prod_j j^{m_j} m_j!`, so the
/// conjugacy class of type `lambda` in `S_d` has `d!/z` elements.
fn class_size(d: u64, lambda: &[u64]) -> u64 {
    let mut z: u64 = 1;
    let mut run = 0u64;
    for i in 0..lambda.len() {
        run += 1;
        z *= lambda[i];
        if i + 1 == lambda.len() || lambda[i + 1] != lambda[i] {
            z *= factorial(run);
            run = 0;
        }
    }
    factorial(d) / z
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

fn cycle_type(perm: &[usize]) -> Partition {
    let mut seen = vec![false; perm.len()];
    let mut parts = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0u64;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        parts.push(len);
    }
    parts.sort_unstable_by(|a, b| b.cmp(a));
    parts
}

/// A fixed permutation of cycle type `lambda`: consecutive blocks of points,
/// each cycled once.
fn class_representative(lambda: &[u64]) -> Vec<usize> {
    let mut perm = Vec::new();
    let mut start = 0usize;
    for &part in lambda {
        let part = part as usize;
        for i in 0..part {
            perm.push(start + (i + 1) % part);
        }
        start += part;
    }
    perm
}

/// Apply `a`, then `b`.
fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().map(|&i| b[i]).collect()
}

fn is_transitive(d: usize, perms: &[&Vec<usize>]) -> bool {
    let mut uf = UnionFind::new(d);
    for p in perms {
        for i in 0..d {
            uf.union(i, p[i]);
        }
    }
    (0..d).filter(|&i| uf.find(i) == i).count() == 1
}

/// All permutations of `S_d` grouped by cycle type, cached per `d`.
fn classes_of(d: u64) -> Arc<HashMap<Partition, Vec<Vec<usize>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<HashMap<Partition, Vec<Vec<usize>>>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("class cache lock");
    guard
        .entry(d)
        .or_insert_with(|| {
            let mut by_type: HashMap<Partition, Vec<Vec<usize>>> = HashMap::new();
            let mut perm: Vec<usize> = (0..d as usize).collect();
            loop {
                by_type
                    .entry(cycle_type(&perm))
                    .or_default()
                    .push(perm.clone());
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            Arc::new(by_type)
        })
        .clone()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// The genus-zero Hurwitz number `H_d(lambda_1, ..., lambda_k)`: the number
/// of tuples of permutations of the given cycle types with product the
/// identity and transitive joint action, weighted by `1/d!`.
///
/// Returns zero whenever the Riemann-Hurwitz count `sum_i (d - len(lambda_i))`
/// differs from `2d - 2` (the tuple would have the wrong genus).  Profiles
/// that do not sum to `d` are an error, as is `d` above [`MAX_SHEETS`].
pub fn hurwitz_genus0(d: u64, profiles: &[Partition]) -> Result<Rat> {
    if d == 0 {
        return Err(Error::UsageError("sheet number must be positive".into()));
    }
    if d > MAX_SHEETS {
        return Err(Error::UsageError(format!(
            "sheet number {d} exceeds the enumeration bound {MAX_SHEETS}"
        )));
    }
    let mut profs = Vec::new();
    let mut defect = 0u64;
    for p in profiles {
        let p = validate_profile(d, p)?;
        defect += d - p.len() as u64;
        if p.len() as u64 != d {
            profs.push(p); // unramified (1^d) layers contribute nothing
        }
    }
    if defect != 2 * d - 2 {
        return Ok(Rat::from_integer(0.into()));
    }
    if profs.len() <= 1 {
        // d = 1 (empty product is the identity on one sheet), or a single
        // nontrivial class whose product can never be the identity.
        let trivial = profs.is_empty();
        return Ok(Rat::from_integer(i64::from(trivial).into()));
    }
    profs.sort_unstable_by(|a, b| class_size(d, b).cmp(&class_size(d, a)).then(a.cmp(b)));

    static MEMO: OnceLock<Mutex<HashMap<(u64, Vec<Partition>), Rat>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (d, profs.clone());
    if let Some(hit) = memo.lock().expect("memo lock").get(&key) {
        return Ok(hit.clone());
    }

    // Fix a representative of the largest class; let the product condition
    // determine a member of the second largest; enumerate only the rest.
    let work: u64 = profs[2..]
        .iter()
        .map(|p| class_size(d, p))
        .try_fold(1u64, |acc, c| acc.checked_mul(c))
        .filter(|&w| w <= MAX_TUPLES)
        .ok_or_else(|| {
            Error::UsageError(format!(
                "profile set over d={d} needs more than {MAX_TUPLES} tuples"
            ))
        })?;
    let _ = work;

    let classes = classes_of(d);
    let fixed = class_representative(&profs[0]);
    let determined = &profs[1];
    let enumerated: Vec<&Vec<Vec<usize>>> = profs[2..]
        .iter()
        .map(|p| classes.get(p).expect("every partition names a class"))
        .collect();

    fn search(
        d: usize,
        level: usize,
        enumerated: &[&Vec<Vec<usize>>],
        chosen: &mut Vec<Vec<usize>>,
        prefix: Vec<usize>,
        determined: &Partition,
        hits: &mut u64,
    ) {
        if level == enumerated.len() {
            if cycle_type(&prefix) == *determined {
                let refs: Vec<&Vec<usize>> = chosen.iter().collect();
                if is_transitive(d, &refs) {
                    *hits += 1;
                }
            }
            return;
        }
        for sigma in enumerated[level] {
            chosen.push(sigma.clone());
            search(
                d,
                level + 1,
                enumerated,
                chosen,
                compose(&prefix, sigma),
                determined,
                hits,
            );
            chosen.pop();
        }
    }

    let mut hits = 0u64;
    let mut chosen = vec![fixed.clone()];
    search(
        d as usize,
        0,
        &enumerated,
        &mut chosen,
        fixed,
        determined,
        &mut hits,
    );

    let result = Rat::new(
        (class_size(d, &profs[0]) * hits).into(),
        factorial(d).into(),
    );
    memo.lock()
        .expect("memo lock")
        .insert(key, result.clone());
    Ok(result)
}

/// Literal reference count for [`hurwitz_genus0`]: every class enumerated in
/// full, no memo, no symmetry shortcuts.  Only sensible for small `d`; used
/// to validate the fast path.
pub fn hurwitz_genus0_brute(d: u64, profiles: &[Partition]) -> Result<Rat> {
    if d == 0 {
        return Err(Error::UsageError("sheet number must be positive".into()));
    }
    if d > MAX_SHEETS {
        return Err(Error::UsageError(format!(
            "sheet number {d} exceeds the enumeration bound {MAX_SHEETS}"
        )));
    }
    let mut profs = Vec::new();
    for p in profiles {
        profs.push(validate_profile(d, p)?);
    }
    let defect: u64 = profs.iter().map(|p| d - p.len() as u64).sum();
    if defect != 2 * d - 2 {
        return Ok(Rat::from_integer(0.into()));
    }
    let classes = classes_of(d);
    let lists: Vec<&Vec<Vec<usize>>> = profs
        .iter()
        .map(|p| classes.get(p).expect("every partition names a class"))
        .collect();
    let work: u64 = lists
        .iter()
        .map(|c| c.len() as u64)
        .try_fold(1u64, |acc, c| acc.checked_mul(c))
        .filter(|&w| w <= MAX_TUPLES)
        .ok_or_else(|| {
            Error::UsageError(format!(
                "profile set over d={d} needs more than {MAX_TUPLES} tuples"
            ))
        })?;
    let _ = work;

    let mut hits = 0u64;
    let mut chosen: Vec<Vec<usize>> = Vec::new();
    fn rec(d: usize, lists: &[&Vec<Vec<usize>>], chosen: &mut Vec<Vec<usize>>, hits: &mut u64) {
        if chosen.len() == lists.len() {
            let mut prod: Vec<usize> = (0..d).collect();
            for s in chosen.iter() {
                prod = compose(&prod, s);
            }
            if prod.iter().enumerate().all(|(i, &x)| i == x) {
                let refs: Vec<&Vec<usize>> = chosen.iter().collect();
                if is_transitive(d, &refs) {
                    *hits += 1;
                }
            }
            return;
        }
        for sigma in lists[chosen.len()] {
            chosen.push(sigma.clone());
            rec(d, lists, chosen, hits);
            chosen.pop();
        }
    }
    rec(d as usize, &lists, &mut chosen, &mut hits);
    Ok(Rat::new(hits.into(), factorial(d).into()))
}

/// The ramification profile of a cover at a source vertex, one partition per
/// non-vertex flag at the image: the expansion factors of the flags of `v`
/// lying over it.
pub fn local_profiles(pi: &Cover, v: Flag) -> Vec<(Flag, Partition)> {
    let src = pi.source();
    let tgt = pi.target();
    assert!(src.is_vertex(v), "flag {v} is not a source vertex");
    tgt.flags_at(pi.map_of(v))
        .into_iter()
        .map(|h| {
            let mut parts: Vec<u64> = src
                .flags_at(v)
                .into_iter()
                .filter(|&f| pi.map_of(f) == h)
                .map(|f| pi.degree_of(f))
                .collect();
            parts.sort_unstable_by(|a, b| b.cmp(a));
            (h, parts)
        })
        .collect()
}

/// Over-counting factor of a source vertex: for each group of flags at `v`
/// with the same image flag *and* the same expansion factor, a factor
/// `k!`.  These are the relabellings of indistinguishable local branches.
pub fn cf_factor(pi: &Cover, v: Flag) -> u64 {
    let src = pi.source();
    assert!(src.is_vertex(v), "flag {v} is not a source vertex");
    let mut counts: HashMap<(Flag, u64), u64> = HashMap::new();
    for f in src.flags_at(v) {
        *counts.entry((pi.map_of(f), pi.degree_of(f))).or_insert(0) += 1;
    }
    counts.values().map(|&k| factorial(k)).product()
}

/// The full weight bookkeeping of a cover.
#[derive(Debug, Clone)]
pub struct WeightReport {
    /// `edge_product * prod_v H(v) CF(v) / lcm_denominator`.
    pub weight: Rat,
    /// Per source vertex: the local Hurwitz number and the relabelling factor.
    pub per_vertex: Vec<(Flag, Rat, u64)>,
    /// Product of the expansion factors of all source edges.
    pub edge_product: u64,
    /// Product over target edges of the lcm of the expansion factors in the
    /// fiber.
    pub lcm_denominator: u64,
}

/// Compute the standard weight of a cover from its local data.
pub fn standard_weight(pi: &Cover) -> Result<WeightReport> {
    let src = pi.source();
    let mut edge_product = 1u64;
    for &(a, _) in src.edges() {
        edge_product *= pi.degree_of(a);
    }
    let mut per_vertex = Vec::new();
    let mut vertex_factor = Rat::from_integer(1.into());
    for &v in src.vertices() {
        let profiles: Vec<Partition> = local_profiles(pi, v).into_iter().map(|(_, p)| p).collect();
        let h = hurwitz_genus0(pi.degree_of(v), &profiles)?;
        let cf = cf_factor(pi, v);
        vertex_factor *= &h * rat_uint(cf);
        per_vertex.push((v, h, cf));
    }
    let mut lcm_denominator = 1u64;
    for &(a, _) in pi.target().edges() {
        lcm_denominator *= pi.fiber_lcm(a);
    }
    let weight = rat_uint(edge_product) * vertex_factor / rat_uint(lcm_denominator);
    Ok(WeightReport {
        weight,
        per_vertex,
        edge_product,
        lcm_denominator,
    })
}

/// A weight-preserving automorphism of a cover: compatible relabellings of
/// target and source, with the target fixing the first marked leg.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverAut {
    pub on_target: Vec<Flag>,
    pub on_source: Vec<Flag>,
}

/// All pairs `(sigma_t, sigma_s)` with `sigma_t` an automorphism of the
/// target fixing leg 1, `sigma_s` a bijection of source flags preserving
/// expansion factors, and `pi . sigma_s = sigma_t . pi`.  Source leg
/// markings are deliberately ignored: the pairs act on marked covers.
pub fn cover_automorphisms(pi: &Cover) -> Vec<CoverAut> {
    let src = pi.source();
    let tgt = pi.target();
    let m = tgt.n_flags() as u64;
    let color_with = |image_of: &dyn Fn(Flag) -> Flag| -> Vec<u64> {
        (0..src.n_flags())
            .map(|f| pi.degree_of(f) * m + image_of(f) as u64)
            .collect()
    };
    let plain = color_with(&|f| pi.map_of(f));
    let mut out = Vec::new();
    let opts = IsoOpts {
        markings: MarkingMode::FixLeg(1),
        weights: false,
    };
    for sigma_t in automorphisms(tgt, opts) {
        let twisted = color_with(&|f| sigma_t[pi.map_of(f)]);
        for sigma_s in find_isomorphisms_colored(src, src, &twisted, &plain) {
            out.push(CoverAut {
                on_target: sigma_t.clone(),
                on_source: sigma_s,
            });
        }
    }
    out
}

/// Check that a cover has the marked-fiber shape expected of the Weierstrass
/// pipeline and return the genus: degree `g`, a tree target with `3g` marked
/// legs, fiber `(g)` over leg 1 and `(2, 1^(g-2))` over every other leg.
pub fn weierstrass_shape(pi: &Cover) -> Result<u64> {
    let g = pi.deg();
    let tgt = pi.target();
    if g < 2 {
        return Err(Error::WrongProfile(format!("degree {g} is below 2")));
    }
    if !tgt.is_connected() || tgt.genus() != 0 {
        return Err(Error::WrongProfile("target is not a tree".into()));
    }
    if tgt.legs().len() as u64 != 3 * g {
        return Err(Error::WrongProfile(format!(
            "target carries {} legs, expected {}",
            tgt.legs().len(),
            3 * g
        )));
    }
    let mut expected_other: Partition = vec![2];
    expected_other.extend(std::iter::repeat(1).take(g as usize - 2));
    for mark in 1..=3 * g as u32 {
        let leg = *tgt
            .marking()
            .get(&mark)
            .ok_or_else(|| Error::WrongProfile(format!("target leg {mark} is not marked")))?;
        let profile = pi.fiber_profile(leg);
        let expected: &[u64] = if mark == 1 { &[g] } else { &expected_other };
        if profile != expected {
            return Err(Error::WrongProfile(format!(
                "fiber over leg {mark} is {profile:?}"
            )));
        }
    }
    Ok(g)
}

/// Sizes `(VS, HS)` of the vertical and horizontal stabilizers of a cover:
/// among the weight-preserving automorphism pairs whose source map fixes
/// every surviving (non-expunged) source edge flag, `VS` counts those over
/// the identity of the target and `HS` the distinct target maps reached.
pub fn stabilizers(pi: &Cover) -> Result<(u64, u64)> {
    weierstrass_shape(pi)?;
    let st = stabilize(pi.source())?;
    let surviving: Vec<Flag> = st.surviving_flags().into_iter().collect();
    let identity: Vec<Flag> = (0..pi.target().n_flags()).collect();
    let trivial: Vec<CoverAut> = cover_automorphisms(pi)
        .into_iter()
        .filter(|a| surviving.iter().all(|&f| a.on_source[f] == f))
        .collect();
    let total = trivial.len() as u64;
    let vs = trivial.iter().filter(|a| a.on_target == identity).count() as u64;
    assert!(vs >= 1, "the identity pair is always present");
    assert_eq!(
        total % vs,
        0,
        "stabilization-trivial pairs fiber evenly over their target maps"
    );
    Ok((vs, total / vs))
}

/// The edge-length transfer matrix of a cover through its stabilization:
/// rows are stabilized source edges, columns are target edges, and the entry
/// is the total rescaled length the chain picks up per unit of that target
/// edge.  All entries are integers by construction.
pub fn transfer_matrix(pi: &Cover, st: &Stabilization) -> Vec<Vec<Rat>> {
    let tgt = pi.target();
    let mut m = vec![vec![Rat::from_integer(0.into()); tgt.edges().len()]; st.chains.len()];
    for (ci, chain) in st.chains.iter().enumerate() {
        for &e in &chain.edges {
            let j = tgt
                .edge_index(pi.map_of(e.0))
                .expect("edge flags map to edge flags");
            let add = pi.length_factor(e, MetricConvention::Rescaled);
            m[ci][j] += add;
        }
    }
    m
}

/// Distinct stabilized images of the weight-preserving automorphisms: a
/// subgroup of the automorphisms of the stabilized source.
pub fn induced_stab_group(pi: &Cover, st: &Stabilization) -> Vec<Vec<Flag>> {
    let mut set: BTreeSet<Vec<Flag>> = BTreeSet::new();
    for aut in cover_automorphisms(pi) {
        let induced = st
            .induced_map(pi.source(), &aut.on_source)
            .expect("automorphisms preserve the stable part");
        set.insert(induced);
    }
    set.into_iter().collect()
}

/// Index of the stabilized automorphism images inside the group they
/// generate together with the edge-fixing maps.  This counts how many
/// generic isometries of the stabilized source are *not* induced by any
/// relabelling of the cover; equivalence classes of marked covers are larger
/// than automorphism orbits by exactly this factor.
pub fn fold_index(pi: &Cover, st: &Stabilization) -> u64 {
    let induced = induced_stab_group(pi, st);
    let fixing = edge_fixing_automorphisms(&st.graph);
    let joined = group_closure(induced.iter().chain(fixing.iter()).cloned());
    debug_assert_eq!(joined.len() % induced.len(), 0);
    (joined.len() / induced.len()) as u64
}

/// The multiplicity of a cover: `fold * weight * |det| / (HS * VS)`, where
/// `det` is the determinant of the supplied transfer matrix.  Returns zero
/// for a non-square or singular matrix (the cover does not cut out an
/// isolated point) and an error if the result is not a non-negative integer.
pub fn cover_multiplicity(pi: &Cover, ft_f: &[Vec<Rat>]) -> Result<u64> {
    let n = ft_f.len();
    if n == 0 || ft_f.iter().any(|row| row.len() != n) {
        return Ok(0);
    }
    let dt = det(ft_f);
    if dt == Rat::from_integer(0.into()) {
        return Ok(0);
    }
    let report = standard_weight(pi)?;
    let (vs, hs) = stabilizers(pi)?;
    let st = stabilize(pi.source())?;
    let fold = fold_index(pi, &st);
    let mult = rat_uint(fold) * &report.weight * dt.abs() / rat_uint(vs * hs);
    if !is_nonneg_integer(&mult) {
        return Err(Error::NonIntegralMultiplicity(fmt_rat(&mult)));
    }
    Ok(mult
        .to_integer()
        .to_u64()
        .expect("multiplicities fit in a machine word"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{families, DiscreteGraph, GraphBuilder};
    use num_traits::{One, Zero};

    fn rat(p: i64, q: i64) -> Rat {
        Rat::new(p.into(), q.into())
    }

    #[test]
    fn partition_lists_have_the_right_sizes() {
        let expected = [1usize, 1, 2, 3, 5, 7, 11, 15, 22];
        for (n, &count) in expected.iter().enumerate() {
            assert_eq!(partitions_of(n as u64).len(), count, "p({n})");
        }
        assert!(partitions_of(5).contains(&vec![3, 1, 1]));
        for p in partitions_of(6) {
            assert!(p.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(p.iter().sum::<u64>(), 6);
        }
    }

    #[test]
    fn class_sizes_sum_to_group_order() {
        for d in 1..=6u64 {
            let total: u64 = partitions_of(d).iter().map(|p| class_size(d, p)).sum();
            assert_eq!(total, factorial(d), "d={d}");
        }
        assert_eq!(class_size(4, &[2, 2]), 3);
        assert_eq!(class_size(4, &[2, 1, 1]), 6);
        assert_eq!(class_size(5, &[5]), 24);
    }

    #[test]
    fn hurwitz_closed_forms() {
        // Two maximal cycles: 1/d.
        for d in 1..=6u64 {
            let h = hurwitz_genus0(d, &[vec![d], vec![d]]).unwrap();
            assert_eq!(h, rat(1, d as i64), "H_d((d),(d))");
        }
        // Three near-trivial classes (i, 1^..), (j, 1^..), (k, 1^..) with
        // i + j + k = 2d + 1: exactly one tuple up to conjugation.
        assert_eq!(
            hurwitz_genus0(3, &[vec![3], vec![2, 1], vec![2, 1]]).unwrap(),
            Rat::one()
        );
        assert_eq!(
            hurwitz_genus0(4, &[vec![2, 1, 1], vec![3, 1], vec![4]]).unwrap(),
            Rat::one()
        );
        assert_eq!(
            hurwitz_genus0(5, &[vec![2, 1, 1, 1], vec![4, 1], vec![5]]).unwrap(),
            Rat::one()
        );
        // A transposition, a pair of equal cycles, and a full cycle: 1/2.
        assert_eq!(
            hurwitz_genus0(4, &[vec![2, 1, 1], vec![2, 2], vec![4]]).unwrap(),
            rat(1, 2)
        );
        // Double transpositions three times over four sheets: 1/4.
        assert_eq!(
            hurwitz_genus0(4, &[vec![2, 2], vec![2, 2], vec![2, 2]]).unwrap(),
            rat(1, 4)
        );
        // Unramified layers drop out.
        assert_eq!(
            hurwitz_genus0(2, &[vec![2], vec![2], vec![1, 1]]).unwrap(),
            rat(1, 2)
        );
    }

    #[test]
    fn hurwitz_vanishes_off_genus_zero() {
        assert!(hurwitz_genus0(2, &[vec![2], vec![2], vec![2]])
            .unwrap()
            .is_zero());
        assert!(hurwitz_genus0(3, &[vec![2, 1], vec![2, 1]])
            .unwrap()
            .is_zero());
        assert!(hurwitz_genus0(3, &[vec![3], vec![3], vec![3]])
            .unwrap()
            .is_zero());
        // Disconnected-only data: right defect, no transitive solutions.
        assert!(hurwitz_genus0(4, &[vec![2, 2], vec![2, 1, 1], vec![2, 1, 1], vec![2, 1, 1]])
            .unwrap()
            .is_zero());
    }

    #[test]
    fn hurwitz_rejects_bad_input() {
        assert!(matches!(
            hurwitz_genus0(3, &[vec![2]]),
            Err(Error::ProfileSumMismatch(3))
        ));
        assert!(matches!(
            hurwitz_genus0(9, &[vec![9], vec![9]]),
            Err(Error::UsageError(_))
        ));
        assert!(matches!(
            hurwitz_genus0(0, &[]),
            Err(Error::UsageError(_))
        ));
        assert!(hurwitz_genus0(2, &[vec![2, 0]]).is_err());
    }

    #[test]
    fn fast_and_brute_counts_agree() {
        let cases: Vec<(u64, Vec<Partition>)> = vec![
            (2, vec![vec![2], vec![2]]),
            (3, vec![vec![3], vec![2, 1], vec![2, 1]]),
            (3, vec![vec![2, 1], vec![2, 1], vec![2, 1], vec![2, 1]]),
            (4, vec![vec![2, 2], vec![2, 2], vec![2, 2]]),
            (4, vec![vec![4], vec![4], vec![2, 1, 1]]),
            (4, vec![vec![3, 1], vec![3, 1], vec![2, 1, 1]]),
            (5, vec![vec![5], vec![5]]),
            (5, vec![vec![2, 2, 1], vec![2, 2, 1], vec![3, 1, 1]]),
        ];
        for (d, profiles) in cases {
            let fast = hurwitz_genus0(d, &profiles).unwrap();
            let brute = hurwitz_genus0_brute(d, &profiles).unwrap();
            assert_eq!(fast, brute, "d={d}, profiles={profiles:?}");
        }
    }

    // ---- fixtures: the two shapes of genus-2 double covers ---------------

    /// Four-vertex caterpillar: `P0 - S0 - S1 - P1` with two marked legs on
    /// each `P` and one on each `S`.  `marks` assigns the marking indices in
    /// the order `[P0, P0, S0, S1, P1, P1]`.
    fn caterpillar(marks: [u32; 6]) -> DiscreteGraph {
        let mut b = GraphBuilder::new();
        let p0 = b.vertex();
        let s0 = b.vertex();
        let s1 = b.vertex();
        let p1 = b.vertex();
        b.edge(p0, s0);
        b.edge(s0, s1);
        b.edge(s1, p1);
        b.marked_leg(p0, marks[0], None);
        b.marked_leg(p0, marks[1], None);
        b.marked_leg(s0, marks[2], None);
        b.marked_leg(s1, marks[3], None);
        b.marked_leg(p1, marks[4], None);
        b.marked_leg(p1, marks[5], None);
        b.build().unwrap()
    }

    /// The unique double cover of the caterpillar with the marked-fiber
    /// shape: each leg covered by one weight-2 leg, the middle edge doubly
    /// covered by a single edge, the outer edges by parallel pairs.  Its
    /// stable part is the dumbbell.
    fn caterpillar_cover(marks: [u32; 6]) -> Cover {
        let t = caterpillar(marks);
        let mut b = GraphBuilder::new();
        let w0 = b.vertex();
        let v0 = b.vertex();
        let v1 = b.vertex();
        let w1 = b.vertex();
        let (a0, a1) = b.edge(w0, v0);
        let (a2, a3) = b.edge(w0, v0);
        let (m0, m1) = b.edge(v0, v1);
        let (c0, c1) = b.edge(v1, w1);
        let (c2, c3) = b.edge(v1, w1);
        let legs = [
            b.leg(w0),
            b.leg(w0),
            b.leg(v0),
            b.leg(v1),
            b.leg(w1),
            b.leg(w1),
        ];
        for &l in &legs {
            b.weight(l, 2);
        }
        let s = b.build().unwrap();

        let tv = |i: usize| t.vertices()[i];
        let te = |i: usize| t.edges()[i];
        let tl = |i: usize| t.legs()[i];
        let mut map = vec![0usize; s.n_flags()];
        let mut deg = vec![0u64; s.n_flags()];
        for (sv, i) in [(w0, 0), (v0, 1), (v1, 2), (w1, 3)] {
            map[sv] = tv(i);
            deg[sv] = 2;
        }
        for (sf, tf, d) in [
            (a0, te(0).0, 1),
            (a1, te(0).1, 1),
            (a2, te(0).0, 1),
            (a3, te(0).1, 1),
            (m0, te(1).0, 2),
            (m1, te(1).1, 2),
            (c0, te(2).0, 1),
            (c1, te(2).1, 1),
            (c2, te(2).0, 1),
            (c3, te(2).1, 1),
        ] {
            map[sf] = tf;
            deg[sf] = d;
        }
        for (i, &l) in legs.iter().enumerate() {
            map[l] = tl(i);
            deg[l] = 2;
        }
        Cover::new(s, t, map, deg).unwrap()
    }

    /// Three-arm star: center `U` with three leaf arms, two marked legs per
    /// leaf.  Its double cover with the marked-fiber shape stabilizes to the
    /// theta graph.
    fn star_cover() -> Cover {
        let mut b = GraphBuilder::new();
        let u = b.vertex();
        let w: Vec<_> = (0..3).map(|_| b.vertex()).collect();
        for &wi in &w {
            b.edge(u, wi);
        }
        for (i, &wi) in w.iter().enumerate() {
            b.marked_leg(wi, 2 * i as u32 + 1, None);
            b.marked_leg(wi, 2 * i as u32 + 2, None);
        }
        let t = b.build().unwrap();

        let mut b = GraphBuilder::new();
        let up = b.vertex();
        let dn = b.vertex();
        let wh: Vec<_> = (0..3).map(|_| b.vertex()).collect();
        let mut arm_flags = Vec::new();
        for &whi in &wh {
            arm_flags.push(b.edge(up, whi));
            arm_flags.push(b.edge(dn, whi));
        }
        let mut legs = Vec::new();
        for &whi in &wh {
            let l1 = b.leg(whi);
            let l2 = b.leg(whi);
            b.weight(l1, 2);
            b.weight(l2, 2);
            legs.push((l1, l2));
        }
        let s = b.build().unwrap();

        let mut map = vec![0usize; s.n_flags()];
        let mut deg = vec![0u64; s.n_flags()];
        map[up] = u;
        deg[up] = 1;
        map[dn] = u;
        deg[dn] = 1;
        for i in 0..3 {
            map[wh[i]] = t.vertices()[i + 1];
            deg[wh[i]] = 2;
            let (u_side, w_side) = t.edges()[i];
            for k in 0..2 {
                let (near, far) = arm_flags[2 * i + k];
                map[near] = u_side;
                deg[near] = 1;
                map[far] = w_side;
                deg[far] = 1;
            }
            let (l1, l2) = legs[i];
            map[l1] = t.marking()[&(2 * i as u32 + 1)];
            deg[l1] = 2;
            map[l2] = t.marking()[&(2 * i as u32 + 2)];
            deg[l2] = 2;
        }
        Cover::new(s, t, map, deg).unwrap()
    }

    const LEAF_MARKS: [u32; 6] = [1, 2, 3, 6, 4, 5];
    const MIDDLE_MARKS: [u32; 6] = [2, 3, 1, 6, 4, 5];

    #[test]
    fn caterpillar_cover_matches_the_standard_tree() {
        use crate::graphs::iso::find_isomorphisms;
        let t = caterpillar(LEAF_MARKS);
        let std = families::garland_tree(2).unwrap();
        assert!(!find_isomorphisms(&t, &std, IsoOpts::strict()).is_empty());
    }

    #[test]
    fn local_data_of_the_double_cover() {
        let pi = caterpillar_cover(LEAF_MARKS);
        let src = pi.source();
        // Outer vertices: two weight-2 legs and a split pair of edges.
        assert_eq!(cf_factor(&pi, src.vertices()[0]), 2);
        // Middle vertices: one split pair, one leg, one weight-2 edge.
        assert_eq!(cf_factor(&pi, src.vertices()[1]), 2);
        for &v in src.vertices() {
            let mut profs: Vec<Partition> =
                local_profiles(&pi, v).into_iter().map(|(_, p)| p).collect();
            profs.sort();
            assert_eq!(profs, vec![vec![1, 1], vec![2], vec![2]]);
        }
    }

    #[test]
    fn weight_of_the_double_covers() {
        for marks in [LEAF_MARKS, MIDDLE_MARKS] {
            let pi = caterpillar_cover(marks);
            let report = standard_weight(&pi).unwrap();
            assert_eq!(report.edge_product, 2);
            assert_eq!(report.lcm_denominator, 2);
            for (_, h, cf) in &report.per_vertex {
                assert_eq!(h, &rat(1, 2));
                assert_eq!(*cf, 2);
            }
            assert!(report.weight.is_one());
        }
        let report = standard_weight(&star_cover()).unwrap();
        assert_eq!(report.edge_product, 1);
        assert_eq!(report.lcm_denominator, 1);
        assert!(report.weight.is_one());
    }

    #[test]
    fn shape_check_accepts_and_rejects() {
        assert_eq!(weierstrass_shape(&caterpillar_cover(LEAF_MARKS)).unwrap(), 2);
        assert_eq!(weierstrass_shape(&star_cover()).unwrap(), 2);

        // The identity cover has degree 1: rejected outright.
        let t = caterpillar(LEAF_MARKS);
        let idm: Vec<Flag> = (0..t.n_flags()).collect();
        let trivial = Cover::new(t.clone(), t.clone(), idm, vec![1; t.n_flags()]).unwrap();
        assert!(matches!(
            weierstrass_shape(&trivial),
            Err(Error::WrongProfile(_))
        ));

        // A disconnected double cover splits every leg fiber into (1,1).
        let n = t.n_flags();
        let mut b = GraphBuilder::new();
        for _ in 0..2 {
            let p0 = b.vertex();
            let s0 = b.vertex();
            let s1 = b.vertex();
            let p1 = b.vertex();
            b.edge(p0, s0);
            b.edge(s0, s1);
            b.edge(s1, p1);
            for v in [p0, p0, s0, s1, p1, p1] {
                b.leg(v);
            }
        }
        let two_sheets = b.build().unwrap();
        let map: Vec<Flag> = (0..2 * n).map(|f| f % n).collect();
        let split = Cover::new(two_sheets, t, map, vec![1; 2 * n]).unwrap();
        assert!(matches!(
            weierstrass_shape(&split),
            Err(Error::WrongProfile(_))
        ));
    }

    #[test]
    fn automorphism_counts_depend_on_the_marking() {
        assert_eq!(cover_automorphisms(&caterpillar_cover(LEAF_MARKS)).len(), 8);
        assert_eq!(
            cover_automorphisms(&caterpillar_cover(MIDDLE_MARKS)).len(),
            16
        );
        assert_eq!(cover_automorphisms(&star_cover()).len(), 16);
    }

    #[test]
    fn stabilizer_sizes() {
        assert_eq!(stabilizers(&caterpillar_cover(LEAF_MARKS)).unwrap(), (1, 2));
        assert_eq!(
            stabilizers(&caterpillar_cover(MIDDLE_MARKS)).unwrap(),
            (1, 4)
        );
        assert_eq!(stabilizers(&star_cover()).unwrap(), (1, 4));
    }

    #[test]
    fn transfer_matrices_and_multiplicities() {
        for (marks, expected_mult) in [(LEAF_MARKS, 2u64), (MIDDLE_MARKS, 1u64)] {
            let pi = caterpillar_cover(marks);
            let st = stabilize(pi.source()).unwrap();
            let m = transfer_matrix(&pi, &st);
            assert_eq!(m.len(), 3);
            assert_eq!(det(&m).abs(), rat(4, 1));
            assert!(m
                .iter()
                .flatten()
                .all(|x| x.denom().is_one()), "integer entries");
            assert_eq!(cover_multiplicity(&pi, &m).unwrap(), expected_mult);
        }
        let pi = star_cover();
        let st = stabilize(pi.source()).unwrap();
        let m = transfer_matrix(&pi, &st);
        assert_eq!(det(&m).abs(), rat(8, 1));
        assert_eq!(cover_multiplicity(&pi, &m).unwrap(), 2);
    }

    #[test]
    fn fold_index_is_trivial_for_genus_two() {
        for marks in [LEAF_MARKS, MIDDLE_MARKS] {
            let pi = caterpillar_cover(marks);
            let st = stabilize(pi.source()).unwrap();
            assert_eq!(fold_index(&pi, &st), 1);
        }
        let pi = star_cover();
        let st = stabilize(pi.source()).unwrap();
        assert_eq!(fold_index(&pi, &st), 1);
    }

    #[test]
    fn degenerate_transfer_matrices_give_zero() {
        let pi = caterpillar_cover(LEAF_MARKS);
        // Non-square: treated as multiplicity zero.
        assert_eq!(cover_multiplicity(&pi, &[vec![rat(1, 1)], vec![]]).unwrap(), 0);
        // Singular square matrix likewise.
        let singular = vec![
            vec![rat(1, 1), rat(1, 1), rat(0, 1)],
            vec![rat(1, 1), rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
        ];
        assert_eq!(cover_multiplicity(&pi, &singular).unwrap(), 0);
    }
}
