//! Divisors on metric graphs and the chip-firing rank.
//!
//! A [`MetricGraph`] is a legless connected graph with a positive rational
//! length per edge.  Divisors are integer combinations of points (vertices or
//! rational interior points of edges).  The rank is computed exactly:
//!
//! 1. scale all lengths and offsets to integers by the common denominator,
//!    divide by their gcd, and double once if a loop would end up with a
//!    single segment (so the unit subdivision never has a self-loop);
//! 2. build the unit subdivision, a finite multigraph;
//! 3. compute the combinatorial rank there via repeated passes to a
//!    `q`-reduced representative (a debt-clearing sweep along breadth-first
//!    layers followed by burning), using the recursion
//!    `rank(D) = 1 + min_v rank(D - v)` with memoization on reduced forms.
//!
//! The subdivision size is capped by a budget so pathological denominators
//! fail loudly instead of thrashing.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num::bigint::BigInt;
use num::traits::{Signed, ToPrimitive, Zero};
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::graphs::{DiscreteGraph, Flag};
use crate::rational::{denominator_lcm, rat_uint, Rat};

/// Default cap on the number of unit-subdivision vertices.
pub const DEFAULT_SUBDIVISION_BUDGET: u64 = 5000;

/// A point of the geometric realization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    /// A model vertex, by vertex flag.
    Vertex(Flag),
    /// An interior point of the edge with this id (its smaller flag), at
    /// `offset` from the root of that smaller flag, `0 < offset < length`.
    Interior { edge: Flag, offset: Rat },
}

/// An integer divisor supported on finitely many points.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Divisor {
    coeffs: BTreeMap<Point, i64>,
}

impl Divisor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, p: Point, c: i64) {
        let e = self.coeffs.entry(p.clone()).or_insert(0);
        *e += c;
        if *e == 0 {
            self.coeffs.remove(&p);
        }
    }

    pub fn of(entries: impl IntoIterator<Item = (Point, i64)>) -> Self {
        let mut d = Divisor::new();
        for (p, c) in entries {
            d.add(p, c);
        }
        d
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Point, i64)> {
        self.coeffs.iter().map(|(p, &c)| (p, c))
    }

    /// Coefficient at a point (zero when absent from the support).
    pub fn coeff(&self, p: &Point) -> i64 {
        self.coeffs.get(p).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn scaled(&self, k: i64) -> Divisor {
        Divisor::of(self.entries().map(|(p, c)| (p.clone(), c * k)))
    }

    pub fn plus(&self, other: &Divisor) -> Divisor {
        let mut d = self.clone();
        for (p, c) in other.entries() {
            d.add(p.clone(), c);
        }
        d
    }

    pub fn minus(&self, other: &Divisor) -> Divisor {
        self.plus(&other.scaled(-1))
    }
}

/// A legless connected graph with positive rational edge lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricGraph {
    graph: DiscreteGraph,
    /// Edge id (smaller flag) -> length.
    lengths: BTreeMap<Flag, Rat>,
}

impl MetricGraph {
    pub fn new(graph: DiscreteGraph, lengths: BTreeMap<Flag, Rat>) -> Result<Self> {
        if !graph.legs().is_empty() {
            return Err(Error::UsageError(
                "metric graphs must be legless; drop legs first".into(),
            ));
        }
        if !graph.is_connected() {
            return Err(Error::UsageError("metric graph must be connected".into()));
        }
        for &(a, _) in graph.edges() {
            match lengths.get(&a) {
                None => {
                    return Err(Error::NonpositiveLength(format!(
                        "edge {a} has no length"
                    )))
                }
                Some(l) if !l.is_positive() => {
                    return Err(Error::NonpositiveLength(format!(
                        "edge {a} has non-positive length"
                    )))
                }
                _ => {}
            }
        }
        if lengths.len() != graph.edges().len() {
            return Err(Error::UsageError(
                "lengths given for ids that are not edges".into(),
            ));
        }
        Ok(MetricGraph { graph, lengths })
    }

    pub fn graph(&self) -> &DiscreteGraph {
        &self.graph
    }

    pub fn lengths(&self) -> &BTreeMap<Flag, Rat> {
        &self.lengths
    }

    pub fn length(&self, edge: Flag) -> &Rat {
        &self.lengths[&edge]
    }

    pub fn genus(&self) -> u64 {
        self.graph.genus()
    }

    /// Validate a point against this graph and normalize boundary offsets to
    /// vertices.
    pub fn normalize_point(&self, p: &Point) -> Result<Point> {
        match p {
            Point::Vertex(v) => {
                if *v < self.graph.n_flags() && self.graph.is_vertex(*v) {
                    Ok(p.clone())
                } else {
                    Err(Error::UsageError(format!("{v} is not a vertex flag")))
                }
            }
            Point::Interior { edge, offset } => {
                let Some(len) = self.lengths.get(edge) else {
                    return Err(Error::UsageError(format!("{edge} is not an edge id")));
                };
                if offset.is_negative() || offset > len {
                    return Err(Error::NonpositiveLength(format!(
                        "offset out of range on edge {edge}"
                    )));
                }
                if offset.is_zero() {
                    Ok(Point::Vertex(self.graph.root(*edge)))
                } else if offset == len {
                    Ok(Point::Vertex(self.graph.root(self.graph.inv(*edge))))
                } else {
                    Ok(p.clone())
                }
            }
        }
    }

    /// The canonical divisor: `val(v) - 2` at every vertex.
    pub fn canonical_divisor(&self) -> Divisor {
        Divisor::of(
            self.graph
                .vertices()
                .iter()
                .map(|&v| (Point::Vertex(v), self.graph.val(v) as i64 - 2)),
        )
    }
}

/// Unit subdivision of a metric graph, with requested points landing on
/// subdivision vertices.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub n: usize,
    /// Adjacency with multiplicities (parallel unit segments).
    pub adj: Vec<Vec<(usize, u64)>>,
    /// Model vertex flag -> subdivision vertex.
    pub model_vertex: BTreeMap<Flag, usize>,
    /// Requested point -> subdivision vertex.
    pub point_vertex: BTreeMap<Point, usize>,
}

/// Build the unit subdivision fine enough to host `points`.
pub fn subdivide(mg: &MetricGraph, points: &[Point], budget: u64) -> Result<Subdivision> {
    let g = mg.graph();
    let mut normalized = Vec::new();
    for p in points {
        normalized.push(mg.normalize_point(p)?);
    }
    let offsets: Vec<&Rat> = normalized
        .iter()
        .filter_map(|p| match p {
            Point::Interior { offset, .. } => Some(offset),
            _ => None,
        })
        .collect();
    let lam = {
        let mut l = denominator_lcm(mg.lengths().values());
        l = l.lcm(&denominator_lcm(offsets.iter().copied()));
        l
    };
    // Integer edge lengths after scaling by lam, then divide by the gcd.
    let mut int_lengths: BTreeMap<Flag, BigInt> = BTreeMap::new();
    for (&e, len) in mg.lengths() {
        let v = (len * Rat::from_integer(lam.clone())).to_integer();
        int_lengths.insert(e, v);
    }
    let mut gcd = BigInt::zero();
    for v in int_lengths.values() {
        gcd = gcd.gcd(v);
    }
    for p in &normalized {
        if let Point::Interior { offset, .. } = p {
            let v = (offset * Rat::from_integer(lam.clone())).to_integer();
            gcd = gcd.gcd(&v);
        }
    }
    if gcd.is_zero() {
        gcd = BigInt::from(1);
    }
    let unit_of = |r: &Rat, mul: &BigInt| -> Result<u64> {
        let v = (r * Rat::from_integer(lam.clone())).to_integer() / &gcd * mul;
        v.to_u64()
            .ok_or_else(|| Error::SubdivisionTooLarge {
                needed: u64::MAX,
                budget,
            })
    };
    // Double everything once if some loop would be a single unit segment.
    let mut mul = BigInt::from(1);
    for (&e, v) in &int_lengths {
        if g.is_loop((e, g.inv(e))) && (v / &gcd).to_u64() == Some(1) {
            mul = BigInt::from(2);
            break;
        }
    }

    let mut needed: u64 = g.vertices().len() as u64;
    let mut units: BTreeMap<Flag, u64> = BTreeMap::new();
    for (&e, _) in &int_lengths {
        let u = unit_of(mg.length(e), &mul)?;
        needed = needed.saturating_add(u.saturating_sub(1));
        units.insert(e, u);
    }
    if needed > budget {
        return Err(Error::SubdivisionTooLarge { needed, budget });
    }

    let mut model_vertex = BTreeMap::new();
    let mut n = 0usize;
    for &v in g.vertices() {
        model_vertex.insert(v, n);
        n += 1;
    }
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    let mut edge_interior: BTreeMap<Flag, (usize, u64)> = BTreeMap::new(); // first interior vertex, count
    let connect = |adj: &mut Vec<Vec<(usize, u64)>>, a: usize, b: usize| {
        for entry in adj[a].iter_mut() {
            if entry.0 == b {
                entry.1 += 1;
                let back = adj[b].iter_mut().find(|e| e.0 == a).unwrap();
                back.1 += 1;
                return;
            }
        }
        adj[a].push((b, 1));
        adj[b].push((a, 1));
    };
    for &(e, f) in g.edges() {
        let u = model_vertex[&g.root(e)];
        let w = model_vertex[&g.root(f)];
        let k = units[&e];
        debug_assert!(k >= 1);
        if k == 1 {
            debug_assert!(u != w, "loops are pre-doubled");
            connect(&mut adj, u, w);
        } else {
            let first = adj.len();
            for _ in 0..k - 1 {
                adj.push(Vec::new());
            }
            edge_interior.insert(e, (first, k - 1));
            connect(&mut adj, u, first);
            for i in 0..(k - 2) as usize {
                connect(&mut adj, first + i, first + i + 1);
            }
            connect(&mut adj, first + (k - 2) as usize, w);
        }
    }
    n = adj.len();

    let mut point_vertex = BTreeMap::new();
    for (orig, norm) in points.iter().zip(normalized.iter()) {
        let sv = match norm {
            Point::Vertex(v) => model_vertex[v],
            Point::Interior { edge, offset } => {
                let k = unit_of(offset, &mul)?;
                let (first, cnt) = edge_interior[edge];
                debug_assert!(k >= 1 && k <= cnt);
                first + (k - 1) as usize
            }
        };
        point_vertex.insert(orig.clone(), sv);
        point_vertex.insert(norm.clone(), sv);
    }

    Ok(Subdivision {
        n,
        adj,
        model_vertex,
        point_vertex,
    })
}

/// Replace `d` by the `q`-reduced representative of its class.
pub fn reduce(sub: &Subdivision, d: &[i64], q: usize) -> Vec<i64> {
    let mut d = d.to_vec();
    let n = sub.n;
    // Breadth-first layers from q.
    let mut dist = vec![usize::MAX; n];
    dist[q] = 0;
    let mut queue = VecDeque::from([q]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &sub.adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let maxd = dist.iter().copied().max().unwrap_or(0);

    // Phase 1: clear debt outward-in.  Firing the ball `dist < i` touches
    // only layers i-1 (which lose their downward edges) and i (which gain
    // their upward edges), so one batched multi-firing per layer restores
    // non-negativity on layer i and the sweep is linear overall.
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); maxd + 1];
    let mut up = vec![0i64; n];
    let mut down = vec![0i64; n];
    for v in 0..n {
        layers[dist[v]].push(v);
        for &(w, m) in &sub.adj[v] {
            if dist[w] + 1 == dist[v] {
                up[v] += m as i64;
            } else if dist[w] == dist[v] + 1 {
                down[v] += m as i64;
            }
        }
    }
    for i in (1..=maxd).rev() {
        let mut times: i64 = 0;
        for &v in &layers[i] {
            if d[v] < 0 {
                debug_assert!(up[v] > 0, "layer i touches layer i-1");
                times = times.max((-d[v] + up[v] - 1) / up[v]);
            }
        }
        if times == 0 {
            continue;
        }
        for &v in &layers[i] {
            d[v] += times * up[v];
        }
        for &v in &layers[i - 1] {
            d[v] -= times * down[v];
        }
    }

    // Phase 2: burning.  Fire the unburnt set until everything burns from q.
    loop {
        let mut burnt = vec![false; n];
        let mut into_burnt = vec![0i64; n];
        burnt[q] = true;
        let mut queue = VecDeque::from([q]);
        while let Some(v) = queue.pop_front() {
            for &(w, m) in &sub.adj[v] {
                if !burnt[w] {
                    into_burnt[w] += m as i64;
                    if into_burnt[w] > d[w] {
                        burnt[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        if burnt.iter().all(|&b| b) {
            return d;
        }
        for v in 0..n {
            if !burnt[v] {
                // Fire the whole unburnt set: lose one chip per edge to burnt.
                d[v] -= into_burnt[v];
            } else {
                let from_unburnt: i64 = sub.adj[v]
                    .iter()
                    .filter(|&&(w, _)| !burnt[w])
                    .map(|&(_, m)| m as i64)
                    .sum();
                d[v] += from_unburnt;
            }
        }
    }
}

/// Combinatorial rank of a divisor on the subdivision.
pub fn rank_on_subdivision(sub: &Subdivision, d: &[i64]) -> i64 {
    let mut memo: HashMap<Vec<i64>, i64> = HashMap::new();
    rank_memo(sub, d.to_vec(), 0, &mut memo)
}

fn rank_memo(sub: &Subdivision, d: Vec<i64>, q: usize, memo: &mut HashMap<Vec<i64>, i64>) -> i64 {
    let deg: i64 = d.iter().sum();
    if deg < 0 {
        return -1;
    }
    let red = reduce(sub, &d, q);
    if let Some(&r) = memo.get(&red) {
        return r;
    }
    if red[q] < 0 {
        memo.insert(red, -1);
        return -1;
    }
    // rank(D) = 1 + min over vertices v of rank(D - v).
    let mut min_child = i64::MAX;
    for v in 0..sub.n {
        let mut child = red.clone();
        child[v] -= 1;
        let r = rank_memo(sub, child, q, memo);
        min_child = min_child.min(r);
        if min_child == -1 {
            break;
        }
    }
    let r = 1 + min_child;
    memo.insert(red, r);
    r
}

/// Exact rank of a divisor on a metric graph.
pub fn rank(mg: &MetricGraph, d: &Divisor, budget: u64) -> Result<i64> {
    let points: Vec<Point> = d.entries().map(|(p, _)| p.clone()).collect();
    let sub = subdivide(mg, &points, budget)?;
    let mut vec = vec![0i64; sub.n];
    for (p, c) in d.entries() {
        vec[sub.point_vertex[p]] += c;
    }
    Ok(rank_on_subdivision(&sub, &vec))
}

/// `rank(D) - rank(K - D) - deg(D) + g - 1`; zero for every divisor.
pub fn riemann_roch_residual(mg: &MetricGraph, d: &Divisor, budget: u64) -> Result<i64> {
    let k = mg.canonical_divisor();
    let kd = k.minus(d);
    let points: Vec<Point> = d
        .entries()
        .map(|(p, _)| p.clone())
        .chain(kd.entries().map(|(p, _)| p.clone()))
        .collect();
    let sub = subdivide(mg, &points, budget)?;
    let to_vec = |dv: &Divisor| -> Vec<i64> {
        let mut v = vec![0i64; sub.n];
        for (p, c) in dv.entries() {
            v[sub.point_vertex[p]] += c;
        }
        v
    };
    let rd = rank_on_subdivision(&sub, &to_vec(d));
    let rkd = rank_on_subdivision(&sub, &to_vec(&kd));
    let g = mg.genus() as i64;
    Ok(rd - rkd - d.degree() + g - 1)
}

/// Does `g * [p]` move: is `rank(g [p]) >= 1`?
///
/// Uses the degree-one test directly: the rank is at least one iff for every
/// subdivision vertex `v` the divisor `g [p] - [v]` is equivalent to an
/// effective one, i.e. the `v`-reduced form keeps a chip at `v`.
pub fn is_weierstrass(mg: &MetricGraph, p: &Point, budget: u64) -> Result<bool> {
    let g = mg.genus();
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    let p = mg.normalize_point(p)?;
    let sub = subdivide(mg, std::slice::from_ref(&p), budget)?;
    let mut d = vec![0i64; sub.n];
    d[sub.point_vertex[&p]] += g as i64;
    for v in 0..sub.n {
        let red = reduce(&sub, &d, v);
        if red[v] < 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convenience: rationals as lengths keyed in canonical edge order.
pub fn metric_from_lengths(graph: DiscreteGraph, lens: &[Rat]) -> Result<MetricGraph> {
    if lens.len() != graph.edges().len() {
        return Err(Error::UsageError(format!(
            "expected {} lengths, got {}",
            graph.edges().len(),
            lens.len()
        )));
    }
    let lengths = graph
        .edges()
        .iter()
        .zip(lens.iter())
        .map(|(&(a, _), l)| (a, l.clone()))
        .collect();
    MetricGraph::new(graph, lengths)
}

/// Equal integer lengths (handy in tests).
pub fn unit_metric(graph: DiscreteGraph) -> Result<MetricGraph> {
    let lens = vec![rat_uint(1); graph.edges().len()];
    metric_from_lengths(graph, &lens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::families;
    use crate::rational::parse_rat;

    fn dumbbell_metric() -> MetricGraph {
        // Loop a, loop b, bridge, each of length 4.
        metric_from_lengths(families::dumbbell(), &[rat_uint(4), rat_uint(4), rat_uint(4)])
            .unwrap()
    }

    fn loop_edge(mg: &MetricGraph, at_vertex: Flag) -> Flag {
        mg.graph()
            .edges()
            .iter()
            .find(|&&e| mg.graph().is_loop(e) && mg.graph().root(e.0) == at_vertex)
            .map(|&(a, _)| a)
            .unwrap()
    }

    #[test]
    fn canonical_divisor_of_dumbbell() {
        let mg = dumbbell_metric();
        let k = mg.canonical_divisor();
        assert_eq!(k.degree(), 2);
        for (_, c) in k.entries() {
            assert_eq!(c, 1);
        }
    }

    #[test]
    fn midpoint_of_loop_moves_but_generic_point_does_not() {
        // On a dumbbell, twice the far point of a loop has rank one, while
        // twice a generic loop point has rank zero.
        let mg = dumbbell_metric();
        let e = loop_edge(&mg, 0);
        let far = Point::Interior {
            edge: e,
            offset: rat_uint(2),
        };
        let near = Point::Interior {
            edge: e,
            offset: rat_uint(1),
        };
        let two = |p: &Point| Divisor::of([(p.clone(), 2)]);
        assert_eq!(rank(&mg, &two(&far), 1000).unwrap(), 1);
        assert_eq!(rank(&mg, &two(&near), 1000).unwrap(), 0);
        assert!(is_weierstrass(&mg, &far, 1000).unwrap());
        assert!(!is_weierstrass(&mg, &near, 1000).unwrap());
    }

    #[test]
    fn circle_rank_is_degree_minus_one() {
        let mg = metric_from_lengths(families::circle(), &[rat_uint(1), rat_uint(1)]).unwrap();
        let p = Point::Vertex(0);
        for n in 1..=5i64 {
            let d = Divisor::of([(p.clone(), n)]);
            assert_eq!(rank(&mg, &d, 1000).unwrap(), n - 1, "n={n}");
        }
    }

    #[test]
    fn rank_with_rational_support() {
        let mg = metric_from_lengths(
            families::dumbbell(),
            &[
                parse_rat("7/3").unwrap(),
                parse_rat("11/5").unwrap(),
                parse_rat("13/7").unwrap(),
            ],
        )
        .unwrap();
        let e = loop_edge(&mg, 0);
        let mid = Point::Interior {
            edge: e,
            offset: parse_rat("7/6").unwrap(),
        };
        let d = Divisor::of([(mid, 2)]);
        assert_eq!(rank(&mg, &d, 5000).unwrap(), 1);
    }

    #[test]
    fn riemann_roch_residual_vanishes_on_samples() {
        let mg = dumbbell_metric();
        let e = loop_edge(&mg, 0);
        let samples = vec![
            Divisor::of([(Point::Vertex(0), 1)]),
            Divisor::of([(Point::Vertex(0), 2), (Point::Vertex(1), -1)]),
            Divisor::of([
                (
                    Point::Interior {
                        edge: e,
                        offset: rat_uint(1),
                    },
                    2,
                ),
                (Point::Vertex(1), 1),
            ]),
            Divisor::new(),
        ];
        for d in samples {
            assert_eq!(riemann_roch_residual(&mg, &d, 2000).unwrap(), 0, "{d:?}");
        }
    }

    #[test]
    fn high_degree_rank_follows_riemann_roch() {
        let mg = dumbbell_metric();
        for k in 3..=6i64 {
            let d = Divisor::of([(Point::Vertex(0), k)]);
            assert_eq!(rank(&mg, &d, 2000).unwrap(), k - 2, "deg {k} >= 2g-1");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mg = metric_from_lengths(
            families::dumbbell(),
            &[
                parse_rat("1/101").unwrap(),
                parse_rat("1/103").unwrap(),
                parse_rat("1/107").unwrap(),
            ],
        )
        .unwrap();
        let d = Divisor::of([(Point::Vertex(0), 1)]);
        assert!(matches!(
            rank(&mg, &d, 100),
            Err(Error::SubdivisionTooLarge { .. })
        ));
    }

    #[test]
    fn loop_of_unit_length_is_doubled_not_selflooped() {
        let mg = metric_from_lengths(
            families::dumbbell(),
            &[rat_uint(1), rat_uint(1), rat_uint(1)],
        )
        .unwrap();
        let sub = subdivide(&mg, &[], 1000).unwrap();
        for v in 0..sub.n {
            assert!(sub.adj[v].iter().all(|&(w, _)| w != v), "no self-loops");
        }
        // Doubling: each loop contributes 2 segments, the bridge 2.
        assert_eq!(sub.n, 2 + 2 + 1);
    }

    #[test]
    fn reduced_divisor_is_stable_under_reduce() {
        let mg = dumbbell_metric();
        let sub = subdivide(&mg, &[], 1000).unwrap();
        let mut d = vec![0i64; sub.n];
        d[3] = 2;
        d[1] = -1;
        let r1 = reduce(&sub, &d, 0);
        let r2 = reduce(&sub, &r1, 0);
        assert_eq!(r1, r2);
        assert_eq!(r1.iter().sum::<i64>(), d.iter().sum::<i64>());
    }
}
