//! Deterministic JSON encoding of the crate's value types.
//!
//! Shapes:
//!
//! - graph: `{"flags": [id..], "root": {"id": id}, "involution": {"id": id},
//!   "marking": {"1": legId}?, "legWeights": {"legId": w}?,
//!   "lengths": {"edgeId": "p/q"}?}` — ids are the graph's external flag
//!   ids, `lengths` keyed by the id flag of each edge turns the graph into
//!   a metric graph;
//! - point: `vertexId` or `{"edge": id, "offset": "p/q"}`;
//! - divisor: `[{"at": point, "coeff": c}..]`;
//! - cover: `{"source": graph, "target": graph, "flagMap": {"id": id},
//!   "degree": {"id": d}}`;
//! - enumeration entry: `{"cover": cover, "orbit": n, "contributing": b}`;
//! - report: mirrors [`GwpReport`] field by field.
//!
//! Rationals are always `"p/q"` strings, never floats.  Object keys sort
//! lexicographically (the default `serde_json` map), so equal values
//! serialize byte-identically.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::covers::Cover;
use crate::divisors::{Divisor, MetricGraph, Point};
use crate::enumeration::EnumeratedCover;
use crate::error::{Error, Result};
use crate::graphs::{DiscreteGraph, Flag};
use crate::rational::{fmt_rat, parse_rat, Rat};
use crate::weierstrass::{GwpReport, GwpWitness, MarkedClass};

fn bad(what: &str) -> Error {
    Error::UsageError(format!("malformed JSON: {what}"))
}

fn as_object<'v>(v: &'v Value, what: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(&format!("{what} must be an object")))
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| bad(&format!("{what} must be a non-negative integer")))
}

fn key_u64(k: &str, what: &str) -> Result<u64> {
    k.parse::<u64>().map_err(|_| bad(&format!("{what} key {k:?} is not an integer")))
}

fn rat_value(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

fn rat_from(v: &Value, what: &str) -> Result<Rat> {
    let s = v.as_str().ok_or_else(|| bad(&format!("{what} must be a \"p/q\" string")))?;
    parse_rat(s)
}

/// Map from external flag ids to dense indices.
fn index_of(g: &DiscreteGraph) -> BTreeMap<u64, Flag> {
    g.ext_ids().iter().enumerate().map(|(f, &id)| (id, f)).collect()
}

fn id_map(g: &DiscreteGraph, image: impl Fn(Flag) -> Flag) -> Value {
    let ids = g.ext_ids();
    let mut m = Map::new();
    for f in 0..g.n_flags() {
        m.insert(ids[f].to_string(), json!(ids[image(f)]));
    }
    Value::Object(m)
}

/// Encode a graph, with `lengths` attached when supplied.
fn graph_value(g: &DiscreteGraph, lengths: Option<&BTreeMap<Flag, Rat>>) -> Value {
    let ids = g.ext_ids();
    let mut m = Map::new();
    m.insert("flags".into(), json!(ids));
    m.insert("root".into(), id_map(g, |f| g.root(f)));
    m.insert("involution".into(), id_map(g, |f| g.inv(f)));
    if !g.marking().is_empty() {
        let mut mk = Map::new();
        for (&i, &leg) in g.marking() {
            mk.insert(i.to_string(), json!(ids[leg]));
        }
        m.insert("marking".into(), Value::Object(mk));
    }
    if !g.leg_weights().is_empty() {
        let mut w = Map::new();
        for (&leg, &wt) in g.leg_weights() {
            w.insert(ids[leg].to_string(), json!(wt));
        }
        m.insert("legWeights".into(), Value::Object(w));
    }
    if let Some(lens) = lengths {
        let mut l = Map::new();
        for (&e, r) in lens {
            l.insert(ids[e].to_string(), rat_value(r));
        }
        m.insert("lengths".into(), Value::Object(l));
    }
    Value::Object(m)
}

pub fn graph_to_json(g: &DiscreteGraph) -> Value {
    graph_value(g, None)
}

pub fn metric_to_json(mg: &MetricGraph) -> Value {
    graph_value(mg.graph(), Some(mg.lengths()))
}

/// Decode a graph.  The external ids of the result are the ids of the
/// input, so encoding again reproduces the document.
pub fn graph_from_json(v: &Value) -> Result<DiscreteGraph> {
    let obj = as_object(v, "graph")?;
    let flags = obj
        .get("flags")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("graph needs a \"flags\" array"))?;
    let mut ids = Vec::with_capacity(flags.len());
    for f in flags {
        ids.push(as_u64(f, "flag id")?);
    }
    let index: BTreeMap<u64, Flag> = ids.iter().enumerate().map(|(f, &id)| (id, f)).collect();
    if index.len() != ids.len() {
        return Err(bad("flag ids must be distinct"));
    }
    let dense_map = |key: &str| -> Result<Vec<Flag>> {
        let m = obj
            .get(key)
            .and_then(Value::as_object)
            .ok_or_else(|| bad(&format!("graph needs a {key:?} object")))?;
        let mut out = vec![usize::MAX; ids.len()];
        for (k, val) in m {
            let from = key_u64(k, key)?;
            let to = as_u64(val, key)?;
            let (&f, &t) = match (index.get(&from), index.get(&to)) {
                (Some(f), Some(t)) => (f, t),
                _ => return Err(bad(&format!("{key} mentions an unknown flag"))),
            };
            out[f] = t;
        }
        if out.contains(&usize::MAX) {
            return Err(bad(&format!("{key} must cover every flag")));
        }
        Ok(out)
    };
    let root = dense_map("root")?;
    let inv = dense_map("involution")?;
    let mut marking = BTreeMap::new();
    if let Some(mk) = obj.get("marking") {
        for (k, val) in as_object(mk, "marking")? {
            let i = key_u64(k, "marking")? as u32;
            let leg = as_u64(val, "marking")?;
            let &f = index.get(&leg).ok_or_else(|| bad("marking mentions an unknown flag"))?;
            marking.insert(i, f);
        }
    }
    let mut weights = BTreeMap::new();
    if let Some(w) = obj.get("legWeights") {
        for (k, val) in as_object(w, "legWeights")? {
            let id = key_u64(k, "legWeights")?;
            let &f = index.get(&id).ok_or_else(|| bad("legWeights mentions an unknown flag"))?;
            weights.insert(f, as_u64(val, "leg weight")?);
        }
    }
    let mut g = DiscreteGraph::new(root, inv, marking, weights)?;
    g.set_ext_ids(ids)?;
    Ok(g)
}

/// Decode a metric graph from a graph document carrying `lengths`.
pub fn metric_from_json(v: &Value) -> Result<MetricGraph> {
    let g = graph_from_json(v)?;
    let obj = as_object(v, "graph")?;
    let lens = obj
        .get("lengths")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("metric graph needs a \"lengths\" object"))?;
    let index = index_of(&g);
    let mut lengths = BTreeMap::new();
    for (k, val) in lens {
        let id = key_u64(k, "lengths")?;
        let &f = index.get(&id).ok_or_else(|| bad("lengths mentions an unknown flag"))?;
        lengths.insert(g.edge_of(f).0, rat_from(val, "length")?);
    }
    MetricGraph::new(g, lengths)
}

pub fn point_to_json(g: &DiscreteGraph, p: &Point) -> Value {
    let ids = g.ext_ids();
    match p {
        Point::Vertex(v) => json!(ids[*v]),
        Point::Interior { edge, offset } => json!({
            "edge": ids[*edge],
            "offset": fmt_rat(offset),
        }),
    }
}

pub fn point_from_json(g: &DiscreteGraph, v: &Value) -> Result<Point> {
    let index = index_of(g);
    match v {
        Value::Number(_) => {
            let id = as_u64(v, "point")?;
            let &f = index.get(&id).ok_or_else(|| bad("point mentions an unknown flag"))?;
            Ok(Point::Vertex(f))
        }
        Value::Object(obj) => {
            let edge = as_u64(obj.get("edge").ok_or_else(|| bad("point needs \"edge\""))?, "edge")?;
            let &f = index.get(&edge).ok_or_else(|| bad("point mentions an unknown flag"))?;
            let offset = rat_from(
                obj.get("offset").ok_or_else(|| bad("point needs \"offset\""))?,
                "offset",
            )?;
            Ok(Point::Interior { edge: f, offset })
        }
        _ => Err(bad("point must be a vertex id or {edge, offset}")),
    }
}

pub fn divisor_to_json(g: &DiscreteGraph, d: &Divisor) -> Value {
    Value::Array(
        d.entries()
            .map(|(p, c)| json!({"at": point_to_json(g, p), "coeff": c}))
            .collect(),
    )
}

pub fn divisor_from_json(g: &DiscreteGraph, v: &Value) -> Result<Divisor> {
    let arr = v.as_array().ok_or_else(|| bad("divisor must be an array"))?;
    let mut d = Divisor::new();
    for entry in arr {
        let obj = as_object(entry, "divisor entry")?;
        let at = point_from_json(g, obj.get("at").ok_or_else(|| bad("divisor entry needs \"at\""))?)?;
        let coeff = obj
            .get("coeff")
            .and_then(Value::as_i64)
            .ok_or_else(|| bad("divisor entry needs an integer \"coeff\""))?;
        d.add(at, coeff);
    }
    Ok(d)
}

pub fn cover_to_json(pi: &Cover) -> Value {
    let src = pi.source();
    let ids = src.ext_ids();
    let tids = pi.target().ext_ids();
    let mut fm = Map::new();
    let mut dm = Map::new();
    for f in 0..src.n_flags() {
        fm.insert(ids[f].to_string(), json!(tids[pi.map_of(f)]));
        dm.insert(ids[f].to_string(), json!(pi.degree_of(f)));
    }
    json!({
        "source": graph_to_json(src),
        "target": graph_to_json(pi.target()),
        "flagMap": Value::Object(fm),
        "degree": Value::Object(dm),
    })
}

pub fn cover_from_json(v: &Value) -> Result<Cover> {
    let obj = as_object(v, "cover")?;
    let source = graph_from_json(obj.get("source").ok_or_else(|| bad("cover needs \"source\""))?)?;
    let target = graph_from_json(obj.get("target").ok_or_else(|| bad("cover needs \"target\""))?)?;
    let sindex = index_of(&source);
    let tindex = index_of(&target);
    let mut map = vec![usize::MAX; source.n_flags()];
    for (k, val) in as_object(
        obj.get("flagMap").ok_or_else(|| bad("cover needs \"flagMap\""))?,
        "flagMap",
    )? {
        let from = key_u64(k, "flagMap")?;
        let to = as_u64(val, "flagMap")?;
        let (&f, &t) = match (sindex.get(&from), tindex.get(&to)) {
            (Some(f), Some(t)) => (f, t),
            _ => return Err(bad("flagMap mentions an unknown flag")),
        };
        map[f] = t;
    }
    if map.contains(&usize::MAX) {
        return Err(bad("flagMap must cover every source flag"));
    }
    let mut degree = vec![0u64; source.n_flags()];
    for (k, val) in as_object(
        obj.get("degree").ok_or_else(|| bad("cover needs \"degree\""))?,
        "degree",
    )? {
        let from = key_u64(k, "degree")?;
        let &f = sindex.get(&from).ok_or_else(|| bad("degree mentions an unknown flag"))?;
        degree[f] = as_u64(val, "degree")?;
    }
    Cover::new(source, target, map, degree)
}

pub fn enumeration_to_json(entries: &[EnumeratedCover]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                json!({
                    "cover": cover_to_json(&e.cover),
                    "orbit": e.orbit,
                    "contributing": e.contributing,
                })
            })
            .collect(),
    )
}

fn witness_to_json(gamma: &MetricGraph, w: &GwpWitness) -> Value {
    json!({
        "entry": w.entry,
        "orbit": w.orbit,
        "sourceIso": w.source_iso,
        "delta": w.delta.iter().map(rat_value).collect::<Vec<_>>(),
        "point": point_to_json(gamma.graph(), &w.point),
    })
}

fn class_to_json(gamma: &MetricGraph, c: &MarkedClass) -> Value {
    json!({
        "point": point_to_json(gamma.graph(), &c.point),
        "multiplicity": c.multiplicity,
        "witnesses": c.witnesses.iter().map(|w| witness_to_json(gamma, w)).collect::<Vec<_>>(),
    })
}

/// Encode a Weierstrass report field by field.  The point table is an
/// array (points are not strings), ordered like the table itself.
pub fn report_to_json(gamma: &MetricGraph, r: &GwpReport) -> Value {
    json!({
        "graph": metric_to_json(gamma),
        "classes": r.classes.iter().map(|c| class_to_json(gamma, c)).collect::<Vec<_>>(),
        "pointTable": r
            .point_table
            .iter()
            .map(|(p, m)| json!({"point": point_to_json(gamma.graph(), p), "multiplicity": m}))
            .collect::<Vec<_>>(),
        "total": r.total,
        "certified": r.certified,
        "notes": r.notes,
    })
}

/// Render a value the way every command does: compact or pretty, with a
/// trailing newline.
pub fn render(v: &Value, pretty: bool) -> String {
    let mut s = if pretty {
        serde_json::to_string_pretty(v).expect("values assembled here always serialize")
    } else {
        serde_json::to_string(v).expect("values assembled here always serialize")
    };
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisors::unit_metric;
    use crate::enumeration::{enumerate_all, EnumerationMode};
    use crate::graphs::families;
    use crate::rational::rat_uint;

    #[test]
    fn graph_round_trip_is_identical() {
        let mut samples = vec![
            families::dumbbell(),
            families::theta(),
            families::loop_garland(3).unwrap(),
        ];
        samples.extend(crate::graphs::trees::labelled_trivalent_trees(6).unwrap());
        for g in samples {
            let doc = graph_to_json(&g);
            let back = graph_from_json(&doc).unwrap();
            assert_eq!(graph_to_json(&back), doc);
            assert_eq!(render(&doc, false), render(&graph_to_json(&back), false));
        }
    }

    #[test]
    fn metric_round_trip_keeps_lengths() {
        let mg = unit_metric(families::dumbbell()).unwrap();
        let doc = metric_to_json(&mg);
        let back = metric_from_json(&doc).unwrap();
        assert_eq!(back.lengths(), mg.lengths());
        assert_eq!(render(&metric_to_json(&back), true), render(&doc, true));
    }

    #[test]
    fn divisor_round_trip() {
        let g = families::dumbbell();
        let mut d = Divisor::new();
        d.add(Point::Vertex(g.vertices()[0]), 2);
        d.add(
            Point::Interior {
                edge: g.edges()[0].0,
                offset: Rat::new(1.into(), 3.into()),
            },
            -1,
        );
        let doc = divisor_to_json(&g, &d);
        let back = divisor_from_json(&g, &doc).unwrap();
        assert_eq!(back, d);
        assert_eq!(divisor_to_json(&g, &back), doc);
    }

    #[test]
    fn cover_round_trip_preserves_validation() {
        let entries = enumerate_all(2, EnumerationMode::Quotient).unwrap();
        for e in &entries {
            let doc = cover_to_json(&e.cover);
            let back = cover_from_json(&doc).unwrap();
            assert_eq!(cover_to_json(&back), doc);
            assert_eq!(back.deg(), e.cover.deg());
        }
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(graph_from_json(&json!({"flags": [0, 0]})).is_err());
        assert!(graph_from_json(&json!({"flags": [0], "root": {"0": 7}})).is_err());
        assert!(metric_from_json(&graph_to_json(&families::dumbbell())).is_err());
        assert!(point_from_json(&families::dumbbell(), &json!("x")).is_err());
        assert!(cover_from_json(&json!({})).is_err());
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let lens = [3u64, 5, 7].map(rat_uint).to_vec();
        let gamma =
            crate::divisors::metric_from_lengths(families::dumbbell(), &lens).unwrap();
        let r = crate::weierstrass::count_gwp_with(&gamma, None).unwrap();
        let a = render(&report_to_json(&gamma, &r), false);
        let r2 = crate::weierstrass::count_gwp_with(&gamma, None).unwrap();
        let b = render(&report_to_json(&gamma, &r2), false);
        assert_eq!(a, b);
        assert!(a.contains("\"total\":6"));
    }
}
