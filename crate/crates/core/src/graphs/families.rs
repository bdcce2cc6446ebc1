//! Standard graph families used throughout the crate and its tests.

use super::{DiscreteGraph, GraphBuilder};
use crate::error::{Error, Result};

/// Genus-2 graph with two loops joined by a bridge.
pub fn dumbbell() -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let v1 = b.vertex();
    let v2 = b.vertex();
    b.edge(v1, v1);
    b.edge(v2, v2);
    b.edge(v1, v2);
    b.build().expect("dumbbell is valid")
}

/// Genus-2 graph with two vertices joined by three parallel edges.
pub fn theta() -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let v1 = b.vertex();
    let v2 = b.vertex();
    b.edge(v1, v2);
    b.edge(v1, v2);
    b.edge(v1, v2);
    b.build().expect("theta is valid")
}

/// Genus-1 cycle on two vertices (all our metric circles use this model).
pub fn circle() -> DiscreteGraph {
    let mut b = GraphBuilder::new();
    let v1 = b.vertex();
    let v2 = b.vertex();
    b.edge(v1, v2);
    b.edge(v1, v2);
    b.build().expect("circle is valid")
}

/// The trivalent genus-`g` "loop garland": `g` loop vertices hanging off a
/// path of `g-2` junction vertices.  For `g = 2` this degenerates to the
/// [`dumbbell`].
///
/// For `g >= 3` the vertices are `V_1..V_g` (each carrying a loop) and
/// `W_0..W_{g-3}`; the junction path is `W_0 - W_1 - ... - W_{g-3}`, with
/// `V_1` and `V_2` attached to `W_0`, `V_g` and `V_{g-1}` attached to
/// `W_{g-3}`, and `V_{j+2}` attached to `W_j` in between.
pub fn loop_garland(g: u64) -> Result<DiscreteGraph> {
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    if g == 2 {
        return Ok(dumbbell());
    }
    let g = g as usize;
    let mut b = GraphBuilder::new();
    let v: Vec<_> = (0..g).map(|_| b.vertex()).collect(); // V_1..V_g
    let w: Vec<_> = (0..g - 2).map(|_| b.vertex()).collect(); // W_0..W_{g-3}
    for &vi in &v {
        b.edge(vi, vi); // loop l_i
    }
    for j in 0..g.saturating_sub(3) {
        b.edge(w[j], w[j + 1]); // junction edge e_j
    }
    // Attaching edges h_1..h_g.
    b.edge(w[0], v[0]); // h_1
    for i in 2..g {
        b.edge(v[i - 1], w[i - 2]); // h_i at W_{i-2}
    }
    b.edge(v[g - 1], w[g - 3]); // h_g
    let graph = b.build().expect("loop garland is valid");
    debug_assert!(graph.is_trivalent());
    debug_assert_eq!(graph.genus(), g as u64);
    Ok(graph)
}

/// The trivalent marked tree with `3g` legs obtained from [`loop_garland`]
/// by cutting every loop open: each loop vertex `V_i` becomes an edge
/// `B_i - B'_i`, with legs `3i-2, 3i-1` at `B'_i` and leg `3i` at `B_i`.
/// For `g = 2` this degenerates to a four-vertex caterpillar.
pub fn garland_tree(g: u64) -> Result<DiscreteGraph> {
    if g < 2 {
        return Err(Error::GenusTooSmall(g));
    }
    let gi = g as usize;
    let mut b = GraphBuilder::new();
    let bs: Vec<_> = (0..gi).map(|_| b.vertex()).collect(); // B_1..B_g
    let bp: Vec<_> = (0..gi).map(|_| b.vertex()).collect(); // B'_1..B'_g
    for i in 0..gi {
        b.edge(bs[i], bp[i]); // b_i
    }
    if g == 2 {
        b.edge(bs[0], bs[1]);
    } else {
        let m: Vec<_> = (0..gi - 2).map(|_| b.vertex()).collect(); // M_0..M_{g-3}
        for j in 0..gi.saturating_sub(3) {
            b.edge(m[j], m[j + 1]); // m_j
        }
        b.edge(m[0], bs[0]); // q_1
        for i in 2..gi {
            b.edge(bs[i - 1], m[i - 2]); // q_i
        }
        b.edge(bs[gi - 1], m[gi - 3]); // q_g
    }
    for i in 0..gi {
        let i3 = 3 * (i as u32 + 1);
        b.marked_leg(bp[i], i3 - 2, None);
        b.marked_leg(bp[i], i3 - 1, None);
        b.marked_leg(bs[i], i3, None);
    }
    let graph = b.build().expect("garland tree is valid");
    debug_assert!(graph.is_trivalent());
    debug_assert_eq!(graph.genus(), 0);
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_garland_shapes() {
        for g in 2..=6u64 {
            let og = loop_garland(g).unwrap();
            assert!(og.is_trivalent(), "g={g}");
            assert_eq!(og.genus(), g);
            assert_eq!(og.edges().len() as u64, 3 * g - 3);
            assert_eq!(og.vertices().len() as u64, 2 * g - 2);
            let loops = og.edges().iter().filter(|&&e| og.is_loop(e)).count() as u64;
            assert_eq!(loops, g);
        }
        assert!(matches!(loop_garland(1), Err(Error::GenusTooSmall(1))));
    }

    #[test]
    fn garland_tree_shapes() {
        for g in 2..=6u64 {
            let t = garland_tree(g).unwrap();
            assert!(t.is_trivalent(), "g={g}");
            assert_eq!(t.genus(), 0);
            assert_eq!(t.legs().len() as u64, 3 * g);
            assert_eq!(t.marking().len() as u64, 3 * g);
            assert_eq!(t.edges().len() as u64, 2 * g - 3 + g);
        }
    }

    #[test]
    fn garland_tree_leg_placement() {
        // Legs 3i-2, 3i-1 share a vertex; leg 3i sits across one edge from them.
        let t = garland_tree(3).unwrap();
        for i in 1..=3u32 {
            let a = t.marking()[&(3 * i - 2)];
            let b = t.marking()[&(3 * i - 1)];
            let c = t.marking()[&(3 * i)];
            assert_eq!(t.root(a), t.root(b));
            assert_ne!(t.root(a), t.root(c));
            let outer = t.root(a);
            assert_eq!(t.val(outer), 3);
            assert_eq!(t.legval(outer), 2);
        }
    }
}
