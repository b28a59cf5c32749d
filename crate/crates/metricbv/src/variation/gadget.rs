//! Combinatorial model for variation maximization.
//!
//! A function on a metric graph is summarized by a *gadget*: critical points
//! (vertices, overrides, jump breakpoints, slope sign changes) become point
//! nodes carrying the pointwise value, and each maximal monotone continuous
//! stretch between consecutive critical points becomes a segment with two
//! half nodes, one per end, carrying the one-sided limit there.  Per segment
//! there are three unit-capacity resources, drawn as gadget edges:
//!
//! ```text
//!   P(lo) --anchor_lo-- H(lo) --body-- H(hi) --anchor_hi-- P(hi)
//! ```
//!
//! An anchor stands for the germ of curves that actually reach the critical
//! point from inside the segment; the body stands for the segment interior.
//! Curve families in the space map to families of simple paths here, with
//! each gadget edge used at most once overall.  Edge exclusivity (rather
//! than half-node exclusivity) is what lets a short "dip" ending at a point
//! coexist with a second curve crossing the rest of the same segment: the
//! two use the anchor and the body respectively, which is exactly the
//! freedom disjoint curves have.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{MetricGraph, PointRef};
use crate::num::Num;
use crate::pl::{limit_in_pieces, sort_dedup, Approach, PiecewiseLinear};

/// Segment end: `Lo` is the `t0` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Lo,
    Hi,
}

/// Gadget node: a critical point or a segment-end germ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GNode {
    P(usize),
    H(usize, Side),
}

/// Unit-capacity resource: a germ anchor or a segment body.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GEdge {
    Anchor(usize, Side),
    Body(usize),
}

#[derive(Clone, Debug)]
pub struct GPoint {
    pub at: PointRef,
    pub value: Num,
    /// Segments whose `side` end touches this point, in build order.
    pub incident: Vec<(usize, Side)>,
}

#[derive(Clone, Debug)]
pub struct GSegment {
    pub edge: crate::graph::EdgeId,
    pub t0: Num,
    pub t1: Num,
    pub p_lo: usize,
    pub p_hi: usize,
    /// One-sided limit of the function entering the segment at `t0`.
    pub lim_lo: Num,
    /// One-sided limit at `t1`.
    pub lim_hi: Num,
}

#[derive(Clone, Debug, Default)]
pub struct Gadget {
    pub points: Vec<GPoint>,
    pub segments: Vec<GSegment>,
}

impl Gadget {
    pub fn node_value(&self, n: GNode) -> &Num {
        match n {
            GNode::P(i) => &self.points[i].value,
            GNode::H(s, Side::Lo) => &self.segments[s].lim_lo,
            GNode::H(s, Side::Hi) => &self.segments[s].lim_hi,
        }
    }

    /// Weight of a resource: what a curve's own variation picks up when it
    /// uses it.  Bodies carry the segment oscillation (segments are
    /// monotone), anchors the gap between the point value and the germ
    /// limit.
    pub fn edge_weight(&self, e: GEdge) -> Num {
        match e {
            GEdge::Body(s) => self.segments[s].lim_hi.abs_diff(&self.segments[s].lim_lo),
            GEdge::Anchor(s, side) => {
                let seg = &self.segments[s];
                let (p, lim) = match side {
                    Side::Lo => (seg.p_lo, &seg.lim_lo),
                    Side::Hi => (seg.p_hi, &seg.lim_hi),
                };
                self.points[p].value.abs_diff(lim)
            }
        }
    }

    pub fn edge_ends(&self, e: GEdge) -> (GNode, GNode) {
        match e {
            GEdge::Body(s) => (GNode::H(s, Side::Lo), GNode::H(s, Side::Hi)),
            GEdge::Anchor(s, Side::Lo) => (GNode::P(self.segments[s].p_lo), GNode::H(s, Side::Lo)),
            GEdge::Anchor(s, Side::Hi) => (GNode::P(self.segments[s].p_hi), GNode::H(s, Side::Hi)),
        }
    }

    pub fn all_edges(&self) -> impl Iterator<Item = GEdge> + '_ {
        (0..self.segments.len()).flat_map(|s| {
            [
                GEdge::Anchor(s, Side::Lo),
                GEdge::Body(s),
                GEdge::Anchor(s, Side::Hi),
            ]
        })
    }

    /// Neighbors of a node through its incident resources.
    pub fn neighbors(&self, n: GNode) -> Vec<(GEdge, GNode)> {
        match n {
            GNode::P(i) => self.points[i]
                .incident
                .iter()
                .map(|&(s, side)| (GEdge::Anchor(s, side), GNode::H(s, side)))
                .collect(),
            GNode::H(s, Side::Lo) => vec![
                (GEdge::Anchor(s, Side::Lo), GNode::P(self.segments[s].p_lo)),
                (GEdge::Body(s), GNode::H(s, Side::Hi)),
            ],
            GNode::H(s, Side::Hi) => vec![
                (GEdge::Anchor(s, Side::Hi), GNode::P(self.segments[s].p_hi)),
                (GEdge::Body(s), GNode::H(s, Side::Lo)),
            ],
        }
    }

    /// The resource joining two adjacent nodes, if any.
    pub fn edge_between(&self, a: GNode, b: GNode) -> Option<GEdge> {
        self.neighbors(a)
            .into_iter()
            .find(|(_, n)| *n == b)
            .map(|(e, _)| e)
    }

    pub fn node_count(&self) -> usize {
        self.points.len() + 2 * self.segments.len()
    }

    /// Dense index for bitsets and DP tables.
    pub fn node_index(&self, n: GNode) -> usize {
        match n {
            GNode::P(i) => i,
            GNode::H(s, side) => self.points.len() + 2 * s + (side == Side::Hi) as usize,
        }
    }

    pub fn edge_index(&self, e: GEdge) -> usize {
        match e {
            GEdge::Anchor(s, Side::Lo) => 3 * s,
            GEdge::Body(s) => 3 * s + 1,
            GEdge::Anchor(s, Side::Hi) => 3 * s + 2,
        }
    }

    pub fn edge_count(&self) -> usize {
        3 * self.segments.len()
    }
}

/// Builds the gadget for a function.  Every vertex becomes a point node;
/// interior critical parameters are overrides, jump breakpoints, and slope
/// sign changes of the continuous spline.
pub fn build_gadget(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Gadget> {
    let mut points: Vec<GPoint> = Vec::new();
    let mut vertex_point: BTreeMap<crate::graph::VertexId, usize> = BTreeMap::new();
    for v in &g.vertices {
        vertex_point.insert(v.id, points.len());
        points.push(GPoint {
            at: PointRef::Vertex { vertex: v.id },
            value: f.vertex_value(g, v.id)?,
            incident: Vec::new(),
        });
    }
    let mut segments = Vec::new();
    for e in &g.edges {
        let ef = f.edge_fn(e.id)?;
        let cuts = critical_params(g, f, e.id)?;
        // interior cut points
        let mut cut_points = Vec::with_capacity(cuts.len());
        for t in &cuts {
            if t.is_zero() {
                cut_points.push(vertex_point[&e.u]);
            } else if *t == e.length {
                cut_points.push(vertex_point[&e.v]);
            } else {
                let at = PointRef::OnEdge {
                    edge: e.id,
                    t: t.clone(),
                };
                let value = f.value_at(g, &at)?;
                cut_points.push(points.len());
                points.push(GPoint {
                    at,
                    value,
                    incident: Vec::new(),
                });
            }
        }
        for (i, w) in cuts.windows(2).enumerate() {
            let s = segments.len();
            let p_lo = cut_points[i];
            let p_hi = cut_points[i + 1];
            segments.push(GSegment {
                edge: e.id,
                t0: w[0].clone(),
                t1: w[1].clone(),
                p_lo,
                p_hi,
                lim_lo: limit_in_pieces(&ef.pieces, &w[0], Approach::FromAbove),
                lim_hi: limit_in_pieces(&ef.pieces, &w[1], Approach::FromBelow),
            });
            points[p_lo].incident.push((s, Side::Lo));
            points[p_hi].incident.push((s, Side::Hi));
        }
    }
    Ok(Gadget { points, segments })
}

/// Sorted cut parameters of one edge, always including both ends.  Interior
/// cuts are overrides, discontinuities, and local extrema; between
/// consecutive cuts the function is continuous and monotone.
fn critical_params(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    edge: crate::graph::EdgeId,
) -> Result<Vec<Num>> {
    let e = g.edge(edge).expect("edge exists");
    let ef = f.edge_fn(edge)?;
    let mut forced: Vec<Num> = vec![Num::zero(), e.length.clone()];
    for o in &f.overrides {
        if o.edge == edge {
            forced.push(o.t.clone());
        }
    }
    // jump breakpoints
    for w in ef.pieces.windows(2) {
        if w[0].v1 != w[1].v0 {
            forced.push(w[0].t1.clone());
        }
    }
    let forced = sort_dedup(forced);
    // refine pieces at forced cuts, then scan for slope sign changes
    let mut all_cuts = forced.clone();
    let mut boundary: Vec<(Num, i8, i8)> = Vec::new(); // (t, sign before, sign after)
    let mut cells: Vec<(Num, Num)> = Vec::new();
    {
        let mut grid = crate::pl::piece_cuts(&ef.pieces);
        grid.extend(forced.iter().cloned());
        let grid = sort_dedup(grid);
        for w in grid.windows(2) {
            cells.push((w[0].clone(), w[1].clone()));
        }
    }
    let sign_of = |a: &Num, b: &Num| -> i8 {
        let d = b - a;
        if d.is_positive() {
            1
        } else if d.is_negative() {
            -1
        } else {
            0
        }
    };
    for w in cells.windows(2) {
        let t = &w[0].1;
        if forced.contains(t) {
            continue;
        }
        let l0 = limit_in_pieces(&ef.pieces, &w[0].0, Approach::FromAbove);
        let l1 = limit_in_pieces(&ef.pieces, t, Approach::FromBelow);
        let r0 = limit_in_pieces(&ef.pieces, t, Approach::FromAbove);
        let r1 = limit_in_pieces(&ef.pieces, &w[1].1, Approach::FromBelow);
        boundary.push((t.clone(), sign_of(&l0, &l1), sign_of(&r0, &r1)));
    }
    // walk maintaining the current monotone direction; flats merge into
    // whichever run they sit in
    let mut dir: i8 = 0;
    for (t, before, after) in boundary {
        if before != 0 {
            dir = before;
        }
        if after != 0 {
            if dir != 0 && after != dir {
                all_cuts.push(t);
            }
            dir = after;
        }
    }
    Ok(sort_dedup(all_cuts))
}
