//! Metric graphs: finite connected graphs whose edges carry positive lengths
//! and are parametrized by arc length.
//!
//! Each edge `e = (u, v)` of length `L` is a copy of `[0, L]` glued to the
//! vertex set, with `t = 0` at `u` and `t = L` at `v`.  Two metrics are
//! supported: the intrinsic path metric (`geodesic`) and the restriction of
//! the plane metric to a straight-line embedding (`ambient_euclidean`).  In
//! ambient mode every vertex carries coordinates and each edge must be the
//! straight segment between its endpoints (up to a 1e-9 relative length
//! tolerance), and distinct edges may only meet at shared vertices.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{Num, TOL_REL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "geodesic")]
    Geodesic,
    #[serde(rename = "ambient_euclidean")]
    AmbientEuclidean,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Num>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    pub length: Num,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricGraph {
    pub metric: Metric,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

/// A point of the space: either a vertex or an interior point of an edge at
/// arc-length parameter `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRef {
    Vertex { vertex: VertexId },
    OnEdge { edge: EdgeId, t: Num },
}

impl PointRef {
    pub fn vertex(id: u32) -> Self {
        PointRef::Vertex {
            vertex: VertexId(id),
        }
    }

    pub fn on_edge(edge: u32, t: Num) -> Self {
        PointRef::OnEdge {
            edge: EdgeId(edge),
            t,
        }
    }

    /// Validates against `g` and maps edge endpoints (`t = 0` or `t = L`) to
    /// the corresponding vertex, so vertex points have a single form.
    pub fn canonical(self, g: &MetricGraph) -> Result<PointRef> {
        match self {
            PointRef::Vertex { vertex } => {
                g.vertex(vertex)
                    .ok_or_else(|| Error::invalid_argument(format!("no vertex {vertex}")))?;
                Ok(PointRef::Vertex { vertex })
            }
            PointRef::OnEdge { edge, t } => {
                let e = g
                    .edge(edge)
                    .ok_or_else(|| Error::invalid_argument(format!("no edge {edge}")))?;
                if t.is_negative() || t > e.length {
                    return Err(Error::invalid_argument(format!(
                        "parameter {t} outside [0, {}] on edge {edge}",
                        e.length
                    )));
                }
                if t.is_zero() {
                    Ok(PointRef::Vertex { vertex: e.u })
                } else if t == e.length {
                    Ok(PointRef::Vertex { vertex: e.v })
                } else {
                    Ok(PointRef::OnEdge { edge, t })
                }
            }
        }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointRef::Vertex { vertex } => write!(f, "vertex:{vertex}"),
            PointRef::OnEdge { edge, t } => write!(f, "edge:{edge}:{t}"),
        }
    }
}

impl FromStr for PointRef {
    type Err = String;

    /// `vertex:3` or `edge:2:1/4`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["vertex", id] => {
                let id: u32 = id.parse().map_err(|_| format!("bad vertex id '{id}'"))?;
                Ok(PointRef::vertex(id))
            }
            ["edge", id, t] => {
                let id: u32 = id.parse().map_err(|_| format!("bad edge id '{id}'"))?;
                let t: Num = t.parse()?;
                Ok(PointRef::on_edge(id, t))
            }
            _ => Err(format!(
                "cannot parse point '{s}' (expected vertex:ID or edge:ID:T)"
            )),
        }
    }
}

/// Which end of an edge an incidence uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeEnd {
    Start,
    End,
}

#[derive(Clone, Copy, Debug)]
pub struct Incidence {
    pub edge_ix: usize,
    pub end: EdgeEnd,
}

/// Positional lookups for a graph.  Built on demand; graphs here are small
/// enough that rebuilding per operation is cheap.
pub struct GraphIndex {
    pub vpos: HashMap<VertexId, usize>,
    pub epos: HashMap<EdgeId, usize>,
    /// Incidences per vertex position, sorted by (edge id, end).
    pub incident: Vec<Vec<Incidence>>,
}

impl MetricGraph {
    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn index(&self) -> GraphIndex {
        let vpos: HashMap<VertexId, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id, i))
            .collect();
        let epos: HashMap<EdgeId, usize> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id, i))
            .collect();
        let mut incident = vec![Vec::new(); self.vertices.len()];
        for (ei, e) in self.edges.iter().enumerate() {
            if let Some(&ui) = vpos.get(&e.u) {
                incident[ui].push(Incidence {
                    edge_ix: ei,
                    end: EdgeEnd::Start,
                });
            }
            if let Some(&vi) = vpos.get(&e.v) {
                incident[vi].push(Incidence {
                    edge_ix: ei,
                    end: EdgeEnd::End,
                });
            }
        }
        for list in &mut incident {
            list.sort_by_key(|inc| (self.edges[inc.edge_ix].id, inc.end));
        }
        GraphIndex {
            vpos,
            epos,
            incident,
        }
    }

    /// Degree of a vertex, counting a self-loop twice.
    pub fn degree(&self, id: VertexId) -> usize {
        self.edges
            .iter()
            .map(|e| (e.u == id) as usize + (e.v == id) as usize)
            .sum()
    }

    /// Planar coordinates of a point (ambient mode).  Interior points
    /// interpolate linearly along the straight edge.
    pub fn embed(&self, p: &PointRef) -> Result<[Num; 2]> {
        let coords = |id: VertexId| -> Result<[Num; 2]> {
            let v = self
                .vertex(id)
                .ok_or_else(|| Error::invalid_argument(format!("no vertex {id}")))?;
            match (&v.x, &v.y) {
                (Some(x), Some(y)) => Ok([x.clone(), y.clone()]),
                _ => Err(Error::invalid_space(format!(
                    "vertex {id} has no coordinates"
                ))),
            }
        };
        match p {
            PointRef::Vertex { vertex } => coords(*vertex),
            PointRef::OnEdge { edge, t } => {
                let e = self
                    .edge(*edge)
                    .ok_or_else(|| Error::invalid_argument(format!("no edge {edge}")))?;
                let a = coords(e.u)?;
                let b = coords(e.v)?;
                let s = t / &e.length;
                Ok([
                    &a[0] + &(&s * &(&b[0] - &a[0])),
                    &a[1] + &(&s * &(&b[1] - &a[1])),
                ])
            }
        }
    }

    /// Distance in the graph's own metric.
    pub fn distance(&self, a: &PointRef, b: &PointRef) -> Result<Num> {
        let a = a.clone().canonical(self)?;
        let b = b.clone().canonical(self)?;
        match self.metric {
            Metric::AmbientEuclidean => {
                let pa = self.embed(&a)?;
                let pb = self.embed(&b)?;
                let dx = &pa[0] - &pb[0];
                let dy = &pa[1] - &pb[1];
                Ok((&dx * &dx + &dy * &dy).sqrt())
            }
            Metric::Geodesic => self.inner_distance(&a, &b),
        }
    }

    /// Intrinsic path distance, regardless of the graph's metric mode.
    pub fn inner_distance(&self, a: &PointRef, b: &PointRef) -> Result<Num> {
        let a = a.clone().canonical(self)?;
        let b = b.clone().canonical(self)?;
        let ix = self.index();
        let field = self.inner_distances_impl(&a, &ix)?;
        let mut best: Option<Num> = None;
        let mut push = |d: Num| {
            if best.as_ref().is_none_or(|b| &d < b) {
                best = Some(d);
            }
        };
        match &b {
            PointRef::Vertex { vertex } => {
                let bi = ix.vpos[vertex];
                push(field[bi].clone());
            }
            PointRef::OnEdge { edge, t } => {
                let e = self.edge(*edge).expect("canonical point");
                push(&field[ix.vpos[&e.u]] + t);
                push(&field[ix.vpos[&e.v]] + &(&e.length - t));
                if let PointRef::OnEdge { edge: ea, t: ta } = &a {
                    if ea == edge {
                        push(ta.abs_diff(t));
                    }
                }
            }
        }
        Ok(best.expect("connected graph"))
    }

    /// Intrinsic distance from `p` to every vertex, indexed by vertex
    /// position.  Dijkstra with exact weights.
    pub fn inner_distances_from(&self, p: &PointRef) -> Result<Vec<Num>> {
        let p = p.clone().canonical(self)?;
        let ix = self.index();
        self.inner_distances_impl(&p, &ix)
    }

    fn inner_distances_impl(&self, p: &PointRef, ix: &GraphIndex) -> Result<Vec<Num>> {
        let n = self.vertices.len();
        let mut dist: Vec<Option<Num>> = vec![None; n];
        let mut heap: BinaryHeap<Reverse<(Num, usize)>> = BinaryHeap::new();
        match p {
            PointRef::Vertex { vertex } => {
                heap.push(Reverse((Num::zero(), ix.vpos[vertex])));
            }
            PointRef::OnEdge { edge, t } => {
                let e = self.edge(*edge).expect("canonical point");
                heap.push(Reverse((t.clone(), ix.vpos[&e.u])));
                heap.push(Reverse((&e.length - t, ix.vpos[&e.v])));
            }
        }
        while let Some(Reverse((d, vi))) = heap.pop() {
            if dist[vi].is_some() {
                continue;
            }
            dist[vi] = Some(d.clone());
            for inc in &ix.incident[vi] {
                let e = &self.edges[inc.edge_ix];
                let other = match inc.end {
                    EdgeEnd::Start => ix.vpos[&e.v],
                    EdgeEnd::End => ix.vpos[&e.u],
                };
                if dist[other].is_none() {
                    heap.push(Reverse((&d + &e.length, other)));
                }
            }
        }
        dist.into_iter()
            .map(|d| d.ok_or_else(|| Error::invalid_space("graph is not connected")))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
}

impl ValidationReport {
    pub fn ok() -> Self {
        ValidationReport {
            ok: true,
            violation: None,
        }
    }
    pub fn fail(msg: impl Into<String>) -> Self {
        ValidationReport {
            ok: false,
            violation: Some(msg.into()),
        }
    }
    pub fn into_result(self, wrap: fn(String) -> Error) -> Result<()> {
        match self.violation {
            None => Ok(()),
            Some(v) => Err(wrap(v)),
        }
    }
}

/// Checks the structural invariants of a graph and reports the first
/// violation found.
pub fn validate_graph(g: &MetricGraph) -> ValidationReport {
    if g.vertices.is_empty() {
        return ValidationReport::fail("no vertices");
    }
    let mut seen_v = HashSet::new();
    for v in &g.vertices {
        if !seen_v.insert(v.id) {
            return ValidationReport::fail(format!("duplicate vertex id {}", v.id));
        }
    }
    let mut seen_e = HashSet::new();
    for e in &g.edges {
        if !seen_e.insert(e.id) {
            return ValidationReport::fail(format!("duplicate edge id {}", e.id));
        }
        if !seen_v.contains(&e.u) || !seen_v.contains(&e.v) {
            return ValidationReport::fail(format!("edge {} references a missing vertex", e.id));
        }
        if !e.length.is_positive() {
            return ValidationReport::fail(format!("edge {} has non-positive length", e.id));
        }
    }
    if !is_connected(g) {
        return ValidationReport::fail("graph is not connected");
    }
    if g.metric == Metric::AmbientEuclidean {
        if let Some(msg) = check_embedding(g) {
            return ValidationReport::fail(msg);
        }
    }
    ValidationReport::ok()
}

fn is_connected(g: &MetricGraph) -> bool {
    let ix = g.index();
    let n = g.vertices.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(vi) = queue.pop_front() {
        for inc in &ix.incident[vi] {
            let e = &g.edges[inc.edge_ix];
            let other = match inc.end {
                EdgeEnd::Start => ix.vpos[&e.v],
                EdgeEnd::End => ix.vpos[&e.u],
            };
            if !seen[other] {
                seen[other] = true;
                count += 1;
                queue.push_back(other);
            }
        }
    }
    count == n
}

/// Ambient-mode checks: coordinates present, declared lengths match the
/// straight chords, and distinct edges only meet at shared vertices.
fn check_embedding(g: &MetricGraph) -> Option<String> {
    let mut coords: HashMap<VertexId, (f64, f64)> = HashMap::new();
    for v in &g.vertices {
        match (&v.x, &v.y) {
            (Some(x), Some(y)) => {
                coords.insert(v.id, (x.to_f64(), y.to_f64()));
            }
            _ => return Some(format!("vertex {} has no coordinates", v.id)),
        }
    }
    for e in &g.edges {
        let (ax, ay) = coords[&e.u];
        let (bx, by) = coords[&e.v];
        let chord = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
        let len = e.length.to_f64();
        if (chord - len).abs() > TOL_REL * len.max(1e-300) {
            return Some(format!(
                "edge {} has length {len} but chord {chord}; edges must be straight",
                e.id
            ));
        }
    }
    for (i, e1) in g.edges.iter().enumerate() {
        for e2 in &g.edges[i + 1..] {
            let s1 = (coords[&e1.u], coords[&e1.v]);
            let s2 = (coords[&e2.u], coords[&e2.v]);
            let shared: Vec<VertexId> = [e1.u, e1.v]
                .into_iter()
                .filter(|x| *x == e2.u || *x == e2.v)
                .collect();
            if segments_overlap(s1, s2, shared.len()) {
                return Some(format!(
                    "edges {} and {} overlap away from shared vertices",
                    e1.id, e2.id
                ));
            }
        }
    }
    None
}

/// True when two straight segments intersect somewhere other than the
/// endpoints they legitimately share.  `shared` counts common endpoint ids.
fn segments_overlap(
    (a, b): ((f64, f64), (f64, f64)),
    (c, d): ((f64, f64), (f64, f64)),
    shared: usize,
) -> bool {
    let scale = [a, b, c, d]
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(1e-12, f64::max);
    let eps = 1e-12 * scale * scale;
    let cross = |o: (f64, f64), p: (f64, f64), q: (f64, f64)| {
        (p.0 - o.0) * (q.1 - o.1) - (p.1 - o.1) * (q.0 - o.0)
    };
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    let collinear = d1.abs() <= eps && d2.abs() <= eps && d3.abs() <= eps && d4.abs() <= eps;
    if collinear {
        // Project on the longer axis and test interval overlap beyond a point.
        let dx = (b.0 - a.0).abs().max((d.0 - c.0).abs());
        let dy = (b.1 - a.1).abs().max((d.1 - c.1).abs());
        let proj = |p: (f64, f64)| if dx >= dy { p.0 } else { p.1 };
        let (l1, r1) = minmax(proj(a), proj(b));
        let (l2, r2) = minmax(proj(c), proj(d));
        let lo = l1.max(l2);
        let hi = r1.min(r2);
        let tol = 1e-9 * scale.max(1.0);
        return hi - lo > tol;
    }
    if shared > 0 {
        // Non-collinear segments sharing an endpoint can only meet there.
        return false;
    }
    let proper = ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
    if proper {
        return true;
    }
    // Endpoint of one segment in the interior of the other.
    let on_segment = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        cross(p, q, r).abs() <= eps
            && r.0 >= p.0.min(q.0) - eps
            && r.0 <= p.0.max(q.0) + eps
            && r.1 >= p.1.min(q.1) - eps
            && r.1 <= p.1.max(q.1) + eps
    };
    let interior = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        on_segment(p, q, r) && dist2(r, p) > eps && dist2(r, q) > eps
    };
    interior(a, b, c) || interior(a, b, d) || interior(c, d, a) || interior(c, d, b)
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn dist2(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)
}
