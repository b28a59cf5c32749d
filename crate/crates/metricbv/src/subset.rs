//! Closed subsets of a metric graph built from edge intervals and vertices.
//!
//! A subset stores, per edge, a list of closed parameter intervals, plus an
//! explicit list of member vertices.  Interval endpoints that touch an edge
//! end implicitly include the corresponding vertex.  All set operations work
//! interval-wise and stay exact for rational endpoints.  Sets here are used
//! measure-theoretically (ball traces, level sets), so normalization drops
//! isolated interior points of edges but keeps vertices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, PointRef, VertexId};
use crate::num::Num;
use crate::pl::{EdgeFn, Override, Piece, PiecewiseLinear};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeIntervals {
    pub edge: EdgeId,
    pub intervals: Vec<[Num; 2]>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EdgeSubset {
    pub edges: Vec<EdgeIntervals>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<VertexId>,
}

impl EdgeSubset {
    pub fn empty() -> Self {
        EdgeSubset::default()
    }

    pub fn full(g: &MetricGraph) -> Self {
        EdgeSubset {
            edges: g
                .edges
                .iter()
                .map(|e| EdgeIntervals {
                    edge: e.id,
                    intervals: vec![[Num::zero(), e.length.clone()]],
                })
                .collect(),
            vertices: g.vertices.iter().map(|v| v.id).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.iter().all(|ei| ei.intervals.is_empty())
    }

    /// Total length of the interval part.
    pub fn measure(&self) -> Num {
        let mut acc = Num::zero();
        for ei in &self.edges {
            for iv in &ei.intervals {
                acc += &(&iv[1] - &iv[0]);
            }
        }
        acc
    }

    /// Canonical form: intervals sorted, overlaps and touching runs merged,
    /// zero-length intervals dropped, entries for the same edge fused.
    /// Validates ranges against the graph.
    pub fn normalized(&self, g: &MetricGraph) -> Result<EdgeSubset> {
        let mut per_edge: std::collections::BTreeMap<EdgeId, Vec<[Num; 2]>> =
            std::collections::BTreeMap::new();
        for ei in &self.edges {
            let e = g
                .edge(ei.edge)
                .ok_or_else(|| Error::invalid_subset(format!("no edge {}", ei.edge)))?;
            let entry = per_edge.entry(ei.edge).or_default();
            for iv in &ei.intervals {
                if iv[0] > iv[1] {
                    return Err(Error::invalid_subset(format!(
                        "reversed interval on edge {}",
                        ei.edge
                    )));
                }
                if iv[0].is_negative() || iv[1] > e.length {
                    return Err(Error::invalid_subset(format!(
                        "interval [{}, {}] outside [0, {}] on edge {}",
                        iv[0], iv[1], e.length, ei.edge
                    )));
                }
                entry.push(iv.clone());
            }
        }
        let mut edges = Vec::new();
        for (edge, mut ivs) in per_edge {
            ivs.sort();
            let mut merged: Vec<[Num; 2]> = Vec::new();
            for iv in ivs {
                match merged.last_mut() {
                    Some(last) if iv[0] <= last[1] => {
                        if iv[1] > last[1] {
                            last[1] = iv[1].clone();
                        }
                    }
                    _ => merged.push(iv),
                }
            }
            merged.retain(|iv| iv[0] < iv[1]);
            if !merged.is_empty() {
                edges.push(EdgeIntervals {
                    edge,
                    intervals: merged,
                });
            }
        }
        let mut vertices = self.vertices.clone();
        for v in &vertices {
            if g.vertex(*v).is_none() {
                return Err(Error::invalid_subset(format!("no vertex {v}")));
            }
        }
        vertices.sort();
        vertices.dedup();
        Ok(EdgeSubset { edges, vertices })
    }

    /// Member vertices: listed ones plus those touched by an interval end.
    pub fn vertex_members(&self, g: &MetricGraph) -> Result<Vec<VertexId>> {
        let mut out = self.vertices.clone();
        for ei in &self.edges {
            let e = g
                .edge(ei.edge)
                .ok_or_else(|| Error::invalid_subset(format!("no edge {}", ei.edge)))?;
            for iv in &ei.intervals {
                if iv[0].is_zero() {
                    out.push(e.u);
                }
                if iv[1] == e.length {
                    out.push(e.v);
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn contains(&self, g: &MetricGraph, p: &PointRef) -> Result<bool> {
        match p.clone().canonical(g)? {
            PointRef::Vertex { vertex } => Ok(self.vertex_members(g)?.contains(&vertex)),
            PointRef::OnEdge { edge, t } => {
                for ei in &self.edges {
                    if ei.edge == edge {
                        for iv in &ei.intervals {
                            if iv[0] <= t && t <= iv[1] {
                                return Ok(true);
                            }
                        }
                    }
                }
                Ok(false)
            }
        }
    }

    pub fn union(&self, g: &MetricGraph, other: &Self) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().cloned());
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices.iter().copied());
        EdgeSubset { edges, vertices }.normalized(g)
    }

    pub fn intersect(&self, g: &MetricGraph, other: &Self) -> Result<Self> {
        let a = self.normalized(g)?;
        let b = other.normalized(g)?;
        let mut edges = Vec::new();
        for ea in &a.edges {
            if let Some(eb) = b.edges.iter().find(|x| x.edge == ea.edge) {
                let mut ivs = Vec::new();
                for i1 in &ea.intervals {
                    for i2 in &eb.intervals {
                        let lo = i1[0].clone().max(i2[0].clone());
                        let hi = i1[1].clone().min(i2[1].clone());
                        if lo < hi {
                            ivs.push([lo, hi]);
                        }
                    }
                }
                if !ivs.is_empty() {
                    edges.push(EdgeIntervals {
                        edge: ea.edge,
                        intervals: ivs,
                    });
                }
            }
        }
        let bv = b.vertex_members(g)?;
        let vertices = a
            .vertex_members(g)?
            .into_iter()
            .filter(|v| bv.contains(v))
            .collect();
        EdgeSubset { edges, vertices }.normalized(g)
    }

    /// Closure of the complement.  Interval-wise exact; a vertex belongs to
    /// the result when it is not a member of `self`.
    pub fn complement(&self, g: &MetricGraph) -> Result<Self> {
        let a = self.normalized(g)?;
        let members = a.vertex_members(g)?;
        let mut edges = Vec::new();
        for e in &g.edges {
            let covered = a
                .edges
                .iter()
                .find(|x| x.edge == e.id)
                .map(|x| x.intervals.as_slice())
                .unwrap_or(&[]);
            let mut ivs = Vec::new();
            let mut cursor = Num::zero();
            for iv in covered {
                if cursor < iv[0] {
                    ivs.push([cursor.clone(), iv[0].clone()]);
                }
                cursor = iv[1].clone();
            }
            if cursor < e.length {
                ivs.push([cursor, e.length.clone()]);
            }
            if !ivs.is_empty() {
                edges.push(EdgeIntervals {
                    edge: e.id,
                    intervals: ivs,
                });
            }
        }
        let vertices = g
            .vertices
            .iter()
            .map(|v| v.id)
            .filter(|v| !members.contains(v))
            .collect();
        EdgeSubset { edges, vertices }.normalized(g)
    }
}

/// The superlevel set `{f > t}` as an edge subset.  Interval endpoints sit
/// at the exact level crossings.  Isolated super-level points (spiking
/// overrides, stray vertex labels) have measure zero and are not
/// representable as intervals; member vertices are still listed.
pub fn superlevel(g: &MetricGraph, f: &PiecewiseLinear, t: &Num) -> Result<EdgeSubset> {
    let mut edges = Vec::new();
    for e in &g.edges {
        let ef = f.edge_fn(e.id)?;
        let mut intervals = Vec::new();
        for p in &ef.pieces {
            let above0 = &p.v0 > t;
            let above1 = &p.v1 > t;
            if above0 && above1 {
                intervals.push([p.t0.clone(), p.t1.clone()]);
            } else if above0 || above1 {
                // crossing parameter of the linear piece with the level
                let s = &p.t0 + &(&(&(t - &p.v0) / &(&p.v1 - &p.v0)) * &(&p.t1 - &p.t0));
                if above0 {
                    intervals.push([p.t0.clone(), s]);
                } else {
                    intervals.push([s, p.t1.clone()]);
                }
            }
        }
        edges.push(EdgeIntervals {
            edge: e.id,
            intervals,
        });
    }
    let mut vertices = Vec::new();
    for v in &g.vertices {
        if &f.vertex_value(g, v.id)? > t {
            vertices.push(v.id);
        }
    }
    EdgeSubset { edges, vertices }.normalized(g)
}

/// Characteristic function of a closed subset: 1 on the set, 0 elsewhere,
/// with overrides inserted where the default breakpoint rule would disagree
/// with closed-set membership.
pub fn indicator(g: &MetricGraph, set: &EdgeSubset) -> Result<PiecewiseLinear> {
    let set = set.normalized(g)?;
    let members = set.vertex_members(g)?;
    let mut edges = Vec::new();
    let mut overrides = Vec::new();
    for e in &g.edges {
        let ivs = set
            .edges
            .iter()
            .find(|x| x.edge == e.id)
            .map(|x| x.intervals.as_slice())
            .unwrap_or(&[]);
        let mut cuts = vec![Num::zero(), e.length.clone()];
        for iv in ivs {
            cuts.push(iv[0].clone());
            cuts.push(iv[1].clone());
        }
        let cuts = crate::pl::sort_dedup(cuts);
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mid = &(&w[0] + &w[1]) / &Num::int(2);
            let inside = ivs.iter().any(|iv| iv[0] <= mid && mid <= iv[1]);
            let v = if inside { Num::one() } else { Num::zero() };
            pieces.push(Piece {
                t0: w[0].clone(),
                t1: w[1].clone(),
                v0: v.clone(),
                v1: v,
            });
        }
        // a right interval end is a member, but the default value there
        // would come from the 0 piece on its right
        for iv in ivs {
            let b = &iv[1];
            if b.is_positive() && b < &e.length {
                let right_is_outside = !ivs.iter().any(|other| &other[0] <= b && b < &other[1]);
                if right_is_outside {
                    overrides.push(Override {
                        edge: e.id,
                        t: b.clone(),
                        v: Num::one(),
                    });
                }
            }
        }
        edges.push(EdgeFn {
            edge: e.id,
            pieces,
        });
    }
    let vertex_values = g
        .vertices
        .iter()
        .map(|v| {
            let val = if members.contains(&v.id) {
                Num::one()
            } else {
                Num::zero()
            };
            (v.id, val)
        })
        .collect();
    Ok(PiecewiseLinear {
        edges,
        vertex_values,
        overrides,
    })
}

/// Checks subset syntax against a graph.
pub fn validate_subset(g: &MetricGraph, s: &EdgeSubset) -> crate::graph::ValidationReport {
    match s.normalized(g) {
        Ok(_) => crate::graph::ValidationReport::ok(),
        Err(e) => crate::graph::ValidationReport::fail(e.to_string()),
    }
}
