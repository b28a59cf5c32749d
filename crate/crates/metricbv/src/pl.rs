//! Piecewise-linear functions on a metric graph.
//!
//! A function assigns to each edge a contiguous list of linear pieces
//! covering `[0, L]`, to each vertex a value, and optionally overrides the
//! value at finitely many interior edge points.  Pieces keep their own end
//! values, so one-sided limits at a shared breakpoint may disagree: that is a
//! jump.  The pointwise value at an interior breakpoint is the override if
//! present, otherwise the start value of the piece on the right.  A vertex
//! without an explicit value defaults to the limit along its first germ in
//! canonical order (lowest edge id, approaching from above before from
//! below).
//!
//! All constructions here (sums, truncations, distance functions) produce
//! exact rational breakpoints whenever the inputs are rational.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeEnd, EdgeId, MetricGraph, PointRef, VertexId};
use crate::num::Num;
use crate::subset::EdgeSubset;

/// One linear piece on `[t0, t1]` with end values `v0`, `v1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Piece {
    pub t0: Num,
    pub t1: Num,
    pub v0: Num,
    pub v1: Num,
}

impl Piece {
    pub fn value_at(&self, t: &Num) -> Num {
        if self.t0 == self.t1 {
            return self.v0.clone();
        }
        let s = &(t - &self.t0) / &(&self.t1 - &self.t0);
        &self.v0 + &(&s * &(&self.v1 - &self.v0))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeFn {
    pub edge: EdgeId,
    pub pieces: Vec<Piece>,
}

/// Value override at an interior edge point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Override {
    pub edge: EdgeId,
    pub t: Num,
    pub v: Num,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub edges: Vec<EdgeFn>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vertex_values: BTreeMap<VertexId, Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

/// Side from which a one-sided limit is taken, in the edge's own parameter.
/// `FromAbove` is the limit over `s -> t` with `s > t`.  The derived order
/// (`FromAbove` first) fixes the canonical germ order everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Approach {
    FromAbove,
    FromBelow,
}

/// A one-sided approach to a point along an edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Germ {
    pub edge: EdgeId,
    pub t: Num,
    pub approach: Approach,
}

#[derive(Clone, Debug)]
pub enum EvalMode {
    At,
    LimitAlong(EdgeId, Approach),
}

impl PiecewiseLinear {
    pub fn edge_fn(&self, id: EdgeId) -> Result<&EdgeFn> {
        self.edges
            .iter()
            .find(|ef| ef.edge == id)
            .ok_or_else(|| Error::invalid_function(format!("no data for edge {id}")))
    }

    pub fn override_at(&self, edge: EdgeId, t: &Num) -> Option<&Num> {
        self.overrides
            .iter()
            .find(|o| o.edge == edge && &o.t == t)
            .map(|o| &o.v)
    }

    /// Constant function.
    pub fn constant(g: &MetricGraph, c: Num) -> Self {
        let edges = g
            .edges
            .iter()
            .map(|e| EdgeFn {
                edge: e.id,
                pieces: vec![Piece {
                    t0: Num::zero(),
                    t1: e.length.clone(),
                    v0: c.clone(),
                    v1: c.clone(),
                }],
            })
            .collect();
        let vertex_values = g.vertices.iter().map(|v| (v.id, c.clone())).collect();
        PiecewiseLinear {
            edges,
            vertex_values,
            overrides: Vec::new(),
        }
    }

    /// Linear interpolation of the given vertex values along every edge.
    pub fn linear_from_vertices(g: &MetricGraph, values: &BTreeMap<VertexId, Num>) -> Result<Self> {
        let get = |id: VertexId| -> Result<Num> {
            values
                .get(&id)
                .cloned()
                .ok_or_else(|| Error::invalid_function(format!("no value for vertex {id}")))
        };
        let mut edges = Vec::new();
        for e in &g.edges {
            edges.push(EdgeFn {
                edge: e.id,
                pieces: vec![Piece {
                    t0: Num::zero(),
                    t1: e.length.clone(),
                    v0: get(e.u)?,
                    v1: get(e.v)?,
                }],
            });
        }
        Ok(PiecewiseLinear {
            edges,
            vertex_values: values.clone(),
            overrides: Vec::new(),
        })
    }

    /// Pointwise value, honoring overrides and the right-piece default at
    /// interior breakpoints.
    pub fn value_at(&self, g: &MetricGraph, p: &PointRef) -> Result<Num> {
        self.eval(g, p, &EvalMode::At)
    }

    pub fn eval(&self, g: &MetricGraph, p: &PointRef, mode: &EvalMode) -> Result<Num> {
        let p = p.clone().canonical(g)?;
        match mode {
            EvalMode::At => match &p {
                PointRef::Vertex { vertex } => self.vertex_value(g, *vertex),
                PointRef::OnEdge { edge, t } => {
                    if let Some(v) = self.override_at(*edge, t) {
                        return Ok(v.clone());
                    }
                    let ef = self.edge_fn(*edge)?;
                    Ok(limit_in_pieces(&ef.pieces, t, Approach::FromAbove))
                }
            },
            EvalMode::LimitAlong(edge, approach) => {
                let germ = self.germ_for(g, &p, *edge, *approach)?;
                self.germ_limit(g, &germ)
            }
        }
    }

    /// Vertex value with the default rule for missing entries.
    pub fn vertex_value(&self, g: &MetricGraph, v: VertexId) -> Result<Num> {
        if let Some(val) = self.vertex_values.get(&v) {
            return Ok(val.clone());
        }
        let germs = germs_at(g, &PointRef::Vertex { vertex: v })?;
        match germs.first() {
            Some(germ) => self.germ_limit(g, germ),
            None => Err(Error::invalid_function(format!(
                "isolated vertex {v} has no value"
            ))),
        }
    }

    /// One-sided limit along a germ.
    pub fn germ_limit(&self, _g: &MetricGraph, germ: &Germ) -> Result<Num> {
        let ef = self.edge_fn(germ.edge)?;
        Ok(limit_in_pieces(&ef.pieces, &germ.t, germ.approach))
    }

    fn germ_for(
        &self,
        g: &MetricGraph,
        p: &PointRef,
        edge: EdgeId,
        approach: Approach,
    ) -> Result<Germ> {
        let germs = germs_at(g, p)?;
        germs
            .into_iter()
            .find(|gm| gm.edge == edge && gm.approach == approach)
            .ok_or_else(|| {
                Error::invalid_argument(format!(
                    "point {p} has no germ along edge {edge} {approach:?}"
                ))
            })
    }

    /// All one-sided limits at a point, in canonical germ order.
    pub fn limits_at(&self, g: &MetricGraph, p: &PointRef) -> Result<Vec<Num>> {
        germs_at(g, &p.clone().canonical(g)?)?
            .iter()
            .map(|germ| self.germ_limit(g, germ))
            .collect()
    }

    /// Jump size at a point: the largest spread among the one-sided limits
    /// and the pointwise value.
    pub fn jump_at(&self, g: &MetricGraph, p: &PointRef) -> Result<Num> {
        let p = p.clone().canonical(g)?;
        let v = self.value_at(g, &p)?;
        let lims = self.limits_at(g, &p)?;
        let mut j = Num::zero();
        for (i, a) in lims.iter().enumerate() {
            j = j.max(v.abs_diff(a));
            for b in &lims[i + 1..] {
                j = j.max(a.abs_diff(b));
            }
        }
        Ok(j)
    }

    /// Pointwise sum.  Breakpoints are merged; overrides survive wherever
    /// either operand has one.
    pub fn add(&self, g: &MetricGraph, other: &Self) -> Result<Self> {
        self.combine(g, other, |a, b| a + b)
    }

    pub fn sub(&self, g: &MetricGraph, other: &Self) -> Result<Self> {
        self.combine(g, other, |a, b| a - b)
    }

    fn combine(
        &self,
        g: &MetricGraph,
        other: &Self,
        op: impl Fn(&Num, &Num) -> Num,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for e in &g.edges {
            let fa = self.edge_fn(e.id)?;
            let fb = other.edge_fn(e.id)?;
            let mut cuts = piece_cuts(&fa.pieces);
            cuts.extend(piece_cuts(&fb.pieces));
            let cuts = sort_dedup(cuts);
            let mut pieces = Vec::new();
            for w in cuts.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let va0 = limit_in_pieces(&fa.pieces, a, Approach::FromAbove);
                let va1 = limit_in_pieces(&fa.pieces, b, Approach::FromBelow);
                let vb0 = limit_in_pieces(&fb.pieces, a, Approach::FromAbove);
                let vb1 = limit_in_pieces(&fb.pieces, b, Approach::FromBelow);
                pieces.push(Piece {
                    t0: a.clone(),
                    t1: b.clone(),
                    v0: op(&va0, &vb0),
                    v1: op(&va1, &vb1),
                });
            }
            edges.push(EdgeFn {
                edge: e.id,
                pieces,
            });
        }
        let mut vertex_values = BTreeMap::new();
        for v in &g.vertices {
            vertex_values.insert(
                v.id,
                op(&self.vertex_value(g, v.id)?, &other.vertex_value(g, v.id)?),
            );
        }
        let mut ov_spots: Vec<(EdgeId, Num)> = self
            .overrides
            .iter()
            .chain(&other.overrides)
            .map(|o| (o.edge, o.t.clone()))
            .collect();
        ov_spots.sort();
        ov_spots.dedup();
        let mut overrides = Vec::new();
        for (edge, t) in ov_spots {
            let p = PointRef::OnEdge {
                edge,
                t: t.clone(),
            };
            let v = op(&self.value_at(g, &p)?, &other.value_at(g, &p)?);
            overrides.push(Override { edge, t, v });
        }
        Ok(PiecewiseLinear {
            edges,
            vertex_values,
            overrides,
        })
    }

    pub fn scale(&self, c: &Num) -> Self {
        self.map_values(|v| c * v)
    }

    pub fn add_scalar(&self, c: &Num) -> Self {
        self.map_values(|v| c + v)
    }

    /// Applies an affine-safe value map to every stored value.  Only valid
    /// for maps that commute with linear interpolation (affine maps).
    fn map_values(&self, op: impl Fn(&Num) -> Num) -> Self {
        PiecewiseLinear {
            edges: self
                .edges
                .iter()
                .map(|ef| EdgeFn {
                    edge: ef.edge,
                    pieces: ef
                        .pieces
                        .iter()
                        .map(|p| Piece {
                            t0: p.t0.clone(),
                            t1: p.t1.clone(),
                            v0: op(&p.v0),
                            v1: op(&p.v1),
                        })
                        .collect(),
                })
                .collect(),
            vertex_values: self
                .vertex_values
                .iter()
                .map(|(k, v)| (*k, op(v)))
                .collect(),
            overrides: self
                .overrides
                .iter()
                .map(|o| Override {
                    edge: o.edge,
                    t: o.t.clone(),
                    v: op(&o.v),
                })
                .collect(),
        }
    }

    /// `min(f, c)`: truncation from above.  Pieces crossing the level are
    /// split at the exact crossing parameter.
    pub fn truncate_above(&self, c: &Num) -> Self {
        self.clip(c, true)
    }

    /// `max(f, c)`: truncation from below.
    pub fn truncate_below(&self, c: &Num) -> Self {
        self.clip(c, false)
    }

    /// Clamps values into `[lo, hi]`.
    pub fn clamp_band(&self, lo: &Num, hi: &Num) -> Self {
        assert!(lo <= hi);
        self.truncate_below(lo).truncate_above(hi)
    }

    fn clip(&self, c: &Num, above: bool) -> Self {
        let clipv = |v: &Num| {
            if above {
                v.clone().min(c.clone())
            } else {
                v.clone().max(c.clone())
            }
        };
        let mut edges = Vec::new();
        for ef in &self.edges {
            let mut pieces = Vec::new();
            for p in &ef.pieces {
                let crosses = (&p.v0 < c && &p.v1 > c) || (&p.v0 > c && &p.v1 < c);
                if crosses {
                    let s = &p.t0
                        + &(&(&(c - &p.v0) / &(&p.v1 - &p.v0)) * &(&p.t1 - &p.t0));
                    pieces.push(Piece {
                        t0: p.t0.clone(),
                        t1: s.clone(),
                        v0: clipv(&p.v0),
                        v1: c.clone(),
                    });
                    pieces.push(Piece {
                        t0: s,
                        t1: p.t1.clone(),
                        v0: c.clone(),
                        v1: clipv(&p.v1),
                    });
                } else {
                    pieces.push(Piece {
                        t0: p.t0.clone(),
                        t1: p.t1.clone(),
                        v0: clipv(&p.v0),
                        v1: clipv(&p.v1),
                    });
                }
            }
            edges.push(EdgeFn {
                edge: ef.edge,
                pieces,
            });
        }
        PiecewiseLinear {
            edges,
            vertex_values: self
                .vertex_values
                .iter()
                .map(|(k, v)| (*k, clipv(v)))
                .collect(),
            overrides: self
                .overrides
                .iter()
                .map(|o| Override {
                    edge: o.edge,
                    t: o.t.clone(),
                    v: clipv(&o.v),
                })
                .collect(),
        }
    }

    /// True when the function has no jump anywhere (as a function on the
    /// glued space, vertices included).
    pub fn is_continuous(&self, g: &MetricGraph) -> Result<bool> {
        for p in jump_candidates(g, self) {
            if self.jump_at(g, &p)?.is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `∫ f dH¹` over the whole space (overrides are measure zero).
    pub fn integral(&self) -> Num {
        let mut acc = Num::zero();
        for ef in &self.edges {
            for p in &ef.pieces {
                let avg = &(&p.v0 + &p.v1) / &Num::int(2);
                acc += &(&avg * &(&p.t1 - &p.t0));
            }
        }
        acc
    }

    /// `∫_S f dH¹` over a subset.
    pub fn integral_over(&self, g: &MetricGraph, set: &EdgeSubset) -> Result<Num> {
        let mut acc = Num::zero();
        for ei in &set.edges {
            let ef = self.edge_fn(ei.edge)?;
            for iv in &ei.intervals {
                let (a, b) = (&iv[0], &iv[1]);
                for p in &ef.pieces {
                    let lo = p.t0.clone().max(a.clone());
                    let hi = p.t1.clone().min(b.clone());
                    if lo < hi {
                        let vlo = p.value_at(&lo);
                        let vhi = p.value_at(&hi);
                        let avg = &(&vlo + &vhi) / &Num::int(2);
                        acc += &(&avg * &(&hi - &lo));
                    }
                }
            }
        }
        let _ = g;
        Ok(acc)
    }

    /// `∫_S |f|^p dH¹`.  Exact for `p = 1` (splitting at zero crossings),
    /// closed-form `f64` otherwise.
    pub fn integral_abs_pow_over(
        &self,
        g: &MetricGraph,
        set: &EdgeSubset,
        p: f64,
    ) -> Result<Num> {
        let mut acc = Num::zero();
        for ei in &set.edges {
            let ef = self.edge_fn(ei.edge)?;
            for iv in &ei.intervals {
                let (a, b) = (&iv[0], &iv[1]);
                for piece in &ef.pieces {
                    let lo = piece.t0.clone().max(a.clone());
                    let hi = piece.t1.clone().min(b.clone());
                    if lo < hi {
                        let vlo = piece.value_at(&lo);
                        let vhi = piece.value_at(&hi);
                        acc += &segment_abs_pow(&lo, &hi, &vlo, &vhi, p);
                    }
                }
            }
        }
        let _ = g;
        Ok(acc)
    }

    /// `∫_S |f'|^p dH¹` where `f'` is the a.e. slope along edges.
    pub fn slope_abs_pow_over(&self, g: &MetricGraph, set: &EdgeSubset, p: f64) -> Result<Num> {
        let mut acc = Num::zero();
        for ei in &set.edges {
            let ef = self.edge_fn(ei.edge)?;
            for iv in &ei.intervals {
                let (a, b) = (&iv[0], &iv[1]);
                for piece in &ef.pieces {
                    let lo = piece.t0.clone().max(a.clone());
                    let hi = piece.t1.clone().min(b.clone());
                    if lo < hi {
                        let len = &hi - &lo;
                        let slope =
                            (&(&piece.v1 - &piece.v0) / &(&piece.t1 - &piece.t0)).abs();
                        if p == 1.0 {
                            acc += &(&slope * &len);
                        } else {
                            acc += &Num::float(slope.to_f64().powf(p) * len.to_f64());
                        }
                    }
                }
            }
        }
        let _ = g;
        Ok(acc)
    }

    /// Range of attained values (piece ends, overrides, vertex values).
    pub fn value_range(&self, g: &MetricGraph) -> Result<(Num, Num)> {
        let vals = self.all_node_values(g)?;
        let lo = vals.iter().min().cloned().expect("nonempty function");
        let hi = vals.iter().max().cloned().expect("nonempty function");
        Ok((lo, hi))
    }

    /// Every value the function attains at a piece end, override or vertex.
    /// Between these the function is linear, so this is a complete list of
    /// candidate level-set transitions.
    pub fn all_node_values(&self, g: &MetricGraph) -> Result<Vec<Num>> {
        let mut vals = Vec::new();
        for ef in &self.edges {
            for p in &ef.pieces {
                vals.push(p.v0.clone());
                vals.push(p.v1.clone());
            }
        }
        for o in &self.overrides {
            vals.push(o.v.clone());
        }
        for v in &g.vertices {
            vals.push(self.vertex_value(g, v.id)?);
        }
        vals.sort();
        vals.dedup();
        Ok(vals)
    }

    /// Restriction to a closed subset: intervals become edges of a new
    /// graph, cut points become vertices whose value is the pointwise value
    /// of `self` there.  Subset vertices come along; everything else is
    /// dropped.  The result may be disconnected.
    pub fn restrict_to_subset(
        &self,
        g: &MetricGraph,
        set: &EdgeSubset,
    ) -> Result<(MetricGraph, PiecewiseLinear)> {
        let set = set.normalized(g)?;

        struct VertexBuilder {
            vertices: Vec<crate::graph::Vertex>,
            values: BTreeMap<VertexId, Num>,
            remap: BTreeMap<VertexId, VertexId>,
            next: u32,
        }
        impl VertexBuilder {
            fn fresh(&mut self, val: Num) -> VertexId {
                let nid = VertexId(self.next);
                self.next += 1;
                self.vertices.push(crate::graph::Vertex {
                    id: nid,
                    x: None,
                    y: None,
                });
                self.values.insert(nid, val);
                nid
            }
            fn keep(&mut self, id: VertexId, val: Num) -> VertexId {
                if let Some(nid) = self.remap.get(&id) {
                    return *nid;
                }
                let nid = self.fresh(val);
                self.remap.insert(id, nid);
                nid
            }
        }
        let mut vb = VertexBuilder {
            vertices: Vec::new(),
            values: BTreeMap::new(),
            remap: BTreeMap::new(),
            next: 0,
        };
        for vid in set.vertex_members(g)? {
            let val = self.vertex_value(g, vid)?;
            vb.keep(vid, val);
        }
        let mut new_edges = Vec::new();
        let mut new_fns = Vec::new();
        let mut new_ovs = Vec::new();
        let mut next_e = 0u32;
        for ei in &set.edges {
            let e = g
                .edge(ei.edge)
                .ok_or_else(|| Error::invalid_subset(format!("no edge {}", ei.edge)))?;
            let ef = self.edge_fn(ei.edge)?;
            for iv in &ei.intervals {
                let (a, b) = (iv[0].clone(), iv[1].clone());
                let end_vertex = |t: &Num, self_: &Self| -> Result<(Option<VertexId>, Num)> {
                    if t.is_zero() {
                        Ok((Some(e.u), self_.vertex_value(g, e.u)?))
                    } else if *t == e.length {
                        Ok((Some(e.v), self_.vertex_value(g, e.v)?))
                    } else {
                        let p = PointRef::OnEdge {
                            edge: e.id,
                            t: t.clone(),
                        };
                        Ok((None, self_.value_at(g, &p)?))
                    }
                };
                let (ua, va) = end_vertex(&a, self)?;
                let (ub, vbv) = end_vertex(&b, self)?;
                let nu = match ua {
                    Some(id) => vb.keep(id, va),
                    None => vb.fresh(va),
                };
                let nv = match ub {
                    Some(id) => vb.keep(id, vbv),
                    None => vb.fresh(vbv),
                };
                let eid = EdgeId(next_e);
                next_e += 1;
                new_edges.push(crate::graph::Edge {
                    id: eid,
                    u: nu,
                    v: nv,
                    length: &b - &a,
                });
                let mut cuts = vec![a.clone(), b.clone()];
                for p in &ef.pieces {
                    if p.t0 > a && p.t0 < b {
                        cuts.push(p.t0.clone());
                    }
                }
                let cuts = sort_dedup(cuts);
                let mut pieces = Vec::new();
                for w in cuts.windows(2) {
                    let (s0, s1) = (&w[0], &w[1]);
                    pieces.push(Piece {
                        t0: s0 - &a,
                        t1: s1 - &a,
                        v0: limit_in_pieces(&ef.pieces, s0, Approach::FromAbove),
                        v1: limit_in_pieces(&ef.pieces, s1, Approach::FromBelow),
                    });
                }
                new_fns.push(EdgeFn { edge: eid, pieces });
                for o in &self.overrides {
                    if o.edge == e.id && o.t > a && o.t < b {
                        new_ovs.push(Override {
                            edge: eid,
                            t: &o.t - &a,
                            v: o.v.clone(),
                        });
                    }
                }
            }
        }
        let new_g = MetricGraph {
            metric: crate::graph::Metric::Geodesic,
            vertices: vb.vertices,
            edges: new_edges,
        };
        let new_f = PiecewiseLinear {
            edges: new_fns,
            vertex_values: vb.values,
            overrides: new_ovs,
        };
        Ok((new_g, new_f))
    }

    /// `w + eta * (target - w)` evaluated through one-sided limits at the
    /// merged cut set and linearly interpolated in between.  `eta` must be
    /// continuous.  Interpolating through exact blend values never increases
    /// variation, since a chord carries at most the variation of the stretch
    /// it replaces.
    pub fn blend_toward(
        &self,
        g: &MetricGraph,
        eta: &PiecewiseLinear,
        target: &Num,
    ) -> Result<PiecewiseLinear> {
        let blend = |w: &Num, e: &Num| -> Num { w + &(e * &(target - w)) };
        let mut edges = Vec::new();
        for e in &g.edges {
            let fw = self.edge_fn(e.id)?;
            let fe = eta.edge_fn(e.id)?;
            let mut cuts = piece_cuts(&fw.pieces);
            cuts.extend(piece_cuts(&fe.pieces));
            let cuts = sort_dedup(cuts);
            let mut pieces = Vec::new();
            for wnd in cuts.windows(2) {
                let (a, b) = (&wnd[0], &wnd[1]);
                let w0 = limit_in_pieces(&fw.pieces, a, Approach::FromAbove);
                let w1 = limit_in_pieces(&fw.pieces, b, Approach::FromBelow);
                let e0 = limit_in_pieces(&fe.pieces, a, Approach::FromAbove);
                let e1 = limit_in_pieces(&fe.pieces, b, Approach::FromBelow);
                pieces.push(Piece {
                    t0: a.clone(),
                    t1: b.clone(),
                    v0: blend(&w0, &e0),
                    v1: blend(&w1, &e1),
                });
            }
            edges.push(EdgeFn {
                edge: e.id,
                pieces,
            });
        }
        let mut vertex_values = BTreeMap::new();
        for v in &g.vertices {
            vertex_values.insert(
                v.id,
                blend(
                    &self.vertex_value(g, v.id)?,
                    &eta.vertex_value(g, v.id)?,
                ),
            );
        }
        let mut overrides = Vec::new();
        for o in &self.overrides {
            let p = PointRef::OnEdge {
                edge: o.edge,
                t: o.t.clone(),
            };
            overrides.push(Override {
                edge: o.edge,
                t: o.t.clone(),
                v: blend(&o.v, &eta.value_at(g, &p)?),
            });
        }
        Ok(PiecewiseLinear {
            edges,
            vertex_values,
            overrides,
        })
    }
}

/// Distance to `x` in the intrinsic metric, as a continuous PL function.
/// On each edge this is the lower envelope of at most three linear pieces
/// (around either endpoint, or directly to `x` when it lies on the edge).
pub fn inner_distance_fn(g: &MetricGraph, x: &PointRef) -> Result<PiecewiseLinear> {
    let x = x.clone().canonical(g)?;
    let ix = g.index();
    let dists = g.inner_distances_from(&x)?;
    let mut edges = Vec::new();
    let mut vertex_values = BTreeMap::new();
    for (vi, v) in g.vertices.iter().enumerate() {
        vertex_values.insert(v.id, dists[vi].clone());
    }
    for e in &g.edges {
        let du = dists[ix.vpos[&e.u]].clone();
        let dv = dists[ix.vpos[&e.v]].clone();
        let through_center: Option<Num> = match &x {
            PointRef::OnEdge { edge, t } if *edge == e.id => Some(t.clone()),
            _ => None,
        };
        // candidate linear branches (value at t=0 paired with slope ±1);
        // the direct |t - tx| part contributes both of its sides here so
        // every kink of the envelope is a pairwise line crossing
        let mut branches: Vec<(Num, i8)> = vec![(du.clone(), 1), (&dv + &e.length, -1)];
        if let Some(tx) = &through_center {
            branches.push((tx.clone(), -1));
            branches.push((-tx, 1));
        }
        let mut cuts = vec![Num::zero(), e.length.clone()];
        for (i, (a0, s0)) in branches.iter().enumerate() {
            for (a1, s1) in &branches[i + 1..] {
                if s0 != s1 {
                    // a0 + s0 t = a1 + s1 t
                    let t = &(a1 - a0) / &Num::int((*s0 - *s1) as i64);
                    if t.is_positive() && t < e.length {
                        cuts.push(t);
                    }
                }
            }
        }
        let cuts = sort_dedup(cuts);
        let eval_min = |t: &Num| -> Num {
            let mut d = (&du + t).min(&dv + &(&e.length - t));
            if let Some(tx) = &through_center {
                d = d.min(tx.abs_diff(t));
            }
            d
        };
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            pieces.push(Piece {
                t0: w[0].clone(),
                t1: w[1].clone(),
                v0: eval_min(&w[0]),
                v1: eval_min(&w[1]),
            });
        }
        edges.push(EdgeFn {
            edge: e.id,
            pieces,
        });
    }
    Ok(PiecewiseLinear {
        edges,
        vertex_values,
        overrides: Vec::new(),
    })
}

/// Germs at a point, sorted canonically: by edge id, `FromAbove` before
/// `FromBelow`.  A vertex gets one germ per incidence, an interior point two.
pub fn germs_at(g: &MetricGraph, p: &PointRef) -> Result<Vec<Germ>> {
    let p = p.clone().canonical(g)?;
    let mut germs = Vec::new();
    match &p {
        PointRef::Vertex { vertex } => {
            let ix = g.index();
            let vi = *ix
                .vpos
                .get(vertex)
                .ok_or_else(|| Error::invalid_argument(format!("no vertex {vertex}")))?;
            for inc in &ix.incident[vi] {
                let e = &g.edges[inc.edge_ix];
                match inc.end {
                    EdgeEnd::Start => germs.push(Germ {
                        edge: e.id,
                        t: Num::zero(),
                        approach: Approach::FromAbove,
                    }),
                    EdgeEnd::End => germs.push(Germ {
                        edge: e.id,
                        t: e.length.clone(),
                        approach: Approach::FromBelow,
                    }),
                }
            }
        }
        PointRef::OnEdge { edge, t } => {
            germs.push(Germ {
                edge: *edge,
                t: t.clone(),
                approach: Approach::FromAbove,
            });
            germs.push(Germ {
                edge: *edge,
                t: t.clone(),
                approach: Approach::FromBelow,
            });
        }
    }
    germs.sort_by(|a, b| (a.edge, a.approach).cmp(&(b.edge, b.approach)));
    Ok(germs)
}

/// Points where a jump could occur: vertices, overrides, interior piece
/// boundaries.
pub fn jump_candidates(g: &MetricGraph, f: &PiecewiseLinear) -> Vec<PointRef> {
    let mut pts = Vec::new();
    for v in &g.vertices {
        pts.push(PointRef::Vertex { vertex: v.id });
    }
    for ef in &f.edges {
        let len = g.edge(ef.edge).map(|e| e.length.clone());
        for p in ef.pieces.iter().skip(1) {
            let interior = len.as_ref().is_none_or(|l| p.t0.is_positive() && &p.t0 < l);
            if interior {
                pts.push(PointRef::OnEdge {
                    edge: ef.edge,
                    t: p.t0.clone(),
                });
            }
        }
    }
    for o in &f.overrides {
        pts.push(PointRef::OnEdge {
            edge: o.edge,
            t: o.t.clone(),
        });
    }
    pts.sort_by(point_order);
    pts.dedup();
    pts
}

pub(crate) fn point_order(a: &PointRef, b: &PointRef) -> std::cmp::Ordering {
    let key = |p: &PointRef| match p {
        PointRef::Vertex { vertex } => (0u8, vertex.0, Num::zero()),
        PointRef::OnEdge { edge, t } => (1u8, edge.0, t.clone()),
    };
    key(a).cmp(&key(b))
}

/// One-sided limit within a piece list at parameter `t`.
pub fn limit_in_pieces(pieces: &[Piece], t: &Num, approach: Approach) -> Num {
    match approach {
        Approach::FromAbove => {
            for p in pieces {
                if &p.t0 <= t && t < &p.t1 {
                    return p.value_at(t);
                }
            }
        }
        Approach::FromBelow => {
            for p in pieces {
                if &p.t0 < t && t <= &p.t1 {
                    return p.value_at(t);
                }
            }
        }
    }
    // t at the closed end of the covered range
    if let Some(first) = pieces.first() {
        if t <= &first.t0 {
            return first.v0.clone();
        }
    }
    if let Some(last) = pieces.last() {
        if t >= &last.t1 {
            return last.v1.clone();
        }
    }
    panic!("parameter outside piece range");
}

pub(crate) fn piece_cuts(pieces: &[Piece]) -> Vec<Num> {
    let mut cuts = Vec::with_capacity(pieces.len() + 1);
    for p in pieces {
        cuts.push(p.t0.clone());
    }
    if let Some(last) = pieces.last() {
        cuts.push(last.t1.clone());
    }
    cuts
}

pub(crate) fn sort_dedup(mut v: Vec<Num>) -> Vec<Num> {
    v.sort();
    v.dedup();
    v
}

fn segment_abs_pow(lo: &Num, hi: &Num, vlo: &Num, vhi: &Num, p: f64) -> Num {
    if p == 1.0 {
        // split at the zero crossing so the trapezoid rule stays exact
        let crosses = (vlo.is_negative() && vhi.is_positive())
            || (vlo.is_positive() && vhi.is_negative());
        if crosses {
            let s = lo + &(&(&(-vlo) / &(vhi - vlo)) * &(hi - lo));
            let left = &(&vlo.abs() / &Num::int(2)) * &(&s - lo);
            let right = &(&vhi.abs() / &Num::int(2)) * &(hi - &s);
            return &left + &right;
        }
        let avg = &(&vlo.abs() + &vhi.abs()) / &Num::int(2);
        return &avg * &(hi - lo);
    }
    // ∫ |a + b s|^p ds over [0, len] in closed form
    let len = (hi - lo).to_f64();
    let a = vlo.to_f64();
    let b = (vhi.to_f64() - a) / len;
    if b == 0.0 {
        return Num::float(a.abs().powf(p) * len);
    }
    let prim = |x: f64| x.abs().powf(p) * x / (p + 1.0);
    Num::float((prim(a + b * len) - prim(a)) / b)
}

/// Checks a function against its graph: every edge covered exactly once by
/// contiguous pieces over `[0, L]`, overrides interior and unique, vertex
/// values referring to real vertices.
pub fn validate_fn(g: &MetricGraph, f: &PiecewiseLinear) -> crate::graph::ValidationReport {
    use crate::graph::ValidationReport as VR;
    let mut seen = std::collections::HashSet::new();
    for ef in &f.edges {
        if !seen.insert(ef.edge) {
            return VR::fail(format!("edge {} listed twice", ef.edge));
        }
        let Some(e) = g.edge(ef.edge) else {
            return VR::fail(format!("function names unknown edge {}", ef.edge));
        };
        if ef.pieces.is_empty() {
            return VR::fail(format!("edge {} has no pieces", ef.edge));
        }
        if !ef.pieces[0].t0.is_zero() {
            return VR::fail(format!("edge {} pieces do not start at 0", ef.edge));
        }
        if ef.pieces.last().unwrap().t1 != e.length {
            return VR::fail(format!(
                "edge {} pieces do not reach the edge length {}",
                ef.edge, e.length
            ));
        }
        for p in &ef.pieces {
            if p.t0 >= p.t1 {
                return VR::fail(format!("edge {} has an empty or reversed piece", ef.edge));
            }
        }
        for w in ef.pieces.windows(2) {
            if w[0].t1 != w[1].t0 {
                return VR::fail(format!("edge {} pieces are not contiguous", ef.edge));
            }
        }
    }
    for e in &g.edges {
        if !seen.contains(&e.id) {
            return VR::fail(format!("no pieces for edge {}", e.id));
        }
    }
    let mut ov_seen = std::collections::BTreeSet::new();
    for o in &f.overrides {
        let Some(e) = g.edge(o.edge) else {
            return VR::fail(format!("override names unknown edge {}", o.edge));
        };
        if !o.t.is_positive() || o.t >= e.length {
            return VR::fail(format!(
                "override on edge {} at {} is not interior",
                o.edge, o.t
            ));
        }
        if !ov_seen.insert((o.edge, o.t.clone())) {
            return VR::fail(format!("duplicate override on edge {} at {}", o.edge, o.t));
        }
    }
    for id in f.vertex_values.keys() {
        if g.vertex(*id).is_none() {
            return VR::fail(format!("value for unknown vertex {id}"));
        }
    }
    for v in &g.vertices {
        if !f.vertex_values.contains_key(&v.id) && g.degree(v.id) == 0 {
            return VR::fail(format!("isolated vertex {} has no value", v.id));
        }
    }
    VR::ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Metric, Vertex};

    fn unit_path() -> MetricGraph {
        MetricGraph {
            metric: Metric::Geodesic,
            vertices: vec![
                Vertex {
                    id: VertexId(0),
                    x: None,
                    y: None,
                },
                Vertex {
                    id: VertexId(1),
                    x: None,
                    y: None,
                },
            ],
            edges: vec![Edge {
                id: EdgeId(0),
                u: VertexId(0),
                v: VertexId(1),
                length: Num::one(),
            }],
        }
    }

    fn step_fn() -> PiecewiseLinear {
        // 0 on [0, 1/2), 1 on (1/2, 1], override value 1 at the step
        PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::zero(),
                        t1: Num::ratio(1, 2),
                        v0: Num::zero(),
                        v1: Num::zero(),
                    },
                    Piece {
                        t0: Num::ratio(1, 2),
                        t1: Num::one(),
                        v0: Num::one(),
                        v1: Num::one(),
                    },
                ],
            }],
            vertex_values: BTreeMap::from([(VertexId(0), Num::zero()), (VertexId(1), Num::one())]),
            overrides: vec![],
        }
    }

    #[test]
    fn eval_semantics_at_a_jump() {
        let g = unit_path();
        let f = step_fn();
        let p = PointRef::on_edge(0, Num::ratio(1, 2));
        // default at an interior breakpoint is the right piece
        assert_eq!(f.value_at(&g, &p).unwrap(), Num::one());
        assert_eq!(
            f.eval(&g, &p, &EvalMode::LimitAlong(EdgeId(0), Approach::FromBelow))
                .unwrap(),
            Num::zero()
        );
        assert_eq!(
            f.eval(&g, &p, &EvalMode::LimitAlong(EdgeId(0), Approach::FromAbove))
                .unwrap(),
            Num::one()
        );
        assert_eq!(f.jump_at(&g, &p).unwrap(), Num::one());
        assert!(!f.is_continuous(&g).unwrap());
    }

    #[test]
    fn overrides_win_pointwise_and_count_as_jumps() {
        let g = unit_path();
        let mut f = PiecewiseLinear::constant(&g, Num::zero());
        f.overrides.push(Override {
            edge: EdgeId(0),
            t: Num::ratio(1, 3),
            v: Num::int(5),
        });
        let p = PointRef::on_edge(0, Num::ratio(1, 3));
        assert_eq!(f.value_at(&g, &p).unwrap(), Num::int(5));
        assert_eq!(f.jump_at(&g, &p).unwrap(), Num::int(5));
        // limits ignore the override
        assert_eq!(
            f.eval(&g, &p, &EvalMode::LimitAlong(EdgeId(0), Approach::FromAbove))
                .unwrap(),
            Num::zero()
        );
    }

    #[test]
    fn vertex_default_uses_first_germ() {
        let g = unit_path();
        let mut f = step_fn();
        f.vertex_values.clear();
        // vertex 1 sits at t = 1 of edge 0; only germ is FromBelow with limit 1
        assert_eq!(f.vertex_value(&g, VertexId(1)).unwrap(), Num::one());
        assert_eq!(f.vertex_value(&g, VertexId(0)).unwrap(), Num::zero());
    }

    #[test]
    fn add_and_truncate_stay_exact() {
        let g = unit_path();
        let id = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::zero()), (VertexId(1), Num::one())]),
        )
        .unwrap();
        let s = id.add(&g, &id).unwrap();
        assert_eq!(
            s.value_at(&g, &PointRef::on_edge(0, Num::ratio(1, 4))).unwrap(),
            Num::ratio(1, 2)
        );
        let t = id.truncate_above(&Num::ratio(1, 3));
        // crossing split lands exactly at t = 1/3
        let ef = t.edge_fn(EdgeId(0)).unwrap();
        assert_eq!(ef.pieces.len(), 2);
        assert_eq!(ef.pieces[0].t1, Num::ratio(1, 3));
        assert_eq!(
            t.value_at(&g, &PointRef::on_edge(0, Num::ratio(1, 2))).unwrap(),
            Num::ratio(1, 3)
        );
        assert_eq!(t.vertex_value(&g, VertexId(1)).unwrap(), Num::ratio(1, 3));
    }

    #[test]
    fn integrals() {
        let g = unit_path();
        let id = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::zero()), (VertexId(1), Num::one())]),
        )
        .unwrap();
        assert_eq!(id.integral(), Num::ratio(1, 2));
        let shifted = id.add_scalar(&Num::ratio(-1, 2));
        let full = EdgeSubset::full(&g);
        // ∫ |t - 1/2| dt = 1/4, exactly
        assert_eq!(
            shifted.integral_abs_pow_over(&g, &full, 1.0).unwrap(),
            Num::ratio(1, 4)
        );
        // ∫ |1| dt for the slope
        assert_eq!(id.slope_abs_pow_over(&g, &full, 1.0).unwrap(), Num::one());
        let sq = shifted.integral_abs_pow_over(&g, &full, 2.0).unwrap();
        assert!((sq.to_f64() - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn distance_function_on_a_path() {
        let g = unit_path();
        let d = inner_distance_fn(&g, &PointRef::on_edge(0, Num::ratio(1, 4))).unwrap();
        assert_eq!(
            d.value_at(&g, &PointRef::on_edge(0, Num::ratio(3, 4))).unwrap(),
            Num::ratio(1, 2)
        );
        assert_eq!(d.vertex_value(&g, VertexId(0)).unwrap(), Num::ratio(1, 4));
        assert!(d.is_continuous(&g).unwrap());
        // breakpoint sits exactly at the center point
        let ef = d.edge_fn(EdgeId(0)).unwrap();
        assert!(ef.pieces.iter().any(|p| p.t0 == Num::ratio(1, 4)));
    }

    #[test]
    fn restriction_keeps_boundary_values_and_jumps() {
        let g = unit_path();
        let f = step_fn();
        let set = EdgeSubset {
            edges: vec![crate::subset::EdgeIntervals {
                edge: EdgeId(0),
                intervals: vec![[Num::ratio(1, 4), Num::ratio(3, 4)]],
            }],
            vertices: vec![],
        };
        let (rg, rf) = f.restrict_to_subset(&g, &set).unwrap();
        assert_eq!(rg.edges.len(), 1);
        assert_eq!(rg.edges[0].length, Num::ratio(1, 2));
        assert_eq!(rf.vertex_value(&rg, rg.edges[0].u).unwrap(), Num::zero());
        assert_eq!(rf.vertex_value(&rg, rg.edges[0].v).unwrap(), Num::one());
        // the jump at the old 1/2 now sits at parameter 1/4 of the new edge
        let p = PointRef::OnEdge {
            edge: rg.edges[0].id,
            t: Num::ratio(1, 4),
        };
        assert_eq!(rf.jump_at(&rg, &p).unwrap(), Num::one());
    }

    #[test]
    fn validation_catches_gaps_and_bad_overrides() {
        let g = unit_path();
        let mut f = step_fn();
        assert!(validate_fn(&g, &f).ok);
        f.edges[0].pieces[0].t1 = Num::ratio(1, 3);
        assert!(!validate_fn(&g, &f).ok);
        let mut f = step_fn();
        f.overrides.push(Override {
            edge: EdgeId(0),
            t: Num::zero(),
            v: Num::one(),
        });
        let rep = validate_fn(&g, &f);
        assert!(!rep.ok);
        assert!(rep.violation.unwrap().contains("interior"));
    }

    #[test]
    fn blend_hits_target_where_weight_is_one() {
        let g = unit_path();
        let f = step_fn();
        let eta = PiecewiseLinear::constant(&g, Num::one());
        let b = f.blend_toward(&g, &eta, &Num::int(7)).unwrap();
        assert_eq!(
            b.value_at(&g, &PointRef::on_edge(0, Num::ratio(1, 2))).unwrap(),
            Num::int(7)
        );
        let half = PiecewiseLinear::constant(&g, Num::ratio(1, 2));
        let b = f.blend_toward(&g, &half, &Num::int(1)).unwrap();
        // 0 + 1/2 (1 - 0) = 1/2 on the left part
        assert_eq!(
            b.value_at(&g, &PointRef::on_edge(0, Num::ratio(1, 4))).unwrap(),
            Num::ratio(1, 2)
        );
    }
}
