//! Length measure and metric balls.
//!
//! The reference measure is one-dimensional Hausdorff measure, which on a
//! metric graph is just arc length summed over edges.  Ball traces are
//! computed edge by edge: in the intrinsic metric the distance along an edge
//! is a piecewise-linear envelope, so sublevel sets are exact; in ambient
//! mode the distance is quadratic along straight edges and the trace falls
//! back to `f64`, except around a center that is an endpoint of the edge,
//! where straightness makes the trace exactly `{t < r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Metric, MetricGraph, PointRef};
use crate::num::Num;
use crate::pl::{inner_distance_fn, sort_dedup, PiecewiseLinear};
use crate::subset::{EdgeIntervals, EdgeSubset};

/// Total length of the space.
pub fn h1_total(g: &MetricGraph) -> Num {
    let mut acc = Num::zero();
    for e in &g.edges {
        acc += &e.length;
    }
    acc
}

/// Length of a subset (vertices are null).
pub fn h1_of_subset(g: &MetricGraph, s: &EdgeSubset) -> Result<Num> {
    Ok(s.normalized(g)?.measure())
}

/// Open-ball trace `{ y : d(center, y) < r }` as a closed subset of the same
/// measure.
pub fn ball_subset(g: &MetricGraph, center: &PointRef, r: &Num) -> Result<EdgeSubset> {
    BallOracle::new(g, center)?.ball(r)
}

/// Repeated ball traces around a fixed center.
///
/// In the intrinsic metric the distance field is computed once at
/// construction, so each additional radius costs a sweep over the edges
/// instead of a fresh shortest-path run.  Scans over radius grids should
/// prefer this over calling [`ball_subset`] in a loop.
pub struct BallOracle<'g> {
    g: &'g MetricGraph,
    center: PointRef,
    // (distance function, vertex distances in index order); intrinsic only
    field: Option<(PiecewiseLinear, Vec<Num>)>,
}

impl<'g> BallOracle<'g> {
    pub fn new(g: &'g MetricGraph, center: &PointRef) -> Result<Self> {
        let center = center.clone().canonical(g)?;
        let field = match g.metric {
            Metric::Geodesic => Some((
                inner_distance_fn(g, &center)?,
                g.inner_distances_from(&center)?,
            )),
            Metric::AmbientEuclidean => None,
        };
        Ok(Self { g, center, field })
    }

    pub fn center(&self) -> &PointRef {
        &self.center
    }

    pub fn ball(&self, r: &Num) -> Result<EdgeSubset> {
        if !r.is_positive() {
            return Err(Error::invalid_argument(format!("radius {r} must be positive")));
        }
        match &self.field {
            Some((d, dists)) => geodesic_ball(self.g, d, dists, r),
            None => ambient_ball(self.g, &self.center, r),
        }
    }

    pub fn ball_measure(&self, r: &Num) -> Result<Num> {
        // both ball constructors hand back normalized subsets
        Ok(self.ball(r)?.measure())
    }
}

fn geodesic_ball(
    g: &MetricGraph,
    d: &PiecewiseLinear,
    dists: &[Num],
    r: &Num,
) -> Result<EdgeSubset> {
    let mut edges = Vec::new();
    for ef in &d.edges {
        let mut ivs: Vec<[Num; 2]> = Vec::new();
        for p in &ef.pieces {
            // linear piece: the strict sublevel set is a subinterval
            let lo_in = &p.v0 < r;
            let hi_in = &p.v1 < r;
            let seg = match (lo_in, hi_in) {
                (true, true) => Some([p.t0.clone(), p.t1.clone()]),
                (false, false) => None,
                _ => {
                    let s = &p.t0
                        + &(&(&(r - &p.v0) / &(&p.v1 - &p.v0)) * &(&p.t1 - &p.t0));
                    if lo_in {
                        Some([p.t0.clone(), s])
                    } else {
                        Some([s, p.t1.clone()])
                    }
                }
            };
            if let Some(iv) = seg {
                if iv[0] < iv[1] {
                    ivs.push(iv);
                }
            }
        }
        if !ivs.is_empty() {
            edges.push(EdgeIntervals {
                edge: ef.edge,
                intervals: ivs,
            });
        }
    }
    let ix = g.index();
    let vertices = g
        .vertices
        .iter()
        .filter(|v| &dists[ix.vpos[&v.id]] < r)
        .map(|v| v.id)
        .collect();
    EdgeSubset { edges, vertices }.normalized(g)
}

fn ambient_ball(g: &MetricGraph, center: &PointRef, r: &Num) -> Result<EdgeSubset> {
    let c = g.embed(center)?;
    let center_vertex = match center {
        PointRef::Vertex { vertex } => Some(*vertex),
        PointRef::OnEdge { .. } => None,
    };
    let mut edges = Vec::new();
    for e in &g.edges {
        // Exact radial case: the center is an endpoint of this straight
        // edge, so distance along the edge equals the arc-length parameter.
        if let Some(cv) = center_vertex {
            if cv == e.u || cv == e.v {
                let span = r.clone().min(e.length.clone());
                let iv = if cv == e.u {
                    [Num::zero(), span]
                } else {
                    [&e.length - &span, e.length.clone()]
                };
                if iv[0] < iv[1] {
                    edges.push(EdgeIntervals {
                        edge: e.id,
                        intervals: vec![iv],
                    });
                }
                continue;
            }
        }
        let a = g.embed(&PointRef::Vertex { vertex: e.u })?;
        let b = g.embed(&PointRef::Vertex { vertex: e.v })?;
        // shift by the center before squaring to keep f64 error relative
        let (ax, ay) = ((&a[0] - &c[0]).to_f64(), (&a[1] - &c[1]).to_f64());
        let (bx, by) = ((&b[0] - &c[0]).to_f64(), (&b[1] - &c[1]).to_f64());
        let len = e.length.to_f64();
        let (dx, dy) = ((bx - ax) / len, (by - ay) / len);
        // |A + t D|^2 < r^2 with |D| = 1 up to the straightness tolerance
        let alpha = dx * dx + dy * dy;
        let beta = ax * dx + ay * dy;
        let gamma = ax * ax + ay * ay - r.to_f64() * r.to_f64();
        let disc = beta * beta - alpha * gamma;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let t0 = ((-beta - sq) / alpha).max(0.0);
        let t1 = ((-beta + sq) / alpha).min(len);
        if t0 < t1 {
            edges.push(EdgeIntervals {
                edge: e.id,
                intervals: vec![[Num::float(t0), Num::float(t1)]],
            });
        }
    }
    let mut vertices = Vec::new();
    for v in &g.vertices {
        let p = g.embed(&PointRef::Vertex { vertex: v.id })?;
        let dx = &p[0] - &c[0];
        let dy = &p[1] - &c[1];
        let d2 = &(&dx * &dx) + &(&dy * &dy);
        if d2 < r * r {
            vertices.push(v.id);
        }
    }
    EdgeSubset { edges, vertices }.normalized(g)
}

/// `[r0, r0/2, ..., r0/2^halvings]`.
pub fn radius_grid(r0: &Num, halvings: u32) -> Vec<Num> {
    let mut out = Vec::with_capacity(halvings as usize + 1);
    let mut r = r0.clone();
    let half = Num::ratio(1, 2);
    for _ in 0..=halvings {
        out.push(r.clone());
        r = &r * &half;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentTerm {
    pub point: PointRef,
    pub best_radius: Num,
    pub ratio: Num,
}

/// One-ball-per-point estimate of the small-scale content of a finite point
/// set: each point contributes the best `H¹(B(p, r)) / r` over the scanned
/// radii, and the terms are summed.  Empty input gives 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Codim1Report {
    pub radii: Vec<Num>,
    pub terms: Vec<ContentTerm>,
    pub total: Num,
}

pub fn codim1_content(
    g: &MetricGraph,
    points: &[PointRef],
    radii: &[Num],
) -> Result<Codim1Report> {
    if radii.is_empty() {
        return Err(Error::invalid_argument("empty radius grid"));
    }
    let mut terms = Vec::new();
    let mut total = Num::zero();
    for p in points {
        let p = p.clone().canonical(g)?;
        let balls = BallOracle::new(g, &p)?;
        let mut best: Option<(Num, Num)> = None;
        for r in radii {
            let m = balls.ball_measure(r)?;
            let ratio = &m / r;
            if best.as_ref().is_none_or(|(_, b)| &ratio < b) {
                best = Some((r.clone(), ratio));
            }
        }
        let (best_radius, ratio) = best.expect("nonempty radii");
        total += &ratio;
        terms.push(ContentTerm {
            point: p,
            best_radius,
            ratio,
        });
    }
    Ok(Codim1Report {
        radii: radii.to_vec(),
        terms,
        total,
    })
}

/// Distinct boundary parameters of a subset on one edge, used by boundary
/// scans.
pub fn interval_endpoints(s: &EdgeSubset) -> Vec<(crate::graph::EdgeId, Num)> {
    let mut out = Vec::new();
    for ei in &s.edges {
        let mut ts = Vec::new();
        for iv in &ei.intervals {
            ts.push(iv[0].clone());
            ts.push(iv[1].clone());
        }
        for t in sort_dedup(ts) {
            out.push((ei.edge, t));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, EdgeId, Vertex, VertexId};

    fn tripod(len: Num) -> MetricGraph {
        MetricGraph {
            metric: Metric::Geodesic,
            vertices: (0..4)
                .map(|i| Vertex {
                    id: VertexId(i),
                    x: None,
                    y: None,
                })
                .collect(),
            edges: (0..3)
                .map(|i| Edge {
                    id: EdgeId(i),
                    u: VertexId(0),
                    v: VertexId(i + 1),
                    length: len.clone(),
                })
                .collect(),
        }
    }

    #[test]
    fn totals_add_up() {
        let g = tripod(Num::ratio(1, 2));
        assert_eq!(h1_total(&g), Num::ratio(3, 2));
    }

    #[test]
    fn geodesic_ball_at_a_junction() {
        let g = tripod(Num::one());
        let b = ball_subset(&g, &PointRef::vertex(0), &Num::ratio(1, 4)).unwrap();
        assert_eq!(h1_of_subset(&g, &b).unwrap(), Num::ratio(3, 4));
        assert!(b.contains(&g, &PointRef::vertex(0)).unwrap());
        assert!(!b.contains(&g, &PointRef::vertex(1)).unwrap());
        // radius past the leaves saturates
        let b = ball_subset(&g, &PointRef::vertex(0), &Num::int(5)).unwrap();
        assert_eq!(h1_of_subset(&g, &b).unwrap(), Num::int(3));
    }

    #[test]
    fn geodesic_ball_wraps_around_interior_center() {
        let g = tripod(Num::one());
        let c = PointRef::on_edge(0, Num::ratio(3, 4));
        let b = ball_subset(&g, &c, &Num::ratio(1, 2)).unwrap();
        // reaches [1/4, 1] on edge 0 and 1/4 down the other two legs... no:
        // the junction is at distance 3/4 > 1/2, so only edge 0 contributes
        assert_eq!(h1_of_subset(&g, &b).unwrap(), Num::ratio(3, 4));
        let b = ball_subset(&g, &c, &Num::one()).unwrap();
        // all of edge 0 plus 1/4 into each of the other two legs
        assert_eq!(h1_of_subset(&g, &b).unwrap(), Num::ratio(3, 2));
        assert!(b.contains(&g, &PointRef::vertex(0)).unwrap());
    }

    #[test]
    fn ball_exactness_is_preserved() {
        let g = tripod(Num::ratio(1, 3));
        let b = ball_subset(&g, &PointRef::vertex(0), &Num::ratio(1, 7)).unwrap();
        let m = h1_of_subset(&g, &b).unwrap();
        assert!(m.is_exact());
        assert_eq!(m, Num::ratio(3, 7));
    }

    #[test]
    fn ambient_ball_at_an_edge_endpoint_is_exact() {
        // right angle at the origin
        let g = MetricGraph {
            metric: Metric::AmbientEuclidean,
            vertices: vec![
                Vertex {
                    id: VertexId(0),
                    x: Some(Num::zero()),
                    y: Some(Num::zero()),
                },
                Vertex {
                    id: VertexId(1),
                    x: Some(Num::one()),
                    y: Some(Num::zero()),
                },
                Vertex {
                    id: VertexId(2),
                    x: Some(Num::zero()),
                    y: Some(Num::one()),
                },
            ],
            edges: vec![
                Edge {
                    id: EdgeId(0),
                    u: VertexId(0),
                    v: VertexId(1),
                    length: Num::one(),
                },
                Edge {
                    id: EdgeId(1),
                    u: VertexId(0),
                    v: VertexId(2),
                    length: Num::one(),
                },
            ],
        };
        let b = ball_subset(&g, &PointRef::vertex(0), &Num::ratio(1, 3)).unwrap();
        let m = h1_of_subset(&g, &b).unwrap();
        assert!(m.is_exact());
        assert_eq!(m, Num::ratio(2, 3));
    }

    #[test]
    fn ambient_ball_reaches_across_a_corner() {
        // same right angle; center in the middle of the horizontal edge
        let g = MetricGraph {
            metric: Metric::AmbientEuclidean,
            vertices: vec![
                Vertex {
                    id: VertexId(0),
                    x: Some(Num::zero()),
                    y: Some(Num::zero()),
                },
                Vertex {
                    id: VertexId(1),
                    x: Some(Num::one()),
                    y: Some(Num::zero()),
                },
                Vertex {
                    id: VertexId(2),
                    x: Some(Num::zero()),
                    y: Some(Num::one()),
                },
            ],
            edges: vec![
                Edge {
                    id: EdgeId(0),
                    u: VertexId(0),
                    v: VertexId(1),
                    length: Num::one(),
                },
                Edge {
                    id: EdgeId(1),
                    u: VertexId(0),
                    v: VertexId(2),
                    length: Num::one(),
                },
            ],
        };
        let c = PointRef::on_edge(0, Num::ratio(1, 2));
        let b = ball_subset(&g, &c, &Num::ratio(3, 4)).unwrap();
        let m = h1_of_subset(&g, &b).unwrap();
        // horizontal: all of [0, 1]; vertical: {t : sqrt(1/4 + t^2) < 3/4}
        let expect = 1.0 + (9.0 / 16.0 - 0.25f64).sqrt();
        assert!((m.to_f64() - expect).abs() < 1e-9);
    }

    #[test]
    fn content_of_an_interior_point_and_a_junction() {
        let g = tripod(Num::one());
        let radii = radius_grid(&Num::ratio(1, 4), 3);
        let rep = codim1_content(
            &g,
            &[PointRef::on_edge(0, Num::ratio(1, 2)), PointRef::vertex(0)],
            &radii,
        )
        .unwrap();
        // interior point: 2r/r = 2; junction of degree 3: 3r/r = 3
        assert_eq!(rep.terms[0].ratio, Num::int(2));
        assert_eq!(rep.terms[1].ratio, Num::int(3));
        assert_eq!(rep.total, Num::int(5));
        let empty = codim1_content(&g, &[], &radii).unwrap();
        assert_eq!(empty.total, Num::zero());
    }
}
