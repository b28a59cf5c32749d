//! Variation of piecewise linear functions on metric graphs.
//!
//! Three quantities are computed, all as suprema over families of disjoint
//! injective curves:
//!
//! * pointwise variation (`pv`): curves are pairwise disjoint and each
//!   contributes the absolute difference of the function values at its two
//!   endpoints;
//! * partition variation (`PV`): same curve families, but each curve
//!   contributes its full one-dimensional variation along the way;
//! * interior variation (`iv`): curves may share critical points but not
//!   germs, and curve endpoints sit on germs, so pointwise values at
//!   critical points never matter.
//!
//! The supremum over actual curve families reduces to an exact
//! combinatorial optimum over the gadget of [`gadget::build_gadget`]: arcs
//! are simple paths of gadget nodes and every gadget resource (germ anchor
//! or segment body) is used at most once.  On acyclic spaces the rooted
//! dynamic program in `solve_tree` is exact and fast; otherwise a
//! branch-and-bound over candidate arcs takes over, still exact, with a
//! size cap to keep it honest.

pub mod gadget;
pub mod reference;
mod solve_bb;
mod solve_tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, PointRef};
use crate::num::Num;
use crate::pl::{germs_at, jump_candidates, Approach, PiecewiseLinear};
use crate::subset::EdgeSubset;
use gadget::{build_gadget, GNode, Gadget, Side};

/// Which variation functional to maximize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "pv")]
    Pointwise,
    #[serde(rename = "PV")]
    Partition,
    #[serde(rename = "iv")]
    Interior,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pv" => Ok(Mode::Pointwise),
            "PV" => Ok(Mode::Partition),
            "iv" => Ok(Mode::Interior),
            other => Err(Error::invalid_argument(format!(
                "unknown variation mode {other:?}, expected pv, PV, or iv"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Pointwise => "pv",
            Mode::Partition => "PV",
            Mode::Interior => "iv",
        })
    }
}

/// Solver limits.
#[derive(Clone, Debug)]
pub struct SolveOpts {
    /// Largest segment count the branch-and-bound will attempt; beyond it
    /// the solve refuses with a cap error.  Acyclic spaces ignore this.
    pub cap_segments: usize,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts { cap_segments: 48 }
    }
}

/// One stop of an arc, reported in user coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcNode {
    /// A critical point, visited with its pointwise value.
    Point { at: PointRef, value: Num },
    /// A one-sided germ at a segment end, carrying the one-sided limit.
    Germ {
        edge: EdgeId,
        t: Num,
        approach: Approach,
        limit: Num,
    },
}

/// One maximizing curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Arc {
    pub value: Num,
    pub nodes: Vec<ArcNode>,
}

/// A maximizing family of curves together with its total.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcSystem {
    pub mode: Mode,
    pub total: Num,
    pub arcs: Vec<Arc>,
}

/// Solver-internal result: arcs as gadget node paths.
pub(crate) struct RawSystem {
    pub(crate) total: Num,
    pub(crate) arcs: Vec<Vec<GNode>>,
}

/// Recomputes the objective of a family of gadget paths from scratch.
pub(crate) fn system_value(gg: &Gadget, mode: Mode, arcs: &[Vec<GNode>]) -> Num {
    let mut total = Num::zero();
    for arc in arcs {
        total = total + arc_value(gg, mode, arc);
    }
    total
}

pub(crate) fn arc_value(gg: &Gadget, mode: Mode, arc: &[GNode]) -> Num {
    match mode {
        Mode::Pointwise | Mode::Interior => {
            let a = gg.node_value(arc[0]);
            let b = gg.node_value(arc[arc.len() - 1]);
            a.abs_diff(b)
        }
        Mode::Partition => {
            let mut v = Num::zero();
            for w in arc.windows(2) {
                let e = gg
                    .edge_between(w[0], w[1])
                    .expect("consecutive arc nodes are adjacent");
                v = v + gg.edge_weight(e);
            }
            v
        }
    }
}

/// Computes a maximizing curve family for `mode`.
pub fn variation_solve(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    mode: Mode,
    opts: &SolveOpts,
) -> Result<ArcSystem> {
    let gg = build_gadget(g, f)?;
    let raw = match solve_tree::solve_tree(&gg, mode) {
        Some(raw) => raw,
        None => {
            if gg.segments.len() > opts.cap_segments {
                return Err(Error::CapExceeded {
                    what: format!(
                        "cyclic space with {} segments needs branch and bound",
                        gg.segments.len()
                    ),
                    cap: opts.cap_segments,
                });
            }
            solve_bb::solve_bb(&gg, mode)?
        }
    };
    Ok(describe(&gg, mode, raw))
}

/// Total variation in a given mode, discarding the arcs.
pub fn variation_total(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    mode: Mode,
    opts: &SolveOpts,
) -> Result<Num> {
    Ok(variation_solve(g, f, mode, opts)?.total)
}

/// Forces the branch-and-bound search even where the tree program applies.
/// Exponential in the worst case; meant for cross-checking the fast path on
/// small instances, so the same cap applies regardless of shape.
pub fn variation_solve_exhaustive(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    mode: Mode,
    opts: &SolveOpts,
) -> Result<ArcSystem> {
    let gg = build_gadget(g, f)?;
    if gg.segments.len() > opts.cap_segments {
        return Err(Error::CapExceeded {
            what: format!("exhaustive solve over {} segments", gg.segments.len()),
            cap: opts.cap_segments,
        });
    }
    let raw = solve_bb::solve_bb(&gg, mode)?;
    Ok(describe(&gg, mode, raw))
}

/// Number of elementary segments the solvers would work over: affine runs
/// of `f` between consecutive critical points.
pub fn segment_count(g: &MetricGraph, f: &PiecewiseLinear) -> Result<usize> {
    Ok(build_gadget(g, f)?.segments.len())
}

fn describe(gg: &Gadget, mode: Mode, raw: RawSystem) -> ArcSystem {
    let mut arcs: Vec<Arc> = raw
        .arcs
        .iter()
        .map(|path| Arc {
            value: arc_value(gg, mode, path),
            nodes: path.iter().map(|n| describe_node(gg, *n)).collect(),
        })
        .filter(|a| a.value.is_positive())
        .collect();
    arcs.sort_by(|a, b| b.value.cmp(&a.value));
    ArcSystem {
        mode,
        total: raw.total,
        arcs,
    }
}

fn describe_node(gg: &Gadget, n: GNode) -> ArcNode {
    match n {
        GNode::P(i) => ArcNode::Point {
            at: gg.points[i].at.clone(),
            value: gg.points[i].value.clone(),
        },
        GNode::H(s, side) => {
            let seg = &gg.segments[s];
            let (t, approach, limit) = match side {
                Side::Lo => (seg.t0.clone(), Approach::FromAbove, seg.lim_lo.clone()),
                Side::Hi => (seg.t1.clone(), Approach::FromBelow, seg.lim_hi.clone()),
            };
            ArcNode::Germ {
                edge: seg.edge,
                t,
                approach,
                limit,
            }
        }
    }
}

/// Checks that a reported system is feasible for its mode and that its
/// numbers are internally consistent.  Rebuilds the gadget independently of
/// whichever solver produced the report.
pub fn validate_system(g: &MetricGraph, f: &PiecewiseLinear, sys: &ArcSystem) -> Result<()> {
    let gg = build_gadget(g, f)?;
    let fail = |msg: String| Err(Error::invalid_argument(format!("arc system: {msg}")));

    let mut used_edges = std::collections::BTreeSet::new();
    let mut point_visits = vec![0usize; gg.points.len()];
    let mut total = Num::zero();
    for (ai, arc) in sys.arcs.iter().enumerate() {
        if arc.nodes.len() < 2 {
            return fail(format!("arc {ai} has fewer than two nodes"));
        }
        let path: Vec<GNode> = arc
            .nodes
            .iter()
            .map(|n| resolve_node(&gg, n))
            .collect::<Result<_>>()?;
        let mut seen = std::collections::BTreeSet::new();
        for n in &path {
            if !seen.insert(*n) {
                return fail(format!("arc {ai} revisits a node"));
            }
            if let GNode::P(i) = n {
                point_visits[*i] += 1;
            }
        }
        for w in path.windows(2) {
            let e = match gg.edge_between(w[0], w[1]) {
                Some(e) => e,
                None => return fail(format!("arc {ai} jumps between non-adjacent nodes")),
            };
            if !used_edges.insert(gg.edge_index(e)) {
                return fail(format!("arc {ai} reuses a segment resource"));
            }
        }
        if sys.mode == Mode::Interior {
            for end in [&path[0], &path[path.len() - 1]] {
                if matches!(end, GNode::P(_)) {
                    return fail(format!("arc {ai} of an interior system ends at a point"));
                }
            }
        }
        let v = arc_value(&gg, sys.mode, &path);
        if !v.approx_eq(&arc.value) {
            return fail(format!("arc {ai} reports value {} but has {v}", arc.value));
        }
        total = total + v;
    }
    if sys.mode != Mode::Interior {
        if let Some(i) = point_visits.iter().position(|&c| c > 1) {
            return fail(format!(
                "point {} is visited by more than one arc",
                gg.points[i].at
            ));
        }
    }
    if total > sys.total.clone() + Num::float(1e-9) {
        return fail(format!("arcs sum to {total}, more than the reported {}", sys.total));
    }
    if !total.approx_eq(&sys.total) {
        return fail(format!("arcs sum to {total}, reported total is {}", sys.total));
    }
    Ok(())
}

fn resolve_node(gg: &Gadget, n: &ArcNode) -> Result<GNode> {
    match n {
        ArcNode::Point { at, value } => {
            for (i, p) in gg.points.iter().enumerate() {
                if p.at == *at {
                    if !p.value.approx_eq(value) {
                        return Err(Error::invalid_argument(format!(
                            "arc system: point {at} carries value {value}, function has {}",
                            p.value
                        )));
                    }
                    return Ok(GNode::P(i));
                }
            }
            Err(Error::invalid_argument(format!(
                "arc system: {at} is not a critical point"
            )))
        }
        ArcNode::Germ {
            edge,
            t,
            approach,
            limit,
        } => {
            for (s, seg) in gg.segments.iter().enumerate() {
                if seg.edge != *edge {
                    continue;
                }
                let hit = match approach {
                    Approach::FromAbove if seg.t0 == *t => Some((Side::Lo, &seg.lim_lo)),
                    Approach::FromBelow if seg.t1 == *t => Some((Side::Hi, &seg.lim_hi)),
                    _ => None,
                };
                if let Some((side, lim)) = hit {
                    if !lim.approx_eq(limit) {
                        return Err(Error::invalid_argument(format!(
                            "arc system: germ on edge {edge} at {t} carries limit {limit}, function has {lim}"
                        )));
                    }
                    return Ok(GNode::H(s, side));
                }
            }
            Err(Error::invalid_argument(format!(
                "arc system: no segment end on edge {edge} at {t}"
            )))
        }
    }
}

/// The representative with all overrides dropped and every vertex set to
/// the limit along its first germ in canonical order.  Interior values
/// already default to one-sided limits, so the result takes a limit value
/// at every point and jump sizes are as small as relabeling can make them.
pub fn good_representative(g: &MetricGraph, f: &PiecewiseLinear) -> Result<PiecewiseLinear> {
    let mut out = f.clone();
    out.overrides.clear();
    for v in &g.vertices {
        let germs = germs_at(g, &PointRef::Vertex { vertex: v.id })?;
        if let Some(germ) = germs.first() {
            let lim = f.germ_limit(g, germ)?;
            out.vertex_values.insert(v.id, lim);
        }
        // isolated vertices keep their stored value
    }
    Ok(out)
}

/// Total variation of the function's best representative: relabeling a
/// function on a null set cannot drop the variation below this number, and
/// the good representative attains it.
pub fn var_total(g: &MetricGraph, f: &PiecewiseLinear, opts: &SolveOpts) -> Result<Num> {
    let rep = good_representative(g, f)?;
    variation_total(g, &rep, Mode::Pointwise, opts)
}

/// A discontinuity point with its pointwise value, one-sided limits, and
/// jump size (the widest gap among limits and value).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpRecord {
    pub point: PointRef,
    pub value: Num,
    pub limits: Vec<Num>,
    pub jump: Num,
}

/// All discontinuity points of `f`, in canonical point order.
pub fn discontinuities(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Vec<JumpRecord>> {
    let mut out = Vec::new();
    for p in jump_candidates(g, f) {
        let jump = f.jump_at(g, &p)?;
        if jump.is_positive() {
            out.push(JumpRecord {
                value: f.value_at(g, &p)?,
                limits: f.limits_at(g, &p)?,
                jump,
                point: p,
            });
        }
    }
    Ok(out)
}

/// Discontinuity points whose jump size reaches the threshold.
pub fn jump_points(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    kappa: &Num,
) -> Result<Vec<JumpRecord>> {
    if !kappa.is_positive() {
        return Err(Error::invalid_argument(
            "jump threshold must be positive",
        ));
    }
    let mut out = discontinuities(g, f)?;
    out.retain(|r| &r.jump >= kappa);
    Ok(out)
}

/// The two-sided truncation pair: `min(f, t)` and `f` clamped into
/// `[t, t + r]`.  Splitting a function this way never gains variation, so
/// the pieces bound the variation of `min(f, t + r)` from below.
pub fn truncate(
    f: &PiecewiseLinear,
    t: &Num,
    r: &Num,
) -> Result<(PiecewiseLinear, PiecewiseLinear)> {
    if r.is_negative() {
        return Err(Error::invalid_argument(
            "truncation width must be nonnegative",
        ));
    }
    Ok((f.truncate_above(t), f.clamp_band(t, &(t + r))))
}

/// Variation of `f` restricted to a subset, in the subset's own geometry.
pub fn local_variation(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    set: &EdgeSubset,
    mode: Mode,
    opts: &SolveOpts,
) -> Result<Num> {
    let (rg, rf) = f.restrict_to_subset(g, set)?;
    if rg.edges.is_empty() {
        return Ok(Num::zero());
    }
    variation_total(&rg, &rf, mode, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Metric, Vertex, VertexId};
    use crate::pl::{EdgeFn, Override, Piece};
    use std::collections::BTreeMap;

    fn path_graph(lengths: &[Num]) -> MetricGraph {
        let vertices = (0..=lengths.len() as u32)
            .map(|i| Vertex {
                id: VertexId(i),
                x: None,
                y: None,
            })
            .collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, l)| Edge {
                id: EdgeId(i as u32),
                u: VertexId(i as u32),
                v: VertexId(i as u32 + 1),
                length: l.clone(),
            })
            .collect();
        MetricGraph {
            metric: Metric::Geodesic,
            vertices,
            edges,
        }
    }

    fn solve(g: &MetricGraph, f: &PiecewiseLinear, mode: Mode) -> ArcSystem {
        let sys = variation_solve(g, f, mode, &SolveOpts::default()).unwrap();
        validate_system(g, f, &sys).unwrap();
        sys
    }

    #[test]
    fn identity_ramp_has_unit_variation() {
        let g = path_graph(&[Num::one()]);
        let f = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::int(0)), (VertexId(1), Num::int(1))]),
        )
        .unwrap();
        for mode in [Mode::Pointwise, Mode::Partition, Mode::Interior] {
            let sys = solve(&g, &f, mode);
            assert_eq!(sys.total, Num::one(), "mode {mode}");
            assert_eq!(sys.arcs.len(), 1);
        }
    }

    #[test]
    fn dip_and_crossing_share_a_segment() {
        // constant 10 up to the middle, value 10 held at the breakpoint,
        // then a fresh ramp from 0 to 1: the maximizer needs a terminal dip
        // (10) plus a curve across the rest of the same stretch (1)
        let g = path_graph(&[Num::int(2)]);
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::int(0),
                        t1: Num::int(1),
                        v0: Num::int(10),
                        v1: Num::int(10),
                    },
                    Piece {
                        t0: Num::int(1),
                        t1: Num::int(2),
                        v0: Num::int(0),
                        v1: Num::int(1),
                    },
                ],
            }],
            vertex_values: BTreeMap::new(),
            overrides: vec![Override {
                edge: EdgeId(0),
                t: Num::int(1),
                v: Num::int(10),
            }],
        };
        let sys = solve(&g, &f, Mode::Pointwise);
        assert_eq!(sys.total, Num::int(11));
        assert_eq!(solve(&g, &f, Mode::Partition).total, Num::int(11));
        assert_eq!(solve(&g, &f, Mode::Interior).total, Num::int(11));
    }

    #[test]
    fn zigzag_counts_every_run() {
        let g = path_graph(&[Num::one()]);
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::int(0),
                        t1: Num::ratio(1, 3),
                        v0: Num::int(0),
                        v1: Num::int(1),
                    },
                    Piece {
                        t0: Num::ratio(1, 3),
                        t1: Num::ratio(2, 3),
                        v0: Num::int(1),
                        v1: Num::int(0),
                    },
                    Piece {
                        t0: Num::ratio(2, 3),
                        t1: Num::int(1),
                        v0: Num::int(0),
                        v1: Num::int(1),
                    },
                ],
            }],
            vertex_values: BTreeMap::new(),
            overrides: vec![],
        };
        for mode in [Mode::Pointwise, Mode::Partition, Mode::Interior] {
            assert_eq!(solve(&g, &f, mode).total, Num::int(3), "mode {mode}");
        }
    }

    #[test]
    fn isolated_spike_modes_disagree() {
        // zero everywhere except a single overridden point of height 5
        let g = path_graph(&[Num::one()]);
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![Piece {
                    t0: Num::int(0),
                    t1: Num::int(1),
                    v0: Num::int(0),
                    v1: Num::int(0),
                }],
            }],
            vertex_values: BTreeMap::new(),
            overrides: vec![Override {
                edge: EdgeId(0),
                t: Num::ratio(1, 2),
                v: Num::int(5),
            }],
        };
        assert_eq!(solve(&g, &f, Mode::Pointwise).total, Num::int(5));
        assert_eq!(solve(&g, &f, Mode::Partition).total, Num::int(10));
        assert_eq!(solve(&g, &f, Mode::Interior).total, Num::int(0));
        // the spike is invisible to the best representative
        assert_eq!(var_total(&g, &f, &SolveOpts::default()).unwrap(), Num::int(0));
    }

    #[test]
    fn good_representative_clears_removable_jumps() {
        let g = path_graph(&[Num::one()]);
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![Piece {
                    t0: Num::int(0),
                    t1: Num::int(1),
                    v0: Num::int(2),
                    v1: Num::int(3),
                }],
            }],
            vertex_values: BTreeMap::from([
                (VertexId(0), Num::int(7)),
                (VertexId(1), Num::int(3)),
            ]),
            overrides: vec![],
        };
        // raw: the vertex label 7 against the limit 2 costs 5 extra
        assert_eq!(solve(&g, &f, Mode::Pointwise).total, Num::int(6));
        let rep = good_representative(&g, &f).unwrap();
        assert_eq!(rep.vertex_values[&VertexId(0)], Num::int(2));
        assert_eq!(solve(&g, &rep, Mode::Pointwise).total, Num::int(1));
        assert!(discontinuities(&g, &rep).unwrap().is_empty());
        assert_eq!(discontinuities(&g, &f).unwrap().len(), 1);
        // threshold filtering keeps only jumps of at least the given size
        assert_eq!(jump_points(&g, &f, &Num::int(5)).unwrap().len(), 1);
        assert!(jump_points(&g, &f, &Num::int(6)).unwrap().is_empty());
        assert!(jump_points(&g, &f, &Num::int(0)).is_err());
    }

    #[test]
    fn marked_star_rays_pv_vs_iv() {
        for levels in [1u32, 2, 3] {
            let g = crate::gallery::star_space(levels, Metric::Geodesic).unwrap();
            let e = crate::gallery::star_marked_set(levels).unwrap();
            let chi = crate::subset::indicator(&g, &e).unwrap();
            let pv = solve(&g, &chi, Mode::Pointwise);
            assert_eq!(pv.total, Num::one(), "levels {levels}");
            let iv = solve(&g, &chi, Mode::Interior);
            assert_eq!(iv.total, Num::int(2 * levels as i64), "levels {levels}");
        }
    }

    #[test]
    fn parallel_edges_fall_to_branch_and_bound() {
        // two parallel unit edges, both ramping 0 to 1: two disjoint curves
        let mut g = path_graph(&[Num::one()]);
        g.edges.push(Edge {
            id: EdgeId(1),
            u: VertexId(0),
            v: VertexId(1),
            length: Num::one(),
        });
        let f = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::int(0)), (VertexId(1), Num::int(1))]),
        )
        .unwrap();
        for mode in [Mode::Pointwise, Mode::Partition, Mode::Interior] {
            assert_eq!(solve(&g, &f, mode).total, Num::int(2), "mode {mode}");
        }
    }

    #[test]
    fn self_loop_tent() {
        let g = MetricGraph {
            metric: Metric::Geodesic,
            vertices: vec![Vertex {
                id: VertexId(0),
                x: None,
                y: None,
            }],
            edges: vec![Edge {
                id: EdgeId(0),
                u: VertexId(0),
                v: VertexId(0),
                length: Num::one(),
            }],
        };
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::int(0),
                        t1: Num::ratio(1, 2),
                        v0: Num::int(0),
                        v1: Num::int(1),
                    },
                    Piece {
                        t0: Num::ratio(1, 2),
                        t1: Num::int(1),
                        v0: Num::int(1),
                        v1: Num::int(0),
                    },
                ],
            }],
            vertex_values: BTreeMap::from([(VertexId(0), Num::int(0))]),
            overrides: vec![],
        };
        assert_eq!(solve(&g, &f, Mode::Pointwise).total, Num::int(2));
        assert_eq!(solve(&g, &f, Mode::Interior).total, Num::int(2));
    }

    #[test]
    fn cap_blocks_oversized_cyclic_solves() {
        let mut g = path_graph(&[Num::one()]);
        g.edges.push(Edge {
            id: EdgeId(1),
            u: VertexId(0),
            v: VertexId(1),
            length: Num::one(),
        });
        let f = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::int(0)), (VertexId(1), Num::int(1))]),
        )
        .unwrap();
        let opts = SolveOpts { cap_segments: 1 };
        match variation_solve(&g, &f, Mode::Pointwise, &opts) {
            Err(Error::CapExceeded { cap, .. }) => assert_eq!(cap, 1),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn local_variation_of_a_slice() {
        let g = path_graph(&[Num::one()]);
        let f = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([(VertexId(0), Num::int(0)), (VertexId(1), Num::int(4))]),
        )
        .unwrap();
        let mut set = EdgeSubset::empty();
        set.edges.push(crate::subset::EdgeIntervals {
            edge: EdgeId(0),
            intervals: vec![[Num::ratio(1, 4), Num::ratio(1, 2)]],
        });
        let v = local_variation(&g, &f, &set, Mode::Pointwise, &SolveOpts::default()).unwrap();
        assert_eq!(v, Num::one());
    }

    #[test]
    fn random_chains_match_station_oracles() {
        let spec = crate::gallery::RandomSpec {
            vertices: 5,
            extra_edges: 0,
            path: true,
            max_pieces: 3,
            jump_prob: 0.4,
        };
        for seed in 0..60u64 {
            let (g, f) = crate::gallery::random_instance(seed, &spec).unwrap();
            let pv = solve(&g, &f, Mode::Pointwise).total;
            let ppv = solve(&g, &f, Mode::Partition).total;
            let iv = solve(&g, &f, Mode::Interior).total;
            assert_eq!(pv, reference::pv_oracle_chain(&g, &f).unwrap(), "seed {seed}");
            assert_eq!(ppv, reference::ppv_oracle_chain(&g, &f).unwrap(), "seed {seed}");
            assert_eq!(iv, reference::iv_oracle_chain(&g, &f).unwrap(), "seed {seed}");
            // ordering along a chain: fewer stations, fewer options
            assert!(iv <= pv, "seed {seed}");
            assert!(pv <= ppv && ppv <= Num::int(2) * &pv, "seed {seed}");
            // sampled families are genuine families
            let direct = reference::direct_search_chain(&g, &f, 4).unwrap();
            assert!(direct <= pv, "seed {seed}");
            // relabeling on a null set: the best representative's variation
            // only sees the one-sided limits
            let vt = var_total(&g, &f, &SolveOpts::default()).unwrap();
            assert_eq!(
                vt,
                reference::essential_variation_chain(&g, &f).unwrap(),
                "seed {seed}"
            );
            assert!(vt <= pv, "seed {seed}");
        }
    }

    #[test]
    fn random_trees_agree_across_solvers() {
        let spec = crate::gallery::RandomSpec {
            vertices: 4,
            extra_edges: 0,
            path: false,
            max_pieces: 2,
            jump_prob: 0.35,
        };
        for seed in 0..25u64 {
            let (g, f) = crate::gallery::random_instance(seed, &spec).unwrap();
            let gg = build_gadget(&g, &f).unwrap();
            for mode in [Mode::Pointwise, Mode::Partition, Mode::Interior] {
                let tree = solve_tree::solve_tree(&gg, mode).expect("tree gadget");
                let bb = solve_bb::solve_bb(&gg, mode).unwrap();
                assert_eq!(tree.total, bb.total, "seed {seed} mode {mode}");
                let sys = solve(&g, &f, mode);
                assert_eq!(sys.total, tree.total, "seed {seed} mode {mode}");
            }
        }
    }

    #[test]
    fn random_cyclic_instances_stay_consistent() {
        let spec = crate::gallery::RandomSpec {
            vertices: 4,
            extra_edges: 1,
            path: false,
            max_pieces: 2,
            jump_prob: 0.3,
        };
        for seed in 0..15u64 {
            let (g, f) = crate::gallery::random_instance(seed, &spec).unwrap();
            let pv = solve(&g, &f, Mode::Pointwise).total;
            let ppv = solve(&g, &f, Mode::Partition).total;
            solve(&g, &f, Mode::Interior);
            assert!(pv <= ppv && ppv <= Num::int(2) * &pv, "seed {seed}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = crate::gallery::RandomSpec::default();
        let (g, f) = crate::gallery::random_instance(7, &spec).unwrap();
        let a = serde_json::to_string(&solve(&g, &f, Mode::Pointwise)).unwrap();
        let b = serde_json::to_string(&solve(&g, &f, Mode::Pointwise)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mode_strings_round_trip() {
        for (s, m) in [
            ("pv", Mode::Pointwise),
            ("PV", Mode::Partition),
            ("iv", Mode::Interior),
        ] {
            assert_eq!(s.parse::<Mode>().unwrap(), m);
            assert_eq!(m.to_string(), s);
        }
        assert!("Pv".parse::<Mode>().is_err());
    }
}
