//! Independent oracles for chain-shaped spaces.
//!
//! A chain (every vertex of degree at most two, no cycle) is an interval in
//! disguise, so variation can be computed by classical one-dimensional
//! bookkeeping with no gadget in sight.  The function along the chain is
//! flattened to a *station* sequence: at every piece boundary the left
//! limit, the pointwise value, and the right limit, in order.  Summing
//! consecutive differences of the limit stations gives the essential
//! variation in closed form; a quadratic dynamic program over disjoint
//! station spans gives the supremum over disjoint curve families.  These
//! deliberately share nothing with the gadget solvers beyond the function
//! type, which is what makes cross-checking them meaningful.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, PointRef, VertexId};
use crate::num::Num;
use crate::pl::{limit_in_pieces, piece_cuts, Approach, PiecewiseLinear};

/// A value the function takes or approaches at some spot along the chain.
/// Limit stations are approached, never attained, so two curves may nest
/// there: one ending at `x + d`, the next starting at `x + e`, `d < e`.  A
/// pointwise station is an actual point and belongs to at most one curve.
#[derive(Clone, Debug)]
pub struct Station {
    pub value: Num,
    pub limit: bool,
}

impl Station {
    fn lim(value: Num) -> Self {
        Station { value, limit: true }
    }
    fn at(value: Num) -> Self {
        Station {
            value,
            limit: false,
        }
    }
}

/// Edges of a chain in walking order; the flag marks reversed traversal.
pub fn chain_order(g: &MetricGraph) -> Result<Vec<(EdgeId, bool)>> {
    if g.edges.is_empty() {
        return Ok(Vec::new());
    }
    let mut incident: std::collections::BTreeMap<VertexId, Vec<(EdgeId, VertexId)>> =
        Default::default();
    for e in &g.edges {
        if e.u == e.v {
            return Err(Error::invalid_space("a chain has no loops"));
        }
        incident.entry(e.u).or_default().push((e.id, e.v));
        incident.entry(e.v).or_default().push((e.id, e.u));
    }
    if incident.values().any(|inc| inc.len() > 2) {
        return Err(Error::invalid_space("a chain has maximum degree two"));
    }
    let start = incident
        .iter()
        .find(|(_, inc)| inc.len() == 1)
        .map(|(v, _)| *v)
        .ok_or_else(|| Error::invalid_space("a chain has two endpoints"))?;
    let mut order = Vec::with_capacity(g.edges.len());
    let mut here = start;
    let mut prev: Option<EdgeId> = None;
    loop {
        let step = incident[&here]
            .iter()
            .find(|(e, _)| Some(*e) != prev)
            .copied();
        let Some((eid, to)) = step else { break };
        let e = g.edge(eid).expect("edge exists");
        order.push((eid, e.u != here));
        prev = Some(eid);
        here = to;
    }
    if order.len() != g.edges.len() {
        return Err(Error::invalid_space(
            "chain walk missed edges, space is not a chain",
        ));
    }
    Ok(order)
}

/// Full stations along the chain: left limit, pointwise value, right limit
/// at every piece boundary and override.
pub fn value_stations(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Vec<Station>> {
    stations(g, f, true)
}

/// Limit stations only.
pub fn limit_stations(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Vec<Station>> {
    stations(g, f, false)
}

fn stations(g: &MetricGraph, f: &PiecewiseLinear, with_values: bool) -> Result<Vec<Station>> {
    let mut out = Vec::new();
    let order = chain_order(g)?;
    for (step, (eid, rev)) in order.iter().enumerate() {
        let e = g.edge(*eid).unwrap();
        let ef = f.edge_fn(*eid)?;
        let mut cuts = piece_cuts(&ef.pieces);
        if with_values {
            for o in &f.overrides {
                if o.edge == *eid {
                    cuts.push(o.t.clone());
                }
            }
        }
        let mut cuts = crate::pl::sort_dedup(cuts);
        if *rev {
            cuts.reverse();
        }
        let (before, after) = if *rev {
            (Approach::FromAbove, Approach::FromBelow)
        } else {
            (Approach::FromBelow, Approach::FromAbove)
        };
        for (ci, t) in cuts.iter().enumerate() {
            let at_start = ci == 0;
            let at_end = ci + 1 == cuts.len();
            if !at_start {
                out.push(Station::lim(limit_in_pieces(&ef.pieces, t, before)));
            }
            if with_values {
                let value = if t.is_zero() || *t == e.length {
                    let vid = if *t == e.length { e.v } else { e.u };
                    f.vertex_value(g, vid)?
                } else {
                    f.value_at(
                        g,
                        &PointRef::OnEdge {
                            edge: *eid,
                            t: t.clone(),
                        },
                    )?
                };
                // interior vertices appear in both incident edges' walks;
                // emit their value only once, entering the later edge
                if !(at_end && step + 1 < order.len()) {
                    out.push(Station::at(value));
                }
            }
            if !at_end {
                out.push(Station::lim(limit_in_pieces(&ef.pieces, t, after)));
            }
        }
    }
    Ok(out)
}

/// Best total of `|s_j - s_i|` over families of disjoint station spans.  A
/// span consumes everything strictly between its end stations; consecutive
/// spans may share a boundary station only where it is a limit station,
/// one span ending there and the next starting there.
fn best_disjoint_spans(st: &[Station]) -> Num {
    let n = st.len();
    // one-based prefix arrays:
    //   d[j]     best using stations 1..=j
    //   start[j] best prefix total that leaves station j usable as a start
    //   end[j]   best prefix total whose last span ends exactly at j
    let mut d = vec![Num::zero(); n + 1];
    let mut start = vec![Num::zero(); n + 1];
    for j in 1..=n {
        let mut end_j: Option<Num> = None;
        for i in 1..j {
            let cand = &start[i] + &st[j - 1].value.abs_diff(&st[i - 1].value);
            if end_j.as_ref().map_or(true, |b| cand > *b) {
                end_j = Some(cand);
            }
        }
        d[j] = d[j - 1].clone();
        if let Some(e) = &end_j {
            if *e > d[j] {
                d[j] = e.clone();
            }
        }
        start[j] = d[j - 1].clone();
        if st[j - 1].limit {
            if let Some(e) = end_j {
                if e > start[j] {
                    start[j] = e;
                }
            }
        }
    }
    d[n].clone()
}

/// Pointwise variation of a chain by station dynamic programming.
pub fn pv_oracle_chain(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Num> {
    Ok(best_disjoint_spans(&value_stations(g, f)?))
}

/// Interior variation of a chain: stations restricted to limits.
pub fn iv_oracle_chain(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Num> {
    Ok(best_disjoint_spans(&limit_stations(g, f)?))
}

/// Partition variation of a chain: one curve through everything, so simply
/// the sum of consecutive station differences.
pub fn ppv_oracle_chain(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Num> {
    let st = value_stations(g, f)?;
    let mut total = Num::zero();
    for w in st.windows(2) {
        total = total + w[1].value.abs_diff(&w[0].value);
    }
    Ok(total)
}

/// Essential variation of a chain in closed form: consecutive differences
/// of the limit stations, jumps counted between one-sided limits.
pub fn essential_variation_chain(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Num> {
    let st = limit_stations(g, f)?;
    let mut total = Num::zero();
    for w in st.windows(2) {
        total = total + w[1].value.abs_diff(&w[0].value);
    }
    Ok(total)
}

/// Crude direct search: sample the chain on a refined grid, then brute
/// force one or two disjoint sample intervals scored by their endpoint
/// differences.  Always a valid curve family, hence a true lower bound.
pub fn direct_search_chain(g: &MetricGraph, f: &PiecewiseLinear, subdiv: usize) -> Result<Num> {
    let mut samples: Vec<Num> = Vec::new();
    for (eid, rev) in chain_order(g)? {
        let e = g.edge(eid).unwrap();
        let ef = f.edge_fn(eid)?;
        let mut cuts = piece_cuts(&ef.pieces);
        for o in &f.overrides {
            if o.edge == eid {
                cuts.push(o.t.clone());
            }
        }
        for k in 0..=subdiv as i64 {
            cuts.push(&e.length * &Num::ratio(k, subdiv as i64));
        }
        let mut cuts = crate::pl::sort_dedup(cuts);
        if rev {
            cuts.reverse();
        }
        for t in cuts {
            let p = if t.is_zero() || t == e.length {
                let vid = if t == e.length { e.v } else { e.u };
                PointRef::Vertex { vertex: vid }
            } else {
                PointRef::OnEdge { edge: eid, t }
            };
            samples.push(f.value_at(g, &p)?);
        }
    }
    let n = samples.len();
    // best_upto[j]: best single span within samples 0..=j
    let mut best_upto = vec![Num::zero(); n];
    for j in 0..n {
        if j > 0 {
            best_upto[j] = best_upto[j - 1].clone();
        }
        for i in 0..j {
            let v = samples[j].abs_diff(&samples[i]);
            if v > best_upto[j] {
                best_upto[j] = v;
            }
        }
    }
    let mut best = best_upto.last().cloned().unwrap_or_else(Num::zero);
    for k in 0..n {
        for l in (k + 2)..n {
            let v = &best_upto[k] + &samples[l].abs_diff(&samples[k + 1]);
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Metric, Vertex};
    use crate::pl::{EdgeFn, Override, Piece};
    use std::collections::BTreeMap;

    fn two_edge_chain() -> MetricGraph {
        MetricGraph {
            metric: Metric::Geodesic,
            vertices: (0..3)
                .map(|i| Vertex {
                    id: VertexId(i),
                    x: None,
                    y: None,
                })
                .collect(),
            edges: vec![
                Edge {
                    id: EdgeId(0),
                    u: VertexId(0),
                    v: VertexId(1),
                    length: Num::one(),
                },
                // second edge deliberately oriented against the walk
                Edge {
                    id: EdgeId(1),
                    u: VertexId(2),
                    v: VertexId(1),
                    length: Num::one(),
                },
            ],
        }
    }

    fn unit_interval() -> MetricGraph {
        MetricGraph {
            metric: Metric::Geodesic,
            vertices: (0..2)
                .map(|i| Vertex {
                    id: VertexId(i),
                    x: None,
                    y: None,
                })
                .collect(),
            edges: vec![Edge {
                id: EdgeId(0),
                u: VertexId(0),
                v: VertexId(1),
                length: Num::one(),
            }],
        }
    }

    #[test]
    fn chain_order_handles_reversed_edges() {
        let g = two_edge_chain();
        let order = chain_order(&g).unwrap();
        assert_eq!(order, vec![(EdgeId(0), false), (EdgeId(1), true)]);
    }

    #[test]
    fn stations_of_a_ramp_pair() {
        // 0 -> 1 on the first edge, then down to -1 at the far end
        let g = two_edge_chain();
        let f = PiecewiseLinear::linear_from_vertices(
            &g,
            &BTreeMap::from([
                (VertexId(0), Num::int(0)),
                (VertexId(1), Num::int(1)),
                (VertexId(2), Num::int(-1)),
            ]),
        )
        .unwrap();
        assert_eq!(pv_oracle_chain(&g, &f).unwrap(), Num::int(3));
        assert_eq!(iv_oracle_chain(&g, &f).unwrap(), Num::int(3));
        assert_eq!(ppv_oracle_chain(&g, &f).unwrap(), Num::int(3));
        assert_eq!(essential_variation_chain(&g, &f).unwrap(), Num::int(3));
        assert_eq!(direct_search_chain(&g, &f, 4).unwrap(), Num::int(3));
    }

    #[test]
    fn spike_splits_the_oracles() {
        let g = unit_interval();
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
        // the spiked point belongs to one curve only, so no doubling
        assert_eq!(pv_oracle_chain(&g, &f).unwrap(), Num::int(5));
        assert_eq!(iv_oracle_chain(&g, &f).unwrap(), Num::int(0));
        assert_eq!(ppv_oracle_chain(&g, &f).unwrap(), Num::int(10));
        assert_eq!(direct_search_chain(&g, &f, 4).unwrap(), Num::int(5));
    }

    #[test]
    fn jump_step_oracles() {
        let g = unit_interval();
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::int(0),
                        t1: Num::ratio(1, 2),
                        v0: Num::int(0),
                        v1: Num::int(0),
                    },
                    Piece {
                        t0: Num::ratio(1, 2),
                        t1: Num::int(1),
                        v0: Num::int(1),
                        v1: Num::int(1),
                    },
                ],
            }],
            vertex_values: BTreeMap::new(),
            overrides: vec![],
        };
        assert_eq!(pv_oracle_chain(&g, &f).unwrap(), Num::int(1));
        assert_eq!(iv_oracle_chain(&g, &f).unwrap(), Num::int(1));
        assert_eq!(essential_variation_chain(&g, &f).unwrap(), Num::int(1));
    }

    #[test]
    fn nested_curves_share_a_limit_station() {
        // rise to 4, then fall past a jump: the peak germ serves one curve's
        // end and the next curve's start, total 1 + 8 + 10
        let g = unit_interval();
        let f = PiecewiseLinear {
            edges: vec![EdgeFn {
                edge: EdgeId(0),
                pieces: vec![
                    Piece {
                        t0: Num::int(0),
                        t1: Num::ratio(1, 2),
                        v0: Num::int(3),
                        v1: Num::int(4),
                    },
                    Piece {
                        t0: Num::ratio(1, 2),
                        t1: Num::int(1),
                        v0: Num::int(-4),
                        v1: Num::int(6),
                    },
                ],
            }],
            vertex_values: BTreeMap::new(),
            overrides: vec![],
        };
        assert_eq!(pv_oracle_chain(&g, &f).unwrap(), Num::int(19));
        assert_eq!(iv_oracle_chain(&g, &f).unwrap(), Num::int(19));
        assert_eq!(essential_variation_chain(&g, &f).unwrap(), Num::int(19));
    }
}
