//! Built-in example spaces.
//!
//! The main family is a star of segments through one hub: `2^J` lines at
//! angles `k·π/2^J`, each realized as two opposite rays from the hub.  A
//! line's rays have length `2^(-2·j-1)` where `j = max(1, J - v2(k))` and
//! `v2` is the 2-adic valuation (`v2(0)` counts as infinite).  Coarse
//! directions are long, finely subdividing directions are short, so the hub
//! has finite measure density from every scale while its degree `2^(J+1)`
//! grows with `J`.  The marked subset picks the full rays of the lines at
//! angles `π/2^j`, `j = 1..J`: `2J` rays meeting only at the hub.
//!
//! Total length is exactly `3/4 - 2^(-J-1)` and the marked set has length
//! `(1 - 4^(-J)) / 3`.
//!
//! A seeded random generator produces graph-plus-function instances for
//! randomized comparisons against independent oracles.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, Metric, MetricGraph, Vertex, VertexId};
use crate::num::Num;
use crate::pl::{EdgeFn, Override, Piece, PiecewiseLinear};
use crate::subset::{EdgeIntervals, EdgeSubset};

pub const MAX_STAR_LEVELS: u32 = 12;

/// Hub vertex id of a star space.
pub const STAR_HUB: VertexId = VertexId(0);

fn check_levels(levels: u32) -> Result<()> {
    if levels == 0 || levels > MAX_STAR_LEVELS {
        return Err(Error::invalid_argument(format!(
            "star levels must be in 1..={MAX_STAR_LEVELS}, got {levels}"
        )));
    }
    Ok(())
}

fn v2(k: u32) -> u32 {
    debug_assert!(k > 0);
    k.trailing_zeros()
}

/// First subdivision level of line `k`: `max(1, J - v2(k))`.
fn line_level(levels: u32, k: u32) -> u32 {
    if k == 0 {
        1
    } else {
        (levels.saturating_sub(v2(k))).max(1)
    }
}

fn ray_length(levels: u32, k: u32) -> Num {
    Num::dyadic(1, 2 * line_level(levels, k) + 1)
}

/// Ray edge id for line `k` and side `s` (0: angle `kπ/2^J`, 1: opposite).
fn ray_edge(k: u32, s: u32) -> EdgeId {
    EdgeId(2 * k + s)
}

/// Builds the star with `2^(J+1)` rays.  Edges run from the hub (t = 0)
/// outward; in ambient mode tips carry exact coordinates on the axes and
/// `f64` coordinates elsewhere.
pub fn star_space(levels: u32, metric: Metric) -> Result<MetricGraph> {
    check_levels(levels)?;
    let lines = 1u32 << levels;
    let mut vertices = vec![Vertex {
        id: STAR_HUB,
        x: (metric == Metric::AmbientEuclidean).then(Num::zero),
        y: (metric == Metric::AmbientEuclidean).then(Num::zero),
    }];
    let mut edges = Vec::new();
    for k in 0..lines {
        let len = ray_length(levels, k);
        for s in 0..2u32 {
            let eid = ray_edge(k, s);
            let tip = VertexId(eid.0 + 1);
            let (x, y) = if metric == Metric::AmbientEuclidean {
                let quarter = lines / 2;
                // exact coordinates on the axes, f64 elsewhere
                let exact: Option<(Num, Num)> = match (k, s) {
                    (0, 0) => Some((len.clone(), Num::zero())),
                    (0, 1) => Some((-&len, Num::zero())),
                    (q, 0) if q == quarter => Some((Num::zero(), len.clone())),
                    (q, 1) if q == quarter => Some((Num::zero(), -&len)),
                    _ => None,
                };
                match exact {
                    Some((x, y)) => (Some(x), Some(y)),
                    None => {
                        let theta = k as f64 * std::f64::consts::PI / lines as f64
                            + s as f64 * std::f64::consts::PI;
                        let l = len.to_f64();
                        (
                            Some(Num::float(l * theta.cos())),
                            Some(Num::float(l * theta.sin())),
                        )
                    }
                }
            } else {
                (None, None)
            };
            vertices.push(Vertex { id: tip, x, y });
            edges.push(Edge {
                id: eid,
                u: STAR_HUB,
                v: tip,
                length: len.clone(),
            });
        }
    }
    Ok(MetricGraph {
        metric,
        vertices,
        edges,
    })
}

/// The marked subset: full rays of the lines at angles `π/2^j`, `j = 1..J`.
pub fn star_marked_set(levels: u32) -> Result<EdgeSubset> {
    check_levels(levels)?;
    let mut edges = Vec::new();
    for j in 1..=levels {
        let k = 1u32 << (levels - j);
        let len = ray_length(levels, k);
        debug_assert_eq!(line_level(levels, k), j);
        for s in 0..2u32 {
            edges.push(EdgeIntervals {
                edge: ray_edge(k, s),
                intervals: vec![[Num::zero(), len.clone()]],
            });
        }
    }
    Ok(EdgeSubset {
        edges,
        vertices: Vec::new(),
    })
}

/// Options for the seeded random instance generator.
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub vertices: u32,
    /// Extra non-tree edges; 0 keeps the graph a tree.
    pub extra_edges: u32,
    /// Chain instead of a random tree.
    pub path: bool,
    /// Max linear pieces per edge.
    pub max_pieces: u32,
    /// Chance that a breakpoint, vertex approach, or override carries a jump.
    pub jump_prob: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            vertices: 6,
            extra_edges: 0,
            path: false,
            max_pieces: 3,
            jump_prob: 0.3,
        }
    }
}

fn rand_dyadic(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_k: u32) -> Num {
    let k = rng.random_range(0..=max_k);
    let scale = 1i64 << k;
    let p = rng.random_range(lo * scale..=hi * scale);
    Num::dyadic(p, k)
}

/// Deterministic random graph plus function.  Geodesic metric only.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Result<(MetricGraph, PiecewiseLinear)> {
    if spec.vertices < 2 {
        return Err(Error::invalid_argument("need at least 2 vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.vertices;
    let vertices: Vec<Vertex> = (0..n)
        .map(|i| Vertex {
            id: VertexId(i),
            x: None,
            y: None,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = if spec.path {
            i - 1
        } else {
            rng.random_range(0..i)
        };
        edges.push(Edge {
            id: EdgeId(edges.len() as u32),
            u: VertexId(parent),
            v: VertexId(i),
            length: rand_dyadic(&mut rng, 1, 4, 3),
        });
    }
    for _ in 0..spec.extra_edges {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        if b == a {
            b = (b + 1) % n;
        }
        edges.push(Edge {
            id: EdgeId(edges.len() as u32),
            u: VertexId(a.min(b)),
            v: VertexId(a.max(b)),
            length: rand_dyadic(&mut rng, 1, 4, 3),
        });
    }
    let g = MetricGraph {
        metric: Metric::Geodesic,
        vertices,
        edges,
    };
    let f = synth_function(&mut rng, &g, spec);
    Ok((g, f))
}

/// A fresh random function on an existing graph, drawn from the same
/// distribution `random_instance` uses but from its own seed.
pub fn random_function(g: &MetricGraph, seed: u64, spec: &RandomSpec) -> PiecewiseLinear {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synth_function(&mut rng, g, spec)
}

fn synth_function(mut rng: &mut ChaCha8Rng, g: &MetricGraph, spec: &RandomSpec) -> PiecewiseLinear {
    let vertex_values: BTreeMap<VertexId, Num> = g
        .vertices
        .iter()
        .map(|v| (v.id, rand_dyadic(rng, -4, 4, 3)))
        .collect();
    let mut efs = Vec::new();
    let mut overrides = Vec::new();
    for e in &g.edges {
        let parts = rng.random_range(1..=spec.max_pieces.max(1));
        // distinct interior dyadic cut points
        let mut cuts: Vec<Num> = (0..parts - 1)
            .map(|_| {
                let denom = 16;
                let p = rng.random_range(1..denom);
                &e.length * &Num::ratio(p, denom)
            })
            .collect();
        cuts.push(Num::zero());
        cuts.push(e.length.clone());
        let cuts = crate::pl::sort_dedup(cuts);
        let mut pieces: Vec<Piece> = Vec::new();
        let start = if rng.random_bool(spec.jump_prob) {
            rand_dyadic(&mut rng, -4, 4, 3)
        } else {
            vertex_values[&e.u].clone()
        };
        let mut carry = start;
        for (i, w) in cuts.windows(2).enumerate() {
            let last = i + 2 == cuts.len();
            let v0 = carry.clone();
            let v1 = if last && !rng.random_bool(spec.jump_prob) {
                vertex_values[&e.v].clone()
            } else {
                rand_dyadic(&mut rng, -4, 4, 3)
            };
            pieces.push(Piece {
                t0: w[0].clone(),
                t1: w[1].clone(),
                v0,
                v1: v1.clone(),
            });
            carry = if rng.random_bool(spec.jump_prob) {
                rand_dyadic(&mut rng, -4, 4, 3)
            } else {
                v1
            };
        }
        if pieces.len() > 1 && rng.random_bool(spec.jump_prob) {
            let pick = rng.random_range(1..pieces.len());
            overrides.push(Override {
                edge: e.id,
                t: pieces[pick].t0.clone(),
                v: rand_dyadic(&mut rng, -4, 4, 3),
            });
        }
        efs.push(EdgeFn {
            edge: e.id,
            pieces,
        });
    }
    PiecewiseLinear {
        edges: efs,
        vertex_values,
        overrides,
    }
}

/// A parsed `--gallery` request.
#[derive(Clone, Debug)]
pub enum GallerySpec {
    Star { levels: u32, metric: Metric },
    Random { seed: u64, spec: RandomSpec },
}

impl FromStr for GallerySpec {
    type Err = String;

    /// `star:J=3,metric=geodesic` or
    /// `random:seed=1,n=6,extra=0,pieces=3,jumps=0.3,path=0`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::BTreeMap::new();
        if !rest.is_empty() {
            for part in rest.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| format!("bad gallery option '{part}'"))?;
                kv.insert(k.trim(), v.trim());
            }
        }
        match kind {
            "star" => {
                let levels: u32 = kv
                    .get("J")
                    .ok_or("star needs J=<levels>")?
                    .parse()
                    .map_err(|_| "bad J value".to_string())?;
                let metric = match kv.get("metric").copied().unwrap_or("geodesic") {
                    "geodesic" => Metric::Geodesic,
                    "ambient" | "ambient_euclidean" => Metric::AmbientEuclidean,
                    other => return Err(format!("unknown metric '{other}'")),
                };
                Ok(GallerySpec::Star { levels, metric })
            }
            "random" => {
                let mut spec = RandomSpec::default();
                let mut seed = 0u64;
                for (k, v) in kv {
                    match k {
                        "seed" => seed = v.parse().map_err(|_| "bad seed")?,
                        "n" => spec.vertices = v.parse().map_err(|_| "bad n")?,
                        "extra" => spec.extra_edges = v.parse().map_err(|_| "bad extra")?,
                        "pieces" => spec.max_pieces = v.parse().map_err(|_| "bad pieces")?,
                        "jumps" => spec.jump_prob = v.parse().map_err(|_| "bad jumps")?,
                        "path" => spec.path = v == "1" || v == "true",
                        other => return Err(format!("unknown random option '{other}'")),
                    }
                }
                Ok(GallerySpec::Random { seed, spec })
            }
            other => Err(format!("unknown gallery family '{other}'")),
        }
    }
}
