//! Gradient-measure estimates built on top of the variation solver.
//!
//! The variation of a function bounds the mass of its gradient measure from
//! below but not from above, and on spaces with bad density profiles the
//! two quantities genuinely diverge.  This module brackets the mass from
//! both sides: the lower end combines the variation with its
//! interior-disjoint strengthening, the upper end charges each jump a
//! median relabeling cost plus the slope integral.  Around sets it extracts
//! boundary points and converts ball-density scans into perimeter bounds,
//! and for functions it runs the coarea sweep over superlevel sets and the
//! jump-smoothing construction whose output certifies the bracket
//! constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, PointRef};
use crate::measure::{ball_subset, h1_of_subset, radius_grid};
use crate::num::Num;
use crate::pl::{germs_at, inner_distance_fn, piece_cuts, Approach, PiecewiseLinear};
use crate::subset::{indicator, superlevel, EdgeSubset};
use crate::variation::{
    discontinuities, good_representative, reference, var_total, variation_solve, variation_total,
    ArcSystem, Mode, SolveOpts,
};

/// Number of dyadic halvings a density scan descends below its seed scale.
const SCAN_HALVINGS: u32 = 20;

/// Points where a set meets its complement in every neighborhood, after
/// canonicalizing membership on null sets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveBoundary {
    pub points: Vec<PointRef>,
    pub count: usize,
}

/// All points whose neighborhoods always meet both the set and its
/// complement: interval endpoints interior to edges, plus vertices whose
/// incident germs mix membership.
pub fn curve_boundary(g: &MetricGraph, set: &EdgeSubset) -> Result<CurveBoundary> {
    let chi = indicator(g, set)?;
    let rep = good_representative(g, &chi)?;
    let points: Vec<PointRef> = discontinuities(g, &rep)?
        .into_iter()
        .map(|r| r.point)
        .collect();
    let count = points.len();
    Ok(CurveBoundary { points, count })
}

/// One boundary point's contribution to a perimeter bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerimeterTerm {
    pub point: PointRef,
    pub radius: Num,
    pub ratio: Num,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerimeterBound {
    pub bound: Num,
    pub terms: Vec<PerimeterTerm>,
}

/// Bounds the perimeter of a set by covering its boundary points with small
/// balls: summing `measure(B(x, r)) / r` over the boundary dominates the
/// gradient mass of the indicator whenever the ratios stay below the
/// density constant.  Each point scans dyadic radii seeded at its smallest
/// incident membership-constant stretch; the reported bound is the best
/// whole-scale total.
pub fn perimeter_upper_bound(
    g: &MetricGraph,
    set: &EdgeSubset,
    c0: &Num,
) -> Result<PerimeterBound> {
    if !c0.is_positive() {
        return Err(Error::invalid_argument("density constant must be positive"));
    }
    let chi = indicator(g, set)?;
    let rep = good_representative(g, &chi)?;
    let boundary = curve_boundary(g, set)?;
    if boundary.points.is_empty() {
        return Ok(PerimeterBound {
            bound: Num::zero(),
            terms: Vec::new(),
        });
    }
    let mut grids: Vec<Vec<Num>> = Vec::new();
    let mut ratios: Vec<Vec<Num>> = Vec::new();
    for p in &boundary.points {
        let seed = local_gap(g, &rep, p)?;
        let grid = radius_grid(&seed, SCAN_HALVINGS);
        let mut row = Vec::with_capacity(grid.len());
        for r in &grid {
            let mass = h1_of_subset(g, &ball_subset(g, p, r)?)?;
            row.push(&mass / r);
        }
        let best = row.iter().min().expect("nonempty scan");
        if best >= c0 {
            return Err(Error::DensityPrecondition {
                context: format!("boundary point {p}"),
                best_ratio: best.to_f64(),
                needed: c0.to_f64(),
            });
        }
        grids.push(grid);
        ratios.push(row);
    }
    let scales = ratios[0].len();
    let mut best: Option<(usize, Num)> = None;
    for i in 0..scales {
        let mut total = Num::zero();
        for row in &ratios {
            total = total + row[i].clone();
        }
        if best.as_ref().map_or(true, |(_, b)| total < *b) {
            best = Some((i, total));
        }
    }
    let (i, bound) = best.expect("at least one scale");
    let terms = boundary
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| PerimeterTerm {
            point: p.clone(),
            radius: grids[j][i].clone(),
            ratio: ratios[j][i].clone(),
        })
        .collect();
    Ok(PerimeterBound { bound, terms })
}

/// The cheapest relabeling cost of one jump: incident one-sided limits and
/// the minimum of `sum |L_i - c|` over values `c`, attained at a median.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpCost {
    pub point: PointRef,
    pub limits: Vec<Num>,
    pub cost: Num,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerWitness {
    pub var_value: Num,
    pub interior_system: ArcSystem,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperWitness {
    pub edge_integral: Num,
    pub jump_costs: Vec<JumpCost>,
}

/// Two-sided bracket for the gradient-measure mass of a function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TvBracket {
    pub lower: Num,
    pub upper: Num,
    pub lower_witness: LowerWitness,
    pub upper_witness: UpperWitness,
}

/// Brackets the gradient mass: from below by the larger of the variation
/// and the interior-disjoint optimum, from above by the slope integral plus
/// the median jump costs.  The witnesses carry enough data to recheck both
/// ends independently.
pub fn tv_bracket(g: &MetricGraph, f: &PiecewiseLinear, opts: &SolveOpts) -> Result<TvBracket> {
    let var_value = var_total(g, f, opts)?;
    let interior_system = variation_solve(g, f, Mode::Interior, opts)?;
    let lower = var_value.clone().max(interior_system.total.clone());

    let edge_integral = f.slope_abs_pow_over(g, &EdgeSubset::full(g), 1.0)?;
    let mut jump_costs = Vec::new();
    let mut upper = edge_integral.clone();
    for rec in discontinuities(g, f)? {
        let cost = median_cost(&rec.limits);
        if cost.is_positive() {
            upper = upper + cost.clone();
            jump_costs.push(JumpCost {
                point: rec.point,
                limits: rec.limits,
                cost,
            });
        }
    }
    Ok(TvBracket {
        lower,
        upper,
        lower_witness: LowerWitness {
            var_value,
            interior_system,
        },
        upper_witness: UpperWitness {
            edge_integral,
            jump_costs,
        },
    })
}

/// `min_c sum |L_i - c|`, the matched-pairs total around a median.
fn median_cost(limits: &[Num]) -> Num {
    let mut sorted = limits.to_vec();
    sorted.sort();
    let mut cost = Num::zero();
    for i in 0..sorted.len() / 2 {
        cost = cost + (&sorted[sorted.len() - 1 - i] - &sorted[i]);
    }
    cost
}

/// Variation of every superlevel set, integrated over the threshold line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoareaSweep {
    /// Critical values of the function, sorted.
    pub thresholds: Vec<Num>,
    /// Variation of `{f > t}` for one `t` inside each consecutive gap.
    pub var_levels: Vec<Num>,
    pub integral: Num,
}

/// Sweeps thresholds across the function's range.  The superlevel variation
/// is constant between consecutive critical values, so evaluating one
/// midpoint per gap and weighting by the gap length integrates exactly.
pub fn coarea_sweep(g: &MetricGraph, f: &PiecewiseLinear, opts: &SolveOpts) -> Result<CoareaSweep> {
    let thresholds = crate::pl::sort_dedup(f.all_node_values(g)?);
    let mut var_levels = Vec::new();
    let mut integral = Num::zero();
    for w in thresholds.windows(2) {
        let mid = &(&w[0] + &w[1]) / &Num::int(2);
        let level_set = superlevel(g, f, &mid)?;
        let chi = indicator(g, &level_set)?;
        let level = var_total(g, &chi, opts)?;
        integral = integral + &(&w[1] - &w[0]) * &level;
        var_levels.push(level);
    }
    Ok(CoareaSweep {
        thresholds,
        var_levels,
        integral,
    })
}

/// A curve-continuous approximation together with its variation.
#[derive(Clone, Debug)]
pub struct Smoothed {
    pub function: PiecewiseLinear,
    pub pv_value: Num,
}

/// Replaces every jump by a ball-average blend under a `1/r`-slope cutoff,
/// largest jumps first.  Ball radii come from a dyadic scan that insists on
/// measure ratio below `2 C0` and fits the j-th ball into an `eps 2^{-j-1}`
/// mass budget, so the total smoothed mass stays below `eps`.  The result
/// is continuous and its variation is certified against the smoothing
/// constant `3 + 4 C0` times the input variation.
pub fn smooth_jumps(
    g: &MetricGraph,
    f: &PiecewiseLinear,
    eps: &Num,
    c0: &Num,
    opts: &SolveOpts,
) -> Result<Smoothed> {
    if !eps.is_positive() {
        return Err(Error::invalid_argument("mass budget must be positive"));
    }
    if !c0.is_positive() {
        return Err(Error::invalid_argument("density constant must be positive"));
    }
    let vt = var_total(g, f, opts)?;
    let mut w = good_representative(g, f)?;
    let mut recs = discontinuities(g, &w)?;
    recs.sort_by(|a, b| b.jump.cmp(&a.jump));
    let ratio_cap = &Num::int(2) * c0;
    let mut budget = eps / &Num::int(2);
    for rec in &recs {
        let seed = local_gap(g, &w, &rec.point)?;
        let mut chosen: Option<(Num, Num)> = None;
        let mut best_ratio: Option<Num> = None;
        for r in radius_grid(&seed, 2 * SCAN_HALVINGS) {
            let mass = h1_of_subset(g, &ball_subset(g, &rec.point, &r)?)?;
            let ratio = &mass / &r;
            if best_ratio.as_ref().map_or(true, |b| ratio < *b) {
                best_ratio = Some(ratio.clone());
            }
            if ratio < ratio_cap && mass <= budget {
                chosen = Some((r, mass));
                break;
            }
        }
        let Some((r, mass)) = chosen else {
            return Err(Error::DensityPrecondition {
                context: format!("jump point {}", rec.point),
                best_ratio: best_ratio.expect("scan ran").to_f64(),
                needed: ratio_cap.to_f64(),
            });
        };
        let ball = ball_subset(g, &rec.point, &r)?;
        let avg = &w.integral_over(g, &ball)? / &mass;
        let eta = cutoff(g, &rec.point, &r)?;
        w = w.blend_toward(g, &eta, &avg)?;
        budget = &budget / &Num::int(2);
    }
    assert!(
        w.is_continuous(g)?,
        "blending every jump point must leave a continuous function"
    );
    let pv_value = variation_total(g, &w, Mode::Pointwise, opts)?;
    let cap = &(&Num::int(3) + &(&Num::int(4) * c0)) * &vt;
    assert!(
        pv_value <= cap,
        "smoothed variation {pv_value} exceeds its certificate {cap}"
    );
    Ok(Smoothed {
        function: w,
        pv_value,
    })
}

/// The tent `max(0, 1 - d(x, .) / r)` in the inner metric: slope `1/r` on
/// its support, value one exactly at `x`.
fn cutoff(g: &MetricGraph, x: &PointRef, r: &Num) -> Result<PiecewiseLinear> {
    let d = inner_distance_fn(g, x)?;
    Ok(d
        .scale(&(&Num::int(-1) / r))
        .add_scalar(&Num::one())
        .truncate_below(&Num::zero()))
}

/// Distance from a point to the nearest breakpoint of `f` along each
/// incident direction; the natural seed scale for ball scans around the
/// point.
fn local_gap(g: &MetricGraph, f: &PiecewiseLinear, p: &PointRef) -> Result<Num> {
    let p = p.clone().canonical(g)?;
    let mut best: Option<Num> = None;
    let mut push = |gap: Num| {
        if gap.is_positive() && best.as_ref().map_or(true, |b| gap < *b) {
            best = Some(gap);
        }
    };
    match &p {
        PointRef::OnEdge { edge, t } => {
            let cuts = piece_cuts(&f.edge_fn(*edge)?.pieces);
            for c in crate::pl::sort_dedup(cuts) {
                if &c < t {
                    push(t - &c);
                } else if &c > t {
                    push(&c - t);
                }
            }
        }
        PointRef::Vertex { .. } => {
            for germ in germs_at(g, &p)? {
                let cuts = piece_cuts(&f.edge_fn(germ.edge)?.pieces);
                for c in crate::pl::sort_dedup(cuts) {
                    match germ.approach {
                        Approach::FromAbove => push(&c - &germ.t),
                        Approach::FromBelow => push(&germ.t - &c),
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::invalid_argument(format!("no incident structure at {p}")))
}

/// Independent one-dimensional oracle on chain-shaped spaces: slope totals
/// plus jump sizes, no gadget involved.
pub fn classical_variation_interval(g: &MetricGraph, f: &PiecewiseLinear) -> Result<Num> {
    reference::essential_variation_chain(g, f)
}
