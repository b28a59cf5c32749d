//! End-to-end checks of the toolkit's headline guarantees, one test per
//! criterion.  Each test prints a single `criterion NN pass` line with the
//! measured quantities; assertion messages carry the matching `fail` line.
//!
//! Numeric policy: comparisons are exact rational equality wherever the
//! pipeline is exact, and `FLOAT_SLACK` (relative) only where the ambient
//! chord geometry falls back to `f64`.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metricbv::bv::{classical_variation_interval, coarea_sweep, tv_bracket};
use metricbv::diagnostics::{doubling_scan, mtb_scan, poincare_check, BallSpec, PoincareParams};
use metricbv::gallery::{
    random_function, random_instance, star_marked_set, star_space, RandomSpec, STAR_HUB,
};
use metricbv::measure::{codim1_content, h1_total, BallOracle};
use metricbv::pl::PiecewiseLinear;
use metricbv::subset::indicator;
use metricbv::variation::{
    segment_count, truncate, var_total, variation_solve_exhaustive, variation_total, Mode,
    SolveOpts,
};
use metricbv::{EdgeId, Metric, MetricGraph, Num, PointRef};

/// Relative slack for quantities that pass through `f64` chord geometry.
const FLOAT_SLACK: f64 = 1e-9;

fn pow2(i: i64) -> Num {
    if i >= 0 {
        Num::int(1i64 << i)
    } else {
        Num::dyadic(1, (-i) as u32)
    }
}

fn origin() -> PointRef {
    PointRef::Vertex { vertex: STAR_HUB }
}

fn dyadic_grid(hi: u32, lo: u32) -> Vec<Num> {
    (hi..=lo).map(|i| Num::dyadic(1, i)).collect()
}

/// Edges of a star grouped by level, recovered from their lengths.
fn edges_by_level(g: &MetricGraph, levels: u32) -> BTreeMap<u32, Vec<EdgeId>> {
    let mut out: BTreeMap<u32, Vec<EdgeId>> = BTreeMap::new();
    for e in &g.edges {
        let level = (1..=levels)
            .find(|l| e.length == Num::dyadic(1, 2 * l + 1))
            .expect("star edge lengths are the level lengths");
        out.entry(level).or_default().push(e.id);
    }
    out
}

fn midpoint(g: &MetricGraph, e: EdgeId) -> PointRef {
    let len = &g.edges.iter().find(|x| x.id == e).unwrap().length;
    PointRef::OnEdge {
        edge: e,
        t: len / &Num::int(2),
    }
}

#[test]
fn criterion_01_star_total_length() {
    let start = Instant::now();
    let mut reported = Vec::new();
    for levels in 1..=8u32 {
        let g = star_space(levels, Metric::Geodesic).unwrap();
        let total = h1_total(&g);
        let expected = &Num::ratio(3, 4) - &Num::dyadic(1, levels + 1);
        assert_eq!(
            total, expected,
            "criterion 01 fail: star J={levels} has total length {total}, expected {expected}"
        );
        assert!(
            total <= Num::one(),
            "criterion 01 fail: star J={levels} total {total} exceeds 1"
        );
        reported.push(format!("J={levels}: {total}"));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 01 fail: building and measuring 8 stars took {elapsed:?}"
    );
    println!(
        "criterion 01 pass: total length 3/4 - 2^-(J+1) for J=1..8 ({}), {elapsed:?}",
        reported.join(", ")
    );
}

#[test]
fn criterion_02_origin_ball_masses() {
    let levels = 8u32;
    let g = star_space(levels, Metric::AmbientEuclidean).unwrap();
    let balls = BallOracle::new(&g, &origin()).unwrap();
    let mut reported = Vec::new();
    for k in 1..=6u32 {
        let r = Num::dyadic(1, 2 * k + 1);
        let mass = balls.ball_measure(&r).unwrap();
        // closed form: the 2^(k+1) long rays contribute r each, deeper
        // levels are swallowed whole
        let expected = &Num::dyadic(3, k + 1) - &Num::dyadic(1, levels + 1);
        assert_eq!(
            mass, expected,
            "criterion 02 fail: k={k} ball mass {mass}, closed form {expected}"
        );
        let lo = &Num::dyadic(1, k) - &Num::dyadic(1, levels + 1);
        let hi = Num::dyadic(1, k - 1);
        assert!(
            lo <= mass && mass <= hi,
            "criterion 02 fail: k={k} mass {mass} outside [{lo}, {hi}]"
        );
        reported.push(format!("k={k}: {mass}"));
    }
    println!(
        "criterion 02 pass: origin ball masses exact on star J=8 ({})",
        reported.join(", ")
    );
}

#[test]
fn criterion_03_annulus_ball_growth() {
    let start = Instant::now();
    let levels = 8u32;
    let g = star_space(levels, Metric::AmbientEuclidean).unwrap();
    let by_level = edges_by_level(&g, levels);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut checks = 0usize;
    for _ in 0..50 {
        let k = rng.random_range(1..=5u32);
        // a ray at least as long as the annulus ceiling
        let level = rng.random_range(1..=k);
        let pool = &by_level[&level];
        let edge = pool[rng.random_range(0..pool.len())];
        // dyadic radial position in [2^-(2k+3), 2^-(2k+1)]
        let d = Num::dyadic(8 + rng.random_range(0..=24i64), 2 * k + 6);
        let x = PointRef::OnEdge { edge, t: d.clone() };
        let balls = BallOracle::new(&g, &x).unwrap();
        let radii = [
            Num::dyadic(1, 2 * k + 4),
            Num::dyadic(1, 2 * k + 5),
            Num::dyadic(3, 2 * k + 6),
            Num::dyadic(1, 2 * k + 6),
            Num::dyadic(1, 2 * k + 7),
        ];
        for r in &radii {
            let mass = balls.ball_measure(r).unwrap().to_f64();
            let rr = (r * r).to_f64();
            let lo = pow2(3 * (k as i64) - 5).to_f64() * rr;
            let hi = pow2(3 * (k as i64) + 7).to_f64() * rr;
            assert!(
                mass >= lo * (1.0 - FLOAT_SLACK) && mass <= hi * (1.0 + FLOAT_SLACK),
                "criterion 03 fail: k={k} d={d} r={r}: mass {mass} outside [{lo}, {hi}]"
            );
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 03 fail: scan took {elapsed:?}"
    );
    println!(
        "criterion 03 pass: {checks} quadratic-growth bounds hold on ambient star J=8, {elapsed:?}"
    );
}

/// Shared grid for the two-regime doubling scans: the origin plus one
/// midpoint per level, over dyadic radii down to the floor scale cubed.
fn doubling_grid(g: &MetricGraph, levels: u32) -> (Vec<PointRef>, Vec<Num>) {
    let by_level = edges_by_level(g, levels);
    let mut centers = vec![origin()];
    for level in 1..=levels {
        centers.push(midpoint(g, by_level[&level][0]));
    }
    (centers, dyadic_grid(3, 3 * levels))
}

#[test]
fn criterion_04_doubling_two_regimes() {
    // ambient mode: mass concentration near deep clusters stays bounded
    let levels = 8u32;
    let g = star_space(levels, Metric::AmbientEuclidean).unwrap();
    let (centers, radii) = doubling_grid(&g, levels);
    let scan = doubling_scan(&g, &centers, &radii).unwrap();
    let cap = Num::int(1 << 18);
    assert!(
        scan.max_ratio <= cap,
        "criterion 04 fail: ambient doubling ratio {} exceeds 2^18",
        scan.max_ratio
    );

    // intrinsic mode: the hub ratio grows without bound in the depth
    let mut ratios = Vec::new();
    for levels in 2..=6u32 {
        let g = star_space(levels, Metric::Geodesic).unwrap();
        let (centers, radii) = doubling_grid(&g, levels);
        let scan = doubling_scan(&g, &centers, &radii).unwrap();
        ratios.push((levels, scan.max_ratio.clone()));
    }
    for w in ratios.windows(2) {
        assert!(
            w[0].1 < w[1].1,
            "criterion 04 fail: intrinsic doubling not increasing: J={} gives {}, J={} gives {}",
            w[0].0,
            w[0].1,
            w[1].0,
            w[1].1
        );
    }
    let listed: Vec<String> = ratios.iter().map(|(j, r)| format!("J={j}: {r}")).collect();
    println!(
        "criterion 04 pass: ambient max ratio {} <= 2^18; intrinsic ratios increase ({})",
        scan.max_ratio,
        listed.join(", ")
    );
}

#[test]
fn criterion_05_poincare_on_sampled_balls() {
    let levels = 6u32;
    let g = star_space(levels, Metric::Geodesic).unwrap();
    let params = PoincareParams {
        p: 1.0,
        c: Num::int(4),
        lambda: Num::int(3),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut checks = 0usize;
    for _ in 0..20 {
        let e = &g.edges[rng.random_range(0..g.edges.len())];
        let t = &e.length * &Num::ratio(rng.random_range(1..16), 16);
        let ball = BallSpec {
            center: PointRef::OnEdge { edge: e.id, t },
            radius: Num::dyadic(1, rng.random_range(3..=10u32)),
        };
        for _ in 0..64 {
            let values: BTreeMap<_, _> = g
                .vertices
                .iter()
                .map(|v| (v.id, Num::dyadic(rng.random_range(-32..=32i64), rng.random_range(0..=3u32))))
                .collect();
            let u = PiecewiseLinear::linear_from_vertices(&g, &values).unwrap();
            let check = poincare_check(&g, &ball, &u, &params).unwrap();
            assert!(
                check.ok,
                "criterion 05 fail: ball at {} radius {}: lhs {} > rhs {}",
                ball.center, ball.radius, check.lhs, check.rhs
            );
            checks += 1;
        }
    }
    println!(
        "criterion 05 pass: {checks} Poincare checks (p=1, C=4, lambda=3) hold on star J=6"
    );
}

#[test]
fn criterion_06_indicator_variation_and_bracket() {
    let start = Instant::now();
    let opts = SolveOpts::default();
    let mut reported = Vec::new();
    for levels in 1..=6u32 {
        let g = star_space(levels, Metric::Geodesic).unwrap();
        let set = star_marked_set(levels).unwrap();
        let chi = indicator(&g, &set).unwrap();
        let vt = var_total(&g, &chi, &opts).unwrap();
        assert_eq!(
            vt,
            Num::one(),
            "criterion 06 fail: J={levels} indicator variation {vt}, expected 1"
        );
        let br = tv_bracket(&g, &chi, &opts).unwrap();
        let expected = Num::int(2 * levels as i64);
        assert!(
            br.lower == expected && br.upper == expected,
            "criterion 06 fail: J={levels} bracket [{}, {}], expected [{expected}, {expected}]",
            br.lower,
            br.upper
        );
        if levels <= 3 {
            // cross-check the fast solver against exhaustive search
            let wide = SolveOpts { cap_segments: 256 };
            let pv = variation_solve_exhaustive(&g, &chi, Mode::Pointwise, &wide).unwrap();
            let iv = variation_solve_exhaustive(&g, &chi, Mode::Interior, &wide).unwrap();
            assert!(
                pv.total == Num::one() && iv.total == expected,
                "criterion 06 fail: J={levels} exhaustive totals pv {} iv {}",
                pv.total,
                iv.total
            );
        }
        reported.push(format!("J={levels}: [{}, {}]", br.lower, br.upper));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "criterion 06 fail: sweep took {elapsed:?}"
    );
    println!(
        "criterion 06 pass: var 1 and bracket [2J, 2J] for J=1..6 ({}), exhaustive agrees for J<=3, {elapsed:?}",
        reported.join(", ")
    );
}

#[test]
fn criterion_07_flat_boundary_with_mass() {
    // deep truncation: the scanned density at the hub is J/2^J, which sits
    // below the threshold from depth 10 on
    let levels = 10u32;
    let radii = dyadic_grid(2 * levels + 2, 2 * levels + 12);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    for metric in [Metric::Geodesic, Metric::AmbientEuclidean] {
        let g = star_space(levels, metric).unwrap();
        let set = star_marked_set(levels).unwrap();
        let mut candidates = vec![origin()];
        for _ in 0..4 {
            let e = &g.edges[rng.random_range(0..g.edges.len())];
            candidates.push(midpoint(&g, e.id));
        }
        let scan = mtb_scan(&g, &set, &candidates, &radii).unwrap();
        let flagged: Vec<_> = scan.records.iter().filter(|r| r.in_boundary).collect();
        assert!(
            flagged.is_empty(),
            "criterion 07 fail: {metric:?} star J={levels} flags {} boundary points",
            flagged.len()
        );
        let content = codim1_content(&g, &[], &radii).unwrap();
        assert_eq!(
            content.total,
            Num::zero(),
            "criterion 07 fail: {metric:?} content {} for an empty boundary",
            content.total
        );
    }

    // yet the gradient mass grows with depth: it reaches 6 at J=3 and
    // strictly exceeds it beyond
    let opts = SolveOpts::default();
    let mut lowers = Vec::new();
    for levels in 3..=6u32 {
        let g = star_space(levels, Metric::Geodesic).unwrap();
        let chi = indicator(&g, &star_marked_set(levels).unwrap()).unwrap();
        let br = tv_bracket(&g, &chi, &opts).unwrap();
        if levels == 3 {
            assert!(
                br.lower >= Num::int(6),
                "criterion 07 fail: J=3 lower bound {} below 6",
                br.lower
            );
        } else {
            assert!(
                br.lower > Num::int(6),
                "criterion 07 fail: J={levels} lower bound {} does not exceed 6",
                br.lower
            );
        }
        lowers.push(br.lower.clone());
    }

    // the command line tells the two stories apart
    let mut phrases = Vec::new();
    for (metric, phrase) in [
        ("geodesic", "doubling is the essential hypothesis"),
        ("ambient", "Poincar\u{e9} is the essential hypothesis"),
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_metricbv"))
            .args(["federer", "--gallery", &format!("star:J={levels},metric={metric}", levels = levels)])
            .output()
            .expect("run federer subcommand");
        assert!(
            out.status.success(),
            "criterion 07 fail: federer {metric} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_slice(&out.stdout).expect("federer emits JSON");
        let verdicts = report["verdicts"]
            .as_array()
            .expect("verdict lines")
            .iter()
            .map(|v| v.as_str().unwrap_or_default().to_string())
            .collect::<Vec<_>>();
        assert!(
            verdicts.iter().any(|v| v.contains(phrase)),
            "criterion 07 fail: federer {metric} verdicts {verdicts:?} miss {phrase:?}"
        );
        phrases.push(format!("{metric}: {phrase}"));
    }
    println!(
        "criterion 07 pass: no flagged boundary and zero content at J=10 in both metrics, \
         gradient mass {} at J=3..6, verdicts cover both hypotheses ({})",
        lowers
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(", "),
        phrases.join("; ")
    );
}

#[test]
fn criterion_08_degree_controlled_sandwich() {
    let opts = SolveOpts::default();
    let mut worst: Option<(u64, f64)> = None;
    for seed in 0..200u64 {
        let spec = if seed % 5 == 0 {
            RandomSpec {
                vertices: 5,
                extra_edges: 1,
                path: false,
                max_pieces: 2,
                jump_prob: 0.3,
            }
        } else {
            RandomSpec {
                vertices: 7,
                extra_edges: 0,
                path: false,
                max_pieces: 3,
                jump_prob: 0.3,
            }
        };
        let (g, f) = random_instance(seed, &spec).unwrap();
        let c0 = Num::int(
            g.vertices
                .iter()
                .map(|v| g.degree(v.id))
                .max()
                .unwrap_or(1) as i64,
        );
        let vt = var_total(&g, &f, &opts).unwrap();
        let br = tv_bracket(&g, &f, &opts).unwrap();
        let cap = &(&c0 * &(&Num::int(3) + &(&Num::int(4) * &c0))) * &vt;
        assert!(
            vt <= br.lower && br.lower <= br.upper && br.upper <= cap,
            "criterion 08 fail: seed {seed}: var {vt}, bracket [{}, {}], cap {cap}",
            br.lower,
            br.upper
        );
        if vt.is_positive() {
            let head = (&br.upper / &cap).to_f64();
            if worst.as_ref().is_none_or(|(_, h)| head > *h) {
                worst = Some((seed, head));
            }
        }
    }
    let (seed, head) = worst.unwrap();
    println!(
        "criterion 08 pass: 200 instances satisfy var <= lower <= upper <= C0(3+4C0) var; \
         tightest headroom {head:.3} of the cap (seed {seed})"
    );
}

#[test]
fn criterion_09_chain_quantities_coincide() {
    let opts = SolveOpts::default();
    let spec = RandomSpec {
        vertices: 5,
        extra_edges: 0,
        path: true,
        max_pieces: 2,
        jump_prob: 0.3,
    };
    for seed in 0..200u64 {
        let (g, f) = random_instance(seed, &spec).unwrap();
        let vt = var_total(&g, &f, &opts).unwrap();
        let br = tv_bracket(&g, &f, &opts).unwrap();
        let classical = classical_variation_interval(&g, &f).unwrap();
        let sweep = coarea_sweep(&g, &f, &opts).unwrap();
        assert!(
            vt == br.lower && br.lower == br.upper && vt == classical && vt == sweep.integral,
            "criterion 09 fail: seed {seed}: var {vt}, bracket [{}, {}], classical {classical}, \
             coarea {}",
            br.lower,
            br.upper,
            sweep.integral
        );
    }
    println!(
        "criterion 09 pass: 200 chain instances have var = bracket = classical = coarea exactly"
    );
}

#[test]
fn criterion_10_variation_calculus_properties() {
    let opts = SolveOpts::default();
    let spec = RandomSpec {
        vertices: 5,
        extra_edges: 0,
        path: false,
        max_pieces: 2,
        jump_prob: 0.35,
    };
    let continuous = RandomSpec {
        jump_prob: 0.0,
        ..spec.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let mut brute = 0usize;
    for seed in 0..500u64 {
        let (g, f) = random_instance(seed, &spec).unwrap();
        let pv = variation_total(&g, &f, Mode::Pointwise, &opts).unwrap();
        let ppv = variation_total(&g, &f, Mode::Partition, &opts).unwrap();
        assert!(
            pv <= ppv && ppv <= Num::int(2) * &pv,
            "criterion 10 fail: seed {seed}: pv {pv}, PV {ppv} outside [pv, 2pv]"
        );

        // subadditivity under pointwise sums
        let w = random_function(&g, seed + 10_000, &spec);
        let sum = f.add(&g, &w).unwrap();
        let pv_w = variation_total(&g, &w, Mode::Pointwise, &opts).unwrap();
        let pv_sum = variation_total(&g, &sum, Mode::Pointwise, &opts).unwrap();
        assert!(
            pv_sum <= &pv + &pv_w,
            "criterion 10 fail: seed {seed}: pv(v+w) {pv_sum} > pv(v) {pv} + pv(w) {pv_w}"
        );

        // two-level truncation never gains variation on continuous functions
        let (g2, v) = random_instance(seed, &continuous).unwrap();
        let t = Num::dyadic(rng.random_range(-8..=8i64), 2);
        let r = Num::dyadic(rng.random_range(1..=8i64), 2);
        let (low, band) = truncate(&v, &t, &r).unwrap();
        let whole = v.truncate_above(&(&t + &r));
        let pv_low = variation_total(&g2, &low, Mode::Pointwise, &opts).unwrap();
        let pv_band = variation_total(&g2, &band, Mode::Pointwise, &opts).unwrap();
        let pv_whole = variation_total(&g2, &whole, Mode::Pointwise, &opts).unwrap();
        assert!(
            &pv_low + &pv_band <= pv_whole,
            "criterion 10 fail: seed {seed}: truncation at {t} width {r} gains variation \
             ({pv_low} + {pv_band} > {pv_whole})"
        );

        // small instances: dynamic program against exhaustive search
        if segment_count(&g, &f).unwrap() <= 10 {
            brute += 1;
            for mode in [Mode::Pointwise, Mode::Partition, Mode::Interior] {
                let fast = variation_total(&g, &f, mode, &opts).unwrap();
                let slow = variation_solve_exhaustive(&g, &f, mode, &opts).unwrap().total;
                assert_eq!(
                    fast, slow,
                    "criterion 10 fail: seed {seed} mode {mode}: solver {fast}, exhaustive {slow}"
                );
            }
        }
    }
    println!(
        "criterion 10 pass: 500 instances satisfy pv <= PV <= 2pv, subadditivity, and the \
         truncation splitting bound; {brute} small instances match exhaustive search"
    );
}
