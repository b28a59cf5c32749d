//! Batch front end: loads spaces, functions, and subsets from JSON (or
//! generates them), runs one computation, and writes a machine-readable
//! report.
//!
//! Exit codes: 0 success, 1 invalid input (bad flags, malformed files,
//! failed validation), 2 precondition failure (a scan or size budget the
//! algorithm depends on did not succeed on well-formed input).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use metricbv::bv::{coarea_sweep, perimeter_upper_bound, tv_bracket};
use metricbv::diagnostics::{
    density_liminf, doubling_scan, federer_report, poincare_check, BallSpec, PoincareParams,
};
use metricbv::error::{Error, Result};
use metricbv::gallery::{random_instance, star_marked_set, star_space, RandomSpec};
use metricbv::graph::validate_graph;
use metricbv::measure::{h1_of_subset, h1_total, radius_grid};
use metricbv::num::Num;
use metricbv::pl::validate_fn;
use metricbv::subset::{indicator, validate_subset};
use metricbv::variation::variation_solve;
use metricbv::{EdgeSubset, Metric, MetricGraph, Mode, PiecewiseLinear, PointRef, SolveOpts};

#[derive(Parser, Debug)]
#[command(name = "metricbv", version, about = "Variation and measure computations on metric graphs")]
struct Cli {
    /// TOML file supplying defaults for any flag; explicit flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check inputs against the structural invariants and report violations
    Validate(Flags),
    /// Write generated spaces, subsets, and functions as JSON files
    Gallery(Flags),
    /// Total measure of the space and optionally of a subset
    Measure(Flags),
    /// Ball-density profile of one point over a radius grid
    Density(Flags),
    /// Worst ball-doubling ratio over sampled centers and radii
    Doubling(Flags),
    /// Check the sampled Poincaré inequality on one ball
    Poincare(Flags),
    /// Solve for the variation of a function
    Variation(Flags),
    /// Level-set sweep: variation of superlevel indicators and its integral
    Coarea(Flags),
    /// Perimeter upper bound for a subset from ball densities
    Perimeter(Flags),
    /// Two-sided total-variation bracket with witnesses
    Bracket(Flags),
    /// Boundary-content versus gradient-mass report with verdicts
    Federer(Flags),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Validate(_) => "validate",
            Cmd::Gallery(_) => "gallery",
            Cmd::Measure(_) => "measure",
            Cmd::Density(_) => "density",
            Cmd::Doubling(_) => "doubling",
            Cmd::Poincare(_) => "poincare",
            Cmd::Variation(_) => "variation",
            Cmd::Coarea(_) => "coarea",
            Cmd::Perimeter(_) => "perimeter",
            Cmd::Bracket(_) => "bracket",
            Cmd::Federer(_) => "federer",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Cmd::Validate(f)
            | Cmd::Gallery(f)
            | Cmd::Measure(f)
            | Cmd::Density(f)
            | Cmd::Doubling(f)
            | Cmd::Poincare(f)
            | Cmd::Variation(f)
            | Cmd::Coarea(f)
            | Cmd::Perimeter(f)
            | Cmd::Bracket(f)
            | Cmd::Federer(f) => f,
        }
    }
}

#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Flags {
    /// Space JSON file
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,

    /// Function JSON file
    #[arg(long = "fn", value_name = "FILE")]
    #[serde(rename = "fn")]
    fn_file: Option<PathBuf>,

    /// Subset JSON file
    #[arg(long, value_name = "FILE")]
    set: Option<PathBuf>,

    /// Variation flavor: pv (points), PV (partitions), or iv (interiors)
    #[arg(long)]
    mode: Option<String>,

    /// Density constant; defaults to the maximum vertex degree
    #[arg(long)]
    c0: Option<String>,

    /// Poincaré exponent (default 1)
    #[arg(long)]
    p: Option<f64>,

    /// Poincaré constant (default 4)
    #[arg(long = "C")]
    #[serde(rename = "C")]
    big_c: Option<String>,

    /// Poincaré dilation (default 3)
    #[arg(long)]
    lambda: Option<String>,

    /// Radius grid as r0:halvings, e.g. 1/4:10
    #[arg(long)]
    radii: Option<String>,

    /// Seed for sampled centers and generated instances
    #[arg(long)]
    seed: Option<u64>,

    /// Report file; stdout when omitted.  For gallery, a path prefix.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// CSV profile file with one r,ratio row per scanned radius
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,

    /// Size budget for the variation solver
    #[arg(long = "cap-segments")]
    #[serde(rename = "cap-segments")]
    cap_segments: Option<usize>,

    /// Generate inputs instead of reading files:
    /// star:J=3,metric=geodesic or random:seed=5,n=8,path=1
    #[arg(long)]
    gallery: Option<String>,

    /// Point as vertex:<ID> or edge:<ID>:<offset>
    #[arg(long)]
    point: Option<String>,
}

impl Flags {
    fn or(self, fallback: Flags) -> Flags {
        Flags {
            space: self.space.or(fallback.space),
            fn_file: self.fn_file.or(fallback.fn_file),
            set: self.set.or(fallback.set),
            mode: self.mode.or(fallback.mode),
            c0: self.c0.or(fallback.c0),
            p: self.p.or(fallback.p),
            big_c: self.big_c.or(fallback.big_c),
            lambda: self.lambda.or(fallback.lambda),
            radii: self.radii.or(fallback.radii),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            csv: self.csv.or(fallback.csv),
            cap_segments: self.cap_segments.or(fallback.cap_segments),
            gallery: self.gallery.or(fallback.gallery),
            point: self.point.or(fallback.point),
        }
    }
}

/// Common header embedded in every report.
#[derive(Serialize)]
struct Envelope<T: Serialize> {
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radii: Option<Vec<Num>>,
    cap_segments: usize,
    #[serde(flatten)]
    body: T,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precondition() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut flags = cli.cmd.flags().clone();
    if let Some(cfg) = &cli.config {
        flags = flags.or(load_config(cfg)?);
    }
    let command = cli.cmd.name();
    match &cli.cmd {
        Cmd::Validate(_) => cmd_validate(command, &flags),
        Cmd::Gallery(_) => cmd_gallery(command, &flags),
        Cmd::Measure(_) => cmd_measure(command, &flags),
        Cmd::Density(_) => cmd_density(command, &flags),
        Cmd::Doubling(_) => cmd_doubling(command, &flags),
        Cmd::Poincare(_) => cmd_poincare(command, &flags),
        Cmd::Variation(_) => cmd_variation(command, &flags),
        Cmd::Coarea(_) => cmd_coarea(command, &flags),
        Cmd::Perimeter(_) => cmd_perimeter(command, &flags),
        Cmd::Bracket(_) => cmd_bracket(command, &flags),
        Cmd::Federer(_) => cmd_federer(command, &flags),
    }
}

fn load_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

// ---- flag parsing helpers ----

fn parse_num(s: &str, what: &str) -> Result<Num> {
    Num::from_str(s).map_err(|e| Error::invalid_argument(format!("{what}: {e}")))
}

fn parse_radii(flags: &Flags) -> Result<Vec<Num>> {
    let spec = flags
        .radii
        .as_deref()
        .ok_or_else(|| Error::invalid_argument("missing --radii r0:halvings"))?;
    let (r0, halvings) = spec
        .split_once(':')
        .ok_or_else(|| Error::invalid_argument("--radii must look like r0:halvings"))?;
    let r0 = parse_num(r0, "--radii")?;
    if !r0.is_positive() {
        return Err(Error::invalid_argument("--radii start must be positive"));
    }
    let halvings: u32 = halvings
        .parse()
        .map_err(|_| Error::invalid_argument("--radii halvings must be a small integer"))?;
    if halvings > 120 {
        return Err(Error::invalid_argument("--radii halvings capped at 120"));
    }
    Ok(radius_grid(&r0, halvings))
}

fn parse_mode(flags: &Flags) -> Result<Mode> {
    match flags.mode.as_deref() {
        None | Some("pv") => Ok(Mode::Pointwise),
        Some("PV") => Ok(Mode::Partition),
        Some("iv") => Ok(Mode::Interior),
        Some(other) => Err(Error::invalid_argument(format!(
            "unknown mode '{other}' (expected pv, PV, or iv)"
        ))),
    }
}

fn parse_point(flags: &Flags) -> Result<PointRef> {
    let s = flags.point.as_deref().ok_or_else(|| {
        Error::invalid_argument("missing --point (vertex:<ID> or edge:<ID>:<offset>)")
    })?;
    PointRef::from_str(s).map_err(|e| Error::invalid_argument(format!("--point: {e}")))
}

fn solve_opts(flags: &Flags) -> SolveOpts {
    let mut opts = SolveOpts::default();
    if let Some(cap) = flags.cap_segments {
        opts.cap_segments = cap;
    }
    opts
}

fn max_degree(g: &MetricGraph) -> Num {
    let best = g
        .vertices
        .iter()
        .map(|v| g.degree(v.id))
        .max()
        .unwrap_or(0);
    Num::int(best.max(1) as i64)
}

fn c0_or_default(flags: &Flags, g: &MetricGraph) -> Result<Num> {
    match &flags.c0 {
        Some(s) => {
            let c0 = parse_num(s, "--c0")?;
            if !c0.is_positive() {
                return Err(Error::invalid_argument("--c0 must be positive"));
            }
            Ok(c0)
        }
        None => Ok(max_degree(g)),
    }
}

// ---- input resolution ----

struct Inputs {
    g: MetricGraph,
    f: Option<PiecewiseLinear>,
    set: Option<EdgeSubset>,
}

fn resolve_inputs(flags: &Flags) -> Result<Inputs> {
    if let Some(spec) = &flags.gallery {
        return generate(spec, flags.seed);
    }
    let space = flags
        .space
        .as_deref()
        .ok_or_else(|| Error::invalid_argument("missing --space (or --gallery)"))?;
    let g = metricbv::io::load_space(space)?;
    let f = match &flags.fn_file {
        Some(p) => Some(metricbv::io::load_function(p, &g)?),
        None => None,
    };
    let set = match &flags.set {
        Some(p) => Some(metricbv::io::load_subset(p, &g)?),
        None => None,
    };
    Ok(Inputs { g, f, set })
}

/// Grammar: `star:J=3,metric=geodesic` (marked rays as set and indicator as
/// function) or `random:seed=5,n=8,path=1,extra=0,pieces=3,jumps=0.3`.
fn generate(spec: &str, seed_flag: Option<u64>) -> Result<Inputs> {
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = std::collections::BTreeMap::new();
    for part in params.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid_argument(format!("bad gallery parameter '{part}'")))?;
        kv.insert(k.trim(), v.trim());
    }
    match kind {
        "star" => {
            let j: u32 = kv
                .get("J")
                .ok_or_else(|| Error::invalid_argument("star needs J=<depth>"))?
                .parse()
                .map_err(|_| Error::invalid_argument("star depth J must be an integer"))?;
            let metric = match kv.get("metric").copied() {
                None | Some("geodesic") => Metric::Geodesic,
                Some("ambient") | Some("ambient_euclidean") => Metric::AmbientEuclidean,
                Some(other) => {
                    return Err(Error::invalid_argument(format!("unknown metric '{other}'")))
                }
            };
            let g = star_space(j, metric)?;
            let set = star_marked_set(j)?;
            let f = indicator(&g, &set)?;
            Ok(Inputs {
                g,
                f: Some(f),
                set: Some(set),
            })
        }
        "random" => {
            let mut spec = RandomSpec::default();
            let mut seed = seed_flag.unwrap_or(0);
            for (k, v) in kv {
                match k {
                    "seed" => {
                        seed = v
                            .parse()
                            .map_err(|_| Error::invalid_argument("bad random seed"))?
                    }
                    "n" => {
                        spec.vertices = v
                            .parse()
                            .map_err(|_| Error::invalid_argument("bad vertex count"))?
                    }
                    "extra" => {
                        spec.extra_edges = v
                            .parse()
                            .map_err(|_| Error::invalid_argument("bad extra edge count"))?
                    }
                    "path" => spec.path = v == "1" || v == "true",
                    "pieces" => {
                        spec.max_pieces = v
                            .parse()
                            .map_err(|_| Error::invalid_argument("bad piece count"))?
                    }
                    "jumps" => {
                        spec.jump_prob = v
                            .parse()
                            .map_err(|_| Error::invalid_argument("bad jump probability"))?
                    }
                    other => {
                        return Err(Error::invalid_argument(format!(
                            "unknown random parameter '{other}'"
                        )))
                    }
                }
            }
            let (g, f) = random_instance(seed, &spec)?;
            Ok(Inputs {
                g,
                f: Some(f),
                set: None,
            })
        }
        other => Err(Error::invalid_argument(format!(
            "unknown gallery kind '{other}' (star or random)"
        ))),
    }
}

// ---- output ----

fn emit<T: Serialize>(flags: &Flags, report: &Envelope<T>) -> Result<()> {
    match &flags.out {
        Some(path) => metricbv::io::save_json(path, report),
        None => {
            let text = serde_json::to_string_pretty(report).map_err(|e| Error::Parse {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn envelope<T: Serialize>(
    command: &'static str,
    flags: &Flags,
    radii: Option<&[Num]>,
    body: T,
) -> Envelope<T> {
    Envelope {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: flags.seed,
        radii: radii.map(|r| r.to_vec()),
        cap_segments: solve_opts(flags).cap_segments,
        body,
    }
}

// ---- subcommands ----

#[derive(Serialize)]
struct ValidateBody {
    ok: bool,
    space: metricbv::graph::ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    function: Option<metricbv::graph::ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<metricbv::graph::ValidationReport>,
}

fn cmd_validate(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_raw(flags)?;
    let space_report = validate_graph(&inputs.0);
    let mut ok = space_report.ok;
    let function = inputs.1.as_ref().map(|f| {
        let r = validate_fn(&inputs.0, f);
        ok &= r.ok;
        r
    });
    let subset = inputs.2.as_ref().map(|s| {
        let r = validate_subset(&inputs.0, s);
        ok &= r.ok;
        r
    });
    let body = ValidateBody {
        ok,
        space: space_report,
        function,
        subset,
    };
    emit(flags, &envelope(command, flags, None, body))?;
    if ok {
        Ok(())
    } else {
        Err(Error::invalid_space("validation failed; see report"))
    }
}

/// Loads without validating so the validate subcommand can report instead
/// of refusing.
fn resolve_raw(
    flags: &Flags,
) -> Result<(MetricGraph, Option<PiecewiseLinear>, Option<EdgeSubset>)> {
    if flags.gallery.is_some() {
        let inputs = resolve_inputs(flags)?;
        return Ok((inputs.g, inputs.f, inputs.set));
    }
    let space = flags
        .space
        .as_deref()
        .ok_or_else(|| Error::invalid_argument("missing --space (or --gallery)"))?;
    let read = |p: &Path| -> Result<String> {
        std::fs::read_to_string(p).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let parse_err = |p: &Path, e: serde_json::Error| Error::Parse {
        path: p.display().to_string(),
        message: e.to_string(),
    };
    let g: MetricGraph = serde_json::from_str(&read(space)?).map_err(|e| parse_err(space, e))?;
    let f = match &flags.fn_file {
        Some(p) => Some(serde_json::from_str(&read(p)?).map_err(|e| parse_err(p, e))?),
        None => None,
    };
    let s = match &flags.set {
        Some(p) => Some(serde_json::from_str(&read(p)?).map_err(|e| parse_err(p, e))?),
        None => None,
    };
    Ok((g, f, s))
}

#[derive(Serialize)]
struct GalleryBody {
    files: Vec<String>,
    vertices: usize,
    edges: usize,
    h1_total: Num,
}

fn cmd_gallery(command: &'static str, flags: &Flags) -> Result<()> {
    if flags.gallery.is_none() {
        return Err(Error::invalid_argument("missing --gallery spec"));
    }
    let out = flags
        .out
        .as_deref()
        .ok_or_else(|| Error::invalid_argument("gallery needs --out as a path prefix"))?;
    let inputs = resolve_inputs(flags)?;
    let prefix = out.display().to_string();
    let mut files = Vec::new();
    let space_path = PathBuf::from(format!("{prefix}.space.json"));
    metricbv::io::save_json(&space_path, &inputs.g)?;
    files.push(space_path.display().to_string());
    if let Some(set) = &inputs.set {
        let p = PathBuf::from(format!("{prefix}.set.json"));
        metricbv::io::save_json(&p, set)?;
        files.push(p.display().to_string());
    }
    if let Some(f) = &inputs.f {
        let p = PathBuf::from(format!("{prefix}.fn.json"));
        metricbv::io::save_json(&p, f)?;
        files.push(p.display().to_string());
    }
    let body = GalleryBody {
        files,
        vertices: inputs.g.vertices.len(),
        edges: inputs.g.edges.len(),
        h1_total: h1_total(&inputs.g),
    };
    let report_path = PathBuf::from(format!("{prefix}.report.json"));
    metricbv::io::save_json(&report_path, &envelope(command, flags, None, body))
}

#[derive(Serialize)]
struct MeasureBody {
    h1_total: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    set_measure: Option<Num>,
}

fn cmd_measure(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let body = MeasureBody {
        h1_total: h1_total(&inputs.g),
        set_measure: match &inputs.set {
            Some(s) => Some(h1_of_subset(&inputs.g, s)?),
            None => None,
        },
    };
    emit(flags, &envelope(command, flags, None, body))
}

fn cmd_density(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let radii = parse_radii(flags)?;
    let point = parse_point(flags)?;
    let profile = density_liminf(&inputs.g, &point, &radii)?;
    if let Some(csv) = &flags.csv {
        let rows: Vec<Vec<String>> = profile
            .samples
            .iter()
            .map(|s| vec![s.r.to_f64().to_string(), s.ratio.to_f64().to_string()])
            .collect();
        emit_csv(csv, "r,ratio", &rows)?;
    }
    emit(flags, &envelope(command, flags, Some(&radii), profile))
}

fn doubling_centers(g: &MetricGraph, flags: &Flags) -> Result<Vec<PointRef>> {
    if flags.point.is_some() {
        return Ok(vec![parse_point(flags)?]);
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(flags.seed.unwrap_or(0));
    let mut centers: Vec<PointRef> = Vec::new();
    if g.vertices.len() <= 16 {
        centers.extend(g.vertices.iter().map(|v| PointRef::Vertex { vertex: v.id }));
    } else {
        for _ in 0..16 {
            let v = &g.vertices[rng.random_range(0..g.vertices.len())];
            centers.push(PointRef::Vertex { vertex: v.id });
        }
    }
    for _ in 0..16.min(g.edges.len()) {
        let e = &g.edges[rng.random_range(0..g.edges.len())];
        centers.push(PointRef::OnEdge {
            edge: e.id,
            t: &e.length / &Num::int(2),
        });
    }
    Ok(centers)
}

fn cmd_doubling(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let radii = parse_radii(flags)?;
    let centers = doubling_centers(&inputs.g, flags)?;
    let scan = doubling_scan(&inputs.g, &centers, &radii)?;
    if let Some(csv) = &flags.csv {
        let mut rows = Vec::new();
        for r in &radii {
            let per_r = doubling_scan(&inputs.g, &centers, std::slice::from_ref(r))?;
            rows.push(vec![
                r.to_f64().to_string(),
                per_r.max_ratio.to_f64().to_string(),
            ]);
        }
        emit_csv(csv, "r,ratio", &rows)?;
    }
    emit(flags, &envelope(command, flags, Some(&radii), scan))
}

#[derive(Serialize)]
struct PoincareBody {
    params: PoincareParams,
    ball: BallSpec,
    check: metricbv::diagnostics::PoincareCheck,
}

fn cmd_poincare(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let f = inputs
        .f
        .as_ref()
        .ok_or_else(|| Error::invalid_argument("missing --fn"))?;
    let radii = parse_radii(flags)?;
    let params = PoincareParams {
        p: flags.p.unwrap_or(1.0),
        c: match &flags.big_c {
            Some(s) => parse_num(s, "--C")?,
            None => Num::int(4),
        },
        lambda: match &flags.lambda {
            Some(s) => parse_num(s, "--lambda")?,
            None => Num::int(3),
        },
    };
    let ball = BallSpec {
        center: parse_point(flags)?,
        radius: radii[0].clone(),
    };
    let check = poincare_check(&inputs.g, &ball, f, &params)?;
    let body = PoincareBody {
        params,
        ball,
        check,
    };
    emit(flags, &envelope(command, flags, Some(&radii), body))
}

#[derive(Serialize)]
struct VariationBody {
    mode: String,
    total: Num,
    system: metricbv::ArcSystem,
}

fn cmd_variation(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let f = inputs
        .f
        .as_ref()
        .ok_or_else(|| Error::invalid_argument("missing --fn"))?;
    let mode = parse_mode(flags)?;
    let opts = solve_opts(flags);
    let system = variation_solve(&inputs.g, f, mode, &opts)?;
    let body = VariationBody {
        mode: flags.mode.clone().unwrap_or_else(|| "pv".into()),
        total: system.total.clone(),
        system,
    };
    emit(flags, &envelope(command, flags, None, body))
}

#[derive(Serialize)]
struct CoareaBody {
    sweep: metricbv::bv::CoareaSweep,
    var_total: Num,
}

fn cmd_coarea(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let f = inputs
        .f
        .as_ref()
        .ok_or_else(|| Error::invalid_argument("missing --fn"))?;
    let opts = solve_opts(flags);
    let sweep = coarea_sweep(&inputs.g, f, &opts)?;
    let var_total = metricbv::variation::var_total(&inputs.g, f, &opts)?;
    if let Some(csv) = &flags.csv {
        let rows: Vec<Vec<String>> = sweep
            .thresholds
            .iter()
            .zip(&sweep.var_levels)
            .map(|(t, v)| vec![t.to_f64().to_string(), v.to_f64().to_string()])
            .collect();
        emit_csv(csv, "threshold,level_variation", &rows)?;
    }
    let body = CoareaBody { sweep, var_total };
    emit(flags, &envelope(command, flags, None, body))
}

fn cmd_perimeter(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let set = inputs
        .set
        .as_ref()
        .ok_or_else(|| Error::invalid_argument("missing --set"))?;
    let c0 = c0_or_default(flags, &inputs.g)?;
    let bound = perimeter_upper_bound(&inputs.g, set, &c0)?;
    if let Some(csv) = &flags.csv {
        let rows: Vec<Vec<String>> = bound
            .terms
            .iter()
            .map(|t| {
                vec![
                    t.radius.to_f64().to_string(),
                    t.ratio.to_f64().to_string(),
                ]
            })
            .collect();
        emit_csv(csv, "r,ratio", &rows)?;
    }
    emit(flags, &envelope(command, flags, None, bound))
}

fn cmd_bracket(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let opts = solve_opts(flags);
    let f = match (&inputs.f, &inputs.set) {
        (Some(f), _) => f.clone(),
        (None, Some(s)) => indicator(&inputs.g, s)?,
        (None, None) => return Err(Error::invalid_argument("missing --fn or --set")),
    };
    let bracket = tv_bracket(&inputs.g, &f, &opts)?;
    emit(flags, &envelope(command, flags, None, bracket))
}

fn cmd_federer(command: &'static str, flags: &Flags) -> Result<()> {
    let inputs = resolve_inputs(flags)?;
    let set = inputs
        .set
        .as_ref()
        .ok_or_else(|| Error::invalid_argument("missing --set (or --gallery star)"))?;
    let radii = match &flags.radii {
        Some(_) => parse_radii(flags)?,
        None => {
            let shortest = inputs
                .g
                .edges
                .iter()
                .map(|e| e.length.clone())
                .min()
                .ok_or_else(|| Error::invalid_space("graph has no edges"))?;
            radius_grid(&(&shortest / &Num::int(2)), 10)
        }
    };
    let c0 = c0_or_default(flags, &inputs.g)?;
    let opts = solve_opts(flags);
    let report = federer_report(&inputs.g, set, &c0, &radii, &opts)?;
    if let Some(csv) = &flags.csv {
        let mut rows = Vec::new();
        for profile in &report.density {
            for s in &profile.samples {
                rows.push(vec![
                    profile.point.to_string(),
                    s.r.to_f64().to_string(),
                    s.ratio.to_f64().to_string(),
                ]);
            }
        }
        emit_csv(csv, "point,r,ratio", &rows)?;
    }
    emit(flags, &envelope(command, flags, Some(&radii), report))
}
