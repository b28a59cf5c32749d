//! File loading and saving for the JSON formats: spaces, functions, and
//! subsets, plus a generic report writer.  All errors carry the offending
//! path; parse errors keep serde's line/column message.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::pl::PiecewiseLinear;
use crate::subset::EdgeSubset;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads and validates a space file.
pub fn load_space(path: &Path) -> Result<MetricGraph> {
    let g: MetricGraph = read_json(path)?;
    crate::graph::validate_graph(&g).into_result(Error::InvalidSpace)?;
    Ok(g)
}

/// Loads a function file and checks it against its space.
pub fn load_function(path: &Path, g: &MetricGraph) -> Result<PiecewiseLinear> {
    let f: PiecewiseLinear = read_json(path)?;
    crate::pl::validate_fn(g, &f).into_result(Error::InvalidFunction)?;
    Ok(f)
}

/// Loads a subset file and checks it against its space.
pub fn load_subset(path: &Path, g: &MetricGraph) -> Result<EdgeSubset> {
    let s: EdgeSubset = read_json(path)?;
    crate::subset::validate_subset(g, &s).into_result(Error::InvalidSubset)?;
    Ok(s)
}

/// Writes any serializable report as pretty JSON with a trailing newline.
/// Serialization order is struct order, so identical values give identical
/// bytes.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{star_marked_set, star_space};
    use crate::graph::Metric;
    use crate::num::Num;
    use crate::pl::PiecewiseLinear;

    #[test]
    fn round_trips_space_function_and_subset() {
        let dir = std::env::temp_dir().join("metricbv_io_test");
        fs::create_dir_all(&dir).unwrap();
        let g = star_space(2, Metric::AmbientEuclidean).unwrap();
        let sp = dir.join("space.json");
        save_json(&sp, &g).unwrap();
        let g2 = load_space(&sp).unwrap();
        assert_eq!(g.edges.len(), g2.edges.len());
        assert_eq!(g.metric, g2.metric);

        let e = star_marked_set(2).unwrap();
        let ep = dir.join("set.json");
        save_json(&ep, &e).unwrap();
        let e2 = load_subset(&ep, &g2).unwrap();
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            serde_json::to_string(&e2).unwrap()
        );

        let f = crate::subset::indicator(&g, &e).unwrap();
        let fp = dir.join("fn.json");
        save_json(&fp, &f).unwrap();
        let f2 = load_function(&fp, &g2).unwrap();
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            serde_json::to_string(&f2).unwrap()
        );
    }

    #[test]
    fn loaders_reject_garbage_with_positions() {
        let dir = std::env::temp_dir().join("metricbv_io_test_bad");
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.json");
        fs::write(&p, "{\"metric\": \"geodesic\", \"vertices\": [}").unwrap();
        let err = load_space(&p).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.json"), "missing path in: {msg}");
        assert!(msg.contains("column"), "missing position in: {msg}");

        let missing = dir.join("absent.json");
        assert!(matches!(load_space(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn rational_strings_parse_exactly() {
        let dir = std::env::temp_dir().join("metricbv_io_test_rat");
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("space.json");
        fs::write(
            &p,
            r#"{"metric":"geodesic",
                "vertices":[{"id":0},{"id":1}],
                "edges":[{"id":0,"u":0,"v":1,"length":"1/3"}]}"#,
        )
        .unwrap();
        let g = load_space(&p).unwrap();
        assert_eq!(g.edges[0].length, Num::ratio(1, 3));
        let f = PiecewiseLinear::constant(&g, Num::ratio(2, 7));
        let fp = dir.join("fn.json");
        save_json(&fp, &f).unwrap();
        let text = fs::read_to_string(&fp).unwrap();
        assert!(text.contains("\"2/7\""));
    }
}
