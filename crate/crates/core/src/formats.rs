//! On-disk formats: the layout file (JSON) and the results tables (CSV).
//!
//! Layout files are written compactly with a fixed key order and shortest
//! round-trip decimal reals, so writing a parsed file reproduces it byte for
//! byte. Every file ends with a single newline.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Layout, Plan, Point2};
use crate::harness::{EvalRecord, SweepRow};
use crate::planner::Mode;

pub const SCHEMA_VERSION: u32 = 1;

pub const RESULTS_HEADER: &str = "layout_id,planner_t,k_observed,beta,mode,l,theoretical_k_pred,n_samples,exact_match_rate,mean_lev_similarity,seed";

pub const SWEEP_HEADER: &str =
    "layout_id,t,beta,l,plan,exact_p,approx_p,ratio,approx_plan,approx_plan_exact_p";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFileRepr {
    schema_version: u32,
    layouts: Vec<LayoutRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutRepr {
    id: String,
    start: [f64; 2],
    targets: Vec<[f64; 2]>,
}

fn to_point(p: [f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

/// Serializes layouts to the canonical layout-file text.
pub fn write_layout_file(layouts: &[Layout]) -> Result<String> {
    let repr = LayoutFileRepr {
        schema_version: SCHEMA_VERSION,
        layouts: layouts
            .iter()
            .map(|l| LayoutRepr {
                id: l.id().to_string(),
                start: [l.start().x, l.start().y],
                targets: l.targets().iter().map(|p| [p.x, p.y]).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&repr)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates a layout file. Layout ids must be unique.
pub fn read_layout_file(text: &str, bounds: &Bounds) -> Result<Vec<Layout>> {
    let repr: LayoutFileRepr = serde_json::from_str(text)?;
    if repr.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported schema_version {}",
            repr.schema_version
        )));
    }
    let mut seen = HashSet::new();
    repr.layouts
        .into_iter()
        .map(|l| {
            if !seen.insert(l.id.clone()) {
                return Err(Error::Format(format!("duplicate layout id {:?}", l.id)));
            }
            Layout::with_bounds(
                l.id,
                to_point(l.start),
                l.targets.into_iter().map(to_point).collect(),
                bounds,
            )
        })
        .collect()
}

pub fn load_layouts(path: &Path, bounds: &Bounds) -> Result<Vec<Layout>> {
    read_layout_file(&std::fs::read_to_string(path)?, bounds)
}

pub fn save_layouts(path: &Path, layouts: &[Layout]) -> Result<()> {
    std::fs::write(path, write_layout_file(layouts)?)?;
    Ok(())
}

/// Run settings repeated on every results row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub beta: f64,
    pub mode: Mode,
    pub l: usize,
    pub seed: u64,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_results_table(records: &[EvalRecord], meta: &RunMeta) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.layout_id),
            r.planner_t,
            r.k_observed,
            meta.beta,
            meta.mode,
            meta.l,
            r.theoretical_k_pred,
            r.n_samples,
            r.exact_match_rate,
            r.mean_lev_similarity,
            meta.seed
        );
    }
    out
}

fn plan_field(p: &Plan) -> String {
    p.order().iter().map(|i| i.to_string()).collect::<Vec<_>>().join("-")
}

pub fn write_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.layout_id),
            r.t,
            r.beta,
            r.l,
            plan_field(&r.plan),
            r.exact_p,
            r.approx_p,
            r.ratio,
            plan_field(&r.approx_plan),
            r.approx_plan_exact_p
        );
    }
    out
}
