//! Tabular interchange formats.
//!
//! CSV files open with `# meta: {...}` comment lines carrying the run
//! configuration, then a header, then rows. Floats print in shortest
//! round-trip form, so identical runs produce identical bytes. The curve
//! CSV (columns `z,v[,lambda]`) is the interchange format between the
//! sweep and the standalone elbow detector.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::elbow::{CurveSample, ElbowResult, ErrorCurve};
use crate::synthetic::ContainmentReport;
use crate::sweep::SweepResult;
use crate::ranking::RankedConnections;
use crate::{Error, Result};

/// Standard metadata envelope: tool name, version, and the caller's config.
pub fn meta_value(command: &str, config: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "tool": "semgraph",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    })
}

pub fn write_text_file(path: impl AsRef<Path>, text: &str) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Serializes a value as pretty JSON wrapped with the meta block.
pub fn json_document<T: Serialize>(meta: &serde_json::Value, key: &str, value: &T) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("meta".into(), meta.clone());
    map.insert(key.into(), serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    s.push('\n');
    Ok(s)
}

fn meta_comment(meta: &serde_json::Value) -> String {
    format!("# meta: {}\n", serde_json::to_string(meta).expect("meta serializes"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Raw curve samples, one per observation of the error function.
pub fn curve_csv(samples: &[CurveSample], meta: &serde_json::Value) -> String {
    let with_lambda = samples.iter().all(|s| s.lambda.is_some());
    let mut out = meta_comment(meta);
    out.push_str(if with_lambda { "z,v,lambda\n" } else { "z,v\n" });
    for s in samples {
        if with_lambda {
            let _ = writeln!(out, "{},{},{}", s.z, s.value, s.lambda.unwrap());
        } else {
            let _ = writeln!(out, "{},{}", s.z, s.value);
        }
    }
    out
}

/// Reads a curve CSV: `#` lines are skipped, the header must start with
/// columns `z,v` and may carry a third `lambda` column.
pub fn read_curve_csv(text: &str) -> Result<Vec<CurveSample>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty curve file".into()))?;
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    if cols.len() < 2 || cols[0] != "z" || cols[1] != "v" {
        return Err(Error::InvalidInput(format!(
            "curve header must be z,v[,lambda], got '{header}'"
        )));
    }
    let has_lambda = cols.len() >= 3 && cols[2] == "lambda";
    let expected = if has_lambda { 3 } else { 2 };

    let mut samples = Vec::new();
    for (row_no, (_, line)) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cells.len() != expected {
            return Err(Error::Parse {
                row: row_no + 1,
                col: cells.len().min(expected) + 1,
                message: format!("expected {expected} cells, found {}", cells.len()),
            });
        }
        let parse = |idx: usize| -> Result<f64> {
            cells[idx].parse::<f64>().map_err(|_| Error::Parse {
                row: row_no + 1,
                col: idx + 1,
                message: format!("'{}' is not a number", cells[idx]),
            })
        };
        let z = parse(0)?;
        let v = parse(1)?;
        let lambda = if has_lambda { Some(parse(2)?) } else { None };
        samples.push(CurveSample { z, value: v, lambda });
    }
    Ok(samples)
}

/// Sweep table with the standard columns.
pub fn sweep_csv(sr: &SweepResult, meta: &serde_json::Value) -> String {
    let mut out = meta_comment(meta);
    out.push_str("lambda,links,nmse_all,nmse_outputs,kkt,iterations\n");
    for r in &sr.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.lambda,
            r.link_count,
            r.nmse_all,
            fmt_opt(r.nmse_outputs),
            r.kkt_violation,
            r.iterations
        );
    }
    out
}

/// Elbow detector result as a JSON document.
#[derive(Serialize)]
struct ElbowDoc<'a> {
    meta: &'a serde_json::Value,
    k1: f64,
    k2: f64,
    area_total: f64,
    area_first: f64,
    area_middle: f64,
    area_tail: f64,
    point_elbow: f64,
    lambda_interval: Option<(f64, f64)>,
    lambda_point: Option<f64>,
    degenerate: bool,
    curve_points: usize,
    shift_applied: f64,
    adjusted_points: usize,
}

pub fn elbow_json(curve: &ErrorCurve, r: &ElbowResult, meta: &serde_json::Value) -> Result<String> {
    let doc = ElbowDoc {
        meta,
        k1: r.k1_star,
        k2: r.k2_star,
        area_total: r.total_area,
        area_first: r.areas.0,
        area_middle: r.areas.1,
        area_tail: r.areas.2,
        point_elbow: r.point_elbow,
        lambda_interval: r.lambda_interval,
        lambda_point: r.lambda_point,
        degenerate: r.degenerate,
        curve_points: curve.len(),
        shift_applied: curve.shift_applied(),
        adjusted_points: curve.adjusted_points(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Containment experiment, one row per run.
pub fn containment_csv(report: &ContainmentReport, meta: &serde_json::Value) -> String {
    let mut out = meta_comment(meta);
    out.push_str(
        "run,gt_lambda_low,gt_lambda_high,gt_contiguous,detected_lambda_low,detected_lambda_high,\
         elbow_lambda,interval_z_low,interval_z_high,elbow_z,contained,\
         overshoot_fraction,low_end_violation,high_end_violation\n",
    );
    for r in &report.records {
        let (gl, gh, gc) = match r.ground_truth {
            Some(g) => (g.lambda_low.to_string(), g.lambda_high.to_string(), g.contiguous.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_index,
            gl,
            gh,
            gc,
            r.detected_lambda_low,
            r.detected_lambda_high,
            r.elbow_lambda,
            r.interval_z_low,
            r.interval_z_high,
            r.elbow_z,
            r.contained.map(|c| c.to_string()).unwrap_or_default(),
            r.overshoot_fraction,
            r.low_end_violation,
            r.high_end_violation
        );
    }
    out
}

fn display_node(id: usize, outputs: &BTreeSet<usize>, names: &[(usize, String)]) -> String {
    if outputs.contains(&id) {
        names
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| (id + 1).to_string())
    } else {
        (id + 1).to_string()
    }
}

/// Markdown ranking report in the style of a connections table: one row per
/// output with its ordered neighbor list, the lambda used, and the edges
/// among neighbors. Node ids print 1-based; outputs print by name.
pub fn ranking_markdown(r: &RankedConnections, meta: &serde_json::Value) -> String {
    let outputs: BTreeSet<usize> = r.outputs.iter().map(|o| o.output).collect();
    let names: Vec<(usize, String)> = r
        .outputs
        .iter()
        .map(|o| (o.output, o.output_name.clone()))
        .collect();
    let lambda_text = r
        .lambda
        .map(|l| format!("{l:.2}"))
        .unwrap_or_else(|| "-".into());
    let other = if r.other_connections.is_empty() {
        "-".to_string()
    } else {
        r.other_connections
            .iter()
            .map(|&(i, j, _)| {
                format!(
                    "{}-{}",
                    display_node(i, &outputs, &names),
                    display_node(j, &outputs, &names)
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    };

    let mut out = format!("<!-- meta: {} -->\n", serde_json::to_string(meta).expect("meta"));
    let _ = writeln!(
        out,
        "\n| output | connections (by |weight|) | lambda | other connections |"
    );
    let _ = writeln!(out, "|---|---|---|---|");
    for o in &r.outputs {
        let conns = if o.neighbors.is_empty() {
            "-".to_string()
        } else {
            o.neighbors
                .iter()
                .map(|e| display_node(e.node, &outputs, &names))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            o.output_name, conns, lambda_text, other
        );
    }
    let interlink = if r.interlink_allowed { "allowed" } else { "forbidden" };
    let _ = writeln!(out, "\nOutput interlink: {interlink}.");
    out
}

/// CSV twin of the markdown report, same four columns.
pub fn ranking_csv(r: &RankedConnections, meta: &serde_json::Value) -> String {
    let outputs: BTreeSet<usize> = r.outputs.iter().map(|o| o.output).collect();
    let names: Vec<(usize, String)> = r
        .outputs
        .iter()
        .map(|o| (o.output, o.output_name.clone()))
        .collect();
    let mut out = meta_comment(meta);
    out.push_str("output,connections,lambda,other_connections\n");
    let other = r
        .other_connections
        .iter()
        .map(|&(i, j, _)| {
            format!(
                "{}-{}",
                display_node(i, &outputs, &names),
                display_node(j, &outputs, &names)
            )
        })
        .collect::<Vec<_>>()
        .join(";");
    for o in &r.outputs {
        let conns = o
            .neighbors
            .iter()
            .map(|e| display_node(e.node, &outputs, &names))
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(
            out,
            "{},{},{},{}",
            o.output_name,
            conns,
            fmt_opt(r.lambda),
            other
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_round_trips() {
        let samples = vec![
            CurveSample::with_lambda(0.0, 1.0, 8.0),
            CurveSample::with_lambda(3.0, 0.25, 2.0),
            CurveSample::with_lambda(9.0, 0.0625, 0.0),
        ];
        let text = curve_csv(&samples, &serde_json::json!({"k": 1}));
        let back = read_curve_csv(&text).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn curve_csv_without_lambda_column() {
        let text = "# comment\nz,v\n0,10\n1,5\n2,0\n";
        let samples = read_curve_csv(text).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[1], CurveSample::new(1.0, 5.0));
    }

    #[test]
    fn curve_csv_reports_bad_cells() {
        let text = "z,v\n0,10\n1,oops\n";
        match read_curve_csv(text).unwrap_err() {
            Error::Parse { row, col, .. } => assert_eq!((row, col), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_curve_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn json_document_embeds_meta_first() {
        let meta = meta_value("test", serde_json::json!({"seed": 1}));
        let doc = json_document(&meta, "payload", &vec![1, 2, 3]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["meta"]["tool"], "semgraph");
        assert_eq!(v["payload"][2], 3);
    }
}
