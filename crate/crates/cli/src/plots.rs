//! Plot-ready CSVs rendered from a run report's JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::Value;

/// Numbers in plain `.`-decimal form; `null` (non-finite) becomes an empty cell.
fn num(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(|x| format!("{x:e}")).unwrap_or_default(),
        Value::Number(n) => n.to_string(),
        _ => String::new(),
    }
}

/// Quotes a text cell that holds CSV metacharacters.
fn text(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn arr(v: &Value) -> &[Value] {
    v.as_array().map(Vec::as_slice).unwrap_or(&[])
}

fn str_of(v: &Value) -> &str {
    v.as_str().unwrap_or("")
}

/// `label,t,x,value`, one row per point of every slice.
pub fn density_slices(report: &Value) -> String {
    let mut s = String::from("label,t,x,value\n");
    for sl in arr(&report["plots"]["slices"]) {
        let (label, t) = (text(str_of(&sl["label"])), num(&sl["t"]));
        for (x, v) in arr(&sl["x"]).iter().zip(arr(&sl["values"])) {
            let _ = writeln!(s, "{label},{t},{},{}", num(x), num(v));
        }
    }
    s
}

pub fn ratio_heatmap(report: &Value) -> String {
    let mut s = String::from("label,t,x,y,ratio\n");
    for c in arr(&report["plots"]["ratio_heatmap"]) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            text(str_of(&c["label"])),
            num(&c["t"]),
            num(&c["x"]),
            num(&c["y"]),
            num(&c["ratio"])
        );
    }
    s
}

/// `series,label,n,sup_norm,ratio,predicted` for parametrix and drift term norms.
pub fn term_decay(report: &Value) -> String {
    let mut s = String::from("series,label,n,sup_norm,ratio,predicted\n");
    for rec in arr(&report["convergence"]) {
        let kind = str_of(&rec["kind"]);
        let label = text(str_of(&rec["label"]));
        for e in arr(&rec["log"]["entries"]) {
            let _ = writeln!(
                s,
                "{kind},{label},{},{},{},{}",
                num(&e["n"]),
                num(&e["sup_norm"]),
                num(&e["ratio"]),
                num(&e["predicted"])
            );
        }
    }
    s
}

/// Every constant of every report, including those nested in criteria.
pub fn constants(report: &Value) -> String {
    let mut s = String::from("criterion,id,status,key,value,refined_value,stability_delta,threshold\n");
    let mut emit = |crit: String, r: &Value| {
        let id = text(str_of(&r["id"]));
        let status = str_of(&r["status"]);
        if let Some(map) = r["constants"].as_object() {
            for (k, v) in map {
                let _ = writeln!(
                    s,
                    "{crit},{id},{status},{},{},{},{},{}",
                    text(k),
                    num(v),
                    num(&r["refined_constants"][k]),
                    num(&r["stability_delta"]),
                    num(&r["threshold"])
                );
            }
        }
    };
    for r in arr(&report["reports"]) {
        emit(String::new(), r);
    }
    for c in arr(&report["criteria"]) {
        for r in arr(&c["reports"]) {
            emit(num(&c["number"]), r);
        }
    }
    s
}

pub fn criteria(report: &Value) -> String {
    let mut s = String::from("criterion,title,passed,key,value\n");
    for c in arr(&report["criteria"]) {
        for m in arr(&c["measured"]) {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                num(&c["number"]),
                text(str_of(&c["title"])),
                c["passed"].as_bool().unwrap_or(false),
                text(str_of(&m[0])),
                num(&m[1])
            );
        }
    }
    s
}

/// Writes every plot CSV into `dir/plots` and returns the written paths.
pub fn render(report: &Value, dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).with_context(|| format!("creating {}", plots.display()))?;
    let files: [(&str, fn(&Value) -> String); 5] = [
        ("density_slices.csv", density_slices),
        ("ratio_heatmap.csv", ratio_heatmap),
        ("term_decay.csv", term_decay),
        ("constants.csv", constants),
        ("criteria.csv", criteria),
    ];
    let mut out = Vec::new();
    for (name, f) in files {
        let path = plots.join(name);
        fs::write(&path, f(report)).with_context(|| format!("writing {}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_report_gives_headers_only() {
        let r = json!({"reports": [], "criteria": [], "convergence": [], "plots": {"slices": [], "ratio_heatmap": []}});
        for f in [density_slices, ratio_heatmap, term_decay, constants, criteria] {
            assert_eq!(f(&r).lines().count(), 1);
        }
    }

    #[test]
    fn rows_and_quoting() {
        let r = json!({
            "plots": {"slices": [{"label": "p, x0", "t": 1.0, "x": [0.0, 1.0], "values": [0.5, null]}]},
            "reports": [{"id": "a", "status": "pass", "constants": {"c": 2.0}, "refined_constants": {}}]
        });
        let d = density_slices(&r);
        assert_eq!(d.lines().count(), 3);
        assert!(d.contains("\"p, x0\",1e0,1e0,\n"), "{d}");
        assert!(constants(&r).contains(",a,pass,c,2e0,,,"));
    }
}
