//! Report assembly. Reports are plain JSON with sorted keys (the default
//! `serde_json` map is ordered), no timestamps, and all randomness pinned to
//! the seed, so a rerun of the same config produces byte-identical output.

use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "mellip/report/v1";

/// JSON-safe float: non-finite values become strings rather than poisoning
/// the document.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format!("{x}"))
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    match x {
        Some(v) => num(v),
        None => Value::Null,
    }
}

pub fn complex(z: mellip_core::C64) -> Value {
    json!({ "im": num(z.im), "re": num(z.re) })
}

#[derive(Debug, Clone)]
pub struct VerdictLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn verdict(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> VerdictLine {
    VerdictLine { name: name.into(), passed, detail: detail.into() }
}

pub struct Report {
    pub task: String,
    pub seed: u64,
    pub inputs: Value,
    pub tolerances: Value,
    pub results: Value,
    pub verdicts: Vec<VerdictLine>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> Value {
        let verdicts: Vec<Value> = self
            .verdicts
            .iter()
            .map(|v| {
                json!({
                    "detail": v.detail,
                    "name": v.name,
                    "passed": v.passed,
                })
            })
            .collect();
        let mut root = Map::new();
        root.insert("inputs".into(), self.inputs.clone());
        root.insert("passed".into(), json!(self.passed()));
        root.insert("results".into(), self.results.clone());
        root.insert("schema".into(), json!(SCHEMA));
        root.insert("seed".into(), json!(self.seed));
        root.insert("task".into(), json!(self.task));
        root.insert("tolerances".into(), self.tolerances.clone());
        root.insert(
            "versions".into(),
            json!({
                "mellip-cli": env!("CARGO_PKG_VERSION"),
                "mellip-core": mellip_core_version(),
            }),
        );
        root.insert("verdicts".into(), Value::Array(verdicts));
        Value::Object(root)
    }

    pub fn to_pretty_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }
}

fn mellip_core_version() -> &'static str {
    // Workspace versions move in lockstep.
    env!("CARGO_PKG_VERSION")
}

/// Symbol samples export like kernels: row per lattice point, one `re,im`
/// pair per frequency point.
pub fn symbol_to_csv(grid: &mellip_core::SymbolGrid64) -> String {
    let count = grid.boxx().point_count();
    let mut out = String::new();
    for kdx in 0..count {
        let mut first = true;
        for jdx in 0..count {
            if !first {
                out.push(',');
            }
            let v = grid.value(kdx, jdx);
            out.push_str(&format!("{:?},{:?}", v.re, v.im));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Matrices export as CSV with one `re,im` pair per kernel entry, row-major
/// over the lattice enumeration.
pub fn kernel_to_csv(kernel: &mellip_core::matrix::CMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..kernel.rows() {
        let mut first = true;
        for j in 0..kernel.cols() {
            if !first {
                out.push(',');
            }
            let v = kernel.get(i, j);
            out.push_str(&format!("{:?},{:?}", v.re, v.im));
            first = false;
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_serialize_deterministically() {
        let r = Report {
            task: "demo".into(),
            seed: 7,
            inputs: json!({"b": 1, "a": 2}),
            tolerances: json!({"tol": 1e-10}),
            results: json!({"z": [1.0, 2.0], "a": {"nested": true}}),
            verdicts: vec![verdict("check", true, "ok")],
        };
        let a = r.to_pretty_string();
        let b = r.to_pretty_string();
        assert_eq!(a, b);
        assert!(a.contains("\"schema\": \"mellip/report/v1\""));
        // Keys are sorted by the default serde_json map.
        let apos = a.find("\"inputs\"").unwrap();
        let ppos = a.find("\"passed\"").unwrap();
        assert!(apos < ppos);
    }

    #[test]
    fn non_finite_floats_become_strings() {
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(opt_num(None), Value::Null);
        assert_eq!(num(1.5), json!(1.5));
    }

    #[test]
    fn csv_rows_carry_re_im_pairs() {
        let m = mellip_core::matrix::CMatrix::<f64>::from_fn(2, 2, |i, j| {
            mellip_core::C64::new(i as f64, j as f64)
        });
        let csv = kernel_to_csv(&m);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "0.0,0.0,0.0,1.0");
        assert_eq!(lines[1], "1.0,0.0,1.0,1.0");
    }
}
