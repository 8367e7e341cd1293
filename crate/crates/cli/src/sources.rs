//! Resolution of symbol sources: grammar expressions, the builtin catalog,
//! and tabulated sample files.

use std::fs;
use std::path::Path;

use mellip_core::lattice::LatticeBox;
use mellip_core::symbols::SymbolGrid;
use mellip_core::weights::WeightFunction;
use mellip_core::C64;

use crate::config::SymbolSource;
use crate::expr::{self, Node};

/// Boxed evaluator for builtins the grammar cannot express.
pub type SampleFn = Box<dyn Fn(&[i64], &[f64]) -> C64>;

pub enum Sampler {
    Expr(Node, String),
    Closure(SampleFn, String),
    /// Tabulated values tied to one specific box.
    Table { path: String, n: usize, half_width: i64, values: Vec<C64> },
}

impl std::fmt::Debug for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Sampler({})", self.label())
    }
}

impl Sampler {
    pub fn label(&self) -> String {
        match self {
            Sampler::Expr(_, text) => text.clone(),
            Sampler::Closure(_, name) => format!("builtin:{name}"),
            Sampler::Table { path, .. } => format!("file:{path}"),
        }
    }
}

/// The builtin catalog. `n` fixes the arity of the frequency modes.
fn builtin(name: &str, n: usize) -> Result<Sampler, String> {
    let mode_one = |lead: i64| {
        let mut c = vec![0i64; n];
        c[0] = lead;
        c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    };
    let expr_text = match name {
        "one" => "1".to_string(),
        "lambda" => "Lambda".to_string(),
        "shift" => format!("expi({})", mode_one(1)),
        "running-elliptic" => format!("Lambda + 0.5*expi({})", mode_one(1)),
        "elliptic-quotient" => format!("(Lambda + 0.5*expi({})) / Lambda", mode_one(1)),
        "two-plus-sin" => {
            // 2 + sin(2 pi x_1): modes +-1 with imaginary coefficients, not
            // expressible in the grammar.
            let f = move |_k: &[i64], x: &[f64]| {
                C64::new(2.0 + (2.0 * std::f64::consts::PI * x[0]).sin(), 0.0)
            };
            return Ok(Sampler::Closure(Box::new(f), name.to_string()));
        }
        other => {
            return Err(format!(
                "unknown builtin '{other}' (expected one, lambda, shift, running-elliptic, elliptic-quotient, two-plus-sin)"
            ))
        }
    };
    let node = expr::parse(&expr_text).map_err(|e| format!("builtin '{name}': {e}"))?;
    Ok(Sampler::Expr(node, expr_text))
}

/// Tabulated format: a header line `n K`, then `M^n * M^n` lines
/// `k_1 .. k_n j_1 .. j_n re im` (lattice coordinates, frequency grid
/// labels, value).
fn read_table(path: &str) -> Result<Sampler, String> {
    let text = fs::read_to_string(Path::new(path))
        .map_err(|e| format!("{path}: cannot read tabulated symbol: {e}"))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| format!("{path}: empty file"))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| format!("{path}:1: header must be 'n K'"))?;
    let half_width: i64 = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| format!("{path}:1: header must be 'n K'"))?;
    if parts.next().is_some() {
        return Err(format!("{path}:1: header must be exactly 'n K'"));
    }
    let boxx = LatticeBox::new(n, half_width).map_err(|e| format!("{path}:1: {e}"))?;
    let count = boxx.point_count();
    let mut values = vec![None::<C64>; count * count];
    let mut seen = 0usize;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 * n + 2 {
            return Err(format!(
                "{path}:{}: expected {} fields, found {}",
                lineno + 1,
                2 * n + 2,
                fields.len()
            ));
        }
        let parse_i = |s: &str| -> Result<i64, String> {
            s.parse().map_err(|_| format!("{path}:{}: bad integer '{s}'", lineno + 1))
        };
        let parse_f = |s: &str| -> Result<f64, String> {
            s.parse().map_err(|_| format!("{path}:{}: bad float '{s}'", lineno + 1))
        };
        let k: Vec<i64> = fields[..n].iter().map(|s| parse_i(s)).collect::<Result<_, _>>()?;
        let j: Vec<i64> = fields[n..2 * n].iter().map(|s| parse_i(s)).collect::<Result<_, _>>()?;
        if k.iter().any(|c| c.abs() > half_width) {
            return Err(format!("{path}:{}: lattice point {k:?} outside the box", lineno + 1));
        }
        if j.iter().any(|&c| c < 0 || c >= boxx.points_per_axis()) {
            return Err(format!("{path}:{}: frequency label {j:?} out of range", lineno + 1));
        }
        let re = parse_f(fields[2 * n])?;
        let im = parse_f(fields[2 * n + 1])?;
        let kdx = boxx.index_of(&k);
        let mut jdx = 0i64;
        for &a in &j {
            jdx = jdx * boxx.points_per_axis() + a;
        }
        let slot = &mut values[kdx * count + jdx as usize];
        if slot.is_some() {
            return Err(format!("{path}:{}: duplicate entry for {k:?}, {j:?}", lineno + 1));
        }
        *slot = Some(C64::new(re, im));
        seen += 1;
    }
    if seen != count * count {
        return Err(format!("{path}: expected {} samples, found {seen}", count * count));
    }
    Ok(Sampler::Table {
        path: path.to_string(),
        n,
        half_width,
        values: values.into_iter().map(|v| v.expect("all filled")).collect(),
    })
}

pub fn resolve(source: &SymbolSource, n: usize) -> Result<Sampler, String> {
    match (&source.expr, &source.builtin, &source.file) {
        (Some(text), None, None) => {
            let node = expr::parse(text).map_err(|e| format!("symbol expression: {e}"))?;
            expr::validate(&node, n).map_err(|e| format!("symbol expression: {e}"))?;
            Ok(Sampler::Expr(node, text.clone()))
        }
        (None, Some(name), None) => builtin(name, n),
        (None, None, Some(path)) => read_table(path),
        _ => Err("each symbol source needs exactly one of 'expr', 'builtin', 'file'".into()),
    }
}

/// Sample a resolved source on a box.
pub fn sample(
    sampler: &Sampler,
    boxx: LatticeBox,
    weight: &WeightFunction<f64>,
    order: f64,
    rho: f64,
) -> Result<SymbolGrid<f64>, String> {
    match sampler {
        Sampler::Expr(node, text) => {
            let count = boxx.point_count();
            let mut values = Vec::with_capacity(count * count);
            for kdx in 0..count {
                let k = boxx.point(kdx);
                for jdx in 0..count {
                    let x = boxx.frequency::<f64>(jdx);
                    values.push(
                        expr::eval(node, &k, &x, weight)
                            .map_err(|e| format!("sampling '{text}': {e}"))?,
                    );
                }
            }
            SymbolGrid::from_values(boxx, weight, order, rho, text.clone(), values)
                .map_err(|e| e.to_string())
        }
        Sampler::Closure(f, name) => {
            SymbolGrid::sample(boxx, weight, order, rho, format!("builtin:{name}"), |k, x| {
                f(k, x)
            })
            .map_err(|e| e.to_string())
        }
        Sampler::Table { path, n, half_width, values } => {
            if *n != boxx.dim() || *half_width != boxx.half_width() {
                return Err(format!(
                    "{path}: tabulated for n={n}, K={half_width}, requested n={}, K={}",
                    boxx.dim(),
                    boxx.half_width()
                ));
            }
            SymbolGrid::from_values(
                boxx,
                weight,
                order,
                rho,
                format!("file:{path}"),
                values.clone(),
            )
            .map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SymbolSource;

    fn src_expr(text: &str) -> SymbolSource {
        SymbolSource { expr: Some(text.into()), builtin: None, file: None }
    }

    #[test]
    fn expression_sources_sample_onto_boxes() {
        let s = resolve(&src_expr("Lambda + 0.5*expi(1)"), 1).unwrap();
        let boxx = LatticeBox::new(1, 4).unwrap();
        let w = WeightFunction::standard(1, 1.0).unwrap();
        let g = sample(&s, boxx, &w, 1.0, 1.0).unwrap();
        assert_eq!(g.order(), 1.0);
        assert!((g.value_at(&[0], 0) - C64::new(1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn out_of_range_coordinate_is_rejected_at_resolve_time() {
        let e = resolve(&src_expr("k[3]"), 2).unwrap_err();
        assert!(e.contains("out of range"), "{e}");
    }

    #[test]
    fn builtins_resolve_and_unknown_is_reported() {
        for name in
            ["one", "lambda", "shift", "running-elliptic", "elliptic-quotient", "two-plus-sin"]
        {
            let s = SymbolSource { expr: None, builtin: Some(name.into()), file: None };
            resolve(&s, 2).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let s = SymbolSource { expr: None, builtin: Some("nope".into()), file: None };
        assert!(resolve(&s, 1).is_err());
    }

    #[test]
    fn tabulated_round_trip() {
        let boxx = LatticeBox::new(1, 2).unwrap();
        let w = WeightFunction::standard(1, 1.0).unwrap();
        let mut text = String::from("1 2\n");
        for kdx in 0..boxx.point_count() {
            let k = boxx.point(kdx)[0];
            for j in 0..boxx.points_per_axis() {
                text.push_str(&format!("{k} {j} {}.5 -{j}.25\n", k + 10));
            }
        }
        let dir = std::env::temp_dir().join(format!("mellip-tab-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sym.tab");
        std::fs::write(&path, &text).unwrap();
        let s = resolve(
            &SymbolSource {
                expr: None,
                builtin: None,
                file: Some(path.to_string_lossy().into_owned()),
            },
            1,
        )
        .unwrap();
        let g = sample(&s, boxx, &w, 0.0, 1.0).unwrap();
        assert!((g.value_at(&[-2], 0) - C64::new(8.5, -0.25)).norm() < 1e-14);
        assert!((g.value_at(&[2], 4) - C64::new(12.5, -4.25)).norm() < 1e-14);

        // Wrong box is refused.
        let other = LatticeBox::new(1, 3).unwrap();
        assert!(sample(&s, other, &w, 0.0, 1.0).is_err());
    }

    #[test]
    fn tabulated_rejects_incomplete_files() {
        let dir = std::env::temp_dir().join(format!("mellip-tab2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.tab");
        std::fs::write(&path, "1 1\n0 0 1.0 0.0\n").unwrap();
        let s = SymbolSource {
            expr: None,
            builtin: None,
            file: Some(path.to_string_lossy().into_owned()),
        };
        let e = resolve(&s, 1).unwrap_err();
        assert!(e.contains("expected 9 samples"), "{e}");
    }
}
