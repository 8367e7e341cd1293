//! Experiment configuration: a single JSON document naming the lattice,
//! the weight, the symbols, the task and its parameters.

use serde::Deserialize;

use mellip_core::weights::WeightFunction;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeCfg,
    pub weight: WeightCfg,
    #[serde(default)]
    pub symbols: Vec<SymbolSource>,
    /// Optional echo of the task; must match the subcommand when present.
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeCfg {
    pub n: usize,
    pub k: KSpec,
}

/// A single half-width or an ascending list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Single(i64),
    List(Vec<i64>),
}

impl KSpec {
    pub fn as_list(&self) -> Vec<i64> {
        match self {
            KSpec::Single(k) => vec![*k],
            KSpec::List(ks) => ks.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightCfg {
    Standard { m: f64 },
    Anisotropic { exponents: Vec<u32> },
}

impl WeightCfg {
    pub fn build(&self, dim: usize) -> Result<WeightFunction<f64>, String> {
        match self {
            WeightCfg::Standard { m } => {
                WeightFunction::standard(dim, *m).map_err(|e| e.to_string())
            }
            WeightCfg::Anisotropic { exponents } => {
                if exponents.len() != dim {
                    return Err(format!(
                        "anisotropic weight has {} exponents for dimension {dim}",
                        exponents.len()
                    ));
                }
                WeightFunction::anisotropic(exponents.clone()).map_err(|e| e.to_string())
            }
        }
    }
}

/// Where a symbol comes from: grammar text, a builtin id, or a tabulated file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSource {
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Declared symbol order.
    #[serde(default)]
    pub m: f64,
    /// Symbol regularity; defaults to `1/mu` of the weight.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Expansion / Neumann depth.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_alpha_max")]
    pub alpha_max: u32,
    #[serde(default = "default_alpha_max")]
    pub beta_max: u32,
    /// Ellipticity radius.
    #[serde(default = "default_r1")]
    pub r1: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Sobolev order for multiplier/compactness checks.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Embedding pair.
    #[serde(default)]
    pub m1: f64,
    #[serde(default = "default_m2")]
    pub m2: f64,
    /// Weight validation window.
    #[serde(default = "default_window")]
    pub window: i64,
    /// Accepted band for the a-priori ratio.
    #[serde(default = "default_apriori_min")]
    pub apriori_min: f64,
    #[serde(default = "default_apriori_max")]
    pub apriori_max: f64,
}

fn default_depth() -> usize {
    3
}
fn default_alpha_max() -> u32 {
    2
}
fn default_r1() -> f64 {
    1.0
}
fn default_samples() -> usize {
    32
}
fn default_s() -> f64 {
    -1.0
}
fn default_m2() -> f64 {
    1.0
}
fn default_window() -> i64 {
    256
}
fn default_apriori_min() -> f64 {
    0.4
}
fn default_apriori_max() -> f64 {
    3.0
}

impl Default for Params {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
                "lattice": { "n": 1, "k": 16 },
                "weight": { "kind": "standard", "m": 1.0 }
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.lattice.k.as_list(), vec![16]);
        assert_eq!(cfg.params.depth, 3);
        assert_eq!(cfg.params.window, 256);
        assert!(cfg.symbols.is_empty());
    }

    #[test]
    fn k_list_and_anisotropic_weight() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{
                "lattice": { "n": 2, "k": [4, 6] },
                "weight": { "kind": "anisotropic", "exponents": [1, 2] },
                "symbols": [ { "expr": "Lambda" } ],
                "task": "check-symbol",
                "params": { "m": 1.0, "rho": 0.5, "seed": 9 }
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.lattice.k.as_list(), vec![4, 6]);
        assert!(cfg.weight.build(2).is_ok());
        assert_eq!(cfg.params.rho, Some(0.5));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<ExperimentConfig, _> = serde_json::from_str(
            r#"{
                "lattice": { "n": 1, "k": 8 },
                "weight": { "kind": "standard", "m": 1.0 },
                "bogus": 1
            }"#,
        );
        assert!(r.is_err());
    }
}
