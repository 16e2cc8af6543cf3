//! Experiment configuration: one JSON document drives every
//! config-based subcommand.
//!
//! The document is schema-tagged (`experiment/1`) and rejects unknown
//! fields, so a typo in a key is a validation error rather than a
//! silently ignored setting.

use std::path::Path;

use bridge_core::canonical;
use bridge_core::mc::McConfig;
use bridge_core::spinchain::{Boundary, QuantumChainSpec};
use bridge_core::{Error, Module, Result};
use serde::{Deserialize, Serialize};

/// Schema tag of experiment configuration documents.
pub const EXPERIMENT_SCHEMA: &str = "experiment/1";

/// Default inverse temperature used when the config omits `beta`:
/// cold enough to stand in for the ground state at the given couplings.
pub fn ground_proxy_beta(coupling_j: f64, field_b: f64) -> f64 {
    20.0 / coupling_j.abs().max(field_b.abs()).max(f64::MIN_POSITIVE)
}

/// Quantum chain section. `beta` may be omitted; the run then uses
/// [`ground_proxy_beta`] and outputs label the choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    pub sites: usize,
    pub coupling_j: f64,
    pub field_b: f64,
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// How the inverse temperature of a run was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaLabel {
    Explicit,
    GroundProxy,
}

impl QuantumSection {
    /// Resolves the section into a full chain spec plus the label
    /// recording whether beta was explicit.
    pub fn resolve(&self) -> Result<(QuantumChainSpec, BetaLabel)> {
        let (beta, label) = match self.beta {
            Some(b) => (b, BetaLabel::Explicit),
            None => (ground_proxy_beta(self.coupling_j, self.field_b), BetaLabel::GroundProxy),
        };
        let spec = QuantumChainSpec {
            sites: self.sites,
            coupling_j: self.coupling_j,
            field_b: self.field_b,
            boundary: self.boundary,
            beta,
        };
        spec.validate()?;
        Ok((spec, label))
    }
}

/// An evaluation route requested in the config or on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    #[serde(rename = "exact-quantum")]
    ExactQuantum,
    #[serde(rename = "enum")]
    Enumeration,
    #[serde(rename = "transfer-matrix")]
    TransferMatrix,
    #[serde(rename = "mc")]
    Mc,
}

impl MethodChoice {
    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::ExactQuantum => "exact-quantum",
            MethodChoice::Enumeration => "enum",
            MethodChoice::TransferMatrix => "transfer-matrix",
            MethodChoice::Mc => "mc",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "exact-quantum" => Ok(MethodChoice::ExactQuantum),
            "enum" => Ok(MethodChoice::Enumeration),
            "transfer-matrix" => Ok(MethodChoice::TransferMatrix),
            "mc" => Ok(MethodChoice::Mc),
            other => Err(Error::invalid(
                Module::Cli,
                format!(
                    "unknown method '{other}'; expected exact-quantum, enum, transfer-matrix or mc"
                ),
            )),
        }
    }
}

/// Output table format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(
                Module::Cli,
                format!("unknown format '{other}'; expected csv or json"),
            )),
        }
    }
}

/// Grid section for the `sweep` subcommand: field-to-coupling ratios
/// B/J, with an optional shared beta (defaulting per point to the
/// ground proxy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub b_over_j: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// The complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub quantum: QuantumSection,
    /// Trotter slice counts, strictly ascending.
    pub trotter_n: Vec<usize>,
    pub methods: Vec<MethodChoice>,
    /// Required exactly when `methods` contains `mc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    pub output_dir: String,
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(Module::Cli, e))?;
        let config: Self = canonical::from_tagged_str(EXPERIMENT_SCHEMA, &text, Module::Cli)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.quantum.resolve()?;
        if self.trotter_n.is_empty() {
            return Err(Error::invalid(Module::Cli, "trotter_n must not be empty"));
        }
        if self.trotter_n[0] < 1 {
            return Err(Error::invalid(Module::Cli, "trotter_n entries must be >= 1"));
        }
        if !self.trotter_n.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                Module::Cli,
                "trotter_n must be strictly ascending",
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid(Module::Cli, "methods must not be empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::invalid(
                    Module::Cli,
                    format!("method '{}' listed twice", m.name()),
                ));
            }
        }
        let wants_mc = self.methods.contains(&MethodChoice::Mc);
        match (&self.mc, wants_mc) {
            (None, true) => {
                return Err(Error::invalid(
                    Module::Cli,
                    "methods include mc but the mc section is missing",
                ))
            }
            (Some(_), false) => {
                return Err(Error::invalid(
                    Module::Cli,
                    "mc section present but mc is not among the methods",
                ))
            }
            (Some(mc), true) => mc.validate()?,
            (None, false) => {}
        }
        if self.output_dir.is_empty() {
            return Err(Error::invalid(Module::Cli, "output_dir must not be empty"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.b_over_j.is_empty() {
                return Err(Error::invalid(Module::Cli, "sweep.b_over_j must not be empty"));
            }
            for &r in &sweep.b_over_j {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::invalid(
                        Module::Cli,
                        "sweep.b_over_j entries must be positive and finite",
                    ));
                }
            }
            if let Some(beta) = sweep.beta {
                if !(beta > 0.0) || !beta.is_finite() {
                    return Err(Error::invalid(
                        Module::Cli,
                        "sweep.beta must be positive and finite",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Methods that evaluate the classical lattice (everything but the
    /// quantum reference), in config order.
    pub fn classical_methods(&self) -> Vec<MethodChoice> {
        self.methods
            .iter()
            .copied()
            .filter(|m| *m != MethodChoice::ExactQuantum)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            quantum: QuantumSection {
                sites: 4,
                coupling_j: 1.0,
                field_b: 1.0,
                boundary: Boundary::Periodic,
                beta: Some(2.0),
            },
            trotter_n: vec![4, 8],
            methods: vec![MethodChoice::ExactQuantum, MethodChoice::TransferMatrix],
            mc: None,
            output_dir: "out".into(),
            format: OutputFormat::Csv,
            sweep: None,
        }
    }

    #[test]
    fn round_trips_through_tagged_json() {
        let config = base();
        let text = canonical::to_tagged_string(EXPERIMENT_SCHEMA, &config).unwrap();
        let back: ExperimentConfig =
            canonical::from_tagged_str(EXPERIMENT_SCHEMA, &text, Module::Cli).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn rejects_unsorted_slice_counts() {
        let mut config = base();
        config.trotter_n = vec![8, 4];
        assert_eq!(config.validate().unwrap_err().exit_code(), 2);
        config.trotter_n = vec![4, 4];
        assert_eq!(config.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn mc_section_must_match_methods() {
        let mut config = base();
        config.methods.push(MethodChoice::Mc);
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("mc section"), "{err}");

        let mut config = base();
        config.mc = Some(McConfig::new(7, 2, 100));
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("not among the methods"), "{err}");
    }

    #[test]
    fn duplicate_methods_are_rejected() {
        let mut config = base();
        config.methods.push(MethodChoice::TransferMatrix);
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("listed twice"), "{err}");
    }

    #[test]
    fn omitted_beta_resolves_to_the_ground_proxy() {
        let mut config = base();
        config.quantum.beta = None;
        config.quantum.field_b = 2.0;
        let (spec, label) = config.quantum.resolve().unwrap();
        assert_eq!(spec.beta, 10.0);
        assert_eq!(label, BetaLabel::GroundProxy);
        let (_, label) = base().quantum.resolve().unwrap();
        assert_eq!(label, BetaLabel::Explicit);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            MethodChoice::ExactQuantum,
            MethodChoice::Enumeration,
            MethodChoice::TransferMatrix,
            MethodChoice::Mc,
        ] {
            assert_eq!(MethodChoice::parse(m.name()).unwrap(), m);
        }
        assert!(MethodChoice::parse("eigensolver").is_err());
    }
}
