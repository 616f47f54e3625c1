//! Configuration files: strict TOML with dotted-path overrides.
//!
//! Unknown keys are rejected everywhere, so a typo in `noise.rho` or a
//! misspelled section fails loudly instead of silently running defaults.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::data::{CirclesSpec, ConfidenceMode, FlipLaw, NoiseKind, NoiseSpec};
use crate::error::{Error, Result};
use crate::harness::{SensitivityPlan, SweepPlan};
use crate::train::{Method, TrainConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub dataset: DatasetSection,
    pub noise: NoiseSection,
    pub train: TrainSection,
    pub experiment: ExperimentSection,
    pub pseudo: PseudoSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Circle radius per class, strictly increasing.
    pub radii: Vec<f64>,
    pub radial_std: f64,
    pub per_class: usize,
    /// Per-class size of the held-out test split.
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            radii: vec![1.0, 2.0, 3.0],
            radial_std: 0.15,
            per_class: 1000,
            test_per_class: 500,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKindName {
    Clean,
    Ccn,
    Idn,
    Csidn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub kind: NoiseKindName,
    /// Noise direction for the directional kinds.
    pub w: Vec<f64>,
    /// Flip-law parameter in [0, 1]; the per-point flip probability is
    /// `rho * (cos(w, x) + 1) / 2`.
    pub rho: f64,
    pub confidence_mode: ConfidenceMode,
    /// Row-stochastic matrix, required when kind = "ccn".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ccn_matrix: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            kind: NoiseKindName::Csidn,
            w: vec![0.0, 1.0],
            rho: 0.5,
            confidence_mode: ConfidenceMode::ExactPosterior,
            ccn_matrix: None,
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub method: Method,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub hidden: Vec<usize>,
    pub q: f64,
    /// Co-teaching forget rate; measured from the data when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forget_rate: Option<f64>,
    pub forget_ramp_epochs: usize,
    pub anchors_per_class: usize,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            method: d.method,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            momentum: d.momentum,
            hidden: d.hidden,
            q: d.q,
            forget_rate: d.forget_rate,
            forget_ramp_epochs: d.forget_ramp_epochs,
            anchors_per_class: d.anchors_per_class,
            seed: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub methods: Vec<Method>,
    /// Target mean noise rates for sweep cells. The directional law's angular
    /// mean is rho / 2, so each cell corrupts with parameter `2 * rate`.
    pub noise_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Confidence-perturbation standard deviations for `sensitivity`.
    pub sigma_grid: Vec<f64>,
    /// Mean noise rate used by `sensitivity`.
    pub sensitivity_rate: f64,
    pub probe_epochs: usize,
    pub grid_bounds: [f64; 2],
    pub grid_resolution: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            methods: vec![
                Method::Ilfc,
                Method::Fc,
                Method::Mae,
                Method::Lq,
                Method::Coteaching,
            ],
            noise_rates: vec![0.25, 0.35, 0.45, 0.5],
            seeds: vec![1, 2, 3, 4, 5],
            sigma_grid: vec![0.0, 0.3, 0.6],
            sensitivity_rate: 0.45,
            probe_epochs: 10,
            grid_bounds: [-4.0, 4.0],
            grid_resolution: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PseudoSection {
    pub clean_per_class: usize,
    pub valid_per_class: usize,
    pub pool_per_class: usize,
    /// Skip temperature selection (forces t = 1).
    pub force_unit_temperature: bool,
}

impl Default for PseudoSection {
    fn default() -> Self {
        Self {
            clean_per_class: 150,
            valid_per_class: 150,
            pool_per_class: 700,
            force_unit_temperature: false,
        }
    }
}

impl AppConfig {
    pub fn circles_spec(&self) -> Result<CirclesSpec> {
        let spec = CirclesSpec {
            radii: self.dataset.radii.clone(),
            radial_std: self.dataset.radial_std,
            per_class: self.dataset.per_class,
            seed: self.dataset.seed,
        };
        spec.validate()
            .map_err(|e| Error::Config(format!("dataset: {e}")))?;
        Ok(spec)
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let s = &self.noise;
        if !(0.0..=1.0).contains(&s.rho) {
            return Err(Error::Config(format!(
                "noise.rho: {} must lie in [0, 1]",
                s.rho
            )));
        }
        let kind = match s.kind {
            NoiseKindName::Clean => NoiseKind::Clean,
            NoiseKindName::Ccn => NoiseKind::Ccn {
                matrix: s.ccn_matrix.clone().ok_or_else(|| {
                    Error::Config("noise.ccn_matrix: required when noise.kind = \"ccn\"".into())
                })?,
            },
            NoiseKindName::Idn => NoiseKind::IdnDirectional {
                w: s.w.clone(),
                rho: s.rho,
            },
            NoiseKindName::Csidn => NoiseKind::CsidnDirectional {
                w: s.w.clone(),
                rho: s.rho,
                confidence_mode: s.confidence_mode,
            },
        };
        let mut spec = NoiseSpec {
            kind,
            flip_law: FlipLaw::UniformOther,
            seed: s.seed,
        };
        spec.validate(self.dataset.radii.len())
            .map_err(|e| Error::Config(format!("noise: {e}")))?;
        Ok(spec)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let cfg = TrainConfig {
            method: t.method,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            hidden: t.hidden.clone(),
            q: t.q,
            forget_rate: t.forget_rate,
            forget_ramp_epochs: t.forget_ramp_epochs,
            anchors_per_class: t.anchors_per_class,
            seed: t.seed,
        };
        cfg.validate()
            .map_err(|e| Error::Config(format!("train: {e}")))?;
        Ok(cfg)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let plan = SweepPlan {
            dataset: self.circles_spec()?,
            test_per_class: self.dataset.test_per_class,
            direction: self.noise.w.clone(),
            confidence_mode: self.noise.confidence_mode,
            methods: self.experiment.methods.clone(),
            noise_rates: self.experiment.noise_rates.clone(),
            seeds: self.experiment.seeds.clone(),
            train: self.train_config()?,
        };
        plan.validate()
            .map_err(|e| Error::Config(format!("experiment: {e}")))?;
        Ok(plan)
    }

    pub fn sensitivity_plan(&self) -> Result<SensitivityPlan> {
        let rate = self.experiment.sensitivity_rate;
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "experiment.sensitivity_rate: {rate} must lie in [0, 1]"
            )));
        }
        if let Some(&bad) = self.experiment.sigma_grid.iter().find(|&&s| s < 0.0) {
            return Err(Error::Config(format!(
                "experiment.sigma_grid: {bad} must be non-negative"
            )));
        }
        Ok(SensitivityPlan {
            base: self.sweep_plan()?,
            rate,
            sigma_grid: self.experiment.sigma_grid.clone(),
        })
    }
}

fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!(
            "override key {key:?} must be a dotted path like noise.rho"
        )));
    }
    // Parse the value as a TOML fragment; fall back to a plain string.
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override {key:?}: {part} is not a table"))
        })?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override {key:?}: parent is not a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

/// Load a config file and apply `key=value` overrides before validation.
///
/// An unreadable config is a usage-class error, like any other config problem.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<AppConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// Parse config text; separated from file IO for tests.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<AppConfig> {
    let mut value: toml::Value = toml::from_str(text)
        .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    for (key, raw) in overrides {
        apply_override(&mut value, key, raw)?;
    }
    let config: AppConfig = value
        .try_into()
        .map_err(|e| Error::Config(format!("config error: {e}")))?;
    Ok(config)
}

/// The full key reference: every section rendered with its default value.
pub fn config_reference() -> String {
    let defaults = toml::to_string_pretty(&AppConfig::default())
        .expect("defaults always serialize");
    format!(
        "Configuration reference (TOML). Every key is optional and shown with its\n\
         default; unknown keys are rejected. Override any key on the command line\n\
         with --set key=value (e.g. --set noise.rho=0.45).\n\n\
         Keys omitted below because they default to \"unset\":\n\
         - train.forget_rate (float): co-teaching forget rate; measured from the\n\
           data when unset.\n\
         - noise.ccn_matrix (array of arrays): row-stochastic matrix, required\n\
           for noise.kind = \"ccn\".\n\n\
         {defaults}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let cfg = parse_config("", &[]).unwrap();
        let circles = cfg.circles_spec().unwrap();
        assert_eq!(circles.radii, vec![1.0, 2.0, 3.0]);
        assert_eq!(circles.radial_std, 0.15);
        assert_eq!(circles.per_class, 1000);
        assert_eq!(cfg.experiment.sigma_grid, vec![0.0, 0.3, 0.6]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("[noise]\nrho = 0.4\nroh = 0.5\n", &[]).is_err());
        assert!(parse_config("[mystery]\nx = 1\n", &[]).is_err());
    }

    #[test]
    fn semantic_error_names_the_key() {
        let cfg = parse_config("[noise]\nrho = 1.5\n", &[]).unwrap();
        let err = cfg.noise_spec().unwrap_err();
        assert!(err.to_string().contains("noise.rho"), "{err}");
    }

    #[test]
    fn overrides_replace_values_before_validation() {
        let cfg = parse_config(
            "[noise]\nrho = 0.2\n",
            &[("noise.rho".into(), "0.45".into())],
        )
        .unwrap();
        assert_eq!(cfg.noise.rho, 0.45);
        // strings and arrays work too
        let cfg = parse_config(
            "",
            &[
                ("train.method".into(), "lq".into()),
                ("experiment.seeds".into(), "[7, 8]".into()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.train.method, Method::Lq);
        assert_eq!(cfg.experiment.seeds, vec![7, 8]);
    }

    #[test]
    fn misspelled_override_fails() {
        assert!(parse_config("", &[("noise.rhoo".into(), "0.4".into())]).is_err());
        assert!(parse_config("", &[("rho".into(), "0.4".into())]).is_err());
    }

    #[test]
    fn sigma_grid_parses_to_sensitivity_plan() {
        let cfg = parse_config(
            "[experiment]\nsigma_grid = [0.0, 0.3, 0.6]\nsensitivity_rate = 0.45\n",
            &[],
        )
        .unwrap();
        let plan = cfg.sensitivity_plan().unwrap();
        assert_eq!(plan.sigma_grid, vec![0.0, 0.3, 0.6]);
        assert_eq!(plan.rate, 0.45);
    }

    #[test]
    fn reference_is_valid_toml_and_covers_all_keys() {
        let reference = config_reference();
        let toml_part = reference
            .split("\n\n")
            .last()
            .expect("reference ends with the defaults document");
        let parsed = parse_config(toml_part, &[]).unwrap();
        assert_eq!(parsed, AppConfig::default());
    }

    #[test]
    fn ccn_requires_matrix() {
        let cfg = parse_config("[noise]\nkind = \"ccn\"\n", &[]).unwrap();
        let err = cfg.noise_spec().unwrap_err();
        assert!(err.to_string().contains("ccn_matrix"), "{err}");
    }
}
