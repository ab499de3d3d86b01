//! `section.key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors. `core.strategy` is required, and exactly one of
//! `adapt.mode` or `run.variants` must be present.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use acl_core::adaptation::{AdaptConfig, AdaptMode};
use acl_core::continual::{CoreStrategy, LinearCoreConfig};
use acl_core::data::{PretrainConfig, SyntheticSpec};
use acl_core::model::ModelConfig;

use crate::CliError;

pub const DEFAULT_SEEDS: [u64; 5] = [1993, 1994, 1995, 1996, 1997];

const KEYS: &[&str] = &[
    "data.input_dim",
    "data.pretrain_classes",
    "data.incremental_classes",
    "data.tasks",
    "data.train_per_class",
    "data.test_per_class",
    "data.sigma",
    "data.shift",
    "model.embed_dim",
    "model.hidden",
    "model.activation",
    "model.adapter_rank",
    "pretrain.epochs",
    "pretrain.learning_rate",
    "pretrain.momentum",
    "pretrain.batch_size",
    "adapt.mode",
    "adapt.temperature",
    "adapt.epochs",
    "adapt.learning_rate",
    "adapt.momentum",
    "adapt.batch_size",
    "adapt.first_task_only",
    "core.strategy",
    "core.epochs",
    "core.learning_rate",
    "core.momentum",
    "core.batch_size",
    "core.tune_adapter",
    "run.seeds",
    "run.out",
    "run.variants",
];

/// One adaptation setting compared within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Acl,
    Frozen,
    FirstTaskOnly,
    CeAblation,
    LightweightOnly,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Acl => "acl",
            Variant::Frozen => "frozen",
            Variant::FirstTaskOnly => "first_task_only",
            Variant::CeAblation => "ce_ablation",
            Variant::LightweightOnly => "lightweight_only",
        }
    }

    fn from_mode(mode: AdaptMode, first_task_only: bool) -> Self {
        match (mode, first_task_only) {
            (AdaptMode::Disabled, _) => Variant::Frozen,
            (AdaptMode::Acl, true) => Variant::FirstTaskOnly,
            (AdaptMode::Acl, false) => Variant::Acl,
            (AdaptMode::CeAblation, _) => Variant::CeAblation,
            (AdaptMode::LightweightOnly, _) => Variant::LightweightOnly,
        }
    }

    /// `base` with this variant's mode and first-task flag.
    pub fn apply(self, base: &AdaptConfig<f64>) -> AdaptConfig<f64> {
        let (mode, first_task_only) = match self {
            Variant::Acl => (AdaptMode::Acl, false),
            Variant::Frozen => (AdaptMode::Disabled, false),
            Variant::FirstTaskOnly => (AdaptMode::Acl, true),
            Variant::CeAblation => (AdaptMode::CeAblation, false),
            Variant::LightweightOnly => (AdaptMode::LightweightOnly, false),
        };
        AdaptConfig {
            mode,
            first_task_only,
            ..base.clone()
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "acl" => Ok(Variant::Acl),
            "frozen" | "disabled" => Ok(Variant::Frozen),
            "first_task_only" => Ok(Variant::FirstTaskOnly),
            "ce_ablation" => Ok(Variant::CeAblation),
            "lightweight_only" => Ok(Variant::LightweightOnly),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: SyntheticSpec,
    pub model: ModelConfig,
    pub pretrain: PretrainConfig<f64>,
    pub adapt: AdaptConfig<f64>,
    pub strategy: CoreStrategy,
    pub linear: LinearCoreConfig<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub variants: Vec<Variant>,
    /// The file as given, echoed into the manifest.
    pub source: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: SyntheticSpec::default(),
            model: ModelConfig::default(),
            pretrain: PretrainConfig::default(),
            adapt: AdaptConfig::default(),
            strategy: CoreStrategy::Ncm,
            linear: LinearCoreConfig::default(),
            seeds: DEFAULT_SEEDS.to_vec(),
            out_dir: PathBuf::from("out"),
            variants: vec![Variant::Acl],
            source: String::new(),
        }
    }
}

fn parse_value<V: FromStr>(key: &str, raw: &str) -> Result<V, CliError> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("`{key}`: expected true or false, got `{raw}`"))),
    }
}

pub fn parse_list<V: FromStr>(key: &str, raw: &str) -> Result<Vec<V>, CliError> {
    let items: Vec<V> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("`{key}`: empty list")));
    }
    Ok(items)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `section.key = value`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if entries.insert(key, value).is_some() {
                return Err(CliError::Config(format!("line {}: `{key}` given twice", i + 1)));
            }
        }

        let mut cfg = RunConfig {
            source: text.to_string(),
            ..Default::default()
        };
        if !entries.contains_key("core.strategy") {
            return Err(CliError::Config("missing required key `core.strategy`".into()));
        }
        match (entries.contains_key("adapt.mode"), entries.contains_key("run.variants")) {
            (false, false) => {
                return Err(CliError::Config("one of `adapt.mode` or `run.variants` is required".into()))
            }
            (true, true) => {
                return Err(CliError::Config("`adapt.mode` and `run.variants` are mutually exclusive".into()))
            }
            _ => {}
        }
        if entries.contains_key("run.variants") && entries.contains_key("adapt.first_task_only") {
            return Err(CliError::Config(
                "`adapt.first_task_only` cannot be combined with `run.variants`".into(),
            ));
        }

        for (&key, &raw) in &entries {
            match key {
                "data.input_dim" => cfg.data.input_dim = parse_value(key, raw)?,
                "data.pretrain_classes" => cfg.data.n_pretrain_classes = parse_value(key, raw)?,
                "data.incremental_classes" => cfg.data.n_incremental_classes = parse_value(key, raw)?,
                "data.tasks" => cfg.data.n_tasks = parse_value(key, raw)?,
                "data.train_per_class" => cfg.data.train_per_class = parse_value(key, raw)?,
                "data.test_per_class" => cfg.data.test_per_class = parse_value(key, raw)?,
                "data.sigma" => cfg.data.sigma = parse_value(key, raw)?,
                "data.shift" => cfg.data.shift = parse_value(key, raw)?,
                "model.embed_dim" => cfg.model.embed_dim = parse_value(key, raw)?,
                "model.hidden" => {
                    cfg.model.hidden = if raw.is_empty() { Vec::new() } else { parse_list(key, raw)? }
                }
                "model.activation" => cfg.model.activation = parse_value(key, raw)?,
                "model.adapter_rank" => cfg.model.adapter_rank = parse_value(key, raw)?,
                "pretrain.epochs" => cfg.pretrain.epochs = parse_value(key, raw)?,
                "pretrain.learning_rate" => cfg.pretrain.learning_rate = parse_value(key, raw)?,
                "pretrain.momentum" => cfg.pretrain.momentum = parse_value(key, raw)?,
                "pretrain.batch_size" => cfg.pretrain.batch_size = parse_value(key, raw)?,
                "adapt.mode" => cfg.adapt.mode = parse_value(key, raw)?,
                "adapt.temperature" => cfg.adapt.temperature = parse_value(key, raw)?,
                "adapt.epochs" => cfg.adapt.epochs = parse_value(key, raw)?,
                "adapt.learning_rate" => cfg.adapt.learning_rate = parse_value(key, raw)?,
                "adapt.momentum" => cfg.adapt.momentum = parse_value(key, raw)?,
                "adapt.batch_size" => cfg.adapt.batch_size = parse_value(key, raw)?,
                "adapt.first_task_only" => cfg.adapt.first_task_only = parse_bool(key, raw)?,
                "core.strategy" => cfg.strategy = parse_value(key, raw)?,
                "core.epochs" => cfg.linear.epochs = parse_value(key, raw)?,
                "core.learning_rate" => cfg.linear.learning_rate = parse_value(key, raw)?,
                "core.momentum" => cfg.linear.momentum = parse_value(key, raw)?,
                "core.batch_size" => cfg.linear.batch_size = parse_value(key, raw)?,
                "core.tune_adapter" => cfg.linear.tune_adapter = parse_bool(key, raw)?,
                "run.seeds" => cfg.seeds = parse_list(key, raw)?,
                "run.out" => cfg.out_dir = PathBuf::from(raw),
                "run.variants" => {
                    let list: Vec<Variant> = raw
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(CliError::Config))
                        .collect::<Result<_, _>>()?;
                    cfg.variants = list;
                }
                _ => unreachable!("key list checked above"),
            }
        }
        if !entries.contains_key("run.variants") {
            cfg.variants = vec![Variant::from_mode(cfg.adapt.mode, cfg.adapt.first_task_only)];
        }
        cfg.model.input_dim = cfg.data.input_dim;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: acl_core::Error| CliError::Config(e.to_string());
        self.data.validate().map_err(invalid)?;
        self.model.validate().map_err(invalid)?;
        self.adapt.validate().map_err(invalid)?;
        if self.pretrain.batch_size == 0 || self.linear.batch_size == 0 {
            return Err(CliError::Config("batch sizes must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("no seeds given".into()));
        }
        if self.variants.is_empty() {
            return Err(CliError::Config("`run.variants` is empty".into()));
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return Err(CliError::Config("`run.variants` repeats a variant".into()));
        }
        Ok(())
    }

    /// Every effective setting, one `key = value` line each.
    pub fn resolved(&self) -> String {
        let hidden: Vec<String> = self.model.hidden.iter().map(usize::to_string).collect();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let variants: Vec<&str> = self.variants.iter().map(|v| v.label()).collect();
        let d = &self.data;
        let lines = [
            format!("data.input_dim = {}", d.input_dim),
            format!("data.pretrain_classes = {}", d.n_pretrain_classes),
            format!("data.incremental_classes = {}", d.n_incremental_classes),
            format!("data.tasks = {}", d.n_tasks),
            format!("data.train_per_class = {}", d.train_per_class),
            format!("data.test_per_class = {}", d.test_per_class),
            format!("data.sigma = {}", d.sigma),
            format!("data.shift = {}", d.shift),
            format!("model.embed_dim = {}", self.model.embed_dim),
            format!("model.hidden = {}", hidden.join(",")),
            format!("model.activation = {}", self.model.activation.name()),
            format!("model.adapter_rank = {}", self.model.adapter_rank),
            format!("pretrain.epochs = {}", self.pretrain.epochs),
            format!("pretrain.learning_rate = {}", self.pretrain.learning_rate),
            format!("pretrain.momentum = {}", self.pretrain.momentum),
            format!("pretrain.batch_size = {}", self.pretrain.batch_size),
            format!("adapt.temperature = {}", self.adapt.temperature),
            format!("adapt.epochs = {}", self.adapt.epochs),
            format!("adapt.learning_rate = {}", self.adapt.learning_rate),
            format!("adapt.momentum = {}", self.adapt.momentum),
            format!("adapt.batch_size = {}", self.adapt.batch_size),
            format!("core.strategy = {}", self.strategy),
            format!("core.epochs = {}", self.linear.epochs),
            format!("core.learning_rate = {}", self.linear.learning_rate),
            format!("core.momentum = {}", self.linear.momentum),
            format!("core.batch_size = {}", self.linear.batch_size),
            format!("core.tune_adapter = {}", self.linear.tune_adapter),
            format!("run.seeds = {}", seeds.join(",")),
            format!("run.out = {}", self.out_dir.display()),
            format!("run.variants = {}", variants.join(",")),
        ];
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("core.strategy = ncm\nadapt.mode = acl\n").unwrap();
        assert_eq!(cfg.data, SyntheticSpec::default());
        assert_eq!(cfg.model, ModelConfig::default());
        assert_eq!(cfg.variants, vec![Variant::Acl]);
        assert_eq!(cfg.seeds, DEFAULT_SEEDS.to_vec());
    }

    #[test]
    fn mode_maps_to_variant() {
        let cfg = RunConfig::parse("core.strategy = ncm\nadapt.mode = disabled\n").unwrap();
        assert_eq!(cfg.variants, vec![Variant::Frozen]);
        let cfg =
            RunConfig::parse("core.strategy = ncm\nadapt.mode = acl\nadapt.first_task_only = true\n").unwrap();
        assert_eq!(cfg.variants, vec![Variant::FirstTaskOnly]);
    }

    #[test]
    fn full_config_round_trips_through_resolved() {
        let text = "# comment\n\ncore.strategy = linear\nrun.variants = acl, frozen\nmodel.hidden = 8,8\n\
                    data.input_dim = 12\nrun.seeds = 3,4\nadapt.temperature = 0.2\ncore.tune_adapter = yes\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.model.input_dim, 12);
        assert_eq!(cfg.model.hidden, vec![8, 8]);
        assert!(cfg.linear.tune_adapter);
        let again = RunConfig::parse(&cfg.resolved()).unwrap();
        assert_eq!(again.resolved(), cfg.resolved());
    }

    #[test]
    fn config_errors() {
        let bad = [
            "adapt.mode = acl\n",
            "core.strategy = ncm\n",
            "core.strategy = ncm\nadapt.mode = acl\nrun.variants = acl\n",
            "core.strategy = ncm\nadapt.mode = acl\nbogus.key = 1\n",
            "core.strategy = ncm\nadapt.mode = acl\nadapt.mode = acl\n",
            "core.strategy = ncm\nadapt.mode = sideways\n",
            "core.strategy = ncm\nadapt.mode = acl\nadapt.temperature = 0\n",
            "core.strategy = ncm\nadapt.mode = acl\nno equals sign\n",
            "core.strategy = ncm\nrun.variants = acl,acl\n",
            "core.strategy = ncm\nrun.variants = acl\nadapt.first_task_only = true\n",
            "core.strategy = ncm\nadapt.mode = acl\nrun.seeds = \n",
        ];
        for text in bad {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
