//! TOML experiment configuration.
//!
//! Every key is optional except the condition (either `condition` or a
//! `[[conditions]]` list, possibly supplied by a CLI override). Omitted keys
//! take the model defaults. Unknown keys and out-of-range values are
//! reported with their line and column.
//!
//! ```toml
//! condition = "probabilistic"        # or: deterministic
//! mutation_operator = "gaussian"     # or: legacy_set_to_one
//! rounds = 500
//! seed = 42
//! replicates = 20
//! noise_init_range = [0.0, 0.5]
//!
//! [[conditions]]                     # optional; overrides the pair above
//! condition = "deterministic"
//! operator = "legacy_set_to_one"
//! ```

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::experiment::{Arm, ExperimentSpec, ExtinctPolicy};
use crate::model::{Condition, MutationOperator, SimConfig};

/// Values supplied on the command line; each replaces the config key of
/// the same name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub condition: Option<Condition>,
    pub operator: Option<MutationOperator>,
    pub rounds: Option<u64>,
    pub replicates: Option<u64>,
    pub success_threshold: Option<u64>,
    pub parallelism: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmEntry {
    condition: Spanned<String>,
    operator: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    initial_agents: Option<Spanned<i64>>,
    initial_resource: Option<Spanned<f64>>,
    initial_energy: Option<Spanned<f64>>,
    trait_init_range: Option<Spanned<[f64; 2]>>,
    noise_init_range: Option<Spanned<[f64; 2]>>,
    regrowth_per_round: Option<Spanned<f64>>,
    metabolism_per_round: Option<Spanned<f64>>,
    sanction_cost_factor: Option<Spanned<f64>>,
    observation_window: Option<Spanned<i64>>,
    reproduction_threshold: Option<Spanned<f64>>,
    death_threshold: Option<Spanned<f64>>,
    mutation_probability: Option<Spanned<f64>>,
    mutation_variance: Option<Spanned<f64>>,
    condition: Option<Spanned<String>>,
    mutation_operator: Option<Spanned<String>>,
    noise_enabled: Option<Spanned<[bool; 3]>>,
    rounds: Option<Spanned<i64>>,
    seed: Option<Spanned<SeedValue>>,
    stream: Option<Spanned<i64>>,
    replicates: Option<Spanned<i64>>,
    success_threshold: Option<Spanned<i64>>,
    parallelism: Option<Spanned<i64>>,
    extinct_policy: Option<Spanned<String>>,
    conditions: Option<Spanned<Vec<ArmEntry>>>,
}

struct Source<'a> {
    label: &'a str,
    text: &'a str,
}

impl Source<'_> {
    fn at(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        let upto = &self.text[..span.start.min(self.text.len())];
        let line = upto.matches('\n').count() + 1;
        let column = upto.len() - upto.rfind('\n').map_or(0, |i| i + 1) + 1;
        Error::ConfigAt {
            path: self.label.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn count(&self, key: &str, v: &Spanned<i64>, min: i64) -> Result<u64> {
        let x = *v.get_ref();
        if x < min {
            return Err(self.at(v.span(), format!("`{key}` must be >= {min}, got {x}")));
        }
        Ok(x as u64)
    }

    fn real(&self, key: &str, v: &Spanned<f64>, min: Option<f64>) -> Result<f64> {
        let x = *v.get_ref();
        if !x.is_finite() {
            return Err(self.at(v.span(), format!("`{key}` must be finite")));
        }
        if let Some(min) = min.filter(|&m| x < m) {
            return Err(self.at(v.span(), format!("`{key}` must be >= {min}, got {x}")));
        }
        Ok(x)
    }

    fn unit_range(&self, key: &str, v: &Spanned<[f64; 2]>) -> Result<[f64; 2]> {
        let [lo, hi] = *v.get_ref();
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(self.at(
                v.span(),
                format!("`{key}` must be [lo, hi] with 0 <= lo <= hi <= 1, got [{lo}, {hi}]"),
            ));
        }
        Ok([lo, hi])
    }

    fn parsed<T: std::str::FromStr<Err = Error>>(&self, v: &Spanned<String>) -> Result<T> {
        v.get_ref().parse().map_err(|e: Error| {
            let msg = match e {
                Error::InvalidConfig(m) => m,
                other => other.to_string(),
            };
            self.at(v.span(), msg)
        })
    }
}

fn parse_policy(s: &str) -> Result<ExtinctPolicy> {
    match s {
        "absent_aware" => Ok(ExtinctPolicy::AbsentAware),
        "extinct_as_zero" => Ok(ExtinctPolicy::ExtinctAsZero),
        other => Err(Error::InvalidConfig(format!(
            "unknown extinct_policy `{other}` (expected absent_aware|extinct_as_zero)"
        ))),
    }
}

/// Parse config text (attributing errors to `label`) and apply overrides.
pub fn parse_spec_str(
    text: &str,
    label: &str,
    overrides: &ConfigOverrides,
) -> Result<ExperimentSpec<f64>> {
    let src = Source { label, text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        src.at(span, e.message().trim().to_string())
    })?;

    let mut base = SimConfig::<f64>::default();
    if let Some(v) = &raw.initial_agents {
        base.initial_agents = src.count("initial_agents", v, 1)? as usize;
    }
    if let Some(v) = &raw.observation_window {
        base.observation_window = src.count("observation_window", v, 0)? as usize;
    }
    for (key, slot, value) in [
        (
            "initial_resource",
            &mut base.initial_resource,
            &raw.initial_resource,
        ),
        (
            "initial_energy",
            &mut base.initial_energy,
            &raw.initial_energy,
        ),
        (
            "regrowth_per_round",
            &mut base.regrowth_per_round,
            &raw.regrowth_per_round,
        ),
        (
            "metabolism_per_round",
            &mut base.metabolism_per_round,
            &raw.metabolism_per_round,
        ),
        (
            "sanction_cost_factor",
            &mut base.sanction_cost_factor,
            &raw.sanction_cost_factor,
        ),
        (
            "mutation_variance",
            &mut base.mutation_variance,
            &raw.mutation_variance,
        ),
    ] {
        if let Some(v) = value {
            *slot = src.real(key, v, Some(0.0))?;
        }
    }
    for (key, slot, value) in [
        (
            "reproduction_threshold",
            &mut base.reproduction_threshold,
            &raw.reproduction_threshold,
        ),
        (
            "death_threshold",
            &mut base.death_threshold,
            &raw.death_threshold,
        ),
    ] {
        if let Some(v) = value {
            *slot = src.real(key, v, None)?;
        }
    }
    if let Some(v) = &raw.mutation_probability {
        let p = src.real("mutation_probability", v, Some(0.0))?;
        if p > 1.0 {
            return Err(src.at(
                v.span(),
                format!("`mutation_probability` must be <= 1, got {p}"),
            ));
        }
        base.mutation_probability = p;
    }
    if let Some(v) = &raw.trait_init_range {
        base.trait_init_range = src.unit_range("trait_init_range", v)?;
    }
    if let Some(v) = &raw.noise_init_range {
        base.noise_init_range = src.unit_range("noise_init_range", v)?;
    }
    if let Some(v) = &raw.noise_enabled {
        base.noise_enabled = *v.get_ref();
    }
    if let Some(v) = &raw.rounds {
        base.max_rounds = src.count("rounds", v, 0)?;
    }
    if let Some(v) = &raw.stream {
        base.stream = src.count("stream", v, 0)?;
    }

    let condition: Option<Condition> = raw.condition.as_ref().map(|v| src.parsed(v)).transpose()?;
    let operator: Option<MutationOperator> = raw
        .mutation_operator
        .as_ref()
        .map(|v| src.parsed(v))
        .transpose()?;
    let default_operator = operator.unwrap_or(MutationOperator::Gaussian);

    let mut arms = Vec::new();
    if let Some(list) = &raw.conditions {
        if list.get_ref().is_empty() {
            return Err(src.at(list.span(), "`conditions` must not be empty"));
        }
        for entry in list.get_ref() {
            let c: Condition = src.parsed(&entry.condition)?;
            let o = match &entry.operator {
                Some(o) => src.parsed(o)?,
                None => default_operator,
            };
            arms.push(Arm::new(c, o));
        }
    } else if let Some(c) = condition {
        arms.push(Arm::new(c, default_operator));
    }

    match (overrides.condition, overrides.operator) {
        (Some(c), o) => {
            arms = vec![Arm::new(c, o.unwrap_or(default_operator))];
        }
        (None, Some(o)) => {
            for arm in &mut arms {
                arm.operator = o;
            }
        }
        (None, None) => {}
    }
    let Some(first) = arms.first().copied() else {
        return Err(src.at(
            0..0,
            "missing required field `condition` (or a `conditions` list)",
        ));
    };
    base.condition = first.condition;
    base.mutation_operator = first.operator;
    if let Some(r) = overrides.rounds {
        base.max_rounds = r;
    }

    let master_seed = match (overrides.seed, &raw.seed) {
        (Some(s), _) => s,
        (None, Some(v)) => match v.get_ref() {
            SeedValue::Int(i) if *i >= 0 => *i as u64,
            SeedValue::Int(i) => {
                return Err(src.at(v.span(), format!("`seed` must be >= 0, got {i}")));
            }
            SeedValue::Text(t) => t
                .parse::<u64>()
                .map_err(|_| src.at(v.span(), format!("`seed` must be a u64, got `{t}`")))?,
        },
        // no seed given: draw one and record it like any other
        (None, None) => rand::random::<u64>(),
    };
    base.seed = master_seed;

    let replicates = match (overrides.replicates, &raw.replicates) {
        (Some(n), _) => n,
        (None, Some(v)) => src.count("replicates", v, 1)?,
        (None, None) => 1,
    };
    let success_population_threshold = match (overrides.success_threshold, &raw.success_threshold) {
        (Some(n), _) => n,
        (None, Some(v)) => src.count("success_threshold", v, 0)?,
        (None, None) => 1000,
    };
    let parallelism = match (overrides.parallelism, &raw.parallelism) {
        (Some(n), _) => n,
        (None, Some(v)) => src.count("parallelism", v, 1)? as usize,
        // output never depends on this, so use every core by default
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let extinct_policy = match &raw.extinct_policy {
        Some(v) => parse_policy(v.get_ref()).map_err(|e| src.at(v.span(), e.to_string()))?,
        None => ExtinctPolicy::default(),
    };

    let spec = ExperimentSpec {
        base,
        replicates,
        master_seed,
        success_population_threshold,
        arms,
        parallelism,
        extinct_policy,
    };
    spec.validate()?;
    Ok(spec)
}

/// Read a config file (or start from defaults when `path` is `None`) and
/// apply command-line overrides.
pub fn load_spec(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<ExperimentSpec<f64>> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_spec_str(&text, &p.display().to_string(), overrides)
        }
        None => parse_spec_str("", "<command line>", overrides),
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentSpec<f64>> {
    load_spec(Some(path), &ConfigOverrides::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec<f64>> {
        parse_spec_str(text, "test.toml", &ConfigOverrides::default())
    }

    fn located(err: Error) -> (usize, usize, String) {
        match err {
            Error::ConfigAt {
                line,
                column,
                message,
                ..
            } => (line, column, message),
            other => panic!("expected a located error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse("condition = \"deterministic\"\nseed = 1\n").unwrap();
        assert_eq!(spec.base.initial_agents, 100);
        assert_eq!(spec.base.initial_resource, 1000.0);
        assert_eq!(spec.base.max_rounds, 500);
        assert_eq!(spec.base.condition, Condition::Deterministic);
        assert_eq!(spec.arms.len(), 1);
        assert_eq!(spec.success_population_threshold, 1000);
        assert_eq!(spec.replicates, 1);
        assert_eq!(spec.master_seed, 1);
    }

    #[test]
    fn operator_mapping() {
        let spec =
            parse("condition = \"probabilistic\"\nmutation_operator = \"legacy_set_to_one\"\n")
                .unwrap();
        assert_eq!(
            spec.base.mutation_operator,
            MutationOperator::LegacySetToOne
        );
        assert_eq!(spec.arms[0].operator, MutationOperator::LegacySetToOne);
    }

    #[test]
    fn wide_noise_range_accepted() {
        let spec = parse("condition = \"probabilistic\"\nnoise_init_range = [0, 1]\n").unwrap();
        assert_eq!(spec.base.noise_init_range, [0.0, 1.0]);
    }

    #[test]
    fn unknown_key_is_located() {
        let err = parse("condition = \"deterministic\"\nbite = 3\n").unwrap_err();
        let (line, _, msg) = located(err);
        assert_eq!(line, 2);
        assert!(msg.contains("bite"), "{msg}");
    }

    #[test]
    fn out_of_range_is_located() {
        let err =
            parse("condition = \"deterministic\"\n\nmutation_probability = 1.5\n").unwrap_err();
        let (line, col, _) = located(err);
        assert_eq!((line, col), (3, 24));
        let err =
            parse("condition = \"deterministic\"\nnoise_init_range = [0.6, 0.2]\n").unwrap_err();
        assert_eq!(located(err).0, 2);
        let err = parse("condition = \"deterministic\"\ninitial_agents = 0\n").unwrap_err();
        assert_eq!(located(err).0, 2);
        let err = parse("condition = \"sometimes\"\n").unwrap_err();
        assert!(located(err).2.contains("sometimes"));
    }

    #[test]
    fn missing_condition() {
        let (_, _, msg) = located(parse("seed = 3\n").unwrap_err());
        assert!(msg.contains("condition"));
    }

    #[test]
    fn condition_list_and_overrides() {
        let text = r#"
seed = 5
mutation_operator = "legacy_set_to_one"
[[conditions]]
condition = "deterministic"
[[conditions]]
condition = "probabilistic"
operator = "gaussian"
"#;
        let spec = parse(text).unwrap();
        assert_eq!(
            spec.arms,
            vec![
                Arm::new(Condition::Deterministic, MutationOperator::LegacySetToOne),
                Arm::new(Condition::Probabilistic, MutationOperator::Gaussian),
            ]
        );
        let ov = ConfigOverrides {
            operator: Some(MutationOperator::Gaussian),
            rounds: Some(7),
            replicates: Some(3),
            seed: Some(11),
            parallelism: Some(2),
            success_threshold: Some(50),
            ..Default::default()
        };
        let spec = parse_spec_str(text, "t", &ov).unwrap();
        assert!(spec
            .arms
            .iter()
            .all(|a| a.operator == MutationOperator::Gaussian));
        assert_eq!(spec.base.max_rounds, 7);
        assert_eq!(
            (spec.replicates, spec.master_seed, spec.parallelism),
            (3, 11, 2)
        );
        assert_eq!(spec.success_population_threshold, 50);

        let ov = ConfigOverrides {
            condition: Some(Condition::Probabilistic),
            ..Default::default()
        };
        let spec = parse_spec_str("", "flags", &ov).unwrap();
        assert_eq!(
            spec.arms,
            vec![Arm::new(
                Condition::Probabilistic,
                MutationOperator::Gaussian
            )]
        );
    }

    #[test]
    fn seed_forms() {
        assert_eq!(
            parse("condition = \"deterministic\"\nseed = \"18446744073709551615\"\n")
                .unwrap()
                .master_seed,
            u64::MAX
        );
        assert!(parse("condition = \"deterministic\"\nseed = -1\n").is_err());
    }

    #[test]
    fn syntax_error_is_located() {
        let (line, _, _) =
            located(parse("condition = \"deterministic\"\nrounds = = 3\n").unwrap_err());
        assert_eq!(line, 2);
    }
}
