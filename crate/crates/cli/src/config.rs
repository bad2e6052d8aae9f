//! Scenario configuration: a flat, sectioned key-value file (INI-style)
//! or an equivalent JSON object. Both map onto [`ScenarioConfig`].
//! Validation reports every violation at once, naming the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use spooky_core::photonics::{DetectorModel, FiberChannel};

use crate::CliError;

/// Source scheme selection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    /// One of: central, weak_pulse, heralded, prepare_at_distance.
    pub kind: String,
    pub mu: f64,
    pub pair_prob_per_gate: f64,
    pub herald_efficiency: f64,
    pub visibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Full Alice–Bob span; the symmetric scheme splits it in half.
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub group_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_prob_per_gate: f64,
    pub dead_time_ns: f64,
    pub afterpulse_prob: f64,
    pub jitter_sigma_ps: f64,
    pub gate_period_ns: f64,
    pub afterpulse_decay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub n_gates: u64,
    pub sample_fraction: f64,
    pub epsilon_margin: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelativityConfig {
    pub delta_t_ps: f64,
    pub separation_km: f64,
    pub fiber_length_km: f64,
    /// CMB dipole speed; configurable, never hard-coded in formulas.
    pub cmb_speed_m_per_s: f64,
    /// Published bound the CMB-frame projection angle is inverted against.
    pub cmb_target_bound_c: f64,
    pub wheel_speed_m_per_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
}

/// The whole parameter tree driving every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    pub detector: DetectorConfig,
    pub protocol: ProtocolConfig,
    pub relativity: RelativityConfig,
    pub run: RunConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig {
                kind: "central".into(),
                mu: 0.1,
                pair_prob_per_gate: 0.1,
                herald_efficiency: 0.9,
                visibility: 0.95,
            },
            channel: ChannelConfig {
                length_km: 10.0,
                attenuation_db_per_km: 0.25,
                group_index: 1.47,
            },
            detector: DetectorConfig {
                efficiency: 0.6,
                dark_count_prob_per_gate: 1e-5,
                dead_time_ns: 1000.0,
                afterpulse_prob: 0.01,
                jitter_sigma_ps: 100.0,
                gate_period_ns: 100.0,
                afterpulse_decay: 0.5,
            },
            protocol: ProtocolConfig {
                n_gates: 100_000,
                sample_fraction: 0.1,
                epsilon_margin: 10,
            },
            relativity: RelativityConfig {
                delta_t_ps: 5.0,
                separation_km: 10.0,
                fiber_length_km: 19.0,
                cmb_speed_m_per_s: 369_000.0,
                cmb_target_bound_c: 1.5e4,
                wheel_speed_m_per_s: 100.0,
            },
            run: RunConfig { seed: 42 },
        }
    }
}

/// The Geneva long-distance experiment layout: 10 km separation, 19 km
/// of fiber, 5 ps alignment, 100 m/s absorber wheel, μ = 0.1.
pub fn geneva_preset() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.source.mu = 0.1;
    cfg.relativity.delta_t_ps = 5.0;
    cfg.relativity.separation_km = 10.0;
    cfg.relativity.fiber_length_km = 19.0;
    cfg.relativity.wheel_speed_m_per_s = 100.0;
    cfg
}

impl ScenarioConfig {
    /// Ideal-device variant used by tests and quick demos.
    pub fn channel(&self) -> Result<FiberChannel, CliError> {
        FiberChannel::new(
            self.channel.length_km,
            self.channel.attenuation_db_per_km,
            self.channel.group_index,
        )
        .map_err(|e| CliError::Config(vec![format!("[channel]: {e}")]))
    }

    pub fn detector(&self) -> Result<DetectorModel, CliError> {
        DetectorModel::new(
            self.detector.efficiency,
            self.detector.dark_count_prob_per_gate,
            self.detector.dead_time_ns,
            self.detector.afterpulse_prob,
            self.detector.jitter_sigma_ps,
            self.detector.gate_period_ns,
            self.detector.afterpulse_decay,
        )
        .map_err(|e| CliError::Config(vec![format!("[detector]: {e}")]))
    }

    /// Serializes back to the INI form; load(save(c)) == c.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[source]");
        let _ = writeln!(s, "kind = {}", self.source.kind);
        let _ = writeln!(s, "mu = {}", self.source.mu);
        let _ = writeln!(s, "pair_prob_per_gate = {}", self.source.pair_prob_per_gate);
        let _ = writeln!(s, "herald_efficiency = {}", self.source.herald_efficiency);
        let _ = writeln!(s, "visibility = {}", self.source.visibility);
        let _ = writeln!(s, "\n[channel]");
        let _ = writeln!(s, "length_km = {}", self.channel.length_km);
        let _ = writeln!(
            s,
            "attenuation_db_per_km = {}",
            self.channel.attenuation_db_per_km
        );
        let _ = writeln!(s, "group_index = {}", self.channel.group_index);
        let _ = writeln!(s, "\n[detector]");
        let _ = writeln!(s, "efficiency = {}", self.detector.efficiency);
        let _ = writeln!(
            s,
            "dark_count_prob_per_gate = {}",
            self.detector.dark_count_prob_per_gate
        );
        let _ = writeln!(s, "dead_time_ns = {}", self.detector.dead_time_ns);
        let _ = writeln!(s, "afterpulse_prob = {}", self.detector.afterpulse_prob);
        let _ = writeln!(s, "jitter_sigma_ps = {}", self.detector.jitter_sigma_ps);
        let _ = writeln!(s, "gate_period_ns = {}", self.detector.gate_period_ns);
        let _ = writeln!(s, "afterpulse_decay = {}", self.detector.afterpulse_decay);
        let _ = writeln!(s, "\n[protocol]");
        let _ = writeln!(s, "n_gates = {}", self.protocol.n_gates);
        let _ = writeln!(s, "sample_fraction = {}", self.protocol.sample_fraction);
        let _ = writeln!(s, "epsilon_margin = {}", self.protocol.epsilon_margin);
        let _ = writeln!(s, "\n[relativity]");
        let _ = writeln!(s, "delta_t_ps = {}", self.relativity.delta_t_ps);
        let _ = writeln!(s, "separation_km = {}", self.relativity.separation_km);
        let _ = writeln!(s, "fiber_length_km = {}", self.relativity.fiber_length_km);
        let _ = writeln!(s, "cmb_speed_m_per_s = {}", self.relativity.cmb_speed_m_per_s);
        let _ = writeln!(
            s,
            "cmb_target_bound_c = {}",
            self.relativity.cmb_target_bound_c
        );
        let _ = writeln!(
            s,
            "wheel_speed_m_per_s = {}",
            self.relativity.wheel_speed_m_per_s
        );
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "seed = {}", self.run.seed);
        s
    }
}

type KeyMap = BTreeMap<(String, String), (String, usize)>;

fn parse_ini(text: &str) -> Result<KeyMap, Vec<String>> {
    let mut map = KeyMap::new();
    let mut section = String::new();
    let mut errors = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                if section.is_empty() {
                    errors.push(format!("line {}: key outside any section", lineno + 1));
                } else {
                    map.insert(
                        (section.clone(), k.trim().to_string()),
                        (v.trim().to_string(), lineno + 1),
                    );
                }
            }
            None => errors.push(format!("line {}: expected key = value", lineno + 1)),
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

fn parse_json(text: &str) -> Result<KeyMap, Vec<String>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| vec![format!("json: {e}")])?;
    let obj = value
        .as_object()
        .ok_or_else(|| vec!["json: top level must be an object of sections".to_string()])?;
    let mut map = KeyMap::new();
    let mut errors = Vec::new();
    for (section, body) in obj {
        let Some(fields) = body.as_object() else {
            errors.push(format!("json: section '{section}' must be an object"));
            continue;
        };
        for (key, v) in fields {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                other => {
                    errors.push(format!("json: [{section}] {key}: unsupported value {other}"));
                    continue;
                }
            };
            map.insert((section.clone(), key.clone()), (text, 0));
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

fn apply(map: KeyMap, cfg: &mut ScenarioConfig) -> Vec<String> {
    let mut errors = Vec::new();
    for ((section, key), (value, lineno)) in map {
        let at = |msg: String| {
            if lineno > 0 {
                format!("line {lineno}: [{section}] {key}: {msg}")
            } else {
                format!("[{section}] {key}: {msg}")
            }
        };
        let mut set_f64 = |target: &mut f64| match value.parse::<f64>() {
            Ok(v) => *target = v,
            Err(e) => errors.push(at(format!("{e}"))),
        };
        match (section.as_str(), key.as_str()) {
            ("source", "kind") => {
                let allowed = ["central", "weak_pulse", "heralded", "prepare_at_distance"];
                if allowed.contains(&value.as_str()) {
                    cfg.source.kind = value.clone();
                } else {
                    errors.push(at(format!("unknown scheme '{value}'")));
                }
            }
            ("source", "mu") => set_f64(&mut cfg.source.mu),
            ("source", "pair_prob_per_gate") => set_f64(&mut cfg.source.pair_prob_per_gate),
            ("source", "herald_efficiency") => set_f64(&mut cfg.source.herald_efficiency),
            ("source", "visibility") => set_f64(&mut cfg.source.visibility),
            ("channel", "length_km") => set_f64(&mut cfg.channel.length_km),
            ("channel", "attenuation_db_per_km") => {
                set_f64(&mut cfg.channel.attenuation_db_per_km);
            }
            ("channel", "group_index") => set_f64(&mut cfg.channel.group_index),
            ("detector", "efficiency") => set_f64(&mut cfg.detector.efficiency),
            ("detector", "dark_count_prob_per_gate") => {
                set_f64(&mut cfg.detector.dark_count_prob_per_gate);
            }
            ("detector", "dead_time_ns") => set_f64(&mut cfg.detector.dead_time_ns),
            ("detector", "afterpulse_prob") => set_f64(&mut cfg.detector.afterpulse_prob),
            ("detector", "jitter_sigma_ps") => set_f64(&mut cfg.detector.jitter_sigma_ps),
            ("detector", "gate_period_ns") => set_f64(&mut cfg.detector.gate_period_ns),
            ("detector", "afterpulse_decay") => set_f64(&mut cfg.detector.afterpulse_decay),
            ("protocol", "n_gates") => match value.parse::<u64>() {
                Ok(v) => cfg.protocol.n_gates = v,
                Err(e) => errors.push(at(format!("{e}"))),
            },
            ("protocol", "sample_fraction") => set_f64(&mut cfg.protocol.sample_fraction),
            ("protocol", "epsilon_margin") => match value.parse::<u64>() {
                Ok(v) => cfg.protocol.epsilon_margin = v,
                Err(e) => errors.push(at(format!("{e}"))),
            },
            ("relativity", "delta_t_ps") => set_f64(&mut cfg.relativity.delta_t_ps),
            ("relativity", "separation_km") => set_f64(&mut cfg.relativity.separation_km),
            ("relativity", "fiber_length_km") => set_f64(&mut cfg.relativity.fiber_length_km),
            ("relativity", "cmb_speed_m_per_s") => set_f64(&mut cfg.relativity.cmb_speed_m_per_s),
            ("relativity", "cmb_target_bound_c") => {
                set_f64(&mut cfg.relativity.cmb_target_bound_c);
            }
            ("relativity", "wheel_speed_m_per_s") => {
                set_f64(&mut cfg.relativity.wheel_speed_m_per_s);
            }
            ("run", "seed") => match value.parse::<u64>() {
                Ok(v) => cfg.run.seed = v,
                Err(e) => errors.push(at(format!("{e}"))),
            },
            _ => errors.push(at("unknown key".to_string())),
        }
    }
    errors
}

fn validate(cfg: &ScenarioConfig) -> Vec<String> {
    let mut errors = Vec::new();
    let mut check = |key: &str, value: f64, min: f64, max: f64| {
        if !value.is_finite() || value < min || value > max {
            errors.push(format!("{key} = {value} outside [{min}, {max}]"));
        }
    };
    check("[source] mu", cfg.source.mu, 0.0, f64::INFINITY);
    check(
        "[source] pair_prob_per_gate",
        cfg.source.pair_prob_per_gate,
        0.0,
        1.0,
    );
    check(
        "[source] herald_efficiency",
        cfg.source.herald_efficiency,
        0.0,
        1.0,
    );
    check("[source] visibility", cfg.source.visibility, 0.0, 1.0);
    check("[channel] length_km", cfg.channel.length_km, 0.0, f64::INFINITY);
    check(
        "[channel] attenuation_db_per_km",
        cfg.channel.attenuation_db_per_km,
        0.0,
        f64::INFINITY,
    );
    check(
        "[channel] group_index",
        cfg.channel.group_index,
        1.0,
        f64::INFINITY,
    );
    check("[detector] efficiency", cfg.detector.efficiency, 0.0, 1.0);
    check(
        "[detector] dark_count_prob_per_gate",
        cfg.detector.dark_count_prob_per_gate,
        0.0,
        1.0,
    );
    check(
        "[detector] dead_time_ns",
        cfg.detector.dead_time_ns,
        0.0,
        f64::INFINITY,
    );
    check(
        "[detector] afterpulse_prob",
        cfg.detector.afterpulse_prob,
        0.0,
        1.0,
    );
    check(
        "[detector] jitter_sigma_ps",
        cfg.detector.jitter_sigma_ps,
        0.0,
        f64::INFINITY,
    );
    check(
        "[detector] gate_period_ns",
        cfg.detector.gate_period_ns,
        f64::MIN_POSITIVE,
        f64::INFINITY,
    );
    check(
        "[detector] afterpulse_decay",
        cfg.detector.afterpulse_decay,
        0.0,
        1.0,
    );
    if cfg.protocol.n_gates == 0 {
        check("[protocol] n_gates", 0.0, 1.0, f64::INFINITY);
    }
    check(
        "[protocol] sample_fraction",
        cfg.protocol.sample_fraction,
        f64::MIN_POSITIVE,
        1.0,
    );
    check(
        "[relativity] delta_t_ps",
        cfg.relativity.delta_t_ps,
        f64::MIN_POSITIVE,
        f64::INFINITY,
    );
    check(
        "[relativity] separation_km",
        cfg.relativity.separation_km,
        f64::MIN_POSITIVE,
        f64::INFINITY,
    );
    check(
        "[relativity] fiber_length_km",
        cfg.relativity.fiber_length_km,
        0.0,
        f64::INFINITY,
    );
    check(
        "[relativity] cmb_speed_m_per_s",
        cfg.relativity.cmb_speed_m_per_s,
        0.0,
        spooky_core::SPEED_OF_LIGHT,
    );
    check(
        "[relativity] wheel_speed_m_per_s",
        cfg.relativity.wheel_speed_m_per_s,
        0.0,
        f64::INFINITY,
    );
    errors
}

/// Parses a configuration string (INI unless it starts with `{`),
/// applies it over the defaults, and validates every invariant,
/// reporting all violations at once.
pub fn load_config_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let map = if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_ini(text)
    }
    .map_err(CliError::Config)?;
    let mut cfg = ScenarioConfig::default();
    let mut errors = apply(map, &mut cfg);
    errors.extend(validate(&cfg));
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(errors))
    }
}

/// Loads a configuration file; `.json` files (or content starting with
/// `{`) are parsed as JSON, anything else as INI.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    load_config_str(&text)
}
