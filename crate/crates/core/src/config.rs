//! Flat key-value run configuration.
//!
//! One `key = value` per line, `#` starts a comment. Keys are grouped in
//! dotted sections:
//!
//! ```text
//! sweep.name = fig3-sm
//! scheme.kind = SM            # SM | SSK | TRAD
//! scheme.nt = 4
//! scheme.nr = 2
//! scheme.m_order = 4
//! scheme.constellation = PSK  # PSK | QAM
//! csi.delta_e2_sq = 0.2
//! csi.delta_e1_sq = tied      # or a value in [0, 1]
//! sweep.snr_db = 0:5:40       # start:step:stop, or a comma list
//! sweep.trials = 1e5
//! sweep.seed = 7
//! ```
//!
//! Omitted `channel.*` keys take the reference LEO link values. The short
//! aliases `scheme`, `nt`, `nr`, `m_order`, `constellation`, `snr`,
//! `trials` and `seed` are accepted for the common keys.
//!
//! A comparison suite declares `suite.members = a, b, c`; keys prefixed
//! with a member label (`a.scheme.kind = SM`) override the shared keys for
//! that member. All members share `sweep.snr_db`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{config, Result};
use crate::modem::{bits_per_use, ConstellationKind, Scheme, SchemeConfig};
use crate::montecarlo::{run_sweep, LinkMode, SweepConfig, SweepResult};

const SECTIONS: [&str; 5] = ["scheme", "channel", "csi", "sweep", "suite"];

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSweep {
    pub name: String,
    pub config: SweepConfig,
}

/// Sweeps sharing one SNR grid, compared side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSuite {
    pub name: String,
    /// Require every member to carry the same bits per channel use.
    pub equal_se: bool,
    pub members: Vec<NamedSweep>,
}

impl ComparisonSuite {
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.members.first() else {
            return config("suite needs at least one member");
        };
        for m in &self.members {
            m.config.validate().map_err(|e| prefix_error(&m.name, e))?;
            if m.config.snr_grid_db != first.config.snr_grid_db {
                return config(format!("member '{}' does not share the suite snr grid", m.name));
            }
        }
        if self.equal_se {
            let se = bits_per_use(&first.config.scheme);
            for m in &self.members {
                let other = bits_per_use(&m.config.scheme);
                if other != se {
                    return config(format!(
                        "equal-SE suite: member '{}' carries {other} bpcu but '{}' carries {se}",
                        m.name, first.name
                    ));
                }
            }
        }
        Ok(())
    }

    /// Runs every member in declaration order.
    pub fn run(&self) -> Result<Vec<SweepResult>> {
        self.validate()?;
        self.members.iter().map(|m| run_sweep(&m.config)).collect()
    }
}

fn prefix_error(member: &str, e: crate::Error) -> crate::Error {
    crate::Error::Config(format!("member '{member}': {e}"))
}

/// A parsed configuration document.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum RunSpec {
    Sweep(NamedSweep),
    Suite(ComparisonSuite),
}

fn canonical_key(key: &str) -> &str {
    match key {
        "scheme" => "scheme.kind",
        "nt" => "scheme.nt",
        "nr" => "scheme.nr",
        "m_order" => "scheme.m_order",
        "constellation" => "scheme.constellation",
        "snr" => "sweep.snr_db",
        "trials" => "sweep.trials",
        "seed" => "sweep.seed",
        other => other,
    }
}

/// Keys understood for a single sweep, excluding `sweep.name`.
const SWEEP_KEYS: [&str; 33] = [
    "scheme.kind",
    "scheme.nt",
    "scheme.nr",
    "scheme.m_order",
    "scheme.constellation",
    "channel.fc_ghz",
    "channel.altitude_km",
    "channel.elevation_deg",
    "channel.earth_radius_km",
    "channel.zenith_attenuation_db",
    "channel.shadow_sigma_db",
    "channel.clutter_loss_db",
    "channel.scintillation_loss_db",
    "channel.rician_k",
    "channel.nakagami_m",
    "channel.nakagami_omega",
    "channel.rayleigh_sigma",
    "channel.fading",
    "channel.doppler.speed_mps",
    "channel.doppler.alpha_deg",
    "channel.doppler.light_speed_mps",
    "channel.doppler.center_distance_km",
    "channel.doppler.delay_slope",
    "channel.doppler.slot_s",
    "csi.delta_e1_sq",
    "csi.delta_e2_sq",
    "sweep.snr_db",
    "sweep.trials",
    "sweep.seed",
    "sweep.link_mode",
    "sweep.time_varying",
    "sweep.noiseless",
    "sweep.name",
];

const SUITE_KEYS: [&str; 3] = ["suite.name", "suite.members", "suite.equal_se"];

struct Entry {
    value: String,
    line: usize,
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return config(format!("line {line_no}: expected 'key = value', got '{line}'"));
        };
        let key = k.trim();
        let value = v.trim();
        if key.is_empty() {
            return config(format!("line {line_no}: empty key"));
        }
        if value.is_empty() {
            return config(format!("line {line_no}: key '{key}' has no value"));
        }
        let key = match key.split_once('.') {
            // Member-prefixed aliases, e.g. `sm.nt`.
            Some((head, rest)) if !SECTIONS.contains(&head) => format!("{head}.{}", canonical_key(rest)),
            _ => canonical_key(key).to_string(),
        };
        if map.contains_key(&key) {
            return config(format!("line {line_no}: duplicate key '{key}'"));
        }
        map.insert(key, Entry { value: value.to_string(), line: line_no });
    }
    Ok(map)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => config(format!("{key}: expected a finite number, got '{v}'")),
    }
}

/// Non-negative integer, allowing `1e5` or `100_000` spellings.
fn parse_count(key: &str, v: &str) -> Result<u64> {
    let cleaned = v.replace('_', "");
    if let Ok(n) = cleaned.parse::<u64>() {
        return Ok(n);
    }
    match cleaned.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
        _ => config(format!("{key}: expected a non-negative integer, got '{v}'")),
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    let n = parse_count(key, v)?;
    usize::try_from(n).or_else(|_| config(format!("{key}: value {n} is too large")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => config(format!("{key}: expected true or false, got '{v}'")),
    }
}

/// `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_snr_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (parse_f64(key, start)?, parse_f64(key, step)?, parse_f64(key, stop)?);
            if step <= 0.0 || stop < start {
                return config(format!("{key}: range '{v}' must have a positive step and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
            if count > 100_000 {
                return config(format!("{key}: range '{v}' has too many points"));
            }
            Ok((0..count).map(|k| start + k as f64 * step).collect())
        }
        [_] => v.split(',').map(|s| parse_f64(key, s.trim())).collect(),
        _ => config(format!("{key}: expected start:step:stop or a comma list, got '{v}'")),
    }
}

fn apply_key(cfg: &mut SweepConfig, key: &str, v: &str) -> Result<()> {
    let s = &mut cfg.scheme;
    match key {
        "scheme.kind" => {
            s.scheme = v.parse()?;
            if s.scheme == Scheme::Ssk {
                s.m_order = 1;
            }
        }
        "scheme.nt" => s.nt = parse_usize(key, v)?,
        "scheme.nr" => s.nr = parse_usize(key, v)?,
        "scheme.m_order" => s.m_order = parse_usize(key, v)?,
        "scheme.constellation" => s.constellation = v.parse::<ConstellationKind>()?,
        "channel.fc_ghz" => cfg.geometry.carrier_ghz = parse_f64(key, v)?,
        "channel.altitude_km" => cfg.geometry.altitude_km = parse_f64(key, v)?,
        "channel.elevation_deg" => cfg.geometry.elevation_deg = parse_f64(key, v)?,
        "channel.earth_radius_km" => cfg.geometry.earth_radius_km = parse_f64(key, v)?,
        "channel.zenith_attenuation_db" => cfg.atmosphere.zenith_attenuation_db = parse_f64(key, v)?,
        "channel.shadow_sigma_db" => cfg.atmosphere.shadow_sigma_db = parse_f64(key, v)?,
        "channel.clutter_loss_db" => cfg.atmosphere.clutter_loss_db = parse_f64(key, v)?,
        "channel.scintillation_loss_db" => cfg.atmosphere.scintillation_loss_db = parse_f64(key, v)?,
        "channel.rician_k" => cfg.fading.rician_k = parse_f64(key, v)?,
        "channel.nakagami_m" => cfg.fading.nakagami_m = parse_f64(key, v)?,
        "channel.nakagami_omega" => cfg.fading.nakagami_omega = parse_f64(key, v)?,
        "channel.rayleigh_sigma" => cfg.fading.rayleigh_sigma = parse_f64(key, v)?,
        "channel.fading" => cfg.fading_enabled = parse_bool(key, v)?,
        "channel.doppler.speed_mps" => cfg.doppler.speed_mps = parse_f64(key, v)?,
        "channel.doppler.alpha_deg" => cfg.doppler.alpha_deg = parse_f64(key, v)?,
        "channel.doppler.light_speed_mps" => cfg.doppler.light_speed_mps = parse_f64(key, v)?,
        "channel.doppler.center_distance_km" => cfg.doppler.center_distance_km = parse_f64(key, v)?,
        "channel.doppler.delay_slope" => cfg.doppler.delay_slope = parse_f64(key, v)?,
        "channel.doppler.slot_s" => cfg.doppler.slot_s = parse_f64(key, v)?,
        "csi.delta_e1_sq" => {
            cfg.delta_e1_sq = if v.eq_ignore_ascii_case("tied") { None } else { Some(parse_f64(key, v)?) }
        }
        "csi.delta_e2_sq" => cfg.delta_e2_sq = parse_f64(key, v)?,
        "sweep.snr_db" => cfg.snr_grid_db = parse_snr_grid(key, v)?,
        "sweep.trials" => cfg.trials_per_point = parse_count(key, v)?,
        "sweep.seed" => cfg.master_seed = parse_count(key, v)?,
        "sweep.link_mode" => cfg.link_mode = v.parse::<LinkMode>()?,
        "sweep.time_varying" => cfg.time_varying = parse_bool(key, v)?,
        "sweep.noiseless" => cfg.noiseless = parse_bool(key, v)?,
        _ => return config(format!("unknown key '{key}'")),
    }
    Ok(())
}

fn default_sweep() -> SweepConfig {
    SweepConfig::new(SchemeConfig::sm(4, 4, 1), Vec::new(), 100_000, 0)
}

fn require(map: &BTreeMap<String, Entry>, keys: &[&str], context: &str) -> Result<()> {
    for k in keys {
        if !map.contains_key(*k) {
            return config(format!("{context}: missing required key '{k}'"));
        }
    }
    Ok(())
}

fn build_sweep<'a>(entries: impl Iterator<Item = (&'a str, &'a Entry)>) -> Result<SweepConfig> {
    let mut cfg = default_sweep();
    // Apply the scheme kind first so an SSK document may still set m_order.
    let mut entries: Vec<_> = entries.collect();
    entries.sort_by_key(|(k, _)| *k != "scheme.kind");
    for (k, e) in entries {
        apply_key(&mut cfg, k, &e.value).map_err(|err| match err {
            crate::Error::Config(msg) => crate::Error::Config(format!("line {}: {msg}", e.line)),
            other => other,
        })?;
    }
    Ok(cfg)
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return config(format!("name '{name}' may only contain letters, digits, '_' and '-'"));
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let map = tokenize(text)?;
    let sweep_required = ["scheme.kind", "scheme.nt", "scheme.nr", "sweep.snr_db", "sweep.seed"];

    let Some(members_entry) = map.get("suite.members") else {
        for k in map.keys() {
            if !SWEEP_KEYS.contains(&k.as_str()) {
                return config(format!("unknown key '{k}'"));
            }
        }
        require(&map, &sweep_required, "sweep")?;
        let name = map.get("sweep.name").map_or("sweep".to_string(), |e| e.value.clone());
        check_name(&name)?;
        let config = build_sweep(
            map.iter()
                .filter(|(k, _)| k.as_str() != "sweep.name")
                .map(|(k, e)| (k.as_str(), e)),
        )?;
        config.validate()?;
        return Ok(RunSpec::Sweep(NamedSweep { name, config }));
    };

    let labels: Vec<String> = members_entry.value.split(',').map(|s| s.trim().to_string()).collect();
    for l in &labels {
        check_name(l)?;
        if SECTIONS.contains(&l.as_str()) {
            return config(format!("member label '{l}' collides with a section name"));
        }
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return config(format!("duplicate member label '{l}'"));
        }
    }

    let mut shared = Vec::new();
    let mut per_member: BTreeMap<&str, Vec<(&str, &Entry)>> = BTreeMap::new();
    for (k, e) in &map {
        if SUITE_KEYS.contains(&k.as_str()) {
            continue;
        }
        if k == "sweep.name" {
            return config("sweep.name is not allowed in a suite; use suite.name");
        }
        if SWEEP_KEYS.contains(&k.as_str()) {
            shared.push((k.as_str(), e));
            continue;
        }
        let Some((head, rest)) = k.split_once('.') else {
            return config(format!("unknown key '{k}'"));
        };
        if !labels.iter().any(|l| l == head) {
            return config(format!("unknown key '{k}'"));
        }
        if !SWEEP_KEYS.contains(&rest) || rest == "sweep.name" {
            return config(format!("unknown key '{k}'"));
        }
        if rest == "sweep.snr_db" {
            return config(format!("'{k}': members share the suite snr grid"));
        }
        per_member.entry(head).or_default().push((rest, e));
    }

    let name = map.get("suite.name").map_or("compare".to_string(), |e| e.value.clone());
    check_name(&name)?;
    let equal_se = match map.get("suite.equal_se") {
        Some(e) => parse_bool("suite.equal_se", &e.value)?,
        None => true,
    };

    let mut members = Vec::with_capacity(labels.len());
    for label in &labels {
        let own = per_member.remove(label.as_str()).unwrap_or_default();
        let mut merged: BTreeMap<&str, &Entry> = shared.iter().copied().collect();
        merged.extend(own);
        let merged_map: BTreeMap<String, Entry> = merged
            .iter()
            .map(|(k, e)| (k.to_string(), Entry { value: e.value.clone(), line: e.line }))
            .collect();
        require(&merged_map, &sweep_required, &format!("member '{label}'"))?;
        let cfg = build_sweep(merged.into_iter()).map_err(|e| prefix_error(label, e))?;
        members.push(NamedSweep { name: label.clone(), config: cfg });
    }
    let suite = ComparisonSuite { name, equal_se, members };
    suite.validate()?;
    Ok(RunSpec::Suite(suite))
}

fn render_grid(grid: &[f64]) -> String {
    grid.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// Every sweep key and its value, in canonical order.
fn sweep_pairs(cfg: &SweepConfig) -> Vec<(&'static str, String)> {
    let s = &cfg.scheme;
    let (g, a, f, d) = (&cfg.geometry, &cfg.atmosphere, &cfg.fading, &cfg.doppler);
    vec![
        ("scheme.kind", s.scheme.to_string()),
        ("scheme.nt", s.nt.to_string()),
        ("scheme.nr", s.nr.to_string()),
        ("scheme.m_order", s.m_order.to_string()),
        ("scheme.constellation", s.constellation.to_string()),
        ("channel.fc_ghz", g.carrier_ghz.to_string()),
        ("channel.altitude_km", g.altitude_km.to_string()),
        ("channel.elevation_deg", g.elevation_deg.to_string()),
        ("channel.earth_radius_km", g.earth_radius_km.to_string()),
        ("channel.zenith_attenuation_db", a.zenith_attenuation_db.to_string()),
        ("channel.shadow_sigma_db", a.shadow_sigma_db.to_string()),
        ("channel.clutter_loss_db", a.clutter_loss_db.to_string()),
        ("channel.scintillation_loss_db", a.scintillation_loss_db.to_string()),
        ("channel.rician_k", f.rician_k.to_string()),
        ("channel.nakagami_m", f.nakagami_m.to_string()),
        ("channel.nakagami_omega", f.nakagami_omega.to_string()),
        ("channel.rayleigh_sigma", f.rayleigh_sigma.to_string()),
        ("channel.fading", cfg.fading_enabled.to_string()),
        ("channel.doppler.speed_mps", d.speed_mps.to_string()),
        ("channel.doppler.alpha_deg", d.alpha_deg.to_string()),
        ("channel.doppler.light_speed_mps", d.light_speed_mps.to_string()),
        ("channel.doppler.center_distance_km", d.center_distance_km.to_string()),
        ("channel.doppler.delay_slope", d.delay_slope.to_string()),
        ("channel.doppler.slot_s", d.slot_s.to_string()),
        ("csi.delta_e1_sq", cfg.delta_e1_sq.map_or("tied".to_string(), |v| v.to_string())),
        ("csi.delta_e2_sq", cfg.delta_e2_sq.to_string()),
        ("sweep.snr_db", render_grid(&cfg.snr_grid_db)),
        ("sweep.trials", cfg.trials_per_point.to_string()),
        ("sweep.seed", cfg.master_seed.to_string()),
        ("sweep.link_mode", cfg.link_mode.to_string()),
        ("sweep.time_varying", cfg.time_varying.to_string()),
        ("sweep.noiseless", cfg.noiseless.to_string()),
    ]
}

/// Fully resolved document for a single sweep.
pub fn render_sweep(sweep: &NamedSweep) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sweep.name = {}", sweep.name);
    for (k, v) in sweep_pairs(&sweep.config) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Fully resolved document for a suite; every member key is spelled out.
pub fn render_suite(suite: &ComparisonSuite) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "suite.name = {}", suite.name);
    let labels: Vec<&str> = suite.members.iter().map(|m| m.name.as_str()).collect();
    let _ = writeln!(out, "suite.members = {}", labels.join(", "));
    let _ = writeln!(out, "suite.equal_se = {}", suite.equal_se);
    if let Some(first) = suite.members.first() {
        let _ = writeln!(out, "sweep.snr_db = {}", render_grid(&first.config.snr_grid_db));
    }
    for m in &suite.members {
        let _ = writeln!(out);
        for (k, v) in sweep_pairs(&m.config) {
            if k != "sweep.snr_db" {
                let _ = writeln!(out, "{}.{k} = {v}", m.name);
            }
        }
    }
    out
}

pub fn render(spec: &RunSpec) -> String {
    match spec {
        RunSpec::Sweep(s) => render_sweep(s),
        RunSpec::Suite(s) => render_suite(s),
    }
}
