//! Scenario configuration files.
//!
//! A configuration file is a strict JSON mirror of the library's scenario
//! parameters: any subset of the fields may appear, unknown names are
//! rejected, and every omitted field is materialized from the library
//! defaults before anything runs.  The materialized form is what gets
//! recorded in run manifests, so a manifest alone pins down the experiment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use smmimo_core::topology::{validate_config, ChannelModelKind, ScenarioConfig};

use crate::CliError;

/// Channel model selector as spelled in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModelName {
    Iid,
    Pathloss,
}

impl From<ChannelModelName> for ChannelModelKind {
    fn from(name: ChannelModelName) -> Self {
        match name {
            ChannelModelName::Iid => ChannelModelKind::Iid,
            ChannelModelName::Pathloss => ChannelModelKind::Pathloss,
        }
    }
}

impl From<ChannelModelKind> for ChannelModelName {
    fn from(kind: ChannelModelKind) -> Self {
        match kind {
            ChannelModelKind::Iid => ChannelModelName::Iid,
            ChannelModelKind::Pathloss => ChannelModelName::Pathloss,
        }
    }
}

/// A configuration file as the user writes it.  Unknown field names fail the
/// parse outright — a silently ignored typo would change the experiment.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub pn_count: Option<u32>,
    pub antennas_per_pn: Option<u32>,
    pub ut_count: Option<u32>,
    pub region_extent_m: Option<f64>,
    pub pn_aperture_m: Option<f64>,
    pub radio_range_m: Option<f64>,
    pub pathloss_exponent: Option<f64>,
    pub noise_floor: Option<f64>,
    pub mu: Option<f64>,
    pub alpha_list: Option<Vec<f64>>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub mc_trials: Option<u32>,
    pub internet_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub serve_quota: Option<u32>,
    pub channel_model: Option<ChannelModelName>,
}

/// A fully materialized configuration: what actually ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub pn_count: u32,
    pub antennas_per_pn: u32,
    pub ut_count: u32,
    pub region_extent_m: f64,
    pub pn_aperture_m: f64,
    pub radio_range_m: f64,
    pub pathloss_exponent: f64,
    pub noise_floor: f64,
    pub mu: f64,
    pub alpha_list: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub mc_trials: u32,
    pub internet_fraction: f64,
    pub seed: u64,
    pub serve_quota: u32,
    pub channel_model: ChannelModelName,
}

impl ResolvedConfig {
    pub fn to_scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            pn_count: self.pn_count,
            antennas_per_pn: self.antennas_per_pn,
            ut_count: self.ut_count,
            region_extent_m: self.region_extent_m,
            pn_aperture_m: self.pn_aperture_m,
            radio_range_m: self.radio_range_m,
            pathloss_exponent: self.pathloss_exponent,
            noise_floor: self.noise_floor,
            mu: self.mu,
            alpha_list: self.alpha_list.clone(),
            snr_grid_db: self.snr_grid_db.clone(),
            mc_trials: self.mc_trials,
            internet_fraction: self.internet_fraction,
            seed: self.seed,
            serve_quota: self.serve_quota,
            channel_model: self.channel_model.into(),
        }
    }
}

/// Read and parse a configuration file.
pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("cannot parse config {}: {e}", path.display())))
}

/// Materialize defaults, settle the seed, and validate the result.
///
/// The seed must come from the file or from `--seed`; there is no wall-clock
/// fallback, because an unseeded run could never be reproduced.
pub fn resolve(file: ConfigFile, seed_flag: Option<u64>) -> Result<ResolvedConfig, CliError> {
    let seed = seed_flag.or(file.seed).ok_or_else(|| {
        CliError::config("no seed given: set \"seed\" in the config file or pass --seed")
    })?;
    let defaults = ScenarioConfig::default();
    let resolved = ResolvedConfig {
        pn_count: file.pn_count.unwrap_or(defaults.pn_count),
        antennas_per_pn: file.antennas_per_pn.unwrap_or(defaults.antennas_per_pn),
        ut_count: file.ut_count.unwrap_or(defaults.ut_count),
        region_extent_m: file.region_extent_m.unwrap_or(defaults.region_extent_m),
        pn_aperture_m: file.pn_aperture_m.unwrap_or(defaults.pn_aperture_m),
        radio_range_m: file.radio_range_m.unwrap_or(defaults.radio_range_m),
        pathloss_exponent: file.pathloss_exponent.unwrap_or(defaults.pathloss_exponent),
        noise_floor: file.noise_floor.unwrap_or(defaults.noise_floor),
        mu: file.mu.unwrap_or(defaults.mu),
        alpha_list: file.alpha_list.unwrap_or_else(|| defaults.alpha_list.clone()),
        snr_grid_db: file.snr_grid_db.unwrap_or_else(|| defaults.snr_grid_db.clone()),
        mc_trials: file.mc_trials.unwrap_or(defaults.mc_trials),
        internet_fraction: file.internet_fraction.unwrap_or(defaults.internet_fraction),
        seed,
        serve_quota: file.serve_quota.unwrap_or(defaults.serve_quota),
        channel_model: file
            .channel_model
            .unwrap_or_else(|| defaults.channel_model.into()),
    };
    let violations = validate_config(&resolved.to_scenario_config());
    if violations.is_empty() {
        Ok(resolved)
    } else {
        Err(CliError::config(violations.join("; ")))
    }
}
