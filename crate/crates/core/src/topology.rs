//! Scenario layout: physical nodes, their hardware blocks and antennas, and
//! the user terminals scattered over the service region.
//!
//! A physical node (PN) is assembled from identical blocks, each contributing
//! radios plus some compute and storage.  Placement is deterministic in the
//! scenario seed: PN centers land uniformly in the region (inset by the
//! antenna aperture so arrays never poke outside), antennas land uniformly in
//! a disk around their PN, and terminals land uniformly over the full region.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;

use crate::capacity::ALPHA_STAR;
use crate::rng::{StreamDomain, StreamKey};

/// Most radios a single hardware block can carry; larger arrays are built by
/// stacking blocks.
pub const MAX_BLOCK_RADIOS: u32 = 250;
/// Compute units contributed by one block.
pub const COMPUTE_UNITS_PER_BLOCK: u32 = 8;
/// Storage units contributed by one block.
pub const STORAGE_UNITS_PER_BLOCK: u32 = 16;
/// Smallest usable acceptance threshold; below this the threshold would be
/// indistinguishable from "accept everything" in double precision.
pub const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Euclidean distance in meters.  Every module measures distance through
    /// this one function so derived costs agree bit-for-bit everywhere.
    pub fn distance_to(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        sqrt(dx * dx + dy * dy)
    }
}

/// One hardware block: radios plus pooled compute/storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcmBlock {
    /// Block id, unique within its PN.
    pub block_id: u32,
    pub radio_count: u32,
    pub compute_units: u32,
    pub storage_units: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNode {
    pub pn_id: u32,
    pub position: Point,
    pub blocks: Vec<CcmBlock>,
    /// Global ids of the antennas mounted on this PN, ascending.
    pub antenna_ids: Vec<u32>,
}

impl PhysicalNode {
    /// Which block carries the given local radio index (0-based within the PN).
    pub fn block_of_radio(&self, local_radio: u32) -> Option<u32> {
        let mut base = 0;
        for b in &self.blocks {
            if local_radio < base + b.radio_count {
                return Some(b.block_id);
            }
            base += b.radio_count;
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub antenna_id: u32,
    pub pn_id: u32,
    pub position: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserTerminal {
    pub ut_id: u32,
    pub position: Point,
}

/// How channel matrix entries are drawn for capacity estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModelKind {
    /// Independent unit-variance complex Gaussian entries.
    Iid,
    /// Entry variance follows the distance-decay law of the scenario geometry.
    Pathloss,
}

/// Full experiment description.  `validate_config` checks it; `build_scenario`
/// turns it into concrete geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pn_count: u32,
    pub antennas_per_pn: u32,
    pub ut_count: u32,
    /// Side length of the square service region, meters.
    pub region_extent_m: f64,
    /// Radius of the antenna cloud around each PN center, meters.
    pub pn_aperture_m: f64,
    /// Maximum PN-to-PN distance for direct backbone links, meters.
    pub radio_range_m: f64,
    /// Distance-decay exponent of received power.
    pub pathloss_exponent: f64,
    /// Linear received-power floor below which a pilot is not heard.
    pub noise_floor: f64,
    /// Minimum acceptance ratio for candidate antennas, in (0, 1].
    pub mu: f64,
    /// Interference factors to sweep, each in (0, 1].
    pub alpha_list: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub mc_trials: u32,
    /// Fraction of traffic destined for the internet, in [0, 1].
    pub internet_fraction: f64,
    pub seed: u64,
    /// Serving-set size cap per terminal; 0 means unlimited.
    pub serve_quota: u32,
    pub channel_model: ChannelModelKind,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            pn_count: 4,
            antennas_per_pn: 1000,
            ut_count: 400,
            region_extent_m: 1000.0,
            pn_aperture_m: 5.0,
            radio_range_m: 1500.0,
            pathloss_exponent: 3.8,
            noise_floor: 1e-13,
            mu: 0.5,
            alpha_list: alloc::vec![ALPHA_STAR, 0.1, 0.5, 1.0],
            snr_grid_db: alloc::vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            mc_trials: 200,
            internet_fraction: 0.75,
            seed: 1,
            serve_quota: 0,
            channel_model: ChannelModelKind::Iid,
        }
    }
}

/// Check every field and report *all* violations, not just the first.
/// An empty report means the config is usable.
pub fn validate_config(config: &ScenarioConfig) -> Vec<String> {
    let mut report = Vec::new();
    if config.pn_count == 0 {
        report.push(String::from("pn_count must be at least 1"));
    }
    if config.antennas_per_pn == 0 {
        report.push(String::from("antennas_per_pn must be at least 1"));
    }
    if !(config.region_extent_m.is_finite() && config.region_extent_m > 0.0) {
        report.push(String::from("region_extent_m must be positive and finite"));
    }
    if !(config.pn_aperture_m.is_finite() && config.pn_aperture_m >= 0.0) {
        report.push(String::from("pn_aperture_m must be non-negative and finite"));
    } else if config.region_extent_m.is_finite()
        && 2.0 * config.pn_aperture_m >= config.region_extent_m
    {
        report.push(String::from("pn_aperture_m too large for region_extent_m"));
    }
    if !(config.radio_range_m.is_finite() && config.radio_range_m >= 0.0) {
        report.push(String::from("radio_range_m must be non-negative and finite"));
    }
    if !(config.pathloss_exponent.is_finite() && config.pathloss_exponent > 0.0) {
        report.push(String::from("pathloss_exponent must be positive and finite"));
    }
    if !(config.noise_floor.is_finite() && config.noise_floor >= 0.0) {
        report.push(String::from("noise_floor must be non-negative and finite"));
    }
    if !(config.mu > 0.0 && config.mu <= 1.0) {
        report.push(String::from("mu out of (0,1]"));
    } else if config.mu < MU_FLOOR {
        report.push(format!("mu below minimum {MU_FLOOR:e}"));
    }
    if config.alpha_list.is_empty() {
        report.push(String::from("alpha_list must not be empty"));
    }
    for &alpha in &config.alpha_list {
        if !(alpha > 0.0 && alpha <= 1.0) {
            report.push(String::from("alpha out of (0,1]"));
        }
    }
    if config.snr_grid_db.is_empty() {
        report.push(String::from("snr_grid_db must not be empty"));
    }
    for &snr in &config.snr_grid_db {
        if !snr.is_finite() {
            report.push(String::from("snr_grid_db entries must be finite"));
        }
    }
    if config.mc_trials == 0 {
        report.push(String::from("mc_trials must be at least 1"));
    }
    if !(config.internet_fraction.is_finite()
        && (0.0..=1.0).contains(&config.internet_fraction))
    {
        report.push(String::from("internet_fraction out of [0,1]"));
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub pns: Vec<PhysicalNode>,
    pub antennas: Vec<Antenna>,
    pub uts: Vec<UserTerminal>,
}

impl Scenario {
    pub fn antenna(&self, antenna_id: u32) -> &Antenna {
        &self.antennas[antenna_id as usize]
    }

    pub fn ut(&self, ut_id: u32) -> &UserTerminal {
        &self.uts[ut_id as usize]
    }
}

/// Split a PN's radio complement into blocks of at most [`MAX_BLOCK_RADIOS`],
/// as evenly as possible (1000 radios -> 4 blocks of 250).
fn block_layout(antennas_per_pn: u32) -> Vec<CcmBlock> {
    let count = antennas_per_pn.div_ceil(MAX_BLOCK_RADIOS);
    let base = antennas_per_pn / count;
    let extra = antennas_per_pn % count;
    (0..count)
        .map(|block_id| CcmBlock {
            block_id,
            radio_count: base + u32::from(block_id < extra),
            compute_units: COMPUTE_UNITS_PER_BLOCK,
            storage_units: STORAGE_UNITS_PER_BLOCK,
        })
        .collect()
}

/// Materialize the geometry for a validated config.
///
/// Deterministic in `config.seed`: the same config always yields the same
/// scenario, and distinct seeds yield distinct layouts.
///
/// # Panics
///
/// Panics if the config has validation violations; run [`validate_config`]
/// first.
pub fn build_scenario(config: &ScenarioConfig) -> Scenario {
    let violations = validate_config(config);
    assert!(
        violations.is_empty(),
        "build_scenario called with invalid config: {}",
        violations.join("; ")
    );

    let extent = config.region_extent_m;
    let aperture = config.pn_aperture_m;
    let inset_lo = aperture;
    let inset_span = extent - 2.0 * aperture;

    let pn_key = StreamKey::new(config.seed, StreamDomain::PnPlacement);
    let antenna_key = StreamKey::new(config.seed, StreamDomain::AntennaOffset);
    let ut_key = StreamKey::new(config.seed, StreamDomain::UtPlacement);

    let mut pns = Vec::with_capacity(config.pn_count as usize);
    let mut antennas = Vec::with_capacity((config.pn_count * config.antennas_per_pn) as usize);

    for pn_id in 0..config.pn_count {
        let k = pn_key.fold(pn_id as u64);
        let center = Point::new(
            inset_lo + k.uniform(0) * inset_span,
            inset_lo + k.uniform(1) * inset_span,
        );

        let first_antenna = pn_id * config.antennas_per_pn;
        let antenna_ids: Vec<u32> =
            (first_antenna..first_antenna + config.antennas_per_pn).collect();

        for &antenna_id in &antenna_ids {
            let ak = antenna_key.fold(antenna_id as u64);
            // Uniform over the aperture disk.
            let r = aperture * sqrt(ak.uniform(0));
            let theta = core::f64::consts::TAU * ak.uniform(1);
            let position = Point::new(
                (center.x + r * libm::cos(theta)).clamp(0.0, extent),
                (center.y + r * libm::sin(theta)).clamp(0.0, extent),
            );
            antennas.push(Antenna {
                antenna_id,
                pn_id,
                position,
            });
        }

        pns.push(PhysicalNode {
            pn_id,
            position: center,
            blocks: block_layout(config.antennas_per_pn),
            antenna_ids,
        });
    }

    let uts = (0..config.ut_count)
        .map(|ut_id| {
            let k = ut_key.fold(ut_id as u64);
            UserTerminal {
                ut_id,
                position: Point::new(k.uniform(0) * extent, k.uniform(1) * extent),
            }
        })
        .collect();

    Scenario {
        config: config.clone(),
        pns,
        antennas,
        uts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_config_is_valid() {
        assert!(validate_config(&ScenarioConfig::default()).is_empty());
    }

    #[test]
    fn validation_reports_every_violation() {
        let cfg = ScenarioConfig {
            mu: 0.0,
            alpha_list: vec![1.5, 0.5, -0.1],
            internet_fraction: 1.5,
            ..ScenarioConfig::default()
        };
        let report = validate_config(&cfg);
        assert!(report.iter().any(|m| m == "mu out of (0,1]"));
        assert_eq!(
            report.iter().filter(|m| *m == "alpha out of (0,1]").count(),
            2
        );
        assert!(report.iter().any(|m| m == "internet_fraction out of [0,1]"));
        assert_eq!(report.len(), 4);
    }

    #[test]
    fn mu_below_floor_is_rejected() {
        let cfg = ScenarioConfig {
            mu: 1e-13,
            ..ScenarioConfig::default()
        };
        let report = validate_config(&cfg);
        assert_eq!(report.len(), 1);
        assert!(report[0].starts_with("mu below minimum"));
    }

    #[test]
    fn build_produces_expected_counts() {
        let cfg = ScenarioConfig::default();
        let s = build_scenario(&cfg);
        assert_eq!(s.pns.len(), 4);
        assert_eq!(s.antennas.len(), 4000);
        assert_eq!(s.uts.len(), 400);
        for pn in &s.pns {
            assert_eq!(pn.antenna_ids.len(), 1000);
            assert_eq!(pn.blocks.len(), 4);
            assert!(pn.blocks.iter().all(|b| b.radio_count == 250));
        }
    }

    #[test]
    fn zero_terminals_is_a_valid_layout() {
        let cfg = ScenarioConfig {
            ut_count: 0,
            ..ScenarioConfig::default()
        };
        let s = build_scenario(&cfg);
        assert!(s.uts.is_empty());
        assert_eq!(s.antennas.len(), 4000);
    }

    #[test]
    fn placement_is_deterministic_and_seed_sensitive() {
        let cfg = ScenarioConfig::default();
        let a = build_scenario(&cfg);
        let b = build_scenario(&cfg);
        assert_eq!(a, b);

        let other = build_scenario(&ScenarioConfig {
            seed: 2,
            ..ScenarioConfig::default()
        });
        assert_ne!(a.pns, other.pns);
        assert_ne!(a.uts, other.uts);
    }

    #[test]
    fn every_position_stays_inside_the_region() {
        for seed in 0..20 {
            let cfg = ScenarioConfig {
                seed,
                pn_count: 6,
                antennas_per_pn: 40,
                ut_count: 50,
                region_extent_m: 200.0,
                pn_aperture_m: 30.0,
                ..ScenarioConfig::default()
            };
            let s = build_scenario(&cfg);
            let inside = |p: Point| {
                (0.0..=cfg.region_extent_m).contains(&p.x)
                    && (0.0..=cfg.region_extent_m).contains(&p.y)
            };
            assert!(s.pns.iter().all(|pn| inside(pn.position)));
            assert!(s.uts.iter().all(|ut| inside(ut.position)));
            for a in &s.antennas {
                assert!(inside(a.position));
                let pn = &s.pns[a.pn_id as usize];
                assert!(
                    a.position.distance_to(pn.position) <= cfg.pn_aperture_m * (1.0 + 1e-12),
                    "antenna strayed outside its PN aperture"
                );
            }
        }
    }

    #[test]
    fn uneven_radio_counts_split_into_balanced_blocks() {
        let blocks = block_layout(520);
        assert_eq!(blocks.len(), 3);
        let sizes: Vec<u32> = blocks.iter().map(|b| b.radio_count).collect();
        assert_eq!(sizes.iter().sum::<u32>(), 520);
        assert_eq!(sizes, vec![174, 173, 173]);

        let single = block_layout(8);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].radio_count, 8);
    }

    #[test]
    fn radio_to_block_lookup_matches_layout() {
        let pn = PhysicalNode {
            pn_id: 0,
            position: Point::new(0.0, 0.0),
            blocks: block_layout(520),
            antenna_ids: (0..520).collect(),
        };
        assert_eq!(pn.block_of_radio(0), Some(0));
        assert_eq!(pn.block_of_radio(173), Some(0));
        assert_eq!(pn.block_of_radio(174), Some(1));
        assert_eq!(pn.block_of_radio(519), Some(2));
        assert_eq!(pn.block_of_radio(520), None);
    }
}
