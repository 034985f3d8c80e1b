//! Delay-based maps: how antennas track terminals and how terminal-centric
//! virtual cells form around that knowledge.
//!
//! A terminal broadcasts a pilot; every antenna that hears it learns a delay
//! distance (meters) and a signal-quality weight (received power normalized
//! to the strongest reception, so the best antenna always scores exactly 1).
//! Antennas within a ratio `mu` of the best become candidates, a serve quota
//! trims those to the granted set, and each granted antenna records the
//! terminal in its own delay-based map.  Positions are recovered from three
//! or more delay entries by multilateration: an exact linearization seeds a
//! damped Gauss-Newton refinement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use libm::{fabs, pow, sqrt};

use crate::rng::StreamKey;
use crate::topology::{Point, Scenario};

/// Pilot transmit power (linear).  The quality weight is a ratio, so the
/// absolute value only matters relative to the configured noise floor.
pub const PILOT_TX_POWER: f64 = 1.0;
/// Distances inside one meter do not increase received power any further.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 1.0;
/// Delay change that counts as a major map update, meters.
pub const MAJOR_DELAY_DELTA_M: f64 = 1.0;
/// Quality-weight change that counts as a major map update.
pub const MAJOR_SQW_DELTA: f64 = 0.01;

/// Received pilot power over a distance, `tx * (max(d, 1m) / 1m)^-gamma`.
pub fn received_power(distance_m: f64, pathloss_exponent: f64) -> f64 {
    let d = distance_m.max(MIN_PATHLOSS_DISTANCE_M);
    PILOT_TX_POWER * pow(d, -pathloss_exponent)
}

/// The one acceptance rule shared by candidate selection and capacity
/// masking: a reception is kept iff its power is at least `mu` times the
/// strongest one.
#[inline]
pub fn meets_threshold(power: f64, max_power: f64, mu: f64) -> bool {
    power >= mu * max_power
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotReception {
    pub antenna_id: u32,
    pub ut_id: u32,
    /// True geometric distance; what the delay measurement encodes.
    pub delay_distance_m: f64,
    /// Received power normalized to the strongest reception (max is 1.0).
    pub sqw: f64,
}

/// All receptions of one terminal's pilot, strongest first (ties by antenna
/// id).  Antennas below the noise floor hear nothing; if nobody hears the
/// pilot the terminal has no coverage.
pub fn broadcast_pilot(s: &Scenario, ut_id: u32) -> Result<Vec<PilotReception>, DbmError> {
    let ut = s.ut(ut_id);
    let gamma = s.config.pathloss_exponent;
    let mut heard: Vec<(u32, f64, f64)> = s
        .antennas
        .iter()
        .filter_map(|a| {
            let d = ut.position.distance_to(a.position);
            let p = received_power(d, gamma);
            (p >= s.config.noise_floor).then_some((a.antenna_id, d, p))
        })
        .collect();
    if heard.is_empty() {
        return Err(DbmError::NoCoverage { ut_id });
    }
    let max_power = heard.iter().fold(0.0_f64, |acc, &(_, _, p)| acc.max(p));
    let mut receptions: Vec<PilotReception> = heard
        .drain(..)
        .map(|(antenna_id, d, p)| PilotReception {
            antenna_id,
            ut_id,
            delay_distance_m: d,
            sqw: p / max_power,
        })
        .collect();
    receptions.sort_by(|a, b| b.sqw.total_cmp(&a.sqw).then(a.antenna_id.cmp(&b.antenna_id)));
    Ok(receptions)
}

/// Antennas whose quality weight clears the acceptance ratio, in grant order
/// (quality desc, id asc).
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub ut_id: u32,
    pub antenna_ids: Vec<u32>,
    pub mu_used: f64,
}

/// Keep receptions with `sqw >= mu` (weights are already normalized to a
/// maximum of exactly 1).  `mu = 1` keeps only the strongest reception and
/// its exact ties.
pub fn select_candidates(receptions: &[PilotReception], mu: f64) -> CandidateSet {
    let ut_id = receptions.first().map_or(u32::MAX, |r| r.ut_id);
    let antenna_ids = receptions
        .iter()
        .filter(|r| meets_threshold(r.sqw, 1.0, mu))
        .map(|r| r.antenna_id)
        .collect();
    CandidateSet {
        ut_id,
        antenna_ids,
        mu_used: mu,
    }
}

/// Antennas actually granted to the terminal, in grant order.
#[derive(Debug, Clone, PartialEq)]
pub struct ServingSet {
    pub ut_id: u32,
    pub antenna_ids: Vec<u32>,
}

/// Cap the candidate list at `serve_quota` entries (0 = no cap).  Candidates
/// are already ranked, so the cut keeps the best and breaks boundary ties by
/// antenna id.
pub fn decide_serving_set(candidates: &CandidateSet, serve_quota: u32) -> ServingSet {
    let keep = if serve_quota == 0 {
        candidates.antenna_ids.len()
    } else {
        candidates.antenna_ids.len().min(serve_quota as usize)
    };
    ServingSet {
        ut_id: candidates.ut_id,
        antenna_ids: candidates.antenna_ids[..keep].to_vec(),
    }
}

// ---------------------------------------------------------------------------
// Delay-based maps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbmEntry {
    pub delay_distance_m: f64,
    pub sqw: f64,
    pub epoch: u64,
}

/// One antenna's private view of the terminals it serves.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayBasedMap {
    pub entries: BTreeMap<u32, DbmEntry>,
}

/// All per-antenna maps, keyed by antenna id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DbmSet {
    pub maps: BTreeMap<u32, DelayBasedMap>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateStats {
    pub inserted: u32,
    pub refreshed: u32,
    /// (antenna, terminal) pairs whose entry changed materially: new entries,
    /// delay moves beyond [`MAJOR_DELAY_DELTA_M`], or quality moves beyond
    /// [`MAJOR_SQW_DELTA`].
    pub major_entries: Vec<(u32, u32)>,
}

/// Fold a batch of receptions into the maps.  Each reception upserts one
/// entry under the given epoch.
pub fn update_dbm(set: &mut DbmSet, receptions: &[PilotReception], epoch: u64) -> UpdateStats {
    let mut stats = UpdateStats::default();
    for r in receptions {
        let map = set.maps.entry(r.antenna_id).or_default();
        let fresh = DbmEntry {
            delay_distance_m: r.delay_distance_m,
            sqw: r.sqw,
            epoch,
        };
        match map.entries.insert(r.ut_id, fresh) {
            None => {
                stats.inserted += 1;
                stats.major_entries.push((r.antenna_id, r.ut_id));
            }
            Some(old) => {
                stats.refreshed += 1;
                if fabs(fresh.delay_distance_m - old.delay_distance_m) > MAJOR_DELAY_DELTA_M
                    || fabs(fresh.sqw - old.sqw) > MAJOR_SQW_DELTA
                {
                    stats.major_entries.push((r.antenna_id, r.ut_id));
                }
            }
        }
    }
    stats
}

// ---------------------------------------------------------------------------
// Positioning
// ---------------------------------------------------------------------------

/// A known antenna position paired with a measured delay distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub position: Point,
    pub range_m: f64,
}

/// Ratio below which the anchor cloud counts as collinear.
const DEGENERACY_RATIO: f64 = 1e-9;
const GAUSS_NEWTON_MAX_STEPS: u32 = 50;
const GAUSS_NEWTON_TOL_M: f64 = 1e-9;

/// Recover a position from three or more (anchor, range) pairs.
///
/// The pairwise difference of range equations is linear in the unknown
/// position, so a least-squares solve of that system is exact for consistent
/// measurements; up to 50 damped Gauss-Newton steps then polish the estimate
/// (convergence: step shorter than 1e-9 m).  Anchors that are collinear - or
/// fewer than three of them - cannot pin down a point in the plane and are
/// rejected as degenerate, judged by the singular values of the centered
/// anchor matrix.
pub fn locate_ut(anchors: &[Anchor]) -> Result<Point, DbmError> {
    let n = anchors.len();
    if n < 3 {
        return Err(DbmError::DegenerateGeometry);
    }

    // Centroid and centered second moments of the anchor cloud.
    let inv = 1.0 / n as f64;
    let cx = anchors.iter().map(|a| a.position.x).sum::<f64>() * inv;
    let cy = anchors.iter().map(|a| a.position.y).sum::<f64>() * inv;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for a in anchors {
        let bx = a.position.x - cx;
        let by = a.position.y - cy;
        sxx += bx * bx;
        sxy += bx * by;
        syy += by * by;
    }
    // Squared singular values of the centered anchor matrix are the scatter
    // eigenvalues.  The large one comes straight from the closed form; the
    // small one is re-measured as the residual off the principal line, which
    // stays accurate where the closed-form difference would cancel away.
    let trace = sxx + syy;
    let gap = sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
    let lambda_max = 0.5 * (trace + gap);
    if !(lambda_max > 0.0) {
        // All anchors coincide.
        return Err(DbmError::DegenerateGeometry);
    }
    let (vx, vy) = {
        // Two algebraically equivalent eigenvector formulas; the longer one
        // is the numerically trustworthy one.
        let (ax, ay) = (sxy, lambda_max - sxx);
        let (bx, by) = (lambda_max - syy, sxy);
        if ax * ax + ay * ay >= bx * bx + by * by {
            (ax, ay)
        } else {
            (bx, by)
        }
    };
    let vnorm = sqrt(vx * vx + vy * vy);
    // Near-isotropic scatter leaves the eigenvector underdetermined, but any
    // direction is then principal — and the cloud is nowhere near collinear.
    let (nx, ny) = if vnorm > 0.0 {
        (-vy / vnorm, vx / vnorm)
    } else {
        (0.0, 1.0)
    };
    let mut lambda_min = 0.0;
    for a in anchors {
        let off = (a.position.x - cx) * nx + (a.position.y - cy) * ny;
        lambda_min += off * off;
    }
    if lambda_min < DEGENERACY_RATIO * DEGENERACY_RATIO * lambda_max {
        return Err(DbmError::DegenerateGeometry);
    }

    // Linear seed: subtract the first range equation from the others.
    // In centered coordinates b_i = a_i - c, unknown y = x - c:
    //   2 (b_0 - b_i) . y = (d_i^2 - d_0^2) - (|b_i|^2 - |b_0|^2)
    let b = |a: &Anchor| (a.position.x - cx, a.position.y - cy);
    let (b0x, b0y) = b(&anchors[0]);
    let d0 = anchors[0].range_m;
    let (mut ata00, mut ata01, mut ata11) = (0.0, 0.0, 0.0);
    let (mut atb0, mut atb1) = (0.0, 0.0);
    for a in &anchors[1..] {
        let (bx, by) = b(a);
        let row_x = 2.0 * (b0x - bx);
        let row_y = 2.0 * (b0y - by);
        let rhs = (a.range_m * a.range_m - d0 * d0) - (bx * bx + by * by - b0x * b0x - b0y * b0y);
        ata00 += row_x * row_x;
        ata01 += row_x * row_y;
        ata11 += row_y * row_y;
        atb0 += row_x * rhs;
        atb1 += row_y * rhs;
    }
    let (yx, yy) = solve2(ata00, ata01, ata01, ata11, atb0, atb1);
    let mut x = Point::new(yx + cx, yy + cy);

    // Damped Gauss-Newton on the range residuals.
    for _ in 0..GAUSS_NEWTON_MAX_STEPS {
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut jtr0, mut jtr1) = (0.0, 0.0);
        for a in anchors {
            let dx = x.x - a.position.x;
            let dy = x.y - a.position.y;
            let dist = sqrt(dx * dx + dy * dy);
            let safe = dist.max(1e-12);
            let (jx, jy) = (dx / safe, dy / safe);
            let r = dist - a.range_m;
            jtj00 += jx * jx;
            jtj01 += jx * jy;
            jtj11 += jy * jy;
            jtr0 += jx * r;
            jtr1 += jy * r;
        }
        let damp = 1e-12 * (jtj00 + jtj11).max(1.0);
        let (sx, sy) = solve2(jtj00 + damp, jtj01, jtj01, jtj11 + damp, -jtr0, -jtr1);
        x = Point::new(x.x + sx, x.y + sy);
        if sqrt(sx * sx + sy * sy) < GAUSS_NEWTON_TOL_M {
            break;
        }
    }
    Ok(x)
}

/// 2x2 linear solve by Cramer with partial pivoting folded into the ratio.
fn solve2(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> (f64, f64) {
    let det = a * d - b * c;
    ((e * d - b * f) / det, (a * f - e * c) / det)
}

/// Add zero-mean Gaussian noise (standard deviation `sigma_m`) to measured
/// ranges; the robustness knob for positioning experiments.  Ranges never go
/// negative.
pub fn perturb_ranges(anchors: &mut [Anchor], sigma_m: f64, key: StreamKey) {
    for (i, a) in anchors.iter_mut().enumerate() {
        a.range_m = (a.range_m + sigma_m * key.fold(i as u64).gaussian(0)).max(0.0);
    }
}

// ---------------------------------------------------------------------------
// Virtual cells
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualCell {
    pub vc_id: u32,
    pub vn_id: u32,
    /// Serving antennas that belong to the owning virtual node, ascending.
    pub antenna_ids: Vec<u32>,
    pub ut_ids: Vec<u32>,
}

/// Identity assignment: physical node `i` backs virtual node `i`.
pub fn identity_vn_assignment(s: &Scenario) -> BTreeMap<u32, u32> {
    s.pns.iter().map(|pn| (pn.pn_id, pn.pn_id)).collect()
}

/// Antenna -> owning virtual node, derived from a PN -> VN assignment.
pub fn antenna_vn_assignment(s: &Scenario, pn_to_vn: &BTreeMap<u32, u32>) -> BTreeMap<u32, u32> {
    s.antennas
        .iter()
        .filter_map(|a| pn_to_vn.get(&a.pn_id).map(|&vn| (a.antenna_id, vn)))
        .collect()
}

/// Group terminals into virtual cells: each terminal joins the virtual node
/// that owns the plurality of its granted antennas (ties to the lowest VN
/// id), and a cell's antenna set is the union of its members' grants
/// restricted to that node's own antennas.  Terminals with no grants are
/// left out; the produced cells partition the covered terminals.
pub fn form_virtual_cells(
    serving: &[ServingSet],
    antenna_vn: &BTreeMap<u32, u32>,
) -> Vec<VirtualCell> {
    let mut members: BTreeMap<u32, Vec<&ServingSet>> = BTreeMap::new();
    for set in serving {
        if set.antenna_ids.is_empty() {
            continue;
        }
        let mut votes: BTreeMap<u32, u32> = BTreeMap::new();
        for a in &set.antenna_ids {
            if let Some(&vn) = antenna_vn.get(a) {
                *votes.entry(vn).or_insert(0) += 1;
            }
        }
        // Ascending key order means a strict > keeps the lowest VN on ties.
        let mut winner: Option<(u32, u32)> = None;
        for (&vn, &count) in &votes {
            if winner.map_or(true, |(_, best)| count > best) {
                winner = Some((vn, count));
            }
        }
        if let Some((vn, _)) = winner {
            members.entry(vn).or_default().push(set);
        }
    }

    members
        .into_iter()
        .map(|(vn_id, sets)| {
            let mut antennas = BTreeSet::new();
            let mut uts = Vec::new();
            for set in sets {
                uts.push(set.ut_id);
                for a in &set.antenna_ids {
                    if antenna_vn.get(a) == Some(&vn_id) {
                        antennas.insert(*a);
                    }
                }
            }
            uts.sort_unstable();
            VirtualCell {
                vc_id: vn_id,
                vn_id,
                antenna_ids: antennas.into_iter().collect(),
                ut_ids: uts,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationPair {
    pub vc_a: u32,
    pub vc_b: u32,
    /// Antennas granted to terminals of both cells.
    pub shared_antennas: u32,
    /// Grant slots where a terminal of one cell is served by an antenna the
    /// other cell's node owns.
    pub cross_service: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationReport {
    /// Fraction of grant slots pointing outside the terminal's own cell.
    pub lambda: f64,
    pub serving_slots: u64,
    pub leaked_slots: u64,
    pub pairs: Vec<IsolationPair>,
}

/// Measure how cleanly the cells separate: the leakage ratio counts grant
/// slots served by foreign nodes, and per-pair stats show where cells touch.
pub fn check_isolation(
    cells: &[VirtualCell],
    serving: &[ServingSet],
    antenna_vn: &BTreeMap<u32, u32>,
) -> IsolationReport {
    let ut_cell: BTreeMap<u32, u32> = cells
        .iter()
        .flat_map(|c| c.ut_ids.iter().map(move |&u| (u, c.vn_id)))
        .collect();
    let grants: BTreeMap<u32, &ServingSet> =
        serving.iter().map(|s| (s.ut_id, s)).collect();

    let mut serving_slots = 0u64;
    let mut leaked_slots = 0u64;
    for (&ut, &own_vn) in &ut_cell {
        let Some(set) = grants.get(&ut) else { continue };
        for a in &set.antenna_ids {
            serving_slots += 1;
            if antenna_vn.get(a) != Some(&own_vn) {
                leaked_slots += 1;
            }
        }
    }

    let mut pairs = Vec::new();
    for (i, ca) in cells.iter().enumerate() {
        // Antennas touched by cell members, regardless of owner.
        let touched = |c: &VirtualCell| -> BTreeSet<u32> {
            c.ut_ids
                .iter()
                .filter_map(|u| grants.get(u))
                .flat_map(|s| s.antenna_ids.iter().copied())
                .collect()
        };
        let ta = touched(ca);
        for cb in &cells[i + 1..] {
            let tb = touched(cb);
            let shared = ta.intersection(&tb).count() as u32;
            let cross = cross_service(ca, cb.vn_id, &grants, antenna_vn)
                + cross_service(cb, ca.vn_id, &grants, antenna_vn);
            pairs.push(IsolationPair {
                vc_a: ca.vc_id,
                vc_b: cb.vc_id,
                shared_antennas: shared,
                cross_service: cross,
            });
        }
    }

    IsolationReport {
        lambda: if serving_slots == 0 {
            0.0
        } else {
            leaked_slots as f64 / serving_slots as f64
        },
        serving_slots,
        leaked_slots,
        pairs,
    }
}

fn cross_service(
    cell: &VirtualCell,
    other_vn: u32,
    grants: &BTreeMap<u32, &ServingSet>,
    antenna_vn: &BTreeMap<u32, u32>,
) -> u32 {
    cell.ut_ids
        .iter()
        .filter_map(|u| grants.get(u))
        .flat_map(|s| s.antenna_ids.iter())
        .filter(|a| antenna_vn.get(a) == Some(&other_vn))
        .count() as u32
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// End result of running discovery for every terminal of a scenario under
/// the identity PN -> VN assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DbmPipeline {
    pub dbms: DbmSet,
    pub serving: Vec<ServingSet>,
    pub cells: Vec<VirtualCell>,
    pub isolation: IsolationReport,
    /// Terminals nobody heard.
    pub uncovered: Vec<u32>,
}

/// Broadcast every terminal's pilot, grant serving sets, build the maps
/// (epoch 0), and form cells.
pub fn run_dbm_pipeline(s: &Scenario) -> DbmPipeline {
    let antenna_vn = antenna_vn_assignment(s, &identity_vn_assignment(s));
    let mut dbms = DbmSet::default();
    let mut serving = Vec::new();
    let mut uncovered = Vec::new();
    for ut in &s.uts {
        match broadcast_pilot(s, ut.ut_id) {
            Err(DbmError::NoCoverage { ut_id }) => uncovered.push(ut_id),
            Err(_) => unreachable!("broadcast only fails for lack of coverage"),
            Ok(receptions) => {
                let candidates = select_candidates(&receptions, s.config.mu);
                let grant = decide_serving_set(&candidates, s.config.serve_quota);
                let granted: Vec<PilotReception> = receptions
                    .iter()
                    .filter(|r| grant.antenna_ids.contains(&r.antenna_id))
                    .copied()
                    .collect();
                update_dbm(&mut dbms, &granted, 0);
                serving.push(grant);
            }
        }
    }
    let cells = form_virtual_cells(&serving, &antenna_vn);
    let isolation = check_isolation(&cells, &serving, &antenna_vn);
    DbmPipeline {
        dbms,
        serving,
        cells,
        isolation,
        uncovered,
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbmError {
    /// No antenna heard the terminal's pilot.
    NoCoverage { ut_id: u32 },
    /// Anchors collinear or too few to fix a position.
    DegenerateGeometry,
}

impl fmt::Display for DbmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DbmError::NoCoverage { ut_id } => write!(f, "no antenna hears terminal {ut_id}"),
            DbmError::DegenerateGeometry => {
                write!(f, "anchor geometry cannot pin down a position")
            }
        }
    }
}

impl core::error::Error for DbmError {}
