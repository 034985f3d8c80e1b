//! Command-line front end for the simulator.
//!
//! Five subcommands cover the experiment pipelines: `init` boots the node
//! network and dumps converged connection maps, `dbm` builds delay maps and
//! virtual cells, `capacity` sweeps ergodic capacity over the interference
//! and SNR grid, `offload` compares gateway placements, and `squ` prices
//! flows in service quanta units.  Every run writes a manifest next to its
//! primary output; `--manifest` reproduces a recorded run bit for bit.
//!
//! Data goes to files only; diagnostics go to stderr.  Exit codes: 0 for
//! success, 1 for configuration problems, 2 for execution problems.

mod config;
mod csvout;
mod manifest;
mod parallel;
mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smmimo_core::accounting::{compute_squ, SquVector, SquWeights};
use smmimo_core::bootstrap::{BootSim, Destination, MessageClass, MessageKind};
use smmimo_core::capacity::{
    cell_pathloss_variances, ChannelModel, ChannelSpec, MaskMode, SweepSpec,
};
use smmimo_core::dbm::run_dbm_pipeline;
use smmimo_core::topology::build_scenario;
use smmimo_core::vnode::{
    assign_roles, route_traffic, FlowDst, PgwMode, Role, TrafficFlow, VirtualNode,
};
use smmimo_core::Scenario;

use config::{ChannelModelName, ResolvedConfig};
use manifest::RunManifest;

/// Failure classes, one per nonzero exit code: configuration problems stop
/// the run before any work (exit 1), execution problems stop it after (2).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

#[derive(Parser)]
#[command(
    name = "smmimo",
    version,
    about = "Deterministic smart massive MIMO network simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boot the node network and dump converged connection maps.
    Init(InitArgs),
    /// Build delay maps, grant serving sets, and form virtual cells.
    Dbm(DbmArgs),
    /// Sweep ergodic capacity over the interference and SNR grid.
    Capacity(CapacityArgs),
    /// Compare centralized and distributed gateway placement.
    Offload(OffloadArgs),
    /// Price metric vectors in service quanta units.
    Squ(SquArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Reproduce the run recorded in a manifest instead of reading --config.
    #[arg(long, value_name = "PATH", conflicts_with = "config")]
    manifest: Option<PathBuf>,
    /// Primary output file (CSV); companion files take suffixed names.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Seed override; a seed is required here or in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InitArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct DbmArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also draw the sweep as a self-contained SVG chart.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Worker threads for the trial loop; never changes the results.
    #[arg(long)]
    threads: Option<usize>,
    /// Antenna masking: `full` keeps every entry, `mu` keeps antennas within
    /// the acceptance ratio of each terminal's strongest.
    #[arg(long, value_enum)]
    mask: Option<MaskArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MaskArg {
    Full,
    Mu,
}

#[derive(Args)]
struct OffloadArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of unit-volume flows.
    #[arg(long)]
    flows: Option<u32>,
    /// Fraction of flows bound for the internet (default: from the config).
    #[arg(long)]
    internet_fraction: Option<f64>,
    /// Report a single placement mode (default: both).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Hierarchy depth: leaves sit this many hops below the root.
    #[arg(long)]
    depth: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Centralized,
    Distributed,
}

#[derive(Args)]
struct SquArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input metric vectors (CSV with header flow_id,data_urgency,
    /// energy_cost,distance_to_destination,signaling_cost,content_quality).
    #[arg(long, value_name = "PATH")]
    vectors: Option<PathBuf>,
    /// Weight on data urgency.
    #[arg(long = "w-urgency")]
    w_urgency: Option<f64>,
    /// Weight on energy cost.
    #[arg(long = "w-energy")]
    w_energy: Option<f64>,
    /// Weight on distance to destination.
    #[arg(long = "w-distance")]
    w_distance: Option<f64>,
    /// Weight on signaling cost.
    #[arg(long = "w-signaling")]
    w_signaling: Option<f64>,
    /// Weight on content quality.
    #[arg(long = "w-quality")]
    w_quality: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Init(a) => run_init(a),
        Cmd::Dbm(a) => run_dbm(a),
        Cmd::Capacity(a) => run_capacity(a),
        Cmd::Offload(a) => run_offload(a),
        Cmd::Squ(a) => run_squ(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// Input resolution
// ---------------------------------------------------------------------------

/// The settled inputs of one run, wherever they came from.
struct Resolved {
    config: ResolvedConfig,
    /// Flag values recorded by the manifest being reproduced; consulted as
    /// defaults for subcommand flags the user did not pass again.
    params: BTreeMap<String, String>,
}

fn resolve_common(common: &CommonArgs, subcommand: &str) -> Result<Resolved, CliError> {
    if let Some(mpath) = &common.manifest {
        let m = manifest::load(mpath)?;
        if m.subcommand != subcommand {
            return Err(CliError::config(format!(
                "manifest {} records a `{}` run, not `{subcommand}`",
                mpath.display(),
                m.subcommand
            )));
        }
        let mut config = m.config;
        if let Some(seed) = common.seed {
            config.seed = seed;
        }
        Ok(Resolved {
            config,
            params: m.params,
        })
    } else {
        let path = common
            .config
            .as_ref()
            .ok_or_else(|| CliError::config("either --config or --manifest is required"))?;
        let file = config::load(path)?;
        let config = config::resolve(file, common.seed)?;
        Ok(Resolved {
            config,
            params: BTreeMap::new(),
        })
    }
}

/// Flag value, falling back to the reproduced manifest, then to a default.
fn param_or<T>(
    flag: Option<T>,
    params: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T: std::str::FromStr,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match params.get(key) {
        Some(raw) => raw.parse().map_err(|_| {
            CliError::config(format!("manifest parameter `{key}` has unreadable value `{raw}`"))
        }),
        None => Ok(default),
    }
}

/// Validate once more and construct the scenario (manifests are re-checked
/// too: they may have been edited by hand).
fn build(config: &ResolvedConfig) -> Result<Scenario, CliError> {
    let sc = config.to_scenario_config();
    let violations = smmimo_core::topology::validate_config(&sc);
    if !violations.is_empty() {
        return Err(CliError::config(violations.join("; ")));
    }
    Ok(build_scenario(&sc))
}

// ---------------------------------------------------------------------------
// init
// ---------------------------------------------------------------------------

fn run_init(a: InitArgs) -> Result<(), CliError> {
    let r = resolve_common(&a.common, "init")?;
    let scenario = build(&r.config)?;
    let mut sim = BootSim::new(scenario.pns.len());
    sim.run(&scenario, &BTreeMap::new())
        .map_err(|e| CliError::runtime(format!("bootstrap failed: {e}")))?;

    let mut rows = Vec::new();
    for map in &sim.maps {
        for (dst, route) in &map.routes {
            rows.push(format!(
                "{},{dst},{},{},{}",
                map.src, route.next_hop, route.cost_m, map.generation
            ));
        }
    }
    let maps_csv = csvout::render("src,dst,next_hop,cost_m,generation", &rows);

    let mut erows = Vec::new();
    for msg in &sim.log {
        let class = match msg.class {
            MessageClass::Class1 => "class1",
            MessageClass::Class2 => "class2",
        };
        let kind = match msg.kind {
            MessageKind::Echo => "echo",
            MessageKind::EchoReply => "echo_reply",
            MessageKind::MapExchange => "map_exchange",
            MessageKind::VirtualMgmt => "virtual_mgmt",
        };
        let dst = match msg.dst {
            Destination::Broadcast => String::from("*"),
            Destination::Pn(d) => d.to_string(),
        };
        erows.push(format!("{},{class},{kind},{},{dst}", msg.sim_time, msg.src));
    }
    let events_csv = csvout::render("sim_time,class,kind,src,dst", &erows);

    let events_path = csvout::sibling(&a.common.out, "events");
    csvout::write_atomic(&a.common.out, &maps_csv)?;
    csvout::write_atomic(&events_path, &events_csv)?;

    let mut m = RunManifest::new("init", &r.config);
    m.artifact(&a.common.out).artifact(&events_path);
    manifest::write(&a.common.out, &m)?;
    eprintln!(
        "init: {} nodes, {} routes, {} control messages, done at t={}",
        scenario.pns.len(),
        rows.len(),
        sim.log.len(),
        sim.sim_time()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// dbm
// ---------------------------------------------------------------------------

fn run_dbm(a: DbmArgs) -> Result<(), CliError> {
    let r = resolve_common(&a.common, "dbm")?;
    let scenario = build(&r.config)?;
    let pipe = run_dbm_pipeline(&scenario);

    let mut rows = Vec::new();
    for (antenna, map) in &pipe.dbms.maps {
        for (ut, e) in &map.entries {
            rows.push(format!(
                "{antenna},{ut},{},{},{}",
                e.delay_distance_m, e.sqw, e.epoch
            ));
        }
    }
    let dbm_csv = csvout::render("antenna_id,ut_id,delay_distance_m,sqw,epoch", &rows);

    // One row per serving grant the cell retained: the terminal, and an
    // antenna of the owning node that serves it.
    let grants: BTreeMap<u32, &[u32]> = pipe
        .serving
        .iter()
        .map(|s| (s.ut_id, s.antenna_ids.as_slice()))
        .collect();
    let mut crows = Vec::new();
    for cell in &pipe.cells {
        for &ut in &cell.ut_ids {
            let mut kept: Vec<u32> = grants
                .get(&ut)
                .copied()
                .unwrap_or(&[])
                .iter()
                .copied()
                .filter(|a| cell.antenna_ids.binary_search(a).is_ok())
                .collect();
            kept.sort_unstable();
            for antenna in kept {
                crows.push(format!("{},{ut},{antenna}", cell.vc_id));
            }
        }
    }
    let cells_csv = csvout::render("vc_id,ut_id,antenna_id", &crows);

    let iso = &pipe.isolation;
    let summary_csv = csvout::render(
        "lambda,serving_slots,leaked_slots,violating_pairs",
        &[format!(
            "{},{},{},{}",
            iso.lambda,
            iso.serving_slots,
            iso.leaked_slots,
            iso.pairs.len()
        )],
    );
    let prows: Vec<String> = iso
        .pairs
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{}",
                p.vc_a, p.vc_b, p.shared_antennas, p.cross_service
            )
        })
        .collect();
    let pairs_csv = csvout::render("vc_a,vc_b,shared_antennas,cross_service", &prows);

    let cells_path = csvout::sibling(&a.common.out, "cells");
    let iso_path = csvout::sibling(&a.common.out, "isolation");
    let pairs_path = csvout::sibling(&a.common.out, "isolation-pairs");
    csvout::write_atomic(&a.common.out, &dbm_csv)?;
    csvout::write_atomic(&cells_path, &cells_csv)?;
    csvout::write_atomic(&iso_path, &summary_csv)?;
    csvout::write_atomic(&pairs_path, &pairs_csv)?;

    let mut m = RunManifest::new("dbm", &r.config);
    m.artifact(&a.common.out)
        .artifact(&cells_path)
        .artifact(&iso_path)
        .artifact(&pairs_path);
    manifest::write(&a.common.out, &m)?;
    eprintln!(
        "dbm: {} map entries, {} cells, leakage {:.4}, {} uncovered terminals",
        rows.len(),
        pipe.cells.len(),
        iso.lambda,
        pipe.uncovered.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// capacity
// ---------------------------------------------------------------------------

fn run_capacity(a: CapacityArgs) -> Result<(), CliError> {
    let r = resolve_common(&a.common, "capacity")?;
    let cfg = &r.config;
    let mask = match a.mask {
        Some(MaskArg::Full) => MaskMode::Full,
        Some(MaskArg::Mu) => MaskMode::Mu,
        None => match r.params.get("mask").map(String::as_str) {
            Some("mu") => MaskMode::Mu,
            Some("full") | None => MaskMode::Full,
            Some(other) => {
                return Err(CliError::config(format!(
                    "manifest parameter `mask` has unreadable value `{other}`"
                )))
            }
        },
    };
    let threads = a.threads.unwrap_or(1);
    if threads == 0 {
        return Err(CliError::config("--threads must be at least 1"));
    }

    // One antenna group versus its share of the terminals.
    if cfg.ut_count < cfg.pn_count {
        return Err(CliError::config(
            "ut_count must be at least pn_count so each node's group serves a terminal",
        ));
    }
    let m_antennas = cfg.antennas_per_pn;
    let k_terminals = cfg.ut_count / cfg.pn_count;
    let model = match cfg.channel_model {
        ChannelModelName::Iid => ChannelModel::Iid,
        ChannelModelName::Pathloss => {
            // The first node's antenna cloud against the first terminals.
            let scenario = build(cfg)?;
            let antenna_ids: Vec<u32> = (0..m_antennas).collect();
            let ut_ids: Vec<u32> = (0..k_terminals).collect();
            ChannelModel::Pathloss(cell_pathloss_variances(&scenario, &antenna_ids, &ut_ids))
        }
    };

    let mut alpha_list = cfg.alpha_list.clone();
    alpha_list.sort_by(f64::total_cmp);
    let mut snr_grid_db = cfg.snr_grid_db.clone();
    snr_grid_db.sort_by(f64::total_cmp);
    let spec = SweepSpec {
        channel: ChannelSpec {
            m: m_antennas,
            k: k_terminals,
            seed: cfg.seed,
            model,
            mu: cfg.mu,
            mask_mode: mask,
            k_interferers: k_terminals,
        },
        snr_grid_db,
        alpha_list,
        trials: cfg.mc_trials,
    };
    let points = parallel::sweep_with_threads(&spec, threads);

    let rows: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{},{},{},{},{}",
                p.snr_db,
                p.alpha,
                p.mu,
                p.mask_mode.as_str(),
                p.capacity_bps_hz,
                p.std_error,
                p.trials,
                p.seed
            )
        })
        .collect();
    let csv = csvout::render(
        "snr_db,alpha,mu,mask_mode,capacity_bps_hz,std_error,trials,seed",
        &rows,
    );
    csvout::write_atomic(&a.common.out, &csv)?;

    let mut m = RunManifest::new("capacity", &r.config);
    m.param("mask", mask.as_str());
    m.artifact(&a.common.out);
    if let Some(svg_path) = &a.svg {
        csvout::write_atomic(svg_path, &svg::capacity_chart(&points))?;
        m.artifact(svg_path);
    }
    manifest::write(&a.common.out, &m)?;
    eprintln!(
        "capacity: {}x{} channel, {} grid cells, {} trials, {} threads",
        spec.channel.m,
        spec.channel.k,
        points.len(),
        spec.trials,
        threads
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// offload
// ---------------------------------------------------------------------------

/// Complete binary tree with the root at depth 0 and gateways placed for the
/// mode; returns the nodes and the leaf ids.
fn binary_hierarchy(depth: u32, mode: PgwMode) -> (BTreeMap<u32, VirtualNode>, Vec<u32>) {
    let mut vns: BTreeMap<u32, VirtualNode> = BTreeMap::new();
    let mut frontier: Vec<u32> = Vec::new();
    let mut next = 0u32;
    for level in 0..=depth {
        let parents = std::mem::take(&mut frontier);
        let count = if level == 0 { 1 } else { parents.len() * 2 };
        for i in 0..count {
            let id = next;
            next += 1;
            let mut vn = VirtualNode::bare(id);
            if level > 0 {
                vn.parent_vn = Some(parents[i / 2]);
            }
            if mode == PgwMode::Distributed || level == 0 {
                assign_roles(&mut vn, &[Role::Pgw])
                    .expect("a gateway is always legal on a hierarchy node");
            }
            vns.insert(id, vn);
            frontier.push(id);
        }
    }
    (vns, frontier)
}

fn run_offload(a: OffloadArgs) -> Result<(), CliError> {
    let r = resolve_common(&a.common, "offload")?;
    let flows = param_or(a.flows, &r.params, "flows", 100u32)?;
    let fraction = param_or(
        a.internet_fraction,
        &r.params,
        "internet_fraction",
        r.config.internet_fraction,
    )?;
    let depth = param_or(a.depth, &r.params, "depth", 2u32)?;
    let mode = match a.mode {
        Some(ModeArg::Centralized) => Some(PgwMode::Centralized),
        Some(ModeArg::Distributed) => Some(PgwMode::Distributed),
        None => match r.params.get("mode").map(String::as_str) {
            Some("centralized") => Some(PgwMode::Centralized),
            Some("distributed") => Some(PgwMode::Distributed),
            Some("both") | None => None,
            Some(other) => {
                return Err(CliError::config(format!(
                    "manifest parameter `mode` has unreadable value `{other}`"
                )))
            }
        },
    };
    if flows == 0 {
        return Err(CliError::config("--flows must be at least 1"));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::config("--internet-fraction must lie in [0, 1]"));
    }
    if depth > 20 {
        return Err(CliError::config("--depth beyond 20 is not supported"));
    }

    let (cent_vns, leaves) = binary_hierarchy(depth, PgwMode::Centralized);
    let (dist_vns, _) = binary_hierarchy(depth, PgwMode::Distributed);

    // Unit-volume flows round-robined over the leaves; the first share goes
    // to the internet, the rest to the next flow's terminal.
    let internet = ((flows as f64 * fraction).round() as u32).min(flows);
    let mut set = Vec::with_capacity(flows as usize);
    let mut ut_to_vn = BTreeMap::new();
    for i in 0..flows {
        ut_to_vn.insert(i, leaves[(i as usize) % leaves.len()]);
        let dst = if i < internet {
            FlowDst::Internet
        } else {
            FlowDst::Ut((i + 1) % flows)
        };
        set.push(TrafficFlow {
            flow_id: i,
            src_ut: i,
            dst,
            volume: 1.0,
        });
    }

    let cent = route_traffic(&set, &cent_vns, &ut_to_vn, PgwMode::Centralized)
        .map_err(|e| CliError::runtime(format!("routing failed: {e}")))?;
    let dist = route_traffic(&set, &dist_vns, &ut_to_vn, PgwMode::Distributed)
        .map_err(|e| CliError::runtime(format!("routing failed: {e}")))?;

    let reduction = |backbone: f64| {
        if cent.backbone_volume > 0.0 {
            100.0 * (cent.backbone_volume - backbone) / cent.backbone_volume
        } else {
            0.0
        }
    };
    let mut rows = Vec::new();
    for (pick, report) in [(PgwMode::Centralized, &cent), (PgwMode::Distributed, &dist)] {
        if mode.map(|m| m == pick).unwrap_or(true) {
            rows.push(format!(
                "{},{},{},{},{}",
                pick.as_str(),
                report.total_volume,
                report.backbone_volume,
                report.edge_volume,
                reduction(report.backbone_volume)
            ));
        }
    }
    let csv = csvout::render(
        "mode,total_volume,backbone_volume,edge_volume,reduction_pct",
        &rows,
    );
    csvout::write_atomic(&a.common.out, &csv)?;

    let mut m = RunManifest::new("offload", &r.config);
    m.param("flows", flows)
        .param("internet_fraction", fraction)
        .param("depth", depth)
        .param(
            "mode",
            mode.map(PgwMode::as_str).unwrap_or("both"),
        );
    m.artifact(&a.common.out);
    manifest::write(&a.common.out, &m)?;
    eprintln!(
        "offload: {flows} flows over {} leaves, internet share {internet}, depth {depth}",
        leaves.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// squ
// ---------------------------------------------------------------------------

const VECTOR_HEADER: &str =
    "flow_id,data_urgency,energy_cost,distance_to_destination,signaling_cost,content_quality";

fn parse_vectors(path: &Path) -> Result<Vec<(u32, SquVector)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read vectors {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == VECTOR_HEADER => {}
        _ => {
            return Err(CliError::config(format!(
                "vectors file must start with the header `{VECTOR_HEADER}`"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::config(format!(
                "vectors line {lineno}: expected 6 fields, found {}",
                fields.len()
            )));
        }
        let flow_id: u32 = fields[0].trim().parse().map_err(|_| {
            CliError::config(format!("vectors line {lineno}: bad flow_id `{}`", fields[0]))
        })?;
        let mut nums = [0.0f64; 5];
        for (slot, raw) in nums.iter_mut().zip(&fields[1..]) {
            *slot = raw.trim().parse().map_err(|_| {
                CliError::config(format!("vectors line {lineno}: bad number `{raw}`"))
            })?;
        }
        rows.push((
            flow_id,
            SquVector {
                data_urgency: nums[0],
                energy_cost: nums[1],
                distance_to_destination: nums[2],
                signaling_cost: nums[3],
                content_quality: nums[4],
            },
        ));
    }
    Ok(rows)
}

fn run_squ(a: SquArgs) -> Result<(), CliError> {
    let r = resolve_common(&a.common, "squ")?;
    let vectors_path = match (&a.vectors, r.params.get("vectors")) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::config("--vectors is required")),
    };
    let weights = SquWeights {
        data_urgency: param_or(a.w_urgency, &r.params, "w_urgency", 1.0)?,
        energy_cost: param_or(a.w_energy, &r.params, "w_energy", 1.0)?,
        distance_to_destination: param_or(a.w_distance, &r.params, "w_distance", 1.0)?,
        signaling_cost: param_or(a.w_signaling, &r.params, "w_signaling", 1.0)?,
        content_quality: param_or(a.w_quality, &r.params, "w_quality", 1.0)?,
    };

    let vectors = parse_vectors(&vectors_path)?;
    let rows: Vec<String> = vectors
        .iter()
        .map(|(flow_id, v)| format!("{flow_id},{}", compute_squ(v, &weights)))
        .collect();
    let csv = csvout::render("flow_id,cost_squ", &rows);
    csvout::write_atomic(&a.common.out, &csv)?;

    let mut m = RunManifest::new("squ", &r.config);
    m.param("vectors", vectors_path.display().to_string())
        .param("w_urgency", weights.data_urgency)
        .param("w_energy", weights.energy_cost)
        .param("w_distance", weights.distance_to_destination)
        .param("w_signaling", weights.signaling_cost)
        .param("w_quality", weights.content_quality);
    m.artifact(&a.common.out);
    manifest::write(&a.common.out, &m)?;
    eprintln!("squ: priced {} flows", rows.len());
    Ok(())
}
