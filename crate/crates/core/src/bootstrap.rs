//! Self-assembly of the backbone: power-on self test, staged boot, echo
//! discovery, and convergence of per-node routing tables.
//!
//! Every node boots through the same ladder of stages and may only take part
//! in management traffic once it is linked into the backbone.  Routing state
//! is a per-source table mapping each reachable destination to a next hop and
//! a path cost in meters.  Tables converge by synchronous rounds of
//! neighbor-table exchange; a network of `n` nodes must reach a fixpoint in
//! at most `n` rounds or something is structurally wrong (asymmetric or
//! negative costs) and the exchange reports an error instead of spinning.
//!
//! Float discipline: path costs are always accumulated destination-first,
//! `cost(v, d) = edge(v, next) + cost(next, d)`, so a converged table
//! satisfies the triangle identity *exactly* (bit-for-bit), and independent
//! solvers that accumulate the same way produce identical values.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::topology::{PhysicalNode, Scenario};

// ---------------------------------------------------------------------------
// Boot stages
// ---------------------------------------------------------------------------

/// Boot ladder of a physical node, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BootStage {
    PowerOn,
    PostDone,
    NosBooted,
    BasicLinked,
    VirtualReady,
}

/// Events that move a node one rung up the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootEvent {
    PostComplete,
    NosBoot,
    LinksEstablished,
    VirtualMgmtReady,
}

/// Why a stage transition or message was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectCause {
    /// Event arrived at a stage that does not accept it.
    Event(BootEvent),
    /// A management-class message reached a node that is not linked yet.
    MessageClass(MessageClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub stage: BootStage,
    pub cause: RejectCause,
}

/// Per-node boot ledger: current stage plus every refused transition.
#[derive(Debug, Clone, PartialEq)]
pub struct PnBoot {
    pub pn_id: u32,
    pub stage: BootStage,
    pub rejections: Vec<Rejection>,
}

impl PnBoot {
    pub fn new(pn_id: u32) -> Self {
        PnBoot {
            pn_id,
            stage: BootStage::PowerOn,
            rejections: Vec::new(),
        }
    }
}

/// Advance one stage if `event` is the one the current stage expects;
/// otherwise record a rejection and leave the stage unchanged.  Returns
/// whether the node advanced.  Stages never move backwards.
pub fn advance_stage(boot: &mut PnBoot, event: BootEvent) -> bool {
    use BootEvent::*;
    use BootStage::*;
    let next = match (boot.stage, event) {
        (PowerOn, PostComplete) => Some(PostDone),
        (PostDone, NosBoot) => Some(NosBooted),
        (NosBooted, LinksEstablished) => Some(BasicLinked),
        (BasicLinked, VirtualMgmtReady) => Some(VirtualReady),
        _ => None,
    };
    match next {
        Some(stage) => {
            boot.stage = stage;
            true
        }
        None => {
            boot.rejections.push(Rejection {
                stage: boot.stage,
                cause: RejectCause::Event(event),
            });
            false
        }
    }
}

// ---------------------------------------------------------------------------
// Power-on self test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostReport {
    pub pn_id: u32,
    pub passed_blocks: Vec<u32>,
    pub failed_blocks: Vec<u32>,
    /// Radios on passing blocks; failed blocks contribute nothing.
    pub usable_antennas: u32,
    /// Lowest-id passing block coordinates the node.
    pub master_block: u32,
}

/// Run the self test with an injected set of faulty blocks.
pub fn run_post(pn: &PhysicalNode, fault_blocks: &BTreeSet<u32>) -> Result<PostReport, BootError> {
    let mut passed = Vec::new();
    let mut failed = Vec::new();
    let mut usable = 0;
    for block in &pn.blocks {
        if fault_blocks.contains(&block.block_id) {
            failed.push(block.block_id);
        } else {
            passed.push(block.block_id);
            usable += block.radio_count;
        }
    }
    let master = *passed
        .first()
        .ok_or(BootError::AllBlocksFailed { pn_id: pn.pn_id })?;
    Ok(PostReport {
        pn_id: pn.pn_id,
        passed_blocks: passed,
        failed_blocks: failed,
        usable_antennas: usable,
        master_block: master,
    })
}

// ---------------------------------------------------------------------------
// Control messages
// ---------------------------------------------------------------------------

/// Class1 carries link-level control; Class2 carries management traffic and
/// exists only between nodes that are at least `BasicLinked`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageClass {
    Class1,
    Class2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Echo,
    EchoReply,
    MapExchange,
    VirtualMgmt,
}

impl MessageKind {
    pub fn class(self) -> MessageClass {
        match self {
            MessageKind::Echo | MessageKind::EchoReply | MessageKind::MapExchange => {
                MessageClass::Class1
            }
            MessageKind::VirtualMgmt => MessageClass::Class2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Broadcast,
    Pn(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlMessage {
    pub sim_time: u64,
    pub class: MessageClass,
    pub kind: MessageKind,
    pub src: u32,
    pub dst: Destination,
    pub payload_bytes: u32,
}

// ---------------------------------------------------------------------------
// Neighbor graph and discovery
// ---------------------------------------------------------------------------

/// Symmetric weighted adjacency over PN ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    adj: Vec<Vec<(u32, f64)>>,
}

impl NeighborGraph {
    pub fn new(node_count: usize) -> Self {
        NeighborGraph {
            adj: vec![Vec::new(); node_count],
        }
    }

    /// All PN pairs within radio range become neighbors at Euclidean cost.
    pub fn from_scenario(s: &Scenario) -> Self {
        let mut g = NeighborGraph::new(s.pns.len());
        for a in &s.pns {
            for b in &s.pns {
                if b.pn_id <= a.pn_id {
                    continue;
                }
                let d = a.position.distance_to(b.position);
                if d <= s.config.radio_range_m {
                    g.add_edge(a.pn_id, b.pn_id, d);
                }
            }
        }
        g
    }

    /// Insert an undirected edge.  Keeps each adjacency list sorted by id.
    pub fn add_edge(&mut self, a: u32, b: u32, cost: f64) {
        self.adj[a as usize].push((b, cost));
        self.adj[b as usize].push((a, cost));
        self.adj[a as usize].sort_by_key(|&(id, _)| id);
        self.adj[b as usize].sort_by_key(|&(id, _)| id);
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: u32) -> &[(u32, f64)] {
        &self.adj[node as usize]
    }

    /// Same node set with every edge touching `dead` removed.
    pub fn without_node(&self, dead: u32) -> Self {
        let mut adj = self.adj.clone();
        adj[dead as usize].clear();
        for list in adj.iter_mut() {
            list.retain(|&(id, _)| id != dead);
        }
        NeighborGraph { adj }
    }
}

/// Echo-based discovery: every PN within radio range answers, sorted by
/// (cost, id).  A co-located PN is a neighbor at cost zero.
pub fn discover_neighbors(s: &Scenario, pn_id: u32) -> Vec<(u32, f64)> {
    let me = &s.pns[pn_id as usize];
    let mut found: Vec<(u32, f64)> = s
        .pns
        .iter()
        .filter(|other| other.pn_id != pn_id)
        .filter_map(|other| {
            let d = me.position.distance_to(other.position);
            (d <= s.config.radio_range_m).then_some((other.pn_id, d))
        })
        .collect();
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    found
}

// ---------------------------------------------------------------------------
// Connection maps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteEntry {
    pub next_hop: u32,
    pub cost_m: f64,
}

/// One node's routing table: destination -> (next hop, cost), plus a
/// generation counter bumped once per exchange round.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMap {
    pub src: u32,
    pub routes: BTreeMap<u32, RouteEntry>,
    pub generation: u64,
}

impl ConnectionMap {
    pub fn empty(src: u32) -> Self {
        ConnectionMap {
            src,
            routes: BTreeMap::new(),
            generation: 0,
        }
    }
}

/// What a node knows before any exchange: its direct neighbors.
pub fn local_connection_map(graph: &NeighborGraph, src: u32) -> ConnectionMap {
    let mut routes = BTreeMap::new();
    for &(n, cost) in graph.neighbors(src) {
        routes.insert(
            n,
            RouteEntry {
                next_hop: n,
                cost_m: cost,
            },
        );
    }
    ConnectionMap {
        src,
        routes,
        generation: 0,
    }
}

struct Frontier {
    cost: f64,
    node: u32,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    // Reversed so the std max-heap pops the cheapest frontier node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Exact cost from every node *to* `dest`, accumulated destination-first.
fn costs_to(graph: &NeighborGraph, dest: u32) -> Vec<Option<f64>> {
    let n = graph.node_count();
    let mut cost: Vec<Option<f64>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    cost[dest as usize] = Some(0.0);
    heap.push(Frontier {
        cost: 0.0,
        node: dest,
    });
    while let Some(Frontier { cost: c, node }) = heap.pop() {
        if settled[node as usize] {
            continue;
        }
        settled[node as usize] = true;
        for &(v, w) in graph.neighbors(node) {
            if settled[v as usize] {
                continue;
            }
            // Destination-first accumulation: edge + remaining cost.
            let cand = w + c;
            if cost[v as usize].is_none_or(|best| cand < best) {
                cost[v as usize] = Some(cand);
                heap.push(Frontier {
                    cost: cand,
                    node: v,
                });
            }
        }
    }
    cost
}

/// Global shortest-path view from one source, with deterministic tie-breaks:
/// among equal-cost routes the smaller next-hop id wins, which (applied at
/// every hop) also selects the lexicographically smallest id sequence.
pub fn build_connection_map(graph: &NeighborGraph, src: u32) -> ConnectionMap {
    let mut map = ConnectionMap::empty(src);
    for dest in 0..graph.node_count() as u32 {
        if dest == src {
            continue;
        }
        let cost = costs_to(graph, dest);
        if let Some(c) = cost[src as usize] {
            let next = next_hop_toward(graph, src, &cost, c)
                .expect("finite cost implies an achieving neighbor");
            map.routes.insert(
                dest,
                RouteEntry {
                    next_hop: next,
                    cost_m: c,
                },
            );
        }
    }
    map
}

/// All-pairs variant of [`build_connection_map`]; one Dijkstra per
/// destination instead of per (source, destination) pair.
pub fn all_connection_maps(graph: &NeighborGraph) -> Vec<ConnectionMap> {
    let n = graph.node_count();
    let mut maps: Vec<ConnectionMap> = (0..n as u32).map(ConnectionMap::empty).collect();
    for dest in 0..n as u32 {
        let cost = costs_to(graph, dest);
        for src in 0..n as u32 {
            if src == dest {
                continue;
            }
            if let Some(c) = cost[src as usize] {
                let next = next_hop_toward(graph, src, &cost, c)
                    .expect("finite cost implies an achieving neighbor");
                maps[src as usize].routes.insert(
                    dest,
                    RouteEntry {
                        next_hop: next,
                        cost_m: c,
                    },
                );
            }
        }
    }
    maps
}

/// Smallest neighbor id whose edge achieves the known cost exactly.
fn next_hop_toward(
    graph: &NeighborGraph,
    src: u32,
    cost_to_dest: &[Option<f64>],
    src_cost: f64,
) -> Option<u32> {
    graph
        .neighbors(src)
        .iter()
        .filter_map(|&(u, w)| {
            let through = cost_to_dest[u as usize]?;
            (w + through == src_cost).then_some(u)
        })
        .next() // adjacency is sorted by id, so the first match is minimal
}

// ---------------------------------------------------------------------------
// Synchronous table exchange
// ---------------------------------------------------------------------------

/// One synchronous round: every node rebuilds its table from its neighbors'
/// previous tables plus its direct edges.  Returns the new tables and whether
/// anything changed.
pub fn exchange_round(graph: &NeighborGraph, maps: &[ConnectionMap]) -> (Vec<ConnectionMap>, bool) {
    let mut changed = false;
    let next: Vec<ConnectionMap> = maps
        .iter()
        .map(|old| {
            let src = old.src;
            let mut routes: BTreeMap<u32, RouteEntry> = BTreeMap::new();
            for &(n, w) in graph.neighbors(src) {
                // The neighbor itself is reachable over the direct edge ...
                consider(&mut routes, n, RouteEntry { next_hop: n, cost_m: w });
                // ... and everything in the neighbor's previous table is
                // reachable through it, at edge + remaining cost.
                for (&dest, entry) in &maps[n as usize].routes {
                    if dest == src {
                        continue;
                    }
                    consider(
                        &mut routes,
                        dest,
                        RouteEntry {
                            next_hop: n,
                            cost_m: w + entry.cost_m,
                        },
                    );
                }
            }
            if routes != old.routes {
                changed = true;
            }
            ConnectionMap {
                src,
                routes,
                generation: old.generation + 1,
            }
        })
        .collect();
    (next, changed)
}

fn consider(routes: &mut BTreeMap<u32, RouteEntry>, dest: u32, cand: RouteEntry) {
    match routes.get_mut(&dest) {
        None => {
            routes.insert(dest, cand);
        }
        Some(best) => {
            if cand.cost_m < best.cost_m
                || (cand.cost_m == best.cost_m && cand.next_hop < best.next_hop)
            {
                *best = cand;
            }
        }
    }
}

/// Run rounds until a round makes no change.  A healthy network converges in
/// at most `node_count` rounds; exceeding that returns [`BootError::NonConvergence`],
/// which indicates a cost-consistency bug (e.g. negative or asymmetric edges).
pub fn exchange_neighbor_maps(
    graph: &NeighborGraph,
    maps: Vec<ConnectionMap>,
) -> Result<Vec<ConnectionMap>, BootError> {
    assert_eq!(maps.len(), graph.node_count(), "one map per node expected");
    let limit = graph.node_count() as u32;
    let mut maps = maps;
    for _round in 1..=limit {
        let (next, changed) = exchange_round(graph, &maps);
        maps = next;
        if !changed {
            return Ok(maps);
        }
    }
    Err(BootError::NonConvergence { rounds: limit })
}

/// Recovery from a node failure: drop the dead node and rebuild the remaining
/// tables from scratch (local discovery + exchange).  The result is identical
/// to bootstrapping the surviving network directly.
pub fn handle_failure(
    graph: &NeighborGraph,
    dead_pn: u32,
) -> Result<Vec<ConnectionMap>, BootError> {
    let survivors = graph.without_node(dead_pn);
    let locals = (0..survivors.node_count() as u32)
        .map(|src| local_connection_map(&survivors, src))
        .collect();
    exchange_neighbor_maps(&survivors, locals)
}

// ---------------------------------------------------------------------------
// Boot simulation
// ---------------------------------------------------------------------------

const ECHO_BYTES: u32 = 16;
const ECHO_REPLY_BYTES: u32 = 16;
const MAP_ENTRY_BYTES: u32 = 12;
const MAP_HEADER_BYTES: u32 = 16;
const VIRTUAL_MGMT_BYTES: u32 = 64;

/// Drives the whole network through the boot ladder on one logical timeline,
/// logging every control message.  Nodes whose self test fails completely
/// stay at `PowerOn` and take no further part.
#[derive(Debug)]
pub struct BootSim {
    pub boots: Vec<PnBoot>,
    pub post_reports: Vec<Option<PostReport>>,
    pub maps: Vec<ConnectionMap>,
    pub log: Vec<ControlMessage>,
    time: u64,
}

impl BootSim {
    pub fn new(pn_count: usize) -> Self {
        BootSim {
            boots: (0..pn_count as u32).map(PnBoot::new).collect(),
            post_reports: vec![None; pn_count],
            maps: (0..pn_count as u32).map(ConnectionMap::empty).collect(),
            log: Vec::new(),
            time: 0,
        }
    }

    pub fn sim_time(&self) -> u64 {
        self.time
    }

    /// Send one message.  Class2 requires the *sender* to be linked; a
    /// unicast Class2 additionally requires the receiver to be linked.
    /// Refused messages are recorded on the offending node and not logged.
    pub fn send_message(&mut self, src: u32, dst: Destination, kind: MessageKind) -> bool {
        let class = kind.class();
        if class == MessageClass::Class2 && self.boots[src as usize].stage < BootStage::BasicLinked
        {
            let stage = self.boots[src as usize].stage;
            self.boots[src as usize].rejections.push(Rejection {
                stage,
                cause: RejectCause::MessageClass(class),
            });
            return false;
        }
        if let Destination::Pn(d) = dst {
            if class == MessageClass::Class2
                && self.boots[d as usize].stage < BootStage::BasicLinked
            {
                let stage = self.boots[d as usize].stage;
                self.boots[d as usize].rejections.push(Rejection {
                    stage,
                    cause: RejectCause::MessageClass(class),
                });
                return false;
            }
        }
        let payload_bytes = match kind {
            MessageKind::Echo => ECHO_BYTES,
            MessageKind::EchoReply => ECHO_REPLY_BYTES,
            MessageKind::MapExchange => {
                MAP_HEADER_BYTES + MAP_ENTRY_BYTES * self.maps[src as usize].routes.len() as u32
            }
            MessageKind::VirtualMgmt => VIRTUAL_MGMT_BYTES,
        };
        self.log.push(ControlMessage {
            sim_time: self.time,
            class,
            kind,
            src,
            dst,
            payload_bytes,
        });
        true
    }

    /// Boot the whole network: self test, NOS boot, echo discovery, table
    /// exchange, then management readiness.  `faults` injects bad blocks per
    /// PN id.  Returns an error only if the exchange fails to converge.
    pub fn run(
        &mut self,
        scenario: &Scenario,
        faults: &BTreeMap<u32, BTreeSet<u32>>,
    ) -> Result<(), BootError> {
        let n = scenario.pns.len();
        assert_eq!(self.boots.len(), n, "sim sized for a different scenario");
        let empty = BTreeSet::new();

        // Stage 1: power-on self test.
        for pn in &scenario.pns {
            let fault_set = faults.get(&pn.pn_id).unwrap_or(&empty);
            match run_post(pn, fault_set) {
                Ok(report) => {
                    self.post_reports[pn.pn_id as usize] = Some(report);
                    advance_stage(&mut self.boots[pn.pn_id as usize], BootEvent::PostComplete);
                }
                Err(_) => {
                    // Dead node: stays at PowerOn, excluded from the backbone.
                }
            }
        }
        self.time += 1;

        // Stage 2: network operating system comes up on surviving nodes.
        for id in self.alive() {
            advance_stage(&mut self.boots[id as usize], BootEvent::NosBoot);
        }
        self.time += 1;

        // Echo discovery among booted nodes only.
        let mut graph = NeighborGraph::from_scenario(scenario);
        for id in 0..n as u32 {
            if self.boots[id as usize].stage < BootStage::NosBooted {
                graph = graph.without_node(id);
            }
        }
        for id in self.alive() {
            self.send_message(id, Destination::Broadcast, MessageKind::Echo);
        }
        self.time += 1;
        for id in self.alive() {
            for &(neighbor, _) in graph.neighbors(id) {
                self.send_message(neighbor, Destination::Pn(id), MessageKind::EchoReply);
            }
        }
        self.time += 1;

        // Stage 3 entry: local tables, then synchronous exchange rounds.
        self.maps = (0..n as u32)
            .map(|src| local_connection_map(&graph, src))
            .collect();
        let limit = n as u32;
        let mut converged = false;
        for _round in 1..=limit {
            for id in self.alive() {
                for &(neighbor, _) in graph.neighbors(id) {
                    self.send_message(id, Destination::Pn(neighbor), MessageKind::MapExchange);
                }
            }
            let (next, changed) = exchange_round(&graph, &self.maps);
            self.maps = next;
            self.time += 1;
            if !changed {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(BootError::NonConvergence { rounds: limit });
        }
        for id in self.alive() {
            advance_stage(&mut self.boots[id as usize], BootEvent::LinksEstablished);
        }
        self.time += 1;

        // Stage 4: the lowest linked node announces management readiness.
        if let Some(head) = self.alive().first().copied() {
            self.send_message(head, Destination::Broadcast, MessageKind::VirtualMgmt);
            for id in self.alive() {
                advance_stage(&mut self.boots[id as usize], BootEvent::VirtualMgmtReady);
            }
            self.time += 1;
        }
        Ok(())
    }

    fn alive(&self) -> Vec<u32> {
        self.boots
            .iter()
            .filter(|b| b.stage > BootStage::PowerOn)
            .map(|b| b.pn_id)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootError {
    /// Self test found no working block on the node.
    AllBlocksFailed { pn_id: u32 },
    /// Table exchange still changing after the round limit.
    NonConvergence { rounds: u32 },
}

impl fmt::Display for BootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BootError::AllBlocksFailed { pn_id } => {
                write!(f, "self test failed on every block of PN {pn_id}")
            }
            BootError::NonConvergence { rounds } => {
                write!(f, "table exchange did not converge within {rounds} rounds")
            }
        }
    }
}

impl core::error::Error for BootError {}
