//! Virtual nodes: hardware pooled across physical nodes, presented to the
//! network as one logical unit.
//!
//! A virtual node is formed by taking antennas, compute, and storage out of
//! a shared pool (possibly spanning several physical nodes), with a strict
//! bijection between virtual resource indices and the physical units backing
//! them — the virtual management unit's mapping.  Formed nodes take on
//! network roles, hang together in a parent hierarchy, and carry traffic:
//! flows climb toward the nearest gateway for internet exits and meet at the
//! lowest common ancestor for internal delivery, so pushing gateways toward
//! the edge provably never increases backbone load.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::bootstrap::PostReport;
use crate::dbm::VirtualCell;
use crate::topology::{Scenario, COMPUTE_UNITS_PER_BLOCK, STORAGE_UNITS_PER_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ResourceClass {
    Antenna,
    Compute,
    Storage,
}

impl ResourceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ResourceClass::Antenna => "antenna",
            ResourceClass::Compute => "compute",
            ResourceClass::Storage => "storage",
        }
    }
}

/// How much hardware a virtual node asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ResourceRequest {
    pub antennas: u32,
    pub compute_units: u32,
    pub storage_units: u32,
}

/// A physical unit: some PN's antenna (global id), or a compute/storage unit
/// addressed as `block_id * units_per_block + slot` within its PN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhysicalResourceId {
    pub pn_id: u32,
    pub class: ResourceClass,
    pub id: u32,
}

/// A virtual unit: dense per-class index inside one virtual node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VirtualResourceId {
    pub class: ResourceClass,
    pub index: u32,
}

/// Free hardware, tracked per PN so allocations can span nodes but stay
/// attributable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResourcePool {
    free: BTreeMap<(u32, ResourceClass), BTreeSet<u32>>,
    /// Global antenna id -> (owning PN, owning block).
    antenna_home: BTreeMap<u32, (u32, u32)>,
}

impl ResourcePool {
    /// Pool every block of every PN (nothing has failed).
    pub fn from_scenario(s: &Scenario) -> Self {
        let all: Vec<PostReport> = s
            .pns
            .iter()
            .map(|pn| PostReport {
                pn_id: pn.pn_id,
                passed_blocks: pn.blocks.iter().map(|b| b.block_id).collect(),
                failed_blocks: Vec::new(),
                usable_antennas: pn.antenna_ids.len() as u32,
                master_block: 0,
            })
            .collect();
        Self::from_post(s, &all)
    }

    /// Pool only hardware that survived self test: antennas, compute, and
    /// storage on failed blocks never enter the pool.
    pub fn from_post(s: &Scenario, reports: &[PostReport]) -> Self {
        let mut pool = ResourcePool::default();
        for report in reports {
            let pn = &s.pns[report.pn_id as usize];
            let passing: BTreeSet<u32> = report.passed_blocks.iter().copied().collect();
            for (local, &antenna_id) in pn.antenna_ids.iter().enumerate() {
                let block = pn
                    .block_of_radio(local as u32)
                    .expect("every mounted antenna belongs to a block");
                if passing.contains(&block) {
                    pool.free
                        .entry((pn.pn_id, ResourceClass::Antenna))
                        .or_default()
                        .insert(antenna_id);
                    pool.antenna_home.insert(antenna_id, (pn.pn_id, block));
                }
            }
            for &block in &passing {
                for slot in 0..COMPUTE_UNITS_PER_BLOCK {
                    pool.free
                        .entry((pn.pn_id, ResourceClass::Compute))
                        .or_default()
                        .insert(block * COMPUTE_UNITS_PER_BLOCK + slot);
                }
                for slot in 0..STORAGE_UNITS_PER_BLOCK {
                    pool.free
                        .entry((pn.pn_id, ResourceClass::Storage))
                        .or_default()
                        .insert(block * STORAGE_UNITS_PER_BLOCK + slot);
                }
            }
        }
        pool
    }

    pub fn total_free(&self, class: ResourceClass) -> u32 {
        self.free
            .iter()
            .filter(|((_, c), _)| *c == class)
            .map(|(_, ids)| ids.len() as u32)
            .sum()
    }

    /// Which block a pooled or allocated antenna lives on.
    pub fn antenna_block(&self, antenna_id: u32) -> Option<u32> {
        self.antenna_home.get(&antenna_id).map(|&(_, b)| b)
    }

    /// Take the `count` lowest-addressed free units of a class, scanning PNs
    /// in ascending id order.  Caller must have checked availability.
    fn take(&mut self, class: ResourceClass, count: u32) -> Vec<(u32, u32)> {
        let mut taken = Vec::with_capacity(count as usize);
        for ((pn_id, c), ids) in self.free.iter_mut() {
            if *c != class {
                continue;
            }
            while taken.len() < count as usize {
                match ids.pop_first() {
                    Some(id) => taken.push((*pn_id, id)),
                    None => break,
                }
            }
            if taken.len() == count as usize {
                break;
            }
        }
        taken
    }

    fn put_back(&mut self, pn_id: u32, class: ResourceClass, id: u32) {
        self.free.entry((pn_id, class)).or_default().insert(id);
    }
}

/// Network functions a virtual node can take on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    /// Base station; needs at least one antenna.
    Vbs,
    /// Switching center.
    Vmsc,
    /// Packet gateway: where traffic exits to the internet.
    Pgw,
    /// Serving gateway.
    Sgw,
    /// Mobility management.
    Mme,
    /// Subscriber-record cache.
    HssCache,
}

/// One PN's contribution to a virtual node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VnMember {
    pub pn_id: u32,
    /// Blocks touched by any resource taken from this PN, ascending.
    pub block_ids: Vec<u32>,
    /// Antennas taken from this PN, ascending.
    pub antenna_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualNode {
    pub vn_id: u32,
    pub members: Vec<VnMember>,
    pub compute_units: u32,
    pub storage_units: u32,
    pub roles: BTreeSet<Role>,
    /// Hierarchy edge toward the core; `None` marks a root.
    pub parent_vn: Option<u32>,
}

impl VirtualNode {
    /// A node with no resources at all; useful as a pure hierarchy vertex.
    pub fn bare(vn_id: u32) -> Self {
        VirtualNode {
            vn_id,
            members: Vec::new(),
            compute_units: 0,
            storage_units: 0,
            roles: BTreeSet::new(),
            parent_vn: None,
        }
    }

    pub fn antenna_count(&self) -> u32 {
        self.members.iter().map(|m| m.antenna_ids.len() as u32).sum()
    }

    pub fn owns_antenna(&self, antenna_id: u32) -> bool {
        self.members
            .iter()
            .any(|m| m.antenna_ids.binary_search(&antenna_id).is_ok())
    }
}

/// The management unit's two-way ledger between virtual indices and the
/// physical units backing them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmuMapping {
    pub vn_id: u32,
    virtual_to_physical: BTreeMap<VirtualResourceId, PhysicalResourceId>,
    physical_to_virtual: BTreeMap<PhysicalResourceId, VirtualResourceId>,
}

impl VmuMapping {
    pub fn map_virtual_to_physical(
        &self,
        v: VirtualResourceId,
    ) -> Result<PhysicalResourceId, VnError> {
        self.virtual_to_physical
            .get(&v)
            .copied()
            .ok_or(VnError::UnknownResource)
    }

    pub fn map_physical_to_virtual(
        &self,
        p: PhysicalResourceId,
    ) -> Result<VirtualResourceId, VnError> {
        self.physical_to_virtual
            .get(&p)
            .copied()
            .ok_or(VnError::UnknownResource)
    }

    pub fn len(&self) -> usize {
        self.virtual_to_physical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.virtual_to_physical.is_empty()
    }

    pub fn physical_units(&self) -> impl Iterator<Item = &PhysicalResourceId> {
        self.physical_to_virtual.keys()
    }
}

/// Carve a virtual node out of the pool.
///
/// All-or-nothing: if any class falls short the pool is left untouched and
/// the first shortage is reported.  Allocation is greedy over ascending
/// (PN id, unit id), so identical requests against identical pools always
/// produce identical nodes.
pub fn form_virtual_node(
    pool: &mut ResourcePool,
    vn_id: u32,
    request: ResourceRequest,
) -> Result<(VirtualNode, VmuMapping), VnError> {
    let need = [
        (ResourceClass::Antenna, request.antennas),
        (ResourceClass::Compute, request.compute_units),
        (ResourceClass::Storage, request.storage_units),
    ];
    for &(class, requested) in &need {
        let available = pool.total_free(class);
        if available < requested {
            return Err(VnError::InsufficientResources {
                class,
                requested,
                available,
            });
        }
    }

    let mut virtual_to_physical = BTreeMap::new();
    let mut physical_to_virtual = BTreeMap::new();
    let mut per_pn: BTreeMap<u32, (BTreeSet<u32>, Vec<u32>)> = BTreeMap::new();

    for &(class, requested) in &need {
        for (index, (pn_id, id)) in pool.take(class, requested).into_iter().enumerate() {
            let v = VirtualResourceId {
                class,
                index: index as u32,
            };
            let p = PhysicalResourceId { pn_id, class, id };
            virtual_to_physical.insert(v, p);
            physical_to_virtual.insert(p, v);

            let entry = per_pn.entry(pn_id).or_default();
            let block = match class {
                ResourceClass::Antenna => {
                    entry.1.push(id);
                    pool.antenna_block(id).expect("pooled antenna has a home")
                }
                ResourceClass::Compute => id / COMPUTE_UNITS_PER_BLOCK,
                ResourceClass::Storage => id / STORAGE_UNITS_PER_BLOCK,
            };
            entry.0.insert(block);
        }
    }

    let members = per_pn
        .into_iter()
        .map(|(pn_id, (blocks, antennas))| VnMember {
            pn_id,
            block_ids: blocks.into_iter().collect(),
            antenna_ids: antennas, // taken in ascending order per PN already
        })
        .collect();

    Ok((
        VirtualNode {
            vn_id,
            members,
            compute_units: request.compute_units,
            storage_units: request.storage_units,
            roles: BTreeSet::new(),
            parent_vn: None,
        },
        VmuMapping {
            vn_id,
            virtual_to_physical,
            physical_to_virtual,
        },
    ))
}

/// Return every unit of a dissolved node to the pool.
pub fn release_virtual_node(pool: &mut ResourcePool, mapping: &VmuMapping) {
    for p in mapping.physical_units() {
        pool.put_back(p.pn_id, p.class, p.id);
    }
}

/// Grant roles, enforcing structural requirements (a base station without
/// antennas cannot exist).  Granting an already-held role is a no-op.
pub fn assign_roles(vn: &mut VirtualNode, roles: &[Role]) -> Result<(), VnError> {
    for &role in roles {
        if role == Role::Vbs && vn.antenna_count() == 0 {
            return Err(VnError::RoleConstraintViolated {
                vn_id: vn.vn_id,
                role,
            });
        }
        vn.roles.insert(role);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkKind {
    /// Backbone hop between two virtual nodes.
    PointToPoint {
        vn_a: u32,
        vn_b: u32,
        antennas_a: Vec<u32>,
        antennas_b: Vec<u32>,
        /// Paired-antenna capacity: the narrower end limits the link.
        capacity_units: u32,
    },
    /// One node serving many terminals of its own cell.
    PointToMultipoint {
        vn_id: u32,
        antennas: Vec<u32>,
        ut_ids: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub link_id: u32,
    pub kind: LinkKind,
}

/// Tracks which antennas are committed to links; an antenna carries at most
/// one link at a time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinkRegistry {
    pub links: BTreeMap<u32, Link>,
    busy: BTreeSet<u32>,
    next_id: u32,
}

impl LinkRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_busy(&self, antenna_id: u32) -> bool {
        self.busy.contains(&antenna_id)
    }

    fn claim(&mut self, vn: &VirtualNode, antennas: &[u32]) -> Result<(), VnError> {
        for &a in antennas {
            if !vn.owns_antenna(a) {
                return Err(VnError::UnknownResource);
            }
            if self.busy.contains(&a) {
                return Err(VnError::AntennaBusy { antenna_id: a });
            }
        }
        self.busy.extend(antennas.iter().copied());
        Ok(())
    }

    /// Dedicate antennas on both ends to a backbone link.  Fails without
    /// side effects if the nodes coincide, an antenna is foreign, or an
    /// antenna is already committed.
    pub fn create_p2p(
        &mut self,
        a: &VirtualNode,
        antennas_a: &[u32],
        b: &VirtualNode,
        antennas_b: &[u32],
    ) -> Result<u32, VnError> {
        if a.vn_id == b.vn_id {
            return Err(VnError::SelfLink { vn_id: a.vn_id });
        }
        // Validate both ends before claiming either, to stay atomic.
        let mut seen = BTreeSet::new();
        for (vn, ants) in [(a, antennas_a), (b, antennas_b)] {
            if ants.is_empty() {
                return Err(VnError::InsufficientResources {
                    class: ResourceClass::Antenna,
                    requested: 1,
                    available: 0,
                });
            }
            for &ant in ants {
                if !vn.owns_antenna(ant) {
                    return Err(VnError::UnknownResource);
                }
                if self.busy.contains(&ant) || !seen.insert(ant) {
                    return Err(VnError::AntennaBusy { antenna_id: ant });
                }
            }
        }
        self.claim(a, antennas_a)?;
        self.claim(b, antennas_b)?;
        let link_id = self.next_id;
        self.next_id += 1;
        self.links.insert(
            link_id,
            Link {
                link_id,
                kind: LinkKind::PointToPoint {
                    vn_a: a.vn_id,
                    vn_b: b.vn_id,
                    antennas_a: antennas_a.to_vec(),
                    antennas_b: antennas_b.to_vec(),
                    capacity_units: antennas_a.len().min(antennas_b.len()) as u32,
                },
            },
        );
        Ok(link_id)
    }

    /// Dedicate antennas of a node to serving terminals of its own cell.
    pub fn create_p2mp(
        &mut self,
        vn: &VirtualNode,
        antennas: &[u32],
        cell: &VirtualCell,
        ut_ids: &[u32],
    ) -> Result<u32, VnError> {
        for &ut in ut_ids {
            if cell.ut_ids.binary_search(&ut).is_err() {
                return Err(VnError::ForeignUt { ut_id: ut });
            }
        }
        self.claim(vn, antennas)?;
        let link_id = self.next_id;
        self.next_id += 1;
        self.links.insert(
            link_id,
            Link {
                link_id,
                kind: LinkKind::PointToMultipoint {
                    vn_id: vn.vn_id,
                    antennas: antennas.to_vec(),
                    ut_ids: ut_ids.to_vec(),
                },
            },
        );
        Ok(link_id)
    }

    /// Tear a link down and free its antennas.
    pub fn release_link(&mut self, link_id: u32) -> Result<(), VnError> {
        let link = self.links.remove(&link_id).ok_or(VnError::UnknownResource)?;
        let freed: Vec<u32> = match &link.kind {
            LinkKind::PointToPoint {
                antennas_a,
                antennas_b,
                ..
            } => antennas_a.iter().chain(antennas_b).copied().collect(),
            LinkKind::PointToMultipoint { antennas, .. } => antennas.clone(),
        };
        for a in freed {
            self.busy.remove(&a);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Traffic
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDst {
    Internet,
    Vn(u32),
    Ut(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficFlow {
    pub flow_id: u32,
    pub src_ut: u32,
    pub dst: FlowDst,
    pub volume: f64,
}

/// Where packet gateways sit in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgwMode {
    /// Gateways only at hierarchy roots; internet traffic climbs all the way.
    Centralized,
    /// A gateway in every node; internet traffic exits where it enters.
    Distributed,
}

impl PgwMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PgwMode::Centralized => "centralized",
            PgwMode::Distributed => "distributed",
        }
    }
}

/// Where traffic ended up.  Volumes are conserved: `backbone_volume` counts
/// volume times backbone hops; `edge_volume` is volume delivered without
/// touching the backbone at all.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    pub total_volume: f64,
    pub backbone_volume: f64,
    pub edge_volume: f64,
    pub internet_backbone_volume: f64,
    pub internal_backbone_volume: f64,
    /// Volume over each hierarchy edge, keyed by the child node.
    pub link_volume: BTreeMap<u32, f64>,
    pub per_flow_hops: BTreeMap<u32, u32>,
}

/// Depths of every node, rejecting unknown parents and parent cycles.
fn hierarchy_depths(vns: &BTreeMap<u32, VirtualNode>) -> Result<BTreeMap<u32, u32>, VnError> {
    let mut depths: BTreeMap<u32, u32> = BTreeMap::new();
    for &start in vns.keys() {
        if depths.contains_key(&start) {
            continue;
        }
        // Walk to a root or an already-resolved node, then unwind.
        let mut path = Vec::new();
        let mut cur = start;
        let depth_base = loop {
            if let Some(&d) = depths.get(&cur) {
                break d;
            }
            if path.contains(&cur) {
                return Err(VnError::HierarchyCycle { vn_id: cur });
            }
            path.push(cur);
            match vns.get(&cur).ok_or(VnError::UnknownVn { vn_id: cur })?.parent_vn {
                Some(parent) => {
                    if !vns.contains_key(&parent) {
                        return Err(VnError::UnknownVn { vn_id: parent });
                    }
                    cur = parent;
                }
                None => {
                    depths.insert(cur, 0);
                    path.pop();
                    break 0;
                }
            }
        };
        for (i, &vn) in path.iter().rev().enumerate() {
            depths.insert(vn, depth_base + 1 + i as u32);
        }
    }
    Ok(depths)
}

fn root_of(vns: &BTreeMap<u32, VirtualNode>, mut vn: u32) -> u32 {
    while let Some(parent) = vns[&vn].parent_vn {
        vn = parent;
    }
    vn
}

/// Check that gateway placement matches the declared mode: centralized means
/// gateways at exactly the roots, distributed means one everywhere.
fn validate_pgw_placement(
    vns: &BTreeMap<u32, VirtualNode>,
    mode: PgwMode,
) -> Result<(), VnError> {
    for vn in vns.values() {
        let has_pgw = vn.roles.contains(&Role::Pgw);
        let should = match mode {
            PgwMode::Centralized => vn.parent_vn.is_none(),
            PgwMode::Distributed => true,
        };
        if has_pgw != should {
            return Err(VnError::RoleConstraintViolated {
                vn_id: vn.vn_id,
                role: Role::Pgw,
            });
        }
    }
    Ok(())
}

/// Push every flow through the hierarchy and account for the load.
///
/// Internet flows exit at the nearest gateway on the path toward the root
/// (themselves, under distributed gateways).  Node- and terminal-bound flows
/// travel via the lowest common ancestor.  Flows from or to terminals
/// outside `ut_to_vn`, or between different trees, have no route.
pub fn route_traffic(
    flows: &[TrafficFlow],
    vns: &BTreeMap<u32, VirtualNode>,
    ut_to_vn: &BTreeMap<u32, u32>,
    mode: PgwMode,
) -> Result<LoadReport, VnError> {
    let depths = hierarchy_depths(vns)?;
    validate_pgw_placement(vns, mode)?;

    let mut report = LoadReport::default();
    for flow in flows {
        let &src_vn = ut_to_vn
            .get(&flow.src_ut)
            .ok_or(VnError::NoRoute { flow_id: flow.flow_id })?;
        if !vns.contains_key(&src_vn) {
            return Err(VnError::NoRoute { flow_id: flow.flow_id });
        }

        // Edges climbed, keyed by child node.
        let mut climbed: Vec<u32> = Vec::new();
        match flow.dst {
            FlowDst::Internet => {
                let mut cur = src_vn;
                while !vns[&cur].roles.contains(&Role::Pgw) {
                    match vns[&cur].parent_vn {
                        Some(parent) => {
                            climbed.push(cur);
                            cur = parent;
                        }
                        // No gateway on the way up: mode validation makes
                        // this unreachable, but a flow must never vanish.
                        None => return Err(VnError::NoRoute { flow_id: flow.flow_id }),
                    }
                }
                report.internet_backbone_volume += flow.volume * climbed.len() as f64;
            }
            FlowDst::Vn(_) | FlowDst::Ut(_) => {
                let dst_vn = match flow.dst {
                    FlowDst::Vn(v) => v,
                    FlowDst::Ut(u) => *ut_to_vn
                        .get(&u)
                        .ok_or(VnError::NoRoute { flow_id: flow.flow_id })?,
                    FlowDst::Internet => unreachable!(),
                };
                if !vns.contains_key(&dst_vn) {
                    return Err(VnError::NoRoute { flow_id: flow.flow_id });
                }
                if root_of(vns, src_vn) != root_of(vns, dst_vn) {
                    return Err(VnError::NoRoute { flow_id: flow.flow_id });
                }
                // Meet at the lowest common ancestor: raise the deeper side,
                // then climb in lockstep.
                let (mut up, mut down) = (src_vn, dst_vn);
                while depths[&up] > depths[&down] {
                    climbed.push(up);
                    up = vns[&up].parent_vn.expect("deeper node has a parent");
                }
                while depths[&down] > depths[&up] {
                    climbed.push(down);
                    down = vns[&down].parent_vn.expect("deeper node has a parent");
                }
                while up != down {
                    climbed.push(up);
                    climbed.push(down);
                    up = vns[&up].parent_vn.expect("non-root on the way to LCA");
                    down = vns[&down].parent_vn.expect("non-root on the way to LCA");
                }
                report.internal_backbone_volume += flow.volume * climbed.len() as f64;
            }
        }

        let hops = climbed.len() as u32;
        report.total_volume += flow.volume;
        report.backbone_volume += flow.volume * hops as f64;
        if hops == 0 {
            report.edge_volume += flow.volume;
        }
        for child in climbed {
            *report.link_volume.entry(child).or_insert(0.0) += flow.volume;
        }
        report.per_flow_hops.insert(flow.flow_id, hops);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnError {
    InsufficientResources {
        class: ResourceClass,
        requested: u32,
        available: u32,
    },
    /// A resource id that is not part of the entity it was used with.
    UnknownResource,
    AntennaBusy { antenna_id: u32 },
    /// Terminal outside the cell a multipoint link must stay within.
    ForeignUt { ut_id: u32 },
    RoleConstraintViolated { vn_id: u32, role: Role },
    HierarchyCycle { vn_id: u32 },
    UnknownVn { vn_id: u32 },
    NoRoute { flow_id: u32 },
    SelfLink { vn_id: u32 },
}

impl fmt::Display for VnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VnError::InsufficientResources {
                class,
                requested,
                available,
            } => write!(
                f,
                "not enough {} units: requested {requested}, available {available}",
                class.as_str()
            ),
            VnError::UnknownResource => write!(f, "resource not owned by this entity"),
            VnError::AntennaBusy { antenna_id } => {
                write!(f, "antenna {antenna_id} already carries a link")
            }
            VnError::ForeignUt { ut_id } => {
                write!(f, "terminal {ut_id} is outside the serving cell")
            }
            VnError::RoleConstraintViolated { vn_id, role } => {
                write!(f, "virtual node {vn_id} cannot hold role {role:?}")
            }
            VnError::HierarchyCycle { vn_id } => {
                write!(f, "hierarchy cycle through virtual node {vn_id}")
            }
            VnError::UnknownVn { vn_id } => write!(f, "unknown virtual node {vn_id}"),
            VnError::NoRoute { flow_id } => write!(f, "flow {flow_id} has no route"),
            VnError::SelfLink { vn_id } => {
                write!(f, "virtual node {vn_id} cannot link to itself")
            }
        }
    }
}

impl core::error::Error for VnError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_scenario, ScenarioConfig};
    use alloc::vec;

    fn small_scenario() -> Scenario {
        build_scenario(&ScenarioConfig {
            pn_count: 2,
            antennas_per_pn: 300, // 2 blocks per PN: 150 radios each
            ut_count: 0,
            ..ScenarioConfig::default()
        })
    }

    // ---- pooling & formation ----

    #[test]
    fn pool_counts_match_the_hardware() {
        let s = small_scenario();
        let pool = ResourcePool::from_scenario(&s);
        assert_eq!(pool.total_free(ResourceClass::Antenna), 600);
        assert_eq!(pool.total_free(ResourceClass::Compute), 2 * 2 * 8);
        assert_eq!(pool.total_free(ResourceClass::Storage), 2 * 2 * 16);
    }

    #[test]
    fn failed_blocks_never_enter_the_pool() {
        let s = small_scenario();
        let reports = vec![
            PostReport {
                pn_id: 0,
                passed_blocks: vec![1],
                failed_blocks: vec![0],
                usable_antennas: 150,
                master_block: 1,
            },
            PostReport {
                pn_id: 1,
                passed_blocks: vec![0, 1],
                failed_blocks: vec![],
                usable_antennas: 300,
                master_block: 0,
            },
        ];
        let pool = ResourcePool::from_post(&s, &reports);
        assert_eq!(pool.total_free(ResourceClass::Antenna), 450);
        assert_eq!(pool.total_free(ResourceClass::Compute), 3 * 8);
        assert_eq!(pool.total_free(ResourceClass::Storage), 3 * 16);
        // Antennas 0..149 sit on PN0 block 0, which failed.
        let mut pool2 = pool.clone();
        let (vn, _) = form_virtual_node(
            &mut pool2,
            0,
            ResourceRequest { antennas: 1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(vn.members[0].antenna_ids, vec![150]);
    }

    #[test]
    fn formation_spans_physical_nodes_when_one_is_not_enough() {
        let s = small_scenario();
        let mut pool = ResourcePool::from_scenario(&s);
        let (vn, mapping) = form_virtual_node(
            &mut pool,
            7,
            ResourceRequest { antennas: 400, compute_units: 20, storage_units: 0 },
        )
        .unwrap();
        assert_eq!(vn.antenna_count(), 400);
        assert_eq!(vn.members.len(), 2, "400 antennas need both PNs");
        assert_eq!(vn.members[0].pn_id, 0);
        assert_eq!(vn.members[0].antenna_ids.len(), 300);
        assert_eq!(vn.members[1].antenna_ids.len(), 100);
        // PN0 contributes all blocks (antennas + 16 compute); PN1 block 0
        // antennas and block 0 compute slots only.
        assert_eq!(vn.members[0].block_ids, vec![0, 1]);
        assert_eq!(mapping.len(), 420);
        assert_eq!(pool.total_free(ResourceClass::Antenna), 200);
        assert_eq!(pool.total_free(ResourceClass::Compute), 12);
    }

    #[test]
    fn shortage_is_atomic_and_reports_the_gap() {
        let s = small_scenario();
        let mut pool = ResourcePool::from_scenario(&s);
        let before = pool.clone();
        let err = form_virtual_node(
            &mut pool,
            0,
            ResourceRequest { antennas: 601, compute_units: 5, storage_units: 5 },
        )
        .unwrap_err();
        assert_eq!(
            err,
            VnError::InsufficientResources {
                class: ResourceClass::Antenna,
                requested: 601,
                available: 600,
            }
        );
        assert_eq!(pool, before, "failed formation must not leak resources");
    }

    #[test]
    fn mapping_is_a_dense_bijection() {
        let s = small_scenario();
        let mut pool = ResourcePool::from_scenario(&s);
        let (_, mapping) = form_virtual_node(
            &mut pool,
            3,
            ResourceRequest { antennas: 10, compute_units: 4, storage_units: 6 },
        )
        .unwrap();
        for class in [ResourceClass::Antenna, ResourceClass::Compute, ResourceClass::Storage] {
            let count = match class {
                ResourceClass::Antenna => 10,
                ResourceClass::Compute => 4,
                ResourceClass::Storage => 6,
            };
            for index in 0..count {
                let v = VirtualResourceId { class, index };
                let p = mapping.map_virtual_to_physical(v).unwrap();
                assert_eq!(p.class, class);
                assert_eq!(mapping.map_physical_to_virtual(p).unwrap(), v);
            }
        }
        let bogus = VirtualResourceId { class: ResourceClass::Antenna, index: 10 };
        assert_eq!(
            mapping.map_virtual_to_physical(bogus).unwrap_err(),
            VnError::UnknownResource
        );
    }

    #[test]
    fn release_restores_the_pool_exactly() {
        let s = small_scenario();
        let mut pool = ResourcePool::from_scenario(&s);
        let baseline = pool.clone();
        let (_, first) = form_virtual_node(
            &mut pool,
            0,
            ResourceRequest { antennas: 350, compute_units: 9, storage_units: 17 },
        )
        .unwrap();
        let (_, second) = form_virtual_node(
            &mut pool,
            1,
            ResourceRequest { antennas: 50, compute_units: 3, storage_units: 1 },
        )
        .unwrap();
        release_virtual_node(&mut pool, &second);
        release_virtual_node(&mut pool, &first);
        assert_eq!(pool, baseline);
    }

    #[test]
    fn formation_is_deterministic() {
        let s = small_scenario();
        let req = ResourceRequest { antennas: 123, compute_units: 7, storage_units: 11 };
        let mut p1 = ResourcePool::from_scenario(&s);
        let mut p2 = ResourcePool::from_scenario(&s);
        assert_eq!(
            form_virtual_node(&mut p1, 0, req).unwrap(),
            form_virtual_node(&mut p2, 0, req).unwrap()
        );
    }

    // ---- roles ----

    #[test]
    fn base_station_role_needs_an_antenna() {
        let mut bare = VirtualNode::bare(0);
        assert_eq!(
            assign_roles(&mut bare, &[Role::Vbs]).unwrap_err(),
            VnError::RoleConstraintViolated { vn_id: 0, role: Role::Vbs }
        );
        assert!(assign_roles(&mut bare, &[Role::Mme, Role::Pgw]).is_ok());
        assert!(bare.roles.contains(&Role::Pgw));
    }

    #[test]
    fn role_assignment_is_idempotent() {
        let mut vn = VirtualNode::bare(0);
        assign_roles(&mut vn, &[Role::Sgw, Role::Sgw]).unwrap();
        assign_roles(&mut vn, &[Role::Sgw]).unwrap();
        assert_eq!(vn.roles.len(), 1);
    }

    // ---- links ----

    fn two_formed_nodes() -> (VirtualNode, VirtualNode) {
        let s = small_scenario();
        let mut pool = ResourcePool::from_scenario(&s);
        let (a, _) = form_virtual_node(
            &mut pool,
            0,
            ResourceRequest { antennas: 4, ..Default::default() },
        )
        .unwrap();
        let (b, _) = form_virtual_node(
            &mut pool,
            1,
            ResourceRequest { antennas: 2, ..Default::default() },
        )
        .unwrap();
        (a, b)
    }

    #[test]
    fn p2p_links_claim_antennas_and_size_by_the_narrow_end() {
        let (a, b) = two_formed_nodes();
        let mut reg = LinkRegistry::new();
        let id = reg.create_p2p(&a, &[0, 1, 2], &b, &[4, 5]).unwrap();
        match &reg.links[&id].kind {
            LinkKind::PointToPoint { capacity_units, .. } => assert_eq!(*capacity_units, 2),
            other => panic!("wrong kind: {other:?}"),
        }
        assert!(reg.is_busy(0) && reg.is_busy(5));
        assert!(!reg.is_busy(3));
        // Antenna 1 is already committed; antenna 3 never was, and a failed
        // creation must not claim it.
        assert_eq!(
            reg.create_p2p(&a, &[3, 1], &b, &[4]).unwrap_err(),
            VnError::AntennaBusy { antenna_id: 1 }
        );
        assert!(!reg.is_busy(3));
        assert_eq!(reg.links.len(), 1);
        reg.release_link(id).unwrap();
        assert!(!reg.is_busy(0));
        assert!(reg.create_p2p(&a, &[1], &b, &[4]).is_ok());
    }

    #[test]
    fn p2p_rejects_foreign_antennas_and_self_links() {
        let (a, b) = two_formed_nodes();
        let mut reg = LinkRegistry::new();
        assert_eq!(
            reg.create_p2p(&a, &[99], &b, &[4]).unwrap_err(),
            VnError::UnknownResource
        );
        assert_eq!(
            reg.create_p2p(&a, &[0], &a, &[1]).unwrap_err(),
            VnError::SelfLink { vn_id: 0 }
        );
        assert_eq!(
            reg.create_p2p(&a, &[], &b, &[4]).unwrap_err(),
            VnError::InsufficientResources {
                class: ResourceClass::Antenna,
                requested: 1,
                available: 0,
            }
        );
    }

    #[test]
    fn p2mp_links_stay_inside_the_cell() {
        let (a, _) = two_formed_nodes();
        let cell = VirtualCell {
            vc_id: 0,
            vn_id: 0,
            antenna_ids: vec![0, 1, 2, 3],
            ut_ids: vec![10, 11, 12],
        };
        let mut reg = LinkRegistry::new();
        assert!(reg.create_p2mp(&a, &[0, 1], &cell, &[10, 12]).is_ok());
        assert_eq!(
            reg.create_p2mp(&a, &[2], &cell, &[13]).unwrap_err(),
            VnError::ForeignUt { ut_id: 13 }
        );
    }

    // ---- hierarchy & traffic ----

    /// Root 0 with children 1 and 2; terminal u lives on VN (u % 2) + 1.
    fn star(mode: PgwMode) -> (BTreeMap<u32, VirtualNode>, BTreeMap<u32, u32>) {
        let mut vns = BTreeMap::new();
        let mut root = VirtualNode::bare(0);
        root.roles.insert(Role::Pgw);
        vns.insert(0, root);
        for id in [1, 2] {
            let mut child = VirtualNode::bare(id);
            child.parent_vn = Some(0);
            if mode == PgwMode::Distributed {
                child.roles.insert(Role::Pgw);
            }
            vns.insert(id, child);
        }
        let ut_to_vn = (0..100).map(|u| (u, (u % 2) + 1)).collect();
        (vns, ut_to_vn)
    }

    fn star_flows() -> Vec<TrafficFlow> {
        // 75 internet flows, 25 to the next terminal over — odd distance,
        // so source and destination always sit under different children.
        (0..100)
            .map(|i| TrafficFlow {
                flow_id: i,
                src_ut: i,
                dst: if i < 75 {
                    FlowDst::Internet
                } else {
                    FlowDst::Ut((i + 1) % 100)
                },
                volume: 1.0,
            })
            .collect()
    }

    #[test]
    fn centralized_gateways_pull_internet_traffic_up_the_tree() {
        let (vns, ut_to_vn) = star(PgwMode::Centralized);
        let report = route_traffic(&star_flows(), &vns, &ut_to_vn, PgwMode::Centralized).unwrap();
        assert_eq!(report.total_volume, 100.0);
        assert_eq!(report.internet_backbone_volume, 75.0);
        // Cross-child internal flows climb to the root and descend: 2 hops.
        assert_eq!(report.internal_backbone_volume, 50.0);
        assert_eq!(report.backbone_volume, 125.0);
        assert_eq!(report.edge_volume, 0.0);
    }

    #[test]
    fn distributed_gateways_keep_internet_traffic_at_the_edge() {
        let (vns, ut_to_vn) = star(PgwMode::Distributed);
        let report = route_traffic(&star_flows(), &vns, &ut_to_vn, PgwMode::Distributed).unwrap();
        assert_eq!(report.internet_backbone_volume, 0.0);
        assert_eq!(report.internal_backbone_volume, 50.0);
        assert_eq!(report.backbone_volume, 50.0);
        assert_eq!(report.edge_volume, 75.0);
        // The offload story in one line: 125 -> 50.
        let (cvns, cut) = star(PgwMode::Centralized);
        let central = route_traffic(&star_flows(), &cvns, &cut, PgwMode::Centralized).unwrap();
        assert!(report.backbone_volume < central.backbone_volume);
    }

    #[test]
    fn same_cell_internal_traffic_never_touches_the_backbone() {
        let (vns, ut_to_vn) = star(PgwMode::Centralized);
        // Terminals 0 and 2 both live on VN 1.
        let flows = [TrafficFlow { flow_id: 0, src_ut: 0, dst: FlowDst::Ut(2), volume: 3.0 }];
        let report = route_traffic(&flows, &vns, &ut_to_vn, PgwMode::Centralized).unwrap();
        assert_eq!(report.backbone_volume, 0.0);
        assert_eq!(report.edge_volume, 3.0);
        assert_eq!(report.per_flow_hops[&0], 0);
    }

    #[test]
    fn link_volumes_attribute_load_to_hierarchy_edges() {
        let (vns, ut_to_vn) = star(PgwMode::Centralized);
        let flows = [
            TrafficFlow { flow_id: 0, src_ut: 0, dst: FlowDst::Internet, volume: 2.0 },
            TrafficFlow { flow_id: 1, src_ut: 1, dst: FlowDst::Internet, volume: 5.0 },
            TrafficFlow { flow_id: 2, src_ut: 0, dst: FlowDst::Ut(1), volume: 1.0 },
        ];
        let report = route_traffic(&flows, &vns, &ut_to_vn, PgwMode::Centralized).unwrap();
        // Terminal 0 -> VN1, terminal 1 -> VN2.
        assert_eq!(report.link_volume[&1], 3.0);
        assert_eq!(report.link_volume[&2], 6.0);
        let edge_sum: f64 = report.link_volume.values().sum();
        assert_eq!(edge_sum, report.backbone_volume);
        assert_eq!(report.per_flow_hops[&2], 2);
    }

    #[test]
    fn deeper_trees_count_every_climbed_edge() {
        // Chain 0 <- 1 <- 2; terminal 0 on VN 2.
        let mut vns = BTreeMap::new();
        let mut root = VirtualNode::bare(0);
        root.roles.insert(Role::Pgw);
        vns.insert(0, root);
        let mut mid = VirtualNode::bare(1);
        mid.parent_vn = Some(0);
        vns.insert(1, mid);
        let mut leaf = VirtualNode::bare(2);
        leaf.parent_vn = Some(1);
        vns.insert(2, leaf);
        let ut_to_vn = [(0, 2)].into_iter().collect();
        let flows = [TrafficFlow { flow_id: 0, src_ut: 0, dst: FlowDst::Internet, volume: 1.0 }];
        let report = route_traffic(&flows, &vns, &ut_to_vn, PgwMode::Centralized).unwrap();
        assert_eq!(report.per_flow_hops[&0], 2);
        assert_eq!(report.link_volume[&2], 1.0);
        assert_eq!(report.link_volume[&1], 1.0);
    }

    #[test]
    fn hierarchy_cycles_are_rejected() {
        let mut vns = BTreeMap::new();
        let mut a = VirtualNode::bare(0);
        a.parent_vn = Some(1);
        let mut b = VirtualNode::bare(1);
        b.parent_vn = Some(0);
        vns.insert(0, a);
        vns.insert(1, b);
        let err = route_traffic(&[], &vns, &BTreeMap::new(), PgwMode::Distributed).unwrap_err();
        assert!(matches!(err, VnError::HierarchyCycle { .. }));
    }

    #[test]
    fn gateway_placement_must_match_the_mode() {
        let (mut vns, ut_to_vn) = star(PgwMode::Centralized);
        // A stray gateway on a child violates the centralized contract.
        vns.get_mut(&1).unwrap().roles.insert(Role::Pgw);
        let err = route_traffic(&[], &vns, &ut_to_vn, PgwMode::Centralized).unwrap_err();
        assert_eq!(err, VnError::RoleConstraintViolated { vn_id: 1, role: Role::Pgw });

        let (vns, ut_to_vn) = star(PgwMode::Centralized);
        let err = route_traffic(&[], &vns, &ut_to_vn, PgwMode::Distributed).unwrap_err();
        assert!(matches!(err, VnError::RoleConstraintViolated { .. }));
    }

    #[test]
    fn unmapped_terminals_and_cross_tree_flows_have_no_route() {
        let (vns, ut_to_vn) = star(PgwMode::Centralized);
        let orphan = [TrafficFlow {
            flow_id: 9,
            src_ut: 999,
            dst: FlowDst::Internet,
            volume: 1.0,
        }];
        assert_eq!(
            route_traffic(&orphan, &vns, &ut_to_vn, PgwMode::Centralized).unwrap_err(),
            VnError::NoRoute { flow_id: 9 }
        );

        // Second tree: root 10, no terminals mapped to it.
        let mut vns2 = vns.clone();
        let mut other_root = VirtualNode::bare(10);
        other_root.roles.insert(Role::Pgw);
        vns2.insert(10, other_root);
        let cross = [TrafficFlow {
            flow_id: 4,
            src_ut: 0,
            dst: FlowDst::Vn(10),
            volume: 1.0,
        }];
        assert_eq!(
            route_traffic(&cross, &vns2, &ut_to_vn, PgwMode::Centralized).unwrap_err(),
            VnError::NoRoute { flow_id: 4 }
        );
    }
}
