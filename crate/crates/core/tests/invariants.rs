//! Property suites for the structural invariants the simulator's pieces
//! promise: threshold nesting, scale invariance, allocation bijectivity and
//! conservation, and gateway-placement dominance.

use std::collections::BTreeMap;

use proptest::prelude::*;

use smmimo_core::capacity::{apply_mask, build_mask, draw_channel, ChannelSpec};
use smmimo_core::dbm::{select_candidates, PilotReception};
use smmimo_core::topology::{build_scenario, ScenarioConfig, MU_FLOOR};
use smmimo_core::vnode::{
    form_virtual_node, release_virtual_node, route_traffic, FlowDst, PgwMode, ResourceClass,
    ResourcePool, ResourceRequest, Role, TrafficFlow, VirtualNode, VnError,
};

// ---------------------------------------------------------------------------
// Candidate selection
// ---------------------------------------------------------------------------

/// Receptions with the strongest normalized to exactly 1, like the pilot
/// pipeline produces.
fn receptions_from_powers(powers: &[f64]) -> Vec<PilotReception> {
    let max = powers.iter().cloned().fold(f64::MIN, f64::max);
    let mut rs: Vec<PilotReception> = powers
        .iter()
        .enumerate()
        .map(|(i, &p)| PilotReception {
            antenna_id: i as u32,
            ut_id: 0,
            delay_distance_m: 10.0,
            sqw: p / max,
        })
        .collect();
    rs.sort_by(|a, b| b.sqw.total_cmp(&a.sqw).then(a.antenna_id.cmp(&b.antenna_id)));
    rs
}

proptest! {
    /// Relaxing the acceptance ratio never drops an antenna: candidate sets
    /// nest monotonically in mu.
    #[test]
    fn candidate_sets_nest_in_mu(
        powers in prop::collection::vec(1e-9_f64..1e9, 1..200),
        mu_lo in MU_FLOOR..1.0_f64,
        mu_hi in MU_FLOOR..1.0_f64,
    ) {
        let (mu_lo, mu_hi) = if mu_lo <= mu_hi { (mu_lo, mu_hi) } else { (mu_hi, mu_lo) };
        let rs = receptions_from_powers(&powers);
        let tight = select_candidates(&rs, mu_hi);
        let loose = select_candidates(&rs, mu_lo);
        let loose_set: std::collections::BTreeSet<u32> =
            loose.antenna_ids.iter().copied().collect();
        prop_assert!(tight.antenna_ids.iter().all(|a| loose_set.contains(a)));
    }

    /// mu = 1 keeps exactly the maximal receptions; the floor keeps all.
    #[test]
    fn mu_extremes_behave(powers in prop::collection::vec(1e-9_f64..1e9, 1..200)) {
        let rs = receptions_from_powers(&powers);
        let best = select_candidates(&rs, 1.0);
        prop_assert!(!best.antenna_ids.is_empty());
        for r in &rs {
            let kept = best.antenna_ids.contains(&r.antenna_id);
            prop_assert_eq!(kept, r.sqw >= 1.0, "mu=1 keeps exactly weight-1 entries");
        }
        let all = select_candidates(&rs, MU_FLOOR);
        prop_assert_eq!(all.antenna_ids.len(), rs.len());
    }

    /// Scaling every received power by a power of two (exact in binary
    /// floating point) leaves the normalized weights, and therefore the
    /// candidate set, bit-identical.
    #[test]
    fn candidate_selection_is_scale_invariant(
        powers in prop::collection::vec(1e-9_f64..1e9, 1..100),
        exp in -40i32..40,
        mu in MU_FLOOR..1.0_f64,
    ) {
        let scale = (2.0_f64).powi(exp);
        let scaled: Vec<f64> = powers.iter().map(|p| p * scale).collect();
        let a = receptions_from_powers(&powers);
        let b = receptions_from_powers(&scaled);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.sqw.to_bits(), y.sqw.to_bits());
        }
        prop_assert_eq!(
            select_candidates(&a, mu).antenna_ids,
            select_candidates(&b, mu).antenna_ids
        );
    }

    /// The capacity mask obeys the same nesting as candidate selection.
    #[test]
    fn capacity_masks_nest_in_mu(
        seed in any::<u64>(),
        mu_lo in 0.01_f64..1.0,
        mu_hi in 0.01_f64..1.0,
    ) {
        let (mu_lo, mu_hi) = if mu_lo <= mu_hi { (mu_lo, mu_hi) } else { (mu_hi, mu_lo) };
        let spec = ChannelSpec::iid(24, 6, seed);
        let h = draw_channel(&spec, 0);
        let tight = build_mask(&h, mu_hi);
        let loose = build_mask(&h, mu_lo);
        for (t, l) in tight.iter().zip(&loose) {
            prop_assert!(!t || *l);
        }
        // Masking is idempotent: masking an already-masked channel with the
        // same threshold changes nothing.
        let masked = apply_mask(&h, &tight);
        let again = apply_mask(&masked, &build_mask(&masked, mu_hi));
        prop_assert_eq!(&again, &masked);
    }
}

// ---------------------------------------------------------------------------
// Resource allocation
// ---------------------------------------------------------------------------

fn pool_fixture() -> ResourcePool {
    let cfg = ScenarioConfig {
        pn_count: 3,
        antennas_per_pn: 300,
        ut_count: 0,
        ..ScenarioConfig::default()
    };
    ResourcePool::from_scenario(&build_scenario(&cfg))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any sequence of formations either fails atomically (pool unchanged)
    /// or produces a dense bijective mapping; releasing everything restores
    /// the pool exactly.
    #[test]
    fn allocation_is_bijective_and_conservative(
        requests in prop::collection::vec((0u32..400, 0u32..30, 0u32..50), 1..12)
    ) {
        let mut pool = pool_fixture();
        let baseline = pool.clone();
        let mut live = Vec::new();

        for (i, &(antennas, compute_units, storage_units)) in requests.iter().enumerate() {
            let req = ResourceRequest { antennas, compute_units, storage_units };
            let free_before = (
                pool.total_free(ResourceClass::Antenna),
                pool.total_free(ResourceClass::Compute),
                pool.total_free(ResourceClass::Storage),
            );
            match form_virtual_node(&mut pool, i as u32, req) {
                Ok((vn, mapping)) => {
                    prop_assert_eq!(vn.antenna_count(), antennas);
                    prop_assert_eq!(
                        mapping.len() as u32,
                        antennas + compute_units + storage_units
                    );
                    // Dense virtual indices, each mapping back to itself.
                    for p in mapping.physical_units() {
                        let v = mapping.map_physical_to_virtual(*p).unwrap();
                        prop_assert_eq!(mapping.map_virtual_to_physical(v).unwrap(), *p);
                    }
                    prop_assert_eq!(
                        pool.total_free(ResourceClass::Antenna),
                        free_before.0 - antennas
                    );
                    prop_assert_eq!(
                        pool.total_free(ResourceClass::Compute),
                        free_before.1 - compute_units
                    );
                    prop_assert_eq!(
                        pool.total_free(ResourceClass::Storage),
                        free_before.2 - storage_units
                    );
                    live.push(mapping);
                }
                Err(VnError::InsufficientResources { class, requested, available }) => {
                    prop_assert!(requested > available, "{class:?} shortage must be real");
                    let free_after = (
                        pool.total_free(ResourceClass::Antenna),
                        pool.total_free(ResourceClass::Compute),
                        pool.total_free(ResourceClass::Storage),
                    );
                    prop_assert_eq!(free_before, free_after, "failed formation must not leak");
                }
                Err(other) => prop_assert!(false, "unexpected error {other:?}"),
            }
        }

        // Tear down in reverse order; the pool must return to its baseline.
        while let Some(mapping) = live.pop() {
            release_virtual_node(&mut pool, &mapping);
        }
        prop_assert_eq!(pool, baseline);
    }
}

// ---------------------------------------------------------------------------
// Traffic routing
// ---------------------------------------------------------------------------

/// A random single-rooted tree (node 0 is the root) with terminals mapped to
/// random nodes, and random flows between them.  Node `i`'s parent is drawn
/// from `0..i`, which makes the parent map a tree by construction.
fn tree_and_flows() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<(u32, u8, f64)>)> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<u64>(), n - 1),
            prop::collection::vec(0..n as u32, 1..30),
            prop::collection::vec((any::<u32>(), 0u8..3, 0.1f64..10.0), 0..40),
        )
            .prop_map(|(raw_parents, ut_homes, flows)| {
                let parents: Vec<u32> = raw_parents
                    .iter()
                    .enumerate()
                    .map(|(idx, &r)| (r % (idx as u64 + 1)) as u32)
                    .collect();
                (parents, ut_homes, flows)
            })
    })
}

fn build_tree(parents: &[u32], mode: PgwMode) -> BTreeMap<u32, VirtualNode> {
    let n = parents.len() + 1;
    let mut vns = BTreeMap::new();
    for id in 0..n as u32 {
        let mut vn = VirtualNode::bare(id);
        if id > 0 {
            vn.parent_vn = Some(parents[id as usize - 1]);
        }
        if mode == PgwMode::Distributed || id == 0 {
            vn.roles.insert(Role::Pgw);
        }
        vns.insert(id, vn);
    }
    vns
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Moving gateways from the root to every node never increases backbone
    /// load, eliminates internet backbone traffic entirely, and leaves
    /// internal traffic untouched.  Volume is conserved either way.
    #[test]
    fn distributed_gateways_dominate_centralized((parents, ut_homes, raw_flows) in tree_and_flows()) {
        let ut_to_vn: BTreeMap<u32, u32> = ut_homes
            .iter()
            .enumerate()
            .map(|(u, &vn)| (u as u32, vn))
            .collect();
        let uts: Vec<u32> = ut_to_vn.keys().copied().collect();
        let flows: Vec<TrafficFlow> = raw_flows
            .iter()
            .enumerate()
            .map(|(i, &(pick, kind, volume))| TrafficFlow {
                flow_id: i as u32,
                src_ut: uts[pick as usize % uts.len()],
                dst: match kind {
                    0 => FlowDst::Internet,
                    1 => FlowDst::Ut(uts[(pick / 7) as usize % uts.len()]),
                    _ => FlowDst::Vn((pick % (parents.len() as u32 + 1)) as u32),
                },
                volume,
            })
            .collect();

        let central = route_traffic(
            &flows,
            &build_tree(&parents, PgwMode::Centralized),
            &ut_to_vn,
            PgwMode::Centralized,
        ).unwrap();
        let distributed = route_traffic(
            &flows,
            &build_tree(&parents, PgwMode::Distributed),
            &ut_to_vn,
            PgwMode::Distributed,
        ).unwrap();

        prop_assert!(distributed.backbone_volume <= central.backbone_volume);
        prop_assert_eq!(distributed.internet_backbone_volume, 0.0);
        prop_assert_eq!(
            distributed.internal_backbone_volume.to_bits(),
            central.internal_backbone_volume.to_bits(),
            "gateway placement must not affect internal routes"
        );
        // Per-flow: distributed hops never exceed centralized hops.
        for (flow, hops) in &distributed.per_flow_hops {
            prop_assert!(hops <= &central.per_flow_hops[flow]);
        }

        for report in [&central, &distributed] {
            // Value equality, not bit equality: an empty sum is -0.0 while
            // the report's accumulator starts at +0.0.
            let expected_total: f64 = flows.iter().map(|f| f.volume).sum();
            prop_assert_eq!(report.total_volume, expected_total);
            // Backbone splits into internet and internal shares.
            let split = report.internet_backbone_volume + report.internal_backbone_volume;
            prop_assert!((report.backbone_volume - split).abs() < 1e-9 * (1.0 + split.abs()));
            // Edge volume only counts zero-hop flows, so it can never
            // exceed the total.
            prop_assert!(report.edge_volume <= report.total_volume + 1e-12);
            // Per-edge attribution sums back to the backbone volume.
            let link_sum: f64 = report.link_volume.values().sum();
            prop_assert!(
                (link_sum - report.backbone_volume).abs() < 1e-9 * (1.0 + link_sum.abs())
            );
            // And hop counts re-derive the backbone volume exactly.
            let rederived: f64 = flows
                .iter()
                .map(|f| f.volume * report.per_flow_hops[&f.flow_id] as f64)
                .sum();
            prop_assert!(
                (rederived - report.backbone_volume).abs() < 1e-9 * (1.0 + rederived.abs())
            );
        }
    }
}
