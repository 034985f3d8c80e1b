//! Cross-checks the routing stack against an independent shortest-path
//! implementation (petgraph's Dijkstra), on randomized connected graphs.
//!
//! Costs accumulate destination-first on our side and source-first on the
//! oracle's; since every partial sum adds the same two numbers, IEEE
//! commutativity makes the agreement *bitwise*, not approximate — which is
//! exactly what the table-exchange convergence proof relies on.

use std::collections::BTreeSet;

use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smmimo_core::bootstrap::{
    all_connection_maps, exchange_neighbor_maps, handle_failure, local_connection_map,
    NeighborGraph,
};

struct TestGraph {
    graph: NeighborGraph,
    edges: Vec<(u32, u32, f64)>,
    n: usize,
}

/// Random geometric graph, made connected by chaining consecutive nodes.
fn random_connected_graph(rng: &mut ChaCha8Rng) -> TestGraph {
    let n = rng.gen_range(5..=50usize);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
        .collect();
    let dist = |i: usize, j: usize| -> f64 {
        let dx = pts[i].0 - pts[j].0;
        let dy = pts[i].1 - pts[j].1;
        (dx * dx + dy * dy).sqrt()
    };

    let radius = rng.gen_range(250.0..500.0);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if dist(i, j) <= radius {
                seen.insert((i, j));
                edges.push((i as u32, j as u32, dist(i, j)));
            }
        }
    }
    for i in 0..n - 1 {
        if seen.insert((i, i + 1)) {
            edges.push((i as u32, (i + 1) as u32, dist(i, i + 1)));
        }
    }

    let mut graph = NeighborGraph::new(n);
    for &(a, b, w) in &edges {
        graph.add_edge(a, b, w);
    }
    TestGraph { graph, edges, n }
}

fn petgraph_of(edges: &[(u32, u32, f64)], n: usize) -> (UnGraph<(), f64>, Vec<NodeIndex>) {
    let mut pg = UnGraph::new_undirected();
    let idx: Vec<NodeIndex> = (0..n).map(|_| pg.add_node(())).collect();
    for &(a, b, w) in edges {
        pg.add_edge(idx[a as usize], idx[b as usize], w);
    }
    (pg, idx)
}

/// Our tables against the oracle: same reachability, bitwise-equal costs,
/// and next hops that achieve the cost exactly through a real edge.
fn check_against_oracle(tg: &TestGraph) {
    let maps = all_connection_maps(&tg.graph);
    let (pg, idx) = petgraph_of(&tg.edges, tg.n);

    for dest in 0..tg.n {
        let oracle = petgraph::algo::dijkstra(&pg, idx[dest], None, |e| *e.weight());
        for src in 0..tg.n {
            if src == dest {
                continue;
            }
            let ours = maps[src].routes.get(&(dest as u32));
            match (ours, oracle.get(&idx[src])) {
                (None, None) => {}
                (Some(entry), Some(&cost)) => {
                    assert_eq!(
                        entry.cost_m.to_bits(),
                        cost.to_bits(),
                        "cost {src}->{dest}: ours {} oracle {cost}",
                        entry.cost_m
                    );
                    // The chosen next hop must achieve the cost through an
                    // actual incident edge.
                    let via = tg
                        .graph
                        .neighbors(src as u32)
                        .iter()
                        .find(|&&(v, _)| v == entry.next_hop)
                        .expect("next hop must be a direct neighbor");
                    let through = maps[via.0 as usize]
                        .routes
                        .get(&(dest as u32))
                        .map_or(0.0, |e| e.cost_m);
                    let via_cost = if via.0 as usize == dest { via.1 } else { via.1 + through };
                    assert_eq!(via_cost.to_bits(), entry.cost_m.to_bits());
                }
                (ours, oracle) => {
                    panic!("reachability disagreement {src}->{dest}: ours {ours:?} oracle {oracle:?}")
                }
            }
        }
    }
}

#[test]
fn shortest_paths_match_the_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..50 {
        check_against_oracle(&random_connected_graph(&mut rng));
    }
}

#[test]
fn table_exchange_converges_to_the_oracle_answer() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    for _ in 0..25 {
        let tg = random_connected_graph(&mut rng);
        let locals = (0..tg.n as u32)
            .map(|src| local_connection_map(&tg.graph, src))
            .collect();
        let exchanged = exchange_neighbor_maps(&tg.graph, locals).expect("must converge");
        let direct = all_connection_maps(&tg.graph);
        for (ex, dj) in exchanged.iter().zip(&direct) {
            assert_eq!(ex.src, dj.src);
            assert_eq!(ex.routes, dj.routes, "node {} tables diverge", ex.src);
        }
    }
}

#[test]
fn failure_recovery_equals_a_scratch_rebuild_of_the_survivors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdead);
    for _ in 0..20 {
        let tg = random_connected_graph(&mut rng);
        let dead = rng.gen_range(0..tg.n as u32);

        let recovered = handle_failure(&tg.graph, dead).expect("survivors converge");

        // Scratch rebuild on the survivor graph, checked two ways: our own
        // one-shot solver and the external oracle.
        let survivor_edges: Vec<(u32, u32, f64)> = tg
            .edges
            .iter()
            .copied()
            .filter(|&(a, b, _)| a != dead && b != dead)
            .collect();
        let mut survivors = NeighborGraph::new(tg.n);
        for &(a, b, w) in &survivor_edges {
            survivors.add_edge(a, b, w);
        }
        let direct = all_connection_maps(&survivors);
        for (rec, dj) in recovered.iter().zip(&direct) {
            assert_eq!(rec.src, dj.src);
            assert_eq!(rec.routes, dj.routes);
        }
        assert!(recovered[dead as usize].routes.is_empty());
        assert!(recovered.iter().all(|m| !m.routes.contains_key(&dead)));

        check_against_oracle(&TestGraph {
            graph: survivors,
            edges: survivor_edges,
            n: tg.n,
        });
    }
}
