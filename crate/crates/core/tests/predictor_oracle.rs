//! Rerouting search against exhaustive enumeration of simple cycles.

use braess_core::grid::{GridNetwork, LineId};
use braess_core::predictor::{rerouting, PredictorOptions, Rerouting};
use braess_core::topology::{gen_square_lattice, gen_voronoi_planar, stream_rng};

/// Lengths (in hops, upgraded line excluded) of the shortest simple t -> s
/// paths through the observed line, per traversal direction.
fn brute_force(net: &GridNetwork, up: LineId, obs: LineId) -> (Option<usize>, Option<usize>) {
    let n = net.node_count();
    let mut adj = vec![Vec::new(); n];
    for (k, l) in net.lines().iter().enumerate() {
        if k != up.0 {
            adj[l.from.0].push((l.to.0, k));
            adj[l.to.0].push((l.from.0, k));
        }
    }
    let s = net.lines()[up.0].from.0;
    let t = net.lines()[up.0].to.0;
    let u = net.lines()[obs.0].from.0;
    let mut best = (None::<usize>, None::<usize>);
    let mut visited = vec![false; n];
    visited[t] = true;
    fn dfs(
        a: usize,
        s: usize,
        u: usize,
        obs: usize,
        depth: usize,
        dir: Option<bool>,
        adj: &[Vec<(usize, usize)>],
        visited: &mut [bool],
        best: &mut (Option<usize>, Option<usize>),
    ) {
        if a == s {
            if let Some(f) = dir {
                let slot = if f { &mut best.0 } else { &mut best.1 };
                if slot.is_none_or(|b| depth < b) {
                    *slot = Some(depth);
                }
            }
            return;
        }
        for &(b, k) in &adj[a] {
            if visited[b] {
                continue;
            }
            let d = if k == obs { Some(a == u) } else { dir };
            visited[b] = true;
            dfs(b, s, u, obs, depth + 1, d, adj, visited, best);
            visited[b] = false;
        }
    }
    dfs(t, s, u, obs.0, 0, None, &adj, &mut visited, &mut best);
    best
}

/// Returns the number of ties seen.
fn check(net: &GridNetwork) -> usize {
    let mut ties = 0;
    let opts = PredictorOptions::default();
    for up in 0..net.line_count() {
        for obs in 0..net.line_count() {
            if up == obs {
                continue;
            }
            let (fwd, bwd) = brute_force(net, LineId(up), LineId(obs));
            let r = rerouting(net, LineId(up), LineId(obs), &opts).unwrap();
            match (fwd, bwd) {
                (None, None) => assert_eq!(r, Rerouting::Unreachable),
                (Some(a), Some(b)) if a == b => match r {
                    Rerouting::Tie { paths } => {
                        ties += 1;
                        assert_eq!(paths[0].len() - 1, a);
                        assert_eq!(paths[1].len() - 1, a);
                    }
                    other => panic!("pair ({up},{obs}): expected tie at {a}, got {other:?}"),
                },
                (f, b) => {
                    let forward = match (f, b) {
                        (Some(x), Some(y)) => x < y,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    let len = f.into_iter().chain(b).min().unwrap();
                    match r {
                        Rerouting::Directed { forward: got, path } => {
                            assert_eq!(got, forward, "pair ({up},{obs})");
                            assert_eq!(path.len() - 1, len, "pair ({up},{obs})");
                        }
                        other => panic!("pair ({up},{obs}): expected direction, got {other:?}"),
                    }
                }
            }
        }
    }
    ties
}

#[test]
fn matches_enumeration_on_small_lattice() {
    check(&gen_square_lattice(3, 4).unwrap());
    check(&gen_square_lattice(4, 4).unwrap());
}

#[test]
fn matches_enumeration_on_planar_random_graphs() {
    for seed in 0..4 {
        let net = gen_voronoi_planar(8, &mut stream_rng(seed, 0, None)).unwrap();
        assert!(net.line_count() > 10);
        check(&net);
    }
}

#[test]
fn matches_enumeration_with_parallel_lines_and_shared_nodes() {
    let net = GridNetwork::homogeneous(5, &[(0, 1), (1, 2), (2, 0), (0, 1), (2, 3), (3, 4), (4, 2), (1, 3), (4, 0)]).unwrap();
    check(&net);
}

#[test]
fn complete_graph_has_ties() {
    let k4 = GridNetwork::homogeneous(4, &[(0, 1), (1, 2), (2, 0), (1, 3), (3, 0), (2, 3)]).unwrap();
    assert!(check(&k4) > 0);
    let k5: Vec<_> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
    assert!(check(&GridNetwork::homogeneous(5, &k5).unwrap()) > 0);
}
