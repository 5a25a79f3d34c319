//! Library results checked against slow, independent reimplementations.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uniadic_core::adic;
use uniadic_core::builders;
use uniadic_core::graph::{GradedGraph, VertexRef};
use uniadic_core::measures;
use uniadic_core::scheme;
use uniadic_core::trees;
use uniadic_core::uniadic::{self, LayerStack};

fn corpus() -> Vec<(String, GradedGraph)> {
    let mut out = vec![
        ("odometer2".to_string(), builders::odometer(2, 6).unwrap()),
        ("odometer3".to_string(), builders::odometer(3, 5).unwrap()),
        ("pascal".to_string(), builders::pascal(7).unwrap()),
        ("doubled".to_string(), builders::doubled_odometer(6).unwrap()),
    ];
    for seed in 0..20 {
        out.push((format!("random{seed}"), builders::random(seed, 5, 2, 4).unwrap()));
    }
    out
}

/// All rank sequences into `v`, built bottom-up by recursion on in-edges.
fn all_routes(g: &GradedGraph, v: VertexRef) -> Vec<Vec<usize>> {
    if v.level == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (r, &s) in g.in_edges(v).iter().enumerate() {
        for mut route in all_routes(g, VertexRef::new(v.level - 1, s)) {
            route.push(r);
            out.push(route);
        }
    }
    out
}

fn adic_sorted(mut routes: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    routes.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
    routes
}

#[test]
fn enumeration_successor_and_rank_agree_with_sorting() {
    for (name, g) in corpus() {
        let dims = g.dims().unwrap();
        for level in 0..g.num_levels() {
            for v in g.vertices(level) {
                if dims[level][v.index] > 10_000 {
                    continue;
                }
                let expected = adic_sorted(all_routes(&g, v));
                let listed: Vec<Vec<usize>> =
                    adic::enumerate_paths(&g, v).unwrap().into_iter().map(|p| p.ranks).collect();
                assert_eq!(listed, expected, "{name} {v}");

                let mut walked = vec![adic::minimal_path(&g, v).unwrap()];
                while let Some(next) = adic::successor(&g, walked.last().unwrap()).unwrap() {
                    walked.push(next);
                }
                let walked_ranks: Vec<Vec<usize>> = walked.iter().map(|p| p.ranks.clone()).collect();
                assert_eq!(walked_ranks, expected, "{name} {v}");

                for (i, p) in walked.iter().enumerate() {
                    assert_eq!(adic::rank(&g, p).unwrap(), i as u128, "{name} {v}");
                    assert_eq!(&adic::unrank(&g, v, i as u128).unwrap(), p);
                    if i > 0 {
                        assert_eq!(adic::predecessor(&g, p).unwrap().as_ref(), Some(&walked[i - 1]));
                    }
                }
            }
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn pascal_dims_are_binomial() {
    let g = builders::pascal(8).unwrap();
    let dims = g.dims().unwrap();
    for n in 0..=8 {
        for k in 0..=n {
            assert_eq!(dims[n][k], binomial(n as u128, k as u128));
            assert_eq!(all_routes(&g, VertexRef::new(n, k)).len() as u128, dims[n][k]);
        }
    }
}

/// Segments from level `from` into `v`, as (start, ranks) sorted adically.
fn segments(g: &GradedGraph, from: usize, v: VertexRef) -> Vec<(usize, Vec<usize>)> {
    if v.level == from {
        return vec![(v.index, vec![])];
    }
    let mut out = Vec::new();
    for (r, &s) in g.in_edges(v).iter().enumerate() {
        for (start, mut ranks) in segments(g, from, VertexRef::new(v.level - 1, s)) {
            ranks.push(r);
            out.push((start, ranks));
        }
    }
    out.sort_by(|a, b| a.1.iter().rev().cmp(b.1.iter().rev()));
    out
}

fn telescope_oracle(g: &GradedGraph, kept: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let mut levels = vec![vec![vec![]]];
    for pair in kept.windows(2) {
        let row = g
            .vertices(pair[1])
            .map(|v| segments(g, pair[0], v).into_iter().map(|(s, _)| s).collect())
            .collect();
        levels.push(row);
    }
    levels
}

#[test]
fn telescoping_matches_segment_enumeration() {
    let pascal = builders::pascal(4).unwrap();
    let t = pascal.telescope(&[0, 2, 4]).unwrap();
    assert_eq!(t.levels(), telescope_oracle(&pascal, &[0, 2, 4]).as_slice());
    let dims = pascal.dims().unwrap();
    let tdims = t.dims().unwrap();
    assert_eq!(tdims[1], dims[2]);
    assert_eq!(tdims[2], dims[4]);

    for (name, g) in corpus() {
        let kept: Vec<usize> = (0..g.num_levels()).filter(|l| l % 2 == 0 || *l == g.depth()).collect();
        let t = g.telescope(&kept).unwrap();
        assert_eq!(t.levels(), telescope_oracle(&g, &kept).as_slice(), "{name}");
    }
}

#[test]
fn induced_subgraph_of_ua_closure() {
    let ua = uniadic::ua_graph(2).unwrap();
    // root, the pair (R, R), the copy of R, then (P, P) and (P, C) above them
    let keep: BTreeSet<VertexRef> = [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1)]
        .into_iter()
        .map(|(l, i)| VertexRef::new(l, i))
        .collect();
    let (sub, map) = ua.induced_subgraph(&keep).unwrap();
    assert_eq!(sub.levels(), &[vec![vec![]], vec![vec![0, 0], vec![0]], vec![vec![0, 0], vec![0, 1]]]);
    assert_eq!(map[2], vec![VertexRef::new(2, 0), VertexRef::new(2, 1)]);
    // closure oracle: every kept source is kept
    for v in &keep {
        for &s in ua.in_edges(*v) {
            assert!(keep.contains(&VertexRef::new(v.level - 1, s)));
        }
    }
    let open: BTreeSet<VertexRef> = [VertexRef::new(0, 0), VertexRef::new(2, 0)].into_iter().collect();
    assert!(ua.induced_subgraph(&open).is_err());
    // the copy of R with nothing above it is a dead end
    let stranded: BTreeSet<VertexRef> =
        [(0, 0), (1, 0), (1, 1), (2, 0)].into_iter().map(|(l, i)| VertexRef::new(l, i)).collect();
    assert!(ua.induced_subgraph(&stranded).is_err());
}

fn random_fragment(seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..3)
        .map(|_| {
            let k = rng.gen_range(1..=5);
            (0..k).map(|_| rng.gen_range(0..4)).collect()
        })
        .collect()
}

fn stack_oracle(stack: &LayerStack) -> Vec<Vec<usize>> {
    let mut levels = vec![vec![Vec::new(); stack.top_size]];
    levels.extend(stack.layers.iter().cloned());
    let g = GradedGraph::from_levels_unchecked(levels);
    let bottom = stack.layers.len();
    g.vertices(bottom).map(|v| segments(&g, 0, v).into_iter().map(|(s, _)| s).collect()).collect()
}

#[test]
fn thinning_round_trips_random_fragments() {
    for seed in 0..20 {
        let bottom = random_fragment(seed);
        let stack = uniadic::thin_bipartite(4, &bottom).unwrap();
        assert_eq!(stack_oracle(&stack), bottom, "seed {seed}");
        for layer in &stack.layers {
            assert!(layer.iter().all(|s| (1..=2).contains(&s.len())), "seed {seed}");
        }
        let steps: usize = bottom.iter().map(|s| s.len().saturating_sub(2)).sum();
        assert_eq!(stack.inserted(), steps, "seed {seed}");
    }
}

#[test]
fn refinement_separates_duplicates_in_random_fragments() {
    for seed in 0..20 {
        let mut bottom = random_fragment(seed + 100);
        bottom.iter_mut().for_each(|s| {
            if s.len() < 2 {
                s.push(s[0]);
            }
        });
        bottom.push(bottom[0].clone());
        bottom.push(bottom[1].clone());
        let stack = uniadic::refine_gap(4, &bottom).unwrap();
        assert_eq!(stack_oracle(&stack), bottom, "seed {seed}");
        let mut levels = vec![vec![Vec::new(); 4]];
        levels.extend(stack.layers.iter().cloned());
        for level in &levels[1..] {
            let distinct: BTreeSet<&Vec<usize>> = level.iter().collect();
            assert_eq!(distinct.len(), level.len(), "seed {seed}");
            assert!(level.iter().all(|s| (1..=2).contains(&s.len())));
        }
    }
}

fn embedding_corpus() -> Vec<(String, GradedGraph)> {
    let mut out = vec![("odometer2".to_string(), builders::odometer(2, 4).unwrap())];
    for seed in 0..20 {
        out.push((format!("random{seed}"), builders::random(seed, 5, 2, 4).unwrap()));
    }
    out
}

#[test]
fn embeddings_verify_and_commute_with_successor() {
    for (name, g) in embedding_corpus() {
        let e = uniadic::embed(&g).unwrap();
        let report = uniadic::verify_embedding(&g, &e);
        assert!(report.passed(), "{name}: {:?}", report.problems);
        let transport = uniadic::PathTransport::new(&e).unwrap();
        let layered = transport.layered();
        for level in 0..=4 {
            for v in g.vertices(level) {
                for p in adic::enumerate_paths(&g, v).unwrap() {
                    let q = transport.lift(&g, &p).unwrap();
                    let mapped = adic::successor(layered, &q)
                        .unwrap()
                        .map(|s| transport.project(&s).unwrap());
                    assert_eq!(mapped, adic::successor(&g, &p).unwrap(), "{name} {p}");
                }
            }
        }
    }
}

#[test]
fn embedding_terms_are_injective_per_level() {
    for (name, g) in embedding_corpus() {
        let e = uniadic::embed(&g).unwrap();
        for row in &e.terms {
            let texts: BTreeSet<String> = row.iter().map(|t| t.to_string()).collect();
            assert_eq!(texts.len(), row.len(), "{name}");
        }
        for (level, row) in e.vertex_map().iter().enumerate() {
            assert_eq!(row.len(), g.level_size(level));
        }
    }
}

#[test]
fn odometer_image_is_induced_and_resolved() {
    let g = builders::odometer(2, 4).unwrap();
    let e = uniadic::embed(&g).unwrap();
    let image = uniadic::image_subgraph(&e).unwrap();
    let w = e.pushforward_weights(&builders::odometer_weights(2, 4)).unwrap();
    let report = scheme::definiteness_diagnostic(&image, &w, 4).unwrap();
    assert!(report.is_resolved());
    assert_eq!(report.resolution(), 1.0);
}

/// Solves the harmonic recursion from the top level down for a graph with one
/// vertex per level: `m_n = base * m_{n+1}` with `m_0 = 1`.
fn odometer_masses(base: u64, depth: usize) -> Vec<BigRational> {
    let mut m = vec![BigRational::one()];
    for _ in 0..depth {
        let prev = m.last().unwrap().clone();
        m.push(prev / BigRational::from_integer(base.into()));
    }
    m
}

#[test]
fn builder_weights_match_recursions() {
    let w = builders::odometer_weights(3, 5);
    let flat: Vec<BigRational> = w.levels.iter().map(|l| l[0].clone()).collect();
    assert_eq!(flat, odometer_masses(3, 5));

    let p = BigRational::new(1.into(), 3.into());
    let w = builders::pascal_weights(6, &p);
    let g = builders::pascal(6).unwrap();
    let dims = g.dims().unwrap();
    for n in 0..=6 {
        let total: BigRational = (0..=n)
            .map(|k| BigRational::from_integer(dims[n][k].into()) * w.levels[n][k].clone())
            .sum();
        assert!(total.is_one());
    }
    let report = measures::check_central(&g, &w, &BigRational::zero()).unwrap();
    assert!(report.passed);
}

#[test]
fn odometer_scheme_is_uniform_over_marks() {
    let g = builders::odometer(2, 6).unwrap();
    let w = builders::odometer_weights(2, 6);
    for depth in 3..=6 {
        let s = scheme::exact_scheme(&g, &w, depth).unwrap();
        assert_eq!(s.entries.len(), 1 << depth);
        let expected = BigRational::new(1.into(), (1u64 << depth).into());
        let tree = trees::ot(&g, VertexRef::new(depth, 0)).unwrap().encode();
        for (key, mass) in &s.entries {
            assert_eq!(mass, &expected);
            assert!(key.starts_with(&tree));
        }
        let marks: BTreeSet<u128> =
            s.entries.keys().map(|k| k.rsplit(':').next().unwrap().parse().unwrap()).collect();
        assert_eq!(marks, (0..1u128 << depth).collect());
    }
}

#[test]
fn minimal_graph_keys_hold_single_cylinders() {
    let o = builders::odometer(3, 4).unwrap();
    let w = builders::odometer_weights(3, 4);
    for depth in 0..=4 {
        let s = scheme::exact_scheme(&o, &w, depth).unwrap();
        let cylinders: u128 = o.dims().unwrap()[depth].iter().sum();
        assert_eq!(s.entries.len() as u128, cylinders);
        for mass in s.entries.values() {
            assert_eq!(mass, &w.levels[depth][0]);
        }
    }
    assert!(trees::is_minimal(&o, 4).unwrap().is_minimal());
}

#[test]
fn essentiality_on_pascal() {
    let g = builders::pascal(6).unwrap();
    let w = builders::pascal_weights(6, &BigRational::new(1.into(), 2.into()));
    for n in 1..=6 {
        let r = measures::essentiality_report(&g, &w, n).unwrap();
        let each = BigRational::new(1.into(), (1u64 << n).into());
        // one maximal path per endpoint, each of mass 2^-n
        assert_eq!(r.maximal_paths.len(), n + 1);
        assert!(r.maximal_paths.iter().all(|(_, m)| *m == each));
        assert_eq!(r.maximal_mass, each.clone() * BigRational::from_integer((n as u64 + 1).into()));
        assert_eq!(r.minimal_mass, r.maximal_mass);
    }
}
