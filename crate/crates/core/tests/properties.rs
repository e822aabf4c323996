//! Property tests for forcing, assembly invariances and the spectral identities.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use proptest::prelude::*;

use ucp_fem::assembly::assemble;
use ucp_fem::graph::{
    build_graph, forcing_closure, is_zfs, restricted_zf_excess, MeshGraph, ZfExcess,
};
use ucp_fem::mesh::{self, Mesh, Point2};
use ucp_fem::spectra::linalg::spectral_norm;
use ucp_fem::spectra::studies::{fixtures, lambda_star, lambda_star_assembled};
use ucp_fem::spectra::{Spectra, Tolerances};

fn small_graph() -> impl Strategy<Value = MeshGraph> {
    (2usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m).prop_map(move |keep| {
            let edges = pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(&p, _)| p);
            MeshGraph::from_edges(n, edges)
        })
    })
}

fn graph_and_seed() -> impl Strategy<Value = (MeshGraph, Vec<usize>)> {
    small_graph().prop_flat_map(|g| {
        let n = g.n;
        (
            Just(g),
            proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n),
        )
    })
}

/// Minimum size of a zero forcing set containing `base`, by trying every superset.
fn brute_force_excess(g: &MeshGraph, base: &[usize]) -> usize {
    let rest: Vec<usize> = (0..g.n).filter(|v| !base.contains(v)).collect();
    (0u32..1 << rest.len())
        .filter_map(|mask| {
            let mut seed = base.to_vec();
            seed.extend(
                rest.iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v),
            );
            is_zfs(g, &seed)
                .unwrap()
                .then_some(mask.count_ones() as usize)
        })
        .min()
        .unwrap()
}

fn relabel(m: &Mesh, perm: &[usize]) -> Mesh {
    m.permute_nodes(perm).unwrap()
}

fn scale_mesh(m: &Mesh, c: f64) -> Mesh {
    let nodes = m
        .nodes()
        .iter()
        .map(|p| Point2::new(p.x * c, p.y * c))
        .collect();
    Mesh::new(m.kind(), nodes, m.elements().to_vec()).unwrap()
}

fn small_fixture() -> impl Strategy<Value = Mesh> {
    prop_oneof![
        (1.2f64..5.0).prop_map(|d| mesh::gen_polygon_ring(6, d).unwrap()),
        (1.3f64..5.0).prop_map(|d| mesh::gen_hexagon_split(d).unwrap()),
        (1.2f64..4.0).prop_map(|d| mesh::gen_polygon_ring(7, d).unwrap()),
        (
            proptest::collection::vec(0.5f64..1.5, 2..5),
            proptest::collection::vec(0.5f64..1.5, 2..4)
        )
            .prop_map(|(dx, dy)| {
                let cum = |g: Vec<f64>| {
                    std::iter::once(0.0)
                        .chain(g.iter().scan(0.0, |s, x| {
                            *s += x;
                            Some(*s)
                        }))
                        .collect::<Vec<_>>()
                };
                mesh::gen_tensor_product(&cum(dx), &cum(dy)).unwrap()
            }),
    ]
}

type Signature = (Vec<usize>, Option<usize>, Vec<(usize, usize, usize, usize)>);

/// The integer outputs that must not depend on labels, scale or element order.
fn integer_signature(m: &Mesh) -> Signature {
    let sys = assemble(m).unwrap();
    let sp = Spectra::new(&sys, Tolerances::default()).unwrap();
    let report = sp.inner_scan();
    let mut dims: Vec<usize> = report.entries.iter().map(|e| e.dim_inner).collect();
    dims.sort_unstable();
    let g = build_graph(&sys);
    let excess = restricted_zf_excess(&g, &sys.partition.boundary, 2)
        .unwrap()
        .value();
    let probes = [0.5, 7.0, 23.0].map(|l| {
        let c = sp.counting(l);
        (c.n_n, c.n_d, c.m_n, c.m_d)
    });
    (dims, excess, probes.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forcing_result_is_order_independent((g, seed) in graph_and_seed(), rot in 0usize..8) {
        let mut shuffled = seed.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let a = forcing_closure(&g, &seed, false).unwrap();
        let b = forcing_closure(&g, &shuffled, false).unwrap();
        prop_assert_eq!(&a.final_blue, &b.final_blue);
        prop_assert!(a.replay(&g, &seed, &BTreeSet::new()));
    }

    #[test]
    fn forcing_is_monotone((g, seed) in graph_and_seed(), extra in 0usize..8) {
        let base = forcing_closure(&g, &seed, false).unwrap();
        let mut bigger = seed.clone();
        bigger.push(extra % g.n);
        let grown = forcing_closure(&g, &bigger, false).unwrap();
        prop_assert!(base.final_blue.is_subset(&grown.final_blue));
        let again = forcing_closure(&g, &base.final_blue.iter().copied().collect::<Vec<_>>(), false).unwrap();
        prop_assert_eq!(again.final_blue, base.final_blue);
    }

    #[test]
    fn excess_matches_brute_force((g, seed) in graph_and_seed()) {
        let expected = brute_force_excess(&g, &seed);
        prop_assert_eq!(restricted_zf_excess(&g, &seed, g.n).unwrap(), ZfExcess::Exact(expected));
        if expected > 0 {
            prop_assert_eq!(restricted_zf_excess(&g, &seed, expected - 1).unwrap(), ZfExcess::ExceedsCap(expected - 1));
        }
    }

    #[test]
    fn lambda_star_matches_assembled_quotient(d in 1.16f64..8.0) {
        let sys = assemble(&mesh::gen_polygon_ring(6, d).unwrap()).unwrap();
        let closed = lambda_star(d).unwrap();
        prop_assert!((lambda_star_assembled(&sys) - closed).abs() <= 1e-10 * closed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relabelling_permutes_matrices(m in small_fixture(), salt in any::<u64>()) {
        let n = m.n_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut r = ucp_fem::rng::seeded(salt);
        for i in (1..n).rev() {
            let j = (ucp_fem::rng::uniform(&mut r, 0.0, (i + 1) as f64) as usize).min(i);
            perm.swap(i, j);
        }
        let p = relabel(&m, &perm);
        let (s, t) = (assemble(&m).unwrap(), assemble(&p).unwrap());
        let scale = s.a.amax();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((s.a[(i, j)] - t.a[(perm[i], perm[j])]).abs() <= 1e-14 * scale);
                prop_assert!((s.m[(i, j)] - t.m[(perm[i], perm[j])]).abs() <= 1e-14 * s.m.amax());
            }
        }
        prop_assert_eq!(integer_signature(&m), integer_signature(&p));
    }

    #[test]
    fn element_order_is_bit_identical(m in small_fixture(), salt in any::<u64>()) {
        let mut order: Vec<usize> = (0..m.n_elements()).collect();
        let k = (salt as usize) % order.len();
        order.rotate_left(k);
        order.reverse();
        let (s, t) = (assemble(&m).unwrap(), assemble(&m.reorder_elements(&order).unwrap()).unwrap());
        prop_assert_eq!(s.stiffness, t.stiffness);
        prop_assert_eq!(s.mass, t.mass);
    }

    #[test]
    fn scaling_preserves_integer_outputs(m in small_fixture(), c in 0.25f64..4.0) {
        let (s, t) = (assemble(&m).unwrap(), assemble(&scale_mesh(&m, c)).unwrap());
        prop_assert!((&s.a - &t.a).amax() <= 1e-12 * s.a.amax());
        prop_assert!((&s.m * (c * c) - &t.m).amax() <= 1e-12 * t.m.amax());
        let (sa, sb) = (Spectra::new(&s, Tolerances::default()).unwrap(), Spectra::new(&t, Tolerances::default()).unwrap());
        for l in [0.3, 4.0, 17.0] {
            let (x, y) = (sa.interlace(l), sb.interlace(l / (c * c)));
            prop_assert_eq!((x.n_n, x.n_d, x.m_in, x.i_infinity), (y.n_n, y.n_d, y.m_in, y.i_infinity));
        }
        let dims = |sp: &Spectra| sp.inner_scan().entries.iter().map(|e| e.dim_inner).collect::<Vec<_>>();
        prop_assert_eq!(dims(&sa), dims(&sb));
        let scaled = s.scaled(c);
        prop_assert_eq!(dims(&Spectra::new(&scaled, Tolerances::default()).unwrap()), dims(&sa));
    }
}

#[test]
fn eigenpairs_have_small_residuals() {
    for (name, m) in fixtures(3).unwrap() {
        let sys = assemble(&m).unwrap();
        let sp = Spectra::new(&sys, Tolerances::default()).unwrap();
        let na = spectral_norm(&sys.a);
        let nm = spectral_norm(&sys.m);
        let check =
            |a: &DMatrix<f64>, mm: &DMatrix<f64>, values: &[f64], vectors: &DMatrix<f64>| {
                for (k, &l) in values.iter().enumerate() {
                    let v = vectors.column(k);
                    let r = (a * v - mm * v * l).norm() / v.norm();
                    assert!(
                        r <= 1e-9 * (na + l.abs() * nm),
                        "{name}: residual {r:e} at {l}"
                    );
                }
            };
        check(&sys.a, &sys.m, &sp.neumann.values, &sp.neumann.vectors);
        check(
            &sys.a_blocks.ii,
            &sys.m_blocks.ii,
            &sp.dirichlet.values,
            &sp.dirichlet.vectors,
        );
    }
}

#[test]
fn dtn_equals_schur_complement_off_the_dirichlet_spectrum() {
    for (name, m) in fixtures(5).unwrap() {
        let sys = assemble(&m).unwrap();
        let sp = Spectra::new(&sys, Tolerances::default()).unwrap();
        let mut probes = vec![0.0, 0.7, 3.3];
        let d = &sp.dirichlet.values;
        probes.extend(
            d.windows(2)
                .filter(|w| w[1] - w[0] > 1e-3)
                .map(|w| 0.5 * (w[0] + w[1])),
        );
        for l in probes {
            let c = sys.pencil_blocks(l);
            let solve = c.ii.clone().lu().solve(&c.ib).unwrap();
            let schur = &c.bb - &c.bi * solve;
            let op = sp.dtn(l);
            assert_eq!(op.i_infinity, 0);
            let err = (op.boundary_matrix() - &schur).amax();
            assert!(
                err <= 1e-9 * schur.amax().max(1.0),
                "{name}: Schur mismatch {err:e} at {l}"
            );
        }
    }
}

#[test]
fn codimension_splits_dirichlet_multiplicity() {
    for (name, m) in fixtures(6).unwrap() {
        let sys = assemble(&m).unwrap();
        let sp = Spectra::new(&sys, Tolerances::default()).unwrap();
        for cl in &sp.dirichlet.clusters {
            let op = sp.dtn(cl.value);
            let m_in = sp.inner_space(cl.value).dim();
            assert_eq!(op.dirichlet_kernel, cl.len, "{name} at {}", cl.value);
            assert_eq!(op.i_infinity + m_in, cl.len, "{name} at {}", cl.value);
            assert_eq!(op.dim() + op.i_infinity, sys.partition.n_boundary());
        }
    }
}

#[test]
fn inner_dimension_is_bounded_by_forcing_excess() {
    let mut all = fixtures(8).unwrap();
    all.push(("annulus-filled".into(), {
        let host = mesh::gen_annulus(3.0).unwrap();
        let patch = mesh::inner_hexagon_patch();
        let shared = mesh::match_boundary(&host, &patch).unwrap();
        mesh::embed(&host, &patch, &shared).unwrap()
    }));
    for (name, m) in all {
        let sys = assemble(&m).unwrap();
        let report = Spectra::new(&sys, Tolerances::default())
            .unwrap()
            .inner_scan();
        let g = build_graph(&sys);
        let excess = restricted_zf_excess(&g, &sys.partition.boundary, 3).unwrap();
        if let ZfExcess::Exact(k) = excess {
            assert!(
                report.max_dim() <= k,
                "{name}: inner dim {} above excess {k}",
                report.max_dim()
            );
        }
        let leaky = forcing_closure(&g, &sys.partition.boundary, true).unwrap();
        if leaky.forced_all {
            assert!(
                report.ucp,
                "{name}: leaky closure forces everything yet inner space is nontrivial"
            );
        }
    }
}
