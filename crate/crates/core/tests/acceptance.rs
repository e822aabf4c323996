//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::panic::{self, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use ucp_fem::assembly::{assemble, elemental_p1, sign_audit};
use ucp_fem::graph::{
    axis_parallel_edges, build_graph, is_zfs, restricted_zf_excess, tensor_leaky_certificate,
};
use ucp_fem::graph::{forcing_closure, TensorGrid, ZfExcess};
use ucp_fem::mesh::{self, Point2, RingLayout};
use ucp_fem::rng;
use ucp_fem::spectra::linalg::spectral_norm;
use ucp_fem::spectra::studies::{fixtures, interlace_random, lambdaker_parts, perturbation_trials};
use ucp_fem::spectra::{Spectra, Tolerances};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Collected sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn closed_lambda_star(d: f64) -> f64 {
    24.0 * (2.0 * d - SQRT3) / (d * (SQRT3 * d - 2.0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn c1_hexagon_inner_solution(c: &mut Checks) {
    let tol = Tolerances::default();
    let expected = [0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let layout = RingLayout { k: 6 };
    for d in [3.0, 2.8, 4.0] {
        let sys = assemble(&mesh::gen_polygon_ring(6, d).unwrap()).unwrap();
        let report = Spectra::new(&sys, tol).unwrap().inner_scan();
        let hits: Vec<_> = report.nontrivial().collect();
        c.check(
            hits.len() == 1 && hits[0].dim_inner == 1,
            format!("d={d}: nontrivial inner spaces {}", hits.len()),
        );
        let Some(hit) = hits.first() else { continue };
        let ls = closed_lambda_star(d);
        c.check(
            rel(hit.lambda, ls) <= 1e-8,
            format!("d={d}: lambda {} vs {ls}", hit.lambda),
        );
        let interior = &sys.partition.interior;
        let at = |node: usize| hit.basis[0][interior.binary_search(&node).unwrap()];
        let order: Vec<usize> = std::iter::once(layout.center())
            .chain((0..6).map(|j| layout.inner(j)))
            .collect();
        let pivot = at(RingLayout::index(2));
        let err = order
            .iter()
            .zip(expected)
            .map(|(&n, e)| (at(n) / pivot - e).abs())
            .fold(0.0, f64::max);
        c.check(err <= 1e-8, format!("d={d}: vector error {err:e}"));
        c.note(format!("d={d} lambda={:.10}", hit.lambda));
    }
}

fn c2_lambdaker(c: &mut Checks) {
    let mut r = rng::seeded(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let d = rng::uniform(&mut r, 1.0 + SQRT3, 6.0);
        let sys = assemble(&mesh::gen_polygon_ring(6, d).unwrap()).unwrap();
        let (a, m) = lambdaker_parts(&sys);
        let (a_ref, m_ref) = (2.0 * d + d / (SQRT3 * d - 2.0), d * d * SQRT3 / 24.0);
        let e = rel(a, a_ref).max(rel(m, m_ref));
        worst = worst.max(e);
        c.check(
            e <= 1e-10,
            format!("d={d}: a {a} vs {a_ref}, m {m} vs {m_ref}"),
        );
    }
    c.note(format!("worst relative error {worst:e}"));
}

fn c3_zero_forcing(c: &mut Checks) {
    let graph_of = |m: &mesh::Mesh| {
        let sys = assemble(m).unwrap();
        (build_graph(&sys), sys.partition.boundary.clone())
    };
    let (g, b) = graph_of(&mesh::gen_hexagon_split(3.0).unwrap());
    c.check(is_zfs(&g, &b).unwrap(), "hex-split boundary is not a ZFS");
    let (g, b) = graph_of(&mesh::gen_polygon_ring(6, 3.0).unwrap());
    c.check(!is_zfs(&g, &b).unwrap(), "hex-ring boundary is a ZFS");
    let e = restricted_zf_excess(&g, &b, 3).unwrap();
    c.check(e == ZfExcess::Exact(1), format!("hex-ring excess {e:?}"));
    let (g, b) = graph_of(&mesh::gen_annulus(3.0).unwrap());
    let e = restricted_zf_excess(&g, &b, 3).unwrap();
    c.check(e == ZfExcess::Exact(1), format!("annulus excess {e:?}"));
}

fn c4_tensor(c: &mut Checks) {
    let tol = Tolerances::default();
    let mut r = rng::seeded(4);
    for (nx, ny) in [(3, 3), (4, 3), (5, 4), (6, 4), (6, 5)] {
        let xs = rng::random_spacing(&mut r, nx);
        let ys = rng::random_spacing(&mut r, ny);
        let m = mesh::gen_tensor_product(&xs, &ys).unwrap();
        let sys = assemble(&m).unwrap();
        let report = Spectra::new(&sys, tol).unwrap().inner_scan();
        c.check(
            report.ucp && report.max_dim() == 0,
            format!("{nx}x{ny}: inner dim {}", report.max_dim()),
        );
        c.check(!report.flagged, format!("{nx}x{ny}: flagged rank decision"));
        let g = build_graph(&sys);
        let grid = TensorGrid::detect(&m).unwrap();
        let leaks = axis_parallel_edges(&g, &grid);
        let axis_total = g
            .edges
            .keys()
            .filter(|&&(u, v)| grid.is_axis_parallel(u, v))
            .count();
        c.check(
            leaks.len() == axis_total && axis_total == nx * (ny - 1) + ny * (nx - 1),
            format!("{nx}x{ny}: leaks"),
        );
        let cert = tensor_leaky_certificate(&g, &m).unwrap();
        c.check(
            cert.forced_all,
            format!("{nx}x{ny}: certificate incomplete"),
        );
        c.check(
            cert.replay(&g, &grid.bottom_left_seed(), &leaks),
            format!("{nx}x{ny}: chronicle replay"),
        );
    }
}

fn c5_heptagon(c: &mut Checks) {
    let sys = assemble(&mesh::gen_polygon_ring(7, 3.0).unwrap()).unwrap();
    let audit = sign_audit(&sys);
    c.check(
        audit.offdiag_nonpositive,
        format!("positive entries {:?}", audit.positive_entries),
    );
    let report = Spectra::new(&sys, Tolerances::default())
        .unwrap()
        .inner_scan();
    c.check(report.ucp, format!("inner dim {}", report.max_dim()));
    c.note(format!("{} Dirichlet clusters", report.entries.len()));
}

fn c6_annulus(c: &mut Checks) {
    let host = mesh::gen_annulus(3.0).unwrap();
    let sys = assemble(&host).unwrap();
    let report = Spectra::new(&sys, Tolerances::default())
        .unwrap()
        .inner_scan();
    let hits: Vec<_> = report.nontrivial().collect();
    c.check(
        hits.len() == 1 && hits[0].dim_inner == 1,
        format!("nontrivial inner spaces {}", hits.len()),
    );
    let Some(hit) = hits.first() else { return };
    let interior = &sys.partition.interior;
    c.check(interior.len() == 12, "12 interior nodes");
    let u = &hit.basis[0];
    let mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    let (lo, hi) = mags
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
    c.check(
        (hi - lo) / hi <= 1e-8,
        format!("magnitude spread {:e}", (hi - lo) / hi),
    );
    // each interior node has exactly two interior neighbours; their values have the opposite sign
    for (a, &na) in interior.iter().enumerate() {
        let nbrs: Vec<usize> = (0..interior.len())
            .filter(|&b| b != a && sys.m[(na, interior[b])] > 0.0)
            .collect();
        c.check(
            nbrs.len() == 2,
            format!("node {na} has {} interior neighbours", nbrs.len()),
        );
        c.check(
            nbrs.iter().all(|&b| u[a] * u[b] < 0.0),
            format!("node {na} does not alternate"),
        );
    }
    let patch = mesh::inner_hexagon_patch();
    let shared = mesh::match_boundary(&host, &patch).unwrap();
    let big_mesh = mesh::embed(&host, &patch, &shared).unwrap();
    let big = assemble(&big_mesh).unwrap();
    let mut ext = DVector::zeros(big_mesh.n_nodes());
    for (&n, &x) in interior.iter().zip(u) {
        ext[n] = x / hi;
    }
    let residual = (&big.a * &ext - &big.m * &ext * hit.lambda).norm();
    let bound = 1e-9 * spectral_norm(&big.a);
    c.check(
        residual <= bound,
        format!("extension residual {residual:e} > {bound:e}"),
    );
    c.note(format!("lambda={:.10} residual={residual:.2e}", hit.lambda));
}

fn c7_interlacing(c: &mut Checks) {
    let tol = Tolerances::default();
    let mut total = 0;
    let mut flagged = 0;
    for (name, m) in fixtures(7).unwrap() {
        let sys = assemble(&m).unwrap();
        let sp = Spectra::new(&sys, tol).unwrap();
        let mut records = vec![sp.interlace(0.0)];
        records.extend(interlace_random(&sp, 50, 42));
        records.extend(
            sp.dirichlet
                .values
                .iter()
                .chain(&sp.neumann.values)
                .map(|&l| sp.interlace(l)),
        );
        for r in &records {
            c.check(
                r.identity_holds,
                format!("{name}: identity fails at {}: {r:?}", r.lambda),
            );
            c.check(
                r.codim_holds,
                format!("{name}: codimension fails at {}", r.lambda),
            );
        }
        for &l in &sp.dirichlet.values {
            let r = sp.interlace(l);
            let m_in = sp.inner_space(l).dim();
            c.check(
                r.i_infinity + m_in == r.m_d,
                format!("{name}: i_inf {} at {l}", r.i_infinity),
            );
        }
        total += records.len();
        flagged += records.iter().filter(|r| r.flagged).count();
    }
    c.note(format!("{total} records, {flagged} flagged"));
}

fn c8_perturbation(c: &mut Checks) {
    let t = perturbation_trials(3.0, 20, 1e-3, 42, &Tolerances::default()).unwrap();
    c.check(
        t.both >= 19,
        format!("condition_met and ucp_after in {}/20", t.both),
    );
    for (i, r) in t.records.iter().enumerate() {
        if r.break_value.abs() > 10.0 * r.fd_noise {
            let dbreak = r.dbreak_lhs - r.dbreak_rhs;
            c.check(
                rel(dbreak, r.break_value) <= 0.05,
                format!("trial {i}: break {} vs dbreak {dbreak}", r.break_value),
            );
        }
    }
    c.note(format!(
        "condition_met={} ucp_after={} both={}",
        t.condition_met, t.ucp_after, t.both
    ));
}

fn c9_signs(c: &mut Checks) {
    let d = 1.3;
    c.check(2.0 / SQRT3 < d && d < (1.0 + SQRT3) / 2.0, "d in range");
    let m = mesh::gen_polygon_ring(6, d).unwrap();
    let layout = RingLayout { k: 6 };
    let inner: Vec<usize> = (0..6).map(|j| layout.inner(j)).collect();
    let mut seen = 0;
    for (e, el) in m.elements().iter().enumerate() {
        let local: Vec<usize> = (0..3).filter(|&i| inner.contains(&el.nodes[i])).collect();
        let touches_outer = el.nodes.iter().any(|&n| n > 6);
        if local.len() == 2 && touches_outer {
            let pts: [Point2; 3] = m.element_points(e).try_into().unwrap();
            let em = elemental_p1(&pts).unwrap();
            let v = em.stiffness[(local[0], local[1])];
            c.check(v > 0.0, format!("element {e}: inner-edge entry {v}"));
            seen += 1;
        }
    }
    c.check(seen == 6, format!("{seen} inner-edge elements"));
    let audit = sign_audit(&assemble(&m).unwrap());
    c.note(format!(
        "assembled positive entries: {}",
        audit.positive_entries.len()
    ));

    let strip = mesh::gen_aniso_strip();
    let sys = assemble(&strip).unwrap();
    let g = build_graph(&sys);
    let nodes = strip.nodes();
    let (mut horizontal, mut diagonal) = (0, 0);
    for (&(u, v), attr) in &g.edges {
        let (p, q) = (nodes[u], nodes[v]);
        if p.y == q.y {
            horizontal += 1;
            c.check(
                attr.a > 0.0 && attr.leaky,
                format!("horizontal edge ({u},{v}) a={}", attr.a),
            );
        } else if p.x != q.x {
            diagonal += 1;
            c.check(
                attr.a < 0.0 && !attr.leaky,
                format!("diagonal edge ({u},{v}) a={}", attr.a),
            );
        }
    }
    c.check(horizontal > 0 && diagonal > 0, "strip has both edge types");
    let closure = forcing_closure(&g, &sys.partition.boundary, true).unwrap();
    c.check(
        closure.forced_all,
        "leaky closure from the boundary is incomplete",
    );
}

fn c10_assembly(c: &mut Checks) {
    let mut all = fixtures(10).unwrap();
    all.push(("aniso-strip".into(), mesh::gen_aniso_strip()));
    all.push(("hex-patch".into(), mesh::inner_hexagon_patch()));
    let host = mesh::gen_annulus(3.0).unwrap();
    let patch = mesh::inner_hexagon_patch();
    let shared = mesh::match_boundary(&host, &patch).unwrap();
    all.push((
        "annulus-filled".into(),
        mesh::embed(&host, &patch, &shared).unwrap(),
    ));
    for (name, m) in &all {
        let sys = assemble(m).unwrap();
        let ones = DVector::from_element(sys.n(), 1.0);
        let row = (&sys.a * ones).amax();
        c.check(
            row <= 1e-12 * spectral_norm(&sys.a),
            format!("{name}: |A 1| = {row:e}"),
        );
        c.check(
            rel(sys.m.sum(), m.area()) <= 1e-10,
            format!("{name}: mass {} vs area {}", sys.m.sum(), m.area()),
        );
    }

    let ones3 = DMatrix::from_element(3, 3, 1.0);
    let pattern = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
    let split = DMatrix::from_row_slice(3, 3, &[0.25, -0.25, 0.0, -0.25, 0.25, 0.0, 0.0, 0.0, 0.0]);
    let tail =
        DMatrix::from_row_slice(3, 3, &[0.25, 0.25, -0.5, 0.25, 0.25, -0.5, -0.5, -0.5, 1.0]);
    let general = |l: f64, h: f64| {
        let (p, q) = (h / l, l / h);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.5 * p + q / 8.0,
                -0.5 * p + q / 8.0,
                -q / 4.0,
                -0.5 * p + q / 8.0,
                0.5 * p + q / 8.0,
                -q / 4.0,
                -q / 4.0,
                -q / 4.0,
                q / 2.0,
            ],
        )
    };
    let d = 3.0;
    let x = 2.0 * d - SQRT3;
    let y = SQRT3 * d - 2.0;
    let families = [
        (
            "center",
            1.0,
            SQRT3 / 2.0,
            &pattern * (SQRT3 / 48.0),
            (&ones3 * -1.0 + DMatrix::identity(3, 3) * 3.0) * (SQRT3 / 6.0),
        ),
        (
            "inner-edge",
            1.0,
            d - SQRT3 / 2.0,
            &pattern * ((d - SQRT3 / 2.0) / 24.0),
            &split * x + &tail / x,
        ),
        (
            "outer-edge",
            d,
            d * SQRT3 / 2.0 - 1.0,
            &pattern * (d * y / 48.0),
            &split * (y / d) + &tail * (d / y),
        ),
    ];
    for (name, l, h, m_ref, a_ref) in families {
        let em = elemental_p1(&[
            Point2::new(l / 2.0, h),
            Point2::new(-l / 2.0, h),
            Point2::new(0.0, 0.0),
        ])
        .unwrap();
        let ea = (&em.stiffness - &a_ref).amax() / a_ref.amax();
        let eg = (&em.stiffness - general(l, h)).amax() / a_ref.amax();
        let emass = (&em.mass - &m_ref).amax() / m_ref.amax();
        let emass_general = (&em.mass - &pattern * (l * h / 24.0)).amax() / m_ref.amax();
        c.check(
            ea.max(eg) <= 1e-13,
            format!("{name}: stiffness error {:e}", ea.max(eg)),
        );
        c.check(
            emass.max(emass_general) <= 1e-13,
            format!("{name}: mass error {:e}", emass.max(emass_general)),
        );
    }
    c.note(format!("{} fixtures", all.len()));
}

type Criterion = (&'static str, fn(&mut Checks));

fn main() {
    let criteria: [Criterion; 10] = [
        ("hexagon inner solution", c1_hexagon_inner_solution),
        ("lambda* entry combinations", c2_lambdaker),
        ("zero forcing fixtures", c3_zero_forcing),
        ("tensor-product UCP", c4_tensor),
        ("heptagon UCP", c5_heptagon),
        ("annulus inner solution", c6_annulus),
        ("interlacing identities", c7_interlacing),
        ("perturbation genericity", c8_perturbation),
        ("sign structure", c9_signs),
        ("assembly invariants", c10_assembly),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let mut checks = Checks::default();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| run(&mut checks)));
        if let Err(e) = outcome {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            checks
                .failures
                .push(format!("panicked: {}", msg.unwrap_or_default()));
        }
        let ok = checks.failures.is_empty();
        let notes = if checks.notes.is_empty() {
            String::new()
        } else {
            format!(" ({})", checks.notes.join("; "))
        };
        println!(
            "{} criterion {}: {title}{notes}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        for f in checks.failures.iter().take(10) {
            println!("    {f}");
        }
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
