//! Verification studies on the fixture meshes: the hexagon inner solution and its
//! perturbation, the heptagon parity argument, the annulus, tensor grids and
//! interlacing sweeps.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{linalg, InnerReport, InterlaceRecord, Spectra, SpectraError, Tolerances};
use crate::assembly::{assemble, sign_audit, AssembledSystem, SignAudit};
use crate::graph::{build_graph, tensor_leaky_certificate};
use crate::mesh::{
    angle_condition, embed, gen_annulus, gen_hexagon_split, gen_polygon_ring, gen_tensor_product,
    inner_hexagon_patch, match_boundary, perturb, Mesh, RingLayout,
};
use crate::rng;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Closed form `24(2d - √3) / (d(√3 d - 2))` of the hexagon inner eigenvalue.
pub fn lambda_star(d: f64) -> Result<f64, SpectraError> {
    if !(d.is_finite() && d > 2.0 / SQRT3) {
        return Err(SpectraError::Parameter(format!(
            "d must exceed 2/sqrt(3), got {d}"
        )));
    }
    Ok(24.0 * (2.0 * d - SQRT3) / (d * (SQRT3 * d - 2.0)))
}

/// Stiffness and mass combinations `a_22 - 2 a_23` and `m_22 - 2 m_23` (1-based ring labels).
pub fn lambdaker_parts(sys: &AssembledSystem) -> (f64, f64) {
    let (p, q) = (RingLayout::index(2), RingLayout::index(3));
    (
        sys.a[(p, p)] - 2.0 * sys.a[(p, q)],
        sys.m[(p, p)] - 2.0 * sys.m[(p, q)],
    )
}

/// Closed forms of [`lambdaker_parts`] on the hexagon ring: `(2d + d/(√3 d - 2), d²√3/24)`.
pub fn lambdaker_closed_forms(d: f64) -> (f64, f64) {
    (2.0 * d + d / (SQRT3 * d - 2.0), d * d * SQRT3 / 24.0)
}

/// The quotient `(a_22 - 2 a_23) / (m_22 - 2 m_23)` from assembled matrices.
pub fn lambda_star_assembled(sys: &AssembledSystem) -> f64 {
    let (a, m) = lambdaker_parts(sys);
    a / m
}

fn position(list: &[usize], node: usize) -> Option<usize> {
    list.binary_search(&node).ok()
}

#[derive(Clone, Debug, Serialize)]
pub struct HexagonRecord {
    pub d: f64,
    pub lambda_star: f64,
    pub lambda_assembled: f64,
    /// Dirichlet eigenvalues with a nontrivial inner space.
    pub nontrivial: Vec<(f64, usize)>,
    pub lambda_found: Option<f64>,
    /// Inner vector over the interior nodes scaled so that node label 2 has value 1.
    pub inner_vector: Option<Vec<f64>>,
    pub vector_error: f64,
    pub neumann_multiplicity: usize,
    pub interlace: InterlaceRecord,
    pub passed: bool,
}

pub fn hexagon_study(d: f64, tol: &Tolerances) -> Result<HexagonRecord, SpectraError> {
    let ls = lambda_star(d)?;
    let sys = assemble(&gen_polygon_ring(6, d)?)?;
    let sp = Spectra::new(&sys, *tol)?;
    let report = sp.inner_scan();
    let nontrivial: Vec<(f64, usize)> = report
        .nontrivial()
        .map(|e| (e.lambda, e.dim_inner))
        .collect();
    let layout = RingLayout { k: 6 };
    let expected: Vec<f64> = std::iter::once(0.0)
        .chain((0..6).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }))
        .collect();
    let mut inner_vector = None;
    let mut vector_error = f64::INFINITY;
    let mut lambda_found = None;
    if let [(lambda, 1)] = nontrivial[..] {
        lambda_found = Some(lambda);
        let entry = report.nontrivial().next().expect("one nontrivial entry");
        let interior = &sys.partition.interior;
        let pivot = position(interior, RingLayout::index(2)).expect("label 2 is interior");
        let u = &entry.basis[0];
        let mut ring = [0.0; 7];
        ring[0] = u[position(interior, layout.center()).expect("center is interior")];
        for j in 0..6 {
            ring[1 + j] = u[position(interior, layout.inner(j)).expect("inner ring is interior")];
        }
        let scaled: Vec<f64> = ring.iter().map(|x| x / u[pivot]).collect();
        vector_error = scaled
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        inner_vector = Some(scaled);
    }
    let interlace = sp.interlace(lambda_found.unwrap_or(ls));
    let passed = lambda_found.is_some_and(|l| (l - ls).abs() <= 1e-8 * ls)
        && vector_error <= 1e-8
        && interlace.identity_holds
        && interlace.codim_holds
        && interlace.m_in == 1;
    Ok(HexagonRecord {
        d,
        lambda_star: ls,
        lambda_assembled: lambda_star_assembled(&sys),
        nontrivial,
        lambda_found,
        inner_vector,
        vector_error,
        neumann_multiplicity: sp.neumann.multiplicity_at(ls, tol),
        interlace,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationRecord {
    pub d: f64,
    pub lambda_star: f64,
    /// Finite-difference step actually used.
    pub h: f64,
    /// `<(dA_BI - λ* dM_BI) u_I, û_B>` at step `h`.
    pub break_value: f64,
    /// The same quantity at step `h / 2`.
    pub break_half: f64,
    pub richardson_ok: bool,
    /// `sum_j d[outer j, inner j]`.
    pub dbreak_lhs: f64,
    /// `sum_j d[outer j, inner j-1]`.
    pub dbreak_rhs: f64,
    pub fd_noise: f64,
    pub forms_agree: bool,
    pub condition_met: bool,
    pub ucp_after: bool,
    pub max_inner_dim_after: usize,
    pub flagged: bool,
}

fn derivative(
    mesh: &Mesh,
    dirs: &[[f64; 2]],
    h: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SpectraError> {
    let plus = assemble(&perturb(mesh, dirs, h)?)?;
    let minus = assemble(&perturb(mesh, dirs, -h)?)?;
    Ok((
        (&plus.a - &minus.a) / (2.0 * h),
        (&plus.m - &minus.m) / (2.0 * h),
    ))
}

/// First-order test of whether a deformation of the hexagon ring destroys its inner solution.
pub fn perturbation_test(
    d: f64,
    dirs: &[[f64; 2]],
    step: f64,
    tol: &Tolerances,
) -> Result<PerturbationRecord, SpectraError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(SpectraError::Parameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let ls = lambda_star(d)?;
    let mesh = gen_polygon_ring(6, d)?;
    if dirs.len() != mesh.n_nodes() {
        return Err(SpectraError::Parameter(format!(
            "expected {} directions, got {}",
            mesh.n_nodes(),
            dirs.len()
        )));
    }
    let sys = assemble(&mesh)?;
    let sp = Spectra::new(&sys, *tol)?;
    let multiplicity = sp.neumann.multiplicity_at(ls, tol);
    if multiplicity != 1 {
        return Err(SpectraError::NotSimple {
            lambda: ls,
            multiplicity,
        });
    }

    let layout = RingLayout { k: 6 };
    let n = mesh.n_nodes();
    let mut u = DVector::zeros(n);
    let mut u_hat = DVector::zeros(n);
    for j in 0..6 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        u[layout.inner(j)] = sign;
        u_hat[layout.outer(j)] = sign;
    }
    let h = step.min(1e-5);
    let break_at = |h: f64| -> Result<(f64, DMatrix<f64>), SpectraError> {
        let (da, dm) = derivative(&mesh, dirs, h)?;
        let dd = da - dm * ls;
        Ok((u_hat.dot(&(&dd * &u)), dd))
    };
    let (break_value, dd) = break_at(h)?;
    let (break_half, _) = break_at(h / 2.0)?;
    let dbreak_lhs: f64 = (0..6).map(|j| dd[(layout.outer(j), layout.inner(j))]).sum();
    let dbreak_rhs: f64 = (0..6)
        .map(|j| dd[(layout.outer(j), layout.inner((j + 5) % 6))])
        .sum();

    let roundoff = f64::EPSILON * sys.stiffness.max_abs() * n as f64 / h;
    let fd_noise = (break_value - break_half).abs() + roundoff;
    let richardson_ok = (break_value - break_half).abs() < 0.05 * break_value.abs();
    let significant = break_value.abs() > 10.0 * fd_noise;
    let forms_agree =
        !significant || (break_value - (dbreak_lhs - dbreak_rhs)).abs() <= 0.05 * break_value.abs();

    let after = assemble(&perturb(&mesh, dirs, step)?)?;
    let report = Spectra::new(&after, *tol)?.inner_scan();
    Ok(PerturbationRecord {
        d,
        lambda_star: ls,
        h,
        break_value,
        break_half,
        richardson_ok,
        dbreak_lhs,
        dbreak_rhs,
        fd_noise,
        forms_agree,
        condition_met: significant && richardson_ok,
        ucp_after: report.ucp,
        max_inner_dim_after: report.max_dim(),
        flagged: report.flagged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationTrials {
    pub d: f64,
    pub step: f64,
    pub seed: u64,
    pub trials: usize,
    pub condition_met: usize,
    pub ucp_after: usize,
    pub both: usize,
    pub forms_agree: usize,
    pub records: Vec<PerturbationRecord>,
}

/// Runs [`perturbation_test`] on `trials` random direction fields drawn from one seed.
pub fn perturbation_trials(
    d: f64,
    trials: usize,
    step: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<PerturbationTrials, SpectraError> {
    let n = gen_polygon_ring(6, d)?.n_nodes();
    let mut r = rng::seeded(seed);
    let mut records = Vec::with_capacity(trials);
    for _ in 0..trials {
        let dirs = rng::direction_field(&mut r, n);
        records.push(perturbation_test(d, &dirs, step, tol)?);
    }
    let count = |f: fn(&PerturbationRecord) -> bool| records.iter().filter(|r| f(r)).count();
    Ok(PerturbationTrials {
        d,
        step,
        seed,
        trials,
        condition_met: count(|r| r.condition_met),
        ucp_after: count(|r| r.ucp_after),
        both: count(|r| r.condition_met && r.ucp_after),
        forms_agree: count(|r| r.forms_agree),
        records,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityStep {
    /// 1-based labels.
    pub outer: usize,
    pub from: usize,
    pub to: usize,
    pub coeff_from: f64,
    pub coeff_to: f64,
    /// Sign forced on `to`.
    pub sign: i8,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityTrace {
    pub lambda: f64,
    pub coefficients_negative: bool,
    pub steps: Vec<ParityStep>,
    /// The sign forced back onto label 2 after a full turn is negative.
    pub contradiction: bool,
}

/// Propagates `sign(u_2) = +1` around the inner ring through the outer-node rows of `A - λM`.
pub fn ring_parity_sweep(sys: &AssembledSystem, k: usize, lambda: f64) -> ParityTrace {
    let layout = RingLayout { k };
    let c = sys.pencil(lambda);
    let mut sign: i8 = 1;
    let mut steps = Vec::with_capacity(k);
    let mut negative = true;
    for step in 1..=k {
        let j = step % k;
        let (from, to) = layout.outer_neighbours(j);
        let o = layout.outer(j);
        let (cf, ct) = (c[(o, from)], c[(o, to)]);
        negative &= cf < 0.0 && ct < 0.0;
        // c_f u_f + c_t u_t = 0
        sign = if (cf < 0.0) == (ct < 0.0) {
            -sign
        } else {
            sign
        };
        steps.push(ParityStep {
            outer: RingLayout::label(o),
            from: RingLayout::label(from),
            to: RingLayout::label(to),
            coeff_from: cf,
            coeff_to: ct,
            sign,
        });
    }
    ParityTrace {
        lambda,
        coefficients_negative: negative,
        steps,
        contradiction: negative && sign < 0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RingStudy {
    pub k: usize,
    pub d: f64,
    pub angle_ok: bool,
    pub signs: SignAudit,
    pub ucp: bool,
    pub inner: InnerReport,
    /// One trace per Dirichlet eigenvalue cluster.
    pub sign_pattern_trace: Vec<ParityTrace>,
}

pub fn ring_study(k: usize, d: f64, tol: &Tolerances) -> Result<RingStudy, SpectraError> {
    let mesh = gen_polygon_ring(k, d)?;
    let sys = assemble(&mesh)?;
    let sp = Spectra::new(&sys, *tol)?;
    let inner = sp.inner_scan();
    let sign_pattern_trace = sp
        .dirichlet
        .clusters
        .iter()
        .map(|c| ring_parity_sweep(&sys, k, c.value))
        .collect();
    Ok(RingStudy {
        k,
        d,
        angle_ok: angle_condition(&mesh)?.holds,
        signs: sign_audit(&sys),
        ucp: inner.ucp,
        inner,
        sign_pattern_trace,
    })
}

pub fn heptagon_study(d: f64, tol: &Tolerances) -> Result<RingStudy, SpectraError> {
    ring_study(7, d, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusRecord {
    pub d: f64,
    pub lambda_in: Option<f64>,
    pub nontrivial: Vec<(f64, usize)>,
    /// Interior node indices with their inner-vector values (max magnitude 1), in angular order.
    pub inner_vector: Vec<(usize, f64)>,
    pub magnitude_spread: f64,
    pub alternating: bool,
    pub combined_nodes: usize,
    pub combined_elements: usize,
    pub extended_residual: f64,
    pub residual_bound: f64,
    pub vanishes_on_patch: bool,
    pub extended_check: bool,
}

/// Inner solution of the annulus and its zero extension into a triangulated inner hexagon.
pub fn annulus_study(d: f64, tol: &Tolerances) -> Result<AnnulusRecord, SpectraError> {
    let host = gen_annulus(d)?;
    let sys = assemble(&host)?;
    let sp = Spectra::new(&sys, *tol)?;
    let report = sp.inner_scan();
    let nontrivial: Vec<(f64, usize)> = report
        .nontrivial()
        .map(|e| (e.lambda, e.dim_inner))
        .collect();
    let patch = inner_hexagon_patch();
    let shared = match_boundary(&host, &patch)?;
    let combined = embed(&host, &patch, &shared)?;
    let mut record = AnnulusRecord {
        d,
        lambda_in: None,
        nontrivial: nontrivial.clone(),
        inner_vector: vec![],
        magnitude_spread: f64::INFINITY,
        alternating: false,
        combined_nodes: combined.n_nodes(),
        combined_elements: combined.n_elements(),
        extended_residual: f64::INFINITY,
        residual_bound: 0.0,
        vanishes_on_patch: false,
        extended_check: false,
    };
    let Some(entry) = report.entries.iter().find(|e| e.dim_inner == 1) else {
        return Ok(record);
    };
    let lambda = entry.lambda;
    record.lambda_in = Some(lambda);

    let interior = &sys.partition.interior;
    let u = &entry.basis[0];
    let scale = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let nodes = host.nodes();
    let mut ring: Vec<(usize, f64)> = interior
        .iter()
        .zip(u)
        .map(|(&i, &x)| (i, x / scale))
        .collect();
    ring.sort_by(|a, b| {
        nodes[a.0]
            .y
            .atan2(nodes[a.0].x)
            .total_cmp(&nodes[b.0].y.atan2(nodes[b.0].x))
    });
    let (lo, hi) = ring
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &(_, x)| {
            (lo.min(x.abs()), hi.max(x.abs()))
        });
    record.magnitude_spread = (hi - lo) / hi;
    record.alternating = (0..ring.len()).all(|t| {
        let (a, b) = (ring[t], ring[(t + 1) % ring.len()]);
        a.1 * b.1 < 0.0 && sys.m[(a.0, b.0)] > 0.0
    });
    record.inner_vector = ring.clone();

    let big = assemble(&combined)?;
    let mut ext = DVector::zeros(combined.n_nodes());
    for &(i, x) in &ring {
        ext[i] = x;
    }
    let shared_patch: Vec<usize> = shared.iter().map(|&(_, h)| h).collect();
    record.vanishes_on_patch = (host.n_nodes()..combined.n_nodes())
        .chain(shared_patch)
        .all(|i| ext[i] == 0.0);
    record.extended_residual = (big.pencil(lambda) * &ext).norm();
    record.residual_bound = 1e-9 * linalg::spectral_norm(&big.a);
    record.extended_check =
        record.vanishes_on_patch && record.extended_residual <= record.residual_bound;
    Ok(record)
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorRecord {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub ucp: bool,
    pub dirichlet_clusters: usize,
    pub max_inner_dim: usize,
    pub certificate: bool,
    pub leaked_edges: usize,
    pub flagged: bool,
}

pub fn tensor_study(
    xs: &[f64],
    ys: &[f64],
    tol: &Tolerances,
) -> Result<TensorRecord, SpectraError> {
    let mesh = gen_tensor_product(xs, ys)?;
    let sys = assemble(&mesh)?;
    let report = Spectra::new(&sys, *tol)?.inner_scan();
    let g = build_graph(&sys);
    let grid = crate::graph::TensorGrid::detect(&mesh)
        .map_err(|e| SpectraError::Parameter(e.to_string()))?;
    let cert =
        tensor_leaky_certificate(&g, &mesh).map_err(|e| SpectraError::Parameter(e.to_string()))?;
    Ok(TensorRecord {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        ucp: report.ucp,
        dirichlet_clusters: report.entries.len(),
        max_inner_dim: report.max_dim(),
        certificate: cert.forced_all,
        leaked_edges: crate::graph::axis_parallel_edges(&g, &grid).len(),
        flagged: report.flagged,
    })
}

/// Interlacing records at `n` evenly spaced points of `[a, b]` and at every eigenvalue location, in λ order.
pub fn interlace_sweep(sp: &Spectra, a: f64, b: f64, n: usize) -> Vec<InterlaceRecord> {
    let mut lambdas: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .chain(sp.eigenvalue_locations())
        .collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    lambdas.into_iter().map(|l| sp.interlace(l)).collect()
}

/// Interlacing records at `count` seeded uniform λ in `(0, max Neumann eigenvalue)`, in λ order.
pub fn interlace_random(sp: &Spectra, count: usize, seed: u64) -> Vec<InterlaceRecord> {
    let top = sp.neumann.values.last().copied().unwrap_or(1.0);
    let mut r = rng::seeded(seed);
    let mut lambdas: Vec<f64> = (0..count)
        .map(|_| rng::uniform(&mut r, f64::MIN_POSITIVE, top))
        .collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.into_iter().map(|l| sp.interlace(l)).collect()
}

/// Named fixture meshes used by the sweeps. Tensor grids draw their spacing from `seed`.
pub fn fixtures(seed: u64) -> Result<Vec<(String, Mesh)>, SpectraError> {
    let mut out = vec![
        ("hex-ring".to_string(), gen_polygon_ring(6, 3.0)?),
        ("hex-split".to_string(), gen_hexagon_split(3.0)?),
        ("heptagon-ring".to_string(), gen_polygon_ring(7, 3.0)?),
        ("annulus".to_string(), gen_annulus(3.0)?),
    ];
    let mut r = rng::seeded(seed);
    for (t, (nx, ny)) in [(4, 3), (5, 4), (6, 5)].into_iter().enumerate() {
        let xs = rng::random_spacing(&mut r, nx);
        let ys = rng::random_spacing(&mut r, ny);
        out.push((format!("tensor-{t}"), gen_tensor_product(&xs, &ys)?));
    }
    Ok(out)
}
