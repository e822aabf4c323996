//! Eigenvalue counting and the Dirichlet/Neumann interlacing identities.

use serde::Serialize;

use super::{linalg, Spectra, SpectraError, Tolerances};
use crate::assembly::AssembledSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Counts {
    /// Neumann eigenvalues strictly below lambda.
    pub n_n: usize,
    /// Dirichlet eigenvalues strictly below lambda.
    pub n_d: usize,
    pub m_n: usize,
    pub m_d: usize,
    /// The inertia route and the eigenvalue route gave the same four numbers.
    pub routes_agree: bool,
    pub flagged: bool,
}

pub(super) fn counts(sp: &Spectra, lambda: f64) -> Counts {
    let zt = sp.zero_tol(lambda);
    let full = linalg::inertia(&sp.sys.pencil(lambda), zt);
    let c = sp.sys.pencil_blocks(lambda);
    let inner = linalg::inertia(&c.ii, zt);
    let eig = (
        sp.neumann.count_below(lambda, &sp.tol),
        sp.dirichlet.count_below(lambda, &sp.tol),
        sp.neumann.multiplicity_at(lambda, &sp.tol),
        sp.dirichlet.multiplicity_at(lambda, &sp.tol),
    );
    let routes_agree = (full.minus, inner.minus, full.zero, inner.zero) == eig;
    Counts {
        n_n: full.minus,
        n_d: inner.minus,
        m_n: full.zero,
        m_d: inner.zero,
        routes_agree,
        flagged: full.near_threshold || inner.near_threshold || !routes_agree,
    }
}

pub fn counting(
    sys: &AssembledSystem,
    lambda: f64,
    tol: &Tolerances,
) -> Result<Counts, SpectraError> {
    Ok(counts(&Spectra::new(sys, *tol)?, lambda))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterlaceRecord {
    pub lambda: f64,
    pub n_n: usize,
    pub n_d: usize,
    pub m_n: usize,
    pub m_d: usize,
    pub m_in: usize,
    pub n_minus_dtn: usize,
    pub n_zero_dtn: usize,
    pub i_infinity: usize,
    /// `N_N - N_D = n_-(Λ) + m_D - m_in` and `m_N = n_0(Λ) + m_in`.
    pub identity_holds: bool,
    /// `i_inf = m_D - m_in`.
    pub codim_holds: bool,
    pub flagged: bool,
}

pub(super) fn record(sp: &Spectra, lambda: f64) -> InterlaceRecord {
    let c = counts(sp, lambda);
    let inner = sp.inner_space(lambda);
    let op = sp.dtn(lambda);
    let di = op.inertia(sp.zero_tol(lambda));
    let m_in = inner.dim();
    let lhs = c.n_n as isize - c.n_d as isize;
    let rhs = di.minus as isize + c.m_d as isize - m_in as isize;
    InterlaceRecord {
        lambda,
        n_n: c.n_n,
        n_d: c.n_d,
        m_n: c.m_n,
        m_d: c.m_d,
        m_in,
        n_minus_dtn: di.minus,
        n_zero_dtn: di.zero,
        i_infinity: op.i_infinity,
        identity_holds: lhs == rhs && c.m_n == di.zero + m_in,
        codim_holds: op.i_infinity as isize == c.m_d as isize - m_in as isize,
        flagged: c.flagged || inner.flagged || op.flagged || di.near_threshold,
    }
}

pub fn interlace(
    sys: &AssembledSystem,
    lambda: f64,
    tol: &Tolerances,
) -> Result<InterlaceRecord, SpectraError> {
    Ok(record(&Spectra::new(sys, *tol)?, lambda))
}
