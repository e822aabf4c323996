//! Dirichlet and Neumann counts against the inertia of the reduced DtN map.

use ucp_fem::assembly::assemble;
use ucp_fem::mesh;
use ucp_fem::spectra::studies::interlace_sweep;
use ucp_fem::spectra::{Spectra, Tolerances};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = assemble(&mesh::gen_polygon_ring(6, 3.0)?)?;
    let sp = Spectra::new(&sys, Tolerances::default())?;
    println!(
        "{:>12} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4}  ok",
        "lambda", "N_N", "N_D", "m_N", "m_D", "m_in", "n-", "iinf"
    );
    for r in interlace_sweep(&sp, 0.0, 30.0, 7) {
        println!(
            "{:>12.6} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4}  {}",
            r.lambda,
            r.n_n,
            r.n_d,
            r.m_n,
            r.m_d,
            r.m_in,
            r.n_minus_dtn,
            r.i_infinity,
            r.identity_holds && r.codim_holds
        );
    }
    Ok(())
}
