//! Random node displacements destroy the hexagon's inner solution to first order.

use ucp_fem::spectra::studies::perturbation_trials;
use ucp_fem::spectra::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = perturbation_trials(3.0, 10, 1e-3, 42, &Tolerances::default())?;
    for (i, r) in t.records.iter().enumerate() {
        println!(
            "trial {i:>2}: break {:+.6e}  lhs-rhs {:+.6e}  noise {:.1e}  ucp_after {}",
            r.break_value,
            r.dbreak_lhs - r.dbreak_rhs,
            r.fd_noise,
            r.ucp_after
        );
    }
    println!(
        "condition met {}/{}, ucp after {}/{}",
        t.condition_met, t.trials, t.ucp_after, t.trials
    );
    Ok(())
}
