//! An inner solution on the annulus extends by zero across a filled-in hexagon.

use ucp_fem::spectra::studies::annulus_study;
use ucp_fem::spectra::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = annulus_study(3.0, &Tolerances::default())?;
    println!("lambda            {:?}", r.lambda_in);
    println!("magnitude spread  {:e}", r.magnitude_spread);
    println!("alternating       {}", r.alternating);
    for (node, value) in &r.inner_vector {
        println!("  node {node:>2}  {value:+.6}");
    }
    println!(
        "combined mesh     {} nodes, {} elements",
        r.combined_nodes, r.combined_elements
    );
    println!(
        "residual          {:e} (bound {:e})",
        r.extended_residual, r.residual_bound
    );
    println!("extension holds   {}", r.extended_check);
    Ok(())
}
