//! The hexagon ring carries a discrete Dirichlet eigenfunction with vanishing normal derivative.

use ucp_fem::spectra::studies::{hexagon_study, lambda_star};
use ucp_fem::spectra::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in [2.8, 3.0, 4.0] {
        let r = hexagon_study(d, &Tolerances::default())?;
        println!("d = {d}");
        println!("  closed form      {:.12}", lambda_star(d)?);
        println!("  assembled        {:.12}", r.lambda_assembled);
        println!("  found            {:?}", r.lambda_found);
        println!(
            "  inner vector     {:?}",
            r.inner_vector.unwrap_or_default()
        );
        println!("  vector error     {:e}", r.vector_error);
        println!("  passed           {}", r.passed);
    }
    Ok(())
}
