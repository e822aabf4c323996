//! On the heptagon ring an odd cycle defeats the alternating sign pattern.

use ucp_fem::spectra::studies::heptagon_study;
use ucp_fem::spectra::Tolerances;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = heptagon_study(3.0, &Tolerances::default())?;
    println!("angle condition       {}", r.angle_ok);
    println!("off-diagonals <= 0    {}", r.signs.offdiag_nonpositive);
    println!("unique continuation   {}", r.ucp);
    for t in &r.sign_pattern_trace {
        let signs: Vec<i8> = t.steps.iter().map(|s| s.sign).collect();
        println!(
            "lambda {:>10.6}: signs {signs:?} contradiction {}",
            t.lambda, t.contradiction
        );
    }
    Ok(())
}
