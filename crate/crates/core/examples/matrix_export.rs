//! Writes the assembled matrices and their blocks as Matrix Market files, then reads one back.

use ucp_fem::assembly::assemble;
use ucp_fem::{io, mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = mesh::gen_hexagon_split(3.0)?;
    let sys = assemble(&m)?;
    let dir = std::env::temp_dir().join("ucp-fem-export");
    let files = io::export_system(&dir, &sys)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    for f in &files {
        println!("  {f}");
    }
    let a = io::read_matrix_market(std::fs::File::open(dir.join("A.mtx"))?)?;
    println!("A round trip exact: {}", a == sys.a);
    io::write_mesh(&dir.join("mesh.json"), &m)?;
    println!(
        "mesh round trip exact: {}",
        io::read_mesh(&dir.join("mesh.json"))? == m
    );
    Ok(())
}
