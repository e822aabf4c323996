//! Zero forcing from the boundary, and how many extra vertices it takes to force everything.

use ucp_fem::assembly::assemble;
use ucp_fem::graph::{build_graph, forcing_closure, restricted_zf_excess};
use ucp_fem::mesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let meshes = [
        ("hex-ring", mesh::gen_polygon_ring(6, 3.0)?),
        ("hex-split", mesh::gen_hexagon_split(3.0)?),
        ("annulus", mesh::gen_annulus(3.0)?),
    ];
    for (name, m) in meshes {
        let sys = assemble(&m)?;
        let g = build_graph(&sys);
        let boundary = &sys.partition.boundary;
        let r = forcing_closure(&g, boundary, false)?;
        let excess = restricted_zf_excess(&g, boundary, 3)?;
        println!(
            "{name}: {} of {} vertices forced, excess {excess:?}",
            r.final_blue.len(),
            g.n
        );
        for step in &r.chronicle {
            println!("  {} -> {}", step.forcer, step.forced);
        }
    }
    Ok(())
}
