//! Obtuse triangles make horizontal couplings positive; those edges leak and cannot force.

use ucp_fem::assembly::assemble;
use ucp_fem::graph::{build_graph, forcing_closure};
use ucp_fem::mesh;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = mesh::gen_aniso_strip();
    let sys = assemble(&m)?;
    let g = build_graph(&sys);
    let nodes = m.nodes();
    for (&(u, v), e) in &g.edges {
        let (p, q) = (nodes[u], nodes[v]);
        println!(
            "({:>4.1},{:>4.1})-({:>4.1},{:>4.1})  a={:+.4}  leaky={}",
            p.x, p.y, q.x, q.y, e.a, e.leaky
        );
    }
    let plain = forcing_closure(&g, &sys.partition.boundary, false)?;
    let leaky = forcing_closure(&g, &sys.partition.boundary, true)?;
    println!("zero forcing from boundary: {}", plain.forced_all);
    println!("leaky forcing from boundary: {}", leaky.forced_all);
    Ok(())
}
