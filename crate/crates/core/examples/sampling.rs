//! Draw nodes from a mixture and compare frequencies with the exact law.
//!
//! ```text
//! cargo run --example sampling
//! ```

use netevo::events::build_graph;
use netevo::generator::Sampler;
use netevo::models::{node_probability, Exclusion};
use netevo::{EdgeEvent, ModelSpec, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> netevo::Result<()> {
    // a star on 0 plus a triangle hanging off node 1
    let events = [
        EdgeEvent::new_node(vec![NodeId(0)], 0),
        EdgeEvent::new_node(vec![NodeId(0)], 1),
        EdgeEvent::new_node(vec![NodeId(0)], 2),
        EdgeEvent::new_node(vec![NodeId(1)], 3),
        EdgeEvent::new_node(vec![NodeId(1), NodeId(4)], 4),
    ];
    let g = build_graph(&events)?;
    let spec: ModelSpec = "0.5*pfp(0.2) + 0.3*triangle + 0.2*singleton".parse()?;

    let sampler = Sampler::new(spec.components(), &g);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws = 200_000;
    let mut counts = vec![0usize; g.node_count()];
    for _ in 0..draws {
        counts[sampler.sample(&spec, &g, &Exclusion::None, &mut rng)?.index()] += 1;
    }
    println!("node degree  exact    sampled");
    for v in g.nodes() {
        let p = node_probability(&spec, v, &g, &[])?;
        println!("{:>4} {:>6}  {p:.4}   {:.4}", v, g.degree(v), counts[v.index()] as f64 / draws as f64);
    }
    Ok(())
}
