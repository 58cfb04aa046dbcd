//! Recover mixture weights and a PFP exponent from synthetic data.
//!
//! ```text
//! cargo run --release --example fitting
//! ```

use netevo::estimation::{fit_model, Family, FitConfig, Role};
use netevo::generator::{grow, CountDistribution, OuterModel};
use netevo::likelihood::SpecPair;
use netevo::{EvolvingGraph, ModelSpec};

fn main() -> netevo::Result<()> {
    let truth: ModelSpec = "0.6*pfp(0.05) + 0.4*null".parse()?;
    let outer = OuterModel::empirical(CountDistribution::point(1), CountDistribution::point(0))?;
    let g0 = EvolvingGraph::with_root();
    let events = grow(&g0, &outer, &SpecPair::same(truth.clone()), 20_000, 3)?.events;

    let cfg = FitConfig::default().with_candidates(&[Family::Null, Family::Pfp]).with_role(Role::NewNode);
    let fit = fit_model(&g0, &events, &cfg)?;
    println!("true   {truth}");
    println!("fitted {}", fit.spec);
    println!("c0 {:.4}, {} grid points, {} EM iterations", fit.report.c0, fit.evaluated, fit.trace.len() - 1);
    Ok(())
}
