//! Three uncoupled double wells: multivalued microcanonical temperature,
//! negative C^mic and a bimodal energy distribution near beta = 2.45.

use esqpt_thermo::density::{build_density, EnergyGrid};
use esqpt_thermo::microcanonical::{ExtremumKind, Microcanonical, RootLocation};
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};
use esqpt_thermo::quadrature::Tolerance;

fn main() -> esqpt_thermo::Result<()> {
    let system = SeparableSystem::new(
        [0.2, 0.4, 0.6]
            .iter()
            .map(|&a| PotentialComponent::quartic(a, -2.0, 1.0))
            .collect::<esqpt_thermo::Result<_>>()?,
    )?;
    let density = build_density(&system, EnergyGrid::new(8.0, 4000)?, Tolerance::default())?;
    let micro = Microcanonical::new(density)?;

    for t in micro.curve().turning_points() {
        let kind = if t.maximum { "max" } else { "min" };
        println!(
            "beta_mic turning point ({kind}) at E = {:.4}, beta = {:.4}",
            t.energy, t.beta
        );
    }

    println!("{:>8} {:>10} {:>14} {:>10}", "beta", "E", "C^mic", "branch");
    for k in 0..=8 {
        let beta = 2.444 + 0.0025 * k as f64;
        for c in micro.heat_capacity(beta)? {
            let branch = match c.location {
                RootLocation::Branch(b) => format!("n{b}"),
                RootLocation::Window(w) => format!("window-{w}"),
            };
            println!(
                "{beta:>8.4} {:>10.5} {:>14.4} {branch:>10}",
                c.energy, c.value
            );
        }
    }

    let w = micro.distribution(2.45)?;
    println!("w at beta = 2.45:");
    for e in &w.extrema {
        let kind = match e.kind {
            ExtremumKind::Maximum => "maximum",
            ExtremumKind::Minimum => "minimum",
        };
        println!("  {kind} at E = {:.4} (w/w_max = {:.4})", e.energy, e.value);
    }
    Ok(())
}
