//! Canonical against microcanonical heat capacity per degree of freedom as f grows.

use esqpt_thermo::canonical::Canonical;
use esqpt_thermo::density::{build_density, EnergyGrid};
use esqpt_thermo::microcanonical::Microcanonical;
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};
use esqpt_thermo::quadrature::Tolerance;

fn main() -> esqpt_thermo::Result<()> {
    println!(
        "{:>3} {:>8} {:>10} {:>10} {:>10}",
        "f", "beta", "C^can/f", "C^mic/f", "gap"
    );
    for f in [3, 4, 5, 15] {
        let mut parts = vec![PotentialComponent::quartic(0.5, -2.0, 1.0)?];
        for _ in 1..f {
            parts.push(PotentialComponent::harmonic(1.0)?);
        }
        let system = SeparableSystem::new(parts)?;
        let canon = Canonical::new(&system);
        let micro = Microcanonical::new(build_density(
            &system,
            EnergyGrid::new(40.0, 4000)?,
            Tolerance::default(),
        )?)?;
        let n = f as f64;
        for beta in [0.5, 1.0, 2.0] {
            let can = canon.heat_capacity(beta)? / n;
            let mic = micro.unique_heat_capacity(beta)? / n;
            println!(
                "{f:>3} {beta:>8} {can:>10.5} {mic:>10.5} {:>10.5}",
                can - mic
            );
        }
    }
    Ok(())
}
