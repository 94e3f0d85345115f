//! Power-law potentials: C^can = M and C^mic = M - 1 at every temperature.

use esqpt_thermo::canonical::Canonical;
use esqpt_thermo::density::{density_power_law, EnergyGrid, LevelDensity, PowerLawSpec, PowerTerm};
use esqpt_thermo::microcanonical::Microcanonical;
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};

fn main() -> esqpt_thermo::Result<()> {
    // Two harmonic, one quartic and one linear-in-|q| degree of freedom.
    let terms = [(1.0, 2.0), (0.5, 2.0), (1.0, 4.0), (2.0, 1.0)];
    let system = SeparableSystem::new(
        terms
            .iter()
            .map(|&(b, i)| PotentialComponent::power(b, i))
            .collect::<esqpt_thermo::Result<_>>()?,
    )?;
    let spec = PowerLawSpec::separable(
        terms
            .iter()
            .map(|&(b, i)| PowerTerm::standard(b, i))
            .collect(),
    )?;
    let m = spec.exponent();
    println!("M = {m}");

    let canon = Canonical::new(&system);
    let grid = EnergyGrid::new(20.0 * (m - 1.0), 4000)?;
    let density = LevelDensity::tabulate(0.0, grid, vec![], spec.dof(), |e| {
        density_power_law(&spec, e)
    })?;
    let micro = Microcanonical::new(density)?;

    println!("{:>6} {:>12} {:>12}", "beta", "C^can", "C^mic");
    for beta in [0.5, 1.0, 2.0, 4.0] {
        println!(
            "{beta:>6} {:>12.8} {:>12.8}",
            canon.heat_capacity(beta)?,
            micro.unique_heat_capacity(beta)?
        );
    }
    Ok(())
}
