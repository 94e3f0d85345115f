//! Locate and classify non-analyticities of a numerically built level density.

use esqpt_thermo::density::{build_density, EnergyGrid};
use esqpt_thermo::esqpt::{
    detect_nonanalyticity, enumerate_stationary_points, predict_plateau_singularities,
    predict_singularities,
};
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};
use esqpt_thermo::quadrature::Tolerance;

fn main() -> esqpt_thermo::Result<()> {
    let system = SeparableSystem::new(vec![
        PotentialComponent::quartic(0.5, -2.0, 1.0)?,
        PotentialComponent::harmonic(1.0)?,
        PotentialComponent::harmonic(1.0)?,
    ])?;
    let density = build_density(&system, EnergyGrid::new(10.0, 4000)?, Tolerance::default())?;
    let predicted = predict_singularities(&enumerate_stationary_points(&system)?, system.dof());
    println!("double well + 2 oscillators, h = {:.4}", density.spacing());
    for s in &predicted {
        let r = detect_nonanalyticity(&density, s.energy, s.order)?;
        println!(
            "  E_c = {:.4}  predicted {} ({:+})  detected {} ({:+}) at {:.4}",
            s.energy,
            s.kind.label(),
            s.kind.sign(),
            r.detected.label(),
            r.sign,
            r.located_energy
        );
    }

    let plateaus = [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
    let mut parts = vec![PotentialComponent::plateau(&plateaus)?];
    for _ in 0..3 {
        parts.push(PotentialComponent::harmonic(1.0)?);
    }
    let system = SeparableSystem::new(parts)?;
    let density = build_density(&system, EnergyGrid::new(6.0, 4000)?, Tolerance::default())?;
    println!("3-plateau well + 3 oscillators");
    for s in predict_plateau_singularities(&plateaus, system.dof()) {
        let r = detect_nonanalyticity(&density, s.energy, s.order)?;
        println!(
            "  E_k = {}  order {}  detected {} with amplitude {:.3}",
            s.energy,
            s.order,
            r.detected.label(),
            r.amplitude
        );
    }
    Ok(())
}
