//! Stationary points of the all-quartic family and the predicted level-density
//! singularity at each.

use esqpt_thermo::esqpt::enumerate_stationary_points;
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};

fn main() -> esqpt_thermo::Result<()> {
    let system = SeparableSystem::new(
        (1..=3)
            .map(|i| PotentialComponent::quartic(i as f64 / 5.0, -2.0, 1.0))
            .collect::<esqpt_thermo::Result<_>>()?,
    )?;
    let points = enumerate_stationary_points(&system)?;
    println!("{} stationary points", points.len());
    println!("{:>10} {:>5}  {:<28} prediction", "E", "rank", "q");
    for p in &points {
        let q: Vec<String> = p.configuration.iter().map(|x| format!("{x:+.4}")).collect();
        println!(
            "{:>10.5} {:>5}  {:<28} {} ({:+})",
            p.energy,
            p.rank,
            q.join(" "),
            p.predicted.label(),
            p.predicted.sign()
        );
    }
    for f in [4, 5, 15] {
        let system = SeparableSystem::new(
            (1..=f)
                .map(|i| PotentialComponent::quartic(i as f64 / 5.0, -2.0, 1.0))
                .collect::<esqpt_thermo::Result<_>>()?,
        )?;
        println!(
            "f = {f}: {} points",
            enumerate_stationary_points(&system)?.len()
        );
    }
    Ok(())
}
