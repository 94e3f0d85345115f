//! Degenerate double well x^4 - 2x^2: Bessel closed form against quadrature,
//! and the canonical heat capacity from moments and from ln Z.

use std::f64::consts::PI;

use esqpt_thermo::canonical::{closed_form_z_degenerate_double_well, Canonical};
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};

fn main() -> esqpt_thermo::Result<()> {
    let system = SeparableSystem::new(vec![PotentialComponent::quartic(0.0, -2.0, 1.0)?])?;
    let canon = Canonical::new(&system);
    println!(
        "{:>6} {:>16} {:>10} {:>10} {:>10}",
        "beta", "config Z", "rel err", "C", "C(lnZ)"
    );
    for beta in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let exact = closed_form_z_degenerate_double_well(beta)?;
        // Strip the kinetic factor and the +1 shift of the component.
        let numeric =
            canon.partition_function(beta)? * 2.0 * PI * (beta / (2.0 * PI)).sqrt() * beta.exp();
        println!(
            "{beta:>6} {exact:>16.10e} {:>10.1e} {:>10.6} {:>10.6}",
            (numeric - exact).abs() / exact,
            canon.heat_capacity(beta)?,
            canon.heat_capacity_from_ln_z(beta)?.value
        );
    }
    Ok(())
}
