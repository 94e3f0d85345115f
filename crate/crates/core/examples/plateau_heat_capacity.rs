//! Potential part of C^can for multi-plateau square wells, with the peaks
//! located from sign changes of dC/d beta.

use esqpt_thermo::canonical::Canonical;
use esqpt_thermo::potential::{PotentialComponent, SeparableSystem};

fn main() -> esqpt_thermo::Result<()> {
    for energies in [
        vec![0.0, 1.0, 2.0],
        vec![0.0, 1.0, 10.0],
        vec![0.0, 1.0, 10.0, 100.0, 1000.0],
    ] {
        let levels: Vec<_> = energies.iter().map(|&e| (e, 1.0)).collect();
        let system = SeparableSystem::new(vec![PotentialComponent::plateau(&levels)?])?;
        let canon = Canonical::new(&system);
        println!("E_k = {energies:?}");
        let betas: Vec<f64> = (0..=2000)
            .map(|i| 10f64.powf(-4.0 + 6.0 * i as f64 / 2000.0))
            .collect();
        let mut prev: Option<(f64, f64)> = None;
        for &beta in &betas {
            let d = canon.dc_dbeta(beta)?;
            if let Some((b0, d0)) = prev {
                if d0.signum() != d.signum() {
                    let t = 1.0 / (0.5 * (b0 + beta));
                    let c = canon.heat_capacity(beta)? - 0.5;
                    let kind = if d0 > 0.0 { "maximum" } else { "minimum" };
                    println!("  {kind:<8} T = {t:>10.4}  C - f/2 = {c:.4}");
                }
            }
            prev = Some((beta, d));
        }
    }
    Ok(())
}
