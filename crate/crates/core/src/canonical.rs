//! Canonical ensemble from configuration-space integrals.
//!
//! The momentum integrals are Gaussian and done analytically, so
//! `Z = prod_i Z_i / sqrt(2 pi beta)` with `Z_i = int exp(-beta V_i) dq`.
//! Cumulants of the potential energy are additive over components.

use crate::density::Estimate;
use crate::error::{check_beta, Error, Result};
use crate::finite_diff::richardson_derivative;
use crate::potential::{PotentialComponent, SeparableSystem};
use crate::quadrature::{fixed_rule, integrate, integrate_with_panels, Tolerance};
use crate::special::bessel_i_scaled;

/// Largest `beta V` kept in configuration integrals; `exp(-746)` underflows.
pub const TRUNCATION: f64 = 746.0;

/// Thermal statistics of one component's potential energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMoments {
    /// `ln int exp(-beta V) dq`.
    pub ln_z: f64,
    pub mean: f64,
    pub variance: f64,
    /// Third central moment.
    pub third: f64,
}

/// Mean, dispersion and third central moment of the total potential energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalMoments {
    pub beta: f64,
    pub mean: f64,
    pub dispersion: f64,
    pub third: f64,
}

impl ThermalMoments {
    /// `<E>` including the kinetic energy of `dof` quadratic momenta.
    pub fn energy_mean(&self, dof: usize) -> f64 {
        0.5 * dof as f64 / self.beta + self.mean
    }

    pub fn energy_dispersion(&self, dof: usize) -> f64 {
        0.5 * dof as f64 / (self.beta * self.beta) + self.dispersion
    }

    pub fn energy_third(&self, dof: usize) -> f64 {
        dof as f64 / self.beta.powi(3) + self.third
    }

    /// `(<dV^3> / <dV^2>^(3/2))`, zero when the dispersion vanishes.
    pub fn skewness(&self) -> f64 {
        if self.dispersion > 0.0 {
            self.third / self.dispersion.powf(1.5)
        } else {
            0.0
        }
    }
}

fn breakpoints(component: &PotentialComponent, beta: f64) -> Vec<f64> {
    let cut = TRUNCATION / beta;
    match component {
        PotentialComponent::Polynomial(w) => {
            let mut pts: Vec<f64> = w
                .sublevel_pieces(cut)
                .iter()
                .flat_map(|p| [p.start, p.end])
                .collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            pts
        }
        PotentialComponent::Power(p) => {
            let r = (cut / p.coefficient).powf(1.0 / p.exponent);
            vec![-r, 0.0, r]
        }
        PotentialComponent::Plateau(_) => Vec::new(),
    }
}

/// Thermal statistics of a single component at inverse temperature `beta`.
pub fn component_moments(
    component: &PotentialComponent,
    beta: f64,
    tol: Tolerance,
) -> Result<ComponentMoments> {
    check_beta(beta)?;
    if let PotentialComponent::Plateau(w) = component {
        let pairs = w.energy_lengths();
        let e0 = pairs[0].0;
        let weights: Vec<f64> = pairs
            .iter()
            .map(|&(e, l)| l * (-beta * (e - e0)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let shift: f64 = pairs
            .iter()
            .zip(&weights)
            .map(|(p, w)| w * (p.0 - e0))
            .sum::<f64>()
            / z;
        let mean = e0 + shift;
        let central = |k: i32| -> f64 {
            pairs
                .iter()
                .zip(&weights)
                .map(|(p, w)| w * (p.0 - e0 - shift).powi(k))
                .sum::<f64>()
                / z
        };
        return Ok(ComponentMoments {
            ln_z: z.ln() - beta * e0,
            mean,
            variance: central(2),
            third: central(3),
        });
    }
    let pts = breakpoints(component, beta);
    let weight = |q: f64| (-beta * component.eval(q)).exp();
    let z = integrate(weight, &pts, tol)?.value;
    let mean = integrate(|q| component.eval(q) * weight(q), &pts, tol)?.value / z;
    let variance = integrate(
        |q| (component.eval(q) - mean).powi(2) * weight(q),
        &pts,
        tol,
    )?
    .value
        / z;
    let third_tol = Tolerance {
        abs: tol.rel * z * variance.powf(1.5),
        ..tol
    };
    let third = integrate(
        |q| (component.eval(q) - mean).powi(3) * weight(q),
        &pts,
        third_tol,
    )?
    .value
        / z;
    Ok(ComponentMoments {
        ln_z: z.ln(),
        mean,
        variance,
        third,
    })
}

/// Canonical quantities of a separable system.
#[derive(Debug, Clone, Copy)]
pub struct Canonical<'a> {
    system: &'a SeparableSystem,
    tol: Tolerance,
}

impl<'a> Canonical<'a> {
    pub fn new(system: &'a SeparableSystem) -> Self {
        Self {
            system,
            tol: Tolerance::relative(1e-13),
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn system(&self) -> &SeparableSystem {
        self.system
    }

    pub fn component_moments(&self, beta: f64) -> Result<Vec<ComponentMoments>> {
        self.system
            .components()
            .iter()
            .map(|c| component_moments(c, beta, self.tol))
            .collect()
    }

    pub fn moments(&self, beta: f64) -> Result<ThermalMoments> {
        let parts = self.component_moments(beta)?;
        Ok(ThermalMoments {
            beta,
            mean: parts.iter().map(|m| m.mean).sum(),
            dispersion: parts.iter().map(|m| m.variance).sum(),
            third: parts.iter().map(|m| m.third).sum(),
        })
    }

    /// Raw moment `<V^n>`, `n` in `1..=3`.
    pub fn config_moment(&self, n: usize, beta: f64) -> Result<f64> {
        let m = self.moments(beta)?;
        let (k1, k2, k3) = (m.mean, m.dispersion, m.third);
        match n {
            1 => Ok(k1),
            2 => Ok(k2 + k1 * k1),
            3 => Ok(k3 + 3.0 * k2 * k1 + k1 * k1 * k1),
            _ => Err(Error::InvalidParameter(format!(
                "moment order {n} not in 1..=3"
            ))),
        }
    }

    pub fn ln_partition_function(&self, beta: f64) -> Result<f64> {
        let parts = self.component_moments(beta)?;
        Ok(self.ln_z_from_parts(beta, parts.iter().map(|m| m.ln_z).sum()))
    }

    fn ln_z_from_parts(&self, beta: f64, config: f64) -> f64 {
        config - 0.5 * self.system.dof() as f64 * (2.0 * std::f64::consts::PI * beta).ln()
    }

    pub fn partition_function(&self, beta: f64) -> Result<f64> {
        self.ln_partition_function(beta).map(f64::exp)
    }

    /// `f/2 + beta^2 <dV^2>`.
    pub fn heat_capacity(&self, beta: f64) -> Result<f64> {
        let m = self.moments(beta)?;
        Ok(0.5 * self.system.dof() as f64 + beta * beta * m.dispersion)
    }

    /// `beta^2 d^2 ln Z / d beta^2` by central differences with step
    /// `beta * 1e-3` and one Richardson step. Configuration integrals use
    /// panels refined once at `beta` and then held fixed, which keeps the
    /// differenced values smooth.
    pub fn heat_capacity_from_ln_z(&self, beta: f64) -> Result<Estimate> {
        check_beta(beta)?;
        let step = beta * 1e-3;
        let mut plateaus = Vec::new();
        let mut numeric = Vec::new();
        for c in self.system.components() {
            match c {
                PotentialComponent::Plateau(w) => plateaus.push(w.energy_lengths()),
                other => {
                    let pts = breakpoints(other, beta);
                    let (_, panels) =
                        integrate_with_panels(|q| (-beta * other.eval(q)).exp(), &pts, self.tol)?;
                    numeric.push((other, panels));
                }
            }
        }
        if 2.0 * step >= beta {
            return Err(Error::InvalidParameter(
                "finite-difference step too large".into(),
            ));
        }
        let ln_z = |b: f64| -> f64 {
            let mut config = 0.0;
            for (c, panels) in &numeric {
                config += fixed_rule(|q| (-b * c.eval(q)).exp(), panels).ln();
            }
            for pairs in &plateaus {
                let e0 = pairs[0].0;
                let z: f64 = pairs.iter().map(|&(e, l)| l * (-b * (e - e0)).exp()).sum();
                config += z.ln() - b * e0;
            }
            self.ln_z_from_parts(b, config)
        };
        let (d2, err) = richardson_derivative(&ln_z, beta, 2, step);
        Ok(Estimate {
            value: beta * beta * d2,
            error: beta * beta * err,
        })
    }

    /// `dC/d beta = 2 beta <dE^2> - beta^2 <dE^3>`.
    ///
    /// The kinetic cumulants `f / (2 beta^2)` and `f / beta^3` cancel exactly,
    /// so only the potential moments are used.
    pub fn dc_dbeta(&self, beta: f64) -> Result<f64> {
        let m = self.moments(beta)?;
        Ok(2.0 * beta * m.dispersion - beta * beta * m.third)
    }

    /// Finite-difference `dC/d beta` from [`Canonical::heat_capacity`].
    pub fn dc_dbeta_numeric(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let step = beta * 1e-3;
        let c = |b: f64| self.heat_capacity(b).unwrap_or(f64::NAN);
        let (d, _) = richardson_derivative(&c, beta, 1, step);
        if d.is_finite() {
            Ok(d)
        } else {
            self.heat_capacity(beta).map(|_| d)
        }
    }

    /// `C^can` in the limits `beta -> 0` and `beta -> infinity`.
    pub fn capacity_limits(&self) -> CapacityLimits {
        let f = self.system.dof() as f64;
        let mut high = 0.5 * f;
        let mut low = 0.5 * f;
        for c in self.system.components() {
            match c {
                PotentialComponent::Plateau(_) => {}
                PotentialComponent::Power(p) => {
                    high += 1.0 / p.exponent;
                    low += 1.0 / p.exponent;
                }
                PotentialComponent::Polynomial(w) => {
                    let (a, b, c4) = w.coefficients();
                    high += if w.is_quadratic() { 0.5 } else { 0.25 };
                    low += if a == 0.0 && b == 0.0 && c4 > 0.0 {
                        0.25
                    } else {
                        0.5
                    };
                }
            }
        }
        CapacityLimits {
            high_temperature: high,
            low_temperature: low,
        }
    }
}

/// Analytic endpoints of `C^can(beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityLimits {
    pub high_temperature: f64,
    pub low_temperature: f64,
}

/// `<V^n>` at default tolerance.
pub fn config_moment(system: &SeparableSystem, n: usize, beta: f64) -> Result<f64> {
    Canonical::new(system).config_moment(n, beta)
}

pub fn partition_function(system: &SeparableSystem, beta: f64) -> Result<f64> {
    Canonical::new(system).partition_function(beta)
}

pub fn heat_capacity_canonical(system: &SeparableSystem, beta: f64) -> Result<f64> {
    Canonical::new(system).heat_capacity(beta)
}

pub fn heat_capacity_from_ln_z(system: &SeparableSystem, beta: f64) -> Result<f64> {
    Canonical::new(system)
        .heat_capacity_from_ln_z(beta)
        .map(|e| e.value)
}

pub fn dc_dbeta(system: &SeparableSystem, beta: f64) -> Result<f64> {
    Canonical::new(system).dc_dbeta(beta)
}

/// `int exp(-beta (x^4 - 2 x^2)) dx = (pi/2) e^(beta/2) [I_(-1/4)(beta/2) + I_(1/4)(beta/2)]`.
///
/// This is the configuration factor of the unshifted potential; the shifted
/// component `x^4 - 2 x^2 + 1` carries an extra `exp(-beta)`.
pub fn closed_form_z_degenerate_double_well(beta: f64) -> Result<f64> {
    symmetric_double_well_config_integral(-2.0, 1.0, beta)
}

/// `int exp(-beta (b x^2 + c x^4)) dx` for `b < 0 < c`.
pub fn symmetric_double_well_config_integral(b: f64, c: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(b < 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "closed form needs b < 0 < c, got b = {b}, c = {c}"
        )));
    }
    let x = beta * b * b / (8.0 * c);
    let scale = (b.abs() / (2.0 * c)).sqrt();
    // e^x I_nu(x) = e^(2x) * (e^-x I_nu(x)).
    let bessel = bessel_i_scaled(-0.25, x) + bessel_i_scaled(0.25, x);
    Ok(0.5 * std::f64::consts::PI * scale * (2.0 * x).exp() * bessel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(c: PotentialComponent) -> SeparableSystem {
        SeparableSystem::new(vec![c]).unwrap()
    }

    #[test]
    fn equipartition_examples() {
        let h = single(PotentialComponent::harmonic(1.0).unwrap());
        let q = single(PotentialComponent::quartic(0.0, 0.0, 1.0).unwrap());
        for beta in [0.3, 1.0, 7.0] {
            assert_relative_eq!(
                config_moment(&h, 1, beta).unwrap(),
                0.5 / beta,
                max_relative = 1e-11
            );
            assert_relative_eq!(
                config_moment(&q, 1, beta).unwrap(),
                0.25 / beta,
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn equal_plateaus_have_no_dispersion() {
        let s = single(PotentialComponent::plateau(&[(0.7, 1.0), (0.7, 2.0), (0.7, 0.5)]).unwrap());
        for beta in [0.1, 2.0, 30.0] {
            let m = Canonical::new(&s).moments(beta).unwrap();
            assert_eq!(m.dispersion, 0.0);
            assert_relative_eq!(
                config_moment(&s, 3, beta).unwrap(),
                0.7f64.powi(3),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn harmonic_partition_function() {
        let h = single(PotentialComponent::harmonic(1.0).unwrap());
        for beta in [0.2, 1.0, 5.0] {
            assert_relative_eq!(
                partition_function(&h, beta).unwrap(),
                1.0 / (2f64.sqrt() * beta),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                heat_capacity_from_ln_z(&h, beta).unwrap(),
                1.0,
                max_relative = 1e-8
            );
            assert!(dc_dbeta(&h, beta).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_closed_form_limits() {
        let raw = |beta: f64| {
            integrate(
                |x: f64| (-beta * (x.powi(4) - 2.0 * x * x)).exp(),
                &[-6.0, -1.0, 0.0, 1.0, 6.0],
                Tolerance::relative(1e-14),
            )
            .unwrap()
            .value
        };
        assert_relative_eq!(
            closed_form_z_degenerate_double_well(1.0).unwrap(),
            raw(1.0),
            max_relative = 1e-12
        );
        let beta = 10.0f64;
        let laplace = 2.0 * beta.exp() * (std::f64::consts::PI / (4.0 * beta)).sqrt();
        let z = closed_form_z_degenerate_double_well(beta).unwrap();
        // The leading anharmonic correction is about 2.15% at beta = 10.
        assert!((z / laplace - 1.0).abs() < 0.025);
        // Quartic dominance: beta^(1/4) Z tends to 2 Gamma(5/4).
        let small = 1e-6f64;
        let lim = 2.0 * statrs::function::gamma::gamma(1.25);
        assert_relative_eq!(
            small.powf(0.25) * closed_form_z_degenerate_double_well(small).unwrap(),
            lim,
            max_relative = 1e-2
        );
        assert!(closed_form_z_degenerate_double_well(0.0).is_err());
    }

    #[test]
    fn rejects_non_positive_beta() {
        let h = single(PotentialComponent::harmonic(1.0).unwrap());
        assert_eq!(
            heat_capacity_canonical(&h, 0.0),
            Err(Error::NonPositiveBeta(0.0))
        );
        assert!(partition_function(&h, -1.0).is_err());
    }
}
