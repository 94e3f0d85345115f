//! Semiclassical level densities.
//!
//! Densities are normalised with the explicit `(2 pi)^-f` phase-space factor,
//! so `rho(E) = (2 pi)^-f  int delta(E - H) dp dq`. A general separable system
//! is tabulated on a uniform grid of cells; each stored value is the mean of
//! `rho` over its cell, obtained from exact cumulative counts, so integrable
//! singularities never meet a pointwise sample.

use rayon::prelude::*;
use statrs::function::beta::beta as beta_fn;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::finite_diff::Stencil;
use crate::potential::{PotentialComponent, SeparableSystem, StationaryKind};
use crate::quadrature::{integrate, Tolerance};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// `H_i = a |p|^J + b |q|^I` for one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub kinetic_coeff: f64,
    pub kinetic_exponent: f64,
    pub potential_coeff: f64,
    pub potential_exponent: f64,
}

impl PowerTerm {
    /// Quadratic kinetic energy `p^2 / 2` with potential `b |q|^I`.
    pub fn standard(b: f64, exponent: f64) -> Self {
        Self {
            kinetic_coeff: 0.5,
            kinetic_exponent: 2.0,
            potential_coeff: b,
            potential_exponent: exponent,
        }
    }
}

/// Hamiltonian with pure power-law kinetic and potential terms.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerLawSpec {
    /// `H = sum_i (a_i |p_i|^J_i + b_i |q_i|^I_i)`.
    Separable(Vec<PowerTerm>),
    /// `H = a |p|^J + b |q|^I` with `f`-dimensional vectors `p`, `q`.
    Rotational { dof: usize, term: PowerTerm },
}

fn check_term(t: &PowerTerm) -> Result<()> {
    let ok = [
        t.kinetic_coeff,
        t.kinetic_exponent,
        t.potential_coeff,
        t.potential_exponent,
    ]
    .iter()
    .all(|x| x.is_finite() && *x > 0.0);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "power-law coefficients and exponents must be positive, got {t:?}"
        )))
    }
}

// int_{R^d} exp(-beta_c |x|^k) d^d x at beta_c = 1.
fn radial_gaussian_like(dim: usize, coeff: f64, exponent: f64) -> f64 {
    let d = dim as f64;
    let sphere = 2.0 * std::f64::consts::PI.powf(0.5 * d) / gamma(0.5 * d);
    sphere * gamma(d / exponent) / exponent * coeff.powf(-d / exponent)
}

impl PowerLawSpec {
    pub fn separable(terms: Vec<PowerTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("f >= 1 required".into()));
        }
        terms.iter().try_for_each(check_term)?;
        Ok(Self::Separable(terms))
    }

    pub fn rotational(dof: usize, term: PowerTerm) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidParameter("f >= 1 required".into()));
        }
        check_term(&term)?;
        Ok(Self::Rotational { dof, term })
    }

    /// The system described by `system`, if every component is a pure power
    /// or quadratic well.
    pub fn from_system(system: &SeparableSystem) -> Option<Self> {
        let terms = system
            .components()
            .iter()
            .map(|c| match c {
                PotentialComponent::Power(p) => {
                    Some(PowerTerm::standard(p.coefficient, p.exponent))
                }
                PotentialComponent::Polynomial(w) if w.is_quadratic() => {
                    Some(PowerTerm::standard(w.coefficients().1, 2.0))
                }
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self::Separable(terms))
    }

    pub fn dof(&self) -> usize {
        match self {
            Self::Separable(t) => t.len(),
            Self::Rotational { dof, .. } => *dof,
        }
    }

    /// Exponent `M` in `Z ~ beta^-M`, `rho ~ E^(M-1)`.
    pub fn exponent(&self) -> f64 {
        match self {
            Self::Separable(terms) => terms
                .iter()
                .map(|t| 1.0 / t.kinetic_exponent + 1.0 / t.potential_exponent)
                .sum(),
            Self::Rotational { dof, term } => {
                let f = *dof as f64;
                f / term.kinetic_exponent + f / term.potential_exponent
            }
        }
    }

    /// Constant `K` in `Z(beta) = K beta^-M`.
    pub fn normalization(&self) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        match self {
            Self::Separable(terms) => terms
                .iter()
                .map(|t| {
                    radial_gaussian_like(1, t.kinetic_coeff, t.kinetic_exponent)
                        * radial_gaussian_like(1, t.potential_coeff, t.potential_exponent)
                        / two_pi
                })
                .product(),
            Self::Rotational { dof, term } => {
                radial_gaussian_like(*dof, term.kinetic_coeff, term.kinetic_exponent)
                    * radial_gaussian_like(*dof, term.potential_coeff, term.potential_exponent)
                    / two_pi.powi(*dof as i32)
            }
        }
    }

    pub fn partition_function(&self, beta: f64) -> Result<f64> {
        crate::error::check_beta(beta)?;
        Ok(self.normalization() * beta.powf(-self.exponent()))
    }

    /// Number of states below `energy`, `K E^M / Gamma(M + 1)`.
    pub fn cumulative(&self, energy: f64) -> f64 {
        if energy <= 0.0 {
            return 0.0;
        }
        let m = self.exponent();
        (self.normalization().ln() + m * energy.ln() - ln_gamma(m + 1.0)).exp()
    }
}

/// `rho(E) = K E^(M-1) / Gamma(M)` for a power-law Hamiltonian.
pub fn density_power_law(spec: &PowerLawSpec, energy: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "power-law density needs E > 0, got {energy}"
        )));
    }
    let m = spec.exponent();
    Ok((spec.normalization().ln() + (m - 1.0) * energy.ln() - ln_gamma(m)).exp())
}

/// Closed-form density of a plateau well plus `f - 1` harmonic oscillators
/// with the given angular frequencies.
pub fn density_plateau(
    dof: usize,
    plateaus: &[(f64, f64)],
    frequencies: &[f64],
    energy: f64,
) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidParameter("f >= 1 required".into()));
    }
    if frequencies.len() != dof - 1 {
        return Err(Error::InvalidParameter(format!(
            "f = {dof} needs {} oscillator frequencies, got {}",
            dof - 1,
            frequencies.len()
        )));
    }
    if frequencies.iter().any(|w| !(*w > 0.0)) || plateaus.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidParameter(
            "frequencies and plateau lengths must be positive".into(),
        ));
    }
    let pi = std::f64::consts::PI;
    if dof == 1 {
        let mut sum = 0.0;
        for &(e_k, l_k) in plateaus {
            if energy > e_k {
                sum += l_k / (2.0 * (energy - e_k)).sqrt();
            } else if energy == e_k {
                return Err(Error::AtStationaryEnergy {
                    energy,
                    stationary: e_k,
                });
            }
        }
        return Ok(sum / pi);
    }
    let n = dof - 1;
    let omega: f64 = frequencies.iter().product();
    let coeff = beta_fn(0.5, n as f64) / (pi * 2f64.sqrt() * gamma(n as f64) * omega);
    let sum: f64 = plateaus
        .iter()
        .filter(|p| energy > p.0)
        .map(|&(e_k, l_k)| l_k * (energy - e_k).powf(n as f64 - 0.5))
        .sum();
    Ok(coeff * sum)
}

/// `int dq (E - V(q))_+^s` for one component, `s > -1`.
pub fn sublevel_integral(
    component: &PotentialComponent,
    energy: f64,
    s: f64,
    tol: Tolerance,
) -> Result<f64> {
    if !(s > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent s = {s} must exceed -1"
        )));
    }
    match component {
        PotentialComponent::Plateau(w) => Ok(w
            .energy_lengths()
            .iter()
            .filter(|p| energy > p.0)
            .map(|&(e_k, l_k)| l_k * (energy - e_k).powf(s))
            .sum()),
        PotentialComponent::Power(p) => {
            if energy <= 0.0 {
                return Ok(0.0);
            }
            let r = (energy / p.coefficient).powf(1.0 / p.exponent);
            Ok(2.0 * r * energy.powf(s) * beta_fn(1.0 / p.exponent, s + 1.0) / p.exponent)
        }
        PotentialComponent::Polynomial(w) => {
            if energy <= 0.0 {
                return Ok(0.0);
            }
            if w.is_quadratic() {
                let b = w.coefficients().1;
                return Ok((energy / b).sqrt() * energy.powf(s) * beta_fn(0.5, s + 1.0));
            }
            let poly = w.polynomial();
            let mut total = 0.0;
            for piece in w.sublevel_pieces(energy) {
                use crate::potential::TurningEnd;
                let value = match piece.turning {
                    TurningEnd::None => {
                        let f = |q: f64| (energy - poly.eval(q)).max(0.0).powf(s);
                        integrate(f, &[piece.start, piece.end], tol)?.value
                    }
                    TurningEnd::Start | TurningEnd::End => {
                        let (xt, xo) = if piece.turning == TurningEnd::Start {
                            (piece.start, piece.end)
                        } else {
                            (piece.end, piece.start)
                        };
                        let delta = xo - xt;
                        let t = poly.taylor(xt);
                        let sign = delta.signum();
                        let scale = 2.0 * delta.abs().powf(s + 1.0);
                        // q = xt + delta u^2 and E - V = |delta| u^2 h(u), h > 0.
                        let f = |u: f64| {
                            let d = delta * u * u;
                            let g = -(t[1] + d * (t[2] + d * (t[3] + d * t[4])));
                            let h = (sign * g).max(0.0);
                            if h == 0.0 {
                                return 0.0;
                            }
                            scale * u.powf(2.0 * s + 1.0) * h.powf(s)
                        };
                        integrate(f, &[0.0, 1.0], tol)?.value
                    }
                };
                total += value;
            }
            Ok(total)
        }
    }
}

/// Density of `component` convolved analytically with `n` harmonic
/// oscillators of frequencies `omegas`:
/// `I(E, n - 1/2) / (sqrt(2 pi) Gamma(n + 1/2) prod omega)`.
pub fn density_with_bath(
    component: &PotentialComponent,
    omegas: &[f64],
    energy: f64,
    tol: Tolerance,
) -> Result<f64> {
    let n = omegas.len() as f64;
    let omega: f64 = omegas.iter().product();
    let i = sublevel_integral(component, energy, n - 0.5, tol)?;
    Ok(i / (SQRT_2PI * gamma(n + 0.5) * omega))
}

/// Number of states below `energy` for `component` plus a harmonic bath.
pub fn cumulative_with_bath(
    component: &PotentialComponent,
    omegas: &[f64],
    energy: f64,
    tol: Tolerance,
) -> Result<f64> {
    let n = omegas.len() as f64;
    let omega: f64 = omegas.iter().product();
    let i = sublevel_integral(component, energy, n + 0.5, tol)?;
    Ok(i / (SQRT_2PI * gamma(n + 1.5) * omega))
}

/// Single-DoF density `(1/pi) int dq (2 (E - V))^-1/2` with quadratic kinetic energy.
pub fn density_1d_numeric(component: &PotentialComponent, energy: f64) -> Result<f64> {
    if energy <= component.min_energy() {
        return Ok(0.0);
    }
    let critical: Vec<f64> = match component {
        PotentialComponent::Plateau(w) => w.plateaus().iter().map(|p| p.energy).collect(),
        other => other
            .stationary_points()?
            .iter()
            .map(|p| p.energy)
            .collect(),
    };
    for e_c in critical {
        if e_c > component.min_energy() && (energy - e_c).abs() <= 1e-12 * energy.abs().max(1.0) {
            return Err(Error::AtStationaryEnergy {
                energy,
                stationary: e_c,
            });
        }
    }
    density_with_bath(component, &[], energy, Tolerance::relative(1e-12))
}

/// Grid request: `cells` uniform cells spanning `span` energy units above the
/// system's lowest energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    pub span: f64,
    pub cells: usize,
}

impl EnergyGrid {
    pub fn new(span: f64, cells: usize) -> Result<Self> {
        if !(span > 0.0 && span.is_finite()) || cells < 8 {
            return Err(Error::InvalidParameter(format!(
                "energy grid needs span > 0 and at least 8 cells, got span = {span}, cells = {cells}"
            )));
        }
        Ok(Self { span, cells })
    }

    /// Default resolution for a sweep whose smallest inverse temperature is
    /// `beta_min`: 4000 cells up to where `exp(-beta_min E) < 1e-12`.
    pub fn for_beta(beta_min: f64) -> Result<Self> {
        crate::error::check_beta(beta_min)?;
        Self::new(-(1e-12f64).ln() / beta_min, 4000)
    }

    pub fn spacing(&self) -> f64 {
        self.span / self.cells as f64
    }
}

/// Where a critical energy comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalOrigin {
    /// Locally quadratic stationary point with `rank` unstable directions.
    Nondegenerate { rank: usize },
    /// Bottom of a flat plateau, all other DoFs at non-degenerate minima.
    Plateau,
    /// Anything flatter than quadratic, or combinations of the above.
    Degenerate,
}

impl CriticalOrigin {
    /// Origin of the sum of two critical values from independent parts.
    pub fn combine(self, other: Self) -> Self {
        use CriticalOrigin::*;
        match (self, other) {
            (Nondegenerate { rank: r1 }, Nondegenerate { rank: r2 }) => {
                Nondegenerate { rank: r1 + r2 }
            }
            (Plateau, Nondegenerate { rank: 0 }) | (Nondegenerate { rank: 0 }, Plateau) => Plateau,
            _ => Degenerate,
        }
    }
}

/// Predicted shape of the non-analyticity in `d^(f-1) rho / dE^(f-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularityKind {
    /// `sign * Theta(E - E_c)`.
    Jump {
        sign: i8,
    },
    /// `sign * ln|E - E_c|`.
    LogDivergence {
        sign: i8,
    },
    /// `Theta(E - E_c) / sqrt(E - E_c)`.
    InverseSqrt,
    Unclassified,
}

impl SingularityKind {
    pub fn from_origin(origin: CriticalOrigin) -> Self {
        match origin {
            CriticalOrigin::Nondegenerate { rank } if rank % 2 == 0 => Self::Jump {
                sign: if (rank / 2) % 2 == 0 { 1 } else { -1 },
            },
            CriticalOrigin::Nondegenerate { rank } => Self::LogDivergence {
                sign: if rank.div_ceil(2) % 2 == 0 { 1 } else { -1 },
            },
            CriticalOrigin::Plateau => Self::InverseSqrt,
            CriticalOrigin::Degenerate => Self::Unclassified,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Jump { .. } => "jump",
            Self::LogDivergence { .. } => "log",
            Self::InverseSqrt => "inverse_sqrt",
            Self::Unclassified => "unclassified",
        }
    }

    pub fn sign(&self) -> i8 {
        match self {
            Self::Jump { sign } | Self::LogDivergence { sign } => *sign,
            Self::InverseSqrt => 1,
            Self::Unclassified => 0,
        }
    }

    fn strength(&self) -> u8 {
        match self {
            Self::Jump { .. } => 1,
            Self::LogDivergence { .. } => 2,
            Self::InverseSqrt => 3,
            Self::Unclassified => 4,
        }
    }

    /// Superposition of several singularities at one energy: the most
    /// singular type wins, opposing signs of that type add up.
    pub fn superpose(kinds: &[SingularityKind]) -> Self {
        let Some(top) = kinds.iter().map(|k| k.strength()).max() else {
            return Self::Unclassified;
        };
        let sign: i32 = kinds
            .iter()
            .filter(|k| k.strength() == top)
            .map(|k| k.sign() as i32)
            .sum();
        match top {
            1 | 2 if sign == 0 => Self::Unclassified,
            1 => Self::Jump {
                sign: sign.signum() as i8,
            },
            2 => Self::LogDivergence {
                sign: sign.signum() as i8,
            },
            3 => Self::InverseSqrt,
            _ => Self::Unclassified,
        }
    }
}

/// One critical energy of a (possibly partial) system before merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValue {
    pub energy: f64,
    pub origin: CriticalOrigin,
}

/// Merged non-analyticity of a level density.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub energy: f64,
    pub kind: SingularityKind,
    /// Order of the first derivative of `rho` that is non-analytic.
    pub order: usize,
    /// Number of critical values merged into this point.
    pub multiplicity: usize,
    pub origins: Vec<CriticalOrigin>,
}

/// Critical values of one component.
pub fn component_critical_values(component: &PotentialComponent) -> Vec<CriticalValue> {
    match component {
        PotentialComponent::Plateau(w) => w
            .energy_lengths()
            .iter()
            .map(|&(energy, _)| CriticalValue {
                energy,
                origin: CriticalOrigin::Plateau,
            })
            .collect(),
        other => other
            .stationary_points()
            .unwrap_or_default()
            .iter()
            .map(|p| CriticalValue {
                energy: p.energy,
                origin: if p.degenerate {
                    CriticalOrigin::Degenerate
                } else if p.kind == StationaryKind::Maximum {
                    CriticalOrigin::Nondegenerate { rank: 1 }
                } else {
                    CriticalOrigin::Nondegenerate { rank: 0 }
                },
            })
            .collect(),
    }
}

/// All sums of one critical value per part, kept if below `limit`.
pub fn combine_critical_values(parts: &[Vec<CriticalValue>], limit: f64) -> Vec<CriticalValue> {
    let mut acc = vec![CriticalValue {
        energy: 0.0,
        origin: CriticalOrigin::Nondegenerate { rank: 0 },
    }];
    // Each part's values are bounded below by its minimum, so partial sums
    // that already exceed `limit` minus the remaining minima can be dropped.
    let mins: Vec<f64> = parts
        .iter()
        .map(|p| p.iter().map(|c| c.energy).fold(f64::INFINITY, f64::min))
        .collect();
    for (i, part) in parts.iter().enumerate() {
        let rest: f64 = mins[i + 1..].iter().sum();
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for a in &acc {
            for c in part {
                let energy = a.energy + c.energy;
                if energy + rest <= limit {
                    next.push(CriticalValue {
                        energy,
                        origin: a.origin.combine(c.origin),
                    });
                }
            }
        }
        acc = next;
    }
    acc
}

/// Sorts and merges coincident critical values into singular points.
pub fn merge_critical_values(values: &[CriticalValue], dof: usize) -> Vec<SingularPoint> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut out: Vec<SingularPoint> = Vec::new();
    for v in sorted {
        if let Some(last) = out.last_mut() {
            if (v.energy - last.energy).abs() <= 1e-9 * v.energy.abs().max(1.0) {
                last.multiplicity += 1;
                last.origins.push(v.origin);
                continue;
            }
        }
        out.push(SingularPoint {
            energy: v.energy,
            kind: SingularityKind::Unclassified,
            order: dof.saturating_sub(1),
            multiplicity: 1,
            origins: vec![v.origin],
        });
    }
    for p in out.iter_mut() {
        let kinds: Vec<SingularityKind> = p
            .origins
            .iter()
            .map(|o| SingularityKind::from_origin(*o))
            .collect();
        p.kind = SingularityKind::superpose(&kinds);
    }
    out
}

/// Level density tabulated as cell means on a uniform grid.
///
/// Cell `j` covers `[origin + j h, origin + (j + 1) h)`; its value is
/// attributed to the node at the cell centre. The density vanishes below
/// `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDensity {
    origin: f64,
    spacing: f64,
    values: Vec<f64>,
    critical: Vec<CriticalValue>,
    singular: Vec<SingularPoint>,
    dof: usize,
}

impl LevelDensity {
    /// Builds a density from per-cell state counts.
    pub fn from_cell_masses(
        origin: f64,
        spacing: f64,
        masses: Vec<f64>,
        critical: Vec<CriticalValue>,
        dof: usize,
    ) -> Self {
        let values = masses.into_iter().map(|m| (m / spacing).max(0.0)).collect();
        Self::from_values(origin, spacing, values, critical, dof)
    }

    fn from_values(
        origin: f64,
        spacing: f64,
        values: Vec<f64>,
        critical: Vec<CriticalValue>,
        dof: usize,
    ) -> Self {
        let top = origin + spacing * values.len() as f64;
        let critical: Vec<CriticalValue> =
            critical.into_iter().filter(|c| c.energy <= top).collect();
        let singular = merge_critical_values(&critical, dof);
        Self {
            origin,
            spacing,
            values,
            critical,
            singular,
            dof,
        }
    }

    /// Samples `rho` pointwise at the cell centres.
    pub fn tabulate<F>(
        origin: f64,
        grid: EnergyGrid,
        critical: Vec<CriticalValue>,
        dof: usize,
        rho: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let h = grid.spacing();
        let values = (0..grid.cells)
            .into_par_iter()
            .map(|j| rho(origin + (j as f64 + 0.5) * h))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self::from_values(origin, h, values, critical, dof))
    }

    /// Cell means from a cumulative state count `n(E)`.
    pub fn from_cumulative<F>(
        origin: f64,
        grid: EnergyGrid,
        critical: Vec<CriticalValue>,
        dof: usize,
        count: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let h = grid.spacing();
        let edges = (0..=grid.cells)
            .into_par_iter()
            .map(|j| count(origin + j as f64 * h))
            .collect::<Result<Vec<f64>>>()?;
        let masses = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self::from_cell_masses(origin, h, masses, critical, dof))
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Energy of node `j` (centre of cell `j`).
    pub fn energy(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.spacing
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.energy(j)).collect()
    }

    /// Upper edge of the last cell.
    pub fn top(&self) -> f64 {
        self.origin + self.spacing * self.len() as f64
    }

    pub fn critical_values(&self) -> &[CriticalValue] {
        &self.critical
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        &self.singular
    }

    /// States per cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.spacing).collect()
    }

    /// Linear interpolation between nodes; zero below the origin.
    pub fn value_at(&self, energy: f64) -> f64 {
        if energy < self.origin || energy > self.top() {
            return 0.0;
        }
        let x = (energy - self.origin) / self.spacing - 0.5;
        if x <= 0.0 {
            return self.values[0];
        }
        let j = x.floor() as usize;
        if j + 1 >= self.len() {
            return *self.values.last().unwrap();
        }
        let t = x - j as f64;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    /// `int rho(E) exp(-beta E) dE` over the grid, treating `rho` as constant
    /// within each cell.
    pub fn laplace_transform(&self, beta: f64) -> Result<f64> {
        crate::error::check_beta(beta)?;
        let x = 0.5 * beta * self.spacing;
        let cell_factor = if x < 1e-8 { 1.0 } else { x.sinh() / x };
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * (-beta * self.energy(j)).exp())
            .sum();
        Ok(sum * self.spacing * cell_factor)
    }

    /// Half-width of the exclusion window around singular points for
    /// derivative queries of the given order.
    pub fn exclusion_half_width(&self, order: usize) -> f64 {
        (2 + Stencil::central(order, 4).half) as f64 * self.spacing
    }

    /// Nearest singular point whose exclusion window contains `energy`.
    pub fn singular_near(&self, energy: f64, order: usize) -> Option<&SingularPoint> {
        let w = self.exclusion_half_width(order);
        self.singular
            .iter()
            .filter(|p| (p.energy - energy).abs() < w)
            .min_by(|a, b| {
                (a.energy - energy)
                    .abs()
                    .total_cmp(&(b.energy - energy).abs())
            })
    }

    /// Derivative of `ln rho` at node `j` as `(fourth-order value, |difference to second order|)`.
    pub fn log_derivative_at_node(&self, j: usize, order: usize) -> Option<(f64, f64)> {
        let acc4 = Stencil::central(order, 4);
        let acc2 = Stencil::central(order, 2);
        let lo = j.checked_sub(acc4.half)?;
        let hi = j + acc4.half;
        if hi >= self.len() {
            return None;
        }
        let logs: Vec<f64> = self.values[lo..=hi].iter().map(|v| v.ln()).collect();
        if logs.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let v4 = acc4.apply(&logs, acc4.half, self.spacing)?;
        let v2 = acc2.apply(&logs, acc4.half, self.spacing)?;
        Some((v4, (v4 - v2).abs()))
    }
}

/// Value with a truncation-error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// `d^n ln rho / dE^n` by central differences, interpolated between nodes.
pub fn log_density_derivative(
    density: &LevelDensity,
    order: usize,
    energy: f64,
) -> Result<Estimate> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "derivative order must be >= 1".into(),
        ));
    }
    if let Some(p) = density.singular_near(energy, order) {
        return Err(Error::NearSingularPoint {
            energy,
            singular: p.energy,
        });
    }
    let half = Stencil::central(order, 4).half;
    let lo = density.energy(half);
    let hi = density.energy(density.len().saturating_sub(half + 1));
    if !(energy >= lo && energy <= hi) {
        return Err(Error::OutsideGrid { energy, lo, hi });
    }
    let x = (energy - density.origin()) / density.spacing() - 0.5;
    let j = (x.floor() as usize).min(density.len() - half - 2);
    let t = x - j as f64;
    let at = |k: usize| -> Result<(f64, f64)> {
        density
            .log_derivative_at_node(k, order)
            .ok_or_else(|| Error::ZeroDensity(density.energy(k)))
    };
    let (v0, e0) = at(j)?;
    if t == 0.0 {
        return Ok(Estimate {
            value: v0,
            error: e0,
        });
    }
    let (v1, e1) = at(j + 1)?;
    Ok(Estimate {
        value: v0 * (1.0 - t) + v1 * t,
        error: e0.max(e1),
    })
}

/// Single-DoF density of `component` on `grid`, starting at its minimum.
pub fn component_density(
    component: &PotentialComponent,
    grid: EnergyGrid,
    tol: Tolerance,
) -> Result<LevelDensity> {
    let origin = component.min_energy();
    LevelDensity::from_cumulative(origin, grid, component_critical_values(component), 1, |e| {
        cumulative_with_bath(component, &[], e, tol)
    })
}

/// Density of `n` harmonic oscillators, `E^(n-1) / ((n-1)! prod omega)`.
pub fn harmonic_bath_density(omegas: &[f64], grid: EnergyGrid) -> Result<LevelDensity> {
    if omegas.is_empty() || omegas.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidParameter(
            "harmonic bath needs positive frequencies".into(),
        ));
    }
    let n = omegas.len() as f64;
    let omega: f64 = omegas.iter().product();
    let crit = vec![CriticalValue {
        energy: 0.0,
        origin: CriticalOrigin::Nondegenerate { rank: 0 },
    }];
    LevelDensity::from_cumulative(0.0, grid, crit, omegas.len(), |e| {
        Ok(if e <= 0.0 {
            0.0
        } else {
            (n * e.ln() - ln_gamma(n + 1.0)).exp() / omega
        })
    })
}

/// Convolution of densities on a common grid spacing.
///
/// Each cell is treated as a uniform block of states; two blocks convolve to
/// a triangle that splits evenly between two neighbouring cells, so the
/// operation is exact for piecewise-constant inputs, commutative and
/// associative.
pub fn convolve_densities(parts: &[LevelDensity]) -> Result<LevelDensity> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to convolve".into()))?;
    let h = first.spacing();
    for p in &parts[1..] {
        if (p.spacing() - h).abs() > 1e-12 * h {
            return Err(Error::GridMismatch(h, p.spacing()));
        }
    }
    let len = parts.iter().map(|p| p.len()).min().unwrap();
    let mut masses: Vec<f64> = first.cell_masses()[..len].to_vec();
    let mut origin = first.origin();
    for p in &parts[1..] {
        let other = p.cell_masses();
        let pair: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|n| (0..=n).map(|i| masses[i] * other[n - i]).sum())
            .collect();
        masses = (0..len)
            .map(|j| 0.5 * (pair[j] + if j > 0 { pair[j - 1] } else { 0.0 }))
            .collect();
        origin += p.origin();
    }
    let dof = parts.iter().map(|p| p.dof()).sum();
    let top = origin + h * len as f64;
    let crit_parts: Vec<Vec<CriticalValue>> =
        parts.iter().map(|p| p.critical_values().to_vec()).collect();
    let critical = combine_critical_values(&crit_parts, top);
    Ok(LevelDensity::from_cell_masses(
        origin, h, masses, critical, dof,
    ))
}

/// Level density of a separable system.
///
/// With at most one component that is not exactly quadratic the density is
/// computed in closed form against the harmonic bath; otherwise the
/// single-DoF densities are convolved.
pub fn build_density(
    system: &SeparableSystem,
    grid: EnergyGrid,
    tol: Tolerance,
) -> Result<LevelDensity> {
    let comps = system.components();
    let mut omegas = Vec::new();
    let mut others = Vec::new();
    for c in comps {
        match c.frequency() {
            Some(w) => omegas.push((w, c)),
            None => others.push(c),
        }
    }
    let dof = system.dof();
    let critical_parts: Vec<Vec<CriticalValue>> =
        comps.iter().map(component_critical_values).collect();
    let origin = system.min_energy();
    if others.len() <= 1 {
        let main = match others.first() {
            Some(c) => *c,
            None => omegas.remove(0).1,
        };
        let bath: Vec<f64> = omegas.iter().map(|(w, _)| *w).collect();
        let critical = combine_critical_values(&critical_parts, origin + grid.span);
        return LevelDensity::from_cumulative(origin, grid, critical, dof, |e| {
            cumulative_with_bath(main, &bath, e, tol)
        });
    }
    let mut parts = others
        .par_iter()
        .map(|c| component_density(c, grid, tol))
        .collect::<Result<Vec<_>>>()?;
    if !omegas.is_empty() {
        let bath: Vec<f64> = omegas.iter().map(|(w, _)| *w).collect();
        parts.push(harmonic_bath_density(&bath, grid)?);
    }
    convolve_densities(&parts)
}
