//! Microcanonical temperature, caloric curves and thermal energy distributions.
//!
//! `beta_mic(E) = d ln rho / dE`. The caloric equation `beta_mic(E) = beta`
//! may have several roots; the curve is split into branches on which
//! `beta_mic` is monotone and roots are bracketed branch by branch.

use crate::density::{log_density_derivative, Estimate, LevelDensity};
use crate::error::{check_beta, Error, Result};
use crate::finite_diff::Stencil;

/// Direction of `beta_mic(E)` on a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slope {
    /// Positive heat capacity.
    Decreasing,
    /// Negative heat capacity.
    Increasing,
}

impl Slope {
    pub fn sign(self) -> f64 {
        match self {
            Slope::Decreasing => 1.0,
            Slope::Increasing => -1.0,
        }
    }
}

/// `beta_mic` and `d beta_mic / dE` at a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaloricSample {
    pub node: usize,
    pub energy: f64,
    pub beta: f64,
    /// `d^2 ln rho / dE^2`.
    pub curvature: f64,
    pub curvature_error: f64,
}

/// Maximal run of samples on which `beta_mic` is monotone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub id: usize,
    /// Sample indices, inclusive. Adjacent branches share their boundary sample.
    pub first: usize,
    pub last: usize,
    pub slope: Slope,
    pub energy_range: (f64, f64),
    pub beta_range: (f64, f64),
}

/// Local extremum of `beta_mic(E)` between two branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub energy: f64,
    pub beta: f64,
    /// `true` for a local maximum of `beta_mic`.
    pub maximum: bool,
}

/// Gap in the sampled curve around one or more singular points, with the
/// one-sided samples at its edges. `interior` holds `(E, beta_mic)` at the
/// excluded nodes; `beta_mic` there is usable for locating crossings but
/// its slope is not.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularWindow {
    pub singular_energies: Vec<f64>,
    pub left: Option<CaloricSample>,
    pub right: Option<CaloricSample>,
    pub interior: Vec<(f64, f64)>,
}

impl SingularWindow {
    /// `beta_mic(right) - beta_mic(left)`; large values signal a jump or divergence.
    pub fn beta_step(&self) -> Option<f64> {
        Some(self.right?.beta - self.left?.beta)
    }

    fn profile(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.interior.len() + 2);
        if let Some(l) = self.left {
            pts.push((l.energy, l.beta));
        }
        pts.extend_from_slice(&self.interior);
        if let Some(r) = self.right {
            pts.push((r.energy, r.beta));
        }
        pts
    }
}

/// Where a caloric root was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootLocation {
    Branch(usize),
    /// Inside the exclusion window with this index; `beta_mic` is only
    /// known to cross `beta` somewhere in the gap.
    Window(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaloricRoot {
    pub energy: f64,
    pub location: RootLocation,
    pub slope: Option<Slope>,
}

/// Sampled microcanonical caloric curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CaloricCurve {
    samples: Vec<CaloricSample>,
    branches: Vec<Branch>,
    turning_points: Vec<TurningPoint>,
    windows: Vec<SingularWindow>,
    spacing: f64,
}

impl CaloricCurve {
    pub fn samples(&self) -> &[CaloricSample] {
        &self.samples
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn turning_points(&self) -> &[TurningPoint] {
        &self.turning_points
    }

    pub fn windows(&self) -> &[SingularWindow] {
        &self.windows
    }

    /// Branch id of every sample (the earlier branch for shared boundaries).
    pub fn branch_of_samples(&self) -> Vec<usize> {
        let mut out = vec![0; self.samples.len()];
        for b in self.branches.iter().rev() {
            for slot in &mut out[b.first..=b.last] {
                *slot = b.id;
            }
        }
        out
    }

    /// Energies where `beta_mic(E) = beta`, sorted ascending.
    pub fn solve(&self, beta: f64) -> Vec<CaloricRoot> {
        let mut roots = Vec::new();
        for b in &self.branches {
            let mut found: Vec<f64> = Vec::new();
            for k in b.first..b.last {
                let (s0, s1) = (&self.samples[k], &self.samples[k + 1]);
                let (g0, g1) = (s0.beta - beta, s1.beta - beta);
                if g0 == 0.0 {
                    found.push(s0.energy);
                    continue;
                }
                if k + 1 == b.last && g1 == 0.0 {
                    found.push(s1.energy);
                    continue;
                }
                if g0 * g1 < 0.0 {
                    found.push(self.refine(s0, s1, beta));
                }
            }
            // A monotone branch has one root; near-flat noise may give more.
            found.dedup_by(|x, y| (*x - *y).abs() < 2.0 * self.spacing);
            if let Some(&e) = found.first() {
                roots.push(CaloricRoot {
                    energy: e,
                    location: RootLocation::Branch(b.id),
                    slope: Some(b.slope),
                });
            }
        }
        for (i, w) in self.windows.iter().enumerate() {
            for p in w.profile().windows(2) {
                let ((e0, b0), (e1, b1)) = (p[0], p[1]);
                if (b0 - beta) * (b1 - beta) < 0.0 {
                    let t = (b0 - beta) / (b0 - b1);
                    roots.push(CaloricRoot {
                        energy: e0 + t * (e1 - e0),
                        location: RootLocation::Window(i),
                        slope: Some(if b1 < b0 {
                            Slope::Decreasing
                        } else {
                            Slope::Increasing
                        }),
                    });
                }
            }
        }
        roots.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        // Shared boundary samples can yield the same root on two branches.
        roots.dedup_by(|x, y| {
            (x.energy - y.energy).abs() < 0.5 * self.spacing
                && x.location != y.location
                && x.slope == y.slope
        });
        roots
    }

    // Hermite interpolation between two samples, then bisection to h/64.
    fn refine(&self, s0: &CaloricSample, s1: &CaloricSample, beta: f64) -> f64 {
        let h = s1.energy - s0.energy;
        let eval = |e: f64| -> f64 {
            let t = (e - s0.energy) / h;
            let t2 = t * t;
            let t3 = t2 * t;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            h00 * s0.beta + h10 * h * s0.curvature + h01 * s1.beta + h11 * h * s1.curvature - beta
        };
        let (mut a, mut b) = (s0.energy, s1.energy);
        let mut ga = eval(a);
        while b - a > self.spacing / 64.0 {
            let m = 0.5 * (a + b);
            let gm = eval(m);
            if gm == 0.0 {
                return m;
            }
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// `d^2 ln rho / dE^2` at `energy` by linear interpolation of samples.
    pub fn curvature_at(&self, energy: f64) -> Option<f64> {
        let k = self.samples.partition_point(|s| s.energy <= energy);
        if k == 0 || k >= self.samples.len() {
            return None;
        }
        let (s0, s1) = (&self.samples[k - 1], &self.samples[k]);
        if s1.node != s0.node + 1 {
            return None;
        }
        let t = (energy - s0.energy) / (s1.energy - s0.energy);
        Some(s0.curvature * (1.0 - t) + s1.curvature * t)
    }
}

/// `beta_mic(E) = d ln rho / dE`.
pub fn beta_mic(density: &LevelDensity, energy: f64) -> Result<f64> {
    let est = log_density_derivative(density, 1, energy)?;
    if est.value < -(est.error.max(1e-10)) {
        let start = ((energy - density.origin()) / density.spacing())
            .floor()
            .max(0.0) as usize;
        let v = density.values();
        if v[start.min(v.len() - 1)..].windows(2).all(|w| w[1] <= w[0]) {
            return Err(Error::MicrocanonicalUndefined(format!(
                "rho is non-increasing for all E >= {energy}, so beta_mic = beta > 0 has no solution"
            )));
        }
    }
    Ok(est.value)
}

/// Samples `beta_mic` on the grid and splits it into monotone branches.
pub fn build_caloric_curve(density: &LevelDensity) -> Result<CaloricCurve> {
    if density.dof() < 2 {
        return Err(Error::Unsupported(
            "the microcanonical caloric curve needs f >= 2".into(),
        ));
    }
    let half = Stencil::central(2, 4).half;
    let mut samples: Vec<CaloricSample> = Vec::new();
    let mut windows: Vec<SingularWindow> = Vec::new();
    let mut open = false;
    for j in half..density.len().saturating_sub(half) {
        let e = density.energy(j);
        if let Some(p) = density.singular_near(e, 2) {
            if !open {
                windows.push(SingularWindow {
                    singular_energies: Vec::new(),
                    left: samples.last().copied(),
                    right: None,
                    interior: Vec::new(),
                });
                open = true;
            }
            let w = windows.last_mut().unwrap();
            if w.singular_energies.last() != Some(&p.energy) {
                w.singular_energies.push(p.energy);
            }
            if let Some((b, _)) = density.log_derivative_at_node(j, 1) {
                w.interior.push((e, b));
            }
            continue;
        }
        let (Some((b, _)), Some((c, err))) = (
            density.log_derivative_at_node(j, 1),
            density.log_derivative_at_node(j, 2),
        ) else {
            continue;
        };
        let s = CaloricSample {
            node: j,
            energy: e,
            beta: b,
            curvature: c,
            curvature_error: err,
        };
        if open {
            windows.last_mut().unwrap().right = Some(s);
            open = false;
        }
        samples.push(s);
    }
    // A window at the very start of the grid only trims the low end.
    windows.retain(|w| w.left.is_some());
    for w in &mut windows {
        w.singular_energies.sort_by(f64::total_cmp);
        w.singular_energies.dedup();
    }

    let (branches, turning_points) = split_branches(&samples);
    Ok(CaloricCurve {
        samples,
        branches,
        turning_points,
        windows,
        spacing: density.spacing(),
    })
}

fn split_branches(samples: &[CaloricSample]) -> (Vec<Branch>, Vec<TurningPoint>) {
    let mut branches = Vec::new();
    let mut turning = Vec::new();
    if samples.len() < 2 {
        return (branches, turning);
    }
    // Interval slopes with a dead band: undetermined intervals keep the
    // previous direction.
    let mut slopes: Vec<Option<Slope>> = Vec::with_capacity(samples.len() - 1);
    let mut contiguous = Vec::with_capacity(samples.len() - 1);
    for w in samples.windows(2) {
        contiguous.push(w[1].node == w[0].node + 1);
        let c = 0.5 * (w[0].curvature + w[1].curvature);
        let band = 4.0 * w[0].curvature_error.max(w[1].curvature_error) + 1e-12;
        slopes.push(if c < -band {
            Some(Slope::Decreasing)
        } else if c > band {
            Some(Slope::Increasing)
        } else {
            None
        });
    }
    let mut k = 0;
    while k < slopes.len() {
        if !contiguous[k] {
            k += 1;
            continue;
        }
        let first = k;
        let mut slope = slopes[k];
        let mut end = k;
        while end < slopes.len() && contiguous[end] {
            match (slope, slopes[end]) {
                (None, s) => slope = s,
                (Some(a), Some(b)) if a != b => break,
                _ => {}
            }
            end += 1;
        }
        let slope = slope.unwrap_or(if samples[end].beta <= samples[first].beta {
            Slope::Decreasing
        } else {
            Slope::Increasing
        });
        let segment = &samples[first..=end];
        let (e0, e1) = (segment[0].energy, segment[segment.len() - 1].energy);
        let bmin = segment.iter().map(|s| s.beta).fold(f64::INFINITY, f64::min);
        let bmax = segment
            .iter()
            .map(|s| s.beta)
            .fold(f64::NEG_INFINITY, f64::max);
        branches.push(Branch {
            id: branches.len(),
            first,
            last: end,
            slope,
            energy_range: (e0, e1),
            beta_range: (bmin, bmax),
        });
        if end < slopes.len() && contiguous[end] {
            let prev = &branches[branches.len() - 1];
            let (s0, s1) = (&samples[end], &samples[end + 1]);
            let t = if s1.curvature != s0.curvature {
                (-s0.curvature / (s1.curvature - s0.curvature)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            turning.push(TurningPoint {
                energy: s0.energy + t * (s1.energy - s0.energy),
                beta: s0.beta + t * (s1.beta - s0.beta),
                maximum: prev.slope == Slope::Increasing,
            });
        }
        k = end;
    }
    (branches, turning)
}

/// Roots of the caloric equation on a prepared curve.
pub fn solve_caloric(curve: &CaloricCurve, beta: f64) -> Vec<CaloricRoot> {
    curve.solve(beta)
}

/// `C^mic` at one root of the caloric equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroCapacity {
    pub beta: f64,
    pub energy: f64,
    /// `-beta^2 / (d^2 ln rho / dE^2)`; signed infinity at branch edges,
    /// NaN for roots inside singular windows.
    pub value: f64,
    pub location: RootLocation,
    pub slope: Option<Slope>,
}

/// Microcanonical analysis of one level density.
#[derive(Debug, Clone)]
pub struct Microcanonical {
    density: LevelDensity,
    curve: CaloricCurve,
}

impl Microcanonical {
    pub fn new(density: LevelDensity) -> Result<Self> {
        let curve = build_caloric_curve(&density)?;
        Ok(Self { density, curve })
    }

    pub fn density(&self) -> &LevelDensity {
        &self.density
    }

    pub fn curve(&self) -> &CaloricCurve {
        &self.curve
    }

    pub fn beta_mic(&self, energy: f64) -> Result<f64> {
        beta_mic(&self.density, energy)
    }

    pub fn solve(&self, beta: f64) -> Result<Vec<CaloricRoot>> {
        check_beta(beta)?;
        Ok(self.curve.solve(beta))
    }

    pub fn heat_capacity(&self, beta: f64) -> Result<Vec<MicroCapacity>> {
        let roots = self.solve(beta)?;
        Ok(roots
            .into_iter()
            .map(|r| {
                let value = match (r.location, r.slope) {
                    (RootLocation::Branch(_), Some(slope)) => {
                        match self.curve.curvature_at(r.energy) {
                            Some(d2) if d2.abs() >= 1e-8 && (-d2).signum() == slope.sign() => {
                                -beta * beta / d2
                            }
                            Some(_) => slope.sign() * f64::INFINITY,
                            None => f64::NAN,
                        }
                    }
                    _ => f64::NAN,
                };
                MicroCapacity {
                    beta,
                    energy: r.energy,
                    value,
                    location: r.location,
                    slope: r.slope,
                }
            })
            .collect())
    }

    /// `C^mic` at `beta` when the caloric equation has exactly one root.
    pub fn unique_heat_capacity(&self, beta: f64) -> Result<f64> {
        let caps = self.heat_capacity(beta)?;
        match caps.as_slice() {
            [only] if matches!(only.location, RootLocation::Branch(_)) => Ok(only.value),
            _ => Err(Error::NotUnique {
                beta,
                roots: caps.len(),
            }),
        }
    }

    /// `n`-th derivative of the single-branch `C^mic(beta)` by central
    /// differences with a step spanning a few energy cells.
    pub fn capacity_derivative(&self, order: usize, beta: f64) -> Result<Estimate> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "derivative order must be >= 1".into(),
            ));
        }
        let c0 = self.unique_heat_capacity(beta)?;
        if !c0.is_finite() {
            return Err(Error::NotUnique { beta, roots: 1 });
        }
        // d beta / dE = -beta^2 / C, so this step moves the root by ~6 cells.
        let step = beta * beta * 6.0 * self.density.spacing() / c0.abs();
        let hi = Stencil::central(order, 4);
        let lo = Stencil::central(order, 2);
        let mut values = Vec::with_capacity(2 * hi.half + 1);
        for k in 0..=2 * hi.half {
            let b = beta + (k as f64 - hi.half as f64) * step;
            let c = self.unique_heat_capacity(b)?;
            if !c.is_finite() {
                return Err(Error::NotUnique { beta: b, roots: 1 });
            }
            values.push(c);
        }
        let v4 = hi.apply(&values, hi.half, step).expect("stencil fits");
        let v2 = lo.apply(&values, hi.half, step).expect("stencil fits");
        Ok(Estimate {
            value: v4,
            error: (v4 - v2).abs(),
        })
    }

    pub fn distribution(&self, beta: f64) -> Result<ThermalDistribution> {
        thermal_distribution(&self.density, beta)
    }
}

/// `C^mic` at every caloric root for `beta`.
pub fn heat_capacity_micro(density: &LevelDensity, beta: f64) -> Result<Vec<MicroCapacity>> {
    Microcanonical::new(density.clone())?.heat_capacity(beta)
}

pub fn micro_capacity_derivative(
    density: &LevelDensity,
    order: usize,
    beta: f64,
) -> Result<Estimate> {
    Microcanonical::new(density.clone())?.capacity_derivative(order, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub energy: f64,
    pub kind: ExtremumKind,
    /// Max-normalised `w` at the extremum.
    pub value: f64,
}

/// `w_beta(E) = rho(E) exp(-beta E) / Z` on the density grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDistribution {
    pub beta: f64,
    pub energies: Vec<f64>,
    /// Scaled so the largest value is 1.
    pub values: Vec<f64>,
    /// Multiply `values` by this to get a probability density.
    pub scale: f64,
    /// Interior extrema in ascending energy.
    pub extrema: Vec<Extremum>,
}

impl ThermalDistribution {
    /// Energy of the global maximum of `w`.
    pub fn most_probable_energy(&self) -> f64 {
        let j = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
            .unwrap_or(0);
        self.energies[j]
    }

    pub fn maxima(&self) -> usize {
        self.extrema
            .iter()
            .filter(|e| e.kind == ExtremumKind::Maximum)
            .count()
    }

    pub fn minima(&self) -> usize {
        self.extrema
            .iter()
            .filter(|e| e.kind == ExtremumKind::Minimum)
            .count()
    }

    /// `<E>` under the distribution.
    pub fn mean_energy(&self) -> f64 {
        let (num, den) = self
            .energies
            .iter()
            .zip(&self.values)
            .fold((0.0, 0.0), |(n, d), (e, w)| (n + e * w, d + w));
        num / den
    }
}

/// Thermal energy distribution and its extrema. Extrema sit where
/// `beta_mic(E) - beta` changes sign; differences within the stencil's own
/// error estimate do not count as a sign change.
pub fn thermal_distribution(density: &LevelDensity, beta: f64) -> Result<ThermalDistribution> {
    check_beta(beta)?;
    let energies = density.energies();
    let logs: Vec<f64> = density
        .values()
        .iter()
        .zip(&energies)
        .map(|(r, e)| {
            if *r > 0.0 {
                r.ln() - beta * e
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::ZeroDensity(density.origin()));
    }
    let values: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z = density.laplace_transform(beta)?;
    let scale = (top - z.ln()).exp();

    let mut extrema = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    let mut sign = 0.0f64;
    for j in 0..density.len() {
        let Some((b, err)) = density.log_derivative_at_node(j, 1) else {
            continue;
        };
        let g = b - beta;
        let s = if g > 2.0 * err + 1e-12 {
            1.0
        } else if g < -(2.0 * err + 1e-12) {
            -1.0
        } else {
            0.0
        };
        if s != 0.0 {
            if sign != 0.0 && s != sign {
                if let Some((k, gk)) = prev {
                    let t = if gk != g { gk / (gk - g) } else { 0.5 };
                    let energy = energies[k] + t * (energies[j] - energies[k]);
                    extrema.push(Extremum {
                        energy,
                        kind: if sign > 0.0 {
                            ExtremumKind::Maximum
                        } else {
                            ExtremumKind::Minimum
                        },
                        value: interpolate(&energies, &values, energy),
                    });
                }
            }
            sign = s;
            prev = Some((j, g));
        }
    }
    Ok(ThermalDistribution {
        beta,
        energies,
        values,
        scale,
        extrema,
    })
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] * (1.0 - t) + ys[k] * t
}
