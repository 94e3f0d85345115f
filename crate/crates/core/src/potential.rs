//! One-dimensional potential components and separable systems built from them.
//!
//! Every system has the kinetic energy `sum_i p_i^2 / 2`; only the potential
//! varies between degrees of freedom. Polynomial components
//! `V = v + a q + b q^2 + c q^4` are shifted so their absolute minimum is zero.

use crate::error::{Error, Result};

/// Discriminant of the component families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Harmonic,
    QuarticFamily,
    PlateauWell,
    PurePower,
}

/// Shape classification of a quartic-family component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellShape {
    DoubleWell,
    SingleWell,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryKind {
    Minimum,
    Maximum,
    Inflection,
}

/// A root of `V'(q) = 0`, with the energy measured after the shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint1D {
    pub position: f64,
    pub energy: f64,
    pub kind: StationaryKind,
    /// `V''` vanishes at this point.
    pub degenerate: bool,
}

/// Critical value `a_W = sqrt(8 |b|^3 / (27 c))` separating double from single wells.
pub fn double_well_threshold(b: f64, c: f64) -> f64 {
    (8.0 * b.abs().powi(3) / (27.0 * c)).sqrt()
}

/// Classifies `a q + b q^2 + c q^4`.
pub fn classify_well(a: f64, b: f64, c: f64) -> Result<WellShape> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) || c < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "quartic coefficients must be finite with c >= 0, got ({a}, {b}, {c})"
        )));
    }
    if c == 0.0 {
        return if b > 0.0 {
            Ok(WellShape::Quadratic)
        } else {
            Err(Error::InvalidParameter(format!(
                "c = 0 requires b > 0 (potential is unbounded or flat), got b = {b}"
            )))
        };
    }
    if b < 0.0 && a.abs() < double_well_threshold(b, c) {
        Ok(WellShape::DoubleWell)
    } else {
        Ok(WellShape::SingleWell)
    }
}

/// Real polynomial of degree at most four, `sum_k coeffs[k] q^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub coeffs: [f64; 5],
}

impl Quartic {
    pub fn eval(&self, q: f64) -> f64 {
        let c = &self.coeffs;
        (((c[4] * q + c[3]) * q + c[2]) * q + c[1]) * q + c[0]
    }

    pub fn derivative(&self, q: f64) -> f64 {
        let c = &self.coeffs;
        ((4.0 * c[4] * q + 3.0 * c[3]) * q + 2.0 * c[2]) * q + c[1]
    }

    pub fn second_derivative(&self, q: f64) -> f64 {
        let c = &self.coeffs;
        (12.0 * c[4] * q + 6.0 * c[3]) * q + 2.0 * c[2]
    }

    /// Taylor coefficients about `q0`: `V(q0 + d) = sum_k t[k] d^k`.
    pub fn taylor(&self, q0: f64) -> [f64; 5] {
        let c = &self.coeffs;
        [
            self.eval(q0),
            self.derivative(q0),
            0.5 * self.second_derivative(q0),
            4.0 * c[4] * q0 + c[3],
            c[4],
        ]
    }

    /// The polynomial `q -> V(q + shift)`.
    pub fn translated(&self, shift: f64) -> Quartic {
        Quartic {
            coeffs: self.taylor(shift),
        }
    }

    /// Real stationary points sorted by energy (ties by position).
    pub fn stationary_points(&self) -> Vec<StationaryPoint1D> {
        let c = &self.coeffs;
        let roots = real_cubic_roots(4.0 * c[4], 3.0 * c[3], 2.0 * c[2], c[1]);
        let scale = c
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut points: Vec<StationaryPoint1D> = roots
            .into_iter()
            .map(|q| {
                let curv = self.second_derivative(q);
                let curv_scale = scale * (1.0 + q * q);
                let degenerate = curv.abs() <= 1e-7 * curv_scale;
                let kind = if !degenerate {
                    if curv > 0.0 {
                        StationaryKind::Minimum
                    } else {
                        StationaryKind::Maximum
                    }
                } else {
                    let probe = 1e-3 * (1.0 + q.abs());
                    let v0 = self.eval(q);
                    let l = self.eval(q - probe) - v0;
                    let r = self.eval(q + probe) - v0;
                    if l > 0.0 && r > 0.0 {
                        StationaryKind::Minimum
                    } else if l < 0.0 && r < 0.0 {
                        StationaryKind::Maximum
                    } else {
                        StationaryKind::Inflection
                    }
                };
                StationaryPoint1D {
                    position: q,
                    energy: self.eval(q),
                    kind,
                    degenerate,
                }
            })
            .collect();
        points.sort_by(|x, y| {
            x.energy
                .total_cmp(&y.energy)
                .then(x.position.total_cmp(&y.position))
        });
        points
    }
}

/// Real roots of `p3 x^3 + p2 x^2 + p1 x + p0`, Newton-polished, deduplicated
/// and sorted ascending. Double roots are reported once.
pub fn real_cubic_roots(p3: f64, p2: f64, p1: f64, p0: f64) -> Vec<f64> {
    let mut roots = if p3 == 0.0 {
        if p2 == 0.0 {
            if p1 == 0.0 {
                vec![]
            } else {
                vec![-p0 / p1]
            }
        } else {
            let disc = p1 * p1 - 4.0 * p2 * p0;
            if disc < 0.0 {
                vec![]
            } else {
                let s = disc.sqrt();
                let t = -0.5 * (p1 + p1.signum() * s);
                if t == 0.0 {
                    vec![0.0]
                } else {
                    vec![t / p2, p0 / t]
                }
            }
        }
    } else {
        let a = p2 / p3;
        let b = p1 / p3;
        let c = p0 / p3;
        // Depressed cubic t^3 + p t + q with x = t - a/3.
        let p = b - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
        let shift = -a / 3.0;
        let disc = q * q / 4.0 + p * p * p / 27.0;
        if disc < 0.0 {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
                .collect()
        } else {
            let s = disc.sqrt();
            let u = (-0.5 * q + s).cbrt();
            let v = (-0.5 * q - s).cbrt();
            let t1 = u + v;
            let mut r = vec![t1 + shift];
            // Nearly repeated root: disc ~ 0, the pair sits at -t1/2.
            let scale = p.abs().max(q.abs()).max(1e-300);
            if disc <= 1e-12 * scale * scale {
                r.push(-0.5 * t1 + shift);
            }
            r
        }
    };
    let f = |x: f64| ((p3 * x + p2) * x + p1) * x + p0;
    let df = |x: f64| (3.0 * p3 * x + 2.0 * p2) * x + p1;
    for x in roots.iter_mut() {
        for _ in 0..60 {
            let d = df(*x);
            if d == 0.0 {
                break;
            }
            let step = f(*x) / d;
            let next = *x - step;
            if !next.is_finite() || f(next).abs() > f(*x).abs() {
                break;
            }
            *x = next;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(last) = out.last() {
            if (r - last).abs() <= 1e-7 * r.abs().max(1.0) {
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// Member of the family `v + a q + b q^2 + c q^4` (harmonic when `a = c = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticWell {
    a: f64,
    b: f64,
    c: f64,
    shift: f64,
    harmonic: bool,
    poly: Quartic,
    stationary: Vec<StationaryPoint1D>,
}

impl QuarticWell {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        classify_well(a, b, c)?;
        let raw = Quartic {
            coeffs: [0.0, a, b, 0.0, c],
        };
        let raw_points = raw.stationary_points();
        let min_raw = raw_points
            .iter()
            .map(|p| p.energy)
            .fold(f64::INFINITY, f64::min);
        let shift = -min_raw;
        let poly = Quartic {
            coeffs: [shift, a, b, 0.0, c],
        };
        let mut stationary: Vec<StationaryPoint1D> = raw_points
            .into_iter()
            .map(|p| StationaryPoint1D {
                energy: (p.energy + shift).max(0.0),
                ..p
            })
            .collect();
        // The global minimum defines the zero of energy exactly.
        if let Some(first) = stationary.first_mut() {
            first.energy = 0.0;
        }
        Ok(Self {
            a,
            b,
            c,
            shift,
            harmonic: false,
            poly,
            stationary,
        })
    }

    /// `V = b q^2`, frequency `sqrt(2 b)`.
    pub fn harmonic(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "harmonic stiffness must be positive, got {b}"
            )));
        }
        let mut w = Self::new(0.0, b, 0.0)?;
        w.harmonic = true;
        Ok(w)
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    /// The constant `v` added to the raw polynomial.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn polynomial(&self) -> &Quartic {
        &self.poly
    }

    pub fn is_quadratic(&self) -> bool {
        self.c == 0.0
    }

    pub fn shape(&self) -> WellShape {
        classify_well(self.a, self.b, self.c).expect("validated at construction")
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.poly.eval(q)
    }

    pub fn stationary_points(&self) -> &[StationaryPoint1D] {
        &self.stationary
    }

    pub fn global_minimum(&self) -> f64 {
        self.stationary[0].position
    }

    /// Angular frequency of a purely quadratic component.
    pub fn frequency(&self) -> Option<f64> {
        self.is_quadratic().then(|| (2.0 * self.b).sqrt())
    }

    /// Pieces of the sublevel set `{q : V(q) < energy}` on which `V` is
    /// monotone, each tagged with the end (if any) that is a turning point.
    pub fn sublevel_pieces(&self, energy: f64) -> Vec<Piece> {
        let mut crit: Vec<f64> = self.stationary.iter().map(|s| s.position).collect();
        crit.sort_by(f64::total_cmp);
        let mut pieces = Vec::new();
        if energy <= 0.0 {
            return pieces;
        }
        // Outer bracket where V exceeds the energy on both sides.
        let span = crit.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let mut lo = crit[0] - span;
        while self.eval(lo) <= energy {
            lo -= 2.0 * (crit[0] - lo).abs();
        }
        let last = *crit.last().unwrap();
        let mut hi = last + span;
        while self.eval(hi) <= energy {
            hi += 2.0 * (hi - last).abs();
        }
        let mut nodes = Vec::with_capacity(crit.len() + 2);
        nodes.push(lo);
        nodes.extend_from_slice(&crit);
        nodes.push(hi);
        for w in nodes.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            if !(x1 > x0) {
                continue;
            }
            let v0 = self.eval(x0) - energy;
            let v1 = self.eval(x1) - energy;
            match (v0 < 0.0, v1 < 0.0) {
                (true, true) => pieces.push(Piece {
                    start: x0,
                    end: x1,
                    turning: TurningEnd::None,
                }),
                (false, false) => {}
                (true, false) => {
                    let t = self.turning_point(x0, x1, energy);
                    pieces.push(Piece {
                        start: x0,
                        end: t,
                        turning: TurningEnd::End,
                    });
                }
                (false, true) => {
                    let t = self.turning_point(x0, x1, energy);
                    pieces.push(Piece {
                        start: t,
                        end: x1,
                        turning: TurningEnd::Start,
                    });
                }
            }
        }
        pieces
    }

    // Root of V = energy on a monotone bracket.
    fn turning_point(&self, mut x0: f64, mut x1: f64, energy: f64) -> f64 {
        let g = |x: f64| self.eval(x) - energy;
        let mut g0 = g(x0);
        for _ in 0..200 {
            let mid = 0.5 * (x0 + x1);
            if mid <= x0 || mid >= x1 {
                break;
            }
            let gm = g(mid);
            if (gm < 0.0) == (g0 < 0.0) {
                x0 = mid;
                g0 = gm;
            } else {
                x1 = mid;
            }
            if (x1 - x0) <= 1e-6 * x0.abs().max(1e-3) {
                break;
            }
        }
        let mut x = 0.5 * (x0 + x1);
        let (lo, hi) = (x0, x1);
        for _ in 0..20 {
            let d = self.poly.derivative(x);
            if d == 0.0 {
                break;
            }
            let next = x - g(x) / d;
            if !(next >= lo && next <= hi) {
                break;
            }
            if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300) {
                x = next;
                break;
            }
            x = next;
        }
        x
    }
}

/// Which end of a [`Piece`] is a classical turning point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningEnd {
    None,
    Start,
    End,
}

/// Monotone sub-interval of a sublevel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub turning: TurningEnd,
}

/// One flat segment of a plateau well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub energy: f64,
    pub left: f64,
    pub length: f64,
}

/// Infinite square well whose floor is a set of flat plateaus.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauWell {
    plateaus: Vec<Plateau>,
}

impl PlateauWell {
    /// Lays `(energy, length)` plateaus side by side starting at `q = 0`.
    pub fn from_lengths(spec: &[(f64, f64)]) -> Result<Self> {
        let mut left = 0.0;
        let mut intervals = Vec::with_capacity(spec.len());
        for &(e, l) in spec {
            intervals.push((e, left, left + l));
            if l > 0.0 {
                left += l;
            }
        }
        Self::from_intervals(&intervals)
    }

    /// Plateaus given as `(energy, left, right)` half-open intervals.
    pub fn from_intervals(spec: &[(f64, f64, f64)]) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::InvalidParameter(
                "plateau list must be non-empty".into(),
            ));
        }
        let mut plateaus = Vec::with_capacity(spec.len());
        for &(energy, left, right) in spec {
            let length = right - left;
            if !(length > 0.0) || !energy.is_finite() || !left.is_finite() || !right.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "plateau [{left}, {right}) at energy {energy} must have finite values and positive length"
                )));
            }
            plateaus.push(Plateau {
                energy,
                left,
                length,
            });
        }
        plateaus.sort_by(|x, y| x.left.total_cmp(&y.left));
        for w in plateaus.windows(2) {
            if w[0].left + w[0].length > w[1].left {
                return Err(Error::InvalidParameter(format!(
                    "plateau intervals overlap at q = {}",
                    w[1].left
                )));
            }
        }
        Ok(Self { plateaus })
    }

    pub fn plateaus(&self) -> &[Plateau] {
        &self.plateaus
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.plateaus
            .iter()
            .find(|p| q >= p.left && q < p.left + p.length)
            .map_or(f64::INFINITY, |p| p.energy)
    }

    pub fn min_energy(&self) -> f64 {
        self.plateaus
            .iter()
            .map(|p| p.energy)
            .fold(f64::INFINITY, f64::min)
    }

    /// The multiset `{(E_k, L_k)}` sorted by energy, equal energies merged.
    /// All thermodynamics of the well depends on this alone.
    pub fn energy_lengths(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> =
            self.plateaus.iter().map(|p| (p.energy, p.length)).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (e, l) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == e => last.1 += l,
                _ => merged.push((e, l)),
            }
        }
        merged
    }
}

/// `V = b |q|^I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerWell {
    pub coefficient: f64,
    pub exponent: f64,
}

impl PowerWell {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0 && exponent > 0.0 && coefficient.is_finite() && exponent.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "power potential needs b > 0 and I > 0, got b = {coefficient}, I = {exponent}"
            )));
        }
        Ok(Self {
            coefficient,
            exponent,
        })
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.coefficient * q.abs().powf(self.exponent)
    }
}

/// One degree of freedom's potential energy.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialComponent {
    Polynomial(QuarticWell),
    Plateau(PlateauWell),
    Power(PowerWell),
}

impl PotentialComponent {
    pub fn harmonic(b: f64) -> Result<Self> {
        QuarticWell::harmonic(b).map(Self::Polynomial)
    }

    pub fn quartic(a: f64, b: f64, c: f64) -> Result<Self> {
        QuarticWell::new(a, b, c).map(Self::Polynomial)
    }

    pub fn plateau(spec: &[(f64, f64)]) -> Result<Self> {
        PlateauWell::from_lengths(spec).map(Self::Plateau)
    }

    pub fn power(coefficient: f64, exponent: f64) -> Result<Self> {
        PowerWell::new(coefficient, exponent).map(Self::Power)
    }

    pub fn kind(&self) -> ComponentKind {
        match self {
            Self::Polynomial(w) if w.harmonic => ComponentKind::Harmonic,
            Self::Polynomial(_) => ComponentKind::QuarticFamily,
            Self::Plateau(_) => ComponentKind::PlateauWell,
            Self::Power(_) => ComponentKind::PurePower,
        }
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            Self::Polynomial(w) => w.eval(q),
            Self::Plateau(w) => w.eval(q),
            Self::Power(w) => w.eval(q),
        }
    }

    /// Lowest value of the potential (zero except for plateau wells).
    pub fn min_energy(&self) -> f64 {
        match self {
            Self::Plateau(w) => w.min_energy(),
            _ => 0.0,
        }
    }

    /// Angular frequency if the component is exactly quadratic.
    pub fn frequency(&self) -> Option<f64> {
        match self {
            Self::Polynomial(w) => w.frequency(),
            Self::Power(p) if p.exponent == 2.0 => Some((2.0 * p.coefficient).sqrt()),
            _ => None,
        }
    }

    /// Exponent `I` of the large-|q| growth; `None` for hard walls.
    pub fn asymptotic_exponent(&self) -> Option<f64> {
        match self {
            Self::Polynomial(w) if w.is_quadratic() => Some(2.0),
            Self::Polynomial(_) => Some(4.0),
            Self::Power(p) => Some(p.exponent),
            Self::Plateau(_) => None,
        }
    }

    /// Stationary points of `V`. Plateau wells have no isolated stationary
    /// points and are rejected.
    pub fn stationary_points(&self) -> Result<Vec<StationaryPoint1D>> {
        match self {
            Self::Polynomial(w) => Ok(w.stationary_points().to_vec()),
            Self::Power(p) => Ok(vec![StationaryPoint1D {
                position: 0.0,
                energy: 0.0,
                kind: StationaryKind::Minimum,
                degenerate: p.exponent != 2.0,
            }]),
            Self::Plateau(_) => Err(Error::Unsupported(
                "plateau wells have flat, infinitely degenerate stationary sets".into(),
            )),
        }
    }
}

/// `stationary_points_1d`: stationary points of a polynomial component.
pub fn stationary_points_1d(component: &PotentialComponent) -> Result<Vec<StationaryPoint1D>> {
    component.stationary_points()
}

/// Ordered list of `f` potential components with quadratic kinetic energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSystem {
    components: Vec<PotentialComponent>,
}

impl SeparableSystem {
    pub fn new(components: Vec<PotentialComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("f >= 1 required".into()));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[PotentialComponent] {
        &self.components
    }

    /// Number of degrees of freedom `f`.
    pub fn dof(&self) -> usize {
        self.components.len()
    }

    /// Total potential at configuration `q`.
    pub fn potential(&self, q: &[f64]) -> f64 {
        self.components.iter().zip(q).map(|(c, &x)| c.eval(x)).sum()
    }

    /// Lowest total energy.
    pub fn min_energy(&self) -> f64 {
        self.components.iter().map(|c| c.min_energy()).sum()
    }

    /// Highest stationary energy over all polynomial components combined
    /// (sum of per-component maxima), or the highest plateau energy.
    pub fn highest_critical_energy(&self) -> f64 {
        self.components
            .iter()
            .map(|c| match c {
                PotentialComponent::Plateau(w) => w
                    .plateaus()
                    .iter()
                    .map(|p| p.energy)
                    .fold(f64::NEG_INFINITY, f64::max),
                other => other
                    .stationary_points()
                    .map(|s| s.iter().map(|p| p.energy).fold(0.0, f64::max))
                    .unwrap_or(0.0),
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn symmetric_double_well_shift() {
        let w = QuarticWell::new(0.0, -2.0, 1.0).unwrap();
        assert_relative_eq!(w.shift(), 1.0, epsilon = 1e-14);
        let pts = w.stationary_points();
        assert_eq!(pts.len(), 3);
        assert_relative_eq!(pts[0].position, -1.0, epsilon = 1e-14);
        assert_relative_eq!(pts[1].position, 1.0, epsilon = 1e-14);
        assert_eq!(pts[0].energy, 0.0);
        assert!(pts[1].energy.abs() < 1e-14);
        assert_eq!(pts[2].kind, StationaryKind::Maximum);
        assert_relative_eq!(pts[2].energy, 1.0, epsilon = 1e-14);
        assert!(pts[..2].iter().all(|p| p.kind == StationaryKind::Minimum));
    }

    #[test]
    fn harmonic_minimum_at_origin() {
        let c = PotentialComponent::harmonic(1.0).unwrap();
        assert_eq!(c.kind(), ComponentKind::Harmonic);
        let pts = c.stationary_points().unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].position, 0.0);
        assert_eq!(pts[0].energy, 0.0);
        assert_relative_eq!(c.frequency().unwrap(), 2f64.sqrt());
    }

    #[test]
    fn asymmetric_double_well_roots() {
        let w = QuarticWell::new(0.5, -2.0, 1.0).unwrap();
        let pts = w.stationary_points();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[0].energy, 0.0);
        assert!(pts[1].energy > 0.0 && pts[1].kind == StationaryKind::Minimum);
        assert_eq!(pts[2].kind, StationaryKind::Maximum);
        for p in pts {
            assert!(w.polynomial().derivative(p.position).abs() < 1e-12);
            assert!((w.eval(p.position) - p.energy).abs() < 1e-12);
        }
        // Global minimum sits in the left well for a > 0.
        assert!(w.global_minimum() < 0.0);
    }

    #[test]
    fn plateau_like_quartic_is_valid() {
        let w = QuarticWell::new(0.52, -0.52, 0.26).unwrap();
        assert!(w.eval(w.global_minimum()).abs() < 1e-12);
        // a_W = sqrt(8 * 0.52^3 / (27 * 0.26)) ~ 0.3466 < 0.52.
        assert_eq!(w.shape(), WellShape::SingleWell);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_well(0.5, -2.0, 1.0).unwrap(),
            WellShape::DoubleWell
        );
        assert_relative_eq!(double_well_threshold(-2.0, 1.0), (64.0f64 / 27.0).sqrt());
        assert_eq!(classify_well(0.0, 1.0, 0.0).unwrap(), WellShape::Quadratic);
        for i in 1..=15 {
            let shape = classify_well(i as f64 / 5.0, -2.0, 1.0).unwrap();
            let expected = if i <= 7 {
                WellShape::DoubleWell
            } else {
                WellShape::SingleWell
            };
            assert_eq!(shape, expected, "i = {i}");
        }
        assert!(classify_well(0.0, -1.0, 0.0).is_err());
        assert!(classify_well(0.0, 0.0, 0.0).is_err());
        assert!(classify_well(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn degenerate_points_are_flagged() {
        let a_w = double_well_threshold(-2.0, 1.0);
        let w = QuarticWell::new(a_w, -2.0, 1.0).unwrap();
        let pts = w.stationary_points();
        assert_eq!(pts.len(), 2);
        assert!(pts
            .iter()
            .any(|p| p.degenerate && p.kind == StationaryKind::Inflection));
        let pure = QuarticWell::new(0.0, 0.0, 1.0).unwrap();
        let pts = pure.stationary_points();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].degenerate);
        assert_eq!(pts[0].kind, StationaryKind::Minimum);
    }

    #[test]
    fn plateau_validation() {
        assert!(PlateauWell::from_lengths(&[]).is_err());
        assert!(PlateauWell::from_lengths(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(PlateauWell::from_intervals(&[(0.0, 0.0, 1.0), (1.0, 0.5, 2.0)]).is_err());
        let w = PlateauWell::from_intervals(&[(2.0, 3.0, 4.0), (0.0, 0.0, 1.0)]).unwrap();
        assert_eq!(w.plateaus()[0].left, 0.0);
        assert_eq!(w.eval(0.5), 0.0);
        assert_eq!(w.eval(3.5), 2.0);
        assert!(w.eval(2.0).is_infinite());
        let merged = PlateauWell::from_lengths(&[(1.0, 0.5), (0.0, 1.0), (1.0, 0.5)])
            .unwrap()
            .energy_lengths();
        assert_eq!(merged, vec![(0.0, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn power_validation() {
        assert!(PowerWell::new(0.0, 2.0).is_err());
        assert!(PowerWell::new(1.0, -1.0).is_err());
        assert_eq!(PowerWell::new(2.0, 3.0).unwrap().eval(-2.0), 16.0);
    }

    #[test]
    fn empty_system_rejected() {
        assert_eq!(
            SeparableSystem::new(vec![]).unwrap_err(),
            Error::InvalidParameter("f >= 1 required".into())
        );
    }

    #[test]
    fn sublevel_pieces_below_and_above_barrier() {
        let w = QuarticWell::new(0.0, -2.0, 1.0).unwrap();
        let below = w.sublevel_pieces(0.5);
        assert_eq!(below.len(), 4);
        let above = w.sublevel_pieces(1.5);
        assert_eq!(above.len(), 4);
        assert_eq!(
            above
                .iter()
                .filter(|p| p.turning == TurningEnd::None)
                .count(),
            2
        );
        for p in below.iter().chain(&above) {
            let t = match p.turning {
                TurningEnd::Start => p.start,
                TurningEnd::End => p.end,
                TurningEnd::None => continue,
            };
            let e = if below.contains(p) { 0.5 } else { 1.5 };
            assert!((w.eval(t) - e).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn minimum_evaluates_to_zero(a in -3.0..3.0f64, b in -3.0..3.0f64, c in 0.05..3.0f64) {
            let w = QuarticWell::new(a, b, c).unwrap();
            prop_assert!(w.eval(w.global_minimum()).abs() < 1e-12);
        }

        #[test]
        fn confining_far_from_stationary_points(a in -3.0..3.0f64, b in -3.0..3.0f64, c in 0.05..3.0f64) {
            let w = QuarticWell::new(a, b, c).unwrap();
            let outer = w.stationary_points().iter().map(|p| p.position.abs()).fold(0.1, f64::max);
            prop_assert!(w.eval(10.0 * outer) > 0.0);
            prop_assert!(w.eval(-10.0 * outer) > 0.0);
        }

        #[test]
        fn classification_has_parity_symmetry(a in -3.0..3.0f64, b in -3.0..3.0f64, c in 0.0..3.0f64) {
            prop_assume!(c > 0.0 || b > 0.0);
            prop_assert_eq!(classify_well(a, b, c).unwrap(), classify_well(-a, b, c).unwrap());
        }

        #[test]
        fn stationary_energies_translation_invariant(
            a in -2.0..2.0f64, b in -3.0..1.0f64, c in 0.2..2.0f64, shift in -2.0..2.0f64
        ) {
            let raw = Quartic { coeffs: [0.0, a, b, 0.0, c] };
            let moved = raw.translated(shift);
            let e1: Vec<f64> = raw.stationary_points().iter().map(|p| p.energy).collect();
            let e2: Vec<f64> = moved.stationary_points().iter().map(|p| p.energy).collect();
            prop_assert_eq!(e1.len(), e2.len());
            for (x, y) in e1.iter().zip(&e2) {
                prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
            }
        }
    }
}
