//! Stationary points of separable systems, the singularities they imply in
//! the level density, and a least-squares detector for those singularities.
//!
//! A separable Hamiltonian has a stationary point for every choice of one
//! stationary point per component, with all momenta zero. The Hessian is
//! block diagonal, so its rank of instability is the number of components
//! sitting at a maximum.

use nalgebra::{DMatrix, DVector};

use crate::density::{
    merge_critical_values, CriticalOrigin, CriticalValue, LevelDensity, SingularPoint,
    SingularityKind,
};
use crate::error::{Error, Result};
use crate::finite_diff::Stencil;
use crate::potential::{PotentialComponent, SeparableSystem, StationaryKind};

/// Stationary point of the full phase-space Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPointInfo {
    /// Index into each component's stationary-point list.
    pub choice: Vec<usize>,
    /// Coordinates `q_i` (momenta vanish).
    pub configuration: Vec<f64>,
    pub energy: f64,
    /// Number of negative Hessian eigenvalues.
    pub rank: usize,
    pub degenerate: bool,
    pub predicted: SingularityKind,
}

impl StationaryPointInfo {
    pub fn origin(&self) -> CriticalOrigin {
        if self.degenerate {
            CriticalOrigin::Degenerate
        } else {
            CriticalOrigin::Nondegenerate { rank: self.rank }
        }
    }
}

/// Cartesian product of per-component stationary points, sorted by energy.
pub fn enumerate_stationary_points(system: &SeparableSystem) -> Result<Vec<StationaryPointInfo>> {
    let per: Vec<_> = system
        .components()
        .iter()
        .map(|c| match c {
            PotentialComponent::Plateau(_) => Err(Error::Unsupported(
                "plateau wells: use predict_plateau_singularities".into(),
            )),
            other => other.stationary_points(),
        })
        .collect::<Result<_>>()?;
    let total: usize = per.iter().map(|p| p.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; per.len()];
    for _ in 0..total {
        let mut energy = 0.0;
        let mut rank = 0;
        let mut degenerate = false;
        let mut configuration = Vec::with_capacity(per.len());
        for (i, &k) in idx.iter().enumerate() {
            let p = &per[i][k];
            energy += p.energy;
            configuration.push(p.position);
            degenerate |= p.degenerate;
            if p.kind == StationaryKind::Maximum {
                rank += 1;
            }
        }
        let origin = if degenerate {
            CriticalOrigin::Degenerate
        } else {
            CriticalOrigin::Nondegenerate { rank }
        };
        out.push(StationaryPointInfo {
            choice: idx.clone(),
            configuration,
            energy,
            rank,
            degenerate,
            predicted: SingularityKind::from_origin(origin),
        });
        // Odometer increment, last component fastest.
        for i in (0..idx.len()).rev() {
            idx[i] += 1;
            if idx[i] < per[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
    out.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then_with(|| a.choice.cmp(&b.choice))
    });
    Ok(out)
}

/// Merged singularity predictions for `f` degrees of freedom.
pub fn predict_singularities(points: &[StationaryPointInfo], dof: usize) -> Vec<SingularPoint> {
    let values: Vec<CriticalValue> = points
        .iter()
        .map(|p| CriticalValue {
            energy: p.energy,
            origin: p.origin(),
        })
        .collect();
    merge_critical_values(&values, dof)
}

/// Inverse-square-root singularities of a plateau well in a system of `dof`
/// degrees of freedom whose other components sit at their minima.
pub fn predict_plateau_singularities(plateaus: &[(f64, f64)], dof: usize) -> Vec<SingularPoint> {
    let values: Vec<CriticalValue> = plateaus
        .iter()
        .map(|&(energy, _)| CriticalValue {
            energy,
            origin: CriticalOrigin::Plateau,
        })
        .collect();
    merge_critical_values(&values, dof)
}

/// Outcome of a detection attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detected {
    /// The smooth model explains the data.
    NoSingularity,
    Jump,
    Log,
    InverseSqrt,
    /// Not enough grid nodes or no clear winner among the models.
    Inconclusive,
}

impl Detected {
    pub fn label(&self) -> &'static str {
        match self {
            Self::NoSingularity => "none",
            Self::Jump => "jump",
            Self::Log => "log",
            Self::InverseSqrt => "inverse_sqrt",
            Self::Inconclusive => "inconclusive",
        }
    }

    /// Whether this matches a predicted kind (ignoring sign).
    pub fn matches(&self, kind: &SingularityKind) -> bool {
        matches!(
            (self, kind),
            (Self::Jump, SingularityKind::Jump { .. })
                | (Self::Log, SingularityKind::LogDivergence { .. })
                | (Self::InverseSqrt, SingularityKind::InverseSqrt)
        )
    }
}

/// Evidence gathered by [`detect_nonanalyticity`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub requested_energy: f64,
    pub located_energy: f64,
    pub order: usize,
    pub detected: Detected,
    /// Coefficient of the singular basis function, in units of the
    /// `order`-th derivative of `rho`.
    pub amplitude: f64,
    /// Sign of `amplitude` (0 when nothing was detected).
    pub sign: i8,
    /// Grid spacing; features narrower than a few cells are unresolved.
    pub resolution: f64,
    /// Bayesian information criterion per model: smooth, jump, log, inverse-sqrt.
    pub scores: [f64; 4],
}

#[derive(Debug, Clone, Copy)]
enum Model {
    Smooth,
    Jump,
    Log,
    InverseSqrt,
}

const MODELS: [Model; 4] = [Model::Smooth, Model::Jump, Model::Log, Model::InverseSqrt];

impl Model {
    // Basis functions at offset x (in cells); the singular one comes first
    // after the polynomial part so its coefficient is easy to pick.
    fn basis(&self, x: f64) -> Vec<f64> {
        let step = if x > 0.0 { 1.0 } else { 0.0 };
        match self {
            Model::Smooth => vec![1.0, x, x * x, x * x * x],
            Model::Jump => vec![1.0, x, x * x, step, step * x],
            Model::Log => {
                let l = x.abs().ln();
                vec![1.0, x, x * x, l, x * l]
            }
            Model::InverseSqrt => {
                let r = x.max(0.0).sqrt();
                vec![1.0, x, x * x, if x > 0.0 { 1.0 / r } else { 0.0 }, step * r]
            }
        }
    }
}

/// Flanking nodes used on each side of the excluded gap.
pub const FLANK: usize = 24;

/// Fewest nodes per side for a fit; closer neighbouring singular points
/// make the result inconclusive.
pub const MIN_FLANK: usize = 8;

// Least-squares fit; returns (residual sum of squares, coefficients).
fn fit(xs: &[f64], ys: &[f64], model: Model) -> Option<(f64, DVector<f64>)> {
    let cols = model.basis(1.0).len();
    let a = DMatrix::from_fn(xs.len(), cols, |i, j| model.basis(xs[i])[j]);
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).ok()?;
    let r = &a * &coef - b;
    Some((r.norm_squared(), coef))
}

/// Looks for a non-analyticity of `d^order rho / dE^order` near `energy`.
///
/// The derivative is taken by central differences on the grid (zero below
/// the origin), nodes within `2 + stencil half-width` cells of the candidate
/// centre are dropped, and smooth, jump, logarithmic and inverse-square-root
/// models are fitted to up to `FLANK` nodes on each side, stopping half way
/// to the nearest other singular point. The centre is scanned in
/// quarter-cell steps. Models are ranked by the Bayesian information
/// criterion; a singular model must beat the smooth one clearly.
pub fn detect_nonanalyticity(
    density: &LevelDensity,
    energy: f64,
    order: usize,
) -> Result<DetectionReport> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "derivative order must be >= 1".into(),
        ));
    }
    let h = density.spacing();
    let lo = density.origin();
    let hi = density.top();
    if !(energy >= lo && energy < hi) {
        return Err(Error::OutsideGrid { energy, lo, hi });
    }
    let stencil = Stencil::central(order, 2);
    let len = density.len() as isize;
    let values = density.values();
    let value = |k: isize| -> Option<f64> {
        if k < 0 {
            Some(0.0)
        } else if k < len {
            Some(values[k as usize])
        } else {
            None
        }
    };
    let gap = 2 + stencil.half;
    let node = |e: f64| (e - lo) / h - 0.5;
    let below = density
        .singular_points()
        .iter()
        .map(|s| s.energy)
        .filter(|&e| e < energy - 0.5 * h)
        .fold(f64::NEG_INFINITY, f64::max);
    let above = density
        .singular_points()
        .iter()
        .map(|s| s.energy)
        .filter(|&e| e > energy + 0.5 * h)
        .fold(f64::INFINITY, f64::min);
    let left_limit = if below.is_finite() {
        node(0.5 * (below + energy)).floor() as isize + 1
    } else {
        isize::MIN
    };
    let right_limit = if above.is_finite() {
        node(0.5 * (above + energy)).ceil() as isize - 1
    } else {
        isize::MAX
    };
    let inconclusive = DetectionReport {
        requested_energy: energy,
        located_energy: energy,
        order,
        detected: Detected::Inconclusive,
        amplitude: 0.0,
        sign: 0,
        resolution: h,
        scores: [f64::NAN; 4],
    };

    let mut best: Option<(f64, [f64; 4], [f64; 4], f64)> = None;
    for shift in -4..=4 {
        let centre = energy + shift as f64 * 0.25 * h;
        // Position of the centre in node units (node j sits at j + 1/2 cells).
        let u = (centre - lo) / h - 0.5;
        let mut xs = Vec::with_capacity(2 * FLANK);
        let mut ys = Vec::with_capacity(2 * FLANK);
        let left_end = (u - gap as f64).ceil() as isize - 1;
        let right_start = (u + gap as f64).floor() as isize + 1;
        let left_start = (left_end - FLANK as isize + 1).max(left_limit);
        let right_end = (right_start + FLANK as isize - 1).min(right_limit);
        if left_end - left_start + 1 < MIN_FLANK as isize
            || right_end - right_start + 1 < MIN_FLANK as isize
        {
            return Ok(inconclusive);
        }
        for k in (left_start..=left_end).chain(right_start..=right_end) {
            match stencil.apply_with(k, h, value) {
                Some(d) => {
                    xs.push(k as f64 - u);
                    ys.push(d);
                }
                None => return Ok(inconclusive),
            }
        }
        let scale = ys.iter().map(|y| y.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(DetectionReport {
                detected: Detected::NoSingularity,
                scores: [0.0; 4],
                ..inconclusive
            });
        }
        let yn: Vec<f64> = ys.iter().map(|y| y / scale).collect();
        let n = xs.len() as f64;
        let floor = 1e-20 * n;
        let mut scores = [f64::INFINITY; 4];
        let mut amps = [0.0; 4];
        for (m, model) in MODELS.iter().enumerate() {
            if let Some((rss, coef)) = fit(&xs, &yn, *model) {
                let k = coef.len() as f64;
                scores[m] = n * ((rss + floor) / n).ln() + k * n.ln();
                amps[m] = if coef.len() > 3 { coef[3] * scale } else { 0.0 };
            }
        }
        let top = scores.iter().copied().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| top < b.0) {
            best = Some((top, scores, amps, centre));
        }
    }
    let (_, scores, amps, centre) = best.expect("at least one centre");
    let mut order_idx = [0usize, 1, 2, 3];
    order_idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let winner = order_idx[0];
    let margin = scores[order_idx[1]] - scores[winner];
    let detected = match winner {
        0 => Detected::NoSingularity,
        _ if margin < 6.0 => Detected::Inconclusive,
        1 => Detected::Jump,
        2 => Detected::Log,
        _ => Detected::InverseSqrt,
    };
    let amplitude = if winner == 0 { 0.0 } else { amps[winner] };
    Ok(DetectionReport {
        requested_energy: energy,
        located_energy: if winner == 0 { energy } else { centre },
        order,
        detected,
        amplitude,
        sign: if detected == Detected::NoSingularity || detected == Detected::Inconclusive {
            0
        } else {
            amplitude.signum() as i8
        },
        resolution: h,
        scores,
    })
}
