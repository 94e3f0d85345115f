use std::f64::consts::PI;

use approx::assert_relative_eq;
use esqpt_thermo::canonical::Canonical;
use esqpt_thermo::density::*;
use esqpt_thermo::potential::{PlateauWell, PotentialComponent, SeparableSystem};
use esqpt_thermo::quadrature::Tolerance;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Phase-space lattice count: `(1 / 2 pi) |{E - dE/2 <= H < E + dE/2}| / dE`
/// on a midpoint lattice in `(q, p)`. Rows are counted in closed form, which
/// gives the same sum as visiting every lattice point.
fn lattice_density(component: &PotentialComponent, energy: f64, de: f64, dq: f64, dp: f64) -> f64 {
    let hi = energy + 0.5 * de;
    let lo = energy - 0.5 * de;
    let mut reach = 1.0;
    while component.eval(reach) <= hi || component.eval(-reach) <= hi {
        reach *= 2.0;
    }
    // Lattice points p_k = (k + 1/2) dp with k >= 0 and p_k < bound.
    let below = |bound: f64| -> f64 {
        if bound <= 0.0 {
            0.0
        } else {
            (bound / dp - 0.5).ceil().max(0.0)
        }
    };
    let rows = (2.0 * reach / dq).ceil() as i64;
    let mut count = 0.0;
    for i in 0..rows {
        let q = -reach + (i as f64 + 0.5) * dq;
        let v = component.eval(q);
        if v >= hi {
            continue;
        }
        let outer = below((2.0 * (hi - v)).sqrt());
        let inner = if lo > v {
            below((2.0 * (lo - v)).sqrt())
        } else {
            0.0
        };
        count += 2.0 * (outer - inner);
    }
    count * dq * dp / (2.0 * PI * de)
}

#[test]
fn one_dof_density_matches_phase_space_lattice_count() {
    let potentials = [
        PotentialComponent::harmonic(1.0).unwrap(),
        PotentialComponent::quartic(0.3, 1.0, 0.5).unwrap(),
        PotentialComponent::quartic(0.0, -2.0, 1.0).unwrap(),
        PotentialComponent::quartic(0.5, -2.0, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for v in &potentials {
        let critical: Vec<f64> = v
            .stationary_points()
            .unwrap()
            .iter()
            .map(|p| p.energy)
            .collect();
        let mut done = 0;
        while done < 20 {
            let e: f64 = rng.gen_range(0.05..4.0);
            if critical.iter().any(|c| (e - c).abs() < 0.05) {
                continue;
            }
            let exact = density_1d_numeric(v, e).unwrap();
            let brute = lattice_density(v, e, 5e-4, 1e-5, 1e-9);
            let rel = ((brute - exact) / exact).abs();
            worst = worst.max(rel);
            assert!(rel <= 1e-4, "{v:?} E = {e}: lattice {brute} vs {exact}");
            done += 1;
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn harmonic_density_is_inverse_frequency() {
    let v = PotentialComponent::harmonic(1.0).unwrap();
    for e in [0.01, 0.3, 1.0, 7.5, 100.0] {
        assert_relative_eq!(
            density_1d_numeric(&v, e).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-9
        );
    }
}

fn plateau_convolution(plateaus: &[(f64, f64)], cells: usize) -> LevelDensity {
    let grid = EnergyGrid::new(8.0, cells).unwrap();
    let tol = Tolerance::default();
    let parts = vec![
        component_density(&PotentialComponent::plateau(plateaus).unwrap(), grid, tol).unwrap(),
        component_density(&PotentialComponent::harmonic(1.0).unwrap(), grid, tol).unwrap(),
        component_density(&PotentialComponent::harmonic(0.5).unwrap(), grid, tol).unwrap(),
    ];
    convolve_densities(&parts).unwrap()
}

#[test]
fn convolution_reproduces_plateau_closed_form() {
    let plateaus = [(0.0, 1.0), (1.0, 0.5), (2.5, 2.0)];
    let omegas = [2.0f64.sqrt(), 1.0];
    let coarse = plateau_convolution(&plateaus, 4000);
    let fine = plateau_convolution(&plateaus, 8000);
    let error = |d: &LevelDensity, e: f64| {
        let j = (e / d.spacing()) as usize;
        let exact = density_plateau(3, &plateaus, &omegas, d.energy(j)).unwrap();
        (d.values()[j] / exact - 1.0).abs()
    };
    for k in 0..40 {
        let e = 0.05 + 0.19 * k as f64;
        // Cell means of the 1/sqrt onsets converge as h^(3/2).
        let (ec, ef) = (error(&coarse, e), error(&fine, e));
        assert!(ef < 0.45 * ec.max(1e-9), "E = {e}: {ec:e} -> {ef:e}");
        if plateaus.iter().all(|p| e < p.0 || e - p.0 > 0.3) {
            assert!(ec <= 1e-4, "E = {e}: {ec:e}");
        }
    }
}

#[test]
fn closed_form_route_matches_convolution_route() {
    let system = SeparableSystem::new(vec![
        PotentialComponent::quartic(0.5, -2.0, 1.0).unwrap(),
        PotentialComponent::harmonic(1.0).unwrap(),
    ])
    .unwrap();
    let grid = EnergyGrid::new(6.0, 3000).unwrap();
    let tol = Tolerance::default();
    let closed = build_density(&system, grid, tol).unwrap();
    let parts: Vec<_> = system
        .components()
        .iter()
        .map(|c| component_density(c, grid, tol).unwrap())
        .collect();
    let conv = convolve_densities(&parts).unwrap();
    for j in (20..2900).step_by(41) {
        assert_relative_eq!(conv.values()[j], closed.values()[j], max_relative = 1e-3);
    }
}

fn smooth_density(shift: f64, width: f64, dof: usize) -> LevelDensity {
    let h = 0.01;
    let masses = (0..600)
        .map(|j| {
            let e = (j as f64 + 0.5) * h;
            h * (e * e * (-(e - shift).powi(2) / width).exp() + 0.1 * e)
        })
        .collect();
    LevelDensity::from_cell_masses(0.0, h, masses, vec![], dof)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn convolution_is_associative(s1 in 0.5..3.0f64, s2 in 0.5..3.0f64, s3 in 0.5..3.0f64, w in 0.2..2.0f64) {
        let (a, b, c) = (smooth_density(s1, w, 1), smooth_density(s2, w, 1), smooth_density(s3, 1.0, 1));
        let left = convolve_densities(&[convolve_densities(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = convolve_densities(&[a, convolve_densities(&[b, c]).unwrap()]).unwrap();
        let scale = left.values().iter().copied().fold(0.0, f64::max);
        for (x, y) in left.values().iter().zip(right.values()) {
            prop_assert!((x - y).abs() <= 1e-8 * scale.max(x.abs()));
        }
    }

    #[test]
    fn convolution_is_commutative(s1 in 0.5..3.0f64, s2 in 0.5..3.0f64) {
        let (a, b) = (smooth_density(s1, 1.0, 1), smooth_density(s2, 0.5, 1));
        let ab = convolve_densities(&[a.clone(), b.clone()]).unwrap();
        let ba = convolve_densities(&[b, a]).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn plateau_geometry_is_irrelevant(
        lengths in proptest::collection::vec((0.0..3.0f64, 0.1..2.0f64), 1..5),
        gaps in proptest::collection::vec(0.0..1.0f64, 5),
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        // Lay the plateaus out in shuffled order with arbitrary gaps.
        let mut x = -2.0;
        let mut intervals = Vec::new();
        for (k, &i) in order.iter().enumerate() {
            let (e, l) = lengths[i];
            x += gaps[k];
            intervals.push((e, x, x + l));
            x += l;
        }
        let laid_out = PotentialComponent::Plateau(PlateauWell::from_intervals(&intervals).unwrap());
        let canonical = PotentialComponent::plateau(&lengths).unwrap();
        let grid = EnergyGrid::new(5.0, 500).unwrap();
        let tol = Tolerance::default();
        let d1 = component_density(&laid_out, grid, tol).unwrap();
        let d2 = component_density(&canonical, grid, tol).unwrap();
        for (a, b) in d1.values().iter().zip(d2.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let s1 = SeparableSystem::new(vec![laid_out, PotentialComponent::harmonic(1.0).unwrap()]).unwrap();
        let s2 = SeparableSystem::new(vec![canonical, PotentialComponent::harmonic(1.0).unwrap()]).unwrap();
        for beta in [0.3, 1.0, 4.0] {
            let c1 = Canonical::new(&s1).heat_capacity(beta).unwrap();
            let c2 = Canonical::new(&s2).heat_capacity(beta).unwrap();
            prop_assert!((c1 - c2).abs() <= 1e-12 * c1);
        }
    }

    #[test]
    fn power_law_density_integrates_to_cumulative(
        terms in proptest::collection::vec((0.2..3.0f64, 1.0..6.0f64), 1..4),
        e in 0.5..5.0f64,
    ) {
        let spec = PowerLawSpec::separable(terms.iter().map(|&(b, i)| PowerTerm::standard(b, i)).collect()).unwrap();
        let rho = |x: f64| density_power_law(&spec, x).unwrap();
        let (n1, n2) = (spec.cumulative(e), spec.cumulative(e * 1.01));
        // Simpson on the short interval.
        let mid = rho(e * 1.005);
        let simpson = 0.01 * e / 6.0 * (rho(e) + 4.0 * mid + rho(e * 1.01));
        prop_assert!(((n2 - n1) - simpson).abs() <= 1e-6 * (n2 - n1));
    }
}

#[test]
fn laplace_transform_recovers_partition_function() {
    let system = SeparableSystem::new(vec![
        PotentialComponent::quartic(0.5, -2.0, 1.0).unwrap(),
        PotentialComponent::harmonic(1.0).unwrap(),
        PotentialComponent::harmonic(1.0).unwrap(),
    ])
    .unwrap();
    let density = build_density(
        &system,
        EnergyGrid::new(60.0, 4000).unwrap(),
        Tolerance::default(),
    )
    .unwrap();
    let canon = Canonical::new(&system);
    for beta in [0.5, 1.0, 2.0, 5.0] {
        let z = canon.partition_function(beta).unwrap();
        assert_relative_eq!(
            density.laplace_transform(beta).unwrap(),
            z,
            max_relative = 5e-3
        );
    }
}

#[test]
fn singular_points_follow_stationary_ranks() {
    let system = SeparableSystem::new(vec![
        PotentialComponent::quartic(0.5, -2.0, 1.0).unwrap(),
        PotentialComponent::harmonic(1.0).unwrap(),
        PotentialComponent::harmonic(1.0).unwrap(),
    ])
    .unwrap();
    let density = build_density(
        &system,
        EnergyGrid::new(10.0, 1000).unwrap(),
        Tolerance::default(),
    )
    .unwrap();
    let kinds: Vec<_> = density
        .singular_points()
        .iter()
        .map(|s| (s.kind, s.order))
        .collect();
    assert_eq!(
        kinds,
        vec![
            (SingularityKind::Jump { sign: 1 }, 2),
            (SingularityKind::Jump { sign: 1 }, 2),
            (SingularityKind::LogDivergence { sign: -1 }, 2),
        ]
    );
}

#[test]
fn grid_below_eight_cells_rejected() {
    assert!(EnergyGrid::new(1.0, 4).is_err());
    assert!(EnergyGrid::new(-1.0, 100).is_err());
}
