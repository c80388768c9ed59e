use cavity_eit::dynamics::{build_liouvillian, evolve, expect, steady_state, DensityMatrix, EvolveOptions};
use cavity_eit::hilbert::{build_space, SpaceDims};
use cavity_eit::model::{dissipators, hamiltonian, ModelKind, SystemParams};
use cavity_eit::thermometry::thermal_occupancy;

fn small(kind_dims: SpaceDims) -> SystemParams {
    SystemParams { dims: kind_dims, ..Default::default() }
}

#[test]
fn working_point_states_are_physical() {
    for delta in [-1.3, 0.0, 0.4] {
        let p = small(SpaceDims::new(3, 2, 6).unwrap()).with_detuning(delta);
        let l = build_liouvillian(&hamiltonian(&p, ModelKind::Thermal).unwrap(), &dissipators(&p).unwrap()).unwrap();
        let rho = steady_state(&l).unwrap();
        rho.check_physical().unwrap();
        assert!(rho.min_eigenvalue() > -1e-8);
    }
}

#[test]
fn long_evolution_reaches_the_steady_state() {
    let p = small(SpaceDims::new(3, 2, 4).unwrap());
    let l = build_liouvillian(&hamiltonian(&p, ModelKind::Thermal).unwrap(), &dissipators(&p).unwrap()).unwrap();
    let target = steady_state(&l).unwrap();
    // Slowest relaxation is the phonon bath at 2γ_b = 0.2 per μs.
    let rho0 = DensityMatrix::basis_state(p.dims, p.dims.index(2, 0, 0));
    let end = evolve(&l, &rho0, &[200.0], EvolveOptions::default()).unwrap().pop().unwrap();
    let worst = end.as_slice().iter().zip(target.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "max deviation {worst:.3e}");
}

#[test]
fn bath_fixed_point_matches_occupancy() {
    for n_th in [0.5, 1.0, 5.0, 10.0] {
        let (n, cutoff) = thermal_occupancy(0.1, n_th, 1e-4).unwrap();
        assert!((n / n_th - 1.0).abs() < 1e-3, "n_th {n_th}: {n} at cutoff {cutoff}");
    }
}

#[test]
fn weak_probe_photon_number_scales_quadratically() {
    let dims = SpaceDims::new(3, 3, 4).unwrap();
    let ops = build_space(dims).unwrap();
    let photons = |eps: f64| {
        let p = SystemParams { epsilon: eps, dims, ..Default::default() }.with_detuning(0.3);
        let l = build_liouvillian(&hamiltonian(&p, ModelKind::Thermal).unwrap(), &dissipators(&p).unwrap()).unwrap();
        expect(&ops.photon_number(), &steady_state(&l).unwrap()).unwrap().re
    };
    let (lo, hi) = (photons(1e-3), photons(2e-3));
    assert!((hi / lo - 4.0).abs() < 1e-3, "ratio {}", hi / lo);
}
