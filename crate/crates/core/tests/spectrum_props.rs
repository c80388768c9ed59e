use cavity_eit::dynamics::{build_liouvillian, expect, steady_state};
use cavity_eit::hilbert::{build_space, SpaceDims};
use cavity_eit::model::{dissipators, hamiltonian, ModelKind, SystemParams};
use cavity_eit::spectrum::*;
use proptest::prelude::*;

fn base() -> SystemParams {
    let mut p = SystemParams::default();
    p.dims.n_phonon = 12;
    p
}

#[test]
fn empty_cavity_width_is_twice_kappa() {
    let p = SystemParams { g: 0.0, ..base() };
    let w = eit_linewidth(&p, ModelKind::Thermal).unwrap();
    assert!((w / 0.8 - 1.0).abs() < 1e-3, "{w}");
}

#[test]
fn closed_form_is_the_coherent_part_of_the_motionless_output() {
    let dims = SpaceDims::new(3, 3, 1).unwrap();
    let ops = build_space(dims).unwrap();
    let eps = 1e-3;
    for d in [-3.0, -1.5, -1.0, -0.5, 0.0, 0.7] {
        let p = SystemParams { epsilon: eps, dims, ..Default::default() }.with_detuning(d);
        let l = build_liouvillian(&hamiltonian(&p, ModelKind::NonThermal).unwrap(), &dissipators(&p).unwrap()).unwrap();
        let rho = steady_state(&l).unwrap();
        let unit = (eps / p.kappa).powi(2);
        let field = expect(&ops.a, &rho).unwrap().norm_sqr() / unit;
        let total = expect(&ops.photon_number(), &rho).unwrap().re / unit;
        let a = analytic_transmission(&p, d);
        assert!((field / a - 1.0).abs() < 1e-3, "at {d}: |<a>|^2 {field} vs {a}");
        // Jumps e -> u stay inside the one-excitation sector and refill the cavity.
        assert!(total >= field * (1.0 - 1e-6), "at {d}: {total} < {field}");
    }
}

#[test]
fn weak_probe_and_exact_agree_on_the_linewidth() {
    let mut p = base();
    p.dims.n_photon = 2;
    p.dims.n_phonon = 8;
    let grid = linspace(-1.5, 1.5, 121);
    let fwhm = |m| {
        let s = sweep_spectrum_with(&p, ModelKind::Thermal, &grid, m).unwrap();
        fit_lorentzian(&s, central_window(&s).unwrap()).unwrap().fwhm
    };
    let (w, e) = (fwhm(SweepMethod::WeakProbe), fwhm(SweepMethod::Exact));
    assert!((w / e - 1.0).abs() < 5e-3, "{w} vs {e}");
}

#[test]
fn ground_state_bath_has_no_central_peak() {
    let p = SystemParams { n_th: 0.0, ..base() };
    assert!(matches!(eit_linewidth(&p, ModelKind::Thermal), Err(cavity_eit::Error::NoCentralPeak)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_recovers_synthetic_lorentzians(a in 0.1f64..10.0, w in 0.2f64..1.0, x0 in -0.2f64..0.2, c in 0.0f64..0.5) {
        let grid = linspace(-3.0, 3.0, 301);
        let t: Vec<f64> = grid.iter().map(|&x| lorentzian(x, a, w, x0, c)).collect();
        let s = Spectrum::new(grid, t, ModelKind::Thermal, SystemParams::default()).unwrap();
        let f = fit_lorentzian(&s, central_window(&s).unwrap()).unwrap();
        prop_assert!((f.fwhm / w - 1.0).abs() < 1e-6);
        prop_assert!((f.center - x0).abs() < 1e-6);
    }
}
