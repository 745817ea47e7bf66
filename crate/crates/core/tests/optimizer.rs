use qsl_core::optimizer::{certify, minimize_tau, project_to_energy, SearchConfig};
use qsl_core::Spectrum;

#[test]
fn optimized_states_never_beat_energy_bound() {
    let spectra = [
        Spectrum::from_list(&[0.0, 2.0]).unwrap(),
        Spectrum::harmonic(9, 0.25).unwrap(),
        Spectrum::power_law(12, 0.5, 1.0).unwrap(),
    ];
    for spectrum in &spectra {
        for seed in 0..3 {
            let config = SearchConfig { seed, budget: 1500, restarts: 4, ..SearchConfig::default() };
            let result = minimize_tau(spectrum, 1.0, &config).unwrap();
            assert!(result.respects_bound(), "{:?}", result.best_tau);
            assert!((result.best_state.energy_stats().mean - 1.0).abs() < 1e-9);
            if result.best_tau.is_some() {
                assert!(certify(&result).unwrap().passed());
            }
        }
    }
}

#[test]
fn same_seed_same_result() {
    let spectrum = Spectrum::harmonic(6, 0.5).unwrap();
    let config = SearchConfig { seed: 11, budget: 800, restarts: 3, ..SearchConfig::default() };
    let a = minimize_tau(&spectrum, 1.0, &config).unwrap();
    let b = minimize_tau(&spectrum, 1.0, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn projection_lands_on_constraint_set() {
    let energies = [0.0, 0.5, 1.0, 2.0, 3.0];
    let p = project_to_energy(&energies, &[0.9, -0.2, 0.1, 0.4, 0.3], 1.2).unwrap();
    assert!(p.iter().all(|&w| w >= 0.0));
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let mean: f64 = p.iter().zip(&energies).map(|(w, e)| w * e).sum();
    assert!((mean - 1.2).abs() < 1e-9);
    assert!(project_to_energy(&energies, &[1.0; 5], 4.0).is_none());
}
