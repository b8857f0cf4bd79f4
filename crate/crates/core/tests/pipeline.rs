//! End-to-end checks across modules: spectrum -> unfolding -> window scan,
//! and agreement of the sequential and parallel execution paths.

use chaoslab_core::classical::{lyapunov_map, place_seeds, LyapunovControls, SeedPolicy};
use chaoslab_core::dos::{cumulative, dos_curve};
use chaoslab_core::quantum::{compute_spectrum, SpectrumOptions};
use chaoslab_core::stats::{monte_carlo_calibration, scan_windows, unfold_block, SpacingLaw};
use chaoslab_core::{Exec, Model, ModelParams};

fn dicke(ratio: f64, two_j: u32, n_max: u32) -> ModelParams {
    ModelParams::new(Model::Dicke, 1.0, 1.0, 0.0, two_j, n_max).unwrap().with_gamma_ratio(ratio)
}

/// Relative deviation of the level count from `Gamma_+` at scaled energy `eps`,
/// plus the unfolded spectrum's mean spacing.
fn count_deviation(two_j: u32, eps: f64) -> (f64, f64) {
    let p = dicke(0.5, two_j, 80);
    let block = compute_spectrum(&p, &SpectrumOptions::default()).unwrap();
    let levels = block.converged_energies();
    let top = *levels.last().unwrap();
    let e = eps * p.energy_scale();
    assert!(e < top, "2j = {two_j}: converged levels end at {}", top / p.energy_scale());
    let cum = cumulative(&p, p.ground_energy(), top, 200, Exec::Parallel).unwrap();
    let count = levels.partition_point(|&x| x <= e) as f64;
    let smooth = cum.value(e).unwrap();
    let unfolded = unfold_block(&block, &cum).unwrap();
    let spacings = unfolded.window_spacings(0, unfolded.len());
    ((count - smooth).abs() / smooth, spacings.iter().sum::<f64>() / spacings.len() as f64)
}

#[test]
fn staircase_approaches_semiclassical_count() {
    // The count exceeds Gamma_+ by finite-j corrections, which shrink with j.
    let (small, mean_small) = count_deviation(20, 0.5);
    let (large, mean_large) = count_deviation(40, 0.5);
    assert!(large < small, "2j = 20: {small}, 2j = 40: {large}");
    assert!(large < 0.15, "{large}");
    for mean in [mean_small, mean_large] {
        assert!((mean - 1.0).abs() < 0.15, "mean unfolded spacing {mean}");
    }
}

#[test]
fn execution_paths_agree() {
    let p = dicke(2.0, 40, 80);
    let seeds = place_seeds(&p, -0.5 * p.energy_scale(), &SeedPolicy::Grid { count: 6, grid: 20 }).unwrap();
    let controls = LyapunovControls { t_end: 100.0, ..Default::default() };
    let seq = lyapunov_map(&seeds, &p, &controls, Exec::Sequential).unwrap();
    let par = lyapunov_map(&seeds, &p, &controls, Exec::Parallel).unwrap();
    assert_eq!(seq, par);

    let mc = |exec| monte_carlo_calibration(SpacingLaw::Poisson, 300, 64, 11, exec).unwrap();
    assert_eq!(mc(Exec::Sequential), mc(Exec::Parallel));

    let eps: Vec<f64> = (0..50).map(|k| -1.9 + 0.08 * k as f64).collect();
    assert_eq!(dos_curve(&p, &eps, Exec::Sequential).unwrap(), dos_curve(&p, &eps, Exec::Parallel).unwrap());

    let q = dicke(0.5, 40, 80);
    let block = compute_spectrum(&q, &SpectrumOptions::default()).unwrap();
    let top = *block.converged_energies().last().unwrap();
    let cum = cumulative(&q, q.ground_energy(), top, 200, Exec::Sequential).unwrap();
    let unfolded = unfold_block(&block, &cum).unwrap();
    let scan = |exec| scan_windows(&unfolded, 51, 10, exec).unwrap();
    assert_eq!(scan(Exec::Sequential), scan(Exec::Parallel));
}
