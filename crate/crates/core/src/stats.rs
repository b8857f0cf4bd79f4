//! Unfolding, nearest-neighbour spacings and Anderson-Darling tests against
//! the Wigner surmise `P_w(s) = (pi s / 2) exp(-pi s^2 / 4)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dos::{dos, CumulativeDensity};
use crate::error::{invalid, ChaosError, Result};
use crate::exec::Exec;
use crate::model::Parity;
use crate::quantum::{BasisScheme, SpectrumBlock};

/// `A^2` above this rejects the Wigner hypothesis at 95% confidence.
pub const AD_CRITICAL: f64 = 2.5;
/// States per window.
pub const DEFAULT_WINDOW: usize = 301;
/// Shift between consecutive windows, in states.
pub const DEFAULT_STEP: usize = 25;
/// Raw gaps below this (relative to `max(1, |E|)`) count as exact degeneracies.
pub const DUPLICATE_GAP: f64 = 1e-12;

const LOG_FLOOR: f64 = 1e-300;
const CDF_CEIL: f64 = 1.0 - 1e-16;

pub fn wigner_pdf(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid("spacing", format!("{s} is negative")));
    }
    Ok(0.5 * PI * s * (-0.25 * PI * s * s).exp())
}

/// `F_w(s) = 1 - exp(-pi s^2 / 4)`.
pub fn wigner_cdf(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid("spacing", format!("{s} is negative")));
    }
    Ok(-(-0.25 * PI * s * s).exp_m1())
}

/// Anderson-Darling statistic of the spacings against `F_w`:
/// `A^2 = -n - sum_k (2k - 1)/n [ln F(s_k) + ln(1 - F(s_{n+1-k}))]` over the
/// sorted sample. `F` is clamped to `[1e-300, 1 - 1e-16]` so that zero or huge
/// spacings give a large finite value instead of an infinity.
pub fn anderson_darling(spacings: &[f64]) -> Result<f64> {
    if spacings.len() < 2 {
        return Err(ChaosError::InsufficientStates { needed: 3, available: spacings.len() + 1 });
    }
    let mut cdf = Vec::with_capacity(spacings.len());
    for &s in spacings {
        cdf.push(wigner_cdf(s)?.clamp(LOG_FLOOR, CDF_CEIL));
    }
    cdf.sort_by(f64::total_cmp);
    let n = cdf.len();
    let nf = n as f64;
    let sum: f64 = (0..n)
        .map(|k| (2 * k + 1) as f64 / nf * (cdf[k].ln() + (-cdf[n - 1 - k]).ln_1p()))
        .sum();
    Ok(-nf - sum)
}

/// Levels mapped through `Gamma_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    /// Parity block the levels came from, when known.
    pub parity: Option<Parity>,
    /// `omega0 j`, for reporting window centres as scaled energies.
    pub energy_scale: f64,
    pub energies: Vec<f64>,
    /// `e_i = Gamma_+(E_i)`
    pub unfolded: Vec<f64>,
    /// `e_{i+1} - e_i`
    pub spacings: Vec<f64>,
    /// Local-density estimate `nu_+((E_i + E_{i+1})/2) (E_{i+1} - E_i)`.
    pub approx_spacings: Vec<f64>,
    /// Pairs `(i, i + 1)` with an exactly degenerate raw gap; left out of the statistics.
    pub excluded: Vec<usize>,
}

impl UnfoldedSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Spacings between consecutive levels in `start..end`, without the excluded pairs.
    pub fn window_spacings(&self, start: usize, end: usize) -> Vec<f64> {
        (start..end.saturating_sub(1)).filter(|i| self.excluded.binary_search(i).is_err()).map(|i| self.spacings[i]).collect()
    }
}

/// Unfolds sorted levels of one symmetry class. The caller vouches that all
/// of them are converged; see [`unfold_block`].
pub fn unfold(energies: &[f64], cumulative: &CumulativeDensity) -> Result<UnfoldedSpectrum> {
    if let Some(i) = energies.windows(2).position(|w| !(w[1] >= w[0])) {
        return Err(ChaosError::InvalidSpectrum(format!("levels {i} and {} are not sorted", i + 1)));
    }
    let params = &cumulative.params;
    let scale = params.energy_scale();
    let unfolded = energies.iter().map(|&e| cumulative.value(e)).collect::<Result<Vec<_>>>()?;
    let spacings: Vec<f64> = unfolded.windows(2).map(|w| w[1] - w[0]).collect();
    let mut approx_spacings = Vec::with_capacity(spacings.len());
    let mut excluded = Vec::new();
    for (i, w) in energies.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap < DUPLICATE_GAP * w[0].abs().max(1.0) {
            excluded.push(i);
        }
        let mid = 0.5 * (w[0] + w[1]);
        approx_spacings.push(0.5 * dos(mid / scale, params)?.nu * gap);
    }
    if !excluded.is_empty() {
        log::warn!("{} degenerate level pairs excluded from the spacing statistics", excluded.len());
    }
    Ok(UnfoldedSpectrum {
        parity: None,
        energy_scale: scale,
        energies: energies.to_vec(),
        unfolded,
        spacings,
        approx_spacings,
        excluded,
    })
}

/// Unfolds the converged prefix of a single-parity Dicke block.
///
/// States below the classical minimum (in the normal phase the quantum
/// ground state lies slightly under `-omega0 j`) have no unfolded value and
/// are dropped from the front; everything kept is consecutive.
pub fn unfold_block(block: &SpectrumBlock, cumulative: &CumulativeDensity) -> Result<UnfoldedSpectrum> {
    match block.basis.scheme {
        BasisScheme::FockParity | BasisScheme::CoherentParity => {}
        other => {
            return Err(ChaosError::InvalidSpectrum(format!("{} blocks do not resolve parity", other.label())));
        }
    }
    let (a, b) = (&block.params, &cumulative.params);
    if (a.model, a.omega, a.omega0, a.gamma, a.two_j) != (b.model, b.omega, b.omega0, b.gamma, b.two_j) {
        return Err(ChaosError::InvalidSpectrum("level counter was built for different parameters".into()));
    }
    let levels = block.converged_energies();
    let lo = cumulative.domain().0;
    let skip = levels.partition_point(|&e| e < lo);
    if skip > 0 {
        log::info!("{skip} levels below the classical minimum left out of the unfolding");
    }
    let mut out = unfold(&levels[skip..], cumulative)?;
    out.parity = Some(block.basis.parity);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdWindow {
    /// Index of the first level in the window.
    pub start: usize,
    /// Mean scaled energy of the window's levels.
    pub eps_center: f64,
    pub a2: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdScan {
    pub window: usize,
    pub step: usize,
    pub windows: Vec<AdWindow>,
}

/// Slides a window of `window` consecutive levels by `step` and tests each
/// window's spacings against the Wigner surmise.
pub fn scan_windows(spectrum: &UnfoldedSpectrum, window: usize, step: usize, exec: Exec) -> Result<AdScan> {
    if window < 3 {
        return Err(invalid("window", format!("{window} levels give fewer than two spacings")));
    }
    if step == 0 {
        return Err(invalid("step", "must be positive"));
    }
    if spectrum.len() < window {
        return Err(ChaosError::InsufficientStates { needed: window, available: spectrum.len() });
    }
    let starts: Vec<usize> = (0..=spectrum.len() - window).step_by(step).collect();
    let windows = exec
        .map(&starts, |&start| {
            let end = start + window;
            let a2 = anderson_darling(&spectrum.window_spacings(start, end))?;
            let eps_center = spectrum.energies[start..end].iter().sum::<f64>() / (window as f64 * spectrum.energy_scale);
            Ok(AdWindow { start, eps_center, a2, reject: a2 > AD_CRITICAL })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(AdScan { window, step, windows })
}

/// Spacing laws for the calibration runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacingLaw {
    Wigner,
    /// Unit-mean exponential spacings of uncorrelated levels.
    Poisson,
}

impl SpacingLaw {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        match self {
            SpacingLaw::Wigner => (-4.0 / PI * (-u).ln_1p()).sqrt(),
            SpacingLaw::Poisson => -(-u).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub sample_size: usize,
    pub rejection_rate: f64,
    pub median_a2: f64,
}

/// Monte Carlo calibration of the test: `trials` samples of `sample_size`
/// spacings drawn from `law`. Trial `k` uses stream `k` of a ChaCha8
/// generator seeded with `seed`, so the result does not depend on `exec`.
pub fn monte_carlo_calibration(law: SpacingLaw, sample_size: usize, trials: usize, seed: u64, exec: Exec) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let a2 = exec
        .map_range(trials, |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let sample: Vec<f64> = (0..sample_size).map(|_| law.sample(&mut rng)).collect();
            anderson_darling(&sample)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rejected = a2.iter().filter(|&&a| a > AD_CRITICAL).count();
    let mut sorted = a2;
    sorted.sort_by(f64::total_cmp);
    let median = if trials % 2 == 1 { sorted[trials / 2] } else { 0.5 * (sorted[trials / 2 - 1] + sorted[trials / 2]) };
    Ok(MonteCarloSummary { trials, sample_size, rejection_rate: rejected as f64 / trials as f64, median_a2: median })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dos::cumulative;
    use crate::model::{Model, ModelParams};
    use crate::quantum::BasisSpec;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn wigner_closed_forms() {
        assert_eq!(wigner_cdf(0.0).unwrap(), 0.0);
        assert_eq!(wigner_cdf(50.0).unwrap(), 1.0);
        let median = (4.0 * 2f64.ln() / PI).sqrt();
        assert!((median - 0.93944).abs() < 1e-5);
        assert!((wigner_cdf(median).unwrap() - 0.5).abs() < 1e-15);
        assert!(wigner_pdf(-0.1).is_err() && wigner_cdf(-1e-300).is_err());
        // normalization and unit mean by Simpson's rule
        let (n, top) = (20_000, 12.0);
        let h = top / n as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| {
            (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * f(i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        assert!((simpson(&|s| wigner_pdf(s).unwrap()) - 1.0).abs() < 1e-12);
        assert!((simpson(&|s| s * wigner_pdf(s).unwrap()) - 1.0).abs() < 1e-12);
        // pdf is the derivative of the cdf
        for s in [0.1, 0.7, 1.3, 2.5] {
            let d = (wigner_cdf(s + 1e-6).unwrap() - wigner_cdf(s - 1e-6).unwrap()) / 2e-6;
            assert!((d - wigner_pdf(s).unwrap()).abs() < 1e-8);
        }
    }

    /// Textbook form, written out term by term without sorting tricks.
    fn ad_reference(sample: &[f64]) -> f64 {
        let mut x = sample.to_vec();
        x.sort_by(f64::total_cmp);
        let n = x.len();
        let f = |s: f64| 1.0 - (-PI * s * s / 4.0).exp();
        let mut sum = 0.0;
        for i in 1..=n {
            sum += (2.0 * i as f64 - 1.0) * (f(x[i - 1]).ln() + (1.0 - f(x[n - i])).ln());
        }
        -(n as f64) - sum / n as f64
    }

    #[test]
    fn matches_reference_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample: Vec<f64> = (0..300).map(|_| SpacingLaw::Wigner.sample(&mut rng)).collect();
        let a = anderson_darling(&sample).unwrap();
        assert!((a - ad_reference(&sample)).abs() < 1e-9 * a.abs().max(1.0));
        assert!(anderson_darling(&[1.0]).is_err());
        assert!(anderson_darling(&[1.0, -0.5]).is_err());
    }

    #[test]
    fn degenerate_spacings_stay_finite() {
        let a = anderson_darling(&[0.0, 0.0, 1.0, 1.2, 40.0]).unwrap();
        assert!(a.is_finite() && a > AD_CRITICAL);
    }

    proptest! {
        #[test]
        fn order_does_not_matter(mut sample in prop::collection::vec(0.0..4.0f64, 2..60), seed in any::<u64>()) {
            let a = anderson_darling(&sample).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..sample.len()).rev() {
                sample.swap(i, rng.gen_range(0..=i));
            }
            prop_assert_eq!(a, anderson_darling(&sample).unwrap());
        }
    }

    #[test]
    fn calibration_is_reproducible_across_exec() {
        let a = monte_carlo_calibration(SpacingLaw::Wigner, 300, 200, 9, Exec::Sequential).unwrap();
        let b = monte_carlo_calibration(SpacingLaw::Wigner, 300, 200, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    fn params(ratio: f64, two_j: u32) -> ModelParams {
        ModelParams::new(Model::Dicke, 1.0, 1.0, 0.0, two_j, 10).unwrap().with_gamma_ratio(ratio)
    }

    #[test]
    fn linear_counter_gives_unit_spacings() {
        // above eps = 1 Gamma_+ is linear with slope j / omega
        let p = params(0.7, 20);
        let scale = p.energy_scale();
        let g = cumulative(&p, -scale, 4.0 * scale, 100, Exec::Sequential).unwrap();
        let spacing = p.omega / p.j();
        let levels: Vec<f64> = (0..200).map(|i| 1.1 * scale + i as f64 * spacing).collect();
        let u = unfold(&levels, &g).unwrap();
        for (s, a) in u.spacings.iter().zip(&u.approx_spacings) {
            assert!((s - 1.0).abs() < 1e-9);
            assert!((a - 1.0).abs() < 1e-12);
        }
        assert!(u.unfolded.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unfold_rejects_bad_input() {
        let p = params(2.0, 20);
        let scale = p.energy_scale();
        let g = cumulative(&p, -2.125 * scale, 1.5 * scale, 60, Exec::Sequential).unwrap();
        assert!(matches!(unfold(&[0.0, -1.0], &g), Err(ChaosError::InvalidSpectrum(_))));
        assert!(matches!(unfold(&[-2.2 * scale, 0.0], &g), Err(ChaosError::OutsideDomain { .. })));
        let u = unfold(&[0.0, 0.0, 0.5, 1.0], &g).unwrap();
        assert_eq!(u.excluded, vec![0]);
        assert_eq!(u.window_spacings(0, 4).len(), 2);
    }

    fn block(p: ModelParams, energies: Vec<f64>, converged: usize, scheme: BasisScheme) -> SpectrumBlock {
        SpectrumBlock {
            params: p,
            basis: BasisSpec { scheme, parity: Parity::Plus, lambda: 0, n_max: p.n_max },
            scaled_energies: energies.iter().map(|e| e / p.energy_scale()).collect(),
            energies,
            observables: Vec::new(),
            converged_count: converged,
            convergence: None,
            near_degenerate: Vec::new(),
        }
    }

    #[test]
    fn windows_only_see_converged_levels() {
        let p = params(0.7, 20);
        let scale = p.energy_scale();
        let g = cumulative(&p, -scale, 4.0 * scale, 100, Exec::Sequential).unwrap();
        let levels: Vec<f64> = (0..400).map(|i| 1.1 * scale + 0.05 * i as f64 + 0.01 * (i as f64).sin()).collect();
        // an unconverged tail of 150 states
        let b = block(p, levels.clone(), 250, BasisScheme::CoherentParity);
        let u = unfold_block(&b, &g).unwrap();
        assert_eq!(u.len(), 250);
        assert_eq!(u.parity, Some(Parity::Plus));
        assert_eq!(
            scan_windows(&u, DEFAULT_WINDOW, DEFAULT_STEP, Exec::Sequential).unwrap_err(),
            ChaosError::InsufficientStates { needed: 301, available: 250 }
        );
        let full = unfold_block(&block(p, levels.clone(), 400, BasisScheme::CoherentParity), &g).unwrap();
        let scan = scan_windows(&full, DEFAULT_WINDOW, DEFAULT_STEP, Exec::Parallel).unwrap();
        assert_eq!(scan.windows.iter().map(|w| w.start).collect::<Vec<_>>(), vec![0, 25, 50, 75]);
        for w in &scan.windows {
            assert_eq!(w.reject, w.a2 > AD_CRITICAL);
            let mean = levels[w.start..w.start + 301].iter().sum::<f64>() / 301.0 / scale;
            assert!((w.eps_center - mean).abs() < 1e-12);
        }
        assert!(unfold_block(&block(p, levels, 400, BasisScheme::Fock), &g).is_err());
    }

    #[test]
    fn statistic_survives_rescaling() {
        let p = params(1.6, 30);
        let scale = p.energy_scale();
        let g = cumulative(&p, p.ground_energy(), 1.5 * scale, 150, Exec::Sequential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut levels: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.2..1.3) * scale).collect();
        levels.sort_by(f64::total_cmp);
        let a = anderson_darling(&unfold(&levels, &g).unwrap().spacings).unwrap();
        for c in [0.25, 3.0, 17.0] {
            let mut q = p;
            q.omega *= c;
            q.omega0 *= c;
            q.gamma *= c;
            let gq = cumulative(&q, q.ground_energy(), 1.5 * q.energy_scale(), 150, Exec::Sequential).unwrap();
            let scaled: Vec<f64> = levels.iter().map(|e| e * c).collect();
            let b = anderson_darling(&unfold(&scaled, &gq).unwrap().spacings).unwrap();
            assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
        }
    }
}
