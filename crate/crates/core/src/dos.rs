//! Semiclassical level density of the Dicke model and the smooth counter of
//! positive-parity levels used for unfolding.
//!
//! In scaled form, with `r = gamma / gamma_c` and `y_pm = -1/r^2 +- sqrt(2 (eps - eps0)) / r`,
//!
//! ```text
//! omega nu / (2j) = (1/pi) int_{y-}^{y+} arccos sqrt(g(y)) dy                   eps0 <= eps < -1
//!                 = (eps + 1)/2 + (1/pi) int_{eps}^{y+} arccos sqrt(g(y)) dy    |eps| <= 1
//!                 = 1                                                           eps > 1
//! g(y) = 2 (y - eps) / (r^2 (1 - y^2))
//! ```
//!
//! `g` reaches 1 at `y_pm`, where the integrand has square-root behaviour.
//! Integrals run over `y = (a + b)/2 - (b - a)/2 cos(theta)`, which removes
//! it at both ends, and are evaluated by tanh-sinh quadrature.

use std::cell::RefCell;
use std::f64::consts::PI;

use quadrature::double_exponential;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ChaosError, Result};
use crate::exec::Exec;
use crate::model::ModelParams;

/// Relative accuracy demanded of every level-density evaluation.
pub const DOS_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DosBranch {
    #[serde(rename = "below_minus1")]
    BelowMinusOne,
    #[serde(rename = "middle")]
    Middle,
    #[serde(rename = "above_plus1")]
    AbovePlusOne,
}

impl DosBranch {
    pub fn label(self) -> &'static str {
        match self {
            DosBranch::BelowMinusOne => "below_minus1",
            DosBranch::Middle => "middle",
            DosBranch::AbovePlusOne => "above_plus1",
        }
    }
}

/// `omega nu / (2j)` with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDos {
    pub value: f64,
    pub error: f64,
    pub branch: DosBranch,
}

/// Lowest scaled energy of the classical Hamiltonian for `r = gamma / gamma_c`.
pub fn scaled_ground_energy(ratio: f64) -> f64 {
    if ratio <= 1.0 {
        -1.0
    } else {
        let r2 = ratio * ratio;
        -0.5 * (r2 + 1.0 / r2)
    }
}

/// Scaled density `omega nu / (2j)` of the Dicke model at `epsilon`.
pub fn scaled_dos(epsilon: f64, ratio: f64) -> Result<ScaledDos> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(invalid("gamma_over_gc", format!("{ratio} is not a finite non-negative ratio")));
    }
    if !epsilon.is_finite() {
        return Err(invalid("epsilon", "not finite"));
    }
    let eps_gs = scaled_ground_energy(ratio);
    if epsilon < eps_gs - 1e-12 * eps_gs.abs().max(1.0) {
        return Err(ChaosError::EnergyOutOfRange { energy: epsilon, minimum: eps_gs });
    }
    let epsilon = epsilon.max(eps_gs);
    if epsilon > 1.0 {
        return Ok(ScaledDos { value: 1.0, error: 0.0, branch: DosBranch::AbovePlusOne });
    }
    let middle = epsilon >= -1.0;
    let branch = if middle { DosBranch::Middle } else { DosBranch::BelowMinusOne };
    let base = if middle { 0.5 * (epsilon + 1.0) } else { 0.0 };
    if ratio == 0.0 {
        // the arccos argument is infinite for y > eps
        return Ok(ScaledDos { value: base, error: 0.0, branch });
    }
    let roots = Roots::new(epsilon, 1.0 / (ratio * ratio));
    let (integral, error) = roots.arccos_integral(middle)?;
    Ok(ScaledDos { value: base + integral / PI, error: error / PI, branch })
}

/// Roots `y_pm` of `y^2 + 2 y / r^2 - 1 - 2 eps / r^2` and the differences
/// the integrand needs, each from a cancellation-free expression.
struct Roots {
    epsilon: f64,
    inv_r2: f64,
    /// `y+ - y-`
    width: f64,
    /// `y+ - eps`
    above_eps: f64,
    /// `eps - y-`
    below_eps: f64,
    /// `1 + y-`
    ym_plus_one: f64,
}

impl Roots {
    fn new(epsilon: f64, inv_r2: f64) -> Self {
        let eps0 = -0.5 * (inv_r2 + 1.0 / inv_r2);
        let root = (inv_r2 * 2.0 * (epsilon - eps0).max(0.0)).sqrt();
        // (y+ - eps)(eps - y-) = 1 - eps^2; one factor is a sum of like signs
        let shift = inv_r2 + epsilon;
        let one_minus_e2 = (1.0 - epsilon) * (1.0 + epsilon);
        let (above_eps, below_eps) = if shift >= 0.0 {
            let below = root + shift;
            (if below > 0.0 { one_minus_e2 / below } else { 0.0 }, below)
        } else {
            let above = root - shift;
            (above, one_minus_e2 / above)
        };
        // (1 + y+)(1 + y-) = -2 (1 + eps) / r^2
        let ym_plus_one = if inv_r2 >= 1.0 {
            (1.0 - inv_r2) - root
        } else {
            let yp_plus_one = (1.0 - inv_r2) + root;
            -2.0 * inv_r2 * (1.0 + epsilon) / yp_plus_one
        };
        Self { epsilon, inv_r2, width: 2.0 * root, above_eps, below_eps, ym_plus_one }
    }

    /// `int arccos sqrt(g(y)) dy` over `[eps, y+]` (`middle`) or `[y-, y+]`,
    /// in the `theta` variable, with bisection of the `theta` range as a
    /// fallback when the error estimate is too large.
    ///
    /// With `1 - g = (y+ - y)(y - y-) / (1 - y^2)` the integrand is
    /// `atan2(sqrt((y+ - y)(y - y-)), sqrt(2 (y - eps) / r^2))`.
    fn arccos_integral(&self, middle: bool) -> Result<(f64, f64)> {
        let (span, lo_minus_eps, lo_minus_ym) = if middle {
            (self.above_eps, 0.0, self.below_eps)
        } else {
            // y- - eps = (1 + y-) - (1 + eps), both terms non-negative here
            (self.width, self.ym_plus_one - (1.0 + self.epsilon), 0.0)
        };
        if span <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let half = 0.5 * span;
        let two_inv_r2 = 2.0 * self.inv_r2;
        let integrand = |theta: f64| {
            let (s, c) = (0.5 * theta).sin_cos();
            // distances from the lower and upper limits
            let u = span * s * s;
            let w = span * c * c;
            let opposite = (w * (u + lo_minus_ym)).max(0.0).sqrt();
            let adjacent = (two_inv_r2 * (u + lo_minus_eps)).max(0.0).sqrt();
            opposite.atan2(adjacent) * half * theta.sin()
        };
        let target = 1e-14 * half;
        let mut best = (f64::NAN, f64::INFINITY);
        for level in 0..8u32 {
            let pieces = 1usize << level;
            let width = PI / pieces as f64;
            let (mut sum, mut err) = (0.0, 0.0);
            for k in 0..pieces {
                let out = double_exponential::integrate(integrand, k as f64 * width, (k + 1) as f64 * width, target / pieces as f64);
                sum += out.integral;
                err += out.error_estimate;
            }
            if err <= DOS_REL_TOL * sum.abs() || err <= 1e-15 * half {
                return Ok((sum, err));
            }
            best = (sum, err);
            log::debug!("level density at epsilon = {}: refining theta range into {} pieces", self.epsilon, 2 * pieces);
        }
        Err(ChaosError::Quadrature { epsilon: self.epsilon, error: best.1 / best.0.abs().max(f64::MIN_POSITIVE) })
    }
}

/// One sample of the level density in absolute units (states per unit energy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosSample {
    pub epsilon: f64,
    pub nu: f64,
    pub branch: DosBranch,
    pub error: f64,
}

/// Semiclassical level density `nu(E)` (both parities) at scaled energy `epsilon`.
pub fn dos(epsilon: f64, params: &ModelParams) -> Result<DosSample> {
    params.require_dicke()?;
    let d = scaled_dos(epsilon, params.gamma_ratio())?;
    let unit = params.n_atoms() / params.omega;
    Ok(DosSample { epsilon, nu: unit * d.value, branch: d.branch, error: unit * d.error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosCurve {
    pub params: ModelParams,
    pub samples: Vec<DosSample>,
}

pub fn dos_curve(params: &ModelParams, epsilons: &[f64], exec: Exec) -> Result<DosCurve> {
    params.require_dicke()?;
    let samples = exec.map(epsilons, |&e| dos(e, params)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DosCurve { params: *params, samples })
}

/// Monotone piecewise-cubic `Gamma_+(E) = int_{E_gs}^E nu(E')/2 dE'`.
///
/// Node values come from nested quadrature and node slopes are the exact
/// `nu_+`, limited with the Fritsch-Carlson conditions so that the
/// interpolant cannot overshoot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeDensity {
    pub params: ModelParams,
    energies: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Local refinement stops once the Hermite prediction at an interval midpoint
/// agrees with quadrature to this fraction of the interval's increment.
const HERMITE_REL_TOL: f64 = 1e-9;
const MAX_REFINE_DEPTH: u32 = 12;

impl CumulativeDensity {
    pub fn domain(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Nodes as `(E, Gamma_+, nu_+)`, with the limited slopes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.energies.len()).map(|k| (self.energies[k], self.values[k], self.slopes[k]))
    }

    fn locate(&self, energy: f64) -> Result<(usize, f64, f64)> {
        let (lo, hi) = self.domain();
        if !(energy >= lo && energy <= hi) {
            return Err(ChaosError::OutsideDomain { energy, lo, hi });
        }
        let k = self.energies.partition_point(|&e| e <= energy).clamp(1, self.energies.len() - 1) - 1;
        let h = self.energies[k + 1] - self.energies[k];
        Ok((k, h, (energy - self.energies[k]) / h))
    }

    /// `Gamma_+(E)`.
    pub fn value(&self, energy: f64) -> Result<f64> {
        let (k, h, t) = self.locate(energy)?;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[k] + h10 * h * self.slopes[k] + h01 * self.values[k + 1] + h11 * h * self.slopes[k + 1])
    }

    /// Derivative of the interpolant, an approximation of `nu_+(E)`.
    pub fn slope(&self, energy: f64) -> Result<f64> {
        let (k, h, t) = self.locate(energy)?;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * t2 - 2.0 * t;
        Ok((d00 * self.values[k] + d01 * self.values[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1])
    }
}

/// `int nu_+ dE` over `[a, b]` given in scaled energy, returned in states.
fn counted_states(params: &ModelParams, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let ratio = params.gamma_ratio();
    let failure = RefCell::new(None);
    let integrand = |eps: f64| match scaled_dos(eps, ratio) {
        Ok(d) => d.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let out = double_exponential::integrate(integrand, a, b, 1e-13 * (b - a));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // the scaled density never exceeds one, which sets the absolute floor
    if out.error_estimate > 1e-10 * out.integral.abs() + 1e-15 * (b - a) {
        return Err(ChaosError::Quadrature { epsilon: 0.5 * (a + b), error: out.error_estimate });
    }
    // dE = omega0 j d(eps), nu_+ = (j / omega) * scaled density
    Ok(params.j() * params.j() * params.omega0 / params.omega * out.integral)
}

/// Bisects `[a, b]` until cubic Hermite interpolation reproduces the midpoint
/// value. Pushes `(eps, increment from a, scaled density)` for every node after `a`.
#[allow(clippy::too_many_arguments)]
fn refine(
    params: &ModelParams,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    depth: u32,
    offset: f64,
    out: &mut Vec<(f64, f64, f64)>,
) -> Result<()> {
    let ratio = params.gamma_ratio();
    let m = 0.5 * (a + b);
    let fm = scaled_dos(m, ratio)?.value;
    let left = counted_states(params, a, m)?;
    let right = counted_states(params, m, b)?;
    let total = left + right;
    // slopes in states per unit scaled energy
    let unit = params.j() * params.j() * params.omega0 / params.omega;
    let predicted = 0.5 * total + (b - a) * unit * (fa - fb) / 8.0;
    if depth >= MAX_REFINE_DEPTH || (predicted - left).abs() <= HERMITE_REL_TOL * total.max(f64::MIN_POSITIVE) {
        out.push((m, offset + left, fm));
        out.push((b, offset + total, fb));
        return Ok(());
    }
    refine(params, a, m, fa, fm, depth + 1, offset, out)?;
    refine(params, m, b, fm, fb, depth + 1, offset + left, out)
}

/// Splits `[lo, hi]` (scaled) at the level-density seams and distributes
/// about `resolution` intervals proportionally to length.
fn initial_grid(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    let mut cuts = vec![lo];
    cuts.extend([-1.0, 1.0].into_iter().filter(|&s| s > lo && s < hi));
    cuts.push(hi);
    let span = hi - lo;
    let mut grid = vec![lo];
    for w in cuts.windows(2) {
        let n = ((resolution as f64 * (w[1] - w[0]) / span).round() as usize).max(1);
        for i in 1..=n {
            grid.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
        }
    }
    grid
}

/// Builds `Gamma_+` on `[e_lo, e_hi]` (absolute energies) from about
/// `resolution` initial intervals, refined where needed.
pub fn cumulative(params: &ModelParams, e_lo: f64, e_hi: f64, resolution: usize, exec: Exec) -> Result<CumulativeDensity> {
    params.require_dicke()?;
    if resolution == 0 {
        return Err(invalid("resolution", "must be positive"));
    }
    let scale = params.energy_scale();
    let eps_gs = scaled_ground_energy(params.gamma_ratio());
    let (lo, hi) = (e_lo / scale, e_hi / scale);
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(invalid("energy range", format!("[{e_lo}, {e_hi}] is empty or not finite")));
    }
    if lo < eps_gs - 1e-12 * eps_gs.abs() {
        return Err(ChaosError::EnergyOutOfRange { energy: e_lo, minimum: eps_gs * scale });
    }
    let lo = lo.max(eps_gs);
    let ratio = params.gamma_ratio();

    let mut offset = 0.0;
    for w in initial_grid(eps_gs, lo, 1).windows(2) {
        offset += counted_states(params, w[0], w[1])?;
    }

    let grid = initial_grid(lo, hi, resolution);
    let densities = exec
        .map(&grid, |&e| scaled_dos(e, ratio).map(|d| d.value))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let pieces = exec.map_range(grid.len() - 1, |k| {
        let mut out = Vec::new();
        refine(params, grid[k], grid[k + 1], densities[k], densities[k + 1], 0, 0.0, &mut out).map(|_| out)
    });

    let slope_unit = params.j() / params.omega;
    let mut energies = vec![lo * scale];
    let mut values = vec![offset];
    let mut slopes = vec![slope_unit * densities[0]];
    for piece in pieces {
        let piece = piece?;
        let base = *values.last().unwrap();
        for (eps, inc, f) in piece {
            energies.push(eps * scale);
            values.push(base + inc);
            slopes.push(slope_unit * f);
        }
    }
    // Keep the requested endpoints exact; the scaled round trip can lose an ulp.
    *energies.last_mut().unwrap() = e_hi;
    if lo == e_lo / scale {
        energies[0] = e_lo;
    }
    limit_slopes(&energies, &values, &mut slopes);
    Ok(CumulativeDensity { params: *params, energies, values, slopes })
}

/// Fritsch-Carlson monotonicity limiter.
fn limit_slopes(x: &[f64], y: &[f64], m: &mut [f64]) {
    for k in 0..x.len() - 1 {
        let secant = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if secant <= 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = (m[k] / secant).max(0.0);
        let b = (m[k + 1] / secant).max(0.0);
        let norm = a.hypot(b);
        let tau = if norm > 3.0 { 3.0 / norm } else { 1.0 };
        m[k] = tau * a * secant;
        m[k + 1] = tau * b * secant;
    }
}

/// A point where the slope of the level density jumps or diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosFeature {
    pub epsilon: f64,
    /// Largest change of the scaled-density slope across one grid node.
    pub slope_jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosScan {
    pub step: f64,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub features: Vec<DosFeature>,
}

/// Slope jumps below this (in units of the scaled density per unit `epsilon`)
/// are ignored; the smooth parts of the curve have slopes of order one.
const FEATURE_FLOOR: f64 = 1e-3;

/// Scans the scaled density on a uniform grid over `window` and reports
/// kinks and slope singularities.
///
/// At a node, `J_h = |f(x+h) - 2f(x) + f(x-h)| / h` is the change of slope.
/// Where `f` is smooth, `J_2h` is about twice `J_h`; across a kink or a
/// logarithmic cusp both stay finite and comparable. Neighbouring flagged
/// nodes are merged and reported at their `J_h`-weighted centroid. The
/// window is clipped two steps above the ground-state energy, itself a kink.
pub fn dos_peak_scan(params: &ModelParams, window: (f64, f64), step: f64, exec: Exec) -> Result<DosScan> {
    params.require_dicke()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("{step} is not a positive step")));
    }
    let ratio = params.gamma_ratio();
    let lo = window.0.max(scaled_ground_energy(ratio) + 2.0 * step);
    let hi = window.1;
    if !(hi > lo) {
        return Err(invalid("window", format!("[{}, {}] is empty above the ground state", window.0, window.1)));
    }
    let n = ((hi - lo) / step).round() as usize;
    let xs: Vec<f64> = (0..n + 5).map(|i| lo + (i as f64 - 2.0) * step).collect();
    let fs = exec
        .map(&xs, |&x| scaled_dos(x, ratio).map(|d| d.value))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut flagged: Vec<(usize, f64)> = Vec::new();
    for i in 2..xs.len() - 2 {
        let j1 = (fs[i + 1] - 2.0 * fs[i] + fs[i - 1]).abs() / step;
        let j2 = (fs[i + 2] - 2.0 * fs[i] + fs[i - 2]).abs() / (2.0 * step);
        if j1 > FEATURE_FLOOR && j2 < 1.5 * j1 {
            flagged.push((i, j1));
        }
    }
    let mut features = Vec::new();
    let mut k = 0;
    while k < flagged.len() {
        let mut end = k + 1;
        while end < flagged.len() && flagged[end].0 - flagged[end - 1].0 <= 2 {
            end += 1;
        }
        let group = &flagged[k..end];
        let weight: f64 = group.iter().map(|g| g.1).sum();
        let epsilon = group.iter().map(|g| xs[g.0] * g.1).sum::<f64>() / weight;
        let slope_jump = group.iter().map(|g| g.1).fold(0.0, f64::max);
        features.push(DosFeature { epsilon, slope_jump });
        k = end;
    }
    Ok(DosScan { step, epsilons: xs[2..xs.len() - 2].to_vec(), values: fs[2..fs.len() - 2].to_vec(), features })
}
