//! One pipeline per experiment kind. Each writes its tables into the bundle
//! and returns a JSON summary for the manifest.

use serde_json::{json, Value};

use chaoslab_core::classical::{lyapunov_map, place_seeds, poincare_section, LyapunovControls, OrbitClass, OrbitControls, SeedPolicy};
use chaoslab_core::dos::{cumulative, dos_curve, dos_peak_scan};
use chaoslab_core::model::{quadratic_validity, ShellSampler};
use chaoslab_core::quantum::{tc_gap_minima, tc_lattice, SpectrumBlock, SpectrumOptions};
use chaoslab_core::stats::{scan_windows, unfold_block};
use chaoslab_core::{Model, ModelParams, Phase};

use crate::cache::SpectrumCache;
use crate::config::Resolved;
use crate::error::{CliError, Context};
use crate::output::{Bundle, Cell, Plot, Table};

pub struct Run<'a> {
    pub cfg: &'a Resolved,
    pub cache: &'a SpectrumCache,
    pub bundle: &'a mut Bundle,
    /// File-name prefix, empty for single-kind runs.
    pub prefix: &'a str,
}

impl Run<'_> {
    fn emit(&mut self, table: &Table) -> Result<String, CliError> {
        self.bundle.table(self.prefix, table)
    }

    fn plot(&mut self, name: &str, body: String) -> Result<(), CliError> {
        if self.cfg.gnuplot {
            self.bundle.plot(self.prefix, &Plot { name: name.to_string(), body })?;
        }
        Ok(())
    }

    fn ctx(&self) -> impl Fn() -> String + '_ {
        move || format!("{} (j = {}, gamma/gamma_c = {:?})", self.cfg.kind, self.cfg.j, self.cfg.gamma_over_gc)
    }
}

pub fn run(r: &mut Run<'_>) -> Result<Value, CliError> {
    match r.cfg.kind.as_str() {
        "spectrum" | "peres" if r.cfg.model == Model::TavisCummings => tc_spectrum(r),
        "spectrum" | "peres" => spectrum(r),
        "tc-gaps" => tc_gaps(r),
        "poincare" => poincare(r),
        "lyapunov-map" => lyapunov(r),
        "dos" => density(r),
        "adscan" => adscan(r),
        "vmap" => vmap(r),
        other => Err(CliError::config("kind", format!("unknown kind `{other}`"))),
    }
}

fn spectrum_options(cfg: &Resolved) -> SpectrumOptions {
    SpectrumOptions {
        scheme: cfg.basis,
        parity: cfg.parity,
        observables: cfg.observables,
        tolerance: cfg.tolerance,
        cutoff_step: cfg.cutoff_step,
        max_dim: cfg.max_dim,
        exec: cfg.exec,
        ..Default::default()
    }
}

fn convergence_summary(b: &SpectrumBlock) -> Value {
    let c = b.converged_count;
    json!({
        "basis": b.basis.scheme.label(),
        "parity": b.basis.parity.label(),
        "n_max": b.basis.n_max,
        "dimension": b.energies.len(),
        "converged": c,
        "dropped_unconverged": b.energies.len() - c,
        "eps_max_converged": if c > 0 { Some(b.scaled_energies[c - 1]) } else { None },
        "n_max_check": b.convergence.as_ref().map(|r| r.n_max_high),
        "tolerance": b.convergence.as_ref().map(|r| r.tolerance),
        "near_degenerate": b.near_degenerate.len(),
    })
}

fn solve(r: &Run<'_>, params: &ModelParams) -> Result<SpectrumBlock, CliError> {
    r.cache.spectrum(params, &spectrum_options(r.cfg)).context(r.ctx())
}

/// Converged levels of one Dicke block, with Peres observables if requested.
fn spectrum(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let block = solve(r, &params)?;
    let with_obs = !block.observables.is_empty();
    let mut header = vec!["index", "energy", "epsilon"];
    if with_obs {
        header.extend(["jz", "jx2", "n"]);
    }
    let mut t = Table::new(&r.cfg.kind, &header);
    for k in 0..block.converged_count {
        let mut row: Vec<Cell> = vec![k.into(), block.energies[k].into(), block.scaled_energies[k].into()];
        if with_obs {
            let o = block.observables[k];
            row.extend([o.jz.into(), o.jx2.into(), o.n.into()]);
        }
        t.push(row);
    }
    let file = r.emit(&t)?;
    let body = if with_obs {
        format!("set xlabel 'E/(omega0 j)'\nset ylabel '<Jz>/j'\nplot '{file}' using {}:{} with dots notitle", t.column("epsilon"), t.column("jz"))
    } else {
        format!("set xlabel 'index'\nset ylabel 'E/(omega0 j)'\nplot '{}' using {}:{} with lines notitle", file, t.column("index"), t.column("epsilon"))
    };
    r.plot(&r.cfg.kind.clone(), body)?;
    Ok(json!({ "convergence": convergence_summary(&block) }))
}

/// Tavis-Cummings levels block by block; every level of a block is exact.
fn tc_spectrum(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let blocks = tc_lattice(&params, r.cfg.lambda_max, r.cfg.exec).context(r.ctx())?;
    let mut t = Table::new(&r.cfg.kind, &["lambda", "index", "energy", "epsilon", "jz", "jx2", "n"]);
    for b in &blocks {
        for k in 0..b.energies.len() {
            let o = b.observables[k];
            t.push(vec![b.basis.lambda.into(), k.into(), b.energies[k].into(), b.scaled_energies[k].into(), o.jz.into(), o.jx2.into(), o.n.into()]);
        }
    }
    let file = r.emit(&t)?;
    let body = format!(
        "set xlabel 'E/(omega0 j)'\nset ylabel '<Jz>/j'\nplot '{}' using {}:{}:{} with points palette pt 7 ps 0.5 notitle",
        file,
        t.column("epsilon"),
        t.column("jz"),
        t.column("lambda")
    );
    r.plot(&r.cfg.kind.clone(), body)?;
    Ok(json!({ "blocks": blocks.len(), "levels": t.len() }))
}

fn tc_gaps(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let blocks = tc_lattice(&params, r.cfg.lambda_max, r.cfg.exec).context(r.ctx())?;
    let mut lattice = Table::new("tc_lattice", &["lambda", "index", "energy", "epsilon"]);
    for b in &blocks {
        for (k, (e, s)) in b.energies.iter().zip(&b.scaled_energies).enumerate() {
            lattice.push(vec![b.basis.lambda.into(), k.into(), (*e).into(), (*s).into()]);
        }
    }
    let gaps = tc_gap_minima(&params, r.cfg.lambda_max, r.cfg.exec).context(r.ctx())?;
    let mut gt = Table::new("tc_gaps", &["lambda", "gap", "energy", "epsilon"]);
    for g in &gaps {
        gt.push(vec![g.lambda.into(), g.gap.into(), g.energy.into(), g.epsilon.into()]);
    }
    let lf = r.emit(&lattice)?;
    let gf = r.emit(&gt)?;
    let body = format!(
        "set multiplot layout 1,2\nset xlabel 'lambda'\nset ylabel 'E'\nplot '{}' using 1:3 with points pt 7 ps 0.4 notitle\nset ylabel 'min gap'\nplot '{}' using 1:2 with linespoints notitle\nunset multiplot",
        lf,
        gf
    );
    r.plot("tc_gaps", body)?;
    let min = gaps.iter().min_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(json!({
        "blocks": blocks.len(),
        "global_min_gap": min.map(|g| json!({ "lambda": g.lambda, "gap": g.gap, "epsilon": g.epsilon })),
    }))
}

fn seed_policy(cfg: &Resolved) -> SeedPolicy {
    SeedPolicy::Grid { count: cfg.seeds, grid: cfg.seed_grid }
}

fn class_counts(classes: &[OrbitClass]) -> Value {
    let n = |c| classes.iter().filter(|x| **x == c).count();
    json!({
        "regular": n(OrbitClass::Regular),
        "chaotic": n(OrbitClass::Chaotic),
        "undetermined": n(OrbitClass::Undetermined),
    })
}

fn lyapunov_controls(cfg: &Resolved) -> LyapunovControls {
    LyapunovControls { t_end: cfg.t_end, ..Default::default() }
}

/// Sections at `p = 0` on each shell, with a Lyapunov classification of
/// every seed. Seeds flagged for energy drift contribute no points.
fn poincare(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let scale = params.energy_scale();
    let mut pts = Table::new("poincare", &["epsilon", "seed", "t", "r", "phi", "q", "jz"]);
    let mut seeds_t = Table::new("poincare_seeds", &["epsilon", "seed", "q", "p", "phi", "jz", "crossings", "flagged", "lambda_max", "late_slope", "class"]);
    let mut shells = Vec::new();
    let controls = OrbitControls::default();
    for &eps in &r.cfg.energies {
        let energy = eps * scale;
        let ctx = || format!("poincare at eps = {eps}");
        let sec = poincare_section(&params, energy, &seed_policy(r.cfg), r.cfg.t_end, r.cfg.max_points, &controls, r.cfg.exec).context(ctx)?;
        let est = lyapunov_map(&sec.seeds, &params, &lyapunov_controls(r.cfg), r.cfg.exec).context(ctx)?;
        for p in &sec.points {
            pts.push(vec![eps.into(), p.seed.into(), p.t.into(), p.r.into(), p.phi.into(), p.q.into(), p.jz.into()]);
        }
        for (k, (s, e)) in sec.seeds.iter().zip(&est).enumerate() {
            let flagged = sec.flagged_seeds.contains(&k);
            seeds_t.push(vec![
                eps.into(),
                k.into(),
                s.q.into(),
                s.p.into(),
                s.phi.into(),
                s.jz.into(),
                sec.crossings_per_seed[k].into(),
                flagged.into(),
                e.lambda_max.into(),
                e.late_slope.into(),
                e.classification.label().into(),
            ]);
        }
        let classes: Vec<_> = est.iter().map(|e| e.classification).collect();
        shells.push(json!({ "epsilon": eps, "points": sec.points.len(), "flagged_seeds": sec.flagged_seeds, "classes": class_counts(&classes) }));
    }
    let pf = r.emit(&pts)?;
    r.emit(&seeds_t)?;
    let body = format!(
        "set xlabel '(1 + jz/j) cos(phi)'\nset ylabel '(1 + jz/j) sin(phi)'\nset size square\nplot '{}' using ($4*cos($5)):($4*sin($5)):2 with dots palette notitle",
        pf
    );
    r.plot("poincare", body)?;
    Ok(json!({ "shells": shells }))
}

fn lyapunov(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let scale = params.energy_scale();
    let mut t = Table::new("lyapunov", &["epsilon", "seed", "q", "p", "phi", "jz", "lambda_max", "late_slope", "max_drift", "class"]);
    let mut shells = Vec::new();
    for &eps in &r.cfg.energies {
        let ctx = || format!("lyapunov-map at eps = {eps}");
        let seeds = place_seeds(&params, eps * scale, &seed_policy(r.cfg)).context(ctx)?;
        let est = lyapunov_map(&seeds, &params, &lyapunov_controls(r.cfg), r.cfg.exec).context(ctx)?;
        for (k, (s, e)) in seeds.iter().zip(&est).enumerate() {
            t.push(vec![
                eps.into(),
                k.into(),
                s.q.into(),
                s.p.into(),
                s.phi.into(),
                s.jz.into(),
                e.lambda_max.into(),
                e.late_slope.into(),
                e.max_drift.into(),
                e.classification.label().into(),
            ]);
        }
        let classes: Vec<_> = est.iter().map(|e| e.classification).collect();
        shells.push(json!({ "epsilon": eps, "classes": class_counts(&classes) }));
    }
    let f = r.emit(&t)?;
    let body = format!(
        "set xlabel 'E/(omega0 j)'\nset ylabel 'lambda_max'\nplot '{}' using 1:7 with points pt 7 notitle",
        f
    );
    r.plot("lyapunov", body)?;
    Ok(json!({ "shells": shells }))
}

fn density(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let scale = params.energy_scale();
    let eps_gs = params.ground_energy() / scale;
    let lo = r.cfg.eps_min.unwrap_or(eps_gs).max(eps_gs);
    if !(r.cfg.eps_max > lo) {
        return Err(CliError::config("eps_max", format!("must exceed the lower end {lo}")));
    }
    let n = ((r.cfg.eps_max - lo) / r.cfg.eps_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| lo + k as f64 * r.cfg.eps_step).collect();
    let curve = dos_curve(&params, &grid, r.cfg.exec).context(r.ctx())?;
    let mut dt = Table::new("dos", &["epsilon", "nu", "nu_error", "branch"]);
    for s in &curve.samples {
        dt.push(vec![s.epsilon.into(), s.nu.into(), s.error.into(), s.branch.label().into()]);
    }
    let cum = cumulative(&params, params.ground_energy(), r.cfg.eps_max * scale, r.cfg.dos_resolution, r.cfg.exec).context(r.ctx())?;
    let mut ct = Table::new("cumulative", &["energy", "epsilon", "gamma_plus", "nu_plus"]);
    for (e, g, s) in cum.nodes() {
        ct.push(vec![e.into(), (e / scale).into(), g.into(), s.into()]);
    }
    let scan = dos_peak_scan(&params, (lo, r.cfg.eps_max), r.cfg.eps_step, r.cfg.exec).context(r.ctx())?;
    let mut ft = Table::new("dos_features", &["epsilon", "slope_jump"]);
    for f in &scan.features {
        ft.push(vec![f.epsilon.into(), f.slope_jump.into()]);
    }
    let df = r.emit(&dt)?;
    r.emit(&ct)?;
    r.emit(&ft)?;
    let body = format!(
        "set xlabel 'E/(omega0 j)'\nset ylabel 'nu(E)'\nplot '{}' using 1:2 with lines notitle",
        df
    );
    r.plot("dos", body)?;
    Ok(json!({
        "eps_ground": eps_gs,
        "cumulative_nodes": cum.len(),
        "features": scan.features.iter().map(|f| f.epsilon).collect::<Vec<_>>(),
    }))
}

fn adscan(r: &mut Run<'_>) -> Result<Value, CliError> {
    let params = r.cfg.params()?;
    let block = solve(r, &params)?;
    let scale = params.energy_scale();
    let top = block.converged_energies().last().copied().unwrap_or(params.ground_energy());
    let cum = cumulative(&params, params.ground_energy(), top + 0.05 * scale, r.cfg.dos_resolution, r.cfg.exec).context(r.ctx())?;
    let unfolded = unfold_block(&block, &cum).context(r.ctx())?;
    let scan = scan_windows(&unfolded, r.cfg.window, r.cfg.step, r.cfg.exec).context(r.ctx())?;

    // `unfold_block` may drop leading levels below the classical minimum.
    let offset = block.converged_count - unfolded.len();
    let with_obs = !block.observables.is_empty();
    let mut header = vec!["index", "energy", "epsilon", "unfolded"];
    if with_obs {
        header.extend(["jz", "jx2", "n"]);
    }
    let mut lt = Table::new("levels", &header);
    for (k, (e, u)) in unfolded.energies.iter().zip(&unfolded.unfolded).enumerate() {
        let i = k + offset;
        let mut row: Vec<Cell> = vec![i.into(), (*e).into(), (*e / scale).into(), (*u).into()];
        if with_obs {
            let o = block.observables[i];
            row.extend([o.jz.into(), o.jx2.into(), o.n.into()]);
        }
        lt.push(row);
    }
    let mut at = Table::new("adscan", &["start", "eps_center", "a2", "reject"]);
    for w in &scan.windows {
        at.push(vec![(w.start + offset).into(), w.eps_center.into(), w.a2.into(), w.reject.into()]);
    }
    let lf = r.emit(&lt)?;
    let af = r.emit(&at)?;
    let peres = if with_obs {
        format!("'{}' using {}:{} with dots title '<Jz>/j', ", lf, lt.column("epsilon"), lt.column("jz"))
    } else {
        String::new()
    };
    let body = format!(
        "set xlabel 'E/(omega0 j)'\nset y2label 'A^2'\nset y2tics\nset ytics nomirror\nplot {peres}'{}' using 2:3 axes x1y2 with lines title 'A^2', 2.5 axes x1y2 dashtype 2 title 'critical'",
        af
    );
    r.plot("adscan", body)?;
    let first_wigner = scan.windows.iter().find(|w| !w.reject).map(|w| w.eps_center);
    Ok(json!({
        "convergence": convergence_summary(&block),
        "levels_below_classical_minimum": offset,
        "excluded_pairs": unfolded.excluded.len(),
        "windows": scan.windows.len(),
        "rejected_windows": scan.windows.iter().filter(|w| w.reject).count(),
        "first_wigner_window_eps": first_wigner,
    }))
}

fn vmap(r: &mut Run<'_>) -> Result<Value, CliError> {
    let ratios = r.cfg.ratios.clone();
    let sampler = ShellSampler { samples: r.cfg.samples, seed: r.cfg.seed, exec: r.cfg.exec, ..Default::default() };
    let mut t = Table::new("vmap", &["gamma_over_gc", "epsilon", "v_max", "accepted"]);
    let mut skipped = 0usize;
    for &ratio in &ratios {
        let params = r.cfg.params_at_ratio(ratio)?;
        if params.phase() == Phase::Critical {
            skipped += r.cfg.energies.len();
            continue;
        }
        let scale = params.energy_scale();
        for &eps in &r.cfg.energies {
            if eps * scale <= params.ground_energy() {
                skipped += 1;
                continue;
            }
            let v = quadratic_validity(&params, eps * scale, &sampler).context(|| format!("vmap at gamma/gamma_c = {ratio}, eps = {eps}"))?;
            t.push(vec![ratio.into(), eps.into(), v.v_max.into(), v.accepted.into()]);
        }
    }
    let f = r.emit(&t)?;
    let body = format!(
        "set xlabel 'gamma/gamma_c'\nset ylabel 'E/(omega0 j)'\nset view map\nsplot '{}' using 1:2:3 with points pt 5 ps 1 palette notitle",
        f
    );
    r.plot("vmap", body)?;
    Ok(json!({ "points": t.len(), "skipped_below_ground_or_critical": skipped }))
}
