use latspec_core::hamlab::eigs_in_window;
use latspec_core::lattice::thm1_condition_partial_sums;
use latspec_core::localization::{
    bump_measure_compare, impurity_level, one_plus_gv_scan, simon_wolff_resolve,
    spectrum_fill_scan, FillConfig, ResolveThresholds,
};
use latspec_core::scattering::{
    q_decay_fit_with, q_integral, wave_operator_probe, ProbeOptions, PropagatorSpec,
    QIntegralSpec,
};
use latspec_core::{BoxOperator, GreenKernel, LabError, LatticeBox, LatticeField, Potential, Site};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Everything an experiment produces besides timing metadata.
pub struct Outcome {
    pub summary: Value,
    pub rows: Value,
    pub csv: Vec<u8>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

fn table<T: Serialize>(rows: &[T]) -> Result<(Value, Vec<u8>), CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Io(format!("csv encoding: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(format!("csv encoding: {e}")))?;
    let json = serde_json::to_value(rows).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((json, bytes))
}

fn outcome<T: Serialize>(rows: &[T], summary: Value, lines: Vec<String>) -> Result<Outcome, CliError> {
    let (rows, csv) = table(rows)?;
    Ok(Outcome {
        summary,
        rows,
        csv,
        lines,
    })
}

fn site_label(site: &Site) -> String {
    site.coords()
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn required_potential(config: &ExperimentConfig) -> Result<Potential, CliError> {
    config
        .potential()?
        .ok_or_else(|| CliError::Config("`potential`: missing table".into()))
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    use crate::config::ExperimentKind::*;
    let kernel = GreenKernel::with_config(config.dimension, config.green_config());
    match config.experiment {
        GreenDecay => green_decay(config, &kernel),
        QDecay => q_decay(config),
        WaveProbe => wave_probe(config),
        SimonWolff => simon_wolff(config, &kernel),
        Impurity => impurity(config, &kernel),
        SpectrumFill => spectrum_fill(config, &kernel),
        BumpMeasure => bump_measure(config),
        OnePlusGv => one_plus_gv(config, &kernel),
    }
}

#[derive(Serialize)]
struct GreenRow {
    k: usize,
    site: String,
    distance: f64,
    green: f64,
    abs_green: f64,
}

fn green_decay(config: &ExperimentConfig, kernel: &GreenKernel) -> Result<Outcome, CliError> {
    let s = config.green_decay.as_ref().expect("validated");
    let direction = Site::new(s.direction.clone().expect("resolved"));
    let n_max = s.n_max.expect("resolved");
    let fit = kernel.decay_fit(s.lambda, &direction, n_max, s.epsilon.expect("resolved"))?;
    let rows = (0..=n_max)
        .map(|k| {
            let site = direction.scale(k as i64);
            let green = kernel.eval_real(s.lambda, &site)?;
            Ok(GreenRow {
                k,
                site: site_label(&site),
                distance: site.norm(),
                green,
                abs_green: green.abs(),
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    // In one dimension G(λ; n) = r^|n| / sqrt(A^2 - 4) with A = 2 - λ.
    let exact = (config.dimension == 1).then(|| {
        let a = (2.0 - s.lambda).abs();
        (a / 2.0).acosh()
    });
    let summary = json!({
        "gamma": fit.gamma,
        "c": fit.c,
        "residual": fit.residual,
        "rms": fit.rms,
        "points": fit.points,
        "gamma_exact": exact,
    });
    let lines = vec![format!(
        "decay rate γ = {:.6}, C = {:.6}, 1-R² = {:.2e} over {} points",
        fit.gamma, fit.c, fit.residual, fit.points
    )];
    outcome(&rows, summary, lines)
}

#[derive(Serialize)]
struct QRow {
    j1: i64,
    j2: i64,
    norm: f64,
    q: f64,
}

fn q_decay(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = config.q_decay.as_ref().expect("validated");
    let js: Vec<Site> = s
        .sites
        .as_ref()
        .expect("resolved")
        .iter()
        .map(|c| Site::new(c.clone()))
        .collect();
    let spec = QIntegralSpec {
        tau1: s.tau1,
        bump: s.bump.expect("resolved"),
        half_width: s.half_width.expect("resolved"),
        js: js.clone(),
        points_per_period: s.points_per_period.expect("resolved"),
        refinement_tolerance: s.refinement_tolerance.expect("resolved"),
        max_panels: s.max_panels.expect("resolved"),
    };
    spec.validate()?;
    let values = js
        .iter()
        .map(|j| q_integral(&spec, j))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = q_decay_fit_with(&js, |j| {
        let i = js.iter().position(|x| x == j).expect("known site");
        Ok(values[i])
    })?;
    let rows: Vec<QRow> = js
        .iter()
        .zip(&values)
        .map(|(j, &q)| QRow {
            j1: j.coords()[0],
            j2: j.coords()[1],
            norm: j.norm(),
            q,
        })
        .collect();
    let summary = json!({
        "exponent": fit.exponent,
        "expected": -0.5,
        "residual": fit.residual,
    });
    let lines = vec![format!(
        "log-log slope {:.4} (regular level curve in d=2: -0.5), rms residual {:.2e}",
        fit.exponent, fit.residual
    )];
    outcome(&rows, summary, lines)
}

#[derive(Serialize)]
struct ProbeRow {
    t: f64,
    norm: f64,
    increment: Option<f64>,
    settled: bool,
}

fn wave_probe(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = config.wave_probe.as_ref().expect("validated");
    let v = required_potential(config)?;
    let lattice = LatticeBox::periodic(config.dimension, s.box_radius)?;
    let center = Site::new(s.center.clone().expect("resolved"));
    if !lattice.contains(&center) {
        return Err(CliError::Config("`wave-probe.center`: outside the box".into()));
    }
    let f = LatticeField::gaussian(lattice, &center, s.width.expect("resolved"));
    let tolerance = s.tolerance.expect("resolved");
    let spec = PropagatorSpec::new(lattice, s.times.clone(), tolerance)?
        .with_max_terms(s.max_terms.expect("resolved"));
    let options = ProbeOptions {
        margin: s.margin.expect("resolved"),
        keep_states: false,
    };
    let probe = wave_operator_probe(&v, &f, &spec, &options)?;
    let ratio = s.ratio.expect("resolved");
    let rows: Vec<ProbeRow> = probe
        .samples
        .iter()
        .enumerate()
        .map(|(i, p)| ProbeRow {
            t: p.t,
            norm: p.norm,
            increment: p.increment,
            // An increment is settled when its left endpoint is past the transient.
            settled: i > 0 && probe.samples[i - 1].t >= probe.transient_end,
        })
        .collect();
    let increments = probe.increments();
    let radii: Vec<f64> = (0..)
        .map(|k| 2f64.powi(k))
        .take_while(|&r| r <= s.box_radius as f64 * config.dimension as f64)
        .collect();
    let converges = probe.converges(ratio);
    let summary = json!({
        "initial_extent": probe.initial_extent,
        "transient_end": probe.transient_end,
        "converges": converges,
        "ratio": ratio,
        "first_increment": increments.first(),
        "last_increment": increments.last(),
        "max_norm_defect": probe.max_norm_defect(),
        "thm1_radii": radii,
        "thm1_partial_sums": thm1_condition_partial_sums(&v, &radii),
    });
    let lines = vec![
        format!(
            "{} samples, transient ends at t = {:.1}, max norm defect {:.1e}",
            rows.len(),
            probe.transient_end,
            probe.max_norm_defect()
        ),
        format!(
            "increments {:.3e} -> {:.3e}; Cauchy decay below ratio {ratio}: {}",
            increments.first().copied().unwrap_or(f64::NAN),
            increments.last().copied().unwrap_or(f64::NAN),
            if converges { "yes" } else { "no" }
        ),
    ];
    outcome(&rows, summary, lines)
}

fn simon_wolff(config: &ExperimentConfig, kernel: &GreenKernel) -> Result<Outcome, CliError> {
    let s = config.simon_wolff.as_ref().expect("validated");
    let v = required_potential(config)?;
    let thresholds = ResolveThresholds {
        near_eigenvalue: s.near_eigenvalue.expect("resolved"),
        summable: s.summable.expect("resolved"),
    };
    let j = Site::new(s.j.clone());
    let report = simon_wolff_resolve(kernel, s.lambda, &j, &v, &s.radii, &thresholds)?;
    let summary = json!({
        "lambda": report.lambda,
        "j": report.j,
        "verdict": report.verdict,
    });
    let lines = vec![format!(
        "λ = {}, j = {}: verdict {:?} after {} radii",
        report.lambda,
        report.j,
        report.verdict,
        report.rows.len()
    )];
    outcome(&report.rows, summary, lines)
}

#[derive(Serialize)]
struct ImpurityRow {
    beta: f64,
    level: Option<f64>,
    closed_form: Option<f64>,
    box_eigenvalue: Option<f64>,
}

fn impurity(config: &ExperimentConfig, kernel: &GreenKernel) -> Result<Outcome, CliError> {
    let s = config.impurity.as_ref().expect("validated");
    let dim = config.dimension;
    let mut rows = Vec::with_capacity(s.betas.len());
    for &beta in &s.betas {
        let level = match impurity_level(kernel, beta) {
            Ok(level) => Some(level),
            Err(LabError::NoBoundState { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let closed_form = (dim == 1).then(|| 2.0 - (4.0 + beta * beta).sqrt());
        let box_eigenvalue = match s.box_radius {
            Some(radius) => {
                let lattice = LatticeBox::dirichlet(dim, radius)?;
                let op = BoxOperator::new(lattice, Potential::single_bump(dim, beta)?)?;
                let (lower, _) = op.spectral_bounds();
                eigs_in_window(&op, lower - 1.0, 0.0, 1)?
                    .pairs
                    .first()
                    .map(|p| p.value)
            }
            None => None,
        };
        rows.push(ImpurityRow {
            beta,
            level,
            closed_form,
            box_eigenvalue,
        });
    }
    let lines = rows
        .iter()
        .map(|r| match r.level {
            Some(l) => format!("β = {}: level {l:.12}", r.beta),
            None => format!("β = {}: no bound state", r.beta),
        })
        .collect();
    let summary = json!({ "bound_states": rows.iter().filter(|r| r.level.is_some()).count() });
    outcome(&rows, summary, lines)
}

#[derive(Serialize)]
struct FillRow {
    realization: usize,
    seed: u64,
    eigenvalue: f64,
    participation: f64,
}

fn spectrum_fill(config: &ExperimentConfig, kernel: &GreenKernel) -> Result<Outcome, CliError> {
    let s = config.spectrum_fill.as_ref().expect("validated");
    let fill = FillConfig {
        lambda0: s.lambda0,
        dim: config.dimension,
        radius: s.radius,
        rule: s.rule.clone(),
        realizations: s.realizations,
        seed: config.seed,
        a: s.a,
    };
    let report = spectrum_fill_scan(kernel, &fill)?;
    let bound = kernel.coupling_bound_a(s.lambda0)?;
    let rows: Vec<FillRow> = report
        .realizations
        .iter()
        .flat_map(|r| {
            r.eigenvalues
                .iter()
                .zip(&r.participation)
                .map(|(&eigenvalue, &participation)| FillRow {
                    realization: r.index,
                    seed: r.seed,
                    eigenvalue,
                    participation,
                })
        })
        .collect();
    let summary = json!({
        "a": report.a,
        "coupling_bound_a": bound,
        "support_size": report.support_size,
        "eigenvalues_in_window": report.pooled.len(),
        "largest_gap": report.largest_gap,
        "median_participation": report.median_participation,
        "max_participation": report.max_participation,
        "empirical_min": report.empirical_min,
        "below_lambda0": report.below_lambda0,
    });
    let lines = vec![
        format!(
            "a = {:.10}, {} support sites, {} realizations, {} eigenvalues in [λ0, 0)",
            report.a,
            report.support_size,
            report.realizations.len(),
            report.pooled.len()
        ),
        format!(
            "largest gap {:.5}, median participation {:.3}, {} eigenvalues below λ0",
            report.largest_gap,
            report.median_participation.unwrap_or(f64::NAN),
            report.below_lambda0
        ),
    ];
    outcome(&rows, summary, lines)
}

#[derive(Serialize)]
struct BumpRow {
    site: String,
    amplitude: f64,
    separation: f64,
    sup_difference: f64,
}

fn bump_measure(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = config.bump_measure.as_ref().expect("validated");
    let v = required_potential(config)?;
    let far: Vec<Site> = s.far_sites.iter().map(|c| Site::new(c.clone())).collect();
    let z: Vec<Complex64> = s.z.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    let report = bump_measure_compare(&v, &far, s.beta, &z, s.local_radius, s.global_radius)?;
    let rows: Vec<BumpRow> = report
        .rows
        .iter()
        .map(|r| BumpRow {
            site: site_label(&r.site),
            amplitude: r.amplitude,
            separation: r.separation,
            sup_difference: r.sup_difference,
        })
        .collect();
    let summary = json!({
        "beta": report.beta,
        "reference": report.reference,
        "strictly_decreasing": report.strictly_decreasing(),
        "final_difference": report.final_difference(),
    });
    let lines = vec![format!(
        "sup |m_j - m_β| from {:.3e} to {:.3e}; strictly decreasing: {}",
        rows.first().map_or(f64::NAN, |r| r.sup_difference),
        rows.last().map_or(f64::NAN, |r| r.sup_difference),
        report.strictly_decreasing()
    )];
    outcome(&rows, summary, lines)
}

#[derive(Serialize)]
struct GvRow {
    site: String,
    amplitude: f64,
    window: f64,
    measure: f64,
    bound: f64,
    within_bound: bool,
    resolution_warning: bool,
}

fn one_plus_gv(config: &ExperimentConfig, kernel: &GreenKernel) -> Result<Outcome, CliError> {
    let s = config.one_plus_gv.as_ref().expect("validated");
    let v = required_potential(config)?;
    let sites: Vec<Site> = s.sites.iter().map(|c| Site::new(c.clone())).collect();
    let step = (s.lambda_max - s.lambda_min) / (s.points - 1) as f64;
    let grid: Vec<f64> = (0..s.points)
        .map(|i| s.lambda_min + step * i as f64)
        .collect();
    let scan = one_plus_gv_scan(kernel, &v, s.epsilon, &grid, &sites)?;
    let rows: Vec<GvRow> = scan
        .rows
        .iter()
        .map(|r| GvRow {
            site: site_label(&r.site),
            amplitude: r.amplitude,
            window: r.window,
            measure: r.measure,
            bound: r.bound,
            within_bound: r.within_bound,
            resolution_warning: r.resolution_warning,
        })
        .collect();
    let all_within = rows.iter().all(|r| r.within_bound);
    let summary = json!({
        "epsilon": scan.epsilon,
        "spacing": scan.spacing,
        "lambda_range": scan.lambda_range,
        "all_within_bound": all_within,
    });
    let lines = vec![format!(
        "{} sites, grid spacing {:.2e}; all measures within bound: {all_within}",
        rows.len(),
        scan.spacing
    )];
    outcome(&rows, summary, lines)
}
