//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs sequentially so the wall-clock budgets are meaningful.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use latspec_core::green::GreenKernel;
use latspec_core::hamlab::{eigs_in_window, BoxOperator};
use latspec_core::lattice::{thm1_condition_partial_sums, SparseRule};
use latspec_core::localization::{
    bump_measure_compare, eigenvalue_candidates, impurity_level, one_plus_gv_scan,
    solve_on_support, spectrum_fill_scan, FillConfig,
};
use latspec_core::scattering::{
    q_decay_fit, q_decay_fit_with, wave_operator_probe, BumpProfile, ProbeOptions,
    PropagatorSpec, QIntegralSpec,
};
use latspec_core::{LatticeBox, LatticeField, Potential, Site};
use nalgebra::DVector;
use num_complex::Complex64;

type Check = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "green oracle", budget: secs(1), run: green_oracle },
        Criterion { id: 2, name: "decay rate", budget: secs(10), run: decay_rate },
        Criterion { id: 3, name: "impurity level", budget: secs(30), run: impurity },
        Criterion { id: 4, name: "coupling bound", budget: secs(600), run: coupling_bound },
        Criterion { id: 5, name: "stationary-phase exponent", budget: secs(300), run: q_exponent },
        Criterion { id: 6, name: "wave-operator probe", budget: secs(600), run: wave_probe },
        Criterion { id: 7, name: "simon-wolff oracle equivalence", budget: secs(120), run: simon_wolff },
        Criterion { id: 8, name: "borel-cantelli bound", budget: secs(60), run: borel_cantelli },
        Criterion { id: 9, name: "measure convergence", budget: secs(300), run: measure_convergence },
        Criterion { id: 10, name: "localization statistics", budget: secs(900), run: localization_stats },
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {}: {} ({:.2} s of {} s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn closed_form_green(lambda: f64, n: i64) -> f64 {
    let a = 2.0 - lambda;
    let root = (a * a - 4.0).sqrt();
    ((a - root) / 2.0).powi(n.abs() as i32) / root
}

fn green_oracle() -> Check {
    let kernel = GreenKernel::new(1);
    let mut worst = 0.0f64;
    for lambda in [-0.1, -1.0, -10.0] {
        for n in -20..=20i64 {
            let g = kernel.eval_real(lambda, &Site::from([n])).map_err(err)?;
            worst = worst.max((g - closed_form_green(lambda, n)).abs());
        }
    }
    Ok((worst <= 1e-10, format!("max |G - closed form| = {worst:.2e} (limit 1e-10)")))
}

fn decay_rate() -> Check {
    let exact = (2.0 / (3.0 - 5f64.sqrt())).ln();
    let fit1 = GreenKernel::new(1)
        .decay_fit(-1.0, &Site::from([1]), 20, 1e-6)
        .map_err(err)?;
    let rel = (fit1.gamma - exact).abs() / exact;
    let kernel2 = GreenKernel::new(2);
    let axis = kernel2.decay_fit(-1.0, &Site::from([1, 0]), 10, 1e-6).map_err(err)?;
    let diagonal = kernel2.decay_fit(-1.0, &Site::from([1, 1]), 10, 1e-6).map_err(err)?;
    let residual = axis.residual.max(diagonal.residual);
    Ok((
        rel <= 0.02 && residual < 1e-3,
        format!(
            "d=1 γ = {:.6} vs {exact:.6} (rel {rel:.1e}); d=2 fit residual 1-R² = {residual:.1e}",
            fit1.gamma
        ),
    ))
}

fn impurity() -> Check {
    let root = impurity_level(&GreenKernel::new(1), -1.0).map_err(err)?;
    let closed = 2.0 - 5f64.sqrt();
    let lattice = LatticeBox::dirichlet(1, 400).map_err(err)?;
    let op = BoxOperator::new(lattice, Potential::single_bump(1, -1.0).map_err(err)?).map_err(err)?;
    let spectrum = eigs_in_window(&op, -10.0, 0.0, 1).map_err(err)?;
    let lowest = spectrum.pairs.first().ok_or("no eigenvalue below 0")?.value;
    let e1 = (root - closed).abs();
    let e2 = (root - lowest).abs();
    Ok((
        e1 <= 1e-10 && e2 <= 1e-6,
        format!("root {root:.12}; |root - (2-√5)| = {e1:.1e}; |root - box eigenvalue| = {e2:.1e}"),
    ))
}

fn fill(radius: i64, realizations: usize) -> Result<latspec_core::localization::FillReport, String> {
    let config = FillConfig {
        lambda0: -1.0,
        dim: 1,
        radius,
        rule: SparseRule::PowerLaw {
            p: 2.0,
            symmetric: false,
        },
        realizations,
        seed: 1,
        a: None,
    };
    spectrum_fill_scan(&GreenKernel::new(1), &config).map_err(err)
}

fn coupling_bound() -> Check {
    let a = GreenKernel::new(1).coupling_bound_a(-1.0).map_err(err)?;
    let ea = (a - 5f64.sqrt()).abs();
    let report = fill(2000, 20)?;
    let min = report.empirical_min.unwrap_or(0.0);
    Ok((
        ea <= 1e-10 && report.below_lambda0 == 0,
        format!(
            "|a - √5| = {ea:.1e}; lowest of {} eigenvalues over 20 realizations = {min:.9} ({} below λ0 - 1e-8)",
            report.realizations.iter().map(|r| r.eigenvalues.len()).sum::<usize>(),
            report.below_lambda0
        ),
    ))
}

fn q_exponent() -> Check {
    let js: Vec<Site> = [8, 16, 32, 64, 128].iter().map(|&m| Site::from([m, 0])).collect();
    let spec = QIntegralSpec::new(2.0, BumpProfile::Standard, js.clone()).map_err(err)?;
    let fit = q_decay_fit(&spec).map_err(err)?;
    let synthetic = q_decay_fit_with(&js, |j| Ok(0.7 / j.norm())).map_err(err)?;
    Ok((
        (fit.exponent + 0.5).abs() <= 0.1 && (synthetic.exponent + 1.0).abs() <= 0.02,
        format!(
            "slope {:.4} (target -0.5 ± 0.1); synthetic |j|^-1 slope {:.4}",
            fit.exponent, synthetic.exponent
        ),
    ))
}

fn wave_probe() -> Check {
    let tol = 1e-8;
    // Free dynamics: W(t) = I.
    let small = LatticeBox::periodic(2, 60).map_err(err)?;
    let f = LatticeField::gaussian(small, &Site::from([0, 0]), 1.0);
    let spec = PropagatorSpec::new(small, (1..=10).map(|k| k as f64).collect(), tol).map_err(err)?;
    let free = wave_operator_probe(&Potential::zero(2), &f, &spec, &ProbeOptions::default())
        .map_err(err)?;
    let free_max = free.increments().iter().copied().fold(0.0, f64::max);

    // Unit bumps at (k^4, 0): Σ |V(n)| / |n|^{1/2} = Σ 1/k^2 converges.
    let v = Potential::from_entries(2, (1..=4i64).map(|k| (Site::from([k.pow(4), 0]), 1.0)))
        .map_err(err)?;
    let sums = thm1_condition_partial_sums(&v, &[10.0, 100.0, 1000.0]);
    let lattice = LatticeBox::periodic(2, 356).map_err(err)?;
    let f = LatticeField::gaussian(lattice, &Site::from([0, 0]), 1.0);
    let times: Vec<f64> = (0..22).map(|k| 2.0 + 4.0 * k as f64).collect();
    let spec = PropagatorSpec::new(lattice, times, tol).map_err(err)?;
    let probe = wave_operator_probe(&v, &f, &spec, &ProbeOptions::default()).map_err(err)?;
    let inc = probe.increments();
    let ratio = inc.last().copied().unwrap_or(f64::NAN) / inc[0];
    let ok = probe.converges(0.1) && free_max < 10.0 * tol && probe.max_norm_defect() < 10.0 * tol;
    Ok((
        ok,
        format!(
            "partial sums {:.4?}; transient ends t = {:.1}; settled increments nonincreasing = {}; final/first = {ratio:.4}; V≡0 max increment {free_max:.1e} (limit {:.0e})",
            sums,
            probe.transient_end,
            probe.settled_increments().windows(2).all(|w| w[1] <= w[0]),
            10.0 * tol
        ),
    ))
}

fn simon_wolff() -> Check {
    // ψ on the support against a dense box solve.
    let v = Potential::from_entries(
        2,
        [
            (Site::from([0, 0]), -2.5),
            (Site::from([2, 1]), 1.0),
            (Site::from([-1, 3]), -1.5),
            (Site::from([3, -2]), -3.0),
        ],
    )
    .map_err(err)?;
    let kernel = GreenKernel::new(2);
    let lambda = -0.7;
    let j = Site::from([1, 1]);
    let solution = solve_on_support(&kernel, lambda, &j, &v, 10).map_err(err)?;
    let lattice = LatticeBox::dirichlet(2, 30).map_err(err)?;
    let op = BoxOperator::new(lattice, v.clone()).map_err(err)?;
    let mut a = op.to_dense();
    for i in 0..lattice.len() {
        a[(i, i)] -= lambda;
    }
    let mut e = DVector::zeros(lattice.len());
    e[lattice.index_of(&j).ok_or("j outside box")?] = 1.0;
    let direct = a.lu().solve(&e).ok_or("singular box matrix")?;
    let mut worst = 0.0f64;
    for (n, psi) in solution.support.sites().iter().zip(&solution.psi) {
        worst = worst.max((direct[lattice.index_of(n).ok_or("site outside box")?] - psi).abs());
    }

    // Singularity flags against box eigenvalues.
    let grid: Vec<f64> = (0..150).map(|i| -4.5 + 4.4 * i as f64 / 149.0).collect();
    let candidates = eigenvalue_candidates(&kernel, &v, 10, &grid, 1e-6).map_err(err)?;
    let eigs = eigs_in_window(&op, -4.5, -0.1, 20).map_err(err)?.values();
    let matched = candidates.len() == eigs.len()
        && candidates
            .iter()
            .zip(&eigs)
            .all(|(c, e)| (c.lambda - e).abs() < 1e-4);
    let offset = candidates
        .iter()
        .zip(&eigs)
        .map(|(c, e)| (c.lambda - e).abs())
        .fold(0.0, f64::max);
    Ok((
        worst <= 1e-6 && matched,
        format!(
            "max |ψ - box resolvent| on support = {worst:.1e}; {} flags vs {} box eigenvalues, max offset {offset:.1e}",
            candidates.len(),
            eigs.len()
        ),
    ))
}

fn borel_cantelli() -> Check {
    let kernel = GreenKernel::new(1);
    let sites: Vec<Site> = [10, 20, 40].iter().map(|&k| Site::from([k])).collect();
    let grid: Vec<f64> = (0..=25_000).map(|i| -3.0 + 2.5 * i as f64 / 25_000.0).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for amplitude in [-5f64.sqrt(), -1.5, -3.0] {
        let v = Potential::from_entries(1, sites.iter().map(|s| (s.clone(), amplitude)))
            .map_err(err)?;
        let scan = one_plus_gv_scan(&kernel, &v, 0.5, &grid, &sites).map_err(err)?;
        ok &= scan.rows.iter().all(|r| r.measure <= r.bound + scan.spacing);
        lines.push(format!(
            "V={amplitude:.3}: {}",
            scan.rows
                .iter()
                .map(|r| format!("{:.4}≤{:.4}", r.measure, r.bound))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn measure_convergence() -> Check {
    let bumps = (1..=20i64).map(|k| (Site::from([k * k]), -1.0 + 1.0 / k as f64));
    let v = Potential::from_entries(1, bumps).map_err(err)?;
    let far: Vec<Site> = (3..=10i64).map(|k| Site::from([k * k])).collect();
    let z = [Complex64::new(0.0, 1.0), Complex64::new(-0.5, 0.5)];
    let report = bump_measure_compare(&v, &far, -1.0, &z, 100, 400).map_err(err)?;
    let diffs: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.2e}", r.sup_difference))
        .collect();
    Ok((
        report.strictly_decreasing(),
        format!("sup differences at k = 3..10: {}", diffs.join(", ")),
    ))
}

fn localization_stats() -> Check {
    let small = fill(500, 20)?;
    let large = fill(2000, 20)?;
    let m_small = small.median_participation.ok_or("no eigenvalues at R=500")?;
    let m_large = large.median_participation.ok_or("no eigenvalues at R=2000")?;
    // "Does not grow": within 10% of the smaller box.
    let ok = large.largest_gap < small.largest_gap && m_large < 50.0 && m_large <= 1.1 * m_small;
    Ok((
        ok,
        format!(
            "largest gap {:.4} (R=500) -> {:.4} (R=2000); median PR {m_small:.2} -> {m_large:.2}; pooled {} -> {}",
            small.largest_gap,
            large.largest_gap,
            small.pooled.len(),
            large.pooled.len()
        ),
    ))
}
