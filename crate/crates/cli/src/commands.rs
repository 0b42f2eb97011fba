use std::io::Write;

use entroflow::bank::perturbations;
use entroflow::finite_flow::{
    de_bruijn_residual, eep_inequality_check, entropy_decay_check, integrate_flow, max_energy_increase,
    production_decay_check, write_trajectory_csv, PotentialSpec,
};
use entroflow::inequalities::{write_report_csv, CaseResult, Sweep};
use entroflow::jko::{jko_trajectory, JkoConfig};
use entroflow::pde::{
    de_bruijn_pde_check, dissipation_report, lp_monotonicity, solve_with_stats, stationary_fd, FlowKind, FlowSpec,
};
use entroflow::wasserstein::{mccann_path, path_action, w2_1d, write_geodesic_csv};
use entroflow::{normalize, FreeEnergyFunctional, Geometry, Grid, GridDensity, Trajectory};
use rayon::prelude::*;

use crate::config::{
    CheckParams, DiagnoseParams, Flow, JkoFunctional, JkoParams, Measures, Potential, SimulateParams, W2Params,
};
use crate::output::{fmt, OutDir};
use crate::{CliError, Verdict};

/// Pass/fail rows written to `checks.csv` as `check,value,threshold,pass`.
#[derive(Default)]
struct Checks(Vec<(&'static str, f64, f64, bool)>);

impl Checks {
    /// Records `value <= threshold`.
    fn at_most(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.0.push((name, value, threshold, value <= threshold));
    }

    /// Records `value >= threshold`.
    fn at_least(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.0.push((name, value, threshold, value >= threshold));
    }

    fn write(&self, out: &OutDir) -> Result<Verdict, CliError> {
        out.write("checks.csv", |w| {
            writeln!(w, "check,value,threshold,pass")?;
            for (name, value, threshold, pass) in &self.0 {
                writeln!(w, "{name},{},{},{pass}", fmt(*value), fmt(*threshold))?;
            }
            Ok(())
        })?;
        let mut verdict = true;
        for (name, value, threshold, pass) in &self.0 {
            if !pass {
                println!("violated={name} value={} threshold={}", fmt(*value), fmt(*threshold));
                verdict = false;
            }
        }
        Ok(verdict)
    }
}

fn gaussian(grid: &Grid<f64>, mean: f64, sd: f64) -> Result<GridDensity<f64>, CliError> {
    let raw = grid.map(|x| (-(x - mean) * (x - mean) / (2.0 * sd * sd)).exp());
    Ok(normalize(&raw, grid)?)
}

/// Long-format snapshot series `t,x,value` (`t,r,value` on radial grids).
fn write_snapshots(out: &OutDir, name: &str, traj: &Trajectory<f64, GridDensity<f64>>) -> Result<(), CliError> {
    out.write(name, |w| {
        let coord = traj.states()[0].grid().geometry().coordinate_name();
        writeln!(w, "t,{coord},value")?;
        for (&t, mu) in traj.iter() {
            for (&x, &v) in mu.grid().nodes().iter().zip(mu.values()) {
                writeln!(w, "{},{},{}", fmt(t), fmt(x), fmt(v))?;
            }
        }
        Ok(())
    })?;
    Ok(())
}

pub fn simulate(p: &SimulateParams, seed: u64, out: &OutDir) -> Result<Verdict, CliError> {
    out.manifest("simulate", seed, p)?;
    let (kind, grid, mu0) = match p.flow {
        Flow::Heat | Flow::FokkerPlanck => {
            let [a, b] = p.domain.expect("line domain resolved");
            let grid = Grid::uniform(a, b, p.nodes, 1, Geometry::Line)?;
            let mu0 = gaussian(&grid, p.mean.expect("resolved"), p.sd.expect("resolved"))?;
            let kind = if p.flow == Flow::Heat {
                FlowKind::Heat
            } else {
                FlowKind::FokkerPlanck
            };
            (kind, grid, mu0)
        }
        Flow::FastDiffusion => {
            let radius = p.radius.expect("radius resolved");
            let grid = Grid::radial_staggered(radius, p.nodes, p.n)?;
            let base = stationary_fd(p.n, &grid)?.density;
            let eps = p.perturbation.expect("resolved");
            let bump = &perturbations(seed, 1, 0.0, radius, eps.max(f64::MIN_POSITIVE))[0];
            let raw: Vec<f64> = base
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(&v, &r)| if eps == 0.0 { v } else { v * bump.factor(r) })
                .collect();
            (
                FlowKind::FastDiffusion { n: p.n },
                grid.clone(),
                normalize(&raw, &grid)?,
            )
        }
    };
    let spec = FlowSpec::new(kind, grid.clone(), p.dt, p.t_end)?.with_snapshot_every(p.snapshot_every);
    let (traj, stats) = solve_with_stats(&spec, &mu0)?;
    write_snapshots(out, "snapshots.csv", &traj)?;
    println!("flow={}", kind.name());
    println!("steps={}", stats.steps);
    println!("snapshots={}", traj.len());
    println!("max_step_mass_drift={:e}", stats.max_step_mass_drift);
    println!("min_value={:e}", stats.min_value);

    let mut checks = Checks::default();
    let mass_dev = traj.states().iter().map(|s| (s.mass() - 1.0).abs()).fold(0.0, f64::max);
    checks.at_most("mass_deviation", mass_dev, 1e-8);
    checks
        .0
        .push(("positivity", stats.min_value, 0.0, stats.min_value > 0.0));
    if !p.diagnose {
        return checks.write(out);
    }

    if p.flow == Flow::Heat {
        let t0 = traj.times()[1.min(traj.len() - 1)];
        let rep = de_bruijn_pde_check(&traj, t0, p.t_end)?;
        out.write("de_bruijn.csv", |w| {
            writeln!(w, "t,dent_dt,minus_fisher")?;
            for &(t, l, r) in &rep.rows {
                writeln!(w, "{},{},{}", fmt(t), fmt(l), fmt(r))?;
            }
            Ok(())
        })?;
        println!("de_bruijn_residual={:e}", rep.max_residual);
        let ent = FreeEnergyFunctional::boltzmann();
        let vals: Vec<f64> = traj.states().iter().map(|m| ent.value(m)).collect::<Result<_, _>>()?;
        let rise = vals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        checks.at_most("entropy_step_increase", rise, 0.0);
        checks.at_most("l2_step_increase", lp_monotonicity(&traj, 2.0)?, 0.0);
        checks.at_most("l3_step_increase", lp_monotonicity(&traj, 3.0)?, 0.0);
        return checks.write(out);
    }

    let functional = match kind {
        FlowKind::FastDiffusion { n } => FreeEnergyFunctional::fast_diffusion(n)?,
        _ => FreeEnergyFunctional::fokker_planck(),
    }
    .with_minimizer_on(&grid)?;
    let opts = entroflow::pde::ReportOptions::default();
    let rep = dissipation_report(&traj, &functional)?;
    out.write("report.csv", |w| Ok(rep.write_csv(&mut *w)?))?;
    let target = 2.0 * rep.rho;
    let floor = target * (1.0 - opts.rate_slack);
    out.write("rates.csv", |w| {
        writeln!(w, "quantity,fitted_rate,target_rate,pass")?;
        for (name, rate) in [("value", rep.value_rate), ("production", rep.production_rate)] {
            match rate {
                Some(r) => writeln!(w, "{name},{},{},{}", fmt(r), fmt(target), r >= floor)?,
                None => writeln!(w, "{name},,{},{}", fmt(target), rep.degenerate)?,
            }
        }
        Ok(())
    })?;
    if let Some(r) = rep.value_rate {
        println!("value_rate={r}");
    }
    if let Some(r) = rep.production_rate {
        println!("production_rate={r}");
    }
    println!("target_rate={target}");
    if !rep.degenerate {
        checks.at_most("production_over_bound", rep.worst_bound_ratio, 1.0 + opts.bound_tol);
        checks.at_least("value_rate", rep.value_rate.unwrap_or(f64::NAN), floor);
        checks.at_least("production_rate", rep.production_rate.unwrap_or(f64::NAN), floor);
    }
    checks.at_most("value_step_increase", rep.max_value_increase, opts.monotone_tol);
    checks.write(out)
}

pub fn diagnose(p: &DiagnoseParams, seed: u64, out: &OutDir) -> Result<Verdict, CliError> {
    out.manifest("diagnose", seed, p)?;
    let potential = match p.potential {
        Potential::Quadratic => PotentialSpec::quadratic(p.x0.len())?,
        Potential::Quartic => PotentialSpec::quartic()?,
        Potential::AnisotropicQuadratic => PotentialSpec::anisotropic_quadratic()?,
    };
    let run = integrate_flow(&potential, &p.x0, p.dt, p.t_end)?;
    out.write("trajectory.csv", |w| {
        Ok(write_trajectory_csv(&potential, &run.trajectory, &mut *w)?)
    })?;
    println!("potential={}", potential.name());
    println!("rho={}", potential.rho());
    println!("final_gradient_norm={:e}", run.final_gradient_norm);
    println!(
        "de_bruijn_residual={:e}",
        de_bruijn_residual(&potential, &run.trajectory)?
    );

    let mut checks = Checks::default();
    let prod = production_decay_check(&potential, &run.trajectory);
    let ent = entropy_decay_check(&potential, &run.trajectory)?;
    checks.at_most(
        "production_decay_ratio",
        if prod.degenerate { 0.0 } else { prod.worst_ratio },
        1.0 + 1e-6,
    );
    checks.at_most(
        "entropy_decay_ratio",
        if ent.degenerate { 0.0 } else { ent.worst_ratio },
        1.0 + 1e-6,
    );
    let mut eep_excess = f64::NEG_INFINITY;
    for x in run.trajectory.states() {
        let c = eep_inequality_check(&potential, x)?;
        eep_excess = eep_excess.max((c.lhs - c.rhs) / c.rhs.abs().max(1.0));
    }
    checks.at_most("eep_relative_excess", eep_excess, 1e-9);
    checks.at_most(
        "energy_step_increase",
        max_energy_increase(&potential, &run.trajectory),
        1e-12,
    );
    checks.write(out)
}

pub fn jko(p: &JkoParams, seed: u64, out: &OutDir) -> Result<Verdict, CliError> {
    out.manifest("jko", seed, p)?;
    let grid = Grid::uniform(p.domain[0], p.domain[1], p.nodes, 1, Geometry::Line)?;
    let mu0 = gaussian(&grid, p.mean, p.sd)?;
    let f = match p.functional {
        JkoFunctional::Entropy => FreeEnergyFunctional::boltzmann(),
        JkoFunctional::FokkerPlanck => FreeEnergyFunctional::fokker_planck(),
    };
    let cfg = JkoConfig::new(p.tau, p.steps, p.levels)?;
    let run = jko_trajectory(&f, &mu0, &cfg)?;
    write_snapshots(out, "trajectory.csv", &run.trajectory)?;
    out.write("jko_log.csv", |w| Ok(run.write_log_csv(&mut *w)?))?;
    let last = run.log.last().expect("log has the initial row");
    println!("functional={}", f.name());
    println!("steps={}", p.steps);
    println!("final_energy={}", last.energy);
    println!(
        "max_inner_iters={}",
        run.log.iter().map(|r| r.inner_iters).max().unwrap_or(0)
    );
    let mut checks = Checks::default();
    checks.at_most("energy_step_increase", run.max_energy_increase(), 0.0);
    checks.write(out)
}

pub fn check(p: &CheckParams, seed: u64, out: &OutDir) -> Result<Verdict, CliError> {
    out.manifest("check", seed, p)?;
    let sweep = Sweep::<f64>::new(p.inequality, seed, p.count)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(p.threads)
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    // indexed collect keeps case order independent of scheduling
    let rows: Vec<CaseResult<f64>> = pool.install(|| {
        (0..sweep.len())
            .into_par_iter()
            .map(|k| sweep.run_case(k))
            .collect::<Result<_, _>>()
    })?;
    let name = p.inequality.name();
    out.write(&format!("{name}_report.csv"), |w| Ok(write_report_csv(&rows, &mut *w)?))?;

    let failures = rows.iter().filter(|r| !r.check.passed()).count();
    // worst case: smallest margin relative to the pass tolerance scale
    let worst = rows
        .iter()
        .min_by(|a, b| {
            let ka = a.check.margin() / a.check.rhs.abs().max(1.0);
            let kb = b.check.margin() / b.check.rhs.abs().max(1.0);
            ka.total_cmp(&kb)
        })
        .expect("bank is not empty");
    out.write("summary.csv", |w| {
        writeln!(w, "inequality,cases,failures,worst_case,worst_margin")?;
        writeln!(
            w,
            "{name},{},{failures},{},{}",
            rows.len(),
            worst.case_id,
            fmt(worst.check.margin())
        )?;
        Ok(())
    })?;
    println!("inequality={name}");
    println!("cases={}", rows.len());
    println!("failures={failures}");
    println!("worst_case={}", worst.case_id);
    println!("worst_margin={:e}", worst.check.margin());
    Ok(failures == 0)
}

fn read_density(path: &std::path::Path, field: &str) -> Result<GridDensity<f64>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::config(field, format!("cannot open {}: {e}", path.display())))?;
    let mu = GridDensity::read_csv(std::io::BufReader::new(file), 1)
        .map_err(|e| CliError::config(field, format!("{}: {e}", path.display())))?;
    if mu.grid().geometry() != Geometry::Line {
        return Err(CliError::config(field, "expected an `x,value` density on the line"));
    }
    Ok(normalize(mu.values(), mu.grid())?)
}

pub fn w2(p: &W2Params, seed: u64, out: &OutDir) -> Result<Verdict, CliError> {
    out.manifest("w2", seed, p)?;
    let (mu, nu) = match &p.measures {
        Measures::Files { mu, nu } => (read_density(mu, "mu")?, read_density(nu, "nu")?),
        Measures::Gaussians {
            mu_mean,
            mu_sd,
            nu_mean,
            nu_sd,
            domain,
            nodes,
        } => {
            let grid = Grid::uniform(domain[0], domain[1], *nodes, 1, Geometry::Line)?;
            (gaussian(&grid, *mu_mean, *mu_sd)?, gaussian(&grid, *nu_mean, *nu_sd)?)
        }
    };
    let w = w2_1d(&mu, &nu)?;
    println!("w2={w}");
    println!("w2_squared={}", w * w);
    if p.geodesic_steps > 0 {
        if !mu.grid().same_as(nu.grid()) {
            return Err(CliError::config(
                "nu",
                "geodesic output needs both densities on the same grid",
            ));
        }
        let path = mccann_path(&mu, &nu, p.geodesic_steps)?;
        out.write("geodesic.csv", |w| Ok(write_geodesic_csv(&path, &mut *w)?))?;
        println!("action={}", path_action(&path)?);
    }
    Ok(true)
}
