//! The named pipelines. Each records its own checks against the configured tolerances.

use std::io::Write;

use kuramoto_core::export::{hydro_csv_header, num, write_gci_csv, write_hydro_snapshot, write_kinetic_dump, write_kinetic_moments, KINETIC_MOMENTS_HEADER};
use kuramoto_core::gci::solve_gci;
use kuramoto_core::hardy::{asymptotic_tail, bl_product, bl_product_xform, integrate, muckenhoupt_bl};
use kuramoto_core::kinetic;
use kuramoto_core::model::{FrequencyQuadrature, VelocityGrid};
use kuramoto_core::particles::{pairwise_sync_force, sample_initial, InitialSpec};
use kuramoto_core::stats::strictly_decreasing;
use kuramoto_core::study::{
    collision_refinement, eps_sweep as sweep, equilibrium_relax as relax, gci_invariance_case, gci_refinement, hardy_ratio_suite,
    hydro_refinement, particle_relaxation, EpsSweepSetup,
};

use crate::config::{Experiment, RunConfig};
use crate::error::Result;
use crate::output::{Output, Series};

pub fn run_experiment(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    match cfg.experiment {
        Experiment::EpsSweep => eps_sweep(cfg, out),
        Experiment::ParticleVsKinetic => particle_vs_kinetic(cfg, out),
        Experiment::HydroValidate => hydro_validate(cfg, out),
        Experiment::GciValidate => gci_validate(cfg, out),
        Experiment::HardyValidate => hardy_validate(cfg, out),
        Experiment::EquilibriumRelax => equilibrium_relax(cfg, out),
    }
}

fn within(x: f64, [lo, hi]: [f64; 2]) -> bool {
    (lo..=hi).contains(&x)
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn sweep_setup(cfg: &RunConfig) -> EpsSweepSetup {
    let g = &cfg.grids;
    EpsSweepSetup {
        physical: cfg.physical,
        epsilons: cfg.scaled.epsilons.clone(),
        n_theta: g.n_theta,
        n_w: g.n_w,
        n_nu: g.n_nu,
        nu_mean: g.nu_mean,
        nu_std: g.nu_std,
        t_end: g.t_end,
        kinetic: cfg.kinetic.to_config(),
        hydro_cfl: g.hydro_cfl,
        hydro_refine: g.hydro_refine,
        ..EpsSweepSetup::default()
    }
}

fn eps_sweep(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let tol = &cfg.tolerances;
    let setup = sweep_setup(cfg);
    let r = out.stage("sweep", |o| o.core(sweep(&setup)))?;
    out.stage("write", |o| {
        let rows = (0..r.epsilons.len()).map(|k| vec![r.epsilons[k], r.errors[k], r.mass_drift[k], r.min_value[k]]).collect();
        o.emit_plotdata(&[Series::new("eps_errors", "kinetic vs hydrodynamic density error", &["epsilon", "error", "mass_drift", "min_value"], rows)
            .labels("epsilon", "max |P_eps - P|")
            .log_log()])?;
        let reference = o.core(setup.hydro_reference())?;
        let mut w = o.create("hydro_reference.csv")?;
        writeln!(w, "{}", hydro_csv_header(setup.n_nu))?;
        o.core(write_hydro_snapshot(&mut w, &reference))?;
        w.flush()?;
        Ok(())
    })?;
    let eps_min = r.epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    out.stage("final_state", |o| {
        let s = o.core(setup.kinetic_final(eps_min))?;
        let (dir, stem) = (o.root().to_path_buf(), "kinetic_final");
        o.core(write_kinetic_dump(&dir, stem, &s))?;
        o.path(&format!("{stem}.json"));
        o.path(&format!("{stem}.bin"));
        let mut w = o.create("kinetic_final_moments.csv")?;
        writeln!(w, "{KINETIC_MOMENTS_HEADER}")?;
        o.core(write_kinetic_moments(&mut w, s.t, &kinetic::moments(&s), setup.n_theta))?;
        w.flush()?;
        Ok(())
    })?;
    out.check(
        "eps_slope",
        within(r.slope, tol.eps_slope),
        format!("errors [{}] over eps {:?}: slope {:.3} (range {:?})", sci(&r.errors), r.epsilons, r.slope, tol.eps_slope),
    );
    let drift = r.mass_drift.iter().cloned().fold(0.0, f64::max);
    let min = r.min_value.iter().cloned().fold(f64::INFINITY, f64::min);
    out.check("kinetic_positivity", min >= 0.0, format!("min f {min:.2e}; max relative mass drift {drift:.1e}"));
    Ok(())
}

fn particle_vs_kinetic(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let tol = &cfg.tolerances;
    let p = &cfg.particles;
    let force_err = out.stage("force_check", |o| {
        let spec = o.core(InitialSpec::new("uniform-phase", "gaussian-w(0,1)", "normal(0,1)"))?;
        let e = o.core(sample_initial(&spec, 50, cfg.seed))?;
        let k = cfg.physical.k.max(1.0);
        let fast = pairwise_sync_force(&e, k);
        Ok((0..50).fold(0.0f64, |m, i| {
            let brute: f64 = (0..50).map(|j| (e.theta[j] - e.theta[i]).sin()).sum::<f64>() * k / 50.0;
            m.max((brute - fast[i]).abs())
        }))
    })?;
    out.check("force_reduction", force_err <= tol.force, format!("O(N) vs O(N^2) at N=50: {force_err:.1e} (tol {:.0e})", tol.force));

    let s = out.stage("relaxation", |o| o.core(particle_relaxation(p.n, p.nu, p.t_end, p.dt, cfg.seed, p.record_every)))?;
    out.stage("write", |o| {
        let rows = (0..s.grid.n_w).map(|j| vec![s.grid.node(j), s.marginal[j], s.reference[j]]).collect();
        let order = s
            .order
            .iter()
            .map(|r| {
                let (mean, var) = (p.nu * (1.0 - (-r.t).exp()), 1.0 - (-2.0 * r.t).exp());
                vec![r.t, r.r, r.psi, r.mean_w, r.var_w, mean, var]
            })
            .collect();
        o.emit_plotdata(&[
            Series::new("w_marginal", "particle w-marginal vs Maxwellian", &["w", "empirical", "maxwellian"], rows).labels("w", "density"),
            Series::new("order", "order parameter and velocity moments", &["t", "r", "psi", "mean_w", "var_w", "mean_exact", "var_exact"], order),
        ])?;
        Ok(())
    })?;
    out.check(
        "relaxed_marginal",
        s.l1 <= tol.relax_l1,
        format!("w-marginal L1 vs M_V {:.4} (N={}, t={}, tol {})", s.l1, p.n, p.t_end, tol.relax_l1),
    );
    Ok(())
}

fn hydro_validate(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let tol = &cfg.tolerances;
    let g = &cfg.grids;
    let s = out.stage("refinement", |o| o.core(hydro_refinement(&g.theta_ladder, g.t_end, g.hydro_cfl)))?;
    out.stage("write", |o| {
        let a = &s.advection_l1;
        let adv = (0..a.n.len()).map(|k| vec![a.h[k], a.values[k], a.n[k] as f64]).collect();
        let m = &s.momentum_residual;
        let mom = (0..m.n.len())
            .map(|k| {
                vec![
                    m.h[k],
                    m.values[k],
                    s.coupled_momentum_sup[k],
                    s.coupled_momentum_l1[k],
                    s.coupled_hl2_sup[k],
                    s.coupled_py_variation[k],
                ]
            })
            .collect();
        o.emit_plotdata(&[
            Series::new("advection_l1", "K=0 advection L1 error", &["dtheta", "l1", "n_theta"], adv).log_log(),
            Series::new(
                "momentum_residual",
                "momentum balance residual",
                &["dtheta", "balanced", "coupled_sup", "coupled_l1", "coupled_hl2_sup", "coupled_py_variation"],
                mom,
            )
            .log_log(),
        ])?;
        Ok(())
    })?;
    let slope = s.advection_l1.slope;
    out.check(
        "advection_slope",
        within(slope, tol.advection_slope),
        format!("L1 errors [{}]: slope {slope:.3} (range {:?})", sci(&s.advection_l1.values), tol.advection_slope),
    );
    out.check(
        "mass_drift",
        s.max_mass_drift_per_step <= tol.mass_drift,
        format!("per-nu drift per step {:.1e} (tol {:.0e})", s.max_mass_drift_per_step, tol.mass_drift),
    );
    out.check(
        "uniform_stationary",
        s.uniform_deviation <= tol.stationarity,
        format!("deviation {:.1e} (tol {:.0e})", s.uniform_deviation, tol.stationarity),
    );
    let r = &s.momentum_residual.values;
    out.check(
        "momentum_residual_decreasing",
        strictly_decreasing(r),
        format!("[{}] slope {:.2}; coupled sup [{}]", sci(r), s.momentum_residual.slope, sci(&s.coupled_momentum_sup)),
    );
    Ok(())
}

fn gci_validate(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let tol = &cfg.tolerances;
    let (ladder, v) = (&cfg.grids.w_ladder, cfg.gci.v);
    let at = ladder.iter().position(|n| *n == cfg.gci.n_w_check).unwrap_or(0);
    let col = out.stage("collision", |o| o.core(collision_refinement(v, ladder, cfg.seed)))?;
    let g = out.stage("gci", |o| o.core(gci_refinement(v, ladder, tol.gci_interior_half_width)))?;
    let cases = out.stage("invariance", |o| {
        (0..tol.pairing_fields as u64).map(|k| o.core(gci_invariance_case(v, ladder, cfg.gci.n_nu, cfg.seed.wrapping_add(k)))).collect::<Result<Vec<_>>>()
    })?;
    out.stage("write", |o| {
        let c = (0..col.discrepancy.n.len())
            .map(|k| vec![col.discrepancy.h[k], col.discrepancy.values[k], col.equilibrium_residual.values[k]])
            .collect();
        let e = (0..g.sup_error.n.len()).map(|k| vec![g.sup_error.h[k], g.sup_error.values[k], g.constraint_residual[k]]).collect();
        let mut pairing = Vec::new();
        for case in &cases {
            for k in 0..case.n.len() {
                pairing.push(vec![
                    case.seed as f64,
                    case.n[k] as f64,
                    case.beta,
                    case.pairing[k],
                    case.rounding_floor[k],
                    case.pairing_direct[k],
                    case.constraint[k],
                ]);
            }
        }
        o.emit_plotdata(&[
            Series::new("collision_refinement", "collision forms: discrepancy and equilibrium residual", &["dw", "discrepancy", "equilibrium_residual"], c)
                .log_log(),
            Series::new("gci_error", "GCI sup error vs w - V", &["dw", "sup_error", "constraint_residual"], e).log_log(),
            Series::new("gci_pairing", "GCI pairing on constrained fields", &["seed", "n_w", "beta", "pairing", "rounding_floor", "pairing_direct", "constraint"], pairing),
        ])?;
        let grid = o.core(VelocityGrid::centered(v, 8.0, cfg.gci.n_w_check))?;
        let chi = o.core(solve_gci(v, &grid))?;
        let p = o.path("chi.csv");
        o.core(write_gci_csv(&p, &chi))
    })?;
    let lim = tol.second_order_slope;
    out.check(
        "collision_second_order",
        within(col.discrepancy.slope, lim) && within(col.equilibrium_residual.slope, lim),
        format!("discrepancy slope {:.3}, equilibrium slope {:.3} (range {lim:?})", col.discrepancy.slope, col.equilibrium_residual.slope),
    );
    let cons = g.constraint_residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    out.check(
        "gci_reference",
        g.sup_error.values[at] <= tol.gci_sup_error && within(g.sup_error.slope, lim) && cons <= tol.constraint,
        format!(
            "sup error (|w-V|<={}) at n_w={} {:.3e}, slope {:.3}, constraint {cons:.1e}",
            tol.gci_interior_half_width, cfg.gci.n_w_check, g.sup_error.values[at], g.sup_error.slope
        ),
    );
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for c in &cases {
        ok &= c.constraint.iter().all(|x| x.abs() <= tol.constraint) && c.pairing[at].abs() <= tol.pairing;
        ok &= (1..c.pairing.len()).all(|k| c.pairing[k].abs() < c.pairing[k - 1].abs() || c.pairing[k].abs() <= c.rounding_floor[k]);
        worst = worst.max(c.pairing[at].abs());
    }
    out.check(
        "gci_invariance",
        ok,
        format!("{} fields: max |pairing| at n_w={} {worst:.2e} (tol {:.0e}), decreasing or at rounding floor", cases.len(), cfg.gci.n_w_check, tol.pairing),
    );
    Ok(())
}

fn hardy_validate(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let tol = &cfg.tolerances;
    let h = &cfg.hardy;
    let report = out.stage("constants", |o| o.core(muckenhoupt_bl(h.d, h.v)))?;
    out.json("hardy_report.json", &report)?;
    let cases = out.stage("suite", |o| o.core(hardy_ratio_suite(h.v, h.suite_size, cfg.seed, h.suite_n_w)))?;
    let series = out.stage("series", |o| {
        (0..h.series_points)
            .map(|k| {
                let a = if h.series_points == 1 {
                    h.series_a_min
                } else {
                    h.series_a_min + (h.series_a_max - h.series_a_min) * k as f64 / (h.series_points - 1) as f64
                };
                let s = o.core(asymptotic_tail(a, usize::MAX))?;
                // scaled integrand, independent of the series branch
                let upper = -a + (a * a + 745.0).sqrt();
                let (q, qe) = integrate(&|x: f64| (-2.0 * a * x - x * x).exp(), 0.0, upper, 1e-17);
                let (q, qe) = (q * (-a * a).exp(), qe * (-a * a).exp() + 4.0 * f64::EPSILON * q * (-a * a).exp());
                Ok(vec![a, s.value, q, s.truncation_bound, qe, s.terms as f64])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let large_r: Vec<Vec<f64>> = (0..=24)
        .map(|k| {
            let rv = 6.0 + 0.25 * k as f64;
            let a = rv / 2f64.sqrt();
            vec![rv, bl_product(h.v, h.v, h.v + rv).0, bl_product_xform(h.v, h.v, h.v + rv), 1.0 / (4.0 * a * a)]
        })
        .collect();
    out.stage("write", |o| {
        let ratios = cases
            .iter()
            .enumerate()
            .map(|(k, c)| {
                vec![
                    k as f64,
                    c.d,
                    c.ratio.full,
                    c.ratio.right,
                    c.ratio.left,
                    c.report.bracket_lo,
                    c.report.bracket_hi,
                    c.report.b_l,
                    c.report.b_tilde_l,
                ]
            })
            .collect();
        o.emit_plotdata(&[
            Series::new("hardy_ratios", "anchored Hardy ratios", &["index", "d", "full", "right", "left", "bracket_lo", "bracket_hi", "B_L", "B_tilde_L"], ratios),
            Series::new("tail_series", "optimally truncated tail series", &["a", "series", "quadrature", "truncation_bound", "quadrature_error", "terms"], series.clone())
                .log_y(),
            Series::new("large_r_product", "B_L product at large r", &["r_minus_V", "w_form", "x_form", "inverse_4a2"], large_r.clone()).log_log(),
        ])?;
        Ok(())
    })?;
    let slack = tol.hardy_slack;
    let full = cases.iter().fold(0.0f64, |m, c| m.max(c.ratio.full / (c.report.bracket_hi * slack)));
    let side = cases
        .iter()
        .fold(0.0f64, |m, c| m.max(c.ratio.right / (4.0 * c.report.b_l * slack)).max(c.ratio.left / (4.0 * c.report.b_tilde_l * slack)));
    out.check(
        "hardy_ratios",
        full <= 1.0 && side <= 1.0,
        format!("{} anchored u: max ratio/({slack} bracket_hi) {full:.3}, max side ratio/({slack}*4B) {side:.3}", cases.len()),
    );
    let worst = series.iter().fold(0.0f64, |m, r| m.max((r[1] - r[2]).abs() / (r[3] + r[4])));
    out.check("tail_series", worst <= 1.0, format!("max |series - quadrature| / bound {worst:.3}"));
    let x = large_r.iter().fold(0.0f64, |m, r| m.max((r[2] / r[3] - 1.0).abs()));
    out.check(
        "large_r_product",
        x <= tol.large_r_product,
        format!("substituted-integral product vs 1/(4a^2): rel {x:.3} for r-V in [6,12] (tol {})", tol.large_r_product),
    );
    Ok(())
}

fn equilibrium_relax(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let r = &cfg.relax;
    let g = &cfg.grids;
    let freq = out.core(FrequencyQuadrature::gaussian(g.nu_mean, g.nu_std, g.n_nu))?;
    let kc = cfg.kinetic.to_config();
    let rec = out.stage("relax", |o| o.core(relax(&cfg.physical, r.epsilon, freq, r.n_w, r.t_end, &kc)))?;
    out.stage("write", |o| {
        let rows = rec.iter().map(|x| vec![x.t, x.distance, x.mean_flux]).collect();
        o.emit_plotdata(&[Series::new("relaxation", "distance to local equilibrium", &["t", "distance", "mean_flux"], rows).log_y()])?;
        Ok(())
    })?;
    let last = rec.last().map(|x| x.distance).unwrap_or(f64::NAN);
    let first = rec.first().map(|x| x.distance).unwrap_or(f64::NAN);
    let tol = cfg.tolerances.equilibrium_distance;
    out.check(
        "equilibrium_reached",
        last <= tol,
        format!("distance {} -> {} at t={} (tol {tol:.0e})", num(first), num(last), r.t_end),
    );
    Ok(())
}
