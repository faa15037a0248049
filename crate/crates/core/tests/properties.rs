use std::f64::consts::PI;

use kuramoto_core::gci::{constraint_values, project_constraint, solve_gci};
use kuramoto_core::hardy::{asymptotic_tail, erfc_tail_quadrature};
use kuramoto_core::hydro::{coupling_fields, llf_fluxes, step_fv, HydroState};
use kuramoto_core::kinetic::{self, KineticConfig, KineticState};
use kuramoto_core::model::{
    collision::{implicit_relax, ImplicitWorkspace}, collision_q, nondimensionalize, sample_gaussian, CollisionForm, FrequencyQuadrature,
    KineticField, PhaseGrid, PhysicalParams, VelocityGrid,
};
use kuramoto_core::particles::{angle_diff, pairwise_sync_force, wrap_phase, NoiseStream, ParticleEnsemble};
use kuramoto_core::stats::loglog_slope;
use proptest::prelude::*;

fn bumps(grid: &VelocityGrid, c: &[(f64, f64, f64)]) -> Vec<f64> {
    grid.nodes().iter().map(|w| c.iter().map(|(a, m, s)| a * (-(w - m).powi(2) / (2.0 * s * s)).exp()).sum()).collect()
}

fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1..1.0f64, -2.0..2.0f64, 0.5..1.5f64), 1..4)
}

fn forms() -> impl Strategy<Value = CollisionForm> {
    prop_oneof![Just(CollisionForm::Direct), Just(CollisionForm::Factored)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collision_conserves_mass(c in bump_params(), v in -2.0..2.0f64, n in 32usize..200, form in forms()) {
        let g = VelocityGrid::centered(v, 8.0, n).unwrap();
        let f = bumps(&g, &c);
        let q = collision_q(form, &f, v, &g).unwrap();
        let scale: f64 = q.iter().map(|x| x.abs()).sum::<f64>() * g.dw();
        prop_assert!((q.iter().sum::<f64>() * g.dw()).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn factored_form_annihilates_sampled_maxwellian(v in -3.0..3.0f64, n in 16usize..400) {
        let g = VelocityGrid::centered(v, 8.0, n).unwrap();
        let m = sample_gaussian(v, &g);
        let q = collision_q(CollisionForm::Factored, &m, v, &g).unwrap();
        prop_assert!(q.iter().all(|x| x.abs() <= 1e-12 / g.dw()));
    }

    #[test]
    fn implicit_relaxation_keeps_mass_and_sign(c in bump_params(), v in -2.0..2.0f64, lambda in 1e-3..1e3f64) {
        let g = VelocityGrid::centered(v, 8.0, 128).unwrap();
        let mut f = bumps(&g, &c);
        let m0: f64 = f.iter().sum();
        let mut ws = ImplicitWorkspace::default();
        implicit_relax(CollisionForm::Factored, &mut f, v, &g, lambda, &mut ws).unwrap();
        // rounding grows with the stiffness λ/Δw²
        let cond = 1.0 + lambda / (g.dw() * g.dw());
        prop_assert!((f.iter().sum::<f64>() - m0).abs() <= 1e-14 * cond * m0);
        prop_assert!(f.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn gci_constraint_holds(v in -5.0..5.0f64, n in 64usize..600) {
        let g = VelocityGrid::centered(v, 8.0, n).unwrap();
        prop_assert!(solve_gci(v, &g).unwrap().constraint_residual <= 1e-10);
    }

    #[test]
    fn projection_zeroes_constraint(c in bump_params(), v in -1.0..1.0f64) {
        let g = VelocityGrid::centered(v, 8.0, 128).unwrap();
        let fq = FrequencyQuadrature::gaussian(0.0, 1.0, 3).unwrap();
        let base = bumps(&g, &c);
        let mut f = KineticField::from_fn(PhaseGrid::new(1).unwrap(), g, fq, |q, _, j| base[j] * (1.0 + 0.3 * q as f64));
        project_constraint(&mut f, v);
        prop_assert!(constraint_values(&f, v).iter().all(|x| x.abs() <= 1e-13));
    }

    #[test]
    fn series_within_bound(a in 1.5..10.0f64) {
        let s = asymptotic_tail(a, usize::MAX).unwrap();
        let (q, e) = erfc_tail_quadrature(a);
        prop_assert!((s.value - q).abs() <= s.truncation_bound + e + 4.0 * f64::EPSILON * q);
    }

    #[test]
    fn phase_helpers_ranges(x in -100.0..100.0f64, y in -100.0..100.0f64) {
        let t = wrap_phase(x);
        prop_assert!((0.0..2.0 * PI).contains(&t));
        let d = angle_diff(x, y);
        prop_assert!(d > -PI - 1e-12 && d <= PI + 1e-12);
        prop_assert!(((x - y) - d).rem_euclid(2.0 * PI).min(2.0 * PI - ((x - y) - d).rem_euclid(2.0 * PI)) < 1e-9);
    }

    #[test]
    fn force_reduction_matches_pairwise(theta in prop::collection::vec(0.0..2.0 * PI, 2..80), k in 0.0..5.0f64) {
        let n = theta.len();
        let e = ParticleEnsemble { theta: theta.clone(), w: vec![0.0; n], nu: vec![0.0; n], t: 0.0, steps: 0 };
        let fast = pairwise_sync_force(&e, k);
        for i in 0..n {
            let brute: f64 = theta.iter().map(|t| (t - theta[i]).sin()).sum::<f64>() * k / n as f64;
            prop_assert!((brute - fast[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn noise_is_counter_based(seed in any::<u64>(), i in 0usize..1000, step in 0u64..1000) {
        let ns = NoiseStream::new(seed);
        let a = ns.increment(i, step, 0.01);
        let _ = ns.increment(i + 1, step, 0.01);
        prop_assert_eq!(a, ns.increment(i, step, 0.01));
        prop_assert_ne!(a, ns.increment(i, step + 1, 0.01));
    }

    #[test]
    fn power_law_slope(p in -3.0..3.0f64, c in 0.1..10.0f64) {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|x: &f64| c * x.powf(p)).collect();
        prop_assert!((loglog_slope(&h, &e).unwrap() - p).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hydro_step_conservative_and_positive(amp in prop::collection::vec(0.0..0.95f64, 3), shift in 0.0..PI, k in 0.0..3.0f64, cfl in 0.1..1.0f64) {
        let fq = FrequencyQuadrature::gaussian(0.2, 0.7, 3).unwrap();
        let mut s = HydroState::from_fn(PhaseGrid::new(48).unwrap(), fq.clone(), k, |nu, t| {
            let q = fq.nearest(nu);
            (1.0 + amp[q] * (t - shift * nu).cos()) / (2.0 * PI)
        }).unwrap();
        let m0 = s.mass_per_nu();
        for _ in 0..20 {
            let dt = cfl * s.phase.dtheta() / s.max_speed();
            step_fv(&mut s, dt, cfl).unwrap();
        }
        for (a, b) in m0.iter().zip(s.mass_per_nu()) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
        prop_assert!(s.p_nu.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn total_density_flux_telescopes(amp in 0.0..0.9f64, k in 0.0..3.0f64) {
        let fq = FrequencyQuadrature::gaussian(0.0, 1.0, 4).unwrap();
        let nt = 32;
        let s = HydroState::from_fn(PhaseGrid::new(nt).unwrap(), fq.clone(), k, |nu, t| (1.0 + amp * (t + nu).sin()) / (2.0 * PI)).unwrap();
        let c = coupling_fields(&s);
        let flux = llf_fluxes(&s);
        for i in 0..nt {
            let r = (i + 1) % nt;
            let total: f64 = (0..fq.len()).map(|q| fq.weights[q] * flux[q * nt + i]).sum();
            let central = 0.5 * (c.p[i] * (c.y[i] + k * c.p[i]) + c.p[r] * (c.y[r] + k * c.p[r]));
            let diffusion: f64 = (0..fq.len()).map(|q| {
                let a = c.v[q * nt + i].abs().max(c.v[q * nt + r].abs());
                0.5 * fq.weights[q] * a * (s.p_nu[q * nt + r] - s.p_nu[q * nt + i])
            }).sum();
            prop_assert!((total - (central - diffusion)).abs() <= 1e-12);
        }
    }

    #[test]
    fn kinetic_step_conserves_mass(k in 0.0..2.0f64, eps in 0.05..1.0f64) {
        let ph = PhaseGrid::new(16).unwrap();
        let fq = FrequencyQuadrature::gaussian(0.0, 0.5, 3).unwrap();
        let vg = VelocityGrid::new(-9.0, 9.0, 48).unwrap();
        let f = KineticField::from_fn(ph, vg, fq, |_, i, j| {
            let w = vg.node(j);
            (1.0 + 0.5 * ph.node(i as isize).cos()) * (-(w - 0.5).powi(2) / 2.0).exp()
        });
        let p = PhysicalParams::new(1.0, k, 1.0).unwrap();
        let mut s = KineticState::new(f, nondimensionalize(&p, eps).unwrap(), k).unwrap();
        let m0 = s.field.mass_per_nu();
        let cfg = KineticConfig::default();
        let dt = s.max_dt(cfg.cfl);
        for _ in 0..5 {
            kinetic::step(&mut s, dt, &cfg).unwrap();
        }
        for (a, b) in m0.iter().zip(s.field.mass_per_nu()) {
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
        prop_assert!(s.field.min_value() >= 0.0);
    }
}
