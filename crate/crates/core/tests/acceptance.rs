//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use gauss_quad::GaussLegendre;
use kuramoto_core::gci::solve_gci;
use kuramoto_core::hardy::{asymptotic_tail, bl_product, bl_product_xform, muckenhoupt_bl};
use kuramoto_core::model::{gaussian_moments, VelocityGrid};
use kuramoto_core::particles::{pairwise_sync_force, sample_initial, InitialSpec};
use kuramoto_core::study::{
    collision_refinement, eps_sweep, gci_invariance_case, hardy_ratio_suite, hydro_refinement, particle_relaxation, EpsSweepSetup, W_LADDER,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn fit_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn gauss(w: f64, v: f64) -> f64 {
    (-0.5 * (w - v) * (w - v)).exp() / (2.0 * PI).sqrt()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Brute-force B_L: nested adaptive Simpson for both factors, dense r-scan, golden refinement.
/// Both integrands are scaled to be at most 1 and the exponential factors recombined.
fn bl_oracle(d: f64, v: f64) -> f64 {
    let product = |r: f64| {
        let x = r - v;
        let p = (d - v).abs().max(x.abs());
        let tail = simpson(&|s| (-x * s - 0.5 * s * s).exp(), 0.0, 40.0, 1e-13);
        let inner = simpson(&|w| (0.5 * ((w - v).powi(2) - p * p)).exp(), d, r, 1e-13 * (r - d));
        (0.5 * (p * p - x * x)).exp() * tail * inner
    };
    let mut best = (0.0, d);
    let mut r = d + 1e-3;
    while r <= d + 12.0 {
        let p = product(r);
        if p > best.0 {
            best = (p, r);
        }
        r += 1e-2;
    }
    let (mut a, mut b) = ((best.1 - 1e-2).max(d), best.1 + 1e-2);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-9 {
        let (c, e) = (b - g * (b - a), a + g * (b - a));
        if product(c) > product(e) {
            b = e;
        } else {
            a = c;
        }
    }
    product(0.5 * (a + b)).max(best.0)
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for v in [-2.0, 0.0, 0.5, 2.5, 7.0] {
        let g = VelocityGrid::new(v - 10.0, v + 10.0, 512).unwrap();
        let m = gaussian_moments(v, &g).unwrap();
        for e in [m.mass - 1.0, m.centered_first, m.flux - v, m.variance - 1.0] {
            worst = worst.max(e.abs());
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("max moment error {worst:.2e} (tol 1e-8)") }
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (v, seed) in [(0.3, 1), (-1.2, 2), (2.0, 3)] {
        let s = collision_refinement(v, &W_LADDER, seed).unwrap();
        let a = fit_slope(&s.discrepancy.h, &s.discrepancy.values);
        let b = fit_slope(&s.equilibrium_residual.h, &s.equilibrium_residual.values);
        pass &= (1.7..=2.3).contains(&a) && (1.7..=2.3).contains(&b);
        lines.push(format!("V={v}: discrepancy slope {a:.3}, equilibrium slope {b:.3}"));
    }
    Outcome { pass, detail: lines.join("; ") }
}

fn criterion_3() -> Outcome {
    let v = 0.4;
    let (mut h, mut err, mut cons) = (Vec::new(), Vec::new(), 0.0f64);
    for n in W_LADDER {
        let g = VelocityGrid::centered(v, 8.0, n).unwrap();
        let s = solve_gci(v, &g).unwrap();
        let mut e: f64 = 0.0;
        let mut c = 0.0;
        for j in 0..n {
            let w = g.node(j);
            if (w - v).abs() <= 4.0 + 1e-12 {
                e = e.max((s.chi[j] - (w - v)).abs());
            }
            c += s.chi[j] * gauss(w, v) * g.dw();
        }
        h.push(g.dw());
        err.push(e);
        cons = cons.max(c.abs());
    }
    let slope = fit_slope(&h, &err);
    let pass = err[2] <= 1e-3 && (1.7..=2.3).contains(&slope) && cons <= 1e-10;
    Outcome {
        pass,
        detail: format!(
            "interior (|w-V|<=4) sup error at n_w=256 {:.3e}, slope {slope:.3}, constraint residual {cons:.1e}",
            err[2]
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let (mut worst256, mut worst_floor, mut direct_slopes) = (0.0f64, 0.0f64, Vec::new());
    let h: Vec<f64> = W_LADDER.iter().map(|n| 16.0 / (*n - 1) as f64).collect();
    for seed in 0..10 {
        let c = gci_invariance_case(0.4, &W_LADDER, 8, seed).unwrap();
        pass &= c.constraint.iter().all(|x| x.abs() <= 1e-10);
        pass &= c.pairing[2].abs() <= 1e-4;
        for k in 0..c.pairing.len() - 1 {
            let (a, b) = (c.pairing[k].abs(), c.pairing[k + 1].abs());
            pass &= b < a || b <= c.rounding_floor[k + 1];
        }
        worst256 = worst256.max(c.pairing[2].abs());
        worst_floor = worst_floor.max(c.pairing.iter().zip(&c.rounding_floor).fold(0.0f64, |m, (p, f)| m.max(p.abs() / f)));
        let d: Vec<f64> = c.pairing_direct.iter().map(|x| x.abs()).collect();
        direct_slopes.push(fit_slope(&h, &d));
    }
    let (lo, hi) = direct_slopes.iter().fold((f64::MAX, f64::MIN), |(a, b), s| (a.min(*s), b.max(*s)));
    Outcome {
        pass,
        detail: format!(
            "10 fields: max |pairing| at n_w=256 {worst256:.2e} (tol 1e-4); pairing/rounding-floor <= {worst_floor:.2e} at every level; \
             direct-form pairing slopes in [{lo:.2}, {hi:.2}]"
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst_rel: f64 = 0.0;
    for (d, v) in [(0.0, 0.0), (0.5, 0.0), (-0.7, 0.2), (1.0, -0.5)] {
        let r = muckenhoupt_bl(d, v).unwrap();
        let o = bl_oracle(d, v);
        worst_rel = worst_rel.max((r.b_l - o).abs() / o);
    }
    pass &= worst_rel <= 1e-6;
    let b00 = muckenhoupt_bl(0.0, 0.0).unwrap().b_l;
    parts.push(format!("B_L vs oracle rel {worst_rel:.1e}, B_L(0,0)={b00:.7}"));

    let (mut worst_x, mut w_ratio): (f64, f64) = (0.0, 0.0);
    for v in [0.0, 0.7] {
        for k in 0..=24 {
            let rv = 6.0 + 0.25 * k as f64;
            let a = rv / 2f64.sqrt();
            let target = 1.0 / (4.0 * a * a);
            worst_x = worst_x.max((bl_product_xform(v, v, v + rv) / target - 1.0).abs());
            w_ratio = w_ratio.max(bl_product(v, v, v + rv).0 / target);
        }
    }
    pass &= worst_x <= 0.05;
    parts.push(format!(
        "substituted-integral product vs 1/(4a^2) rel {worst_x:.3} for r-V in [6,12]; w-form product/(1/(4a^2)) up to {w_ratio:.3}"
    ));

    let (mut worst_full, mut worst_side): (f64, f64) = (0.0, 0.0);
    let mut empty = 0;
    for c in hardy_ratio_suite(0.3, 20, 2024, 3201).unwrap() {
        if !c.report.bracket_nonempty {
            empty += 1;
        }
        worst_full = worst_full.max(c.ratio.full / (c.report.bracket_hi * 1.05));
        worst_side = worst_side
            .max(c.ratio.right / (4.0 * c.report.b_l * 1.05))
            .max(c.ratio.left / (4.0 * c.report.b_tilde_l * 1.05));
    }
    pass &= worst_full <= 1.0 && worst_side <= 1.0;
    parts.push(format!(
        "20 anchored u: max ratio/(1.05 bracket_hi) {worst_full:.3}, max side ratio/(1.05*4B) {worst_side:.3}, empty brackets {empty}"
    ));
    Outcome { pass, detail: parts.join("; ") }
}

/// e^{a²}∫_a^∞ e^{−x²} = ∫_0^∞ e^{−2as−s²} ds by composite Gauss–Legendre, with a two-rule error estimate.
fn scaled_tail_oracle(a: f64) -> (f64, f64) {
    let upper = -a + (a * a + 745.0).sqrt();
    let panels = 64;
    let width = upper / panels as f64;
    let rule = |n: usize| {
        let q = GaussLegendre::new(n).unwrap();
        let mut sum = 0.0;
        let mut comp = 0.0;
        for p in 0..panels {
            let (lo, hi) = (p as f64 * width, (p + 1) as f64 * width);
            let x = q.integrate(lo, hi, |s| (-2.0 * a * s - s * s).exp()) - comp;
            let t = sum + x;
            comp = (t - sum) - x;
            sum = t;
        }
        sum
    };
    let (fine, coarse) = (rule(40), rule(30));
    (fine, (fine - coarse).abs() + 4.0 * f64::EPSILON * fine)
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for k in 0..20 {
        let a = 1.5 + 4.5 * k as f64 / 19.0;
        let s = asymptotic_tail(a, usize::MAX).unwrap();
        let (q, qe) = scaled_tail_oracle(a);
        let e = (-a * a).exp();
        let diff = (s.value - q * e).abs();
        let allowed = s.truncation_bound + qe * e;
        pass &= diff <= allowed;
        worst = worst.max(diff / allowed);
    }
    Outcome { pass, detail: format!("20 values of a in [1.5, 6]: max |series - quadrature| / bound = {worst:.3}") }
}

fn criterion_7() -> Outcome {
    let s = hydro_refinement(&[64, 128, 256, 512], 0.5, 0.5).unwrap();
    let slope = fit_slope(&s.advection_l1.h, &s.advection_l1.values);
    let r = &s.momentum_residual.values;
    let decreasing = r.windows(2).all(|p| p[1] < p[0]);
    let pass = (0.8..=1.2).contains(&slope)
        && s.max_mass_drift_per_step <= 1e-13
        && s.uniform_deviation <= 1e-13
        && decreasing;
    Outcome {
        pass,
        detail: format!(
            "advection L1 slope {slope:.3}; mass drift/step {:.1e}; uniform deviation {:.1e}; \
             momentum residual (K=0, nu=+-sqrt2) {:?} slope {:.2}; coupled K=1 residual {:?}",
            s.max_mass_drift_per_step,
            s.uniform_deviation,
            r.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>(),
            fit_slope(&s.momentum_residual.h, r),
            s.coupled_momentum_sup.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
        ),
    }
}

fn criterion_8() -> Outcome {
    let setup = EpsSweepSetup::default();
    let r = eps_sweep(&setup).unwrap();
    let slope = fit_slope(&r.epsilons, &r.errors);
    Outcome {
        pass: (0.7..=1.3).contains(&slope),
        detail: format!(
            "errors {:?} over eps {:?}: slope {slope:.3}; max mass drift {:.1e}",
            r.errors.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            r.epsilons,
            r.mass_drift.iter().cloned().fold(0.0, f64::max)
        ),
    }
}

fn criterion_9() -> Outcome {
    let spec = InitialSpec::new("uniform-phase", "gaussian-w(0,1)", "normal(0,1)").unwrap();
    let e = sample_initial(&spec, 50, 11).unwrap();
    let k = 1.7;
    let fast = pairwise_sync_force(&e, k);
    let mut force_err: f64 = 0.0;
    for i in 0..50 {
        let brute: f64 = (0..50).map(|j| (e.theta[j] - e.theta[i]).sin()).sum::<f64>() * k / 50.0;
        force_err = force_err.max((brute - fast[i]).abs());
    }
    let nu = 0.5;
    let s = particle_relaxation(100_000, nu, 10.0, 0.01, 42, 0).unwrap();
    let dw = s.grid.dw();
    let mut l1 = 0.0;
    let mut inside = 0.0;
    for (j, h) in s.marginal.iter().enumerate() {
        let w = s.grid.node(j);
        let mass = simpson(&|x| gauss(x, nu), w - 0.5 * dw, w + 0.5 * dw, 1e-14);
        inside += mass;
        l1 += (h * dw - mass).abs();
    }
    // probability outside the histogram window
    l1 += 1.0 - inside;
    let pass = force_err <= 1e-12 && l1 <= 0.03;
    Outcome { pass, detail: format!("force reduction vs O(N^2) {force_err:.1e}; w-marginal L1 vs M_V {l1:.4} (N=1e5, t=10)") }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("Gaussian moments", Duration::from_secs(1), criterion_1),
        ("collision equivalence and equilibrium", Duration::from_secs(10), criterion_2),
        ("GCI reference solution", Duration::from_secs(5), criterion_3),
        ("GCI invariance", Duration::from_secs(30), criterion_4),
        ("Hardy/Muckenhoupt", Duration::from_secs(30), criterion_5),
        ("asymptotic series", Duration::from_secs(1), criterion_6),
        ("hydrodynamic solver", Duration::from_secs(30), criterion_7),
        ("multiscale limit", Duration::from_secs(600), criterion_8),
        ("particle/kinetic consistency", Duration::from_secs(120), criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let el = t.elapsed();
        let ok = o.pass && el <= *budget;
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.2}s, budget {}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            el.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", 9 - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
