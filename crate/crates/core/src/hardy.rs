//! Muckenhoupt quantities and Hardy ratios for the Gaussian weight M_V.

use std::f64::consts::PI;

use quadrature::clenshaw_curtis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_gaussian, VelocityGrid};

/// Length of the r-window searched beyond the anchor.
pub const SCAN_WIDTH: f64 = 12.0;
const SCAN_POINTS: usize = 480;
/// Above this value of a the erfc tail uses the optimally truncated series.
pub const SERIES_SWITCH: f64 = 6.0;

/// Clenshaw–Curtis with recursive bisection until each piece meets its share of `tol`.
/// Returns (integral, error estimate).
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
        let o = clenshaw_curtis::integrate(f, a, b, tol);
        if o.error_estimate <= tol || depth == 0 {
            return (o.integral, o.error_estimate);
        }
        let m = 0.5 * (a + b);
        let (l, el) = rec(f, a, m, 0.5 * tol, depth - 1);
        let (r, er) = rec(f, m, b, 0.5 * tol, depth - 1);
        (l + r, el + er)
    }
    rec(f, a, b, tol, 30)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub value: f64,
    pub truncation_bound: f64,
    pub terms: usize,
}

/// e^{−a²} Σ_k (−1)^k (2k−1)!! / (2^{k+1} a^{2k+1}), stopped at `n_terms` or before the first
/// term that grows. The bound is the first omitted term plus a rounding allowance.
pub fn asymptotic_tail(a: f64, n_terms: usize) -> Result<TailEstimate> {
    let s = scaled_series(a, n_terms)?;
    let e = (-a * a).exp();
    Ok(TailEstimate { value: s.value * e, truncation_bound: s.truncation_bound * e, terms: s.terms })
}

/// The series without the e^{−a²} factor.
fn scaled_series(a: f64, n_terms: usize) -> Result<TailEstimate> {
    if !(a > 0.0) || a * a <= 0.5 {
        return Err(Error::AsymptoticDomain(a));
    }
    let r = 1.0 / (2.0 * a * a);
    let mut term = 1.0 / (2.0 * a);
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut k = 0usize;
    loop {
        sum += term;
        abs_sum += term.abs();
        k += 1;
        let next = -term * (2 * k - 1) as f64 * r;
        if k >= n_terms.max(1) || next.abs() >= term.abs() {
            let rounding = 4.0 * f64::EPSILON * abs_sum;
            return Ok(TailEstimate { value: sum, truncation_bound: next.abs() + rounding, terms: k });
        }
        term = next;
    }
}

/// e^{a²} ∫_a^∞ e^{−x²} dx for a ≥ 0, with an error estimate.
pub fn scaled_erfc_tail(a: f64) -> (f64, f64) {
    if a >= SERIES_SWITCH {
        let s = scaled_series(a, usize::MAX).expect("a is large");
        return (s.value, s.truncation_bound);
    }
    let upper = -a + (a * a + 745.0).sqrt();
    integrate(&|s: f64| (-2.0 * a * s - s * s).exp(), 0.0, upper, 1e-17)
}

/// ∫_a^∞ e^{−x²} dx by quadrature, any real a.
pub fn erfc_tail_quadrature(a: f64) -> (f64, f64) {
    if a >= 0.0 {
        let (s, e) = scaled_erfc_tail(a);
        let f = (-a * a).exp();
        (s * f, e * f)
    } else {
        let (s, e) = scaled_erfc_tail(-a);
        let f = (-a * a).exp();
        (PI.sqrt() - s * f, e * f)
    }
}

/// ln of ∫_r^∞ M_V, with error estimate relative to the value.
fn ln_upper_mass(u: f64) -> (f64, f64) {
    let x = u / std::f64::consts::SQRT_2;
    if x >= 0.0 {
        let (s, e) = scaled_erfc_tail(x);
        (-x * x + (s / PI.sqrt()).ln(), e / s)
    } else {
        let (t, e) = erfc_tail_quadrature(x);
        let m = t / PI.sqrt();
        (m.ln(), e / t)
    }
}

/// ln of ∫_{lo}^{hi} 1/M_0(u) du for lo < hi, with relative error estimate.
fn ln_inverse_mass(lo: f64, hi: f64) -> (f64, f64) {
    let peak = lo.abs().max(hi.abs());
    let h2 = 0.5 * peak * peak;
    let (i, e) = integrate(&|u: f64| (0.5 * u * u - h2).exp(), lo, hi, 1e-16 * (hi - lo).min(1.0 / peak.max(1.0)));
    let val = (2.0 * PI).sqrt() * i;
    (h2 + val.ln(), e / i)
}

/// (∫_r^∞ M_V)(∫_d^r 1/M_V) for r > d, with relative error estimate.
pub fn bl_product(d: f64, v: f64, r: f64) -> (f64, f64) {
    if r <= d {
        return (0.0, 0.0);
    }
    let (a, ea) = ln_upper_mass(r - v);
    let (b, eb) = ln_inverse_mass(d - v, r - v);
    ((a + b).exp(), ea + eb)
}

/// Product of the substituted integrals (∫_a^∞ e^{−x²})(∫_b^a e^{x²}) with a = (r−V)/√2, b = (d−V)/√2.
pub fn bl_product_xform(d: f64, v: f64, r: f64) -> f64 {
    // the w-form product carries the Jacobian factor √2/√(2π) · √(2π)√2 = 2
    0.5 * bl_product(d, v, r).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    pub r_star: f64,
    pub error_estimate: f64,
}

/// sup_{d<r≤d+12} of the product: log-spaced scan then golden-section refinement.
pub fn bl_sup(d: f64, v: f64) -> SupResult {
    let offsets: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| 1e-4 * (SCAN_WIDTH / 1e-4).powf(k as f64 / (SCAN_POINTS - 1) as f64))
        .collect();
    let vals: Vec<(f64, f64)> = offsets.par_iter().map(|o| bl_product(d, v, d + o)).collect();
    let k = (0..SCAN_POINTS).max_by(|a, b| vals[*a].0.total_cmp(&vals[*b].0)).unwrap_or(0);
    let lo = if k == 0 { 0.0 } else { offsets[k - 1] };
    let hi = offsets[(k + 1).min(SCAN_POINTS - 1)];
    let f = |o: f64| bl_product(d, v, d + o).0;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > 1e-10 * (1.0 + b.abs()) {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e);
        }
    }
    let o = 0.5 * (a + b);
    let (val, err) = bl_product(d, v, d + o);
    let (best, r_star, err) = if val >= vals[k].0 { (val, d + o, err) } else { (vals[k].0, d + offsets[k], vals[k].1) };
    SupResult { value: best, r_star, error_estimate: err * best }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub d: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "B_L")]
    pub b_l: f64,
    #[serde(rename = "B_tilde_L")]
    pub b_tilde_l: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub bracket_nonempty: bool,
    pub r_star: f64,
    pub r_star_tilde: f64,
    pub quad_error_b_l: f64,
    pub quad_error_b_tilde_l: f64,
}

/// B_L on [d, ∞) and the reflected quantity on (−∞, d].
pub fn muckenhoupt_bl(d: f64, v: f64) -> Result<HardyReport> {
    if !d.is_finite() || !v.is_finite() {
        return Err(Error::InvalidParameter { name: "d", reason: "must be finite".into() });
    }
    let (right, left) = rayon::join(|| bl_sup(d, v), || bl_sup(2.0 * v - d, v));
    for s in [&right, &left] {
        if !(s.value > 0.0 && s.value.is_finite()) || s.error_estimate > 1e-8 * s.value {
            return Err(Error::Quadrature { estimate: s.error_estimate, target: 1e-8 * s.value });
        }
    }
    let lo = right.value.max(left.value);
    let hi = 4.0 * right.value.min(left.value);
    Ok(HardyReport {
        d,
        v,
        b_l: right.value,
        b_tilde_l: left.value,
        bracket_lo: lo,
        bracket_hi: hi,
        bracket_nonempty: lo <= hi,
        r_star: right.r_star,
        r_star_tilde: 2.0 * v - left.r_star,
        quad_error_b_l: right.error_estimate,
        quad_error_b_tilde_l: left.error_estimate,
    })
}

fn interp(u: &[f64], grid: &VelocityGrid, x: f64) -> f64 {
    let t = ((x - grid.w_min) / grid.dw()).clamp(0.0, (grid.n_w - 1) as f64);
    let j = (t.floor() as usize).min(grid.n_w - 2);
    let s = t - j as f64;
    (1.0 - s) * u[j] + s * u[j + 1]
}

fn centered_derivative(u: &[f64], dw: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|j| match j {
            0 => (u[1] - u[0]) / dw,
            _ if j == n - 1 => (u[n - 1] - u[n - 2]) / dw,
            _ => (u[j + 1] - u[j - 1]) / (2.0 * dw),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyRatio {
    pub full: f64,
    /// Sums restricted to w ≥ d.
    pub right: f64,
    /// Sums restricted to w ≤ d.
    pub left: f64,
}

/// (Σ u² M_V Δw)/(Σ (u')² M_V Δw) on the full line and on each side of the anchor.
pub fn hardy_ratio_split(u: &[f64], v: f64, d: f64, grid: &VelocityGrid) -> Result<HardyRatio> {
    if u.len() != grid.n_w {
        return Err(Error::GridMismatch("profile length".into()));
    }
    let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ud = interp(u, grid, d);
    if ud.abs() > 1e-3 * umax.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter { name: "u", reason: format!("u(d) = {ud:.3e} is not anchored") });
    }
    let m = sample_gaussian(v, grid);
    let du = centered_derivative(u, grid.dw());
    let (mut num, mut den) = ([0.0; 3], [0.0; 3]);
    for j in 0..grid.n_w {
        let w = grid.node(j);
        let a = u[j] * u[j] * m[j];
        let b = du[j] * du[j] * m[j];
        num[0] += a;
        den[0] += b;
        if w >= d {
            num[1] += a;
            den[1] += b;
        }
        if w <= d {
            num[2] += a;
            den[2] += b;
        }
    }
    let r = |k: usize| if den[k] == 0.0 { 0.0 } else { num[k] / den[k] };
    Ok(HardyRatio { full: r(0), right: r(1), left: r(2) })
}

pub fn hardy_ratio(u: &[f64], v: f64, d: f64, grid: &VelocityGrid) -> Result<f64> {
    Ok(hardy_ratio_split(u, v, d, grid)?.full)
}
