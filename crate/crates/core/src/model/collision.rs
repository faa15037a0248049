use serde::{Deserialize, Serialize};

use super::grid::VelocityGrid;
use crate::error::{Error, Result};
use crate::tridiag;

/// Discretization of Q(f) = ∂_w((w−V)f) + ∂²_w f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionForm {
    /// Central differences on (w−V)f + ∂_w f.
    Direct,
    /// M_V ∂_w(f/M_V) with the weight ratio taken in log form.
    #[default]
    Factored,
}

/// Interface coefficients such that F_{j+1/2} = plus[j]·f_{j+1} − minus[j]·f_j.
/// Both end fluxes are zero.
pub fn interface_coeffs(form: CollisionForm, v: f64, grid: &VelocityGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let dw = grid.dw();
    let n = grid.n_w;
    let mut plus = Vec::with_capacity(n - 1);
    let mut minus = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let x = grid.w_min + (j as f64 + 0.5) * dw - v;
        match form {
            CollisionForm::Direct => {
                plus.push(1.0 / dw + 0.5 * x);
                minus.push(1.0 / dw - 0.5 * x);
            }
            CollisionForm::Factored => {
                let e = 0.5 * x * dw;
                if e.abs() > 700.0 {
                    return Err(Error::WeightOverflow(x.abs()));
                }
                plus.push(e.exp() / dw);
                minus.push((-e).exp() / dw);
            }
        }
    }
    Ok((plus, minus))
}

fn apply_coeffs(f: &[f64], plus: &[f64], minus: &[f64], dw: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for j in 0..n - 1 {
        let flux = plus[j] * f[j + 1] - minus[j] * f[j];
        out[j] += flux / dw;
        out[j + 1] -= flux / dw;
    }
    out
}

/// Q(f) in divergence form with central fluxes and zero-flux ends.
pub fn collision_q_direct(f: &[f64], v: f64, grid: &VelocityGrid) -> Vec<f64> {
    assert_eq!(f.len(), grid.n_w);
    let (p, m) = interface_coeffs(CollisionForm::Direct, v, grid).expect("direct form cannot overflow");
    apply_coeffs(f, &p, &m, grid.dw())
}

/// ∂_w(M_V ∂_w(f/M_V)) with interface weight sqrt(M_j M_{j+1}).
pub fn collision_q_factored(f: &[f64], v: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
    assert_eq!(f.len(), grid.n_w);
    let (p, m) = interface_coeffs(CollisionForm::Factored, v, grid)?;
    Ok(apply_coeffs(f, &p, &m, grid.dw()))
}

pub fn collision_q(form: CollisionForm, f: &[f64], v: f64, grid: &VelocityGrid) -> Result<Vec<f64>> {
    match form {
        CollisionForm::Direct => Ok(collision_q_direct(f, v, grid)),
        CollisionForm::Factored => collision_q_factored(f, v, grid),
    }
}

/// Reusable buffers for the implicit collision solve on one column.
#[derive(Debug, Clone, Default)]
pub struct ImplicitWorkspace {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    scratch: Vec<f64>,
}

/// Replaces `f` by the solution u of (I − λ Q_V) u = f.
pub fn implicit_relax(
    form: CollisionForm,
    f: &mut [f64],
    v: f64,
    grid: &VelocityGrid,
    lambda: f64,
    ws: &mut ImplicitWorkspace,
) -> Result<()> {
    let n = grid.n_w;
    let (plus, minus) = interface_coeffs(form, v, grid)?;
    let s = lambda / grid.dw();
    ws.a.clear();
    ws.a.resize(n, 0.0);
    ws.b.clear();
    ws.b.resize(n, 1.0);
    ws.c.clear();
    ws.c.resize(n, 0.0);
    ws.scratch.resize(n, 0.0);
    for j in 0..n - 1 {
        ws.b[j] += s * minus[j];
        ws.c[j] -= s * plus[j];
        ws.b[j + 1] += s * plus[j];
        ws.a[j + 1] -= s * minus[j];
    }
    tridiag::solve(&ws.a, &ws.b, &ws.c, f, &mut ws.scratch)
}
