//! Generalized collision invariants: the weighted elliptic problem for χ_V,
//! pairing checks against Q_V, weighted seminorms and zero location.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::collision::collision_q;
use crate::model::duality::{over_weight, weighted_gradient};
use crate::model::{sample_gaussian, CollisionForm, KineticField, VelocityGrid};

/// Half width of the velocity window the GCI solver requires around V.
pub const GCI_MARGIN: f64 = 8.0;
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GciSolution {
    pub chi: Vec<f64>,
    #[serde(rename = "V")]
    pub v: f64,
    pub constraint_residual: f64,
    pub grid: VelocityGrid,
}

impl GciSolution {
    /// sup |χ − (w−V)| over nodes with |w − V| ≤ half_width.
    pub fn sup_error(&self, half_width: f64) -> f64 {
        (0..self.grid.n_w)
            .map(|j| (self.grid.node(j), self.chi[j]))
            .filter(|(w, _)| (w - self.v).abs() <= half_width + 1e-12)
            .fold(0.0, |m, (w, c)| m.max((c - (w - self.v)).abs()))
    }
}

/// Solves −∂_w(M_V ∂_w χ) = (w−V) M_V with zero-flux ends and Σ χ M_V Δw = 0.
///
/// The flux form F_{j+1/2} = M̄_{j+1/2}(χ_{j+1}−χ_j)/Δw with M̄ the geometric mean of
/// neighbouring weights is integrated outward from the node nearest V, then the
/// weighted mean is removed.
pub fn solve_gci(v: f64, grid: &VelocityGrid) -> Result<GciSolution> {
    grid.check_covers(v, v, GCI_MARGIN)?;
    let n = grid.n_w;
    let dw = grid.dw();
    let m = sample_gaussian(v, grid);
    let r: Vec<f64> = (0..n).map(|j| (grid.node(j) - v) * m[j] * dw).collect();
    let k = (0..n)
        .min_by(|a, b| (grid.node(*a) - v).abs().total_cmp(&(grid.node(*b) - v).abs()))
        .unwrap_or(0);
    let mut left = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..n {
        acc += r[j];
        left[j] = acc;
    }
    let mut right = vec![0.0; n + 1];
    for j in (0..n).rev() {
        right[j] = right[j + 1] + r[j];
    }
    let mut chi = vec![0.0; n];
    let incr = |j: usize| -> Result<f64> {
        let flux = if j < k { -left[j] } else { right[j + 1] };
        let mbar = (m[j] * m[j + 1]).sqrt();
        if mbar == 0.0 {
            return Err(Error::SingularSystem { row: j });
        }
        Ok(flux * dw / mbar)
    };
    for j in k..n - 1 {
        chi[j + 1] = chi[j] + incr(j)?;
    }
    for j in (0..k).rev() {
        chi[j] = chi[j + 1] - incr(j)?;
    }
    let msum: f64 = m.iter().sum();
    let mean = chi.iter().zip(&m).map(|(c, m)| c * m).sum::<f64>() / msum;
    chi.iter_mut().for_each(|c| *c -= mean);
    let constraint_residual = chi.iter().zip(&m).map(|(c, m)| c * m).sum::<f64>().abs() * dw;
    if constraint_residual > CONSTRAINT_TOL {
        return Err(Error::Constraint { residual: constraint_residual, tolerance: CONSTRAINT_TOL });
    }
    Ok(GciSolution { chi, v, constraint_residual, grid: *grid })
}

/// |Σ_q ω_q φ(ν_q) Σ_{i,j} Q_V(f)|_{q,i} Δθ Δw| with V laid out [q][i].
pub fn collision_invariant_check(phi: &[f64], f: &KineticField, v: &[f64], form: CollisionForm) -> Result<f64> {
    let (nq, nt) = (f.n_nu(), f.n_theta());
    if phi.len() != nq || v.len() != nq * nt {
        return Err(Error::GridMismatch("phi or V size".into()));
    }
    let mut total = 0.0;
    for q in 0..nq {
        let mut s = 0.0;
        for i in 0..nt {
            s += collision_q(form, f.column(q, i), v[q * nt + i], &f.velocity)?.iter().sum::<f64>();
        }
        total += f.freq.weights[q] * phi[q] * s;
    }
    Ok((total * f.velocity.dw() * f.phase.dtheta()).abs())
}

/// Per phase cell: ∬ (w−V) f g dw dν.
pub fn constraint_values(f: &KineticField, v: f64) -> Vec<f64> {
    let (nq, nt) = (f.n_nu(), f.n_theta());
    let x: Vec<f64> = f.velocity.nodes().iter().map(|w| w - v).collect();
    let dw = f.velocity.dw();
    (0..nt)
        .map(|i| {
            (0..nq)
                .map(|q| f.freq.weights[q] * f.column(q, i).iter().zip(&x).map(|(f, x)| f * x).sum::<f64>())
                .sum::<f64>()
                * dw
        })
        .collect()
}

/// Removes the (w−V)M_V component so that every phase cell satisfies the constraint.
pub fn project_constraint(f: &mut KineticField, v: f64) {
    let g = f.velocity;
    let m = sample_gaussian(v, &g);
    let x: Vec<f64> = g.nodes().iter().map(|w| w - v).collect();
    let norm: f64 = x.iter().zip(&m).map(|(x, m)| x * x * m).sum::<f64>() * g.dw();
    let c = constraint_values(f, v);
    for (i, ci) in c.iter().enumerate() {
        let lambda = ci / norm;
        for q in 0..f.n_nu() {
            for ((fv, x), m) in f.column_mut(q, i).iter_mut().zip(&x).zip(&m) {
                *fv -= lambda * x * m;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GciPairing {
    /// max over phase cells of |∬ Q_V(f)(βχ + φ(ν)) g dw dν|.
    pub pairing: f64,
    /// max over phase cells of |∬ (w−V) f g dw dν|.
    pub constraint: f64,
}

/// Pairing of Q_V(f) with ψ = βχ + φ(ν) without enforcing the constraint.
pub fn gci_pairing(beta: f64, phi: &[f64], chi: &GciSolution, f: &KineticField, form: CollisionForm) -> Result<GciPairing> {
    if chi.grid != f.velocity {
        return Err(Error::GridMismatch("χ and f use different velocity grids".into()));
    }
    if phi.len() != f.n_nu() {
        return Err(Error::GridMismatch("phi size".into()));
    }
    let dw = f.velocity.dw();
    let mut pairing = 0.0f64;
    for i in 0..f.n_theta() {
        let mut s = 0.0;
        for q in 0..f.n_nu() {
            let qf = collision_q(form, f.column(q, i), chi.v, &f.velocity)?;
            let inner: f64 = qf.iter().zip(&chi.chi).map(|(a, c)| a * (beta * c + phi[q])).sum();
            s += f.freq.weights[q] * inner * dw;
        }
        pairing = pairing.max(s.abs());
    }
    let constraint = constraint_values(f, chi.v).iter().fold(0.0f64, |m, c| m.max(c.abs()));
    Ok(GciPairing { pairing, constraint })
}

/// |∬ Q_V(f)(βχ_V + φ(ν)) g dw dν| for a constraint-satisfying test field.
pub fn verify_gci_invariance(beta: f64, phi: &[f64], v: f64, f_test: &KineticField, form: CollisionForm) -> Result<f64> {
    let chi = solve_gci(v, &f_test.velocity)?;
    let p = gci_pairing(beta, phi, &chi, f_test, form)?;
    if p.constraint > CONSTRAINT_TOL {
        return Err(Error::Constraint { residual: p.constraint, tolerance: CONSTRAINT_TOL });
    }
    Ok(p.pairing)
}

/// (|φ|²_{0,V}, |φ|²_{1,V}) = (Σ φ²/M_V Δw, Σ (∂_w(φ/M_V))² M_V Δw).
pub fn weighted_seminorms(phi: &[f64], v: f64, grid: &VelocityGrid) -> Result<(f64, f64)> {
    if phi.len() != grid.n_w {
        return Err(Error::GridMismatch("profile length".into()));
    }
    let dw = grid.dw();
    let g = weighted_gradient(phi, v, grid.w_min, dw);
    let (mut n0, mut n1) = (0.0, 0.0);
    for j in 0..grid.n_w {
        let x = grid.node(j) - v;
        n0 += over_weight(phi[j], phi[j], x)?;
        n1 += over_weight(g[j], g[j], x)?;
    }
    Ok((n0 * dw, n1 * dw))
}

/// Zero of the piecewise-linear interpolant closest to V; ties go to the larger root.
pub fn find_zero_d(phi: &[f64], v: f64, grid: &VelocityGrid) -> Result<f64> {
    if phi.len() != grid.n_w {
        return Err(Error::GridMismatch("profile length".into()));
    }
    let dw = grid.dw();
    let mean: f64 = phi.iter().sum::<f64>() * dw;
    let scale: f64 = phi.iter().map(|p| p.abs()).sum::<f64>() * dw;
    if scale == 0.0 {
        return Err(invalid("phi", "profile vanishes identically"));
    }
    if mean.abs() > 1e-6 * scale {
        return Err(Error::NoSignChange { mean });
    }
    let mut roots = Vec::new();
    for j in 0..grid.n_w - 1 {
        let (a, b) = (phi[j], phi[j + 1]);
        if a == 0.0 {
            roots.push(grid.node(j));
        } else if a * b < 0.0 {
            roots.push(grid.node(j) + dw * a / (a - b));
        }
    }
    if phi[grid.n_w - 1] == 0.0 {
        roots.push(grid.w_max);
    }
    let tie = 1e-9 * dw;
    roots
        .into_iter()
        .reduce(|best, r| {
            let (db, dr) = ((best - v).abs(), (r - v).abs());
            if dr < db - tie || ((dr - db).abs() <= tie && r > best) {
                r
            } else {
                best
            }
        })
        .ok_or(Error::NoSignChange { mean })
}
