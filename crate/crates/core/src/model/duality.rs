use serde::{Deserialize, Serialize};

use super::collision::collision_q_direct;
use super::field::KineticField;
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub pair0: f64,
    pub pair1: f64,
    pub residual: f64,
}

/// a·b / M_V(w) evaluated through logarithms so that neither factor overflows.
pub(crate) fn over_weight(a: f64, b: f64, x: f64) -> Result<f64> {
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let l = a.abs().ln() + b.abs().ln() + 0.5 * x * x + LN_SQRT_2PI;
    if l > 709.0 {
        return Err(Error::WeightOverflow(x.abs()));
    }
    Ok(a.signum() * b.signum() * l.exp())
}

/// Node values of M_V ∂_w(f/M_V) = ∂_w f + (w−V) f, with central differences inside.
pub(crate) fn weighted_gradient(f: &[f64], v: f64, w_min: f64, dw: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| {
            let d = if j == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dw)
            } else if j == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dw)
            } else {
                (f[j + 1] - f[j - 1]) / (2.0 * dw)
            };
            d + (w_min + j as f64 * dw - v) * f[j]
        })
        .collect()
}

/// Duality products ⟨f,h⟩_{0,V}, ⟨f,h⟩_{1,V} and the Green residual |⟨Q_V f, h⟩_0 + ⟨f, h⟩_1|.
/// `v` holds V per (q, i).
pub fn duality_green_check(f: &KineticField, h: &KineticField, v: &[f64]) -> Result<DualityCheck> {
    f.same_grids(h)?;
    let (nq, nt) = (f.n_nu(), f.n_theta());
    if v.len() != nq * nt {
        return Err(Error::GridMismatch("V field size".into()));
    }
    let g = &f.velocity;
    let (dw, dth) = (g.dw(), f.phase.dtheta());
    let (mut p0, mut p1, mut qh) = (0.0, 0.0, 0.0);
    for q in 0..nq {
        let om = f.freq.weights[q];
        for i in 0..nt {
            let vq = v[q * nt + i];
            let (fc, hc) = (f.column(q, i), h.column(q, i));
            let qf = collision_q_direct(fc, vq, g);
            let gf = weighted_gradient(fc, vq, g.w_min, dw);
            let gh = weighted_gradient(hc, vq, g.w_min, dw);
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for j in 0..g.n_w {
                let x = g.node(j) - vq;
                s0 += over_weight(fc[j], hc[j], x)?;
                s1 += over_weight(gf[j], gh[j], x)?;
                s2 += over_weight(qf[j], hc[j], x)?;
            }
            let c = om * dw * dth;
            p0 += c * s0;
            p1 += c * s1;
            qh += c * s2;
        }
    }
    Ok(DualityCheck { pair0: p0, pair1: p1, residual: (qh + p1).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::equilibrium::{equilibrium_build, EquilibriumProfile};
    use crate::model::grid::{FrequencyQuadrature, PhaseGrid, VelocityGrid};

    #[test]
    fn equilibrium_has_zero_energy() {
        let ph = PhaseGrid::new(4).unwrap();
        let fq = FrequencyQuadrature::gaussian(0.0, 1.0, 3).unwrap();
        let prof = EquilibriumProfile::from_fn(&ph, &fq, 1.0, |nu, t| 1.0 + 0.3 * (t + nu).sin()).unwrap();
        let (lo, hi) = prof.v_range();
        let vg = VelocityGrid::covering(lo, hi, 9.0, 400).unwrap();
        let f = equilibrium_build(&prof, &ph, &vg, &fq).unwrap();
        let d = duality_green_check(&f, &f, &prof.v).unwrap();
        assert!(d.pair1.abs() < 1e-3, "{d:?}");
        assert!(d.pair0 > 0.0);
    }

    #[test]
    fn zero_field() {
        let ph = PhaseGrid::new(4).unwrap();
        let fq = FrequencyQuadrature::point(0.0);
        let vg = VelocityGrid::centered(0.0, 8.0, 33).unwrap();
        let z = KineticField::zeros(ph, vg, fq);
        let d = duality_green_check(&z, &z, &[0.0; 4]).unwrap();
        assert_eq!((d.pair0, d.pair1, d.residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn log_weight_does_not_overflow_on_tiny_values() {
        let r = over_weight(1e-200, 1e-200, 30.0).unwrap();
        assert!(r.is_finite() && r > 0.0);
        assert!(over_weight(1.0, 1.0, 40.0).is_err());
    }
}
