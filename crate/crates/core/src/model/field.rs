use serde::{Deserialize, Serialize};

use super::grid::{FrequencyQuadrature, PhaseGrid, VelocityGrid};
use crate::error::{Error, Result};

/// Density f(ν_q, θ_i, w_j) stored row-major with w fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticField {
    pub phase: PhaseGrid,
    pub velocity: VelocityGrid,
    pub freq: FrequencyQuadrature,
    pub data: Vec<f64>,
}

impl KineticField {
    pub fn zeros(phase: PhaseGrid, velocity: VelocityGrid, freq: FrequencyQuadrature) -> Self {
        let n = freq.len() * phase.n_theta * velocity.n_w;
        Self { phase, velocity, freq, data: vec![0.0; n] }
    }

    pub fn from_fn(
        phase: PhaseGrid,
        velocity: VelocityGrid,
        freq: FrequencyQuadrature,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut out = Self::zeros(phase, velocity, freq);
        let (nt, nw) = (out.n_theta(), out.n_w());
        for (k, v) in out.data.iter_mut().enumerate() {
            *v = f(k / (nt * nw), (k / nw) % nt, k % nw);
        }
        out
    }

    pub fn n_nu(&self) -> usize {
        self.freq.len()
    }

    pub fn n_theta(&self) -> usize {
        self.phase.n_theta
    }

    pub fn n_w(&self) -> usize {
        self.velocity.n_w
    }

    #[inline]
    pub fn idx(&self, q: usize, i: usize, j: usize) -> usize {
        (q * self.phase.n_theta + i) * self.velocity.n_w + j
    }

    pub fn get(&self, q: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(q, i, j)]
    }

    /// The w-profile at (ν_q, θ_i).
    pub fn column(&self, q: usize, i: usize) -> &[f64] {
        let s = self.idx(q, i, 0);
        &self.data[s..s + self.velocity.n_w]
    }

    pub fn column_mut(&mut self, q: usize, i: usize) -> &mut [f64] {
        let s = self.idx(q, i, 0);
        let n = self.velocity.n_w;
        &mut self.data[s..s + n]
    }

    pub fn same_grids(&self, other: &Self) -> Result<()> {
        if self.phase != other.phase || self.velocity != other.velocity || self.freq != other.freq {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Σ_j f Δw for every (q, i), laid out as [q][i].
    pub fn density(&self) -> Vec<f64> {
        let dw = self.velocity.dw();
        self.data
            .chunks(self.velocity.n_w)
            .map(|c| c.iter().sum::<f64>() * dw)
            .collect()
    }

    /// ∬ f dθ dw for each ν-slice.
    pub fn mass_per_nu(&self) -> Vec<f64> {
        let dth = self.phase.dtheta();
        self.density()
            .chunks(self.phase.n_theta)
            .map(|c| c.iter().sum::<f64>() * dth)
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> (PhaseGrid, VelocityGrid, FrequencyQuadrature) {
        (
            PhaseGrid::new(4).unwrap(),
            VelocityGrid::new(-1.0, 1.0, 5).unwrap(),
            FrequencyQuadrature::new(vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn layout_round_trip() {
        let (p, v, q) = grids();
        let f = KineticField::from_fn(p, v, q, |q, i, j| (100 * q + 10 * i + j) as f64);
        assert_eq!(f.get(1, 2, 3), 123.0);
        assert_eq!(f.column(1, 3), &[130.0, 131.0, 132.0, 133.0, 134.0]);
    }

    #[test]
    fn mass_of_constant() {
        let (p, v, q) = grids();
        let f = KineticField::from_fn(p, v, q, |_, _, _| 1.0);
        for m in f.mass_per_nu() {
            assert!((m - 5.0 * 0.5 * 2.0 * std::f64::consts::PI).abs() < 1e-12);
        }
    }
}
