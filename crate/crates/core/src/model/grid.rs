use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform cell-centred grid on the torus [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub n_theta: usize,
}

impl PhaseGrid {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta == 0 {
            return Err(invalid("n_theta", "need at least one cell"));
        }
        Ok(Self { n_theta })
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    /// Cell centre, periodic in `i`.
    pub fn node(&self, i: isize) -> f64 {
        let n = self.n_theta as isize;
        (i.rem_euclid(n) as f64 + 0.5) * self.dtheta()
    }

    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n_theta as isize) as usize
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_theta as isize).map(|i| self.node(i)).collect()
    }
}

/// Uniform node grid on a truncated velocity interval, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub w_min: f64,
    pub w_max: f64,
    pub n_w: usize,
}

impl VelocityGrid {
    pub fn new(w_min: f64, w_max: f64, n_w: usize) -> Result<Self> {
        if n_w < 3 {
            return Err(invalid("n_w", "need at least 3 nodes"));
        }
        if !(w_max > w_min) || !w_min.is_finite() || !w_max.is_finite() {
            return Err(invalid("w_max", format!("empty interval [{w_min}, {w_max}]")));
        }
        Ok(Self { w_min, w_max, n_w })
    }

    /// Grid on [v_lo - margin, v_hi + margin].
    pub fn covering(v_lo: f64, v_hi: f64, margin: f64, n_w: usize) -> Result<Self> {
        Self::new(v_lo - margin, v_hi + margin, n_w)
    }

    pub fn centered(v: f64, half_width: f64, n_w: usize) -> Result<Self> {
        Self::new(v - half_width, v + half_width, n_w)
    }

    pub fn dw(&self) -> f64 {
        (self.w_max - self.w_min) / (self.n_w - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.w_min + j as f64 * self.dw()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_w).map(|j| self.node(j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.w_min.abs().max(self.w_max.abs())
    }

    /// Checks that `[v_lo - margin, v_hi + margin]` lies inside the grid.
    pub fn check_covers(&self, v_lo: f64, v_hi: f64, margin: f64) -> Result<()> {
        if self.w_min > v_lo - margin || self.w_max < v_hi + margin {
            return Err(Error::GridMismatch(format!(
                "velocity grid [{:.3}, {:.3}] does not cover [{:.3}, {:.3}]",
                self.w_min,
                self.w_max,
                v_lo - margin,
                v_hi + margin
            )));
        }
        Ok(())
    }
}

/// Nodes and probability weights for integrals against g(ν).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyQuadrature {
    /// Weights are renormalized to sum to one.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(invalid("weights", "need matching nonempty node and weight arrays"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || nodes.iter().any(|v| !v.is_finite()) {
            return Err(invalid("weights", "weights must be nonnegative and nodes finite"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weights", "weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { nodes, weights })
    }

    pub fn point(nu: f64) -> Self {
        Self { nodes: vec![nu], weights: vec![1.0] }
    }

    /// Gauss–Hermite rule for g = N(mean, std²). Nodes sorted and made exactly symmetric.
    pub fn gaussian(mean: f64, std: f64, n: usize) -> Result<Self> {
        if !(std >= 0.0) {
            return Err(invalid("std", "must be nonnegative"));
        }
        if n == 1 || std == 0.0 {
            return Ok(Self::point(mean));
        }
        let rule = gauss_quad::GaussHermite::new(n).map_err(|e| invalid("n_nu", e.to_string()))?;
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        for k in 0..n / 2 {
            let (a, b) = (k, n - 1 - k);
            let xs = 0.5 * (x[b] - x[a]);
            let ws = 0.5 * (w[a] + w[b]);
            x[a] = -xs;
            x[b] = xs;
            w[a] = ws;
            w[b] = ws;
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let nodes = x.iter().map(|x| mean + std * 2f64.sqrt() * x).collect();
        Self::new(nodes, w)
    }

    /// Midpoint rule for a density `g` supported on [a, b].
    pub fn midpoint(a: f64, b: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(invalid("n_nu", "need n ≥ 1 and a < b"));
        }
        let h = (b - a) / n as f64;
        let nodes: Vec<f64> = (0..n).map(|k| a + (k as f64 + 0.5) * h).collect();
        let weights = nodes.iter().map(|&v| g(v) * h).collect();
        Self::new(nodes, weights)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the node closest to `nu`.
    pub fn nearest(&self, nu: f64) -> usize {
        let mut best = 0;
        for (q, v) in self.nodes.iter().enumerate() {
            if (v - nu).abs() < (self.nodes[best] - nu).abs() {
                best = q;
            }
        }
        best
    }
}
