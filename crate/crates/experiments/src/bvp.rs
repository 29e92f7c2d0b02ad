//! Snapshot matrix of the two-parameter boundary-value problem
//! `-u'' - α²u = cos(βx)` on `(0, π)` with homogeneous Dirichlet data,
//! expanded in the sine basis `sin(kx)`, `k = 1..K`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bmx_core::{BochnerMatrix, InnerProductSpec};

/// Norm carried by the solution space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    /// `‖u‖² = (2/π) Σ u_k²`
    L2,
    /// `‖u‖² = (2/π) Σ k² u_k²`
    H10,
}

impl Space {
    pub fn weights(self, k_max: usize) -> Vec<f64> {
        let scale = 2.0 / std::f64::consts::PI;
        (1..=k_max)
            .map(|k| match self {
                Space::L2 => scale,
                Space::H10 => scale * (k * k) as f64,
            })
            .collect()
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::L2 => "l2",
            Space::H10 => "h10",
        })
    }
}

impl FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Space::L2),
            "h10" | "h1_0" | "h01" => Ok(Space::H10),
            other => Err(format!("unknown space {other:?} (expected l2 or h10)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvpConfig {
    pub alpha_max: f64,
    pub beta_max: f64,
    pub m: usize,
    pub n: usize,
    /// Number of sine modes.
    pub k_max: usize,
    pub space: Space,
}

impl BvpConfig {
    /// The desk-scale setting: `α, β ∈ [0, 2]`, 100 × 100 grid, 75 modes.
    pub fn desk(space: Space) -> Self {
        Self {
            alpha_max: 2.0,
            beta_max: 2.0,
            m: 100,
            n: 100,
            k_max: 75,
            space,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.m == 0 || self.n == 0 {
            return Err(format!("grid sizes must be positive, got {}x{}", self.m, self.n));
        }
        if self.k_max == 0 {
            return Err("at least one Fourier mode is required".into());
        }
        for (name, v) in [("alpha-max", self.alpha_max), ("beta-max", self.beta_max)] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        linspace(0.0, self.alpha_max, self.m)
    }

    pub fn betas(&self) -> Vec<f64> {
        linspace(0.0, self.beta_max, self.n)
    }
}

/// `count` equispaced points on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Sine coefficient `k` of the solution at `(α, β)`:
/// `k / ((k² + α²)(k² + β²)) · (1 − (−1)^k cos(βπ))`.
pub fn sine_coefficient(k: usize, alpha: f64, beta: f64) -> f64 {
    let kf = k as f64;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let bracket = 1.0 - sign * (beta * std::f64::consts::PI).cos();
    kf / ((kf * kf + alpha * alpha) * (kf * kf + beta * beta)) * bracket
}

/// Entry `(i, j)` holds the coefficients at `(α_i, β_j)`.
pub fn build_bvp_matrix(cfg: &BvpConfig) -> bmx_core::Result<BochnerMatrix> {
    cfg.validate().map_err(bmx_core::Error::InvalidSpec)?;
    let spec: Arc<InnerProductSpec> = InnerProductSpec::diagonal(cfg.space.weights(cfg.k_max))?;
    let alphas = cfg.alphas();
    let betas = cfg.betas();
    let mut data = Vec::with_capacity(cfg.m * cfg.n * cfg.k_max);
    for &a in &alphas {
        for &b in &betas {
            data.extend((1..=cfg.k_max).map(|k| sine_coefficient(k, a, b)));
        }
    }
    BochnerMatrix::from_flat(cfg.m, cfg.n, spec, data)
}
