//! Dyadic Littlewood-Paley decomposition on the torus.
//!
//! The low-pass profile χ is 1 on `r ≤ 3/4`, 0 on `r ≥ 4/3`, and smooth in
//! between; the annulus profile is `ψ̂(r) = χ(r/2) − χ(r)`. The partial sums
//! telescope, `χ(r) + Σ_{j=0}^{J} ψ̂(2^{−j} r) = χ(2^{−J−1} r)`, so the
//! partition of unity holds identically once `2^{−J−1} r ≤ 3/4`.
//!
//! Blocks act as exact Fourier multipliers:
//! `Δ_{−1} ↔ χ(|ξ|)`, `Δ_j ↔ ψ̂(2^{−j}|ξ|)` for `j ≥ 0`, `Δ_j = 0` for `j ≤ −2`,
//! and `S_j = Σ_{k ≤ j−1} Δ_k ↔ χ(2^{−j}|ξ|)` for `j ≥ 0`.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::spectral::{Grid2D, PhysicalField, SpectralField};

/// χ ≡ 1 below this radius.
pub const INNER_RADIUS: f64 = 0.75;
/// χ ≡ 0 above this radius.
pub const OUTER_RADIUS: f64 = 4.0 / 3.0;
/// Outer edge of the ψ̂ annulus.
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;

fn bump_tail(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C^∞ step from 0 (t ≤ 0) to 1 (t ≥ 1).
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = bump_tail(t);
        a / (a + bump_tail(1.0 - t))
    }
}

/// Radial low-pass cutoff χ.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step((r - INNER_RADIUS) / (OUTER_RADIUS - INNER_RADIUS))
}

/// Immutable dyadic family, sized for the grid it was built on.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicFamily {
    j_max: i32,
    partition_residual: f64,
}

impl DyadicFamily {
    pub fn phi_hat(&self, r: f64) -> f64 {
        chi(r)
    }

    pub fn psi_hat(&self, r: f64) -> f64 {
        chi(0.5 * r) - chi(r)
    }

    /// Multiplier of `Δ_j` at radius `r`.
    pub fn block_weight(&self, j: i32, r: f64) -> f64 {
        match j {
            j if j <= -2 => 0.0,
            -1 => self.phi_hat(r),
            j => self.psi_hat(r * (-j as f64).exp2()),
        }
    }

    /// Multiplier of `S_j` at radius `r`.
    pub fn low_pass_weight(&self, j: i32, r: f64) -> f64 {
        if j <= -1 {
            0.0
        } else {
            chi(r * (-j as f64).exp2())
        }
    }

    /// Largest block index carrying data on the build grid.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// `−1..=j_max`.
    pub fn blocks(&self) -> RangeInclusive<i32> {
        -1..=self.j_max
    }

    /// Partition-of-unity residual measured at construction.
    pub fn partition_residual(&self) -> f64 {
        self.partition_residual
    }
}

/// Smallest `J` with `2^J · 3/4 > max |ξ|`; every `Δ_j` with `j > J` vanishes
/// on the resolved modes.
pub fn max_block(grid: Grid2D) -> i32 {
    let r = grid.max_radius();
    let mut j = -1;
    while (j as f64).exp2() * INNER_RADIUS <= r {
        j += 1;
    }
    j
}

/// `max_ξ |χ(|ξ|) + Σ_{j=0}^{J} ψ̂(2^{−j}|ξ|) − 1|` over the resolved modes,
/// with the sum evaluated term by term.
pub fn partition_residual(grid: Grid2D, fam: &DyadicFamily) -> f64 {
    let j_max = max_block(grid);
    (0..grid.len())
        .map(|idx| {
            let r = grid.radius(idx);
            let total: f64 = (-1..=j_max).map(|j| fam.block_weight(j, r)).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Builds the family for `grid` and checks the partition of unity on every
/// resolved radius against `tolerance`.
pub fn build_family(grid: Grid2D, tolerance: f64) -> Result<DyadicFamily> {
    if !(tolerance > 0.0) {
        return Err(Error::Parameter(format!(
            "partition tolerance must be positive, got {tolerance}"
        )));
    }
    let mut fam = DyadicFamily {
        j_max: max_block(grid),
        partition_residual: 0.0,
    };
    fam.partition_residual = partition_residual(grid, &fam);
    if fam.partition_residual > tolerance {
        return Err(Error::Parameter(format!(
            "partition residual {:e} exceeds {tolerance:e}",
            fam.partition_residual
        )));
    }
    Ok(fam)
}

fn apply_radial(f: &SpectralField, weight: impl Fn(f64) -> f64) -> SpectralField {
    let grid = f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| c * weight(grid.radius(idx)))
        .collect();
    SpectralField::new(grid, coeffs).expect("same grid")
}

/// `Δ_j f`.
pub fn delta_j(f: &SpectralField, j: i32, fam: &DyadicFamily) -> SpectralField {
    if j <= -2 {
        return SpectralField::zeros(f.grid());
    }
    apply_radial(f, |r| fam.block_weight(j, r))
}

/// `S_j f = Σ_{k=−1}^{j−1} Δ_k f`, applied as the single telescoped
/// multiplier `χ(2^{−j}|ξ|)`.
pub fn s_j(f: &SpectralField, j: i32, fam: &DyadicFamily) -> SpectralField {
    if j <= -1 {
        return SpectralField::zeros(f.grid());
    }
    apply_radial(f, |r| fam.low_pass_weight(j, r))
}

/// Periodic convolution kernel of `Δ_j`: `K_j(x) = (2π)^{−2} Σ_ξ m_j(ξ) e^{iξ·x}`,
/// so that `Δ_j f = ∫ K_j(x − y) f(y) dy`.
pub fn block_kernel(grid: Grid2D, j: i32, fam: &DyadicFamily) -> PhysicalField {
    let mut delta = SpectralField::zeros(grid);
    let scale = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    for (idx, c) in delta.coeffs_mut().iter_mut().enumerate() {
        c.re = scale * fam.block_weight(j, grid.radius(idx));
    }
    crate::spectral::inverse_unchecked(&delta)
}
