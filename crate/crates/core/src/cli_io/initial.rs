//! Initial scalar fields. Every generator returns a real, mean-zero field
//! band-limited inside the 2/3-rule cutoff, deterministic in its parameters.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    dealias, forward_transform, Complex64, Grid2D, PhysicalField, SpectralField,
};

fn default_gamma() -> f64 {
    3.0
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_width() -> f64 {
    0.5
}
fn default_shear_k() -> i64 {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `|θ̂(ξ)| ∝ |ξ|^{−γ}` on `1 ≤ |ξ| ≤ kmax`, random phases, scaled so the
    /// root-mean-square of θ equals `amplitude`. `kmax` defaults to `⌊n/3⌋`.
    RandomSpectrum {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        kmax: Option<i64>,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Two periodic Gaussians of opposite sign at antipodal points; the first
    /// center is drawn from `seed`.
    GaussianBumps {
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `amplitude · cos(k x₁)`, an exact steady state.
    Shear {
        #[serde(default = "default_shear_k")]
        k: i64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::RandomSpectrum {
            gamma: default_gamma(),
            kmax: None,
            amplitude: default_amplitude(),
            seed: 0,
        }
    }
}

impl InitialSpec {
    /// Replaces the seed of seeded kinds.
    pub fn with_seed(self, new_seed: u64) -> Self {
        match self {
            InitialSpec::RandomSpectrum {
                gamma,
                kmax,
                amplitude,
                ..
            } => InitialSpec::RandomSpectrum {
                gamma,
                kmax,
                amplitude,
                seed: new_seed,
            },
            InitialSpec::GaussianBumps {
                width, amplitude, ..
            } => InitialSpec::GaussianBumps {
                width,
                amplitude,
                seed: new_seed,
            },
            shear => shear,
        }
    }

    /// Range checks that do not depend on the grid.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    format!("initial.{key}"),
                    format!("must be positive, got {v}"),
                ))
            }
        };
        match *self {
            InitialSpec::RandomSpectrum {
                gamma,
                kmax,
                amplitude,
                ..
            } => {
                if !gamma.is_finite() {
                    return Err(Error::config("initial.gamma", "must be finite"));
                }
                if let Some(k) = kmax {
                    if k < 1 {
                        return Err(Error::config(
                            "initial.kmax",
                            format!("must be >= 1, got {k}"),
                        ));
                    }
                }
                positive("amplitude", amplitude)
            }
            InitialSpec::GaussianBumps {
                width, amplitude, ..
            } => {
                positive("width", width)?;
                positive("amplitude", amplitude)
            }
            InitialSpec::Shear { k, amplitude } => {
                if k < 1 {
                    return Err(Error::config("initial.k", format!("must be >= 1, got {k}")));
                }
                if !amplitude.is_finite() {
                    return Err(Error::config("initial.amplitude", "must be finite"));
                }
                Ok(())
            }
        }
    }
}

fn cutoff(grid: Grid2D) -> i64 {
    grid.n() as i64 / 3
}

pub fn generate_initial(spec: &InitialSpec, grid: Grid2D) -> Result<SpectralField> {
    spec.validate()?;
    match *spec {
        InitialSpec::RandomSpectrum {
            gamma,
            kmax,
            amplitude,
            seed,
        } => {
            let kmax = kmax.unwrap_or_else(|| cutoff(grid));
            if kmax > cutoff(grid) {
                return Err(Error::config(
                    "initial.kmax",
                    format!("must be <= n/3 = {} on this grid, got {kmax}", cutoff(grid)),
                ));
            }
            Ok(random_spectrum(grid, gamma, kmax, amplitude, seed))
        }
        InitialSpec::GaussianBumps {
            width,
            amplitude,
            seed,
        } => Ok(gaussian_bumps(grid, width, amplitude, seed)),
        InitialSpec::Shear { k, amplitude } => {
            if k > cutoff(grid) {
                return Err(Error::config(
                    "initial.k",
                    format!("must be <= n/3 = {} on this grid, got {k}", cutoff(grid)),
                ));
            }
            let mut f = SpectralField::zeros(grid);
            f.set_coeff(k, 0, Complex64::new(0.5 * amplitude, 0.0));
            f.set_coeff(-k, 0, Complex64::new(0.5 * amplitude, 0.0));
            Ok(f)
        }
    }
}

/// Power-law random field. Phases are drawn in a fixed wave-vector order
/// that does not depend on `n`, so the same `(gamma, kmax, seed)` gives the
/// same function on every grid that resolves it.
pub fn random_spectrum(
    grid: Grid2D,
    gamma: f64,
    kmax: i64,
    amplitude: f64,
    seed: u64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid);
    let mut energy = 0.0;
    for k2 in 0..=kmax {
        for k1 in -kmax..=kmax {
            let r2 = k1 * k1 + k2 * k2;
            if (k2 == 0 && k1 <= 0) || r2 > kmax * kmax {
                continue;
            }
            let amp = (r2 as f64).sqrt().powf(-gamma);
            let phase = 2.0 * PI * rng.random::<f64>();
            let c = Complex64::from_polar(amp, phase);
            f.set_coeff(k1, k2, c);
            f.set_coeff(-k1, -k2, c.conj());
            energy += 2.0 * amp * amp;
        }
    }
    if energy > 0.0 {
        f = f.scaled(amplitude / energy.sqrt());
    }
    f
}

fn gaussian_bumps(grid: Grid2D, width: f64, amplitude: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c1 = (
        2.0 * PI * rng.random::<f64>(),
        2.0 * PI * rng.random::<f64>(),
    );
    let c2 = ((c1.0 + PI) % (2.0 * PI), (c1.1 + PI) % (2.0 * PI));
    let wrap = |d: f64| {
        let d = d.rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    let bump = move |x1: f64, x2: f64, c: (f64, f64)| {
        let (d1, d2) = (wrap(x1 - c.0), wrap(x2 - c.1));
        (-(d1 * d1 + d2 * d2) / (2.0 * width * width)).exp()
    };
    let phys = PhysicalField::from_fn(grid, |x1, x2| {
        amplitude * (bump(x1, x2, c1) - bump(x1, x2, c2))
    });
    let mut f = dealias(&forward_transform(&phys));
    f.coeffs_mut()[0] = Complex64::default();
    f
}
