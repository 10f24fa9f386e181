//! Uniform periodic grid on the torus [0, 2π)², Fourier transforms,
//! Fourier multipliers and 2/3-rule dealiasing.
//!
//! Layout: `values[row * n + col]` holds the sample at
//! `(x₁, x₂) = (col·h, row·h)`. Spectral coefficients use the same layout,
//! with `ξ₁` read from the column index and `ξ₂` from the row index, both in
//! FFT order. Coefficients are normalized so that
//! `f(x) = Σ_ξ coeffs(ξ) e^{iξ·x}`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::par;

/// Relative tolerance on conjugate symmetry accepted by [`inverse_transform`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

const SMALLEST_GRID: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid2D {
    n: usize,
}

impl Grid2D {
    /// Square grid with `n` samples per axis; `n` must be a power of two.
    /// Grids down to 8² are accepted so that brute-force oracles stay cheap;
    /// run configurations require `n ≥ 16`.
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < SMALLEST_GRID {
            return Err(Error::config(
                "n",
                format!("grid size must be a power of two >= {SMALLEST_GRID}, got {n}"),
            ));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid nodes, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain period per axis.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed wave number for FFT index `i`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// `(ξ₁, ξ₂)` of the flat index `idx`.
    pub fn wave_vector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx % self.n), self.wavenumber(idx / self.n))
    }

    /// Flat index of the (aliased) wave vector `(k1, k2)`.
    pub fn index_of(&self, k1: i64, k2: i64) -> usize {
        let n = self.n as i64;
        (k2.rem_euclid(n) * n + k1.rem_euclid(n)) as usize
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let (k1, k2) = self.wave_vector(idx);
        ((k1 * k1 + k2 * k2) as f64).sqrt()
    }

    /// Largest resolved `|ξ|`, attained at `(−n/2, −n/2)`.
    pub fn max_radius(&self) -> f64 {
        (self.n / 2) as f64 * 2f64.sqrt()
    }

    /// The negative Nyquist wave number `−n/2`.
    pub fn nyquist(&self) -> i64 {
        -((self.n / 2) as i64)
    }

    /// True when `(k1, k2)` survives the 2/3 rule.
    pub fn dealias_keeps(&self, k1: i64, k2: i64) -> bool {
        let n = self.n as i64;
        3 * k1.abs() <= n && 3 * k2.abs() <= n
    }

    /// Grid with `factor` times the resolution (for alias-free products).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n * factor)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::data(
                0,
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(i, "non-finite sample"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x₁, x₂)` at every grid node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = (0..grid.len())
            .map(|idx| f(grid.coordinate(idx % n), grid.coordinate(idx / n)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Sample at column `i1` (x₁) and row `i2` (x₂), indices taken modulo n.
    pub fn at(&self, i1: i64, i2: i64) -> f64 {
        self.values[self.grid.index_of(i1, i2)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rectangle-rule integral over the torus.
    pub fn integral(&self) -> f64 {
        let h = self.grid.spacing();
        h * h * self.values.iter().sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::data(
                0,
                format!("expected {} coefficients, got {}", grid.len(), coeffs.len()),
            ));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(k1, k2)]
    }

    pub fn set_coeff(&mut self, k1: i64, k2: i64, value: Complex64) {
        let idx = self.grid.index_of(k1, k2);
        self.coeffs[idx] = value;
    }

    /// The ξ = 0 coefficient (spatial mean).
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `max_ξ |coeffs(−ξ) − conj(coeffs(ξ))|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for idx in 0..self.coeffs.len() {
            let (r, c) = (idx / n, idx % n);
            let mirror = ((n - r) % n) * n + (n - c) % n;
            worst = worst.max((self.coeffs[mirror] - self.coeffs[idx].conj()).norm());
        }
        worst
    }

    /// `‖f‖_{L²}` from Plancherel, `2π (Σ|c|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor · other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        }
    }

    /// Copies the coefficients onto `target`, dropping modes the target cannot
    /// hold and the source's Nyquist row/column (which has no conjugate
    /// partner on a finer grid).
    pub fn resampled(&self, target: Grid2D) -> Self {
        let src = self.grid;
        let mut out = SpectralField::zeros(target);
        let limit = (src.n().min(target.n()) / 2) as i64;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = src.wave_vector(idx);
            if k1.abs() < limit && k2.abs() < limit {
                out.set_coeff(k1, k2, *c);
            }
        }
        out
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut planner = planner().lock().expect("fft planner poisoned");
    planner.plan_fft(n, direction)
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    par::for_each_row(
        dst,
        n,
        || (),
        |_, r, row| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = src[c * n + r];
            }
        },
    );
}

/// Unnormalized in-place 2-D FFT: rows, then columns via transposition.
fn fft2(data: &mut [Complex64], n: usize, direction: FftDirection) {
    let fft = plan(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    let run_rows = |buf: &mut [Complex64]| {
        par::for_each_row(
            buf,
            n,
            || vec![Complex64::default(); scratch_len],
            |scratch, _, row| fft.process_with_scratch(row, scratch),
        );
    };
    run_rows(data);
    let mut t = vec![Complex64::default(); data.len()];
    transpose(data, &mut t, n);
    run_rows(&mut t);
    transpose(&t, data, n);
}

pub fn forward_transform(f: &PhysicalField) -> SpectralField {
    let grid = f.grid();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, grid.n(), FftDirection::Forward);
    let norm = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= norm;
    }
    SpectralField { grid, coeffs: data }
}

/// Synthesizes the real field. Coefficients whose conjugate asymmetry
/// exceeds [`SYMMETRY_TOLERANCE`] relative to the largest coefficient are
/// rejected; the imaginary round-off of accepted input is discarded.
pub fn inverse_transform(f: &SpectralField) -> Result<PhysicalField> {
    let asym = f.conjugate_asymmetry();
    if asym > SYMMETRY_TOLERANCE * f.max_abs() {
        return Err(Error::data(
            0,
            format!("conjugate symmetry broken by {asym:e}"),
        ));
    }
    Ok(inverse_unchecked(f))
}

pub(crate) fn inverse_unchecked(f: &SpectralField) -> PhysicalField {
    let grid = f.grid();
    let mut data = f.coeffs.clone();
    fft2(&mut data, grid.n(), FftDirection::Inverse);
    PhysicalField {
        grid,
        values: data.into_iter().map(|c| c.re).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

type SymbolFn = dyn Fn(i64, i64, usize) -> Complex64 + Send + Sync;

/// Fourier multiplier `ξ ↦ m(ξ)`. The closure receives `(ξ₁, ξ₂, n)` and is
/// never called at `ξ = 0`, whose value is declared separately.
pub struct Symbol {
    eval: Box<SymbolFn>,
    at_origin: Complex64,
}

impl Symbol {
    pub fn new<F>(at_origin: Complex64, eval: F) -> Self
    where
        F: Fn(i64, i64, usize) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Box::new(eval),
            at_origin,
        }
    }

    pub fn identity() -> Self {
        Self::new(Complex64::new(1.0, 0.0), |_, _, _| Complex64::new(1.0, 0.0))
    }

    /// Radial real multiplier `m(|ξ|)`.
    pub fn radial<F>(at_origin: f64, profile: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(Complex64::new(at_origin, 0.0), move |k1, k2, _| {
            Complex64::new(profile(((k1 * k1 + k2 * k2) as f64).sqrt()), 0.0)
        })
    }

    /// `iξ_axis`; zero on the Nyquist line, where an odd symbol would break
    /// the conjugate symmetry of real fields.
    pub fn derivative(axis: Axis) -> Self {
        Self::new(Complex64::default(), move |k1, k2, n| {
            let k = match axis {
                Axis::X1 => k1,
                Axis::X2 => k2,
            };
            if k == -((n / 2) as i64) {
                Complex64::default()
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
    }

    /// `|ξ|^order`, i.e. `Λ^order`. At `ξ = 0` the value is 1 for order 0 and
    /// 0 otherwise (negative orders act on mean-zero data only).
    pub fn fractional(order: f64) -> Self {
        let at_origin = if order == 0.0 { 1.0 } else { 0.0 };
        Self::radial(at_origin, move |r| r.powf(order))
    }

    pub fn eval(&self, k1: i64, k2: i64, n: usize) -> Complex64 {
        if k1 == 0 && k2 == 0 {
            self.at_origin
        } else {
            (self.eval)(k1, k2, n)
        }
    }
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("at_origin", &self.at_origin)
            .finish_non_exhaustive()
    }
}

/// Two-component multiplier producing a vector field.
#[derive(Debug)]
pub struct VectorSymbol(pub Symbol, pub Symbol);

pub fn apply_symbol(f: &SpectralField, m: &Symbol) -> Result<SpectralField> {
    let grid = f.grid();
    let n = grid.n();
    let mut coeffs = Vec::with_capacity(grid.len());
    for (idx, c) in f.coeffs().iter().enumerate() {
        let (k1, k2) = grid.wave_vector(idx);
        let v = m.eval(k1, k2, n);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Parameter(format!(
                "symbol is not finite at ({k1}, {k2})"
            )));
        }
        coeffs.push(c * v);
    }
    Ok(SpectralField { grid, coeffs })
}

pub fn apply_vector_symbol(
    f: &SpectralField,
    m: &VectorSymbol,
) -> Result<(SpectralField, SpectralField)> {
    Ok((apply_symbol(f, &m.0)?, apply_symbol(f, &m.1)?))
}

/// 2/3-rule truncation: zero every mode with `|ξ₁| > n/3` or `|ξ₂| > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let (k1, k2) = grid.wave_vector(idx);
            if grid.dealias_keeps(k1, k2) {
                *c
            } else {
                Complex64::default()
            }
        })
        .collect();
    SpectralField { grid, coeffs }
}

/// Spectral gradient `(∂₁f, ∂₂f)`.
pub fn gradient(f: &SpectralField) -> (SpectralField, SpectralField) {
    let d1 = apply_symbol(f, &Symbol::derivative(Axis::X1)).expect("finite symbol");
    let d2 = apply_symbol(f, &Symbol::derivative(Axis::X2)).expect("finite symbol");
    (d1, d2)
}

/// Pointwise `Σᵢ aᵢ bᵢ` computed alias-free: every factor is zero-padded onto
/// a grid of twice the resolution before multiplying. Returns the spectrum on
/// the refined grid, which represents the product exactly when the factors
/// carry no Nyquist content.
pub fn exact_dot(a: &[&SpectralField], b: &[&SpectralField]) -> SpectralField {
    assert_eq!(a.len(), b.len(), "component count mismatch");
    let fine = a[0].grid().refined(2).expect("refined grid");
    let mut acc = vec![0.0; fine.len()];
    for (ai, bi) in a.iter().zip(b) {
        let pa = inverse_unchecked(&ai.resampled(fine));
        let pb = inverse_unchecked(&bi.resampled(fine));
        for ((s, x), y) in acc.iter_mut().zip(pa.values()).zip(pb.values()) {
            *s += x * y;
        }
    }
    forward_transform(&PhysicalField {
        grid: fine,
        values: acc,
    })
}
