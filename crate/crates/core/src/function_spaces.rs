//! Norms on grid fields: `L^p`, Besov `B^s_{p,q}` and log-Lipschitz `LL_α`.
//!
//! Exponents are plain `f64` with `f64::INFINITY` standing for ∞. Vector
//! fields are passed as component slices; their pointwise size is the
//! Euclidean magnitude.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::littlewood_paley::{block_kernel, delta_j, DyadicFamily};
use crate::par;
use crate::spectral::{inverse_unchecked, Grid2D, PhysicalField, SpectralField};

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must lie in [1, inf], got {p}"
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Parameter(format!(
                "smoothness must be finite, got {s}"
            )));
        }
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        Ok(Self { s, p, q })
    }

    pub fn q_conjugate(&self) -> f64 {
        conjugate_exponent(self.q).expect("validated at construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub total: f64,
    /// `(j, 2^{js}‖Δ_j f‖_{L^p})` for `j = −1..=j_max`.
    pub per_block: Vec<(i32, f64)>,
    pub params: BesovParams,
}

impl NormReport {
    /// ℓ^q norm of `per_block`, recomputed.
    pub fn recompute_total(&self) -> f64 {
        let values: Vec<f64> = self.per_block.iter().map(|&(_, v)| v).collect();
        sequence_norm(&values, self.params.q)
    }
}

/// `1/q + 1/q' = 1`.
pub fn conjugate_exponent(q: f64) -> Result<f64> {
    check_exponent("q", q)?;
    Ok(if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    })
}

/// ℓ^q norm of a finite sequence (max for `q = ∞`).
pub fn sequence_norm(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(q))
            .sum::<f64>()
            .powf(q.recip())
    }
}

fn lp_of_magnitudes(grid: Grid2D, magnitudes: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return magnitudes.fold(0.0, f64::max);
    }
    let h = grid.spacing();
    let sum: f64 = if p == 2.0 {
        magnitudes.map(|m| m * m).sum()
    } else {
        magnitudes.map(|m| m.powf(p)).sum()
    };
    (h * h * sum).powf(p.recip())
}

/// Rectangle-rule `(∫|f|^p)^{1/p}`; grid maximum for `p = ∞`.
pub fn lp_norm(f: &PhysicalField, p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    Ok(lp_of_magnitudes(
        f.grid(),
        f.values().iter().map(|v| v.abs()),
        p,
    ))
}

/// `L^p` norm of the pointwise Euclidean magnitude of a vector field.
pub fn lp_norm_vec(components: &[PhysicalField], p: f64) -> Result<f64> {
    check_exponent("p", p)?;
    match components {
        [] => Err(Error::Parameter("empty vector field".into())),
        [single] => lp_norm(single, p),
        _ => {
            let grid = components[0].grid();
            let mags = (0..grid.len()).map(|i| {
                components
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            });
            Ok(lp_of_magnitudes(grid, mags, p))
        }
    }
}

/// `B^s_{p,q}` norm with per-block breakdown over `j = −1..=j_max`.
pub fn besov_norm(f: &SpectralField, prm: BesovParams, fam: &DyadicFamily) -> NormReport {
    besov_norm_vec(std::slice::from_ref(f), prm, fam)
}

pub fn besov_norm_vec(
    components: &[SpectralField],
    prm: BesovParams,
    fam: &DyadicFamily,
) -> NormReport {
    let blocks: Vec<i32> = fam.blocks().collect();
    let per_block: Vec<(i32, f64)> = par::map(&blocks, |&j| {
        let pieces: Vec<PhysicalField> = components
            .iter()
            .map(|c| inverse_unchecked(&delta_j(c, j, fam)))
            .collect();
        let norm = lp_norm_vec(&pieces, prm.p).expect("validated exponent");
        (j, (j as f64 * prm.s).exp2() * norm)
    });
    let values: Vec<f64> = per_block.iter().map(|&(_, v)| v).collect();
    NormReport {
        total: sequence_norm(&values, prm.q),
        per_block,
        params: prm,
    }
}

/// `max_j ‖K_j‖_{L¹}` over the block kernels: the Young constant bounding
/// `‖Δ_j f‖_{L^p} ≤ C_ψ ‖f‖_{L^p}`.
pub fn block_contraction_constant(grid: Grid2D, fam: &DyadicFamily) -> f64 {
    fam.blocks()
        .map(|j| lp_norm(&block_kernel(grid, j, fam), 1.0).expect("p = 1"))
        .fold(0.0, f64::max)
}

/// Sampling plan for the log-Lipschitz supremum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSampler {
    pub seed: u64,
    /// Random pairs drawn in addition to all nearest-neighbour pairs.
    pub pairs: usize,
}

impl PairSampler {
    pub const DEFAULT_PAIRS: usize = 65_536;

    pub fn new(seed: u64, pairs: usize) -> Self {
        Self { seed, pairs }
    }
}

impl Default for PairSampler {
    fn default() -> Self {
        Self::new(0, Self::DEFAULT_PAIRS)
    }
}

/// A grid pair: anchor index and integer offset `(d1, d2)` in grid steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pair {
    anchor: usize,
    d1: i64,
    d2: i64,
}

/// Nearest-neighbour pairs first, then `pairs` random draws with anchors
/// uniform on the grid and separations log-uniform in `[h, 1]`, snapped to
/// grid offsets. Each draw consumes exactly three variates, so a larger
/// budget extends the pair list without reordering it.
fn sample_pairs(grid: Grid2D, sampler: PairSampler) -> Vec<Pair> {
    let h = grid.spacing();
    let mut pairs = Vec::with_capacity(2 * grid.len() + sampler.pairs);
    for anchor in 0..grid.len() {
        pairs.push(Pair {
            anchor,
            d1: 1,
            d2: 0,
        });
        pairs.push(Pair {
            anchor,
            d1: 0,
            d2: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let log_h = h.ln();
    for _ in 0..sampler.pairs {
        let ua: f64 = rng.random();
        let ur: f64 = rng.random();
        let ut: f64 = rng.random();
        let anchor = ((ua * grid.len() as f64) as usize).min(grid.len() - 1);
        let r = (log_h * (1.0 - ur)).exp();
        let angle = 2.0 * std::f64::consts::PI * ut;
        let mut d1 = (r * angle.cos() / h).round() as i64;
        let d2 = (r * angle.sin() / h).round() as i64;
        if d1 == 0 && d2 == 0 {
            d1 = 1;
        }
        if h * ((d1 * d1 + d2 * d2) as f64).sqrt() <= 1.0 {
            pairs.push(Pair { anchor, d1, d2 });
        }
    }
    pairs
}

/// Sampled `LL_α` norm: `‖f‖_{L^∞}` plus the largest sampled
/// `|f(x) − f(y)| / (|x − y| (1 − log₂|x − y|)^α)` with `0 < |x − y| ≤ 1`.
/// A lower bound for the continuum supremum, deterministic in the seed.
pub fn log_lipschitz_norm(f: &PhysicalField, alpha: f64, sampler: PairSampler) -> Result<f64> {
    log_lipschitz_norm_vec(std::slice::from_ref(f), alpha, sampler)
}

pub fn log_lipschitz_norm_vec(
    components: &[PhysicalField],
    alpha: f64,
    sampler: PairSampler,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if components.is_empty() {
        return Err(Error::Parameter("empty vector field".into()));
    }
    let grid = components[0].grid();
    let n = grid.n() as i64;
    let h = grid.spacing();
    let sup = lp_norm_vec(components, f64::INFINITY)?;
    let pairs = sample_pairs(grid, sampler);
    let quotient = par::max_range(pairs.len(), |i| {
        let Pair { anchor, d1, d2 } = pairs[i];
        let col = anchor as i64 % n;
        let row = anchor as i64 / n;
        let other = grid.index_of(col + d1, row + d2);
        let diff = components
            .iter()
            .map(|c| {
                let d = c.values()[anchor] - c.values()[other];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        let dist = h * ((d1 * d1 + d2 * d2) as f64).sqrt();
        let weight = if alpha == 0.0 {
            1.0
        } else {
            (1.0 - dist.log2()).powf(alpha)
        };
        diff / (dist * weight)
    });
    Ok(sup + quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{build_family, chi};
    use crate::spectral::forward_transform;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n).unwrap()
    }

    fn random_physical(n: usize, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid(n);
        PhysicalField::new(g, (0..g.len()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap()
    }

    #[test]
    fn lp_of_constant() {
        let g = grid(16);
        let f = PhysicalField::from_fn(g, |_, _| -1.5);
        for p in [1.0, 2.0, 3.5] {
            let expected = 1.5 * (2.0 * PI).powf(2.0 / p);
            assert!((lp_norm(&f, p).unwrap() - expected).abs() < 1e-12 * expected);
        }
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.5);
    }

    #[test]
    fn lp_of_cosine() {
        let f = PhysicalField::from_fn(grid(32), |x1, _| x1.cos());
        assert!((lp_norm(&f, 2.0).unwrap() - 2f64.sqrt() * PI).abs() < 1e-12);
    }

    #[test]
    fn lp_matches_direct_quadrature() {
        let f = random_physical(8, 5);
        let h = f.grid().spacing();
        let mut acc = 0.0;
        for v in f.values() {
            acc += h * h * v.abs().powi(3);
        }
        let oracle = acc.cbrt();
        assert!((lp_norm(&f, 3.0).unwrap() - oracle).abs() <= 1e-14 * oracle);
    }

    #[test]
    fn lp_rejects_small_exponent() {
        let f = random_physical(16, 1);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::Parameter(_))));
        assert!(BesovParams::new(1.0, 2.0, 0.9).is_err());
    }

    #[test]
    fn conjugate_exponents() {
        assert_eq!(conjugate_exponent(1.0).unwrap(), f64::INFINITY);
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert!((conjugate_exponent(4.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(conjugate_exponent(f64::INFINITY).unwrap(), 1.0);
        assert!(conjugate_exponent(0.5).is_err());
    }

    #[test]
    fn besov_of_zero_and_homogeneity() {
        let g = grid(32);
        let fam = build_family(g, 1e-12).unwrap();
        let prm = BesovParams::new(1.5, 2.0, 1.0).unwrap();
        assert_eq!(besov_norm(&SpectralField::zeros(g), prm, &fam).total, 0.0);

        let f = forward_transform(&random_physical(32, 3));
        let a = besov_norm(&f, prm, &fam).total;
        let b = besov_norm(&f.scaled(-3.0), prm, &fam).total;
        assert!((b - 3.0 * a).abs() <= 1e-13 * b);
    }

    #[test]
    fn besov_of_unit_cosine_matches_profile_evaluation() {
        let g = grid(32);
        let fam = build_family(g, 1e-12).unwrap();
        let f = forward_transform(&PhysicalField::from_fn(g, |x1, _| x1.cos()));
        for s in [-1.0, 0.0, 0.7, 2.5] {
            let prm = BesovParams::new(s, 2.0, 1.0).unwrap();
            // |ξ| = 1 sits in Δ_{−1} (weight χ(1)) and Δ_0 (weight χ(1/2) − χ(1) = 1 − χ(1)).
            let oracle = 2f64.sqrt() * PI * ((-s).exp2() * chi(1.0) + (1.0 - chi(1.0)));
            let got = besov_norm(&f, prm, &fam).total;
            assert!(
                (got - oracle).abs() <= 1e-12 * oracle,
                "s={s}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn besov_l2_matches_spectral_sum() {
        let g = grid(32);
        let fam = build_family(g, 1e-12).unwrap();
        let f = forward_transform(&random_physical(32, 17));
        let s = 0.8;
        let prm = BesovParams::new(s, 2.0, 2.0).unwrap();
        let report = besov_norm(&f, prm, &fam);
        let mut spectral = 0.0;
        for (idx, c) in f.coeffs().iter().enumerate() {
            let r = g.radius(idx);
            let w: f64 = fam
                .blocks()
                .map(|j| (2.0 * s * j as f64).exp2() * fam.block_weight(j, r).powi(2))
                .sum();
            spectral += 4.0 * PI * PI * c.norm_sqr() * w;
        }
        assert!((report.total.powi(2) - spectral).abs() <= 1e-10 * spectral);
        assert!((report.recompute_total() - report.total).abs() <= 1e-15 * report.total);
    }

    #[test]
    fn besov_monotone_in_q_and_blocks_contract() {
        let g = grid(32);
        let fam = build_family(g, 1e-12).unwrap();
        let c_psi = block_contraction_constant(g, &fam);
        assert!(c_psi >= 1.0);
        for seed in 0..5 {
            let phys = random_physical(32, seed);
            let f = forward_transform(&phys);
            let totals: Vec<f64> = [1.0, 2.0, f64::INFINITY]
                .iter()
                .map(|&q| besov_norm(&f, BesovParams::new(1.0, 3.0, q).unwrap(), &fam).total)
                .collect();
            assert!(totals[0] >= totals[1] && totals[1] >= totals[2]);

            for p in [1.0, 2.0, f64::INFINITY] {
                let base = lp_norm(&phys, p).unwrap();
                let rep = besov_norm(&f, BesovParams::new(0.5, p, 1.0).unwrap(), &fam);
                for (j, v) in rep.per_block {
                    assert!(v <= (0.5 * j as f64).exp2() * base * c_psi * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn log_lipschitz_of_constant() {
        let f = PhysicalField::from_fn(grid(32), |_, _| -0.25);
        assert_eq!(
            log_lipschitz_norm(&f, 0.5, PairSampler::new(1, 1000)).unwrap(),
            0.25
        );
    }

    #[test]
    fn log_lipschitz_rejects_bad_alpha() {
        let f = random_physical(16, 1);
        assert!(log_lipschitz_norm(&f, 1.5, PairSampler::default()).is_err());
    }

    /// Continuum pairs with separations log-uniform in [1e-6, 1].
    fn dense_cosine_oracle(samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let x1 = 2.0 * PI * rng.random::<f64>();
            let r = (1e-6f64.ln() * (1.0 - rng.random::<f64>())).exp();
            let t = 2.0 * PI * rng.random::<f64>();
            let y1 = x1 + r * t.cos();
            best = best.max((x1.cos() - y1.cos()).abs() / r);
        }
        1.0 + best
    }

    #[test]
    fn log_lipschitz_of_cosine_against_dense_oracle() {
        let f = PhysicalField::from_fn(grid(128), |x1, _| x1.cos());
        let got = log_lipschitz_norm(&f, 0.0, PairSampler::default()).unwrap();
        let oracle = dense_cosine_oracle(1_000_000);
        assert!(got <= 2.0);
        assert!(got >= oracle - 1e-3, "{got} vs {oracle}");
    }

    #[test]
    fn log_lipschitz_homogeneous_and_monotone_in_budget() {
        let f = random_physical(32, 8);
        let s = PairSampler::new(4, 2000);
        let a = log_lipschitz_norm(&f, 0.5, s).unwrap();
        let b = log_lipschitz_norm(
            &PhysicalField::new(f.grid(), f.values().iter().map(|v| -2.0 * v).collect()).unwrap(),
            0.5,
            s,
        )
        .unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-14 * b);
        let mut last = 0.0;
        for pairs in [0, 10, 100, 1000, 10_000] {
            let v = log_lipschitz_norm(&f, 0.5, PairSampler::new(4, pairs)).unwrap();
            assert!(v >= last);
            last = v;
        }
    }
}
