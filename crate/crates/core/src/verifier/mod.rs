//! Numerical checks of the estimates behind local well-posedness in
//! `B^{1+β}_{2,1}`: the commutator bound, the log-Lipschitz embedding, the
//! Bernstein step for the velocity, the quadratic growth inequality with
//! its Gronwall envelope, and the `1/‖θ₀‖` scaling of the existence time.
//!
//! Unnamed constants are never assumed; each suite reports empirical ratios
//! and their maxima so that boundedness and resolution stability can be
//! judged.

mod report;

use std::ops::ControlFlow;

pub use report::{CaseRecord, FittedConstant, VerifyReport};

use crate::active_scalar::{integrate, velocity, ModelParams, Outcome, SimState};
use crate::cli_io::initial::random_spectrum;
use crate::error::{Error, Result};
use crate::function_spaces::{
    besov_norm, besov_norm_vec, conjugate_exponent, log_lipschitz_norm_vec, lp_norm, BesovParams,
    PairSampler,
};
use crate::littlewood_paley::{build_family, delta_j, s_j, DyadicFamily};
use crate::par;
use crate::spectral::{exact_dot, gradient, inverse_unchecked, Grid2D, SpectralField};

/// Partition tolerance used when suites build their own families.
pub const FAMILY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySuiteConfig {
    pub seeds: Vec<u64>,
    pub n_list: Vec<usize>,
    pub beta_list: Vec<f64>,
    /// Spectral slopes γ, cycled over seeds.
    pub gammas: Vec<f64>,
    /// Integrability of the commutator bound.
    pub p: f64,
    /// Summability; the log-Lipschitz exponent is `1/q'`.
    pub q: f64,
    /// Interaction width `M` in the lower summation limit `j − M`.
    pub m_shift: u32,
    /// Extra widths whose maximum ratios are reported for comparison.
    pub m_sensitivity: Vec<u32>,
    pub pair_budget: usize,
}

impl Default for VerifySuiteConfig {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            n_list: vec![64, 128],
            beta_list: vec![1.25, 1.5, 1.75],
            gammas: vec![2.0, 3.0, 4.0],
            p: 2.0,
            q: 1.0,
            m_shift: 4,
            m_sensitivity: vec![2, 4, 8],
            pair_budget: PairSampler::DEFAULT_PAIRS,
        }
    }
}

impl VerifySuiteConfig {
    pub fn validate(&self) -> Result<()> {
        for &n in &self.n_list {
            Grid2D::new(n)?;
        }
        conjugate_exponent(self.q)?;
        if !(self.p >= 1.0) {
            return Err(Error::config(
                "commutator_p",
                format!("must lie in [1, inf], got {}", self.p),
            ));
        }
        if self.gammas.is_empty() {
            return Err(Error::config("gammas", "must not be empty"));
        }
        Ok(())
    }
}

/// One randomized input of a suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteCase {
    pub n: usize,
    pub seed: u64,
    pub beta: f64,
    pub gamma: f64,
}

impl SuiteCase {
    /// Power-law field filling the dealiased band of the case grid.
    pub fn field(&self) -> Result<SpectralField> {
        let grid = Grid2D::new(self.n)?;
        Ok(random_spectrum(
            grid,
            self.gamma,
            self.n as i64 / 3,
            1.0,
            self.seed,
        ))
    }

    fn params(&self) -> [(&'static str, f64); 4] {
        [
            ("n", self.n as f64),
            ("seed", self.seed as f64),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ]
    }
}

/// Cases ordered by `(n, seed, beta)`.
pub fn suite_cases(cfg: &VerifySuiteConfig) -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    for &n in &cfg.n_list {
        for &seed in &cfg.seeds {
            for &beta in &cfg.beta_list {
                let gamma = cfg.gammas[seed as usize % cfg.gammas.len()];
                cases.push(SuiteCase {
                    n,
                    seed,
                    beta,
                    gamma,
                });
            }
        }
    }
    cases
}

/// `‖S_{j−1}u·∇Δ_jθ − Δ_j(u·∇θ)‖_{L^p}` for every block `j = −1..=j_max`.
/// Products are formed alias-free on a grid of twice the resolution.
pub fn commutator_residuals(
    theta: &SpectralField,
    beta: f64,
    p: f64,
    fam: &DyadicFamily,
) -> Result<Vec<(i32, f64)>> {
    let (u1, u2) = velocity(theta, beta)?;
    let (g1, g2) = gradient(theta);
    let full = exact_dot(&[&u1, &u2], &[&g1, &g2]);
    let blocks: Vec<i32> = fam.blocks().collect();
    let out = par::map(&blocks, |&j| {
        let (su1, su2) = (s_j(&u1, j - 1, fam), s_j(&u2, j - 1, fam));
        let (d1, d2) = gradient(&delta_j(theta, j, fam));
        let transported = exact_dot(&[&su1, &su2], &[&d1, &d2]);
        let projected = delta_j(&full, j, fam);
        let residual = inverse_unchecked(&(&transported - &projected));
        lp_norm(&residual, p).map(|v| (j, v))
    });
    out.into_iter().collect()
}

pub fn commutator_residual(
    theta: &SpectralField,
    beta: f64,
    j: i32,
    p: f64,
    fam: &DyadicFamily,
) -> Result<f64> {
    if j < -1 {
        return Err(Error::Parameter(format!(
            "block index must be >= -1, got {j}"
        )));
    }
    let all = commutator_residuals(theta, beta, p, fam)?;
    Ok(all.iter().find(|&&(b, _)| b == j).map_or(0.0, |&(_, v)| v))
}

/// `‖Δ_jθ‖_{L^p}` for `j = −1..=j_max`.
pub fn block_norms(theta: &SpectralField, p: f64, fam: &DyadicFamily) -> Result<Vec<(i32, f64)>> {
    let prm = BesovParams::new(0.0, p, 1.0)?;
    Ok(besov_norm(theta, prm, fam).per_block)
}

/// `2^j u_ll Σ_{j' ≥ j−M} 2^{−j'} (j'+1)^{1/q'} ‖Δ_{j'}θ‖_{L^p}` from
/// precomputed block norms, with unit constant.
pub fn lemma1_rhs_from_blocks(
    norms: &[(i32, f64)],
    u_ll: f64,
    j: i32,
    q_prime: f64,
    m: u32,
) -> f64 {
    let exponent = q_prime.recip();
    let start = j - m as i32;
    let sum: f64 = norms
        .iter()
        .filter(|&&(jp, _)| jp >= start)
        .map(|&(jp, norm)| {
            let weight = if exponent == 0.0 {
                1.0
            } else {
                ((jp + 1) as f64).powf(exponent)
            };
            (-jp as f64).exp2() * weight * norm
        })
        .sum();
    (j as f64).exp2() * u_ll * sum
}

#[allow(clippy::too_many_arguments)]
pub fn lemma1_rhs(
    theta: &SpectralField,
    u_ll: f64,
    j: i32,
    p: f64,
    q_prime: f64,
    m: u32,
    fam: &DyadicFamily,
) -> Result<f64> {
    if !(u_ll >= 0.0) {
        return Err(Error::Parameter(format!(
            "u_ll must be nonnegative, got {u_ll}"
        )));
    }
    Ok(lemma1_rhs_from_blocks(
        &block_norms(theta, p, fam)?,
        u_ll,
        j,
        q_prime,
        m,
    ))
}

fn velocity_physical(
    theta: &SpectralField,
    beta: f64,
) -> Result<[crate::spectral::PhysicalField; 2]> {
    let (u1, u2) = velocity(theta, beta)?;
    Ok([inverse_unchecked(&u1), inverse_unchecked(&u2)])
}

struct CommutatorCase {
    records: Vec<CaseRecord>,
    by_m: Vec<f64>,
}

fn run_commutator_case(case: &SuiteCase, cfg: &VerifySuiteConfig) -> Result<CommutatorCase> {
    let theta = case.field()?;
    let grid = theta.grid();
    let fam = build_family(grid, FAMILY_TOLERANCE)?;
    let q_prime = conjugate_exponent(cfg.q)?;
    let u = velocity_physical(&theta, case.beta)?;
    let u_ll = log_lipschitz_norm_vec(
        &u,
        q_prime.recip(),
        PairSampler::new(case.seed, cfg.pair_budget),
    )?;
    let residuals = commutator_residuals(&theta, case.beta, cfg.p, &fam)?;
    let norms = block_norms(&theta, cfg.p, &fam)?;
    let mut records = Vec::new();
    let mut by_m = vec![0.0f64; cfg.m_sensitivity.len()];
    for &(j, residual) in &residuals {
        let rhs = lemma1_rhs_from_blocks(&norms, u_ll, j, q_prime, cfg.m_shift);
        let mut params = case.params().to_vec();
        params.push(("j", j as f64));
        records.push(CaseRecord::new(&params, residual, rhs));
        for (slot, &m) in by_m.iter_mut().zip(&cfg.m_sensitivity) {
            let r = lemma1_rhs_from_blocks(&norms, u_ll, j, q_prime, m);
            if r > 0.0 {
                *slot = slot.max(residual / r);
            }
        }
    }
    Ok(CommutatorCase { records, by_m })
}

fn add_resolution_constants(report: &mut VerifyReport, n_list: &[usize]) {
    let mut per_n = Vec::new();
    for &n in n_list {
        let m = report.max_ratio_where(|c| c.param("n") == Some(n as f64));
        report.add_constant(format!("max_ratio[n={n}]"), m, 0.0);
        per_n.push(m);
    }
    let hi = per_n.iter().cloned().fold(0.0, f64::max);
    let lo = per_n.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 && lo.is_finite() {
        hi / lo
    } else {
        0.0
    };
    report.add_constant("resolution_spread", spread, 0.0);
}

/// Ratio study of the commutator bound over randomized multiscale fields.
pub fn commutator_suite(cfg: &VerifySuiteConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let cases = suite_cases(cfg);
    let results: Vec<Result<CommutatorCase>> = par::map(&cases, |c| run_commutator_case(c, cfg));
    let mut report = VerifyReport::new("commutator");
    let mut by_m = vec![0.0f64; cfg.m_sensitivity.len()];
    for result in results {
        let case = result?;
        for record in case.records {
            if record.rhs == 0.0 && record.lhs != 0.0 {
                report.flagged.push(format!(
                    "nonzero residual {:e} with zero bound at {:?}",
                    record.lhs, record.params
                ));
            }
            report.push(record);
        }
        for (slot, v) in by_m.iter_mut().zip(case.by_m) {
            *slot = slot.max(v);
        }
    }
    report.add_constant("C_commutator", report.max_ratio(), 0.0);
    for (&m, v) in cfg.m_sensitivity.iter().zip(by_m) {
        report.add_constant(format!("max_ratio[M={m}]"), v, 0.0);
    }
    add_resolution_constants(&mut report, &cfg.n_list);
    Ok(report)
}

/// `(‖f‖_{LL_{1/q'}}, ‖f‖_{B^{1+2/p}_{p,q}}, ratio)` for a scalar or vector
/// field given by its components.
pub fn embedding_check(
    components: &[SpectralField],
    p: f64,
    q: f64,
    sampler: PairSampler,
    fam: &DyadicFamily,
) -> Result<(f64, f64, f64)> {
    let q_prime = conjugate_exponent(q)?;
    let prm = BesovParams::new(1.0 + 2.0 / p, p, q)?;
    let phys: Vec<_> = components.iter().map(inverse_unchecked).collect();
    let ll = log_lipschitz_norm_vec(&phys, q_prime.recip(), sampler)?;
    let besov = besov_norm_vec(components, prm, fam).total;
    if besov == 0.0 {
        if ll > 0.0 {
            return Err(Error::Parameter(format!(
                "inconsistent norms: LL = {ll:e} with zero Besov norm"
            )));
        }
        return Ok((0.0, 0.0, 0.0));
    }
    Ok((ll, besov, ll / besov))
}

/// Embedding ratios `‖u‖_{LL_{1/q'}} / ‖u‖_{B^{1+2/p}_{p,q}}` for the velocity
/// of every suite field.
pub fn embedding_suite(cfg: &VerifySuiteConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let cases = suite_cases(cfg);
    let results = par::map(&cases, |case| -> Result<CaseRecord> {
        let theta = case.field()?;
        let fam = build_family(theta.grid(), FAMILY_TOLERANCE)?;
        let (u1, u2) = velocity(&theta, case.beta)?;
        let sampler = PairSampler::new(case.seed, cfg.pair_budget);
        let (ll, besov, _) = embedding_check(&[u1, u2], cfg.p, cfg.q, sampler, &fam)?;
        Ok(CaseRecord::new(&case.params(), ll, besov))
    });
    let mut report = VerifyReport::new("embedding");
    for r in results {
        report.push(r?);
    }
    report.add_constant("C_embedding", report.max_ratio(), 0.0);
    add_resolution_constants(&mut report, &cfg.n_list);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinCheck {
    /// `‖u‖_{B²_{2,1}}`.
    pub velocity_norm: f64,
    /// `‖θ‖_{B^{1+β}_{2,1}}`.
    pub scalar_norm: f64,
    pub ratio: f64,
    /// `2^{2j}‖Δ_j u‖ / 2^{j(1+β)}‖Δ_jθ‖` on blocks where `Δ_jθ ≠ 0`.
    pub per_block: Vec<(i32, f64)>,
}

pub fn bernstein_check(
    theta: &SpectralField,
    beta: f64,
    fam: &DyadicFamily,
) -> Result<BernsteinCheck> {
    let (u1, u2) = velocity(theta, beta)?;
    let u_rep = besov_norm_vec(&[u1, u2], BesovParams::new(2.0, 2.0, 1.0)?, fam);
    let t_rep = besov_norm(theta, BesovParams::new(1.0 + beta, 2.0, 1.0)?, fam);
    let per_block = u_rep
        .per_block
        .iter()
        .zip(&t_rep.per_block)
        .filter(|(_, &(_, t))| t > 0.0)
        .map(|(&(j, u), &(_, t))| (j, u / t))
        .collect();
    let ratio = if t_rep.total > 0.0 {
        u_rep.total / t_rep.total
    } else {
        0.0
    };
    Ok(BernsteinCheck {
        velocity_norm: u_rep.total,
        scalar_norm: t_rep.total,
        ratio,
        per_block,
    })
}

pub fn bernstein_suite(cfg: &VerifySuiteConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let cases = suite_cases(cfg);
    let results = par::map(&cases, |case| -> Result<(CaseRecord, f64, f64)> {
        let theta = case.field()?;
        let fam = build_family(theta.grid(), FAMILY_TOLERANCE)?;
        let chk = bernstein_check(&theta, case.beta, &fam)?;
        let hi = chk.per_block.iter().fold(0.0f64, |m, &(_, r)| m.max(r));
        let lo = chk
            .per_block
            .iter()
            .fold(f64::INFINITY, |m, &(_, r)| m.min(r));
        Ok((
            CaseRecord::new(&case.params(), chk.velocity_norm, chk.scalar_norm),
            hi,
            lo,
        ))
    });
    let mut report = VerifyReport::new("bernstein");
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for r in results {
        let (record, h, l) = r?;
        hi = hi.max(h);
        lo = lo.min(l);
        report.push(record);
    }
    report.add_constant("C_bernstein", report.max_ratio(), 0.0);
    report.add_constant("max_block_ratio", hi, 0.0);
    report.add_constant(
        "min_block_ratio",
        if lo.is_finite() { lo } else { 0.0 },
        0.0,
    );
    add_resolution_constants(&mut report, &cfg.n_list);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    /// Largest interior `N'/N²` (0 if the series never grows).
    pub c_fit: f64,
    /// Spread of the interior rates relative to `c_fit`; 0 for an exact
    /// `N' = C N²` series. Equals the largest `|N'/N²|` when `c_fit = 0`.
    pub residual: f64,
    /// `N'/N²` at every sample (one-sided second-order stencils at the ends).
    pub rates: Vec<f64>,
}

fn derivatives(series: &[(f64, f64)]) -> Vec<f64> {
    let len = series.len();
    let t = |i: usize| series[i].0;
    let y = |i: usize| series[i].1;
    let three_point = |i0: usize, i1: usize, i2: usize, at: f64| {
        // Derivative at `at` of the quadratic through three samples.
        let (a, b, c) = (t(i0), t(i1), t(i2));
        y(i0) * ((at - b) + (at - c)) / ((a - b) * (a - c))
            + y(i1) * ((at - a) + (at - c)) / ((b - a) * (b - c))
            + y(i2) * ((at - a) + (at - b)) / ((c - a) * (c - b))
    };
    (0..len)
        .map(|i| match i {
            0 => three_point(0, 1, 2, t(0)),
            i if i == len - 1 => three_point(len - 3, len - 2, len - 1, t(i)),
            i => three_point(i - 1, i, i + 1, t(i)),
        })
        .collect()
}

/// Fits the constant of `N' ≤ C N²` to a Besov-norm time series.
pub fn growth_fit(series: &[(f64, f64)]) -> Result<GrowthFit> {
    if series.len() < 3 {
        return Err(Error::Parameter(format!(
            "growth fit needs at least 3 samples, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Parameter(
            "sample times must be strictly increasing".into(),
        ));
    }
    // N'/N² = −(1/N)', and 1/N is linear in t when N' = C N² holds with
    // equality, so differencing 1/N is exact on the extremal series.
    let rates: Vec<f64> = if series.iter().all(|&(_, n)| n > 0.0) {
        let inverse: Vec<(f64, f64)> = series.iter().map(|&(t, n)| (t, 1.0 / n)).collect();
        derivatives(&inverse).iter().map(|d| -d).collect()
    } else {
        derivatives(series)
            .iter()
            .zip(series)
            .map(|(d, &(_, n))| if n > 0.0 { d / (n * n) } else { 0.0 })
            .collect()
    };
    let interior = &rates[1..rates.len() - 1];
    let hi = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = interior.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_fit = hi.max(0.0);
    let residual = if c_fit > 0.0 {
        (hi - lo) / c_fit
    } else {
        interior.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    };
    Ok(GrowthFit {
        c_fit,
        residual,
        rates,
    })
}

/// `N(0) exp(c ∫₀ᵗ N)` at every sample time (trapezoidal integral).
pub fn gronwall_envelope(series: &[(f64, f64)], c: f64) -> Vec<f64> {
    let Some(&(_, n0)) = series.first() else {
        return Vec::new();
    };
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(series.len());
    out.push(n0);
    for w in series.windows(2) {
        integral += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
        out.push(n0 * (c * integral).exp());
    }
    out
}

/// True when every sample satisfies `N ≤ (1 + tolerance) · envelope`.
pub fn envelope_dominates(series: &[(f64, f64)], c: f64, tolerance: f64) -> bool {
    gronwall_envelope(series, c)
        .iter()
        .zip(series)
        .all(|(env, &(_, n))| n <= (1.0 + tolerance) * env)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingOptions {
    pub cfl: f64,
    /// Time cap for `λ = 1`; a run with amplitude `λ` stops at `max_time/λ`.
    pub max_time: f64,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            cfl: ModelParams::DEFAULT_CFL,
            max_time: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoublingRun {
    /// `(t, ‖θ(t)‖_{B^{1+β}_{2,1}})` after every step.
    pub series: Vec<(f64, f64)>,
    /// First time the norm reaches twice its initial value (linear
    /// interpolation between samples); `None` if never reached.
    pub t_double: Option<f64>,
    pub outcome: Outcome,
}

/// Evolves `theta0` with an uncapped CFL step until its `B^{1+β}_{2,1}` norm
/// doubles, resolution is exhausted, or `max_time` passes.
pub fn doubling_run(
    theta0: &SpectralField,
    beta: f64,
    cfl: f64,
    max_time: f64,
) -> Result<DoublingRun> {
    let fam = build_family(theta0.grid(), FAMILY_TOLERANCE)?;
    let prm = BesovParams::new(1.0 + beta, 2.0, 1.0)?;
    let n0 = besov_norm(theta0, prm, &fam).total;
    if n0 == 0.0 {
        return Ok(DoublingRun {
            series: vec![(0.0, 0.0)],
            t_double: None,
            outcome: Outcome::Completed,
        });
    }
    let params = ModelParams::new(beta, cfl, f64::INFINITY)?;
    let state = SimState::new(theta0.clone(), params)?;
    let mut series: Vec<(f64, f64)> = Vec::new();
    let traj = integrate(state, max_time, |_, s| {
        let n = besov_norm(&s.theta, prm, &fam).total;
        series.push((s.t, n));
        if n >= 2.0 * n0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    let t_double = match (traj.outcome, series.len()) {
        (Outcome::Stopped, len) if len >= 2 => {
            let (t0, a) = series[len - 2];
            let (t1, b) = series[len - 1];
            Some(t0 + (2.0 * n0 - a) * (t1 - t0) / (b - a))
        }
        _ => None,
    };
    Ok(DoublingRun {
        series,
        t_double,
        outcome: traj.outcome,
    })
}

/// Doubling times of `λθ₀` for each `λ`. The flow satisfies
/// `θ_λ(x, t) = λ θ(x, λt)`, so `λ · t_double(λ)` must be constant and the
/// log-log slope of `t_double` against `λ` must be −1.
pub fn scaling_experiment(
    theta0: &SpectralField,
    beta: f64,
    lambdas: &[f64],
    opts: ScalingOptions,
) -> Result<VerifyReport> {
    if lambdas.len() < 2 || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::config(
            "lambdas",
            "need at least two positive values",
        ));
    }
    let runs = par::map(lambdas, |&lambda| {
        doubling_run(
            &theta0.scaled(lambda),
            beta,
            opts.cfl,
            opts.max_time / lambda,
        )
    });
    let mut report = VerifyReport::new("scaling");
    let mut fit = Vec::new();
    for (&lambda, run) in lambdas.iter().zip(runs) {
        let run = run?;
        match run.t_double {
            Some(t) => {
                report.push(CaseRecord::new(&[("lambda", lambda)], t, 1.0 / lambda));
                fit.push((lambda.ln(), t.ln()));
            }
            None => report.flagged.push(format!(
                "lambda = {lambda}: no doubling ({:?} at t = {})",
                run.outcome,
                run.series.last().map_or(0.0, |s| s.0)
            )),
        }
    }
    if !report.cases.is_empty() {
        let mean = report.cases.iter().map(|c| c.ratio).sum::<f64>() / report.cases.len() as f64;
        let dev = report
            .cases
            .iter()
            .fold(0.0f64, |m, c| m.max((c.ratio / mean - 1.0).abs()));
        report.add_constant("lambda_t_double", mean, dev);
    }
    if fit.len() >= 2 {
        let k = fit.len() as f64;
        let mx = fit.iter().map(|p| p.0).sum::<f64>() / k;
        let my = fit.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        report.add_constant("loglog_slope", slope, (slope + 1.0).abs());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, Complex64, PhysicalField};

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n).unwrap()
    }

    fn family(g: Grid2D) -> DyadicFamily {
        build_family(g, FAMILY_TOLERANCE).unwrap()
    }

    fn cosine(g: Grid2D, k: i64) -> SpectralField {
        let mut f = SpectralField::zeros(g);
        f.set_coeff(k, 0, Complex64::new(0.5, 0.0));
        f.set_coeff(-k, 0, Complex64::new(0.5, 0.0));
        f
    }

    #[test]
    fn residual_of_zero_is_zero() {
        let g = grid(32);
        let fam = family(g);
        for j in fam.blocks() {
            assert_eq!(
                commutator_residual(&SpectralField::zeros(g), 1.5, j, 2.0, &fam).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn residual_is_quadratic_in_amplitude() {
        let g = grid(32);
        let fam = family(g);
        let theta = random_spectrum(g, 3.0, 10, 1.0, 4);
        let a = commutator_residuals(&theta, 1.5, 2.0, &fam).unwrap();
        let b = commutator_residuals(&theta.scaled(2.0), 1.5, 2.0, &fam).unwrap();
        for ((_, x), (_, y)) in a.iter().zip(&b) {
            assert!((y - 4.0 * x).abs() <= 1e-12 * y.max(1e-300));
        }
    }

    /// Exact Fourier coefficients of a product by direct convolution sums.
    fn convolve(
        a: &SpectralField,
        b: &SpectralField,
    ) -> std::collections::HashMap<(i64, i64), Complex64> {
        let g = a.grid();
        let mut out = std::collections::HashMap::new();
        for (ia, ca) in a.coeffs().iter().enumerate() {
            if ca.norm() == 0.0 {
                continue;
            }
            for (ib, cb) in b.coeffs().iter().enumerate() {
                if cb.norm() == 0.0 {
                    continue;
                }
                let (a1, a2) = g.wave_vector(ia);
                let (b1, b2) = g.wave_vector(ib);
                *out.entry((a1 + b1, a2 + b2)).or_default() += ca * cb;
            }
        }
        out
    }

    /// Commutator residual in L² assembled from direct convolutions and
    /// closed-form multipliers, without FFT-based products.
    fn residual_oracle(theta: &SpectralField, beta: f64, j: i32, fam: &DyadicFamily) -> f64 {
        let (u1, u2) = velocity(theta, beta).unwrap();
        let (t1, t2) = gradient(theta);
        let (du1, du2) = (s_j(&u1, j - 1, fam), s_j(&u2, j - 1, fam));
        let (d1, d2) = gradient(&delta_j(theta, j, fam));
        let mut total: std::collections::HashMap<(i64, i64), Complex64> = Default::default();
        for (x, y, sign, project) in [
            (&du1, &d1, 1.0, false),
            (&du2, &d2, 1.0, false),
            (&u1, &t1, -1.0, true),
            (&u2, &t2, -1.0, true),
        ] {
            for ((k1, k2), c) in convolve(x, y) {
                let w = if project {
                    fam.block_weight(j, ((k1 * k1 + k2 * k2) as f64).sqrt())
                } else {
                    1.0
                };
                *total.entry((k1, k2)).or_default() += c * (sign * w);
            }
        }
        2.0 * std::f64::consts::PI * total.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn residual_matches_direct_convolution_assembly() {
        let g = grid(32);
        let fam = family(g);
        let theta = forward_transform(&PhysicalField::from_fn(g, |x1, _| x1.cos()));
        let mut theta = theta;
        theta.coeffs_mut()[0] = Complex64::default();
        for (j, v) in commutator_residuals(&theta, 1.5, 2.0, &fam).unwrap() {
            let oracle = residual_oracle(&theta, 1.5, j, &fam);
            assert!((v - oracle).abs() <= 1e-10, "j={j}: {v} vs {oracle}");
        }

        let g = grid(16);
        let fam = family(g);
        let theta = random_spectrum(g, 2.0, 5, 1.0, 11);
        for (j, v) in commutator_residuals(&theta, 1.5, 2.0, &fam).unwrap() {
            let oracle = residual_oracle(&theta, 1.5, j, &fam);
            assert!(
                (v - oracle).abs() <= 1e-10 * oracle.max(1.0),
                "j={j}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn lemma_rhs_basics() {
        let g = grid(32);
        let fam = family(g);
        let zero = SpectralField::zeros(g);
        assert_eq!(
            lemma1_rhs(&zero, 3.0, 1, 2.0, f64::INFINITY, 4, &fam).unwrap(),
            0.0
        );

        // |ξ| = 6 lies only in the support of Δ_2.
        let theta = cosine(g, 6);
        let norms = block_norms(&theta, 2.0, &fam).unwrap();
        let d2 = norms.iter().find(|b| b.0 == 2).unwrap().1;
        assert!(norms.iter().all(|&(j, v)| j == 2 || v == 0.0));
        for q_prime in [f64::INFINITY, 2.0, 1.0] {
            let expected = 0.7
                * 0.25
                * if q_prime.is_infinite() {
                    1.0
                } else {
                    3f64.powf(1.0 / q_prime)
                }
                * d2;
            let got = lemma1_rhs(&theta, 0.7, 0, 2.0, q_prime, 4, &fam).unwrap();
            assert!((got - expected).abs() <= 1e-15 * expected);
        }
    }

    #[test]
    fn lemma_rhs_grows_with_width() {
        let g = grid(64);
        let fam = family(g);
        let theta = random_spectrum(g, 3.0, 21, 1.0, 2);
        let norms = block_norms(&theta, 2.0, &fam).unwrap();
        for j in fam.blocks() {
            let r4 = lemma1_rhs_from_blocks(&norms, 1.0, j, f64::INFINITY, 4);
            let r8 = lemma1_rhs_from_blocks(&norms, 1.0, j, f64::INFINITY, 8);
            assert!(r8 >= r4);
        }
    }

    #[test]
    fn zero_suite_is_empty() {
        let cfg = VerifySuiteConfig {
            seeds: vec![],
            ..VerifySuiteConfig::default()
        };
        let r = commutator_suite(&cfg).unwrap();
        assert!(r.cases.is_empty());
        assert_eq!(r.max_ratio(), 0.0);
    }

    #[test]
    fn embedding_basics() {
        let g = grid(64);
        let fam = family(g);
        let s = PairSampler::new(1, 4096);
        assert_eq!(
            embedding_check(&[SpectralField::zeros(g)], 2.0, 1.0, s, &fam).unwrap(),
            (0.0, 0.0, 0.0)
        );
        let f = cosine(g, 1);
        let (ll, besov, ratio) =
            embedding_check(std::slice::from_ref(&f), 2.0, 1.0, s, &fam).unwrap();
        assert!(ll > 1.0 && besov > 0.0 && ratio > 0.0);
        let (_, _, scaled) = embedding_check(&[f.scaled(-4.0)], 2.0, 1.0, s, &fam).unwrap();
        assert!((scaled - ratio).abs() <= 1e-14 * ratio);
    }

    #[test]
    fn bernstein_single_mode_block_ratios() {
        let g = grid(64);
        let fam = family(g);
        assert_eq!(
            bernstein_check(&SpectralField::zeros(g), 1.5, &fam)
                .unwrap()
                .ratio,
            0.0
        );
        for k in [1, 3, 5, 12] {
            for beta in [1.25, 1.5, 1.75] {
                let chk = bernstein_check(&cosine(g, k), beta, &fam).unwrap();
                for &(j, r) in &chk.per_block {
                    let expected = (k as f64 * (-j as f64).exp2()).powf(beta - 1.0);
                    assert!((r - expected).abs() <= 1e-12 * expected, "k={k} j={j}");
                    assert!(r <= (8.0f64 / 3.0).powf(beta - 1.0) + 1e-6);
                    assert!(r >= 0.75f64.powf(beta - 1.0) - 1e-6);
                }
            }
        }
    }

    #[test]
    fn growth_fit_on_closed_form_series() {
        let (c, n0) = (0.7, 1.3);
        let t_end = 0.5 / (c * n0);
        let series: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = t_end * i as f64 / 19.0;
                (t, n0 / (1.0 - c * n0 * t))
            })
            .collect();
        let fit = growth_fit(&series).unwrap();
        assert!((fit.c_fit - c).abs() <= 0.02 * c, "{}", fit.c_fit);
        assert!(envelope_dominates(&series, fit.c_fit, 0.05));
    }

    #[test]
    fn growth_fit_on_constant_and_bad_series() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, 2.0)).collect();
        let fit = growth_fit(&flat).unwrap();
        assert!(fit.c_fit <= 1e-14);
        assert!(growth_fit(&flat[..2]).is_err());
        assert!(growth_fit(&[(0.0, 1.0), (0.0, 1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn growth_fit_is_scale_invariant() {
        let base: Vec<(f64, f64)> = (0..15)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, 1.0 + t * t + 0.3 * t)
            })
            .collect();
        let lambda = 4.0;
        let scaled: Vec<(f64, f64)> = base
            .iter()
            .map(|&(t, n)| (t / lambda, lambda * n))
            .collect();
        let a = growth_fit(&base).unwrap().c_fit;
        let b = growth_fit(&scaled).unwrap().c_fit;
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn zero_initial_data_never_doubles() {
        let g = grid(32);
        let r = scaling_experiment(
            &SpectralField::zeros(g),
            1.5,
            &[1.0, 2.0],
            ScalingOptions::default(),
        )
        .unwrap();
        assert!(r.cases.is_empty());
        assert_eq!(r.flagged.len(), 2);
        assert!(scaling_experiment(
            &SpectralField::zeros(g),
            1.5,
            &[1.0],
            ScalingOptions::default()
        )
        .is_err());
    }
}
