//! Constitutive law `u = −∇⊥(−Δ)^{−1+β/2}θ`, the dealiased advection
//! right-hand side, and RK4 time stepping of `∂ₜθ + u·∇θ = 0`.

use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::spectral::{
    apply_vector_symbol, dealias, forward_transform, gradient, inverse_unchecked, Complex64,
    PhysicalField, SpectralField, Symbol, VectorSymbol,
};

/// Largest mean coefficient accepted as "mean-zero".
pub const GAUGE_TOLERANCE: f64 = 1e-12;
/// Tail fraction above which the run reports exhausted resolution.
pub const TAIL_LIMIT: f64 = 0.1;
const VELOCITY_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
    pub cfl: f64,
    pub dt_max: f64,
}

impl ModelParams {
    pub const DEFAULT_CFL: f64 = 0.5;

    pub fn new(beta: f64, cfl: f64, dt_max: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&beta) {
            return Err(Error::config(
                "beta",
                format!("must lie in [0, 2], got {beta}"),
            ));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config(
                "cfl",
                format!("must lie in (0, 1], got {cfl}"),
            ));
        }
        if !(dt_max > 0.0) {
            return Err(Error::config(
                "dt_max",
                format!("must be positive, got {dt_max}"),
            ));
        }
        Ok(Self { beta, cfl, dt_max })
    }
}

fn check_gauge(theta: &SpectralField) -> Result<()> {
    let mean = theta.mean().norm();
    if mean > GAUGE_TOLERANCE {
        Err(Error::Gauge(mean))
    } else {
        Ok(())
    }
}

/// `û(ξ) = −iξ⊥|ξ|^{β−2}θ̂(ξ)` with `ξ⊥ = (−ξ₂, ξ₁)`, zero at the origin and on
/// the Nyquist lines.
pub fn velocity_symbol(beta: f64) -> VectorSymbol {
    let order = beta - 2.0;
    let component = move |k: i64, k1: i64, k2: i64, n: usize, sign: f64| {
        if k == -((n / 2) as i64) {
            return Complex64::default();
        }
        let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
        Complex64::new(0.0, sign * k as f64 * r.powf(order))
    };
    VectorSymbol(
        Symbol::new(Complex64::default(), move |k1, k2, n| {
            component(k2, k1, k2, n, 1.0)
        }),
        Symbol::new(Complex64::default(), move |k1, k2, n| {
            component(k1, k1, k2, n, -1.0)
        }),
    )
}

/// Velocity `(û₁, û₂)` of a mean-zero scalar.
pub fn velocity(theta: &SpectralField, beta: f64) -> Result<(SpectralField, SpectralField)> {
    check_gauge(theta)?;
    apply_vector_symbol(theta, &velocity_symbol(beta))
}

/// Stream function solving `Δψ = Λ^β θ`: `ψ̂ = −|ξ|^{β−2}θ̂`.
pub fn streamfunction(theta: &SpectralField, beta: f64) -> Result<SpectralField> {
    check_gauge(theta)?;
    let grid = theta.grid();
    let mut psi = theta.clone();
    for (idx, c) in psi.coeffs_mut().iter_mut().enumerate() {
        let r = grid.radius(idx);
        *c = if r == 0.0 {
            Complex64::default()
        } else {
            -*c * r.powf(beta - 2.0)
        };
    }
    Ok(psi)
}

/// `∇⊥ψ = (−∂₂ψ, ∂₁ψ)`.
pub fn perp_gradient(psi: &SpectralField) -> (SpectralField, SpectralField) {
    let (d1, d2) = gradient(psi);
    (d2.scaled(-1.0), d1)
}

/// `−P(u·∇θ)` together with the fraction of the grid product's L² norm that
/// the 2/3 truncation discards.
pub fn advect_rhs_with_tail(theta: &SpectralField, beta: f64) -> Result<(SpectralField, f64)> {
    let theta = dealias(theta);
    let (u1, u2) = velocity(&theta, beta)?;
    let (g1, g2) = gradient(&theta);
    let [u1, u2, g1, g2] = [&u1, &u2, &g1, &g2].map(inverse_unchecked);
    let values: Vec<f64> = u1
        .values()
        .iter()
        .zip(u2.values())
        .zip(g1.values().iter().zip(g2.values()))
        .map(|((a1, a2), (b1, b2))| a1 * b1 + a2 * b2)
        .collect();
    let product = forward_transform(&PhysicalField::new(theta.grid(), values)?);
    let kept = dealias(&product);
    let total = product.l2_norm();
    let tail = if total > 0.0 {
        (&product - &kept).l2_norm() / total
    } else {
        0.0
    };
    let mut rhs = kept.scaled(-1.0);
    rhs.coeffs_mut()[0] = Complex64::default();
    Ok((rhs, tail))
}

/// `−u·∇θ`, pseudo-spectral with 2/3 dealiasing.
pub fn advect_rhs(theta: &SpectralField, beta: f64) -> Result<SpectralField> {
    advect_rhs_with_tail(theta, beta).map(|(rhs, _)| rhs)
}

/// `max_x |u(x)|` on the grid.
pub fn max_speed(theta: &SpectralField, beta: f64) -> Result<f64> {
    let (u1, u2) = velocity(theta, beta)?;
    let (p1, p2) = (inverse_unchecked(&u1), inverse_unchecked(&u2));
    Ok(p1
        .values()
        .iter()
        .zip(p2.values())
        .fold(0.0, |m, (a, b)| m.max(a.hypot(*b))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub theta: SpectralField,
    pub t: f64,
    pub params: ModelParams,
}

impl SimState {
    /// Wraps a real, mean-zero scalar; the mean coefficient is set to exactly 0.
    pub fn new(mut theta: SpectralField, params: ModelParams) -> Result<Self> {
        check_gauge(&theta)?;
        let asym = theta.conjugate_asymmetry();
        if asym > crate::spectral::SYMMETRY_TOLERANCE * theta.max_abs() {
            return Err(Error::data(
                0,
                format!("initial scalar is not real: asymmetry {asym:e}"),
            ));
        }
        theta.coeffs_mut()[0] = Complex64::default();
        Ok(Self {
            theta,
            t: 0.0,
            params,
        })
    }
}

/// `min(dt_max, cfl·h / max(‖u‖_∞, 1e−14))`.
pub fn adaptive_dt(state: &SimState) -> Result<f64> {
    let speed = max_speed(&state.theta, state.params.beta)?;
    let h = state.theta.grid().spacing();
    Ok(state
        .params
        .dt_max
        .min(state.params.cfl * h / speed.max(VELOCITY_FLOOR)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub state: SimState,
    /// Tail fraction of the product at the start of the step.
    pub tail_fraction: f64,
}

/// One classical RK4 step; also reports the truncated-tail fraction of the
/// first stage.
pub fn step_rk4_report(state: &SimState, dt: f64) -> Result<StepReport> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let beta = state.params.beta;
    let theta = &state.theta;
    let (k1, tail) = advect_rhs_with_tail(theta, beta)?;
    let k2 = advect_rhs(&theta.axpy(0.5 * dt, &k1), beta)?;
    let k3 = advect_rhs(&theta.axpy(0.5 * dt, &k2), beta)?;
    let k4 = advect_rhs(&theta.axpy(dt, &k3), beta)?;
    let sixth = dt / 6.0;
    let coeffs: Vec<Complex64> = theta
        .coeffs()
        .iter()
        .zip(k1.coeffs())
        .zip(k2.coeffs().iter().zip(k3.coeffs()))
        .zip(k4.coeffs())
        .map(|(((y, a), (b, c)), d)| y + (a + (b + c) * 2.0 + d) * sixth)
        .collect();
    let mut next = SpectralField::new(theta.grid(), coeffs)?;
    next.coeffs_mut()[0] = Complex64::default();
    let t = state.t + dt;
    if next
        .coeffs()
        .iter()
        .any(|c| !(c.re.is_finite() && c.im.is_finite()))
    {
        return Err(Error::BlowUp { t });
    }
    Ok(StepReport {
        state: SimState {
            theta: next,
            t,
            params: state.params,
        },
        tail_fraction: tail,
    })
}

pub fn step_rk4(state: &SimState, dt: f64) -> Result<SimState> {
    step_rk4_report(state, dt).map(|r| r.state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Reached the requested end time.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// The truncated tail exceeded [`TAIL_LIMIT`]; the last accepted state is kept.
    ResolutionExhausted,
    /// Non-finite values appeared; the last finite state is kept.
    BlowUp,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub outcome: Outcome,
    pub state: SimState,
    pub steps: usize,
}

/// Advances with CFL-adaptive steps until `t_end`. `observe(step, state)` is
/// called for the initial state and after every accepted step. A step whose
/// first stage shows a tail fraction above [`TAIL_LIMIT`] is not taken.
pub fn integrate<F>(initial: SimState, t_end: f64, mut observe: F) -> Result<Trajectory>
where
    F: FnMut(usize, &SimState) -> ControlFlow<()>,
{
    let mut state = initial;
    let mut steps = 0;
    if observe(0, &state).is_break() {
        return Ok(Trajectory {
            outcome: Outcome::Stopped,
            state,
            steps,
        });
    }
    // Relative slack so round-off in accumulated time does not add a sliver step.
    while state.t < t_end * (1.0 - 1e-14) {
        let dt = adaptive_dt(&state)?.min(t_end - state.t);
        let report = match step_rk4_report(&state, dt) {
            Ok(r) => r,
            Err(Error::BlowUp { .. }) => {
                return Ok(Trajectory {
                    outcome: Outcome::BlowUp,
                    state,
                    steps,
                })
            }
            Err(e) => return Err(e),
        };
        if report.tail_fraction > TAIL_LIMIT {
            return Ok(Trajectory {
                outcome: Outcome::ResolutionExhausted,
                state,
                steps,
            });
        }
        state = report.state;
        steps += 1;
        if observe(steps, &state).is_break() {
            return Ok(Trajectory {
                outcome: Outcome::Stopped,
                state,
                steps,
            });
        }
    }
    Ok(Trajectory {
        outcome: Outcome::Completed,
        state,
        steps,
    })
}
