//! Mode dispatch and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use super::config::{Mode, RunConfig};
use super::initial::{generate_initial, InitialSpec};
use super::snapshot::{read_snapshot, write_atomic, write_snapshot, SnapshotMeta};
use crate::active_scalar::{advect_rhs_with_tail, integrate, velocity, Outcome, SimState};
use crate::error::{Error, Result};
use crate::function_spaces::{
    besov_norm, log_lipschitz_norm_vec, lp_norm, BesovParams, PairSampler,
};
use crate::littlewood_paley::build_family;
use crate::spectral::{forward_transform, inverse_unchecked};
use crate::verifier::{
    bernstein_suite, commutator_suite, embedding_suite, scaling_experiment, VerifyReport,
    FAMILY_TOLERANCE,
};

pub const SIMULATE_COLUMNS: [&str; 7] =
    ["t", "l2", "linf", "besov", "ll0_u", "dt", "tail_fraction"];

/// Fixed 17-significant-digit rendering used for every CSV number.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_line(cells: &[f64]) -> String {
    let mut line = cells
        .iter()
        .map(|&v| fmt_real(v))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    ResolutionExhausted,
    BlowUp,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::ResolutionExhausted => 3,
            RunStatus::BlowUp => 4,
        }
    }
}

/// Exit code for a run that failed with an error.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 2,
        _ => 1,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub status: RunStatus,
    pub message: String,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    match cfg.mode {
        Mode::Simulate => simulate(cfg),
        Mode::Norms => norms(cfg),
        Mode::VerifyCommutator => write_report(cfg, &commutator_suite(&cfg.suite())?),
        Mode::VerifyEmbedding => write_report(cfg, &embedding_suite(&cfg.suite())?),
        Mode::VerifyBernstein => write_report(cfg, &bernstein_suite(&cfg.suite())?),
        Mode::Scaling => {
            let theta0 = generate_initial(&cfg.initial, cfg.grid()?)?;
            let report =
                scaling_experiment(&theta0, cfg.beta()?, &cfg.lambdas, cfg.scaling_options())?;
            write_report(cfg, &report)
        }
    }
}

fn write_text(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    files.push(path.to_path_buf());
    Ok(())
}

fn simulate(cfg: &RunConfig) -> Result<RunSummary> {
    let grid = cfg.grid()?;
    let params = cfg.model_params()?;
    let beta = params.beta;
    let t_end = cfg
        .t_end
        .ok_or_else(|| Error::config("t_end", "required for simulate"))?;
    let seed = match cfg.initial {
        InitialSpec::RandomSpectrum { seed, .. } | InitialSpec::GaussianBumps { seed, .. } => seed,
        InitialSpec::Shear { .. } => 0,
    };
    let fam = build_family(grid, FAMILY_TOLERANCE)?;
    let besov = BesovParams::new(1.0 + beta, 2.0, 1.0)?;
    let sampler = PairSampler::new(seed, cfg.pair_budget);
    let state = SimState::new(generate_initial(&cfg.initial, grid)?, params)?;

    let mut csv = SIMULATE_COLUMNS.join(",") + "\n";
    let mut files = Vec::new();
    let mut failure: Option<Error> = None;
    let mut prev_t = 0.0;
    let mut record = |step: usize, s: &SimState| -> Result<()> {
        let dt = s.t - prev_t;
        prev_t = s.t;
        if !step.is_multiple_of(cfg.save_every) {
            return Ok(());
        }
        let phys = inverse_unchecked(&s.theta);
        let (u1, u2) = velocity(&s.theta, beta)?;
        let u = [inverse_unchecked(&u1), inverse_unchecked(&u2)];
        let (_, tail) = advect_rhs_with_tail(&s.theta, beta)?;
        csv.push_str(&csv_line(&[
            s.t,
            lp_norm(&phys, 2.0)?,
            phys.max_abs(),
            besov_norm(&s.theta, besov, &fam).total,
            log_lipschitz_norm_vec(&u, 0.0, sampler)?,
            dt,
            tail,
        ]));
        let path = cfg.output_dir.join(format!("snapshot_{step:06}.lps"));
        write_snapshot(&phys, SnapshotMeta { beta, time: s.t }, &path)?;
        files.push(path);
        Ok(())
    };
    let traj = integrate(state, t_end, |step, s| match record(step, s) {
        Ok(()) => ControlFlow::Continue(()),
        Err(e) => {
            failure = Some(e);
            ControlFlow::Break(())
        }
    })?;

    let final_path = cfg.output_dir.join("final.lps");
    let final_meta = SnapshotMeta {
        beta,
        time: traj.state.t,
    };
    let series_path = cfg.output_dir.join("timeseries.csv");
    // Partial outputs are written before any error is reported.
    write_snapshot(
        &inverse_unchecked(&traj.state.theta),
        final_meta,
        &final_path,
    )?;
    files.push(final_path);
    write_text(&series_path, &csv, &mut files)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (status, message) = match traj.outcome {
        Outcome::Completed | Outcome::Stopped => (
            RunStatus::Success,
            format!("completed {} steps, t = {}", traj.steps, traj.state.t),
        ),
        Outcome::ResolutionExhausted => (
            RunStatus::ResolutionExhausted,
            format!(
                "resolution exhausted after {} steps at t = {}",
                traj.steps, traj.state.t
            ),
        ),
        Outcome::BlowUp => (
            RunStatus::BlowUp,
            format!(
                "non-finite values after {} steps at t = {}",
                traj.steps, traj.state.t
            ),
        ),
    };
    Ok(RunSummary {
        status,
        message,
        files,
    })
}

fn norms(cfg: &RunConfig) -> Result<RunSummary> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::config("input", "required for norms"))?;
    let snap = read_snapshot(input)?;
    let theta = forward_transform(&snap.field);
    let fam = build_family(theta.grid(), FAMILY_TOLERANCE)?;
    let s = cfg.s.unwrap_or(1.0 + snap.meta.beta);
    let report = besov_norm(&theta, BesovParams::new(s, cfg.p, cfg.q)?, &fam);

    let mut csv = String::from("j,weighted_block_norm\n");
    for &(j, v) in &report.per_block {
        csv.push_str(&format!("{j},{}\n", fmt_real(v)));
    }
    let mut text = String::new();
    let _ = writeln!(text, "input  {}", input.display());
    let _ = writeln!(text, "time   {}", fmt_real(snap.meta.time));
    let _ = writeln!(text, "beta   {}", fmt_real(snap.meta.beta));
    let _ = writeln!(
        text,
        "besov(s={s}, p={}, q={}) {}",
        cfg.p,
        cfg.q,
        fmt_real(report.total)
    );
    let _ = writeln!(text, "l2     {}", fmt_real(lp_norm(&snap.field, 2.0)?));
    let _ = writeln!(text, "linf   {}", fmt_real(snap.field.max_abs()));

    let mut files = Vec::new();
    write_text(&cfg.output_dir.join("norms.csv"), &csv, &mut files)?;
    write_text(&cfg.output_dir.join("norms.txt"), &text, &mut files)?;
    Ok(RunSummary {
        status: RunStatus::Success,
        message: format!("besov norm {}", fmt_real(report.total)),
        files,
    })
}

/// CSV of all cases, degenerate ones included.
pub fn report_csv(report: &VerifyReport) -> String {
    let mut keys: Vec<&str> = Vec::new();
    for c in report.cases.iter().chain(&report.degenerate) {
        for (k, _) in &c.params {
            if !keys.contains(&k.as_str()) {
                keys.push(k);
            }
        }
    }
    let mut out = keys.join(",");
    if !keys.is_empty() {
        out.push(',');
    }
    out.push_str("lhs,rhs,ratio\n");
    for c in report.cases.iter().chain(&report.degenerate) {
        let mut cells: Vec<f64> = keys
            .iter()
            .map(|k| c.param(k).unwrap_or(f64::NAN))
            .collect();
        cells.extend([c.lhs, c.rhs, c.ratio]);
        out.push_str(&csv_line(&cells));
    }
    out
}

fn write_report(cfg: &RunConfig, report: &VerifyReport) -> Result<RunSummary> {
    let mut files = Vec::new();
    let stem = cfg.mode.as_str();
    write_text(
        &cfg.output_dir.join(format!("{stem}.csv")),
        &report_csv(report),
        &mut files,
    )?;
    let summary = report.summary();
    write_text(
        &cfg.output_dir.join(format!("{stem}_summary.txt")),
        &summary,
        &mut files,
    )?;
    Ok(RunSummary {
        status: RunStatus::Success,
        message: summary,
        files,
    })
}
