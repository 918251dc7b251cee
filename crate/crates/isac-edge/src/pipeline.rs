//! End-to-end solve and evaluation: per-task beamforming, time allocation,
//! realized sample counts and errors, the sequential sensing-then-upload
//! baseline, the closed-form gain analysis, and parameter sweeps.

use serde::Serialize;

use crate::beamform::{solve_beamforming, BeamformStatus, BeamformerPair};
use crate::channels::ChannelSet;
use crate::error::{Error, Result};
use crate::model::{
    classification_error, quality_gate, rate, sample_budget, ComplexVector, SystemConfig,
};
use crate::timealloc::{solve_time_allocation, Binding, RateProfile};

/// Which resource limits the solved schedule across all phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    SensingDominant,
    CommDominant,
    Mixed,
}

/// One solved phase: beamformers, duration, link quality and realized yield.
#[derive(Clone, Debug, Serialize)]
pub struct TaskPhase {
    pub task: usize,
    pub beamformer: BeamformerPair,
    pub tau_s: f64,
    pub sinr_com: f64,
    pub sinr_sen: f64,
    /// Realized integer sample count, after the floor.
    pub samples: u64,
    /// Realized classification error at `samples`.
    pub error: f64,
    pub binding: Binding,
}

/// The full solved schedule.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseSolution {
    pub phases: Vec<TaskPhase>,
    /// Equalized pre-floor error level.
    pub mu_star: f64,
    pub total_time_s: f64,
    /// Worst realized (post-floor) error.
    pub max_error: f64,
}

/// The sequential baseline's per-sample economics: sense for `t_S`, then
/// upload at the full-power interference-free MRC rate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConventionalPolicy {
    /// `log2(1 + P ||h||^2 / sigma^2)`, bits/s/Hz.
    pub rate_bits_per_hz: f64,
    /// `t_S + D / (B R)`, seconds per sample.
    pub sample_cost_s: f64,
}

impl ConventionalPolicy {
    pub fn new(cfg: &SystemConfig, h: &ComplexVector) -> Result<Self> {
        let mrc_sinr = cfg.max_power_w * h.norm_sq() / cfg.noise_power_w;
        let r = rate(mrc_sinr)?;
        if !(r > 0.0) {
            return Err(Error::InvalidValue {
                context: "baseline rate",
                value: r,
            });
        }
        Ok(Self {
            rate_bits_per_hz: r,
            sample_cost_s: cfg.sensing_time_per_sample_s
                + cfg.sample_volume_bits / (cfg.bandwidth_hz * r),
        })
    }
}

/// Baseline workload specification: spend a time budget, or deliver a target
/// sample count per task.
#[derive(Clone, Debug)]
pub enum ConventionalTarget {
    TimeBudget(f64),
    Samples(Vec<u64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionalTask {
    pub task: usize,
    pub samples: u64,
    pub sensing_time_s: f64,
    pub comm_time_s: f64,
    pub error: f64,
}

/// Baseline outcome under a [`ConventionalTarget`].
#[derive(Clone, Debug, Serialize)]
pub struct ConventionalReport {
    pub policy: ConventionalPolicy,
    pub tasks: Vec<ConventionalTask>,
    pub total_time_s: f64,
    pub max_error: f64,
}

/// How the two systems are matched in a comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompareMode {
    /// Baseline must deliver the solved system's sample counts (time ratio).
    EqualSamples,
    /// Both get the same time budget (error gap).
    EqualTime,
    /// Both must reach the solved system's worst error (time ratio).
    EqualError,
}

impl std::str::FromStr for CompareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equal_samples" => Ok(Self::EqualSamples),
            "equal_time" => Ok(Self::EqualTime),
            "equal_error" => Ok(Self::EqualError),
            other => Err(Error::Scenario(format!(
                "unknown compare mode `{other}` (expected equal_samples, equal_time or equal_error)"
            ))),
        }
    }
}

/// Side-by-side comparison against the sequential baseline.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub mode: CompareMode,
    pub regime: Regime,
    pub isac: PhaseSolution,
    pub conventional: ConventionalReport,
    /// Time the solved system needs under the mode's matching rule.
    pub isac_time_s: f64,
    /// Time the baseline needs under the mode's matching rule.
    pub conv_time_s: f64,
    /// Matched-sample time gain `1 - isac/conventional`, always computed
    /// from the solved sample counts regardless of mode.
    pub gain_measured: f64,
    /// Closed-form sensing-dominant gain.
    pub gain_analytic: f64,
    pub max_err_isac: f64,
    pub max_err_conv: f64,
}

/// Runs the two-step solve: per-task beamforming, then time allocation, then
/// realized (floored) sample counts and errors.
pub fn run_isac(cfg: &SystemConfig, channels: &ChannelSet) -> Result<PhaseSolution> {
    cfg.validate()?;
    if channels.g.len() != cfg.num_tasks {
        return Err(Error::DimensionMismatch {
            context: "run_isac echo channels",
            expected: cfg.num_tasks,
            actual: channels.g.len(),
        });
    }

    let mut outcomes = Vec::with_capacity(cfg.num_tasks);
    for (m, g) in channels.g.iter().enumerate() {
        let outcome = solve_beamforming(&channels.h, g, cfg.sensing_thresholds[m], cfg)?;
        match outcome.status {
            BeamformStatus::Optimal => outcomes.push(outcome),
            BeamformStatus::Infeasible => return Err(Error::TaskInfeasible { task: m }),
            BeamformStatus::NumericalFailure => {
                return Err(Error::BeamformingFailed {
                    task: m,
                    detail: format!("rank-1 defect {:.3e}", outcome.rank1_defect),
                })
            }
        }
    }

    let sinrs: Vec<f64> = outcomes.iter().map(|o| o.sinr_com).collect();
    let profile = RateProfile::from_sinrs(&sinrs, cfg)?;
    let allocation = solve_time_allocation(&profile, cfg)?;

    let mut phases = Vec::with_capacity(cfg.num_tasks);
    let mut max_error = 0.0f64;
    for (m, outcome) in outcomes.into_iter().enumerate() {
        let tau = allocation.tau_s[m];
        let budget = sample_budget(tau, outcome.sinr_com, cfg)?;
        if budget.samples == 0 {
            return Err(Error::EmptyDataset { task: m });
        }
        let params = cfg.error_params[m];
        let error = classification_error(budget.samples as f64, params.a, params.b)?;
        if !quality_gate(outcome.sinr_sen, cfg.sensing_thresholds[m]) {
            return Err(Error::BeamformingFailed {
                task: m,
                detail: format!(
                    "echo SINR {:.6e} below threshold {:.6e}",
                    outcome.sinr_sen, cfg.sensing_thresholds[m]
                ),
            });
        }
        max_error = max_error.max(error);
        phases.push(TaskPhase {
            task: m,
            beamformer: outcome.pair,
            tau_s: tau,
            sinr_com: outcome.sinr_com,
            sinr_sen: outcome.sinr_sen,
            samples: budget.samples,
            error,
            binding: allocation.binding[m],
        });
    }

    Ok(PhaseSolution {
        phases,
        mu_star: allocation.mu_star,
        total_time_s: cfg.total_time_s,
        max_error,
    })
}

/// Runs the sequential baseline: per-sample cost `t_S + D/(B R_MRC)`, with
/// a time budget split by the same min-max allocator (flat rates), or a
/// mandated per-task sample count.
pub fn run_conventional(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    target: &ConventionalTarget,
) -> Result<ConventionalReport> {
    let policy = ConventionalPolicy::new(cfg, &channels.h)?;
    let per_second = 1.0 / policy.sample_cost_s;

    let samples: Vec<u64> = match target {
        ConventionalTarget::Samples(v) => {
            if v.len() != cfg.num_tasks {
                return Err(Error::DimensionMismatch {
                    context: "conventional sample targets",
                    expected: cfg.num_tasks,
                    actual: v.len(),
                });
            }
            v.clone()
        }
        ConventionalTarget::TimeBudget(t) => {
            if !(*t > 0.0) {
                return Err(Error::InvalidValue {
                    context: "time budget",
                    value: *t,
                });
            }
            let mut budget_cfg = cfg.clone();
            budget_cfg.total_time_s = *t;
            let profile = RateProfile::uniform(per_second, cfg.num_tasks)?;
            let allocation = solve_time_allocation(&profile, &budget_cfg)?;
            allocation
                .tau_s
                .iter()
                .map(|tau| (tau * per_second).floor() as u64)
                .collect()
        }
    };

    let mut tasks = Vec::with_capacity(cfg.num_tasks);
    let mut max_error = 0.0f64;
    for (m, &v) in samples.iter().enumerate() {
        if v == 0 {
            return Err(Error::EmptyDataset { task: m });
        }
        let params = cfg.error_params[m];
        let error = classification_error(v as f64, params.a, params.b)?;
        max_error = max_error.max(error);
        tasks.push(ConventionalTask {
            task: m,
            samples: v,
            sensing_time_s: v as f64 * cfg.sensing_time_per_sample_s,
            comm_time_s: v as f64 * cfg.sample_volume_bits
                / (cfg.bandwidth_hz * policy.rate_bits_per_hz),
            error,
        });
    }
    let total_time_s = match target {
        ConventionalTarget::TimeBudget(t) => *t,
        ConventionalTarget::Samples(_) => {
            tasks.iter().map(|t| t.sensing_time_s + t.comm_time_s).sum()
        }
    };

    Ok(ConventionalReport {
        policy,
        tasks,
        total_time_s,
        max_error,
    })
}

/// Closed-form sensing-dominant gain
/// `1 / (t_S B log2(1 + P ||h||^2 / sigma^2) / D + 1)`.
pub fn isac_gain_analytic(cfg: &SystemConfig, h: &ComplexVector) -> f64 {
    let mrc_sinr = cfg.max_power_w * h.norm_sq() / cfg.noise_power_w;
    let x = cfg.sensing_time_per_sample_s * cfg.bandwidth_hz * (1.0 + mrc_sinr).log2()
        / cfg.sample_volume_bits;
    1.0 / (x + 1.0)
}

fn classify(phases: &[TaskPhase]) -> Regime {
    let sensing = phases.iter().all(|p| p.binding != Binding::Communication);
    let comm = phases.iter().all(|p| p.binding != Binding::Sensing);
    if sensing {
        Regime::SensingDominant
    } else if comm {
        Regime::CommDominant
    } else {
        Regime::Mixed
    }
}

/// Time the solved system needs to gather `samples[m]` per task at its
/// effective rates.
fn isac_time_for_samples(samples: &[u64], profile: &RateProfile) -> f64 {
    samples
        .iter()
        .zip(profile.rates())
        .map(|(&v, r)| v as f64 / r.effective())
        .sum()
}

fn conv_time_for_samples(samples: &[u64], policy: &ConventionalPolicy) -> f64 {
    samples
        .iter()
        .map(|&v| v as f64 * policy.sample_cost_s)
        .sum()
}

/// Minimum integer sample count whose error is at most `target`.
fn samples_for_error(target: f64, a: f64, b: f64) -> u64 {
    let v = (target / a).powf(-1.0 / b);
    ((v * (1.0 - 1e-12)).ceil().max(1.0)) as u64
}

/// Compares the solved system against the baseline under a matching rule.
pub fn compare(cfg: &SystemConfig, channels: &ChannelSet, mode: CompareMode) -> Result<RunReport> {
    let isac = run_isac(cfg, channels)?;
    let policy = ConventionalPolicy::new(cfg, &channels.h)?;
    let sinrs: Vec<f64> = isac.phases.iter().map(|p| p.sinr_com).collect();
    let profile = RateProfile::from_sinrs(&sinrs, cfg)?;

    let solved_samples: Vec<u64> = isac.phases.iter().map(|p| p.samples).collect();
    let gain_measured = 1.0
        - isac_time_for_samples(&solved_samples, &profile)
            / conv_time_for_samples(&solved_samples, &policy);

    let (conventional, isac_time_s, conv_time_s) = match mode {
        CompareMode::EqualSamples => {
            let conv = run_conventional(
                cfg,
                channels,
                &ConventionalTarget::Samples(solved_samples.clone()),
            )?;
            let isac_t = isac_time_for_samples(&solved_samples, &profile);
            let conv_t = conv.total_time_s;
            (conv, isac_t, conv_t)
        }
        CompareMode::EqualTime => {
            let conv = run_conventional(
                cfg,
                channels,
                &ConventionalTarget::TimeBudget(cfg.total_time_s),
            )?;
            (conv, cfg.total_time_s, cfg.total_time_s)
        }
        CompareMode::EqualError => {
            let target = isac.max_error;
            let matched: Vec<u64> = cfg
                .error_params
                .iter()
                .map(|p| samples_for_error(target, p.a, p.b))
                .collect();
            let conv =
                run_conventional(cfg, channels, &ConventionalTarget::Samples(matched.clone()))?;
            let isac_t = isac_time_for_samples(&matched, &profile);
            let conv_t = conv.total_time_s;
            (conv, isac_t, conv_t)
        }
    };

    Ok(RunReport {
        mode,
        regime: classify(&isac.phases),
        isac_time_s,
        conv_time_s,
        gain_measured,
        gain_analytic: isac_gain_analytic(cfg, &channels.h),
        max_err_isac: isac.max_error,
        max_err_conv: conventional.max_error,
        isac,
        conventional,
    })
}

/// Sweepable scenario parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    SensingTime,
    Bandwidth,
    Power,
    TotalTime,
    TargetError,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::SensingTime => "t_s",
            SweepParam::Bandwidth => "b",
            SweepParam::Power => "p",
            SweepParam::TotalTime => "t",
            SweepParam::TargetError => "target_error",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t_s" | "ts" | "sensing_time" => Ok(Self::SensingTime),
            "b" | "bandwidth" => Ok(Self::Bandwidth),
            "p" | "power" => Ok(Self::Power),
            "t" | "total_time" => Ok(Self::TotalTime),
            "target_error" => Ok(Self::TargetError),
            other => Err(Error::UnknownParameter(other.to_string())),
        }
    }
}

/// Sweep request: one parameter, its grid, and the comparison mode.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub mode: CompareMode,
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: f64,
    pub isac_time_s: f64,
    pub conv_time_s: f64,
    pub gain_measured: f64,
    pub gain_analytic: f64,
    pub regime: Regime,
    pub max_err_isac: f64,
    pub max_err_conv: f64,
}

fn sweep_point(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    spec: &SweepSpec,
    value: f64,
) -> Result<SweepRow> {
    let mut point = cfg.clone();
    let mode = match spec.param {
        SweepParam::SensingTime => {
            point.sensing_time_per_sample_s = value;
            spec.mode
        }
        SweepParam::Bandwidth => {
            point.bandwidth_hz = value;
            spec.mode
        }
        SweepParam::Power => {
            point.max_power_w = value;
            spec.mode
        }
        SweepParam::TotalTime => {
            point.total_time_s = value;
            spec.mode
        }
        SweepParam::TargetError => CompareMode::EqualError,
    };

    if spec.param == SweepParam::TargetError {
        // Match both systems to an explicit error target instead of the
        // solved run's realized error.
        let report = compare_at_target_error(&point, channels, value)?;
        return Ok(row_from_report(spec.param.name(), value, &report));
    }
    let report = compare(&point, channels, mode)?;
    Ok(row_from_report(spec.param.name(), value, &report))
}

fn row_from_report(param: &'static str, value: f64, report: &RunReport) -> SweepRow {
    SweepRow {
        param,
        value,
        isac_time_s: report.isac_time_s,
        conv_time_s: report.conv_time_s,
        gain_measured: report.gain_measured,
        gain_analytic: report.gain_analytic,
        regime: report.regime,
        max_err_isac: report.max_err_isac,
        max_err_conv: report.max_err_conv,
    }
}

/// Like [`compare`] with [`CompareMode::EqualError`], but both systems chase
/// an explicit worst-error target rather than the solved run's realized one.
pub fn compare_at_target_error(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    target: f64,
) -> Result<RunReport> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::InvalidValue {
            context: "target error",
            value: target,
        });
    }
    let mut report = compare(cfg, channels, CompareMode::EqualError)?;
    let matched: Vec<u64> = cfg
        .error_params
        .iter()
        .map(|p| samples_for_error(target, p.a, p.b))
        .collect();
    let sinrs: Vec<f64> = report.isac.phases.iter().map(|p| p.sinr_com).collect();
    let profile = RateProfile::from_sinrs(&sinrs, cfg)?;
    let conventional =
        run_conventional(cfg, channels, &ConventionalTarget::Samples(matched.clone()))?;

    report.isac_time_s = isac_time_for_samples(&matched, &profile);
    report.conv_time_s = conventional.total_time_s;
    report.gain_measured = 1.0 - report.isac_time_s / report.conv_time_s;
    report.max_err_isac = matched
        .iter()
        .zip(&cfg.error_params)
        .map(|(&v, p)| p.a * (v as f64).powf(-p.b))
        .fold(0.0f64, f64::max);
    report.max_err_conv = conventional.max_error;
    report.conventional = conventional;
    Ok(report)
}

/// Runs one [`compare`] per grid point, in order.
pub fn sweep(cfg: &SystemConfig, channels: &ChannelSet, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.grid
        .iter()
        .map(|&v| sweep_point(cfg, channels, spec, v))
        .collect()
}

/// Parallel sweep over `jobs` worker threads. Grid points are independent;
/// rows come back in grid order regardless of scheduling.
pub fn sweep_with_jobs(
    cfg: &SystemConfig,
    channels: &ChannelSet,
    spec: &SweepSpec,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if jobs <= 1 {
        return sweep(cfg, channels, spec);
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Scenario(format!("thread pool: {e}")))?;
    pool.install(|| {
        spec.grid
            .par_iter()
            .map(|&v| sweep_point(cfg, channels, spec, v))
            .collect()
    })
}

/// Writes sweep rows as CSV with the canonical column order.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    if rows.is_empty() {
        // Emit the header even for an empty grid.
        writer.write_record([
            "param",
            "value",
            "isac_time_s",
            "conv_time_s",
            "gain_measured",
            "gain_analytic",
            "regime",
            "max_err_isac",
            "max_err_conv",
        ])?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
