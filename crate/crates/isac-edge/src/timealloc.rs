//! Min-max time allocation across phases: closed-form per-task durations at
//! a given error level and bisection on the level until the time budget
//! binds.
//!
//! Each task converts time into samples at `pi_min = min(pi_c, pi_s)`
//! samples per second, where `pi_c = B log2(1+SINR)/D` is the upload rate
//! and `pi_s = 1/t_S` the sensing rate. At the optimum every task achieves
//! the same error level `mu*`, which pins `tau_m = (mu*/a_m)^(-1/b_m) /
//! pi_min_m`; the budget equation `sum tau_m(mu) = T` has a strictly
//! decreasing left side, so `mu*` is found by bisection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rate, SystemConfig};

/// Which resource limits a task's sample rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Binding {
    Sensing,
    Communication,
    Both,
}

/// Sample-rate pair for one task, samples per second.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TaskRate {
    /// Upload-limited rate `B log2(1+SINR)/D`.
    pub comm: f64,
    /// Sensing-limited rate `1/t_S`.
    pub sensing: f64,
}

impl TaskRate {
    /// Effective sample rate, the binding minimum.
    pub fn effective(&self) -> f64 {
        self.comm.min(self.sensing)
    }

    pub fn binding(&self) -> Binding {
        if self.comm == self.sensing {
            Binding::Both
        } else if self.sensing < self.comm {
            Binding::Sensing
        } else {
            Binding::Communication
        }
    }
}

/// Per-task sample rates derived from the solved beamformers.
#[derive(Clone, Debug, Serialize)]
pub struct RateProfile {
    rates: Vec<TaskRate>,
}

impl RateProfile {
    /// Builds the profile from per-task uplink SINRs.
    pub fn from_sinrs(sinrs: &[f64], cfg: &SystemConfig) -> Result<Self> {
        if sinrs.len() != cfg.num_tasks {
            return Err(Error::DimensionMismatch {
                context: "RateProfile::from_sinrs",
                expected: cfg.num_tasks,
                actual: sinrs.len(),
            });
        }
        let sensing = 1.0 / cfg.sensing_time_per_sample_s;
        let rates = sinrs
            .iter()
            .map(|&s| {
                Ok(TaskRate {
                    comm: cfg.bandwidth_hz * rate(s)? / cfg.sample_volume_bits,
                    sensing,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = Self { rates };
        profile.validate()?;
        Ok(profile)
    }

    /// Builds a profile where every task converts time to samples at the
    /// same flat rate (the sequential baseline's shape).
    pub fn uniform(samples_per_second: f64, num_tasks: usize) -> Result<Self> {
        let profile = Self {
            rates: vec![
                TaskRate {
                    comm: samples_per_second,
                    sensing: samples_per_second,
                };
                num_tasks
            ],
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn from_rates(rates: Vec<TaskRate>) -> Result<Self> {
        let profile = Self { rates };
        profile.validate()?;
        Ok(profile)
    }

    fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "RateProfile",
                expected: 1,
                actual: 0,
            });
        }
        for r in &self.rates {
            if !(r.effective() > 0.0) || !r.effective().is_finite() {
                return Err(Error::InvalidValue {
                    context: "task sample rate",
                    value: r.effective(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rates(&self) -> &[TaskRate] {
        &self.rates
    }
}

/// Solved allocation: per-task durations, the equalized error level, and
/// which resource binds each task.
#[derive(Clone, Debug, Serialize)]
pub struct TimeAllocation {
    pub tau_s: Vec<f64>,
    /// Error level every task attains (pre-floor).
    pub mu_star: f64,
    pub binding: Vec<Binding>,
}

/// Per-task durations at error level `mu`:
/// `tau_m = (mu/a_m)^(-1/b_m) / pi_min_m`.
pub fn tau_of_mu(mu: f64, profile: &RateProfile, cfg: &SystemConfig) -> Result<Vec<f64>> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidValue {
            context: "error level mu",
            value: mu,
        });
    }
    if profile.len() != cfg.num_tasks {
        return Err(Error::DimensionMismatch {
            context: "tau_of_mu",
            expected: cfg.num_tasks,
            actual: profile.len(),
        });
    }
    Ok(profile
        .rates
        .iter()
        .zip(&cfg.error_params)
        .map(|(r, p)| (mu / p.a).powf(-1.0 / p.b) / r.effective())
        .collect())
}

fn total_time(mu: f64, profile: &RateProfile, cfg: &SystemConfig) -> Result<f64> {
    Ok(tau_of_mu(mu, profile, cfg)?.iter().sum())
}

/// Finds the error level whose durations exhaust the budget exactly.
///
/// The bracket starts at the worst single-task error when a task owns the
/// whole budget and grows by doubling until it straddles `T`; bisection then
/// runs until the budget matches to 1e-10 relative or the bracket collapses
/// to 1e-14 relative width. `sum tau(mu)` is continuous and strictly
/// decreasing with range `(0, inf)`, so this always terminates.
pub fn solve_time_allocation(profile: &RateProfile, cfg: &SystemConfig) -> Result<TimeAllocation> {
    let budget = cfg.total_time_s;
    if !(budget > 0.0) {
        return Err(Error::InvalidValue {
            context: "total_time_s",
            value: budget,
        });
    }

    // Initial level: the largest single-task error at full budget. At this mu
    // one task alone already needs the whole budget, so the total is >= T.
    let mut mu_lo = profile
        .rates
        .iter()
        .zip(&cfg.error_params)
        .map(|(r, p)| p.a * (r.effective() * budget).powf(-p.b))
        .fold(f64::MIN, f64::max);
    if !(mu_lo > 0.0) || !mu_lo.is_finite() {
        return Err(Error::InvalidValue {
            context: "bisection bracket",
            value: mu_lo,
        });
    }
    let mut mu_hi = mu_lo;
    while total_time(mu_lo, profile, cfg)? < budget {
        mu_lo *= 0.5;
    }
    while total_time(mu_hi, profile, cfg)? > budget {
        mu_hi *= 2.0;
    }

    let mut mu = 0.5 * (mu_lo + mu_hi);
    for _ in 0..2000 {
        mu = 0.5 * (mu_lo + mu_hi);
        let total = total_time(mu, profile, cfg)?;
        if (total - budget).abs() <= 1e-10 * budget {
            break;
        }
        if total > budget {
            mu_lo = mu;
        } else {
            mu_hi = mu;
        }
        if mu_hi - mu_lo <= 1e-14 * mu_hi {
            mu = 0.5 * (mu_lo + mu_hi);
            break;
        }
    }

    let tau_s = tau_of_mu(mu, profile, cfg)?;
    Ok(TimeAllocation {
        tau_s,
        mu_star: mu,
        binding: profile.rates.iter().map(TaskRate::binding).collect(),
    })
}

/// One grid point of the two-task allocation surface.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceRow {
    pub sinr_db: f64,
    pub t_s: f64,
    pub tau_1: f64,
    pub tau_2: f64,
    pub mu_star: f64,
}

/// Sweeps the two-task allocation over a grid of shared uplink SINRs and
/// sensing times, emitting the duration surfaces.
pub fn sweep_allocation_surface(
    cfg: &SystemConfig,
    sinr_db_grid: &[f64],
    t_s_grid: &[f64],
) -> Result<Vec<SurfaceRow>> {
    if cfg.num_tasks != 2 {
        return Err(Error::DimensionMismatch {
            context: "sweep_allocation_surface tasks",
            expected: 2,
            actual: cfg.num_tasks,
        });
    }
    let mut rows = Vec::with_capacity(sinr_db_grid.len() * t_s_grid.len());
    for &sinr_db in sinr_db_grid {
        let sinr = 10f64.powf(sinr_db / 10.0);
        for &t_s in t_s_grid {
            let mut point = cfg.clone();
            point.sensing_time_per_sample_s = t_s;
            let profile = RateProfile::from_sinrs(&[sinr, sinr], &point)?;
            let alloc = solve_time_allocation(&profile, &point)?;
            rows.push(SurfaceRow {
                sinr_db,
                t_s,
                tau_1: alloc.tau_s[0],
                tau_2: alloc.tau_s[1],
                mu_star: alloc.mu_star,
            });
        }
    }
    Ok(rows)
}

/// Writes allocation-surface rows as CSV with the canonical column order.
pub fn write_surface_csv<W: std::io::Write>(rows: &[SurfaceRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
