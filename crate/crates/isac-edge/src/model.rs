//! Closed-form link and learning formulas: SINRs, Shannon rate, sample
//! budgets, the empirical classification-error model and its curve fit.
//!
//! All quantities are linear-scale; dB conversion happens once at scenario
//! ingestion (see [`crate::scenario`]).

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fixed-length complex coefficient vector (channel or beamformer).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "ComplexVector",
                expected: 1,
                actual: 0,
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidValue {
                context: "ComplexVector entry",
                value: f64::NAN,
            });
        }
        Ok(Self(entries))
    }

    /// Builds from `(re, im)` pairs; panics on invalid input (test helper).
    pub fn from_re_im(pairs: &[(f64, f64)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .unwrap()
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); n.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    /// Hermitian inner product `self^H other`.
    pub fn dot_h(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DVector<Complex64> {
        nalgebra::DVector::from_column_slice(&self.0)
    }

    pub(crate) fn from_nalgebra(v: &nalgebra::DVector<Complex64>) -> Self {
        Self(v.iter().copied().collect())
    }

    /// Rotates by a global phase so the first entry above `tol` is
    /// real-positive; a deterministic representative of the phase orbit.
    pub(crate) fn canonical_phase(&self) -> Self {
        let tol = 1e-12 * self.norm_sq().sqrt().max(1e-300);
        for z in &self.0 {
            if z.norm() > tol {
                let phase = z / z.norm();
                return self.scale(phase.conj());
            }
        }
        self.clone()
    }
}

impl Serialize for ComplexVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        ComplexVector::new(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Per-task error-model hyper-parameters of `E = a v^(-b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelParams {
    pub a: f64,
    pub b: f64,
}

/// All scenario scalars driving the optimization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antenna count N.
    pub num_antennas: usize,
    /// Task / target count M.
    pub num_tasks: usize,
    /// Maximal transmit power P, watts.
    pub max_power_w: f64,
    /// AWGN power sigma^2, watts.
    pub noise_power_w: f64,
    /// Radar clutter power c, watts.
    pub clutter_power_w: f64,
    /// Upload bandwidth B, Hz.
    pub bandwidth_hz: f64,
    /// Data volume per sample D, bits.
    pub sample_volume_bits: f64,
    /// Total duration budget T, seconds.
    pub total_time_s: f64,
    /// Sensing time per sample t_S, seconds.
    pub sensing_time_per_sample_s: f64,
    /// Per-task sensing SINR thresholds eta_m, linear.
    pub sensing_thresholds: Vec<f64>,
    /// Per-task (a_m, b_m) error-model parameters.
    pub error_params: Vec<ErrorModelParams>,
}

impl SystemConfig {
    /// Checks positivity and per-task list lengths.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 7] = [
            ("max_power_w", self.max_power_w),
            ("noise_power_w", self.noise_power_w),
            ("clutter_power_w", self.clutter_power_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sample_volume_bits", self.sample_volume_bits),
            ("total_time_s", self.total_time_s),
            ("sensing_time_per_sample_s", self.sensing_time_per_sample_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidValue {
                    context: name,
                    value,
                });
            }
        }
        if self.num_antennas == 0 {
            return Err(Error::InvalidValue {
                context: "num_antennas",
                value: 0.0,
            });
        }
        if self.num_tasks == 0 {
            return Err(Error::InvalidValue {
                context: "num_tasks",
                value: 0.0,
            });
        }
        if self.sensing_thresholds.len() != self.num_tasks {
            return Err(Error::DimensionMismatch {
                context: "sensing_thresholds",
                expected: self.num_tasks,
                actual: self.sensing_thresholds.len(),
            });
        }
        if self.error_params.len() != self.num_tasks {
            return Err(Error::DimensionMismatch {
                context: "error_params",
                expected: self.num_tasks,
                actual: self.error_params.len(),
            });
        }
        for eta in &self.sensing_thresholds {
            if *eta < 0.0 || !eta.is_finite() {
                return Err(Error::InvalidValue {
                    context: "sensing_threshold",
                    value: *eta,
                });
            }
        }
        for p in &self.error_params {
            if !(p.a > 0.0) || !(p.b > 0.0) {
                return Err(Error::InvalidValue {
                    context: "error_params",
                    value: p.a.min(p.b),
                });
            }
        }
        Ok(())
    }
}

/// Sample count limits for one phase.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampleBudget {
    /// tau / t_S, samples reachable by sensing alone.
    pub sensing_limit: f64,
    /// B tau R / D, samples reachable by uploading alone.
    pub comm_limit: f64,
    /// floor(min(sensing_limit, comm_limit)), never negative.
    pub samples: u64,
}

/// Radar echo SINR `|g^H w|^2 / (sigma^2 + c)`.
pub fn sensing_sinr(
    w: &ComplexVector,
    g: &ComplexVector,
    noise_w: f64,
    clutter_w: f64,
) -> Result<f64> {
    if w.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "sensing_sinr",
            expected: g.len(),
            actual: w.len(),
        });
    }
    let denom = noise_w + clutter_w;
    if !(denom > 0.0) {
        return Err(Error::InvalidValue {
            context: "sensing noise + clutter",
            value: denom,
        });
    }
    Ok(g.dot_h(w).norm_sqr() / denom)
}

/// Uplink SINR `|h^H f|^2 / (sigma^2 + |h^H w|^2)`.
pub fn comm_sinr(
    f: &ComplexVector,
    w: &ComplexVector,
    h: &ComplexVector,
    noise_w: f64,
) -> Result<f64> {
    if f.len() != h.len() || w.len() != h.len() {
        return Err(Error::DimensionMismatch {
            context: "comm_sinr",
            expected: h.len(),
            actual: f.len().max(w.len()),
        });
    }
    if !(noise_w > 0.0) {
        return Err(Error::InvalidValue {
            context: "noise power",
            value: noise_w,
        });
    }
    let signal = h.dot_h(f).norm_sqr();
    let interference = h.dot_h(w).norm_sqr();
    Ok(signal / (noise_w + interference))
}

/// Shannon spectral efficiency `log2(1 + sinr)` in bits/s/Hz.
pub fn rate(sinr: f64) -> Result<f64> {
    if sinr < 0.0 || !sinr.is_finite() {
        return Err(Error::InvalidValue {
            context: "sinr",
            value: sinr,
        });
    }
    Ok((1.0 + sinr).log2())
}

/// Evaluates both sample-count limits for a phase of duration `tau_s`.
/// Non-positive durations yield zero samples.
pub fn sample_budget(tau_s: f64, sinr_com: f64, cfg: &SystemConfig) -> Result<SampleBudget> {
    let sensing_limit = tau_s / cfg.sensing_time_per_sample_s;
    let comm_limit = cfg.bandwidth_hz * tau_s * rate(sinr_com)? / cfg.sample_volume_bits;
    let usable = sensing_limit.min(comm_limit).floor().max(0.0);
    Ok(SampleBudget {
        sensing_limit,
        comm_limit,
        samples: usable as u64,
    })
}

/// Empirical classification error `a v^(-b)`; undefined for `v < 1`.
pub fn classification_error(v: f64, a: f64, b: f64) -> Result<f64> {
    if v < 1.0 || !v.is_finite() {
        return Err(Error::EmptySamples(v));
    }
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::InvalidValue {
            context: "error model parameter",
            value: a.min(b),
        });
    }
    Ok(a * v.powf(-b))
}

/// Sample quality gate: qualified iff the echo SINR reaches the threshold.
pub fn quality_gate(sinr_sen: f64, eta: f64) -> bool {
    sinr_sen >= eta
}

/// Least-squares fit of `log E = log a - b log v` over `(v, E)` points.
///
/// Returns `(a, b)`; `b <= 0` is accepted but logged as suspicious.
pub fn fit_error_model(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit("need at least 2 points"));
    }
    for &(v, e) in points {
        if v < 1.0 || !v.is_finite() {
            return Err(Error::EmptySamples(v));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::InvalidValue {
                context: "fit error value",
                value: e,
            });
        }
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(v, e) in points {
        let x = v.ln();
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let spread = sxx - sx * sx / n;
    if spread <= 1e-12 * sxx.max(1.0) {
        return Err(Error::DegenerateFit("all sample counts equal"));
    }
    // Slope of log E on log v is -b.
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let a = intercept.exp();
    let b = -slope;
    if b <= 0.0 {
        log::warn!("fitted b = {b} is not positive; error does not decay with samples");
    }
    Ok((a, b))
}
