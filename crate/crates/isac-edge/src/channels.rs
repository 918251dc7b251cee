//! Deterministic channel construction from scene geometry: uniform linear
//! array steering with power-law path loss, one-way for the uplink and
//! round-trip for radar echoes.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComplexVector, SystemConfig};

/// Scene description for channel synthesis. Distances in meters, angles in
/// radians, gains linear.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneGeometry {
    /// Element spacing of the transmit array.
    pub antenna_spacing_m: f64,
    /// Carrier wavelength; defaults pair with half-wavelength spacing.
    pub carrier_wavelength_m: f64,
    /// One-way path-loss exponent alpha; echoes decay with 2*alpha.
    pub fading_exponent: f64,
    /// Sensor-to-server distance.
    pub server_distance_m: f64,
    /// Sensor-to-target distance per task.
    pub target_distances_m: Vec<f64>,
    /// Direction of the server seen from the array broadside.
    pub server_angle_rad: f64,
    /// Direction of each target.
    pub target_angles_rad: Vec<f64>,
    /// Reference power gain at 1 m.
    pub reference_gain: f64,
    /// Dimensionless per-target reflectivity multiplier on echo amplitudes.
    pub echo_gain_scale: f64,
}

impl SceneGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("antenna_spacing_m", self.antenna_spacing_m),
            ("carrier_wavelength_m", self.carrier_wavelength_m),
            ("fading_exponent", self.fading_exponent),
            ("server_distance_m", self.server_distance_m),
            ("reference_gain", self.reference_gain),
            ("echo_gain_scale", self.echo_gain_scale),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidValue {
                    context: name,
                    value,
                });
            }
        }
        for d in &self.target_distances_m {
            if !(*d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidValue {
                    context: "target distance",
                    value: *d,
                });
            }
        }
        Ok(())
    }
}

/// The synthesized channels: uplink vector `h` and per-target echo vectors
/// `g[m]`, all of length N.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h: ComplexVector,
    pub g: Vec<ComplexVector>,
}

/// Uniform-linear-array steering vector: entry `k = exp(i 2 pi k d sin(angle) / lambda)`.
/// Every entry has unit modulus, so the squared norm is exactly N.
pub fn steering_vector(
    angle_rad: f64,
    n: usize,
    spacing_m: f64,
    wavelength_m: f64,
) -> ComplexVector {
    let phase_step = TAU * spacing_m * angle_rad.sin() / wavelength_m;
    ComplexVector::new(
        (0..n.max(1))
            .map(|k| Complex64::from_polar(1.0, phase_step * k as f64))
            .collect(),
    )
    .expect("steering vector entries are always finite")
}

/// Builds the channel set for a scene.
///
/// `h = sqrt(beta0 d^-alpha) steer(server)`, `g_m = scale * sqrt(beta0 d_m^-2alpha) steer(target_m)`.
/// The output is a pure function of its arguments; `rng_seed` is reserved for
/// an optional small-scale fading perturbation and is currently inert.
pub fn build_channels(
    geom: &SceneGeometry,
    cfg: &SystemConfig,
    rng_seed: u64,
) -> Result<ChannelSet> {
    geom.validate()?;
    let _ = rng_seed;
    if geom.target_distances_m.len() != cfg.num_tasks {
        return Err(Error::DimensionMismatch {
            context: "target_distances_m",
            expected: cfg.num_tasks,
            actual: geom.target_distances_m.len(),
        });
    }
    if geom.target_angles_rad.len() != cfg.num_tasks {
        return Err(Error::DimensionMismatch {
            context: "target_angles_rad",
            expected: cfg.num_tasks,
            actual: geom.target_angles_rad.len(),
        });
    }
    let n = cfg.num_antennas;
    let alpha = geom.fading_exponent;

    let server_amp = (geom.reference_gain * geom.server_distance_m.powf(-alpha)).sqrt();
    let h = steering_vector(
        geom.server_angle_rad,
        n,
        geom.antenna_spacing_m,
        geom.carrier_wavelength_m,
    )
    .scale_re(server_amp);

    let g = geom
        .target_distances_m
        .iter()
        .zip(&geom.target_angles_rad)
        .map(|(&d, &angle)| {
            let echo_amp =
                geom.echo_gain_scale * (geom.reference_gain * d.powf(-2.0 * alpha)).sqrt();
            steering_vector(angle, n, geom.antenna_spacing_m, geom.carrier_wavelength_m)
                .scale_re(echo_amp)
        })
        .collect();

    Ok(ChannelSet { h, g })
}
