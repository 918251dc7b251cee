//! JSON scenario ingestion. All dB/dBm fields are converted to linear scale
//! here, once; everything downstream works in watts and linear ratios.
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default.

use serde::{Deserialize, Serialize};

use crate::channels::{build_channels, ChannelSet, SceneGeometry};
use crate::error::{Error, Result};
use crate::model::{ErrorModelParams, SystemConfig};

/// Power gain in dB to linear.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power gain to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Default reference gain at 1 m, chosen so the bundled scene (250 m server
/// distance, exponent 2.5, 4 antennas, -90 dBm noise, 1 W) sits at a 20 dB
/// uplink SNR.
pub fn default_reference_gain() -> f64 {
    100.0 * 1e-12 * 250f64.powf(2.5) / 4.0
}

fn default_wavelength() -> f64 {
    0.3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub num_antennas: usize,
    pub max_power_w: f64,
    pub noise_power_dbm: f64,
    pub clutter_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub sample_size_bits: f64,
    pub total_time_s: f64,
    pub sensing_time_per_sample_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub antenna_spacing_m: f64,
    #[serde(default = "default_wavelength")]
    pub carrier_wavelength_m: f64,
    pub fading_exponent: f64,
    pub server_distance_m: f64,
    #[serde(default)]
    pub server_angle_deg: f64,
    pub target_distances_m: Vec<f64>,
    /// Defaults to angles spread evenly over [-30, 30] degrees.
    #[serde(default)]
    pub target_angles_deg: Option<Vec<f64>>,
    /// Reference power gain at 1 m, dB; defaults to the calibrated value of
    /// [`default_reference_gain`].
    #[serde(default)]
    pub reference_gain_db: Option<f64>,
    #[serde(default = "crate::scenario::default_echo_scale")]
    pub echo_gain_scale: f64,
}

pub(crate) fn default_echo_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    /// Sensing SINR threshold, dB.
    pub eta_db: f64,
    /// Error-model scale `a`.
    pub a: f64,
    /// Error-model decay exponent `b`.
    pub b: f64,
}

/// Parsed scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemBlock,
    pub geometry: GeometryBlock,
    pub tasks: Vec<TaskBlock>,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Scenario("at least one task is required".into()));
        }
        if self.geometry.target_distances_m.len() != self.tasks.len() {
            return Err(Error::Scenario(format!(
                "target_distances_m has {} entries for {} tasks",
                self.geometry.target_distances_m.len(),
                self.tasks.len()
            )));
        }
        if let Some(angles) = &self.geometry.target_angles_deg {
            if angles.len() != self.tasks.len() {
                return Err(Error::Scenario(format!(
                    "target_angles_deg has {} entries for {} tasks",
                    angles.len(),
                    self.tasks.len()
                )));
            }
        }
        self.system_config()?.validate()?;
        self.scene_geometry()?.validate()?;
        Ok(())
    }

    /// Linear-scale system configuration.
    pub fn system_config(&self) -> Result<SystemConfig> {
        let s = &self.system;
        Ok(SystemConfig {
            num_antennas: s.num_antennas,
            num_tasks: self.tasks.len(),
            max_power_w: s.max_power_w,
            noise_power_w: dbm_to_watts(s.noise_power_dbm),
            clutter_power_w: dbm_to_watts(s.clutter_power_dbm),
            bandwidth_hz: s.bandwidth_hz,
            sample_volume_bits: s.sample_size_bits,
            total_time_s: s.total_time_s,
            sensing_time_per_sample_s: s.sensing_time_per_sample_s,
            sensing_thresholds: self.tasks.iter().map(|t| db_to_linear(t.eta_db)).collect(),
            error_params: self
                .tasks
                .iter()
                .map(|t| ErrorModelParams { a: t.a, b: t.b })
                .collect(),
        })
    }

    /// Radian/linear-scale scene geometry.
    pub fn scene_geometry(&self) -> Result<SceneGeometry> {
        let g = &self.geometry;
        let m = self.tasks.len();
        let angles_deg: Vec<f64> = match &g.target_angles_deg {
            Some(a) => a.clone(),
            None if m == 1 => vec![-30.0],
            None => (0..m)
                .map(|i| -30.0 + 60.0 * i as f64 / (m - 1) as f64)
                .collect(),
        };
        Ok(SceneGeometry {
            antenna_spacing_m: g.antenna_spacing_m,
            carrier_wavelength_m: g.carrier_wavelength_m,
            fading_exponent: g.fading_exponent,
            server_distance_m: g.server_distance_m,
            target_distances_m: g.target_distances_m.clone(),
            server_angle_rad: g.server_angle_deg.to_radians(),
            target_angles_rad: angles_deg.iter().map(|a| a.to_radians()).collect(),
            reference_gain: g
                .reference_gain_db
                .map(db_to_linear)
                .unwrap_or_else(default_reference_gain),
            echo_gain_scale: g.echo_gain_scale,
        })
    }

    /// Converts and synthesizes everything a solve needs.
    pub fn build(&self) -> Result<(SystemConfig, ChannelSet)> {
        let cfg = self.system_config()?;
        let geometry = self.scene_geometry()?;
        let channels = build_channels(&geometry, &cfg, self.seed)?;
        Ok((cfg, channels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bundled_json() -> String {
        std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/scenarios/two_target.json"
        ))
        .expect("bundled scenario present")
    }

    #[test]
    fn bundled_scenario_parses_with_expected_values() {
        let scenario = Scenario::from_json(&bundled_json()).unwrap();
        let cfg = scenario.system_config().unwrap();
        assert_eq!(cfg.num_antennas, 4);
        assert_eq!(cfg.num_tasks, 2);
        assert_relative_eq!(cfg.max_power_w, 1.0);
        assert_relative_eq!(cfg.noise_power_w, 1e-12, max_relative = 1e-12);
        assert_relative_eq!(cfg.clutter_power_w, 1e-10, max_relative = 1e-12);
        assert_relative_eq!(cfg.bandwidth_hz, 5e6);
        assert_relative_eq!(cfg.sample_volume_bits, 1e6);
        assert_relative_eq!(cfg.sensing_thresholds[0], 100.0, max_relative = 1e-12);
        assert_relative_eq!(
            cfg.sensing_thresholds[1],
            db_to_linear(1.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(cfg.error_params[0].a, 2.5845);
        assert_relative_eq!(cfg.error_params[0].b, 0.5317);
        assert_relative_eq!(cfg.error_params[1].a, 1.9057);
        assert_relative_eq!(cfg.error_params[1].b, 0.3778);

        let geom = scenario.scene_geometry().unwrap();
        assert_relative_eq!(geom.antenna_spacing_m, 0.15);
        assert_relative_eq!(geom.fading_exponent, 2.5);
        assert_relative_eq!(geom.server_distance_m, 250.0);
        assert_eq!(geom.target_distances_m, vec![20.0, 40.0]);
    }

    #[test]
    fn bundled_scenario_is_feasible_with_margin() {
        let scenario = Scenario::from_json(&bundled_json()).unwrap();
        let (cfg, channels) = scenario.build().unwrap();
        for (m, g) in channels.g.iter().enumerate() {
            let floor = cfg.sensing_thresholds[m] * (cfg.noise_power_w + cfg.clutter_power_w);
            let reachable = cfg.max_power_w * g.norm_sq();
            assert!(
                floor < 0.8 * reachable,
                "task {m}: floor {floor:e} vs reachable {reachable:e}"
            );
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&bundled_json()).unwrap();
        v["system"]["bogus_key"] = serde_json::json!(1.0);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(Error::Scenario(_))
        ));
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(Scenario::from_json("{not json").is_err());
    }

    #[test]
    fn task_list_length_mismatch_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&bundled_json()).unwrap();
        v["geometry"]["target_distances_m"] = serde_json::json!([20.0]);
        assert!(Scenario::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn default_angles_spread() {
        let mut v: serde_json::Value = serde_json::from_str(&bundled_json()).unwrap();
        v["geometry"]
            .as_object_mut()
            .unwrap()
            .remove("target_angles_deg");
        let scenario = Scenario::from_json(&v.to_string()).unwrap();
        let geom = scenario.scene_geometry().unwrap();
        assert_relative_eq!(geom.target_angles_rad[0], (-30f64).to_radians());
        assert_relative_eq!(geom.target_angles_rad[1], 30f64.to_radians());
    }

    proptest! {
        #[test]
        fn db_round_trips(db in -200.0f64..200.0) {
            let lin = db_to_linear(db);
            prop_assert!((linear_to_db(lin) - db).abs() <= 1e-12 * db.abs().max(1.0));
            let w = dbm_to_watts(db);
            prop_assert!((watts_to_dbm(w) - db).abs() <= 1e-12 * db.abs().max(1.0));
        }
    }
}
