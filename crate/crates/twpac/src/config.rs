//! Device configuration files.
//!
//! Configs use readable bench units (µA, fF, pH, GHz, Ω) and are accepted
//! as TOML or JSON, chosen by file extension. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::ghz_to_rad;
use crate::device::{BiasPoint, DeviceSpec, JunctionParams, LoadingProfile, RpmParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    #[serde(rename = "critical_current_uA")]
    pub critical_current_ua: f64,
    #[serde(rename = "junction_capacitance_fF")]
    pub junction_capacitance_ff: f64,
    pub rpm: RpmFile,
    pub loading: LoadingFile,
    pub supercell_count: usize,
    pub loss_tangent: f64,
    pub environment_impedance_ohm: f64,
    #[serde(rename = "bias_uA")]
    pub bias_ua: f64,
    /// Frequency at which the ground-capacitor profile is designed.
    #[serde(rename = "design_frequency_GHz", default = "default_design_ghz")]
    pub design_frequency_ghz: f64,
}

fn default_design_ghz() -> f64 {
    7.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpmFile {
    #[serde(rename = "L_pH")]
    pub l_ph: f64,
    #[serde(rename = "C_fF")]
    pub c_ff: f64,
    pub spacing: usize,
    #[serde(default)]
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingFile {
    #[serde(rename = "Zm_ohm")]
    pub zm_ohm: f64,
    pub delta_c: f64,
    pub delta_c2: f64,
    pub supercell_cells: usize,
}

impl DeviceFile {
    pub fn into_device(self) -> Result<DeviceSpec> {
        let device = DeviceSpec {
            junction: JunctionParams::new(
                self.critical_current_ua * 1e-6,
                self.junction_capacitance_ff * 1e-15,
            )?,
            rpm: RpmParams {
                inductance: self.rpm.l_ph * 1e-12,
                capacitance: self.rpm.c_ff * 1e-15,
                spacing: self.rpm.spacing,
                offset: self.rpm.offset,
            },
            loading: LoadingProfile {
                mean_impedance: self.loading.zm_ohm,
                fundamental_depth: self.loading.delta_c,
                second_harmonic_depth: self.loading.delta_c2,
                supercell_length: self.loading.supercell_cells,
            },
            supercell_count: self.supercell_count,
            loss_tangent: self.loss_tangent,
            environment_impedance: self.environment_impedance_ohm,
            bias: BiasPoint::new(self.bias_ua * 1e-6),
            design_frequency: ghz_to_rad(self.design_frequency_ghz),
        };
        device.validate()?;
        Ok(device)
    }

    pub fn from_device(device: &DeviceSpec) -> Self {
        Self {
            critical_current_ua: device.junction.critical_current() * 1e6,
            junction_capacitance_ff: device.junction.junction_capacitance() * 1e15,
            rpm: RpmFile {
                l_ph: device.rpm.inductance * 1e12,
                c_ff: device.rpm.capacitance * 1e15,
                spacing: device.rpm.spacing,
                offset: device.rpm.offset,
            },
            loading: LoadingFile {
                zm_ohm: device.loading.mean_impedance,
                delta_c: device.loading.fundamental_depth,
                delta_c2: device.loading.second_harmonic_depth,
                supercell_cells: device.loading.supercell_length,
            },
            supercell_count: device.supercell_count,
            loss_tangent: device.loss_tangent,
            environment_impedance_ohm: device.environment_impedance,
            bias_ua: device.bias.dc_current * 1e6,
            design_frequency_ghz: crate::constants::rad_to_ghz(device.design_frequency),
        }
    }
}

/// Load and validate a device description from a TOML or JSON file.
pub fn load_device(path: &Path) -> Result<DeviceSpec> {
    let text = std::fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let file: DeviceFile = match ext {
        "json" => serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        _ => toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
    };
    file.into_device()
}

/// Serialize a device back to TOML.
pub fn emit_device(device: &DeviceSpec) -> Result<String> {
    toml::to_string_pretty(&DeviceFile::from_device(device))
        .map_err(|e| Error::Config(e.to_string()))
}

/// The shipped reference design: 2640 cells, 40 supercells of 66 cells,
/// resonators every 6 cells, biased at 1.5 µA.
pub fn reference_design() -> DeviceSpec {
    DeviceFile {
        critical_current_ua: 5.0,
        junction_capacitance_ff: 240.5,
        rpm: RpmFile {
            l_ph: 230.0,
            c_ff: 557.0,
            spacing: 6,
            offset: 0,
        },
        loading: LoadingFile {
            zm_ohm: 47.0,
            delta_c: 0.1,
            delta_c2: 0.12,
            supercell_cells: 66,
        },
        supercell_count: 40,
        loss_tangent: 4e-4,
        environment_impedance_ohm: 50.0,
        bias_ua: 1.5,
        design_frequency_ghz: 7.25,
    }
    .into_device()
    .expect("built-in device must validate")
}
