//! Mode bookkeeping for the coupled-mode model.
//!
//! Seven tones take part in the mixing: the amplification pump `a`, signal
//! `s`, idler `i`, conversion pump `c`, down- and up-converted signals `d`
//! and `u`, and the conversion pump's second harmonic `c2`. Each mode
//! carries its own wavenumber, port reflection factors and dressed
//! nonlinear coefficients, plus a propagation sign that depends on whether
//! the forward or the backward response of the device is being computed.

use num_complex::Complex64;

use crate::device::{dressed_coefficients, BiasPoint, DeviceSpec};
use crate::dispersion::DispersionTable;
use crate::error::{Error, Result};

/// Mode indices within the seven-element basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeId {
    PaPump,
    Signal,
    Idler,
    FcPump,
    DownConverted,
    UpConverted,
    FcHarmonic,
}

pub const MODE_COUNT: usize = 7;

impl ModeId {
    pub const ALL: [ModeId; MODE_COUNT] = [
        ModeId::PaPump,
        ModeId::Signal,
        ModeId::Idler,
        ModeId::FcPump,
        ModeId::DownConverted,
        ModeId::UpConverted,
        ModeId::FcHarmonic,
    ];

    pub fn index(self) -> usize {
        match self {
            ModeId::PaPump => 0,
            ModeId::Signal => 1,
            ModeId::Idler => 2,
            ModeId::FcPump => 3,
            ModeId::DownConverted => 4,
            ModeId::UpConverted => 5,
            ModeId::FcHarmonic => 6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModeId::PaPump => "a",
            ModeId::Signal => "s",
            ModeId::Idler => "i",
            ModeId::FcPump => "c",
            ModeId::DownConverted => "d",
            ModeId::UpConverted => "u",
            ModeId::FcHarmonic => "c2",
        }
    }
}

/// Frequencies of all seven modes for given pump and signal placements:
/// ω_i = ω_a − ω_s, ω_d = ω_s − ω_c, ω_u = ω_s + ω_c, ω_c2 = 2 ω_c.
///
/// Requires ω_a > ω_s > ω_c > 0 so every derived tone is positive.
pub fn mode_frequencies(omega_a: f64, omega_c: f64, omega_s: f64) -> Result<[f64; MODE_COUNT]> {
    if !(omega_c > 0.0 && omega_s > omega_c && omega_a > omega_s) {
        return Err(Error::Domain(format!(
            "need ω_a > ω_s > ω_c > 0, got a = {omega_a:.3e}, s = {omega_s:.3e}, c = {omega_c:.3e}"
        )));
    }
    Ok(mode_frequencies_raw(omega_a, omega_c, omega_s))
}

fn mode_frequencies_raw(omega_a: f64, omega_c: f64, omega_s: f64) -> [f64; MODE_COUNT] {
    [
        omega_a,
        omega_s,
        omega_a - omega_s,
        omega_c,
        omega_s - omega_c,
        omega_s + omega_c,
        2.0 * omega_c,
    ]
}

/// How the port reflection coefficient is formed from the impedances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionConvention {
    /// Γ = |Z − Z0| / |Z + Z0|: a real magnitude, discarding the
    /// reflection phase.
    #[default]
    Magnitude,
    /// Γ = (Z − Z0) / (Z + Z0): the full complex coefficient, kept as a
    /// sensitivity experiment.
    Complex,
}

/// Port reflection quantities for one mode: the reflection coefficient Γ
/// (per the chosen convention), the round-trip factor
/// t = 1/(1 − Γ e^{2ikN}) and the port factor Γ̃ = Γ e^{ikN}.
pub fn reflection_factors(
    z_mode: Complex64,
    z0: f64,
    k: Complex64,
    n_cells: f64,
    convention: ReflectionConvention,
) -> Result<(Complex64, Complex64, Complex64)> {
    let mut gamma = match convention {
        ReflectionConvention::Magnitude => {
            Complex64::new((z_mode - z0).norm() / (z_mode + z0).norm(), 0.0)
        }
        ReflectionConvention::Complex => (z_mode - z0) / (z_mode + z0),
    };
    // A unit reflection (purely reactive stopband impedance) makes the
    // standing-wave denominators of the mode factors vanish somewhere on
    // the line; back off infinitesimally, the mode is dead either way.
    if gamma.norm() > 0.999 {
        gamma *= 0.999 / gamma.norm();
    }
    let phase = (Complex64::i() * k * n_cells).exp();
    let round_trip = gamma * phase * phase;
    let denom = Complex64::new(1.0, 0.0) - round_trip;
    if denom.norm() < 1e-9 {
        return Err(Error::Singular(format!(
            "port round trip resonates (|1 - Γe^{{2ikN}}| = {:.2e})",
            denom.norm()
        )));
    }
    Ok((gamma, denom.inv(), gamma * phase))
}

/// Convert a power in watts to a traveling-wave current amplitude into `z0`,
/// using P = |I|² Z0 / 2.
pub fn watts_to_current(p_watts: f64, z0: f64) -> f64 {
    (2.0 * p_watts / z0).sqrt()
}

/// Convert a chip-input power in dBm to a traveling-wave current amplitude.
pub fn power_to_current(p_dbm: f64, z0: f64) -> f64 {
    watts_to_current(10f64.powf((p_dbm - 30.0) / 10.0), z0)
}

/// Current amplitude back to power in dBm (floored at -300 dBm).
pub fn current_to_dbm(amplitude: f64, z0: f64) -> f64 {
    let p = amplitude * amplitude * z0 / 2.0;
    if p <= 0.0 {
        -300.0
    } else {
        (10.0 * p.log10() + 30.0).max(-300.0)
    }
}

/// Which response of the device is being driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Propagation sign of each mode for the chosen response. For the forward
/// response every mode but the conversion pump travels with +x; for the
/// backward response the roles of the two pumps swap.
pub fn propagation_sign(mode: ModeId, direction: Direction) -> f64 {
    match (mode, direction) {
        (ModeId::PaPump, Direction::Forward) => 1.0,
        (ModeId::PaPump, Direction::Backward) => -1.0,
        (ModeId::FcPump, Direction::Forward) => -1.0,
        (ModeId::FcPump, Direction::Backward) => 1.0,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PumpTone {
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Chip-input power (dBm).
    pub power_dbm: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SignalTone {
    pub omega: f64,
    pub power_dbm: f64,
}

/// Pump and signal placement for one coupled-mode solve.
#[derive(Debug, Clone, Copy)]
pub struct DriveConfig {
    pub pa_pump: PumpTone,
    pub fc_pump: PumpTone,
    pub signal: SignalTone,
    pub direction: Direction,
}

impl DriveConfig {
    /// Validate the drive; returns human-readable warnings for suspicious
    /// but legal configurations.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.pa_pump.omega > 0.0 && self.fc_pump.omega > 0.0 && self.signal.omega > 0.0) {
            return Err(Error::Config("drive frequencies must be positive".into()));
        }
        let mut warnings = Vec::new();
        let pump_floor = if self.fc_pump.enabled {
            self.pa_pump.power_dbm.min(self.fc_pump.power_dbm)
        } else {
            self.pa_pump.power_dbm
        };
        if self.signal.power_dbm > pump_floor - 20.0 {
            warnings.push(format!(
                "signal power {:.1} dBm within 20 dB of the pumps; small-signal assumption is shaky",
                self.signal.power_dbm
            ));
        }
        Ok(warnings)
    }
}

/// Everything the coupled-mode equations need to know about one mode.
#[derive(Debug, Clone, Copy)]
pub struct ModePoint {
    pub omega: f64,
    /// Wavenumber, decaying branch: Im(k) ≥ 0 (rad/cell, nepers/cell).
    pub k: Complex64,
    /// Propagation sign (+1 with +x, −1 against).
    pub sign: f64,
    /// Port reflection coefficient (real under the magnitude convention).
    pub gamma: Complex64,
    /// Round-trip factor t = 1/(1 − Γ e^{2ikN}).
    pub t: Complex64,
    /// Port factor Γ̃ = Γ e^{ikN}.
    pub gamma_tilde: Complex64,
    /// Dressed first-order nonlinearity at this mode's frequency (1/A).
    pub eps: f64,
    /// Dressed second-order nonlinearity at this mode's frequency (1/A²).
    pub xi: f64,
}

impl ModePoint {
    /// Power transmission factor (1 − Γ²)² |t|² of this mode's port pair.
    pub fn port_transmission(&self) -> f64 {
        let one_minus = 1.0 - self.gamma.norm_sqr();
        one_minus * one_minus * self.t.norm_sqr()
    }

    /// Power transmission of the carrier over the full line, e^{−2 Im(k) N}.
    pub fn carrier_transmission(&self, n_cells: f64) -> f64 {
        (-2.0 * self.k.im * n_cells).exp()
    }
}

/// Per-mode environment for one drive configuration. Modes whose derived
/// frequency is non-positive (for instance the down-converted tone when the
/// signal sits below the conversion pump) are absent and stay dark.
#[derive(Debug, Clone)]
pub struct ModeEnvironment {
    modes: [Option<ModePoint>; MODE_COUNT],
    pub total_cells: f64,
    pub z0: f64,
    /// Signal placed at half the amplification pump: the idler coincides
    /// with the signal and is folded into it.
    pub degenerate: bool,
}

/// Evanescent clamp: deep in a stopband the decay over the full line is
/// capped so the phase factors stay representable; such a mode is dead
/// either way.
const MAX_TOTAL_DECAY_NEPERS: f64 = 20.0;

impl ModeEnvironment {
    /// Assemble the environment from the linear response.
    pub fn build(
        device: &DeviceSpec,
        bias: &BiasPoint,
        table: &DispersionTable,
        drive: &DriveConfig,
        include_reflections: bool,
    ) -> Result<Self> {
        Self::build_with_convention(
            device,
            bias,
            table,
            drive,
            include_reflections,
            ReflectionConvention::Magnitude,
        )
    }

    /// Assemble the environment choosing the reflection convention.
    pub fn build_with_convention(
        device: &DeviceSpec,
        bias: &BiasPoint,
        table: &DispersionTable,
        drive: &DriveConfig,
        include_reflections: bool,
        convention: ReflectionConvention,
    ) -> Result<Self> {
        let n = device.total_cells() as f64;
        let z0 = device.environment_impedance;
        let freqs = mode_frequencies_raw(drive.pa_pump.omega, drive.fc_pump.omega, drive.signal.omega);
        let degenerate = {
            let (ws, wi) = (freqs[ModeId::Signal.index()], freqs[ModeId::Idler.index()]);
            wi > 0.0 && ((ws - wi) / ws).abs() < 1e-9
        };
        let alpha_cap = MAX_TOTAL_DECAY_NEPERS / n;
        let mut modes = [None; MODE_COUNT];
        for mode in ModeId::ALL {
            let idx = mode.index();
            let omega = freqs[idx];
            if omega <= 0.0 {
                continue;
            }
            if degenerate && mode == ModeId::Idler {
                continue;
            }
            let mut k = table.lookup_k(omega)?;
            k.im = k.im.min(alpha_cap);
            let (gamma, t, gamma_tilde) = if include_reflections {
                let z = table.lookup_impedance(omega)?;
                reflection_factors(z, z0, k, n, convention)
                    .map_err(|e| Error::Singular(format!("mode {}: {e}", mode.label())))?
            } else {
                (
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                )
            };
            let dressed = dressed_coefficients(&device.junction, bias, omega)?;
            modes[idx] = Some(ModePoint {
                omega,
                k,
                sign: propagation_sign(mode, drive.direction),
                gamma,
                t,
                gamma_tilde,
                eps: dressed.first_order,
                xi: dressed.second_order,
            });
        }
        Ok(Self {
            modes,
            total_cells: n,
            z0,
            degenerate,
        })
    }

    /// Assemble an environment directly from per-mode data (uniform toy
    /// lines, custom dispersion).
    pub fn from_modes(modes: [Option<ModePoint>; MODE_COUNT], total_cells: f64, z0: f64) -> Self {
        Self {
            modes,
            total_cells,
            z0,
            degenerate: false,
        }
    }

    /// Flip the propagation sign of one mode in place.
    pub fn flip_mode_sign(&mut self, id: ModeId) {
        if let Some(m) = self.modes[id.index()].as_mut() {
            m.sign = -m.sign;
        }
    }

    /// Remove a mode from the basis.
    pub fn clear_mode(&mut self, id: ModeId) {
        self.modes[id.index()] = None;
    }

    pub fn mode(&self, id: ModeId) -> Option<&ModePoint> {
        self.modes[id.index()].as_ref()
    }

    pub fn mode_by_index(&self, idx: usize) -> Option<&ModePoint> {
        self.modes[idx].as_ref()
    }

    /// Initial amplitudes at x = 0: pumps and signal at their chip-input
    /// values, every other mode dark.
    pub fn initial_state(&self, drive: &DriveConfig) -> [Complex64; MODE_COUNT] {
        let mut state = [Complex64::default(); MODE_COUNT];
        if self.mode(ModeId::PaPump).is_some() && drive.pa_pump.enabled {
            state[ModeId::PaPump.index()] =
                Complex64::new(power_to_current(drive.pa_pump.power_dbm, self.z0), 0.0);
        }
        if self.mode(ModeId::FcPump).is_some() && drive.fc_pump.enabled {
            state[ModeId::FcPump.index()] =
                Complex64::new(power_to_current(drive.fc_pump.power_dbm, self.z0), 0.0);
        }
        if self.mode(ModeId::Signal).is_some() {
            state[ModeId::Signal.index()] =
                Complex64::new(power_to_current(drive.signal.power_dbm, self.z0), 0.0);
        }
        state
    }
}
