//! Phase-matching conditions for the amplification and conversion
//! processes, and pump placement by root finding.
//!
//! The amplification (PA) process a → s + i is matched when
//! Δβ_PA = k_a − k_s − k_i + χ_a (1 + Γ_a²)(k_a − 2k_s − 2k_i) vanishes;
//! the down-conversion (FC) process s → c + d when
//! Δβ_FC = k_c + k_d − k_s + χ_c (1 + Γ_c²)(k_c + 2k_d − 2k_s) does. The χ
//! terms are the pump self-phase modulation ξ|I₀|²/8 evaluated with the
//! dressed Kerr coefficient at the pump's own frequency. Up-conversion
//! s → u − c carries only the linear mismatch k_s + k_c − k_u; no Kerr
//! correction is defined for it.

use crate::constants::rad_to_ghz;
use crate::device::{dressed_coefficients, BiasPoint, DeviceSpec};
use crate::dispersion::DispersionTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    /// Parametric amplification: pump a, signal/idler pair.
    Pa,
    /// Down conversion: pump c, signal s, down-converted d.
    FcDown,
    /// Up conversion: pump c, signal s, up-converted u.
    FcUp,
}

impl Process {
    pub fn label(self) -> &'static str {
        match self {
            Process::Pa => "pa",
            Process::FcDown => "fc-down",
            Process::FcUp => "fc-up",
        }
    }
}

/// A solved pump placement with its matched partner tones (rad/s).
#[derive(Debug, Clone, Copy)]
pub struct MatchedTriplet {
    pub process: Process,
    pub pump: f64,
    pub signal: f64,
    /// Idler, down- or up-converted tone depending on the process.
    pub partner: f64,
    /// Residual mismatch at the returned root (rad/cell).
    pub residual: f64,
}

/// Mismatch of one process over a grid of signal frequencies.
#[derive(Debug, Clone)]
pub struct MismatchCurve {
    pub process: Process,
    pub pump: f64,
    pub pump_amplitude: f64,
    /// Signal angular frequencies (rad/s).
    pub frequencies: Vec<f64>,
    /// Δβ (rad/cell); NaN where a mode was evanescent.
    pub mismatch: Vec<f64>,
}

fn propagating_k(table: &DispersionTable, omega: f64, role: &str) -> Result<f64> {
    if table.in_stopband(omega) {
        return Err(Error::Domain(format!(
            "{role} tone at {:.4} GHz is evanescent (inside a stopband)",
            rad_to_ghz(omega)
        )));
    }
    Ok(table.lookup_k(omega)?.re)
}

fn self_phase(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    omega_pump: f64,
    amplitude: f64,
) -> Result<(f64, f64)> {
    let xi = dressed_coefficients(&device.junction, bias, omega_pump)?.second_order;
    let chi = xi * amplitude * amplitude / 8.0;
    let z = table.lookup_impedance(omega_pump)?;
    let z0 = device.environment_impedance;
    let gamma = (z - z0).norm() / (z + z0).norm();
    Ok((chi, gamma))
}

/// Δβ for the amplification process at signal frequency `omega_s` with the
/// pump at `omega_a` carrying current amplitude `pump_amplitude`.
pub fn pa_mismatch(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    omega_s: f64,
    omega_a: f64,
    pump_amplitude: f64,
) -> Result<f64> {
    if omega_s >= omega_a {
        return Err(Error::Domain("signal must lie below the PA pump".into()));
    }
    let omega_i = omega_a - omega_s;
    let ka = propagating_k(table, omega_a, "pump")?;
    let ks = propagating_k(table, omega_s, "signal")?;
    let ki = propagating_k(table, omega_i, "idler")?;
    let (chi, gamma) = self_phase(device, bias, table, omega_a, pump_amplitude)?;
    Ok(ka - ks - ki + chi * (1.0 + gamma * gamma) * (ka - 2.0 * ks - 2.0 * ki))
}

/// Δβ for the down-conversion process at signal frequency `omega_s` with
/// the conversion pump at `omega_c`.
pub fn fc_mismatch(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    omega_s: f64,
    omega_c: f64,
    pump_amplitude: f64,
) -> Result<f64> {
    if omega_s <= omega_c {
        return Err(Error::Domain("signal must lie above the FC pump".into()));
    }
    let omega_d = omega_s - omega_c;
    let kc = propagating_k(table, omega_c, "pump")?;
    let ks = propagating_k(table, omega_s, "signal")?;
    let kd = propagating_k(table, omega_d, "down-converted")?;
    let (chi, gamma) = self_phase(device, bias, table, omega_c, pump_amplitude)?;
    Ok(kc + kd - ks + chi * (1.0 + gamma * gamma) * (kc + 2.0 * kd - 2.0 * ks))
}

/// Linear mismatch of the up-conversion process, k_s + k_c − k_u.
pub fn up_conversion_mismatch(
    table: &DispersionTable,
    omega_s: f64,
    omega_c: f64,
) -> Result<f64> {
    let omega_u = omega_s + omega_c;
    let ks = propagating_k(table, omega_s, "signal")?;
    let kc = propagating_k(table, omega_c, "pump")?;
    let ku = propagating_k(table, omega_u, "up-converted")?;
    Ok(ks + kc - ku)
}

/// Evaluate one process's mismatch over a signal-frequency grid at a fixed
/// pump; evanescent points come back as NaN.
pub fn mismatch_curve(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    process: Process,
    pump: f64,
    pump_amplitude: f64,
    signal_omegas: &[f64],
) -> MismatchCurve {
    let mismatch = signal_omegas
        .iter()
        .map(|&ws| {
            let r = match process {
                Process::Pa => pa_mismatch(device, bias, table, ws, pump, pump_amplitude),
                Process::FcDown => fc_mismatch(device, bias, table, ws, pump, pump_amplitude),
                Process::FcUp => up_conversion_mismatch(table, ws, pump),
            };
            r.unwrap_or(f64::NAN)
        })
        .collect();
    MismatchCurve {
        process,
        pump,
        pump_amplitude,
        frequencies: signal_omegas.to_vec(),
        mismatch,
    }
}

const SCAN_STEP: f64 = std::f64::consts::TAU * 10e6; // 10 MHz
const REFINE_TO: f64 = std::f64::consts::TAU * 0.2e6;

/// Place a pump by solving the phase-matching condition.
///
/// For [`Process::Pa`], `target` is the design signal-to-idler detuning and
/// the root is searched in the pump frequency with
/// ω_s = ω_pump/2 + target/2. For the conversion processes, `target` is the
/// signal frequency and the root is searched in the conversion-pump
/// frequency. The scan walks `bracket` at 10 MHz and bisects each sign
/// change; the lowest-frequency root is returned.
pub fn solve_pump_placement(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    process: Process,
    target: f64,
    pump_amplitude: f64,
    bracket: (f64, f64),
) -> Result<MatchedTriplet> {
    let mismatch_at = |pump: f64| -> Option<f64> {
        match process {
            Process::Pa => {
                pa_mismatch(device, bias, table, pump / 2.0 + target / 2.0, pump, pump_amplitude)
                    .ok()
            }
            Process::FcDown => {
                fc_mismatch(device, bias, table, target, pump, pump_amplitude).ok()
            }
            Process::FcUp => up_conversion_mismatch(table, target, pump).ok(),
        }
    };
    let (lo, hi) = bracket;
    if !(hi > lo) {
        return Err(Error::Config("pump bracket must be increasing".into()));
    }
    let n = ((hi - lo) / SCAN_STEP).ceil() as usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut root: Option<(f64, f64)> = None;
    for i in 0..=n {
        let f = lo + (hi - lo) * i as f64 / n as f64;
        if let Some(v) = mismatch_at(f) {
            if let Some((fp, vp)) = prev {
                if vp == 0.0 {
                    root = Some((fp, vp));
                    break;
                }
                if vp.signum() != v.signum() {
                    // Bisect.
                    let (mut a, mut b, mut va) = (fp, f, vp);
                    while b - a > REFINE_TO {
                        let m = 0.5 * (a + b);
                        match mismatch_at(m) {
                            Some(vm) if vm.signum() == va.signum() => {
                                a = m;
                                va = vm;
                            }
                            Some(_) => b = m,
                            None => break,
                        }
                    }
                    let fr = 0.5 * (a + b);
                    root = Some((fr, mismatch_at(fr).unwrap_or(f64::NAN)));
                    break;
                }
            }
            prev = Some((f, v));
        } else {
            prev = None;
        }
    }
    let (pump, residual) = root.ok_or_else(|| {
        Error::NoRoot(format!(
            "no {} phase-matching root between {:.3} and {:.3} GHz",
            process.label(),
            rad_to_ghz(lo),
            rad_to_ghz(hi)
        ))
    })?;
    let (signal, partner) = match process {
        Process::Pa => (pump / 2.0 + target / 2.0, pump / 2.0 - target / 2.0),
        Process::FcDown => (target, target - pump),
        Process::FcUp => (target, target + pump),
    };
    Ok(MatchedTriplet {
        process,
        pump,
        signal,
        partner,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ghz_to_rad;
    use crate::dispersion::{compute_dispersion, DispersionConfig, DispersionTable};
    use std::sync::OnceLock;

    fn device() -> DeviceSpec {
        crate::config::reference_design()
    }

    fn design_table() -> &'static DispersionTable {
        static TABLE: OnceLock<DispersionTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let dev = device();
            let cfg = DispersionConfig::for_device(&dev).cover(ghz_to_rad(16.2));
            compute_dispersion(&dev, &cfg).unwrap()
        })
    }

    #[test]
    fn zero_amplitude_is_the_linear_mismatch() {
        let dev = device();
        let t = design_table();
        let (ws, wa) = (ghz_to_rad(7.3), ghz_to_rad(14.4));
        let full = pa_mismatch(&dev, &dev.bias, t, ws, wa, 0.0).unwrap();
        let ka = t.lookup_k(wa).unwrap().re;
        let ks = t.lookup_k(ws).unwrap().re;
        let ki = t.lookup_k(wa - ws).unwrap().re;
        approx::assert_relative_eq!(full, ka - ks - ki, max_relative = 1e-12);
    }

    #[test]
    fn pa_mismatch_is_symmetric_in_signal_and_idler() {
        let dev = device();
        let t = design_table();
        let wa = ghz_to_rad(14.4);
        let amp = 1.3e-6;
        for d in [0.3e9, 0.9e9, 1.8e9] {
            let ws = wa / 2.0 + std::f64::consts::TAU * d;
            let wi = wa - ws;
            let a = pa_mismatch(&dev, &dev.bias, t, ws, wa, amp).unwrap();
            let b = pa_mismatch(&dev, &dev.bias, t, wi, wa, amp).unwrap();
            approx::assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn kerr_correction_vanishes_quadratically() {
        let dev = device();
        let t = design_table();
        let (ws, wa) = (ghz_to_rad(7.4), ghz_to_rad(14.45));
        let base = pa_mismatch(&dev, &dev.bias, t, ws, wa, 0.0).unwrap();
        let d1 = pa_mismatch(&dev, &dev.bias, t, ws, wa, 0.4e-6).unwrap() - base;
        let d2 = pa_mismatch(&dev, &dev.bias, t, ws, wa, 0.8e-6).unwrap() - base;
        approx::assert_relative_eq!(d2 / d1, 4.0, max_relative = 1e-9);
    }

    #[test]
    fn fc_root_shifts_monotonically_with_pump_amplitude() {
        let dev = device();
        let t = design_table();
        let ws = ghz_to_rad(7.65);
        let mut previous = f64::NEG_INFINITY;
        for amp_dbm in [-100.0, -90.0, -84.0, -80.0] {
            let amp = crate::modes::power_to_current(amp_dbm, 50.0);
            let v = fc_mismatch(&dev, &dev.bias, t, ws, ghz_to_rad(4.6), amp).unwrap();
            assert!(v < previous || previous == f64::NEG_INFINITY);
            previous = v;
        }
    }

    #[test]
    fn evanescent_tones_are_rejected() {
        let dev = device();
        let t = design_table();
        // 5.1 GHz sits inside the first loading stopband.
        assert!(pa_mismatch(&dev, &dev.bias, t, ghz_to_rad(5.1), ghz_to_rad(14.4), 0.0).is_err());
    }

    #[test]
    fn design_pump_placements_match_the_design_targets() {
        let dev = device();
        let t = design_table();
        let pa = solve_pump_placement(
            &dev,
            &dev.bias,
            t,
            Process::Pa,
            ghz_to_rad(1.0),
            0.0,
            (ghz_to_rad(14.0), ghz_to_rad(15.2)),
        )
        .unwrap();
        assert!((rad_to_ghz(pa.signal) - 7.65).abs() < 0.15, "fs = {}", rad_to_ghz(pa.signal));
        assert!((rad_to_ghz(pa.partner) - 6.65).abs() < 0.15, "fi = {}", rad_to_ghz(pa.partner));
        let fc = solve_pump_placement(
            &dev,
            &dev.bias,
            t,
            Process::FcDown,
            pa.signal,
            0.0,
            (ghz_to_rad(3.5), ghz_to_rad(4.87)),
        )
        .unwrap();
        assert!((rad_to_ghz(fc.pump) - 4.7).abs() < 0.2, "fc = {}", rad_to_ghz(fc.pump));
        assert!((rad_to_ghz(fc.partner) - 2.95).abs() < 0.15, "fd = {}", rad_to_ghz(fc.partner));
    }

    #[test]
    fn up_conversion_prefers_the_low_pump_placement() {
        let t = design_table();
        let ws = ghz_to_rad(7.6);
        let low = up_conversion_mismatch(t, ws, ghz_to_rad(3.15)).unwrap();
        let designed = up_conversion_mismatch(t, ws, ghz_to_rad(4.7)).unwrap();
        assert!(
            low.abs() < designed.abs(),
            "up-conversion mismatch {low:.2e} vs {designed:.2e}"
        );
    }

    #[test]
    fn no_root_in_an_empty_bracket_errors() {
        let dev = device();
        let t = design_table();
        let r = solve_pump_placement(
            &dev,
            &dev.bias,
            t,
            Process::Pa,
            ghz_to_rad(1.0),
            0.0,
            (ghz_to_rad(15.3), ghz_to_rad(15.8)),
        );
        assert!(matches!(r, Err(Error::NoRoot(_))));
    }

    #[test]
    fn matched_signal_sits_on_the_gain_plateau() {
        // With reflections off and a weak pump, the matched signal's
        // coupled-mode gain is within half a dB of the best gain in a
        // ±0.5 GHz scan: the placement is consistent with where the
        // amplifier actually performs. (The absolute maximum of the
        // small-signal gain sits at half the pump frequency, where the
        // mismatch curvature is smallest, so "maximum at the root" would
        // be too strong a claim.)
        let dev = device();
        let t = design_table();
        let pa = solve_pump_placement(
            &dev,
            &dev.bias,
            t,
            Process::Pa,
            ghz_to_rad(1.0),
            0.0,
            (ghz_to_rad(14.0), ghz_to_rad(15.2)),
        )
        .unwrap();
        let drive = crate::modes::DriveConfig {
            pa_pump: crate::modes::PumpTone {
                omega: pa.pump,
                power_dbm: -78.0,
                enabled: true,
            },
            fc_pump: crate::modes::PumpTone {
                omega: ghz_to_rad(4.7),
                power_dbm: -73.0,
                enabled: false,
            },
            signal: crate::modes::SignalTone {
                omega: pa.signal,
                power_dbm: -133.0,
            },
            direction: crate::modes::Direction::Forward,
        };
        let options = crate::cme::CmeOptions {
            include_4wm: false,
            include_reflections: false,
            sample_step: None,
            ..Default::default()
        };
        let grid: Vec<f64> = (-25..=25)
            .map(|i| pa.signal + i as f64 * ghz_to_rad(0.02))
            .collect();
        let points = crate::cme::sweep_spectrum(&dev, &dev.bias, t, &drive, &grid, &options);
        // The exact half-pump point is phase-sensitive (degenerate
        // amplification, up to 3 dB above the plateau); compare against
        // the phase-insensitive points only.
        let best = points
            .iter()
            .filter(|p| p.gain_db.is_finite() && !p.degenerate)
            .max_by(|a, b| a.gain_db.total_cmp(&b.gain_db))
            .unwrap();
        let at_root = points
            .iter()
            .min_by(|a, b| {
                (a.frequency - pa.signal)
                    .abs()
                    .total_cmp(&(b.frequency - pa.signal).abs())
            })
            .unwrap();
        assert!(
            at_root.gain_db > best.gain_db - 0.5,
            "matched-signal gain {:.2} dB vs scan best {:.2} dB at {:.4} GHz",
            at_root.gain_db,
            best.gain_db,
            rad_to_ghz(best.frequency)
        );
        assert!(best.gain_db > 3.0, "scan best only {:.2} dB", best.gain_db);
    }

    #[test]
    fn roots_are_stable_under_grid_refinement() {
        let dev = device();
        let coarse = design_table();
        let mut cfg = DispersionConfig::for_device(&dev).cover(ghz_to_rad(16.2));
        cfg.omega_step /= 2.0;
        let fine = compute_dispersion(&dev, &cfg).unwrap();
        for table in [coarse, &fine] {
            let _ = table; // both solve below
        }
        let solve = |table: &DispersionTable| {
            solve_pump_placement(
                &dev,
                &dev.bias,
                table,
                Process::Pa,
                ghz_to_rad(1.0),
                0.0,
                (ghz_to_rad(14.0), ghz_to_rad(15.2)),
            )
            .unwrap()
            .pump
        };
        let shift = (solve(coarse) - solve(&fine)).abs();
        assert!(
            shift < std::f64::consts::TAU * 1e6,
            "root moved {:.3} MHz on grid refinement",
            shift / std::f64::consts::TAU / 1e6
        );
    }

    #[test]
    fn mismatch_curve_marks_evanescent_points() {
        let dev = device();
        let t = design_table();
        let grid: Vec<f64> = (0..40).map(|i| ghz_to_rad(4.6 + 0.05 * i as f64)).collect();
        let curve = mismatch_curve(&dev, &dev.bias, t, Process::Pa, ghz_to_rad(14.4), 0.0, &grid);
        assert!(curve.mismatch.iter().any(|v| v.is_nan()));
        assert!(curve.mismatch.iter().any(|v| v.is_finite()));
    }
}
