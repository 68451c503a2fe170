//! Linear (small-signal) response of the loaded line via two-port cascades.
//!
//! Every unit cell is a symmetric T section: half the dressed junction
//! inductance, the shunt branch (ground capacitor, in series with the rpm
//! tank on resonator cells), and the second inductance half. The full line
//! response comes from cascading one supercell and raising it to the
//! supercell count; transmission, Bloch wavenumber, characteristic
//! impedance and stopbands all derive from that cascade.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::ghz_to_rad;
use crate::device::{self, BiasPoint, CellProfile, DeviceSpec};
use crate::error::{Error, Result};

/// Loss tangent floor used only for tracking the Bloch phase across
/// resonant stopbands; a strictly lossless line leaves the branch of the
/// phase walk ambiguous at pole crossings.
const TRACK_LOSS_FLOOR: f64 = 1e-4;

/// ABCD matrix of a reciprocal two-port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPortMatrix {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn series(z: Complex64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: z,
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn shunt(y: Complex64) -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: y,
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest entry magnitude, used for scaling long cascades.
    fn max_abs(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    fn scale(&self, s: f64) -> Self {
        Self {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }
}

/// Apply dielectric loss to a capacitance: C → C(1 − i tanδ).
pub fn lossy_capacitance(c: f64, tan_delta: f64) -> Complex64 {
    Complex64::new(c, -c * tan_delta)
}

/// ABCD matrix of one symmetric unit cell.
///
/// `ld_dressed` is the dressed junction inductance at the analysis
/// frequency, `c_ground` the cell's ground capacitance and `rpm` the tank
/// parameters when the cell carries a resonator. Dielectric loss applies to
/// both the ground and tank capacitors.
pub fn unit_cell_matrix(
    ld_dressed: f64,
    c_ground: f64,
    rpm: Option<(f64, f64)>,
    tan_delta: f64,
    omega: f64,
) -> Result<TwoPortMatrix> {
    let cc = lossy_capacitance(c_ground, tan_delta);
    let jw = Complex64::new(0.0, omega);
    // Shunt admittance of C_c in series with the tank (when present),
    // written pole-explicitly so ω = 0 stays finite.
    let y = match rpm {
        Some((l_rpm, c_rpm)) => {
            let cr = lossy_capacitance(c_rpm, tan_delta);
            let tank_det = Complex64::new(1.0, 0.0) - l_rpm * cr * omega * omega;
            let den = tank_det - cc * l_rpm * omega * omega;
            let scale = tank_det.norm() + (cc * l_rpm * omega * omega).norm();
            if den.norm() < 1e-14 * scale.max(1.0) {
                return Err(Error::Singular(format!(
                    "shunt branch resonates at {:.6} GHz",
                    crate::constants::rad_to_ghz(omega)
                )));
            }
            jw * cc * tank_det / den
        }
        None => jw * cc,
    };
    let zs = jw * ld_dressed * 0.5;
    let a = Complex64::new(1.0, 0.0) + zs * y;
    Ok(TwoPortMatrix {
        a,
        b: zs * (Complex64::new(2.0, 0.0) + zs * y),
        c: y,
        d: a,
    })
}

/// Ordered product of a chain of two-ports (input to output).
pub fn cascade(matrices: &[TwoPortMatrix]) -> TwoPortMatrix {
    matrices
        .iter()
        .fold(TwoPortMatrix::identity(), |acc, m| acc.mul(m))
}

/// A cascade kept as `matrix * exp(log_scale)` so deep stopbands do not
/// overflow.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMatrix {
    pub matrix: TwoPortMatrix,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn new(m: TwoPortMatrix) -> Self {
        Self {
            matrix: m,
            log_scale: 0.0,
        }
        .normalized()
    }

    fn normalized(self) -> Self {
        let s = self.matrix.max_abs();
        if s.is_finite() && s > 0.0 {
            Self {
                matrix: self.matrix.scale(1.0 / s),
                log_scale: self.log_scale + s.ln(),
            }
        } else {
            self
        }
    }

    fn mul(&self, rhs: &Self) -> Self {
        Self {
            matrix: self.matrix.mul(&rhs.matrix),
            log_scale: self.log_scale + rhs.log_scale,
        }
        .normalized()
    }

    /// Raise a single-block matrix to an integer power.
    pub fn power(block: TwoPortMatrix, n: usize) -> Self {
        let mut result = Self {
            matrix: TwoPortMatrix::identity(),
            log_scale: 0.0,
        };
        let mut base = Self::new(block);
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        result
    }

    /// S21 = 2/(A + B/Z0 + C Z0 + D) referred to `z0`; underflows to zero
    /// for extremely opaque cascades.
    pub fn s21(&self, z0: f64) -> Complex64 {
        let m = &self.matrix;
        let den = m.a + m.b / z0 + m.c * z0 + m.d;
        Complex64::from_polar((-self.log_scale).exp(), 0.0) * 2.0 / den
    }

    /// S11 referred to `z0`, from the same cascade.
    pub fn s11(&self, z0: f64) -> Complex64 {
        let m = &self.matrix;
        (m.a + m.b / z0 - m.c * z0 - m.d) / (m.a + m.b / z0 + m.c * z0 + m.d)
    }

    /// cosh of the total Bloch exponent, as (value, extra log scale).
    pub fn half_trace(&self) -> (Complex64, f64) {
        ((self.matrix.a + self.matrix.d) * 0.5, self.log_scale)
    }
}

/// Forward transmission of a plain (unscaled) cascade matrix.
pub fn s21_from_matrix(m: &TwoPortMatrix, z0: f64) -> Complex64 {
    let den = m.a + m.b / z0 + m.c * z0 + m.d;
    Complex64::new(2.0, 0.0) / den
}

/// Input reflection of a plain cascade matrix.
pub fn s11_from_matrix(m: &TwoPortMatrix, z0: f64) -> Complex64 {
    (m.a + m.b / z0 - m.c * z0 - m.d) / (m.a + m.b / z0 + m.c * z0 + m.d)
}

/// Image (characteristic) impedance √(B/C), root with Re ≥ 0.
pub fn characteristic_impedance(m: &TwoPortMatrix) -> Result<Complex64> {
    if m.c.norm() == 0.0 {
        return Err(Error::Singular(
            "characteristic impedance undefined: C entry is zero".into(),
        ));
    }
    let z = (m.b / m.c).sqrt();
    Ok(if z.re < 0.0 { -z } else { z })
}

/// Principal Bloch exponent γ = acosh((A + D)/2), Re ≥ 0.
pub fn bloch_exponent(m: &TwoPortMatrix) -> Complex64 {
    ((m.a + m.d) * 0.5).acosh()
}

fn acosh_scaled(z_hat: Complex64, log_scale: f64) -> Complex64 {
    if log_scale < 300.0 {
        (z_hat * log_scale.exp()).acosh()
    } else {
        // acosh(z) → ln(2z) for |z| ≫ 1.
        let ln2z = (z_hat * 2.0).ln();
        Complex64::new(ln2z.re + log_scale, ln2z.im)
    }
}

/// Attenuation constant of a weakly lossy line section: α = G Z / 2 in
/// nepers per cell, with G the shunt conductance per cell.
pub fn attenuation_constant(g_shunt: f64, z: f64) -> f64 {
    0.5 * g_shunt * z
}

/// One point of the computed linear response.
#[derive(Debug, Clone, Copy)]
pub struct DispersionPoint {
    /// Angular frequency (rad/s).
    pub frequency: f64,
    /// Unwrapped Bloch wavenumber (rad/cell).
    pub wavenumber: f64,
    /// Nonlinear part k* = k − ω/v_p (rad/cell).
    pub kstar: f64,
    /// Per-cell attenuation (nepers/cell).
    pub attenuation: f64,
    /// Characteristic impedance (Ω).
    pub impedance: Complex64,
    /// Forward transmission into the environment impedance.
    pub s21: Complex64,
}

/// Linear response over a frequency grid, plus detected stopbands.
#[derive(Debug, Clone)]
pub struct DispersionTable {
    points: Vec<DispersionPoint>,
    stopbands: Vec<(f64, f64)>,
    mean_velocity: f64,
}

/// Sweep configuration for [`compute_dispersion`].
#[derive(Debug, Clone, Copy)]
pub struct DispersionConfig {
    /// Grid start (rad/s).
    pub omega_start: f64,
    /// Grid end, inclusive (rad/s).
    pub omega_stop: f64,
    /// Grid spacing (rad/s).
    pub omega_step: f64,
    /// Operating dc bias (the capacitor profile keeps the design bias).
    pub bias: BiasPoint,
    /// Operating dielectric loss tangent.
    pub loss_tangent: f64,
    /// Track the Bloch phase on the full cascade instead of one supercell.
    pub track_total: bool,
}

impl DispersionConfig {
    /// Default sweep for a device: 0.02–16 GHz on a 10 MHz grid at the
    /// device's own bias and loss tangent.
    pub fn for_device(device: &DeviceSpec) -> Self {
        Self {
            omega_start: ghz_to_rad(0.02),
            omega_stop: ghz_to_rad(16.0),
            omega_step: ghz_to_rad(0.01),
            bias: device.bias,
            loss_tangent: device.loss_tangent,
            track_total: false,
        }
    }

    /// Widen the sweep so that `omega` is covered.
    pub fn cover(mut self, omega: f64) -> Self {
        if omega + self.omega_step > self.omega_stop {
            self.omega_stop = omega + 2.0 * self.omega_step;
        }
        self
    }
}

struct SupercellModel<'a> {
    device: &'a DeviceSpec,
    cells: &'a CellProfile,
    bias: BiasPoint,
}

impl SupercellModel<'_> {
    fn matrix(&self, omega: f64, tan_delta: f64) -> Result<TwoPortMatrix> {
        let ld = device::dressed_coefficients(&self.device.junction, &self.bias, omega)?
            .static_inductance;
        let rpm = (self.device.rpm.inductance, self.device.rpm.capacitance);
        let mut m = TwoPortMatrix::identity();
        for x in 0..self.device.loading.supercell_length {
            let cell = unit_cell_matrix(
                ld,
                self.cells.capacitance(x),
                self.cells.has_rpm(x).then_some(rpm),
                tan_delta,
                omega,
            )
            .map_err(|e| Error::Singular(format!("cell {x}: {e}")))?;
            m = m.mul(&cell);
        }
        Ok(m)
    }
}

/// Continuity tracker for the Bloch phase along a frequency sweep.
///
/// The acosh principal value folds the phase into (−π, π]; this walks the
/// sweep keeping the 2π branch continuous, bisecting the step whenever the
/// phase moves too fast (stopband edges, resonator poles). A small loss
/// keeps the walk single-branched; for lossless lines the pole crossings are
/// resolved towards the lossy limit.
struct PhaseWalk<F> {
    eval: F,
    f_prev: f64,
    theta_prev: f64,
    min_step: f64,
}

impl<F: Fn(f64) -> Result<Complex64>> PhaseWalk<F> {
    fn start(eval: F, omega0: f64) -> Result<Self> {
        let gamma = eval(omega0)?;
        Ok(Self {
            eval,
            f_prev: omega0,
            theta_prev: gamma.im,
            min_step: 1e-2,
        })
    }

    fn advance(&mut self, omega: f64) -> Result<(f64, f64)> {
        let gamma = (self.eval)(omega)?;
        let phi = gamma.im;
        let two_pi = std::f64::consts::TAU;
        let m0 = ((self.theta_prev - phi) / two_pi).round();
        let mut best = phi + two_pi * m0;
        for dm in [-1.0, 1.0] {
            let cand = phi + two_pi * (m0 + dm);
            if (cand - self.theta_prev).abs() < (best - self.theta_prev).abs() {
                best = cand;
            }
        }
        if (best - self.theta_prev).abs() > 0.4 && (omega - self.f_prev) > self.min_step {
            let mid = 0.5 * (self.f_prev + omega);
            self.advance(mid)?;
            return self.advance(omega);
        }
        if (best - self.theta_prev).abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::Numerical(format!(
                "Bloch phase tracking lost near {:.6} GHz",
                crate::constants::rad_to_ghz(omega)
            )));
        }
        self.f_prev = omega;
        self.theta_prev = best;
        Ok((best, gamma.re.abs()))
    }
}

/// Compute the linear response of `device` over the configured grid.
pub fn compute_dispersion(device: &DeviceSpec, cfg: &DispersionConfig) -> Result<DispersionTable> {
    device.validate()?;
    if !(cfg.omega_step > 0.0) || cfg.omega_stop <= cfg.omega_start {
        return Err(Error::Config("dispersion grid must be increasing".into()));
    }
    let cells = device::build_cell_array(device, device.design_frequency)?;
    let model = SupercellModel {
        device,
        cells: &cells,
        bias: cfg.bias,
    };
    let n0 = device.loading.supercell_length as f64;
    let n_sc = device.supercell_count;
    let n_total = device.total_cells() as f64;
    let z0 = device.environment_impedance;

    let ld0 = device::static_inductance(&device.junction, &cfg.bias)?;
    let mean_velocity = 1.0 / (ld0 * cells.mean_capacitance()).sqrt();

    let n_points = ((cfg.omega_stop - cfg.omega_start) / cfg.omega_step).round() as usize + 1;
    let omegas: Vec<f64> = (0..n_points)
        .map(|i| cfg.omega_start + i as f64 * cfg.omega_step)
        .collect();

    // Per-point transmission and impedance are independent; compute them in
    // parallel, then run the sequential phase walk.
    let raw: Vec<Result<(Complex64, Complex64)>> = omegas
        .par_iter()
        .map(|&w| {
            let m_sc = model.matrix(w, cfg.loss_tangent)?;
            let total = ScaledMatrix::power(m_sc, n_sc);
            let s21 = total.s21(z0);
            let z = characteristic_impedance(&m_sc)?;
            Ok((s21, z))
        })
        .collect();

    let track_tand = cfg.loss_tangent.max(TRACK_LOSS_FLOOR);
    // Anchor the walk at a low frequency where the phase is unambiguous.
    let anchor = ghz_to_rad(0.02).min(cfg.omega_start);
    let (cells_per_block, eval): (f64, Box<dyn Fn(f64) -> Result<Complex64>>) = if cfg.track_total
    {
        (
            n_total,
            Box::new(move |w| {
                let m = model.matrix(w, track_tand)?;
                let (z, s) = ScaledMatrix::power(m, n_sc).half_trace();
                Ok(acosh_scaled(z, s))
            }),
        )
    } else {
        (
            n0,
            Box::new(move |w| Ok(bloch_exponent(&model.matrix(w, track_tand)?))),
        )
    };
    let mut walk = PhaseWalk::start(eval, anchor)?;

    let mut points = Vec::with_capacity(n_points);
    for (i, &w) in omegas.iter().enumerate() {
        let (s21, z) = match &raw[i] {
            Ok(v) => *v,
            Err(e) => return Err(Error::Singular(e.to_string())),
        };
        let (theta, alpha) = walk.advance(w)?;
        let k = theta / cells_per_block;
        points.push(DispersionPoint {
            frequency: w,
            wavenumber: k,
            kstar: k - w / mean_velocity,
            attenuation: alpha / cells_per_block,
            impedance: z,
            s21,
        });
    }

    let stopbands = detect_stopbands(&points, -10.0);
    Ok(DispersionTable {
        points,
        stopbands,
        mean_velocity,
    })
}

fn detect_stopbands(points: &[DispersionPoint], threshold_db: f64) -> Vec<(f64, f64)> {
    // Fabry–Perot spikes inside a deep band can poke above the threshold;
    // merge bands separated by less than this.
    let merge_gap = ghz_to_rad(0.1);
    let mut bands: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for p in points {
        let db = 20.0 * p.s21.norm().log10();
        if db < threshold_db {
            if open.is_none() {
                open = Some(p.frequency);
            }
        } else if let Some(lo) = open.take() {
            bands.push((lo, p.frequency));
        }
    }
    if let Some(lo) = open {
        bands.push((lo, points.last().map(|p| p.frequency).unwrap_or(lo)));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in bands {
        match merged.last_mut() {
            Some((_, prev_hi)) if lo - *prev_hi < merge_gap => *prev_hi = hi,
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Maximal contiguous intervals where |S21| falls below `threshold_db`.
pub fn find_stopbands(table: &DispersionTable, threshold_db: f64) -> Vec<(f64, f64)> {
    detect_stopbands(&table.points, threshold_db)
}

impl DispersionTable {
    pub fn points(&self) -> &[DispersionPoint] {
        &self.points
    }

    /// Stopbands detected at the −10 dB threshold.
    pub fn stopbands(&self) -> &[(f64, f64)] {
        &self.stopbands
    }

    /// Spatial-average phase velocity used for the k* reference (cells/s).
    pub fn mean_velocity(&self) -> f64 {
        self.mean_velocity
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (
            self.points.first().map(|p| p.frequency).unwrap_or(0.0),
            self.points.last().map(|p| p.frequency).unwrap_or(0.0),
        )
    }

    fn bracket(&self, omega: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.omega_range();
        if omega < lo || omega > hi {
            return Err(Error::Domain(format!(
                "frequency {:.4} GHz outside the dispersion table ({:.4}–{:.4} GHz)",
                crate::constants::rad_to_ghz(omega),
                crate::constants::rad_to_ghz(lo),
                crate::constants::rad_to_ghz(hi)
            )));
        }
        let idx = self
            .points
            .partition_point(|p| p.frequency <= omega)
            .saturating_sub(1)
            .min(self.points.len() - 2);
        let p0 = &self.points[idx];
        let p1 = &self.points[idx + 1];
        let t = ((omega - p0.frequency) / (p1.frequency - p0.frequency)).clamp(0.0, 1.0);
        Ok((idx, t))
    }

    /// Complex wavenumber k + iα at `omega` by linear interpolation.
    pub fn lookup_k(&self, omega: f64) -> Result<Complex64> {
        let (i, t) = self.bracket(omega)?;
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        Ok(Complex64::new(
            p0.wavenumber + t * (p1.wavenumber - p0.wavenumber),
            p0.attenuation + t * (p1.attenuation - p0.attenuation),
        ))
    }

    /// Characteristic impedance at `omega` by linear interpolation.
    pub fn lookup_impedance(&self, omega: f64) -> Result<Complex64> {
        let (i, t) = self.bracket(omega)?;
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        Ok(p0.impedance + (p1.impedance - p0.impedance) * t)
    }

    /// Whether `omega` falls inside a detected (−10 dB) stopband.
    pub fn in_stopband(&self, omega: f64) -> bool {
        self.stopbands.iter().any(|&(lo, hi)| omega >= lo && omega <= hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::rad_to_ghz;
    use approx::assert_relative_eq;

    fn table_device() -> DeviceSpec {
        crate::config::reference_design()
    }

    #[test]
    fn lossy_capacitance_values() {
        let c = lossy_capacitance(32.2e-15, 4e-4);
        assert_eq!(c.re, 32.2e-15);
        assert_relative_eq!(c.im, -32.2e-15 * 4e-4);
        assert_eq!(lossy_capacitance(1e-15, 0.0), Complex64::new(1e-15, 0.0));
    }

    #[test]
    fn unit_cell_is_reciprocal() {
        let m = unit_cell_matrix(70e-12, 32e-15, Some((230e-12, 557e-15)), 0.0, ghz_to_rad(7.0))
            .unwrap();
        let det = m.determinant();
        assert!((det - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let lossy = unit_cell_matrix(70e-12, 32e-15, None, 4e-4, ghz_to_rad(9.0)).unwrap();
        assert!((lossy.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unit_cell_low_frequency_impedance() {
        // √(B/C) → √(L/C) at ω → 0, which is 1/√2 of √(2L/C).
        let l = 71.34e-12;
        let c = 32.26e-15;
        let m = unit_cell_matrix(l, c, None, 0.0, ghz_to_rad(0.001)).unwrap();
        let z = characteristic_impedance(&m).unwrap();
        assert_relative_eq!(z.re, (l / c).sqrt(), max_relative = 1e-5);
        assert_relative_eq!(z.re, (2.0 * l / c).sqrt() / 2f64.sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn capacitance_inversion_round_trips_through_the_cell() {
        // A cell designed for 47 Ω at the design frequency must present
        // exactly that image impedance there.
        let dev = table_device();
        let mut flat = dev.clone();
        flat.loading.fundamental_depth = 0.0;
        flat.loading.second_harmonic_depth = 0.0;
        let w = flat.design_frequency;
        let ld = device::dressed_coefficients(&flat.junction, &flat.bias, w)
            .unwrap()
            .static_inductance;
        for (x, rpm) in [(1usize, false), (0usize, true)] {
            let c = device::ground_capacitance(&flat, x, w).unwrap();
            let rpm_params = rpm.then_some((flat.rpm.inductance, flat.rpm.capacitance));
            let m = unit_cell_matrix(ld, c, rpm_params, 0.0, w).unwrap();
            let z = characteristic_impedance(&m).unwrap();
            assert_relative_eq!(z.re, 47.0, max_relative = 1e-6);
            assert!(z.im.abs() < 1e-6);
        }
    }

    #[test]
    fn cascade_identity_and_inverse() {
        let m = unit_cell_matrix(70e-12, 32e-15, None, 0.0, ghz_to_rad(5.0)).unwrap();
        assert_eq!(cascade(&[]), TwoPortMatrix::identity());
        assert_eq!(cascade(&[m]), m);
        // M · M⁻¹ = 1 (inverse of a unimodular ABCD matrix swaps a/d and
        // negates b/c).
        let minv = TwoPortMatrix {
            a: m.d,
            b: -m.b,
            c: -m.c,
            d: m.a,
        };
        let prod = cascade(&[m, minv]);
        assert!((prod.a - 1.0).norm() < 1e-9);
        assert!(prod.b.norm() < 1e-9);
        assert!(prod.c.norm() < 1e-9);
        assert!((prod.d - 1.0).norm() < 1e-9);
    }

    #[test]
    fn s21_of_identity_is_unity() {
        assert_eq!(s21_from_matrix(&TwoPortMatrix::identity(), 50.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn scaled_power_matches_plain_product() {
        let m = unit_cell_matrix(70e-12, 32e-15, None, 1e-3, ghz_to_rad(6.0)).unwrap();
        let plain = cascade(&vec![m; 17]);
        let scaled = ScaledMatrix::power(m, 17);
        let s = scaled.log_scale.exp();
        assert_relative_eq!((scaled.matrix.a * s).re, plain.a.re, max_relative = 1e-9);
        assert_relative_eq!((scaled.matrix.b * s).norm(), plain.b.norm(), max_relative = 1e-9);
    }

    #[test]
    fn lossless_cascade_is_unitary_in_passband() {
        let dev = table_device();
        let cells = device::build_cell_array(&dev, dev.design_frequency).unwrap();
        let model = SupercellModel {
            device: &dev,
            cells: &cells,
            bias: dev.bias,
        };
        for f_ghz in [2.0, 6.5, 7.0, 8.0, 11.5] {
            let m = model.matrix(ghz_to_rad(f_ghz), 0.0).unwrap();
            let total = ScaledMatrix::power(m, dev.supercell_count);
            let s21 = total.s21(50.0);
            let s11 = total.s11(50.0);
            let sum = s21.norm_sqr() + s11.norm_sqr();
            assert!((sum - 1.0).abs() < 1e-6, "unitarity broken at {f_ghz} GHz: {sum}");
        }
    }

    #[test]
    fn reciprocity_of_supercell() {
        let dev = table_device();
        let cells = device::build_cell_array(&dev, dev.design_frequency).unwrap();
        let model = SupercellModel {
            device: &dev,
            cells: &cells,
            bias: dev.bias,
        };
        for f_ghz in [1.0, 5.1, 9.7, 13.7, 15.5] {
            let m = model.matrix(ghz_to_rad(f_ghz), 4e-4).unwrap();
            assert!(
                (m.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-9,
                "det != 1 at {f_ghz} GHz"
            );
        }
    }

    #[test]
    fn characteristic_impedance_of_lc_cell() {
        let m = unit_cell_matrix(80e-12, 30e-15, None, 0.0, ghz_to_rad(0.01)).unwrap();
        let z = characteristic_impedance(&m).unwrap();
        assert_relative_eq!(z.re, (80e-12_f64 / 30e-15).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn attenuation_constant_trivial_cases() {
        assert_eq!(attenuation_constant(0.0, 47.0), 0.0);
        assert_relative_eq!(attenuation_constant(2e-7, 50.0), 5e-6, max_relative = 1e-12);
    }

    // Full-device sweeps are more expensive; keep them in one test each.

    #[test]
    fn table_s4_unbiased_stopbands() {
        let dev = table_device();
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.bias = BiasPoint::new(0.0);
        let table = compute_dispersion(&dev, &cfg).unwrap();
        let bands: Vec<(f64, f64)> = table
            .stopbands()
            .iter()
            .map(|&(a, b)| (rad_to_ghz(a), rad_to_ghz(b)))
            .collect();
        assert_eq!(bands.len(), 3, "expected exactly 3 stopbands, got {bands:?}");
        let centers: Vec<f64> = bands.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
        assert!((centers[0] - 5.1).abs() < 0.3, "first stopband at {}", centers[0]);
        assert!((centers[1] - 10.2).abs() < 0.3, "second stopband at {}", centers[1]);
        assert!((centers[2] - 13.8).abs() < 0.3, "third stopband at {}", centers[2]);
        // Bragg estimate for the first band: v_p/(2 N_0).
        let bragg = dev.nominal_phase_velocity().unwrap() / 132.0 / 1e9;
        assert!((centers[0] - bragg).abs() < 0.35);
    }

    #[test]
    fn table_s4_biased_passband_response() {
        let dev = table_device();
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.bias = BiasPoint::new(1.0e-6);
        cfg.omega_step = ghz_to_rad(0.02);
        let table = compute_dispersion(&dev, &cfg).unwrap();
        // Flat low-loss passband through 8 GHz, impedance near 50 Ω in band.
        for p in table.points() {
            let f = rad_to_ghz(p.frequency);
            let db = 20.0 * p.s21.norm().log10();
            if (0.5..=4.5).contains(&f) || (5.5..=8.0).contains(&f) {
                assert!(db > -2.0, "|S21| = {db:.2} dB at {f:.2} GHz");
            }
            if (6.0..=8.0).contains(&f) {
                assert!(p.impedance.re > 40.0 && p.impedance.re < 62.0);
            }
        }
        // Stopband transmission is deep.
        let in_band = |f: f64| {
            let i = table
                .points()
                .iter()
                .position(|p| rad_to_ghz(p.frequency) >= f)
                .unwrap();
            20.0 * table.points()[i].s21.norm().log10()
        };
        assert!(in_band(5.05) < -20.0);
        assert!(in_band(9.8) < -20.0);
    }

    #[test]
    fn wavenumber_low_frequency_limit_and_monotonicity() {
        let dev = table_device();
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.omega_stop = ghz_to_rad(9.0);
        cfg.omega_step = ghz_to_rad(0.02);
        let table = compute_dispersion(&dev, &cfg).unwrap();
        let p0 = &table.points()[1];
        // k → ω/v_p at low frequency, within ~1.5% of the nominal velocity.
        let vp = dev.nominal_phase_velocity().unwrap();
        assert_relative_eq!(p0.wavenumber, p0.frequency / vp, max_relative = 0.015);
        // Unwrapped k grows monotonically inside passbands.
        for w in table.points().windows(2) {
            let f = rad_to_ghz(w[0].frequency);
            let in_gap = table.in_stopband(w[0].frequency) || table.in_stopband(w[1].frequency);
            if !in_gap && f > 0.1 && w[0].attenuation < 1e-4 && w[1].attenuation < 1e-4 {
                assert!(
                    w[1].wavenumber > w[0].wavenumber,
                    "k not increasing at {f:.3} GHz"
                );
            }
        }
        // k* is small far from resonances.
        let mid = table
            .points()
            .iter()
            .find(|p| rad_to_ghz(p.frequency) >= 2.0)
            .unwrap();
        assert!(mid.kstar.abs() < 5e-4, "kstar = {}", mid.kstar);
    }

    #[test]
    fn bloch_consistency_total_vs_supercell() {
        let dev = table_device();
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.omega_start = ghz_to_rad(0.02);
        cfg.omega_stop = ghz_to_rad(9.0);
        cfg.omega_step = ghz_to_rad(0.05);
        let per_sc = compute_dispersion(&dev, &cfg).unwrap();
        cfg.track_total = true;
        let total = compute_dispersion(&dev, &cfg).unwrap();
        for (a, b) in per_sc.points().iter().zip(total.points()) {
            assert!(
                (a.wavenumber - b.wavenumber).abs() < 1e-9,
                "k mismatch at {:.3} GHz: {} vs {}",
                rad_to_ghz(a.frequency),
                a.wavenumber,
                b.wavenumber
            );
        }
    }

    #[test]
    fn stopband_free_flat_line() {
        // An unmodulated, resonator-free line has no stopbands below 12 GHz.
        let mut dev = table_device();
        dev.loading.fundamental_depth = 0.0;
        dev.loading.second_harmonic_depth = 0.0;
        // Push the tank far above the band instead of removing the cells.
        dev.rpm.inductance = 1e-15;
        dev.rpm.capacitance = 1e-18;
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.omega_stop = ghz_to_rad(12.0);
        cfg.omega_step = ghz_to_rad(0.05);
        let table = compute_dispersion(&dev, &cfg).unwrap();
        assert!(table.stopbands().is_empty(), "{:?}", table.stopbands());
    }

    #[test]
    fn lookup_interpolation_and_range_errors() {
        let dev = table_device();
        let mut cfg = DispersionConfig::for_device(&dev);
        cfg.omega_stop = ghz_to_rad(2.0);
        cfg.omega_step = ghz_to_rad(0.05);
        let table = compute_dispersion(&dev, &cfg).unwrap();
        let k = table.lookup_k(ghz_to_rad(1.0)).unwrap();
        assert!(k.re > 0.0 && k.im >= 0.0);
        assert!(table.lookup_k(ghz_to_rad(3.0)).is_err());
        assert!(table.lookup_impedance(ghz_to_rad(0.001)).is_err());
    }
}
