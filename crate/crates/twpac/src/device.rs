//! Physical device description and the dc-biased junction expansion.
//!
//! All quantities are SI: inductance in H, capacitance in F, current in A,
//! angular frequency in rad/s. Position along the line is measured in unit
//! cells, so wavenumbers elsewhere in the crate are rad/cell.

use crate::constants::REDUCED_FLUX_QUANTUM;
use crate::error::{Error, Result};

/// A Josephson junction: critical current plus its parallel-plate
/// capacitance. The unbiased inductance and plasma frequency follow from
/// these two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionParams {
    critical_current: f64,
    junction_capacitance: f64,
}

impl JunctionParams {
    pub fn new(critical_current: f64, junction_capacitance: f64) -> Result<Self> {
        if !(critical_current > 0.0) {
            return Err(Error::Domain(format!(
                "critical current must be positive, got {critical_current:e} A"
            )));
        }
        if !(junction_capacitance > 0.0) {
            return Err(Error::Domain(format!(
                "junction capacitance must be positive, got {junction_capacitance:e} F"
            )));
        }
        Ok(Self {
            critical_current,
            junction_capacitance,
        })
    }

    pub fn critical_current(&self) -> f64 {
        self.critical_current
    }

    pub fn junction_capacitance(&self) -> f64 {
        self.junction_capacitance
    }

    /// Unbiased Josephson inductance Φ₀/(2π I_c).
    pub fn unbiased_inductance(&self) -> f64 {
        REDUCED_FLUX_QUANTUM / self.critical_current
    }

    /// Plasma angular frequency 1/√(L_J0 C_J) of the unbiased junction.
    pub fn plasma_frequency(&self) -> f64 {
        1.0 / (self.unbiased_inductance() * self.junction_capacitance).sqrt()
    }
}

/// A dc working point for the junctions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub dc_current: f64,
}

impl BiasPoint {
    pub fn new(dc_current: f64) -> Self {
        Self { dc_current }
    }

    fn check(&self, junction: &JunctionParams) -> Result<()> {
        if self.dc_current.abs() >= junction.critical_current {
            return Err(Error::Domain(format!(
                "bias {:.4e} A at or beyond the critical current {:.4e} A",
                self.dc_current, junction.critical_current
            )));
        }
        Ok(())
    }
}

/// Small-signal expansion of the biased junction inductance,
/// L(I) = L_d (1 + ε I + ξ I²), dressed by the junction capacitance at a
/// given evaluation frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearCoefficients {
    /// Static inductance L_d (H).
    pub static_inductance: f64,
    /// First-order coefficient ε (1/A); vanishes at zero bias.
    pub first_order: f64,
    /// Second-order (Kerr) coefficient ξ (1/A²).
    pub second_order: f64,
    /// Frequency at which the capacitive dressing was applied (rad/s).
    pub evaluation_frequency: f64,
}

/// Static inductance of the biased junction, L_J0/√(1 − (I_d/I_c)²).
pub fn static_inductance(junction: &JunctionParams, bias: &BiasPoint) -> Result<f64> {
    bias.check(junction)?;
    let r = bias.dc_current / junction.critical_current;
    Ok(junction.unbiased_inductance() / (1.0 - r * r).sqrt())
}

/// Bare expansion coefficients (ε, ξ) of the biased junction inductance.
pub fn nonlinear_coefficients(junction: &JunctionParams, bias: &BiasPoint) -> Result<(f64, f64)> {
    bias.check(junction)?;
    let ic2 = junction.critical_current * junction.critical_current;
    let id2 = bias.dc_current * bias.dc_current;
    let eps = bias.dc_current / (ic2 - id2);
    let xi = (ic2 + 2.0 * id2) / (2.0 * (ic2 - id2) * (ic2 - id2));
    Ok((eps, xi))
}

/// Expansion coefficients dressed by the junction capacitance at `omega`.
///
/// Below the plasma resonance the junction plus its capacitance is
/// equivalent to an inductance L̃(I) = L̃_d (1 + ε̃ I + ξ̃ I²) with
/// L̃_d = L_d/(1 − r), ε̃ = ε/(1 − r) and
/// ξ̃ = [ξ + (ε² − ξ) r]/(1 − r)², where r = (ω/ω_p)².
pub fn dressed_coefficients(
    junction: &JunctionParams,
    bias: &BiasPoint,
    omega: f64,
) -> Result<NonlinearCoefficients> {
    let ld = static_inductance(junction, bias)?;
    let (eps, xi) = nonlinear_coefficients(junction, bias)?;
    let wp = junction.plasma_frequency();
    if omega.abs() >= wp {
        return Err(Error::Domain(format!(
            "frequency {:.4e} rad/s at or above the plasma resonance {:.4e} rad/s",
            omega, wp
        )));
    }
    let r = (omega / wp) * (omega / wp);
    let d = 1.0 - r;
    Ok(NonlinearCoefficients {
        static_inductance: ld / d,
        first_order: eps / d,
        second_order: (xi + (eps * eps - xi) * r) / (d * d),
        evaluation_frequency: omega,
    })
}

/// Resonant phase-matching shunt: an L ∥ C tank inserted between the ground
/// capacitor and ground every `spacing` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpmParams {
    pub inductance: f64,
    pub capacitance: f64,
    /// Cells between consecutive shunt resonators.
    pub spacing: usize,
    /// Cell index of the first resonator within each supercell.
    pub offset: usize,
}

impl RpmParams {
    /// Bare tank resonance 1/√(L C) in rad/s.
    pub fn bare_resonance(&self) -> f64 {
        1.0 / (self.inductance * self.capacitance).sqrt()
    }

    /// Resonance of the tank loaded by a series ground capacitor `c_ground`,
    /// 1/√(L (C + C_c)). This is the frequency at which the full shunt
    /// branch shorts out.
    pub fn loaded_resonance(&self, c_ground: f64) -> f64 {
        1.0 / (self.inductance * (self.capacitance + c_ground)).sqrt()
    }

    /// Effective tank inductance L/(1 − L C ω²) below the bare resonance.
    pub fn effective_inductance(&self, omega: f64) -> f64 {
        self.inductance / (1.0 - self.inductance * self.capacitance * omega * omega)
    }

    /// Loaded quality factor of the tank coupled through the ground
    /// capacitor into the line: the coupling reactance transforms the line
    /// resistance (seen both ways, ≈ Z/2) into a parallel load.
    pub fn coupled_q(&self, c_ground: f64, z_line: f64) -> f64 {
        let w0 = self.loaded_resonance(c_ground);
        let xc = 1.0 / (w0 * c_ground);
        let r_parallel = xc * xc / (0.5 * z_line);
        r_parallel * w0 * (self.capacitance + c_ground)
    }
}

/// Sinusoidal impedance loading of the line: the target unit-cell impedance
/// is modulated with a fundamental and a second harmonic over one supercell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingProfile {
    pub mean_impedance: f64,
    pub fundamental_depth: f64,
    pub second_harmonic_depth: f64,
    pub supercell_length: usize,
}

/// Target unit-cell impedance at (fractional) cell position `x`.
pub fn loading_impedance(loading: &LoadingProfile, x: f64) -> f64 {
    let theta = std::f64::consts::TAU * x / loading.supercell_length as f64;
    loading.mean_impedance
        * (1.0
            + loading.fundamental_depth * theta.cos()
            + loading.second_harmonic_depth * (2.0 * theta).cos())
}

/// Complete parametric description of a TWPAC.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub junction: JunctionParams,
    pub rpm: RpmParams,
    pub loading: LoadingProfile,
    pub supercell_count: usize,
    pub loss_tangent: f64,
    pub environment_impedance: f64,
    /// Design (and default operating) dc bias.
    pub bias: BiasPoint,
    /// Frequency at which the ground-capacitor profile is designed (rad/s).
    pub design_frequency: f64,
}

impl DeviceSpec {
    /// Validate cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        self.bias.check(&self.junction)?;
        let l = &self.loading;
        if l.supercell_length == 0 || self.supercell_count == 0 {
            return Err(Error::Config("supercell size and count must be positive".into()));
        }
        if l.fundamental_depth.abs() + l.second_harmonic_depth.abs() >= 1.0 {
            return Err(Error::Config(format!(
                "loading depths |{}| + |{}| must stay below 1 so the impedance stays positive",
                l.fundamental_depth, l.second_harmonic_depth
            )));
        }
        if self.rpm.spacing == 0 || !l.supercell_length.is_multiple_of(self.rpm.spacing) {
            return Err(Error::Config(format!(
                "rpm spacing {} must divide the supercell length {}",
                self.rpm.spacing, l.supercell_length
            )));
        }
        if self.rpm.offset >= self.rpm.spacing {
            return Err(Error::Config(format!(
                "rpm offset {} must be below the spacing {}",
                self.rpm.offset, self.rpm.spacing
            )));
        }
        if !(self.rpm.inductance > 0.0 && self.rpm.capacitance > 0.0) {
            return Err(Error::Config("rpm inductance and capacitance must be positive".into()));
        }
        if self.loss_tangent < 0.0 {
            return Err(Error::Config("loss tangent must be non-negative".into()));
        }
        if !(self.environment_impedance > 0.0) {
            return Err(Error::Config("environment impedance must be positive".into()));
        }
        if !(l.mean_impedance > 0.0) {
            return Err(Error::Config("mean loading impedance must be positive".into()));
        }
        if self.design_frequency >= self.junction.plasma_frequency() {
            return Err(Error::Config("design frequency must lie below the plasma resonance".into()));
        }
        Ok(())
    }

    /// Total number of unit cells.
    pub fn total_cells(&self) -> usize {
        self.supercell_count * self.loading.supercell_length
    }

    /// Whether cell `x` carries a shunt resonator.
    pub fn has_rpm(&self, x: usize) -> bool {
        x % self.rpm.spacing == self.rpm.offset
    }

    /// Ground capacitance at the design-point (mean) impedance, without a
    /// resonator. This is the nominal per-cell capacitance of the line.
    pub fn nominal_capacitance(&self) -> Result<f64> {
        let ld = dressed_coefficients(&self.junction, &self.bias, self.design_frequency)?
            .static_inductance;
        Ok(invert_cell_impedance(
            ld,
            self.loading.mean_impedance,
            0.0,
            self.design_frequency,
        ))
    }

    /// Phase velocity 1/√(L_d C_c) of the mean-impedance line at ω = 0, in
    /// cells per second.
    pub fn nominal_phase_velocity(&self) -> Result<f64> {
        let ld = static_inductance(&self.junction, &self.bias)?;
        Ok(1.0 / (ld * self.nominal_capacitance()?).sqrt())
    }

    /// Ring-up time of the shunt resonators (several stored-energy decay
    /// times of the loaded tank); transient analysis windows must wait this
    /// long on top of the line transit before sampling.
    pub fn rpm_ring_time(&self) -> Result<f64> {
        let q = self
            .rpm
            .coupled_q(self.nominal_capacitance()?, self.environment_impedance);
        let w0 = self.rpm.loaded_resonance(self.nominal_capacitance()?);
        Ok(10.0 * q / w0)
    }
}

/// Invert the symmetric-cell image impedance for the ground capacitance:
/// a cell made of two L̃_d/2 series halves around a shunt branch (C_c in
/// series with an effective resonator inductance `l_rpm`) has image
/// impedance Z² = (L̃_d/C_c)[1 − C_c ω² (L̃_rpm + L̃_d/4)], so
/// C_c = L̃_d / (Z² + L̃_d ω² (L̃_rpm + L̃_d/4)).
fn invert_cell_impedance(ld: f64, z: f64, l_rpm: f64, omega: f64) -> f64 {
    ld / (z * z + ld * omega * omega * (l_rpm + 0.25 * ld))
}

/// Ground capacitance of cell `x`, designed so the cell's image impedance at
/// `omega_design` equals the loading profile value at that position.
pub fn ground_capacitance(device: &DeviceSpec, x: usize, omega_design: f64) -> Result<f64> {
    let ld = dressed_coefficients(&device.junction, &device.bias, omega_design)?.static_inductance;
    let l_rpm = if device.has_rpm(x) {
        let det = 1.0 - device.rpm.inductance * device.rpm.capacitance * omega_design * omega_design;
        if det.abs() < 1e-12 {
            return Err(Error::Singular(format!(
                "design frequency {omega_design:.4e} rad/s sits on the rpm resonance"
            )));
        }
        device.rpm.effective_inductance(omega_design)
    } else {
        0.0
    };
    Ok(invert_cell_impedance(
        ld,
        loading_impedance(&device.loading, x as f64),
        l_rpm,
        omega_design,
    ))
}

/// Per-cell realization of the device: ground capacitance and resonator
/// placement for every cell of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProfile {
    ground_capacitance: Vec<f64>,
    rpm_present: Vec<bool>,
}

impl CellProfile {
    pub fn len(&self) -> usize {
        self.ground_capacitance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground_capacitance.is_empty()
    }

    pub fn capacitance(&self, x: usize) -> f64 {
        self.ground_capacitance[x]
    }

    pub fn has_rpm(&self, x: usize) -> bool {
        self.rpm_present[x]
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.ground_capacitance
    }

    /// Spatial average of the ground capacitance.
    pub fn mean_capacitance(&self) -> f64 {
        self.ground_capacitance.iter().sum::<f64>() / self.ground_capacitance.len() as f64
    }

    pub fn rpm_cell_count(&self) -> usize {
        self.rpm_present.iter().filter(|&&p| p).count()
    }
}

/// Populate the per-cell arrays for the whole line.
pub fn build_cell_array(device: &DeviceSpec, omega_design: f64) -> Result<CellProfile> {
    device.validate()?;
    let n = device.total_cells();
    let n0 = device.loading.supercell_length;
    // Cells repeat supercell-periodically; compute one supercell and tile.
    let mut sc_cap = Vec::with_capacity(n0);
    let mut sc_rpm = Vec::with_capacity(n0);
    for x in 0..n0 {
        sc_cap.push(ground_capacitance(device, x, omega_design)?);
        sc_rpm.push(device.has_rpm(x));
    }
    let mut ground_capacitance = Vec::with_capacity(n);
    let mut rpm_present = Vec::with_capacity(n);
    for x in 0..n {
        ground_capacitance.push(sc_cap[x % n0]);
        rpm_present.push(sc_rpm[x % n0]);
    }
    Ok(CellProfile {
        ground_capacitance,
        rpm_present,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ghz_to_rad;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table_junction() -> JunctionParams {
        JunctionParams::new(5e-6, 240.5e-15).unwrap()
    }

    pub(crate) fn table_device() -> DeviceSpec {
        DeviceSpec {
            junction: table_junction(),
            rpm: RpmParams {
                inductance: 230e-12,
                capacitance: 557e-15,
                spacing: 6,
                offset: 0,
            },
            loading: LoadingProfile {
                mean_impedance: 47.0,
                fundamental_depth: 0.1,
                second_harmonic_depth: 0.12,
                supercell_length: 66,
            },
            supercell_count: 40,
            loss_tangent: 4e-4,
            environment_impedance: 50.0,
            bias: BiasPoint::new(1.5e-6),
            design_frequency: ghz_to_rad(7.25),
        }
    }

    #[test]
    fn unbiased_inductance_from_critical_current() {
        // Φ₀/(2π · 5 µA) = 65.82 pH.
        let j = table_junction();
        assert_relative_eq!(j.unbiased_inductance(), 65.821e-12, max_relative = 1e-4);
    }

    #[test]
    fn static_inductance_at_zero_bias_is_unbiased() {
        let j = table_junction();
        let l = static_inductance(&j, &BiasPoint::new(0.0)).unwrap();
        assert_eq!(l, j.unbiased_inductance());
    }

    #[test]
    fn static_inductance_at_working_bias() {
        // 65.821 pH / sqrt(1 - 0.09) = 68.999 pH.
        let j = table_junction();
        let l = static_inductance(&j, &BiasPoint::new(1.5e-6)).unwrap();
        assert_relative_eq!(l, 69.00e-12, max_relative = 1e-3);
    }

    #[test]
    fn bias_at_critical_current_is_domain_error() {
        let j = table_junction();
        assert!(static_inductance(&j, &BiasPoint::new(5e-6)).is_err());
        assert!(static_inductance(&j, &BiasPoint::new(-5.1e-6)).is_err());
    }

    #[test]
    fn bare_coefficients_at_working_bias() {
        // ε = 1.5/(25 − 2.25) µA⁻¹, ξ = 29.5/(2 · 22.75²) µA⁻².
        let j = table_junction();
        let (eps, xi) = nonlinear_coefficients(&j, &BiasPoint::new(1.5e-6)).unwrap();
        assert_relative_eq!(eps, 0.065934e6, max_relative = 1e-4);
        assert_relative_eq!(xi, 0.028499e12, max_relative = 1e-4);
    }

    #[test]
    fn bare_coefficients_at_zero_bias() {
        let j = table_junction();
        let (eps, xi) = nonlinear_coefficients(&j, &BiasPoint::new(0.0)).unwrap();
        assert_eq!(eps, 0.0);
        assert_relative_eq!(xi, 1.0 / (2.0 * 25e-12), max_relative = 1e-12);
    }

    #[test]
    fn plasma_frequency_is_40_ghz() {
        let j = table_junction();
        assert_relative_eq!(j.plasma_frequency(), ghz_to_rad(40.0), max_relative = 0.01);
        // Consistency of the two derived quantities with the inputs.
        let wp = 1.0 / (j.unbiased_inductance() * j.junction_capacitance()).sqrt();
        assert_relative_eq!(j.plasma_frequency(), wp, max_relative = 1e-6);
    }

    #[test]
    fn dressed_values_match_design_table() {
        let j = table_junction();
        let bias = BiasPoint::new(1.5e-6);
        let half = dressed_coefficients(&j, &bias, ghz_to_rad(7.25)).unwrap();
        assert_relative_eq!(half.static_inductance, 71.4e-12, max_relative = 0.02);
        let full = dressed_coefficients(&j, &bias, ghz_to_rad(14.5)).unwrap();
        assert_relative_eq!(full.first_order, 0.075e6, max_relative = 0.02);
        assert_relative_eq!(full.second_order, 0.033e12, max_relative = 0.02);
    }

    #[test]
    fn dressing_at_zero_frequency_is_identity() {
        let j = table_junction();
        let bias = BiasPoint::new(1.1e-6);
        let d = dressed_coefficients(&j, &bias, 0.0).unwrap();
        let (eps, xi) = nonlinear_coefficients(&j, &bias).unwrap();
        assert_eq!(d.static_inductance, static_inductance(&j, &bias).unwrap());
        assert_eq!(d.first_order, eps);
        assert_eq!(d.second_order, xi);
    }

    #[test]
    fn dressing_above_plasma_is_domain_error() {
        let j = table_junction();
        assert!(dressed_coefficients(&j, &BiasPoint::new(0.0), ghz_to_rad(41.0)).is_err());
    }

    #[test]
    fn coefficient_parity_in_bias() {
        let j = table_junction();
        for id in [0.2e-6, 0.9e-6, 1.5e-6, 2.4e-6, 3.3e-6] {
            let plus = BiasPoint::new(id);
            let minus = BiasPoint::new(-id);
            let lp = static_inductance(&j, &plus).unwrap();
            let lm = static_inductance(&j, &minus).unwrap();
            assert_abs_diff_eq!(lp, lm);
            let (ep, xp) = nonlinear_coefficients(&j, &plus).unwrap();
            let (em, xm) = nonlinear_coefficients(&j, &minus).unwrap();
            assert_abs_diff_eq!(ep, -em);
            assert_abs_diff_eq!(xp, xm);
        }
    }

    #[test]
    fn loading_impedance_values() {
        let l = LoadingProfile {
            mean_impedance: 47.0,
            fundamental_depth: 0.1,
            second_harmonic_depth: 0.12,
            supercell_length: 66,
        };
        assert_relative_eq!(loading_impedance(&l, 0.0), 57.34, max_relative = 1e-10);
        assert_relative_eq!(loading_impedance(&l, 33.0), 47.94, max_relative = 1e-10);
        let flat = LoadingProfile {
            fundamental_depth: 0.0,
            second_harmonic_depth: 0.0,
            ..l
        };
        for x in 0..66 {
            assert_eq!(loading_impedance(&flat, x as f64), 47.0);
        }
    }

    #[test]
    fn loading_impedance_has_supercell_period() {
        let dev = table_device();
        for x in 0..66 {
            let a = loading_impedance(&dev.loading, x as f64);
            let b = loading_impedance(&dev.loading, (x + 66) as f64);
            assert_relative_eq!(a, b, max_relative = 1e-12);
            let ca = ground_capacitance(&dev, x, dev.design_frequency).unwrap();
            let cb = ground_capacitance(&dev, x + 66, dev.design_frequency).unwrap();
            assert_relative_eq!(ca, cb, max_relative = 1e-12);
        }
    }

    #[test]
    fn ground_capacitance_zero_frequency_limit() {
        // Without a resonator and at ω = 0 the inversion reduces to L_d/Z².
        let mut dev = table_device();
        dev.loading.fundamental_depth = 0.0;
        dev.loading.second_harmonic_depth = 0.0;
        dev.rpm.offset = 3; // keep cell 0 resonator-free
        let c = ground_capacitance(&dev, 0, 0.0).unwrap();
        let ld = static_inductance(&dev.junction, &dev.bias).unwrap();
        assert_relative_eq!(c, ld / (47.0 * 47.0), max_relative = 1e-12);
    }

    #[test]
    fn nominal_capacitance_matches_design_table() {
        let dev = table_device();
        assert_relative_eq!(dev.nominal_capacitance().unwrap(), 32.2e-15, max_relative = 0.01);
    }

    #[test]
    fn cell_array_shape_and_mean() {
        let dev = table_device();
        let cells = build_cell_array(&dev, dev.design_frequency).unwrap();
        assert_eq!(cells.len(), 2640);
        assert_eq!(cells.rpm_cell_count(), 440);
        for x in 0..cells.len() {
            assert_eq!(cells.has_rpm(x), x % 6 == 0);
            assert!(cells.capacitance(x) > 0.0);
        }
        // Array mean equals the spatial average of the design formula.
        let direct: f64 = (0..2640)
            .map(|x| ground_capacitance(&dev, x, dev.design_frequency).unwrap())
            .sum::<f64>()
            / 2640.0;
        assert_relative_eq!(cells.mean_capacitance(), direct, max_relative = 1e-12);
        // The 1/Z² profile averages a few percent above the design point.
        assert_relative_eq!(cells.mean_capacitance(), 32.2e-15, max_relative = 0.05);
    }

    #[test]
    fn single_supercell_array() {
        let mut dev = table_device();
        dev.supercell_count = 1;
        let cells = build_cell_array(&dev, dev.design_frequency).unwrap();
        assert_eq!(cells.len(), 66);
        assert_eq!(cells.rpm_cell_count(), 11);
    }

    #[test]
    fn nominal_phase_velocity_matches_design_table() {
        let dev = table_device();
        let vp = dev.nominal_phase_velocity().unwrap();
        // 670 cells/ns.
        assert_relative_eq!(vp, 670e9, max_relative = 0.01);
    }

    #[test]
    fn rpm_resonances() {
        let dev = table_device();
        // The bare tank sits at 14.06 GHz; loading it with a ~30 fF ground
        // capacitor pulls the shunt short down to about 13.7 GHz.
        assert_relative_eq!(dev.rpm.bare_resonance(), ghz_to_rad(14.06), max_relative = 1e-3);
        let loaded = dev.rpm.loaded_resonance(32e-15);
        assert!(loaded < dev.rpm.bare_resonance());
        assert!(loaded > ghz_to_rad(13.4) && loaded < ghz_to_rad(13.9));
    }

    #[test]
    fn validate_rejects_bad_loading_depths() {
        let mut dev = table_device();
        dev.loading.fundamental_depth = 0.6;
        dev.loading.second_harmonic_depth = 0.5;
        assert!(dev.validate().is_err());
    }

    #[test]
    fn validate_rejects_bad_rpm_spacing() {
        let mut dev = table_device();
        dev.rpm.spacing = 7; // does not divide 66
        assert!(dev.validate().is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expansion_parity_in_bias(frac in -0.95f64..0.95) {
                let j = table_junction();
                let plus = BiasPoint::new(frac * 5e-6);
                let minus = BiasPoint::new(-frac * 5e-6);
                let lp = static_inductance(&j, &plus).unwrap();
                let lm = static_inductance(&j, &minus).unwrap();
                prop_assert!((lp - lm).abs() <= 1e-15 * lp.abs());
                let (ep, xp) = nonlinear_coefficients(&j, &plus).unwrap();
                let (em, xm) = nonlinear_coefficients(&j, &minus).unwrap();
                prop_assert!((ep + em).abs() <= 1e-9 * ep.abs().max(1e-30));
                prop_assert!((xp - xm).abs() <= 1e-15 * xp.abs());
            }

            #[test]
            fn dressing_at_zero_frequency_is_identity(frac in -0.9f64..0.9) {
                let j = table_junction();
                let bias = BiasPoint::new(frac * 5e-6);
                let d = dressed_coefficients(&j, &bias, 0.0).unwrap();
                let (eps, xi) = nonlinear_coefficients(&j, &bias).unwrap();
                prop_assert_eq!(d.static_inductance, static_inductance(&j, &bias).unwrap());
                prop_assert_eq!(d.first_order, eps);
                prop_assert_eq!(d.second_order, xi);
            }

            #[test]
            fn loading_and_capacitance_are_supercell_periodic(
                x in 0usize..66,
                periods in 1usize..4,
            ) {
                let dev = table_device();
                let a = loading_impedance(&dev.loading, x as f64);
                let b = loading_impedance(&dev.loading, (x + 66 * periods) as f64);
                prop_assert!((a - b).abs() < 1e-9 * a.abs());
                let ca = ground_capacitance(&dev, x, dev.design_frequency).unwrap();
                let cb = ground_capacitance(&dev, x + 66 * periods, dev.design_frequency).unwrap();
                prop_assert!((ca - cb).abs() < 1e-9 * ca.abs());
            }
        }
    }
}
