//! Time-domain integration of the full Josephson ladder network.
//!
//! The line is solved as a nodal network: every junction carries
//! I_c sin φ with its parallel capacitance, every cell has its ground
//! capacitor (in series with the rpm tank on resonator cells), and the two
//! ports are closed by the environment resistance. Sources are Norton
//! current sources at the ports, ramped with a raised-cosine envelope; the
//! dc bias is a ramped current source between the first and last nodes.
//! Time stepping is implicit trapezoidal with a Newton solve per step on a
//! banded Jacobian. Scattering parameters come from Fourier analysis of an
//! integer-period window after the settle transient is discarded.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::REDUCED_FLUX_QUANTUM;
use crate::device::{self, BiasPoint, DeviceSpec};
use crate::error::{Error, Result};
use crate::modes::power_to_current;

/// Which end of the line a source drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Input,
    Output,
}

/// One sinusoidal Norton current source.
#[derive(Debug, Clone, Copy)]
pub struct ToneDrive {
    pub port: Port,
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Source current amplitude (A). A matched Norton source delivers a
    /// traveling-wave amplitude of half this into the line.
    pub amplitude: f64,
}

/// Chip-input power in dBm to the Norton source amplitude that delivers it
/// into a matched line.
pub fn dbm_to_source_amplitude(p_dbm: f64, z0: f64) -> f64 {
    2.0 * power_to_current(p_dbm, z0)
}

/// Pump/signal placement for a transient run.
#[derive(Debug, Clone, Copy)]
pub struct TransientTones {
    /// Amplification pump (ω, chip-input dBm).
    pub pa: Option<(f64, f64)>,
    /// Conversion pump (ω, chip-input dBm).
    pub fc: Option<(f64, f64)>,
    /// Signal (ω, source amplitude in A).
    pub signal: (f64, f64),
}

/// Sources for the forward or backward response: the signal enters the
/// input port in both cases; for the backward response the two pumps swap
/// ends, which mirrors the experiment of probing the line from the other
/// side.
pub fn transient_drives(
    tones: &TransientTones,
    forward: bool,
    z0: f64,
) -> Vec<ToneDrive> {
    let mut drives = vec![ToneDrive {
        port: Port::Input,
        omega: tones.signal.0,
        amplitude: tones.signal.1,
    }];
    if let Some((w, dbm)) = tones.pa {
        drives.push(ToneDrive {
            port: if forward { Port::Input } else { Port::Output },
            omega: w,
            amplitude: dbm_to_source_amplitude(dbm, z0),
        });
    }
    if let Some((w, dbm)) = tones.fc {
        drives.push(ToneDrive {
            port: if forward { Port::Output } else { Port::Input },
            omega: w,
            amplitude: dbm_to_source_amplitude(dbm, z0),
        });
    }
    drives
}

/// Time-stepping plan.
#[derive(Debug, Clone, Copy)]
pub struct TransientConfig {
    /// Fixed time step (s).
    pub time_step: f64,
    /// Total simulated time (s).
    pub duration: f64,
    /// Leading transient discarded before analysis (s).
    pub settle: f64,
    /// Source ramp-up time (raised cosine), inside the settle window (s).
    pub ramp: f64,
}

impl TransientConfig {
    /// Build a plan whose analysis window spans exactly one period of the
    /// frequency grid `df`, so every tone on that grid lands on a Fourier
    /// bin. The step resolves the fastest tone with at least
    /// `samples_per_period` samples; the settle covers source ramp-up,
    /// line transit and `ring_time` of resonator ring-up.
    pub fn for_grid(
        df: f64,
        max_tone: f64,
        signal_tone: f64,
        transit_time: f64,
        ring_time: f64,
        samples_per_period: f64,
    ) -> Result<Self> {
        if !(df > 0.0 && max_tone > 0.0 && signal_tone > 0.0) {
            return Err(Error::Config("transient plan needs positive frequencies".into()));
        }
        let window = std::f64::consts::TAU / df;
        let dt_raw = std::f64::consts::TAU / (max_tone * samples_per_period);
        let steps_per_window = (window / dt_raw).ceil();
        let time_step = window / steps_per_window;
        let ramp = 2.0 * transit_time;
        let signal_period = std::f64::consts::TAU / signal_tone;
        let settle_raw = (20.0 * signal_period).max(5.0 * transit_time) + ramp + ring_time;
        // Align the settle to whole steps so the window stays commensurate.
        let settle = (settle_raw / time_step).ceil() * time_step;
        Ok(Self {
            time_step,
            duration: settle + window,
            settle,
            ramp,
        })
    }

    fn validate(&self, max_tone: f64) -> Result<()> {
        let window = self.duration - self.settle;
        if !(self.time_step > 0.0 && window > 0.0) {
            return Err(Error::Config("transient plan times must be positive".into()));
        }
        let per_period = std::f64::consts::TAU / (max_tone * self.time_step);
        if per_period < 63.9 {
            return Err(Error::Config(format!(
                "time step resolves the fastest tone with only {per_period:.1} samples/period (need 64)"
            )));
        }
        Ok(())
    }
}

/// The assembled nodal problem.
pub struct LadderNetwork {
    n_cells: usize,
    cap_ground: Vec<f64>,
    /// Cell indices carrying a shunt resonator.
    pub rpm_cells: Vec<usize>,
    l_rpm: f64,
    c_rpm: f64,
    c_junction: f64,
    critical_current: f64,
    z0: f64,
    dc_bias: f64,
    drives: Vec<ToneDrive>,
    // Unknown layout.
    dim: usize,
    idx_v: Vec<usize>,
    idx_phi: Vec<usize>,
    idx_w: Vec<Option<usize>>,
    bandwidth: usize,
}

/// Build the nodal network for a device at an operating bias.
pub fn build_network(
    device: &DeviceSpec,
    bias: &BiasPoint,
    drives: Vec<ToneDrive>,
) -> Result<LadderNetwork> {
    device.validate()?;
    if bias.dc_current.abs() >= device.junction.critical_current() {
        return Err(Error::Domain("transient bias at or beyond the critical current".into()));
    }
    let cells = device::build_cell_array(device, device.design_frequency)?;
    let n = cells.len();
    let mut idx_v = vec![0usize; n + 1];
    let mut idx_phi = vec![0usize; n];
    let mut idx_w = vec![None; n];
    let mut rpm_cells = Vec::new();
    let mut next = 0usize;
    idx_v[0] = next;
    next += 1;
    for j in 0..n {
        idx_phi[j] = next;
        next += 1;
        idx_v[j + 1] = next;
        next += 1;
        if cells.has_rpm(j) {
            idx_w[j] = Some(next);
            next += 2; // internal node voltage, tank inductor current
            rpm_cells.push(j);
        }
    }
    // Maximum index distance of any structural coupling.
    let mut bandwidth = 0usize;
    for j in 0..n {
        bandwidth = bandwidth
            .max(idx_phi[j].abs_diff(idx_v[j]))
            .max(idx_phi[j].abs_diff(idx_v[j + 1]))
            .max(idx_v[j].abs_diff(idx_v[j + 1]));
        if let Some(w) = idx_w[j] {
            bandwidth = bandwidth.max(w.abs_diff(idx_v[j + 1])).max(1);
        }
    }
    Ok(LadderNetwork {
        n_cells: n,
        cap_ground: cells.capacitances().to_vec(),
        rpm_cells,
        l_rpm: device.rpm.inductance,
        c_rpm: device.rpm.capacitance,
        c_junction: device.junction.junction_capacitance(),
        critical_current: device.junction.critical_current(),
        z0: device.environment_impedance,
        dc_bias: bias.dc_current,
        drives,
        dim: next,
        idx_v,
        idx_phi,
        idx_w,
        bandwidth,
    })
}

impl LadderNetwork {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Raised-cosine source envelope.
    fn envelope(&self, t: f64, ramp: f64) -> f64 {
        if t >= ramp {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * t / ramp).cos())
        }
    }

    fn source_current(&self, t: f64, ramp: f64, port: Port) -> f64 {
        let mut i = 0.0;
        for d in &self.drives {
            if d.port == port {
                i += self.envelope(t, ramp) * d.amplitude * (d.omega * t).sin();
            }
        }
        i
    }

    /// M · x for the constant mass matrix (capacitances and inductances).
    fn mass_mul(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_cells;
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for j in 0..n {
            // Junction phase rows: dφ/dt appears with unit weight.
            out[self.idx_phi[j]] = x[self.idx_phi[j]];
            // Junction capacitance couples neighbouring node voltages.
            let (a, b) = (self.idx_v[j], self.idx_v[j + 1]);
            let dv = x[a] - x[b];
            out[a] += self.c_junction * dv;
            out[b] -= self.c_junction * dv;
            // Shunt branch at node j + 1.
            let cc = self.cap_ground[j];
            match self.idx_w[j] {
                None => out[b] += cc * x[b],
                Some(w) => {
                    out[b] += cc * (x[b] - x[w]);
                    out[w] = cc * x[b] - (cc + self.c_rpm) * x[w];
                    out[w + 1] = self.l_rpm * x[w + 1];
                }
            }
        }
    }

    /// Right-hand side F(x, t): junction supercurrents, resistive port
    /// currents, tank states and sources.
    fn force(&self, x: &[f64], t: f64, ramp: f64, out: &mut [f64]) {
        let n = self.n_cells;
        for o in out.iter_mut() {
            *o = 0.0;
        }
        let phi0 = REDUCED_FLUX_QUANTUM;
        for j in 0..n {
            let (a, b) = (self.idx_v[j], self.idx_v[j + 1]);
            out[self.idx_phi[j]] = (x[a] - x[b]) / phi0;
            let is = self.critical_current * x[self.idx_phi[j]].sin();
            out[a] -= is;
            out[b] += is;
            if let Some(w) = self.idx_w[j] {
                out[w] = x[w + 1];
                out[w + 1] = x[w];
            }
        }
        let (vin, vout) = (self.idx_v[0], self.idx_v[n]);
        let env_dc = self.envelope(t, ramp);
        out[vin] += -x[vin] / self.z0 + self.source_current(t, ramp, Port::Input)
            + env_dc * self.dc_bias;
        out[vout] += -x[vout] / self.z0 + self.source_current(t, ramp, Port::Output)
            - env_dc * self.dc_bias;
    }

    /// Assemble J = M − (h/2) ∂F/∂x into `band`.
    fn assemble_jacobian(&self, x: &[f64], h: f64, band: &mut BandMatrix) {
        band.clear();
        let n = self.n_cells;
        let phi0 = REDUCED_FLUX_QUANTUM;
        let half_h = 0.5 * h;
        for j in 0..n {
            let (a, b) = (self.idx_v[j], self.idx_v[j + 1]);
            let p = self.idx_phi[j];
            // φ row.
            *band.entry(p, p) += 1.0;
            *band.entry(p, a) += -half_h / phi0;
            *band.entry(p, b) += half_h / phi0;
            // Junction capacitance.
            *band.entry(a, a) += self.c_junction;
            *band.entry(a, b) += -self.c_junction;
            *band.entry(b, b) += self.c_junction;
            *band.entry(b, a) += -self.c_junction;
            // Junction supercurrent linearization.
            let g = self.critical_current * x[p].cos();
            *band.entry(a, p) += half_h * g;
            *band.entry(b, p) += -half_h * g;
            // Shunt branch.
            let cc = self.cap_ground[j];
            match self.idx_w[j] {
                None => *band.entry(b, b) += cc,
                Some(w) => {
                    *band.entry(b, b) += cc;
                    *band.entry(b, w) += -cc;
                    *band.entry(w, b) += cc;
                    *band.entry(w, w) += -(cc + self.c_rpm);
                    *band.entry(w, w + 1) += -half_h;
                    *band.entry(w + 1, w + 1) += self.l_rpm;
                    *band.entry(w + 1, w) += -half_h;
                }
            }
        }
        let (vin, vout) = (self.idx_v[0], self.idx_v[n]);
        *band.entry(vin, vin) += half_h / self.z0;
        *band.entry(vout, vout) += half_h / self.z0;
    }
}

/// Banded matrix with partial-pivoting LU, LAPACK-style storage.
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
    /// Row scales applied during equilibration; the residual must be scaled
    /// the same way before solving.
    ipiv_scales: Vec<f64>,
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        // ku gains kl rows of fill-in from pivoting.
        let rows = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ab: vec![0.0; rows * n],
            ipiv: vec![0; n],
            ipiv_scales: vec![1.0; n],
        }
    }

    fn clear(&mut self) {
        self.ab.fill(0.0);
    }

    #[inline]
    fn entry(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i.abs_diff(j) <= self.kl.min(self.ku));
        let rows = 2 * self.kl + self.ku + 1;
        &mut self.ab[j * rows + (self.kl + self.ku + i - j)]
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        let rows = 2 * self.kl + self.ku + 1;
        self.ab[j * rows + (self.kl + self.ku + i - j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let rows = 2 * self.kl + self.ku + 1;
        &mut self.ab[j * rows + (self.kl + self.ku + i - j)]
    }

    /// Scale every row to unit max magnitude; returns the scales applied.
    fn equilibrate(&mut self) -> Vec<f64> {
        let mut scale = vec![1.0; self.n];
        for (i, si) in scale.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut m = 0.0f64;
            for j in lo..=hi {
                m = m.max(self.at(i, j).abs());
            }
            if m > 0.0 {
                let s = 1.0 / m;
                *si = s;
                for j in lo..=hi {
                    *self.at_mut(i, j) *= s;
                }
            }
        }
        scale
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.at(j, j).abs();
            for i in (j + 1)..=i_max {
                let v = self.at(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Numerical(format!(
                    "singular transient Jacobian at column {j}"
                )));
            }
            self.ipiv[j] = p;
            let j_hi = (j + ku + kl).min(n - 1);
            if p != j {
                for c in j..=j_hi {
                    let rows = 2 * kl + ku + 1;
                    let ij = c * rows + (kl + ku + j - c);
                    let ip = c * rows + (kl + ku + p - c);
                    self.ab.swap(ij, ip);
                }
            }
            let piv = self.at(j, j);
            for i in (j + 1)..=i_max {
                let m = self.at(i, j) / piv;
                *self.at_mut(i, j) = m;
                if m != 0.0 {
                    for c in (j + 1)..=j_hi {
                        let u = self.at(j, c);
                        if u != 0.0 {
                            *self.at_mut(i, c) -= m * u;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let i_max = (j + kl).min(n - 1);
            for i in (j + 1)..=i_max {
                b[i] -= self.at(i, j) * b[j];
            }
        }
        for j in (0..n).rev() {
            let lo = j.saturating_sub(ku + kl);
            b[j] /= self.at(j, j);
            for i in lo..j {
                b[i] -= self.at(i, j) * b[j];
            }
        }
    }
}

/// Port waveforms over the analysis window.
#[derive(Debug, Clone)]
pub struct TransientResult {
    pub time_step: f64,
    /// Start time of the analysis window.
    pub window_start: f64,
    pub v_in: Vec<f64>,
    pub i_in: Vec<f64>,
    pub v_out: Vec<f64>,
    pub i_out: Vec<f64>,
}

impl TransientResult {
    pub fn window_duration(&self) -> f64 {
        self.v_in.len() as f64 * self.time_step
    }
}

/// Integrate the network over the configured time span.
pub fn integrate_transient(
    net: &LadderNetwork,
    cfg: &TransientConfig,
) -> Result<TransientResult> {
    let max_tone = net
        .drives
        .iter()
        .map(|d| d.omega)
        .fold(0.0f64, f64::max)
        .max(1.0);
    cfg.validate(max_tone)?;
    let h = cfg.time_step;
    let n_steps = (cfg.duration / h).round() as usize;
    let window_steps = ((cfg.duration - cfg.settle) / h).round() as usize;
    let settle_steps = n_steps - window_steps;

    let dim = net.dim();
    let mut x = vec![0.0; dim];
    let mut xdot = vec![0.0; dim];
    let mut band = BandMatrix::new(dim, net.bandwidth, net.bandwidth);
    let mut f_old = vec![0.0; dim];
    let mut f_new = vec![0.0; dim];
    let mut residual = vec![0.0; dim];
    let mut mass = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];
    net.force(&x, 0.0, cfg.ramp, &mut f_old);

    let phi_dot_limit = 1e3 * max_tone;
    let mut result = TransientResult {
        time_step: h,
        window_start: cfg.settle,
        v_in: Vec::with_capacity(window_steps),
        i_in: Vec::with_capacity(window_steps),
        v_out: Vec::with_capacity(window_steps),
        i_out: Vec::with_capacity(window_steps),
    };

    let record = |net: &LadderNetwork, x: &[f64], xdot: &[f64], out: &mut TransientResult| {
        let n = net.n_cells;
        let (vin, vout) = (net.idx_v[0], net.idx_v[n]);
        out.v_in.push(x[vin]);
        out.v_out.push(x[vout]);
        let i_in = net.critical_current * x[net.idx_phi[0]].sin()
            + net.c_junction * (xdot[vin] - xdot[net.idx_v[1]]);
        let i_out = net.critical_current * x[net.idx_phi[n - 1]].sin()
            + net.c_junction * (xdot[net.idx_v[n - 1]] - xdot[vout]);
        out.i_in.push(i_in);
        out.i_out.push(i_out);
    };

    for step in 0..n_steps {
        let t_new = (step + 1) as f64 * h;
        x_new.copy_from_slice(&x);
        let mut converged = false;
        let mut refactor_every_iter = false;
        for iter in 0..20 {
            if iter == 0 || refactor_every_iter {
                net.assemble_jacobian(&x_new, h, &mut band);
                let scales = band.equilibrate();
                band.factor().map_err(|_| {
                    Error::Numerical(format!("Newton Jacobian singular at t = {t_new:.3e} s"))
                })?;
                band.ipiv_scales = scales;
            }
            // Residual M(x_new − x) − h/2 (F(x_new) + F_old).
            net.force(&x_new, t_new, cfg.ramp, &mut f_new);
            for i in 0..dim {
                residual[i] = x_new[i] - x[i];
            }
            net.mass_mul(&residual, &mut mass);
            for i in 0..dim {
                residual[i] = -(mass[i] - 0.5 * h * (f_new[i] + f_old[i]));
                residual[i] *= band.ipiv_scales[i];
            }
            band.solve(&mut residual);
            let mut done = true;
            for i in 0..dim {
                x_new[i] += residual[i];
                if !x_new[i].is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite state at t = {t_new:.3e} s"
                    )));
                }
                if residual[i].abs() > 1e-12 * x_new[i].abs() + 1e-15 {
                    done = false;
                }
            }
            if done && iter > 0 {
                converged = true;
                break;
            }
            if iter == 7 {
                refactor_every_iter = true;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Newton iteration did not converge at t = {t_new:.3e} s"
            )));
        }
        // Trapezoidal derivative update.
        for i in 0..dim {
            let d = 2.0 * (x_new[i] - x[i]) / h - xdot[i];
            xdot[i] = d;
        }
        x.copy_from_slice(&x_new);
        std::mem::swap(&mut f_old, &mut f_new);
        // Energy blow-up guard on the junction phase rate.
        let mut max_rate = 0.0f64;
        for j in 0..net.n_cells {
            max_rate = max_rate.max(xdot[net.idx_phi[j]].abs());
        }
        if max_rate > phi_dot_limit {
            return Err(Error::Numerical(format!(
                "instability: junction phase rate {max_rate:.2e} rad/s at t = {t_new:.3e} s"
            )));
        }
        if step >= settle_steps {
            record(net, &x, &xdot, &mut result);
        }
    }
    Ok(result)
}

/// Complex Fourier amplitude of a sampled waveform at `omega`; the window
/// must hold an integer number of periods.
fn fourier_amplitude(x: &[f64], dt: f64, t0: f64, omega: f64) -> Result<Complex64> {
    let t_window = x.len() as f64 * dt;
    let cycles = omega * t_window / std::f64::consts::TAU;
    if (cycles - cycles.round()).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "tone at {:.6} GHz is not commensurate with the {:.3e} s window ({cycles:.4} cycles); \
             spectral leakage would corrupt the extraction",
            crate::constants::rad_to_ghz(omega),
            t_window
        )));
    }
    let mut acc = Complex64::default();
    for (k, &v) in x.iter().enumerate() {
        let t = t0 + k as f64 * dt;
        acc += v * (-Complex64::i() * omega * t).exp();
    }
    Ok(acc * 2.0 / x.len() as f64)
}

/// Transmission scattering parameter at the signal tone:
/// S21 = (V_out + Z0 I_out)/(V_in + Z0 I_in) evaluated at ω.
pub fn extract_s21(result: &TransientResult, omega: f64, z0: f64) -> Result<Complex64> {
    let dt = result.time_step;
    let t0 = result.window_start;
    let vi = fourier_amplitude(&result.v_in, dt, t0, omega)?;
    let ii = fourier_amplitude(&result.i_in, dt, t0, omega)?;
    let vo = fourier_amplitude(&result.v_out, dt, t0, omega)?;
    let io = fourier_amplitude(&result.i_out, dt, t0, omega)?;
    let denom = vi + z0 * ii;
    if denom.norm() == 0.0 {
        return Err(Error::Numerical("no incident wave at the requested tone".into()));
    }
    Ok((vo + z0 * io) / denom)
}

/// Reverse transmission S12 = (V_in − Z0 I_in)/(V_out − Z0 I_out) at ω,
/// for a run whose probe source sits at the output port.
pub fn extract_s12(result: &TransientResult, omega: f64, z0: f64) -> Result<Complex64> {
    let dt = result.time_step;
    let t0 = result.window_start;
    let vi = fourier_amplitude(&result.v_in, dt, t0, omega)?;
    let ii = fourier_amplitude(&result.i_in, dt, t0, omega)?;
    let vo = fourier_amplitude(&result.v_out, dt, t0, omega)?;
    let io = fourier_amplitude(&result.i_out, dt, t0, omega)?;
    let denom = vo - z0 * io;
    if denom.norm() == 0.0 {
        return Err(Error::Numerical("no incident wave at the requested tone".into()));
    }
    Ok((vi - z0 * ii) / denom)
}

/// One bin of the output power spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumBin {
    /// Angular frequency (rad/s).
    pub frequency: f64,
    /// Power delivered to the output termination (dBm).
    pub power_dbm: f64,
    /// Annotation when the bin hosts a recognized mixing product.
    pub label: Option<String>,
}

/// Output power spectrum on the grid `df`, annotated with the expected
/// mixing products of the drive tones.
pub fn output_spectrum(
    result: &TransientResult,
    z0: f64,
    df: f64,
    omega_max: f64,
    tones: &TransientTones,
) -> Result<Vec<SpectrumBin>> {
    let n_bins = (omega_max / df).floor() as usize;
    let mut labels: Vec<(f64, String)> = vec![(tones.signal.0, "s".into())];
    if let Some((wc, _)) = tones.fc {
        labels.push((wc, "c".into()));
        labels.push((2.0 * wc, "c2".into()));
        if let Some((wa, _)) = tones.pa {
            labels.push((wa - 2.0 * wc, "a-2c".into()));
        }
    }
    if let Some((wa, _)) = tones.pa {
        labels.push((wa - tones.signal.0, "i".into()));
    }
    let mut bins = Vec::with_capacity(n_bins);
    for m in 1..=n_bins {
        let w = m as f64 * df;
        let v = fourier_amplitude(&result.v_out, result.time_step, result.window_start, w)?;
        let p = v.norm_sqr() / (2.0 * z0);
        let power_dbm = if p > 0.0 {
            10.0 * p.log10() + 30.0
        } else {
            -300.0
        };
        let label = labels
            .iter()
            .find(|(lw, _)| (lw - w).abs() < 0.5 * df)
            .map(|(_, l)| l.clone());
        bins.push(SpectrumBin {
            frequency: w,
            power_dbm,
            label,
        });
    }
    Ok(bins)
}

/// One frequency point of a forward/backward transient sweep.
#[derive(Debug, Clone)]
pub struct TransientSweepPoint {
    pub frequency: f64,
    pub s21_forward_db: f64,
    pub s21_backward_db: f64,
    pub error: Option<String>,
}

/// Sweep the signal over `signal_omegas`, running an independent forward
/// and backward simulation per point.
pub fn sweep_transient(
    device: &DeviceSpec,
    bias: &BiasPoint,
    tones_template: &TransientTones,
    signal_omegas: &[f64],
    df: f64,
    samples_per_period: f64,
) -> Vec<TransientSweepPoint> {
    let z0 = device.environment_impedance;
    let transit = device
        .nominal_phase_velocity()
        .map(|v| device.total_cells() as f64 / v)
        .unwrap_or(1e-9);
    let ring = device.rpm_ring_time().unwrap_or(0.0);
    signal_omegas
        .par_iter()
        .map(|&ws| {
            let tones = TransientTones {
                signal: (ws, tones_template.signal.1),
                ..*tones_template
            };
            let max_tone = [Some(ws), tones.pa.map(|p| p.0), tones.fc.map(|p| p.0)]
                .iter()
                .flatten()
                .fold(0.0f64, |a, &b| a.max(b));
            let run = |forward: bool| -> Result<f64> {
                let drives = transient_drives(&tones, forward, z0);
                let net = build_network(device, bias, drives)?;
                let cfg = TransientConfig::for_grid(
                    df,
                    max_tone,
                    ws,
                    transit,
                    ring,
                    samples_per_period,
                )?;
                let result = integrate_transient(&net, &cfg)?;
                let s21 = extract_s21(&result, ws, z0)?;
                Ok(20.0 * s21.norm().max(1e-15).log10())
            };
            match (run(true), run(false)) {
                (Ok(f), Ok(b)) => TransientSweepPoint {
                    frequency: ws,
                    s21_forward_db: f,
                    s21_backward_db: b,
                    error: None,
                },
                (f, b) => TransientSweepPoint {
                    frequency: ws,
                    s21_forward_db: f.unwrap_or(f64::NAN),
                    s21_backward_db: b.unwrap_or(f64::NAN),
                    error: Some("point failed".into()),
                },
            }
        })
        .collect()
}
