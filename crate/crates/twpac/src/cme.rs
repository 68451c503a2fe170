//! Seven-mode coupled-mode equations along the line.
//!
//! The mode amplitudes I_n(x) evolve under every three-wave process the
//! dc bias enables and, optionally, every four-wave (Kerr) process that
//! couples the basis {a, s, i, c, d, u, c2}. Port reflections enter through
//! the per-mode round-trip factors and the phase factors 𝓕, which combine
//! the linear phase mismatch of each process with the standing-wave pattern
//! set up by the reflections.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::device::{BiasPoint, DeviceSpec};
use crate::dispersion::DispersionTable;
use crate::error::{Error, Result};
use crate::modes::{
    current_to_dbm, DriveConfig, ModeEnvironment, ModeId, ModePoint, ReflectionConvention,
    MODE_COUNT,
};
use crate::ode::{self, OdeOptions};

/// Solver switches and tolerances.
#[derive(Debug, Clone, Copy)]
pub struct CmeOptions {
    /// Include the four-wave (Kerr) processes.
    pub include_4wm: bool,
    /// Include port reflections (Γ, t, Γ̃) from the impedance mismatch.
    pub include_reflections: bool,
    /// How the reflection coefficient is formed from the impedances.
    pub reflection_convention: ReflectionConvention,
    pub rtol: f64,
    pub atol: f64,
    /// Sample spacing for the stored solution, in cells; `None` keeps only
    /// the terminal state.
    pub sample_step: Option<f64>,
}

impl Default for CmeOptions {
    fn default() -> Self {
        Self {
            include_4wm: true,
            include_reflections: true,
            reflection_convention: ReflectionConvention::default(),
            rtol: 1e-9,
            atol: 1e-15,
            sample_step: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Factor {
    mode: usize,
    conj: bool,
}

const fn fac(mode: ModeId, conj: bool) -> Factor {
    Factor {
        mode: mode.index_const(),
        conj,
    }
}

impl ModeId {
    const fn index_const(self) -> usize {
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
}

/// One mixing process feeding `target` from two or three source factors.
#[derive(Debug, Clone, Copy)]
struct MixTerm {
    target: usize,
    factors: [Factor; 3],
    n_factors: usize,
    weight: f64,
}

impl MixTerm {
    const fn three(target: ModeId, f1: Factor, f2: Factor, weight: f64) -> Self {
        Self {
            target: target.index_const(),
            factors: [f1, f2, f1],
            n_factors: 2,
            weight,
        }
    }

    const fn four(target: ModeId, f1: Factor, f2: Factor, f3: Factor, weight: f64) -> Self {
        Self {
            target: target.index_const(),
            factors: [f1, f2, f3],
            n_factors: 3,
            weight,
        }
    }
}

use ModeId::{DownConverted as D, FcHarmonic as C2, FcPump as C, Idler as I, PaPump as A,
             Signal as S, UpConverted as U};

/// All three-wave processes within the basis, one entry per equation term.
const THREE_WAVE: [MixTerm; 14] = [
    MixTerm::three(A, fac(S, false), fac(I, false), 1.0),
    MixTerm::three(S, fac(A, false), fac(I, true), 1.0),
    MixTerm::three(S, fac(C, false), fac(D, false), 1.0),
    MixTerm::three(S, fac(U, false), fac(C, true), 1.0),
    MixTerm::three(I, fac(A, false), fac(S, true), 1.0),
    MixTerm::three(C, fac(S, false), fac(D, true), 1.0),
    MixTerm::three(C, fac(U, false), fac(S, true), 1.0),
    MixTerm::three(C, fac(C2, false), fac(C, true), 1.0),
    MixTerm::three(D, fac(S, false), fac(C, true), 1.0),
    MixTerm::three(D, fac(U, false), fac(C2, true), 1.0),
    MixTerm::three(U, fac(S, false), fac(C, false), 1.0),
    MixTerm::three(U, fac(C2, false), fac(D, false), 1.0),
    MixTerm::three(C2, fac(C, false), fac(C, false), 0.5),
    MixTerm::three(C2, fac(U, false), fac(D, true), 1.0),
];

/// The non-degenerate four-wave processes (the self- and cross-phase terms
/// are generated programmatically).
const FOUR_WAVE_MIXING: [MixTerm; 19] = [
    MixTerm::four(A, fac(U, false), fac(C, true), fac(I, false), 2.0),
    MixTerm::four(A, fac(D, false), fac(I, false), fac(C, false), 2.0),
    MixTerm::four(S, fac(C2, false), fac(C, true), fac(D, false), 2.0),
    MixTerm::four(S, fac(U, false), fac(C2, true), fac(C, false), 2.0),
    MixTerm::four(I, fac(A, false), fac(U, true), fac(C, false), 2.0),
    MixTerm::four(I, fac(A, false), fac(D, true), fac(C, true), 2.0),
    MixTerm::four(C, fac(U, false), fac(D, true), fac(C, true), 2.0),
    MixTerm::four(C, fac(C2, false), fac(S, true), fac(D, false), 2.0),
    MixTerm::four(C, fac(C2, false), fac(U, true), fac(S, false), 2.0),
    MixTerm::four(C, fac(U, false), fac(A, true), fac(I, false), 2.0),
    MixTerm::four(C, fac(A, false), fac(D, true), fac(I, true), 2.0),
    MixTerm::four(D, fac(U, false), fac(C, true), fac(C, true), 1.0),
    MixTerm::four(D, fac(C, false), fac(S, false), fac(C2, true), 2.0),
    MixTerm::four(D, fac(A, false), fac(I, true), fac(C, true), 2.0),
    MixTerm::four(U, fac(D, false), fac(C, false), fac(C, false), 1.0),
    MixTerm::four(U, fac(C2, false), fac(C, true), fac(S, false), 2.0),
    MixTerm::four(U, fac(A, false), fac(I, true), fac(C, false), 2.0),
    MixTerm::four(C2, fac(C, false), fac(S, false), fac(D, true), 2.0),
    MixTerm::four(C2, fac(U, false), fac(S, true), fac(C, false), 2.0),
];

/// Self- and cross-phase modulation terms: every mode rotates under its own
/// intensity (weight 1) and twice under every other mode's (weight 2).
fn kerr_phase_terms() -> Vec<MixTerm> {
    let mut terms = Vec::with_capacity(MODE_COUNT * MODE_COUNT);
    for n in ModeId::ALL {
        terms.push(MixTerm::four(n, fac(n, false), fac(n, false), fac(n, true), 1.0));
        for m in ModeId::ALL {
            if m != n {
                terms.push(MixTerm::four(n, fac(n, false), fac(m, false), fac(m, true), 2.0));
            }
        }
    }
    terms
}

/// Active term lists for one environment: processes whose target and source
/// modes are all present. At the degenerate point (signal at half the PA
/// pump) the idler is folded into the signal, turning the pump equation's
/// s·i source into s²/2 and the signal's a·i* source into a·s*.
fn active_terms(env: &ModeEnvironment, include_4wm: bool) -> (Vec<MixTerm>, Vec<MixTerm>) {
    let present = |f: &Factor| env.mode_by_index(f.mode).is_some();
    let mut three: Vec<MixTerm> = Vec::new();
    for t in THREE_WAVE {
        let mut t = t;
        if env.degenerate {
            if t.target == A.index_const() && t.factors[0].mode == S.index_const()
                && t.factors[1].mode == I.index_const()
            {
                t = MixTerm::three(A, fac(S, false), fac(S, false), 0.5);
            } else if t.target == S.index_const() && t.factors[1] == fac(I, true) {
                t = MixTerm::three(S, fac(A, false), fac(S, true), 1.0);
            }
        }
        if env.mode_by_index(t.target).is_some() && t.factors[..t.n_factors].iter().all(present) {
            three.push(t);
        }
    }
    let mut four: Vec<MixTerm> = Vec::new();
    if include_4wm {
        for t in FOUR_WAVE_MIXING.iter().chain(kerr_phase_terms().iter()) {
            if env.mode_by_index(t.target).is_some() && t.factors[..t.n_factors].iter().all(present)
            {
                four.push(*t);
            }
        }
    }
    (three, four)
}

/// Standing-wave factor of one mode at position `x`: e^{iκx} + Γ̃ e^{−iκx}
/// with κ the signed wavenumber. The reflected part stays bounded because
/// |Γ̃| already carries the full-line decay.
fn mode_wave(m: &ModePoint, x: f64) -> (Complex64, Complex64) {
    let kappa = m.k * m.sign;
    let ep = (Complex64::i() * kappa * x).exp();
    let em = ep.inv();
    (ep + m.gamma_tilde * em, ep - m.gamma_tilde * em)
}

/// Phase-mismatch/reflection factor of a three-wave process.
pub fn phase_factor_3wm(
    env: &ModeEnvironment,
    f1: (ModeId, bool),
    f2: (ModeId, bool),
    target: ModeId,
    x: f64,
) -> Result<Complex64> {
    phase_factor(env, &[f1, f2], target, x)
}

/// Phase-mismatch/reflection factor of a four-wave process.
pub fn phase_factor_4wm(
    env: &ModeEnvironment,
    f1: (ModeId, bool),
    f2: (ModeId, bool),
    f3: (ModeId, bool),
    target: ModeId,
    x: f64,
) -> Result<Complex64> {
    phase_factor(env, &[f1, f2, f3], target, x)
}

fn phase_factor(
    env: &ModeEnvironment,
    factors: &[(ModeId, bool)],
    target: ModeId,
    x: f64,
) -> Result<Complex64> {
    let t = env
        .mode(target)
        .ok_or_else(|| Error::Domain(format!("mode {} absent", target.label())))?;
    let (_, v) = mode_wave(t, x);
    if v.norm() < 1e-12 {
        return Err(Error::Singular(format!(
            "phase factor pole for mode {} at x = {x:.1}",
            target.label()
        )));
    }
    let mut num = Complex64::new(1.0, 0.0);
    for &(id, conj) in factors {
        let m = env
            .mode(id)
            .ok_or_else(|| Error::Domain(format!("mode {} absent", id.label())))?;
        let (u, _) = mode_wave(m, x);
        num *= if conj { u.conj() } else { u };
    }
    Ok(num / v)
}

/// Evaluate the coupled-mode right-hand side dI/dx at position `x`.
pub fn cme_rhs(
    x: f64,
    state: &[Complex64],
    env: &ModeEnvironment,
    options: &CmeOptions,
    out: &mut [Complex64],
) -> Result<()> {
    let (three, four) = active_terms(env, options.include_4wm);
    rhs_with_terms(x, state, env, &three, &four, out)
}

fn rhs_with_terms(
    x: f64,
    state: &[Complex64],
    env: &ModeEnvironment,
    three: &[MixTerm],
    four: &[MixTerm],
    out: &mut [Complex64],
) -> Result<()> {
    let mut wave_u = [Complex64::default(); MODE_COUNT];
    let mut wave_v = [Complex64::default(); MODE_COUNT];
    let mut ti = [Complex64::default(); MODE_COUNT];
    for idx in 0..MODE_COUNT {
        if let Some(m) = env.mode_by_index(idx) {
            let (u, v) = mode_wave(m, x);
            wave_u[idx] = u;
            wave_v[idx] = v;
            ti[idx] = m.t * state[idx];
        }
    }
    for o in out.iter_mut() {
        *o = Complex64::default();
    }
    let mut apply = |terms: &[MixTerm], is_three: bool| -> Result<()> {
        for term in terms {
            let tgt = env.mode_by_index(term.target).expect("filtered");
            let v = wave_v[term.target];
            if v.norm() < 1e-12 {
                return Err(Error::Singular(format!(
                    "coupled-mode denominator vanishes for mode index {} at x = {x:.1}",
                    term.target
                )));
            }
            let mut product = Complex64::new(1.0, 0.0);
            for f in &term.factors[..term.n_factors] {
                let w = wave_u[f.mode];
                let a = ti[f.mode];
                product *= if f.conj { (w * a).conj() } else { w * a };
            }
            let pref = if is_three { tgt.eps / 4.0 } else { tgt.xi / 8.0 };
            out[term.target] +=
                Complex64::i() * (tgt.sign * pref * term.weight) * tgt.k / (tgt.t * v) * product;
        }
        Ok(())
    };
    apply(three, true)?;
    apply(four, false)?;
    Ok(())
}

/// Complex mode amplitudes along the line plus the drive that produced them.
#[derive(Debug, Clone)]
pub struct CmeSolution {
    pub positions: Vec<f64>,
    pub amplitudes: Vec<[Complex64; MODE_COUNT]>,
    pub terminal: [Complex64; MODE_COUNT],
    pub initial: [Complex64; MODE_COUNT],
    pub env: ModeEnvironment,
    pub drive: DriveConfig,
    pub options: CmeOptions,
}

impl CmeSolution {
    /// Power gain of the signal: |I_s(N)/I_s(0)|² (1 − Γ_s²)² |t_s|².
    pub fn signal_gain(&self) -> Result<f64> {
        signal_gain(self, &self.env)
    }

    pub fn signal_gain_db(&self) -> Result<f64> {
        Ok(10.0 * self.signal_gain()?.log10().max(-30.0))
    }

    /// Terminal chip-output power of each mode in dBm.
    pub fn terminal_powers_dbm(&self) -> [f64; MODE_COUNT] {
        let mut p = [-300.0; MODE_COUNT];
        for (i, amp) in self.terminal.iter().enumerate() {
            p[i] = current_to_dbm(amp.norm(), self.env.z0);
        }
        p
    }
}

/// Power gain of the signal mode for a finished solve. Besides the port
/// factor (1 − Γ²)²|t|², the carrier decay e^{−2 Im(k_s) N} is applied so
/// lossy and evanescent signals come out attenuated: the envelope grows as
/// the inverse of the decaying carrier, and only their product is the
/// physical field.
pub fn signal_gain(solution: &CmeSolution, env: &ModeEnvironment) -> Result<f64> {
    let s = ModeId::Signal.index();
    let i_s0 = solution.initial[s];
    if i_s0.norm() == 0.0 {
        return Err(Error::Domain("signal gain undefined: zero input signal".into()));
    }
    let mode = env
        .mode(ModeId::Signal)
        .ok_or_else(|| Error::Domain("signal mode absent".into()))?;
    let ratio = solution.terminal[s].norm_sqr() / i_s0.norm_sqr();
    Ok(ratio * mode.port_transmission() * mode.carrier_transmission(env.total_cells))
}

/// Integrate the coupled-mode equations for one prepared environment.
pub fn integrate(
    env: &ModeEnvironment,
    drive: &DriveConfig,
    options: &CmeOptions,
) -> Result<CmeSolution> {
    let initial = env.initial_state(drive);
    let n = env.total_cells;
    let (three, four) = active_terms(env, options.include_4wm);
    let samples: Vec<f64> = match options.sample_step {
        Some(step) if step > 0.0 => {
            let count = (n / step).ceil() as usize;
            (0..=count).map(|i| (i as f64 * step).min(n)).collect()
        }
        _ => vec![],
    };
    let ode_opts = OdeOptions {
        rtol: options.rtol,
        atol: options.atol,
        ..OdeOptions::default()
    };
    let failure = std::cell::RefCell::new(None);
    let mut positions = Vec::with_capacity(samples.len());
    let mut amplitudes = Vec::with_capacity(samples.len());
    let terminal_vec = ode::integrate(
        |x, y, dy| {
            if let Err(e) = rhs_with_terms(x, y, env, &three, &four, dy) {
                *failure.borrow_mut() = Some(e);
                for d in dy.iter_mut() {
                    *d = Complex64::default();
                }
            }
        },
        0.0,
        n,
        &initial,
        &samples,
        &ode_opts,
        |x, y| {
            positions.push(x);
            let mut row = [Complex64::default(); MODE_COUNT];
            row.copy_from_slice(y);
            amplitudes.push(row);
        },
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut terminal = [Complex64::default(); MODE_COUNT];
    terminal.copy_from_slice(&terminal_vec);
    Ok(CmeSolution {
        positions,
        amplitudes,
        terminal,
        initial,
        env: env.clone(),
        drive: *drive,
        options: *options,
    })
}

/// Build the environment from the linear response and integrate.
pub fn solve(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    drive: &DriveConfig,
    options: &CmeOptions,
) -> Result<CmeSolution> {
    drive.validate()?;
    let env = ModeEnvironment::build_with_convention(
        device,
        bias,
        table,
        drive,
        options.include_reflections,
        options.reflection_convention,
    )?;
    integrate(&env, drive, options)
}

/// One point of a gain/isolation sweep.
#[derive(Debug, Clone)]
pub struct SpectrumPoint {
    /// Signal angular frequency (rad/s).
    pub frequency: f64,
    /// Signal power gain in dB; NaN when the point was skipped.
    pub gain_db: f64,
    pub terminal_powers_dbm: [f64; MODE_COUNT],
    pub degenerate: bool,
    /// Failure description when the point could not be solved.
    pub skipped: Option<String>,
}

/// Sweep the signal frequency, solving each point independently.
pub fn sweep_spectrum(
    device: &DeviceSpec,
    bias: &BiasPoint,
    table: &DispersionTable,
    drive_template: &DriveConfig,
    signal_omegas: &[f64],
    options: &CmeOptions,
) -> Vec<SpectrumPoint> {
    let sweep_options = CmeOptions {
        sample_step: None,
        ..*options
    };
    signal_omegas
        .par_iter()
        .map(|&w| {
            let drive = DriveConfig {
                signal: crate::modes::SignalTone {
                    omega: w,
                    power_dbm: drive_template.signal.power_dbm,
                },
                ..*drive_template
            };
            match solve(device, bias, table, &drive, &sweep_options) {
                Ok(sol) => {
                    let gain_db = sol
                        .signal_gain()
                        .map(|g| 10.0 * g.log10().max(-30.0))
                        .unwrap_or(f64::NAN);
                    SpectrumPoint {
                        frequency: w,
                        gain_db,
                        terminal_powers_dbm: sol.terminal_powers_dbm(),
                        degenerate: sol.env.degenerate,
                        skipped: None,
                    }
                }
                Err(e) => SpectrumPoint {
                    frequency: w,
                    gain_db: f64::NAN,
                    terminal_powers_dbm: [-300.0; MODE_COUNT],
                    degenerate: false,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect()
}
