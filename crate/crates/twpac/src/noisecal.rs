//! Amplifier-chain noise bookkeeping.
//!
//! A two-stage chain adds N_sys = N1 + N2/G quanta referred to its input,
//! with N1 the effective first-stage noise and N2 everything after it.
//! Fitting measured (G, N_sys) pairs against 1/G separates the two.

use crate::error::{Error, Result};

/// One (gain, system noise) measurement at a given frequency.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSample {
    /// Frequency (Hz); informational, the fit is per collection.
    pub frequency: f64,
    /// Chain gain, linear.
    pub gain: f64,
    /// System-added noise (quanta).
    pub nsys: f64,
}

/// Result of the two-stage fit.
#[derive(Debug, Clone, Copy)]
pub struct NoiseFit {
    /// First-stage added noise (quanta); the high-gain asymptote.
    pub n1: f64,
    /// Second-stage noise referred to the first stage's input (quanta).
    pub n2: f64,
    /// Root-mean-square residual of the fit (quanta).
    pub residual_norm: f64,
    pub sample_count: usize,
    /// A fitted parameter came out negative; reported as-is, not clamped.
    pub nonphysical: bool,
}

/// Ordinary least squares of N_sys against 1/G with optional per-sample
/// weights (weight 1 when `weights` is `None`).
pub fn fit_two_stage_weighted(
    samples: &[NoiseSample],
    weights: Option<&[f64]>,
) -> Result<NoiseFit> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "two-stage fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != samples.len() {
            return Err(Error::Domain("weights length mismatch".into()));
        }
    }
    for s in samples {
        if !(s.gain > 0.0) || !(s.nsys > 0.0) {
            return Err(Error::Domain(format!(
                "samples must have positive gain and noise (G = {}, N = {})",
                s.gain, s.nsys
            )));
        }
    }
    let w_at = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let mut sw = 0.0;
    let mut su = 0.0;
    let mut sy = 0.0;
    let mut suu = 0.0;
    let mut suy = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let w = w_at(i);
        let u = 1.0 / s.gain;
        sw += w;
        su += w * u;
        sy += w * s.nsys;
        suu += w * u * u;
        suy += w * u * s.nsys;
    }
    let det = sw * suu - su * su;
    let spread = suu / sw - (su / sw) * (su / sw);
    if spread <= 1e-24 * (su / sw).powi(2).max(1e-300) {
        return Err(Error::Domain(
            "all samples share the same gain; intercept and slope are degenerate".into(),
        ));
    }
    let n2 = (sw * suy - su * sy) / det;
    let n1 = (sy - n2 * su) / sw;
    let mut ss = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let r = s.nsys - (n1 + n2 / s.gain);
        ss += w_at(i) * r * r;
    }
    Ok(NoiseFit {
        n1,
        n2,
        residual_norm: (ss / sw).sqrt(),
        sample_count: samples.len(),
        nonphysical: n1 < 0.0 || n2 < 0.0,
    })
}

/// Unweighted two-stage fit.
pub fn fit_two_stage(samples: &[NoiseSample]) -> Result<NoiseFit> {
    fit_two_stage_weighted(samples, None)
}

/// Model prediction N1 + N2/G.
pub fn predict_nsys(fit: &NoiseFit, gain: f64) -> f64 {
    fit.n1 + fit.n2 / gain
}

/// Input-attenuation calibration A = P_in / (P_out / G_off): the probe
/// power emitted by the source divided by the power referred back through
/// the chain gain measured with the amplifier off. Over-estimates the
/// chip-referred attenuation by the loss between the reference plane and
/// the chip.
pub fn input_attenuation(p_source: f64, p_measured: f64, gain_off: f64) -> Result<f64> {
    if !(p_source > 0.0 && p_measured > 0.0 && gain_off > 0.0) {
        return Err(Error::Domain(
            "attenuation calibration needs positive powers and gain".into(),
        ));
    }
    Ok(p_source / (p_measured / gain_off))
}
