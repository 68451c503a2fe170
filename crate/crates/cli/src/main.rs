//! Command-line front end: dispersion sweeps, coupled-mode gain sweeps,
//! time-domain sweeps and spectra, pump placement and noise fitting.

// Validation guards are written `!(x > 0.0)` so NaN inputs are rejected
// along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod csvio;
mod manifest;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twpac::cme::{self, CmeOptions};
use twpac::config::load_device;
use twpac::constants::{ghz_to_rad, rad_to_ghz};
use twpac::device::{BiasPoint, DeviceSpec};
use twpac::dispersion::{compute_dispersion, DispersionConfig, DispersionTable};
use twpac::modes::{Direction, DriveConfig, ModeId, PumpTone, SignalTone};
use twpac::noisecal::{self, NoiseSample};
use twpac::phasematch::{self, Process};
use twpac::transient::{self, TransientTones};
use twpac::{Error, Result};

use csvio::{emit_csv, Cell};
use manifest::RunManifest;
use svg::{emit_svg, Panel, Trace};

#[derive(Parser)]
#[command(
    name = "twpac",
    version,
    about = "Design and simulation toolkit for Josephson traveling-wave parametric amplifier/converters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for CSV/SVG/manifest files.
    #[arg(long, global = true, env = "TWPAC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for parallel sweeps (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed recorded in the run manifest for stochastic generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Linear response: S21, wavenumber, impedance and stopbands.
    Dispersion(DispersionArgs),
    /// Coupled-mode gain/isolation sweep over signal frequency.
    CmeSweep(CmeSweepArgs),
    /// Time-domain S21 sweep (forward and backward per point).
    TransientSweep(TransientSweepArgs),
    /// Time-domain output power spectrum at one signal frequency.
    TransientSpectrum(TransientSpectrumArgs),
    /// Solve a phase-matching condition for the pump placement.
    PhaseMatch(PhaseMatchArgs),
    /// Fit the two-stage noise model to (gain, noise) data.
    NoiseFit(NoiseFitArgs),
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct DispersionArgs {
    /// Device description (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Operating dc bias in µA (default: the config's design bias).
    #[arg(long)]
    bias_ua: Option<f64>,
    /// Operating loss tangent (default: the config's value).
    #[arg(long)]
    tand: Option<f64>,
    #[arg(long, default_value_t = 0.02)]
    fmin_ghz: f64,
    #[arg(long, default_value_t = 16.0)]
    fmax_ghz: f64,
    #[arg(long, default_value_t = 10.0)]
    step_mhz: f64,
    /// Also emit an SVG with |S21|, k* and impedance panels.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum SweepDirection {
    Forward,
    Backward,
    Both,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct CmeSweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Reduce the line to this many cells (multiple of the supercell).
    #[arg(long)]
    cells_override: Option<usize>,
    /// Operating loss tangent (default: the config's value).
    #[arg(long)]
    tand: Option<f64>,
    #[arg(long, value_enum, default_value_t = SweepDirection::Both)]
    direction: SweepDirection,
    /// Amplification pump frequency (GHz).
    #[arg(long)]
    fa_ghz: f64,
    /// Amplification pump chip-input power (dBm).
    #[arg(long)]
    pa_dbm: f64,
    /// Conversion pump frequency (GHz).
    #[arg(long, default_value_t = 4.7)]
    fc_ghz: f64,
    /// Conversion pump chip-input power (dBm).
    #[arg(long, default_value_t = -73.0)]
    pc_dbm: f64,
    /// Turn the conversion pump off.
    #[arg(long)]
    fc_off: bool,
    /// Signal chip-input power (dBm).
    #[arg(long, default_value_t = -133.0)]
    ps_dbm: f64,
    /// Drop the four-wave (Kerr) terms.
    #[arg(long)]
    no_4wm: bool,
    /// Drop port reflections.
    #[arg(long)]
    no_reflections: bool,
    /// Use the complex reflection coefficient (Z−Z0)/(Z+Z0) instead of the
    /// magnitude convention (sensitivity experiment).
    #[arg(long)]
    complex_gamma: bool,
    #[arg(long, default_value_t = 3.0)]
    fmin_ghz: f64,
    #[arg(long, default_value_t = 12.0)]
    fmax_ghz: f64,
    #[arg(long, default_value_t = 20.0)]
    step_mhz: f64,
    #[arg(long)]
    bias_ua: Option<f64>,
    /// Also emit an SVG overlay of the forward/backward traces.
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct TransientSweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Reduce the line to this many cells (multiple of the supercell).
    #[arg(long)]
    cells_override: Option<usize>,
    #[arg(long)]
    fa_ghz: Option<f64>,
    #[arg(long)]
    pa_dbm: Option<f64>,
    #[arg(long)]
    fc_ghz: Option<f64>,
    #[arg(long)]
    pc_dbm: Option<f64>,
    /// Signal source amplitude (µA).
    #[arg(long, default_value_t = 0.05)]
    signal_amp_ua: f64,
    #[arg(long, default_value_t = 0.02)]
    fmin_ghz: f64,
    #[arg(long, default_value_t = 12.0)]
    fmax_ghz: f64,
    /// Signal grid step; the analysis window spans one period of it (MHz).
    #[arg(long, default_value_t = 100.0)]
    step_mhz: f64,
    #[arg(long, default_value_t = 64.0)]
    samples_per_period: f64,
    #[arg(long)]
    bias_ua: Option<f64>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct TransientSpectrumArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    cells_override: Option<usize>,
    /// Signal frequency (GHz).
    #[arg(long)]
    fs_ghz: f64,
    #[arg(long, default_value_t = 0.05)]
    signal_amp_ua: f64,
    #[arg(long)]
    fa_ghz: Option<f64>,
    #[arg(long)]
    pa_dbm: Option<f64>,
    #[arg(long)]
    fc_ghz: Option<f64>,
    #[arg(long)]
    pc_dbm: Option<f64>,
    /// Spectrum bin width (MHz); all tones must sit on this grid.
    #[arg(long, default_value_t = 10.0)]
    step_mhz: f64,
    #[arg(long, default_value_t = 16.0)]
    fmax_ghz: f64,
    #[arg(long, default_value_t = 64.0)]
    samples_per_period: f64,
    #[arg(long)]
    bias_ua: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum ProcessArg {
    Pa,
    FcDown,
    FcUp,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct PhaseMatchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    process: ProcessArg,
    /// Signal-to-idler detuning for the PA process (GHz).
    #[arg(long, default_value_t = 1.0)]
    detuning_ghz: f64,
    /// Target signal frequency for the conversion processes (GHz).
    #[arg(long, default_value_t = 7.65)]
    target_ghz: f64,
    /// Pump amplitude for the self-phase-modulation correction (µA);
    /// zero solves the linear condition.
    #[arg(long, default_value_t = 0.0)]
    amplitude_ua: f64,
    /// Pump chip-input power (dBm); overrides --amplitude-ua when given.
    #[arg(long)]
    pump_dbm: Option<f64>,
    #[arg(long)]
    scan_min_ghz: Option<f64>,
    #[arg(long)]
    scan_max_ghz: Option<f64>,
    #[arg(long)]
    bias_ua: Option<f64>,
}

#[derive(Args, Serialize)]
#[command(allow_negative_numbers = true)]
struct NoiseFitArgs {
    /// Input CSV with columns freq_GHz, gain_db, nsys_quanta.
    #[arg(long)]
    input: PathBuf,
    /// Frequency bin width for per-bin fits (GHz).
    #[arg(long, default_value_t = 0.25)]
    bin_width_ghz: f64,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Dispersion(a) => cmd_dispersion(cli, a),
        Command::CmeSweep(a) => cmd_cme_sweep(cli, a),
        Command::TransientSweep(a) => cmd_transient_sweep(cli, a),
        Command::TransientSpectrum(a) => cmd_transient_spectrum(cli, a),
        Command::PhaseMatch(a) => cmd_phase_match(cli, a),
        Command::NoiseFit(a) => cmd_noise_fit(cli, a),
    }
}

fn write_manifest<T: Serialize>(cli: &Cli, name: &str, config: Option<&Path>, args: &T) -> Result<()> {
    let params = serde_json::to_value(args).map_err(|e| Error::Config(e.to_string()))?;
    RunManifest::new(name, config, params, &cli.out_dir, cli.seed).write(&cli.out_dir)
}

fn operating_bias(device: &DeviceSpec, bias_ua: Option<f64>) -> BiasPoint {
    bias_ua
        .map(|ua| BiasPoint::new(ua * 1e-6))
        .unwrap_or(device.bias)
}

fn apply_cells_override(device: &mut DeviceSpec, cells: Option<usize>) -> Result<()> {
    if let Some(n) = cells {
        let n0 = device.loading.supercell_length;
        if n == 0 || n % n0 != 0 {
            return Err(Error::Config(format!(
                "--cells-override {n} must be a positive multiple of the supercell length {n0}"
            )));
        }
        device.supercell_count = n / n0;
    }
    Ok(())
}

fn cmd_dispersion(cli: &Cli, a: &DispersionArgs) -> Result<()> {
    let device = load_device(&a.config)?;
    let mut cfg = DispersionConfig::for_device(&device);
    cfg.omega_start = ghz_to_rad(a.fmin_ghz);
    cfg.omega_stop = ghz_to_rad(a.fmax_ghz);
    cfg.omega_step = ghz_to_rad(a.step_mhz * 1e-3);
    cfg.bias = operating_bias(&device, a.bias_ua);
    if let Some(t) = a.tand {
        cfg.loss_tangent = t;
    }
    let table = compute_dispersion(&device, &cfg)?;
    let rows: Vec<Vec<Cell>> = table
        .points()
        .iter()
        .map(|p| {
            vec![
                Cell::Num(rad_to_ghz(p.frequency)),
                Cell::Num(20.0 * p.s21.norm().max(1e-300).log10()),
                Cell::Num(p.s21.arg()),
                Cell::Num(p.wavenumber),
                Cell::Num(p.kstar),
                Cell::Num(p.impedance.re),
                Cell::Num(p.impedance.im),
                Cell::Num(p.attenuation),
            ]
        })
        .collect();
    emit_csv(
        &cli.out_dir.join("dispersion.csv"),
        &[
            "freq_GHz",
            "s21_db",
            "s21_phase_rad",
            "k_rad_per_cell",
            "kstar_rad_per_cell",
            "re_Z_ohm",
            "im_Z_ohm",
            "alpha_np_per_cell",
        ],
        &rows,
    )?;
    for (lo, hi) in table.stopbands() {
        println!(
            "stopband: {:.3} - {:.3} GHz (center {:.3})",
            rad_to_ghz(*lo),
            rad_to_ghz(*hi),
            rad_to_ghz(0.5 * (lo + hi))
        );
    }
    if a.svg {
        let pts = |f: &dyn Fn(&twpac::dispersion::DispersionPoint) -> f64| {
            table
                .points()
                .iter()
                .map(|p| (rad_to_ghz(p.frequency), f(p)))
                .collect::<Vec<_>>()
        };
        emit_svg(
            &cli.out_dir.join("dispersion.svg"),
            &[
                Panel {
                    title: "Transmission".into(),
                    x_label: "frequency (GHz)".into(),
                    y_label: "|S21| (dB)".into(),
                    traces: vec![Trace {
                        label: "|S21|".into(),
                        color: "black",
                        points: pts(&|p| 20.0 * p.s21.norm().max(1e-300).log10()),
                    }],
                },
                Panel {
                    title: "Nonlinear wavenumber".into(),
                    x_label: "frequency (GHz)".into(),
                    y_label: "k* (rad/cell)".into(),
                    traces: vec![Trace {
                        label: "k*".into(),
                        color: "black",
                        points: pts(&|p| p.kstar),
                    }],
                },
                Panel {
                    title: "Characteristic impedance".into(),
                    x_label: "frequency (GHz)".into(),
                    y_label: "Re Z (ohm)".into(),
                    traces: vec![Trace {
                        label: "Re Z".into(),
                        color: "black",
                        points: pts(&|p| p.impedance.re),
                    }],
                },
            ],
        )?;
    }
    write_manifest(cli, "dispersion", Some(&a.config), a)
}

fn frequency_grid(fmin_ghz: f64, fmax_ghz: f64, step_mhz: f64) -> Result<Vec<f64>> {
    if !(step_mhz > 0.0 && fmax_ghz >= fmin_ghz) {
        return Err(Error::Config("sweep grid must be increasing".into()));
    }
    let n = ((fmax_ghz - fmin_ghz) / (step_mhz * 1e-3)).round() as usize;
    Ok((0..=n)
        .map(|i| ghz_to_rad(fmin_ghz + i as f64 * step_mhz * 1e-3))
        .collect())
}

fn cme_table(device: &DeviceSpec, bias: BiasPoint, max_needed_ghz: f64) -> Result<DispersionTable> {
    let mut cfg = DispersionConfig::for_device(device).cover(ghz_to_rad(max_needed_ghz));
    cfg.bias = bias;
    compute_dispersion(device, &cfg)
}

fn cmd_cme_sweep(cli: &Cli, a: &CmeSweepArgs) -> Result<()> {
    let mut device = load_device(&a.config)?;
    apply_cells_override(&mut device, a.cells_override)?;
    if let Some(t) = a.tand {
        device.loss_tangent = t;
    }
    let bias = operating_bias(&device, a.bias_ua);
    let max_mode_ghz = (a.fmax_ghz + a.fc_ghz).max(a.fa_ghz).max(2.0 * a.fc_ghz) + 0.1;
    let table = cme_table(&device, bias, max_mode_ghz)?;
    let options = CmeOptions {
        include_4wm: !a.no_4wm,
        include_reflections: !a.no_reflections,
        reflection_convention: if a.complex_gamma {
            twpac::modes::ReflectionConvention::Complex
        } else {
            twpac::modes::ReflectionConvention::Magnitude
        },
        ..CmeOptions::default()
    };
    let grid = frequency_grid(a.fmin_ghz, a.fmax_ghz, a.step_mhz)?;
    let header = [
        "freq_GHz",
        "gain_db",
        "p_a_dbm",
        "p_s_dbm",
        "p_i_dbm",
        "p_c_dbm",
        "p_d_dbm",
        "p_u_dbm",
        "p_c2_dbm",
        "flag",
    ];
    let mut svg_traces = Vec::new();
    for (dir, name, color) in [
        (Direction::Forward, "forward", "blue"),
        (Direction::Backward, "backward", "red"),
    ] {
        let wanted = match a.direction {
            SweepDirection::Both => true,
            SweepDirection::Forward => dir == Direction::Forward,
            SweepDirection::Backward => dir == Direction::Backward,
        };
        if !wanted {
            continue;
        }
        let drive = DriveConfig {
            pa_pump: PumpTone {
                omega: ghz_to_rad(a.fa_ghz),
                power_dbm: a.pa_dbm,
                enabled: true,
            },
            fc_pump: PumpTone {
                omega: ghz_to_rad(a.fc_ghz),
                power_dbm: a.pc_dbm,
                enabled: !a.fc_off,
            },
            signal: SignalTone {
                omega: ghz_to_rad(7.0),
                power_dbm: a.ps_dbm,
            },
            direction: dir,
        };
        for w in drive.validate()? {
            eprintln!("warning: {w}");
        }
        let points = cme::sweep_spectrum(&device, &bias, &table, &drive, &grid, &options);
        let rows: Vec<Vec<Cell>> = points
            .iter()
            .map(|p| {
                let mut row = vec![Cell::Num(rad_to_ghz(p.frequency)), Cell::Num(p.gain_db)];
                for m in ModeId::ALL {
                    row.push(Cell::Num(p.terminal_powers_dbm[m.index()]));
                }
                row.push(match (&p.skipped, p.degenerate) {
                    (Some(e), _) => Cell::Text(format!("skipped: {e}")),
                    (None, true) => Cell::Text("degenerate".into()),
                    _ => Cell::Empty,
                });
                row
            })
            .collect();
        emit_csv(&cli.out_dir.join(format!("cme_{name}.csv")), &header, &rows)?;
        if a.svg {
            svg_traces.push(Trace {
                label: name.to_string(),
                color,
                points: points
                    .iter()
                    .map(|p| (rad_to_ghz(p.frequency), p.gain_db))
                    .collect(),
            });
        }
    }
    if a.svg && !svg_traces.is_empty() {
        emit_svg(
            &cli.out_dir.join("cme_sweep.svg"),
            &[Panel {
                title: "Coupled-mode gain".into(),
                x_label: "signal frequency (GHz)".into(),
                y_label: "gain (dB)".into(),
                traces: svg_traces,
            }],
        )?;
    }
    write_manifest(cli, "cme-sweep", Some(&a.config), a)
}

fn tones_from_args(
    fa_ghz: Option<f64>,
    pa_dbm: Option<f64>,
    fc_ghz: Option<f64>,
    pc_dbm: Option<f64>,
    signal_ghz: f64,
    signal_amp_ua: f64,
) -> Result<TransientTones> {
    let pair = |f: Option<f64>, p: Option<f64>, name: &str| -> Result<Option<(f64, f64)>> {
        match (f, p) {
            (Some(f), Some(p)) => Ok(Some((ghz_to_rad(f), p))),
            (None, None) => Ok(None),
            _ => Err(Error::Config(format!(
                "{name} pump needs both its frequency and power"
            ))),
        }
    };
    Ok(TransientTones {
        pa: pair(fa_ghz, pa_dbm, "PA")?,
        fc: pair(fc_ghz, pc_dbm, "FC")?,
        signal: (ghz_to_rad(signal_ghz), signal_amp_ua * 1e-6),
    })
}

fn check_commensurate(tones: &TransientTones, step_mhz: f64) -> Result<()> {
    let df = step_mhz * 1e-3;
    for (label, w) in [
        ("PA pump", tones.pa.map(|p| p.0)),
        ("FC pump", tones.fc.map(|p| p.0)),
    ] {
        if let Some(w) = w {
            let cycles = rad_to_ghz(w) / df;
            if (cycles - cycles.round()).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "{label} at {:.4} GHz is not on the {step_mhz} MHz analysis grid",
                    rad_to_ghz(w)
                )));
            }
        }
    }
    Ok(())
}

fn cmd_transient_sweep(cli: &Cli, a: &TransientSweepArgs) -> Result<()> {
    let mut device = load_device(&a.config)?;
    apply_cells_override(&mut device, a.cells_override)?;
    let bias = operating_bias(&device, a.bias_ua);
    let tones = tones_from_args(a.fa_ghz, a.pa_dbm, a.fc_ghz, a.pc_dbm, 7.0, a.signal_amp_ua)?;
    check_commensurate(&tones, a.step_mhz)?;
    let grid = frequency_grid(a.fmin_ghz, a.fmax_ghz, a.step_mhz)?;
    let points = transient::sweep_transient(
        &device,
        &bias,
        &tones,
        &grid,
        ghz_to_rad(a.step_mhz * 1e-3),
        a.samples_per_period,
    );
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| {
            vec![
                Cell::Num(rad_to_ghz(p.frequency)),
                Cell::Num(p.s21_forward_db),
                Cell::Num(p.s21_backward_db),
                p.error
                    .as_ref()
                    .map(|e| Cell::Text(e.clone()))
                    .unwrap_or(Cell::Empty),
            ]
        })
        .collect();
    emit_csv(
        &cli.out_dir.join("transient_sweep.csv"),
        &["freq_GHz", "s21_fwd_db", "s21_bwd_db", "flag"],
        &rows,
    )?;
    write_manifest(cli, "transient-sweep", Some(&a.config), a)
}

fn cmd_transient_spectrum(cli: &Cli, a: &TransientSpectrumArgs) -> Result<()> {
    let mut device = load_device(&a.config)?;
    apply_cells_override(&mut device, a.cells_override)?;
    let bias = operating_bias(&device, a.bias_ua);
    let tones = tones_from_args(
        a.fa_ghz,
        a.pa_dbm,
        a.fc_ghz,
        a.pc_dbm,
        a.fs_ghz,
        a.signal_amp_ua,
    )?;
    check_commensurate(&tones, a.step_mhz)?;
    let df = ghz_to_rad(a.step_mhz * 1e-3);
    {
        let cycles = a.fs_ghz / (a.step_mhz * 1e-3);
        if (cycles - cycles.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "signal at {} GHz is not on the {} MHz analysis grid",
                a.fs_ghz, a.step_mhz
            )));
        }
    }
    let max_tone = [
        Some(tones.signal.0),
        tones.pa.map(|p| p.0),
        tones.fc.map(|p| p.0),
    ]
    .iter()
    .flatten()
    .fold(0.0f64, |acc, &w| acc.max(w));
    let transit = device.total_cells() as f64 / device.nominal_phase_velocity()?;
    let drives = transient::transient_drives(&tones, true, device.environment_impedance);
    let net = transient::build_network(&device, &bias, drives)?;
    let cfg = transient::TransientConfig::for_grid(
        df,
        max_tone,
        tones.signal.0,
        transit,
        device.rpm_ring_time()?,
        a.samples_per_period,
    )?;
    let result = transient::integrate_transient(&net, &cfg)?;
    let bins = transient::output_spectrum(
        &result,
        device.environment_impedance,
        df,
        ghz_to_rad(a.fmax_ghz),
        &tones,
    )?;
    let rows: Vec<Vec<Cell>> = bins
        .iter()
        .map(|b| {
            vec![
                Cell::Num(rad_to_ghz(b.frequency)),
                Cell::Num(b.power_dbm),
                b.label
                    .as_ref()
                    .map(|l| Cell::Text(l.clone()))
                    .unwrap_or(Cell::Empty),
            ]
        })
        .collect();
    emit_csv(
        &cli.out_dir.join("transient_spectrum.csv"),
        &["freq_GHz", "power_dbm", "tone"],
        &rows,
    )?;
    write_manifest(cli, "transient-spectrum", Some(&a.config), a)
}

fn cmd_phase_match(cli: &Cli, a: &PhaseMatchArgs) -> Result<()> {
    let device = load_device(&a.config)?;
    let bias = operating_bias(&device, a.bias_ua);
    let process = match a.process {
        ProcessArg::Pa => Process::Pa,
        ProcessArg::FcDown => Process::FcDown,
        ProcessArg::FcUp => Process::FcUp,
    };
    let table = cme_table(&device, bias, 16.2f64.max(a.target_ghz + 6.0))?;
    let amplitude = match a.pump_dbm {
        Some(dbm) => twpac::modes::power_to_current(dbm, device.environment_impedance),
        None => a.amplitude_ua * 1e-6,
    };
    let (target, default_scan) = match process {
        Process::Pa => (ghz_to_rad(a.detuning_ghz), (13.95, 15.3)),
        Process::FcDown => (ghz_to_rad(a.target_ghz), (3.0, 4.86)),
        Process::FcUp => (ghz_to_rad(a.target_ghz), (2.0, 5.2)),
    };
    let scan = (
        ghz_to_rad(a.scan_min_ghz.unwrap_or(default_scan.0)),
        ghz_to_rad(a.scan_max_ghz.unwrap_or(default_scan.1)),
    );
    let triplet =
        phasematch::solve_pump_placement(&device, &bias, &table, process, target, amplitude, scan)?;
    println!(
        "process {}: pump {:.4} GHz, signal {:.4} GHz, partner {:.4} GHz (residual {:.3e} rad/cell)",
        process.label(),
        rad_to_ghz(triplet.pump),
        rad_to_ghz(triplet.signal),
        rad_to_ghz(triplet.partner),
        triplet.residual
    );
    // Mismatch curve against signal frequency at the solved pump.
    let grid: Vec<f64> = frequency_grid(5.0, 9.5, 10.0)?;
    let curve = phasematch::mismatch_curve(&device, &bias, &table, process, triplet.pump, amplitude, &grid);
    let rows: Vec<Vec<Cell>> = curve
        .frequencies
        .iter()
        .zip(&curve.mismatch)
        .map(|(&f, &m)| vec![Cell::Num(rad_to_ghz(f)), Cell::Num(m)])
        .collect();
    emit_csv(
        &cli.out_dir.join(format!("phase_match_{}.csv", process.label())),
        &["freq_GHz", "dbeta_rad_per_cell"],
        &rows,
    )?;
    write_manifest(cli, "phase-match", Some(&a.config), a)
}

fn cmd_noise_fit(cli: &Cli, a: &NoiseFitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input)?;
    let mut samples: Vec<NoiseSample> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 && line.starts_with("freq") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(Error::Config(format!(
                "{}:{}: expected freq_GHz,gain_db,nsys_quanta",
                a.input.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number {s:?} on line {}", lineno + 1)))
        };
        let freq_ghz = parse(cols[0])?;
        let gain_db = parse(cols[1])?;
        samples.push(NoiseSample {
            frequency: freq_ghz * 1e9,
            gain: 10f64.powf(gain_db / 10.0),
            nsys: parse(cols[2])?,
        });
    }
    if samples.is_empty() {
        return Err(Error::Config("no samples in the input file".into()));
    }
    if !(a.bin_width_ghz > 0.0) {
        return Err(Error::Config("bin width must be positive".into()));
    }
    // Group per frequency bin.
    let bin_of = |f: f64| (f / (a.bin_width_ghz * 1e9)).floor() as i64;
    let mut bins: Vec<(i64, Vec<NoiseSample>)> = Vec::new();
    for s in samples {
        let b = bin_of(s.frequency);
        match bins.iter_mut().find(|(k, _)| *k == b) {
            Some((_, v)) => v.push(s),
            None => bins.push((b, vec![s])),
        }
    }
    bins.sort_by_key(|(k, _)| *k);
    let mut fit_rows = Vec::new();
    let mut model_rows = Vec::new();
    for (k, group) in &bins {
        let center_ghz = (*k as f64 + 0.5) * a.bin_width_ghz;
        match noisecal::fit_two_stage(group) {
            Ok(fit) => {
                println!(
                    "bin {center_ghz:.3} GHz: N1 = {:.3} quanta, N2 = {:.3} quanta ({} samples, rms {:.3}{})",
                    fit.n1,
                    fit.n2,
                    fit.sample_count,
                    fit.residual_norm,
                    if fit.nonphysical { ", nonphysical" } else { "" }
                );
                fit_rows.push(vec![
                    Cell::Num(center_ghz),
                    Cell::Num(fit.n1),
                    Cell::Num(fit.n2),
                    Cell::Num(fit.residual_norm),
                    Cell::Num(fit.sample_count as f64),
                    Cell::Text(if fit.nonphysical { "nonphysical".into() } else { String::new() }),
                ]);
                for i in 0..=60 {
                    let gain_db = i as f64 * 0.5;
                    let g = 10f64.powf(gain_db / 10.0);
                    model_rows.push(vec![
                        Cell::Num(center_ghz),
                        Cell::Num(gain_db),
                        Cell::Num(noisecal::predict_nsys(&fit, g)),
                    ]);
                }
            }
            Err(e) => eprintln!("bin {center_ghz:.3} GHz skipped: {e}"),
        }
    }
    emit_csv(
        &cli.out_dir.join("noise_fit.csv"),
        &["bin_center_GHz", "n1_quanta", "n2_quanta", "residual_rms", "samples", "flag"],
        &fit_rows,
    )?;
    emit_csv(
        &cli.out_dir.join("noise_model.csv"),
        &["bin_center_GHz", "gain_db", "nsys_model_quanta"],
        &model_rows,
    )?;
    write_manifest(cli, "noise-fit", None, a)
}
