//! Command line front end.
//!
//! Each subcommand wires the library into a file-emitting pipeline: simulate
//! (or evaluate), write CSV data plus JSON reports into the output
//! directory, and attach a provenance sidecar to every file. Exit codes:
//! 0 success, 2 configuration problem, 3 numerical failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{
    require_block, CalibrateBlock, CrossoverBlock, DdSpecBlock, OutputFormat, RabiBlock,
    ReconstructBlock, RunConfig, SensitivityBlock, T1Block,
};
use crate::error::{Error, Result};
use crate::fit::{fit_crossover, fit_polarization_decay, FitResult};
use crate::io::{
    self, AxisMeta, DdSpecRow, Provenance, ReconstructMeta,
};
use crate::noise::{calibrate_k, sweep_crossover};
use crate::reconstruction::{
    deconvolve_skellam, fit_mixture_with, husimi_q, CoherentStateMixture, DickeBasis,
    FitMixtureOptions, MeasurementAxis,
};
use crate::sensitivity::{eta_conventional, optimize_repetitions, sensitivity_map};
use crate::sim::{
    run_rabi_sequence, run_t1_sequence, simulate_with_stream, InitState, RabiSettings,
    SimulationPlan, TelegraphModel,
};
use crate::spectroscopy::{
    simulate_tomography, AcSignal, DdSequence, ReadoutAxis, TomographyPlan,
};

pub const THREADS_ENV: &str = "PNL_READOUT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

/// Repetition sweep override: an explicit comma list or an inclusive
/// `min..max` range filled with the configured point count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MValuesArg {
    List(Vec<u32>),
    Range(u32, u32),
}

fn parse_m_values(s: &str) -> std::result::Result<MValuesArg, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| format!("bad range start {lo:?}"))?;
        let hi: u32 = hi.trim().parse().map_err(|_| format!("bad range end {hi:?}"))?;
        if hi <= lo {
            return Err("range end must exceed the start".into());
        }
        return Ok(MValuesArg::Range(lo, hi));
    }
    let list: std::result::Result<Vec<u32>, _> =
        s.split(',').map(|t| t.trim().parse::<u32>()).collect();
    match list {
        Ok(v) if v.len() >= 2 => Ok(MValuesArg::List(v)),
        Ok(_) => Err("need at least 2 repetition values".into()),
        Err(e) => Err(format!("bad repetition list: {e}")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pnl-readout",
    version,
    about = "Simulate and analyze projection-noise-limited optical spin readout"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file; command blocks in it are required.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Tabular output format override.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker thread count (0 = automatic); PNL_READOUT_THREADS is the
    /// fallback.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep readout repetitions and decompose noise into shot and
    /// projection parts.
    Crossover {
        /// Repetition grid: comma list (1250,2500,...) or range 1250..25000.
        #[arg(long, value_parser = parse_m_values)]
        m_values: Option<MValuesArg>,
    },
    /// Sweep a driven rotation angle and record signal moments.
    Rabi,
    /// Measure polarization decay against the repetition count and fit it.
    T1Decay,
    /// Decoupling-sequence spectroscopy sweep with axis tomography.
    DdSpec,
    /// Reconstruct the collective spin state from dd-spec histograms.
    Reconstruct {
        /// Directory with hist_*.csv and reconstruct_meta.json.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Compare conventional and repetitive readout sensitivities.
    Sensitivity,
    /// Calibrate the detector correction factor from reference windows.
    CalibrateApd,
}

struct Ctx {
    cfg: RunConfig,
    config_bytes: Option<Vec<u8>>,
    from_file: bool,
    seed: u64,
    out: PathBuf,
    formats: Vec<OutputFormat>,
}

impl Ctx {
    fn want(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn provenance(&self, command: &str) -> Provenance {
        Provenance::new(command, self.seed, self.config_bytes.as_deref())
    }

    /// Write the tabular payload in each requested format plus sidecars.
    fn emit_table<T: serde::Serialize>(
        &self,
        stem: &str,
        command: &str,
        csv_write: impl Fn(&Path) -> Result<()>,
        json_payload: &T,
    ) -> Result<()> {
        let prov = self.provenance(command);
        if self.want(OutputFormat::Csv) {
            let path = self.path(&format!("{stem}.csv"));
            csv_write(&path)?;
            io::write_sidecar(&path, &prov)?;
        }
        if self.want(OutputFormat::Json) {
            let path = self.path(&format!("{stem}.json"));
            io::write_json(&path, json_payload)?;
            io::write_sidecar(&path, &prov)?;
        }
        Ok(())
    }

    /// Write a JSON report (always emitted) plus its sidecar.
    fn emit_report<T: serde::Serialize>(&self, name: &str, command: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        io::write_json(&path, value)?;
        io::write_sidecar(&path, &self.provenance(command))?;
        Ok(())
    }
}

fn resolve_threads(cli_threads: Option<usize>, cfg_threads: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = cli_threads {
        return Ok(Some(n));
    }
    if let Ok(text) = std::env::var(THREADS_ENV) {
        let n: usize = text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be an integer, got {text:?}")))?;
        return Ok(Some(n));
    }
    Ok(cfg_threads)
}

/// Parse flags + config into a context and dispatch the subcommand.
pub fn run(cli: Cli) -> Result<()> {
    let (cfg, config_bytes, from_file) = match &cli.config {
        Some(path) => {
            let (cfg, bytes) = RunConfig::load(path)?;
            (cfg, Some(bytes), true)
        }
        None => (RunConfig::default(), None, false),
    };
    if let Some(n) = resolve_threads(cli.threads, cfg.run.threads)? {
        // A failure here means a pool already exists (possible only when
        // embedded in another process); the run stays valid, just on the
        // existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.run.seed),
        out: cli.out.clone().unwrap_or_else(|| cfg.run.out.clone()),
        formats: match cli.format {
            Some(f) => vec![f.into()],
            None => cfg.run.formats.clone(),
        },
        cfg,
        config_bytes,
        from_file,
    };
    match cli.command {
        Command::Crossover { m_values } => cmd_crossover(&ctx, m_values),
        Command::Rabi => cmd_rabi(&ctx),
        Command::T1Decay => cmd_t1(&ctx),
        Command::DdSpec => cmd_ddspec(&ctx),
        Command::Reconstruct { input } => cmd_reconstruct(&ctx, input),
        Command::Sensitivity => cmd_sensitivity(&ctx),
        Command::CalibrateApd => cmd_calibrate_apd(&ctx),
    }
}

fn report_fit(fit: &FitResult) -> Result<()> {
    if !fit.converged {
        return Err(Error::numerical(format!(
            "fit did not converge after {} iterations (residual norm {:.3e})",
            fit.iterations, fit.residual_norm
        )));
    }
    Ok(())
}

fn cmd_crossover(ctx: &Ctx, m_values: Option<MValuesArg>) -> Result<()> {
    let mut block: CrossoverBlock = require_block(&ctx.cfg.crossover, "crossover", ctx.from_file)?;
    match m_values {
        Some(MValuesArg::List(list)) => block.m_values = Some(list),
        Some(MValuesArg::Range(lo, hi)) => {
            block.m_values = None;
            block.m_min = lo;
            block.m_max = hi;
        }
        None => {}
    }
    let grid = block.m_grid()?;
    let ens = ctx.cfg.ensemble();
    let plan = ens.plan(grid[0], block.shots, ctx.seed)?;
    let curve = sweep_crossover(&plan, &grid, block.k)?;
    ctx.emit_table(
        "curve",
        "crossover",
        |p| io::write_crossover_csv(p, &curve),
        &curve,
    )?;
    let fit = fit_crossover(&curve.xy(), ens.species, curve.contrast)?;
    ctx.emit_report("fit.json", "crossover", &fit)?;
    let (n_nv, n_nv_err) = fit.get("n_nv").expect("crossover fit exposes n_nv");
    let (n_t1, _) = fit.get("n_t1").expect("crossover fit exposes n_t1");
    let (k, k_err) = fit.get("k").expect("crossover fit exposes k");
    println!(
        "crossover: {} points, n_nv = {n_nv:.1} +- {n_nv_err:.1}, n_t1 = {n_t1:.3e}, k = {k:.3} +- {k_err:.3}",
        grid.len()
    );
    report_fit(&fit)
}

fn cmd_rabi(ctx: &Ctx) -> Result<()> {
    let block: RabiBlock = require_block(&ctx.cfg.rabi, "rabi", ctx.from_file)?;
    let ens = ctx.cfg.ensemble();
    let mut plan = ens.plan(block.m, block.shots, ctx.seed)?;
    plan.init = InitState::Polarized { p0: ens.p0 };
    let settings = RabiSettings {
        active_fraction: block.active_fraction,
        bins: block.bins,
    };
    let angles = block.angles()?;
    let points = run_rabi_sequence(&plan, &angles, &settings)?;
    ctx.emit_table("rabi", "rabi", |p| io::write_rabi_csv(p, &points), &points)?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.mean_jz), hi.max(p.mean_jz))
        });
    println!(
        "rabi: {} angles, fringe span {:.3} .. {:.3} in per-spin units",
        points.len(),
        lo,
        hi
    );
    Ok(())
}

fn cmd_t1(ctx: &Ctx) -> Result<()> {
    let block: T1Block = require_block(&ctx.cfg.t1, "t1", ctx.from_file)?;
    let ens = ctx.cfg.ensemble();
    let mut plan = ens.plan(1, block.shots, ctx.seed)?;
    if let Some(m_t1) = block.m_t1 {
        plan.telegraph = TelegraphModel::Rethermalizing { m_t1 };
    }
    let grid = block.m_grid()?;
    let points = run_t1_sequence(&plan, block.level, &grid)?;
    ctx.emit_table("t1", "t1-decay", |p| io::write_t1_csv(p, &points), &points)?;
    let triples: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.m as f64, p.p_obs, p.p_err))
        .collect();
    let fit = fit_polarization_decay(&triples)?;
    ctx.emit_report("decay_fit.json", "t1-decay", &fit)?;
    let (m_t1, m_t1_err) = fit.get("m_t1").expect("decay fit exposes m_t1");
    println!(
        "t1-decay: {} points, fitted m_t1 = {m_t1:.0} +- {m_t1_err:.0} repetitions",
        points.len()
    );
    report_fit(&fit)
}

const TOMOGRAPHY_AXES: [ReadoutAxis; 3] = [ReadoutAxis::X, ReadoutAxis::Y, ReadoutAxis::Z];

fn axis_angles(axis: ReadoutAxis) -> (f64, f64) {
    match axis {
        ReadoutAxis::X => (0.5 * PI, 0.0),
        ReadoutAxis::Y => (0.5 * PI, 0.5 * PI),
        ReadoutAxis::Z => (0.0, 0.0),
    }
}

fn cmd_ddspec(ctx: &Ctx) -> Result<()> {
    let block: DdSpecBlock = require_block(&ctx.cfg.ddspec, "ddspec", ctx.from_file)?;
    let ens = ctx.cfg.ensemble();
    let cfg = ens.to_config()?;
    let signal = AcSignal::new(block.b_osc, block.f)?;
    let taus = block.tau_grid()?;
    let tau0 = signal.resonant_tau();

    let mut rows: Vec<DdSpecRow> = Vec::with_capacity(taus.len() * TOMOGRAPHY_AXES.len());
    let mut resonant: Option<(f64, Vec<crate::spectroscopy::AxisStats>)> = None;
    for (i, &tau) in taus.iter().enumerate() {
        let plan = TomographyPlan {
            k1: block.k1,
            convention: block.convention,
            bins: block.bins,
            ..TomographyPlan::new(
                cfg.clone(),
                DdSequence::new(block.n_pulses, tau)?,
                signal,
                block.m,
                block.shots,
                ctx.seed.wrapping_add(i as u64),
            )
        };
        let stats = simulate_tomography(&plan, &TOMOGRAPHY_AXES)?;
        for s in &stats {
            rows.push(DdSpecRow::from_stats(tau, s));
        }
        let closer = match &resonant {
            Some((best_tau, _)) => (tau - tau0).abs() < (best_tau - tau0).abs(),
            None => true,
        };
        if closer {
            resonant = Some((tau, stats));
        }
    }
    ctx.emit_table("ddspec", "dd-spec", |p| io::write_ddspec_csv(p, &rows), &rows)?;

    // Reconstruction input bundle from the sweep point closest to resonance.
    let (res_tau, res_stats) = resonant.expect("tau grid is nonempty");
    let mut axes = Vec::new();
    for s in &res_stats {
        let name = format!("hist_{}.csv", s.axis.label());
        let path = ctx.path(&name);
        io::write_histogram_csv(&path, &s.histogram)?;
        io::write_sidecar(&path, &ctx.provenance("dd-spec"))?;
        let (theta, phi) = axis_angles(s.axis);
        axes.push(AxisMeta {
            label: s.axis.label().to_string(),
            theta,
            phi,
            hist: name,
        });
    }
    let meta = ReconstructMeta {
        two_j: cfg.n_nv,
        n: cfg.photons_per_unit * block.m as f64,
        c: cfg.contrast,
        k: 1.0,
        seed: ctx.seed,
        axes,
    };
    ctx.emit_report("reconstruct_meta.json", "dd-spec", &meta)?;
    let y_on = res_stats
        .iter()
        .find(|s| s.axis == ReadoutAxis::Y)
        .expect("y axis simulated");
    println!(
        "dd-spec: {} spacings, histograms at tau = {res_tau:.3e} s, on-resonance <Y> = {:.3}, sigma' = {:.3}",
        taus.len(),
        y_on.mean,
        y_on.sigma_prime
    );
    Ok(())
}

/// Per-axis deconvolution summary embedded in the mixture report.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct DeconvSummary {
    axis: String,
    iterations: usize,
    converged: bool,
    low_confidence: bool,
    log_likelihood: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct MixtureReport {
    delta_phi_rad: f64,
    delta_phi_deg: f64,
    theta_rad: f64,
    theta_deg: f64,
    thermal_weight: f64,
    log_likelihood: f64,
    components: usize,
    deconvolutions: Vec<DeconvSummary>,
    mixture: CoherentStateMixture,
}

fn cmd_reconstruct(ctx: &Ctx, input: Option<PathBuf>) -> Result<()> {
    let block: ReconstructBlock =
        require_block(&ctx.cfg.reconstruct, "reconstruct", ctx.from_file)?;
    let input_dir = input
        .or_else(|| block.input.clone())
        .unwrap_or_else(|| ctx.out.clone());
    let meta_path = input_dir.join("reconstruct_meta.json");
    if !meta_path.exists() {
        return Err(Error::Config(format!(
            "missing {} (run dd-spec first or point reconstruct.input at its output)",
            meta_path.display()
        )));
    }
    let meta: ReconstructMeta = io::read_json(&meta_path)?;
    let basis = DickeBasis::new(meta.two_j)?;
    let mut marginals = Vec::with_capacity(meta.axes.len());
    let mut summaries = Vec::with_capacity(meta.axes.len());
    for axis in &meta.axes {
        let hist = io::read_histogram_csv(&input_dir.join(&axis.hist))?;
        let deconv = deconvolve_skellam(
            &hist,
            MeasurementAxis::new(axis.theta, axis.phi),
            &basis,
            meta.n,
            meta.c,
            meta.k,
        )?;
        summaries.push(DeconvSummary {
            axis: axis.label.clone(),
            iterations: deconv.iterations,
            converged: deconv.converged,
            low_confidence: deconv.low_confidence,
            log_likelihood: deconv.log_likelihood,
        });
        marginals.push(deconv.marginal);
    }
    let options = FitMixtureOptions {
        components: block.components,
        refine_rounds: block.refine_rounds,
    };
    let fit = fit_mixture_with(&marginals, &options)?;
    let report = MixtureReport {
        delta_phi_rad: fit.mixture.delta_phi,
        delta_phi_deg: fit.mixture.delta_phi * 180.0 / PI,
        theta_rad: fit.mixture.theta,
        theta_deg: fit.mixture.theta * 180.0 / PI,
        thermal_weight: fit.mixture.thermal_weight,
        log_likelihood: fit.log_likelihood,
        components: options.components,
        deconvolutions: summaries,
        mixture: fit.mixture.clone(),
    };
    ctx.emit_report("mixture.json", "reconstruct", &report)?;

    if block.theta_points < 2 || block.phi_points < 2 {
        return Err(Error::invalid("husimi grid needs at least 2 points per axis"));
    }
    let points: Vec<(f64, f64)> = (0..block.theta_points)
        .flat_map(|it| {
            let theta = PI * it as f64 / (block.theta_points - 1) as f64;
            (0..block.phi_points).map(move |ip| {
                let phi = -PI + 2.0 * PI * ip as f64 / (block.phi_points - 1) as f64;
                (theta, phi)
            })
        })
        .collect();
    let q = husimi_q(&fit.mixture, &points, block.include_thermal)?;
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .zip(&q)
        .map(|(&(theta, phi), &q)| (theta, phi, q))
        .collect();
    ctx.emit_table(
        "husimi",
        "reconstruct",
        |p| io::write_husimi_csv(p, &rows),
        &rows,
    )?;
    println!(
        "reconstruct: delta_phi = {:.1} deg, theta = {:.1} deg, thermal weight = {:.2}, peak Q = {:.3}",
        report.delta_phi_deg,
        report.theta_deg,
        report.thermal_weight,
        q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(())
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct OptimizerEntry {
    tau_sens: f64,
    m_star: u32,
    eta_star: f64,
    eta_conv: f64,
    ratio: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct SensitivityReport {
    squeezing_db: Option<f64>,
    entries: Vec<OptimizerEntry>,
}

fn cmd_sensitivity(ctx: &Ctx) -> Result<()> {
    let block: SensitivityBlock =
        require_block(&ctx.cfg.sensitivity, "sensitivity", ctx.from_file)?;
    let params = block.params();
    let squeezing = block.squeezing()?;
    let taus = block.taus()?;
    let ms = block.ms()?;
    let map = sensitivity_map(&params, &taus, &ms, squeezing.as_ref())?;
    ctx.emit_table(
        "map",
        "sensitivity",
        |p| io::write_sensitivity_csv(p, &map),
        &map,
    )?;
    let mut entries = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let (m_star, eta_star) = optimize_repetitions(&params, tau, squeezing.as_ref())?;
        let eta_conv = eta_conventional(&params, tau)?;
        entries.push(OptimizerEntry {
            tau_sens: tau,
            m_star,
            eta_star,
            eta_conv,
            ratio: eta_conv / eta_star,
        });
    }
    let report = SensitivityReport {
        squeezing_db: block.squeezing_db,
        entries,
    };
    ctx.emit_report("report.json", "sensitivity", &report)?;
    let best = report
        .entries
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("tau grid is nonempty");
    println!(
        "sensitivity: {} x {} map; best advantage {:.1}x at tau_sens = {:.3e} us with m* = {}",
        taus.len(),
        ms.len(),
        best.ratio,
        best.tau_sens,
        best.m_star
    );
    Ok(())
}

fn cmd_calibrate_apd(ctx: &Ctx) -> Result<()> {
    let block: CalibrateBlock = require_block(&ctx.cfg.calibrate, "calibrate", ctx.from_file)?;
    if block.m_values.len() < 2 {
        return Err(Error::invalid("calibrate needs at least 2 repetition levels"));
    }
    let ens = ctx.cfg.ensemble();
    let base = SimulationPlan {
        apd: block.apd_model(),
        ..ens.plan(block.m_values[0], block.shots, ctx.seed)?
    };
    let mut records = Vec::with_capacity(block.m_values.len() * block.shots as usize);
    for (i, &m) in block.m_values.iter().enumerate() {
        let sub = SimulationPlan { m, ..base.clone() };
        records.extend(simulate_with_stream(&sub, (i as u64) << 32)?);
    }
    ctx.emit_table(
        "records",
        "calibrate-apd",
        |p| io::write_records_csv(p, &records),
        &records,
    )?;
    let calibration = calibrate_k(&records)?;
    ctx.emit_report("calibration.json", "calibrate-apd", &calibration)?;
    println!(
        "calibrate-apd: {} levels x {} shots, k = {:.4} +- {:.4}",
        block.m_values.len(),
        block.shots,
        calibration.k,
        calibration.err
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_values_parser_accepts_lists_and_ranges() {
        assert_eq!(
            parse_m_values("1250,2500,5000").unwrap(),
            MValuesArg::List(vec![1250, 2500, 5000])
        );
        assert_eq!(
            parse_m_values("1250..25000").unwrap(),
            MValuesArg::Range(1250, 25_000)
        );
        assert!(parse_m_values("25000..1250").is_err());
        assert!(parse_m_values("abc").is_err());
        assert!(parse_m_values("100").is_err());
    }

    #[test]
    fn cli_parses_global_flags() {
        use clap::Parser;
        let cli = Cli::parse_from([
            "pnl-readout",
            "crossover",
            "--m-values",
            "1250..25000",
            "--seed",
            "9",
            "--out",
            "/tmp/x",
            "--format",
            "json",
            "--threads",
            "2",
        ]);
        assert_eq!(cli.seed, Some(9));
        assert_eq!(cli.threads, Some(2));
        assert_eq!(cli.format, Some(FormatArg::Json));
        match cli.command {
            Command::Crossover { m_values } => {
                assert_eq!(m_values, Some(MValuesArg::Range(1250, 25_000)));
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn axis_angles_are_orthogonal() {
        let (tx, px) = axis_angles(ReadoutAxis::X);
        let (ty, py) = axis_angles(ReadoutAxis::Y);
        let (tz, _) = axis_angles(ReadoutAxis::Z);
        let unit = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
        let (x, y, z) = (unit(tx, px), unit(ty, py), unit(tz, 0.0));
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        assert!(dot(x, y).abs() < 1e-12);
        assert!(dot(x, z).abs() < 1e-12);
        assert!(dot(y, z).abs() < 1e-12);
    }
}
