//! Stage functions shared by the CLI subcommands, and the end-to-end run:
//! graph -> spectrum -> design -> (sampling) -> task.
//!
//! Every random stage draws its seed from the run seed, so a run is a pure
//! function of its configuration. Seed fields nested inside sections (KPM,
//! reconstruction) are replaced by the derived stage seeds.

use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::chebyshev::{chebyshev_fit, ChebyshevApprox};
use crate::config::{
    BankSpec, CompressMethod, DesignKind, GraphConfig, InverseSpec, Mode, RunConfig, SamplingConfig,
    SamplingMode, SignalConfig, SignalKind, SpectrumConfig, SpectrumMethod, TaskConfig, WarpSource,
};
use crate::design::{self, FilterBank};
use crate::eigen::{eigendecompose, EigenDecomposition, DEFAULT_MAX_N};
use crate::error::{check_len, invalid, Error, Result};
use crate::frame::{frame_bounds, Dictionary, FrameBounds, Inverse};
use crate::graph::SparseGraph;
use crate::io;
use crate::laplacian::{build_laplacian, Laplacian};
use crate::linalg::norm_sq;
use crate::rng;
use crate::sampling::{self, CenterSets, SamplingWeights};
use crate::signals;
use crate::spectrum::{self, EnergyCdf, SpectralCdf};
use crate::tasks::{self, DenoiseConfig};

// Stage indices for [`stage_seed`].
pub const STAGE_LANCZOS: u64 = 1;
pub const STAGE_KPM: u64 = 2;
pub const STAGE_SIGNAL: u64 = 3;
pub const STAGE_NOISE: u64 = 4;
pub const STAGE_PROBES: u64 = 5;
pub const STAGE_CENTERS: u64 = 6;
pub const STAGE_RECONSTRUCT: u64 = 7;

/// Sample points per kernel in the exported bank CSV.
pub const BANK_CSV_POINTS: usize = 501;

/// Seed of one pipeline stage.
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    rng::stream(seed, stage).random()
}

pub fn load_graph(cfg: &GraphConfig, seed: u64) -> Result<(SparseGraph, Option<Vec<[f64; 2]>>)> {
    match (&cfg.path, &cfg.generate) {
        (Some(path), None) => {
            let format = cfg.format.as_deref().map(io::GraphFormat::parse).transpose()?;
            Ok((io::read_graph(path, format)?, None))
        }
        (None, Some(generator)) => generator.build(seed),
        _ => invalid("graph: give exactly one of `path` or `generate`"),
    }
}

/// Graph, Laplacian and lazily computed spectral quantities.
pub struct Context {
    pub laplacian: Arc<Laplacian>,
    pub coords: Option<Vec<[f64; 2]>>,
    pub spectrum: SpectrumConfig,
    seed: u64,
    eig: Option<Arc<EigenDecomposition>>,
    cdf: Option<Arc<SpectralCdf>>,
}

impl Context {
    pub fn new(graph: SparseGraph, cfg: &GraphConfig, spectrum: SpectrumConfig, seed: u64) -> Result<Self> {
        graph.warn_if_disconnected();
        let mut l = build_laplacian(&graph, cfg.laplacian)?;
        if cfg.lanczos_steps > 0 {
            l = l.refine_lambda_max(cfg.lanczos_steps, stage_seed(seed, STAGE_LANCZOS))?;
        }
        Ok(Self { laplacian: Arc::new(l), coords: None, spectrum, seed, eig: None, cdf: None })
    }

    pub fn load(cfg: &GraphConfig, spectrum: SpectrumConfig, seed: u64) -> Result<Self> {
        let (g, coords) = load_graph(cfg, seed)?;
        let mut ctx = Self::new(g, cfg, spectrum, seed)?;
        ctx.coords = coords;
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.laplacian.n()
    }

    pub fn lambda_bar(&self) -> f64 {
        self.laplacian.lambda_max_bound()
    }

    /// Whether spectral quantities come from the eigendecomposition.
    pub fn exact_spectrum(&self) -> bool {
        match self.spectrum.method {
            SpectrumMethod::Exact => true,
            SpectrumMethod::Kpm => false,
            SpectrumMethod::Auto => self.n() <= self.spectrum.exact_max_n,
        }
    }

    pub fn eigen(&mut self) -> Result<Arc<EigenDecomposition>> {
        if self.eig.is_none() {
            log::info!("eigendecomposition of {} vertices", self.n());
            self.eig = Some(Arc::new(eigendecompose(&self.laplacian, DEFAULT_MAX_N)?));
        }
        Ok(self.eig.clone().expect("just set"))
    }

    /// The eigendecomposition if it was computed or the spectrum is exact.
    pub fn eigen_if_exact(&mut self) -> Result<Option<Arc<EigenDecomposition>>> {
        if self.eig.is_some() || self.exact_spectrum() {
            self.eigen().map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn kpm_config(&self) -> spectrum::KpmConfig {
        spectrum::KpmConfig { seed: stage_seed(self.seed, STAGE_KPM), ..self.spectrum.kpm }
    }

    pub fn spectral_cdf(&mut self) -> Result<Arc<SpectralCdf>> {
        if self.cdf.is_none() {
            let cdf = if self.exact_spectrum() {
                spectrum::exact_spectral_cdf(&*self.eigen()?)
            } else {
                spectrum::estimate_spectral_cdf(&self.laplacian, &self.kpm_config())?
            };
            self.cdf = Some(Arc::new(cdf));
        }
        Ok(self.cdf.clone().expect("just set"))
    }

    /// The spectral CDF if one has been computed.
    pub fn cached_cdf(&self) -> Option<&Arc<SpectralCdf>> {
        self.cdf.as_ref()
    }

    pub fn energy_cdf(&mut self, training: &[Vec<f64>]) -> Result<EnergyCdf> {
        if self.exact_spectrum() {
            spectrum::exact_energy_cdf(&*self.eigen()?, training)
        } else {
            spectrum::estimate_energy_cdf(&self.laplacian, training, &self.kpm_config())
        }
    }

    pub fn read_signal(&self, path: &Path) -> Result<Vec<f64>> {
        let f = io::read_signal_file(path)?;
        check_len(self.n(), f.len())?;
        Ok(f)
    }
}

fn cdf_from_file(path: &Path) -> Result<SpectralCdf> {
    io::read_cdf(io::open(path)?)
}

/// Builds the filter bank of `spec` on `[0, lambda_bar]`. `training` is
/// needed only for the energy warp without a CDF file.
pub fn design_bank(ctx: &mut Context, spec: &BankSpec, training: Option<&[Vec<f64>]>) -> Result<FilterBank> {
    spec.validate()?;
    let lb = ctx.lambda_bar();
    let spectral = |ctx: &mut Context| -> Result<Arc<SpectralCdf>> {
        match &spec.cdf_file {
            Some(p) => Ok(Arc::new(cdf_from_file(p)?)),
            None => ctx.spectral_cdf(),
        }
    };
    match spec.design {
        DesignKind::Ideal => {
            let cdf = match spec.warp {
                WarpSource::Spectrum => Some(spectral(ctx)?),
                _ => None,
            };
            design::make_ideal_partition(lb, spec.j, spec.spacing, cdf.as_deref())
        }
        DesignKind::IdealShifted => {
            let base = design::make_ideal_partition(lb, spec.j, spec.spacing, None)?;
            let eig = ctx.eigen()?;
            design::shift_edges_to_gaps(&base, eig.eigenvalues())
        }
        DesignKind::Sgwt => design::make_sgwt(lb, spec.j),
        DesignKind::Translates => {
            let base = design::make_uniform_translates(lb, spec.j, spec.prototype)?;
            match spec.warp {
                WarpSource::None => Ok(base),
                WarpSource::Log => design::make_log_warped(&base, spec.nu),
                WarpSource::Spectrum => design::make_spectrum_adapted(&base, spectral(ctx)?, false, spec.nu),
                WarpSource::LogSpectrum => design::make_spectrum_adapted(&base, spectral(ctx)?, true, spec.nu),
                WarpSource::Energy => {
                    let ecdf = match (&spec.cdf_file, training) {
                        (Some(p), _) => EnergyCdf::new(cdf_from_file(p)?),
                        (None, Some(t)) => ctx.energy_cdf(t)?,
                        (None, None) => return invalid("the energy warp needs training signals or a cdf_file"),
                    };
                    design::make_signal_adapted(&base, &ecdf)
                }
            }
        }
    }
}

/// Chebyshev fits of every kernel at `BankSpec::degree`.
pub fn approximants(ctx: &Context, bank: &FilterBank, spec: &BankSpec) -> Result<Vec<ChebyshevApprox>> {
    bank.kernels
        .iter()
        .map(|k| chebyshev_fit(k, spec.degree, ctx.lambda_bar(), spec.jackson))
        .collect()
}

pub fn build_dictionary(
    ctx: &mut Context,
    bank: FilterBank,
    spec: &BankSpec,
    centers: Option<Vec<Vec<usize>>>,
) -> Result<Dictionary> {
    match spec.mode {
        Mode::Exact => Dictionary::exact(ctx.laplacian.clone(), ctx.eigen()?, bank, centers),
        Mode::Poly => Dictionary::poly(ctx.laplacian.clone(), bank, spec.degree, spec.jackson, centers),
    }
}

pub fn bounds(ctx: &mut Context, d: &Dictionary) -> Result<FrameBounds> {
    let eig = ctx.eigen_if_exact()?;
    Ok(frame_bounds(d, eig.as_deref()))
}

pub fn resolve_inverse(ctx: &mut Context, d: &Dictionary, spec: InverseSpec) -> Result<Inverse> {
    if let InverseSpec::Cg { tol, max_iter } = spec {
        return Ok(Inverse::Cg { tol, max_iter });
    }
    let fb = bounds(ctx, d)?;
    if !(fb.a > 0.0) {
        return invalid(format!("lower frame bound is {}; use the cg inverse", fb.a));
    }
    if fb.heuristic {
        log::warn!("frame bounds of a subsampled dictionary are heuristic");
    }
    Ok(match spec {
        InverseSpec::FrameIteration { t } => Inverse::FrameIteration { a: fb.a, b: fb.b, t },
        _ => Inverse::SinglePass { a: fb.a, b: fb.b },
    })
}

/// Test signal on the context's graph.
pub fn load_signal(ctx: &Context, cfg: &SignalConfig, seed: u64) -> Result<Vec<f64>> {
    let f = match &cfg.path {
        Some(p) => ctx.read_signal(p)?,
        None => {
            let s = stage_seed(seed, STAGE_SIGNAL);
            match cfg.kind {
                SignalKind::PiecewiseSmooth => signals::piecewise_smooth(&ctx.laplacian, cfg.pieces, s)?,
                SignalKind::PiecewiseConstant => signals::piecewise_constant(ctx.laplacian.graph(), cfg.pieces, s)?,
            }
        }
    };
    Ok(if cfg.center { signals::mean_normalize(&f) } else { f })
}

/// Sampling distributions per band. Nonuniform weights are exact in exact
/// mode and probe estimates in polynomial mode.
pub fn sampling_weights(
    ctx: &mut Context,
    d: &Dictionary,
    spec: &BankSpec,
    cfg: &SamplingConfig,
    signal: Option<&[f64]>,
    seed: u64,
) -> Result<SamplingWeights> {
    let nonuniform = |ctx: &mut Context| -> Result<SamplingWeights> {
        match spec.mode {
            Mode::Exact => Ok(sampling::exact_weights(&*ctx.eigen()?, d.bank())),
            Mode::Poly => {
                let approx = approximants(ctx, d.bank(), spec)?;
                sampling::nonuniform_weights(&ctx.laplacian, &approx, cfg.probes, stage_seed(seed, STAGE_PROBES))
            }
        }
    };
    match cfg.mode {
        SamplingMode::Uniform => Ok(sampling::uniform_weights(ctx.n(), d.n_bands())),
        SamplingMode::Nonuniform => nonuniform(ctx),
        SamplingMode::Signal => {
            let f = signal.ok_or_else(|| Error::InvalidArgument("signal-adapted sampling needs a signal".into()))?;
            let base = nonuniform(ctx)?;
            sampling::signal_adapted_weights(&base, &d.filter_all(f)?)
        }
    }
}

/// Per-band counts: explicit, or `total` split by estimated eigenvalue shares.
pub fn sample_counts(ctx: &mut Context, bank: &FilterBank, cfg: &SamplingConfig, total: Option<usize>) -> Result<Vec<usize>> {
    if total.is_none() {
        if let Some(c) = &cfg.counts {
            check_len(bank.len(), c.len())?;
            return Ok(c.clone());
        }
    }
    let total = total.or(cfg.total).ok_or_else(|| Error::InvalidArgument("no sample budget given".into()))?;
    let cdf = ctx.spectral_cdf()?;
    sampling::allocate_samples(&cdf, bank, total, None)
}

pub fn draw(weights: &SamplingWeights, counts: &[usize], seed: u64) -> Result<CenterSets> {
    sampling::draw_centers(weights, counts, stage_seed(seed, STAGE_CENTERS))
}

/// Gaussian noise of standard deviation `sigma`.
pub fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(stage_seed(seed, STAGE_NOISE), 0);
    rng::gaussian(&mut r, n).into_iter().map(|v| sigma * v).collect()
}

/// NMSE after each `T0` of one OMP run to `max(t0s)`: OMP is greedy, so the
/// run to `T0` is a prefix of the longer one.
pub fn omp_curve(d: &Dictionary, f: &[f64], t0s: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let energy = norm_sq(f);
    if energy == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let top = t0s.iter().copied().max().unwrap_or(0).min(d.n_atoms());
    let (_, rec, res) = tasks::compress_omp(d, f, top)?;
    let r = &res.residual_norms;
    let curve = t0s
        .iter()
        .map(|&t| match t.min(r.len()) {
            0 => 1.0,
            k => r[k - 1].powi(2) / energy,
        })
        .collect();
    Ok((curve, rec))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub lambda_bar: f64,
    pub design: String,
    pub bands: usize,
    pub mode: Mode,
    pub degree: usize,
    pub frame_bounds: FrameBounds,
    #[serde(flatten)]
    pub task: TaskSummary,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSummary {
    Denoise { sigma: f64, nmse: f64, delta_snr_db: f64, thresholds: Vec<f64> },
    Compress { method: CompressMethod, t0: Vec<usize>, nmse: Vec<f64> },
    Reconstruct { totals: Vec<usize>, mean_band_nmse: Vec<f64> },
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Runs the configured pipeline and writes its artifacts to `output_dir`:
/// `config.toml`, `metrics.json`, `bank.csv`, `signal.csv`, `cdf.csv` when a
/// spectral CDF was used, `centers.csv` when sampling, and task outputs.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    write_text(dir, "config.toml", &cfg.to_toml())?;

    let seed = cfg.seed;
    let mut ctx = Context::load(&cfg.graph, cfg.spectrum, seed)?;
    let f = load_signal(&ctx, &cfg.signal, seed)?;
    io::write_signal_file(dir.join("signal.csv"), &f)?;

    let bank = design_bank(&mut ctx, &cfg.design, Some(std::slice::from_ref(&f)))?;
    write_text(dir, "bank.csv", &bank.to_csv(BANK_CSV_POINTS))?;
    let full = build_dictionary(&mut ctx, bank.clone(), &cfg.design, None)?;

    let d = match (&cfg.sampling, &cfg.task) {
        (Some(s), TaskConfig::Denoise { .. } | TaskConfig::Compress { .. }) => {
            let w = sampling_weights(&mut ctx, &full, &cfg.design, s, Some(&f), seed)?;
            let counts = sample_counts(&mut ctx, &bank, s, None)?;
            let centers = draw(&w, &counts, seed)?;
            io::write_centers(&centers, io::create(dir.join("centers.csv"))?)?;
            full.with_centers(centers.sets)?
        }
        _ => full.clone(),
    };
    let fb = bounds(&mut ctx, &d)?;

    let task = match &cfg.task {
        TaskConfig::Denoise { sigma, inverse, norm_probes } => {
            let xi = noise(ctx.n(), *sigma, seed);
            let y: Vec<f64> = f.iter().zip(&xi).map(|(a, b)| a + b).collect();
            let inv = resolve_inverse(&mut ctx, &d, *inverse)?;
            let dcfg = DenoiseConfig { sigma: *sigma, thresholds: None, norm_probes: *norm_probes, seed: stage_seed(seed, STAGE_PROBES) };
            let out = tasks::denoise(&d, &y, &dcfg, &inv)?;
            let m = tasks::metrics(&f, &out.signal, Some(&xi))?;
            io::write_signal_file(dir.join("noisy.csv"), &y)?;
            io::write_signal_file(dir.join("denoised.csv"), &out.signal)?;
            TaskSummary::Denoise {
                sigma: *sigma,
                nmse: m.nmse,
                delta_snr_db: m.delta_snr_db.expect("noise given"),
                thresholds: out.thresholds,
            }
        }
        TaskConfig::Compress { t0, method, inverse, norm_probes } => {
            let (curve, rec) = match method {
                CompressMethod::Omp => omp_curve(&d, &f, t0)?,
                CompressMethod::HardThreshold => {
                    let inv = resolve_inverse(&mut ctx, &d, *inverse)?;
                    let norms = tasks::atom_norms(&d, *norm_probes, stage_seed(seed, STAGE_PROBES))?;
                    let mut curve = Vec::with_capacity(t0.len());
                    let mut last = Vec::new();
                    for &t in t0 {
                        last = tasks::compress_hard_threshold(&d, &f, t.min(d.n_atoms()), &norms, &inv)?;
                        curve.push(tasks::nmse(&f, &last)?);
                    }
                    (curve, last)
                }
            };
            let mut csv = String::from("t0,nmse\n");
            for (t, e) in t0.iter().zip(&curve) {
                csv.push_str(&format!("{t},{}\n", io::fmt_f64(*e)));
            }
            write_text(dir, "compress.csv", &csv)?;
            io::write_signal_file(dir.join("compressed.csv"), &rec)?;
            TaskSummary::Compress { method: *method, t0: t0.clone(), nmse: curve }
        }
        TaskConfig::Reconstruct { totals } => {
            let s = cfg.sampling.as_ref().expect("validated");
            let totals = if totals.is_empty() {
                vec![s.total.unwrap_or_else(|| s.counts.iter().flatten().sum())]
            } else {
                totals.clone()
            };
            let (curve, csv) = reconstruct_sweep(&mut ctx, &full, &cfg.design, s, &f, &totals, seed)?;
            write_text(dir, "reconstruct.csv", &csv)?;
            TaskSummary::Reconstruct { totals, mean_band_nmse: curve }
        }
    };

    if let Some(cdf) = ctx.cached_cdf() {
        io::write_cdf(&io::cdf_points(cdf), io::create(dir.join("cdf.csv"))?)?;
    }
    let summary = RunSummary {
        n_vertices: ctx.n(),
        n_edges: ctx.laplacian.graph().n_edges(),
        lambda_bar: ctx.lambda_bar(),
        design: bank.design_name.clone(),
        bands: bank.len(),
        mode: cfg.design.mode,
        degree: cfg.design.degree,
        frame_bounds: fb,
        task,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(dir, "metrics.json", &(json + "\n"))?;
    Ok(summary)
}

/// Band-by-band reconstruction of `g_j(L) f` from sampled coefficients for
/// each budget. Returns the mean band NMSE per budget and a CSV with one row
/// per (total, band).
fn reconstruct_sweep(
    ctx: &mut Context,
    d: &Dictionary,
    spec: &BankSpec,
    s: &SamplingConfig,
    f: &[f64],
    totals: &[usize],
    seed: u64,
) -> Result<(Vec<f64>, String)> {
    let approx = approximants(ctx, d.bank(), spec)?;
    let penalties = approx.iter().map(|p| s.penalty.build(p)).collect::<Result<Vec<_>>>()?;
    let targets = d.filter_all(f)?;
    let weights = sampling_weights(ctx, d, spec, s, Some(f), seed)?;
    let rcfg = sampling::ReconstructConfig { seed: stage_seed(seed, STAGE_RECONSTRUCT), ..s.reconstruct };
    let mut csv = String::from("total,band,samples,nmse\n");
    let mut curve = Vec::new();
    for &total in totals {
        let counts = sample_counts(ctx, d.bank(), s, Some(total))?;
        let centers = draw(&weights, &counts, seed)?;
        let mut errs = Vec::new();
        for (j, target) in targets.iter().enumerate() {
            let set = &centers.sets[j];
            let alpha: Vec<f64> = set.iter().map(|&i| target[i]).collect();
            let (z, _) = sampling::band_reconstruct(&ctx.laplacian, set, &centers.weights[j], &alpha, &penalties[j], &rcfg)?;
            // bands with no energy in f have nothing to recover
            let e = if norm_sq(target) > 0.0 { tasks::nmse(target, &z)? } else { 0.0 };
            csv.push_str(&format!("{total},{j},{},{}\n", set.len(), io::fmt_f64(e)));
            errs.push(e);
        }
        curve.push(errs.iter().sum::<f64>() / errs.len() as f64);
    }
    Ok((curve, csv))
}
