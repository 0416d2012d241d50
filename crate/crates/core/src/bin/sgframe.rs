use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use sgframe::chebyshev::sup_error;
use sgframe::config::{
    BankSpec, CompressMethod, DesignKind, GraphConfig, GraphGenerator, InverseSpec, Mode, RunConfig, SamplingConfig,
    SamplingMode, SignalConfig, SignalKind, SpectrumConfig, SpectrumMethod, WarpSource,
};
use sgframe::design::{Spacing, GRID_POINTS};
use sgframe::frame::reconstruct;
use sgframe::kernel::Prototype;
use sgframe::laplacian::LaplacianKind;
use sgframe::pipeline::{self, Context, BANK_CSV_POINTS};
use sgframe::tasks::{self, DenoiseConfig};
use sgframe::io;

/// Localized spectral graph filter frames.
#[derive(Parser)]
#[command(name = "sgframe", version)]
struct Cli {
    /// Seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph and optionally a test signal.
    Generate(GenerateArgs),
    /// Eigenvalue CDF, exact or estimated, as (z, P) CSV.
    SpectrumCdf(SpectrumCdfArgs),
    /// Build a filter bank and export sampled kernels.
    Design(DesignArgs),
    /// Draw center vertices per band.
    Sample(SampleArgs),
    /// Analysis coefficients of a signal.
    Transform(TransformArgs),
    /// Signal from coefficients.
    Inverse(InverseArgs),
    /// Soft-threshold denoising.
    Denoise(DenoiseArgs),
    /// Sparse approximation for a sweep of T0.
    Compress(CompressArgs),
    /// Run a whole configuration file.
    Pipeline(PipelineArgs),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    let v = s.replace('-', "_");
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(&v)).map_err(|e| e.to_string())
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file: Matrix Market (.mtx) or edge list (.csv).
    #[arg(long)]
    graph: PathBuf,
    /// Graph format (mtx or csv) when the extension is ambiguous.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, value_parser = parse_enum::<LaplacianKind>, default_value = "combinatorial")]
    laplacian: LaplacianKind,
    /// Lanczos steps for the spectral bound; 0 keeps the degree bound.
    #[arg(long, default_value_t = 0)]
    lanczos_steps: usize,
    /// auto, exact or kpm.
    #[arg(long, value_parser = parse_enum::<SpectrumMethod>, default_value = "auto")]
    spectrum: SpectrumMethod,
    /// KPM random probes.
    #[arg(long)]
    probes: Option<usize>,
    /// KPM polynomial degree.
    #[arg(long)]
    kpm_degree: Option<usize>,
    /// KPM grid points.
    #[arg(long)]
    kpm_grid: Option<usize>,
}

impl GraphArgs {
    fn config(&self) -> (GraphConfig, SpectrumConfig) {
        let g = GraphConfig {
            path: Some(self.graph.clone()),
            format: self.format.clone(),
            generate: None,
            laplacian: self.laplacian,
            lanczos_steps: self.lanczos_steps,
        };
        let mut s = SpectrumConfig { method: self.spectrum, ..Default::default() };
        if let Some(p) = self.probes {
            s.kpm.n_probes = p;
        }
        if let Some(d) = self.kpm_degree {
            s.kpm.degree = d;
        }
        if let Some(n) = self.kpm_grid {
            s.kpm.n_grid = n;
        }
        (g, s)
    }

    fn context(&self, seed: u64) -> Result<Context> {
        let (g, s) = self.config();
        Ok(Context::load(&g, s, seed)?)
    }
}

/// Filter bank: a TOML spec file, individual flags, or both (flags win).
#[derive(Args)]
struct BankArgs {
    /// Bank specification file (TOML).
    #[arg(long)]
    bank: Option<PathBuf>,
    /// ideal, ideal-shifted, translates or sgwt.
    #[arg(long, value_parser = parse_enum::<DesignKind>)]
    design: Option<DesignKind>,
    /// Number of bands J.
    #[arg(short = 'J', long = "bands")]
    j: Option<usize>,
    /// hann, itersine, meyer or dct.
    #[arg(long, value_parser = parse_enum::<Prototype>)]
    prototype: Option<Prototype>,
    /// uniform or octave (ideal bands).
    #[arg(long, value_parser = parse_enum::<Spacing>)]
    spacing: Option<Spacing>,
    /// Strength of the log warps
    #[arg(long)]
    nu: Option<f64>,
    /// none, log, spectrum, log-spectrum or energy.
    #[arg(long, value_parser = parse_enum::<WarpSource>)]
    warp: Option<WarpSource>,
    /// (z, P) CSV replacing the computed CDF.
    #[arg(long)]
    cdf_file: Option<PathBuf>,
    /// Chebyshev degree K.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    jackson: Option<bool>,
    /// exact or poly.
    #[arg(long, value_parser = parse_enum::<Mode>)]
    mode: Option<Mode>,
}

impl BankArgs {
    fn spec(&self) -> Result<BankSpec> {
        let mut s = match &self.bank {
            Some(p) => BankSpec::load(p)?,
            None => BankSpec::default(),
        };
        if let Some(v) = self.design {
            s.design = v;
        }
        if let Some(v) = self.j {
            s.j = v;
        }
        if let Some(v) = self.prototype {
            s.prototype = v;
        }
        if let Some(v) = self.spacing {
            s.spacing = v;
        }
        if let Some(v) = self.nu {
            s.nu = v;
        }
        if let Some(v) = self.warp {
            s.warp = v;
        }
        if let Some(v) = &self.cdf_file {
            s.cdf_file = Some(v.clone());
        }
        if let Some(v) = self.degree {
            s.degree = v;
        }
        if let Some(v) = self.jackson {
            s.jackson = v;
        }
        if let Some(v) = self.mode {
            s.mode = v;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct InverseOpts {
    /// cg, frame-iteration or single-pass.
    #[arg(long = "inverse", default_value = "cg")]
    inverse: String,
    /// Frame-algorithm steps T.
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl InverseOpts {
    fn spec(&self) -> Result<InverseSpec> {
        Ok(match self.inverse.replace('-', "_").as_str() {
            "cg" => InverseSpec::Cg { tol: self.tol, max_iter: self.max_iter },
            "frame_iteration" => InverseSpec::FrameIteration { t: self.iterations },
            "single_pass" => InverseSpec::SinglePass,
            other => bail!("unknown inverse {other:?}"),
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// path, cycle, complete, star, grid, erdos-renyi, sensor or clique-chain.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: Option<usize>,
    /// Neighbours per vertex (sensor).
    #[arg(long)]
    k: Option<usize>,
    /// Edge probability (erdos-renyi).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    cliques: Option<usize>,
    /// Clique size (clique-chain).
    #[arg(long)]
    size: Option<usize>,
    /// Link weight between cliques.
    #[arg(long, default_value_t = 0.1)]
    link: f64,
    /// Output graph; .mtx or .csv.
    #[arg(long)]
    out: PathBuf,
    /// Also write a test signal: piecewise-smooth or piecewise-constant.
    #[arg(long, value_parser = parse_enum::<SignalKind>)]
    signal: Option<SignalKind>,
    #[arg(long, default_value_t = 3)]
    pieces: usize,
    #[arg(long, requires = "signal")]
    signal_out: Option<PathBuf>,
    /// Vertex coordinates CSV for geometric families.
    #[arg(long)]
    coords_out: Option<PathBuf>,
}

impl GenerateArgs {
    fn generator(&self) -> Result<GraphGenerator> {
        let need = |v: Option<usize>, name: &str| v.with_context(|| format!("--{name} is required for {}", self.kind));
        Ok(match self.kind.replace('-', "_").as_str() {
            "path" => GraphGenerator::Path { n: need(self.n, "n")? },
            "cycle" => GraphGenerator::Cycle { n: need(self.n, "n")? },
            "complete" => GraphGenerator::Complete { n: need(self.n, "n")? },
            "star" => GraphGenerator::Star { n: need(self.n, "n")? },
            "grid" => GraphGenerator::Grid { rows: need(self.rows, "rows")?, cols: need(self.cols, "cols")? },
            "erdos_renyi" => GraphGenerator::ErdosRenyi {
                n: need(self.n, "n")?,
                p: self.p.context("--p is required for erdos-renyi")?,
            },
            "sensor" => GraphGenerator::Sensor { n: need(self.n, "n")?, k: self.k.unwrap_or(6) },
            "clique_chain" => GraphGenerator::CliqueChain {
                cliques: need(self.cliques, "cliques")?,
                size: need(self.size, "size")?,
                link: self.link,
            },
            other => bail!("unknown graph kind {other:?}"),
        })
    }
}

#[derive(Args)]
struct SpectrumCdfArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    /// Training signal for the energy warp.
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Sampled kernels CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = BANK_CSV_POINTS)]
    points: usize,
    /// Write the resolved bank spec as TOML.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    /// uniform, nonuniform or signal.
    #[arg(long, value_parser = parse_enum::<SamplingMode>, default_value = "uniform")]
    weights: SamplingMode,
    /// Total samples split across bands.
    #[arg(long, conflicts_with = "counts")]
    total: Option<usize>,
    /// Per-band counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Probes for nonuniform weights.
    #[arg(long, default_value_t = 50)]
    weight_probes: usize,
    /// Signal for signal-adapted weights.
    #[arg(long)]
    signal: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long)]
    signal: PathBuf,
    /// Center sets CSV; complete sampling when absent.
    #[arg(long)]
    centers: Option<PathBuf>,
    /// Binary coefficient file.
    #[arg(long)]
    out: PathBuf,
    /// Also write (band, vertex, value) CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct InverseArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    /// Binary coefficient file from `transform`.
    #[arg(long)]
    coeffs: PathBuf,
    #[command(flatten)]
    inverse: InverseOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    /// Noisy signal, or the clean one with --add-noise.
    #[arg(long)]
    signal: PathBuf,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    /// Treat --signal as clean and add seeded Gaussian noise.
    #[arg(long, conflicts_with = "clean")]
    add_noise: bool,
    /// Clean reference for metrics.
    #[arg(long)]
    clean: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    norm_probes: usize,
    #[command(flatten)]
    inverse: InverseOpts,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the noisy input when --add-noise is set.
    #[arg(long, requires = "add_noise")]
    noisy_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long)]
    signal: PathBuf,
    /// Increasing sparsity levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    t0: Vec<usize>,
    /// omp or hard-threshold.
    #[arg(long, value_parser = parse_enum::<CompressMethod>, default_value = "omp")]
    method: CompressMethod,
    #[arg(long, default_value_t = 100)]
    norm_probes: usize,
    #[command(flatten)]
    inverse: InverseOpts,
    /// (t0, nmse) CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Approximation at the largest T0.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Graph file replacing the configured source.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(short = 'J', long = "bands")]
    j: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_parser = parse_enum::<Mode>)]
    mode: Option<Mode>,
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn generate(args: &GenerateArgs, seed: u64) -> Result<()> {
    let (g, coords) = args.generator()?.build(seed)?;
    if !g.is_connected() {
        log::warn!("generated graph is disconnected");
    }
    io::write_graph(&args.out, &g, None)?;
    if let Some(path) = &args.coords_out {
        let coords = coords.context("this graph family has no coordinates")?;
        let mut text = String::from("x,y\n");
        for [x, y] in coords {
            text.push_str(&format!("{},{}\n", io::fmt_f64(x), io::fmt_f64(y)));
        }
        write_string(path, &text)?;
    }
    if let Some(kind) = args.signal {
        let out = args.signal_out.clone().context("--signal-out is required with --signal")?;
        let ctx = Context::new(g.clone(), &GraphConfig::default(), SpectrumConfig::default(), seed)?;
        let cfg = SignalConfig { path: None, kind, pieces: args.pieces, center: true };
        io::write_signal_file(out, &pipeline::load_signal(&ctx, &cfg, seed)?)?;
    }
    print_json(&json!({
        "vertices": g.n_vertices(),
        "edges": g.n_edges(),
        "connected": g.is_connected(),
    }));
    Ok(())
}

fn spectrum_cdf(args: &SpectrumCdfArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let cdf = ctx.spectral_cdf()?;
    io::write_cdf(&io::cdf_points(&cdf), io::create(&args.out)?)?;
    print_json(&json!({
        "vertices": ctx.n(),
        "lambda_bar": ctx.lambda_bar(),
        "exact": ctx.exact_spectrum(),
    }));
    Ok(())
}

fn training(ctx: &Context, path: Option<&Path>) -> Result<Option<Vec<Vec<f64>>>> {
    Ok(match path {
        Some(p) => Some(vec![ctx.read_signal(p)?]),
        None => None,
    })
}

fn design(args: &DesignArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    let train = training(&ctx, args.signal.as_deref())?;
    let bank = pipeline::design_bank(&mut ctx, &spec, train.as_deref())?;
    if let Some(out) = &args.out {
        write_string(out, &bank.to_csv(args.points))?;
    }
    if let Some(out) = &args.spec_out {
        write_string(out, &spec.to_toml())?;
    }
    let fits = match spec.mode {
        Mode::Poly => {
            let approx = pipeline::approximants(&ctx, &bank, &spec)?;
            Some(approx.iter().zip(&bank.kernels).map(|(p, k)| sup_error(p, k, GRID_POINTS)).collect::<Vec<_>>())
        }
        Mode::Exact => None,
    };
    let d = pipeline::build_dictionary(&mut ctx, bank.clone(), &spec, None)?;
    let fb = pipeline::bounds(&mut ctx, &d)?;
    print_json(&json!({
        "design": bank.design_name,
        "bands": bank.len(),
        "lambda_bar": bank.lambda_bar,
        "frame_bounds": fb,
        "sup_errors": fits,
    }));
    Ok(())
}

fn sample(args: &SampleArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    let signal = args.signal.as_deref().map(|p| ctx.read_signal(p)).transpose()?;
    let bank = pipeline::design_bank(&mut ctx, &spec, signal.as_ref().map(std::slice::from_ref))?;
    let d = pipeline::build_dictionary(&mut ctx, bank.clone(), &spec, None)?;
    let cfg = SamplingConfig {
        mode: args.weights,
        total: args.total,
        counts: args.counts.clone(),
        probes: args.weight_probes,
        ..Default::default()
    };
    if cfg.total.is_none() && cfg.counts.is_none() {
        bail!("give --total or --counts");
    }
    let w = pipeline::sampling_weights(&mut ctx, &d, &spec, &cfg, signal.as_deref(), seed)?;
    let counts = pipeline::sample_counts(&mut ctx, &bank, &cfg, None)?;
    let centers = pipeline::draw(&w, &counts, seed)?;
    io::write_centers(&centers, io::create(&args.out)?)?;
    print_json(&json!({ "counts": counts }));
    Ok(())
}

fn transform(args: &TransformArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    let f = ctx.read_signal(&args.signal)?;
    let bank = pipeline::design_bank(&mut ctx, &spec, Some(std::slice::from_ref(&f)))?;
    let j = bank.len();
    let centers = match &args.centers {
        Some(p) => Some(io::read_centers(io::open(p)?, Some(j))?.sets),
        None => None,
    };
    let d = pipeline::build_dictionary(&mut ctx, bank, &spec, centers)?;
    let c = d.analysis(&f)?;
    io::write_coefficients(&c, io::create(&args.out)?)?;
    if let Some(p) = &args.csv {
        io::write_coefficients_csv(&c, io::create(p)?)?;
    }
    print_json(&json!({ "bands": j, "atoms": c.n_atoms(), "energy": c.energy() }));
    Ok(())
}

fn inverse(args: &InverseArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    if spec.warp == WarpSource::Energy && spec.cdf_file.is_none() {
        bail!("the energy warp needs --cdf-file here");
    }
    let c = io::read_coefficients(io::open(&args.coeffs)?)?;
    let bank = pipeline::design_bank(&mut ctx, &spec, None)?;
    let d = pipeline::build_dictionary(&mut ctx, bank, &spec, Some(c.centers.clone()))?;
    let inv = pipeline::resolve_inverse(&mut ctx, &d, args.inverse.spec()?)?;
    let f = reconstruct(&d, &c, &inv)?;
    io::write_signal_file(&args.out, &f)?;
    print_json(&json!({ "inverse": inv }));
    Ok(())
}

fn denoise(args: &DenoiseArgs, seed: u64) -> Result<()> {
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    let input = ctx.read_signal(&args.signal)?;
    let (y, clean) = if args.add_noise {
        let xi = pipeline::noise(ctx.n(), args.sigma, seed);
        let y: Vec<f64> = input.iter().zip(&xi).map(|(a, b)| a + b).collect();
        if let Some(p) = &args.noisy_out {
            io::write_signal_file(p, &y)?;
        }
        (y, Some(input))
    } else {
        let clean = args.clean.as_deref().map(|p| ctx.read_signal(p)).transpose()?;
        (input, clean)
    };
    let train = clean.as_ref().map(|c| vec![c.clone()]);
    let bank = pipeline::design_bank(&mut ctx, &spec, train.as_deref())?;
    let d = pipeline::build_dictionary(&mut ctx, bank, &spec, None)?;
    let inv = pipeline::resolve_inverse(&mut ctx, &d, args.inverse.spec()?)?;
    let cfg = DenoiseConfig {
        sigma: args.sigma,
        thresholds: None,
        norm_probes: args.norm_probes,
        seed: pipeline::stage_seed(seed, pipeline::STAGE_PROBES),
    };
    let out = tasks::denoise(&d, &y, &cfg, &inv)?;
    io::write_signal_file(&args.out, &out.signal)?;
    let metrics = match &clean {
        Some(f) => {
            let xi: Vec<f64> = y.iter().zip(f).map(|(a, b)| a - b).collect();
            Some(tasks::metrics(f, &out.signal, Some(&xi))?)
        }
        None => None,
    };
    print_json(&json!({
        "thresholds": out.thresholds,
        "nmse": metrics.map(|m| m.nmse),
        "delta_snr_db": metrics.and_then(|m| m.delta_snr_db),
    }));
    Ok(())
}

fn compress(args: &CompressArgs, seed: u64) -> Result<()> {
    if args.t0.is_empty() || args.t0.windows(2).any(|w| w[0] >= w[1]) || args.t0.contains(&0) {
        bail!("--t0 must be a strictly increasing list of positive counts");
    }
    let mut ctx = args.graph.context(seed)?;
    let spec = args.bank.spec()?;
    let f = ctx.read_signal(&args.signal)?;
    let bank = pipeline::design_bank(&mut ctx, &spec, Some(std::slice::from_ref(&f)))?;
    let d = pipeline::build_dictionary(&mut ctx, bank, &spec, None)?;
    let (curve, rec) = match args.method {
        CompressMethod::Omp => pipeline::omp_curve(&d, &f, &args.t0)?,
        CompressMethod::HardThreshold => {
            let inv = pipeline::resolve_inverse(&mut ctx, &d, args.inverse.spec()?)?;
            let norms = tasks::atom_norms(&d, args.norm_probes, pipeline::stage_seed(seed, pipeline::STAGE_PROBES))?;
            let mut curve = Vec::new();
            let mut last = Vec::new();
            for &t in &args.t0 {
                last = tasks::compress_hard_threshold(&d, &f, t.min(d.n_atoms()), &norms, &inv)?;
                curve.push(tasks::nmse(&f, &last)?);
            }
            (curve, last)
        }
    };
    if let Some(p) = &args.curve {
        let mut text = String::from("t0,nmse\n");
        for (t, e) in args.t0.iter().zip(&curve) {
            text.push_str(&format!("{t},{}\n", io::fmt_f64(*e)));
        }
        write_string(p, &text)?;
    }
    if let Some(p) = &args.out {
        io::write_signal_file(p, &rec)?;
    }
    print_json(&json!({ "method": args.method, "t0": args.t0, "nmse": curve }));
    Ok(())
}

fn run_pipeline(args: &PipelineArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = &args.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(g) = &args.graph {
        cfg.graph.path = Some(g.clone());
        cfg.graph.generate = None;
    }
    if let Some(j) = args.j {
        cfg.design.j = j;
    }
    if let Some(k) = args.degree {
        cfg.design.degree = k;
    }
    if let Some(m) = args.mode {
        cfg.design.mode = m;
    }
    let summary = pipeline::run(&cfg)?;
    print_json(&serde_json::to_value(&summary)?);
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SGFRAME_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SGFRAME_THREADS={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Generate(a) => generate(a, seed),
        Command::SpectrumCdf(a) => spectrum_cdf(a, seed),
        Command::Design(a) => design(a, seed),
        Command::Sample(a) => sample(a, seed),
        Command::Transform(a) => transform(a, seed),
        Command::Inverse(a) => inverse(a, seed),
        Command::Denoise(a) => denoise(a, seed),
        Command::Compress(a) => compress(a, seed),
        Command::Pipeline(a) => run_pipeline(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match e.downcast_ref::<sgframe::Error>() {
                Some(err @ sgframe::Error::Io(_)) => (err.kind(), 3),
                Some(err) => (err.kind(), 2),
                None => ("error", 1),
            };
            eprintln!("{}", json!({ "error": { "kind": kind, "message": format!("{e:#}") } }));
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn enum_flags_accept_hyphens() {
        assert_eq!(parse_enum::<WarpSource>("log-spectrum"), Ok(WarpSource::LogSpectrum));
        assert_eq!(parse_enum::<DesignKind>("ideal_shifted"), Ok(DesignKind::IdealShifted));
        assert!(parse_enum::<Mode>("fast").is_err());
    }

    #[test]
    fn list_flags_split_on_commas() {
        let cli = Cli::try_parse_from(["sgframe", "compress", "--graph", "g.mtx", "--signal", "f.csv", "--t0", "1,5,9"]).unwrap();
        let Command::Compress(a) = cli.command else { panic!() };
        assert_eq!(a.t0, vec![1, 5, 9]);
    }
}
