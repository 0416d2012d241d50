//! Run configuration: one TOML file describing graph, spectrum, design,
//! signal, sampling and task. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::generators;
use crate::graph::SparseGraph;
use crate::kernel::Prototype;
use crate::laplacian::LaplacianKind;
use crate::sampling::{PenaltyKind, ReconstructConfig};
use crate::spectrum::KpmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub graph: GraphConfig,
    pub spectrum: SpectrumConfig,
    pub design: BankSpec,
    pub signal: SignalConfig,
    pub sampling: Option<SamplingConfig>,
    pub task: TaskConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            graph: GraphConfig::default(),
            spectrum: SpectrumConfig::default(),
            design: BankSpec::default(),
            signal: SignalConfig::default(),
            sampling: None,
            task: TaskConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.design.validate()?;
        if let Some(s) = &self.sampling {
            s.validate()?;
        }
        if matches!(self.task, TaskConfig::Reconstruct { .. }) && self.sampling.is_none() {
            return invalid("the reconstruct task needs a [sampling] section");
        }
        self.task.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Matrix Market or edge-list file; exclusive with `generate`.
    pub path: Option<PathBuf>,
    /// `mtx` or `csv`; inferred from the extension when absent.
    pub format: Option<String>,
    pub generate: Option<GraphGenerator>,
    pub laplacian: LaplacianKind,
    /// Lanczos steps for the spectral upper bound; 0 keeps the degree bound.
    pub lanczos_steps: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            path: None,
            format: None,
            generate: Some(GraphGenerator::Sensor { n: 500, k: 6 }),
            laplacian: LaplacianKind::Combinatorial,
            lanczos_steps: 0,
        }
    }
}

impl GraphConfig {
    fn validate(&self) -> Result<()> {
        match (&self.path, &self.generate) {
            (Some(_), Some(_)) => invalid("graph: give either `path` or `generate`, not both"),
            (None, None) => invalid("graph: one of `path` or `generate` is required"),
            (None, Some(g)) => g.validate(),
            _ => Ok(()),
        }
    }
}

/// Synthetic graph families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphGenerator {
    Path { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    Star { n: usize },
    Grid { rows: usize, cols: usize },
    ErdosRenyi { n: usize, p: f64 },
    Sensor { n: usize, k: usize },
    CliqueChain { cliques: usize, size: usize, link: f64 },
}

impl GraphGenerator {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Path { n } | Self::Complete { n } | Self::Star { n } => n >= 2,
            Self::Cycle { n } => n >= 3,
            Self::Grid { rows, cols } => rows >= 1 && cols >= 1 && rows * cols >= 2,
            Self::ErdosRenyi { n, p } => n >= 2 && (0.0..=1.0).contains(&p),
            Self::Sensor { n, k } => n >= 2 && k >= 1,
            Self::CliqueChain { cliques, size, link } => cliques >= 1 && size >= 2 && link > 0.0,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("bad generator parameters: {self:?}"))
        }
    }

    /// The graph and, for geometric families, vertex coordinates.
    pub fn build(&self, seed: u64) -> Result<(SparseGraph, Option<Vec<[f64; 2]>>)> {
        self.validate()?;
        Ok(match *self {
            Self::Path { n } => (generators::path(n), None),
            Self::Cycle { n } => (generators::cycle(n), None),
            Self::Complete { n } => (generators::complete(n), None),
            Self::Star { n } => (generators::star(n), None),
            Self::Grid { rows, cols } => {
                let e = generators::grid(rows, cols);
                (e.graph, Some(e.coords))
            }
            Self::ErdosRenyi { n, p } => (generators::erdos_renyi(n, p, seed), None),
            Self::Sensor { n, k } => {
                let e = generators::sensor(n, k, seed);
                (e.graph, Some(e.coords))
            }
            Self::CliqueChain { cliques, size, link } => (generators::clique_chain(cliques, size, link), None),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Exact up to [`SpectrumConfig::exact_max_n`] vertices, KPM beyond.
    #[default]
    Auto,
    Exact,
    Kpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub method: SpectrumMethod,
    pub exact_max_n: usize,
    pub kpm: KpmConfig,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { method: SpectrumMethod::Auto, exact_max_n: 2000, kpm: KpmConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Indicator bands.
    Ideal,
    /// Indicator bands with edges moved into spectral gaps.
    IdealShifted,
    /// Uniform translates of `prototype`.
    #[default]
    Translates,
    /// Spectral graph wavelets.
    Sgwt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpSource {
    #[default]
    None,
    Log,
    /// Eigenvalue CDF.
    Spectrum,
    /// `log(1 + nu lambda_bar P(lambda))`
    LogSpectrum,
    /// Energy CDF of the training signal.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    #[default]
    Poly,
}

/// Filter bank and dictionary backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankSpec {
    pub design: DesignKind,
    pub j: usize,
    pub prototype: Prototype,
    pub spacing: crate::design::Spacing,
    pub nu: f64,
    pub warp: WarpSource,
    /// `(z, P)` CSV used instead of the computed CDF for CDF warps.
    pub cdf_file: Option<PathBuf>,
    pub degree: usize,
    pub jackson: bool,
    pub mode: Mode,
}

impl Default for BankSpec {
    fn default() -> Self {
        Self {
            design: DesignKind::Translates,
            j: 6,
            prototype: Prototype::Itersine,
            spacing: crate::design::Spacing::Uniform,
            nu: 15.0,
            warp: WarpSource::None,
            cdf_file: None,
            degree: 40,
            jackson: false,
            mode: Mode::Poly,
        }
    }
}

impl BankSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("bank spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < 2 {
            return invalid("design: J must be >= 2");
        }
        if self.mode == Mode::Poly && self.degree == 0 {
            return invalid("design: polynomial mode needs degree >= 1");
        }
        if matches!(self.warp, WarpSource::Log | WarpSource::LogSpectrum) && !(self.nu > 0.0) {
            return invalid("design: log warps need nu > 0");
        }
        match (self.design, self.warp) {
            (DesignKind::Ideal, WarpSource::None | WarpSource::Spectrum) => Ok(()),
            (DesignKind::Ideal, w) => invalid(format!("design: ideal bands support warp none or spectrum, not {w:?}")),
            (DesignKind::IdealShifted, WarpSource::None) => Ok(()),
            (DesignKind::IdealShifted, _) => invalid("design: ideal_shifted takes no warp"),
            (DesignKind::Sgwt, WarpSource::None) => Ok(()),
            (DesignKind::Sgwt, _) => invalid("design: sgwt takes no warp"),
            (DesignKind::Translates, _) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    #[default]
    PiecewiseSmooth,
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    /// Single-column CSV; a synthetic signal is generated when absent.
    pub path: Option<PathBuf>,
    pub kind: SignalKind,
    pub pieces: usize,
    /// Subtract the mean.
    pub center: bool,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { path: None, kind: SignalKind::PiecewiseSmooth, pieces: 3, center: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Uniform,
    Nonuniform,
    /// Nonuniform weights adapted to the signal.
    Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    /// Samples split across bands by estimated eigenvalue counts.
    pub total: Option<usize>,
    /// Explicit per-band counts; overrides `total`.
    pub counts: Option<Vec<usize>>,
    /// Probes for the nonuniform weights.
    pub probes: usize,
    pub penalty: PenaltyKind,
    pub reconstruct: ReconstructConfig,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Uniform,
            total: None,
            counts: None,
            probes: 50,
            penalty: PenaltyKind::default(),
            reconstruct: ReconstructConfig::default(),
        }
    }
}

impl SamplingConfig {
    fn validate(&self) -> Result<()> {
        if self.total.is_none() && self.counts.is_none() {
            return invalid("sampling: give `total` or `counts`");
        }
        if self.probes == 0 {
            return invalid("sampling: probes must be >= 1");
        }
        Ok(())
    }
}

/// How coefficients are turned back into a signal. Frame bounds for the
/// iterative inverses are computed from the dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum InverseSpec {
    Cg { tol: f64, max_iter: usize },
    FrameIteration { t: usize },
    SinglePass,
}

impl Default for InverseSpec {
    fn default() -> Self {
        InverseSpec::Cg { tol: 1e-10, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressMethod {
    #[default]
    Omp,
    HardThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// Adds Gaussian noise of standard deviation `sigma` and denoises.
    Denoise {
        sigma: f64,
        #[serde(default)]
        inverse: InverseSpec,
        #[serde(default = "default_norm_probes")]
        norm_probes: usize,
    },
    /// Sparse approximation for each `T0` in `t0`.
    Compress {
        t0: Vec<usize>,
        #[serde(default)]
        method: CompressMethod,
        #[serde(default)]
        inverse: InverseSpec,
        #[serde(default = "default_norm_probes")]
        norm_probes: usize,
    },
    /// Band reconstruction from sampled coefficients for each total in
    /// `totals` (the sampling section's budget when empty).
    Reconstruct {
        #[serde(default)]
        totals: Vec<usize>,
    },
}

fn default_norm_probes() -> usize {
    100
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig::Denoise { sigma: 0.5, inverse: InverseSpec::default(), norm_probes: default_norm_probes() }
    }
}

impl TaskConfig {
    fn validate(&self) -> Result<()> {
        match self {
            TaskConfig::Denoise { sigma, .. } if !(*sigma > 0.0) => invalid("task: sigma must be positive"),
            TaskConfig::Compress { t0, .. } => {
                if t0.is_empty() || t0.contains(&0) {
                    return invalid("task: t0 must list positive counts");
                }
                if t0.windows(2).any(|w| w[0] >= w[1]) {
                    return invalid("task: t0 must be strictly increasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn full_file_parses() {
        let text = r#"
            seed = 7
            output_dir = "results"

            [graph]
            laplacian = "normalized"
            lanczos_steps = 30
            generate = { kind = "erdos_renyi", n = 100, p = 0.1 }

            [spectrum]
            method = "kpm"
            kpm = { n_probes = 20, degree = 50 }

            [design]
            design = "translates"
            prototype = "meyer"
            j = 5
            warp = "log_spectrum"
            nu = 10.0
            degree = 30
            jackson = true

            [sampling]
            mode = "signal"
            total = 120
            penalty = "complement"

            [task]
            kind = "compress"
            t0 = [5, 10, 20]
            method = "hard_threshold"
            inverse = { method = "frame_iteration", t = 5 }
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.graph.generate, Some(GraphGenerator::ErdosRenyi { n: 100, p: 0.1 }));
        assert_eq!(cfg.spectrum.kpm.n_probes, 20);
        assert_eq!(cfg.spectrum.kpm.n_grid, KpmConfig::default().n_grid);
        assert_eq!(cfg.design.prototype, Prototype::Meyer);
        assert_eq!(cfg.sampling.as_ref().unwrap().penalty, PenaltyKind::Complement);
        assert!(matches!(
            cfg.task,
            TaskConfig::Compress { method: CompressMethod::HardThreshold, inverse: InverseSpec::FrameIteration { t: 5 }, .. }
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "sed = 1",
            "[graph]\nlanczos = 3",
            "[design]\nJ = 4",
            "[task]\nkind = \"denoise\"\nsigma = 1.0\nsigmaa = 2.0",
            "[graph]\ngenerate = { kind = \"path\", n = 4, k = 2 }",
        ] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        let bad = [
            "[graph]\npath = \"g.mtx\"\ngenerate = { kind = \"path\", n = 4 }",
            "[graph]\ngenerate = { kind = \"cycle\", n = 2 }",
            "[design]\nj = 1",
            "[design]\ndesign = \"sgwt\"\nwarp = \"log\"",
            "[task]\nkind = \"compress\"\nt0 = [5, 5]",
            "[task]\nkind = \"reconstruct\"",
            "[sampling]\nmode = \"uniform\"",
        ];
        for text in bad {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn bank_spec_alone() {
        let spec = BankSpec::from_toml("design = \"sgwt\"\nj = 4\nmode = \"exact\"").unwrap();
        assert_eq!(spec.design, DesignKind::Sgwt);
        assert_eq!(spec.mode, Mode::Exact);
        assert_eq!(BankSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn generators_build() {
        let (g, coords) = GraphGenerator::Path { n: 5 }.build(0).unwrap();
        assert_eq!(g.n_edges(), 4);
        assert!(coords.is_none());
        let (g, coords) = GraphGenerator::Grid { rows: 3, cols: 4 }.build(0).unwrap();
        assert_eq!(g.n_vertices(), 12);
        assert_eq!(coords.unwrap().len(), 12);
        assert!(GraphGenerator::ErdosRenyi { n: 10, p: 1.5 }.build(0).is_err());
    }
}
