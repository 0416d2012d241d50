//! Filter-bank constructors: ideal partitions, uniform translates, spectral
//! graph wavelets, and their log, spectrum-adapted and signal-adapted warps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::io::fmt_f64;
use crate::kernel::{sgwt_generator_max, Kernel, KernelShape, Prototype, WarpKind, Warping};
use crate::spectrum::{EnergyCdf, SpectralCdf};

/// Number of grid points used for `G` checks and grid frame bounds.
pub const GRID_POINTS: usize = 1000;

/// Ordered list of kernels on a common interval `[0, lambda_bar]`.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub kernels: Vec<Kernel>,
    pub lambda_bar: f64,
    pub design_name: String,
}

impl FilterBank {
    pub fn new(kernels: Vec<Kernel>, lambda_bar: f64, design_name: impl Into<String>) -> Result<Self> {
        if kernels.is_empty() {
            return invalid("a filter bank needs at least one kernel");
        }
        if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
            return invalid(format!("lambda_bar must be positive, got {lambda_bar}"));
        }
        Ok(Self { kernels, lambda_bar, design_name: design_name.into() })
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// `n` uniformly spaced points of `[0, lambda_bar]`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        uniform_points(self.lambda_bar, n)
    }

    /// Per-kernel sampled responses as CSV: `lambda,g_0,...,g_{J-1},G`.
    pub fn to_csv(&self, n_points: usize) -> String {
        let mut out = String::from("lambda");
        for j in 0..self.len() {
            out.push_str(&format!(",g_{j}"));
        }
        out.push_str(",G\n");
        for x in self.grid(n_points) {
            out.push_str(&fmt_f64(x));
            let mut total = 0.0;
            for k in &self.kernels {
                let v = k.eval(x);
                total += v * v;
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push(',');
            out.push_str(&fmt_f64(total));
            out.push('\n');
        }
        out
    }

    fn warped(&self, warp: Warping, suffix: &str) -> FilterBank {
        FilterBank {
            kernels: self.kernels.iter().map(|k| k.clone().warped(warp.clone())).collect(),
            lambda_bar: self.lambda_bar,
            design_name: format!("{}+{suffix}", self.design_name),
        }
    }
}

pub(crate) fn uniform_points(top: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![top];
    }
    (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
}

/// `G(lambda) = sum_j g_j(lambda)^2` at each point.
pub fn evaluate_g(bank: &FilterBank, points: &[f64]) -> Vec<f64> {
    points
        .iter()
        .map(|&x| bank.kernels.iter().map(|k| k.eval(x).powi(2)).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Uniform,
    /// Band edges at `lambda_bar 2^{-(J-1)}, ..., lambda_bar / 4, lambda_bar / 2`.
    Octave,
}

/// Indicator bands `[e_k, e_{k+1})` for `0 = e_0 < e_1 < ... < e_J = lambda_bar`;
/// the last band is closed at `lambda_bar`.
pub fn ideal_from_edges(lambda_bar: f64, interior_edges: &[f64]) -> Result<FilterBank> {
    let mut edges = vec![0.0];
    edges.extend_from_slice(interior_edges);
    edges.push(lambda_bar);
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid(format!("band edges must increase strictly inside (0, {lambda_bar}): {interior_edges:?}"));
    }
    let j = edges.len() - 1;
    let kernels = (0..j)
        .map(|k| {
            Kernel::new(
                KernelShape::IdealBand { lo: edges[k], hi: edges[k + 1], closed_top: k + 1 == j },
                lambda_bar,
            )
        })
        .collect();
    FilterBank::new(kernels, lambda_bar, "ideal")
}

/// Band-edge targets: either positions (no CDF) or CDF fractions.
fn edge_fractions(j: usize, spacing: Spacing) -> Vec<f64> {
    match spacing {
        Spacing::Uniform => (1..j).map(|k| k as f64 / j as f64).collect(),
        Spacing::Octave => (1..j).map(|k| 0.5f64.powi((j - k) as i32)).collect(),
    }
}

/// `J` indicator kernels partitioning `[0, lambda_bar]`.
///
/// With a CDF the edges are placed so each band holds its target share of
/// eigenvalues. For a step CDF the edge for fraction `p` is put midway
/// between the first eigenvalue reaching `p` and the distinct eigenvalue
/// before it, so a cluster of equal eigenvalues is never split.
pub fn make_ideal_partition(
    lambda_bar: f64,
    j: usize,
    spacing: Spacing,
    cdf: Option<&SpectralCdf>,
) -> Result<FilterBank> {
    if j < 2 {
        return invalid("an ideal partition needs J >= 2");
    }
    let fractions = edge_fractions(j, spacing);
    let edges: Vec<f64> = match cdf {
        None => fractions.iter().map(|p| p * lambda_bar).collect(),
        Some(cdf) if cdf.is_step() => fractions
            .iter()
            .map(|&p| {
                let at = cdf.inverse(p);
                match cdf.previous_point(at) {
                    Some(prev) => 0.5 * (prev + at),
                    None => 0.5 * at,
                }
            })
            .collect(),
        Some(cdf) => fractions.iter().map(|&p| cdf.inverse(p)).collect(),
    };
    let mut all = vec![0.0];
    all.extend(&edges);
    all.push(lambda_bar);
    if all.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid(format!(
            "J = {j} exceeds the resolution of the spectral CDF (edges {edges:?})"
        ));
    }
    let mut bank = ideal_from_edges(lambda_bar, &edges)?;
    bank.design_name = match (spacing, cdf.is_some()) {
        (Spacing::Uniform, false) => "ideal_uniform",
        (Spacing::Octave, false) => "ideal_octave",
        (Spacing::Uniform, true) => "ideal_uniform_count",
        (Spacing::Octave, true) => "ideal_octave_count",
    }
    .to_string();
    Ok(bank)
}

/// Interior edges of a bank made only of indicator kernels.
pub fn ideal_edges(bank: &FilterBank) -> Option<Vec<f64>> {
    let mut edges = Vec::new();
    for (k, kernel) in bank.kernels.iter().enumerate() {
        match kernel.shape {
            KernelShape::IdealBand { lo, .. } if kernel.warps.is_empty() => {
                if k > 0 {
                    edges.push(lo);
                }
            }
            _ => return None,
        }
    }
    Some(edges)
}

/// Moves every edge of an ideal bank into the widest spectral gap that
/// meets the window `edge +- lambda_bar / (2J)`, placing it at the gap's
/// midpoint. Edges with no gap in reach stay put.
pub fn shift_edges_to_gaps(bank: &FilterBank, eigenvalues: &[f64]) -> Result<FilterBank> {
    let Some(edges) = ideal_edges(bank) else {
        return invalid("edge shifting needs an ideal partition");
    };
    let half = bank.lambda_bar / (2.0 * bank.len() as f64);
    let mut ev: Vec<f64> = eigenvalues.to_vec();
    ev.sort_by(f64::total_cmp);
    ev.push(bank.lambda_bar);
    let shifted: Vec<f64> = edges
        .iter()
        .map(|&e| {
            ev.windows(2)
                .filter(|w| w[1] > e - half && w[0] < e + half && w[0] < w[1])
                .max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
                .map_or(e, |w| 0.5 * (w[0] + w[1]))
        })
        .collect();
    let mut out = ideal_from_edges(bank.lambda_bar, &shifted)?;
    out.design_name = "ideal_shifted".to_string();
    Ok(out)
}

/// `J` half-overlapping translates with centers `k lambda_bar / (J - 1)`.
pub fn make_uniform_translates(lambda_bar: f64, j: usize, prototype: Prototype) -> Result<FilterBank> {
    if j < 2 {
        return invalid("uniform translates need J >= 2");
    }
    let spacing = lambda_bar / (j - 1) as f64;
    let kernels = (0..j)
        .map(|k| {
            let shape = match prototype {
                Prototype::Dct => KernelShape::DctTranslate { index: k, count: j, spacing },
                p => KernelShape::Translate {
                    prototype: p,
                    center: k as f64 * spacing,
                    half_width: spacing,
                },
            };
            Kernel::new(shape, lambda_bar)
        })
        .collect();
    let name = match prototype {
        Prototype::Hann => "hann",
        Prototype::Itersine => "itersine",
        Prototype::Meyer => "meyer",
        Prototype::Dct => "dct",
    };
    FilterBank::new(kernels, lambda_bar, name)
}

/// Composes `lambda -> lambda_bar log(1 + nu lambda) / log(1 + nu lambda_bar)`
/// inside every kernel.
pub fn make_log_warped(base: &FilterBank, nu: f64) -> Result<FilterBank> {
    let warp = Warping::new(WarpKind::Log { nu }, base.lambda_bar)?;
    Ok(base.warped(warp, "log"))
}

/// Warps by the eigenvalue CDF (`wavelet = false`) or by
/// `log(1 + nu lambda_bar P(lambda))` (`wavelet = true`).
pub fn make_spectrum_adapted(
    base: &FilterBank,
    cdf: Arc<SpectralCdf>,
    wavelet: bool,
    nu: f64,
) -> Result<FilterBank> {
    let (kind, suffix) = if wavelet {
        (WarpKind::LogSpectrumCdf { cdf, nu }, "log_spectrum_adapted")
    } else {
        (WarpKind::SpectrumCdf(cdf), "spectrum_adapted")
    };
    let warp = Warping::new(kind, base.lambda_bar)?;
    Ok(base.warped(warp, suffix))
}

/// Warps by the training-energy CDF.
pub fn make_signal_adapted(base: &FilterBank, ecdf: &EnergyCdf) -> Result<FilterBank> {
    let warp = Warping::new(WarpKind::EnergyCdf(Arc::new(ecdf.cdf().clone())), base.lambda_bar)?;
    Ok(base.warped(warp, "signal_adapted"))
}

/// Ratio `lambda_bar / lambda_min` of the wavelet design.
pub const SGWT_RANGE: f64 = 20.0;

/// Scales `s_1 > ... > s_{J-1}` log-spaced from `2 / lambda_min` down to
/// `1 / lambda_bar`.
pub fn sgwt_scales(lambda_bar: f64, n_scales: usize) -> Vec<f64> {
    let lambda_min = lambda_bar / SGWT_RANGE;
    let (smax, smin) = (2.0 / lambda_min, 1.0 / lambda_bar);
    if n_scales == 1 {
        return vec![smin];
    }
    let (a, b) = (smax.ln(), smin.ln());
    (0..n_scales)
        .map(|i| (a + (b - a) * i as f64 / (n_scales - 1) as f64).exp())
        .collect()
}

/// Spectral graph wavelet bank: one scaling kernel and `J - 1` wavelets.
pub fn make_sgwt(lambda_bar: f64, j: usize) -> Result<FilterBank> {
    if j < 2 {
        return invalid("the wavelet bank needs J >= 2");
    }
    if !(lambda_bar > 0.0) {
        return invalid("lambda_bar must be positive");
    }
    let lambda_min = lambda_bar / SGWT_RANGE;
    let mut kernels = vec![Kernel::new(
        KernelShape::SgwtScaling { gamma: sgwt_generator_max(), lambda_min },
        lambda_bar,
    )];
    kernels.extend(
        sgwt_scales(lambda_bar, j - 1)
            .into_iter()
            .map(|scale| Kernel::new(KernelShape::SgwtWavelet { scale }, lambda_bar)),
    );
    FilterBank::new(kernels, lambda_bar, "sgwt")
}
