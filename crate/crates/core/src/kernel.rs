//! Spectral kernels `g: [0, lambda_bar] -> R` and warpings of the spectral axis.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectrum::SpectralCdf;

/// Profile of a uniform translate on `t = |lambda - center| / half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prototype {
    /// `cos(pi t / 2)`: square root of a Hann window.
    Hann,
    /// `sin(pi/2 cos^2(pi t / 2))`
    Itersine,
    /// `cos(pi/2 nu(t))` with `nu(t) = t^4 (35 - 84t + 70t^2 - 20t^3)`.
    Meyer,
    /// Raised-cosine translates rescaled to unit squared sum.
    Dct,
}

/// Meyer auxiliary polynomial, `nu(t) + nu(1 - t) = 1`.
pub fn meyer_nu(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

fn translate_profile(proto: Prototype, t: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    match proto {
        Prototype::Hann => (FRAC_PI_2 * t).cos(),
        Prototype::Itersine => (FRAC_PI_2 * (FRAC_PI_2 * t).cos().powi(2)).sin(),
        Prototype::Meyer => (FRAC_PI_2 * meyer_nu(t)).cos(),
        Prototype::Dct => 0.5 * (1.0 + (PI * t).cos()),
    }
}

/// Hammond-style spline wavelet generator: `x^2` rise below 1, cubic on
/// `[1, 2]`, `4 x^{-2}` decay above 2.
pub fn sgwt_generator(x: f64) -> f64 {
    if x < 1.0 {
        x * x
    } else if x <= 2.0 {
        -5.0 + 11.0 * x - 6.0 * x * x + x.powi(3)
    } else {
        4.0 / (x * x)
    }
}

/// Maximum of [`sgwt_generator`], attained at `x = 2 - 1/sqrt(3)`.
pub fn sgwt_generator_max() -> f64 {
    sgwt_generator(2.0 - 1.0 / 3f64.sqrt())
}

/// The parametric form of a kernel.
#[derive(Clone)]
pub enum KernelShape {
    /// Indicator of `[lo, hi)`, or `[lo, hi]` when `closed_top`.
    IdealBand { lo: f64, hi: f64, closed_top: bool },
    /// Hann, itersine or Meyer translate centered at `center`.
    Translate { prototype: Prototype, center: f64, half_width: f64 },
    /// Member `index` of `count` raised-cosine translates with spacing
    /// `spacing`, normalized so the squared responses of the family sum to 1.
    DctTranslate { index: usize, count: usize, spacing: f64 },
    /// `gamma * exp(-(lambda / (0.6 lambda_min))^4)`
    SgwtScaling { gamma: f64, lambda_min: f64 },
    /// `sgwt_generator(scale * lambda)`
    SgwtWavelet { scale: f64 },
    /// `eps / (lambda + eps)^s`
    Greens { eps: f64, s: f64 },
    /// `exp(-tau lambda)`
    Heat { tau: f64 },
    /// `1 / (l + 1)^s` where `l` is the index of the eigenvalue, read from an
    /// eigenvalue counting function: `l = N P(lambda) - 1`.
    PolyDecayByIndex { s: f64, counts: Arc<SpectralCdf>, n: usize },
    /// `sum_k a_k lambda^k`
    Polynomial { coefficients: Vec<f64> },
    /// Arbitrary function of `lambda`.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IdealBand { lo, hi, closed_top } => f
                .debug_struct("IdealBand")
                .field("lo", lo)
                .field("hi", hi)
                .field("closed_top", closed_top)
                .finish(),
            Self::Translate { prototype, center, half_width } => f
                .debug_struct("Translate")
                .field("prototype", prototype)
                .field("center", center)
                .field("half_width", half_width)
                .finish(),
            Self::DctTranslate { index, count, spacing } => f
                .debug_struct("DctTranslate")
                .field("index", index)
                .field("count", count)
                .field("spacing", spacing)
                .finish(),
            Self::SgwtScaling { gamma, lambda_min } => f
                .debug_struct("SgwtScaling")
                .field("gamma", gamma)
                .field("lambda_min", lambda_min)
                .finish(),
            Self::SgwtWavelet { scale } => f.debug_struct("SgwtWavelet").field("scale", scale).finish(),
            Self::Greens { eps, s } => f.debug_struct("Greens").field("eps", eps).field("s", s).finish(),
            Self::Heat { tau } => f.debug_struct("Heat").field("tau", tau).finish(),
            Self::PolyDecayByIndex { s, n, .. } => {
                f.debug_struct("PolyDecayByIndex").field("s", s).field("n", n).finish()
            }
            Self::Polynomial { coefficients } => {
                f.debug_struct("Polynomial").field("coefficients", coefficients).finish()
            }
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl KernelShape {
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::IdealBand { .. } => "ideal_band",
            Self::Translate { prototype: Prototype::Hann, .. } => "hann_translate",
            Self::Translate { prototype: Prototype::Itersine, .. } => "itersine_translate",
            Self::Translate { prototype: Prototype::Meyer, .. } => "meyer_translate",
            Self::Translate { prototype: Prototype::Dct, .. } | Self::DctTranslate { .. } => {
                "dct_translate"
            }
            Self::SgwtScaling { .. } => "sgwt_scaling",
            Self::SgwtWavelet { .. } => "sgwt_wavelet",
            Self::Greens { .. } => "greens",
            Self::Heat { .. } => "diffusion_heat",
            Self::PolyDecayByIndex { .. } => "polynomial_decay_by_index",
            Self::Polynomial { .. } => "polynomial",
            Self::Custom(_) => "custom",
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Self::IdealBand { lo, hi, closed_top } => {
                let inside = x >= *lo && (x < *hi || (*closed_top && x <= *hi));
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Translate { prototype, center, half_width } => {
                translate_profile(*prototype, (x - center).abs() / half_width)
            }
            Self::DctTranslate { index, count, spacing } => {
                let raw = |k: usize| {
                    translate_profile(Prototype::Dct, (x - k as f64 * spacing).abs() / spacing)
                };
                let own = raw(*index);
                if own == 0.0 {
                    return 0.0;
                }
                let lo = index.saturating_sub(1);
                let hi = (index + 1).min(count - 1);
                let total: f64 = (lo..=hi).map(|k| raw(k).powi(2)).sum();
                own / total.sqrt()
            }
            Self::SgwtScaling { gamma, lambda_min } => {
                gamma * (-(x / (0.6 * lambda_min)).powi(4)).exp()
            }
            Self::SgwtWavelet { scale } => sgwt_generator(scale * x),
            Self::Greens { eps, s } => eps / (x + eps).powf(*s),
            Self::Heat { tau } => (-tau * x).exp(),
            Self::PolyDecayByIndex { s, counts, n } => {
                let idx = (*n as f64 * counts.eval(x) - 1.0).round().max(0.0);
                1.0 / (idx + 1.0).powf(*s)
            }
            Self::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, a| acc * x + a)
            }
            Self::Custom(f) => f(x),
        }
    }
}

/// Kind of monotone reparametrization of the spectral axis.
#[derive(Debug, Clone)]
pub enum WarpKind {
    /// `log(1 + nu lambda)`
    Log { nu: f64 },
    /// Eigenvalue CDF `P(lambda)`.
    SpectrumCdf(Arc<SpectralCdf>),
    /// `log(1 + nu lambda_bar P(lambda))`
    LogSpectrumCdf { cdf: Arc<SpectralCdf>, nu: f64 },
    /// Training-energy CDF.
    EnergyCdf(Arc<SpectralCdf>),
}

/// Warping scaled so that `warp(0) = 0` and `warp(lambda_bar) = lambda_bar`.
///
/// CDF-based warps use `(P(lambda) - P(0)) / (1 - P(0))` so that the DC mass
/// of an eigenvalue CDF does not shift the origin.
#[derive(Debug, Clone)]
pub struct Warping {
    pub kind: WarpKind,
    pub lambda_bar: f64,
}

impl Warping {
    pub fn new(kind: WarpKind, lambda_bar: f64) -> Result<Self> {
        if !(lambda_bar > 0.0) {
            return invalid("warping needs lambda_bar > 0");
        }
        match &kind {
            WarpKind::Log { nu } | WarpKind::LogSpectrumCdf { nu, .. } if !(*nu > 0.0) => {
                return invalid(format!("warp parameter nu must be > 0, got {nu}"));
            }
            _ => {}
        }
        Ok(Self { kind, lambda_bar })
    }

    fn unit_cdf(cdf: &SpectralCdf, lambda: f64) -> f64 {
        let p0 = cdf.eval(0.0);
        if p0 >= 1.0 {
            return 1.0;
        }
        ((cdf.eval(lambda) - p0) / (1.0 - p0)).clamp(0.0, 1.0)
    }

    pub fn map(&self, lambda: f64) -> f64 {
        let lb = self.lambda_bar;
        match &self.kind {
            WarpKind::Log { nu } => lb * (nu * lambda).ln_1p() / (nu * lb).ln_1p(),
            WarpKind::SpectrumCdf(cdf) | WarpKind::EnergyCdf(cdf) => {
                lb * Self::unit_cdf(cdf, lambda)
            }
            WarpKind::LogSpectrumCdf { cdf, nu } => {
                lb * (nu * lb * Self::unit_cdf(cdf, lambda)).ln_1p() / (nu * lb).ln_1p()
            }
        }
    }

    /// Smallest `lambda` in `[0, lambda_bar]` with `map(lambda) >= y`.
    pub fn inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.lambda_bar);
        if self.map(lo) >= y {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.map(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// A spectral filter: a shape evaluated after zero or more warps, on the
/// domain `[0, lambda_bar]`. Arguments above `lambda_bar` are clamped to it.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub shape: KernelShape,
    pub warps: Vec<Warping>,
    pub lambda_bar: f64,
}

impl Kernel {
    pub fn new(shape: KernelShape, lambda_bar: f64) -> Self {
        Self { shape, warps: Vec::new(), lambda_bar }
    }

    pub fn heat(tau: f64, lambda_bar: f64) -> Self {
        Self::new(KernelShape::Heat { tau }, lambda_bar)
    }

    pub fn constant(value: f64, lambda_bar: f64) -> Self {
        Self::new(KernelShape::Polynomial { coefficients: vec![value] }, lambda_bar)
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lambda_bar: f64) -> Self {
        Self::new(KernelShape::Custom(Arc::new(f)), lambda_bar)
    }

    /// Composes one more warp inside the kernel: `h(lambda) = g(w(lambda))`.
    pub fn warped(mut self, warp: Warping) -> Self {
        self.warps.insert(0, warp);
        self
    }

    /// Maps `lambda` through every warp, innermost first.
    pub fn warp_argument(&self, lambda: f64) -> f64 {
        let x = lambda.clamp(0.0, self.lambda_bar);
        self.warps.iter().fold(x, |acc, w| w.map(acc))
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.shape.eval(self.warp_argument(lambda))
    }
}
