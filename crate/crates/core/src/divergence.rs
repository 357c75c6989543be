//! f-divergences: generator catalog, exact evaluation on finite tables,
//! quadrature on the perturbed Gaussian pair, and the local χ² approximation.
//!
//! Natural logarithms throughout.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::PerturbedGaussian1D;
use crate::model::FiniteDistribution;
use crate::quad::adaptive_simpson;

/// Generator of an f-divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    Kl,
    ReverseKl,
    SymmetricKl,
    JensenShannon,
    /// Squared Hellinger, `½(√t − 1)²`.
    Hellinger2,
    TotalVariation,
    Chi2,
    ReverseChi2,
    /// α-divergence `(t^α − 1)/(α(α − 1))`.
    Alpha(f64),
}

use GeneratorKind::*;

impl GeneratorKind {
    /// Every fixed generator in the catalog (the α family excluded).
    pub const ALL: [GeneratorKind; 8] = [
        Kl,
        ReverseKl,
        SymmetricKl,
        JensenShannon,
        Hellinger2,
        TotalVariation,
        Chi2,
        ReverseChi2,
    ];

    pub const TAGS: &'static str = "kl, rkl, skl, js, h2, tv, chi2, rchi2, alpha:<a>";

    /// ALPHA(1) and ALPHA(0) are KL and reverse KL.
    pub fn canonical(self) -> Self {
        match self {
            Alpha(1.0) => Kl,
            Alpha(0.0) => ReverseKl,
            k => k,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Kl => "kl".into(),
            ReverseKl => "rkl".into(),
            SymmetricKl => "skl".into(),
            JensenShannon => "js".into(),
            Hellinger2 => "h2".into(),
            TotalVariation => "tv".into(),
            Chi2 => "chi2".into(),
            ReverseChi2 => "rchi2".into(),
            Alpha(a) => format!("alpha:{a}"),
        }
    }

    /// `lim_{t→∞} f(t)/t`, weight of mass where `Q = 0 < P`.
    pub fn slope_at_infinity(self) -> f64 {
        match self.canonical() {
            Kl | SymmetricKl | Chi2 => f64::INFINITY,
            ReverseKl => 0.0,
            JensenShannon => 0.5 * LN_2,
            Hellinger2 | TotalVariation => 0.5,
            ReverseChi2 => -1.0,
            Alpha(a) if a > 1.0 => f64::INFINITY,
            Alpha(_) => 0.0,
        }
    }

    /// `f'(1)`.
    pub fn slope_at_one(self) -> Result<f64> {
        Ok(match self.canonical() {
            Kl => 1.0,
            ReverseKl => -1.0,
            SymmetricKl | JensenShannon | Hellinger2 | Chi2 => 0.0,
            ReverseChi2 => -2.0,
            Alpha(a) => 1.0 / (a - 1.0),
            TotalVariation => return Err(Error::NotTwiceDifferentiable(self.tag())),
        })
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "kl" => Kl,
            "rkl" => ReverseKl,
            "skl" => SymmetricKl,
            "js" => JensenShannon,
            "h2" => Hellinger2,
            "tv" => TotalVariation,
            "chi2" => Chi2,
            "rchi2" => ReverseChi2,
            other => {
                let a = other
                    .strip_prefix("alpha:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .filter(|a| a.is_finite())
                    .ok_or_else(|| {
                        Error::UnknownKind(format!(
                            "divergence kind `{s}` (valid: {})",
                            GeneratorKind::TAGS
                        ))
                    })?;
                Alpha(a)
            }
        })
    }
}

/// Nonnegative divergence value; `+∞` is a legitimate result.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub const INFINITE: DivergenceValue = DivergenceValue(f64::INFINITY);

    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan() && value >= 0.0);
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for DivergenceValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DivergenceValue", 2)?;
        st.serialize_field(
            "value",
            &if self.is_infinite() {
                None
            } else {
                Some(self.0)
            },
        )?;
        st.serialize_field("infinite", &self.is_infinite())?;
        st.end()
    }
}

/// Evaluate the generator `f(t)` for `t ≥ 0`; `f(0)` is the right limit and may be `+∞`.
pub fn generator_eval(kind: GeneratorKind, t: f64) -> f64 {
    assert!(t >= 0.0, "generator argument must be nonnegative, got {t}");
    if t > 0.0 {
        return generator_at_offset(kind, t - 1.0);
    }
    match kind.canonical() {
        Kl => 0.0,
        ReverseKl | SymmetricKl | ReverseChi2 => f64::INFINITY,
        JensenShannon => 0.5 * LN_2,
        Hellinger2 | TotalVariation => 0.5,
        Chi2 => 1.0,
        Alpha(a) if a < 0.0 => f64::INFINITY,
        Alpha(0.0) => f64::INFINITY,
        Alpha(a) => -1.0 / (a * (a - 1.0)),
    }
}

/// `f(1 + u)` for `u > −1`, written so that small `u` keeps full relative accuracy.
pub fn generator_at_offset(kind: GeneratorKind, u: f64) -> f64 {
    let l = u.ln_1p();
    match kind.canonical() {
        Kl => (1.0 + u) * l,
        ReverseKl => -l,
        SymmetricKl => u * l,
        JensenShannon => 0.5 * ((1.0 + u) * l - (2.0 + u) * (0.5 * u).ln_1p()),
        Hellinger2 => {
            let r = u / ((1.0 + u).sqrt() + 1.0);
            0.5 * r * r
        }
        TotalVariation => 0.5 * u.abs(),
        Chi2 => u * u,
        ReverseChi2 => -u * (2.0 + u) / (1.0 + u),
        Alpha(a) => (a * l).exp_m1() / (a * (a - 1.0)),
    }
}

/// `f''(1)`; TV has no second derivative at 1.
pub fn generator_curvature(kind: GeneratorKind) -> Result<f64> {
    Ok(match kind.canonical() {
        Kl | ReverseKl | Alpha(_) => 1.0,
        SymmetricKl | Chi2 | ReverseChi2 => 2.0,
        JensenShannon | Hellinger2 => 0.25,
        TotalVariation => return Err(Error::NotTwiceDifferentiable(kind.tag())),
    })
}

/// Contribution `Q(x) f(P(x)/Q(x))` of a single state.
fn term(kind: GeneratorKind, p: f64, q: f64) -> f64 {
    if q == 0.0 {
        if p == 0.0 {
            0.0
        } else {
            let slope = kind.slope_at_infinity();
            if slope == 0.0 {
                0.0
            } else {
                p * slope
            }
        }
    } else {
        let f = generator_eval(kind, p / q);
        if f.is_infinite() {
            f
        } else {
            q * f
        }
    }
}

fn clamp(total: f64) -> DivergenceValue {
    if total.is_infinite() && total > 0.0 {
        DivergenceValue::INFINITE
    } else {
        DivergenceValue::new(total.max(0.0))
    }
}

/// `Σ_x Q(x) f(P(x)/Q(x))` with the limit conventions for empty cells.
pub fn f_divergence(
    kind: GeneratorKind,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
) -> Result<DivergenceValue> {
    if !p.space().same_as(q.space()) {
        return Err(Error::SpaceMismatch);
    }
    Ok(f_divergence_slices(kind, p.probs(), q.probs()))
}

/// Same as [`f_divergence`] on raw probability vectors of equal length.
pub fn f_divergence_slices(kind: GeneratorKind, p: &[f64], q: &[f64]) -> DivergenceValue {
    assert_eq!(p.len(), q.len());
    let total: f64 = p.iter().zip(q).map(|(&a, &b)| term(kind, a, b)).sum();
    clamp(total)
}

/// Half-width of the integration window for the 1-d study.
pub const QUAD_HALF_WIDTH: f64 = 10.0;
/// Relative tolerance of the 1-d quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature1d {
    pub value: f64,
    /// Richardson estimate of the quadrature error on the window.
    pub error_estimate: f64,
    /// Bound on the mass outside `[-10, 10]`: `2 · max|f| · Φ(−10)`.
    pub tail_bound: f64,
}

/// Upper bound on `Φ(−a)` for `a > 0` (Mills ratio).
fn gaussian_tail(a: f64) -> f64 {
    (-0.5 * a * a).exp() / ((2.0 * std::f64::consts::PI).sqrt() * a)
}

fn max_abs_generator(kind: GeneratorKind, eps: f64) -> f64 {
    // Convex: the maximum over [1-ε, 1+ε] sits at an endpoint.
    generator_eval(kind, 1.0 - eps)
        .abs()
        .max(generator_eval(kind, 1.0 + eps).abs())
}

fn integrate_1d<F: Fn(f64) -> f64>(
    integrand: F,
    kind: GeneratorKind,
    eps: f64,
    abs_floor: f64,
) -> Result<Quadrature1d> {
    let r = adaptive_simpson(
        integrand,
        -QUAD_HALF_WIDTH,
        QUAD_HALF_WIDTH,
        QUAD_REL_TOL,
        abs_floor,
    )?;
    Ok(Quadrature1d {
        value: r.value,
        error_estimate: r.error,
        tail_bound: 2.0 * max_abs_generator(kind, eps) * gaussian_tail(QUAD_HALF_WIDTH),
    })
}

/// `∫ q f(p/q)` for `P = (1 + ε sin x) Q`, `Q = N(0, 1)`, over `[-10, 10]`.
pub fn f_divergence_1d(kind: GeneratorKind, pg: &PerturbedGaussian1D) -> Result<Quadrature1d> {
    let eps = pg.eps();
    let mut r = integrate_1d(
        |x| {
            let (_, q) = pg.density(x);
            q * generator_at_offset(kind, eps * x.sin())
        },
        kind,
        eps,
        1e-300,
    )?;
    r.value = r.value.max(0.0);
    Ok(r)
}

/// Local χ² approximation `f''(1)/2 · χ²(P, Q)` of an f-divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chi2Approx {
    pub d_f: f64,
    pub approx: f64,
    pub diff: f64,
    /// `max |P/Q − 1|` over the support.
    pub realized_eps: f64,
}

/// Inputs accepted by [`chi2_approx_report`].
#[derive(Debug, Clone, Copy)]
pub enum ClosePair<'a> {
    Finite(&'a FiniteDistribution, &'a FiniteDistribution),
    Perturbed(&'a PerturbedGaussian1D),
}

/// Taylor remainder `f(t) − f'(1)(t−1) − f''(1)/2 (t−1)²`.
fn taylor_residual(kind: GeneratorKind, u: f64, slope: f64, curv: f64) -> f64 {
    generator_at_offset(kind, u) - slope * u - 0.5 * curv * u * u
}

/// Compare `D_f` with `f''(1)/2 · χ²`.
///
/// `diff` is accumulated from the Taylor remainder directly; since
/// `Σ q (t − 1) = 0` it equals `|d_f − approx|` without the cancellation.
pub fn chi2_approx_report(kind: GeneratorKind, pair: ClosePair<'_>) -> Result<Chi2Approx> {
    let curv = generator_curvature(kind)?;
    let slope = kind.slope_at_one()?;
    match pair {
        ClosePair::Finite(p, q) => {
            if !p.space().same_as(q.space()) {
                return Err(Error::SpaceMismatch);
            }
            let mut realized: f64 = 0.0;
            for (i, (&a, &b)) in p.probs().iter().zip(q.probs()).enumerate() {
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                if a == 0.0 || b == 0.0 {
                    return Err(Error::NotTwoSidedClose(format!(
                        "state {i} has P = {a}, Q = {b}"
                    )));
                }
                realized = realized.max((a / b - 1.0).abs());
            }
            if realized >= 1.0 {
                return Err(Error::NotTwoSidedClose(format!(
                    "realized ε = {realized} ≥ 1"
                )));
            }
            let d_f = f_divergence(kind, p, q)?.value();
            let chi2 = f_divergence(GeneratorKind::Chi2, p, q)?.value();
            let residual: f64 = p
                .probs()
                .iter()
                .zip(q.probs())
                .filter(|(_, &b)| b > 0.0)
                .map(|(&a, &b)| b * taylor_residual(kind, (a - b) / b, slope, curv))
                .sum();
            Ok(Chi2Approx {
                d_f,
                approx: 0.5 * curv * chi2,
                diff: residual.abs(),
                realized_eps: realized,
            })
        }
        ClosePair::Perturbed(pg) => {
            let eps = pg.eps();
            let d_f = f_divergence_1d(kind, pg)?.value;
            let chi2 = f_divergence_1d(GeneratorKind::Chi2, pg)?.value;
            let residual = integrate_1d(
                |x| {
                    let (_, q) = pg.density(x);
                    q * taylor_residual(kind, eps * x.sin(), slope, curv)
                },
                kind,
                eps,
                // The residual is of order ε⁴; resolve it to about one part in 10⁶.
                (1e-6 * eps.powi(4)).max(1e-300),
            )?
            .value;
            Ok(Chi2Approx {
                d_f,
                approx: 0.5 * curv * chi2,
                diff: residual.abs(),
                realized_eps: eps,
            })
        }
    }
}
