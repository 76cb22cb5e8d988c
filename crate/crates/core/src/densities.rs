//! Closed-form spacing laws on the half-line.
//!
//! Every model is internally a generalized gamma law
//! `c · s^β · exp(−b · s^α)` with integer β and α ∈ {1, 2}; pdf, cdf,
//! moments and sampling are all written once against that form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{graded_breaks, integrate_breaks, QuadOptions};
use crate::special::{gamma_p, gamma_q, lgamma, psi};

/// Largest polynomial exponent accepted by any family.
pub const MAX_REPULSION: u32 = 200;

/// Anything that can be integrated as a probability density on a known
/// support.
pub trait Density {
    /// Density at `x`; zero outside the support.
    fn value(&self, x: f64) -> f64;

    /// Quadrature breakpoints covering the effective support.
    fn breaks(&self) -> Vec<f64>;

    /// `ln value(x)`, overridable where the log can be formed without
    /// underflow.
    fn ln_value(&self, x: f64) -> f64 {
        self.value(x).ln()
    }

    /// Downcast hook so grid-on-grid functionals can use exact cell sums.
    fn as_grid(&self) -> Option<&crate::grid::GridDensity> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurmiseLabel {
    Poisson,
    SemiPoisson2,
    SemiPoisson3,
    SemiPoisson5,
    Goe,
    Gue,
    Ginibre,
    Gse,
    P0,
}

impl SurmiseLabel {
    pub const ALL: [SurmiseLabel; 9] = [
        SurmiseLabel::Poisson,
        SurmiseLabel::SemiPoisson2,
        SurmiseLabel::SemiPoisson3,
        SurmiseLabel::SemiPoisson5,
        SurmiseLabel::Goe,
        SurmiseLabel::Gue,
        SurmiseLabel::Ginibre,
        SurmiseLabel::Gse,
        SurmiseLabel::P0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurmiseLabel::Poisson => "poisson",
            SurmiseLabel::SemiPoisson2 => "semi_poisson2",
            SurmiseLabel::SemiPoisson3 => "semi_poisson3",
            SurmiseLabel::SemiPoisson5 => "semi_poisson5",
            SurmiseLabel::Goe => "goe",
            SurmiseLabel::Gue => "gue",
            SurmiseLabel::Ginibre => "ginibre",
            SurmiseLabel::Gse => "gse",
            SurmiseLabel::P0 => "p0",
        }
    }

    /// Wigner surmise of the Gaussian ensemble with Dyson index β_D.
    pub fn for_dyson_index(beta_d: u32) -> Result<Self> {
        match beta_d {
            1 => Ok(SurmiseLabel::Goe),
            2 => Ok(SurmiseLabel::Gue),
            4 => Ok(SurmiseLabel::Gse),
            _ => Err(Error::UnsupportedClass(format!("Dyson index {beta_d} is not in {{1, 2, 4}}"))),
        }
    }

    /// Gaussian-stretch surmise whose prefactor is `s^(components − 1)`.
    pub fn for_components(components: u32) -> Result<Self> {
        match components {
            1 => Ok(SurmiseLabel::P0),
            2 => Ok(SurmiseLabel::Goe),
            3 => Ok(SurmiseLabel::Gue),
            4 => Ok(SurmiseLabel::Ginibre),
            5 => Ok(SurmiseLabel::Gse),
            _ => Err(Error::InvalidParameter(format!("no surmise with {components} components"))),
        }
    }
}

impl fmt::Display for SurmiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurmiseLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        SurmiseLabel::ALL
            .into_iter()
            .find(|l| l.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown surmise label '{s}'")))
    }
}

/// A half-line probability law. Serializes as `{"kind": ..., "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DensityModel {
    /// `∝ s^beta · exp(−(s/scale)^alpha)`.
    GenericFamily { beta: u32, alpha: u32, scale: f64 },
    /// `rate^n s^(n−1) e^(−rate·s) / (n−1)!`
    Erlang { rate: f64, shape: u32 },
    /// Invariant law of the n-dimensional radial OU process,
    /// `(2/Γ(n/2)) r^(n−1) e^(−r²)`.
    BesselOu { dim: u32 },
    /// Law of |X| for X ~ N(0, sigma2).
    HalfLineGaussian { sigma2: f64 },
    Surmise { label: SurmiseLabel },
}

/// `exp(ln_c) · s^beta · exp(−b s^stretch)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GammaForm {
    pub ln_c: f64,
    pub beta: u32,
    pub stretch: u32,
    pub b: f64,
}

impl GammaForm {
    fn shape(&self) -> f64 {
        (self.beta as f64 + 1.0) / self.stretch as f64
    }

    fn ln_pdf(&self, s: f64) -> f64 {
        if s == 0.0 {
            return if self.beta == 0 { self.ln_c } else { f64::NEG_INFINITY };
        }
        self.ln_c + self.beta as f64 * s.ln() - self.b * s.powi(self.stretch as i32)
    }

    /// ∫ s^k pdf, closed form.
    fn raw_moment(&self, k: u32) -> f64 {
        let a = (self.beta as f64 + k as f64 + 1.0) / self.stretch as f64;
        (self.ln_c + lgamma(a) - (self.stretch as f64).ln() - a * self.b.ln()).exp()
    }

    /// Total mass, 1 up to rounding of the closed-form coefficients.
    fn mass(&self) -> f64 {
        self.raw_moment(0)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.beta + 1;
        match self.stretch {
            1 => (0..m).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / self.b,
            _ => {
                // norm of m Gaussians with variance 1/(2b)
                let r2: f64 = (0..m)
                    .map(|_| {
                        let z: f64 = rng.sample(StandardNormal);
                        z * z
                    })
                    .sum();
                (r2 / (2.0 * self.b)).sqrt()
            }
        }
    }

    /// Point beyond which the mass is below `tail`.
    fn upper_cutoff(&self, tail: f64) -> f64 {
        let a = self.shape();
        let mut x = a + 10.0;
        while gamma_q(a, x).unwrap_or(0.0) > tail {
            x *= 1.5;
        }
        (x / self.b).powf(1.0 / self.stretch as f64)
    }
}

fn check_repulsion(beta: u32, what: &str) -> Result<()> {
    if beta > MAX_REPULSION {
        return Err(Error::InvalidParameter(format!("{what} {beta} exceeds {MAX_REPULSION}")));
    }
    Ok(())
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {x}")));
    }
    Ok(())
}

impl DensityModel {
    /// Generic family with the scale fixed by ⟨s⟩ = 1.
    pub fn generic(beta: u32, alpha: u32) -> Result<Self> {
        let m = DensityModel::GenericFamily { beta, alpha, scale: 1.0 };
        m.validate()?;
        Ok(m.normalize_unit_mean())
    }

    pub fn erlang(rate: f64, shape: u32) -> Result<Self> {
        let m = DensityModel::Erlang { rate, shape };
        m.validate().map(|_| m)
    }

    pub fn bessel_ou(dim: u32) -> Result<Self> {
        let m = DensityModel::BesselOu { dim };
        m.validate().map(|_| m)
    }

    pub fn half_line_gaussian(sigma2: f64) -> Result<Self> {
        let m = DensityModel::HalfLineGaussian { sigma2 };
        m.validate().map(|_| m)
    }

    pub fn surmise(label: SurmiseLabel) -> Self {
        DensityModel::Surmise { label }
    }

    /// Checks parameters, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DensityModel::GenericFamily { beta, alpha, scale } => {
                check_repulsion(beta, "repulsion exponent")?;
                if !(alpha == 1 || alpha == 2) {
                    return Err(Error::InvalidParameter(format!("stretch exponent must be 1 or 2, got {alpha}")));
                }
                check_positive(scale, "scale")
            }
            DensityModel::Erlang { rate, shape } => {
                check_positive(rate, "Erlang rate")?;
                if shape == 0 {
                    return Err(Error::InvalidParameter("Erlang shape must be at least 1".into()));
                }
                check_repulsion(shape - 1, "Erlang shape")
            }
            DensityModel::BesselOu { dim } => {
                if dim == 0 {
                    return Err(Error::InvalidParameter("Bessel-OU dimension must be at least 1".into()));
                }
                check_repulsion(dim - 1, "Bessel-OU dimension")
            }
            DensityModel::HalfLineGaussian { sigma2 } => check_positive(sigma2, "sigma2"),
            DensityModel::Surmise { .. } => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DensityModel::GenericFamily { beta, alpha, scale } => format!("generic(beta={beta},alpha={alpha},scale={scale})"),
            DensityModel::Erlang { rate, shape } => format!("erlang(rate={rate},shape={shape})"),
            DensityModel::BesselOu { dim } => format!("bessel_ou(n={dim})"),
            DensityModel::HalfLineGaussian { sigma2 } => format!("half_line_gaussian(sigma2={sigma2})"),
            DensityModel::Surmise { label } => label.name().to_string(),
        }
    }

    /// `(c, β, α, b)` with pdf = c · s^β · exp(−b · s^α).
    pub fn coefficients(&self) -> (f64, u32, u32, f64) {
        let f = self.form();
        (f.ln_c.exp(), f.beta, f.stretch, f.b)
    }

    pub(crate) fn form(&self) -> GammaForm {
        match *self {
            DensityModel::GenericFamily { beta, alpha, scale } => {
                let b = scale.powi(-(alpha as i32));
                let a = (beta as f64 + 1.0) / alpha as f64;
                GammaForm { ln_c: (alpha as f64).ln() + a * b.ln() - lgamma(a), beta, stretch: alpha, b }
            }
            DensityModel::Erlang { rate, shape } => GammaForm {
                ln_c: shape as f64 * rate.ln() - lgamma(shape as f64),
                beta: shape - 1,
                stretch: 1,
                b: rate,
            },
            DensityModel::BesselOu { dim } => {
                GammaForm { ln_c: 2f64.ln() - lgamma(dim as f64 / 2.0), beta: dim - 1, stretch: 2, b: 1.0 }
            }
            DensityModel::HalfLineGaussian { sigma2 } => GammaForm {
                ln_c: 0.5 * (2.0 / (PI * sigma2)).ln(),
                beta: 0,
                stretch: 2,
                b: 1.0 / (2.0 * sigma2),
            },
            DensityModel::Surmise { label } => surmise_form(label),
        }
    }

    pub fn pdf(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("density evaluated at s = {s} < 0")));
        }
        Ok(self.form().ln_pdf(s).exp())
    }

    pub fn ln_pdf(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("density evaluated at s = {s} < 0")));
        }
        Ok(self.form().ln_pdf(s))
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let f = self.form();
        if s.is_infinite() {
            return f.mass().min(1.0);
        }
        // the closed-form constants carry mass 1 ± a few ulp
        (f.mass() * gamma_p(f.shape(), f.b * s.powi(f.stretch as i32)).unwrap_or(1.0)).min(1.0)
    }

    /// ⟨s^k⟩ for k ≤ 8.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 8 {
            return Err(Error::InvalidParameter(format!("moment order {k} exceeds 8")));
        }
        Ok(self.form().raw_moment(k))
    }

    pub fn mean(&self) -> f64 {
        self.form().raw_moment(1)
    }

    pub fn variance(&self) -> f64 {
        let f = self.form();
        let m = f.raw_moment(1);
        f.raw_moment(2) - m * m
    }

    /// One draw, by summing exponentials (α = 1) or taking the norm of a
    /// Gaussian vector (α = 2).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.form().draw(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let f = self.form();
        Ok((0..count).map(|_| f.draw(rng)).collect())
    }

    /// Shannon entropy in closed form.
    ///
    /// Catalog entries are reduced to an equivalent Erlang, half-line
    /// Gaussian, or rescaled Bessel-OU law, using S(cX) = S(X) + ln c.
    /// The generic family has no closed form here.
    pub fn shannon_entropy_closed(&self) -> Result<f64> {
        match *self {
            DensityModel::Erlang { rate, shape } => Ok(erlang_entropy(rate, shape)),
            DensityModel::BesselOu { dim } => Ok(bessel_ou_entropy(dim)),
            DensityModel::HalfLineGaussian { sigma2 } => Ok(half_line_gaussian_entropy(sigma2)),
            DensityModel::Surmise { label } => Ok(match label {
                SurmiseLabel::Poisson => erlang_entropy(1.0, 1),
                SurmiseLabel::SemiPoisson2 => erlang_entropy(2.0, 2),
                SurmiseLabel::SemiPoisson3 => erlang_entropy(3.0, 3),
                SurmiseLabel::SemiPoisson5 => erlang_entropy(5.0, 5),
                SurmiseLabel::P0 => half_line_gaussian_entropy(PI / 2.0),
                SurmiseLabel::Goe => unit_mean_bessel_ou_entropy(2),
                SurmiseLabel::Gue => unit_mean_bessel_ou_entropy(3),
                SurmiseLabel::Ginibre => unit_mean_bessel_ou_entropy(4),
                SurmiseLabel::Gse => unit_mean_bessel_ou_entropy(5),
            }),
            DensityModel::GenericFamily { .. } => {
                Err(Error::Unsupported(format!("{} has no closed-form entropy; use quadrature", self.label())))
            }
        }
    }

    /// The same law rescaled to ⟨s⟩ = 1. Catalog entries are fixed points.
    pub fn normalize_unit_mean(&self) -> DensityModel {
        match *self {
            DensityModel::Surmise { .. } => *self,
            DensityModel::Erlang { shape, .. } => DensityModel::Erlang { rate: shape as f64, shape },
            DensityModel::HalfLineGaussian { .. } => DensityModel::HalfLineGaussian { sigma2: PI / 2.0 },
            DensityModel::BesselOu { dim } => {
                let n = dim as f64;
                DensityModel::GenericFamily {
                    beta: dim - 1,
                    alpha: 2,
                    scale: (lgamma(n / 2.0) - lgamma((n + 1.0) / 2.0)).exp(),
                }
            }
            DensityModel::GenericFamily { beta, alpha, scale } => {
                let mean = self.mean();
                DensityModel::GenericFamily { beta, alpha, scale: scale / mean }
            }
        }
    }

    /// Point beyond which the remaining mass is below `tail`.
    pub fn upper_cutoff(&self, tail: f64) -> f64 {
        self.form().upper_cutoff(tail)
    }
}

fn surmise_form(label: SurmiseLabel) -> GammaForm {
    let (c, beta, stretch, b) = match label {
        SurmiseLabel::Poisson => (1.0, 0, 1, 1.0),
        SurmiseLabel::SemiPoisson2 => (4.0, 1, 1, 2.0),
        SurmiseLabel::SemiPoisson3 => (27.0 / 2.0, 2, 1, 3.0),
        SurmiseLabel::SemiPoisson5 => (3125.0 / 24.0, 4, 1, 5.0),
        SurmiseLabel::Goe => (PI / 2.0, 1, 2, PI / 4.0),
        SurmiseLabel::Gue => (32.0 / (PI * PI), 2, 2, 4.0 / PI),
        SurmiseLabel::Ginibre => (81.0 * PI * PI / 128.0, 3, 2, 9.0 * PI / 16.0),
        SurmiseLabel::Gse => (262_144.0 / (729.0 * PI.powi(3)), 4, 2, 64.0 / (9.0 * PI)),
        SurmiseLabel::P0 => (2.0 / PI, 0, 2, 1.0 / PI),
    };
    GammaForm { ln_c: f64::ln(c), beta, stretch, b }
}

/// ln Γ(n) + (1 − n) ψ(n) + n − ln α
pub fn erlang_entropy(rate: f64, shape: u32) -> f64 {
    let n = shape as f64;
    lgamma(n) + (1.0 - n) * psi(n) + n - rate.ln()
}

/// Entropy of `(2/Γ(n/2)) r^(n−1) e^(−r²)`:
/// ln Γ(n/2) − ln 2 − ((n−1)/2) ψ(n/2) + n/2.
///
/// A commonly quoted form, ln Γ(n/2) − ((n−1)/2) ψ(n/2) + (n−1)/2, is off
/// by the constant ln 2 − 1/2 against direct quadrature; see
/// [`bessel_ou_entropy_uncorrected`].
pub fn bessel_ou_entropy(dim: u32) -> f64 {
    let h = dim as f64 / 2.0;
    lgamma(h) - 2f64.ln() - (h - 0.5) * psi(h) + h
}

/// The uncorrected expression ln Γ(n/2) − ((n−1)/2) ψ(n/2) + (n−1)/2. Kept
/// only so the discrepancy with [`bessel_ou_entropy`] can be checked.
pub fn bessel_ou_entropy_uncorrected(dim: u32) -> f64 {
    let h = dim as f64 / 2.0;
    lgamma(h) - (h - 0.5) * psi(h) + h - 0.5
}

/// ½ [ln(σ²π/2) + 1]
pub fn half_line_gaussian_entropy(sigma2: f64) -> f64 {
    0.5 * ((sigma2 * PI / 2.0).ln() + 1.0)
}

// S(R/⟨R⟩) = S(R) − ln⟨R⟩ with ⟨R⟩ = Γ((n+1)/2)/Γ(n/2)
fn unit_mean_bessel_ou_entropy(dim: u32) -> f64 {
    let n = dim as f64;
    bessel_ou_entropy(dim) - (lgamma((n + 1.0) / 2.0) - lgamma(n / 2.0))
}

impl Density for DensityModel {
    fn value(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.form().ln_pdf(x).exp()
        }
    }

    fn ln_value(&self, x: f64) -> f64 {
        if x < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.form().ln_pdf(x)
        }
    }

    fn breaks(&self) -> Vec<f64> {
        let f = self.form();
        let upper = f.upper_cutoff(1e-18);
        let mean = f.raw_moment(1).min(upper / 4.0);
        let mut pts = graded_breaks(0.0, mean, 6);
        let pieces = 12;
        for i in 1..=pieces {
            pts.push(mean + (upper - mean) * i as f64 / pieces as f64);
        }
        pts
    }
}

/// ∫ g(x) ρ(x) dx over the effective support of `d`.
pub fn expectation<D: Density + ?Sized, G: FnMut(f64) -> f64>(d: &D, mut g: G) -> Result<f64> {
    integrate_breaks(|x| g(x) * d.value(x), &d.breaks(), QuadOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::special::EULER_GAMMA;

    fn quad_moment(m: &DensityModel, k: i32) -> f64 {
        expectation(m, |x| x.powi(k)).unwrap()
    }

    fn quad_entropy(m: &DensityModel) -> f64 {
        integrate_breaks(
            |x| {
                let l = m.ln_value(x);
                if l.is_finite() {
                    -l * l.exp()
                } else {
                    0.0
                }
            },
            &m.breaks(),
            QuadOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn pdf_examples() {
        let goe = DensityModel::surmise(SurmiseLabel::Goe);
        assert!((goe.pdf(1.0).unwrap() - PI / 2.0 * (-PI / 4.0).exp()).abs() < 1e-15);
        assert_eq!(DensityModel::surmise(SurmiseLabel::SemiPoisson2).pdf(0.0).unwrap(), 0.0);
        let e = DensityModel::erlang(3.0, 3).unwrap();
        assert!((e.pdf(1.0).unwrap() - 13.5 * (-3.0f64).exp()).abs() < 1e-14);
        assert!(matches!(goe.pdf(-0.1), Err(Error::Domain(_))));
        assert!(goe.pdf(f64::NAN).is_err());
    }

    #[test]
    fn catalog_is_normalized_with_unit_mean() {
        for label in SurmiseLabel::ALL {
            let m = DensityModel::surmise(label);
            assert!((quad_moment(&m, 0) - 1.0).abs() < 1e-10, "{label} mass");
            assert!((quad_moment(&m, 1) - 1.0).abs() < 1e-10, "{label} mean");
            assert!((m.mean() - 1.0).abs() < 1e-12, "{label} closed mean");
            assert!((m.cdf(f64::INFINITY) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_match_quadrature() {
        let models = [
            DensityModel::surmise(SurmiseLabel::P0),
            DensityModel::surmise(SurmiseLabel::Gse),
            DensityModel::erlang(1.7, 4).unwrap(),
            DensityModel::bessel_ou(5).unwrap(),
            DensityModel::half_line_gaussian(0.3).unwrap(),
            DensityModel::generic(3, 1).unwrap(),
        ];
        for m in &models {
            for k in 0..=8u32 {
                let exact = m.moment(k).unwrap();
                let q = quad_moment(m, k as i32);
                assert!((exact - q).abs() <= 1e-9 * exact.max(1.0), "{} k={k}: {exact} vs {q}", m.label());
            }
        }
        let p0 = DensityModel::surmise(SurmiseLabel::P0);
        assert!((p0.moment(1).unwrap() - 1.0).abs() < 1e-14);
        assert!((p0.moment(2).unwrap() - PI / 2.0).abs() < 1e-14);
        assert!((DensityModel::erlang(2.5, 1).unwrap().moment(1).unwrap() - 0.4).abs() < 1e-15);
        assert!(p0.moment(9).is_err());
    }

    #[test]
    fn cdf_matches_quadrature() {
        let m = DensityModel::surmise(SurmiseLabel::Ginibre);
        let q = integrate_breaks(|x| m.value(x), &[0.0, 0.7, 1.3], QuadOptions::default()).unwrap();
        assert!((m.cdf(1.3) - q).abs() < 1e-13);
        assert_eq!(m.cdf(-1.0), 0.0);
    }

    #[test]
    fn closed_entropies_match_quadrature() {
        for rate in 1..=5 {
            for shape in 1..=5 {
                let m = DensityModel::erlang(rate as f64, shape).unwrap();
                let s = m.shannon_entropy_closed().unwrap();
                assert!((s - quad_entropy(&m)).abs() < 1e-8, "{}", m.label());
            }
        }
        for dim in 1..=6 {
            let m = DensityModel::bessel_ou(dim).unwrap();
            let s = m.shannon_entropy_closed().unwrap();
            assert!((s - quad_entropy(&m)).abs() < 1e-8, "n={dim}");
            let gap = bessel_ou_entropy_uncorrected(dim) - s;
            assert!((gap - (2f64.ln() - 0.5)).abs() < 1e-12);
        }
        for label in SurmiseLabel::ALL {
            let m = DensityModel::surmise(label);
            assert!((m.shannon_entropy_closed().unwrap() - quad_entropy(&m)).abs() < 1e-8, "{label}");
        }
        let g = DensityModel::half_line_gaussian(0.7).unwrap();
        assert!((g.shannon_entropy_closed().unwrap() - quad_entropy(&g)).abs() < 1e-8);
        assert!(matches!(DensityModel::generic(2, 2).unwrap().shannon_entropy_closed(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn entropy_examples() {
        let e22 = DensityModel::erlang(2.0, 2).unwrap().shannon_entropy_closed().unwrap();
        assert!((e22 - (1.0 + EULER_GAMMA - 2f64.ln())).abs() < 1e-14);
        assert!((e22 - 0.8840684843415876).abs() < 1e-12);
        assert!((DensityModel::erlang(1.0, 1).unwrap().shannon_entropy_closed().unwrap() - 1.0).abs() < 1e-15);
        let b1 = DensityModel::bessel_ou(1).unwrap().shannon_entropy_closed().unwrap();
        assert!((b1 - 0.3792177623647548).abs() < 1e-12);
        assert!((b1 - (0.5 * (PI / 4.0).ln() + 0.5)).abs() < 1e-14);
        let gue = DensityModel::surmise(SurmiseLabel::Gue).shannon_entropy_closed().unwrap();
        assert!((gue - 0.5287983701909877).abs() < 1e-12);
        let goe = DensityModel::surmise(SurmiseLabel::Goe).shannon_entropy_closed().unwrap();
        assert!((goe - 0.7162428895260663).abs() < 1e-12);
    }

    #[test]
    fn unit_mean_normalization() {
        let goe = DensityModel::surmise(SurmiseLabel::Goe);
        assert_eq!(goe.normalize_unit_mean(), goe);
        assert_eq!(
            DensityModel::erlang(1.0, 2).unwrap().normalize_unit_mean(),
            DensityModel::Erlang { rate: 2.0, shape: 2 }
        );
        let g = DensityModel::half_line_gaussian(1.0).unwrap().normalize_unit_mean();
        assert_eq!(g, DensityModel::HalfLineGaussian { sigma2: PI / 2.0 });
        assert!((quad_moment(&g, 1) - 1.0).abs() < 1e-12);
        for dim in 1..=6 {
            let m = DensityModel::bessel_ou(dim).unwrap().normalize_unit_mean();
            assert!((quad_moment(&m, 1) - 1.0).abs() < 1e-12);
        }
        // n = 2 Bessel-OU rescaled to unit mean is the GOE surmise
        let m = DensityModel::bessel_ou(2).unwrap().normalize_unit_mean();
        for x in [0.1, 0.9, 2.3] {
            assert!((m.value(x) - goe.value(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn sampling_means() {
        let n = 100_000;
        let check = |m: DensityModel, seed: u64, g: fn(f64) -> f64, target: f64| {
            let xs: Vec<f64> = m.sample(&mut stream(seed, 0), n).unwrap().into_iter().map(g).collect();
            let se = crate::stats::std_err(&xs);
            let mean = crate::stats::mean(&xs);
            assert!((mean - target).abs() < 3.0 * se, "{}: {mean} vs {target} (se {se})", m.label());
        };
        check(DensityModel::erlang(1.0, 1).unwrap(), 42, |x| x, 1.0);
        check(DensityModel::surmise(SurmiseLabel::Goe), 7, |x| x, 1.0);
        check(DensityModel::bessel_ou(3).unwrap(), 1, |x| x * x, 1.5);
        assert!(DensityModel::surmise(SurmiseLabel::Goe).sample(&mut stream(1, 0), 0).is_err());
    }

    #[test]
    fn validation_and_serde() {
        assert!(DensityModel::erlang(0.0, 1).is_err());
        assert!(DensityModel::erlang(1.0, 0).is_err());
        assert!(DensityModel::bessel_ou(0).is_err());
        assert!(DensityModel::half_line_gaussian(-1.0).is_err());
        assert!(DensityModel::generic(2, 3).is_err());
        let m = DensityModel::erlang(2.0, 3).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"kind":"erlang","params":{"rate":2.0,"shape":3}}"#);
        assert_eq!(serde_json::from_str::<DensityModel>(&json).unwrap(), m);
        let s: DensityModel = serde_json::from_str(r#"{"kind":"surmise","params":{"label":"semi_poisson2"}}"#).unwrap();
        assert_eq!(s, DensityModel::surmise(SurmiseLabel::SemiPoisson2));
        assert_eq!("GOE".parse::<SurmiseLabel>().unwrap(), SurmiseLabel::Goe);
        assert!("wigner".parse::<SurmiseLabel>().is_err());
    }
}
