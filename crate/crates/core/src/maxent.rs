//! Constrained entropy extremization: maximum entropy under power-moment
//! constraints, minimum relative entropy under one auxiliary constraint,
//! and the minimum-information check for Gaussian matrix ensembles.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{Density, DensityModel};
use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, integrate_vec, QuadOptions};
use crate::rng::stream;
use crate::special::EULER_GAMMA;

/// Largest constrained power.
pub const MAX_MOMENT_ORDER: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Support {
    HalfLine,
    FullLine,
    Interval { lo: f64, hi: f64 },
}

/// Targets `∫ x^k ρ = m_k`, sorted by k, with m_0 = 1 implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConstraintSet {
    pub support: Support,
    pub moments: Vec<(u32, f64)>,
}

impl MomentConstraintSet {
    /// Validates and sorts the targets. A k = 0 entry is accepted only with
    /// value 1 and is dropped.
    pub fn new(support: Support, moments: &[(u32, f64)]) -> Result<Self> {
        if let Support::Interval { lo, hi } = support {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!("support interval [{lo}, {hi}] is empty")));
            }
        }
        let mut ms = Vec::with_capacity(moments.len());
        for &(k, m) in moments {
            if !m.is_finite() {
                return Err(Error::InvalidParameter(format!("moment m_{k} = {m} is not finite")));
            }
            if k == 0 {
                if (m - 1.0).abs() > 1e-12 {
                    return Err(Error::Infeasible(format!("m_0 must be 1, got {m}")));
                }
                continue;
            }
            if k > MAX_MOMENT_ORDER {
                return Err(Error::InvalidParameter(format!("moment order {k} exceeds {MAX_MOMENT_ORDER}")));
            }
            ms.push((k, m));
        }
        ms.sort_by_key(|p| p.0);
        if ms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("moment orders must be distinct".into()));
        }
        if ms.is_empty() && !matches!(support, Support::Interval { .. }) {
            return Err(Error::Infeasible("an unbounded support needs at least one moment constraint".into()));
        }
        Ok(Self { support, moments: ms })
    }

    pub fn target(&self, k: u32) -> Option<f64> {
        self.moments.iter().find(|p| p.0 == k).map(|p| p.1)
    }

    /// Two-moment half-line rule when both m_1 and m_2 are present.
    pub fn halfline_feasible(&self) -> Option<bool> {
        match (self.support, self.target(1), self.target(2)) {
            (Support::HalfLine, Some(m1), Some(m2)) => Some(feasibility_halfline(m1, m2)),
            _ => None,
        }
    }

    fn max_order(&self) -> u32 {
        self.moments.last().map_or(0, |p| p.0)
    }
}

/// A maximum-entropy density exists on the half-line for given (m_1, m_2)
/// iff m_1² ≤ m_2 ≤ 2 m_1².
pub fn feasibility_halfline(m1: f64, m2: f64) -> bool {
    m1 > 0.0 && m1 * m1 <= m2 && m2 <= 2.0 * m1 * m1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentStep {
    pub iteration: usize,
    pub multipliers: Vec<f64>,
    pub residual: f64,
    pub objective: f64,
}

/// `ρ*(x) = exp(−Σ_k λ_k x^k)` with λ_0 = ln Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxentSolution {
    pub support: Support,
    /// λ_0..λ_M indexed by power; unconstrained powers hold 0.
    pub multipliers: Vec<f64>,
    /// ⟨x^k⟩ under ρ* for k = 0..M.
    pub achieved_moments: Vec<f64>,
    pub entropy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<MaxentStep>,
}

impl MaxentSolution {
    pub fn density(&self) -> MaxentDensity {
        MaxentDensity { support: self.support, multipliers: self.multipliers.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentDensity {
    support: Support,
    multipliers: Vec<f64>,
}

impl MaxentDensity {
    fn exponent(&self, x: f64) -> f64 {
        -self.multipliers.iter().rev().fold(0.0, |acc, l| acc * x + l)
    }
}

impl Density for MaxentDensity {
    fn value(&self, x: f64) -> f64 {
        self.ln_value(x).exp()
    }

    fn ln_value(&self, x: f64) -> f64 {
        let inside = match self.support {
            Support::HalfLine => x >= 0.0,
            Support::FullLine => true,
            Support::Interval { lo, hi } => x >= lo && x <= hi,
        };
        if inside {
            self.exponent(x)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn breaks(&self) -> Vec<f64> {
        let p = Polynomial { coef: self.multipliers[1..].to_vec() };
        window(self.support, &p).map_or_else(|| vec![0.0, 1.0], |w| w.breaks)
    }
}

// Σ_{k≥1} coef[k−1] x^k
struct Polynomial {
    coef: Vec<f64>,
}

impl Polynomial {
    fn phi(&self, x: f64) -> f64 {
        -self.coef.iter().rev().fold(0.0, |acc, c| (acc + c) * x)
    }

    fn leading(&self) -> Option<(usize, f64)> {
        self.coef.iter().enumerate().rev().find(|(_, c)| **c != 0.0).map(|(i, c)| (i + 1, *c))
    }
}

struct Window {
    breaks: Vec<f64>,
    phi_max: f64,
}

// Integration window where exp(φ) is within e^-60 of its peak; None if
// exp(φ) is not integrable on the support.
fn window(support: Support, p: &Polynomial) -> Option<Window> {
    let scan_max = |lo: f64, hi: f64| {
        (0..=512).map(|i| p.phi(lo + (hi - lo) * i as f64 / 512.0)).fold(f64::NEG_INFINITY, f64::max)
    };
    let (lo, hi) = match support {
        Support::Interval { lo, hi } => (lo, hi),
        Support::HalfLine | Support::FullLine => {
            let (deg, lead) = p.leading()?;
            let full = matches!(support, Support::FullLine);
            if lead <= 0.0 || (full && deg % 2 == 1) {
                return None;
            }
            let mut r = 1.0f64;
            loop {
                let lo = if full { -r } else { 0.0 };
                let m = scan_max(lo, r);
                let edge = if full { p.phi(r).max(p.phi(-r)) } else { p.phi(r) };
                if edge < m - 60.0 {
                    break (lo, r);
                }
                r *= 2.0;
                if r > 1e8 {
                    return None;
                }
            }
        }
    };
    let phi_max = scan_max(lo, hi);
    if !phi_max.is_finite() {
        return None;
    }
    let pieces = 32;
    let breaks = (0..=pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect();
    Some(Window { breaks, phi_max })
}

// ln Z and ⟨x^p⟩ for p = 0..=2M.
fn power_moments(support: Support, p: &Polynomial, max_power: u32) -> Result<Option<(f64, Vec<f64>)>> {
    let Some(w) = window(support, p) else {
        return Ok(None);
    };
    let opts = QuadOptions::with_tol(1e-15, 1e-13);
    let z = integrate_breaks(|x| (p.phi(x) - w.phi_max).exp(), &w.breaks, opts)?;
    if !(z > 0.0 && z.is_finite()) {
        return Ok(None);
    }
    let mut moments = vec![1.0];
    for k in 1..=max_power as i32 {
        let v = integrate_breaks(|x| x.powi(k) * (p.phi(x) - w.phi_max).exp(), &w.breaks, opts)?;
        moments.push(v / z);
    }
    Ok(Some((z.ln() + w.phi_max, moments)))
}

fn start_point(c: &MomentConstraintSet) -> Vec<f64> {
    let m = c.max_order() as usize;
    let mut lam = vec![0.0; m];
    match c.support {
        Support::Interval { .. } => {}
        Support::FullLine => {
            if let (Some(m2), m1) = (c.target(2), c.target(1).unwrap_or(0.0)) {
                let var = m2 - m1 * m1;
                if var > 0.0 {
                    // Gaussian with the requested mean and variance
                    lam[1] = 1.0 / (2.0 * var);
                    if m >= 1 {
                        lam[0] = -m1 / var;
                    }
                    if m == 2 {
                        return lam;
                    }
                }
            }
            top_power_start(c, &mut lam);
        }
        Support::HalfLine => top_power_start(c, &mut lam),
    }
    lam
}

// exp(−λ x^k) has ⟨x^k⟩ = 1/(kλ) on either the half or the full line
fn top_power_start(c: &MomentConstraintSet, lam: &mut [f64]) {
    let &(k, mk) = c.moments.last().expect("non-empty constraints");
    if mk > 0.0 && lam[k as usize - 1] == 0.0 {
        lam[k as usize - 1] = 1.0 / (k as f64 * mk);
    }
}

// Solves H x = g for a symmetric positive definite H (Cholesky); None if
// H is not numerically positive definite.
fn solve_spd(h: &[Vec<f64>], g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = h[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 1e-300) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (g[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

const MAXENT_MAX_ITER: usize = 200;

/// Maximum-entropy density under the power-moment constraints, by damped
/// Newton iteration on the convex dual `Γ(λ) = ln Z(λ) + Σ λ_k m_k`.
///
/// Converged when every residual `|⟨x^k⟩ − m_k|` is at most
/// `tol · max(1, |m_k|)`.
pub fn solve_maxent(constraints: &MomentConstraintSet, tol: f64) -> Result<MaxentSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if constraints.halfline_feasible() == Some(false) {
        let (m1, m2) = (constraints.target(1).unwrap_or(0.0), constraints.target(2).unwrap_or(0.0));
        return Err(Error::Infeasible(format!(
            "half-line moments m1 = {m1}, m2 = {m2} violate m1² ≤ m2 ≤ 2m1²"
        )));
    }
    let m = constraints.max_order();
    let idx: Vec<usize> = constraints.moments.iter().map(|p| p.0 as usize).collect();
    let targets: Vec<f64> = constraints.moments.iter().map(|p| p.1).collect();
    let support = constraints.support;

    // λ indexed by power 1..=M (slot k−1); only constrained slots move
    let mut lam = start_point(constraints);
    let eval = |lam: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let p = Polynomial { coef: lam.to_vec() };
        Ok(power_moments(support, &p, 2 * m)?.map(|(ln_z, mom)| {
            let obj = ln_z + idx.iter().zip(&targets).map(|(&k, t)| lam[k - 1] * t).sum::<f64>();
            (obj, [vec![ln_z], mom].concat())
        }))
    };
    let Some(mut cur) = eval(&lam)? else {
        return Err(Error::Infeasible("starting density is not normalizable".into()));
    };
    let mut trace = Vec::new();
    for iteration in 0..=MAXENT_MAX_ITER {
        // cur.1 = [ln Z, ⟨x^0⟩, ⟨x^1⟩, ...]
        let mom = &cur.1[1..];
        let resid: Vec<f64> = idx.iter().zip(&targets).map(|(&k, t)| t - mom[k]).collect();
        let norm = resid.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let mut full = vec![0.0; m as usize + 1];
        full[0] = cur.1[0];
        full[1..].copy_from_slice(&lam);
        trace.push(MaxentStep { iteration, multipliers: full.clone(), residual: norm, objective: cur.0 });
        let done = idx.iter().zip(&targets).zip(&resid).all(|((_, t), r)| r.abs() <= tol * t.abs().max(1.0));
        if done {
            let entropy = full[0] + (1..=m as usize).map(|k| full[k] * mom[k]).sum::<f64>();
            return Ok(MaxentSolution {
                support,
                multipliers: full,
                achieved_moments: mom[..=m as usize].to_vec(),
                entropy,
                converged: true,
                iterations: iteration,
                trace,
            });
        }
        if iteration == MAXENT_MAX_ITER {
            break;
        }
        // ∂Γ/∂λ_i = m_i − ⟨x^i⟩, ∂²Γ/∂λ_i∂λ_j = Cov(x^i, x^j)
        let grad: Vec<f64> = resid.clone();
        let hess: Vec<Vec<f64>> =
            idx.iter().map(|&i| idx.iter().map(|&j| mom[i + j] - mom[i] * mom[j]).collect()).collect();
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let dir = solve_spd(&hess, &neg_grad).unwrap_or(neg_grad);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = lam.clone();
            for (&k, d) in idx.iter().zip(&dir) {
                trial[k - 1] += t * d;
            }
            if let Some(next) = eval(&trial)? {
                if next.0 <= cur.0 + 1e-4 * t * slope || (next.0 - cur.0).abs() <= 1e-15 * cur.0.abs().max(1.0) {
                    accepted = Some((trial, next));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((l, c)) => {
                lam = l;
                cur = c;
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    reason: format!("line search failed with moment residual {norm:e}"),
                })
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAXENT_MAX_ITER,
        reason: "moment residual above tolerance".into(),
    })
}

/// Auxiliary function `T` of a relative-entropy constraint `∫ T ρ = θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AuxFunction {
    /// T(x) = −ln x
    NegLog,
    /// Piecewise-linear interpolation through (xs, ys), constant beyond
    /// the ends.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl AuxFunction {
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("tabulated function needs ≥ 2 increasing abscissae".into()));
        }
        Ok(AuxFunction::Tabulated { xs, ys })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            AuxFunction::NegLog => -x.ln(),
            AuxFunction::Tabulated { xs, ys } => {
                let n = xs.len();
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[n - 1] {
                    return ys[n - 1];
                }
                let i = xs.partition_point(|&v| v <= x) - 1;
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] * (1.0 - w) + ys[i + 1] * w
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlConstraint {
    pub reference: DensityModel,
    pub aux: AuxFunction,
    pub theta: f64,
}

/// `ρ*(x) = C ρ_ref(x) exp(−λ T(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedDensity {
    pub reference: DensityModel,
    pub aux: AuxFunction,
    pub lambda: f64,
    pub ln_c: f64,
    breaks: Vec<f64>,
}

impl TiltedDensity {
    fn ln_weight(reference: &DensityModel, aux: &AuxFunction, lambda: f64, x: f64) -> f64 {
        let l = reference.ln_value(x);
        if l == f64::NEG_INFINITY || lambda == 0.0 {
            return l;
        }
        match aux {
            // −λT = λ ln x; keeps x = 0 exact when λ > 0
            AuxFunction::NegLog => {
                if x == 0.0 {
                    if lambda > 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    l + lambda * x.ln()
                }
            }
            t => l - lambda * t.eval(x),
        }
    }

    pub fn normalization(&self) -> f64 {
        self.ln_c.exp()
    }
}

impl Density for TiltedDensity {
    fn value(&self, x: f64) -> f64 {
        self.ln_value(x).exp()
    }

    fn ln_value(&self, x: f64) -> f64 {
        self.ln_c + Self::ln_weight(&self.reference, &self.aux, self.lambda, x)
    }

    fn breaks(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlSolution {
    pub lambda: f64,
    /// C in ρ* = C ρ_ref e^{−λT}
    pub normalization: f64,
    pub density: TiltedDensity,
    /// ∫ T ρ*
    pub achieved_theta: f64,
    pub iterations: usize,
}

struct TiltStats {
    ln_z: f64,
    mean_t: f64,
    var_t: f64,
    breaks: Vec<f64>,
}

// Normalization and first two moments of T under ρ_ref e^{−λT}. The
// reference breaks are extended to the right until the tilted weight is
// negligible.
fn tilt_stats(reference: &DensityModel, aux: &AuxFunction, lambda: f64) -> Result<TiltStats> {
    let lw = |x: f64| TiltedDensity::ln_weight(reference, aux, lambda, x);
    let mut breaks = reference.breaks();
    let scan = |b: &[f64]| {
        let mut m = f64::NEG_INFINITY;
        for w in b.windows(2) {
            for i in 1..8 {
                m = m.max(lw(w[0] + (w[1] - w[0]) * i as f64 / 8.0));
            }
        }
        m
    };
    let mut peak = scan(&breaks);
    loop {
        let end = *breaks.last().expect("breaks");
        if lw(end) < peak - 50.0 {
            break;
        }
        if end > 1e6 {
            return Err(Error::Divergence(format!("tilted weight at λ = {lambda} is not integrable")));
        }
        breaks.push(end * 1.25);
        peak = peak.max(lw(end * 1.25));
    }
    if !peak.is_finite() {
        return Err(Error::Divergence(format!("tilted weight at λ = {lambda} is not integrable")));
    }
    let q = integrate_vec(
        |x| {
            let l = lw(x);
            if l == f64::NEG_INFINITY {
                return [0.0; 3];
            }
            let w = (l - peak).exp();
            let t = aux.eval(x);
            [w, w * t, w * t * t]
        },
        &breaks,
        QuadOptions::with_tol(1e-15, 1e-12),
    )?;
    let [z, zt, ztt] = q.value;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Divergence(format!("tilted normalization at λ = {lambda} is {z}")));
    }
    let mean_t = zt / z;
    Ok(TiltStats { ln_z: z.ln() + peak, mean_t, var_t: (ztt / z - mean_t * mean_t).max(0.0), breaks })
}

/// ρ* at a prescribed λ, with its achieved θ = ⟨T⟩.
pub fn kl_tilt(reference: &DensityModel, aux: &AuxFunction, lambda: f64) -> Result<KlSolution> {
    reference.validate()?;
    let s = tilt_stats(reference, aux, lambda)?;
    let density = TiltedDensity { reference: *reference, aux: aux.clone(), lambda, ln_c: -s.ln_z, breaks: s.breaks };
    Ok(KlSolution { lambda, normalization: (-s.ln_z).exp(), density, achieved_theta: s.mean_t, iterations: 0 })
}

/// Minimizes `∫ ρ ln(ρ/ρ_ref)` subject to `∫ T ρ = θ`.
///
/// The solution is the exponential tilt `C ρ_ref e^{−λT}`; λ is found by
/// bracketing plus safeguarded Newton, using that ⟨T⟩_λ decreases with
/// slope −Var(T).
pub fn solve_kl_min(constraint: &KlConstraint, tol: f64) -> Result<KlSolution> {
    let KlConstraint { reference, aux, theta } = constraint;
    let theta = *theta;
    if !theta.is_finite() || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("need finite θ and positive tolerance, got θ = {theta}, tol = {tol}")));
    }
    reference.validate()?;
    // the reference's own ⟨T⟩ must be finite
    let g = |lam: f64| tilt_stats(reference, aux, lam).map(|s| (s.mean_t - theta, s.var_t));
    let (g0, _) = g(0.0)?;
    if g0.abs() <= tol {
        return kl_tilt(reference, aux, 0.0);
    }
    // bracket [lo, hi] with g(lo) > 0 ≥ g(hi), walking away from λ = 0
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut step = 1.0;
    if g0 > 0.0 {
        loop {
            hi = lo + step;
            match g(hi) {
                Ok((gh, _)) if gh <= 0.0 => break,
                Ok(_) if hi < 1e3 => {
                    lo = hi;
                    step *= 2.0;
                }
                _ => return Err(Error::NoRoot(format!("θ = {theta} is below the attainable range of ⟨T⟩"))),
            }
        }
    } else {
        loop {
            let cand = hi - step;
            match g(cand) {
                Ok((gl, _)) if gl > 0.0 => {
                    lo = cand;
                    break;
                }
                Ok(_) if step < 1e3 => {
                    hi = cand;
                    step *= 2.0;
                }
                Ok(_) => return Err(Error::NoRoot(format!("θ = {theta} is above the attainable range of ⟨T⟩"))),
                // stepped past the integrability limit; probe closer to it
                Err(_) => {
                    step *= 0.5;
                    if step < 1e-12 {
                        return Err(Error::NoRoot(format!("θ = {theta} is above the attainable range of ⟨T⟩")));
                    }
                }
            }
        }
    }
    let mut lam = 0.5 * (lo + hi);
    let (mut gl, mut var) = g(lam)?;
    for iteration in 1..=200 {
        if gl > 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        if gl.abs() <= tol || hi - lo <= 1e-15 * lam.abs().max(1.0) {
            let mut sol = kl_tilt(reference, aux, lam)?;
            sol.iterations = iteration;
            return Ok(sol);
        }
        let newton = if var > 0.0 { lam + gl / var } else { f64::NAN };
        lam = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        (gl, var) = g(lam)?;
    }
    Err(Error::NonConvergence { iterations: 200, reason: format!("⟨T⟩ residual {gl:e}") })
}

/// `∫_0^∞ e^{−αx} ln x dx = −(γ + ln α)/α`.
pub fn log_moment_exponential(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
    }
    Ok(-(EULER_GAMMA + alpha.ln()) / alpha)
}

/// `∫_0^∞ e^{−αx²} ln x dx = −√(π/(16α)) (γ + ln 4α)`.
pub fn log_moment_gaussian(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("α must be positive, got {alpha}")));
    }
    Ok(-(std::f64::consts::PI / (16.0 * alpha)).sqrt() * (EULER_GAMMA + (4.0 * alpha).ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalianReport {
    pub dyson_index: u32,
    pub n: usize,
    pub a2: f64,
    /// Independent real matrix-element components.
    pub components: usize,
    /// Σ_c w_c ⟨x_c²⟩ with w = 1 on the diagonal and 2 off it, i.e. ⟨Tr MM*⟩.
    pub trace_target: f64,
    /// I[P*] = −Σ_c ½(1 + ln 2π v_c).
    pub i_closed: f64,
    /// I[P*] by per-component quadrature.
    pub i_star: f64,
    pub i_perturbed: Vec<f64>,
    pub all_exceed: bool,
}

/// Per-component variances (a²/2β)(1 + δ_ij) and trace weights for the
/// Gaussian ensemble with Dyson index β.
pub fn ensemble_component_variances(dyson_index: u32, n: usize, a2: f64) -> Result<Vec<(f64, f64)>> {
    if !matches!(dyson_index, 1 | 2 | 4) {
        return Err(Error::UnsupportedClass(format!("Dyson index {dyson_index} is not in {{1, 2, 4}}")));
    }
    let b = dyson_index as f64;
    let mut out = vec![(a2 / b, 1.0); n];
    out.extend(std::iter::repeat_n((a2 / (2.0 * b), 2.0), n * (n - 1) / 2 * dyson_index as usize));
    Ok(out)
}

// two-component Gaussian mixture on one real coordinate
#[derive(Debug, Clone, Copy)]
struct Mixture {
    w: f64,
    m: [f64; 2],
    s: [f64; 2],
}

impl Mixture {
    fn random<R: Rng>(rng: &mut R, v: f64) -> Self {
        let sd = v.sqrt();
        let w = rng.random_range(0.2..0.8);
        let m0: f64 = 0.6 * sd * rng.sample::<f64, _>(StandardNormal);
        let m1: f64 = 0.6 * sd * rng.sample::<f64, _>(StandardNormal);
        Mixture { w, m: [m0, m1], s: [sd * rng.random_range(0.4..1.3), sd * rng.random_range(0.4..1.3)] }
    }

    fn second_moment(&self) -> f64 {
        self.w * (self.m[0].powi(2) + self.s[0].powi(2)) + (1.0 - self.w) * (self.m[1].powi(2) + self.s[1].powi(2))
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let ln_n = |m: f64, s: f64| -0.5 * ((x - m) / s).powi(2) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let a = self.w.ln() + ln_n(self.m[0], self.s[0]);
        let b = (1.0 - self.w).ln() + ln_n(self.m[1], self.s[1]);
        let top = a.max(b);
        top + ((a - top).exp() + (b - top).exp()).ln()
    }

    // ∫ p ln p
    fn neg_entropy(&self) -> Result<f64> {
        let r = 12.0 * self.s[0].max(self.s[1]) + self.m[0].abs().max(self.m[1].abs());
        let breaks: Vec<f64> = (0..=16).map(|i| -r + 2.0 * r * i as f64 / 16.0).collect();
        integrate_breaks(
            |x| {
                let l = self.ln_pdf(x);
                l.exp() * l
            },
            &breaks,
            QuadOptions::with_tol(1e-13, 1e-12),
        )
    }
}

/// Checks that the Gaussian ensemble minimizes `I[P] = ∫ P ln P` among
/// element-factorized densities with the same ⟨Tr MM*⟩.
///
/// Each trial replaces every component by a random two-Gaussian mixture,
/// then rescales all components by one common factor so the trace
/// constraint holds again. Trial `i` draws from stream `i` of `seed`.
pub fn balian_min_check(dyson_index: u32, n: usize, a2: f64, perturbations: usize, seed: u64) -> Result<BalianReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("matrix size must be in 1..=4, got {n}")));
    }
    if !(a2 > 0.0 && a2.is_finite()) {
        return Err(Error::InvalidParameter(format!("a² must be positive, got {a2}")));
    }
    let comps = ensemble_component_variances(dyson_index, n, a2)?;
    let trace_target: f64 = comps.iter().map(|(v, w)| v * w).sum();
    let two_pi = 2.0 * std::f64::consts::PI;
    let i_closed: f64 = comps.iter().map(|(v, _)| -0.5 * (1.0 + (two_pi * v).ln())).sum();
    let mut i_star = 0.0;
    for (v, _) in &comps {
        let g = Mixture { w: 0.5, m: [0.0, 0.0], s: [v.sqrt(), v.sqrt()] };
        i_star += g.neg_entropy()?;
    }
    let i_perturbed: Vec<f64> = (0..perturbations)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial as u64);
            let mix: Vec<Mixture> = comps.iter().map(|(v, _)| Mixture::random(&mut rng, *v)).collect();
            let achieved: f64 = mix.iter().zip(&comps).map(|(m, (_, w))| w * m.second_moment()).sum();
            if !(achieved > 0.0 && achieved.is_finite()) {
                return Err(Error::ConstraintRepair(format!("trial {trial}: trace {achieved} cannot be rescaled")));
            }
            let c = (trace_target / achieved).sqrt();
            let mut total = 0.0;
            for m in &mix {
                let scaled = Mixture { w: m.w, m: [c * m.m[0], c * m.m[1]], s: [c * m.s[0], c * m.s[1]] };
                total += scaled.neg_entropy()?;
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    let all_exceed = i_perturbed.iter().all(|i| *i > i_star);
    Ok(BalianReport {
        dyson_index,
        n,
        a2,
        components: comps.len(),
        trace_target,
        i_closed,
        i_star,
        i_perturbed,
        all_exceed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::differential_entropy;
    use crate::special::digamma;
    use std::f64::consts::PI;

    #[test]
    fn feasibility_examples() {
        assert!(feasibility_halfline(1.0, 1.5));
        assert!(!feasibility_halfline(1.0, 2.5));
        assert!(feasibility_halfline(1.0 / PI.sqrt(), 0.5));
    }

    #[test]
    fn exponential_from_mean() {
        for alpha in [0.5, 1.0, 3.0] {
            let c = MomentConstraintSet::new(Support::HalfLine, &[(1, 1.0 / alpha)]).unwrap();
            let s = solve_maxent(&c, 1e-12).unwrap();
            assert!((s.multipliers[1] - alpha).abs() < 1e-8);
            assert!((s.entropy - (1.0 - alpha.ln())).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_on_full_line() {
        for sigma2 in [0.3, 1.0, 4.0] {
            let c = MomentConstraintSet::new(Support::FullLine, &[(1, 0.0), (2, sigma2)]).unwrap();
            let s = solve_maxent(&c, 1e-12).unwrap();
            assert!((s.entropy - 0.5 * (2.0 * PI * std::f64::consts::E * sigma2).ln()).abs() < 1e-8);
            assert!((s.multipliers[2] - 0.5 / sigma2).abs() < 1e-8);
        }
    }

    #[test]
    fn half_gaussian_recovered_from_two_moments() {
        let c = MomentConstraintSet::new(Support::HalfLine, &[(1, 1.0 / PI.sqrt()), (2, 0.5)]).unwrap();
        let s = solve_maxent(&c, 1e-12).unwrap();
        assert!(s.converged);
        assert!(s.multipliers[1].abs() < 1e-7, "{:?}", s.multipliers);
        assert!((s.multipliers[2] - 1.0).abs() < 1e-7);
        // ρ* = (2/√π) e^{−x²}: λ_0 = −ln(2/√π)
        assert!((s.multipliers[0] + (2.0 / PI.sqrt()).ln()).abs() < 1e-7);
        // the dual objective never increases
        assert!(s.trace.windows(2).all(|w| w[1].objective <= w[0].objective + 1e-12));
    }

    #[test]
    fn feasibility_boundary() {
        let m1: f64 = 0.8;
        let c = MomentConstraintSet::new(Support::HalfLine, &[(1, m1), (2, 2.0 * m1 * m1)]).unwrap();
        let s = solve_maxent(&c, 1e-10).unwrap();
        assert!(s.multipliers[2].abs() < 1e-8);
        let c = MomentConstraintSet::new(Support::HalfLine, &[(1, m1), (2, 2.01 * m1 * m1)]).unwrap();
        assert_eq!(c.halfline_feasible(), Some(false));
        assert!(matches!(solve_maxent(&c, 1e-10), Err(Error::Infeasible(_))));
    }

    #[test]
    fn three_moments_round_trip() {
        // moments of exp(−0.2 − 0.5x − 0.3x² − 0.1x³), normalized
        let lam = [0.5, 0.3, 0.1];
        let p = Polynomial { coef: lam.to_vec() };
        let (_, mom) = power_moments(Support::HalfLine, &p, 3).unwrap().unwrap();
        let c = MomentConstraintSet::new(Support::HalfLine, &[(1, mom[1]), (2, mom[2]), (3, mom[3])]).unwrap();
        let s = solve_maxent(&c, 1e-12).unwrap();
        for (got, want) in s.multipliers[1..].iter().zip(lam) {
            assert!((got - want).abs() < 1e-6, "{:?}", s.multipliers);
        }
        let d = s.density();
        assert!((differential_entropy(&d).unwrap() - s.entropy).abs() < 1e-9);
    }

    #[test]
    fn uniform_on_interval() {
        let c = MomentConstraintSet::new(Support::Interval { lo: 0.0, hi: 2.0 }, &[(1, 1.0)]).unwrap();
        let s = solve_maxent(&c, 1e-12).unwrap();
        assert!((s.entropy - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn maximum_beats_competitors() {
        // every mixture of two exponentials with mean 1 has entropy below 1
        let c = MomentConstraintSet::new(Support::HalfLine, &[(1, 1.0)]).unwrap();
        let s = solve_maxent(&c, 1e-12).unwrap();
        for i in 1..20 {
            let a = 0.2 + 0.04 * i as f64;
            let b = 2.0 - a;
            let mix = Tabulated2Exp { a, b };
            assert!(differential_entropy(&mix).unwrap() < s.entropy);
        }
    }

    // ½(e^{−x/a}/a + e^{−x/b}/b), mean (a+b)/2
    struct Tabulated2Exp {
        a: f64,
        b: f64,
    }

    impl Density for Tabulated2Exp {
        fn value(&self, x: f64) -> f64 {
            if x < 0.0 {
                0.0
            } else {
                0.5 * ((-x / self.a).exp() / self.a + (-x / self.b).exp() / self.b)
            }
        }
        fn breaks(&self) -> Vec<f64> {
            (0..=40).map(|i| i as f64 * 2.5).collect()
        }
    }

    #[test]
    fn constraint_validation() {
        assert!(MomentConstraintSet::new(Support::HalfLine, &[(7, 1.0)]).is_err());
        assert!(MomentConstraintSet::new(Support::HalfLine, &[(1, 1.0), (1, 2.0)]).is_err());
        assert!(MomentConstraintSet::new(Support::HalfLine, &[(0, 0.5)]).is_err());
        assert!(MomentConstraintSet::new(Support::FullLine, &[]).is_err());
        let c = MomentConstraintSet::new(Support::FullLine, &[(2, 1.0), (0, 1.0), (1, 0.0)]).unwrap();
        assert_eq!(c.moments, vec![(1, 0.0), (2, 1.0)]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<MomentConstraintSet>(&json).unwrap(), c);
    }

    #[test]
    fn log_moments_match_quadrature() {
        for alpha in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let q = integrate_breaks(|x| if x > 0.0 { (-alpha * x).exp() * x.ln() } else { 0.0 }, &crate::quad::graded_breaks(0.0, 80.0 / alpha, 20), QuadOptions::default()).unwrap();
            assert!((log_moment_exponential(alpha).unwrap() - q).abs() < 1e-9, "exp α={alpha}");
            let r = (50.0 / alpha).sqrt();
            let q = integrate_breaks(|x| if x > 0.0 { (-alpha * x * x).exp() * x.ln() } else { 0.0 }, &crate::quad::graded_breaks(0.0, r, 20), QuadOptions::default()).unwrap();
            assert!((log_moment_gaussian(alpha).unwrap() - q).abs() < 1e-9, "gauss α={alpha}");
        }
        assert!((log_moment_exponential(1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((log_moment_exponential(e).unwrap() + (1.0 + EULER_GAMMA) / e).abs() < 1e-15);
        assert!((log_moment_exponential(2.0).unwrap() + 0.635181422730739).abs() < 1e-12);
        assert!((log_moment_gaussian(1.0).unwrap() + 0.8700577267283155).abs() < 1e-12);
        assert!((log_moment_gaussian(0.25).unwrap() + PI.sqrt() / 2.0 * EULER_GAMMA).abs() < 1e-15);
        assert!((log_moment_gaussian(4.0).unwrap() + 0.7421717107211018).abs() < 1e-12);
        assert!(log_moment_gaussian(0.0).is_err());
    }

    #[test]
    fn kl_min_recovers_erlang_and_bessel_ou() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.02).collect();
        for alpha in [1.0, 2.0] {
            let reference = DensityModel::erlang(alpha, 1).unwrap();
            for lam in 1..=4u32 {
                let n = lam + 1;
                let theta = -(digamma(n as f64).unwrap() - f64::ln(alpha));
                let c = KlConstraint { reference, aux: AuxFunction::NegLog, theta };
                let s = solve_kl_min(&c, 1e-13).unwrap();
                assert!((s.lambda - lam as f64).abs() < 1e-8, "{}", s.lambda);
                let target = DensityModel::erlang(alpha, n).unwrap();
                let err = grid.iter().map(|&x| (s.density.value(x) - target.value(x)).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "α={alpha} λ={lam}: {err}");
            }
        }
        let reference = DensityModel::half_line_gaussian(0.5).unwrap();
        for lam in 1..=4u32 {
            let n = lam + 1;
            let theta = -0.5 * digamma(n as f64 / 2.0).unwrap();
            let s = solve_kl_min(&KlConstraint { reference, aux: AuxFunction::NegLog, theta }, 1e-13).unwrap();
            let target = DensityModel::bessel_ou(n).unwrap();
            let err = grid.iter().map(|&x| (s.density.value(x) - target.value(x)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "λ={lam}: {err}");
        }
    }

    #[test]
    fn kl_min_trivial_and_negative_lambda() {
        let reference = DensityModel::erlang(1.0, 3).unwrap();
        let theta = -digamma(3.0).unwrap();
        let s = solve_kl_min(&KlConstraint { reference, aux: AuxFunction::NegLog, theta }, 1e-12).unwrap();
        assert_eq!(s.lambda, 0.0);
        // tilting Erlang(1,3) by x^{-1} gives Erlang(1,2)
        let theta = -digamma(2.0).unwrap();
        let s = solve_kl_min(&KlConstraint { reference, aux: AuxFunction::NegLog, theta }, 1e-13).unwrap();
        assert!((s.lambda + 1.0).abs() < 1e-8);
        // ⟨−ln x⟩ grows without bound as λ → −1 for the exponential reference,
        // but λ → ∞ only drives it to −∞ slowly; a huge negative θ has no root
        let e = DensityModel::erlang(1.0, 1).unwrap();
        let r = solve_kl_min(&KlConstraint { reference: e, aux: AuxFunction::NegLog, theta: -1e6 }, 1e-10);
        assert!(matches!(r, Err(Error::NoRoot(_))), "{r:?}");
    }

    #[test]
    fn tabulated_aux_interpolates() {
        let t = AuxFunction::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(5.0), 0.0);
        assert!(AuxFunction::tabulated(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn balian_gaussian_is_minimal() {
        let r = balian_min_check(1, 2, 1.0, 0, 3).unwrap();
        let expect = -(1.0 + (2.0 * PI).ln()) - 0.5 * (1.0 + PI.ln());
        assert!((r.i_closed - expect).abs() < 1e-14);
        assert!((r.i_star - r.i_closed).abs() < 1e-10);
        assert_eq!(r.components, 3);
        assert!((r.trace_target - 3.0).abs() < 1e-15);
        let r = balian_min_check(1, 2, 1.0, 50, 3).unwrap();
        assert_eq!(r.i_perturbed.len(), 50);
        assert!(r.all_exceed);
        let doubled = balian_min_check(1, 2, 2.0, 0, 3).unwrap();
        assert!((doubled.i_closed - r.i_closed + 1.5 * 2f64.ln()).abs() < 1e-12);
        for beta in [2, 4] {
            let r = balian_min_check(beta, 3, 1.5, 10, 9).unwrap();
            assert!(r.all_exceed);
            assert_eq!(r.components, 3 + 3 * beta as usize);
        }
        assert!(matches!(balian_min_check(3, 2, 1.0, 0, 0), Err(Error::UnsupportedClass(_))));
        assert!(balian_min_check(1, 5, 1.0, 0, 0).is_err());
    }
}
