//! Calogero-type Hamiltonians: spectra, eigenfunctions, the drift ↔
//! potential map of ground-state diffusions, and position/momentum
//! entropies on a grid.
//!
//! Two forms are covered:
//! - two-level, H = −½ d²/dx² + ½ x² + β(β − 2)/8x², with
//!   E_k = 2k + 1 + ½ √(1 + β(β − 2));
//! - singular, H = −d²/dx² + x² + γ/x², with E_n = 4n + 2 + √(1 + 4γ) and
//!   f_n(x) = x^{α+½} e^{−x²/2} L_n^α(x²), α = ½ √(1 + 4γ).

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::quad::{integrate, integrate_breaks, QuadOptions};
use crate::special::{lgamma, laguerre, laguerre_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "coupling", rename_all = "snake_case")]
pub enum CalogeroSpec {
    TwoLevel(f64),
    Singular(f64),
}

impl CalogeroSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CalogeroSpec::TwoLevel(b) if !(b > -1.0) => Err(Error::Domain(format!("two-level coupling must exceed −1, got {b}"))),
            CalogeroSpec::Singular(g) if !(g > -0.25) => Err(Error::Domain(format!("singular coupling must exceed −1/4, got {g}"))),
            _ => Ok(()),
        }
    }

    /// Closed-form level k.
    pub fn spectrum(&self, k: u32) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            CalogeroSpec::TwoLevel(b) => 2.0 * k as f64 + 1.0 + 0.5 * (1.0 + b * (b - 2.0)).sqrt(),
            CalogeroSpec::Singular(g) => 4.0 * k as f64 + 2.0 + (1.0 + 4.0 * g).sqrt(),
        })
    }
}

/// ½ √(1 + 4γ)
pub fn laguerre_order(gamma_c: f64) -> f64 {
    0.5 * (1.0 + 4.0 * gamma_c).sqrt()
}

/// Highest excitation `SingularState` accepts.
pub const MAX_LEVEL: u32 = 20;

/// Normalized f_n of the singular form on the half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularState {
    pub gamma_c: f64,
    pub n: u32,
    pub alpha: f64,
    /// ln of the normalization constant, found by quadrature.
    pub ln_norm: f64,
}

impl SingularState {
    pub fn new(gamma_c: f64, n: u32) -> Result<Self> {
        CalogeroSpec::Singular(gamma_c).validate()?;
        if n > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!("level {n} exceeds {MAX_LEVEL}")));
        }
        let alpha = laguerre_order(gamma_c);
        let mut s = Self { gamma_c, n, alpha, ln_norm: 0.0 };
        let hi = 6.0 + 2.0 * (n as f64 + alpha).sqrt();
        let breaks: Vec<f64> = (0..=48).map(|i| hi * i as f64 / 48.0).collect();
        let m = integrate_breaks(|x| s.raw(x).powi(2), &breaks, QuadOptions::default())?;
        s.ln_norm = -0.5 * m.ln();
        Ok(s)
    }

    fn raw(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let u = x * x;
        ((self.alpha + 0.5) * x.ln() - 0.5 * u).exp() * laguerre_unchecked(self.n, self.alpha, u)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.raw(x) * self.ln_norm.exp()
    }

    /// Γ(n + α + 1)/(2 n!), the exact ∫ f_n².
    pub fn analytic_norm2(&self) -> f64 {
        (lgamma(self.n as f64 + self.alpha + 1.0) - lgamma(self.n as f64 + 1.0)).exp() / 2.0
    }

    pub fn energy(&self) -> f64 {
        4.0 * self.n as f64 + 2.0 + (1.0 + 4.0 * self.gamma_c).sqrt()
    }

    /// Values at the centers of `grid` (a half-line grid from 0).
    pub fn on_grid(&self, grid: &UniformGrid) -> Vec<f64> {
        grid.centers().into_iter().map(|x| self.eval(x)).collect()
    }
}

/// Hermite function φ_n(x) = (2ⁿ n! √π)^{−½} H_n(x) e^{−x²/2}, via the
/// normalized three-term recurrence.
pub fn hermite_function(n: u32, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Real wave function sampled at the cell centers of a full-line grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunctionGrid {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    #[default]
    Odd,
    Even,
}

impl WaveFunctionGrid {
    /// Normalizes the cell sum of |ψ|² to one.
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("wave function must be finite at every cell".into()));
        }
        let n2: f64 = values.iter().map(|v| v * v).sum::<f64>() * grid.dx();
        if !(n2 > 0.0) {
            return Err(Error::InvalidParameter("wave function vanishes".into()));
        }
        let s = n2.sqrt();
        Ok(Self { grid, values: values.into_iter().map(|v| v / s).collect() })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: UniformGrid, f: F) -> Result<Self> {
        Self::new(grid, grid.centers().into_iter().map(f).collect())
    }

    /// Mirrors a function sampled on [0, L] onto [−L, L].
    pub fn extend_half_line(half: &UniformGrid, values: &[f64], ext: Extension) -> Result<Self> {
        if half.lo != 0.0 || values.len() != half.cells {
            return Err(Error::InvalidParameter("half-line values must sit on a grid starting at 0".into()));
        }
        let sign = match ext {
            Extension::Odd => -1.0,
            Extension::Even => 1.0,
        };
        let full = UniformGrid::new(-half.hi, half.hi, 2 * half.cells)?;
        let mut v: Vec<f64> = values.iter().rev().map(|x| sign * x).collect();
        v.extend_from_slice(values);
        Self::new(full, v)
    }

    pub fn position_density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }
}

/// Zero-padding factor of the momentum transform.
pub const PAD_FACTOR: usize = 8;
/// Largest momentum mass allowed in the outer tenth of the band.
pub const ALIASING_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDensity {
    /// Momenta in increasing order, spacing `dp`.
    pub momenta: Vec<f64>,
    pub values: Vec<f64>,
    pub dp: f64,
}

/// |ψ̃(p)|² with ψ̃(p) = (2π)^{−½} ∫ ψ(x) e^{−ipx} dx, from a zero-padded FFT
/// of length the next power of two ≥ `PAD_FACTOR`·K.
pub fn momentum_density(psi: &WaveFunctionGrid) -> Result<MomentumDensity> {
    let k = psi.grid.cells;
    let m = (PAD_FACTOR * k).next_power_of_two();
    let dx = psi.grid.dx();
    let mut buf: Vec<Complex<f64>> = psi.values.iter().map(|v| Complex::new(*v, 0.0)).collect();
    buf.resize(m, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dp = 2.0 * std::f64::consts::PI / (m as f64 * dx);
    let scale = dx * dx / (2.0 * std::f64::consts::PI);
    let half = m / 2;
    let mut momenta = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    // reorder from FFT layout to −p_max..p_max
    for j in 0..m {
        let idx = (j + half) % m;
        let signed = idx as isize - if idx >= half { m as isize } else { 0 };
        momenta.push(signed as f64 * dp);
        values.push(scale * buf[idx].norm_sqr());
    }
    let total: f64 = values.iter().sum::<f64>() * dp;
    values.iter_mut().for_each(|v| *v /= total);
    let outer: f64 = values.iter().take(m / 20).chain(values.iter().skip(m - m / 20)).sum::<f64>() * dp;
    if outer > ALIASING_LIMIT {
        return Err(Error::Aliasing { mass: outer });
    }
    Ok(MomentumDensity { momenta, values, dp })
}

fn grid_entropy(values: &[f64], d: f64) -> f64 {
    values.iter().filter(|v| **v > 0.0).map(|v| -d * v * v.ln()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub s_q: f64,
    pub s_p: f64,
    pub delta_x: f64,
    pub delta_p: f64,
}

impl UncertaintyReport {
    pub fn entropy_sum(&self) -> f64 {
        self.s_q + self.s_p
    }

    /// S_q + S_p − (1 + ln π)
    pub fn entropic_slack(&self) -> f64 {
        self.entropy_sum() - (1.0 + std::f64::consts::PI.ln())
    }

    pub fn product(&self) -> f64 {
        self.delta_x * self.delta_p
    }

    /// ΔX ΔP − e^{S_q + S_p}/2πe, nonnegative by the Gaussian entropy bound.
    pub fn chain_slack(&self) -> f64 {
        self.product() - self.entropy_sum().exp() / (2.0 * std::f64::consts::PI * std::f64::consts::E)
    }

    /// σ² ≥ e^{2S}/2πe separately in position and momentum.
    pub fn variance_bounds_hold(&self) -> bool {
        let c = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        self.delta_x.powi(2) >= (2.0 * self.s_q).exp() / c && self.delta_p.powi(2) >= (2.0 * self.s_p).exp() / c
    }
}

/// Position and momentum entropies and spreads of a full-line state.
pub fn uncertainty(psi: &WaveFunctionGrid) -> Result<UncertaintyReport> {
    let dx = psi.grid.dx();
    let rho = psi.position_density();
    let tail = (rho[0] + rho[rho.len() - 1]).sqrt();
    if tail > 1e-6 {
        return Err(Error::InvalidParameter(format!("wave function is {tail:e} at the grid edge; widen the grid")));
    }
    let xs = psi.grid.centers();
    let mx: f64 = rho.iter().zip(&xs).map(|(r, x)| dx * r * x).sum();
    let vx: f64 = rho.iter().zip(&xs).map(|(r, x)| dx * r * (x - mx).powi(2)).sum();
    let mom = momentum_density(psi)?;
    let mp: f64 = mom.values.iter().zip(&mom.momenta).map(|(r, p)| mom.dp * r * p).sum();
    let vp: f64 = mom.values.iter().zip(&mom.momenta).map(|(r, p)| mom.dp * r * (p - mp).powi(2)).sum();
    Ok(UncertaintyReport {
        s_q: grid_entropy(&rho, dx),
        s_p: grid_entropy(&mom.values, mom.dp),
        delta_x: vx.sqrt(),
        delta_p: vp.sqrt(),
    })
}

/// Half-line grid [0, x_hi] with `cells` cells, x_hi chosen so that f_n
/// has fallen below 1e-12.
pub fn half_line_grid(state: &SingularState, cells: usize) -> Result<UniformGrid> {
    let mut hi = 4.0;
    while state.eval(hi).abs() > 1e-12 || state.eval(hi + 1.0).abs() > 1e-12 {
        hi += 1.0;
    }
    UniformGrid::new(0.0, hi, cells)
}

/// Entropies of the singular-form state extended to the full line.
pub fn singular_uncertainty(state: &SingularState, cells: usize, ext: Extension) -> Result<UncertaintyReport> {
    let g = half_line_grid(state, cells)?;
    let psi = WaveFunctionGrid::extend_half_line(&g, &state.on_grid(&g), ext)?;
    uncertainty(&psi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub energy: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub sum: f64,
    pub delta_x: f64,
    pub delta_p: f64,
    pub product: f64,
}

impl ScanRow {
    fn new(n: u32, energy: f64, r: UncertaintyReport) -> Self {
        Self { n, energy, s_q: r.s_q, s_p: r.s_p, sum: r.entropy_sum(), delta_x: r.delta_x, delta_p: r.delta_p, product: r.product() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyScan {
    pub gamma_c: f64,
    pub rows: Vec<ScanRow>,
    /// S_q and S_q + S_p are smallest at n = 0.
    pub ground_state_minimal: bool,
}

pub const MAX_SCAN_LEVEL: u32 = 10;

fn minimal_at_ground(rows: &[ScanRow]) -> bool {
    rows.iter().skip(1).all(|r| r.s_q > rows[0].s_q && r.sum > rows[0].sum)
}

/// Levels 0..=n_max of the singular form, each extended to the full line.
pub fn excited_state_entropy_scan(gamma_c: f64, n_max: u32, cells: usize, ext: Extension) -> Result<EntropyScan> {
    if n_max > MAX_SCAN_LEVEL {
        return Err(Error::InvalidParameter(format!("scan depth {n_max} exceeds {MAX_SCAN_LEVEL}")));
    }
    let top = SingularState::new(gamma_c, n_max)?;
    let g = half_line_grid(&top, cells)?;
    let rows = (0..=n_max)
        .map(|n| {
            let s = SingularState::new(gamma_c, n)?;
            let psi = WaveFunctionGrid::extend_half_line(&g, &s.on_grid(&g), ext)?;
            Ok(ScanRow::new(n, s.energy(), uncertainty(&psi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let ground_state_minimal = minimal_at_ground(&rows);
    Ok(EntropyScan { gamma_c, rows, ground_state_minimal })
}

/// Same scan for the harmonic oscillator's Hermite functions on [−L, L].
pub fn hermite_entropy_scan(n_max: u32, half_width: f64, cells: usize) -> Result<EntropyScan> {
    if n_max > MAX_SCAN_LEVEL {
        return Err(Error::InvalidParameter(format!("scan depth {n_max} exceeds {MAX_SCAN_LEVEL}")));
    }
    let g = UniformGrid::new(-half_width, half_width, cells)?;
    let rows = (0..=n_max)
        .map(|n| {
            let psi = WaveFunctionGrid::from_fn(g, |x| hermite_function(n, x))?;
            Ok(ScanRow::new(n, 2.0 * n as f64 + 1.0, uncertainty(&psi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let ground_state_minimal = minimal_at_ground(&rows);
    Ok(EntropyScan { gamma_c: 0.0, rows, ground_state_minimal })
}

/// V = ½ (b² + b') with central differences inside, one-sided at the ends.
pub fn drift_to_potential(b: &[f64], dx: f64) -> Result<Vec<f64>> {
    let k = b.len();
    if k < 3 || !(dx > 0.0) {
        return Err(Error::InvalidParameter("need at least 3 drift samples and dx > 0".into()));
    }
    Ok((0..k)
        .map(|i| {
            let db = if i == 0 {
                (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (2.0 * dx)
            } else if i == k - 1 {
                (3.0 * b[k - 1] - 4.0 * b[k - 2] + b[k - 3]) / (2.0 * dx)
            } else {
                (b[i + 1] - b[i - 1]) / (2.0 * dx)
            };
            0.5 * (b[i] * b[i] + db)
        })
        .collect())
}

/// ½[β(β − 2)/4x² + x²] − ½(β + 1), the potential of b = β/2x − x.
pub fn calogero_ground_potential(beta: f64, x: f64) -> f64 {
    0.5 * (beta * (beta - 2.0) / (4.0 * x * x) + x * x) - 0.5 * (beta + 1.0)
}

/// exp(2 ∫_{x0}^{x} b) at each x, by adaptive quadrature.
pub fn drift_to_density<F: Fn(f64) -> f64 + Copy>(b: F, x0: f64, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| Ok((2.0 * integrate(b, x0, x)?).exp())).collect()
}

/// ⟨f, H f⟩/⟨f, f⟩ for H = −d²/dx² + x² + γ/x² with a three-point Laplacian
/// on the half-line grid, f = 0 beyond both ends.
pub fn rayleigh_quotient(gamma_c: f64, grid: &UniformGrid, f: &[f64]) -> Result<f64> {
    if grid.lo != 0.0 || f.len() != grid.cells {
        return Err(Error::InvalidParameter("values must sit on a half-line grid starting at 0".into()));
    }
    let dx = grid.dx();
    let k = f.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        let x = grid.center(i);
        // odd reflection at the origin
        let left = if i == 0 { -f[0] } else { f[i - 1] };
        let right = if i + 1 < k { f[i + 1] } else { 0.0 };
        let lap = (left - 2.0 * f[i] + right) / (dx * dx);
        num += f[i] * (-lap + (x * x + gamma_c / (x * x)) * f[i]);
        den += f[i] * f[i];
    }
    Ok(num / den)
}

/// Sign changes of f between consecutive grid values, ignoring values
/// below `tol` in magnitude.
pub fn count_nodes(f: &[f64], tol: f64) -> usize {
    let signs: Vec<f64> = f.iter().filter(|v| v.abs() > tol).map(|v| v.signum()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Checked Laguerre evaluation for callers outside this module.
pub fn singular_raw(gamma_c: f64, n: u32, x: f64) -> Result<f64> {
    CalogeroSpec::Singular(gamma_c).validate()?;
    let a = laguerre_order(gamma_c);
    Ok(x.powf(a + 0.5) * (-0.5 * x * x).exp() * laguerre(n, a, x * x)?)
}
