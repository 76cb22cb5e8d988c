//! One-dimensional Smoluchowski equation ∂ρ/∂t = D ∂²ρ − ∂(bρ) with
//! b = −V'/mβ and D = T/mβ, plus its thermodynamic bookkeeping.
//!
//! Finite volumes on a cell-centered grid with Scharfetter–Gummel
//! (exponentially fitted) fluxes between cells:
//!
//! J = (D/Δx) [B(Δφ) ρ_i − B(−Δφ) ρ_{i+1}],  B(z) = z/(eᶻ − 1),  φ = V/T.
//!
//! The discrete Gibbs density e^{−φ_i}/Z annihilates every flux, so it is
//! stationary to rounding. The outer faces carry no flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDensity, UniformGrid};

/// Potentials with a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "potential", rename_all = "snake_case")]
pub enum Potential {
    /// k x²/2
    Harmonic { stiffness: f64 },
    /// h (x² − 1)²
    Bistable { height: f64 },
    /// ½ [r² − (n − 1) ln r] on r > 0
    BesselOu { n: u32 },
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Potential::Harmonic { stiffness } => 0.5 * stiffness * x * x,
            Potential::Bistable { height } => height * (x * x - 1.0).powi(2),
            Potential::BesselOu { n } => 0.5 * (x * x - (n as f64 - 1.0) * x.ln()),
        }
    }

    fn validate(&self, grid: &UniformGrid) -> Result<()> {
        match *self {
            Potential::Harmonic { stiffness } if !(stiffness > 0.0) => {
                Err(Error::InvalidParameter(format!("stiffness must be positive, got {stiffness}")))
            }
            Potential::Bistable { height } if !(height > 0.0) => {
                Err(Error::InvalidParameter(format!("barrier height must be positive, got {height}")))
            }
            Potential::BesselOu { n } if n < 1 => Err(Error::InvalidParameter("radial dimension must be at least 1".into())),
            Potential::BesselOu { .. } if grid.lo < 0.0 => {
                Err(Error::Domain(format!("radial potential needs a grid on r ≥ 0, got lo = {}", grid.lo)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoSpec {
    pub grid: UniformGrid,
    /// V at cell centers.
    pub potential: Vec<f64>,
    pub temperature: f64,
    /// mβ
    pub friction: f64,
    /// Which ends are physical walls rather than truncations of an infinite
    /// domain. Leak checks apply only to truncations.
    pub wall_lo: bool,
    pub wall_hi: bool,
}

impl ThermoSpec {
    pub fn tabulated(grid: UniformGrid, potential: Vec<f64>, temperature: f64, friction: f64) -> Result<Self> {
        if potential.len() != grid.cells || potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential must be finite at every cell center".into()));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature must be positive, got {temperature}")));
        }
        if !(friction > 0.0 && friction.is_finite()) {
            return Err(Error::InvalidParameter(format!("friction must be positive, got {friction}")));
        }
        Ok(Self { grid, potential, temperature, friction, wall_lo: false, wall_hi: false })
    }

    /// `BesselOu` on a grid starting at 0 treats r = 0 as a wall.
    pub fn new(grid: UniformGrid, potential: Potential, temperature: f64, friction: f64) -> Result<Self> {
        potential.validate(&grid)?;
        let values = grid.centers().into_iter().map(|x| potential.eval(x)).collect();
        let mut s = Self::tabulated(grid, values, temperature, friction)?;
        s.wall_lo = matches!(potential, Potential::BesselOu { .. }) && grid.lo == 0.0;
        Ok(s)
    }

    pub fn with_walls(mut self, lo: bool, hi: bool) -> Self {
        self.wall_lo = lo;
        self.wall_hi = hi;
        self
    }

    pub fn diffusion(&self) -> f64 {
        self.temperature / self.friction
    }

    /// Largest explicit step keeping every update coefficient nonnegative.
    pub fn stability_bound(&self) -> f64 {
        let dx = self.grid.dx();
        let d = self.diffusion();
        let k = self.grid.cells;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let mut out = 0.0;
            if i + 1 < k {
                out += bernoulli(self.dphi(i));
            }
            if i > 0 {
                out += bernoulli(-self.dphi(i - 1));
            }
            worst = worst.max(out);
        }
        dx * dx / (d * worst)
    }

    /// φ_{i+1} − φ_i
    fn dphi(&self, i: usize) -> f64 {
        (self.potential[i + 1] - self.potential[i]) / self.temperature
    }

    /// Discrete drift on face i+½, −D Δφ/Δx.
    fn face_drift(&self, i: usize) -> f64 {
        -self.diffusion() * self.dphi(i) / self.grid.dx()
    }

    fn face_flux(&self, rho: &[f64], i: usize) -> f64 {
        let z = self.dphi(i);
        self.diffusion() / self.grid.dx() * (bernoulli(z) * rho[i] - bernoulli(-z) * rho[i + 1])
    }

    /// Fluxes through the K − 1 interior faces.
    pub fn fluxes(&self, rho: &GridDensity) -> Vec<f64> {
        (0..self.grid.cells - 1).map(|i| self.face_flux(&rho.values, i)).collect()
    }

    /// Flux a truncated end would pass into an empty neighbour cell whose
    /// potential continues the last difference linearly.
    fn leak(&self, rho: &[f64]) -> f64 {
        let k = self.grid.cells;
        let c = self.diffusion() / self.grid.dx();
        let mut leak: f64 = 0.0;
        if !self.wall_lo {
            leak = leak.max(c * bernoulli(-self.dphi(0)) * rho[0]);
        }
        if !self.wall_hi {
            leak = leak.max(c * bernoulli(self.dphi(k - 2)) * rho[k - 1]);
        }
        leak
    }
}

/// z/(eᶻ − 1), continuous through z = 0.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// Largest flux a truncated boundary may leak before a step is refused.
pub const LEAK_LIMIT: f64 = 1e-12;

fn check_density(rho: &GridDensity, spec: &ThermoSpec) -> Result<()> {
    if rho.grid != spec.grid {
        return Err(Error::InvalidParameter("density and potential live on different grids".into()));
    }
    Ok(())
}

/// One explicit finite-volume step.
pub fn fp_step(rho: &GridDensity, spec: &ThermoSpec, dt: f64) -> Result<GridDensity> {
    check_density(rho, spec)?;
    let bound = spec.stability_bound();
    if !(dt > 0.0 && dt <= bound) {
        return Err(Error::Stability { dt, bound });
    }
    let leak = spec.leak(&rho.values);
    if leak > LEAK_LIMIT {
        return Err(Error::BoundaryLeak { flux: leak });
    }
    let r = dt / spec.grid.dx();
    let mut next = rho.values.clone();
    for i in 0..spec.grid.cells - 1 {
        let j = spec.face_flux(&rho.values, i);
        next[i] -= r * j;
        next[i + 1] += r * j;
    }
    // rounding can leave −1e-300-sized values where ρ underflows
    for v in next.iter_mut() {
        *v = v.max(0.0);
    }
    GridDensity::new(spec.grid, next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub density: GridDensity,
    /// Σ Δx e^{−V/T}
    pub partition: f64,
    /// −T ln Z
    pub free_energy: f64,
}

/// ρ* = e^{−V/T}/Z on the grid, with Z the cell sum.
pub fn gibbs_density(spec: &ThermoSpec) -> Result<GibbsState> {
    let t = spec.temperature;
    let vmin = spec.potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = spec.potential.iter().map(|v| (-(v - vmin) / t).exp()).collect();
    let s: f64 = w.iter().sum::<f64>() * spec.grid.dx();
    let ln_z = s.ln() - vmin / t;
    let density = GridDensity::new(spec.grid, w.into_iter().map(|x| x / s).collect())?;
    Ok(GibbsState { density, partition: ln_z.exp(), free_energy: -t * ln_z })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub time: f64,
    /// −Σ Δx ρ ln ρ
    pub entropy: f64,
    /// ⟨V⟩
    pub energy: f64,
    /// U − T S
    pub free_energy: f64,
    pub free_energy_eq: f64,
    /// (mβ/T)⟨v²⟩
    pub entropy_production: f64,
    /// −mβ⟨b v⟩
    pub heat_rate: f64,
    /// (⟨v²⟩ − ⟨b v⟩)/D, the entropy rate the flux field implies.
    pub entropy_rate: f64,
    /// −Σ Δx ρ ln(ρ/ρ*)
    pub conditional_kl: f64,
    /// Current velocity v on the interior faces.
    pub velocity: Vec<f64>,
    /// Cells where ρ was raised to 1e-300 before taking logs.
    pub floored_cells: usize,
}

const FLOOR: f64 = 1e-300;

/// ρ_f with ρ_f v_f = J_f: the flux divided by b_f − u_f, where
/// u_f = D Δ ln ρ / Δx. Equals the face average at equilibrium.
fn face_density(spec: &ThermoSpec, rho: &[f64], i: usize) -> f64 {
    let z = spec.dphi(i);
    let (a, b) = (rho[i].max(FLOOR), rho[i + 1].max(FLOOR));
    // g = ρ e^φ relative to cell i; ρ_f = h(φ) · logmean(g)
    let g_ratio_ln = (b / a).ln() + z;
    let lm = if g_ratio_ln.abs() < 1e-10 { 1.0 + 0.5 * g_ratio_ln } else { g_ratio_ln.exp_m1() / g_ratio_ln };
    a * bernoulli(z) * lm
}

pub fn thermo_report(time: f64, rho: &GridDensity, spec: &ThermoSpec, gibbs: &GibbsState) -> Result<ThermoReport> {
    check_density(rho, spec)?;
    let dx = spec.grid.dx();
    let t = spec.temperature;
    let d = spec.diffusion();
    let floored_cells = rho.values.iter().filter(|v| **v < FLOOR).count();
    let mut entropy = 0.0;
    let mut energy = 0.0;
    let mut h_c = 0.0;
    for (i, &p) in rho.values.iter().enumerate() {
        energy += dx * p * spec.potential[i];
        if p > 0.0 {
            entropy -= dx * p * p.ln();
            h_c -= dx * p * (p / gibbs.density.values[i]).ln();
        }
    }
    let mut v2 = 0.0;
    let mut bv = 0.0;
    let mut velocity = Vec::with_capacity(spec.grid.cells - 1);
    for i in 0..spec.grid.cells - 1 {
        let j = spec.face_flux(&rho.values, i);
        let rf = face_density(spec, &rho.values, i);
        let v = j / rf;
        velocity.push(v);
        v2 += dx * j * v;
        bv += dx * j * spec.face_drift(i);
    }
    Ok(ThermoReport {
        time,
        entropy,
        energy,
        free_energy: energy - t * entropy,
        free_energy_eq: gibbs.free_energy,
        entropy_production: spec.friction / t * v2,
        heat_rate: -spec.friction * bv,
        entropy_rate: (v2 - bv) / d,
        conditional_kl: h_c.min(0.0),
        velocity,
        floored_cells,
    })
}

/// Slack allowed on the monotonicity laws between reports.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Integrates to `t_final` with steps of half the stability bound, landing
/// exactly on each report time (sorted, within [0, t_final]). Checks
/// F nonincreasing, H_c nondecreasing and S_int ≥ 0 between reports.
pub fn relaxation_run(rho0: &GridDensity, spec: &ThermoSpec, t_final: f64, report_times: &[f64]) -> Result<Vec<ThermoReport>> {
    check_density(rho0, spec)?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be nonnegative, got {t_final}")));
    }
    if report_times.windows(2).any(|w| w[1] < w[0]) || report_times.iter().any(|t| !(*t >= 0.0 && *t <= t_final)) {
        return Err(Error::InvalidParameter("report times must be sorted and lie in [0, t_final]".into()));
    }
    let gibbs = gibbs_density(spec)?;
    let dt_max = 0.5 * spec.stability_bound();
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out: Vec<ThermoReport> = Vec::with_capacity(report_times.len());
    for &tr in report_times {
        while t < tr {
            let remaining = tr - t;
            let n = (remaining / dt_max).ceil().max(1.0);
            let h = remaining / n;
            rho = fp_step(&rho, spec, h)?;
            t = if n == 1.0 { tr } else { t + h };
        }
        let rep = thermo_report(tr, &rho, spec, &gibbs)?;
        if rep.entropy_production < -MONOTONICITY_SLACK {
            return Err(Error::Monotonicity {
                law: "entropy production".into(),
                t_prev: tr,
                t_next: tr,
                delta: rep.entropy_production,
            });
        }
        if let Some(prev) = out.last() {
            let df = rep.free_energy - prev.free_energy;
            if df > MONOTONICITY_SLACK * (1.0 + prev.free_energy.abs()) {
                return Err(Error::Monotonicity { law: "free energy".into(), t_prev: prev.time, t_next: tr, delta: df });
            }
            let dh = rep.conditional_kl - prev.conditional_kl;
            if dh < -MONOTONICITY_SLACK {
                return Err(Error::Monotonicity { law: "conditional KL".into(), t_prev: prev.time, t_next: tr, delta: dh });
            }
        }
        out.push(rep);
    }
    while t < t_final {
        let remaining = t_final - t;
        let n = (remaining / dt_max).ceil().max(1.0);
        let h = remaining / n;
        rho = fp_step(&rho, spec, h)?;
        t = if n == 1.0 { t_final } else { t + h };
    }
    Ok(out)
}

/// Cell-averaged Gaussian N(mean, var) on the grid, renormalized.
pub fn gaussian_on_grid(grid: UniformGrid, mean: f64, var: f64) -> Result<GridDensity> {
    if !(var > 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {var}")));
    }
    GridDensity::from_fn(grid, |x| (-(x - mean).powi(2) / (2.0 * var)).exp())?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn harmonic(cells: usize) -> ThermoSpec {
        ThermoSpec::new(UniformGrid::new(-10.0, 10.0, cells).unwrap(), Potential::Harmonic { stiffness: 1.0 }, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gibbs_examples() {
        let s = harmonic(400);
        let g = gibbs_density(&s).unwrap();
        assert!((g.partition - (2.0 * PI).sqrt()).abs() < 1e-8);
        assert!((g.density.mass() - 1.0).abs() < 1e-14);
        // gauge shift
        let shifted = ThermoSpec::tabulated(s.grid, s.potential.iter().map(|v| v + 0.7).collect(), 1.0, 1.0).unwrap();
        let gs = gibbs_density(&shifted).unwrap();
        let diff = g.density.values.iter().zip(&gs.density.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
        assert!((gs.free_energy - g.free_energy - 0.7).abs() < 1e-12);
    }

    #[test]
    fn bessel_ou_gibbs_is_the_radial_law() {
        for n in 1..=5 {
            let grid = UniformGrid::new(0.0, 7.0, 700).unwrap();
            let s = ThermoSpec::new(grid, Potential::BesselOu { n }, 0.5, 1.0).unwrap();
            assert!(s.wall_lo);
            let g = gibbs_density(&s).unwrap();
            let ratios: Vec<f64> = grid
                .centers()
                .iter()
                .zip(&g.density.values)
                .filter(|(x, _)| **x < 5.0)
                .map(|(x, p)| p / (x.powi(n as i32 - 1) * (-x * x).exp()))
                .collect();
            let r0 = ratios[0];
            assert!(ratios.iter().all(|r| (r / r0 - 1.0).abs() < 1e-10), "n={n}");
        }
    }

    #[test]
    fn gibbs_and_uniform_are_stationary() {
        let s = harmonic(400);
        let g = gibbs_density(&s).unwrap();
        let dt = 0.5 * s.stability_bound();
        let mut rho = g.density.clone();
        for _ in 0..1000 {
            rho = fp_step(&rho, &s, dt).unwrap();
        }
        let diff = rho.values.iter().zip(&g.density.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");

        let grid = UniformGrid::new(0.0, 1.0, 50).unwrap();
        let flat = ThermoSpec::tabulated(grid, vec![0.0; 50], 1.0, 1.0).unwrap().with_walls(true, true);
        let mut u = GridDensity::new(grid, vec![1.0; 50]).unwrap();
        for _ in 0..1000 {
            u = fp_step(&u, &flat, flat.stability_bound()).unwrap();
        }
        assert!(u.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn step_errors() {
        let s = harmonic(200);
        let g = gibbs_density(&s).unwrap().density;
        assert!(matches!(fp_step(&g, &s, 2.0 * s.stability_bound()), Err(Error::Stability { .. })));
        let grid = UniformGrid::new(-2.0, 2.0, 100).unwrap();
        let narrow = ThermoSpec::new(grid, Potential::Harmonic { stiffness: 1.0 }, 1.0, 1.0).unwrap();
        let rho = gaussian_on_grid(grid, 0.0, 1.0).unwrap();
        assert!(matches!(fp_step(&rho, &narrow, 1e-4), Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn mass_and_positivity() {
        let s = ThermoSpec::new(UniformGrid::new(-3.0, 3.0, 300).unwrap(), Potential::Bistable { height: 1.0 }, 0.5, 1.0).unwrap();
        let mut rho = gaussian_on_grid(s.grid, 1.0, 0.05).unwrap();
        let dt = s.stability_bound();
        for _ in 0..2000 {
            rho = fp_step(&rho, &s, dt).unwrap();
            assert!((rho.mass() - 1.0).abs() < 1e-12);
        }
        assert!(rho.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn ou_mean_relaxes_at_rate_one_over_friction() {
        for friction in [1.0, 2.0] {
            let s = ThermoSpec::new(UniformGrid::new(-10.0, 10.0, 800).unwrap(), Potential::Harmonic { stiffness: 1.0 }, 1.0, friction).unwrap();
            let mut rho = gaussian_on_grid(s.grid, 2.0, 0.5).unwrap();
            let steps = (1.0 / (0.5 * s.stability_bound())).ceil() as usize;
            let dt = 1.0 / steps as f64;
            for _ in 0..steps {
                rho = fp_step(&rho, &s, dt).unwrap();
            }
            let m = rho.expectation(|x| x);
            let exact = 2.0 * (-1.0 / friction).exp();
            assert!((m / exact - 1.0).abs() < 0.01, "{m} vs {exact}");
        }
    }

    #[test]
    fn equilibrium_report() {
        let s = harmonic(400);
        let g = gibbs_density(&s).unwrap();
        let r = thermo_report(0.0, &g.density, &s, &g).unwrap();
        assert!(r.velocity.iter().all(|v| v.abs() < 1e-10));
        assert!(r.entropy_production.abs() < 1e-12);
        assert!((r.free_energy - g.free_energy).abs() < 1e-10);
        assert!(r.conditional_kl.abs() < 1e-12);
    }

    #[test]
    fn ou_relaxation_identities() {
        let s = harmonic(400);
        let rho0 = gaussian_on_grid(s.grid, 2.0, 1.0).unwrap();
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let reps = relaxation_run(&rho0, &s, 10.0, &times).unwrap();
        let last = reps.last().unwrap();
        assert!(last.free_energy - last.free_energy_eq < 1e-6);
        for r in &reps {
            assert!(r.conditional_kl <= 0.0);
            assert!(r.free_energy >= r.free_energy_eq - 1e-8);
            assert!((r.free_energy - r.free_energy_eq + s.temperature * r.conditional_kl).abs() < 1e-8);
        }
        // F − F* for a unit-variance Gaussian with mean 2 e^{−t}: T m²/2
        let exact = 0.5 * (2.0 * (-1.0f64).exp()).powi(2);
        assert!(((reps[10].free_energy - reps[10].free_energy_eq) / exact - 1.0).abs() < 0.01);
        // entropy balance from finite differences
        for w in reps.windows(3).take(20) {
            let ds = (w[2].entropy - w[0].entropy) / (w[2].time - w[0].time);
            let dh = (w[2].conditional_kl - w[0].conditional_kl) / (w[2].time - w[0].time);
            let df = (w[2].free_energy - w[0].free_energy) / (w[2].time - w[0].time);
            assert!((df + s.temperature * dh).abs() <= 0.02 * df.abs());
            if ds.abs() > 1e-3 {
                assert!((ds - w[1].entropy_rate).abs() <= 0.02 * ds.abs(), "{ds} vs {}", w[1].entropy_rate);
            }
            assert!((df + s.friction * w[1].entropy_production * s.temperature / s.friction).abs() <= 0.02 * df.abs());
        }
    }

    #[test]
    fn bistable_run_is_monotone() {
        let s = ThermoSpec::new(UniformGrid::new(-3.0, 3.0, 300).unwrap(), Potential::Bistable { height: 1.0 }, 0.5, 1.0).unwrap();
        let rho0 = gaussian_on_grid(s.grid, 1.0, 0.02).unwrap();
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let reps = relaxation_run(&rho0, &s, 10.0, &times).unwrap();
        assert_eq!(reps.len(), 51);
    }

    #[test]
    fn run_from_gibbs_is_flat() {
        let s = harmonic(200);
        let g = gibbs_density(&s).unwrap();
        let reps = relaxation_run(&g.density, &s, 2.0, &[0.0, 1.0, 2.0]).unwrap();
        for r in &reps[1..] {
            assert!((r.free_energy - reps[0].free_energy).abs() < 1e-10);
            assert!((r.entropy - reps[0].entropy).abs() < 1e-10);
        }
    }
}
