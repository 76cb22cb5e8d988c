//! Bessel, Bessel–Ornstein–Uhlenbeck and Dyson eigenvalue diffusions.
//!
//! All three are integrated by Euler–Maruyama with unit-variance noise per
//! unit time. A proposal that leaves the admissible region (r ≤ 0, or
//! eigenvalues out of strict order) is discarded and retried with half the
//! step; every call to a `*_step` function advances exactly `dt_base`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::rmt::EnsembleSpec;
use crate::special::{ln_bessel_i, lgamma};
use crate::stats::Histogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub time: f64,
    pub positions: Vec<f64>,
}

impl TrajectoryState {
    pub fn new(time: f64, positions: Vec<f64>) -> Self {
        Self { time, positions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt_base: f64,
    pub dt_min: f64,
    pub seed: u64,
    /// Retry rejected proposals with halved steps; otherwise a rejection
    /// is an immediate step-floor error.
    pub adaptive: bool,
}

impl SdeConfig {
    pub fn new(dt_base: f64, dt_min: f64, seed: u64) -> Result<Self> {
        let c = Self { dt_base, dt_min, seed, adaptive: true };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_base && self.dt_base.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt_min ≤ dt_base, got dt_min = {}, dt_base = {}",
                self.dt_min, self.dt_base
            )));
        }
        Ok(())
    }
}

/// Source of standard normal increments. Any `Rng` qualifies; `ZeroNoise`
/// turns the SDE into its drift ODE.
pub trait GaussianNoise {
    fn gaussian(&mut self) -> f64;
}

impl<R: Rng + ?Sized> GaussianNoise for R {
    fn gaussian(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl GaussianNoise for ZeroNoise {
    fn gaussian(&mut self) -> f64 {
        0.0
    }
}

/// Accepted and rejected proposals of one step or run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub accepted: u64,
    pub rejected: u64,
}

impl std::ops::AddAssign for StepCounts {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
    }
}

/// Largest drift displacement of one sub-step, as a fraction of the local
/// length scale (r, or the smallest gap), down to sub-steps of `dt_min`.
/// Without it a near-collision sends the 1/r drift far past the equilibrium.
const DRIFT_FRACTION: f64 = 0.1;

fn advance<N, B, A, L>(
    state: &TrajectoryState,
    cfg: &SdeConfig,
    noise: &mut N,
    drift: B,
    admissible: A,
    length_scale: L,
) -> Result<(TrajectoryState, StepCounts)>
where
    N: GaussianNoise + ?Sized,
    B: Fn(&[f64], &mut [f64]),
    A: Fn(&[f64]) -> bool,
    L: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let target = state.time + cfg.dt_base;
    let mut t = state.time;
    let mut x = state.positions.clone();
    let mut b = vec![0.0; x.len()];
    let mut prop = vec![0.0; x.len()];
    let mut dt = cfg.dt_base;
    let mut counts = StepCounts::default();
    // the last sub-step lands exactly on `target`
    while t < target {
        drift(&x, &mut b);
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cap = if bmax > 0.0 { DRIFT_FRACTION * length_scale(&x) / bmax } else { f64::INFINITY };
        let h = dt.min(cap.max(cfg.dt_min)).min(target - t);
        let sh = h.sqrt();
        for i in 0..x.len() {
            prop[i] = x[i] + b[i] * h + sh * noise.gaussian();
        }
        if admissible(&prop) {
            std::mem::swap(&mut x, &mut prop);
            t = if target - t <= h { target } else { t + h };
            counts.accepted += 1;
            dt = (2.0 * dt).min(cfg.dt_base);
        } else {
            counts.rejected += 1;
            dt *= 0.5;
            if !cfg.adaptive || dt < cfg.dt_min {
                return Err(Error::StepFloor { time: t, dt_min: cfg.dt_min });
            }
        }
    }
    Ok((TrajectoryState { time: target, positions: x }, counts))
}

fn check_radial(n: u32, state: &TrajectoryState) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter("radial dimension must be at least 1".into()));
    }
    match state.positions.as_slice() {
        [r] if *r > 0.0 && r.is_finite() => Ok(()),
        _ => Err(Error::Domain(format!("radial state must be one positive position, got {:?}", state.positions))),
    }
}

/// (n − 1)/2r
pub fn bessel_drift(n: u32, r: f64) -> f64 {
    (n as f64 - 1.0) / (2.0 * r)
}

/// (n − 1)/2r − r
pub fn bessel_ou_drift(n: u32, r: f64) -> f64 {
    bessel_drift(n, r) - r
}

/// V(r) = ½[r² − (n − 1) ln r]; the drift is −V'(r).
pub fn bessel_ou_potential(n: u32, r: f64) -> f64 {
    0.5 * (r * r - (n as f64 - 1.0) * r.ln())
}

/// One Euler–Maruyama step of dR = (n−1)/2R dt + dW.
pub fn bessel_step<N: GaussianNoise + ?Sized>(
    n: u32,
    state: &TrajectoryState,
    cfg: &SdeConfig,
    noise: &mut N,
) -> Result<(TrajectoryState, StepCounts)> {
    check_radial(n, state)?;
    advance(state, cfg, noise, |x, b| b[0] = bessel_drift(n, x[0]), |x| x[0] > 0.0, |x| x[0])
}

/// One Euler–Maruyama step of dR = [(n−1)/2R − R] dt + dW.
pub fn bessel_ou_step<N: GaussianNoise + ?Sized>(
    n: u32,
    state: &TrajectoryState,
    cfg: &SdeConfig,
    noise: &mut N,
) -> Result<(TrajectoryState, StepCounts)> {
    check_radial(n, state)?;
    advance(state, cfg, noise, |x, b| b[0] = bessel_ou_drift(n, x[0]), |x| x[0] > 0.0, |x| x[0])
}

/// ln of the exact Bessel-OU transition density from `r_from` to `r_to`
/// over time `t`, with α = (n − 2)/2:
///
/// p = 2 r^{n−1} e^{−r²} / (1 − e^{−2t}) · exp[−(r² + r'²) e^{−2t}/(1 − e^{−2t})]
///     · (r r' e^{−t})^{−α} I_α(2 r r' e^{−t}/(1 − e^{−2t}))
pub fn bessel_ou_transition_ln_pdf(n: u32, r_from: f64, r_to: f64, t: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("radial dimension must be at least 1".into()));
    }
    if !(r_from > 0.0 && r_to > 0.0 && t > 0.0) || !(r_from.is_finite() && r_to.is_finite() && t.is_finite()) {
        return Err(Error::Domain(format!("kernel needs positive arguments, got r' = {r_from}, r = {r_to}, t = {t}")));
    }
    let alpha = (n as f64 - 2.0) / 2.0;
    let (r, rp) = (r_to, r_from);
    let one_minus = -(-2.0 * t).exp_m1();
    let e2 = (-2.0 * t).exp();
    let z = 2.0 * r * rp * (-t).exp() / one_minus;
    Ok(2f64.ln() + (n as f64 - 1.0) * r.ln() - r * r - one_minus.ln() - (r * r + rp * rp) * e2 / one_minus
        - alpha * (r.ln() + rp.ln() - t)
        + ln_bessel_i(alpha, z)?)
}

pub fn bessel_ou_transition_pdf(n: u32, r_from: f64, r_to: f64, t: f64) -> Result<f64> {
    bessel_ou_transition_ln_pdf(n, r_from, r_to, t).map(f64::exp)
}

/// Stationary density (2/Γ(n/2)) r^{n−1} e^{−r²}.
pub fn bessel_ou_stationary_pdf(n: u32, r: f64) -> f64 {
    if r <= 0.0 {
        return if n == 1 { (2f64.ln() - lgamma(0.5)).exp() } else { 0.0 };
    }
    (2f64.ln() - lgamma(n as f64 / 2.0) + (n as f64 - 1.0) * r.ln() - r * r).exp()
}

/// Drift of eigenvalue j: (β/2)[Σ_{i≠j} 1/(λ_j − λ_i) − λ_j/a²]. With
/// a² = βn the confinement term is −λ_j/2n.
pub fn dyson_drift(dyson_index: u32, a2: f64, lambdas: &[f64], out: &mut [f64]) {
    let half_beta = dyson_index as f64 / 2.0;
    for j in 0..lambdas.len() {
        let mut s = 0.0;
        for i in 0..lambdas.len() {
            if i != j {
                s += 1.0 / (lambdas[j] - lambdas[i]);
            }
        }
        out[j] = half_beta * (s - lambdas[j] / a2);
    }
}

fn min_gap(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0]) && x.iter().all(|v| v.is_finite())
}

/// One Euler–Maruyama step of the Dyson eigenvalue diffusion for `spec`
/// (a² taken from `spec.scale2`); ordering is enforced by rejection.
pub fn dyson_step<N: GaussianNoise + ?Sized>(
    spec: &EnsembleSpec,
    state: &TrajectoryState,
    cfg: &SdeConfig,
    noise: &mut N,
) -> Result<(TrajectoryState, StepCounts)> {
    if !matches!(spec.dyson_index, 1 | 2 | 4) {
        return Err(Error::UnsupportedClass(format!("Dyson index {} is not in {{1, 2, 4}}", spec.dyson_index)));
    }
    if !(spec.scale2 > 0.0) {
        return Err(Error::InvalidParameter(format!("a² must be positive, got {}", spec.scale2)));
    }
    if state.positions.len() < 2 || !strictly_increasing(&state.positions) {
        return Err(Error::Domain(format!("Dyson state must be strictly increasing, got {:?}", state.positions)));
    }
    let (beta, a2) = (spec.dyson_index, spec.scale2);
    advance(state, cfg, noise, |x, b| dyson_drift(beta, a2, x, b), strictly_increasing, min_gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum ProcessKind {
    Bessel { n: u32 },
    BesselOu { n: u32 },
    /// `a2` defaults to β_D n.
    Dyson { dyson_index: u32, n: usize, a2: Option<f64> },
}

impl ProcessKind {
    fn dimension(&self) -> usize {
        match self {
            ProcessKind::Bessel { .. } | ProcessKind::BesselOu { .. } => 1,
            ProcessKind::Dyson { n, .. } => *n,
        }
    }

    /// Radial r = 1, or n equispaced points on [−1, 1].
    pub fn default_initial(&self) -> Vec<f64> {
        match self {
            ProcessKind::Bessel { .. } | ProcessKind::BesselOu { .. } => vec![1.0],
            ProcessKind::Dyson { n, .. } => {
                (0..*n).map(|i| -1.0 + 2.0 * i as f64 / (*n as f64 - 1.0).max(1.0)).collect()
            }
        }
    }

    fn spec(&self) -> Result<Option<EnsembleSpec>> {
        match *self {
            ProcessKind::Dyson { dyson_index, n, a2 } => {
                let a2 = a2.unwrap_or(dyson_index as f64 * n as f64);
                let spec = EnsembleSpec { dyson_index, dim: n, scale2: a2, friction: 1.0 };
                if !matches!(dyson_index, 1 | 2 | 4) {
                    return Err(Error::UnsupportedClass(format!("Dyson index {dyson_index} is not in {{1, 2, 4}}")));
                }
                if n < 2 || !(a2 > 0.0) {
                    return Err(Error::InvalidParameter(format!("Dyson run needs n ≥ 2 and a² > 0, got n = {n}, a² = {a2}")));
                }
                Ok(Some(spec))
            }
            ProcessKind::Bessel { n } | ProcessKind::BesselOu { n } => {
                if n < 1 {
                    return Err(Error::InvalidParameter("radial dimension must be at least 1".into()));
                }
                Ok(None)
            }
        }
    }

    pub fn step<N: GaussianNoise + ?Sized>(
        &self,
        state: &TrajectoryState,
        cfg: &SdeConfig,
        noise: &mut N,
    ) -> Result<(TrajectoryState, StepCounts)> {
        match *self {
            ProcessKind::Bessel { n } => bessel_step(n, state, cfg, noise),
            ProcessKind::BesselOu { n } => bessel_ou_step(n, state, cfg, noise),
            ProcessKind::Dyson { .. } => {
                let spec = self.spec()?.expect("dyson spec");
                dyson_step(&spec, state, cfg, noise)
            }
        }
    }
}

/// What `simulate` records besides the final positions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observables {
    /// Times (rounded to the nearest whole step) at which every path's
    /// positions are stored.
    pub report_times: Vec<f64>,
    /// Full step-by-step trajectories are kept for the first this many paths.
    pub dump_paths: usize,
    /// Overrides the default initial condition.
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationBundle {
    pub kind: ProcessKind,
    pub t_final: f64,
    pub paths: usize,
    /// Final positions per path.
    pub final_positions: Vec<Vec<f64>>,
    /// Actual report times and, per time, the positions of every path.
    pub report_times: Vec<f64>,
    pub snapshots: Vec<Vec<Vec<f64>>>,
    /// (path index, trajectory) for dumped paths.
    pub trajectories: Vec<(usize, Vec<TrajectoryState>)>,
    pub counts: StepCounts,
    /// Accepted states that failed the admissibility check; zero unless the
    /// stepper is broken.
    pub ordering_violations: u64,
}

/// Runs `paths` independent trajectories to `t_final`; path `i` draws from
/// stream `i` of `cfg.seed`. Errors carry the failing path index.
pub fn simulate(kind: ProcessKind, cfg: &SdeConfig, t_final: f64, paths: usize, obs: &Observables) -> Result<SimulationBundle> {
    cfg.validate()?;
    kind.spec()?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_final must be nonnegative, got {t_final}")));
    }
    let initial = obs.initial.clone().unwrap_or_else(|| kind.default_initial());
    if initial.len() != kind.dimension() {
        return Err(Error::InvalidParameter(format!("initial state has {} entries, expected {}", initial.len(), kind.dimension())));
    }
    let steps = (t_final / cfg.dt_base).round() as usize;
    let mut report_steps: Vec<usize> =
        obs.report_times.iter().map(|t| ((t / cfg.dt_base).round() as usize).min(steps)).collect();
    report_steps.sort_unstable();
    report_steps.dedup();
    let admissible = |x: &[f64]| match kind {
        ProcessKind::Dyson { .. } => strictly_increasing(x),
        _ => x[0] > 0.0,
    };

    struct PathOut {
        fin: Vec<f64>,
        snaps: Vec<Vec<f64>>,
        traj: Option<Vec<TrajectoryState>>,
        counts: StepCounts,
        violations: u64,
    }

    let outs: Vec<PathOut> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream(cfg.seed, p as u64);
            let mut state = TrajectoryState::new(0.0, initial.clone());
            let keep = p < obs.dump_paths;
            let mut traj = keep.then(|| vec![state.clone()]);
            let mut snaps = Vec::with_capacity(report_steps.len());
            let mut next = 0;
            let mut counts = StepCounts::default();
            let mut violations = 0;
            for k in 0..=steps {
                while next < report_steps.len() && report_steps[next] == k {
                    snaps.push(state.positions.clone());
                    next += 1;
                }
                if k == steps {
                    break;
                }
                let (s, c) = kind.step(&state, cfg, &mut rng).map_err(|e| Error::Path { index: p, source: Box::new(e) })?;
                // the stepper's clock accumulates dt_base; pin it to the grid
                state = TrajectoryState::new((k + 1) as f64 * cfg.dt_base, s.positions);
                counts += c;
                if !admissible(&state.positions) {
                    violations += 1;
                }
                if let Some(t) = traj.as_mut() {
                    t.push(state.clone());
                }
            }
            Ok(PathOut { fin: state.positions, snaps, traj, counts, violations })
        })
        .collect::<Result<_>>()?;

    let mut counts = StepCounts::default();
    let mut ordering_violations = 0;
    let mut final_positions = Vec::with_capacity(paths);
    let mut snapshots = vec![Vec::with_capacity(paths); report_steps.len()];
    let mut trajectories = Vec::new();
    for (p, o) in outs.into_iter().enumerate() {
        counts += o.counts;
        ordering_violations += o.violations;
        final_positions.push(o.fin);
        for (slot, s) in snapshots.iter_mut().zip(o.snaps) {
            slot.push(s);
        }
        if let Some(t) = o.traj {
            trajectories.push((p, t));
        }
    }
    Ok(SimulationBundle {
        kind,
        t_final: steps as f64 * cfg.dt_base,
        paths,
        final_positions,
        report_times: report_steps.iter().map(|k| *k as f64 * cfg.dt_base).collect(),
        snapshots,
        trajectories,
        counts,
        ordering_violations,
    })
}

/// Per report time, the fixed-bin histogram of radial positions (or of
/// unit-mean gaps for Dyson runs) on [lo, hi].
pub fn snapshot_histograms(bundle: &SimulationBundle, bins: usize, lo: f64, hi: f64) -> Result<Vec<(f64, Histogram)>> {
    bundle
        .report_times
        .iter()
        .zip(&bundle.snapshots)
        .map(|(t, snap)| {
            let xs = match bundle.kind {
                ProcessKind::Dyson { .. } => gaps(snap),
                _ => snap.iter().map(|x| x[0]).collect(),
            };
            Ok((*t, Histogram::new(&xs, bins, lo, hi)?))
        })
        .collect()
}

/// Plug-in entropy of each snapshot histogram.
pub fn empirical_entropy_series(bundle: &SimulationBundle, bins: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    Ok(snapshot_histograms(bundle, bins, lo, hi)?.into_iter().map(|(t, h)| (t, h.entropy())).collect())
}

/// Unit-mean-rescaled nearest-neighbour gaps of a set of ordered positions.
pub fn gaps(positions: &[Vec<f64>]) -> Vec<f64> {
    let mut g: Vec<f64> = positions.iter().flat_map(|x| x.windows(2).map(|w| w[1] - w[0])).collect();
    crate::stats::rescale_unit_mean(&mut g);
    g
}
