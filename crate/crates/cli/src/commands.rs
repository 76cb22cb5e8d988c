//! Subcommand arguments and bodies. Each body writes its tables through
//! `Output` and returns a JSON summary for the manifest.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sel_core::calogero::{excited_state_entropy_scan, hermite_entropy_scan, CalogeroSpec, EntropyScan, Extension};
use sel_core::densities::{bessel_ou_entropy, bessel_ou_entropy_uncorrected, erlang_entropy, Density, DensityModel, SurmiseLabel};
use sel_core::entropy::{coarse_entropy, coarse_grain as coarse_masses, differential_entropy, discrete_entropy, kl_divergence};
use sel_core::fokker_planck::{gaussian_on_grid, relaxation_run, Potential, ThermoSpec};
use sel_core::grid::UniformGrid;
use sel_core::maxent::{kl_tilt, solve_kl_min, solve_maxent, AuxFunction, KlConstraint, MomentConstraintSet, Support};
use sel_core::processes::{empirical_entropy_series, gaps, simulate, Observables, ProcessKind, SdeConfig};
use sel_core::rmt::{spacing_from_components, spacing_from_matrix, EnsembleSpec};
use sel_core::rng::{derive_seed, stream};
use sel_core::stats::{ks_one_sample, mean, variance, Histogram};

use crate::acceptance;
use crate::output::{Cell, Output, Table};
use crate::CliError;

fn label(s: &str) -> Result<SurmiseLabel, CliError> {
    s.parse::<SurmiseLabel>().map_err(CliError::from)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub entropy: f64,
    pub l1: Option<f64>,
    pub ks: Option<f64>,
}

impl HistogramSummary {
    pub fn to_json(&self) -> Value {
        json!({
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "entropy": self.entropy,
            "l1": self.l1,
            "ks": self.ks,
        })
    }
}

/// Histogram table with columns (bin_left, bin_right, empirical_density,
/// model_density, abs_diff), followed by keyed summary rows. `abs_diff` is
/// the per-bin difference of probabilities, so its bin rows sum to L1.
/// Without a model the model columns stay blank and only empirical
/// statistics are summarized.
pub fn emit_histogram(
    samples: &[f64],
    bins: usize,
    lo: f64,
    hi: f64,
    model_cdf: Option<&dyn Fn(f64) -> f64>,
) -> Result<(Table, HistogramSummary), CliError> {
    let h = Histogram::new(samples, bins, lo, hi)?;
    let mut t = Table::new(&["bin_left", "bin_right", "empirical_density", "model_density", "abs_diff"]);
    let mut l1 = 0.0;
    for i in 0..h.bins() {
        let (a, b) = h.edges(i);
        let (md, diff) = match model_cdf {
            Some(f) => {
                let q = f(b) - f(a);
                let d = (h.probability(i) - q).abs();
                l1 += d;
                (Cell::Num(q / h.width()), Cell::Num(d))
            }
            None => (Cell::Empty, Cell::Empty),
        };
        t.push(vec![a.into(), b.into(), h.density(i).into(), md, diff]);
    }
    let ks = match model_cdf {
        Some(f) => Some(ks_one_sample(samples, f)?),
        None => None,
    };
    let s = HistogramSummary {
        count: samples.len(),
        mean: mean(samples),
        variance: if samples.len() > 1 { variance(samples) } else { 0.0 },
        entropy: h.entropy(),
        l1: model_cdf.map(|_| l1),
        ks,
    };
    let keyed = |k: &str, v: Cell| vec![k.into(), Cell::Empty, Cell::Empty, Cell::Empty, v];
    t.push(keyed("count", s.count.into()));
    t.push(keyed("mean", s.mean.into()));
    t.push(keyed("variance", s.variance.into()));
    t.push(keyed("entropy", s.entropy.into()));
    if let (Some(l1), Some(ks)) = (s.l1, s.ks) {
        t.push(keyed("l1", l1.into()));
        t.push(keyed("ks", ks.into()));
    }
    Ok((t, s))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CatalogArgs {}

pub fn catalog(_: &CatalogArgs, out: &mut Output) -> Result<Value, CliError> {
    let mut t = Table::new(&["label", "c", "beta", "alpha", "b", "mean", "variance", "entropy"]);
    for l in SurmiseLabel::ALL {
        let m = DensityModel::surmise(l);
        let (c, beta, alpha, b) = m.coefficients();
        t.push(vec![l.name().into(), c.into(), beta.into(), alpha.into(), b.into(), m.mean().into(), m.variance().into(), m.shannon_entropy_closed()?.into()]);
    }
    out.table("catalog", &t)?;
    Ok(json!({ "entries": SurmiseLabel::ALL.len() }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    All,
    Surmise,
    Erlang,
    BesselOu,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EntropyTableArgs {
    #[arg(long, value_enum, default_value_t = Family::All)]
    pub family: Family,
}

pub fn entropy_table(a: &EntropyTableArgs, out: &mut Output) -> Result<Value, CliError> {
    let mut t = Table::new(&["family", "params", "closed", "quadrature", "abs_diff", "uncorrected"]);
    let mut worst: f64 = 0.0;
    let mut row = |t: &mut Table, fam: &str, params: String, m: DensityModel, closed: f64, uncorrected: Option<f64>| -> Result<(), CliError> {
        let q = differential_entropy(&m)?;
        worst = worst.max((closed - q).abs());
        t.push(vec![fam.into(), params.into(), closed.into(), q.into(), (closed - q).abs().into(), uncorrected.into()]);
        Ok(())
    };
    let all = a.family == Family::All;
    if all || a.family == Family::Surmise {
        for l in SurmiseLabel::ALL {
            let m = DensityModel::surmise(l);
            row(&mut t, "surmise", l.name().into(), m, m.shannon_entropy_closed()?, None)?;
        }
    }
    if all || a.family == Family::Erlang {
        for rate in 1..=5 {
            for shape in 1..=5 {
                let m = DensityModel::erlang(rate as f64, shape)?;
                row(&mut t, "erlang", format!("rate={rate};shape={shape}"), m, erlang_entropy(rate as f64, shape), None)?;
            }
        }
    }
    if all || a.family == Family::BesselOu {
        for n in 1..=6 {
            let m = DensityModel::bessel_ou(n)?;
            row(&mut t, "bessel_ou", format!("n={n}"), m, bessel_ou_entropy(n), Some(bessel_ou_entropy_uncorrected(n)))?;
        }
    }
    let rows = t.rows.len();
    out.table("entropy_table", &t)?;
    Ok(json!({ "rows": rows, "max_abs_diff": worst }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoarseGrainArgs {
    #[arg(long, default_value = "goe")]
    pub density: String,
    /// Interval length L; defaults to where the tail mass falls below 1e-14.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub cells: usize,
    /// Number of grid doublings after the first grid.
    #[arg(long, default_value_t = 6)]
    pub levels: u32,
}

/// Rows (N, Δs, S(μ), S(μ) + ln Δs, S(ρ), |error|, error ratio).
pub fn coarse_grain_table(m: &DensityModel, length: f64, cells: usize, levels: u32) -> Result<Table, CliError> {
    let s = differential_entropy(m)?;
    let mut t = Table::new(&["cells", "delta", "discrete_entropy", "coarse_entropy", "differential_entropy", "abs_error", "ratio"]);
    let mut prev: Option<f64> = None;
    for k in 0..=levels {
        let n = cells << k;
        let g = coarse_masses(m, length, n)?;
        let ce = coarse_entropy(&g);
        let err = (ce - s).abs();
        t.push(vec![n.into(), g.cell_width.into(), discrete_entropy(&g).into(), ce.into(), s.into(), err.into(), prev.map(|p| err / p).into()]);
        prev = Some(err);
    }
    Ok(t)
}

pub fn coarse_grain(a: &CoarseGrainArgs, out: &mut Output) -> Result<Value, CliError> {
    let m = DensityModel::surmise(label(&a.density)?);
    let length = a.length.unwrap_or_else(|| m.upper_cutoff(1e-14));
    let t = coarse_grain_table(&m, length, a.cells, a.levels)?;
    let worst = (1..t.rows.len()).filter_map(|i| t.num(i, "ratio")).fold(0.0, f64::max);
    out.table("coarse_grain", &t)?;
    Ok(json!({ "density": a.density, "length": length, "max_ratio": worst }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportKind {
    HalfLine,
    FullLine,
    Interval,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MaxentArgs {
    #[arg(long, value_enum, default_value_t = SupportKind::HalfLine)]
    pub support: SupportKind,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Comma-separated `power:value` pairs, e.g. `1:1,2:1.5`.
    #[arg(long, default_value = "1:1")]
    pub moments: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Points of the tabulated density.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

fn parse_moments(s: &str) -> Result<Vec<(u32, f64)>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once(':').ok_or_else(|| CliError::Usage(format!("moment `{p}` is not power:value")))?;
            let k = k.trim().parse::<u32>().map_err(|e| CliError::Usage(format!("moment power `{k}`: {e}")))?;
            let v = v.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("moment value `{v}`: {e}")))?;
            Ok((k, v))
        })
        .collect()
}

fn density_table<D: Density + ?Sized>(d: &D, lo: f64, hi: f64, points: usize) -> Table {
    let mut t = Table::new(&["x", "density"]);
    let n = points.max(2);
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        t.push(vec![x.into(), d.value(x).into()]);
    }
    t
}

pub fn maxent(a: &MaxentArgs, out: &mut Output) -> Result<Value, CliError> {
    let support = match a.support {
        SupportKind::HalfLine => Support::HalfLine,
        SupportKind::FullLine => Support::FullLine,
        SupportKind::Interval => {
            let (Some(lo), Some(hi)) = (a.lo, a.hi) else {
                return Err(CliError::Usage("an interval support needs --lo and --hi".into()));
            };
            Support::Interval { lo, hi }
        }
    };
    let c = MomentConstraintSet::new(support, &parse_moments(&a.moments)?)?;
    let sol = solve_maxent(&c, a.tol)?;
    let d = sol.density();
    let br = d.breaks();
    let (lo, hi) = (br[0], br[br.len() - 1]);
    out.table("maxent_density", &density_table(&d, lo, hi, a.points))?;
    let mut trace = Table::new(&["iteration", "residual", "objective"]);
    for s in &sol.trace {
        trace.push(vec![s.iteration.into(), s.residual.into(), s.objective.into()]);
    }
    out.table("maxent_trace", &trace)?;
    let v = serde_json::to_value(&sol).map_err(|e| CliError::Io(e.to_string()))?;
    out.json("maxent_solution", &v)?;
    Ok(json!({ "entropy": sol.entropy, "multipliers": sol.multipliers, "iterations": sol.iterations, "converged": sol.converged }))
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KlFitArgs {
    /// `exponential`, `half_gaussian`, or any catalog label.
    #[arg(long, default_value = "exponential")]
    pub reference: String,
    /// Rate of the exponential or σ² of the half-line Gaussian.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Target ⟨T⟩.
    #[arg(long, conflicts_with = "lambda")]
    pub theta: Option<f64>,
    /// Prescribed multiplier instead of a target.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// T(x); −ln x unless a tabulated function is given through --config.
    #[arg(skip)]
    pub aux: Option<AuxFunction>,
}

fn reference_model(name: &str, scale: Option<f64>) -> Result<DensityModel, CliError> {
    match name.to_ascii_lowercase().replace('-', "_").as_str() {
        "exponential" => Ok(DensityModel::erlang(scale.unwrap_or(1.0), 1)?),
        "half_gaussian" => Ok(DensityModel::half_line_gaussian(scale.unwrap_or(0.5))?),
        other => Ok(DensityModel::surmise(label(other)?)),
    }
}

pub fn kl_fit(a: &KlFitArgs, out: &mut Output) -> Result<Value, CliError> {
    let reference = reference_model(&a.reference, a.scale)?;
    let aux = a.aux.clone().unwrap_or(AuxFunction::NegLog);
    let sol = match (a.theta, a.lambda) {
        (Some(theta), None) => solve_kl_min(&KlConstraint { reference, aux, theta }, a.tol)?,
        (None, Some(lambda)) => kl_tilt(&reference, &aux, lambda)?,
        _ => return Err(CliError::Usage("give exactly one of --theta and --lambda".into())),
    };
    let kl = kl_divergence(&sol.density, &reference)?;
    let br = sol.density.breaks();
    out.table("kl_density", &density_table(&sol.density, br[0], br[br.len() - 1], a.points))?;
    Ok(json!({
        "reference": reference,
        "lambda": sol.lambda,
        "normalization": sol.normalization,
        "achieved_theta": sol.achieved_theta,
        "kl_to_reference": kl,
        "entropy": differential_entropy(&sol.density)?,
        "iterations": sol.iterations,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingSource {
    /// Eigenvalue gaps of sampled 2×2 matrices.
    Matrix,
    /// Norms of independent Gaussian components.
    Components,
    /// Direct draws from the closed-form law.
    Surmise,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpacingArgs {
    #[arg(long, default_value = "goe")]
    pub ensemble: String,
    #[arg(long, value_enum, default_value_t = SpacingSource::Matrix)]
    pub source: SpacingSource,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
}

fn dyson_index_of(l: SurmiseLabel) -> Result<u32, CliError> {
    match l {
        SurmiseLabel::Goe => Ok(1),
        SurmiseLabel::Gue => Ok(2),
        SurmiseLabel::Gse => Ok(4),
        _ => Err(sel_core::Error::UnsupportedClass(format!("no matrix ensemble for `{l}`")).into()),
    }
}

fn components_of(l: SurmiseLabel) -> Result<u32, CliError> {
    (1..=5)
        .find(|k| SurmiseLabel::for_components(*k).ok() == Some(l))
        .ok_or_else(|| sel_core::Error::UnsupportedClass(format!("`{l}` is not a norm of Gaussian components")).into())
}

pub fn spacing_samples(l: SurmiseLabel, source: SpacingSource, seed: u64, count: usize) -> Result<Vec<f64>, CliError> {
    Ok(match source {
        SpacingSource::Matrix => spacing_from_matrix(&EnsembleSpec::dyson_scaled(dyson_index_of(l)?, 2)?, derive_seed(seed, 1), count)?,
        SpacingSource::Components => spacing_from_components(components_of(l)?, derive_seed(seed, 2), count)?,
        SpacingSource::Surmise => DensityModel::surmise(l).sample(&mut stream(derive_seed(seed, 3), 0), count)?,
    })
}

pub fn spacing(a: &SpacingArgs, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let l = label(&a.ensemble)?;
    let xs = spacing_samples(l, a.source, seed, a.samples)?;
    let m = DensityModel::surmise(l);
    let cdf = |x: f64| m.cdf(x);
    let (t, s) = emit_histogram(&xs, a.bins, a.lo, a.hi, Some(&cdf))?;
    out.table("spacing_histogram", &t)?;
    let v = json!({ "ensemble": l.name(), "histogram": s.to_json() });
    out.json("spacing_summary", &v)?;
    Ok(v)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DysonArgs {
    #[arg(long, default_value_t = 1)]
    pub beta: u32,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Confinement scale a²; β n when omitted.
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 50.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Smallest sub-step; 1e-8 · dt when omitted.
    #[arg(long)]
    pub dt_min: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
    /// Trajectories written out in full.
    #[arg(long, default_value_t = 0)]
    pub dump_paths: usize,
    /// Equally spaced snapshot times for the entropy series.
    #[arg(long, default_value_t = 0)]
    pub reports: usize,
}

fn report_times(t_final: f64, reports: usize) -> Vec<f64> {
    (1..=reports).map(|i| t_final * i as f64 / reports as f64).collect()
}

fn trajectories_table(bundle: &sel_core::processes::SimulationBundle, dim: usize) -> Table {
    let mut headers = vec!["path_id".to_string(), "t".to_string()];
    headers.extend((0..dim).map(|i| format!("position_{i}")));
    let h: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut t = Table::new(&h);
    for (p, traj) in &bundle.trajectories {
        for s in traj {
            let mut row: Vec<Cell> = vec![(*p).into(), s.time.into()];
            row.extend(s.positions.iter().map(|x| Cell::Num(*x)));
            t.push(row);
        }
    }
    t
}

fn entropy_series_table(series: &[(f64, f64)]) -> Table {
    let mut t = Table::new(&["t", "entropy"]);
    for (time, s) in series {
        t.push(vec![(*time).into(), (*s).into()]);
    }
    t
}

pub fn dyson(a: &DysonArgs, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let kind = ProcessKind::Dyson { dyson_index: a.beta, n: a.n, a2: a.a2 };
    let cfg = SdeConfig::new(a.dt, a.dt_min.unwrap_or(a.dt * 1e-8), seed)?;
    let obs = Observables { report_times: report_times(a.t_final, a.reports), dump_paths: a.dump_paths, initial: None };
    let b = simulate(kind, &cfg, a.t_final, a.paths, &obs)?;
    let g = gaps(&b.final_positions);
    let m = DensityModel::surmise(SurmiseLabel::for_dyson_index(a.beta)?);
    let cdf = |x: f64| m.cdf(x);
    let (t, s) = emit_histogram(&g, a.bins, 0.0, a.hi, Some(&cdf))?;
    out.table("dyson_gaps", &t)?;
    if a.dump_paths > 0 {
        out.table("dyson_trajectories", &trajectories_table(&b, a.n))?;
    }
    if a.reports > 0 {
        out.table("dyson_entropy_series", &entropy_series_table(&empirical_entropy_series(&b, a.bins, 0.0, a.hi)?))?;
    }
    let sq: Vec<f64> = b.final_positions.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
    let v = json!({
        "gaps": s.to_json(),
        "ordering_violations": b.ordering_violations,
        "accepted_steps": b.counts.accepted,
        "rejected_steps": b.counts.rejected,
        "mean_sum_squares": if sq.is_empty() { Value::Null } else { json!(mean(&sq)) },
    });
    out.json("dyson_summary", &v)?;
    Ok(v)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BouArgs {
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 20.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long)]
    pub dt_min: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 0)]
    pub dump_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub reports: usize,
}

pub fn bou(a: &BouArgs, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let kind = ProcessKind::BesselOu { n: a.n };
    let cfg = SdeConfig::new(a.dt, a.dt_min.unwrap_or(a.dt * 1e-8), seed)?;
    let obs = Observables { report_times: report_times(a.t_final, a.reports), dump_paths: a.dump_paths, initial: Some(vec![a.r0]) };
    let b = simulate(kind, &cfg, a.t_final, a.paths, &obs)?;
    let r: Vec<f64> = b.final_positions.iter().map(|x| x[0]).collect();
    let m = DensityModel::bessel_ou(a.n)?;
    let cdf = |x: f64| m.cdf(x);
    let (t, s) = emit_histogram(&r, a.bins, 0.0, a.hi, Some(&cdf))?;
    out.table("bou_histogram", &t)?;
    if a.dump_paths > 0 {
        out.table("bou_trajectories", &trajectories_table(&b, 1))?;
    }
    if a.reports > 0 {
        out.table("bou_entropy_series", &entropy_series_table(&empirical_entropy_series(&b, a.bins, 0.0, a.hi)?))?;
    }
    let v = json!({
        "radii": s.to_json(),
        "accepted_steps": b.counts.accepted,
        "rejected_steps": b.counts.rejected,
    });
    out.json("bou_summary", &v)?;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    Bistable,
    BesselOu,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FpThermoArgs {
    #[arg(long, value_enum, default_value_t = PotentialKind::Harmonic)]
    pub potential: PotentialKind,
    /// Stiffness, barrier height, or radial dimension.
    #[arg(long, default_value_t = 1.0)]
    pub strength: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 1.0)]
    pub friction: f64,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 400)]
    pub cells: usize,
    /// Mean and variance of the Gaussian start.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub var0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 100)]
    pub reports: usize,
}

pub fn thermo_spec(a: &FpThermoArgs) -> Result<ThermoSpec, CliError> {
    let pot = match a.potential {
        PotentialKind::Harmonic => Potential::Harmonic { stiffness: a.strength },
        PotentialKind::Bistable => Potential::Bistable { height: a.strength },
        PotentialKind::BesselOu => {
            if a.strength.fract() != 0.0 || a.strength < 1.0 {
                return Err(sel_core::Error::InvalidParameter(format!("radial dimension must be a positive integer, got {}", a.strength)).into());
            }
            Potential::BesselOu { n: a.strength as u32 }
        }
    };
    Ok(ThermoSpec::new(UniformGrid::new(a.lo, a.hi, a.cells)?, pot, a.temperature, a.friction)?)
}

/// Thermodynamic time series with columns (t, S, U, F, F_star, S_int_rate,
/// Q_rate, H_c, S_rate).
pub fn thermo_table(reports: &[sel_core::fokker_planck::ThermoReport]) -> Table {
    let mut t = Table::new(&["t", "S", "U", "F", "F_star", "S_int_rate", "Q_rate", "H_c", "S_rate"]);
    for r in reports {
        t.push(vec![
            r.time.into(),
            r.entropy.into(),
            r.energy.into(),
            r.free_energy.into(),
            r.free_energy_eq.into(),
            r.entropy_production.into(),
            r.heat_rate.into(),
            r.conditional_kl.into(),
            r.entropy_rate.into(),
        ]);
    }
    t
}

/// Largest relative mismatch between the entropy change across three
/// consecutive reports and the three-point (Simpson) integral of the
/// flux-implied entropy rate, over windows where |ΔS|/Δt > `floor`.
pub fn entropy_balance_error(reports: &[sel_core::fokker_planck::ThermoReport], floor: f64) -> f64 {
    reports
        .windows(3)
        .filter_map(|w| {
            let (h1, h2) = (w[1].time - w[0].time, w[2].time - w[1].time);
            if !(h1 > 0.0 && h2 > 0.0) {
                return None;
            }
            let ds = w[2].entropy - w[0].entropy;
            let integral = (h1 + h2) / 6.0
                * ((2.0 - h2 / h1) * w[0].entropy_rate + (h1 + h2).powi(2) / (h1 * h2) * w[1].entropy_rate + (2.0 - h1 / h2) * w[2].entropy_rate);
            (ds.abs() > floor * (h1 + h2)).then(|| (ds - integral).abs() / ds.abs())
        })
        .fold(0.0, f64::max)
}

pub fn fp_thermo(a: &FpThermoArgs, out: &mut Output) -> Result<Value, CliError> {
    let spec = thermo_spec(a)?;
    let rho0 = gaussian_on_grid(spec.grid, a.x0, a.var0)?;
    let times: Vec<f64> = (0..=a.reports).map(|i| a.t_final * i as f64 / a.reports.max(1) as f64).collect();
    let reps = relaxation_run(&rho0, &spec, a.t_final, &times)?;
    out.table("thermo", &thermo_table(&reps))?;
    let last = reps.last().expect("at least the t = 0 report");
    Ok(json!({
        "final_free_energy_gap": last.free_energy - last.free_energy_eq,
        "entropy_balance_max_rel_error": entropy_balance_error(&reps, 1e-3),
        "reports": reps.len(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionArg {
    #[default]
    Odd,
    Even,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CalogeroArgs {
    /// Coupling γ of H = −d²/dx² + x² + γ/x².
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub n_max: u32,
    #[arg(long, default_value_t = 3000)]
    pub cells: usize,
    #[arg(long, value_enum, default_value_t = ExtensionArg::Odd)]
    pub extension: ExtensionArg,
    /// Scan Hermite functions of the full-line oscillator instead.
    #[arg(long, default_value_t = false)]
    pub harmonic: bool,
}

pub fn scan_table(scan: &EntropyScan) -> Table {
    let mut t = Table::new(&["n", "E_n", "S_q", "S_p", "sum", "deltaX", "deltaP", "product"]);
    for r in &scan.rows {
        t.push(vec![r.n.into(), r.energy.into(), r.s_q.into(), r.s_p.into(), r.sum.into(), r.delta_x.into(), r.delta_p.into(), r.product.into()]);
    }
    t
}

pub fn calogero(a: &CalogeroArgs, out: &mut Output) -> Result<Value, CliError> {
    let ext = match a.extension {
        ExtensionArg::Odd => Extension::Odd,
        ExtensionArg::Even => Extension::Even,
    };
    let scan = if a.harmonic {
        hermite_entropy_scan(a.n_max, 12.0, a.cells)?
    } else {
        CalogeroSpec::Singular(a.gamma).validate()?;
        excited_state_entropy_scan(a.gamma, a.n_max, a.cells, ext)?
    };
    out.table("calogero_scan", &scan_table(&scan))?;
    let bound = 1.0 + std::f64::consts::PI.ln();
    let min_slack = scan.rows.iter().map(|r| r.sum - bound).fold(f64::INFINITY, f64::min);
    Ok(json!({ "ground_state_minimal": scan.ground_state_minimal, "min_entropic_slack": min_slack }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Acceptance,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Acceptance)]
    pub suite: Suite,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
}

pub fn verify(a: &VerifyArgs, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let results = acceptance::run_suite(seed, &a.only);
    for r in &results {
        println!("{}", r.line());
    }
    out.table("acceptance", &acceptance::results_table(&results))?;
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    Ok(json!({
        "criteria": results.iter().map(|r| r.id).collect::<Vec<_>>(),
        "passed": results.iter().filter(|r| r.passed).count(),
        "failed": failed,
    }))
}
