//! Shannon and relative entropies of densities, and the coarse-graining
//! construction linking the discrete and differential entropies.

use crate::densities::{Density, DensityModel};
use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, QuadOptions};

/// Masses of a density on N equal cells of [0, L].
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    pub interval_length: f64,
    pub cells: usize,
    pub masses: Vec<f64>,
    pub cell_width: f64,
}

impl CoarseGrid {
    pub fn new(interval_length: f64, masses: Vec<f64>) -> Result<Self> {
        if !(interval_length > 0.0 && interval_length.is_finite()) {
            return Err(Error::InvalidParameter(format!("interval length must be positive, got {interval_length}")));
        }
        if masses.is_empty() {
            return Err(Error::InvalidParameter("coarse grid needs at least one cell".into()));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidParameter("coarse grid masses must be nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("coarse grid masses sum to {total}, not 1")));
        }
        let cells = masses.len();
        Ok(Self { interval_length, cells, masses, cell_width: interval_length / cells as f64 })
    }
}

/// `−Σ μ_j ln μ_j`, in [0, ln N].
pub fn discrete_entropy(grid: &CoarseGrid) -> f64 {
    grid.masses.iter().filter(|m| **m > 0.0).map(|m| -m * m.ln()).sum()
}

/// `−∫ ρ ln ρ`. Cell sum for grid densities, adaptive quadrature otherwise.
/// May be negative.
pub fn differential_entropy(density: &dyn Density) -> Result<f64> {
    if let Some(g) = density.as_grid() {
        return Ok(g.entropy());
    }
    integrate_breaks(
        |x| {
            let l = density.ln_value(x);
            if l.is_finite() {
                -l * l.exp()
            } else {
                0.0
            }
        },
        &density.breaks(),
        QuadOptions::default(),
    )
}

/// `−∫ ρ ln(Δs ρ) = S(ρ) − ln Δs`.
pub fn dimensionless_entropy(density: &dyn Density, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("partition unit must be positive, got {delta}")));
    }
    Ok(differential_entropy(density)? - delta.ln())
}

/// Largest tail mass beyond L that `coarse_grain` accepts.
pub const COARSE_TAIL_LIMIT: f64 = 1e-6;

/// Exact cell masses `μ_j = F(x_{j+1}) − F(x_j)` on N cells of [0, L],
/// renormalized after the tail beyond L is dropped.
pub fn coarse_grain(density: &DensityModel, length: f64, cells: usize) -> Result<CoarseGrid> {
    if !(length > 0.0 && length.is_finite()) || cells == 0 {
        return Err(Error::InvalidParameter(format!("coarse grain needs L > 0 and N ≥ 1, got L = {length}, N = {cells}")));
    }
    let tail = 1.0 - density.cdf(length);
    if tail > COARSE_TAIL_LIMIT {
        return Err(Error::TailMass { cutoff: length, mass: tail, limit: COARSE_TAIL_LIMIT });
    }
    let dx = length / cells as f64;
    let mut prev = 0.0;
    let mut masses: Vec<f64> = (1..=cells)
        .map(|j| {
            let f = density.cdf(j as f64 * dx);
            let m = (f - prev).max(0.0);
            prev = f;
            m
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    CoarseGrid::new(length, masses)
}

/// `S(μ) + ln Δs`, the discrete entropy brought back to the scale of the
/// differential entropy.
pub fn coarse_entropy(grid: &CoarseGrid) -> f64 {
    discrete_entropy(grid) + grid.cell_width.ln()
}

/// `∫ ρ ln(ρ / ρ_ref)`.
///
/// Fails with a support violation wherever ρ > 0 but the reference
/// vanishes. Same-grid pairs use exact cell sums.
pub fn kl_divergence(rho: &dyn Density, reference: &dyn Density) -> Result<f64> {
    if let (Some(a), Some(b)) = (rho.as_grid(), reference.as_grid()) {
        if a.grid == b.grid {
            let dx = a.grid.dx();
            let mut sum = 0.0;
            for (i, (&p, &q)) in a.values.iter().zip(&b.values).enumerate() {
                if p > 0.0 {
                    if q * dx < 1e-300 {
                        return Err(Error::SupportViolation { x: a.grid.center(i) });
                    }
                    sum += dx * p * (p / q).ln();
                }
            }
            return Ok(sum.max(0.0));
        }
    }
    let breaks = rho.breaks();
    // cell midpoints, so an isolated zero of the reference at a break
    // (e.g. s = 0 under level repulsion) is not mistaken for a support gap
    for w in breaks.windows(2) {
        let x = 0.5 * (w[0] + w[1]);
        if rho.value(x) > 0.0 && reference.ln_value(x) == f64::NEG_INFINITY {
            return Err(Error::SupportViolation { x });
        }
    }
    let mut violation = None;
    let v = integrate_breaks(
        |x| {
            let lp = rho.ln_value(x);
            if !lp.is_finite() {
                return 0.0;
            }
            let lq = reference.ln_value(x);
            if lq == f64::NEG_INFINITY {
                violation.get_or_insert(x);
                return 0.0;
            }
            lp.exp() * (lp - lq)
        },
        &breaks,
        QuadOptions::default(),
    )?;
    match violation {
        Some(x) => Err(Error::SupportViolation { x }),
        None => Ok(v.max(0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::SurmiseLabel;
    use crate::grid::{GridDensity, UniformGrid};
    use crate::special::EULER_GAMMA;
    use std::f64::consts::PI;

    fn goe() -> DensityModel {
        DensityModel::surmise(SurmiseLabel::Goe)
    }

    #[test]
    fn discrete_entropy_examples() {
        let n = 16;
        let u = CoarseGrid::new(1.0, vec![1.0 / n as f64; n]).unwrap();
        assert!((discrete_entropy(&u) - (n as f64).ln()).abs() < 1e-14);
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        assert_eq!(discrete_entropy(&CoarseGrid::new(1.0, d).unwrap()), 0.0);
        let g = CoarseGrid::new(1.0, vec![0.25, 0.75]).unwrap();
        let expect = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((discrete_entropy(&g) - expect).abs() < 1e-15);
        assert!(CoarseGrid::new(1.0, vec![0.5, 0.6]).is_err());
        assert!(CoarseGrid::new(1.0, vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn differential_entropy_examples() {
        let e = DensityModel::erlang(1.0, 1).unwrap();
        assert!((differential_entropy(&e).unwrap() - 1.0).abs() < 1e-12);
        let g = DensityModel::half_line_gaussian(PI / 2.0).unwrap();
        let expect = 0.5 * ((PI * PI / 4.0).ln() + 1.0);
        assert!((differential_entropy(&g).unwrap() - expect).abs() < 1e-12);
        let gue = DensityModel::surmise(SurmiseLabel::Gue);
        assert!((differential_entropy(&gue).unwrap() - 0.5287983701909877).abs() < 1e-10);
        assert!((differential_entropy(&goe()).unwrap() - 0.7162428895260663).abs() < 1e-10);
        assert!((differential_entropy(&DensityModel::surmise(SurmiseLabel::P0)).unwrap() - 0.9515827052894549).abs() < 1e-10);
    }

    #[test]
    fn entropy_can_be_negative() {
        let narrow = DensityModel::erlang(50.0, 3).unwrap();
        assert!(differential_entropy(&narrow).unwrap() < 0.0);
    }

    #[test]
    fn dimensionless_entropy_shift() {
        let e = DensityModel::erlang(1.0, 1).unwrap();
        assert!(dimensionless_entropy(&e, std::f64::consts::E).unwrap().abs() < 1e-12);
        let s = differential_entropy(&goe()).unwrap();
        assert_eq!(dimensionless_entropy(&goe(), 1.0).unwrap(), s);
        assert!((dimensionless_entropy(&goe(), 0.1).unwrap() - (s + 10f64.ln())).abs() < 1e-12);
        assert!(dimensionless_entropy(&goe(), 0.0).is_err());
    }

    #[test]
    fn coarse_grain_examples() {
        let g = coarse_grain(&DensityModel::erlang(1.0, 1).unwrap(), 20.0, 2000).unwrap();
        assert!((g.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = coarse_grain(&goe(), 6.0, 600).unwrap();
        let s = differential_entropy(&goe()).unwrap();
        assert!((discrete_entropy(&g) + 0.01f64.ln() - s).abs() < 5e-3);
        assert!(matches!(coarse_grain(&DensityModel::erlang(1.0, 1).unwrap(), 5.0, 10), Err(Error::TailMass { .. })));
    }

    #[test]
    fn coarse_graining_converges_under_refinement() {
        let p0 = DensityModel::surmise(SurmiseLabel::P0);
        let s = differential_entropy(&p0).unwrap();
        let mut prev = f64::INFINITY;
        let mut n = 64;
        while n <= 4096 {
            let err = (coarse_entropy(&coarse_grain(&p0, 8.0, n).unwrap()) - s).abs();
            assert!(err < prev, "N = {n}: {err} vs {prev}");
            prev = err;
            n *= 2;
        }
    }

    #[test]
    fn kl_examples() {
        let e22 = DensityModel::erlang(2.0, 2).unwrap();
        let e11 = DensityModel::erlang(1.0, 1).unwrap();
        assert!(kl_divergence(&e22, &e22).unwrap() < 1e-12);
        let v = kl_divergence(&e22, &e11).unwrap();
        assert!((v - (2f64.ln() - EULER_GAMMA)).abs() < 1e-10);
        assert!((v - 0.11593151565841245).abs() < 1e-10);
        let p0 = DensityModel::surmise(SurmiseLabel::P0);
        let a = kl_divergence(&goe(), &p0).unwrap();
        let b = kl_divergence(&p0, &goe()).unwrap();
        assert!((a - 0.1406245503327396).abs() < 1e-9);
        assert!((b - 0.23992520964327175).abs() < 1e-9);
    }

    #[test]
    fn kl_support_violation() {
        let g = UniformGrid::new(0.0, 1.0, 4).unwrap();
        let p = GridDensity::new(g, vec![1.0; 4]).unwrap();
        let q = GridDensity::new(g, vec![2.0, 2.0, 0.0, 0.0]).unwrap();
        assert!(matches!(kl_divergence(&p, &q), Err(Error::SupportViolation { .. })));
        assert!(kl_divergence(&q, &p).unwrap() > 0.0);
        // a model reference vanishes on the negative half-line
        let wide = GridDensity::new(UniformGrid::new(-1.0, 1.0, 4).unwrap(), vec![0.5; 4]).unwrap();
        assert!(matches!(kl_divergence(&wide, &goe()), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn grid_entropy_is_a_cell_sum() {
        let g = UniformGrid::new(0.0, 1.0, 10).unwrap();
        let d = GridDensity::new(g, vec![1.0; 10]).unwrap();
        assert!(differential_entropy(&d).unwrap().abs() < 1e-15);
    }
}
