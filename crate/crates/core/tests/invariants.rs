use proptest::prelude::*;
use sel_core::densities::{bessel_ou_entropy, erlang_entropy, DensityModel, SurmiseLabel};
use sel_core::entropy::{coarse_grain, discrete_entropy, kl_divergence, CoarseGrid};
use sel_core::grid::{GridDensity, UniformGrid};
use sel_core::processes::bessel_ou_transition_pdf;
use sel_core::rmt::symmetric_eigenvalues;
use sel_core::special::{digamma, gamma_p, gamma_q, ln_gamma};

fn label() -> impl Strategy<Value = SurmiseLabel> {
    prop::sample::select(SurmiseLabel::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(x in 0.1f64..40.0) {
        let lhs = ln_gamma(x + 1.0).unwrap();
        let rhs = ln_gamma(x).unwrap() + x.ln();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        prop_assert!((d - 1.0 / x).abs() < 1e-12 * (1.0 + 1.0 / x));
    }

    #[test]
    fn incomplete_gamma_complements(a in 0.1f64..20.0, x in 0.0f64..60.0) {
        let s = gamma_p(a, x).unwrap() + gamma_q(a, x).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone_and_bounded(l in label(), a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let m = DensityModel::surmise(l);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (fa, fb) = (m.cdf(lo), m.cdf(hi));
        prop_assert!((0.0..=1.0).contains(&fa) && (0.0..=1.0).contains(&fb));
        prop_assert!(fb >= fa);
    }

    #[test]
    fn erlang_entropy_falls_with_rate(rate in 0.2f64..8.0, shape in 1u32..10) {
        // scaling by c shifts the entropy by −ln c
        let s1 = erlang_entropy(rate, shape);
        let s2 = erlang_entropy(2.0 * rate, shape);
        prop_assert!((s1 - s2 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bessel_ou_entropy_is_finite(n in 1u32..40) {
        prop_assert!(bessel_ou_entropy(n).is_finite());
    }

    #[test]
    fn kl_is_nonnegative(a in label(), b in label()) {
        let p = DensityModel::surmise(a);
        let q = DensityModel::surmise(b);
        let v = kl_divergence(&p, &q).unwrap();
        prop_assert!(v >= 0.0);
        if a == b {
            prop_assert!(v < 1e-12);
        }
    }

    #[test]
    fn grid_kl_is_nonnegative(vals in prop::collection::vec(0.01f64..5.0, 8), wts in prop::collection::vec(0.01f64..5.0, 8)) {
        let g = UniformGrid::new(0.0, 2.0, 8).unwrap();
        let p = GridDensity::new(g, vals).unwrap().normalized().unwrap();
        let q = GridDensity::new(g, wts).unwrap().normalized().unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
    }

    #[test]
    fn discrete_entropy_is_bounded(ws in prop::collection::vec(0.0f64..1.0, 1..64)) {
        let total: f64 = ws.iter().sum();
        prop_assume!(total > 1e-6);
        let n = ws.len();
        let g = CoarseGrid::new(1.0, ws.into_iter().map(|w| w / total).collect()).unwrap();
        let s = discrete_entropy(&g);
        prop_assert!(s >= 0.0 && s <= (n as f64).ln() + 1e-12);
    }

    #[test]
    fn coarse_masses_sum_to_one(l in label(), cells in 4usize..400) {
        let g = coarse_grain(&DensityModel::surmise(l), 20.0, cells).unwrap();
        prop_assert!((g.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_positive(n in 2u32..7, r in 0.01f64..4.0, rp in 0.01f64..4.0, t in 0.05f64..10.0) {
        let p = bessel_ou_transition_pdf(n, rp, r, t).unwrap();
        prop_assert!(p >= 0.0 && p.is_finite());
    }

    #[test]
    fn eigenvalues_keep_trace_and_norm(entries in prop::collection::vec(-3.0f64..3.0, 15)) {
        let n = 5;
        let mut a = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                a[i * n + j] = entries[k];
                a[j * n + i] = entries[k];
                k += 1;
            }
        }
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let fro: f64 = a.iter().map(|v| v * v).sum();
        prop_assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-10);
        prop_assert!((ev.iter().map(|v| v * v).sum::<f64>() - fro).abs() < 1e-9 * (1.0 + fro));
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }
}
