use std::f64::consts::PI;

use compo_approx::boolean_fourier::{expand_values, fourier_expand, low_order_approx, sparse_approx, BooleanFunction};
use compo_approx::function::from_fn;
use compo_approx::gaussian::{fit_gaussian_coeffs, fit_to_function, grid_centers, sup_points, DEFAULT_LAMBDA};
use compo_approx::metrics::{fit_scaling_exponent, sup_norm_error, SupMethod};
use compo_approx::targets::{cos4, cos4_value};
use compo_approx::{Domain, Function, PointSet, Samples};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Truncated Chebyshev series of `cos4` on `[-2pi, 2pi]`.
fn chebyshev_cos4(terms: usize) -> impl Fn(f64) -> f64 {
    let nodes = 64;
    let coeffs: Vec<f64> = (0..terms)
        .map(|k| {
            let s: f64 = (0..nodes)
                .map(|j| {
                    let theta = PI * (j as f64 + 0.5) / nodes as f64;
                    cos4_value(2.0 * PI * theta.cos()) * (k as f64 * theta).cos()
                })
                .sum();
            s * if k == 0 { 1.0 } else { 2.0 } / nodes as f64
        })
        .collect();
    move |x| {
        let t = x / (2.0 * PI);
        let (mut prev, mut cur) = (1.0, t);
        let mut sum = coeffs[0];
        for c in &coeffs[1..] {
            sum += c * cur;
            let next = 2.0 * t * cur - prev;
            prev = cur;
            cur = next;
        }
        sum
    }
}

#[test]
fn sup_norm_matches_dense_brute_force() {
    let g = chebyshev_cos4(8);
    let domain = Domain::cube(1, -2.0 * PI, 2.0 * PI).unwrap();
    let est = sup_norm_error(&cos4(), &from_fn(1, |x| g(x[0])), &domain, SupMethod::Grid, 1_000_000).unwrap();
    let n = 1_000_000;
    let brute = (0..n)
        .map(|i| {
            let x = -2.0 * PI + 4.0 * PI * i as f64 / (n - 1) as f64;
            (cos4_value(x) - g(x)).abs()
        })
        .fold(0.0, f64::max);
    assert!((est.error - brute).abs() < 1e-6, "{} vs {brute}", est.error);
    assert!(est.error > 0.1);
}

#[test]
fn sup_norm_symmetry_and_triangle() {
    let domain = Domain::cube(2, -1.0, 1.0).unwrap();
    let f = from_fn(2, |x| (x[0] * 3.0).sin() * x[1]);
    let g = from_fn(2, |x| x[0] * x[1]);
    let h = from_fn(2, |x| 0.2 * x[0] - x[1] * x[1]);
    let d = |a: &dyn Function, b: &dyn Function| sup_norm_error(a, b, &domain, SupMethod::QuasiRandom { seed: 1 }, 4000).unwrap().error;
    assert_eq!(d(&f, &g), d(&g, &f));
    assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h));
}

#[test]
fn noisy_power_law_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pairs: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let n = 10.0 * 2f64.powi(i);
            (n, 3.0 * n.powf(-1.5) * (1.0 + rng.gen_range(-0.01..=0.01)))
        })
        .collect();
    let fit = fit_scaling_exponent(&pairs).unwrap();
    assert!((fit.slope + 1.5).abs() < 0.05);
}

struct LinearityCase {
    coeff_gap: f64,
    coeff_scale: f64,
    value_gap: f64,
    value_scale: f64,
}

fn linearity(m: usize) -> LinearityCase {
    let centers = grid_centers(m, 2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
    let points = PointSet::from_points(2, &pts).unwrap();
    let y1: Vec<f64> = pts.iter().map(|p| (p[0] - p[1]).cos()).collect();
    let y2: Vec<f64> = pts.iter().map(|p| p[0] * p[1] * 0.3).collect();
    let (a, b) = (1.75, -0.6);
    let y3: Vec<f64> = y1.iter().zip(&y2).map(|(u, v)| a * u + b * v).collect();
    let fit = |ys: Vec<f64>| {
        let s = Samples::new(2, points.coords().to_vec(), ys).unwrap();
        fit_gaussian_coeffs(&centers, &s, DEFAULT_LAMBDA).unwrap()
    };
    let (n1, n2, n3) = (fit(y1), fit(y2), fit(y3));
    let gap = |u: &[f64], v: &[f64], w: &[f64]| {
        (0..w.len()).map(|i| (w[i] - (a * u[i] + b * v[i])).abs()).fold(0.0, f64::max)
    };
    let scale = |w: &[f64]| w.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let values = |n: &compo_approx::gaussian::GaussianNet| -> Vec<f64> { pts.iter().map(|p| n.eval(p).unwrap()).collect() };
    let (v1, v2, v3) = (values(&n1), values(&n2), values(&n3));
    LinearityCase {
        coeff_gap: gap(n1.coeffs(), n2.coeffs(), n3.coeffs()),
        coeff_scale: scale(n3.coeffs()),
        value_gap: gap(&v1, &v2, &v3),
        value_scale: scale(&v3),
    }
}

#[test]
fn gaussian_coefficients_are_linear_in_the_data() {
    let c = linearity(1);
    assert!(c.coeff_gap <= 1e-10 * c.coeff_scale, "{:e}", c.coeff_gap);
}

#[test]
fn gaussian_fits_are_linear_in_the_data_when_ill_conditioned() {
    let c = linearity(2);
    assert!(c.value_gap <= 1e-8 * c.value_scale, "{:e}", c.value_gap);
    // Coefficients of the 81-center fit are only determined to about
    // cond(G) * eps.
    assert!(c.coeff_gap <= 1e-5 * c.coeff_scale);
}

#[test]
fn span_members_are_recovered() {
    let centers = grid_centers(2, 1, 1.0).unwrap();
    let pts = centers.points().clone();
    let weights = [0.5, -1.0, 0.25, 2.0, -0.75, 0.1, 1.5, -0.3, 0.8];
    assert_eq!(pts.len(), weights.len());
    let member = from_fn(1, move |x| {
        pts.iter()
            .zip(weights)
            .map(|(c, w)| w * (-(x[0] - c[0]).powi(2)).exp())
            .sum()
    });
    let domain = Domain::cube(1, -7.0, 7.0).unwrap();
    let net = fit_to_function(&centers, &member, &domain, DEFAULT_LAMBDA).unwrap();
    let probe = sup_points(2, 1, 1.0, 0).unwrap();
    let worst = probe
        .iter()
        .map(|x| (net.eval(x).unwrap() - member.eval(x).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn parity_hardness() {
    let t = BooleanFunction::Parity.expand(8).unwrap();
    assert_eq!(low_order_approx(&t, 7).unwrap().1, 1.0);
    assert_eq!(sparse_approx(&t, 1).unwrap().1, 0.0);
}

fn random_table(n: usize, seed: u64) -> Vec<f64> {
    BooleanFunction::Random { seed }.truth_table(n).unwrap()
}

proptest! {
    #[test]
    fn parseval(n in 2usize..=10, seed in any::<u64>()) {
        let values = random_table(n, seed);
        let t = expand_values(&values).unwrap();
        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
        prop_assert!((t.squared_norm() - mean_sq).abs() < 1e-12);
    }

    #[test]
    fn reconstruct_inverts_expansion(n in 1usize..=10, seed in any::<u64>()) {
        let values = random_table(n, seed);
        let t = expand_values(&values).unwrap();
        for (m, v) in values.iter().enumerate() {
            let x = compo_approx::boolean_fourier::cube_point(n, m);
            prop_assert!((t.reconstruct(&x).unwrap() - v).abs() < 1e-12);
        }
        let again = expand_values(&t.to_values()).unwrap();
        for (a, b) in again.coeffs().iter().zip(t.coeffs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn approximation_errors_are_monotone(n in 2usize..=8, seed in any::<u64>()) {
        let t = expand_values(&random_table(n, seed)).unwrap();
        let low: Vec<f64> = (0..=n).map(|k| low_order_approx(&t, k).unwrap().1).collect();
        prop_assert!(low.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(low[n], 0.0);
        let sparse: Vec<f64> = (1..=1usize << n).map(|k| sparse_approx(&t, k).unwrap().1).collect();
        prop_assert!(sparse.windows(2).all(|w| w[1] <= w[0]));
        for k in 0..=n {
            let budget = (0..1usize << n).filter(|s| s.count_ones() as usize <= k).count();
            prop_assert!(sparse_approx(&t, budget).unwrap().1 <= low[k] + 1e-15);
        }
    }

    #[test]
    fn expansion_of_a_closure_matches_the_table(seed in any::<u64>()) {
        let values = random_table(4, seed);
        let table = values.clone();
        let direct = fourier_expand(4, move |x| {
            let m = x.iter().enumerate().filter(|(_, v)| **v < 0.0).map(|(i, _)| 1 << i).sum::<usize>();
            table[m]
        }).unwrap();
        prop_assert_eq!(direct, expand_values(&values).unwrap());
    }
}
