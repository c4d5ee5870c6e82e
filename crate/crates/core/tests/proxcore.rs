use approx::assert_abs_diff_eq;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use tbda_core::kernels::Kernel;
use tbda_core::proxcore::{bregman_prox, prox_quadratic_nonneg, shrink_l1, svt, ProxFn, ProxOracle};
use tbda_core::Error;

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut g = b.transpose() * &b;
    for i in 0..n {
        g[(i, i)] += 0.5;
    }
    g
}

fn max_eig(q: &DMatrix<f64>) -> f64 {
    q.clone().symmetric_eigen().eigenvalues.max()
}

/// Projected gradient on `½xᵀQx + (q + t)ᵀx + ½‖x − a‖²_{rI−Q}` over `x ≥ 0`,
/// whose Hessian is `rI`. A fixed step `1/L` with `L = r` is used until the
/// iterates stop moving.
fn projected_gradient(q_mat: &DMatrix<f64>, q: &DVector<f64>, t: &DVector<f64>, a: &DVector<f64>, r: f64) -> DVector<f64> {
    let g = DMatrix::<f64>::identity(a.len(), a.len()) * r - q_mat;
    let mut x = a.map(|v| v.max(0.0));
    for _ in 0..100_000 {
        let grad = q_mat * &x + q + t + &g * (&x - a);
        let next = (&x - grad / (2.0 * r)).map(|v| v.max(0.0));
        let done = (&next - &x).norm() <= 1e-15;
        x = next;
        if done {
            break;
        }
    }
    x
}

#[test]
fn linear_euclidean_is_gradient_step() {
    let c = dvector![1.0, -2.0];
    let f = ProxFn::Linear(c.clone());
    let a = dvector![0.5, 0.5];
    let t = dvector![0.25, 1.0];
    let x = bregman_prox(&f, &Kernel::euclidean(), 4.0, &a, &t).unwrap();
    assert_eq!(x, &a - (&c + &t) / 4.0);
}

#[test]
fn nonneg_indicator_is_projection() {
    let x = bregman_prox(&ProxFn::IndicatorNonneg, &Kernel::euclidean(), 1.0, &dvector![-1.0, 2.0], &dvector![0.0, 0.0]).unwrap();
    assert_eq!(x, dvector![0.0, 2.0]);
}

#[test]
fn balanced_metric_linear_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));
    let kappa = 0.3;
    let g = &a * a.transpose() + DMatrix::identity(3, 3) * kappa;
    let b = dvector![0.2, -0.4, 1.0];
    let anchor = dvector![1.0, 2.0, 3.0];
    let xbar = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
    let tau = 1.7;
    let kernel = Kernel::weighted(g.clone()).unwrap();
    let got = bregman_prox(&ProxFn::Linear(b.clone()), &kernel, tau, &anchor, &(-(&a * &xbar))).unwrap();
    let expected = &anchor + g.lu().solve(&(&a * &xbar - &b)).unwrap() / tau;
    assert!((got - expected).norm() <= 1e-12);
}

#[test]
fn shrink_examples() {
    assert_eq!(shrink_l1(&dmatrix![3.0], 1.0).unwrap(), dmatrix![2.0]);
    assert_eq!(shrink_l1(&dmatrix![-0.5], 1.0).unwrap(), dmatrix![0.0]);
    assert_eq!(shrink_l1(&dmatrix![1.0, -1.0], 1.0).unwrap(), dmatrix![0.0, 0.0]);
    assert!(matches!(shrink_l1(&dmatrix![1.0], -0.1), Err(Error::InvalidParams(_))));
}

#[test]
fn shrink_matches_scalar_brute_force() {
    // Entrywise argmin of ½(x − z)² + t|x| by grid refinement down to 1e-7.
    fn brute(z: f64, t: f64) -> f64 {
        let obj = |x: f64| 0.5 * (x - z) * (x - z) + t * x.abs();
        let (mut lo, mut hi) = (-10.0, 10.0);
        let mut best = 0.0;
        while hi - lo > 1e-7 {
            let step = (hi - lo) / 200.0;
            best = (0..=200).map(|i| lo + i as f64 * step).fold(f64::NAN, |b, x| if b.is_nan() || obj(x) < obj(b) { x } else { b });
            lo = best - step;
            hi = best + step;
        }
        best
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-2.0..2.0));
    let s = shrink_l1(&z, 0.3).unwrap();
    for (got, zi) in s.iter().zip(z.iter()) {
        assert_abs_diff_eq!(*got, brute(*zi, 0.3), epsilon = 1e-6);
    }
}

#[test]
fn svt_examples() {
    assert_eq!(svt(&DMatrix::zeros(3, 2), 1.0).unwrap(), DMatrix::zeros(3, 2));
    let out = svt(&dmatrix![5.0, 0.0; 0.0, 1.0], 2.0).unwrap();
    assert!((out - dmatrix![3.0, 0.0; 0.0, 0.0]).norm() <= 1e-12);
}

#[test]
fn svt_shrinks_singular_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (m, n) in [(6, 4), (4, 6), (7, 7)] {
        let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let out = svt(&x, 0.5).unwrap();
        let mut s_in: Vec<f64> = x.svd(false, false).singular_values.iter().copied().collect();
        let mut s_out: Vec<f64> = out.svd(false, false).singular_values.iter().copied().collect();
        s_in.sort_by(|a, b| b.total_cmp(a));
        s_out.sort_by(|a, b| b.total_cmp(a));
        let shrunk = shrink_l1(&DMatrix::from_column_slice(s_in.len(), 1, &s_in), 0.5).unwrap();
        for (a, b) in s_out.iter().zip(shrunk.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-8);
        }
    }
}

#[test]
fn quadratic_nonneg_examples() {
    let q = DMatrix::identity(2, 2);
    let x = prox_quadratic_nonneg(&q, &dvector![0.0, 0.0], &dvector![0.0, 0.0], &dvector![1.0, 1.0], 2.0).unwrap();
    assert_eq!(x, dvector![0.5, 0.5]);

    // Anchor at the unconstrained stationary point stays put.
    let q = dmatrix![2.0, 0.5; 0.5, 3.0];
    let xs = dvector![0.4, 1.2];
    let lin = -(&q * &xs);
    let x = prox_quadratic_nonneg(&q, &lin, &dvector![0.0, 0.0], &xs, 10.0).unwrap();
    assert!((x - xs).norm() <= 1e-15);
}

#[test]
fn quadratic_nonneg_requires_r_above_spectrum() {
    let q = dmatrix![4.0, 0.0; 0.0, 1.0];
    let r = prox_quadratic_nonneg(&q, &dvector![0.0, 0.0], &dvector![0.0, 0.0], &dvector![1.0, 1.0], 4.0);
    assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn quadratic_nonneg_matches_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let q_mat = random_spd(&mut rng, 3);
        let q = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let t = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let a = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let r = max_eig(&q_mat) + 3.0;
        let got = prox_quadratic_nonneg(&q_mat, &q, &t, &a, r).unwrap();
        let oracle = projected_gradient(&q_mat, &q, &t, &a, r);
        assert!((got - oracle).amax() <= 1e-10);
    }
}

#[test]
fn shifted_kernel_oracle_uses_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let q_mat = Arc::new(random_spd(&mut rng, 4));
    let lmax = max_eig(&q_mat);
    let mu = 0.7;
    let shift = mu * lmax + 3.0;
    let kernel = Kernel::shifted(q_mat.clone(), lmax, shift, mu).unwrap();
    let q = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let f = ProxFn::QuadraticNonneg { q_mat: q_mat.clone(), q: q.clone() };
    let a = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let t = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let got = ProxOracle::new(&f, &kernel, mu).unwrap().prox(&a, &t).unwrap();
    let oracle = projected_gradient(&q_mat, &q, &t, &a, shift);
    assert!((got - oracle).amax() <= 1e-10);
}

#[test]
fn quadratic_with_dense_kernel_solves_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let q_mat = Arc::new(random_spd(&mut rng, 3));
    let g = random_spd(&mut rng, 3);
    let q = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
    let a = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
    let t = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
    let w = 1.3;
    let f = ProxFn::Quadratic { q_mat: q_mat.clone(), q: q.clone() };
    let got = bregman_prox(&f, &Kernel::weighted(g.clone()).unwrap(), w, &a, &t).unwrap();
    // first-order condition Qx + q + t + wG(x − a) = 0
    let resid = q_mat.as_ref() * &got + &q + &t + (&g * (&got - &a)) * w;
    assert!(resid.amax() <= 1e-12);
}

#[test]
fn block_sum_applies_each_block() {
    let f = ProxFn::BlockSum(vec![(2, ProxFn::L1(1.0)), (2, ProxFn::IndicatorNonneg)]);
    let x = bregman_prox(&f, &Kernel::euclidean(), 1.0, &dvector![3.0, -0.5, -1.0, 2.0], &DVector::zeros(4)).unwrap();
    assert_eq!(x, dvector![2.0, 0.0, 0.0, 2.0]);
}

#[test]
fn nuclear_block_is_svt_of_the_reshaped_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let z = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
    let f = ProxFn::Nuclear { rows: 3, cols: 4 };
    let w = 2.0;
    let x = bregman_prox(&f, &Kernel::euclidean(), w, &DVector::from_column_slice(z.as_slice()), &DVector::zeros(12)).unwrap();
    let expected = svt(&z, 1.0 / w).unwrap();
    assert!((x - DVector::from_column_slice(expected.as_slice())).amax() <= 1e-12);
}

#[test]
fn values_and_domains() {
    let f = ProxFn::LinearNonneg(dvector![2.0, 1.0]);
    assert_eq!(f.value(&dvector![1.0, 0.0]).unwrap(), 2.0);
    assert!(matches!(f.value(&dvector![-1.0, 0.0]), Err(Error::Infeasible(_))));
    assert!(!f.is_feasible(&dvector![0.0, -1e-300]));
    let n = ProxFn::Nuclear { rows: 2, cols: 2 };
    assert_abs_diff_eq!(n.value(&dvector![3.0, 0.0, 0.0, -4.0]).unwrap(), 7.0, epsilon = 1e-12);
    assert_eq!(ProxFn::L1(0.5).value(&dvector![1.0, -3.0]).unwrap(), 2.0);
}

#[test]
fn unsupported_pairs_are_rejected() {
    let k = Kernel::weighted(DMatrix::from_diagonal(&dvector![1.0, 2.0])).unwrap();
    assert!(matches!(ProxOracle::new(&ProxFn::L1(1.0), &k, 1.0), Err(Error::Unsupported(_))));
    let full = Kernel::weighted(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
    assert!(matches!(ProxOracle::new(&ProxFn::IndicatorNonneg, &full, 1.0), Err(Error::Unsupported(_))));
    assert!(ProxOracle::new(&ProxFn::Linear(dvector![1.0]), &Kernel::euclidean(), 0.0).is_err());
}

#[test]
fn diagonal_metric_projected_step() {
    let k = Kernel::weighted(DMatrix::from_diagonal(&dvector![2.0, 4.0])).unwrap();
    let f = ProxFn::LinearNonneg(dvector![1.0, -1.0]);
    let x = bregman_prox(&f, &k, 0.5, &dvector![0.5, 0.5], &dvector![0.0, 0.0]).unwrap();
    // coordinatewise: a − c/(w d)
    assert_eq!(x, dvector![0.0, 1.0]);
}
