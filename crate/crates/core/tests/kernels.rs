use approx::assert_abs_diff_eq;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbda_core::{Error, Kernel};

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut g = b.transpose() * &b;
    for i in 0..n {
        g[(i, i)] += 0.5;
    }
    g
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
}

#[test]
fn euclidean_gradient_is_identity() {
    let g = Kernel::euclidean().grad(&dvector![1.0, -2.0]).unwrap();
    assert_eq!(g, dvector![1.0, -2.0]);
}

#[test]
fn diagonal_metric_gradient() {
    let k = Kernel::weighted(DMatrix::from_diagonal(&dvector![2.0, 3.0])).unwrap();
    assert_eq!(k.grad(&dvector![1.0, 1.0]).unwrap(), dvector![2.0, 3.0]);
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = random_spd(&mut rng, 3);
    let k = Kernel::weighted(g).unwrap();
    let x = random_vec(&mut rng, 3);
    let grad = k.grad(&x).unwrap();
    let h = 1e-5;
    for i in 0..3 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (k.value(&xp).unwrap() - k.value(&xm).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(fd, grad[i], epsilon = 1e-6);
    }
}

#[test]
fn bregman_distance_examples() {
    let e = Kernel::euclidean();
    assert_eq!(e.bregman_distance(&dvector![5.0, 5.0], &dvector![5.0, 5.0]).unwrap(), 0.0);
    assert_eq!(e.bregman_distance(&dvector![1.0, 0.0], &dvector![0.0, 0.0]).unwrap(), 0.5);
    let k = Kernel::weighted(DMatrix::from_diagonal(&dvector![2.0, 3.0])).unwrap();
    assert_abs_diff_eq!(k.bregman_distance(&dvector![1.0, 1.0], &dvector![0.0, 0.0]).unwrap(), 2.5, epsilon = 1e-15);
}

#[test]
fn bregman_distance_is_the_generic_definition() {
    // h(x) − h(y) − ⟨∇h(y), x − y⟩ evaluated through value and grad
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = Kernel::weighted(random_spd(&mut rng, 4)).unwrap();
    for _ in 0..20 {
        let x = random_vec(&mut rng, 4);
        let y = random_vec(&mut rng, 4);
        let generic = k.value(&x).unwrap() - k.value(&y).unwrap() - k.grad(&y).unwrap().dot(&(&x - &y));
        let d = k.bregman_distance(&x, &y).unwrap();
        assert_abs_diff_eq!(d, generic, epsilon = 1e-10 * generic.abs().max(1.0));
        assert!(d >= 0.0);
    }
}

#[test]
fn three_point_identity_examples() {
    let e = Kernel::euclidean();
    let z = dvector![0.3, -0.7];
    assert_eq!(e.three_point_check(&z, &z, &z).unwrap(), 0.0);
    let r = e.three_point_check(&dvector![1.0, 0.0], &dvector![0.0, 1.0], &dvector![1.0, 1.0]).unwrap();
    assert!(r.abs() <= 1e-12);
}

#[test]
fn three_point_identity_random_spd() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = Kernel::weighted(random_spd(&mut rng, 5)).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (x, a, b) = (random_vec(&mut rng, 5), random_vec(&mut rng, 5), random_vec(&mut rng, 5));
        worst = worst.max(k.three_point_check(&x, &a, &b).unwrap().abs());
    }
    assert!(worst <= 1e-10, "worst residual {worst}");
}

#[test]
fn rejects_asymmetric_and_indefinite_metrics() {
    let asym = dmatrix![1.0, 0.5; 0.0, 1.0];
    assert!(matches!(Kernel::weighted(asym), Err(Error::NotSymmetric)));
    let indef = dmatrix![1.0, 0.0; 0.0, -1.0];
    assert!(matches!(Kernel::weighted(indef), Err(Error::NotPositiveDefinite { .. })));
    let singular = dmatrix![1.0, 1.0; 1.0, 1.0];
    assert!(matches!(Kernel::weighted(singular), Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn dimension_mismatch_is_reported() {
    let k = Kernel::weighted(DMatrix::identity(3, 3)).unwrap();
    assert!(matches!(k.grad(&dvector![1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    let e = Kernel::euclidean();
    assert!(e.bregman_distance(&dvector![1.0], &dvector![1.0, 2.0]).is_err());
}

#[test]
fn metric_solve_inverts_metric_apply() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = Kernel::weighted(random_spd(&mut rng, 4)).unwrap();
    let v = random_vec(&mut rng, 4);
    let back = k.metric_apply(&k.metric_solve(&v).unwrap()).unwrap();
    assert!((back - v).norm() <= 1e-12);
}
