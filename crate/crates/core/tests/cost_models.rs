mod common;

use common::{dense, random_unit};
use lsvi_ae::cost::{gp_beta, tilde_beta};
use lsvi_ae::rng::{stream_rng, Stream};
use lsvi_ae::{CostModel, FeatureVec, GpCostModel, Kernel, LinearCostModel, WidthSchedule};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_ball(rng: &mut impl Rng, dim: usize) -> FeatureVec {
    let radius: f64 = rng.random_range(0.0..=1.0);
    FeatureVec::new(random_unit(rng, dim).values().iter().map(|x| x * radius).collect())
}

fn observations(seed: u64, dim: usize, n: usize) -> Vec<(FeatureVec, f64)> {
    let mut rng = stream_rng(seed, Stream::Auxiliary);
    (0..n)
        .map(|_| (random_ball(&mut rng, dim), rng.random_range(-1.0..1.0)))
        .collect()
}

/// `θ̂ = (λI + ΦᵀΦ)⁻¹ Φᵀ y` assembled densely.
fn batch_ridge(obs: &[(FeatureVec, f64)], dim: usize, lambda: f64) -> DVector<f64> {
    let mut gram = DMatrix::identity(dim, dim) * lambda;
    let mut target = DVector::zeros(dim);
    for (phi, y) in obs {
        let v = dense(phi);
        gram += &v * v.transpose();
        target += v * *y;
    }
    gram.lu().solve(&target).unwrap()
}

#[test]
fn incremental_theta_matches_batch_ridge() {
    let obs = observations(3, 6, 120);
    let mut model = LinearCostModel::new(6, 2, 0.5, 0.1).unwrap();
    for (phi, y) in &obs {
        model.observe(1, phi, *y).unwrap();
    }
    let expected = batch_ridge(&obs, 6, 0.5);
    assert!((model.theta(1) - expected).amax() < 1e-10);
    // The other step saw nothing.
    assert_eq!(model.theta(0).amax(), 0.0);
}

#[test]
fn linear_lcb_uses_union_bound_multiplier() {
    let obs = observations(5, 4, 30);
    let (lambda, p, horizon, k) = (1.0, 0.1, 5, 30);
    let mut model = LinearCostModel::new(4, horizon, lambda, p).unwrap();
    for (phi, y) in &obs {
        model.observe(0, phi, *y).unwrap();
    }
    let query = FeatureVec::new(vec![0.5, -0.5, 0.1, 0.3]);
    let est = model.predict_lcb(0, &query, k).unwrap();

    let mut gram = DMatrix::identity(4, 4) * lambda;
    for (phi, _) in &obs {
        let v = dense(phi);
        gram += &v * v.transpose();
    }
    let q = dense(&query);
    let norm = q.dot(&gram.lu().solve(&q).unwrap()).sqrt();
    let width = tilde_beta(lambda, 4, k, p / horizon as f64).unwrap() * norm;
    let mean = q.dot(&batch_ridge(&obs, 4, lambda));
    assert!((est.mean - mean).abs() < 1e-10);
    assert!((est.width - width).abs() < 1e-10);
    assert!((est.lcb - (mean - width)).abs() < 1e-10);
    assert!((est.width_two_sided - 2.0 * width).abs() < 1e-12);
}

#[test]
fn zero_feature_has_zero_estimate() {
    let model = LinearCostModel::new(3, 1, 1.0, 0.1).unwrap();
    let est = model.predict_lcb(0, &FeatureVec::zeros(3), 10).unwrap();
    assert_eq!((est.mean, est.width, est.lcb), (0.0, 0.0, 0.0));
}

#[test]
fn gp_cholesky_matches_dense_factorization() {
    let kernel = Kernel::SquaredExponential { lengthscale: 0.4 };
    let mut model = GpCostModel::new(kernel, 1, 100, 0.1).unwrap();
    let obs = observations(7, 3, 40);
    for (y, c) in &obs {
        model.observe(0, y, *c).unwrap();
    }
    let n = obs.len();
    let assembled =
        DMatrix::from_fn(n, n, |i, j| kernel.eval(&obs[i].0, &obs[j].0)) + DMatrix::identity(n, n) * model.lambda();
    assert!((model.kernel_matrix(0) - DMatrix::from_fn(n, n, |i, j| kernel.eval(&obs[i].0, &obs[j].0))).amax() < 1e-15);
    let reference = assembled.cholesky().unwrap().l();
    assert!((model.cholesky_factor(0) - reference).amax() < 1e-8);
}

#[test]
fn gp_linear_kernel_equals_primal_ridge() {
    let episodes = 50;
    let mut gp = GpCostModel::new(Kernel::Linear, 1, episodes, 0.1).unwrap();
    assert!((gp.lambda() - (1.0 + 2.0 / episodes as f64)).abs() < 1e-15);
    let mut ridge = LinearCostModel::new(5, 1, gp.lambda(), 0.1).unwrap();
    for (phi, y) in observations(9, 5, 25) {
        gp.observe(0, &phi, y).unwrap();
        ridge.observe(0, &phi, y).unwrap();
    }
    let mut rng = stream_rng(10, Stream::Auxiliary);
    for _ in 0..20 {
        let q = random_ball(&mut rng, 5);
        let (mean, sd) = gp.posterior(0, &q);
        let primal = ridge.predict_lcb(0, &q, episodes).unwrap();
        assert!((mean - primal.mean).abs() < 1e-8);
        // σ² = λ‖φ‖²_{Λ⁻¹} for the linear kernel.
        let lambda = gp.lambda();
        assert!((sd * sd - lambda * ridge.gram(0).quad_form(&q)).abs() < 1e-8);
    }
}

#[test]
fn gp_linear_lcb_matches_linear_lcb_with_aligned_multiplier() {
    let episodes = 40;
    let obs = observations(12, 4, 30);
    let mut gp = GpCostModel::new(Kernel::Linear, 1, episodes, 0.1).unwrap();
    for (phi, y) in &obs {
        gp.observe(0, phi, *y).unwrap();
    }
    let lambda = gp.lambda();
    // GP width = B·σ = B·√λ·‖φ‖_{Λ⁻¹}, so the primal multiplier is B·√λ.
    let multiplier = gp.multiplier(0).unwrap();
    let mut ridge =
        LinearCostModel::with_schedule(4, 1, lambda, 0.1, WidthSchedule::Fixed(multiplier * lambda.sqrt())).unwrap();
    for (phi, y) in &obs {
        ridge.observe(0, phi, *y).unwrap();
    }
    let mut rng = stream_rng(13, Stream::Auxiliary);
    for _ in 0..20 {
        let q = random_ball(&mut rng, 4);
        let a = gp.predict_lcb(0, &q).unwrap();
        let b = ridge.predict_lcb(0, &q, episodes).unwrap();
        assert!((a.lcb - b.lcb).abs() < 1e-8);
    }
}

#[test]
fn info_gain_matches_batch_log_det() {
    let kernel = Kernel::SquaredExponential { lengthscale: 1.0 };
    let mut model = GpCostModel::new(kernel, 1, 200, 0.1).unwrap();
    for (i, (y, c)) in observations(14, 3, 60).into_iter().enumerate() {
        model.observe(0, &y, c).unwrap();
        let n = i + 1;
        let lambda = model.lambda();
        let scaled = DMatrix::identity(n, n) + model.kernel_matrix(0) / lambda;
        let log_det = 2.0
            * scaled
                .cholesky()
                .unwrap()
                .l()
                .diagonal()
                .iter()
                .map(|x| x.ln())
                .sum::<f64>();
        assert!((model.info_gain(0) - 0.5 * log_det).abs() < 1e-8);
    }
}

#[test]
fn gp_multiplier_tracks_information_gain() {
    let mut model = GpCostModel::new(Kernel::Linear, 2, 100, 0.2).unwrap();
    model.observe(1, &FeatureVec::new(vec![0.6, 0.8]), 0.3).unwrap();
    let expected = gp_beta(model.info_gain(1), 0.2 / 2.0).unwrap();
    assert!((model.multiplier(1).unwrap() - expected).abs() < 1e-15);
    assert!(model.multiplier(1).unwrap() > model.multiplier(0).unwrap());
}

#[test]
fn gp_rejects_out_of_range_costs() {
    let mut model = GpCostModel::new(Kernel::Linear, 1, 10, 0.1).unwrap();
    assert!(model.observe(0, &FeatureVec::new(vec![1.0]), 1.5).is_err());
    assert!(model.observe(0, &FeatureVec::new(vec![1.0]), f64::NAN).is_err());
    assert_eq!(model.num_observations(0), 0);
}

#[test]
fn gp_survives_duplicate_inputs() {
    let mut model = GpCostModel::new(Kernel::SquaredExponential { lengthscale: 0.5 }, 1, 1000, 0.1).unwrap();
    let y = FeatureVec::new(vec![0.2, 0.1]);
    for _ in 0..200 {
        model.observe(0, &y, -0.4).unwrap();
    }
    let (mean, sd) = model.posterior(0, &y);
    assert!(mean.is_finite() && sd.is_finite());
    assert!((mean + 0.4).abs() < 0.01);
}

#[test]
fn cost_model_enum_dispatches() {
    let mut model = CostModel::Linear(LinearCostModel::new(2, 3, 1.0, 0.1).unwrap());
    assert_eq!(model.horizon(), 3);
    model.observe(2, &FeatureVec::new(vec![1.0, 0.0]), 0.5).unwrap();
    let est = model.predict_lcb(2, &FeatureVec::new(vec![1.0, 0.0]), 1).unwrap();
    assert!((est.mean - 0.25).abs() < 1e-12);
    assert!(model.predict_lcb(3, &FeatureVec::new(vec![1.0, 0.0]), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_width_never_grows(seed in any::<u64>(), n in 1usize..40) {
        let mut model = LinearCostModel::with_schedule(3, 1, 1.0, 0.1, WidthSchedule::Fixed(1.0)).unwrap();
        let mut rng = stream_rng(seed, Stream::Auxiliary);
        let q = random_ball(&mut rng, 3);
        let mut last = model.predict_lcb(0, &q, 1).unwrap().width;
        for _ in 0..n {
            model.observe(0, &random_ball(&mut rng, 3), rng.random_range(-1.0..1.0)).unwrap();
            let width = model.predict_lcb(0, &q, 1).unwrap().width;
            prop_assert!(width <= last + 1e-12);
            last = width;
        }
    }

    #[test]
    fn gp_variance_never_grows(seed in any::<u64>(), n in 1usize..30) {
        let mut model = GpCostModel::new(Kernel::SquaredExponential { lengthscale: 0.8 }, 1, 100, 0.1).unwrap();
        let mut rng = stream_rng(seed, Stream::Auxiliary);
        let q = random_ball(&mut rng, 2);
        let mut last = model.posterior_raw(0, &q).1;
        for _ in 0..n {
            model.observe(0, &random_ball(&mut rng, 2), rng.random_range(-1.0..1.0)).unwrap();
            let var = model.posterior_raw(0, &q).1;
            prop_assert!(var <= last + 1e-10);
            prop_assert!(var >= -1e-10);
            last = var;
        }
    }

    #[test]
    fn lcb_lies_below_mean(seed in any::<u64>()) {
        let obs = observations(seed, 3, 10);
        let mut model = LinearCostModel::new(3, 1, 1.0, 0.1).unwrap();
        for (phi, y) in &obs {
            model.observe(0, phi, *y).unwrap();
        }
        let mut rng = stream_rng(seed, Stream::Auxiliary);
        let est = model.predict_lcb(0, &random_ball(&mut rng, 3), 10).unwrap();
        prop_assert!(est.lcb <= est.mean);
        prop_assert!(est.width >= 0.0);
    }
}
