//! Property-based invariants of the closed-form bounds, the planted-model
//! generators, and the empirical-complexity estimator.

use gnnlab::bounds::{
    expected_trc_sbm, gen_gap_slack, residual_trc_upper, trc_upper, vc_gap_bound, BoundInputs,
    ExpectedTrcConfig, PlantedView,
};
use gnnlab::graph_ops::{
    inf_norm, max_col_two_norm, numerical_rank, DiffusionOperator,
};
use gnnlab::planted::{
    generate_dataset, make_latent_labels, sample_train_idx, Labels, PlantedConfig,
};
use gnnlab::rel_diff;
use gnnlab::trc::empirical_trc_with_models;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

fn arb_bound_inputs() -> impl Strategy<Value = BoundInputs> {
    (
        2usize..200,
        1usize..5,
        1usize..50,
        0.25f64..2.0,
        0.0f64..2.0,
        0.0f64..2.0,
        0.0f64..5.0,
        0.0f64..10.0,
        0.0f64..3.0,
        0.01f64..0.99,
    )
        .prop_flat_map(
            |(n, k_layers, d, lipschitz, omega, beta, s_inf, sx_2inf, x_inf, delta)| {
                (1..n).prop_map(move |m| BoundInputs {
                    n,
                    m,
                    k_layers,
                    d,
                    lipschitz,
                    omega,
                    beta,
                    s_inf,
                    sx_2inf,
                    x_inf,
                    delta,
                })
            },
        )
}

fn arb_planted_view() -> impl Strategy<Value = PlantedView> {
    (
        4usize..400,
        1usize..50,
        0.01f64..1.0,
        0.0f64..1.0,
        0.0f64..1.0,
        0.0f64..3.0,
        0.0f64..2.0,
    )
        .prop_map(|(n, d, p, q_frac, gamma_frac, mu_inf, sigma)| PlantedView {
            n,
            d,
            p,
            // q <= p by construction; strictly positive so both diffusion
            // kinds accept the view.
            q: (q_frac * p).max(p * 1e-3),
            gamma: gamma_frac * n as f64,
            mu_inf,
            sigma,
        })
}

fn arb_diffusion() -> impl Strategy<Value = DiffusionOperator> {
    prop_oneof![
        Just(DiffusionOperator::DegreeNormalized),
        Just(DiffusionOperator::SelfLoop),
    ]
}

// ---------------------------------------------------------------------------
// Closed-form bound invariants
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The vanilla bound is monotone non-decreasing in every norm budget:
    /// each budget enters through nonnegative products, sums, and powers,
    /// all of which are monotone in floating point as well.
    #[test]
    fn trc_upper_monotone_in_each_budget(
        inputs in arb_bound_inputs(),
        factor in 1.0f64..4.0,
    ) {
        let base = trc_upper(&inputs).unwrap();
        for grow in [
            |i: &mut BoundInputs, f: f64| i.omega *= f,
            |i: &mut BoundInputs, f: f64| i.beta *= f,
            |i: &mut BoundInputs, f: f64| i.s_inf *= f,
            |i: &mut BoundInputs, f: f64| i.sx_2inf *= f,
        ] {
            let mut bigger = inputs.clone();
            grow(&mut bigger, factor);
            let grown = trc_upper(&bigger).unwrap();
            prop_assert!(
                grown >= base,
                "budget increase lowered the bound: {grown} < {base}"
            );
        }
    }

    /// With the weight budget large enough that each extra layer multiplies
    /// the geometric ratio by at least one, depth can only raise the bound.
    #[test]
    fn trc_upper_monotone_in_depth_when_ratio_at_least_one(
        mut inputs in arb_bound_inputs(),
        omega in 0.5f64..2.0,
        s_inf in 1.0f64..4.0,
    ) {
        inputs.lipschitz = 1.0;
        inputs.omega = omega;
        inputs.s_inf = s_inf; // c2 * s_inf = 2 omega s_inf >= 1
        let mut prev = None;
        for k in 1..=4 {
            inputs.k_layers = k;
            let value = trc_upper(&inputs).unwrap();
            if let Some(p) = prev {
                prop_assert!(value >= p, "bound shrank with depth: {value} < {p}");
            }
            prev = Some(value);
        }
    }

    /// alpha = 0 reproduces the vanilla bound exactly (bit-for-bit: the
    /// residual expression degenerates to the same arithmetic).
    #[test]
    fn residual_at_alpha_zero_is_vanilla(inputs in arb_bound_inputs()) {
        prop_assert_eq!(
            residual_trc_upper(&inputs, 0.0).unwrap(),
            trc_upper(&inputs).unwrap()
        );
    }

    /// alpha = 1 collapses to the anchored-layer constant 2 L ||X||_inf.
    #[test]
    fn residual_at_alpha_one_is_anchor(inputs in arb_bound_inputs()) {
        let anchor = 2.0 * inputs.lipschitz * inputs.x_inf;
        prop_assert_eq!(residual_trc_upper(&inputs, 1.0).unwrap(), anchor);
    }

    /// When the bias budget is pinned to ||X||_inf the residual bound is the
    /// exact linear interpolation between the vanilla bound and the anchor.
    #[test]
    fn residual_interpolates_when_beta_equals_x_inf(
        mut inputs in arb_bound_inputs(),
        alpha in 0.0f64..=1.0,
    ) {
        inputs.beta = inputs.x_inf;
        let vanilla = trc_upper(&inputs).unwrap();
        let anchor = 2.0 * inputs.lipschitz * inputs.x_inf;
        let expected = (1.0 - alpha) * vanilla + alpha * anchor;
        let actual = residual_trc_upper(&inputs, alpha).unwrap();
        prop_assert!(
            rel_diff(actual, expected) <= 1e-12,
            "interpolation identity broke: {actual} vs {expected}"
        );
    }

    /// Both slack terms are symmetric under swapping the labeled and
    /// unlabeled counts, and strictly positive on valid inputs.
    #[test]
    fn slack_symmetric_and_positive(
        n in 2usize..100_000,
        m_frac in 0.0f64..1.0,
        delta in 0.001f64..0.999,
    ) {
        let m = ((m_frac * n as f64) as usize).clamp(1, n - 1);
        let a = gen_gap_slack(n, m, delta).unwrap();
        let b = gen_gap_slack(n, n - m, delta).unwrap();
        prop_assert_eq!(a.c4_term.to_bits(), b.c4_term.to_bits());
        prop_assert_eq!(a.c5_term.to_bits(), b.c5_term.to_bits());
        prop_assert!(a.c4_term > 0.0 && a.c5_term > 0.0);
    }

    /// The capacity-based gap bound grows with capacity and shrinks when the
    /// labeled count doubles.
    #[test]
    fn vc_gap_bound_monotone(
        m in 1usize..10_000,
        cap in 0usize..500,
        delta in 0.001f64..0.999,
    ) {
        let here = vc_gap_bound(m, cap, delta).unwrap();
        let more_cap = vc_gap_bound(m, cap + 1, delta).unwrap();
        let more_data = vc_gap_bound(2 * m, cap, delta).unwrap();
        prop_assert!(more_cap > here, "capacity increase must grow the bound");
        prop_assert!(more_data < here, "doubling m must shrink the bound");
    }

    /// Whenever cap (1 + ln m) >= m/8 the square root's argument exceeds one,
    /// so the 0-1 bound is vacuous — the regime the rank argument puts the
    /// planted model in.
    #[test]
    fn vc_bound_vacuous_in_high_capacity_regime(
        m in 1usize..100_000,
        delta in 0.001f64..0.999,
        extra in 0usize..10,
    ) {
        let ln_em = 1.0 + (m as f64).ln();
        let cap = (m as f64 / (8.0 * ln_em)).ceil() as usize + extra;
        prop_assert!(vc_gap_bound(m, cap, delta).unwrap() > 1.0);
    }

    /// Under the planted expectation, alignment only enters the noise factor
    /// through a nonnegative quadratic, so the bound is monotone in gamma
    /// for both diffusion kinds.
    #[test]
    fn expected_trc_monotone_in_alignment(
        view in arb_planted_view(),
        kind in arb_diffusion(),
        k_layers in 1usize..4,
        omega in 0.0f64..1.0,
        beta in 0.0f64..1.0,
        fracs in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let m = view.n / 2;
        let (f1, f2) = fracs;
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let mut low_view = view;
        low_view.gamma = lo * view.n as f64;
        let mut high_view = view;
        high_view.gamma = hi * view.n as f64;
        let low = expected_trc_sbm(&ExpectedTrcConfig::new(low_view, k_layers, omega, beta), kind, m)
            .unwrap();
        let high = expected_trc_sbm(&ExpectedTrcConfig::new(high_view, k_layers, omega, beta), kind, m)
            .unwrap();
        prop_assert!(
            high.value >= low.value,
            "raising gamma lowered the expected bound: {} < {}",
            high.value,
            low.value
        );
    }

    /// Successive depth differences of the expected bound form a geometric
    /// sequence with ratio c2 x (per-layer norm rate) — the exact structure
    /// the depth experiment's bound column is asserted against.
    #[test]
    fn expected_trc_depth_differences_geometric(
        view in arb_planted_view(),
        kind in arb_diffusion(),
        omega in 0.01f64..1.0,
        beta in 0.0f64..1.0,
    ) {
        let m = view.n / 2;
        let values: Vec<f64> = (1..=4)
            .map(|k| {
                expected_trc_sbm(&ExpectedTrcConfig::new(view, k, omega, beta), kind, m)
                    .unwrap()
                    .value
            })
            .collect();
        let rate = match kind {
            DiffusionOperator::DegreeNormalized => (view.p / view.q).sqrt(),
            DiffusionOperator::SelfLoop => view.n as f64 * view.p,
            DiffusionOperator::Identity => unreachable!(),
        };
        let r = 2.0 * omega * rate; // lipschitz = 1 in ExpectedTrcConfig::new
        let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for w in values.windows(3) {
            let d0 = w[1] - w[0];
            let d1 = w[2] - w[1];
            prop_assert!(
                (d1 - r * d0).abs() <= 1e-9 * scale,
                "difference ratio drifted from c2*rate = {r}: {d0} then {d1}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// Planted-model generator invariants
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The label construction lands within its guaranteed distance of any
    /// target and hits every achievable overlap n - 4t exactly, with both
    /// vectors balanced and the reported overlap truthful.
    #[test]
    fn latent_labels_hit_achievable_targets(
        half in 1usize..100,
        t_frac in 0.0f64..=1.0,
        arbitrary_target in 0.0f64..=1.0,
        seed in 0u64..1000,
    ) {
        let n = 2 * half;
        let t = (t_frac * (n / 4) as f64) as usize;
        let target = (n - 4 * t) as f64;
        let labels = make_latent_labels(n, target, seed).unwrap();
        prop_assert_eq!(labels.gamma_actual, target);

        let loose = make_latent_labels(n, arbitrary_target * n as f64, seed).unwrap();
        prop_assert!((loose.gamma_actual - arbitrary_target * n as f64).abs() <= 2.0);

        for labels in [&labels, &loose] {
            prop_assert!(labels.z.iter().all(|&v| v == 1 || v == -1));
            prop_assert!(labels.y.iter().all(|&v| v == 1 || v == -1));
            prop_assert_eq!(labels.z.iter().map(|&v| v as i64).sum::<i64>(), 0);
            prop_assert_eq!(labels.y.iter().map(|&v| v as i64).sum::<i64>(), 0);
            let overlap: i64 = labels
                .z
                .iter()
                .zip(&labels.y)
                .map(|(&a, &b)| (a as i64) * (b as i64))
                .sum();
            prop_assert_eq!(overlap.unsigned_abs() as f64, labels.gamma_actual);
        }
    }

    /// Labeled-index sampling is a sorted, duplicate-free, in-range subset
    /// of the right size, reproduced exactly by the same seed.
    #[test]
    fn train_idx_sorted_unique_deterministic(
        n in 2usize..300,
        m_frac in 0.0f64..1.0,
        seed in 0u64..1000,
    ) {
        let m = ((m_frac * n as f64) as usize).clamp(1, n - 1);
        let idx = sample_train_idx(n, m, seed).unwrap();
        prop_assert_eq!(idx.len(), m);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]), "must be sorted and unique");
        prop_assert!(*idx.last().unwrap() < n);
        prop_assert_eq!(&idx, &sample_train_idx(n, m, seed).unwrap());
    }
}

proptest! {
    // Dataset generation is O(n^2); keep the case count moderate.
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Generated planted datasets satisfy the documented shape invariants:
    /// symmetric loop-free 0/1 adjacency, n x d features, two classes, and
    /// a valid labeled split.
    #[test]
    fn planted_dataset_well_formed(
        half in 1usize..20,
        d in 1usize..6,
        p in 0.0f64..=1.0,
        q_frac in 0.0f64..=1.0,
        gamma_frac in 0.0f64..=1.0,
        sigma in 0.0f64..1.0,
        seed in 0u64..100,
    ) {
        let n = 2 * half;
        let config = PlantedConfig {
            n,
            d,
            p,
            q: q_frac * p,
            gamma_target: gamma_frac * n as f64,
            mu: Array1::linspace(0.5, 1.5, d),
            sigma,
            seed,
        };
        let m = (n / 2).max(1).min(n - 1);
        let dataset = generate_dataset(&config, m).unwrap();
        prop_assert_eq!(dataset.n(), n);
        prop_assert_eq!(dataset.d(), d);
        prop_assert_eq!(dataset.m(), m);
        prop_assert_eq!(dataset.num_classes, 2);
        let a = &dataset.adjacency;
        for i in 0..n {
            prop_assert_eq!(a[[i, i]], 0.0, "self-loops are excluded");
            for j in 0..n {
                prop_assert!(a[[i, j]] == 0.0 || a[[i, j]] == 1.0);
                prop_assert_eq!(a[[i, j]], a[[j, i]], "adjacency must be symmetric");
            }
        }
        match &dataset.labels {
            Labels::Planted(latent) => {
                prop_assert_eq!(latent.y.len(), n);
                prop_assert_eq!(latent.z.len(), n);
            }
            Labels::Classes(_) => prop_assert!(false, "planted data carries latent labels"),
        }
    }
}

// ---------------------------------------------------------------------------
// Matrix-norm helpers against naive re-computations
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_match_naive_definitions(
        rows in 1usize..12,
        cols in 1usize..12,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-3.0f64..3.0));

        let naive_inf = (0..rows)
            .map(|i| (0..cols).map(|j| m[[i, j]].abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        prop_assert!(rel_diff(inf_norm(&m), naive_inf) <= 1e-12);

        let naive_col = (0..cols)
            .map(|j| (0..rows).map(|i| m[[i, j]] * m[[i, j]]).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        prop_assert!(rel_diff(max_col_two_norm(&m), naive_col) <= 1e-12);
    }

    /// Q E[sup] over {c 1, -c 1} equals c times the estimate over {1, -1}:
    /// the estimator must commute with scalar scaling of the output class.
    #[test]
    fn trc_estimate_scales_linearly(
        half in 2usize..20,
        m_frac in 0.0f64..1.0,
        c in 0.1f64..5.0,
        seed in 0u64..1000,
    ) {
        let n = 2 * half;
        let m = ((m_frac * n as f64) as usize).clamp(1, n - 1);
        let ones = Array1::from_elem(n, 1.0);
        let unit: Vec<Array1<f64>> = vec![ones.clone(), -&ones];
        let scaled: Vec<Array1<f64>> = vec![c * &ones, -c * &ones];
        let base = empirical_trc_with_models(&unit, m, None, 64, seed).unwrap();
        let grown = empirical_trc_with_models(&scaled, m, None, 64, seed).unwrap();
        prop_assert!(
            rel_diff(grown.mean, c * base.mean) <= 1e-9,
            "estimator broke scalar scaling: {} vs {}",
            grown.mean,
            c * base.mean
        );
    }
}

// ---------------------------------------------------------------------------
// Deterministic structural checks
// ---------------------------------------------------------------------------

#[test]
fn numerical_rank_on_known_matrices() {
    let eye = Array2::<f64>::eye(17);
    assert_eq!(numerical_rank(&eye, 1e-9).unwrap(), 17);

    let zeros = Array2::<f64>::zeros((9, 9));
    assert_eq!(numerical_rank(&zeros, 1e-9).unwrap(), 0);

    // Outer product has rank one regardless of size.
    let u = Array1::linspace(1.0, 2.0, 11);
    let v = Array1::linspace(-1.0, 3.0, 11);
    let outer = Array2::from_shape_fn((11, 11), |(i, j)| u[i] * v[j]);
    assert_eq!(numerical_rank(&outer, 1e-9).unwrap(), 1);
}

/// The two diffusion cases scale differently with the graph size: the
/// degree-normalized rate sqrt(p/q) is size-free (only log factors remain),
/// while the self-loop rate np compounds per layer.
#[test]
fn expected_trc_growth_rates_differ_by_diffusion_case() {
    let bound = |n: usize, kind: DiffusionOperator| {
        let view = PlantedView {
            n,
            d: 100,
            p: 0.2,
            q: 0.05,
            gamma: 10.0,
            mu_inf: 1.0,
            sigma: 1.0,
        };
        expected_trc_sbm(&ExpectedTrcConfig::new(view, 2, 0.1, 0.1), kind, n / 5)
            .unwrap()
            .value
    };
    let deg_ratio =
        bound(1000, DiffusionOperator::DegreeNormalized) / bound(250, DiffusionOperator::DegreeNormalized);
    let loop_ratio = bound(1000, DiffusionOperator::SelfLoop) / bound(250, DiffusionOperator::SelfLoop);
    assert!(
        deg_ratio < 2.0,
        "degree-normalized bound should be nearly size-free, grew {deg_ratio}x"
    );
    assert!(
        loop_ratio > 50.0,
        "self-loop bound should compound with n, grew only {loop_ratio}x"
    );
}
