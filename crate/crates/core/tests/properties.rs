use clfeval_core::metrics::{accuracy, full_report, point_value};
use clfeval_core::rank::average_ranks;
use clfeval_core::*;
use proptest::prelude::*;

fn matrix(m: usize) -> impl Strategy<Value = ConfusionMatrix> {
    prop::collection::vec(prop::collection::vec(0u64..40, m), m)
        .prop_filter_map("empty", |rows| ConfusionMatrix::from_rows(rows).ok())
}

fn any_matrix() -> impl Strategy<Value = ConfusionMatrix> {
    (2usize..6).prop_flat_map(matrix)
}

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #[test]
    fn report_values_are_fractions(cm in any_matrix()) {
        let r = full_report(&cm);
        for (_, v) in r.rows() {
            if let Some(v) = v {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        prop_assert_eq!(r.accuracy, cm.trace() as f64 / cm.total() as f64);
    }

    #[test]
    fn accuracy_is_plug_in_mif1(cm in any_matrix()) {
        let d = ParameterDraw::maximum_likelihood(&cm);
        let plug = d.metric_value(MetricId::Accuracy).unwrap();
        prop_assert!((plug - accuracy(&cm)).abs() < 1e-12);
    }

    #[test]
    fn plug_in_matches_point_metrics(cm in any_matrix()) {
        // At ML parameters every defined metric equals its point value. A
        // class with no samples keeps a uniform theta row but zero mu weight,
        // so only its recall differs.
        let d = ParameterDraw::maximum_likelihood(&cm);
        for id in MetricId::all(cm.num_classes()) {
            let empty_row = |j: usize| cm.row_sum(j) == 0;
            let skip = match id {
                MetricId::Recall(j) | MetricId::F1(j) => empty_row(j),
                MetricId::MacroRecall | MetricId::MacroF1 => (0..cm.num_classes()).any(empty_row),
                _ => false,
            };
            if !skip {
                prop_assert!(close(d.metric_value(id), point_value(&cm, id), 1e-12), "{}", id);
            }
        }
    }

    #[test]
    fn permutation_invariance(cm in any_matrix(), seed in any::<u64>()) {
        let m = cm.num_classes();
        let mut order: Vec<usize> = (0..m).collect();
        // Fisher–Yates from a seeded stream.
        let mut s = RandomStream::new(seed, 0);
        for i in (1..m).rev() {
            order.swap(i, (s.next_u64() % (i as u64 + 1)) as usize);
        }
        let p = cm.permuted(&order).unwrap();
        let (a, b) = (full_report(&cm), full_report(&p));
        for (new, &old) in order.iter().enumerate() {
            prop_assert_eq!(b.per_class[new], a.per_class[old]);
        }
        prop_assert!(close(a.macro_f1, b.macro_f1, 1e-12));
        prop_assert!(close(a.macro_precision, b.macro_precision, 1e-12));
        prop_assert!(close(a.macro_recall, b.macro_recall, 1e-12));
        prop_assert!(close(a.macro_specificity, b.macro_specificity, 1e-12));
        prop_assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn scaling_invariance(cm in any_matrix(), k in 1u64..20) {
        let s = cm.scaled(k).unwrap();
        for id in MetricId::all(cm.num_classes()) {
            prop_assert!(close(point_value(&cm, id), point_value(&s, id), 1e-12));
        }
    }

    #[test]
    fn two_class_specificity(cm in matrix(2)) {
        prop_assert_eq!(metrics::class_specificity(&cm, 0), metrics::class_recall(&cm, 1));
    }

    #[test]
    fn hdi_nesting(values in prop::collection::vec(-5.0f64..5.0, 100..400)) {
        let mut v = values;
        v.sort_by(f64::total_cmp);
        let inner = hdi(&v, 0.9).unwrap();
        let outer = hdi(&v, 0.95).unwrap();
        prop_assert!(inner.width() <= outer.width());
    }

    #[test]
    fn auc_rank_invariance(
        data in prop::collection::vec((0usize..3, prop::collection::vec(0.0f64..1.0, 3)), 6..40)
    ) {
        let samples: Vec<_> = data.iter().map(|(l, s)| ScoredSample::new(*l, s.clone()).unwrap()).collect();
        let Ok(base) = hand_till_auc(&samples) else { return Ok(()); };
        let transformed: Vec<_> = samples
            .iter()
            .map(|s| ScoredSample::new(s.true_label, s.scores.iter().map(|x| (3.0 * x).exp() - 7.0).collect()).unwrap())
            .collect();
        prop_assert!((hand_till_auc(&transformed).unwrap().auc - base.auc).abs() < 1e-12);
        let mean = base.pairs.iter().map(|p| p.value()).sum::<f64>() / base.pairs.len() as f64;
        prop_assert!((mean - base.auc).abs() < 1e-12);
    }

    #[test]
    fn iou_symmetry_and_range(
        a in prop::collection::vec(any::<bool>(), 24),
        b in prop::collection::vec(any::<bool>(), 24),
    ) {
        let a = BinaryMask::new(4, 6, a).unwrap();
        let b = BinaryMask::new(4, 6, b).unwrap();
        let ab = iou(&a, &b).unwrap();
        prop_assert_eq!(ab, iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn iou_translation_invariance(
        a in prop::collection::vec(any::<bool>(), 16),
        b in prop::collection::vec(any::<bool>(), 16),
        dr in 0usize..4, dc in 0usize..4,
    ) {
        // Embed 4x4 masks at offset (dr, dc) in an 8x8 canvas.
        let place = |bits: &[bool], dr: usize, dc: usize| {
            let mut out = vec![false; 64];
            for (i, &v) in bits.iter().enumerate() {
                out[(i / 4 + dr) * 8 + i % 4 + dc] = v;
            }
            BinaryMask::new(8, 8, out).unwrap()
        };
        let base = iou(&place(&a, 0, 0), &place(&b, 0, 0)).unwrap();
        prop_assert_eq!(base, iou(&place(&a, dr, dc), &place(&b, dr, dc)).unwrap());
    }

    #[test]
    fn spearman_monotone_invariance(
        x in prop::collection::vec(-10.0f64..10.0, 3..20),
        seed in any::<u64>(),
    ) {
        let mut s = RandomStream::new(seed, 1);
        let y: Vec<f64> = x.iter().map(|_| s.uniform()).collect();
        let base = spearman(&x, &y).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let moved = spearman(&tx, &ty).unwrap();
        match (base, moved) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12 && (-1.0..=1.0).contains(&a)),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn zone_relevance_bounded_by_positive_mass(
        values in prop::collection::vec(-1.0f64..1.0, 9 * 8),
    ) {
        let grid = MaskGrid::new(9, 8, values).unwrap();
        let map = RelevanceMap::new(grid, "Covid-19");
        let boxes = [
            LungBox { rows: 0..9, cols: 0..4 },
            LungBox { rows: 0..9, cols: 4..8 },
        ];
        let p = default_partition(boxes, Laterality::default()).unwrap();
        let z = zone_relevance(&map, &p).unwrap();
        prop_assert!(z.iter().all(|v| *v >= 0.0));
        // The two boxes tile the whole map.
        prop_assert!((z.iter().sum::<f64>() - map.positive_total()).abs() < 1e-9);
    }
}

#[test]
fn average_ranks_agree_with_pair_counting() {
    // rank_i = 1 + #{x_j < x_i} + #{x_j == x_i, j != i} / 2
    let v = [0.3, 0.1, 0.3, 0.9, 0.1, 0.3];
    let ranks = average_ranks(&v);
    for (i, &x) in v.iter().enumerate() {
        let less = v.iter().filter(|&&y| y < x).count() as f64;
        let eq = v.iter().filter(|&&y| y == x).count() as f64 - 1.0;
        assert_eq!(ranks[i], 1.0 + less + eq / 2.0);
    }
}

#[test]
fn posterior_conjugacy_within_three_standard_errors() {
    let cm = ConfusionMatrix::from_rows(vec![
        vec![9, 3, 1, 0],
        vec![2, 14, 0, 3],
        vec![0, 1, 5, 1],
        vec![4, 0, 2, 20],
    ])
    .unwrap();
    let model = PosteriorModel::fit(&cm, &PriorConfig::uniform(4)).unwrap();
    let ids: Vec<_> = (0..4).map(MetricId::Recall).collect();
    let est = estimate(
        &model,
        &ids,
        99,
        &EstimateOptions {
            samples: 50_000,
            ..Default::default()
        },
    )
    .unwrap();
    for (j, s) in est.summaries.iter().enumerate() {
        let analytic = model.recall_mean(j);
        assert!(
            (s.mean - analytic).abs() < 3.0 * s.mc_error,
            "class {j}: {} vs {analytic}",
            s.mean
        );
    }
}

#[test]
fn mu_and_theta_are_uncorrelated() {
    let cm =
        ConfusionMatrix::from_rows(vec![vec![38, 7, 5], vec![8, 32, 10], vec![2, 0, 48]]).unwrap();
    let model = PosteriorModel::fit(&cm, &PriorConfig::uniform(3)).unwrap();
    let mut s = RandomStream::new(123, 0);
    let n = 50_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let d = model.draw(&mut s);
            (d.mu()[0], d.theta(0, 0))
        })
        .collect();
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let cov: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let vx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let vy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    let r = cov / (vx * vy).sqrt();
    // Sample correlation of independent variables has sd ~ 1/sqrt(n).
    assert!(r.abs() < 4.0 / (n as f64).sqrt(), "{r}");
}

#[test]
fn mif1_sample_is_sum_of_joint_diagonal() {
    let cm = ConfusionMatrix::from_rows(vec![vec![4, 1], vec![2, 7]]).unwrap();
    let model = PosteriorModel::fit(&cm, &PriorConfig::uniform(2)).unwrap();
    let mut s = RandomStream::new(5, 0);
    for _ in 0..100 {
        let d = model.draw(&mut s);
        let expect = d.mu()[0] * d.theta(0, 0) + d.mu()[1] * d.theta(1, 1);
        assert_eq!(d.metric_value(MetricId::Accuracy).unwrap(), expect);
        for id in MetricId::all(2) {
            let v = d.metric_value(id).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
