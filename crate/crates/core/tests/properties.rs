use fingerprint_core::harness::{roc_curve, tpr_at_fpr, VictimScores};
use fingerprint_core::model::{ClassifierHandle, LabeledDataset, PairStats, Split};
use fingerprint_core::qurd::{
    fingerprint_distance, negative_sampler, rms_distance, subsampler, threshold_from_distances, Fingerprint, Payload,
    Provenance, RepresentationKind,
};
use fingerprint_core::seed;
use fingerprint_core::tinylearn::{Activation, Dense, Mlp};
use fingerprint_core::variants::{prune, quantize};
use proptest::prelude::*;

fn label_triples() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
    (2usize..6, 1usize..200).prop_flat_map(|(c, n)| {
        (
            prop::collection::vec(0..c, n),
            prop::collection::vec(0..c, n),
            prop::collection::vec(0..c, n),
        )
    })
}

fn labels_fp(values: Vec<usize>) -> Fingerprint {
    Fingerprint {
        kind: RepresentationKind::RawLabels,
        provenance: Provenance {
            sampler: "test".into(),
            seed: 0,
            size: values.len(),
        },
        payload: Payload::Labels { values },
    }
}

fn vector_fp(values: Vec<f64>) -> Fingerprint {
    Fingerprint {
        kind: RepresentationKind::Pairwise,
        provenance: Provenance {
            sampler: "test".into(),
            seed: 0,
            size: values.len(),
        },
        payload: Payload::Vector { values },
    }
}

fn mlp_from(weights: Vec<f64>) -> ClassifierHandle {
    let n = weights.len();
    let first = Dense {
        in_dim: 2,
        out_dim: n / 2,
        weights,
        bias: vec![0.1; n / 2],
    };
    let head = Dense {
        in_dim: n / 2,
        out_dim: 2,
        weights: (0..n).map(|i| (i as f64 - 3.0) / 7.0).collect(),
        bias: vec![0.0; 2],
    };
    ClassifierHandle::new("m", Mlp::from_layers(Activation::Relu, vec![first, head]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conditioned_distance_respects_lower_bound((truth, h, g) in label_triples()) {
        let st = PairStats::from_labels(&truth, &h, &g).unwrap();
        match (st.delta_c, st.conditioned_lower_bound()) {
            (Some(dc), Some(b)) => prop_assert!(dc >= b - 1e-12, "{dc} < {b}"),
            (None, None) => prop_assert_eq!(st.alpha, 1.0),
            other => prop_assert!(false, "inconsistent {:?}", other),
        }
        prop_assert!((0.0..=1.0).contains(&st.delta));
    }

    #[test]
    fn hamming_is_symmetric((truth, h, g) in label_triples()) {
        let a = PairStats::from_labels(&truth, &h, &g).unwrap();
        let b = PairStats::from_labels(&truth, &g, &h).unwrap();
        prop_assert_eq!(a.delta, b.delta);
        prop_assert_eq!(a.alpha, b.alpha_prime);
    }

    #[test]
    fn label_distance_is_a_normalised_metric((_, h, g) in label_triples()) {
        let (fh, fg) = (labels_fp(h.clone()), labels_fp(g.clone()));
        let d = fingerprint_distance(&fh, &fg).unwrap();
        prop_assert_eq!(d, fingerprint_distance(&fg, &fh).unwrap());
        prop_assert_eq!(fingerprint_distance(&fh, &fh).unwrap(), 0.0);
        let expected = h.iter().zip(&g).filter(|(a, b)| a != b).count() as f64 / h.len() as f64;
        prop_assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn real_distances_are_symmetric(
        pair in (1usize..40).prop_flat_map(|n| (prop::collection::vec(-5.0..5.0f64, n), prop::collection::vec(-5.0..5.0f64, n)))
    ) {
        let (a, b) = (vector_fp(pair.0), vector_fp(pair.1));
        for f in [fingerprint_distance, rms_distance] {
            let d = f(&a, &b).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!((d - f(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(f(&a, &a).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn calibrated_threshold_keeps_pool_fpr(
        distances in prop::collection::vec(0.0..1.0f64, 1..100),
        fpr in 0.0..1.0f64,
    ) {
        let t = threshold_from_distances(&distances, fpr).unwrap();
        let flagged = distances.iter().filter(|&&d| d < t).count() as f64;
        prop_assert!(flagged <= fpr * distances.len() as f64 + 1e-9);
    }

    #[test]
    fn roc_is_monotone_and_bounded(
        sets in prop::collection::vec(
            (prop::collection::vec(0u8..20, 1..15), prop::collection::vec(0u8..20, 1..15)),
            1..4,
        ),
        cap in 0.0..1.0f64,
    ) {
        let scores: Vec<VictimScores> = sets
            .into_iter()
            .enumerate()
            .map(|(i, (p, n))| {
                VictimScores::new(format!("v{i}"), p.into_iter().map(f64::from).collect(), n.into_iter().map(f64::from).collect())
            })
            .collect();
        let c = roc_curve(&scores).unwrap();
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c.auc));
        let last = c.points.last().unwrap();
        prop_assert!((last.fpr - 1.0).abs() < 1e-12 && (last.tpr - 1.0).abs() < 1e-12);
        prop_assert!(tpr_at_fpr(&c, cap) <= tpr_at_fpr(&c, (cap + 0.1).min(1.0)));
    }

    #[test]
    fn prune_zeroes_the_requested_share(weights in prop::collection::vec(-1.0..1.0f64, 8..40), fraction in 0.0..1.0f64) {
        let n = weights.len() - weights.len() % 2;
        let h = mlp_from(weights[..n].to_vec());
        let pruned = prune(&h, fraction).unwrap();
        let before = h.as_mlp().unwrap().layers();
        let after = pruned.as_mlp().unwrap().layers();
        let total: usize = before.iter().map(|l| l.weights.len()).sum();
        let newly_zero = before
            .iter()
            .zip(after)
            .flat_map(|(b, a)| b.weights.iter().zip(&a.weights))
            .filter(|(b, a)| **a == 0.0 && **b != 0.0)
            .count();
        let expected = (fraction * total as f64).floor() as usize;
        let already_zero = before.iter().flat_map(|l| &l.weights).filter(|w| **w == 0.0).count();
        prop_assert!(newly_zero + already_zero >= expected && newly_zero <= expected);
        for (b, a) in before.iter().zip(after) {
            prop_assert_eq!(&b.bias, &a.bias);
        }
    }

    #[test]
    fn quantize_stays_on_a_bounded_grid(weights in prop::collection::vec(-1.0..1.0f64, 8..40), bits in 2u32..12) {
        let n = weights.len() - weights.len() % 2;
        let h = mlp_from(weights[..n].to_vec());
        let q = quantize(&h, bits).unwrap();
        for (b, a) in h.as_mlp().unwrap().layers().iter().zip(q.as_mlp().unwrap().layers()) {
            let w_max = b.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            let step = 2.0 * w_max / (2f64.powi(bits as i32) - 1.0);
            let levels: std::collections::BTreeSet<u64> = a.weights.iter().map(|w| w.to_bits()).collect();
            prop_assert!(levels.len() <= 1 << bits);
            for (w, v) in b.weights.iter().zip(&a.weights) {
                prop_assert!(v.abs() <= w_max + 1e-12);
                prop_assert!((w - v).abs() <= step + 1e-12);
                prop_assert!(*w == 0.0 || w.signum() == v.signum());
            }
        }
    }

    #[test]
    fn negative_queries_are_misclassified(n in 20usize..200, budget in 1usize..20, s in any::<u64>()) {
        let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(seed::splitmix64(i as u64).is_multiple_of(3))).collect();
        let data = LabeledDataset::new(1, 2, points, labels, Split::Test).unwrap();
        let h = ClassifierHandle::new("zero", fingerprint_core::model::FnClassifier::new(2, 1, |_: &[f64]| 0));
        let wrong = data.labels().iter().filter(|&&y| y != 0).count();
        match negative_sampler(&data, &h, budget, s) {
            Ok(q) => {
                prop_assert_eq!(q.len(), budget);
                prop_assert!(q.labels().unwrap().iter().all(|&y| y == 1));
                prop_assert_eq!(negative_sampler(&data, &h, budget, s).unwrap(), q);
            }
            Err(fingerprint_core::Error::InsufficientNegatives { available, .. }) => {
                prop_assert!(wrong < budget);
                prop_assert_eq!(available, wrong);
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn subsample_variants_mask_their_seed(k in 1usize..5, seeds in 1usize..6, vicinity in 0.0..1.0f64, s in any::<u64>()) {
        let points: Vec<Vec<f64>> = (0..30).map(|i| (0..4).map(|d| (i * 4 + d) as f64 + 1.0).collect()).collect();
        let data = LabeledDataset::new(4, 2, points, vec![0; 30], Split::Test).unwrap();
        let q = subsampler(&data, k, vicinity, seeds * (k + 1), s).unwrap();
        prop_assert_eq!(q.pairing().unwrap().len(), seeds * k);
        for &(i, j) in q.pairing().unwrap() {
            let (x, v) = (&q.points()[i], &q.points()[j]);
            prop_assert!(x.iter().zip(v).all(|(a, b)| b == a || *b == 0.0));
        }
    }
}
