use proptest::prelude::*;

use pftconv::exrec::{pack_key, unpack_key, KEY_BITS};
use pftconv::logical::LogicalPauli2;
use pftconv::nn::{Dataset, LabelSet, Mlp, SyndromeRecord};
use pftconv::parallel::Execution;
use pftconv::pieceable::{build_ccnot_a, Orientation};
use pftconv::threshold::{
    fit_quadratic, pseudo_threshold, swap_rate, swap_rate_symmetric, wilson_interval, BareLine, FitModel,
    QuadraticFit, RatePoint, RootSearch,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn key_round_trip(a in 0u32..1 << 20, b in 0u32..1 << 7, c in 0u32..1 << 20) {
        let k = pack_key(a, b, c);
        prop_assert!(k < 1 << KEY_BITS);
        prop_assert_eq!(unpack_key(k), (a, b, c));
    }

    #[test]
    fn full_labels_are_lossless(i in 0u8..16, b in any::<bool>()) {
        let o = if b { Orientation::A } else { Orientation::B };
        let e = LogicalPauli2::from_index(i);
        prop_assert_eq!(LabelSet::Full.decode(LabelSet::Full.encode(e, o), o), e);
        // the pair layout keeps exactly the bits it names
        let p = LabelSet::Pair.decode(LabelSet::Pair.encode(e, o), o);
        prop_assert_eq!(p.on(o.control()).1, e.on(o.control()).1);
        prop_assert_eq!(p.on(o.target()).0, e.on(o.target()).0);
    }

    #[test]
    fn swap_rates_are_probabilities(pa in 0.0f64..=1.0, pb in 0.0f64..=1.0) {
        let r = swap_rate_symmetric(pa, pb);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r), "{}", r);
        // the printed form can exceed one when pB is small and pA large
        prop_assert!(swap_rate(pa, pb) >= -1e-12);
        let p = pa;
        prop_assert!((swap_rate(p, p) - 3.0 * p * (1.0 - p).powi(2)).abs() < 1e-12);
        prop_assert!((swap_rate(p, p) - swap_rate_symmetric(p, p)).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_contains_estimate(n in 1u64..100_000, frac in 0.0f64..=1.0, z in 0.5f64..4.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, z);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12 && 0.0 <= lo && hi <= 1.0);
    }

    #[test]
    fn exact_quadratics_fit_back(a in 1e2f64..1e6, b in 0.0f64..5.0) {
        let pts: Vec<RatePoint> = [1e-4, 2e-4, 5e-4, 1e-3]
            .iter()
            .map(|&e| RatePoint { epsilon: e, rate: a * e * e + b * e, sigma: 1e-5 })
            .collect();
        let f = fit_quadratic(&pts, FitModel::ThroughOrigin).unwrap();
        prop_assert!((f.a / a - 1.0).abs() < 1e-8);
        prop_assert!((f.b - b).abs() < 1e-8 * (1.0 + b));
    }

    /// For `aε² + bε` with `b < 1` the crossing is `(1 - b)/a`.
    #[test]
    fn threshold_matches_closed_form(a in 1e2f64..1e6, b in 0.0f64..0.9) {
        let fit = QuadraticFit { a, b, ..QuadraticFit::zero() };
        let want = (1.0 - b) / a;
        match pseudo_threshold(&fit, BareLine::Epsilon, RootSearch::default()) {
            Ok(t) => prop_assert!((t / want - 1.0).abs() < 2e-3, "{} vs {}", t, want),
            Err(_) => prop_assert!(want > 1e-1 || want < 1e-8),
        }
    }

    #[test]
    fn softmax_sums_to_one(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mlp::new(&[KEY_BITS, 6, 2], &mut rng).unwrap();
        let x: Vec<f64> = (0..KEY_BITS).map(|i| ((seed >> (i % 64)) & 1) as f64).collect();
        let p = m.forward(&x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        // a common shift of both logits leaves the decision unchanged
        let view = ndarray::ArrayView2::from_shape((1, KEY_BITS), &x).unwrap();
        let before = m.predict(view).unwrap();
        let n = m.layers().len();
        m.layers_mut()[n - 1].bias.mapv_inplace(|b| b + shift);
        prop_assert_eq!(m.predict(view).unwrap(), before);
    }

    #[test]
    fn dataset_text_round_trip(
        recs in prop::collection::vec((1u64..1 << KEY_BITS, 0u8..16, 1e-5f64..1e-1), 0..40),
    ) {
        let records: Vec<SyndromeRecord> =
            recs.into_iter().map(|(key, labels, epsilon)| SyndromeRecord { key, labels, epsilon }).collect();
        let d = Dataset {
            orientation: Orientation::A,
            labels: LabelSet::Full,
            meta: vec![("circuit".into(), "A".into())],
            records,
        };
        let rec = pftconv::exrec::ExRec::new(build_ccnot_a());
        let mut buf = Vec::new();
        d.write(&rec, &mut buf).unwrap();
        let back = Dataset::read(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records, d.records);
    }

    #[test]
    fn execution_modes_agree(n in 0usize..3000, chunk in 1usize..300, workers in 2usize..5) {
        let f = |r: std::ops::Range<usize>| r.map(|i| i * i % 97).sum::<usize>();
        let seq = Execution::Sequential.map_chunks(n, chunk, f);
        prop_assert_eq!(Execution::Workers(workers).map_chunks(n, chunk, f), seq);
    }
}
