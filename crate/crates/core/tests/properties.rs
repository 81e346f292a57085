use proptest::prelude::*;
use quantized_mmse::bounds::{corollary_rhs, thm1_rhs, thm2_bound_moment, thm2_bound_subgaussian};
use quantized_mmse::experiments::{csv_string, parse_csv, regime_classify, Regime};
use quantized_mmse::model::ScalarChannelModel;
use quantized_mmse::numeric::MeanAcc;
use quantized_mmse::quantizer::{cell_error, covering_codebook, delta, Codebook, CodebookFile};

fn sorted_points(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..max).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_posterior_mean_is_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0, sigma in 0.05f64..2.0) {
        let m = ScalarChannelModel::uniform_gaussian(1.0, sigma).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.posterior_mean(&[lo]).unwrap() <= m.posterior_mean(&[hi]).unwrap() + 1e-12);
    }

    #[test]
    fn logistic_posterior_mean_is_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0, scale in 0.05f64..1.0) {
        let m = ScalarChannelModel::uniform_logistic(1.0, scale).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(m.posterior_mean(&[lo, 0.1]).unwrap() <= m.posterior_mean(&[hi, 0.1]).unwrap() + 1e-12);
    }

    #[test]
    fn posterior_mean_ignores_observation_order(xs in prop::collection::vec(-1.5f64..1.5, 2..12), rot in 0usize..12) {
        let m = ScalarChannelModel::uniform_logistic(1.0, 0.3).unwrap();
        let mut ys = xs.clone();
        ys.rotate_left(rot % xs.len());
        ys.reverse();
        let (a, b) = (m.posterior_mean(&xs).unwrap(), m.posterior_mean(&ys).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn cell_error_is_smooth(pts in sorted_points(12), y in -1.0f64..=1.0, y2 in -1.0f64..=1.0) {
        let cb = Codebook::scalar(pts).unwrap();
        let d = delta(&cb, 1.0).unwrap();
        let lhs = (cell_error(&cb, y) - cell_error(&cb, y2)).abs();
        prop_assert!(lhs <= (2.0 * d * d).min(2.0 * d * (y - y2).abs()));
    }

    #[test]
    fn nearest_neighbor_is_optimal(pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..20),
                                   v in prop::collection::vec(-4.0f64..4.0, 3)) {
        let cb = Codebook::new(3, pts).unwrap();
        let dist = |i: usize| cb.point(i).iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let j = cb.quantize(&v);
        prop_assert!((0..cb.len()).all(|i| dist(j) <= dist(i)));
        prop_assert!((0..j).all(|i| dist(i) > dist(j)), "ties go to the lowest index");
    }

    #[test]
    fn covering_cells_are_within_eps(p in 1usize..4, k in 2usize..200, r in 0.1f64..5.0,
                                     dir in prop::collection::vec(-1.0f64..1.0, 3), frac in 0.0f64..1.0) {
        let cq = covering_codebook(p, r, k).unwrap();
        prop_assert!(cq.len() <= k);
        let norm = dir[..p].iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let v: Vec<f64> = dir[..p].iter().map(|x| x / norm * r * frac).collect();
        let j = cq.quantize(&v);
        prop_assert!(j < cq.len());
        let d = cq.centers().point(j).iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d <= cq.eps() * (1.0 + 1e-12));
        let out: Vec<f64> = v.iter().map(|x| x / frac.max(1e-9) * 1.5).collect();
        if frac > 1e-6 {
            prop_assert_eq!(cq.quantize(&out), cq.overflow_index());
        }
    }

    #[test]
    fn thm1_is_monotone(l in 0.1f64..10.0, d in 0.0f64..2.0, n in 1usize..10_000, e in 0.0f64..3.0, mmse in 0.0f64..1.0,
                        bump in 0.0f64..1.0) {
        let base = thm1_rhs(l, d, n, e, mmse);
        prop_assert!(thm1_rhs(l + bump, d, n, e, mmse) >= base);
        prop_assert!(thm1_rhs(l, d + bump, n, e, mmse) >= base);
        prop_assert!(thm1_rhs(l, d, n, e, mmse + bump) >= base);
        prop_assert!(thm1_rhs(l, d, n + 1 + (bump * 100.0) as usize, e, mmse) <= base);
    }

    #[test]
    fn corollary_and_moment_bounds_fall_with_k(k in 1usize..5000, n in 1usize..100_000, e in 0.0f64..3.0,
                                               mmse in 0.0f64..1.0, p in 1usize..6) {
        prop_assert!(corollary_rhs(k + 1, n, e, mmse, 1.0) <= corollary_rhs(k, n, e, mmse, 1.0));
        prop_assert!(corollary_rhs(k, n + 1, e, mmse, 1.0) <= corollary_rhs(k, n, e, mmse, 1.0));
        prop_assert!(thm2_bound_moment(1.5, 3.0, k + 1, p, 1.0) <= thm2_bound_moment(1.5, 3.0, k, p, 1.0));
    }

    #[test]
    fn subgaussian_bound_is_monotone(k in 2usize..2000, e1 in 0.1f64..3.0, v in 0.01f64..2.0, p in 1usize..5) {
        let e4 = (e1 * e1 + 4.0 * v).powi(2);
        let (b, r) = thm2_bound_subgaussian(e1, e4, v, k, p, 1.0, 1.0).unwrap();
        prop_assert!(r > e1);
        let (b_more_k, _) = thm2_bound_subgaussian(e1, e4, v, 2 * k, p, 1.0, 1.0).unwrap();
        prop_assert!(b_more_k <= b * (1.0 + 1e-7));
        let (b_more_v, _) = thm2_bound_subgaussian(e1, e4, v * 1.5, k, p, 1.0, 1.0).unwrap();
        prop_assert!(b_more_v >= b * (1.0 - 1e-7));
    }

    #[test]
    fn regime_threshold(n in 1usize..1_000_000, k in 1usize..2000) {
        let expected = if n > k * k { Regime::QuantizationLimited } else { Regime::EstimationLimited };
        prop_assert_eq!(regime_classify(n, k), expected);
    }

    #[test]
    fn codebook_text_round_trips(pts in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2), 1..30)) {
        let cb = Codebook::new(2, pts).unwrap();
        let back = CodebookFile::parse(&cb.to_text()).unwrap();
        prop_assert_eq!(back.codebook, cb);
    }

    #[test]
    fn merged_accumulators_match(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
        let cut = cut % xs.len();
        let whole: MeanAcc = xs.iter().copied().collect();
        let mut a: MeanAcc = xs[..cut].iter().copied().collect();
        a.merge(&xs[cut..].iter().copied().collect());
        prop_assert!((a.mean() - whole.mean()).abs() <= 1e-9 * (1.0 + whole.mean().abs()));
        prop_assert!((a.variance() - whole.variance()).abs() <= 1e-9 * (1.0 + whole.variance()));
    }
}

#[test]
fn sweep_csv_round_trips() {
    let m = ScalarChannelModel::uniform_gaussian(1.0, 0.2).unwrap();
    let rows = quantized_mmse::experiments::sweep_scalar(
        &m,
        "rt",
        &[2, 5],
        &[3, 30],
        3000,
        77,
        &quantized_mmse::bounds::BoundConfig::default(),
    )
    .unwrap();
    let text = csv_string(&rows);
    let back = parse_csv(&text).unwrap();
    assert_eq!(csv_string(&back), text);
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.regret.to_bits(), b.regret.to_bits());
        assert_eq!(a.mmse_se.to_bits(), b.mmse_se.to_bits());
        assert_eq!(a.regime, b.regime);
    }
    // An independent CSV reader sees the same header and values.
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.len(), 15);
    for (rec, row) in reader.records().zip(&rows) {
        let rec = rec.unwrap();
        assert_eq!(rec[9].parse::<f64>().unwrap(), row.regret);
        assert_eq!(&rec[13], row.regime.to_string());
    }
}
