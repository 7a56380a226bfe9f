use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pyrafuse::analytic::{hilbert_trace, phase_derivative, AnalyticSection, Axis};
use pyrafuse::fusion::median_of;
use pyrafuse::io::gridfile::{decode, encode, GridDocument};
use pyrafuse::io::segy::{f32_to_ibm, ibm_to_f64};
use pyrafuse::synth::{calibrated_noise, make_synthetic, ricker_at, snr_db, EventSpec, SynthSpec};
use pyrafuse::{
    curvature, default_weights, expand_to, fuse, make_kernel, reduce, AttributeKind, AttributeMap,
    AttributeStack, DipField, DipGeometry, FusionSpec, Grid2, Scale,
};

fn grid_strategy(min: usize, max: usize) -> impl Strategy<Value = Grid2> {
    (min..=max, min..=max).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| Grid2::new(r, c, v).unwrap())
    })
}

fn stack_from(cells: &[Vec<f64>]) -> AttributeStack {
    // cells[k][i]: value of map k at cell i
    AttributeStack::new(
        cells
            .iter()
            .enumerate()
            .map(|(k, v)| {
                AttributeMap::new(Grid2::new(1, v.len(), v.clone()).unwrap(), AttributeKind::PhaseDip, Scale::Level(k))
            })
            .collect(),
    )
    .unwrap()
}

fn stack_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=8, 1usize..=16).prop_flat_map(|(k, n)| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduce_is_linear((f, g) in grid_strategy(5, 24).prop_flat_map(|f| {
        let (r, c) = f.dims();
        (Just(f), prop::collection::vec(-10.0f64..10.0, r * c).prop_map(move |v| Grid2::new(r, c, v).unwrap()))
    }), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let k = make_kernel(1.0, 2).unwrap();
        let combo = f.zip_map(&g, |x, y| a * x + b * y).unwrap();
        let lhs = reduce(&combo, &k).unwrap();
        let rf = reduce(&f, &k).unwrap();
        let rg = reduce(&g, &k).unwrap();
        for ((l, x), y) in lhs.as_slice().iter().zip(rf.as_slice()).zip(rg.as_slice()) {
            prop_assert!((l - (a * x + b * y)).abs() < 1e-9);
        }
    }

    #[test]
    fn reduce_halves_dims_and_bounds_values(f in grid_strategy(5, 40), sigma in 0.5f64..2.0) {
        let k = make_kernel(sigma, 2).unwrap();
        let out = reduce(&f, &k).unwrap();
        prop_assert_eq!(out.dims(), (f.rows().div_ceil(2), f.cols().div_ceil(2)));
        let (lo, hi) = f.min_max();
        let energy_out: f64 = out.as_slice().iter().map(|v| v * v).sum::<f64>() / out.len() as f64;
        prop_assert!(out.as_slice().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        prop_assert!(out.max_abs() <= f.max_abs() + 1e-12);
        // per-sample power cannot exceed the largest input power
        prop_assert!(energy_out <= f.max_abs().powi(2) + 1e-12);
    }

    #[test]
    fn reduce_and_expand_keep_constants(r in 5usize..30, c in 5usize..30, v in -100.0f64..100.0) {
        let g = Grid2::filled(r, c, v).unwrap();
        let red = reduce(&g, &make_kernel(1.0, 2).unwrap()).unwrap();
        prop_assert!(red.as_slice().iter().all(|&x| x == v));
        let up = expand_to(&red, r, c).unwrap();
        prop_assert!(up.as_slice().iter().all(|&x| x == v));
    }

    #[test]
    fn expand_keeps_corners_and_range(f in grid_strategy(2, 12), er in 0usize..20, ec in 0usize..20) {
        let (r, c) = f.dims();
        let out = expand_to(&f, r + er, c + ec).unwrap();
        let (lo, hi) = f.min_max();
        prop_assert!(out.as_slice().iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
        prop_assert_eq!(out.get(0, 0), f.get(0, 0));
        prop_assert_eq!(out.get(r + er - 1, c + ec - 1), f.get(r - 1, c - 1));
    }

    #[test]
    fn median_matches_sort_oracle(cells in stack_strategy()) {
        let stack = stack_from(&cells);
        let fused = fuse(&stack, &FusionSpec::Median).unwrap();
        let k = cells.len();
        for i in 0..cells[0].len() {
            let mut v: Vec<f64> = cells.iter().map(|m| m[i]).collect();
            v.sort_by(f64::total_cmp);
            let expect = if k % 2 == 1 { v[k / 2] } else { (v[k / 2 - 1] + v[k / 2]) / 2.0 };
            prop_assert_eq!(fused.grid.get(0, i), expect);
        }
    }

    #[test]
    fn fusion_is_monotone(cells in stack_strategy(), seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raised: Vec<Vec<f64>> = cells
            .iter()
            .map(|m| m.iter().map(|v| v + rng.random_range(0.0..1.0)).collect())
            .collect();
        let k = cells.len();
        for spec in [FusionSpec::Mean, FusionSpec::Median, FusionSpec::Rank(k / 2), FusionSpec::WeightedMean(default_weights(k, 2.0).unwrap())] {
            let a = fuse(&stack_from(&cells), &spec).unwrap();
            let b = fuse(&stack_from(&raised), &spec).unwrap();
            for (x, y) in a.grid.as_slice().iter().zip(b.grid.as_slice()) {
                prop_assert!(y >= &(x - 1e-12), "{:?}: {} -> {}", spec, x, y);
            }
        }
    }

    #[test]
    fn uniform_weights_equal_mean(cells in stack_strategy(), w in 0.1f64..10.0) {
        let k = cells.len();
        let stack = stack_from(&cells);
        let mean = fuse(&stack, &FusionSpec::Mean).unwrap();
        let wmean = fuse(&stack, &FusionSpec::WeightedMean(vec![w; k])).unwrap();
        for (a, b) in mean.grid.as_slice().iter().zip(wmean.grid.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-15, "{} vs {}", a, b);
        }
    }

    #[test]
    fn fusion_ignores_scale_order(cells in stack_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = cells.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = stack_from(&cells);
        let b = stack_from(&shuffled);
        let ma = fuse(&a, &FusionSpec::Mean).unwrap();
        let mb = fuse(&b, &FusionSpec::Mean).unwrap();
        for (x, y) in ma.grid.as_slice().iter().zip(mb.grid.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(fuse(&a, &FusionSpec::Median).unwrap().grid, fuse(&b, &FusionSpec::Median).unwrap().grid);
    }

    #[test]
    fn median_of_is_order_free(mut v in prop::collection::vec(-5.0f64..5.0, 1..9)) {
        let m = median_of(&mut v.clone());
        v.reverse();
        prop_assert_eq!(m, median_of(&mut v));
    }

    #[test]
    fn hilbert_parseval_and_double_application(x in prop::collection::vec(-1.0f64..1.0, 8..200)) {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut x: Vec<f64> = x.iter().map(|v| v - mean).collect();
        if n % 2 == 0 {
            let alt = x.iter().enumerate().map(|(t, v)| if t % 2 == 0 { *v } else { -v }).sum::<f64>() / n as f64;
            for (t, v) in x.iter_mut().enumerate() {
                *v -= if t % 2 == 0 { alt } else { -alt };
            }
        }
        let h = hilbert_trace(&x).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let eh: f64 = h.iter().map(|v| v * v).sum();
        prop_assert!((ex - eh).abs() <= 1e-9 * ex.max(1.0));
        let hh = hilbert_trace(&h).unwrap();
        for (a, b) in hh.iter().zip(&x) {
            prop_assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_derivative_matches_unwrapped_difference(
        steps in prop::collection::vec(-3.0f64..3.0, 6..40),
        amps in prop::collection::vec(0.5f64..2.0, 40),
        theta0 in -3.0f64..3.0,
    ) {
        // one column, phase increments kept below pi
        let n = steps.len() + 1;
        let mut theta = vec![theta0];
        for s in &steps {
            theta.push(theta.last().unwrap() + s);
        }
        let real = Grid2::from_fn(n, 3, |t, _| amps[t] * theta[t].cos()).unwrap();
        let imag = Grid2::from_fn(n, 3, |t, _| amps[t] * theta[t].sin()).unwrap();
        let a = AnalyticSection { real, imag, dt: 0.004, dx: 25.0 };
        let d = phase_derivative(&a, Axis::Time).unwrap();
        for t in 0..n {
            let expect = if t == 0 {
                theta[1] - theta[0]
            } else if t == n - 1 {
                theta[n - 1] - theta[n - 2]
            } else {
                (theta[t + 1] - theta[t - 1]) / 2.0
            };
            prop_assert!((d.get(t, 1) - expect).abs() < 1e-9, "t={} {} vs {}", t, d.get(t, 1), expect);
        }
    }

    #[test]
    fn curvatures_are_ordered(p in grid_strategy(3, 12), scale in 0.01f64..5.0) {
        let q = p.map(|v| 3.0 * (v * scale).sin()).unwrap();
        let g = DipGeometry { dt: 0.004, dx: 25.0, dy: 12.5, velocity: 2000.0 };
        let pair = curvature(&DipField::new(p, Some(q), g, 5.0).unwrap()).unwrap();
        for (a, b) in pair.k_pos.as_slice().iter().zip(pair.k_neg.as_slice()) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn calibrated_noise_hits_requested_snr(snr in -5.0f64..40.0, seed in any::<u64>()) {
        let signal: Vec<f64> = (0..500).map(|t| ricker_at(25.0, (t as f64 - 250.0) * 0.004)).collect();
        let noise = calibrated_noise(&signal, snr, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!((snr_db(&signal, &noise) - snr).abs() < 1e-9);
    }

    #[test]
    fn synthetic_noise_within_tolerance(snr in 0.0f64..30.0, seed in any::<u64>()) {
        let mut spec = SynthSpec {
            nt: 64,
            nx: 12,
            events: vec![EventSpec::plane(0.1, 1.0, 0.3, 0.0)],
            ..SynthSpec::default()
        };
        let (clean, _) = make_synthetic(&spec).unwrap();
        spec.snr_db = Some(snr);
        spec.seed = seed;
        let (noisy, _) = make_synthetic(&spec).unwrap();
        let c = clean.samples_t_fastest();
        let n: Vec<f64> = noisy.samples_t_fastest().iter().zip(&c).map(|(a, b)| a - b).collect();
        prop_assert!((snr_db(&c, &n) - snr).abs() < 0.2);
    }

    #[test]
    fn grid_file_round_trip(f in grid_strategy(1, 20), kind in 0usize..5, fused in any::<bool>()) {
        let kinds = [AttributeKind::PhaseDip, AttributeKind::DipAngle, AttributeKind::MostPositiveCurvature, AttributeKind::MostNegativeCurvature, AttributeKind::Raw];
        let f = f.map(|v| v as f32 as f64).unwrap();
        let scale = if fused { Scale::Fused } else { Scale::Level(kind) };
        let mut map = AttributeMap::new(f, kinds[kind], scale);
        map.meta.insert("note".into(), "a b=c".into());
        let doc = GridDocument::from_map(&map, Some(0.004), None);
        let back = decode(&encode(&doc).unwrap()).unwrap();
        prop_assert_eq!(back.to_map().unwrap(), map);
    }

    #[test]
    fn ibm_round_trip(v in -1e30f32..1e30f32) {
        let back = ibm_to_f64(f32_to_ibm(v));
        prop_assert!((back - v as f64).abs() <= 4.0 * f32::EPSILON as f64 * (v as f64).abs());
    }
}

/// Trace-to-trace lag from the parabola through the cross-correlation peak.
fn xcorr_lag(a: &[f64], b: &[f64]) -> f64 {
    let corr = |lag: isize| -> f64 {
        (0..a.len() as isize)
            .filter_map(|t| {
                let u = t + lag;
                (0..b.len() as isize).contains(&u).then(|| a[t as usize] * b[u as usize])
            })
            .sum()
    };
    let best = (-5..=5).max_by(|&x, &y| corr(x).total_cmp(&corr(y))).unwrap();
    let (cm, c0, cp) = (corr(best - 1), corr(best), corr(best + 1));
    best as f64 + 0.5 * (cm - cp) / (cm - 2.0 * c0 + cp)
}

#[test]
fn plane_synthetic_has_requested_moveout() {
    let spec = SynthSpec {
        nt: 128,
        nx: 8,
        events: vec![EventSpec::plane(0.2, 1.0, 0.5, 0.0)],
        ..SynthSpec::default()
    };
    let (data, truth) = make_synthetic(&spec).unwrap();
    let s = data.as_section().unwrap();
    for x in 0..7 {
        let lag = xcorr_lag(&s.trace(x), &s.trace(x + 1));
        assert!((lag - 0.5).abs() < 0.05, "trace {x}: lag {lag}");
    }
    let p = &truth.dip_p.as_section().unwrap().grid;
    assert!(p.as_slice().iter().all(|&v| v == 0.5));
}

#[test]
fn noise_realization_is_seed_determined() {
    let mut spec = SynthSpec {
        nt: 64,
        nx: 8,
        events: vec![EventSpec::plane(0.1, 1.0, 0.0, 0.0)],
        snr_db: Some(5.0),
        seed: 42,
        ..SynthSpec::default()
    };
    let (a, _) = make_synthetic(&spec).unwrap();
    let (b, _) = make_synthetic(&spec).unwrap();
    assert_eq!(a, b);
    spec.seed = 43;
    let (c, _) = make_synthetic(&spec).unwrap();
    assert_ne!(a, c);
}
