use evofuse::baselines::{average_fusion, logreg_fit, logreg_fuse, prune_sweep, LogRegHyper, PruneMode};
use evofuse::fusion::{evaluate, BinaryChromosome, Chromosome, DEFAULT_CUTOFF};
use evofuse::metrics;
use evofuse::synthgen::{analytic_eer, generate, SynthDetectorSpec, SynthScenario};

/// Three informative detectors followed by nine pure-noise ones, all
/// independent.
fn informative_and_noise(seed: u64) -> SynthScenario {
    let mut detectors: Vec<SynthDetectorSpec> = (0..3)
        .map(|i| SynthDetectorSpec::new(format!("info{i}"), 1.5, 0.0, 100 + i))
        .collect();
    detectors.extend((0..9).map(|i| SynthDetectorSpec::new(format!("noise{i}"), 0.0, 0.0, 10 + i)));
    SynthScenario {
        detectors,
        n_bonafide: 1000,
        n_spoof: 1000,
        seed,
    }
}

#[test]
fn by_weight_pruning_keeps_the_informative_detectors() {
    let hyper = LogRegHyper::default();
    let mut hits = 0;
    for seed in 0..10 {
        let (dev, _) = generate(&informative_and_noise(2 * seed)).unwrap();
        let (eval, _) = generate(&informative_and_noise(2 * seed + 1)).unwrap();
        let sweep = prune_sweep(&dev, &eval, PruneMode::ByWeight, &hyper).unwrap();
        assert_eq!(sweep.records.len(), 12);
        assert!(sweep.records.windows(2).all(|w| w[1].params < w[0].params));
        assert!(sweep.records.windows(2).all(|w| w[1].active.len() + 1 == w[0].active.len()));
        if sweep.records[9].active == [0, 1, 2] {
            hits += 1;
        }
    }
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn informative_weight_beats_noise_weight() {
    let hyper = LogRegHyper::default();
    let mut hits = 0;
    for seed in 0..10 {
        let scenario = SynthScenario {
            detectors: vec![
                SynthDetectorSpec::new("info", 1.5, 0.0, 1),
                SynthDetectorSpec::new("noise", 0.0, 0.0, 1),
            ],
            n_bonafide: 500,
            n_spoof: 500,
            seed: 100 + seed,
        };
        let (m, _) = generate(&scenario).unwrap();
        let model = logreg_fit(&m, &hyper).unwrap();
        assert!(model.converged, "{} {} {}", model.iterations, model.grad_norm, model.final_loss);
        if model.weights[0].abs() > model.weights[1].abs() {
            hits += 1;
        }
    }
    assert_eq!(hits, 10);
}

#[test]
fn full_size_sweep_record_is_the_full_fusion() {
    let hyper = LogRegHyper::default();
    let (dev, _) = generate(&SynthScenario::s1(1)).unwrap();
    let (eval, _) = generate(&SynthScenario::s1(2)).unwrap();
    let sweep = prune_sweep(&dev, &eval, PruneMode::ByWeight, &hyper).unwrap();
    let full = logreg_fuse(&logreg_fit(&dev, &hyper).unwrap(), &eval).unwrap();
    assert_eq!(sweep.records[0].eer, metrics::eer(&full, eval.labels()).unwrap());
    assert_eq!(sweep.records[0].params, dev.pool().total_params());

    let by_eer = prune_sweep(&dev, &eval, PruneMode::ByIndividualEer, &hyper).unwrap();
    // S1 detectors improve with index, so the worst goes first
    assert_eq!(by_eer.records[1].active, (1..12).collect::<Vec<_>>());
    assert_eq!(by_eer.records[11].active, vec![11]);
}

#[test]
fn training_separable_scores() {
    let (m, _) = generate(&SynthScenario::sep(9)).unwrap();
    let model = logreg_fit(&m, &LogRegHyper::default()).unwrap();
    let eer = metrics::eer(&logreg_fuse(&model, &m).unwrap(), m.labels()).unwrap();
    assert!(eer < 0.01, "{eer}");
    assert!(model.weights.iter().all(|w| w.is_finite()));
}

#[test]
fn singleton_average_equals_detector() {
    let (m, _) = generate(&SynthScenario::s1(3)).unwrap();
    for k in 0..m.n_detectors() {
        let avg = average_fusion(&[k], &m).unwrap();
        let one_hot = Chromosome::Binary(BinaryChromosome::one_hot(m.n_detectors(), k));
        assert_eq!(avg, evaluate(&one_hot, &m, DEFAULT_CUTOFF).unwrap());
    }
}

#[test]
fn k_detector_average_follows_the_closed_form() {
    for k in [2usize, 3, 4] {
        let scenario = SynthScenario {
            detectors: (0..k).map(|i| SynthDetectorSpec::new(format!("d{i}"), 1.0, 0.0, 1)).collect(),
            n_bonafide: 100_000,
            n_spoof: 100_000,
            seed: k as u64,
        };
        let (m, truth) = generate(&scenario).unwrap();
        let all = (0..k).collect::<Vec<_>>();
        let fused = average_fusion(&all, &m).unwrap().eer;
        let expected = analytic_eer((k as f64).sqrt());
        assert!((fused - expected).abs() < 0.005, "k={k}: {fused} vs {expected}");
        assert!((truth.average_eer - expected).abs() < 1e-9, "{} {expected}", truth.average_eer);
    }
}

#[test]
fn complementary_pair_fuses_below_either() {
    let scenario = SynthScenario {
        detectors: vec![
            SynthDetectorSpec::new("a", 2.0, 0.0, 1),
            SynthDetectorSpec::new("b", 2.0, 0.0, 1),
        ],
        n_bonafide: 20_000,
        n_spoof: 20_000,
        seed: 77,
    };
    let (m, _) = generate(&scenario).unwrap();
    let pair = average_fusion(&[0, 1], &m).unwrap().eer;
    let best = average_fusion(&[0], &m).unwrap().eer.min(average_fusion(&[1], &m).unwrap().eer);
    assert!(pair < best);
}
