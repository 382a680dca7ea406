mod common;

use diarconf::confidence::{ConfidenceAnnotation, Method};
use diarconf::metrics::{cder_breakdown, compute_der, der_breakdown, partition_by_confidence, ScoringConfig};
use diarconf::synth::ErrorBias;
use diarconf::{Diarization, Error, SynthSpec, Timeline};
use rand::Rng;

#[test]
fn der_matches_frame_oracle() {
    let mut rng = common::rng(101);
    for i in 0..60 {
        let (r, h) = common::random_instance(&mut rng);
        let collar = if i % 2 == 0 { 0.25 } else { 0.0 };
        let exclude_overlap = i % 3 != 0;
        let got = der_breakdown(&r, &h, &ScoringConfig::new(collar, exclude_overlap).unwrap(), &Timeline::empty());
        let want = common::frame_der(&r, &h, collar, exclude_overlap, &[]);
        assert!((got.miss - want.miss).abs() < 1e-6, "{i}: miss {} vs {}", got.miss, want.miss);
        assert!((got.false_alarm - want.false_alarm).abs() < 1e-6, "{i}: fa");
        assert!((got.speaker_error - want.speaker_error).abs() < 1e-6, "{i}: spk {} vs {}", got.speaker_error, want.speaker_error);
        assert!((got.scored_speech - want.scored).abs() < 1e-6, "{i}: scored");
    }
}

#[test]
fn cder_matches_frame_oracle_with_low_segments_removed() {
    let mut rng = common::rng(102);
    for i in 0..60 {
        let (r, h) = common::random_instance(&mut rng);
        let anns: Vec<ConfidenceAnnotation> = h
            .segments()
            .iter()
            .map(|s| ConfidenceAnnotation { segment: s.clone(), method: Method::Cosine, score: rng.gen(), uncovered: false })
            .collect();
        let p = partition_by_confidence(&anns, rng.gen_range(0.3..1.0));
        let low: Vec<(f64, f64)> = p.low.iter().map(|a| (a.segment.start(), a.segment.end())).collect();
        let cfg = ScoringConfig::default();
        let got = cder_breakdown(&r, &h, &p, &cfg);
        let want = common::frame_der(&r, &h, cfg.collar, cfg.exclude_overlap, &low);
        for (a, b) in [
            (got.miss, want.miss),
            (got.false_alarm, want.false_alarm),
            (got.speaker_error, want.speaker_error),
            (got.scored_speech, want.scored),
        ] {
            assert!((a - b).abs() < 1e-6, "instance {i}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn synthetic_der_equals_injected_duration() {
    let cfg = ScoringConfig::new(0.0, true).unwrap();
    for bias in [ErrorBias::Random, ErrorBias::DistanceCorrelated] {
        for seed in 0..8 {
            let spec = SynthSpec { seed, error_bias: bias, conversation_length: 90.0, ..Default::default() };
            let c = diarconf::generate(&spec, "s", seed).unwrap();
            let der = compute_der(&c.reference, &c.hypothesis, &cfg).unwrap();
            let want = c.corrupted_duration() / c.reference.total_duration();
            assert!((der.der().unwrap() - want).abs() < 1e-6, "seed {seed}: {:?} vs {want}", der.der());
            assert_eq!(der.miss + der.false_alarm, 0.0);
        }
    }
}

#[test]
fn empty_reference_is_unscorable() {
    let (_, h) = common::random_instance(&mut common::rng(103));
    let r = Diarization::empty("x");
    assert!(matches!(compute_der(&r, &h, &ScoringConfig::default()), Err(Error::Unscorable(_))));
    assert_eq!(der_breakdown(&r, &h, &ScoringConfig::default(), &Timeline::empty()).der(), None);
}

#[test]
fn hypothesis_relabeling_leaves_der_unchanged() {
    let mut rng = common::rng(104);
    for _ in 0..20 {
        let (r, h) = common::random_instance(&mut rng);
        let renamed = h.relabel(|s| format!("other_{s}")).unwrap();
        let cfg = ScoringConfig::default();
        assert_eq!(
            der_breakdown(&r, &h, &cfg, &Timeline::empty()),
            der_breakdown(&r, &renamed, &cfg, &Timeline::empty())
        );
    }
}
