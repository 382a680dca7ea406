mod common;

use diarconf::confidence::{score, ConfidenceConfig, Method, SpectralBasis};
use diarconf::spectral::SpectralParams;
use diarconf::{spectral_diarize, Diarization, SynthSpec};

fn scores(method: Method, d: &Diarization, track: &diarconf::Track) -> Vec<f64> {
    score(method, d, track, None, &ConfidenceConfig::default()).unwrap().into_iter().map(|a| a.score).collect()
}

#[test]
fn speaker_names_do_not_matter() {
    let c = diarconf::generate(&SynthSpec { seed: 3, conversation_length: 60.0, ..Default::default() }, "c", 0).unwrap();
    let renamed = c.hypothesis.relabel(|s| format!("zz_{s}")).unwrap();
    for m in Method::BLACK_BOX {
        assert_eq!(scores(m, &c.hypothesis, &c.track), scores(m, &renamed, &c.track), "{m}");
    }
}

#[test]
fn embedding_scale_does_not_matter() {
    let c = diarconf::generate(&SynthSpec { seed: 4, conversation_length: 60.0, ..Default::default() }, "c", 0).unwrap();
    let scaled = c.track.scaled(|i| 0.5 + (i % 7) as f64).unwrap();
    for m in Method::BLACK_BOX {
        for (a, b) in scores(m, &c.hypothesis, &c.track).iter().zip(scores(m, &c.hypothesis, &scaled)) {
            assert!((a - b).abs() < 1e-12, "{m}: {a} vs {b}");
        }
    }
}

#[test]
fn single_speaker_silhouette_falls_back_to_cosine() {
    let spec = SynthSpec { seed: 5, num_speakers: 1, error_rate: 0.0, conversation_length: 40.0, ..Default::default() };
    let c = diarconf::generate(&spec, "c", 0).unwrap();
    assert_eq!(scores(Method::Silhouette, &c.hypothesis, &c.track), scores(Method::Cosine, &c.hypothesis, &c.track));
}

#[test]
fn corrupted_segments_score_lower_on_average() {
    for m in Method::BLACK_BOX {
        let (mut bad, mut good) = (Vec::new(), Vec::new());
        for c in common::battery().iter().take(6) {
            for (s, corrupted) in scores(m, &c.hypothesis, &c.track).into_iter().zip(&c.error_mask) {
                if *corrupted { bad.push(s) } else { good.push(s) }
            }
        }
        // probability that a random corrupted segment ranks below a random correct one
        let wins = bad.iter().flat_map(|b| good.iter().map(move |g| (b < g) as u32 as f64)).sum::<f64>();
        let auc = wins / (bad.len() * good.len()) as f64;
        assert!(auc > 0.75, "{m}: {auc}");
    }
}

#[test]
fn spectral_scores_need_a_basis() {
    let (track, _) = common::planted_track(&mut common::rng(7), &[30, 30], 16);
    let sd = spectral_diarize(&track, &SpectralParams::default()).unwrap();
    let cfg = ConfidenceConfig::default();
    assert!(score(Method::Spectral, &sd.diarization, &track, None, &cfg).is_err());
    let basis = SpectralBasis::from_decomposition("planted", &sd.decomposition, &sd.assignment);
    let anns = score(Method::Spectral, &sd.diarization, &track, Some(&basis), &cfg).unwrap();
    assert_eq!(anns.len(), sd.diarization.len());
    assert!(anns.iter().all(|a| a.score.is_finite() && a.score <= 1.0 + 1e-12));
}
