use fewsel_web::ops::{kmeanspp, pe_zone, sentence_entropy};

fn two_clouds() -> Vec<f64> {
    let mut xy = Vec::new();
    for i in 0..10 {
        let t = i as f64 * 0.1;
        xy.extend([1.0 + t, 1.0 - t]);
    }
    for i in 0..10 {
        let t = i as f64 * 0.1;
        xy.extend([-40.0 + t, 30.0 + t]);
    }
    xy
}

#[test]
fn kmeanspp_hits_both_clouds() {
    for seed in 0..20 {
        let picks = kmeanspp(&two_clouds(), 2, 0, seed, false).unwrap();
        assert_eq!(picks.len(), 2);
        assert_ne!(picks[0].id / 10, picks[1].id / 10);
    }
}

#[test]
fn gamma_expansion_attaches_neighbours() {
    let picks = kmeanspp(&two_clouds(), 4, 1, 3, false).unwrap();
    assert_eq!(picks.len(), 4);
    let centers = picks.iter().filter(|p| p.id == p.center).count();
    assert_eq!(centers, 2);
    for p in picks.iter().filter(|p| p.id != p.center) {
        assert_eq!(p.id / 10, p.center / 10, "neighbour {p:?} crossed clouds");
    }
}

#[test]
fn kmeanspp_rejects_bad_input() {
    assert!(kmeanspp(&[1.0, 2.0, 3.0], 1, 0, 0, false).is_err());
    assert!(kmeanspp(&two_clouds(), 21, 0, 0, false).is_err());
}

#[test]
fn pe_zone_picks_nearest_to_target() {
    let probs = [0.5, 0.5, 0.9, 0.1, 0.99, 0.01, 0.7, 0.3];
    let z = pe_zone(&probs, 2, 0.0, 1).unwrap();
    assert_eq!(z.entropies.len(), 4);
    assert!((z.entropies[0] - std::f64::consts::LN_2).abs() < 1e-12);
    let best = (0..4)
        .min_by(|&a, &b| {
            (z.entropies[a] - z.mu)
                .abs()
                .total_cmp(&(z.entropies[b] - z.mu).abs())
        })
        .unwrap();
    assert_eq!(z.selected, vec![best]);
    assert!(pe_zone(&probs[..3], 2, 0.0, 1).is_err());
    assert!(pe_zone(&[0.5, 0.6], 2, 0.0, 1).is_err());
}

#[test]
fn familiar_sentences_have_lower_entropy() {
    let corpus = "the cat sat\nthe cat ran\nthe dog sat\n";
    let seen = sentence_entropy(corpus, "the cat sat", 3).unwrap();
    let odd = sentence_entropy(corpus, "sat dog the", 3).unwrap();
    assert!(seen < odd);
    assert!(sentence_entropy(corpus, "", 3).is_err());
}
