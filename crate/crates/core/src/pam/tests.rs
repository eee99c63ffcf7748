use super::*;
use crate::metrics::sequence_score;
use crate::sdr::{project_up, random_sdr};

fn params() -> PamParams {
    PamParams::new(100, 4, 5)
}

fn sdr(n: usize, idx: &[u32]) -> Sdr {
    Sdr::from_indices(n, idx.iter().copied()).unwrap()
}

fn random_seq(len: usize, seed: u64) -> Vec<Sdr> {
    let mut rng = Rng::new(seed);
    (0..len).map(|_| random_sdr(100, 5, &mut rng).unwrap()).collect()
}

/// Dense `{0,1}` latent vector.
fn dense_latent(z: &LatentSdr) -> Vec<f64> {
    let mut v = vec![0.0; z.columns() * z.rows()];
    for &i in z.flat() {
        v[i as usize] = 1.0;
    }
    v
}

fn random_posterior(n_c: usize, n_k: usize, count: usize, rng: &mut Rng) -> LatentSdr {
    let cols = random_sdr(n_c, count, rng).unwrap();
    let pairs: Vec<(u32, u32)> = cols
        .active()
        .iter()
        .map(|&c| (c, rng.random_range(0..n_k as u32)))
        .collect();
    LatentSdr::from_pairs(n_c, n_k, LatentKind::Posterior, pairs).unwrap()
}

#[test]
fn params_defaults_and_validation() {
    let p = params();
    assert_eq!(p.theta_a, 4.0);
    assert_eq!(p.theta_b, 0.5);
    assert_eq!((p.eta_a_plus, p.eta_a_minus, p.eta_b_plus, p.eta_b_minus), (0.1, 0.0, 0.1, -0.1));
    assert_eq!(p.sample_width, 1);
    p.validate().unwrap();

    let mut bad = params();
    bad.w = 101;
    assert!(PamModel::new(bad, 0).is_err());
    let mut bad = params();
    bad.eta_b_minus = 0.0;
    assert!(bad.validate().is_err());
    let mut bad = params();
    bad.theta_a = 0.0;
    assert!(bad.validate().is_err());
    let mut bad = params();
    bad.n_k = 0;
    assert!(bad.validate().is_err());
}

#[test]
fn create_shapes_bounds_determinism() {
    let m = PamModel::new(params(), 17).unwrap();
    assert_eq!(m.transition_weights().len(), 400 * 400);
    assert_eq!(m.emission_weights().len(), 100 * 100);
    assert_eq!(m.start_rows().len(), 100);
    assert!(m.start_rows().iter().all(|&r| r < 4));
    assert!(m
        .transition_weights()
        .iter()
        .chain(m.emission_weights())
        .all(|w| (-1.0..=1.0).contains(w)));
    assert_eq!(m, PamModel::new(params(), 17).unwrap());
    assert_ne!(m, PamModel::new(params(), 18).unwrap());
}

#[test]
fn fresh_model_predicts_nothing() {
    let mut empty = 0;
    for seed in 0..200u64 {
        let mut m = PamModel::new(params(), seed).unwrap();
        let mut rng = Rng::new(seed ^ 0xabc);
        let z = random_posterior(100, 4, 5, &mut rng);
        let (_, prior) = m.predict(&z).unwrap();
        if prior.is_empty() {
            empty += 1;
        }
        // keep the rng busy so models are not trivially identical
        m.select_context(&m.predict(&z).unwrap().0, &Sdr::empty(100)).unwrap();
    }
    assert!(empty as f64 / 200.0 >= 0.99, "{empty}/200");
}

#[test]
fn predict_empty_and_single_synapse() {
    let m = PamModel::new(params(), 1).unwrap();
    let empty = LatentSdr::empty(100, 4, LatentKind::Posterior);
    let (logits, prior) = m.predict(&empty).unwrap();
    assert!(logits.values().iter().all(|&v| v == 0.0));
    assert!(prior.is_empty());

    let mut p = PamParams::new(10, 2, 1);
    p.theta_a = 0.8;
    p.weight_init_std = 0.0;
    let mut m = PamModel::new(p, 1).unwrap();
    let pre = 7usize; // (3, 1)
    let post = 12usize; // (6, 0)
    m.transition_weights_mut()[pre * 20 + post] = 1.0;
    let z = LatentSdr::from_pairs(10, 2, LatentKind::Posterior, [(3, 1)]).unwrap();
    let (_, prior) = m.predict(&z).unwrap();
    assert_eq!(prior.pairs().collect::<Vec<_>>(), vec![(6, 0)]);

    let wrong = LatentSdr::empty(10, 3, LatentKind::Posterior);
    assert!(matches!(m.predict(&wrong), Err(Error::Shape(_))));
}

#[test]
fn logits_match_dense_product() {
    let mut rng = Rng::new(77);
    for seed in 0..20u64 {
        let mut p = PamParams::new(10, 2, 3);
        p.weight_init_std = 0.4;
        let m = PamModel::new(p, seed).unwrap();
        let z = random_posterior(10, 2, 3, &mut rng);
        let dense = dense_latent(&z);
        let (logits, prior) = m.predict(&z).unwrap();
        let a = m.transition_weights();
        for q in 0..20 {
            let mut want = 0.0f64;
            for (pre, &zp) in dense.iter().enumerate() {
                want += zp * a[pre * 20 + q] as f64;
            }
            assert_eq!(logits.values()[q], want);
            assert_eq!(prior.flat().contains(&(q as u32)), want >= m.params().theta_a);
        }
    }
}

#[test]
fn context_unique_predictive_row_wins() {
    let mut m = PamModel::new(params(), 3).unwrap();
    let mut values = vec![0.0; 400];
    values[5 * 4 + 1] = 10.0;
    let logits = Logits { columns: 100, rows: 4, values };
    for _ in 0..50 {
        let z = m.select_context(&logits, &sdr(100, &[5])).unwrap();
        assert_eq!(z.pairs().collect::<Vec<_>>(), vec![(5, 1)]);
    }
    let z = m.select_context(&logits, &Sdr::empty(100)).unwrap();
    assert!(z.is_empty());
}

#[test]
fn context_uniform_without_prediction() {
    let logits = Logits { columns: 100, rows: 4, values: vec![0.0; 400] };
    let mut counts = [0usize; 4];
    let mut m = PamModel::new(PamParams::new(100, 4, 5), 9).unwrap();
    for _ in 0..2000 {
        let z = m.select_context(&logits, &sdr(100, &[9])).unwrap();
        counts[z.pairs().next().unwrap().1 as usize] += 1;
    }
    for c in counts {
        let f = c as f64 / 2000.0;
        assert!((f - 0.25).abs() <= 0.03, "{counts:?}");
    }
}

#[test]
fn context_uniform_among_several_predictive() {
    let mut m = PamModel::new(params(), 4).unwrap();
    let mut values = vec![0.0; 400];
    values[2 * 4] = 5.0;
    values[2 * 4 + 3] = 9.0;
    let logits = Logits { columns: 100, rows: 4, values };
    let mut counts = [0usize; 4];
    for _ in 0..2000 {
        let z = m.select_context(&logits, &sdr(100, &[2])).unwrap();
        counts[z.pairs().next().unwrap().1 as usize] += 1;
    }
    assert_eq!(counts[1] + counts[2], 0);
    assert!((counts[0] as f64 / 2000.0 - 0.5).abs() < 0.05, "{counts:?}");
}

#[test]
fn posterior_has_one_row_per_column() {
    let mut m = PamModel::new(params(), 5).unwrap();
    let x = random_sdr(100, 5, &mut Rng::new(2)).unwrap();
    let (logits, _) = m.predict(&m.start_posterior(&x).unwrap()).unwrap();
    let z = m.select_context(&logits, &x).unwrap();
    assert_eq!(z.len(), x.len());
    assert_eq!(project_down(&z), x);
    assert!(z.is_subset(&project_up(&x, 4).unwrap()));
}

/// Dense reference: `A += ηA⁺ z_prev z_postᵀ + ηA⁻ z_prev (1 - z_post)ᵀ`.
fn transition_oracle(a: &[f32], zp: &[f64], zq: &[f64], plus: f64, minus: f64) -> Vec<f32> {
    let n = zp.len();
    let mut out = a.to_vec();
    for p in 0..n {
        for q in 0..n {
            let delta = plus * zp[p] * zq[q] + minus * zp[p] * (1.0 - zq[q]);
            out[p * n + q] = (a[p * n + q] + delta as f32).clamp(-1.0, 1.0);
        }
    }
    out
}

/// Dense reference: `B += ηB⁺ x xᵀ + ηB⁻ (x dᵀ + d xᵀ)`, `d = union \ x`.
fn emission_oracle(b: &[f32], x: &[f64], union: &[f64], plus: f64, minus: f64) -> Vec<f32> {
    let n = x.len();
    let d: Vec<f64> = union.iter().zip(x).map(|(&u, &xi)| u * (1.0 - xi)).collect();
    let mut out = b.to_vec();
    for i in 0..n {
        for j in 0..n {
            let delta = plus * x[i] * x[j] + minus * (x[i] * d[j] + d[i] * x[j]);
            out[i * n + j] = (b[i * n + j] + delta as f32).clamp(-1.0, 1.0);
        }
    }
    out
}

#[test]
fn transition_update_single_synapse() {
    let mut m = PamModel::new(params(), 6).unwrap();
    let before = m.transition_weights().to_vec();
    let zp = LatentSdr::from_pairs(100, 4, LatentKind::Posterior, [(3, 2)]).unwrap();
    let zq = LatentSdr::from_pairs(100, 4, LatentKind::Posterior, [(8, 1)]).unwrap();
    m.update_transition(&zp, &zq).unwrap();
    let (p, q) = (3 * 4 + 2, 8 * 4 + 1);
    for (k, (&a, &b)) in before.iter().zip(m.transition_weights()).enumerate() {
        if k == p * 400 + q {
            assert_eq!(b, (a + 0.1f32).clamp(-1.0, 1.0));
        } else {
            assert_eq!(a, b);
        }
    }
    let snapshot = m.clone();
    m.update_transition(&LatentSdr::empty(100, 4, LatentKind::Posterior), &zq).unwrap();
    assert_eq!(m, snapshot);
}

#[test]
fn transition_update_matches_outer_product() {
    let mut rng = Rng::new(11);
    for case in 0..30u64 {
        let n_c = 3 + (case as usize % 18);
        let mut p = PamParams::new(n_c, 4, 2.min(n_c));
        p.weight_init_std = 0.7;
        if case % 2 == 1 {
            p.eta_a_minus = -0.05;
        }
        let mut m = PamModel::new(p.clone(), case).unwrap();
        let zp = random_posterior(n_c, 4, 1 + case as usize % n_c.min(5), &mut rng);
        let zq = random_posterior(n_c, 4, 1 + (case as usize + 2) % n_c.min(5), &mut rng);
        let want = transition_oracle(
            m.transition_weights(),
            &dense_latent(&zp),
            &dense_latent(&zq),
            p.eta_a_plus,
            p.eta_a_minus,
        );
        m.update_transition(&zp, &zq).unwrap();
        assert_eq!(m.transition_weights(), &want[..], "case {case}");
    }
}

#[test]
fn emission_update_cases() {
    let mut p = PamParams::new(10, 2, 2);
    p.weight_init_std = 0.0;
    let mut m = PamModel::new(p, 0).unwrap();
    m.update_emission(&sdr(10, &[1, 2]), &sdr(10, &[1, 2])).unwrap();
    let b = m.emission_weights();
    for i in 0..10 {
        for j in 0..10 {
            let want = if [1, 2].contains(&i) && [1, 2].contains(&j) { 0.1f32 } else { 0.0 };
            assert_eq!(b[i * 10 + j], want, "({i},{j})");
        }
    }

    let mut p = PamParams::new(10, 2, 2);
    p.weight_init_std = 0.0;
    let mut m = PamModel::new(p, 0).unwrap();
    m.update_emission(&sdr(10, &[1]), &sdr(10, &[1, 5])).unwrap();
    let b = m.emission_weights();
    assert_eq!(b[11], 0.1);
    assert_eq!(b[15], -0.1);
    assert_eq!(b[51], -0.1);
    assert_eq!(b.iter().filter(|&&v| v != 0.0).count(), 3);

    let snapshot = m.clone();
    m.update_emission(&Sdr::empty(10), &sdr(10, &[3, 4])).unwrap();
    assert_eq!(m, snapshot);
}

#[test]
fn emission_update_matches_outer_product() {
    let mut rng = Rng::new(12);
    for case in 0..30u64 {
        let n = 4 + (case as usize % 17);
        let mut p = PamParams::new(n, 4, 2);
        p.weight_init_std = 0.7;
        let mut m = PamModel::new(p.clone(), case).unwrap();
        let x = random_sdr(n, 1 + case as usize % 3, &mut rng).unwrap();
        let extra = random_sdr(n, 1 + case as usize % 4, &mut rng).unwrap();
        let union = if case % 3 == 0 { extra.clone() } else { extra.union(&x) };
        let dx: Vec<f64> = x.to_dense().iter().map(|&v| v as f64).collect();
        let du: Vec<f64> = union.to_dense().iter().map(|&v| v as f64).collect();
        let want = emission_oracle(m.emission_weights(), &dx, &du, p.eta_b_plus, p.eta_b_minus);
        m.update_emission(&x, &union).unwrap();
        assert_eq!(m.emission_weights(), &want[..], "case {case}");
    }
}

#[test]
fn weights_stay_clamped_under_repetition() {
    let mut m = PamModel::new(PamParams::new(20, 2, 3), 3).unwrap();
    let mut rng = Rng::new(1);
    for _ in 0..40 {
        let zp = random_posterior(20, 2, 3, &mut rng);
        let zq = random_posterior(20, 2, 3, &mut rng);
        m.update_transition(&zp, &zq).unwrap();
        m.update_transition(&zp, &zq).unwrap();
        let x = random_sdr(20, 3, &mut rng).unwrap();
        m.update_emission(&x, &random_sdr(20, 6, &mut rng).unwrap()).unwrap();
    }
    let max = m
        .transition_weights()
        .iter()
        .chain(m.emission_weights())
        .fold(0.0f32, |a, &v| a.max(v.abs()));
    assert!(max <= 1.0);
    assert_eq!(max, 1.0);
}

#[test]
fn settle_with_zero_emission_is_empty() {
    let mut p = params();
    p.weight_init_std = 0.0;
    let m = PamModel::new(p, 0).unwrap();
    let x = sdr(100, &[1, 2, 3]);
    let out = m.settle(&x, &x).unwrap();
    assert!(out.pattern.is_empty());
    assert!(out.iterations <= 2);
    assert!(out.converged);
}

#[test]
fn settle_stays_inside_allowed() {
    let mut p = PamParams::new(30, 2, 3);
    p.weight_init_std = 0.5;
    let mut rng = Rng::new(5);
    for seed in 0..20 {
        let m = PamModel::new(p.clone(), seed).unwrap();
        let allowed = random_sdr(30, 8, &mut rng).unwrap();
        let init = random_sdr(30, 3, &mut rng).unwrap();
        let out = m.settle(&init, &allowed).unwrap();
        assert!(out.pattern.is_subset(&allowed));
        assert!(out.iterations <= 100);
    }
}

#[test]
fn learn_rejects_short_or_mismatched_input() {
    let mut m = PamModel::new(params(), 0).unwrap();
    let xs = random_seq(1, 0);
    assert!(matches!(m.learn_sequence(&xs), Err(Error::InvalidInput(_))));
    let bad = vec![Sdr::empty(100), Sdr::empty(99)];
    assert!(matches!(m.learn_sequence(&bad), Err(Error::Shape(_))));
}

#[test]
fn learn_two_patterns() {
    let xs = random_seq(2, 21);
    let mut m = PamModel::new(params(), 21).unwrap();
    let stats = m.learn_sequence(&xs).unwrap();
    assert!(stats.all_converged());
    assert!(stats.off_cardinality.is_empty());
    let z0 = m.start_posterior(&xs[0]).unwrap();
    let (_, prior) = m.predict(&z0).unwrap();
    let union = project_down(&prior);
    assert!(xs[1].is_subset(&union));
    assert_eq!(m.settle(&xs[1], &xs[1]).unwrap().pattern, xs[1]);
    for &b in xs[1].active() {
        let seed = sdr(100, &[b]);
        assert_eq!(m.settle(&seed, &xs[1]).unwrap().pattern, xs[1]);
    }
}

#[test]
fn learn_flags_off_cardinality_patterns() {
    let mut xs = random_seq(3, 2);
    xs[1] = random_sdr(100, 6, &mut Rng::new(99)).unwrap();
    let mut m = PamModel::new(params(), 2).unwrap();
    let stats = m.learn_sequence(&xs).unwrap();
    assert_eq!(stats.off_cardinality, vec![1]);
}

#[test]
fn shared_start_learns_union_of_possibilities() {
    let xs = random_seq(3, 30);
    let mut m = PamModel::new(params(), 30).unwrap();
    m.learn_sequence(&[xs[0].clone(), xs[1].clone()]).unwrap();
    m.learn_sequence(&[xs[0].clone(), xs[2].clone()]).unwrap();
    let (_, prior) = m.predict(&m.start_posterior(&xs[0]).unwrap()).unwrap();
    let union = project_down(&prior);
    assert!(xs[1].union(&xs[2]).is_subset(&union));
}

#[test]
fn one_shot_recall_of_ten_patterns() {
    for seed in 0..5u64 {
        let xs = random_seq(10, 100 + seed);
        let mut m = PamModel::new(params(), seed).unwrap();
        let stats = m.learn_sequence(&xs).unwrap();
        assert!(stats.all_converged(), "seed {seed}: {:?}", stats.transitions);
        let gen = m
            .generate(GenerateInput::Offline { seed: &xs[0], steps: 9 })
            .unwrap();
        assert_eq!(gen.exhausted_at, None);
        let mut pred = vec![xs[0].clone()];
        pred.extend(gen.patterns);
        assert_eq!(sequence_score(&pred, &xs).unwrap(), 1.0, "seed {seed}");
    }
}

#[test]
fn generation_reports_exhaustion() {
    let xs = random_seq(3, 40);
    let mut m = PamModel::new(params(), 40).unwrap();
    m.learn_sequence(&xs).unwrap();
    let gen = m
        .generate(GenerateInput::Offline { seed: &xs[0], steps: 6 })
        .unwrap();
    assert_eq!(gen.patterns.len(), 2);
    assert_eq!(gen.exhausted_at, Some(3));
    assert!(m.generate(GenerateInput::Offline { seed: &xs[0], steps: 0 }).is_err());
    assert!(m.generate(GenerateInput::Online { observations: &xs[..1] }).is_err());
}

#[test]
fn online_generation_is_noise_free_identity() {
    let xs = random_seq(12, 50);
    let mut m = PamModel::new(params(), 50).unwrap();
    m.learn_sequence(&xs).unwrap();
    let gen = m.generate(GenerateInput::Online { observations: &xs }).unwrap();
    assert_eq!(gen.patterns, xs[1..].to_vec());
    assert!(gen.steps.iter().all(|s| !s.fallback));
}

#[test]
fn disjoint_sequences_do_not_interfere() {
    // First sequence lives in columns 0..50, second in 50..100.
    let mut rng = Rng::new(60);
    let low: Vec<Sdr> = (0..8)
        .map(|_| random_sdr(50, 5, &mut rng).unwrap())
        .map(|s| Sdr::from_indices(100, s.active().iter().copied()).unwrap())
        .collect();
    let high: Vec<Sdr> = (0..8)
        .map(|_| random_sdr(50, 5, &mut rng).unwrap())
        .map(|s| Sdr::from_indices(100, s.active().iter().map(|&i| i + 50)).unwrap())
        .collect();
    let mut m = PamModel::new(params(), 60).unwrap();
    let first = m.learn_sequence(&low).unwrap();
    let priors = |m: &PamModel| -> Vec<LatentSdr> {
        first.posteriors[..first.posteriors.len() - 1]
            .iter()
            .map(|z| m.predict(z).unwrap().1)
            .collect()
    };
    let before = priors(&m);
    let second = m.learn_sequence(&high).unwrap();
    for a in &first.posteriors {
        for b in &second.posteriors {
            assert!(a.flat().iter().all(|i| !b.flat().contains(i)));
        }
    }
    assert_eq!(priors(&m), before);
}

#[test]
fn runs_are_reproducible() {
    let xs = random_seq(10, 70);
    let run = || {
        let mut m = PamModel::new(params(), 70).unwrap();
        m.learn_sequence(&xs).unwrap();
        let g = m
            .generate(GenerateInput::Offline { seed: &xs[0], steps: 9 })
            .unwrap();
        (m, g)
    };
    assert_eq!(run(), run());
}

#[test]
fn persistence_round_trip() {
    let xs = random_seq(6, 80);
    let mut m = PamModel::new(params(), 80).unwrap();
    m.learn_sequence(&xs).unwrap();
    let bytes = m.to_bytes();
    assert_eq!(&bytes[..4], b"PAMW");
    assert_eq!(bytes, m.to_bytes());
    let back = PamModel::from_bytes(&bytes).unwrap();
    assert_eq!(back, m);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.pamw");
    m.save(&path).unwrap();
    assert_eq!(PamModel::load(&path).unwrap(), m);
}

#[test]
fn persistence_rejects_damage() {
    let m = PamModel::new(PamParams::new(10, 2, 2), 1).unwrap();
    let bytes = m.to_bytes();

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(PamModel::from_bytes(&bad), Err(Error::Format { offset: 0, .. })));

    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(PamModel::from_bytes(&bad), Err(Error::Format { offset: 4, .. })));

    let truncated = &bytes[..bytes.len() - 7];
    assert!(matches!(PamModel::from_bytes(truncated), Err(Error::Format { .. })));

    let mut bad = bytes.clone();
    let mid = bytes.len() / 2;
    bad[mid] ^= 0x40;
    assert!(matches!(PamModel::from_bytes(&bad), Err(Error::Format { .. })));

    assert!(matches!(PamModel::from_bytes(&bytes[..3]), Err(Error::Format { .. })));
}
