use classdeg_core::class_degree::{minimal_transition_block, TransitionBlock};
use classdeg_core::joinings::{d2_membership, PairPath, RijSampler, DEFAULT_D2_WIDTH};
use classdeg_core::measures::{hp, EntropyOptions, MarkovMeasure, Potential, PushforwardMeasure};
use classdeg_core::splicing::{
    attach_jump_labels, build_routing_functions, distinguishability_exact, estimate_delta, jump_entropy_check,
    lemma_t0_check, pattern_holds, splice, support_pairs, switch_positions, DeltaConfig, EtaParams, RoutingFunctions,
    Separator,
};
use classdeg_core::{corpus, rng, FactorTriple};
use proptest::prelude::*;

struct Pipeline {
    sampler: RijSampler,
    tb: TransitionBlock,
    routing: RoutingFunctions,
}

fn pipeline(t: FactorTriple, mu1: MarkovMeasure, mu2: MarkovMeasure) -> Pipeline {
    let nu = PushforwardMeasure::new(mu1.clone(), t.clone()).unwrap();
    let tb = minimal_transition_block(&t, &nu, 6).unwrap().block;
    let pairs = support_pairs(&t, &mu1, &mu2, &tb, 1 << 20).unwrap();
    let routing = build_routing_functions(&t, &tb, &pairs).unwrap();
    let sampler = RijSampler::new(mu1, mu2, t).unwrap();
    Pipeline { sampler, tb, routing }
}

fn t1_pipeline() -> Pipeline {
    let t = corpus::t1();
    let (b3, b7) = (corpus::bernoulli(&t, 0.3), corpus::bernoulli(&t, 0.7));
    pipeline(t, b3, b7)
}

fn corpus_pipelines() -> Vec<(&'static str, Pipeline)> {
    let id = corpus::identity_golden_mean();
    let parry = MarkovMeasure::parry(id.x()).unwrap();
    vec![
        ("t1", t1_pipeline()),
        ("identity", pipeline(id, parry.clone(), parry)),
        ("t3", pipeline(corpus::t3(), corpus::t3_measure(0.3), corpus::t3_measure(0.3))),
    ]
}

#[test]
fn splices_are_legal_and_keep_the_image() {
    for (name, pl) in corpus_pipelines() {
        let t = pl.sampler.triple();
        let params = EtaParams::new(pl.tb.w.len() + 4, 0.25).unwrap();
        let (mut splices, mut stream) = (0, 0);
        while splices < 100_000 {
            let mut r = rng::stream(11, stream);
            stream += 1;
            let pair = pl.sampler.sample(20_000, &mut r).unwrap();
            let head = PairPath::new(t, pair.x[..64].to_vec(), pair.xp[..64].to_vec()).unwrap();
            if !d2_membership(t, &head, DEFAULT_D2_WIDTH) {
                continue;
            }
            let sample = attach_jump_labels(pair, &pl.tb.w, params, &mut r).unwrap();
            let out = splice(&sample, &pl.routing).unwrap();
            assert!(t.x().is_legal(&out.x) && t.x().is_legal(&out.xp), "{name}");
            assert_eq!(t.image(&out.x), sample.pair.y, "{name}");
            assert_eq!(t.image(&out.xp), sample.pair.y, "{name}");
            splices += switch_positions(&sample).len();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_follow_the_block_pattern(extra in 1usize..8, p in 0.01f64..0.5, seed in any::<u64>(), which in 0usize..2) {
        let (_, pl) = &corpus_pipelines()[which];
        let n = pl.tb.w.len() + extra;
        let mut r = rng::seeded(seed);
        let pair = pl.sampler.sample(400, &mut r).unwrap();
        let Ok(sample) = attach_jump_labels(pair, &pl.tb.w, EtaParams::new(n, p).unwrap(), &mut r) else { return Ok(()) };
        prop_assert!(pattern_holds(&sample.t, n));
        for (i, &s) in sample.t.iter().enumerate() {
            prop_assert_eq!(s != 0, sample.marks.contains(&i));
        }
    }

    #[test]
    fn spliced_paths_agree_with_labels(seed in any::<u64>()) {
        let pl = t1_pipeline();
        let k = pl.tb.w.len();
        let mut r = rng::seeded(seed);
        let pair = pl.sampler.sample(300, &mut r).unwrap();
        let sample = attach_jump_labels(pair, &pl.tb.w, EtaParams::new(k + 2, 0.3).unwrap(), &mut r).unwrap();
        let out = splice(&sample, &pl.routing).unwrap();
        // outside crossing blocks z copies x under label 1 and x' under label 2
        let mut label = sample.initial;
        let mut skip_until = 0;
        for i in 0..out.len() {
            if sample.t[i] == 1 || sample.t[i] == 2 {
                if sample.t[i] != label {
                    skip_until = i + k;
                }
                label = sample.t[i];
            }
            if i >= skip_until {
                let src = if label == 1 { &sample.pair.x } else { &sample.pair.xp };
                prop_assert_eq!(out.x[i], src[i]);
            }
        }
    }
}

#[test]
fn delta_reports_are_reproducible() {
    let pl = t1_pipeline();
    let (mu1, mu2) = (pl.sampler.mu1(), pl.sampler.mu2());
    let sep = Separator::choose(mu1, mu2, 3).unwrap();
    let dist = distinguishability_exact(mu1, mu2, &sep, 8, pl.tb.w.len()).unwrap();
    let v = Potential::zero(pl.sampler.triple().x());
    let cfg = DeltaConfig { params: EtaParams::new(8, 0.1).unwrap(), trials: 4, path_len: 5_000, seed: 3 };
    let a = estimate_delta(&pl.sampler, &v, &pl.routing, &dist, &cfg).unwrap();
    let b = estimate_delta(&pl.sampler, &v, &pl.routing, &dist, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = estimate_delta(&pl.sampler, &v, &pl.routing, &dist, &DeltaConfig { seed: 4, ..cfg }).unwrap();
    assert_ne!(a.delta_hat, c.delta_hat);
}

#[test]
fn directional_switch_frequency_is_bounded() {
    for (name, pl) in corpus_pipelines().into_iter().take(2) {
        let k = pl.tb.w.len();
        let nu_w = pl.sampler.nu().prob(&pl.tb.w);
        for (n, p) in [(k + 4, 0.25), (k + 10, 0.1)] {
            let params = EtaParams::new(n, p).unwrap();
            let freqs: Vec<f64> = (0..40)
                .map(|i| {
                    let mut r = rng::stream(21, i);
                    let pair = pl.sampler.sample(20_000, &mut r).unwrap();
                    let sample = attach_jump_labels(pair, &pl.tb.w, params, &mut r).unwrap();
                    let to_two = switch_positions(&sample).into_iter().filter(|&i| sample.t[i] == 2).count();
                    (to_two * k) as f64 / sample.pair.len() as f64
                })
                .collect();
            let m = freqs.iter().sum::<f64>() / freqs.len() as f64;
            let var = freqs.iter().map(|f| (f - m).powi(2)).sum::<f64>() / (freqs.len() - 1) as f64;
            let se = (var / freqs.len() as f64).sqrt();
            let bound = k as f64 * nu_w * p * (1.0 - p) / n as f64;
            assert!(m <= bound + 3.0 * se, "{name} N={n} p={p}: {m} vs {bound} ± {se}");
        }
    }
}

#[test]
fn jump_entropy_matches_closed_form() {
    let mu = MarkovMeasure::parry(&corpus::golden_mean()).unwrap();
    let params = EtaParams::new(4, 0.25).unwrap();
    let rep = jump_entropy_check(&mu, &[0, 1], params, 1_000_000, 5, &EntropyOptions::with_k(4)).unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let closed = phi.ln() + rep.mu_a * hp(0.25).unwrap() / 4.0;
    assert!((rep.closed_form - closed).abs() < 1e-12);
    assert!((rep.mu_a - 1.0 / (phi * phi + 1.0)).abs() < 1e-12);
    assert!(rep.gap.abs() < 3.0 * rep.empirical.stderr && rep.gap.abs() < 0.01, "{rep:?}");
}

#[test]
fn t0_product_identity_on_a_grid() {
    let mu = MarkovMeasure::parry(&corpus::golden_mean()).unwrap();
    let params = EtaParams::new(4, 0.25).unwrap();
    let cells: [(&[usize], &[u8]); 6] =
        [(&[0], &[1]), (&[0], &[2]), (&[0, 1], &[3]), (&[0, 1, 0], &[1, 2]), (&[1], &[1]), (&[0, 0], &[2, 3])];
    for (i, (b, c)) in cells.iter().enumerate() {
        let rep = lemma_t0_check(&mu, &[0, 1], b, c, params, 300_000, 40 + i as u64).unwrap();
        let tol = 3.0 * rep.stderr + 1e-12;
        assert!((rep.empirical - rep.expected).abs() <= tol, "B={b:?} C'={c:?}: {rep:?}");
    }
}

#[test]
fn gain_never_falls_below_the_chain_bound() {
    let pl = t1_pipeline();
    let (mu1, mu2) = (pl.sampler.mu1(), pl.sampler.mu2());
    let sep = Separator::choose(mu1, mu2, 3).unwrap();
    let v = Potential::zero(pl.sampler.triple().x());
    for n in [8, 16] {
        let dist = distinguishability_exact(mu1, mu2, &sep, n, pl.tb.w.len()).unwrap();
        for p in [0.1, 0.25] {
            let cfg = DeltaConfig { params: EtaParams::new(n, p).unwrap(), trials: 8, path_len: 20_000, seed: 9 };
            let r = estimate_delta(&pl.sampler, &v, &pl.routing, &dist, &cfg).unwrap();
            let width = r.delta_ci.1 - r.delta_ci.0;
            assert!(r.delta_hat >= r.chain_lower - 3.0 * width, "N={n} p={p}: {} < {}", r.delta_hat, r.chain_lower);
            assert!((r.jump_gain - r.nu_w * hp(p).unwrap() / n as f64).abs() < 1e-12);
        }
    }
}
