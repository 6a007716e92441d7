mod support;

use std::cell::RefCell;

use wslrec_core::corpus::split_users;
use wslrec_core::seqmodel::{EncoderKind, SequenceScorer};
use wslrec_core::trainer::{
    fit, sample_negatives, Adam, LabelContext, LabelStrategy, Proposal, TrainConfig,
};

#[test]
fn adam_follows_scalar_reference_on_quadratic() {
    let centers = [1.5, -2.0, 0.25, 10.0];
    let curv = [1.0, 3.0, 0.5, 0.01];
    let start = [0.0, 0.0, 1.0, -4.0];
    for lr in [0.001, 0.1] {
        let mut x = start.to_vec();
        let mut adam = Adam::new(4, lr);
        let mut traj = vec![];
        for _ in 0..10 {
            let g: Vec<f64> = (0..4).map(|i| 2.0 * curv[i] * (x[i] - centers[i])).collect();
            adam.step(&mut x, &g).unwrap();
            traj.push(x.clone());
        }
        for i in 0..4 {
            let want = support::scalar_adam(start[i], |y| 2.0 * curv[i] * (y - centers[i]), lr, 10);
            for (s, w) in traj.iter().zip(&want) {
                assert!((s[i] - w).abs() < 1e-12, "{} vs {}", s[i], w);
            }
        }
    }
}

#[test]
fn uniform_negatives_hit_expected_frequencies() {
    let mut r = support::rng(77);
    let draws = sample_negatives(&mut r, Proposal::Uniform, 10, 100_000, &[]).unwrap();
    let mut counts = [0usize; 10];
    for v in draws {
        counts[v as usize] += 1;
    }
    let (n, p) = (100_000.0, 0.1);
    let sigma = (n * p * (1.0f64 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n * p).abs() < 3.0 * sigma, "count {c}");
    }
}

#[test]
fn excluded_negatives_never_drawn_and_rest_uniform() {
    let mut r = support::rng(78);
    let draws = sample_negatives(&mut r, Proposal::Uniform, 10, 100_000, &[2, 5]).unwrap();
    let mut counts = [0usize; 10];
    for v in draws {
        counts[v as usize] += 1;
    }
    assert_eq!((counts[2], counts[5]), (0, 0));
    let sigma = (100_000.0f64 * 0.125 * 0.875).sqrt();
    for (i, c) in counts.iter().enumerate().filter(|(i, _)| *i != 2 && *i != 5) {
        assert!((*c as f64 - 12_500.0).abs() < 3.0 * sigma, "item {i}: {c}");
    }
}

fn small_setup() -> (wslrec_core::corpus::Corpus, wslrec_core::corpus::SplitCorpus) {
    let corpus = support::random_corpus(21, 40, 30, 6, 15);
    let split = split_users(40, [8, 1, 1], 3).unwrap();
    (corpus, split)
}

fn quick_config() -> TrainConfig {
    TrainConfig { batch_size: 8, eval_interval: 5, max_iterations: 200, seed: 9, ..TrainConfig::default() }
}

#[test]
fn early_stop_returns_best_parameters() {
    let (corpus, split) = small_setup();
    let model = SequenceScorer::new(30, 4, EncoderKind::MeanPool, 1, 1).unwrap();
    let script = [0.10, 0.12, 0.11, 0.50];
    let seen: RefCell<Vec<Vec<f64>>> = RefCell::new(vec![]);
    let mut hook = |m: &SequenceScorer| {
        let mut s = seen.borrow_mut();
        s.push(m.params().to_vec());
        Ok(script[s.len() - 1])
    };
    let config = TrainConfig { patience: 1, ..quick_config() };
    let (trained, log) =
        fit(model, &corpus, &split.train, &LabelStrategy::NextC(1), &LabelContext::default(), &config, &mut hook)
            .unwrap();
    let seen = seen.into_inner();
    assert_eq!(seen.len(), 3);
    assert_eq!(trained.params(), &seen[1][..]);
    let iters: Vec<usize> = log.records.iter().map(|r| r.iter).collect();
    assert_eq!(iters, vec![0, 5, 10]);
    let best: Vec<bool> = log.records.iter().map(|r| r.best).collect();
    assert_eq!(best, vec![true, true, false]);
    assert_eq!(log.records[0].loss_avg, None);
    assert!(log.records[1..].iter().all(|r| r.loss_avg.is_some_and(f64::is_finite)));
}

#[test]
fn fit_is_deterministic() {
    let (corpus, split) = small_setup();
    let run = || {
        let model = SequenceScorer::new(30, 4, EncoderKind::Gru, 1, 1).unwrap();
        let mut hook = wslrec_core::pipeline::early_stop_hook(&corpus, &split.valid, 20);
        fit(model, &corpus, &split.train, &LabelStrategy::NextAll, &LabelContext::default(), &quick_config(), &mut hook)
            .unwrap()
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(la, lb);
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn zero_iterations_keep_initial_parameters() {
    let (corpus, split) = small_setup();
    let model = SequenceScorer::new(30, 4, EncoderKind::MultiHead, 2, 1).unwrap();
    let before = model.to_bytes();
    let config = TrainConfig { max_iterations: 0, ..quick_config() };
    let mut hook = |_: &SequenceScorer| Ok(0.0);
    let (after, log) =
        fit(model, &corpus, &split.train, &LabelStrategy::NextC(1), &LabelContext::default(), &config, &mut hook)
            .unwrap();
    assert_eq!(after.to_bytes(), before);
    assert_eq!(log.records.len(), 1);
}

#[test]
fn planted_corpus_loss_falls_and_recall_improves() {
    use wslrec_core::synth::{generate, SynthConfig};
    let events = generate(&SynthConfig { n_users: 300, n_items: 100, seed: 4, ..SynthConfig::default() }).unwrap();
    let raw = wslrec_core::corpus::build_sequences(&events);
    let corpus = wslrec_core::corpus::filter_corpus(&raw, 5, 1).unwrap();
    let split = split_users(corpus.n_users(), [8, 1, 1], 4).unwrap();
    let model = SequenceScorer::new(corpus.n_items(), 16, EncoderKind::MeanPool, 1, 4).unwrap();
    let config = TrainConfig {
        batch_size: 32,
        learning_rate: 0.01,
        eval_interval: 50,
        max_iterations: 400,
        patience: 100,
        ..TrainConfig::default()
    };
    let mut hook = wslrec_core::pipeline::early_stop_hook(&corpus, &split.valid, 20);
    let (_, log) =
        fit(model, &corpus, &split.train, &LabelStrategy::NextC(1), &LabelContext::default(), &config, &mut hook)
            .unwrap();
    let losses: Vec<f64> = log.records.iter().filter_map(|r| r.loss_avg).collect();
    assert!(losses[1] < losses[0], "{losses:?}");
    assert!(log.best_metric().unwrap() > log.first_metric().unwrap());
}
