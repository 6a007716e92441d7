use wslrec::config::RunConfig;
use wslrec::runner::{self, Recommender};
use wslrec_core::corpus::{build_sequences, filter_corpus, split_users, Corpus, SplitCorpus};
use wslrec_core::pipeline;
use wslrec_core::synth;

fn small_config() -> RunConfig {
    RunConfig {
        users: 150,
        items: 60,
        clusters: 4,
        dim: 8,
        batch_size: 16,
        max_iterations: 40,
        eval_interval: 20,
        k_ws: 10,
        mining_k: 10,
        ..Default::default()
    }
}

fn setup(cfg: &RunConfig) -> (Corpus, SplitCorpus) {
    let events = synth::generate(&cfg.synth()).unwrap();
    let corpus = filter_corpus(&build_sequences(&events), cfg.min_user, cfg.min_item).unwrap();
    let split = split_users(corpus.n_users(), cfg.split, cfg.seed).unwrap();
    (corpus, split)
}

#[test]
fn thread_count_does_not_change_mining_or_recommendations() {
    let cfg = small_config();
    let (corpus, split) = setup(&cfg);
    let model = runner::init_model(&cfg, &corpus).unwrap();
    let one = runner::mine(&cfg, &model, &corpus, &split).unwrap();
    let four = runner::mine(&RunConfig { threads: 4, ..cfg.clone() }, &model, &corpus, &split).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, pipeline::mine_topk(&model, &corpus, &split.train, cfg.mining_k, cfg.max_history).unwrap());

    let table = runner::build_similarity(&cfg, &corpus, &split).unwrap();
    for rec in [
        Recommender::Model { model: &model, max_history: cfg.max_history },
        Recommender::Br,
        Recommender::ItemCf { table: &table, include_history: false },
    ] {
        let a = runner::evaluate(rec, &corpus, &split.test, &[5, 20], false, 1).unwrap();
        let b = runner::evaluate(rec, &corpus, &split.test, &[5, 20], false, 3).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn parallel_run_matches_sequential_pipeline() {
    let cfg = small_config();
    let (corpus, split) = setup(&cfg);
    let table = runner::build_similarity(&cfg, &corpus, &split).unwrap();
    let par = runner::run_wslrec(&RunConfig { threads: 2, ..cfg.clone() }, &corpus, &split, Some(&table)).unwrap();
    let train = wslrec_core::trainer::TrainConfig { seed: cfg.seed, ..cfg.train_config("train") };
    let init = runner::init_model(&cfg, &corpus).unwrap();
    let seq = pipeline::run_wslrec(init, &corpus, &split, &cfg.weak().unwrap(), Some(&table), &train).unwrap();
    assert_eq!(par.pretrained, seq.pretrained);
    assert_eq!(par.mined, seq.mined);
    assert_eq!(par.finetuned, seq.finetuned);
    assert_eq!(par.pretrain_log, seq.pretrain_log);
    assert_eq!(par.finetune_log, seq.finetune_log);
}

#[test]
fn ensemble_lists_have_k_distinct_items() {
    let cfg = small_config();
    let (corpus, split) = setup(&cfg);
    let table = runner::build_similarity(&cfg, &corpus, &split).unwrap();
    let model = runner::init_model(&cfg, &corpus).unwrap();
    let ((a, b, c), report, recs) = runner::ensemble(&cfg, &model, &table, &corpus, &split, 10).unwrap();
    assert_eq!(a + b + c, 10);
    assert_eq!(report.users, split.test.len());
    for list in &recs {
        let mut sorted = list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!((list.len(), sorted.len()), (10, 10));
    }
}
