use std::collections::HashSet;

use proptest::prelude::*;

use embedhalluc::augment::{apply_op, EdaOp, EdaParams, EdaStats, SynonymTable};
use embedhalluc::checkpoint::{decode_params, encode_params, Manifest, FORMAT_VERSION};
use embedhalluc::dataio::{parse_tsv, sample_few_shot, to_tsv, Example, SplitSizes, TaskDataset, TaskKind};
use embedhalluc::harness::{grid_search, mean_std, Method, RunReport, SeedResult, SeedStatus};
use embedhalluc::metrics::{accuracy, f1_score, matthews_corr, MetricKind};
use embedhalluc::nn::ParamStore;
use embedhalluc::rng;
use embedhalluc::Tensor;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..40)
}

fn op() -> impl Strategy<Value = EdaOp> {
    prop::sample::select(EdaOp::ALL.to_vec())
}

fn table_for(words: &[String]) -> SynonymTable {
    let mut t = SynonymTable::default();
    for w in words.iter().step_by(2) {
        let _ = t.insert(w.clone(), vec![format!("{w}_s")]);
    }
    t
}

proptest! {
    #[test]
    fn eda_never_empties_and_respects_edit_counts(
        s in sentence(),
        op in op(),
        alpha in 0.01f64..0.99,
        seed in any::<u64>(),
    ) {
        let params = EdaParams { alpha, ..EdaParams::default() };
        let table = table_for(&s);
        let mut stats = EdaStats::default();
        let out = apply_op(op, &s, &params, &table, &mut stats, &mut rng::stream(seed, "eda")).unwrap();
        prop_assert!(!out.is_empty());
        let n = params.edit_count(s.len());
        prop_assert_eq!(n, ((alpha * s.len() as f64).round() as usize).max(1));
        match op {
            EdaOp::RandomInsertion => prop_assert_eq!(out.len(), s.len() + n),
            EdaOp::SynonymReplacement | EdaOp::RandomSwap => prop_assert_eq!(out.len(), s.len()),
            EdaOp::RandomDeletion => prop_assert!(out.len() <= s.len()),
        }
        if op == EdaOp::RandomSwap {
            let mut a = out.clone();
            let mut b = s.clone();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn eda_is_deterministic_per_seed(s in sentence(), op in op(), seed in any::<u64>()) {
        let params = EdaParams::default();
        let table = table_for(&s);
        let run = || apply_op(op, &s, &params, &table, &mut EdaStats::default(), &mut rng::stream(seed, "eda")).unwrap();
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn metrics_stay_in_range_and_match_counts(
        pairs in prop::collection::vec((0usize..3, 0usize..3), 1..80),
    ) {
        let (preds, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let hits = preds.iter().zip(&labels).filter(|(p, y)| p == y).count();
        prop_assert_eq!(accuracy(&preds, &labels).unwrap(), hits as f64 / preds.len() as f64);
        let m = matthews_corr(&preds, &labels).unwrap();
        prop_assert!((-1.0..=1.0).contains(&m));
        prop_assert_eq!(matthews_corr(&labels, &labels).unwrap() == 1.0, labels.iter().collect::<HashSet<_>>().len() > 1);
        let f = f1_score(&preds, &labels, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.score));
        // Symmetric in its arguments.
        prop_assert!((matthews_corr(&labels, &preds).unwrap() - m).abs() < 1e-12);
    }

    #[test]
    fn split_is_disjoint_balanced_and_seeded(per_class in 100usize..140, seed in any::<u64>()) {
        let examples: Vec<Example> = (0..2 * per_class)
            .map(|i| Example { text: format!("sentence {i}"), text2: None, label: i % 2 })
            .collect();
        let ds = TaskDataset {
            name: "p".into(),
            kind: TaskKind::Single,
            examples,
            label_names: vec!["a".into(), "b".into()],
            metric: MetricKind::Accuracy,
        };
        let split = sample_few_shot(&ds, SplitSizes::default(), seed).unwrap();
        let parts = [&split.train, &split.validation, &split.pool, &split.test];
        let mut seen = HashSet::new();
        for part in parts {
            for e in part.iter() {
                prop_assert!(seen.insert(e.text.clone()), "{} appears twice", e.text);
            }
        }
        prop_assert_eq!(seen.len(), 2 * per_class);
        for c in 0..2 {
            prop_assert_eq!(split.train.iter().filter(|e| e.label == c).count(), 16);
            prop_assert_eq!(split.validation.iter().filter(|e| e.label == c).count(), 16);
            prop_assert_eq!(split.pool.iter().filter(|e| e.label == c).count(), 64);
        }
        let again = sample_few_shot(&ds, SplitSizes::default(), seed).unwrap();
        prop_assert_eq!(again.train, split.train);
    }

    #[test]
    fn report_aggregate_is_recomputable(scores in prop::collection::vec(0.0f64..100.0, 1..8)) {
        let seeds = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| SeedResult {
                seed: i as u64,
                status: SeedStatus::Ok,
                test_score: Some(s),
                best_cell: None,
                selected_step: None,
                grid: Vec::new(),
                phase_seconds: Default::default(),
            })
            .collect();
        let r = RunReport::assemble("t".into(), Method::Finetune, MetricKind::Accuracy, seeds).unwrap();
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std = (scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n).sqrt();
        prop_assert!((r.mean - mean).abs() <= 1e-12);
        prop_assert!((r.std - std).abs() <= 1e-12);
        prop_assert_eq!(mean_std(&r.successful_scores()), Some((r.mean, r.std)));
    }

    #[test]
    fn grid_best_cell_is_the_argmax(scores in prop::collection::vec(0u8..4, 9)) {
        let lrs = [1e-5, 5e-6, 1e-6];
        let batches = [8, 4, 6];
        let score = |lr: f64, b: usize| {
            let i = [1e-6, 5e-6, 1e-5].iter().position(|&x| x == lr).unwrap();
            let j = [4, 6, 8].iter().position(|&x| x == b).unwrap();
            f64::from(scores[3 * i + j])
        };
        let out = grid_search(&lrs, &batches, |lr, b| Ok((score(lr, b), (lr, b)))).unwrap();
        let best = scores.iter().copied().max().unwrap();
        let first = scores.iter().position(|&s| s == best).unwrap();
        prop_assert_eq!(out.best.val_score, f64::from(best));
        prop_assert_eq!(out.best_value, ([1e-6, 5e-6, 1e-5][first / 3], [4, 6, 8][first % 3]));
    }

    #[test]
    fn synonym_table_text_round_trip(
        entries in prop::collection::btree_map(word(), prop::collection::vec("[A-Z]{1,5}", 1..4), 0..10),
    ) {
        let mut t = SynonymTable::default();
        for (w, syns) in entries {
            t.insert(w, syns).unwrap();
        }
        prop_assert_eq!(SynonymTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn tsv_round_trip(rows in prop::collection::vec(("[a-z ]{1,20}", "[a-z]{1,8}", 0usize..2), 1..20)) {
        let schema = embedhalluc::dataio::Schema {
            name: "p".into(),
            kind: TaskKind::Pair,
            labels: vec!["no".into(), "yes".into()],
            metric: MetricKind::F1,
        };
        let text: String = rows
            .iter()
            .filter(|(a, _, _)| !a.trim().is_empty())
            .map(|(a, b, y)| format!("{}\t{b}\t{}\n", a.trim(), schema.labels[*y]))
            .collect();
        prop_assume!(!text.is_empty());
        let ds = parse_tsv(&text, &schema).unwrap();
        let again = parse_tsv(&to_tsv(&ds).unwrap(), &schema).unwrap();
        prop_assert_eq!(again, ds);
    }

    #[test]
    fn checkpoint_params_round_trip(
        shapes in prop::collection::vec(prop::collection::vec(1usize..4, 1..3), 1..5),
        seed in any::<u64>(),
    ) {
        let mut r = rng::stream(seed, "params");
        let mut store = ParamStore::new();
        for (i, shape) in shapes.iter().enumerate() {
            store.add(format!("p{i}"), Tensor::randn(shape, 3.0, &mut r), i % 2 == 0);
        }
        let (params, bytes) = encode_params(&store);
        let manifest = Manifest {
            version: FORMAT_VERSION,
            kind: "test".into(),
            config: serde_json::json!({"seed": seed}),
            params,
        };
        let parsed = Manifest::parse(&manifest.to_text()).unwrap();
        prop_assert_eq!(&parsed, &manifest);
        prop_assert_eq!(decode_params(&parsed, &bytes).unwrap(), store);
    }
}
