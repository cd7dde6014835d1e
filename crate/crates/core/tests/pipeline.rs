//! Files on disk through a selection and back.

use std::fs::File;

use fewsel::corpus::write_corpus;
use fewsel::harness::{gen_synthetic, model_outputs, train_softmax, TaskConfig};
use fewsel::tensors::{write_tensors, write_tensors_text};
use fewsel::{load_corpus, load_selection, load_tensors, select, write_selection, StrategySpec};

#[test]
fn binary_and_text_tensors_select_alike() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TaskConfig {
        pool_size: 50,
        ..TaskConfig::default()
    };
    let task = gen_synthetic(&cfg, 8).unwrap();
    let model = train_softmax(&task.pivot_train, task.classes, task.hyper).unwrap();
    let corpus = task.pool_corpus().unwrap();
    let ts = model_outputs(&model, &corpus.ids(), &task.target_pool.features).unwrap();

    let corpus_path = dir.path().join("pool.jsonl");
    write_corpus(&corpus, File::create(&corpus_path).unwrap()).unwrap();
    let bin_path = dir.path().join("pool.bin");
    write_tensors(&ts, File::create(&bin_path).unwrap()).unwrap();
    let txt_path = dir.path().join("pool.txt");
    write_tensors_text(&ts, File::create(&txt_path).unwrap()).unwrap();

    let loaded = load_corpus(&corpus_path, false).unwrap();
    assert_eq!(loaded.ids(), corpus.ids());
    let from_bin = load_tensors(&bin_path, &loaded).unwrap();
    let from_txt = load_tensors(&txt_path, &loaded).unwrap();

    // the binary container stores f32
    for id in loaded.ids() {
        let (x, y) = (
            from_bin.dists(id).unwrap().row(0),
            ts.dists(id).unwrap().row(0),
        );
        assert!(x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-6));
        let (x, y) = (from_bin.hidden(id).unwrap(), ts.hidden(id).unwrap());
        assert!(x
            .iter()
            .zip(y)
            .all(|(a, b)| (a - b).abs() <= 1e-6 * b.abs().max(1.0)));
    }

    for s in ["pe:lambda=1", "ge:gamma=2", "le:lambda=0.5", "dce"] {
        let mut spec: StrategySpec = s.parse().unwrap();
        spec.k = 9;
        spec.seed = 4;
        let a = select(&spec, &corpus, Some(&ts)).unwrap();
        let b = select(&spec, &loaded, Some(&from_txt)).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{s}");
        assert_eq!(
            select(&spec, &loaded, Some(&from_bin)).unwrap().ids.len(),
            9
        );

        let sel_path = dir.path().join("sel.json");
        write_selection(&b, &sel_path).unwrap();
        let back = load_selection(&sel_path).unwrap();
        let rerun = select(
            &StrategySpec::from_selection(&back).unwrap(),
            &loaded,
            Some(&from_txt),
        )
        .unwrap();
        assert_eq!(rerun.to_json(), b.to_json(), "{s}");
    }
}
