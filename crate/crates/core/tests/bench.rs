use std::collections::BTreeSet;

use faceshape::bench::{
    parse_report_csv, render_report, run_benchmark, synth_dataset, training_subset, BenchConfig,
    EvalMode, ReportFormat, SubsetStrategy, SynthConfig, DEFAULT_SIZES,
};
use faceshape::classifiers::{ClassifierConfig, ClassifierKind};
use faceshape::{Dataset, Error, FaceShape};
use proptest::prelude::*;

fn synth(per_class: usize, seed: u64) -> Dataset {
    synth_dataset(&SynthConfig {
        per_class,
        noise_sigma: 2.0,
        seed,
    })
    .unwrap()
}

fn quick(sizes: Vec<usize>) -> BenchConfig {
    BenchConfig {
        sizes,
        classifiers: vec![
            ClassifierConfig::new(ClassifierKind::Knn),
            ClassifierConfig::new(ClassifierKind::Lda),
        ],
        ..Default::default()
    }
}

#[test]
fn default_grid_is_five_by_five() {
    let rep = run_benchmark(&synth(100, 1), &BenchConfig::default()).unwrap();
    assert_eq!(rep.sizes, DEFAULT_SIZES.to_vec());
    assert_eq!(rep.classifiers, ClassifierKind::ALL.to_vec());
    assert_eq!(rep.cells.len(), 25);
    for kind in ClassifierKind::ALL {
        for size in DEFAULT_SIZES {
            let cell = rep.cell(kind, size).unwrap();
            assert_eq!(cell.confusion.total(), 500);
            assert_eq!(cell.training_confusion.total(), size as u64);
            assert!((0.0..=1.0).contains(&cell.overall_accuracy));
        }
    }
    let csv = render_report(&rep, ReportFormat::Csv).unwrap();
    assert_eq!(parse_report_csv(&csv).unwrap().len(), 25);
}

#[test]
fn oversized_training_size_is_invalid() {
    let err = run_benchmark(&synth(100, 1), &quick(vec![600])).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)), "{err:?}");
}

#[test]
fn holdout_never_scores_training_samples() {
    let ds = synth(20, 2);
    let cfg = BenchConfig {
        eval_mode: EvalMode::HoldoutRemainder,
        ..quick(vec![25, 50, 75])
    };
    let rep = run_benchmark(&ds, &cfg).unwrap();
    for s in &rep.subsets {
        let train: BTreeSet<_> = s.train_ids.iter().collect();
        assert!(s.eval_ids.iter().all(|id| !train.contains(id)));
        assert_eq!(s.train_ids.len() + s.eval_ids.len(), ds.len());
    }
}

#[test]
fn overall_mode_scores_everything() {
    let rep = run_benchmark(&synth(20, 3), &quick(vec![30, 60])).unwrap();
    for s in &rep.subsets {
        let eval: BTreeSet<_> = s.eval_ids.iter().collect();
        assert!(s.train_ids.iter().all(|id| eval.contains(id)));
        assert_eq!(s.eval_ids.len(), 100);
    }
}

fn labels(seed: u64, n: usize) -> Vec<FaceShape> {
    // shuffled, unbalanced labels
    (0..n)
        .map(|i| {
            FaceShape::ALL
                [((i as u64).wrapping_mul(2654435761).wrapping_add(seed) % 7 % 5) as usize]
        })
        .collect()
}

proptest! {
    #[test]
    fn subsets_nest_across_sizes(seed in any::<u64>(), a in 1usize..100, b in 1usize..100, prefix in any::<bool>()) {
        let ys = labels(seed, 300);
        let strategy = if prefix { SubsetStrategy::Prefix } else { SubsetStrategy::Stratified };
        let (small, big) = (a.min(b), a.max(b));
        let s: BTreeSet<usize> = training_subset(&ys, small, strategy, seed).unwrap().into_iter().collect();
        let t: BTreeSet<usize> = training_subset(&ys, big, strategy, seed).unwrap().into_iter().collect();
        prop_assert_eq!(s.len(), small);
        prop_assert!(s.is_subset(&t));
    }

    #[test]
    fn stratified_subsets_are_balanced(seed in any::<u64>(), size in 1usize..100) {
        let ys = labels(seed, 300);
        let picked = training_subset(&ys, size, SubsetStrategy::Stratified, seed).unwrap();
        let mut counts = [0usize; 5];
        picked.iter().for_each(|&i| counts[ys[i].index()] += 1);
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        // the extra samples go to the lowest class indices
        prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }
}
