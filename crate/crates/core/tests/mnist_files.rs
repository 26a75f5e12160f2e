//! Loads the real MNIST files when they are available; otherwise the
//! test only notes that it was skipped.

mod common;

use voxcade::datasets::{load_mnist_dir, MnistSplit};

#[test]
fn full_mnist_counts_and_ranges() {
    let Some(dir) = common::mnist_dir() else {
        eprintln!("MNIST files not found, skipping");
        return;
    };
    for (split, n) in [(MnistSplit::Train, 60_000), (MnistSplit::Test, 10_000)] {
        let images = load_mnist_dir(&dir, split).unwrap();
        assert_eq!(images.len(), n);
        let mut per_class = [0usize; 10];
        for im in &images {
            assert_eq!((im.height, im.width, im.channels), (28, 28, 1));
            assert!(im.values.iter().all(|v| (0.0..=1.0).contains(v)));
            per_class[im.label as usize] += 1;
        }
        assert!(per_class.iter().all(|&c| c > n / 20), "{per_class:?}");
    }
}
