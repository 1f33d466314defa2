//! Synthetic benchmarks with known ground truth.

use rankbench::datagen::{make_classification, make_regression_with_coef, SynclfSpec, SynregSpec};

fn main() -> rankbench::Result<()> {
    let mut spec = SynclfSpec::synclf_hard();
    spec.n_samples = 1_000;
    let clf = make_classification(&spec)?;
    let truth = clf.ground_truth.as_ref().expect("synthetic data carries ground truth");
    println!(
        "{}: {} rows, {} features, {} classes",
        clf.name,
        clf.n_samples(),
        clf.n_features(),
        clf.n_classes()
    );
    println!("relevant features {:?}", truth.relevant.selected());

    let reg_spec = SynregSpec {
        n_samples: 200,
        n_features: 10,
        n_informative: 3,
        noise_std: 0.5,
        seed: 7,
    };
    let (reg, beta) = make_regression_with_coef(&reg_spec)?;
    let truth = reg.ground_truth.as_ref().unwrap();
    println!("{}: true coefficients {:.2?}", reg.name, beta);
    println!("importances {:.3?}", truth.importances.as_slice());
    Ok(())
}
