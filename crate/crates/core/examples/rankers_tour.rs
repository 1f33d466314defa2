//! Fits every registered ranker to one dataset and prints its top features.

use rankbench::datagen::{make_classification, make_regression, SynclfSpec, SynregSpec, Task};
use rankbench::rankers::{RankerSpec, RANKER_NAMES};

fn main() -> rankbench::Result<()> {
    let mut spec = SynclfSpec::synclf_hard();
    spec.n_samples = 600;
    let clf = make_classification(&spec)?;
    let reg = make_regression(&SynregSpec {
        n_samples: 600,
        n_features: 50,
        n_informative: 4,
        noise_std: 0.1,
        seed: 0,
    })?;

    // chi2 needs non-negative features: shift every column to start at zero.
    let mut shifted = clf.x.clone();
    for f in 0..shifted.cols() {
        let min = clf.x.column(f).into_iter().fold(f64::INFINITY, f64::min);
        for r in 0..shifted.rows() {
            shifted.set(r, f, clf.x.get(r, f) - min);
        }
    }

    for name in RANKER_NAMES {
        let ranker = RankerSpec::from_name(name)?;
        let ds = if ranker.capabilities().supports(Task::Classification) {
            &clf
        } else {
            &reg
        };
        let x = if name == "chi2" { &shifted } else { &ds.x };
        let ranking = ranker.fit(x, &ds.y, ds.task, 0)?;
        let order = ranking.order().unwrap_or_default();
        let selected = ranking.support.as_ref().map(|s| s.count());
        println!(
            "{name:<14} on {:<11} top-6 {:?}  support size {:?}  {:.3}s",
            ds.name,
            &order[..6.min(order.len())],
            selected,
            ranking.fit_time_seconds
        );
    }
    Ok(())
}
