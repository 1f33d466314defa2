//! Importance spread and selection stability across bootstraps.

use rankbench::datagen::{make_classification, SynclfSpec};
use rankbench::matrix::Matrix;
use rankbench::metrics::{importance_stability, nogueira_stability};
use rankbench::rankers::RankerSpec;
use rankbench::ranking::{ImportanceMatrix, SparseSupportSet};
use rankbench::sampling::stream;
use rand::Rng;

fn main() -> rankbench::Result<()> {
    let mut spec = SynclfSpec::synclf_hard();
    spec.n_samples = 800;
    let ds = make_classification(&spec)?;
    let truth = ds.ground_truth.clone().unwrap();

    for name in ["anova_f", "relieff"] {
        let ranker = RankerSpec::from_name(name)?;
        let mut rows = Vec::new();
        let mut top4 = Vec::new();
        for b in 0..10u64 {
            let mut rng = stream(1, "example", b);
            let idx: Vec<usize> = (0..ds.n_samples()).map(|_| rng.random_range(0..ds.n_samples())).collect();
            let x: Matrix = ds.x.select_rows(&idx);
            let y: Vec<f64> = idx.iter().map(|&i| ds.y[i]).collect();
            let ranking = ranker.fit(&x, &y, ds.task, b)?;
            top4.push(SparseSupportSet::new(ranking.order().unwrap()[..4].to_vec()));
            rows.push(ranking.importances.unwrap());
        }
        let report = importance_stability(&ImportanceMatrix::new(rows)?, Some(&truth.importances))?;
        let phi = nogueira_stability(&top4, ds.n_features())?;
        println!(
            "{name:<8} mean stdev {:.5}  weighted variance {:.5}  top-4 phi {:.3}",
            report.mean_stdev,
            report.weighted_variance_sum.unwrap(),
            phi
        );
    }
    Ok(())
}
