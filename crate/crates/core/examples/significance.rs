//! Comparing rankers across datasets with rank-based tests.

use rankbench::stats::{friedman, nemenyi_cd, wilcoxon_signed_rank, ScoreTable};

fn main() -> rankbench::Result<()> {
    let datasets: Vec<String> = (1..=6).map(|i| format!("d{i}")).collect();
    let rankers = vec!["relieff".to_string(), "anova_f".to_string(), "chi2".to_string()];
    let scores = vec![
        vec![0.91, 0.88, 0.80],
        vec![0.85, 0.86, 0.79],
        vec![0.77, 0.70, 0.71],
        vec![0.93, 0.90, 0.85],
        vec![0.81, 0.80, 0.74],
        vec![0.88, 0.84, 0.83],
    ];
    let table = ScoreTable::new(datasets, rankers.clone(), scores.clone())?;

    let f = friedman(&table)?;
    println!("Friedman chi2 = {:.3}, p = {:.4}", f.chi2, f.p_value);
    for (name, rank) in rankers.iter().zip(&f.average_ranks) {
        println!("  {name:<8} average rank {rank:.2}");
    }
    println!("Nemenyi critical difference (alpha 0.05): {:.3}", nemenyi_cd(3, 6, 0.05)?);

    let a: Vec<f64> = scores.iter().map(|r| r[0]).collect();
    let b: Vec<f64> = scores.iter().map(|r| r[1]).collect();
    let w = wilcoxon_signed_rank(&a, &b)?;
    println!("Wilcoxon relieff vs anova_f: W = {}, p = {:.4}", w.statistic, w.p_value);
    Ok(())
}
