//! The four ways a ranker can describe feature relevance, and conversions
//! between them.

use rankbench::ranking::{
    from_sparse, normalize_importances, rank_from_importances, threshold_support, to_sparse,
};

fn main() -> rankbench::Result<()> {
    // Raw scores of any scale become a non-negative vector summing to one.
    let w = normalize_importances(&[4.0, 0.0, 1.0, 3.0, 0.0])?;
    println!("importances  {:?}", w.as_slice());

    // Features above a threshold form the support.
    let support = threshold_support(&w, 0.1);
    println!("support      {:?}", support.as_slice());

    // Sparse and dense supports round trip.
    let sparse = to_sparse(&support);
    println!("sparse       {:?}", sparse.iter().collect::<Vec<_>>());
    assert_eq!(from_sparse(&sparse, w.len())?, support);

    // Ranks: 1 is the most important feature; ties break toward the lower index.
    let ranks = rank_from_importances(&w);
    println!("ranks        {:?}", ranks.as_slice());
    println!("order        {:?}", ranks.order_desc());
    Ok(())
}
