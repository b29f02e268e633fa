//! Categorical value distributions: Bellman projection, cross-entropy and
//! the first-order dominance hinge.

use c2fq::distribution::{
    cross_entropy_loss, dist_mean, dominance_loss, project_bellman, CategoricalDistribution, SupportGrid,
};

fn show(name: &str, d: &CategoricalDistribution, grid: &SupportGrid) {
    let mass: Vec<String> = d
        .probs()
        .iter()
        .zip(grid.atoms())
        .filter(|(p, _)| **p > 1e-9)
        .map(|(p, z)| format!("{z:+.2}:{p:.3}"))
        .collect();
    println!("{name:>10}  mean {:+.4}  [{}]", dist_mean(d, grid), mass.join(" "));
}

fn main() -> c2fq::Result<()> {
    let grid = SupportGrid::new(-1.0, 1.0, 11)?;
    let next = CategoricalDistribution::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0])?;
    show("next", &next, &grid);
    show("r=0.1 g=0.9", &project_bellman(&next, &grid, 0.1, 0.9), &grid);
    show("terminal", &project_bellman(&next, &grid, 1.0, 0.0), &grid);

    let target = project_bellman(&next, &grid, 0.1, 0.9);
    println!("cross-entropy vs uniform logits {:.4}", cross_entropy_loss(&target, &[0.0; 11]));

    let low = CategoricalDistribution::one_hot(11, 3);
    let high = CategoricalDistribution::one_hot(11, 8);
    println!("dominance(high over low) {:.3}", dominance_loss(&high, &low)?);
    println!("dominance(low over high) {:.3}", dominance_loss(&low, &high)?);
    Ok(())
}
