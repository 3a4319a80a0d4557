mod common;

use common::*;

use vwmanova::simulate::{sample_shapes, ShapeDistribution};
use vwmanova::vw_sample_mean;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

/// Median distance of the sample mean from the base over 40 seeds.
fn median_error(n: usize) -> f64 {
    let base = random_shape(&mut rng(77), 2);
    median(
        (0..40)
            .map(|seed| {
                let dist = ShapeDistribution::uniform(base.clone(), 4.0, 1000 + seed).unwrap();
                vw_sample_mean(&sample_shapes(&dist, n))
                    .unwrap()
                    .mean()
                    .max_distance(&base)
            })
            .collect(),
    )
}

#[test]
fn sample_mean_converges_to_base() {
    let small = median_error(10);
    let large = median_error(1000);
    assert!(large < small / 4.0, "n = 10: {small}, n = 1000: {large}");
    assert!(large < 0.02);
}

#[test]
fn draws_are_addressable_by_index() {
    let base = random_shape(&mut rng(3), 3);
    let dist = ShapeDistribution::uniform(base, 2.0, 8).unwrap();
    let sample = sample_shapes(&dist, 12);
    assert_eq!(sample.shapes()[7], dist.draw(7));
}
