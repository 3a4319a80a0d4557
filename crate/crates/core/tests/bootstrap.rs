mod common;

use common::*;

use vwmanova::bootstrap::{bootstrap_region_cutoff, bootstrap_t_c, bootstrap_t_d, BootstrapConfig};
use vwmanova::{Error, GroupSample, ProjectiveShape, RegionVariant, SingularPolicy};

fn cfg(seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        replicates: 300,
        level: 0.95,
        seed,
        worker_hint: None,
        singular: SingularPolicy::PseudoInverse,
    }
}

fn null_groups(seed: u64) -> Vec<GroupSample> {
    let base = random_shape(&mut rng(seed), 1);
    (0..3)
        .map(|a| concentrated(&base, 10.0, 40, seed * 10 + a))
        .collect()
}

#[test]
fn replicates_do_not_depend_on_worker_count() {
    let groups = null_groups(1);
    let one = bootstrap_t_d(
        &groups,
        &BootstrapConfig {
            worker_hint: Some(1),
            ..cfg(3)
        },
    )
    .unwrap();
    let four = bootstrap_t_d(
        &groups,
        &BootstrapConfig {
            worker_hint: Some(4),
            ..cfg(3)
        },
    )
    .unwrap();
    assert_eq!(one.replicate_values, four.replicate_values);
    assert_eq!(one.cutoff, four.cutoff);
}

#[test]
fn cutoff_is_the_sorted_order_statistic() {
    let out = bootstrap_t_d(&null_groups(2), &cfg(4)).unwrap();
    let mut sorted = out.replicate_values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (sorted.len() as f64 * 0.95).ceil() as usize;
    assert_eq!(out.cutoff, sorted[rank - 1]);
    assert_eq!(out.reject, out.observed.statistic > out.cutoff);
}

#[test]
fn higher_level_gives_higher_cutoff() {
    let groups = null_groups(5);
    let low = bootstrap_t_d(
        &groups,
        &BootstrapConfig {
            level: 0.90,
            ..cfg(6)
        },
    )
    .unwrap();
    let high = bootstrap_t_d(
        &groups,
        &BootstrapConfig {
            level: 0.99,
            ..cfg(6)
        },
    )
    .unwrap();
    assert!(high.cutoff >= low.cutoff);
}

#[test]
fn t_c_size_under_null() {
    let reps = 60;
    let rejections = (0..reps)
        .filter(|&r| {
            bootstrap_t_c(&null_groups(100 + r), &cfg(200 + r))
                .unwrap()
                .reject
        })
        .count();
    let size = rejections as f64 / reps as f64;
    assert!((0.0..=0.12).contains(&size), "size {size}");
}

#[test]
fn t_c_detects_separated_groups() {
    let a = ProjectiveShape::from_vectors(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
    let b = ProjectiveShape::from_vectors(&[[0.8, 0.6, 0.0, 0.0]]).unwrap();
    let groups = vec![concentrated(&a, 10.0, 40, 1), concentrated(&b, 10.0, 40, 2)];
    assert!(bootstrap_t_c(&groups, &cfg(7)).unwrap().reject);
}

#[test]
fn region_cutoffs_cover_the_true_mean() {
    let base = random_shape(&mut rng(8), 1);
    for variant in [RegionVariant::C, RegionVariant::D] {
        let mut covered = 0;
        for r in 0..30 {
            let groups: Vec<GroupSample> = (0..2)
                .map(|a| concentrated(&base, 10.0, 40, 900 + 2 * r + a))
                .collect();
            let region = bootstrap_region_cutoff(&groups, variant, &cfg(r)).unwrap();
            if vwmanova::confidence_region_contains(&groups, &base, region.cutoff, variant).unwrap()
            {
                covered += 1;
            }
        }
        assert!(covered >= 24, "{variant:?} covered {covered} of 30");
    }
}

#[test]
fn rejecting_singular_resamples_of_tiny_groups_fails() {
    // 6 specimens for a 6 x 6 covariance: any repeated draw loses rank
    let base = random_shape(&mut rng(9), 2);
    let groups: Vec<GroupSample> = (0..2)
        .map(|a| concentrated(&base, 10.0, 6, 50 + a))
        .collect();
    let strict = BootstrapConfig {
        singular: SingularPolicy::Reject,
        ..cfg(1)
    };
    match bootstrap_t_d(&groups, &strict) {
        Err(Error::TooManyDegenerateReplicates { failed, total, .. }) => {
            assert_eq!(total, 300);
            assert!(failed * 20 > total);
        }
        other => panic!("expected too many degenerate replicates, got {other:?}"),
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let groups = null_groups(10);
    for bad in [
        BootstrapConfig {
            replicates: 50,
            ..cfg(0)
        },
        BootstrapConfig {
            level: 1.0,
            ..cfg(0)
        },
        BootstrapConfig {
            worker_hint: Some(0),
            ..cfg(0)
        },
    ] {
        assert!(matches!(
            bootstrap_t_d(&groups, &bad),
            Err(Error::InvalidConfig(_))
        ));
    }
}
