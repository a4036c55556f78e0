use kclust::harness::{check_eq1_collinear, check_eq1_random};
use kclust::lmp::general_alpha;

#[test]
fn collinear_grid_holds_just_below_five_for_squares() {
    let r = check_eq1_collinear(2.0, 4.99);
    assert!(r.passed, "{r:?}");
}

#[test]
fn random_samples_hold_at_the_general_factor() {
    for p in [1.0, 2.0, 3.0] {
        let r = check_eq1_random(p, 2_000, 17);
        assert!(r.passed, "{r:?}");
        assert!(check_eq1_collinear(p, general_alpha(p)).passed);
    }
}
