mod common;

#[test]
fn closed_form_matches_simpson() {
    let (worst, wrong) = common::ei_quadrature_check(1000, 3);
    assert!(worst <= 1e-6, "max gap {worst:e}");
    assert_eq!(wrong, 0);
}
