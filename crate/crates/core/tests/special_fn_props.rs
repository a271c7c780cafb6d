use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::SQRT_2;
use swipt_core::special_fn::{
    bessel_i0, bessel_i1, i0_asymptotic, i0_series, time_average_exponential, QuadratureSpec,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn finite_difference_of_i0_is_i1_on_grid() {
    for x in [0.5f64, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let h = 1e-6;
        let fd = (bessel_i0(x + h).unwrap() - bessel_i0(x - h).unwrap()) / (2.0 * h);
        assert!(rel(fd, bessel_i1(x).unwrap()) < 1e-6, "x = {x}");
    }
}

#[test]
fn series_and_asymptotic_agree_at_cutoff() {
    assert!(rel(i0_series(30.0), i0_asymptotic(30.0)) < 1e-12);
}

proptest! {
    #[test]
    fn i0_and_i1_are_increasing(x in 0.0f64..600.0, dx in 1e-3f64..5.0) {
        let (a0, b0) = (bessel_i0(x).unwrap(), bessel_i0(x + dx).unwrap());
        let (a1, b1) = (bessel_i1(x).unwrap(), bessel_i1(x + dx).unwrap());
        prop_assert!(a0 >= 1.0 && b0 > a0);
        prop_assert!(a1 >= 0.0 && b1 > a1);
    }

    #[test]
    fn quadrature_matches_closed_form(
        r in 0.0f64..5.0,
        phase in 0.0f64..std::f64::consts::TAU,
        b in 0.05f64..3.0,
    ) {
        let x = Complex64::from_polar(r, phase);
        let q = time_average_exponential(x, b, &QuadratureSpec::default()).unwrap();
        let closed = bessel_i0(SQRT_2 * b * r).unwrap();
        prop_assert!(rel(q, closed) < 1e-8, "q={q} closed={closed}");
    }
}
