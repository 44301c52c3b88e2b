mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use renorm_core::series::{MultiPoly, TruncatedSeries};

fn power_sum(s: &TruncatedSeries, z: Complex64) -> Complex64 {
    s.coeffs().iter().enumerate().map(|(k, &ck)| ck * z.powu(k as u32)).sum()
}

/// A polynomial of the given degree stored at truncation order `order`.
fn padded(degree: usize, order: usize) -> impl Strategy<Value = TruncatedSeries> {
    proptest::collection::vec(complex_unit(), degree + 1).prop_map(move |mut v| {
        v.resize(order + 1, c(0.0, 0.0));
        TruncatedSeries::new(v, 1.0).unwrap()
    })
}

fn circle_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.95f64, -3.2..3.2f64).prop_map(|(m, t)| Complex64::from_polar(m, t))
}

fn multi_point(nvars: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(complex_unit().prop_map(|z| z * 0.7), nvars)
}

fn multi_poly(nvars: usize, degree: u32, cap: u32) -> impl Strategy<Value = MultiPoly> {
    let monos: Vec<Vec<u8>> = (0..(degree as usize + 1).pow(nvars as u32))
        .map(|mut i| {
            (0..nvars)
                .map(|_| {
                    let e = (i % (degree as usize + 1)) as u8;
                    i /= degree as usize + 1;
                    e
                })
                .collect::<Vec<u8>>()
        })
        .filter(|e| e.iter().map(|&v| v as u32).sum::<u32>() <= degree)
        .collect();
    proptest::collection::vec(complex_unit(), monos.len()).prop_map(move |cs| {
        MultiPoly::from_terms(nvars, cap, monos.clone().into_iter().zip(cs)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn horner_matches_power_sum(f in series_of_order(20, 1.0), z in circle_point()) {
        let (a, b) = (f.eval(z), power_sum(&f, z));
        prop_assert!((a - b).norm() <= 1e-13 * (1.0 + b.norm()) * 21.0);
    }

    #[test]
    fn exact_products_agree_pointwise(f in padded(5, 12), g in padded(7, 12), z in circle_point()) {
        let p = f.multiply(&g).unwrap();
        prop_assert!((p.eval(z) - f.eval(z) * g.eval(z)).norm() <= 1e-12);
    }

    #[test]
    fn exact_compositions_agree_pointwise(f in padded(3, 12), g in padded(4, 12), z in circle_point()) {
        let h = f.compose_with_threshold(&g, f64::INFINITY).unwrap();
        let (a, b) = (h.eval(z), f.eval(g.eval(z)));
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn derivative_matches_central_difference(f in series_of_order(10, 1.0), z in circle_point()) {
        let h = 1e-5;
        let fd = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
        let exact = f.derivative().eval(z);
        prop_assert!((fd - exact).norm() <= 1e-6 * (1.0 + exact.norm()));
        let (v, d) = f.eval_with_derivative(z);
        prop_assert!((v - f.eval(z)).norm() <= 1e-13 && (d - exact).norm() <= 1e-12);
    }

    #[test]
    fn disk_norm_bounds_sampled_modulus(f in series_of_order(12, 1.0), r in 0.05..1.0f64) {
        let bound = f.disk_norm_bound(r).unwrap();
        for j in 0..64 {
            let z = Complex64::from_polar(r, j as f64 * std::f64::consts::TAU / 64.0);
            prop_assert!(f.eval(z).norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn affine_conjugate_matches_pointwise(f in series_of_order(12, 1.0), a in scale_factor(), z in circle_point()) {
        let g = f.affine_conjugate(a).unwrap();
        let w = z * (0.5 / a.norm());
        let expect = f.eval(a * w) / a;
        prop_assert!((g.eval(w) - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        prop_assert!((g.disk_radius() - 1.0 / a.norm()).abs() <= 1e-15);
    }

    #[test]
    fn multipoly_product_and_composition_agree_pointwise(
        p in multi_poly(2, 3, 12),
        q in multi_poly(2, 3, 12),
        s0 in multi_poly(2, 2, 12),
        s1 in multi_poly(2, 2, 12),
        x in multi_point(2),
    ) {
        let prod = p.mul(&q).unwrap();
        prop_assert!((prod.eval(&x) - p.eval(&x) * q.eval(&x)).norm() <= 1e-12);
        let comp = p.compose(&[s0.clone(), s1.clone()]).unwrap();
        let inner = [s0.eval(&x), s1.eval(&x)];
        let expect = p.eval(&inner);
        prop_assert!((comp.eval(&x) - expect).norm() <= 1e-11 * (1.0 + expect.norm()));
    }

    #[test]
    fn multipoly_partial_derivative_matches_difference(p in multi_poly(3, 4, 10), x in multi_point(3), var in 0usize..3) {
        let h = 1e-5;
        let mut up = x.clone();
        let mut down = x.clone();
        up[var] += h;
        down[var] -= h;
        let fd = (p.eval(&up) - p.eval(&down)) / (2.0 * h);
        let exact = p.partial_derivative(var).eval(&x);
        prop_assert!((fd - exact).norm() <= 1e-7 * (1.0 + exact.norm()));
    }

    #[test]
    fn multipoly_text_round_trip(p in multi_poly(3, 4, 10)) {
        let back = MultiPoly::from_text(&p.to_text(), 3, 10).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn multipoly_ring_laws(p in multi_poly(2, 4, 10), q in multi_poly(2, 4, 10), r in multi_poly(2, 3, 10)) {
        let gap = |a: &MultiPoly, b: &MultiPoly| a.sub(b).unwrap().max_abs_coeff();
        prop_assert!(gap(&p.mul(&q).unwrap(), &q.mul(&p).unwrap()) <= 1e-12);
        let lhs = p.mul(&q.add(&r).unwrap()).unwrap();
        let rhs = p.mul(&q).unwrap().add(&p.mul(&r).unwrap()).unwrap();
        prop_assert!(gap(&lhs, &rhs) <= 1e-12);
        let assoc_l = p.mul(&q).unwrap().mul(&r).unwrap();
        let assoc_r = p.mul(&q.mul(&r).unwrap()).unwrap();
        prop_assert!(gap(&assoc_l, &assoc_r) <= 1e-11);
    }
}

#[test]
fn tail_check_rejects_wide_inner_series() {
    let f = TruncatedSeries::new(vec![c(1.0, 0.0); 11], 1.0).unwrap();
    let g = TruncatedSeries::from_real(&[0.0, 3.0], 10, 1.0).unwrap();
    assert!(f.compose(&g).is_err());
    assert!(f.compose(&g.scale(c(0.01, 0.0))).is_ok());
}
