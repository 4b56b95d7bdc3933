use proptest::prelude::*;
use std::sync::OnceLock;
use viana_lab::base::{sample_rng, RandomDigits};
use viana_lab::constants::{derive_constants, p_of_distance, ConstantOverrides, ExpansionConstants};
use viana_lab::curves::{
    iterate_over_element, strip_measure, CurveSource, FiberInterval, OneStepImage, PartitionElement,
};
use viana_lab::maps::{build_map, MapSpec};
use viana_lab::skew::SkewProduct;
use viana_lab::stats::{exponent_census, LogProduct};
use viana_lab::suite::random_curve;

fn odd3(alpha: f64) -> (SkewProduct, ExpansionConstants) {
    let map = build_map(&MapSpec::odd(3)).unwrap();
    let c = derive_constants(&map, 16, alpha, &ConstantOverrides::default()).unwrap();
    (SkewProduct::new(map, 16, alpha).unwrap(), c)
}

fn default_system() -> &'static (SkewProduct, ExpansionConstants) {
    static S: OnceLock<(SkewProduct, ExpansionConstants)> = OnceLock::new();
    S.get_or_init(|| odd3(1e-6))
}

fn even_system() -> &'static SkewProduct {
    static S: OnceLock<SkewProduct> = OnceLock::new();
    S.get_or_init(|| SkewProduct::new(build_map(&MapSpec::even(4)).unwrap(), 16, 1e-6).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn escape_time_decreases_with_distance(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (_, c) = default_system();
        let lo = c.j_radius(0.0);
        let span = c.delta1 - lo;
        let (e1, e2) = (lo + a.min(b) * span, lo + a.max(b) * span);
        prop_assert!(p_of_distance(c, e1, 3) >= p_of_distance(c, e2, 3));
    }

    #[test]
    fn slope_vanishes_only_at_critical_point(x in 0.0f64..1.0) {
        let (sp, _) = default_system();
        let s = sp.jacobian(0.3, x).2;
        if x == 0.5 {
            prop_assert_eq!(s, 0.0);
        } else {
            prop_assert!(s != 0.0, "h'({x}) = 0");
        }
        prop_assert_eq!(sp.jacobian(0.3, 0.5).2, 0.0);
    }

    #[test]
    fn even_slope_vanishes_only_at_zero(u in -1.0f64..1.0) {
        let sp = even_system();
        let x = u * 1.5;
        let s = sp.map.derivative(x);
        prop_assert_eq!(s == 0.0, x == 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences(theta in 0.01f64..0.99, x in 0.0f64..1.0) {
        let (sp, _) = default_system();
        let (g1, ft, fx) = sp.jacobian(theta, x);
        let h = 1e-6;
        let dt = (sp.fiber_lift(theta + h, x) - sp.fiber_lift(theta - h, x)) / (2.0 * h);
        let dx = (sp.fiber_lift(theta, x + h) - sp.fiber_lift(theta, x - h)) / (2.0 * h);
        prop_assert_eq!(g1, 16.0);
        prop_assert!((dt - ft).abs() <= 1e-6 * (1.0 + ft.abs()), "{dt} vs {ft}");
        prop_assert!((dx - fx).abs() <= 1e-5 * (1.0 + fx.abs()), "{dx} vs {fx}");
    }

    #[test]
    fn log_product_matches_log_sum(v in proptest::collection::vec(1e-8f64..1e8, 1..200)) {
        let mut p = LogProduct::new();
        let mut s = 0.0;
        for &x in &v {
            p.mul(x);
            s += x.ln();
        }
        prop_assert!((p.ln() - s).abs() <= 1e-10 * (1.0 + s.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strip_measure_monotone_and_additive(seed in 0u64..1000, lo in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (sp, _) = default_system();
        let src = random_curve(sp, seed, 0);
        let img = OneStepImage { src: &src, sp };
        // intervals on the scale of the image curve
        let centre = img.jet(lo).value;
        let base = centre - 2e-6;
        let (l1, l2) = (4e-6 * a.min(b), 4e-6 * a.max(b));
        let iv = |s: f64, len: f64| FiberInterval { lo: viana_lab::maps::reduce_unit(s), len, circle: true };
        let grid = 1 << 12;
        let m_small = strip_measure(&img, &iv(base, l1), grid, 16);
        let m_big = strip_measure(&img, &iv(base, l2), grid, 16);
        let m_rest = strip_measure(&img, &iv(base + l1, l2 - l1), grid, 16);
        let tol = 4.0 / grid as f64;
        prop_assert!(m_small <= m_big + tol);
        prop_assert!((m_small + m_rest - m_big).abs() <= tol, "{m_small} + {m_rest} vs {m_big}");
    }

    #[test]
    fn iterated_curves_stay_admissible(seed in 0u64..10_000, level in 1u32..=4, k in any::<u64>(), large in any::<bool>()) {
        let alpha = if large { 1e-3 } else { 1e-6 };
        let (sp, _) = odd3(alpha);
        let src = random_curve(&sp, seed, 1);
        let e = PartitionElement::new(16, level, k % 16u64.pow(level)).unwrap();
        let c = iterate_over_element(&src, &sp, &e, 1 << 10).unwrap();
        prop_assert!(c.max_abs_d1() <= 13.0 / 15.0 * alpha);
        prop_assert!(c.max_abs_d2() <= alpha);
    }
}

#[test]
fn census_is_a_function_of_the_seed() {
    let (sp, _) = default_system();
    let (a, sa) = exponent_census(sp, 500, 64, 9);
    let (b, sb) = exponent_census(sp, 500, 64, 9);
    let (c, _) = exponent_census(sp, 500, 64, 10);
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    assert_ne!(a, c);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (d, _) = pool.install(|| exponent_census(sp, 500, 64, 9));
    assert_eq!(a, d);
}

#[test]
fn digit_streams_depend_only_on_seed_and_index() {
    use viana_lab::base::{BaseOrbit, DigitSource};
    let mut x = RandomDigits::new(sample_rng(5, 17), 16);
    let mut y = RandomDigits::new(sample_rng(5, 17), 16);
    let a: Vec<u64> = (0..100).map(|_| x.next_digit()).collect();
    let b: Vec<u64> = (0..100).map(|_| y.next_digit()).collect();
    assert_eq!(a, b);
    let o = BaseOrbit::new(RandomDigits::new(sample_rng(5, 18), 16), 16);
    assert!(o.theta() < 1.0);
}
