use graphtomo::metrics::relative_l2_error;
use graphtomo::{generate_phantom, l2_error, min_error, profile, ErrorCurve, Image, PhantomKind};
use proptest::prelude::*;

fn image(n: usize, v: Vec<f64>) -> Image {
    Image::new(n, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn l2_error_is_a_metric(
        a in prop::collection::vec(-5.0f64..5.0, 16),
        b in prop::collection::vec(-5.0f64..5.0, 16),
        c in prop::collection::vec(-5.0f64..5.0, 16),
    ) {
        let (x, y, z) = (image(4, a), image(4, b), image(4, c));
        let xy = l2_error(&x, &y).unwrap();
        let yx = l2_error(&y, &x).unwrap();
        let yz = l2_error(&y, &z).unwrap();
        let xz = l2_error(&x, &z).unwrap();
        prop_assert!(xy >= 0.0);
        prop_assert!((xy - yx).abs() < 1e-9);
        prop_assert!(xz <= xy + yz + 1e-9);
        prop_assert_eq!(l2_error(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn min_error_bounds_the_curve(values in prop::collection::vec(0.0f64..100.0, 1..60)) {
        let curve = ErrorCurve { values: values.clone(), method_label: "x".into() };
        let (k, v) = min_error(&curve).unwrap();
        prop_assert!(values.iter().all(|&e| v <= e));
        prop_assert_eq!(values[k], v);
        prop_assert!(values[..k].iter().all(|&e| e > v));
    }
}

#[test]
fn small_examples() {
    let c = |v: &[f64]| ErrorCurve {
        values: v.to_vec(),
        method_label: "x".into(),
    };
    assert_eq!(min_error(&c(&[5.0, 3.0, 4.0])).unwrap(), (1, 3.0));
    assert_eq!(min_error(&c(&[2.0, 2.0])).unwrap(), (0, 2.0));
    assert!(min_error(&c(&[])).is_err());

    let zero = Image::zeros(2);
    let x = image(2, vec![3.0, 0.0, 4.0, 0.0]);
    assert_eq!(l2_error(&x, &zero).unwrap(), 5.0);
    assert!(l2_error(&x, &Image::zeros(3)).is_err());
    assert!(relative_l2_error(&zero, &x).unwrap() == 1.0);
    assert!(relative_l2_error(&x, &zero).is_err());
}

#[test]
fn profile_reads_one_row_and_follows_mirroring() {
    let n = 64;
    let x = generate_phantom(PhantomKind::SheppLogan, n, 0).unwrap();
    let prof = profile(&x, n / 2).unwrap();
    assert_eq!(prof.row_index, n / 2);
    assert_eq!(
        prof.values,
        (0..n).map(|c| x.get(n / 2, c)).collect::<Vec<_>>()
    );
    assert_eq!(prof.values[0], 0.0);
    assert_eq!(prof.values[n - 1], 0.0);

    let mut mirrored = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            mirrored[r * n + c] = x.get(r, n - 1 - c);
        }
    }
    let m = profile(&image(n, mirrored), n / 2).unwrap();
    let reversed: Vec<f64> = prof.values.iter().rev().copied().collect();
    assert_eq!(m.values, reversed);
    assert!(profile(&x, n).is_err());
}
