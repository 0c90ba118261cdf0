use proptest::prelude::*;
use rough_core::tensor::{segment_signature, truncated_product};
use rough_core::TruncatedTensor;

fn tensor(dim: usize, depth: usize) -> impl Strategy<Value = TruncatedTensor> {
    let sizes: Vec<usize> = (0..=depth).map(|k| dim.pow(k as u32)).collect();
    sizes
        .into_iter()
        .map(|n| proptest::collection::vec(-1.0f64..1.0, n))
        .collect::<Vec<_>>()
        .prop_map(move |levels| TruncatedTensor::from_levels(dim, levels).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 0usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative(
        (a, b, c) in dims().prop_flat_map(|(d, n)| (tensor(d, n), tensor(d, n), tensor(d, n)))
    ) {
        let left = truncated_product(&truncated_product(&a, &b).unwrap(), &c).unwrap();
        let right = truncated_product(&a, &truncated_product(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
    }

    #[test]
    fn identity_is_a_two_sided_unit(a in tensor(2, 3)) {
        let one = TruncatedTensor::identity(2, 3);
        prop_assert_eq!(truncated_product(&one, &a).unwrap(), a.clone());
        prop_assert_eq!(truncated_product(&a, &one).unwrap(), a);
    }

    #[test]
    fn level_one_of_segment_products_adds(
        v in proptest::collection::vec(-2.0f64..2.0, 3),
        w in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let prod = truncated_product(&segment_signature(&v, 3), &segment_signature(&w, 3)).unwrap();
        for i in 0..3 {
            prop_assert_eq!(prod.level(1)[i], v[i] + w[i]);
        }
    }

    #[test]
    fn level_norms_are_submultiplicative(v in proptest::collection::vec(-2.0f64..2.0, 2), w in proptest::collection::vec(-2.0f64..2.0, 2)) {
        let (a, b) = (segment_signature(&v, 4), segment_signature(&w, 4));
        for i in 1..=2 {
            for j in 1..=2 {
                let mut x = TruncatedTensor::zeros(2, 4);
                x.level_mut(i).copy_from_slice(a.level(i));
                let mut y = TruncatedTensor::zeros(2, 4);
                y.level_mut(j).copy_from_slice(b.level(j));
                let p = truncated_product(&x, &y).unwrap();
                prop_assert!(p.level_norm(i + j) <= a.level_norm(i) * b.level_norm(j) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn segment_signature_inverts_with_the_reversed_segment(v in proptest::collection::vec(-1.0f64..1.0, 2)) {
        let back: Vec<f64> = v.iter().map(|x| -x).collect();
        let prod = truncated_product(&segment_signature(&v, 5), &segment_signature(&back, 5)).unwrap();
        prop_assert!(prod.max_abs_diff(&TruncatedTensor::identity(2, 5)).unwrap() < 1e-14);
    }
}

#[test]
fn flat_offsets_are_row_major() {
    let sig = segment_signature(&[1.0, 2.0, 3.0], 2);
    for i in 1..=3 {
        for j in 1..=3 {
            let offset = (i - 1) * 3 + (j - 1);
            assert_eq!(sig.coefficient(&[i, j]).unwrap(), sig.level(2)[offset]);
            assert_eq!(sig.level(2)[offset], (i * j) as f64 / 2.0);
        }
    }
}
