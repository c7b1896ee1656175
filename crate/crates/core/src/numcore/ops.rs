use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Numerically stable softmax over a logit vector.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.ensure_finite("softmax")?;
    let mut out = logits.clone();
    softmax_in_place(out.data_mut());
    Ok(out)
}

/// Returns the log-sum-exp of the input.
pub(crate) fn softmax_in_place(v: &mut [f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
    max + sum.ln()
}

/// `log(sum(exp(v)))` with max subtraction.
pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub(crate) fn check_labels(labels: &[usize], classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(Error::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

/// Mean multiclass cross-entropy of `logits` (N x c) against integer labels.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    logits.ensure_finite("cross_entropy")?;
    if logits.dims().len() != 2 || logits.rows() != labels.len() {
        return Err(Error::shape(
            "cross_entropy",
            &[labels.len(), logits.row_len()],
            logits.dims(),
        ));
    }
    let c = logits.row_len();
    check_labels(labels, c)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = logits.row(i);
            log_sum_exp(row) - row[y]
        })
        .sum();
    Ok(total / labels.len() as f64)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn softmax_uniform() {
        let p = softmax(&t(&[0.0, 0.0, 0.0])).unwrap();
        for &v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_matches_extended_precision() {
        // Reference values evaluated with 40-digit arithmetic.
        let expected = [
            0.090_030_573_170_380_457_998,
            0.244_728_471_054_797_652_473,
            0.665_240_955_774_821_889_529,
        ];
        let p = softmax(&t(&[1.0, 2.0, 3.0])).unwrap();
        for (a, b) in p.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn softmax_rejects_nan() {
        let bad = Tensor::filled(&[2], 0.0);
        let mut bad = bad;
        bad.data_mut()[0] = f64::INFINITY;
        assert!(matches!(softmax(&bad), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn cross_entropy_cases() {
        let zeros = Tensor::zeros(&[4, 5]);
        let ce = cross_entropy(&zeros, &[0, 1, 2, 4]).unwrap();
        assert!((ce - 5f64.ln()).abs() < 1e-14);

        let saturated = Tensor::new(vec![1, 3], vec![1000.0, 0.0, 0.0]).unwrap();
        assert!(cross_entropy(&saturated, &[0]).unwrap() < 1e-12);

        // 40-digit reference: mean of -log softmax over the two rows.
        let logits = Tensor::new(vec![2, 3], vec![0.3, -1.2, 2.1, -0.7, 0.4, 0.05]).unwrap();
        let ce = cross_entropy(&logits, &[2, 0]).unwrap();
        assert!((ce - 0.997_945_446_553_825_021_551_9).abs() < 1e-14);

        assert!(matches!(
            cross_entropy(&zeros, &[0, 1, 2, 5]),
            Err(Error::LabelOutOfRange {
                label: 5,
                classes: 5
            })
        ));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(v in proptest::collection::vec(-50.0f64..50.0, 1..20), shift in -100.0f64..100.0) {
            let p = softmax(&t(&v)).unwrap();
            let s: f64 = p.data().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(p.data().iter().all(|&x| x > 0.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + shift).collect();
            let q = softmax(&t(&shifted)).unwrap();
            prop_assert!(p.max_abs_diff(&q) < 1e-12);
        }
    }
}
