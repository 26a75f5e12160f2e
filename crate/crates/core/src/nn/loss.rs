use super::{NnError, Scalar, Tensor};

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if logits.shape().len() != 2 || logits.shape()[1] == 0 {
        return Err(NnError::ShapeMismatch(format!(
            "softmax expects [N, C], got {:?}",
            logits.shape()
        )));
    }
    let c = logits.shape()[1];
    let mut p = Tensor::zeros(logits.shape());
    for (src, dst) in logits.data().chunks_exact(c).zip(p.data_mut().chunks_exact_mut(c)) {
        softmax_row(src, dst);
    }
    Ok(p)
}

pub fn softmax_row<T: Scalar>(src: &[T], dst: &mut [T]) {
    let m = src.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = (s - m).exp();
        total += *d;
    }
    for d in dst.iter_mut() {
        *d = *d / total;
    }
}

/// Mean cross-entropy over the batch and the softmax probabilities.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, Tensor<T>), NnError> {
    let p = softmax(logits)?;
    let (n, c) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(NnError::ShapeMismatch(format!("{} labels for batch of {n}", labels.len())));
    }
    let mut loss = T::zero();
    for (&y, lrow) in labels.iter().zip(logits.data().chunks_exact(c)) {
        if y >= c {
            return Err(NnError::ShapeMismatch(format!("label {y} out of range for {c} classes")));
        }
        // log-sum-exp form keeps the loss finite when p underflows
        let m = lrow.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + lrow.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - lrow[y];
    }
    Ok((loss / T::from_usize(n), p))
}

/// Gradient of the mean cross-entropy w.r.t. the logits: `(p - onehot) / N`.
pub fn softmax_cross_entropy_backward<T: Scalar>(
    probs: &Tensor<T>,
    labels: &[usize],
) -> Result<Tensor<T>, NnError> {
    let (n, c) = (probs.shape()[0], probs.shape()[1]);
    if labels.len() != n {
        return Err(NnError::ShapeMismatch(format!("{} labels for batch of {n}", labels.len())));
    }
    let inv_n = T::one() / T::from_usize(n);
    let mut g = probs.clone();
    g.clear_grad();
    for (row, &y) in g.data_mut().chunks_exact_mut(c).zip(labels) {
        row[y] = row[y] - T::one();
        for v in row.iter_mut() {
            *v = *v * inv_n;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_c() {
        let logits = Tensor::<f64>::zeros(&[2, 40]);
        let (loss, p) = softmax_cross_entropy(&logits, &[3, 39]).unwrap();
        assert!((loss - 40f64.ln()).abs() < 1e-12);
        assert!((loss - 3.6889).abs() < 1e-4);
        assert!(p.data().iter().all(|&v| (v - 0.025).abs() < 1e-15));
    }

    #[test]
    fn huge_logit_does_not_overflow() {
        let logits = Tensor::<f32>::from_vec(&[1, 3], vec![1000.0, 0.0, -5.0]).unwrap();
        let (loss, p) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert_eq!(p.data()[0], 1.0);
        assert!(loss.is_finite() && loss >= 0.0);
        let (loss_wrong, _) = softmax_cross_entropy(&logits, &[1]).unwrap();
        assert!((loss_wrong - 1000.0).abs() < 1e-3);
    }

    #[test]
    fn rows_sum_to_one() {
        let logits = Tensor::<f32>::from_vec(&[2, 4], vec![0.1, 2.0, -3.0, 0.7, 5.0, 5.0, 5.0, -1.0]).unwrap();
        let p = softmax(&logits).unwrap();
        for row in p.data().chunks(4) {
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_is_p_minus_onehot_over_n() {
        let logits = Tensor::<f64>::zeros(&[2, 2]);
        let (_, p) = softmax_cross_entropy(&logits, &[0, 1]).unwrap();
        let g = softmax_cross_entropy_backward(&p, &[0, 1]).unwrap();
        assert_eq!(g.data(), &[-0.25, 0.25, 0.25, -0.25]);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let logits = Tensor::<f32>::zeros(&[1, 3]);
        assert!(softmax_cross_entropy(&logits, &[3]).is_err());
    }
}
