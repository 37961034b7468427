use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Negative-side slope used throughout the model.
pub const LEAKY_ALPHA: f64 = 0.3;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `x` for `x > 0`, `alpha·x` otherwise.
pub fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x
    }
}

/// Gradient through [`leaky_relu`], given the pre-activation input.
pub fn leaky_relu_backward(input: &Array2<f64>, grad: &Array2<f64>, alpha: f64) -> Array2<f64> {
    let mut out = grad.clone();
    ndarray::Zip::from(&mut out).and(input).for_each(|g, &x| {
        if x <= 0.0 {
            *g *= alpha;
        }
    });
    out
}

pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut out = logits.mapv(|x| (x - max).exp());
    let sum = out.sum();
    out /= sum;
    out
}

pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Masked mean of `-ln p(target)` over rows whose target is not `pad_id`.
///
/// Returns the loss and its gradient with respect to the logits that
/// produced `probs` through a row-wise softmax.
pub fn cross_entropy_loss(
    probs: ArrayView2<'_, f64>,
    targets: &[usize],
    pad_id: usize,
) -> Result<(f64, Array2<f64>)> {
    let (rows, vocab) = probs.dim();
    if targets.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for {rows} probability rows",
            targets.len()
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= vocab) {
        return Err(Error::UnknownId {
            id: bad,
            vocab_size: vocab,
        });
    }
    let count = targets.iter().filter(|&&t| t != pad_id).count();
    if count == 0 {
        return Err(Error::EmptyAfterMask);
    }
    let n = count as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros((rows, vocab));
    for (i, &t) in targets.iter().enumerate() {
        if t == pad_id {
            continue;
        }
        loss -= probs[[i, t]].max(f64::MIN_POSITIVE).ln();
        let mut g = grad.row_mut(i);
        g.assign(&probs.row(i));
        g[t] -= 1.0;
        g /= n;
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array};
    use proptest::prelude::*;

    #[test]
    fn leaky_relu_cases() {
        assert_eq!(leaky_relu(2.0, LEAKY_ALPHA), 2.0);
        assert_eq!(leaky_relu(0.0, LEAKY_ALPHA), 0.0);
        assert_abs_diff_eq!(leaky_relu(-1.0, LEAKY_ALPHA), -0.3, epsilon = 1e-15);
    }

    #[test]
    fn softmax_cases() {
        let p = softmax(array![0.0, 0.0].view());
        assert_eq!(p, array![0.5, 0.5]);
        let p = softmax(array![1000.0, 0.0].view());
        assert!(p.iter().all(|x| x.is_finite()));
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        let p = softmax(array![1.0, 2.0, 3.0].view());
        assert_abs_diff_eq!(p[0], 0.090031, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.244728, epsilon = 1e-6);
        assert_abs_diff_eq!(p[2], 0.665241, epsilon = 1e-6);
    }

    #[test]
    fn cross_entropy_cases() {
        let (loss, _) = cross_entropy_loss(array![[0.0, 1.0]].view(), &[1], 0).unwrap();
        assert_eq!(loss, 0.0);
        let (loss, _) = cross_entropy_loss(array![[0.5, 0.5]].view(), &[1], 0).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-12);

        let first = array![[0.2, 0.3, 0.5]];
        let (alone, _) = cross_entropy_loss(first.view(), &[2], 0).unwrap();
        for second in [array![0.9, 0.05, 0.05], array![0.1, 0.1, 0.8]] {
            let mut probs = Array::zeros((2, 3));
            probs.row_mut(0).assign(&first.row(0));
            probs.row_mut(1).assign(&second);
            let (loss, grad) = cross_entropy_loss(probs.view(), &[2, 0], 0).unwrap();
            assert_eq!(loss, alone);
            assert!(grad.row(1).iter().all(|&g| g == 0.0));
        }
        assert!(matches!(
            cross_entropy_loss(array![[0.5, 0.5]].view(), &[0], 0),
            Err(Error::EmptyAfterMask)
        ));
    }

    proptest! {
        #[test]
        fn softmax_normalised_and_shift_invariant(
            logits in proptest::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let a = Array1::from(logits.clone());
            let p = softmax(a.view());
            prop_assert!((p.sum() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
            let q = softmax((&a + shift).view());
            for (x, y) in p.iter().zip(q.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn cross_entropy_non_negative(
            logits in proptest::collection::vec(-5.0f64..5.0, 12),
            targets in proptest::collection::vec(0usize..4, 3),
        ) {
            let l = Array2::from_shape_vec((3, 4), logits).unwrap();
            let p = softmax_rows(l.view());
            match cross_entropy_loss(p.view(), &targets, 0) {
                Ok((loss, _)) => prop_assert!(loss >= 0.0),
                Err(Error::EmptyAfterMask) => prop_assert!(targets.iter().all(|&t| t == 0)),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
