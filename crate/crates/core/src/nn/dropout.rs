use ndarray::Array2;
use rand::Rng;

use super::Mode;

/// Inverted dropout. In train mode each entry is zeroed with probability
/// `rate` and survivors are scaled by `1/(1-rate)`; the returned mask holds
/// the per-entry multiplier. Infer mode is the identity with no mask.
pub fn dropout_forward<R: Rng + ?Sized>(
    x: &Array2<f64>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> (Array2<f64>, Option<Array2<f64>>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
    if mode == Mode::Infer || rate == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask = Array2::from_shape_simple_fn(x.dim(), || {
        if rng.gen::<f64>() < rate {
            0.0
        } else {
            keep
        }
    });
    (x * &mask, Some(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_elem((3, 4), 1.5);
        let (y, mask) = dropout_forward(&x, 0.0, Mode::Train, &mut rng);
        assert_eq!(y, x);
        assert!(mask.is_none());
        let (y, mask) = dropout_forward(&x, 0.5, Mode::Infer, &mut rng);
        assert_eq!(y, x);
        assert!(mask.is_none());
    }

    #[test]
    fn half_rate_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Array2::from_elem((100, 100), 1.0);
        let (y, _) = dropout_forward(&x, 0.5, Mode::Train, &mut rng);
        let survivors = y.iter().filter(|&&v| v != 0.0).count();
        let frac = survivors as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "surviving fraction {frac}");
        assert!(y.iter().all(|&v| v == 0.0 || v == 2.0));
    }
}
