use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD};

use super::{Mode, Parameters};

/// Per-feature batch normalisation. Statistics are taken over the rows
/// selected by a mask, so padded sequence positions never contribute.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    /// Weight kept by the running statistics on each update.
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
    pub mask: Vec<bool>,
    pub count: usize,
    pub mode: Mode,
}

impl BatchNorm {
    pub const DEFAULT_MOMENTUM: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(features: usize) -> Self {
        Self::with(features, Self::DEFAULT_MOMENTUM, Self::DEFAULT_EPSILON)
    }

    pub fn with(features: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: Array1::ones(features),
            beta: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum,
            epsilon,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Normalise the masked rows of `x`; unmasked rows come out as zero.
    /// Running statistics are not touched, see [`BatchNorm::update_running`].
    pub fn forward(&self, x: ArrayView2<'_, f64>, mask: &[bool], mode: Mode) -> (Array2<f64>, BatchNormCache) {
        let (rows, feats) = x.dim();
        assert_eq!(mask.len(), rows);
        assert_eq!(feats, self.features());
        let count = mask.iter().filter(|&&m| m).count();
        let (mean, var) = match mode {
            Mode::Train => masked_moments(x, mask, count),
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let mut xhat = Array2::zeros((rows, feats));
        let mut y = Array2::zeros((rows, feats));
        for r in 0..rows {
            if !mask[r] {
                continue;
            }
            for f in 0..feats {
                let h = (x[[r, f]] - mean[f]) * inv_std[f];
                xhat[[r, f]] = h;
                y[[r, f]] = self.gamma[f] * h + self.beta[f];
            }
        }
        let cache = BatchNormCache {
            xhat,
            inv_std,
            mean,
            var,
            mask: mask.to_vec(),
            count,
            mode,
        };
        (y, cache)
    }

    /// Returns `dx`; accumulates `dgamma`, `dbeta` into `grads`.
    pub fn backward(&self, cache: &BatchNormCache, dy: ArrayView2<'_, f64>, grads: &mut BatchNorm) -> Array2<f64> {
        let (rows, feats) = dy.dim();
        let mut dx = Array2::zeros((rows, feats));
        if cache.count == 0 {
            return dx;
        }
        let n = cache.count as f64;
        for f in 0..feats {
            let mut sum_dxhat = 0.0;
            let mut sum_dxhat_xhat = 0.0;
            for r in (0..rows).filter(|&r| cache.mask[r]) {
                let g = dy[[r, f]];
                grads.gamma[f] += g * cache.xhat[[r, f]];
                grads.beta[f] += g;
                let dxhat = g * self.gamma[f];
                sum_dxhat += dxhat;
                sum_dxhat_xhat += dxhat * cache.xhat[[r, f]];
            }
            let k = cache.inv_std[f];
            for r in (0..rows).filter(|&r| cache.mask[r]) {
                let dxhat = dy[[r, f]] * self.gamma[f];
                dx[[r, f]] = match cache.mode {
                    Mode::Train => {
                        k / n * (n * dxhat - sum_dxhat - cache.xhat[[r, f]] * sum_dxhat_xhat)
                    }
                    Mode::Infer => k * dxhat,
                };
            }
        }
        dx
    }

    /// Fold the batch statistics of a train-mode pass into the running ones.
    pub fn update_running(&mut self, cache: &BatchNormCache) {
        if cache.mode != Mode::Train || cache.count == 0 {
            return;
        }
        let m = self.momentum;
        self.running_mean = &self.running_mean * m + &cache.mean * (1.0 - m);
        self.running_var = &self.running_var * m + &cache.var * (1.0 - m);
    }

    pub fn buffers(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        vec![
            ("running_mean".into(), self.running_mean.view().into_dyn()),
            ("running_var".into(), self.running_var.view().into_dyn()),
        ]
    }

    pub fn buffers_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        vec![
            ("running_mean".into(), self.running_mean.view_mut().into_dyn()),
            ("running_var".into(), self.running_var.view_mut().into_dyn()),
        ]
    }
}

fn masked_moments(x: ArrayView2<'_, f64>, mask: &[bool], count: usize) -> (Array1<f64>, Array1<f64>) {
    let feats = x.ncols();
    let mut mean = Array1::zeros(feats);
    let mut var = Array1::zeros(feats);
    if count == 0 {
        return (mean, var);
    }
    let n = count as f64;
    for (row, _) in x.rows().into_iter().zip(mask).filter(|(_, &m)| m) {
        mean += &row;
    }
    mean /= n;
    for (row, _) in x.rows().into_iter().zip(mask).filter(|(_, &m)| m) {
        let d = &row - &mean;
        var += &(&d * &d);
    }
    var /= n;
    (mean, var)
}

impl Parameters for BatchNorm {
    fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        vec![
            ("gamma".into(), self.gamma.view().into_dyn()),
            ("beta".into(), self.beta.view().into_dyn()),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        vec![
            ("gamma".into(), self.gamma.view_mut().into_dyn()),
            ("beta".into(), self.beta.view_mut().into_dyn()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn constant_batch_normalises_to_zero() {
        let bn = BatchNorm::new(1);
        let (y, _) = bn.forward(array![[5.0], [5.0]].view(), &[true, true], Mode::Train);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_point_batch() {
        let bn = BatchNorm::new(1);
        let (y, c) = bn.forward(array![[0.0], [2.0]].view(), &[true, true], Mode::Train);
        assert_eq!(c.mean[0], 1.0);
        assert_eq!(c.var[0], 1.0);
        assert!((y[[0, 0]] + 1.0).abs() < 1e-7);
        assert!((y[[1, 0]] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infer_with_unit_stats_is_identity() {
        let bn = BatchNorm::with(2, 0.9, 0.0);
        let x = array![[0.3, -1.2], [4.0, 0.0]];
        let (y, _) = bn.forward(x.view(), &[true, true], Mode::Infer);
        assert_eq!(y, x);
    }

    #[test]
    fn masked_rows_are_ignored() {
        let bn = BatchNorm::new(1);
        let (y, c) = bn.forward(array![[0.0], [100.0], [2.0]].view(), &[true, false, true], Mode::Train);
        assert_eq!(c.mean[0], 1.0);
        assert_eq!(y[[1, 0]], 0.0);
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm::with(1, 0.5, 1e-8);
        let (_, c) = bn.forward(array![[2.0], [4.0]].view(), &[true, true], Mode::Train);
        bn.update_running(&c);
        assert_eq!(bn.running_mean[0], 1.5);
        assert_eq!(bn.running_var[0], 1.0);
    }

    proptest! {
        #[test]
        fn train_output_is_standardised(
            values in proptest::collection::vec(-10.0f64..10.0, 6..40),
        ) {
            let rows = values.len() / 2;
            let x = Array2::from_shape_vec((rows, 2), values[..rows * 2].to_vec()).unwrap();
            let bn = BatchNorm::new(2);
            let mask = vec![true; rows];
            let (y, c) = bn.forward(x.view(), &mask, Mode::Train);
            for f in 0..2 {
                prop_assume!(c.var[f] > 1e-2);
                let col = y.column(f);
                let mean = col.sum() / rows as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rows as f64;
                prop_assert!(mean.abs() < 1e-10);
                prop_assert!((var - 1.0).abs() < 1e-6);
            }
        }
    }
}
