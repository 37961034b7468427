use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use super::{glorot_uniform, Parameters};
use crate::error::{Error, Result};

/// Fully connected layer `y = x·W + b`, with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, input: usize, output: usize) -> Self {
        Self {
            weight: glorot_uniform(rng, input, output),
            bias: Array1::zeros(output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.weight.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "dense layer expects {} inputs, got {}",
                self.weight.nrows(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.weight) + &self.bias)
    }

    /// Returns `dx` and accumulates parameter gradients into `grads`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, dy: ArrayView2<'_, f64>, grads: &mut Dense) -> Array2<f64> {
        grads.weight += &x.t().dot(&dy);
        grads.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight.t())
    }
}

impl Parameters for Dense {
    fn named(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        vec![
            ("weight".into(), self.weight.view().into_dyn()),
            ("bias".into(), self.bias.view().into_dyn()),
        ]
    }

    fn named_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        vec![
            ("weight".into(), self.weight.view_mut().into_dyn()),
            ("bias".into(), self.bias.view_mut().into_dyn()),
        ]
    }
}

/// Row lookup: one output row per id.
pub fn embedding_forward(table: &Array2<f64>, ids: &[usize]) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((ids.len(), table.ncols()));
    for (mut row, &id) in out.axis_iter_mut(Axis(0)).zip(ids) {
        if id >= table.nrows() {
            return Err(Error::UnknownId {
                id,
                vocab_size: table.nrows(),
            });
        }
        row.assign(&table.row(id));
    }
    Ok(out)
}

/// Scatter-add output gradients back into the table gradient.
pub fn embedding_backward(grad_table: &mut Array2<f64>, ids: &[usize], dy: ArrayView2<'_, f64>) {
    for (row, &id) in dy.axis_iter(Axis(0)).zip(ids) {
        let mut g = grad_table.row_mut(id);
        g += &row;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dense_forward_backward() {
        let layer = Dense {
            weight: array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
            bias: array![0.5, -0.5],
        };
        let x = array![[1.0, 0.0, -1.0]];
        assert_eq!(layer.forward(x.view()).unwrap(), array![[-3.5, -4.5]]);
        let mut g = Dense::zeros(3, 2);
        let dx = layer.backward(x.view(), array![[1.0, 1.0]].view(), &mut g);
        assert_eq!(dx, array![[3.0, 7.0, 11.0]]);
        assert_eq!(g.bias, array![1.0, 1.0]);
        assert_eq!(g.weight, array![[1.0, 1.0], [0.0, 0.0], [-1.0, -1.0]]);
        assert!(layer.forward(array![[1.0]].view()).is_err());
    }

    #[test]
    fn embedding_lookup_and_scatter() {
        let table = array![[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        let out = embedding_forward(&table, &[2, 0, 2]).unwrap();
        assert_eq!(out, array![[4.0, 5.0], [0.0, 1.0], [4.0, 5.0]]);
        let mut g = Array2::zeros((3, 2));
        embedding_backward(&mut g, &[2, 0, 2], array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]].view());
        assert_eq!(g, array![[2.0, 2.0], [0.0, 0.0], [4.0, 4.0]]);
        assert!(matches!(
            embedding_forward(&table, &[3]),
            Err(Error::UnknownId { id: 3, vocab_size: 3 })
        ));
    }
}
