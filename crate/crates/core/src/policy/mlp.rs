use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Output-layer weights are shrunk by this factor at initialization so the
/// initial mean action is close to zero.
pub const OUTPUT_INIT_SCALE: f64 = 0.01;

pub const DEFAULT_HIDDEN: [usize; 3] = [100, 100, 100];

/// One affine layer; `weights` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Gaussian policy over actions: mean from a tanh MLP with an affine output
/// layer, one standard deviation shared by every action component.
///
/// The flat parameter vector is ordered layer by layer, each layer's weights
/// in row-major `(out, in)` order followed by its biases, with `log_std` last.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMlpPolicy {
    pub layers: Vec<Layer>,
    pub log_std: f64,
}

/// Activations of a batched forward pass, kept for backprop and
/// Jacobian-vector products. `inputs[k]` is the input of layer `k`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub inputs: Vec<Array2<f64>>,
    pub mean: Array2<f64>,
}

/// Builds the default policy for `n_vehicles`: input width `4n`, output `2n`.
pub fn init_policy(
    n_vehicles: usize,
    hidden: &[usize],
    seed: u64,
    init_std: f64,
) -> Result<GaussianMlpPolicy> {
    if n_vehicles < 1 {
        return Err(Error::invalid("n_vehicles must be >= 1"));
    }
    GaussianMlpPolicy::random(4 * n_vehicles, hidden, 2 * n_vehicles, seed, init_std)
}

impl GaussianMlpPolicy {
    /// Uniform `±1/sqrt(fan_in)` weights (output layer additionally scaled by
    /// [`OUTPUT_INIT_SCALE`]), zero biases, `log_std = ln(init_std)`.
    pub fn random(
        inputs: usize,
        hidden: &[usize],
        outputs: usize,
        seed: u64,
        init_std: f64,
    ) -> Result<Self> {
        if !(init_std.is_finite() && init_std > 0.0) {
            return Err(Error::invalid("init_std must be finite and > 0"));
        }
        if inputs == 0 || outputs == 0 || hidden.contains(&0) {
            return Err(Error::invalid("layer widths must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths: Vec<usize> = std::iter::once(inputs)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(outputs))
            .collect();
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let scale = if k == last { OUTPUT_INIT_SCALE } else { 1.0 };
                let mut layer = Layer::zeros(w[0], w[1]);
                layer
                    .weights
                    .iter_mut()
                    .for_each(|v| *v = scale * rng.random_range(-bound..bound));
                layer
            })
            .collect();
        Ok(GaussianMlpPolicy {
            layers,
            log_std: init_std.ln(),
        })
    }

    /// Widths `[in, hidden.., out]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(Layer::outputs));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    pub fn std(&self) -> f64 {
        self.log_std.exp()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum::<usize>() + 1
    }

    pub fn same_architecture(&self, other: &Self) -> bool {
        self.layer_sizes() == other.layer_sizes()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        out.push(self.log_std);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::invalid(format!(
                "parameter vector length {} != {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *v = flat[at];
                at += 1;
            }
        }
        self.log_std = flat[at];
        Ok(())
    }

    /// `self + scale * direction` in flat parameter space.
    pub fn stepped(&self, direction: &[f64], scale: f64) -> Result<Self> {
        let mut params = self.params();
        if direction.len() != params.len() {
            return Err(Error::invalid("direction length mismatch"));
        }
        params
            .iter_mut()
            .zip(direction)
            .for_each(|(p, d)| *p += scale * d);
        let mut out = self.clone();
        out.set_params(&params)?;
        Ok(out)
    }

    /// Mean action for one state vector.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "state length {} != policy input {}",
                state.len(),
                self.input_dim()
            )));
        }
        let mut x = ArrayView1::from(state).to_owned();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&x) + &layer.bias;
            if k < last {
                z.mapv_inplace(f64::tanh);
            }
            x = z;
        }
        Ok(x.to_vec())
    }

    /// Mean actions for a `(batch, in)` matrix of states.
    pub fn forward_batch(&self, states: ArrayView2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut x = states.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weights.t()) + &layer.bias;
            if k < last {
                z.mapv_inplace(f64::tanh);
            }
            x = z;
        }
        x
    }

    pub fn forward_cached(&self, states: ArrayView2<f64>) -> ForwardCache {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = states.to_owned();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weights.t()) + &layer.bias;
            if k < last {
                z.mapv_inplace(f64::tanh);
            }
            inputs.push(x);
            x = z;
        }
        ForwardCache { inputs, mean: x }
    }

    /// Vector-Jacobian product: given `d_mean = dL/dmean` for each batch row,
    /// returns the flat gradient of `L` with respect to the network
    /// parameters. The `log_std` slot is left at zero.
    pub fn backward(&self, cache: &ForwardCache, d_mean: ArrayView2<f64>) -> Vec<f64> {
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        let mut delta = d_mean.to_owned();
        for k in (0..self.layers.len()).rev() {
            let input = &cache.inputs[k];
            let d_w = delta.t().dot(input);
            let d_b = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut prev = delta.dot(&self.layers[k].weights);
                // input = tanh(z) for hidden layers.
                prev.zip_mut_with(input, |d, a| *d *= 1.0 - a * a);
                delta = prev;
            }
            grads.push((d_w, d_b));
        }
        let mut flat = Vec::with_capacity(self.num_params());
        for (d_w, d_b) in grads.iter().rev() {
            flat.extend(d_w.iter());
            flat.extend(d_b.iter());
        }
        flat.push(0.0);
        flat
    }

    /// Jacobian-vector product of the batched mean with respect to the
    /// network parameters, along the flat direction `v` (its `log_std` slot
    /// is ignored).
    pub fn jvp(&self, cache: &ForwardCache, v: &[f64]) -> Array2<f64> {
        let batch = cache.mean.nrows();
        let last = self.layers.len() - 1;
        let mut tangent: Option<Array2<f64>> = None;
        let mut at = 0;
        for (k, layer) in self.layers.iter().enumerate() {
            let (rows, cols) = layer.weights.dim();
            let v_w = ArrayView2::from_shape((rows, cols), &v[at..at + rows * cols])
                .expect("shape matches layer");
            at += rows * cols;
            let v_b = ArrayView1::from(&v[at..at + rows]);
            at += rows;
            let mut dz = cache.inputs[k].dot(&v_w.t()) + &v_b;
            if let Some(t) = &tangent {
                dz += &t.dot(&layer.weights.t());
            }
            if k < last {
                let out = &cache.inputs[k + 1];
                dz.zip_mut_with(out, |d, a| *d *= 1.0 - a * a);
            }
            tangent = Some(dz);
        }
        tangent.unwrap_or_else(|| Array2::zeros((batch, self.output_dim())))
    }

    /// Gradient of `sum_t weights[t] * log pi(actions[t] | states[t])` over all
    /// parameters including `log_std`.
    pub fn grad_weighted_log_prob(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        weights: ArrayView1<f64>,
    ) -> Vec<f64> {
        let cache = self.forward_cached(states);
        let var = (2.0 * self.log_std).exp();
        let dim = self.output_dim() as f64;
        let mut d_mean = &actions - &cache.mean;
        let mut d_log_std = 0.0;
        for (mut row, &w) in d_mean.rows_mut().into_iter().zip(weights.iter()) {
            let sq: f64 = row.iter().map(|d| d * d).sum();
            d_log_std += w * (sq / var - dim);
            row.mapv_inplace(|d| w * d / var);
        }
        let mut grad = self.backward(&cache, d_mean.view());
        *grad.last_mut().expect("log_std slot") = d_log_std;
        grad
    }

    /// Exact gradient of `log pi(action | state)` with respect to every parameter.
    pub fn grad_log_prob(&self, state: &[f64], action: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.input_dim() || action.len() != self.output_dim() {
            return Err(Error::invalid("state/action dimension mismatch"));
        }
        let s = ArrayView2::from_shape((1, state.len()), state).expect("row vector");
        let a = ArrayView2::from_shape((1, action.len()), action).expect("row vector");
        let w = Array1::ones(1);
        Ok(self.grad_weighted_log_prob(s, a, w.view()))
    }
}

/// Rows `start..end` of a flat row-major buffer with `width` columns.
pub(crate) fn rows_view(
    flat: &[f64],
    width: usize,
    start: usize,
    end: usize,
) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((end - start, width), &flat[start * width..end * width])
        .expect("buffer length is a multiple of width")
}
