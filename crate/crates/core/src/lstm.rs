//! Stacked LSTM with a per-timestep affine head.
//!
//! Parameters live in one flat vector so optimizers, clipping and
//! checkpointing can treat a network as a single slice. Per layer `l` the
//! layout is `W_l [4H × D_l]`, `U_l [4H × H]`, `b_l [4H]`, gate rows ordered
//! input, forget, cell, output; the head `V [out × H]`, `c [out]` follows the
//! last layer.
//!
//! Every sequence starts from zero hidden and cell state. Gradients are exact
//! full backpropagation through time.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, SeededRng, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmDims {
    pub input_dim: usize,
    pub hidden: usize,
    pub depth: usize,
    pub output_dim: usize,
}

impl LstmDims {
    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden
        }
    }

    fn layer_len(&self, layer: usize) -> usize {
        4 * self.hidden * (self.layer_input(layer) + self.hidden + 1)
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.layer_len(l)).sum()
    }

    pub fn num_params(&self) -> usize {
        self.layer_offset(self.depth) + self.output_dim * (self.hidden + 1)
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.depth == 0 || self.output_dim == 0 {
            return Err(Error::invalid(format!(
                "LSTM dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadActivation {
    Tanh,
    Sigmoid,
    Identity,
}

impl HeadActivation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            HeadActivation::Tanh => x.tanh(),
            HeadActivation::Sigmoid => sigmoid(x),
            HeadActivation::Identity => x,
        }
    }

    /// Derivative expressed through the activated output `y`.
    #[inline]
    fn derivative(self, y: f64) -> f64 {
        match self {
            HeadActivation::Tanh => 1.0 - y * y,
            HeadActivation::Sigmoid => y * (1.0 - y),
            HeadActivation::Identity => 1.0,
        }
    }
}

/// A named slice of the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSegment {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmStackParams {
    dims: LstmDims,
    data: Vec<f64>,
}

impl LstmStackParams {
    pub fn zeros(dims: LstmDims) -> Result<Self> {
        dims.validate()?;
        Ok(LstmStackParams {
            dims,
            data: vec![0.0; dims.num_params()],
        })
    }

    pub fn from_flat(dims: LstmDims, data: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        if data.len() != dims.num_params() {
            return Err(Error::shape(
                "LstmStackParams::from_flat",
                dims.num_params(),
                data.len(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LSTM parameters".into()));
        }
        Ok(LstmStackParams { dims, data })
    }

    /// Weights uniform in `±1/√H`; forget-gate biases 1, all other biases 0.
    pub fn init(rng: &mut SeededRng, dims: LstmDims) -> Result<Self> {
        let mut p = Self::zeros(dims)?;
        let r = 1.0 / (dims.hidden as f64).sqrt();
        let h = dims.hidden;
        for l in 0..dims.depth {
            let weights = p.w_range(l).start..p.u_range(l).end;
            for v in &mut p.data[weights] {
                *v = rng.uniform(-r, r);
            }
            p.b_mut(l)[h..2 * h].fill(1.0);
        }
        for v in p.head_w_mut() {
            *v = rng.uniform(-r, r);
        }
        Ok(p)
    }

    pub fn dims(&self) -> LstmDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn segments(&self) -> Vec<ParamSegment> {
        let d = self.dims;
        let h4 = 4 * d.hidden;
        let mut out = Vec::with_capacity(3 * d.depth + 2);
        let mut off = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let n: usize = shape.iter().product();
            out.push(ParamSegment {
                name,
                shape,
                range: off..off + n,
            });
            off += n;
        };
        for l in 0..d.depth {
            push(format!("layer{l}.w"), vec![h4, d.layer_input(l)]);
            push(format!("layer{l}.u"), vec![h4, d.hidden]);
            push(format!("layer{l}.b"), vec![h4]);
        }
        push("head.w".into(), vec![d.output_dim, d.hidden]);
        push("head.b".into(), vec![d.output_dim]);
        out
    }

    fn w_range(&self, l: usize) -> Range<usize> {
        let o = self.dims.layer_offset(l);
        o..o + 4 * self.dims.hidden * self.dims.layer_input(l)
    }

    fn u_range(&self, l: usize) -> Range<usize> {
        let s = self.w_range(l).end;
        s..s + 4 * self.dims.hidden * self.dims.hidden
    }

    fn b_range(&self, l: usize) -> Range<usize> {
        let s = self.u_range(l).end;
        s..s + 4 * self.dims.hidden
    }

    fn head_w_range(&self) -> Range<usize> {
        let s = self.dims.layer_offset(self.dims.depth);
        s..s + self.dims.output_dim * self.dims.hidden
    }

    fn head_b_range(&self) -> Range<usize> {
        let s = self.head_w_range().end;
        s..s + self.dims.output_dim
    }

    pub fn w(&self, l: usize) -> &[f64] {
        &self.data[self.w_range(l)]
    }
    pub fn u(&self, l: usize) -> &[f64] {
        &self.data[self.u_range(l)]
    }
    pub fn b(&self, l: usize) -> &[f64] {
        &self.data[self.b_range(l)]
    }
    pub fn head_w(&self) -> &[f64] {
        &self.data[self.head_w_range()]
    }
    pub fn head_b(&self) -> &[f64] {
        &self.data[self.head_b_range()]
    }
    pub fn w_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.w_range(l);
        &mut self.data[r]
    }
    pub fn u_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.u_range(l);
        &mut self.data[r]
    }
    pub fn b_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.b_range(l);
        &mut self.data[r]
    }
    pub fn head_w_mut(&mut self) -> &mut [f64] {
        let r = self.head_w_range();
        &mut self.data[r]
    }
    pub fn head_b_mut(&mut self) -> &mut [f64] {
        let r = self.head_b_range();
        &mut self.data[r]
    }

    /// Runs the stack over every sequence in `inputs`, keeping what the
    /// backward pass needs.
    pub fn forward(
        &self,
        inputs: &SequenceBatch,
        activation: HeadActivation,
    ) -> Result<(SequenceBatch, ForwardCache)> {
        self.check_input(inputs)?;
        let steps = inputs.steps();
        let samples: Vec<SampleCache> = (0..inputs.batch())
            .map(|i| self.forward_sample(inputs.sample(i), steps, activation))
            .collect();
        let mut out = Vec::with_capacity(inputs.batch() * steps * self.dims.output_dim);
        for s in &samples {
            out.extend_from_slice(&s.outputs);
        }
        let outputs = SequenceBatch::new(inputs.batch(), steps, self.dims.output_dim, out)?;
        Ok((
            outputs,
            ForwardCache {
                dims: self.dims,
                steps,
                activation,
                samples,
            },
        ))
    }

    /// Forward pass without retaining the cache.
    pub fn predict(
        &self,
        inputs: &SequenceBatch,
        activation: HeadActivation,
    ) -> Result<SequenceBatch> {
        self.forward(inputs, activation).map(|(out, _)| out)
    }

    /// Backpropagation through time. `output_grads` holds dLoss/dOutput for
    /// every (sample, step, unit); returns gradients for every parameter
    /// (summed over the batch) and for every input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grads: &SequenceBatch,
    ) -> Result<(LstmStackParams, SequenceBatch)> {
        if cache.dims != self.dims {
            return Err(Error::shape("lstm backward cache", self.dims, cache.dims));
        }
        let expect = [cache.samples.len(), cache.steps, self.dims.output_dim];
        if output_grads.shape() != expect {
            return Err(Error::shape(
                "lstm backward output grads",
                expect,
                output_grads.shape(),
            ));
        }
        let mut grads = LstmStackParams::zeros(self.dims)?;
        let mut dx = Vec::with_capacity(cache.samples.len() * cache.steps * self.dims.input_dim);
        for (i, sample) in cache.samples.iter().enumerate() {
            let d = self.backward_sample(sample, cache, output_grads.sample(i), &mut grads);
            dx.extend_from_slice(&d);
        }
        let dx = SequenceBatch::new(cache.samples.len(), cache.steps, self.dims.input_dim, dx)?;
        Ok((grads, dx))
    }

    fn check_input(&self, inputs: &SequenceBatch) -> Result<()> {
        if inputs.dim() != self.dims.input_dim {
            return Err(Error::shape(
                "lstm input dim",
                self.dims.input_dim,
                inputs.dim(),
            ));
        }
        if inputs.steps() == 0 {
            return Err(Error::invalid("sequences must have at least one step"));
        }
        Ok(())
    }

    fn forward_sample(&self, x: &[f64], steps: usize, activation: HeadActivation) -> SampleCache {
        let h = self.dims.hidden;
        let h4 = 4 * h;
        let mut layers: Vec<LayerCache> = Vec::with_capacity(self.dims.depth);
        let mut z = vec![0.0; h4];
        for l in 0..self.dims.depth {
            let dim = self.dims.layer_input(l);
            let input: &[f64] = if l == 0 { x } else { &layers[l - 1].hidden };
            let (w, u, b) = (self.w(l), self.u(l), self.b(l));
            let mut cache = LayerCache::new(steps, h);
            for t in 0..steps {
                let xt = &input[t * dim..(t + 1) * dim];
                z.copy_from_slice(b);
                for (r, zr) in z.iter_mut().enumerate() {
                    *zr += dot(&w[r * dim..(r + 1) * dim], xt);
                }
                if t > 0 {
                    let h_prev = &cache.hidden[(t - 1) * h..t * h];
                    for (r, zr) in z.iter_mut().enumerate() {
                        *zr += dot(&u[r * h..(r + 1) * h], h_prev);
                    }
                }
                for j in 0..h {
                    let ig = sigmoid(z[j]);
                    let fg = sigmoid(z[h + j]);
                    let gg = z[2 * h + j].tanh();
                    let og = sigmoid(z[3 * h + j]);
                    let c_prev = if t > 0 {
                        cache.cells[(t - 1) * h + j]
                    } else {
                        0.0
                    };
                    let c = fg * c_prev + ig * gg;
                    let tc = c.tanh();
                    let gates = &mut cache.gates[t * h4..(t + 1) * h4];
                    gates[j] = ig;
                    gates[h + j] = fg;
                    gates[2 * h + j] = gg;
                    gates[3 * h + j] = og;
                    cache.cells[t * h + j] = c;
                    cache.cell_tanh[t * h + j] = tc;
                    cache.hidden[t * h + j] = og * tc;
                }
            }
            layers.push(cache);
        }

        let out_dim = self.dims.output_dim;
        let (vw, vb) = (self.head_w(), self.head_b());
        let top = &layers[self.dims.depth - 1].hidden;
        let mut outputs = Vec::with_capacity(steps * out_dim);
        for t in 0..steps {
            let ht = &top[t * h..(t + 1) * h];
            for o in 0..out_dim {
                outputs.push(activation.apply(vb[o] + dot(&vw[o * h..(o + 1) * h], ht)));
            }
        }
        SampleCache {
            inputs: x.to_vec(),
            layers,
            outputs,
        }
    }

    fn backward_sample(
        &self,
        s: &SampleCache,
        cache: &ForwardCache,
        dy: &[f64],
        grads: &mut LstmStackParams,
    ) -> Vec<f64> {
        let h = self.dims.hidden;
        let h4 = 4 * h;
        let steps = cache.steps;
        let out_dim = self.dims.output_dim;

        // Head.
        let top = &s.layers[self.dims.depth - 1].hidden;
        let mut dh_above = vec![0.0; steps * h];
        {
            let vw = self.head_w();
            let (hw_range, hb_range) = (self.head_w_range(), self.head_b_range());
            for t in 0..steps {
                let ht = &top[t * h..(t + 1) * h];
                let dht = &mut dh_above[t * h..(t + 1) * h];
                for o in 0..out_dim {
                    let idx = t * out_dim + o;
                    let dpre = dy[idx] * cache.activation.derivative(s.outputs[idx]);
                    if dpre == 0.0 {
                        continue;
                    }
                    grads.data[hb_range.start + o] += dpre;
                    let gw = &mut grads.data[hw_range.start + o * h..hw_range.start + (o + 1) * h];
                    axpy(dpre, ht, gw);
                    axpy(dpre, &vw[o * h..(o + 1) * h], dht);
                }
            }
        }

        let mut dz = vec![0.0; h4];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for l in (0..self.dims.depth).rev() {
            let dim = self.dims.layer_input(l);
            let input: &[f64] = if l == 0 {
                &s.inputs
            } else {
                &s.layers[l - 1].hidden
            };
            let lc = &s.layers[l];
            let (w, u) = (self.w(l), self.u(l));
            let (wr, ur, br) = (self.w_range(l), self.u_range(l), self.b_range(l));
            let mut dx = vec![0.0; steps * dim];
            dh_next.fill(0.0);
            dc_next.fill(0.0);
            for t in (0..steps).rev() {
                let gates = &lc.gates[t * h4..(t + 1) * h4];
                for j in 0..h {
                    let (ig, fg, gg, og) =
                        (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    let tc = lc.cell_tanh[t * h + j];
                    let c_prev = if t > 0 {
                        lc.cells[(t - 1) * h + j]
                    } else {
                        0.0
                    };
                    let dh = dh_above[t * h + j] + dh_next[j];
                    let d_o = dh * tc;
                    let dc = dh * og * (1.0 - tc * tc) + dc_next[j];
                    dz[j] = dc * gg * ig * (1.0 - ig);
                    dz[h + j] = dc * c_prev * fg * (1.0 - fg);
                    dz[2 * h + j] = dc * ig * (1.0 - gg * gg);
                    dz[3 * h + j] = d_o * og * (1.0 - og);
                    dc_next[j] = dc * fg;
                }
                let xt = &input[t * dim..(t + 1) * dim];
                let dxt = &mut dx[t * dim..(t + 1) * dim];
                dh_next.fill(0.0);
                for (r, &dzr) in dz.iter().enumerate() {
                    if dzr == 0.0 {
                        continue;
                    }
                    grads.data[br.start + r] += dzr;
                    axpy(
                        dzr,
                        xt,
                        &mut grads.data[wr.start + r * dim..wr.start + (r + 1) * dim],
                    );
                    axpy(dzr, &w[r * dim..(r + 1) * dim], dxt);
                    if t > 0 {
                        let h_prev = &lc.hidden[(t - 1) * h..t * h];
                        axpy(
                            dzr,
                            h_prev,
                            &mut grads.data[ur.start + r * h..ur.start + (r + 1) * h],
                        );
                        axpy(dzr, &u[r * h..(r + 1) * h], &mut dh_next);
                    }
                }
            }
            dh_above = dx;
        }
        dh_above
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    /// Post-activation gates per step, `[steps × 4H]`.
    gates: Vec<f64>,
    cells: Vec<f64>,
    cell_tanh: Vec<f64>,
    hidden: Vec<f64>,
}

impl LayerCache {
    fn new(steps: usize, h: usize) -> Self {
        LayerCache {
            gates: vec![0.0; steps * 4 * h],
            cells: vec![0.0; steps * h],
            cell_tanh: vec![0.0; steps * h],
            hidden: vec![0.0; steps * h],
        }
    }
}

#[derive(Clone, Debug)]
struct SampleCache {
    inputs: Vec<f64>,
    layers: Vec<LayerCache>,
    outputs: Vec<f64>,
}

/// Internals retained by [`LstmStackParams::forward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    dims: LstmDims,
    steps: usize,
    activation: HeadActivation,
    samples: Vec<SampleCache>,
}

/// A batch of equal-length sequences, `[batch × steps × dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch(Tensor);

impl SequenceBatch {
    pub fn new(batch: usize, steps: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        Ok(SequenceBatch(Tensor::from_vec(&[batch, steps, dim], data)?))
    }

    pub fn zeros(batch: usize, steps: usize, dim: usize) -> Self {
        SequenceBatch(Tensor::zeros(&[batch, steps, dim]))
    }

    pub fn from_tensor(t: Tensor) -> Result<Self> {
        if t.shape().len() != 3 {
            return Err(Error::shape("SequenceBatch", "3-D tensor", t.shape()));
        }
        Ok(SequenceBatch(t))
    }

    /// Stacks equally shaped `[steps × dim]` sequences.
    pub fn stack<'a>(
        steps: usize,
        dim: usize,
        seqs: impl IntoIterator<Item = &'a [f64]>,
    ) -> Result<Self> {
        let mut data = Vec::new();
        let mut n = 0;
        for s in seqs {
            if s.len() != steps * dim {
                return Err(Error::shape("SequenceBatch::stack", steps * dim, s.len()));
            }
            data.extend_from_slice(s);
            n += 1;
        }
        Self::new(n, steps, dim, data)
    }

    pub fn shape(&self) -> [usize; 3] {
        let s = self.0.shape();
        [s[0], s[1], s[2]]
    }

    pub fn batch(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn steps(&self) -> usize {
        self.0.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.0.shape()[2]
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.0.outer(i)
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        self.0.data_mut()
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, relative_error};

    fn dims(input_dim: usize, hidden: usize, depth: usize, output_dim: usize) -> LstmDims {
        LstmDims {
            input_dim,
            hidden,
            depth,
            output_dim,
        }
    }

    fn batch(rng: &mut SeededRng, b: usize, steps: usize, dim: usize) -> SequenceBatch {
        let mut x = SequenceBatch::zeros(b, steps, dim);
        rng.fill_normal(x.data_mut());
        x
    }

    #[test]
    fn zero_weights_give_activation_of_zero() {
        let p = LstmStackParams::zeros(dims(3, 4, 2, 2)).unwrap();
        let x = batch(&mut SeededRng::new(1), 2, 5, 3);
        let y = p.predict(&x, HeadActivation::Sigmoid).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.5));
        let y = p.predict(&x, HeadActivation::Tanh).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_step_matches_hand_arithmetic() {
        // H = 2, one layer, one output, input (1, 0).
        let mut p = LstmStackParams::zeros(dims(2, 2, 1, 1)).unwrap();
        // W rows: i0 i1 f0 f1 g0 g1 o0 o1; only the first input column is used.
        let wcol = [0.5, -0.3, 0.2, 0.1, 0.7, -0.4, 0.6, 0.25];
        for (r, v) in wcol.iter().enumerate() {
            p.w_mut(0)[r * 2] = *v;
        }
        p.b_mut(0)
            .copy_from_slice(&[0.1, 0.0, 1.0, 1.0, 0.0, 0.2, -0.1, 0.0]);
        p.head_w_mut().copy_from_slice(&[1.5, -2.0]);
        p.head_b_mut()[0] = 0.05;

        // Independent scalar evaluation of one cell step from zero state.
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut hs = [0.0; 2];
        for j in 0..2 {
            let i = sig(wcol[j] + [0.1, 0.0][j]);
            let g = (wcol[4 + j] + [0.0, 0.2][j]).tanh();
            let o = sig(wcol[6 + j] + [-0.1, 0.0][j]);
            let c = i * g;
            hs[j] = o * c.tanh();
        }
        let expected = (0.05 + 1.5 * hs[0] - 2.0 * hs[1]).tanh();

        let x = SequenceBatch::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let y = p.predict(&x, HeadActivation::Tanh).unwrap();
        assert!(
            (y.data()[0] - expected).abs() < 1e-15,
            "{} vs {expected}",
            y.data()[0]
        );
    }

    #[test]
    fn init_contract() {
        let d = dims(3, 16, 2, 2);
        let a = LstmStackParams::init(&mut SeededRng::new(5), d).unwrap();
        let b = LstmStackParams::init(&mut SeededRng::new(5), d).unwrap();
        assert_eq!(a, b);
        let r = 1.0 / 4.0;
        for l in 0..2 {
            assert!(a.w(l).iter().chain(a.u(l)).all(|v| v.abs() <= r));
            let bias = a.b(l);
            assert!(bias[16..32].iter().all(|&v| v == 1.0));
            assert!(bias[..16].iter().chain(&bias[32..]).all(|&v| v == 0.0));
        }
        assert!(a.head_w().iter().all(|v| v.abs() <= r));
        let total: usize = a.segments().iter().map(|s| s.range.len()).sum();
        assert_eq!(total, d.num_params());
    }

    #[test]
    fn zero_output_grads_give_zero_grads() {
        let mut rng = SeededRng::new(3);
        let p = LstmStackParams::init(&mut rng, dims(2, 5, 2, 1)).unwrap();
        let x = batch(&mut rng, 2, 4, 2);
        let (_, cache) = p.forward(&x, HeadActivation::Sigmoid).unwrap();
        let (g, dx) = p.backward(&cache, &SequenceBatch::zeros(2, 4, 1)).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        assert!(dx.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batch_forward_equals_per_sample_forward() {
        let mut rng = SeededRng::new(11);
        let p = LstmStackParams::init(&mut rng, dims(3, 6, 2, 2)).unwrap();
        let x = batch(&mut rng, 4, 7, 3);
        let y = p.predict(&x, HeadActivation::Tanh).unwrap();
        for i in 0..4 {
            let xi = SequenceBatch::stack(7, 3, [x.sample(i)]).unwrap();
            let yi = p.predict(&xi, HeadActivation::Tanh).unwrap();
            assert_eq!(yi.data(), y.sample(i));
        }
    }

    #[test]
    fn gradients_match_finite_differences_small() {
        let mut rng = SeededRng::new(21);
        let d = dims(2, 3, 2, 2);
        let p = LstmStackParams::init(&mut rng, d).unwrap();
        let x = batch(&mut rng, 2, 4, 2);
        let mut weights = SequenceBatch::zeros(2, 4, 2);
        rng.fill_normal(weights.data_mut());
        let loss = |params: &LstmStackParams, x: &SequenceBatch| -> f64 {
            let y = params.predict(x, HeadActivation::Tanh).unwrap();
            y.data()
                .iter()
                .zip(weights.data())
                .map(|(a, b)| a * b)
                .sum()
        };
        let (_, cache) = p.forward(&x, HeadActivation::Tanh).unwrap();
        let (g, dx) = p.backward(&cache, &weights).unwrap();
        let fd = finite_diff_grad(
            |v| loss(&LstmStackParams::from_flat(d, v.to_vec()).unwrap(), &x),
            p.as_slice(),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.as_slice().iter().zip(&fd) {
            assert!(relative_error(*a, *b, 1e-6) < 1e-4, "{a} vs {b}");
        }
        let fdx = finite_diff_grad(
            |v| loss(&p, &SequenceBatch::new(2, 4, 2, v.to_vec()).unwrap()),
            x.data(),
            1e-5,
        )
        .unwrap();
        for (a, b) in dx.data().iter().zip(&fdx) {
            assert!(relative_error(*a, *b, 1e-6) < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn dimension_errors() {
        let p = LstmStackParams::zeros(dims(2, 3, 1, 1)).unwrap();
        let x = SequenceBatch::zeros(1, 3, 4);
        assert!(p.forward(&x, HeadActivation::Tanh).is_err());
        let x = SequenceBatch::zeros(1, 3, 2);
        let (_, cache) = p.forward(&x, HeadActivation::Tanh).unwrap();
        assert!(p.backward(&cache, &SequenceBatch::zeros(1, 2, 1)).is_err());
        assert!(LstmStackParams::zeros(dims(0, 3, 1, 1)).is_err());
        assert!(LstmStackParams::from_flat(dims(2, 3, 1, 1), vec![0.0; 3]).is_err());
    }
}
