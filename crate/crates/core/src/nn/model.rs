use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{Activation, Layer, NetworkSpec, Shape};
use super::NnError;
use crate::acquisition::ClassProbabilities;

/// A network spec together with its flat parameter vector.
///
/// Each parameterised layer owns a contiguous slice: weights first
/// (dense: `inputs x outputs` row-major; conv: `out x (in * k * k)`), then
/// one bias per output unit or channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub init_seed: u64,
}

/// Fan-in scaled uniform initialisation: every weight and bias of a layer
/// with fan-in `n` is drawn from `U(-1/sqrt(n), 1/sqrt(n))`.
pub fn init_random(spec: &NetworkSpec, seed: u64) -> Result<NetworkModel, NnError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(spec.param_count());
    for layer in &spec.layers {
        let count = layer.param_count();
        if count == 0 {
            continue;
        }
        let bound = 1.0 / (layer.fan_in() as f64).sqrt();
        params.extend((0..count).map(|_| rng.random_range(-bound..bound)));
    }
    Ok(NetworkModel {
        spec: spec.clone(),
        params,
        init_seed: seed,
    })
}

/// Per-layer activations from a forward pass; `acts[0]` is the input and
/// `acts[i + 1]` the output of layer `i`. The softmax head's output is the
/// probability matrix.
pub(crate) struct Trace {
    pub acts: Vec<Array2<f64>>,
}

impl Trace {
    pub fn probs(&self) -> &Array2<f64> {
        self.acts.last().unwrap()
    }

    pub fn logits(&self) -> &Array2<f64> {
        &self.acts[self.acts.len() - 2]
    }
}

impl NetworkModel {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self, NnError> {
        spec.validate()?;
        Ok(Self {
            spec: spec.clone(),
            params: vec![0.0; spec.param_count()],
            init_seed: 0,
        })
    }

    pub fn check(&self) -> Result<(), NnError> {
        self.spec.validate()?;
        let expected = self.spec.param_count();
        if self.params.len() != expected {
            return Err(NnError::ParamCount {
                expected,
                got: self.params.len(),
            });
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(NnError::InvalidSpec("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.spec.classes()
    }

    /// Start offset of each layer's parameter slice.
    pub(crate) fn offsets(&self) -> Vec<usize> {
        let mut at = 0;
        self.spec
            .layers
            .iter()
            .map(|l| {
                let start = at;
                at += l.param_count();
                start
            })
            .collect()
    }

    pub(crate) fn forward_trace(&self, input: Array2<f64>) -> Result<Trace, NnError> {
        let expected = self.spec.input_len();
        if input.ncols() != expected {
            return Err(NnError::ShapeMismatch {
                expected,
                got: input.ncols(),
            });
        }
        let shapes = self.spec.shapes()?;
        let offsets = self.offsets();
        let mut acts = Vec::with_capacity(self.spec.layers.len() + 1);
        acts.push(input);
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let x = acts.last().unwrap();
            let p = &self.params[offsets[i]..offsets[i] + layer.param_count()];
            let out = match *layer {
                Layer::Dense {
                    inputs,
                    outputs,
                    activation,
                } => {
                    let w = ArrayView2::from_shape((inputs, outputs), &p[..inputs * outputs])
                        .expect("dense weight slice");
                    let b = &p[inputs * outputs..];
                    let mut z = x.dot(&w);
                    for mut row in z.rows_mut() {
                        for (v, bias) in row.iter_mut().zip(b) {
                            *v += bias;
                        }
                    }
                    activate(z, activation)
                }
                Layer::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    activation,
                    ..
                } => {
                    let geom = ConvGeom::new(shapes[i], out_channels, kernel, stride);
                    conv_forward(x.view(), p, &geom, activation)
                }
                Layer::Flatten => x.clone(),
                Layer::SoftmaxHead { .. } => softmax_rows(x.view()),
            };
            acts.push(out);
        }
        Ok(Trace { acts })
    }

    /// Gradient of the mean cross-entropy over the batch with respect to
    /// every parameter, plus the mean loss itself.
    pub(crate) fn loss_and_grad(
        &self,
        input: Array2<f64>,
        labels: &[usize],
        grad: &mut [f64],
    ) -> Result<f64, NnError> {
        let trace = self.forward_trace(input)?;
        let n = labels.len();
        let loss = cross_entropy(trace.logits().view(), labels)?;
        let shapes = self.spec.shapes()?;
        let offsets = self.offsets();
        grad.iter_mut().for_each(|g| *g = 0.0);

        // dL/dlogits = (p - onehot) / n
        let mut delta = trace.probs().clone();
        for (r, &y) in labels.iter().enumerate() {
            delta[[r, y]] -= 1.0;
        }
        delta /= n as f64;

        let layers = &self.spec.layers;
        // skip the head: delta is already with respect to its input
        for i in (0..layers.len() - 1).rev() {
            let layer = &layers[i];
            let x = &trace.acts[i];
            let y = &trace.acts[i + 1];
            let count = layer.param_count();
            let p = &self.params[offsets[i]..offsets[i] + count];
            let g = &mut grad[offsets[i]..offsets[i] + count];
            delta = match *layer {
                Layer::Dense {
                    inputs,
                    outputs,
                    activation,
                } => {
                    if activation == Activation::Relu {
                        relu_mask(&mut delta, y);
                    }
                    let (gw, gb) = g.split_at_mut(inputs * outputs);
                    let mut gw = ArrayViewMut2::from_shape((inputs, outputs), gw).unwrap();
                    gw += &x.t().dot(&delta);
                    for (gb, col) in gb.iter_mut().zip(delta.columns()) {
                        *gb += col.sum();
                    }
                    let w = ArrayView2::from_shape((inputs, outputs), &p[..inputs * outputs])
                        .unwrap();
                    if i == 0 {
                        break;
                    }
                    delta.dot(&w.t())
                }
                Layer::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    activation,
                    ..
                } => {
                    if activation == Activation::Relu {
                        relu_mask(&mut delta, y);
                    }
                    let geom = ConvGeom::new(shapes[i], out_channels, kernel, stride);
                    conv_backward(x.view(), delta.view(), p, g, &geom, i > 0)
                }
                Layer::Flatten => delta,
                Layer::SoftmaxHead { .. } => unreachable!("head is last"),
            };
        }
        Ok(loss)
    }
}

fn activate(mut z: Array2<f64>, activation: Activation) -> Array2<f64> {
    if activation == Activation::Relu {
        z.mapv_inplace(|v| v.max(0.0));
    }
    z
}

fn relu_mask(delta: &mut Array2<f64>, out: &Array2<f64>) {
    ndarray::Zip::from(delta).and(out).for_each(|d, &o| {
        if o <= 0.0 {
            *d = 0.0;
        }
    });
}

/// Row-wise softmax with max subtraction.
pub(crate) fn softmax_rows(z: ArrayView2<f64>) -> Array2<f64> {
    let mut out = z.to_owned();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Mean cross-entropy computed from logits via log-sum-exp.
pub(crate) fn cross_entropy(logits: ArrayView2<f64>, labels: &[usize]) -> Result<f64, NnError> {
    let classes = logits.ncols();
    let mut total = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        if y >= classes {
            return Err(NnError::LabelOutOfRange { label: y, classes });
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    Ok(total / labels.len() as f64)
}

struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn new(input: Shape, oc: usize, k: usize, stride: usize) -> Self {
        let Shape::Image { c, h, w } = input else {
            unreachable!("validated spec feeds images to conv layers")
        };
        Self {
            c,
            h,
            w,
            oc,
            k,
            stride,
            oh: (h - k) / stride + 1,
            ow: (w - k) / stride + 1,
        }
    }

    fn patch_len(&self) -> usize {
        self.c * self.k * self.k
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    /// `positions x patch_len` matrix of input patches for one sample.
    fn im2col(&self, x: &[f64]) -> Array2<f64> {
        let mut cols = Array2::zeros((self.positions(), self.patch_len()));
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let mut row = cols.row_mut(oy * self.ow + ox);
                let mut j = 0;
                for ch in 0..self.c {
                    for ky in 0..self.k {
                        let base = ch * self.h * self.w + (oy * self.stride + ky) * self.w;
                        for kx in 0..self.k {
                            row[j] = x[base + ox * self.stride + kx];
                            j += 1;
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im_add(&self, dcols: &Array2<f64>, dx: &mut [f64]) {
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let row = dcols.row(oy * self.ow + ox);
                let mut j = 0;
                for ch in 0..self.c {
                    for ky in 0..self.k {
                        let base = ch * self.h * self.w + (oy * self.stride + ky) * self.w;
                        for kx in 0..self.k {
                            dx[base + ox * self.stride + kx] += row[j];
                            j += 1;
                        }
                    }
                }
            }
        }
    }
}

fn conv_forward(
    x: ArrayView2<f64>,
    p: &[f64],
    g: &ConvGeom,
    activation: Activation,
) -> Array2<f64> {
    let wlen = g.oc * g.patch_len();
    let w = ArrayView2::from_shape((g.oc, g.patch_len()), &p[..wlen]).unwrap();
    let b = &p[wlen..];
    let positions = g.positions();
    let mut out = Array2::zeros((x.nrows(), g.oc * positions));
    for (xr, mut orow) in x.rows().into_iter().zip(out.rows_mut()) {
        let xr = xr.as_slice().expect("row-major input");
        let cols = g.im2col(xr);
        // (oc x patch) . (patch x positions)
        let res = w.dot(&cols.t());
        for o in 0..g.oc {
            let mut dst = orow.slice_mut(s![o * positions..(o + 1) * positions]);
            dst.assign(&res.row(o));
            dst += b[o];
        }
    }
    activate(out, activation)
}

/// Accumulates weight/bias gradients into `grad`; returns the gradient with
/// respect to the layer input (zeros when `want_dx` is false).
fn conv_backward(
    x: ArrayView2<f64>,
    delta: ArrayView2<f64>,
    p: &[f64],
    grad: &mut [f64],
    g: &ConvGeom,
    want_dx: bool,
) -> Array2<f64> {
    let plen = g.patch_len();
    let wlen = g.oc * plen;
    let positions = g.positions();
    let w = ArrayView2::from_shape((g.oc, plen), &p[..wlen]).unwrap();
    let (gw, gb) = grad.split_at_mut(wlen);
    let mut gw = ArrayViewMut2::from_shape((g.oc, plen), gw).unwrap();
    let mut dx = Array2::zeros(x.raw_dim());
    for (r, (xr, dr)) in x.rows().into_iter().zip(delta.rows()).enumerate() {
        let cols = g.im2col(xr.as_slice().expect("row-major input"));
        let d = dr
            .to_owned()
            .into_shape_with_order((g.oc, positions))
            .expect("delta row has oc * positions entries");
        gw += &d.dot(&cols);
        for (gb, drow) in gb.iter_mut().zip(d.axis_iter(Axis(0))) {
            *gb += drow.sum();
        }
        if want_dx {
            let dcols = d.t().dot(&w);
            let mut dxr = dx.row_mut(r);
            g.col2im_add(&dcols, dxr.as_slice_mut().unwrap());
        }
    }
    dx
}

/// Class distributions for each row of `inputs`.
pub fn forward_probs(
    model: &NetworkModel,
    inputs: ArrayView2<f64>,
) -> Result<Vec<ClassProbabilities>, NnError> {
    let trace = model.forward_trace(inputs.to_owned())?;
    trace
        .probs()
        .rows()
        .into_iter()
        .map(|row| {
            ClassProbabilities::new(row.to_vec())
                .map_err(|e| NnError::InvalidSpec(format!("softmax output: {e}")))
        })
        .collect()
}
