use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    /// Valid (unpadded) 2-D convolution over a channel-major `C x H x W` input.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    Flatten,
    /// Softmax over `classes` logits; must be the last layer.
    SoftmaxHead { classes: usize },
}

impl Layer {
    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer::Dense {
            inputs,
            outputs,
            activation,
        }
    }

    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Layer::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            activation: Activation::Relu,
        }
    }

    /// Number of trainable parameters (weights then biases).
    pub fn param_count(&self) -> usize {
        match *self {
            Layer::Dense {
                inputs, outputs, ..
            } => inputs * outputs + outputs,
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => out_channels * in_channels * kernel * kernel + out_channels,
            Layer::Flatten | Layer::SoftmaxHead { .. } => 0,
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            Layer::Dense { inputs, .. } => inputs,
            Layer::Conv2d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel * kernel,
            Layer::Flatten | Layer::SoftmaxHead { .. } => 0,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Layer::Dense {
                inputs,
                outputs,
                activation,
            } => format!("dense {inputs}->{outputs} ({activation:?})").to_lowercase(),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                activation,
            } => format!(
                "conv2d {in_channels}->{out_channels} k{kernel} s{stride} ({activation:?})"
            )
            .to_lowercase(),
            Layer::Flatten => "flatten".into(),
            Layer::SoftmaxHead { classes } => format!("softmax head ({classes})"),
        }
    }
}

/// Layer list plus the shape of one input sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer>,
}

/// Shape of the activation flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Shape {
    Flat(usize),
    Image { c: usize, h: usize, w: usize },
}

impl Shape {
    pub(crate) fn len(self) -> usize {
        match self {
            Shape::Flat(n) => n,
            Shape::Image { c, h, w } => c * h * w,
        }
    }
}

/// Named reference architectures.
pub const PRESETS: [&str; 2] = ["mlp-small", "cnn-small"];

impl NetworkSpec {
    /// `input -> 128 -> 64 -> classes` with ReLU hidden units.
    pub fn mlp_small(input_dim: usize, classes: usize) -> Self {
        Self {
            input_shape: vec![input_dim],
            layers: vec![
                Layer::dense(input_dim, 128, Activation::Relu),
                Layer::dense(128, 64, Activation::Relu),
                Layer::dense(64, classes, Activation::None),
                Layer::SoftmaxHead { classes },
            ],
        }
    }

    /// `conv3x3x16 -> relu -> conv3x3x32 -> relu -> flatten -> dense classes`.
    pub fn cnn_small(channels: usize, height: usize, width: usize, classes: usize) -> Self {
        let flat = 32 * height.saturating_sub(4) * width.saturating_sub(4);
        Self {
            input_shape: vec![channels, height, width],
            layers: vec![
                Layer::conv(channels, 16, 3, 1),
                Layer::conv(16, 32, 3, 1),
                Layer::Flatten,
                Layer::dense(flat, classes, Activation::None),
                Layer::SoftmaxHead { classes },
            ],
        }
    }

    /// Build a preset for the given per-sample input shape.
    ///
    /// `mlp-small` flattens any input shape; `cnn-small` needs `[C, H, W]`.
    pub fn preset(name: &str, input_shape: &[usize], classes: usize) -> Result<Self, NnError> {
        match name {
            "mlp-small" => {
                let dim = input_shape.iter().product();
                let mut spec = Self::mlp_small(dim, classes);
                if input_shape.len() != 1 {
                    spec.input_shape = input_shape.to_vec();
                    spec.layers.insert(0, Layer::Flatten);
                }
                spec.validate()?;
                Ok(spec)
            }
            "cnn-small" => match *input_shape {
                [c, h, w] => {
                    let spec = Self::cnn_small(c, h, w, classes);
                    spec.validate()?;
                    Ok(spec)
                }
                _ => Err(NnError::InvalidSpec(format!(
                    "cnn-small needs a [C, H, W] input, got {input_shape:?}"
                ))),
            },
            other => Err(NnError::UnknownPreset(other.to_string())),
        }
    }

    pub(crate) fn input(&self) -> Result<Shape, NnError> {
        match *self.input_shape.as_slice() {
            [n] if n > 0 => Ok(Shape::Flat(n)),
            [c, h, w] if c > 0 && h > 0 && w > 0 => Ok(Shape::Image { c, h, w }),
            _ => Err(NnError::InvalidSpec(format!(
                "input shape {:?} must be [D] or [C, H, W] with positive sizes",
                self.input_shape
            ))),
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    /// Walk the layers checking dimensional compatibility; returns the
    /// shape entering each layer plus the final output shape.
    pub(crate) fn shapes(&self) -> Result<Vec<Shape>, NnError> {
        let bad = |i: usize, msg: String| NnError::InvalidSpec(format!("layer {i}: {msg}"));
        let mut shapes = vec![self.input()?];
        let last = self.layers.len().checked_sub(1).ok_or_else(|| {
            NnError::InvalidSpec("network has no layers".into())
        })?;
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = *shapes.last().unwrap();
            let next = match (*layer, cur) {
                (
                    Layer::Dense {
                        inputs, outputs, ..
                    },
                    Shape::Flat(n),
                ) => {
                    if inputs != n {
                        return Err(bad(i, format!("dense expects {inputs} inputs, got {n}")));
                    }
                    if outputs == 0 {
                        return Err(bad(i, "dense layer with zero outputs".into()));
                    }
                    Shape::Flat(outputs)
                }
                (Layer::Dense { .. }, Shape::Image { .. }) => {
                    return Err(bad(i, "dense layer on an image; add a flatten".into()))
                }
                (
                    Layer::Conv2d {
                        in_channels,
                        out_channels,
                        kernel,
                        stride,
                        ..
                    },
                    Shape::Image { c, h, w },
                ) => {
                    if in_channels != c {
                        return Err(bad(i, format!("conv expects {in_channels} channels, got {c}")));
                    }
                    if kernel == 0 || stride == 0 || out_channels == 0 {
                        return Err(bad(i, "conv sizes must be positive".into()));
                    }
                    if kernel > h || kernel > w {
                        return Err(bad(i, format!("kernel {kernel} larger than {h}x{w} input")));
                    }
                    Shape::Image {
                        c: out_channels,
                        h: (h - kernel) / stride + 1,
                        w: (w - kernel) / stride + 1,
                    }
                }
                (Layer::Conv2d { .. }, Shape::Flat(_)) => {
                    return Err(bad(i, "conv layer on a flat input".into()))
                }
                (Layer::Flatten, s) => Shape::Flat(s.len()),
                (Layer::SoftmaxHead { classes }, s) => {
                    if i != last {
                        return Err(bad(i, "softmax head must be the last layer".into()));
                    }
                    if classes < 2 {
                        return Err(bad(i, "softmax head needs at least 2 classes".into()));
                    }
                    if s != Shape::Flat(classes) {
                        return Err(bad(i, format!("softmax head over {classes} classes got {s:?}")));
                    }
                    s
                }
            };
            shapes.push(next);
        }
        if !matches!(self.layers[last], Layer::SoftmaxHead { .. }) {
            return Err(NnError::InvalidSpec(
                "last layer must be a softmax head".into(),
            ));
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.shapes().map(|_| ())
    }

    pub fn classes(&self) -> usize {
        match self.layers.last() {
            Some(Layer::SoftmaxHead { classes }) => *classes,
            _ => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }
}
