use serde::{Deserialize, Serialize};

use crate::error::{GsgiError, Result};
use crate::game::NUM_CHANNELS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel: usize,
        stride: usize,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        out: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// One dense layer producing a Q-value per action.
    SingleQ,
    /// Separate state-value and advantage layers, Q = V + A.
    Dueling,
    /// Dense layer followed by a softmax over actions.
    PolicySoftmax,
    /// Dense layer producing one scalar.
    ScalarValue,
}

/// Architecture description: input shape, body layers and output head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub channels: usize,
    pub rows: usize,
    pub cols: usize,
    pub layers: Vec<LayerSpec>,
    pub head: Head,
    pub outputs: usize,
}

/// Shape `(channels, rows, cols)` flowing between layers.
pub(crate) type Shape = (usize, usize, usize);

impl NetworkSpec {
    pub fn new(
        channels: usize,
        rows: usize,
        cols: usize,
        layers: Vec<LayerSpec>,
        head: Head,
        outputs: usize,
    ) -> Result<Self> {
        let spec = NetworkSpec {
            channels,
            rows,
            cols,
            layers,
            head,
            outputs,
        };
        spec.shapes()?;
        Ok(spec)
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.rows * self.cols
    }

    pub fn output_len(&self) -> usize {
        match self.head {
            Head::ScalarValue => 1,
            _ => self.outputs,
        }
    }

    /// Input shape of every body layer followed by the body output shape.
    pub(crate) fn shapes(&self) -> Result<Vec<Shape>> {
        if self.channels == 0 || self.rows == 0 || self.cols == 0 {
            return Err(GsgiError::Shape("empty input".into()));
        }
        if self.head != Head::ScalarValue && self.outputs == 0 {
            return Err(GsgiError::Shape("head needs at least one output".into()));
        }
        let mut shapes = vec![(self.channels, self.rows, self.cols)];
        let mut cur = shapes[0];
        for (i, l) in self.layers.iter().enumerate() {
            let (c, h, w) = cur;
            cur = match *l {
                LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                } => {
                    if filters == 0 {
                        return Err(GsgiError::Shape(format!("layer {i}: conv needs filters")));
                    }
                    window(i, h, w, kernel, stride).map(|(oh, ow)| (filters, oh, ow))?
                }
                LayerSpec::MaxPool { kernel, stride } => window(i, h, w, kernel, stride).map(|(oh, ow)| (c, oh, ow))?,
                LayerSpec::Relu => cur,
                LayerSpec::Flatten => (c * h * w, 1, 1),
                LayerSpec::Dense { out } => {
                    if out == 0 {
                        return Err(GsgiError::Shape(format!("layer {i}: dense needs outputs")));
                    }
                    (out, 1, 1)
                }
            };
            shapes.push(cur);
        }
        Ok(shapes)
    }

    pub(crate) fn body_output_len(&self) -> usize {
        let s = *self.shapes().expect("validated").last().unwrap();
        s.0 * s.1 * s.2
    }
}

fn window(layer: usize, h: usize, w: usize, kernel: usize, stride: usize) -> Result<(usize, usize)> {
    if kernel == 0 || stride == 0 || kernel > h || kernel > w {
        return Err(GsgiError::Shape(format!(
            "layer {layer}: window {kernel} (stride {stride}) does not fit {h}x{w}"
        )));
    }
    Ok(((h - kernel) / stride + 1, (w - kernel) / stride + 1))
}

/// Standard architecture for a square grid of size 3, 5 or 7: two conv layers
/// (16 filters of size 2/3/4 with stride 1, then 32 filters of 2x2 with
/// stride 2), each followed by relu and a 2x2 stride-1 max-pool. A pool is
/// dropped when its input is smaller than 2x2 or when its output would be too
/// small for the next convolution.
pub fn build_network_spec(grid_size: usize, head: Head, outputs: usize) -> Result<NetworkSpec> {
    let first_kernel = match grid_size {
        3 => 2,
        5 => 3,
        7 => 4,
        n => return Err(GsgiError::Dimensions(format!("no standard network for grid size {n}"))),
    };
    let convs = [(16, first_kernel, 1), (32, 2, 2)];
    let mut layers = Vec::new();
    let mut side = grid_size;
    for (i, &(filters, kernel, stride)) in convs.iter().enumerate() {
        layers.push(LayerSpec::Conv {
            filters,
            kernel,
            stride,
        });
        layers.push(LayerSpec::Relu);
        side = (side - kernel) / stride + 1;
        let next_kernel = convs.get(i + 1).map(|c| c.1).unwrap_or(1);
        if side >= 2 && side > next_kernel {
            layers.push(LayerSpec::MaxPool { kernel: 2, stride: 1 });
            side -= 1;
        }
    }
    layers.push(LayerSpec::Flatten);
    NetworkSpec::new(NUM_CHANNELS, grid_size, grid_size, layers, head, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_specs_chain() {
        for (n, body) in [(3, 32), (5, 32), (7, 32)] {
            let s = build_network_spec(n, Head::SingleQ, 5).unwrap();
            assert_eq!(s.body_output_len(), body, "grid {n}");
        }
        let s7 = build_network_spec(7, Head::SingleQ, 5).unwrap();
        let pools = s7
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::MaxPool { .. }))
            .count();
        assert_eq!(pools, 1);
        assert!(matches!(
            build_network_spec(4, Head::SingleQ, 5),
            Err(GsgiError::Dimensions(_))
        ));
    }

    #[test]
    fn rejects_oversized_kernel() {
        let r = NetworkSpec::new(
            1,
            2,
            2,
            vec![LayerSpec::Conv {
                filters: 1,
                kernel: 3,
                stride: 1,
            }],
            Head::SingleQ,
            2,
        );
        assert!(matches!(r, Err(GsgiError::Shape(_))));
    }
}
