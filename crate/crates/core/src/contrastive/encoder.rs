//! The shared feature encoder: a small stack of 3x3 convolutions, ReLU
//! between layers, linear output.

use rand::Rng;

use crate::contrastive::conv::{ConvGrads, ConvLayer};
use crate::contrastive::features::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;

#[derive(Clone, Debug, PartialEq)]
pub struct TinyEncoder {
    layers: Vec<ConvLayer>,
}

/// Default channel progression, input image to feature space.
pub const DEFAULT_CHANNELS: [usize; 4] = [1, 16, 16, 8];

/// Activations recorded during a traced forward pass, needed for backprop.
pub struct EncoderTrace {
    /// Input of each layer (index 0 is the raw image crop).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    preacts: Vec<Vec<f64>>,
    h: usize,
    w: usize,
}

impl EncoderTrace {
    pub fn output(&self) -> &[f64] {
        self.preacts.last().unwrap()
    }
}

impl TinyEncoder {
    pub fn from_layers(layers: Vec<ConvLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("encoder needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::InvalidInput("encoder layer channels do not chain".into()));
            }
        }
        Ok(Self { layers })
    }

    /// Random He-initialized encoder with the given channel progression,
    /// e.g. `[1, 16, 16, 8]` for three layers.
    pub fn random(channels: &[usize], rng: &mut impl Rng) -> Result<Self> {
        if channels.len() < 2 {
            return Err(Error::InvalidInput("channel spec needs at least two entries".into()));
        }
        let layers = channels
            .windows(2)
            .map(|io| ConvLayer::random(io[0], io[1], rng))
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.layers.last().unwrap().out_channels
    }

    /// Spatial margin inside which features differ from a larger-context
    /// encode (one pixel of receptive field per layer).
    pub fn margin(&self) -> usize {
        self.layers.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::param_count).sum()
    }

    /// Runs the stack on a raw buffer. ReLU after every layer except the last.
    pub fn forward(&self, input: &[f64], h: usize, w: usize) -> Vec<f64> {
        let mut cur = self.layers[0].forward(input, h, w);
        let n = self.layers.len();
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            relu_inplace(&mut cur);
            let _ = i;
            cur = layer.forward(&cur, h, w);
        }
        let _ = n;
        cur
    }

    /// Forward pass keeping every intermediate needed for [`Self::backward`].
    pub fn forward_trace(&self, input: &[f64], h: usize, w: usize) -> EncoderTrace {
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut cur = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                relu_inplace(&mut cur);
            }
            layer_inputs.push(cur.clone());
            cur = layer.forward(&cur, h, w);
            preacts.push(cur.clone());
        }
        EncoderTrace { layer_inputs, preacts, h, w }
    }

    /// Backprop through the stack; accumulates into `grads` (one entry per
    /// layer) and returns the gradient w.r.t. the input buffer.
    pub fn backward(&self, trace: &EncoderTrace, grad_out: &[f64], grads: &mut [ConvGrads]) -> Vec<f64> {
        assert_eq!(grads.len(), self.layers.len());
        let mut grad = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < self.layers.len() - 1 {
                // The stored pre-activation gates the gradient of the ReLU
                // that fed layer i+1's input.
                for (g, &pre) in grad.iter_mut().zip(trace.preacts[i].iter()) {
                    if pre <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            grad = self.layers[i].backward(&trace.layer_inputs[i], &grad, trace.h, trace.w, &mut grads[i]);
        }
        grad
    }

    pub fn zero_grads(&self) -> Vec<ConvGrads> {
        self.layers
            .iter()
            .map(|l| ConvGrads { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
            .collect()
    }

    /// Flattens all parameters, layer by layer, weights then bias.
    pub fn gather_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut offset = 0;
        for l in &mut self.layers {
            l.weights.copy_from_slice(&params[offset..offset + l.weights.len()]);
            offset += l.weights.len();
            l.bias.copy_from_slice(&params[offset..offset + l.bias.len()]);
            offset += l.bias.len();
        }
        assert_eq!(offset, params.len());
    }

    pub fn flatten_grads(&self, grads: &[ConvGrads]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for g in grads {
            out.extend_from_slice(&g.weights);
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

/// Applies the encoder to an image: same spatial dimensions, `C` output
/// channels, deterministic.
pub fn encode(enc: &TinyEncoder, img: &ImageGrid) -> Result<FeatureMap> {
    if img.channels() != enc.in_channels() {
        return Err(Error::InvalidInput(format!(
            "encoder expects {} input channels, image has {}",
            enc.in_channels(),
            img.channels()
        )));
    }
    let out = enc.forward(img.data(), img.height(), img.width());
    FeatureMap::new(img.height(), img.width(), enc.out_channels(), out)
}

fn relu_inplace(buf: &mut [f64]) {
    for v in buf {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}
