//! Encoder checkpoints: one shared encoder, or one per modality.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contrastive::conv::ConvLayer;
use crate::contrastive::encoder::TinyEncoder;
use crate::contrastive::features::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::ENCODER_VERSION;

#[derive(Clone, Debug, PartialEq)]
pub enum EncoderBundle {
    Shared(TinyEncoder),
    PerModality { fixed: TinyEncoder, moving: TinyEncoder },
}

impl EncoderBundle {
    pub fn encode_fixed(&self, img: &ImageGrid) -> Result<FeatureMap> {
        match self {
            Self::Shared(enc) => super::encoder::encode(enc, img),
            Self::PerModality { fixed, .. } => super::encoder::encode(fixed, img),
        }
    }

    pub fn encode_moving(&self, img: &ImageGrid) -> Result<FeatureMap> {
        match self {
            Self::Shared(enc) => super::encoder::encode(enc, img),
            Self::PerModality { moving, .. } => super::encoder::encode(moving, img),
        }
    }

    pub fn in_channels(&self) -> usize {
        match self {
            Self::Shared(enc) => enc.in_channels(),
            Self::PerModality { fixed, .. } => fixed.in_channels(),
        }
    }

    pub fn out_channels(&self) -> usize {
        match self {
            Self::Shared(enc) => enc.out_channels(),
            Self::PerModality { fixed, .. } => fixed.out_channels(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile::from_bundle(self);
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        file.into_bundle()
    }
}

/// On-disk layout. Weights are serialized in `[out][in][ky][kx]` order.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    shared: bool,
    encoders: Vec<EncoderFile>,
}

#[derive(Serialize, Deserialize)]
struct EncoderFile {
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    in_channels: usize,
    out_channels: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LayerFile {
    fn from_layer(l: &ConvLayer) -> Self {
        // internal [out][ky][kx][in] -> file [out][in][ky][kx]
        let (ic, oc) = (l.in_channels, l.out_channels);
        let mut weights = vec![0.0; l.weights.len()];
        for co in 0..oc {
            for ky in 0..3 {
                for kx in 0..3 {
                    for ci in 0..ic {
                        weights[((co * ic + ci) * 3 + ky) * 3 + kx] =
                            l.weights[((co * 3 + ky) * 3 + kx) * ic + ci];
                    }
                }
            }
        }
        Self { in_channels: ic, out_channels: oc, weights, bias: l.bias.clone() }
    }

    fn into_layer(self) -> Result<ConvLayer> {
        let (ic, oc) = (self.in_channels, self.out_channels);
        if self.weights.len() != oc * ic * 9 || self.bias.len() != oc {
            return Err(Error::Config("checkpoint layer has wrong weight count".into()));
        }
        if !self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite()) {
            return Err(Error::Config("checkpoint contains non-finite weights".into()));
        }
        let mut layer = ConvLayer::zeros(ic, oc);
        for co in 0..oc {
            for ky in 0..3 {
                for kx in 0..3 {
                    for ci in 0..ic {
                        layer.weights[((co * 3 + ky) * 3 + kx) * ic + ci] =
                            self.weights[((co * ic + ci) * 3 + ky) * 3 + kx];
                    }
                }
            }
        }
        layer.bias = self.bias;
        Ok(layer)
    }
}

impl CheckpointFile {
    fn from_bundle(bundle: &EncoderBundle) -> Self {
        let encode = |enc: &TinyEncoder| EncoderFile {
            layers: enc.layers().iter().map(LayerFile::from_layer).collect(),
        };
        match bundle {
            EncoderBundle::Shared(enc) => Self {
                version: ENCODER_VERSION.to_string(),
                shared: true,
                encoders: vec![encode(enc)],
            },
            EncoderBundle::PerModality { fixed, moving } => Self {
                version: ENCODER_VERSION.to_string(),
                shared: false,
                encoders: vec![encode(fixed), encode(moving)],
            },
        }
    }

    fn into_bundle(self) -> Result<EncoderBundle> {
        if self.version != ENCODER_VERSION {
            return Err(Error::Config(format!(
                "unsupported encoder checkpoint version {:?}",
                self.version
            )));
        }
        let mut encoders = Vec::new();
        for e in self.encoders {
            let layers: Result<Vec<ConvLayer>> = e.layers.into_iter().map(LayerFile::into_layer).collect();
            encoders.push(TinyEncoder::from_layers(layers?)?);
        }
        match (self.shared, encoders.len()) {
            (true, 1) => Ok(EncoderBundle::Shared(encoders.pop().unwrap())),
            (false, 2) => {
                let moving = encoders.pop().unwrap();
                let fixed = encoders.pop().unwrap();
                Ok(EncoderBundle::PerModality { fixed, moving })
            }
            _ => Err(Error::Config("checkpoint encoder count does not match mode".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn save_load_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let enc = TinyEncoder::random(&[1, 4, 3], &mut rng).unwrap();
        let bundle = EncoderBundle::Shared(enc);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.json");
        bundle.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("shgreg-enc-v1"));
        let back = EncoderBundle::load(&path).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn per_modality_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let fixed = TinyEncoder::random(&[1, 3, 2], &mut rng).unwrap();
        let moving = TinyEncoder::random(&[1, 3, 2], &mut rng).unwrap();
        let bundle = EncoderBundle::PerModality { fixed, moving };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc2.json");
        bundle.save(&path).unwrap();
        assert_eq!(EncoderBundle::load(&path).unwrap(), bundle);
    }
}
