//! Architecture description: block widths, dense width, per-layer padding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Padding;

use super::labels::NUM_CLASSES;

/// How padding is assigned across the two convolutions of each block.
///
/// The canonical choice is [`PaddingPolicy::BlockSameValid`]: the first
/// convolution of every block preserves spatial dims, the second runs
/// unpadded. `AllSame` keeps every feature map at the block's input size and
/// is what lets small inputs (64x64) survive all five pooling stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaddingPolicy {
    BlockSameValid,
    AllSame,
    AllValid,
}

impl PaddingPolicy {
    /// Expands the policy into one padding entry per convolution layer.
    pub fn layer_paddings(self, blocks: usize, convs_per_block: usize) -> Vec<Padding> {
        (0..blocks * convs_per_block)
            .map(|i| match self {
                PaddingPolicy::AllSame => Padding::Same,
                PaddingPolicy::AllValid => Padding::Valid,
                PaddingPolicy::BlockSameValid => {
                    if i % convs_per_block == 0 {
                        Padding::Same
                    } else {
                        Padding::Valid
                    }
                }
            })
            .collect()
    }
}

impl std::str::FromStr for PaddingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block-same-valid" => Ok(Self::BlockSameValid),
            "all-same" => Ok(Self::AllSame),
            "all-valid" => Ok(Self::AllValid),
            other => Err(Error::Config(format!(
                "unknown padding policy `{other}` (expected block-same-valid, all-same, or all-valid)"
            ))),
        }
    }
}

/// Description of one classifier instance.
///
/// [`ModelSpec::canonical`] is the 5-block model: filter widths
/// (32, 64, 128, 256, 512), two 3x3 convolutions per block, a 1500-unit dense
/// layer, a 10-unit output, dropout 0.25 after each pooling stage and 0.40
/// after the dense layer. Reduced instances (fewer blocks, narrower layers)
/// are valid specs too and keep the test suite fast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Input resolution (height, width).
    pub input_size: (usize, usize),
    /// Input channels; this pipeline is RGB-only.
    pub channels: usize,
    /// Output channels of each block's convolutions.
    pub block_filters: Vec<usize>,
    pub convs_per_block: usize,
    pub dense_units: usize,
    pub num_classes: usize,
    pub conv_dropout: f64,
    pub dense_dropout: f64,
    /// One entry per convolution layer, block-major.
    pub padding_policy: Vec<Padding>,
}

pub const CANONICAL_FILTERS: [usize; 5] = [32, 64, 128, 256, 512];
pub const CANONICAL_DENSE_UNITS: usize = 1500;
pub const CANONICAL_INPUT: (usize, usize) = (224, 224);

impl ModelSpec {
    /// The full classifier at the default 224x224 input.
    pub fn canonical() -> Self {
        Self::canonical_for_input(CANONICAL_INPUT, PaddingPolicy::BlockSameValid)
            .expect("canonical spec is valid")
    }

    /// The full classifier at a custom input size / padding policy.
    pub fn canonical_for_input(input_size: (usize, usize), policy: PaddingPolicy) -> Result<Self> {
        let spec = Self {
            input_size,
            channels: 3,
            block_filters: CANONICAL_FILTERS.to_vec(),
            convs_per_block: 2,
            dense_units: CANONICAL_DENSE_UNITS,
            num_classes: NUM_CLASSES,
            conv_dropout: 0.25,
            dense_dropout: 0.40,
            padding_policy: policy.layer_paddings(CANONICAL_FILTERS.len(), 2),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Reduced instance for tests and examples: fewer/narrower blocks, no
    /// dropout. Still 3-channel in, 10-class out.
    pub fn miniature(
        input_size: (usize, usize),
        block_filters: &[usize],
        dense_units: usize,
        policy: PaddingPolicy,
    ) -> Result<Self> {
        let spec = Self {
            input_size,
            channels: 3,
            block_filters: block_filters.to_vec(),
            convs_per_block: 2,
            dense_units,
            num_classes: NUM_CLASSES,
            conv_dropout: 0.0,
            dense_dropout: 0.0,
            padding_policy: policy.layer_paddings(block_filters.len(), 2),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn blocks(&self) -> usize {
        self.block_filters.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels != 3 {
            return Err(Error::Spec(format!(
                "pipeline is RGB-only (3 channels), got {}",
                self.channels
            )));
        }
        if self.num_classes != NUM_CLASSES {
            return Err(Error::Spec(format!(
                "output layer must have {NUM_CLASSES} units, got {}",
                self.num_classes
            )));
        }
        if self.block_filters.is_empty() || self.block_filters.iter().any(|&f| f == 0) {
            return Err(Error::Spec(format!(
                "block_filters must be non-empty positives, got {:?}",
                self.block_filters
            )));
        }
        if self.convs_per_block == 0 || self.dense_units == 0 {
            return Err(Error::Spec("layer widths must be positive".into()));
        }
        for rate in [self.conv_dropout, self.dense_dropout] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Spec(format!("dropout rate {rate} not in [0,1)")));
            }
        }
        let expected = self.blocks() * self.convs_per_block;
        if self.padding_policy.len() != expected {
            return Err(Error::Spec(format!(
                "padding_policy has {} entries, need one per conv layer ({expected})",
                self.padding_policy.len()
            )));
        }
        // will also reject spatial underflow
        self.feature_count()?;
        Ok(())
    }

    /// Spatial size after each block, starting with the input.
    pub fn spatial_trace(&self) -> Result<Vec<(usize, usize)>> {
        let (mut h, mut w) = self.input_size;
        let mut trace = vec![(h, w)];
        for block in 0..self.blocks() {
            for conv in 0..self.convs_per_block {
                match self.padding_policy[block * self.convs_per_block + conv] {
                    Padding::Same => {}
                    Padding::Valid => {
                        if h < 3 || w < 3 {
                            return Err(Error::Spec(format!(
                                "spatial underflow: block {} conv {} sees {h}x{w}, \
                                 needs >= 3x3 for valid padding",
                                block + 1,
                                conv + 1
                            )));
                        }
                        h -= 2;
                        w -= 2;
                    }
                }
            }
            if h < 2 || w < 2 {
                return Err(Error::Spec(format!(
                    "spatial underflow: block {} pooling sees {h}x{w}, needs >= 2x2",
                    block + 1
                )));
            }
            h /= 2;
            w /= 2;
            trace.push((h, w));
        }
        Ok(trace)
    }

    /// Flattened feature count entering the dense stage.
    pub fn feature_count(&self) -> Result<usize> {
        let trace = self.spatial_trace()?;
        let (h, w) = *trace.last().expect("trace includes the input");
        Ok(self.block_filters[self.blocks() - 1] * h * w)
    }

    /// Names and shapes of every parameter tensor, in the fixed layer order
    /// used by checkpoints and the optimizer.
    pub fn parameter_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        let mut shapes = Vec::new();
        let mut in_ch = self.channels;
        for (b, &out_ch) in self.block_filters.iter().enumerate() {
            for c in 0..self.convs_per_block {
                let prefix = format!("block{}.conv{}", b + 1, c + 1);
                shapes.push((format!("{prefix}.weight"), vec![out_ch, in_ch, 3, 3]));
                shapes.push((format!("{prefix}.bias"), vec![out_ch]));
                in_ch = out_ch;
            }
        }
        let features = self.feature_count()?;
        shapes.push(("dense1.weight".into(), vec![features, self.dense_units]));
        shapes.push(("dense1.bias".into(), vec![self.dense_units]));
        shapes.push(("output.weight".into(), vec![self.dense_units, self.num_classes]));
        shapes.push(("output.bias".into(), vec![self.num_classes]));
        Ok(shapes)
    }

    /// Analytic parameter count: `sum(out*in*9 + out)` over convolutions plus
    /// the two dense terms.
    pub fn param_count(&self) -> Result<usize> {
        Ok(self
            .parameter_shapes()?
            .iter()
            .map(|(_, shape)| shape.iter().product::<usize>())
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_spec_shape() {
        let spec = ModelSpec::canonical();
        assert_eq!(spec.block_filters, vec![32, 64, 128, 256, 512]);
        assert_eq!(spec.dense_units, 1500);
        assert_eq!(spec.num_classes, 10);
        assert_eq!(spec.conv_dropout, 0.25);
        assert_eq!(spec.dense_dropout, 0.40);
        assert_eq!(spec.padding_policy.len(), 10);
    }

    #[test]
    fn canonical_spatial_trace_at_224() {
        let spec = ModelSpec::canonical();
        assert_eq!(
            spec.spatial_trace().unwrap(),
            vec![(224, 224), (111, 111), (54, 54), (26, 26), (12, 12), (5, 5)]
        );
        assert_eq!(spec.feature_count().unwrap(), 512 * 5 * 5);
    }

    // Regression constant: the analytic formula applied to the canonical
    // 224x224 spec. Derivation: conv params 4,712,224 over the ten 3x3
    // layers, plus 12800*1500+1500 for the wide dense layer, plus
    // 1500*10+10 for the output.
    #[test]
    fn canonical_parameter_count_is_pinned() {
        assert_eq!(ModelSpec::canonical().param_count().unwrap(), 23_928_734);
    }

    #[test]
    fn default_policy_underflows_at_64() {
        let err = ModelSpec::canonical_for_input((64, 64), PaddingPolicy::BlockSameValid);
        assert!(matches!(err, Err(Error::Spec(_))));
        // all-same keeps 64x64 alive through all five blocks
        let spec = ModelSpec::canonical_for_input((64, 64), PaddingPolicy::AllSame).unwrap();
        assert_eq!(spec.feature_count().unwrap(), 512 * 2 * 2);
    }

    #[test]
    fn smallest_input_for_default_policy_is_94() {
        assert!(ModelSpec::canonical_for_input((94, 94), PaddingPolicy::BlockSameValid).is_ok());
        assert!(ModelSpec::canonical_for_input((93, 93), PaddingPolicy::BlockSameValid).is_err());
    }

    #[test]
    fn parameter_names_are_deterministic() {
        let spec = ModelSpec::miniature((12, 12), &[4, 8], 16, PaddingPolicy::BlockSameValid)
            .unwrap();
        let names: Vec<String> = spec
            .parameter_shapes()
            .unwrap()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        assert_eq!(
            names,
            vec![
                "block1.conv1.weight",
                "block1.conv1.bias",
                "block1.conv2.weight",
                "block1.conv2.bias",
                "block2.conv1.weight",
                "block2.conv1.bias",
                "block2.conv2.weight",
                "block2.conv2.bias",
                "dense1.weight",
                "dense1.bias",
                "output.weight",
                "output.bias",
            ]
        );
    }

    #[test]
    fn spec_rejects_wrong_class_count() {
        let mut spec = ModelSpec::canonical();
        spec.num_classes = 2;
        assert!(spec.validate().is_err());
    }
}
