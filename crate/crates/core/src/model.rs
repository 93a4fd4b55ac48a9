//! Model registry and assembly.
//!
//! A model maps the 32 layout coordinates of a farm to total power. The
//! coordinates are read as a sequence of 16 steps (one per converter) with two
//! features `(x, y)`; every architecture consumes that sequence and ends in a
//! single-output dense head.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::layers::{
    BiLstm, Block, BlockCache, Conv1d, ConvSpec, Dense, Dropout, Gru, Lstm, Mode, Parameterized,
    SeBlock, SelfAttention,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// The twelve tunable hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperParams {
    /// Filters of the four convolution blocks.
    pub cnf: [usize; 4],
    /// Hidden units of the first and second recurrent layer.
    pub nhu: [usize; 2],
    /// Dropout after the convolution stack and after the recurrent stack.
    pub pdo: [f64; 2],
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Width of the attention score projection.
    pub attention_dim: usize,
    pub l2_reg: f64,
}

impl HyperParams {
    pub const DIM: usize = 12;
    pub const NAMES: [&'static str; 12] = [
        "cnf1",
        "cnf2",
        "cnf3",
        "cnf4",
        "nhu1",
        "nhu2",
        "pdo1",
        "pdo2",
        "batch_size",
        "learning_rate",
        "attention_dim",
        "l2_reg",
    ];

    /// The first optimal configuration reported for the Sydney site.
    pub fn reference() -> Self {
        HyperParams {
            cnf: [256, 128, 64, 32],
            nhu: [32, 16],
            pdo: [0.05, 0.05],
            batch_size: 32,
            learning_rate: 1e-4,
            attention_dim: 32,
            l2_reg: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cnf.iter().chain(&self.nhu).any(|&v| v == 0) {
            return Err(invalid(
                "hyperparameters",
                "filter and unit counts must be positive",
            ));
        }
        if self.batch_size == 0 || self.attention_dim == 0 {
            return Err(invalid(
                "hyperparameters",
                "batch size and attention width must be positive",
            ));
        }
        if self.pdo.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(invalid(
                "hyperparameters",
                "dropout probabilities must lie in [0, 1)",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(self.l2_reg >= 0.0 && self.l2_reg.is_finite()) {
            return Err(invalid("l2_reg", "must be non-negative"));
        }
        Ok(())
    }

    /// Values in [`HyperParams::NAMES`] order.
    pub fn to_vector(&self) -> [f64; 12] {
        [
            self.cnf[0] as f64,
            self.cnf[1] as f64,
            self.cnf[2] as f64,
            self.cnf[3] as f64,
            self.nhu[0] as f64,
            self.nhu[1] as f64,
            self.pdo[0],
            self.pdo[1],
            self.batch_size as f64,
            self.learning_rate,
            self.attention_dim as f64,
            self.l2_reg,
        ]
    }

    /// Inverse of [`HyperParams::to_vector`]; integer slots are rounded.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() != Self::DIM {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: Self::DIM,
            });
        }
        let int = |x: f64| -> usize {
            let r = crate::math::round(x);
            if r < 1.0 {
                0
            } else {
                r as usize
            }
        };
        let hp = HyperParams {
            cnf: [int(v[0]), int(v[1]), int(v[2]), int(v[3])],
            nhu: [int(v[4]), int(v[5])],
            pdo: [v[6], v[7]],
            batch_size: int(v[8]),
            learning_rate: v[9],
            attention_dim: int(v[10]),
            l2_reg: v[11],
        };
        hp.validate()?;
        Ok(hp)
    }
}

/// Fixed architectural choices that are not searched over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchOptions {
    pub kernel_width: usize,
    pub stride: usize,
    /// HLU negative-branch scale.
    pub alpha: f64,
    /// Rows of the attention matrix.
    pub attention_hops: usize,
    /// Insert a squeeze-and-excitation gate after the convolution stack.
    pub se_block: bool,
    pub se_ratio: usize,
}

impl Default for ArchOptions {
    fn default() -> Self {
        ArchOptions {
            kernel_width: 3,
            stride: 1,
            alpha: 0.1,
            attention_hops: 1,
            se_block: false,
            se_ratio: 4,
        }
    }
}

/// How a flat feature row is laid out as a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputShape {
    pub steps: usize,
    pub features: usize,
}

impl InputShape {
    /// 16 converters with `(x, y)` each.
    pub const LAYOUT: InputShape = InputShape {
        steps: 16,
        features: 2,
    };

    pub fn from_dim(input_dim: usize) -> Self {
        if input_dim.is_multiple_of(2) && input_dim >= 2 {
            InputShape {
                steps: input_dim / 2,
                features: 2,
            }
        } else {
            InputShape {
                steps: input_dim,
                features: 1,
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.steps * self.features
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    Lstm,
    StackedLstm,
    BiLstm,
    StackedBiLstm,
    Gru,
    StackedGru,
    Cnn,
    CnnLstm,
    CnnGru,
    CnnBiLstm,
    CnnBiLstmSa,
    /// Same network as `CnnBiLstmSa`, trained with searched hyperparameters.
    CnnBiLstmSaH,
}

impl Architecture {
    pub const ALL: [Architecture; 12] = [
        Architecture::Lstm,
        Architecture::StackedLstm,
        Architecture::BiLstm,
        Architecture::StackedBiLstm,
        Architecture::Gru,
        Architecture::StackedGru,
        Architecture::Cnn,
        Architecture::CnnLstm,
        Architecture::CnnGru,
        Architecture::CnnBiLstm,
        Architecture::CnnBiLstmSa,
        Architecture::CnnBiLstmSaH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Lstm => "lstm",
            Architecture::StackedLstm => "stacked-lstm",
            Architecture::BiLstm => "bilstm",
            Architecture::StackedBiLstm => "stacked-bilstm",
            Architecture::Gru => "gru",
            Architecture::StackedGru => "stacked-gru",
            Architecture::Cnn => "cnn",
            Architecture::CnnLstm => "cnn-lstm",
            Architecture::CnnGru => "cnn-gru",
            Architecture::CnnBiLstm => "cnn-bilstm",
            Architecture::CnnBiLstmSa => "cnn-bilstm-sa",
            Architecture::CnnBiLstmSaH => "cnn-bilstm-sa-h",
        }
    }

    /// Whether the hyperparameters for this variant come from a search.
    pub fn is_tuned(self) -> bool {
        self == Architecture::CnnBiLstmSaH
    }

    fn has_conv(self) -> bool {
        matches!(
            self,
            Architecture::Cnn
                | Architecture::CnnLstm
                | Architecture::CnnGru
                | Architecture::CnnBiLstm
                | Architecture::CnnBiLstmSa
                | Architecture::CnnBiLstmSaH
        )
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| invalid("model", format!("unknown model `{s}`")))
    }
}

#[derive(Clone, Copy)]
enum Recurrent {
    Lstm,
    Gru,
    BiLstm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub hp: HyperParams,
    pub options: ArchOptions,
    pub input: InputShape,
    pub blocks: Vec<Block>,
}

/// Per-sample forward state needed by [`Model::backward`].
pub struct Trace {
    caches: Vec<BlockCache>,
}

/// Assembles `arch` with freshly initialised parameters drawn from `seed`.
pub fn build_model(
    arch: Architecture,
    hp: &HyperParams,
    options: &ArchOptions,
    input_dim: usize,
    seed: u64,
) -> Result<Model> {
    hp.validate()?;
    let input = InputShape::from_dim(input_dim);
    if input_dim == 0 {
        return Err(invalid("input_dim", "must be positive"));
    }
    let mut rng = Rng::seed_from(seed);
    let mut blocks = Vec::new();
    let mut steps = input.steps;
    let mut width = input.features;

    if arch.has_conv() {
        for &filters in &hp.cnf {
            let spec = ConvSpec {
                in_channels: width,
                n_filters: filters,
                kernel_width: options.kernel_width,
                stride: options.stride,
                alpha: options.alpha,
            };
            let conv = Conv1d::new(spec, &mut rng)?;
            steps = conv.output_len(steps).map_err(|_| {
                invalid(
                    "architecture",
                    format!(
                        "{} input steps are too few for four convolutions of width {}",
                        input.steps, options.kernel_width
                    ),
                )
            })?;
            width = filters;
            blocks.push(Block::Conv(conv));
        }
        if options.se_block {
            blocks.push(Block::Se(SeBlock::new(
                width,
                options.se_ratio.min(width),
                &mut rng,
            )?));
        }
        blocks.push(Block::Dropout(Dropout::new(hp.pdo[0])?));
    }

    let recurrent =
        |kind: Recurrent, input: usize, hidden: usize, rng: &mut Rng| -> (Block, usize) {
            match kind {
                Recurrent::Lstm => (Block::Lstm(Lstm::new(input, hidden, rng)), hidden),
                Recurrent::Gru => (Block::Gru(Gru::new(input, hidden, rng)), hidden),
                Recurrent::BiLstm => (Block::BiLstm(BiLstm::new(input, hidden, rng)), 2 * hidden),
            }
        };
    let (kind, layers) = match arch {
        Architecture::Lstm => (Some(Recurrent::Lstm), 1),
        Architecture::StackedLstm => (Some(Recurrent::Lstm), 2),
        Architecture::BiLstm => (Some(Recurrent::BiLstm), 1),
        Architecture::StackedBiLstm => (Some(Recurrent::BiLstm), 2),
        Architecture::Gru => (Some(Recurrent::Gru), 1),
        Architecture::StackedGru => (Some(Recurrent::Gru), 2),
        Architecture::Cnn => (None, 0),
        Architecture::CnnLstm => (Some(Recurrent::Lstm), 2),
        Architecture::CnnGru => (Some(Recurrent::Gru), 2),
        Architecture::CnnBiLstm | Architecture::CnnBiLstmSa | Architecture::CnnBiLstmSaH => {
            (Some(Recurrent::BiLstm), 2)
        }
    };
    if let Some(kind) = kind {
        for (i, &units) in hp.nhu.iter().take(layers).enumerate() {
            let (block, out) = recurrent(kind, width, units, &mut rng);
            blocks.push(block);
            width = out;
            // Without a convolution stack the first dropout follows the first recurrent layer.
            if i == 0 && !arch.has_conv() {
                blocks.push(Block::Dropout(Dropout::new(hp.pdo[0])?));
            }
        }
        if layers == 2 || arch.has_conv() {
            blocks.push(Block::Dropout(Dropout::new(hp.pdo[1])?));
        }
    }

    if matches!(arch, Architecture::CnnBiLstmSa | Architecture::CnnBiLstmSaH) {
        let att = SelfAttention::new(width, hp.attention_dim, options.attention_hops, &mut rng);
        blocks.push(Block::Attention(att));
        blocks.push(Block::Flatten);
        width *= options.attention_hops;
    } else {
        blocks.push(Block::MeanPool);
    }
    blocks.push(Block::Dense(Dense::new(width, 1, &mut rng)));

    Ok(Model {
        arch,
        hp: *hp,
        options: *options,
        input,
        blocks,
    })
}

impl Model {
    pub fn input_dim(&self) -> usize {
        self.input.dim()
    }

    fn sequence(&self, row: &[f64]) -> Result<Tensor> {
        if row.len() != self.input_dim() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.input_dim(),
            });
        }
        Tensor::new(&[self.input.steps, self.input.features], row.to_vec())
    }

    /// Forward pass of one feature row; returns the scalar prediction and the
    /// caches for [`Model::backward`].
    pub fn forward(&self, row: &[f64], mode: Mode, rng: &mut Rng) -> Result<(f64, Trace)> {
        let mut h = self.sequence(row)?;
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (y, c) = b.forward(&h, mode, rng)?;
            caches.push(c);
            h = y;
        }
        Ok((h.data()[0], Trace { caches }))
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        let mut rng = Rng::seed_from(0);
        Ok(self.forward(row, Mode::Eval, &mut rng)?.0)
    }

    /// Predictions for a row-major feature matrix.
    pub fn predict_rows(&self, rows: &[f64]) -> Result<Vec<f64>> {
        rows.chunks(self.input_dim())
            .map(|r| self.predict(r))
            .collect()
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, trace: &Trace, d_output: f64, grads: &mut [Block]) -> Result<()> {
        let mut g = Tensor::new(&[1, 1], alloc::vec![d_output])?;
        for ((block, cache), gb) in self
            .blocks
            .iter()
            .zip(&trace.caches)
            .zip(grads.iter_mut())
            .rev()
        {
            g = block.backward(cache, &g, gb)?;
        }
        Ok(())
    }

    pub fn zero_grads(&self) -> Vec<Block> {
        self.blocks
            .iter()
            .map(|b| {
                let mut g = b.clone();
                g.zero_params();
                g
            })
            .collect()
    }

    /// One line per block, e.g. for logs.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for b in &self.blocks {
            s.push_str(&format!("{}({}) ", b.name(), b.param_count()));
        }
        s
    }
}

impl Parameterized for Model {
    fn params(&self) -> Vec<&Tensor> {
        self.blocks.iter().flat_map(|b| b.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.blocks
            .iter_mut()
            .flat_map(|b| b.params_mut())
            .collect()
    }

    fn decay_mask(&self) -> Vec<bool> {
        self.blocks.iter().flat_map(|b| b.decay_mask()).collect()
    }
}

/// Flattens per-block gradient buffers in parameter order.
pub fn flatten_grads(grads: &[Block]) -> Vec<f64> {
    grads.iter().flat_map(|b| b.flat_params()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{check_gradient, GradCheckConfig};

    fn ones() -> HyperParams {
        HyperParams {
            cnf: [1; 4],
            nhu: [1; 2],
            pdo: [0.0; 2],
            batch_size: 1,
            learning_rate: 1e-3,
            attention_dim: 1,
            l2_reg: 0.0,
        }
    }

    #[test]
    fn reference_config_builds() {
        let m = build_model(
            Architecture::CnnBiLstmSa,
            &HyperParams::reference(),
            &ArchOptions::default(),
            32,
            1,
        )
        .unwrap();
        assert!(m.param_count() > 0);
        let y = m.predict(&[100.0; 32]).unwrap();
        assert!(y.is_finite());
    }

    #[test]
    fn every_variant_builds_and_predicts() {
        let hp = HyperParams {
            cnf: [4, 4, 3, 3],
            nhu: [3, 2],
            ..ones()
        };
        for arch in Architecture::ALL {
            let m = build_model(arch, &hp, &ArchOptions::default(), 32, 2).unwrap();
            assert!(m.predict(&[0.3; 32]).unwrap().is_finite(), "{arch}");
            assert_eq!(arch.name().parse::<Architecture>().unwrap(), arch);
        }
        assert!("transformer".parse::<Architecture>().is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build_model(
            Architecture::CnnBiLstmSa,
            &ones(),
            &ArchOptions::default(),
            32,
            9,
        )
        .unwrap();
        let b = build_model(
            Architecture::CnnBiLstmSa,
            &ones(),
            &ArchOptions::default(),
            32,
            9,
        )
        .unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
    }

    #[test]
    fn unit_width_parameter_count() {
        // conv: (3*2+1) + 3*(3*1+1) = 19
        // bilstm1 (in 1, H 1): 2 * (4 + 4 + 4) = 24
        // bilstm2 (in 2, H 1): 2 * (8 + 4 + 4) = 32
        // attention: S_k 1x2 + S_a 1x1 = 3
        // head: 2 weights + 1 bias = 3
        let m = build_model(
            Architecture::CnnBiLstmSa,
            &ones(),
            &ArchOptions::default(),
            32,
            0,
        )
        .unwrap();
        assert_eq!(m.param_count(), 81);
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let mut hp = ones();
        hp.pdo[1] = 1.0;
        assert!(build_model(Architecture::Lstm, &hp, &ArchOptions::default(), 32, 0).is_err());
        let mut hp = ones();
        hp.cnf[2] = 0;
        assert!(hp.validate().is_err());
    }

    #[test]
    fn vector_round_trip() {
        let hp = HyperParams::reference();
        assert_eq!(HyperParams::from_vector(&hp.to_vector()).unwrap(), hp);
    }

    #[test]
    fn whole_model_gradient_check() {
        let hp = HyperParams {
            cnf: [3, 3, 2, 2],
            nhu: [2, 2],
            attention_dim: 3,
            ..ones()
        };
        let input = 20;
        let m = build_model(
            Architecture::CnnBiLstmSa,
            &hp,
            &ArchOptions::default(),
            input,
            4,
        )
        .unwrap();
        let row: Vec<f64> = (0..input).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut rng = Rng::seed_from(0);
        let (_, trace) = m.forward(&row, Mode::Eval, &mut rng).unwrap();
        let mut grads = m.zero_grads();
        m.backward(&trace, 1.0, &mut grads).unwrap();
        let analytic = flatten_grads(&grads);
        let f = |p: &[f64]| {
            let mut mm = m.clone();
            mm.load_flat(p).unwrap();
            mm.predict(&row).unwrap()
        };
        check_gradient(
            &GradCheckConfig::default(),
            &m.flat_params(),
            &analytic,
            40,
            4,
            f,
        )
        .unwrap();
    }
}
