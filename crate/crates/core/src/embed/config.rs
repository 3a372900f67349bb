use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network architecture: `[conv -> PReLU -> maxpool]` per entry of
/// `conv_channels`, then fully connected layers of `fc_widths` with a PReLU
/// after every one but the last. The last width is the map dimension, 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    /// (height, width) of the input image.
    pub input_size: [usize; 2],
    pub conv_channels: Vec<usize>,
    /// Odd square kernel, zero "same" padding.
    pub kernel_size: usize,
    /// Max-pool window and stride.
    pub pool: usize,
    pub fc_widths: Vec<usize>,
    pub prelu_init: f64,
    /// Weight initialization seed.
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            input_size: [256, 256],
            conv_channels: vec![8, 16, 32, 64],
            kernel_size: 3,
            pool: 2,
            fc_widths: vec![256, 64, 2],
            prelu_init: 0.25,
            seed: 0,
        }
    }
}

/// Placement of one convolution block inside the parameter list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    /// spatial size of the block input (and of the conv output)
    pub height: usize,
    pub width: usize,
    pub weight: usize,
    pub bias: usize,
    pub slope: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcShape {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: usize,
    pub bias: usize,
    pub slope: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub convs: Vec<ConvShape>,
    pub fcs: Vec<FcShape>,
    /// (name, shape) of every parameter block in declaration order.
    pub blocks: Vec<(String, Vec<usize>)>,
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        self.layout().map(|_| ())
    }

    pub fn output_dim(&self) -> usize {
        self.fc_widths.last().copied().unwrap_or(0)
    }

    pub fn layout(&self) -> Result<Layout> {
        let bad = |msg: String| Err(Error::Config(format!("network: {msg}")));
        let [mut h, mut w] = self.input_size;
        if h == 0 || w == 0 {
            return bad("input size must be positive".into());
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return bad(format!("kernel size {} must be odd", self.kernel_size));
        }
        if self.pool == 0 {
            return bad("pool size must be positive".into());
        }
        if self.fc_widths.last() != Some(&2) {
            return bad("the last fully connected width must be 2".into());
        }
        if self.conv_channels.iter().chain(&self.fc_widths).any(|&c| c == 0) {
            return bad("layer sizes must be positive".into());
        }
        let k = self.kernel_size;
        let mut blocks = Vec::new();
        let mut convs = Vec::new();
        let mut c_in = 1;
        for (i, &c_out) in self.conv_channels.iter().enumerate() {
            let base = blocks.len();
            blocks.push((format!("conv{i}.weight"), vec![c_out, c_in, k, k]));
            blocks.push((format!("conv{i}.bias"), vec![c_out]));
            blocks.push((format!("conv{i}.prelu"), vec![1]));
            convs.push(ConvShape {
                c_in,
                c_out,
                height: h,
                width: w,
                weight: base,
                bias: base + 1,
                slope: base + 2,
            });
            h /= self.pool;
            w /= self.pool;
            if h == 0 || w == 0 {
                return bad(format!("input {:?} is too small for {} pooling stages", self.input_size, i + 1));
            }
            c_in = c_out;
        }
        let mut n_in = c_in * h * w;
        let mut fcs = Vec::new();
        let last = self.fc_widths.len() - 1;
        for (j, &n_out) in self.fc_widths.iter().enumerate() {
            let base = blocks.len();
            blocks.push((format!("fc{j}.weight"), vec![n_out, n_in]));
            blocks.push((format!("fc{j}.bias"), vec![n_out]));
            let slope = (j != last).then(|| {
                blocks.push((format!("fc{j}.prelu"), vec![1]));
                base + 2
            });
            fcs.push(FcShape {
                n_in,
                n_out,
                weight: base,
                bias: base + 1,
                slope,
            });
            n_in = n_out;
        }
        Ok(Layout { convs, fcs, blocks })
    }
}

/// Optimizer schedule and triplet loss settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub margin: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epochs between learning-rate decays.
    pub lr_step: usize,
    pub lr_decay: f64,
    pub epochs: usize,
    /// Triplets drawn per epoch; `None` uses the number of training samples.
    pub triplets_per_epoch: Option<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Triplet sampling seed.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            batch_size: 32,
            learning_rate: 1e-2,
            lr_step: 8,
            lr_decay: 0.1,
            epochs: 30,
            triplets_per_epoch: None,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::Config("margin must be positive".into()));
        }
        if self.batch_size == 0 || self.lr_step == 0 {
            return Err(Error::Config("batch size and lr step must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) {
            return Err(Error::Config("learning rate and decay must be positive".into()));
        }
        Ok(())
    }

    /// Step schedule: the base rate decayed once every `lr_step` epochs.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi((epoch / self.lr_step) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_shapes() {
        let l = NetConfig::default().layout().unwrap();
        assert_eq!(l.convs.len(), 4);
        assert_eq!(l.convs[3].height, 32);
        assert_eq!(l.fcs[0].n_in, 64 * 16 * 16);
        assert_eq!(l.fcs[2].n_out, 2);
        assert!(l.fcs[2].slope.is_none());
        assert_eq!(l.blocks.len(), 4 * 3 + 3 + 3 + 2);
        assert_eq!(l.blocks[0].1, vec![8, 1, 3, 3]);
    }

    #[test]
    fn rejects_bad_architectures() {
        let base = NetConfig::default();
        for cfg in [
            NetConfig { fc_widths: vec![16, 3], ..base.clone() },
            NetConfig { kernel_size: 4, ..base.clone() },
            NetConfig { input_size: [8, 8], ..base.clone() },
            NetConfig { conv_channels: vec![4, 0], ..base.clone() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn step_schedule() {
        let t = TrainConfig::default();
        for (epoch, lr) in [(0, 1e-2), (7, 1e-2), (8, 1e-3), (16, 1e-4), (24, 1e-5), (29, 1e-5)] {
            assert!((t.learning_rate_at(epoch) - lr).abs() < 1e-15 * lr.max(1.0) + 1e-18);
        }
    }
}
