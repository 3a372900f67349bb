use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Layout, NetConfig};
use super::layers::*;
use super::{triplet_loss, PsmPoint};
use crate::error::{Error, Result};

/// Named parameter tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Network weights together with the architecture they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub config: NetConfig,
    pub blocks: Vec<ParamBlock>,
    layout: Layout,
}

/// Per-block gradients, shaped like [`NetParams::blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(params: &NetParams) -> Self {
        Self {
            blocks: params.blocks.iter().map(|b| vec![0.0; b.values.len()]).collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.blocks.iter_mut().flatten().for_each(|x| *x *= s);
    }

    pub fn check_finite(&self, params: &NetParams) -> Result<()> {
        match self.blocks.iter().position(|b| b.iter().any(|x| !x.is_finite())) {
            Some(i) => Err(Error::NonFiniteGradient {
                layer: params.blocks[i].name.clone(),
            }),
            None => Ok(()),
        }
    }
}

impl NetParams {
    /// Uniform fan-in initialization (Kaiming bound for the PReLU slope),
    /// zero biases.
    pub fn init(config: &NetConfig) -> Result<Self> {
        let layout = config.layout()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let gain = (2.0 / (1.0 + config.prelu_init * config.prelu_init)).sqrt();
        let blocks = layout
            .blocks
            .iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let values = if name.ends_with(".weight") {
                    let fan_in: usize = shape[1..].iter().product();
                    let bound = gain * (3.0 / fan_in as f64).sqrt();
                    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                } else if name.ends_with(".prelu") {
                    vec![config.prelu_init; n]
                } else {
                    vec![0.0; n]
                };
                ParamBlock {
                    name: name.clone(),
                    shape: shape.clone(),
                    values,
                }
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            blocks,
            layout,
        })
    }

    /// Builds parameters from explicit blocks, checking names and shapes
    /// against the architecture.
    pub fn from_blocks(config: &NetConfig, blocks: Vec<ParamBlock>) -> Result<Self> {
        let layout = config.layout()?;
        if blocks.len() != layout.blocks.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter blocks, got {}",
                layout.blocks.len(),
                blocks.len()
            )));
        }
        for (b, (name, shape)) in blocks.iter().zip(&layout.blocks) {
            if &b.name != name || &b.shape != shape || b.values.len() != shape.iter().product::<usize>() {
                return Err(Error::InvalidInput(format!("parameter block `{}` does not match `{name}` {shape:?}", b.name)));
            }
            if b.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("parameter block `{name}` holds non-finite values")));
            }
        }
        Ok(Self {
            config: config.clone(),
            blocks,
            layout,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    fn v(&self, i: usize) -> &[f64] {
        &self.blocks[i].values
    }

    /// Rounds every value to `f32`, the precision parameters are stored in.
    pub fn round_to_f32(&mut self) {
        for v in self.blocks.iter_mut().flat_map(|b| b.values.iter_mut()) {
            *v = *v as f32 as f64;
        }
    }

    pub fn apply(&mut self, mut f: impl FnMut(usize, &mut [f64])) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(i, &mut b.values);
        }
    }

    fn check_input(&self, image: &[f32]) -> Result<()> {
        let [h, w] = self.config.input_size;
        if image.len() != h * w {
            return Err(Error::InvalidInput(format!(
                "image has {} values, network expects {h}x{w}",
                image.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, image: &[f32]) -> Result<PsmPoint> {
        self.check_input(image)?;
        Ok(self.run(image).0)
    }

    /// Embeds many images, in parallel, preserving order.
    pub fn forward_batch(&self, images: &[Vec<f32>]) -> Result<Vec<PsmPoint>> {
        images.par_iter().map(|im| self.forward(im)).collect()
    }

    fn run(&self, image: &[f32]) -> (PsmPoint, Cache) {
        let k = self.config.kernel_size;
        let pool = self.config.pool;
        let mut x: Vec<f64> = image.iter().map(|&v| v as f64).collect();
        let mut cache = Cache::default();
        for c in &self.layout.convs {
            let pre = conv2d_forward(&x, c.c_in, c.height, c.width, self.v(c.weight), self.v(c.bias), c.c_out, k);
            let act = prelu_forward(&pre, self.v(c.slope)[0]);
            let (pooled, argmax) = maxpool_forward(&act, c.c_out, c.height, c.width, pool);
            cache.convs.push(ConvCache {
                input: std::mem::replace(&mut x, pooled),
                pre,
                argmax,
            });
        }
        for f in &self.layout.fcs {
            let pre = linear_forward(&x, self.v(f.weight), self.v(f.bias));
            let out = match f.slope {
                Some(s) => prelu_forward(&pre, self.v(s)[0]),
                None => pre.clone(),
            };
            cache.fcs.push(FcCache {
                input: std::mem::replace(&mut x, out),
                pre,
            });
        }
        (PsmPoint { x: x[0], y: x[1] }, cache)
    }

    fn backward(&self, cache: &Cache, dout: [f64; 2], grads: &mut Gradients) {
        let k = self.config.kernel_size;
        let mut g = dout.to_vec();
        for (f, fc) in self.layout.fcs.iter().zip(&cache.fcs).rev() {
            if let Some(s) = f.slope {
                let mut ds = 0.0;
                g = prelu_backward(&fc.pre, self.v(s)[0], &g, &mut ds);
                grads.blocks[s][0] += ds;
            }
            let mut din = vec![0.0; f.n_in];
            let (dw, db) = two_mut(&mut grads.blocks, f.weight, f.bias);
            linear_backward(&fc.input, self.v(f.weight), &g, Some(&mut din), dw, db);
            g = din;
        }
        for (i, (c, cc)) in self.layout.convs.iter().zip(&cache.convs).enumerate().rev() {
            let plane = c.c_out * c.height * c.width;
            g = maxpool_backward(&cc.argmax, plane, &g);
            let mut ds = 0.0;
            g = prelu_backward(&cc.pre, self.v(c.slope)[0], &g, &mut ds);
            grads.blocks[c.slope][0] += ds;
            let mut din = if i > 0 { vec![0.0; cc.input.len()] } else { Vec::new() };
            let (dw, db) = two_mut(&mut grads.blocks, c.weight, c.bias);
            conv2d_backward(
                &cc.input,
                c.c_in,
                c.height,
                c.width,
                self.v(c.weight),
                c.c_out,
                k,
                &g,
                (i > 0).then_some(din.as_mut_slice()),
                dw,
                db,
            );
            g = din;
        }
    }
}

fn two_mut(blocks: &mut [Vec<f64>], a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a < b);
    let (lo, hi) = blocks.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

#[derive(Default)]
struct ConvCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    argmax: Vec<usize>,
}

#[derive(Default)]
struct FcCache {
    input: Vec<f64>,
    pre: Vec<f64>,
}

#[derive(Default)]
struct Cache {
    convs: Vec<ConvCache>,
    fcs: Vec<FcCache>,
}

/// Images of one training triplet: anchor, positive, negative.
pub type TripletImages<'a> = [&'a [f32]; 3];

/// Triplets per sequential accumulation unit. Fixed so that the summation
/// order, and therefore the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

/// Mean triplet loss over `batch` and its gradient.
pub fn triplet_gradients(params: &NetParams, batch: &[TripletImages<'_>], margin: f64) -> Result<(f64, Gradients)> {
    scaled_triplet_gradients(params, batch, margin, 1.0)
}

/// Gradient of `scale` times the mean triplet loss.
pub fn scaled_triplet_gradients(
    params: &NetParams,
    batch: &[TripletImages<'_>],
    margin: f64,
    scale: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty triplet batch".into()));
    }
    for t in batch {
        for im in t {
            params.check_input(im)?;
        }
    }
    let partial: Vec<(f64, Gradients)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = Gradients::zeros(params);
            let mut loss = 0.0;
            for [a, p, n] in chunk {
                let (pa, ca) = params.run(a);
                let (pp, cp) = params.run(p);
                let (pn, cn) = params.run(n);
                let l = triplet_loss(pa, pp, pn, margin);
                loss += l;
                if l > 0.0 {
                    // d/dp |p-a|^2 - |n-a|^2
                    let gp = [2.0 * (pp.x - pa.x), 2.0 * (pp.y - pa.y)];
                    let gn = [-2.0 * (pn.x - pa.x), -2.0 * (pn.y - pa.y)];
                    let ga = [-gp[0] - gn[0], -gp[1] - gn[1]];
                    params.backward(&ca, ga, &mut grads);
                    params.backward(&cp, gp, &mut grads);
                    params.backward(&cn, gn, &mut grads);
                }
            }
            (loss, grads)
        })
        .collect();
    let mut total = Gradients::zeros(params);
    let mut loss = 0.0;
    for (l, g) in &partial {
        loss += l;
        total.add(g);
    }
    let n = batch.len() as f64;
    total.scale(scale / n);
    total.check_finite(params)?;
    Ok((loss / n, total))
}
