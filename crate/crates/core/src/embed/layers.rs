//! Single-sample layer kernels, channel-major (`[c][y][x]`) in `f64`.
//! Backward passes accumulate into the gradient buffers they are given.

/// Range of output rows/cols `o` for which `o + off` lies in `0..n`.
fn valid(n: usize, off: isize) -> (usize, usize) {
    let lo = (-off).max(0) as usize;
    let hi = (n as isize - off).clamp(0, n as isize) as usize;
    (lo, hi.max(lo))
}

/// Stride-1 convolution with zero padding that keeps the spatial size.
/// `weight` is `[c_out][c_in][k][k]`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    k: usize,
) -> Vec<f64> {
    let p = (k / 2) as isize;
    let plane = h * w;
    let mut out = vec![0.0; c_out * plane];
    for co in 0..c_out {
        let o = &mut out[co * plane..(co + 1) * plane];
        o.fill(bias[co]);
        for ci in 0..c_in {
            let src = &input[ci * plane..(ci + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - p;
                let (y0, y1) = valid(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - p;
                    let (x0, x1) = valid(w, dx);
                    let wt = weight[((co * c_in + ci) * k + ky) * k + kx];
                    if wt == 0.0 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s = &src[sy * w + (x0 as isize + dx) as usize..][..x1 - x0];
                        let d = &mut o[y * w + x0..y * w + x1];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    c_out: usize,
    k: usize,
    dout: &[f64],
    mut din: Option<&mut [f64]>,
    dweight: &mut [f64],
    dbias: &mut [f64],
) {
    let p = (k / 2) as isize;
    let plane = h * w;
    for co in 0..c_out {
        let g = &dout[co * plane..(co + 1) * plane];
        dbias[co] += g.iter().sum::<f64>();
        for ci in 0..c_in {
            let src = &input[ci * plane..(ci + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - p;
                let (y0, y1) = valid(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - p;
                    let (x0, x1) = valid(w, dx);
                    let widx = ((co * c_in + ci) * k + ky) * k + kx;
                    let wt = weight[widx];
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let off = (y as isize + dy) as usize * w + (x0 as isize + dx) as usize;
                        let gy = &g[y * w + x0..y * w + x1];
                        acc += gy.iter().zip(&src[off..off + x1 - x0]).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(din) = din.as_deref_mut() {
                            let d = &mut din[ci * plane + off..ci * plane + off + x1 - x0];
                            for (a, b) in d.iter_mut().zip(gy) {
                                *a += wt * b;
                            }
                        }
                    }
                    dweight[widx] += acc;
                }
            }
        }
    }
}

/// Leaky rectifier with one learnt slope for the negative side.
pub fn prelu_forward(x: &[f64], slope: f64) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { slope * v }).collect()
}

/// Returns the input gradient and adds `d loss / d slope` to `dslope`.
pub fn prelu_backward(x: &[f64], slope: f64, dout: &[f64], dslope: &mut f64) -> Vec<f64> {
    x.iter()
        .zip(dout)
        .map(|(&v, &g)| {
            if v > 0.0 {
                g
            } else {
                *dslope += g * v;
                g * slope
            }
        })
        .collect()
}

/// Non-overlapping `pool x pool` max pooling. Trailing rows/cols that do
/// not fill a window are dropped. Returns the output and, per output cell,
/// the flat input index that won (first maximum on ties).
pub fn maxpool_forward(input: &[f64], c: usize, h: usize, w: usize, pool: usize) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / pool, w / pool);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut at = 0;
                for py in 0..pool {
                    for px in 0..pool {
                        let i = ch * h * w + (oy * pool + py) * w + ox * pool + px;
                        if input[i] > best {
                            best = input[i];
                            at = i;
                        }
                    }
                }
                out.push(best);
                arg.push(at);
            }
        }
    }
    (out, arg)
}

pub fn maxpool_backward(argmax: &[usize], input_len: usize, dout: &[f64]) -> Vec<f64> {
    let mut din = vec![0.0; input_len];
    for (&i, &g) in argmax.iter().zip(dout) {
        din[i] += g;
    }
    din
}

/// `y = W x + b` with `W` stored `[n_out][n_in]`.
pub fn linear_forward(x: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, b)| b + weight[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

pub fn linear_backward(
    x: &[f64],
    weight: &[f64],
    dout: &[f64],
    din: Option<&mut [f64]>,
    dweight: &mut [f64],
    dbias: &mut [f64],
) {
    let n_in = x.len();
    for (o, &g) in dout.iter().enumerate() {
        dbias[o] += g;
        if g == 0.0 {
            continue;
        }
        for (dw, v) in dweight[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
            *dw += g * v;
        }
    }
    if let Some(din) = din {
        for (o, &g) in dout.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (d, wv) in din.iter_mut().zip(&weight[o * n_in..(o + 1) * n_in]) {
                *d += g * wv;
            }
        }
    }
}
