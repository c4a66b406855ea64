use crate::error::{shape_mismatch, NeuroError};
use crate::tensor::Tensor;

/// Stride and zero-padding of a 2-D convolution. Kernels are square and
/// dimensions are inferred from the weight tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvSpec {
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn new(stride: usize, padding: usize) -> Self {
        assert!(stride > 0, "conv stride must be positive");
        ConvSpec { stride, padding }
    }
}

/// Output extent along one axis: `(in + 2*padding - kernel) / stride + 1`.
pub fn conv_output_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    let padded = input + 2 * padding;
    assert!(
        padded >= kernel,
        "kernel {kernel} larger than padded input {padded}"
    );
    (padded - kernel) / stride + 1
}

fn check_conv_shapes(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
) -> Result<(), NeuroError> {
    if input.shape().len() != 3 {
        return Err(shape_mismatch(
            "conv2d input",
            "[in_ch, h, w]",
            input.shape(),
        ));
    }
    if weight.shape().len() != 4 || weight.shape()[2] != weight.shape()[3] {
        return Err(shape_mismatch(
            "conv2d weight",
            "[out_ch, in_ch, k, k]",
            weight.shape(),
        ));
    }
    if weight.shape()[1] != input.shape()[0] {
        return Err(shape_mismatch(
            "conv2d channels",
            &format!("in_ch = {}", weight.shape()[1]),
            input.shape(),
        ));
    }
    if let Some(b) = bias {
        if b.shape() != [weight.shape()[0]] {
            return Err(shape_mismatch(
                "conv2d bias",
                &format!("[{}]", weight.shape()[0]),
                b.shape(),
            ));
        }
    }
    Ok(())
}

/// Dense 2-D cross-correlation. `input` is `[in_ch, h, w]`, `weight` is
/// `[out_ch, in_ch, k, k]`; zero padding, floor-division output extent.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    spec: ConvSpec,
) -> Result<Tensor, NeuroError> {
    check_conv_shapes(input, weight, bias)?;
    let (in_ch, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (out_ch, k) = (weight.shape()[0], weight.shape()[2]);
    let oh = conv_output_dim(h, k, spec.stride, spec.padding);
    let ow = conv_output_dim(w, k, spec.stride, spec.padding);

    let x = input.data();
    let wt = weight.data();
    let mut out = vec![0.0; out_ch * oh * ow];
    for co in 0..out_ch {
        let base = if let Some(b) = bias { b.data()[co] } else { 0.0 };
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = base;
                for ci in 0..in_ch {
                    for ky in 0..k {
                        let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += x[(ci * h + iy as usize) * w + ix as usize]
                                * wt[((co * in_ch + ci) * k + ky) * k + kx];
                        }
                    }
                }
                out[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
    Ok(Tensor::from_vec(&[out_ch, oh, ow], out))
}

/// Accumulates conv gradients in one fused pass over the output grid.
/// `grad_input` may be `None` when the input does not require gradient.
pub(crate) fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    spec: ConvSpec,
    grad_out: &Tensor,
    mut grad_input: Option<&mut [f64]>,
    grad_weight: &mut [f64],
    mut grad_bias: Option<&mut [f64]>,
) {
    let (in_ch, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (out_ch, k) = (weight.shape()[0], weight.shape()[2]);
    let (oh, ow) = (grad_out.shape()[1], grad_out.shape()[2]);

    let x = input.data();
    let wt = weight.data();
    let go = grad_out.data();
    for co in 0..out_ch {
        for oy in 0..oh {
            for ox in 0..ow {
                let g = go[(co * oh + oy) * ow + ox];
                if g == 0.0 {
                    continue;
                }
                if let Some(gb) = grad_bias.as_deref_mut() {
                    gb[co] += g;
                }
                for ci in 0..in_ch {
                    for ky in 0..k {
                        let iy = (oy * spec.stride + ky) as isize - spec.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * spec.stride + kx) as isize - spec.padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let xi = (ci * h + iy as usize) * w + ix as usize;
                            let wi = ((co * in_ch + ci) * k + ky) * k + kx;
                            grad_weight[wi] += g * x[xi];
                            if let Some(gx) = grad_input.as_deref_mut() {
                                gx[xi] += g * wt[wi];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Weight + bias bundle for a conv layer outside any tape.
#[derive(Clone, Debug)]
pub struct ConvLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub spec: ConvSpec,
}

impl ConvLayer {
    pub fn new(weight: Tensor, bias: Tensor, spec: ConvSpec) -> Result<Self, NeuroError> {
        check_conv_shapes(
            &Tensor::zeros(&[weight.shape()[1], 1, 1]),
            &weight,
            Some(&bias),
        )
        .map_err(|_| shape_mismatch("conv layer", "[out_ch, in_ch, k, k] + [out_ch]", weight.shape()))?;
        Ok(ConvLayer { weight, bias, spec })
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NeuroError> {
        conv2d(input, &self.weight, Some(&self.bias), self.spec)
    }
}
