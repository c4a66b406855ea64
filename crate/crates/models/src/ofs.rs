use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use event_core::BinnedVolume;
use neuro_core::{
    conv2d, lif_step, read_checkpoint, sgd_step, write_checkpoint, ClampRule, ConvSpec,
    LifLayerState, LifParams, NamedGrads, ParamSet, SpikeMode, Surrogate, Tape, Tensor,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{polarity_input, WindowSample, WindowSet};
use crate::error::ModelError;
use crate::init;
use crate::train::{guard_finite, TrainReport};

pub const OFS_KERNEL: usize = 5;

const WEIGHT: &str = "conv.weight";
const BIAS: &str = "conv.bias";
const VTH: &str = "v_th";
const LAMBDA: &str = "lambda";

/// One-bin speed separator: a single spiking 5x5 convolution over the two
/// polarity channels, stepped through the window's time bins with shared
/// membrane state. The learned threshold and leak are scalars.
pub struct OfsModel {
    params: ParamSet,
}

/// Spike raster of one window pass.
pub struct OfsOutput {
    /// Per time step, `height * width` bytes of hard spikes.
    pub step_spikes: Vec<Vec<u8>>,
    /// OR over steps: every pixel that spiked at least once.
    pub mask: Vec<u8>,
}

impl OfsOutput {
    pub fn support(&self) -> usize {
        self.mask.iter().filter(|&&m| m != 0).count()
    }
}

impl OfsModel {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        params.insert(
            WEIGHT,
            init::kaiming(&mut rng, &[1, 2, OFS_KERNEL, OFS_KERNEL], 2 * OFS_KERNEL * OFS_KERNEL),
        );
        params.insert(BIAS, Tensor::zeros(&[1]));
        params.insert(VTH, Tensor::scalar(1.0));
        // Long memory by default. Instantaneous event density is a poor
        // speed cue for sub-pixel motion — an edge crossing a pixel-center
        // line emits a whole coherent line of events in one bin — but only a
        // fast band keeps re-driving the same neighbourhood bin after bin,
        // so a leaky membrane that rewards sustained drive separates the
        // bands where a density snapshot cannot.
        params.insert(LAMBDA, Tensor::scalar(0.8));
        OfsModel { params }
    }

    pub fn from_params(params: ParamSet) -> Result<Self, ModelError> {
        for (name, shape) in [
            (WEIGHT, vec![1usize, 2, OFS_KERNEL, OFS_KERNEL]),
            (BIAS, vec![1]),
            (VTH, vec![1]),
            (LAMBDA, vec![1]),
        ] {
            let t = params
                .get(name)
                .ok_or_else(|| ModelError::BadCheckpoint(format!("missing {name}")))?;
            if t.shape() != shape.as_slice() {
                return Err(ModelError::BadCheckpoint(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        if params.len() != 4 {
            return Err(ModelError::BadCheckpoint(format!(
                "expected 4 parameters, found {}",
                params.len()
            )));
        }
        Ok(OfsModel { params })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn v_th(&self) -> f64 {
        self.params.get(VTH).unwrap().data()[0]
    }

    pub fn lambda(&self) -> f64 {
        self.params.get(LAMBDA).unwrap().data()[0]
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let f = File::create(path)?;
        write_checkpoint(BufWriter::new(f), &self.params)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let f = File::open(path)?;
        Self::from_params(read_checkpoint(BufReader::new(f))?)
    }

    /// Hard-spiking forward pass over one binned window.
    pub fn forward(&self, volume: &BinnedVolume) -> Result<OfsOutput, ModelError> {
        let drives = self.drives(volume)?;
        scan_drives(&drives, self.v_th(), self.lambda())
    }

    /// Per-bin convolution responses, before any membrane dynamics. The
    /// convolution is the expensive part of a forward pass and does not
    /// depend on the threshold, so calibration computes it once per window.
    fn drives(&self, volume: &BinnedVolume) -> Result<Vec<Tensor>, ModelError> {
        let weight = self.params.require(WEIGHT)?;
        let bias = self.params.require(BIAS)?;
        let spec = ConvSpec::new(1, OFS_KERNEL / 2);
        (0..volume.bins)
            .map(|b| Ok(conv2d(&polarity_input(volume, b), weight, Some(bias), spec)?))
            .collect()
    }
}

/// Runs the LIF recurrence over precomputed drives.
fn scan_drives(drives: &[Tensor], v_th: f64, lambda: f64) -> Result<OfsOutput, ModelError> {
    let shape = drives[0].shape().to_vec();
    let hw: usize = shape[1] * shape[2];
    let lif = LifParams::new(v_th, lambda)?;

    let mut state = LifLayerState::zeros(&shape);
    let mut step_spikes = Vec::with_capacity(drives.len());
    let mut mask = vec![0u8; hw];
    for drive in drives {
        let (next, _z) = lif_step(&state, drive, &lif)?;
        let spikes: Vec<u8> = next
            .spikes
            .data()
            .iter()
            .map(|&o| if o > 0.0 { 1 } else { 0 })
            .collect();
        for (m, &s) in mask.iter_mut().zip(&spikes) {
            *m |= s;
        }
        step_spikes.push(spikes);
        state = next;
    }
    Ok(OfsOutput { step_spikes, mask })
}

#[derive(Clone, Debug)]
pub struct OfsTrainCfg {
    pub epochs: usize,
    pub lr: f64,
    /// BCE weight on foreground pixels; the spike band is a thin minority.
    pub pos_weight: f64,
    /// BCE weight on pixels that saw no event at all. Event pixels carry
    /// weight 1 — they are the informative ones — while the empty background
    /// only has to anchor the bias, so it gets a small weight instead of
    /// outvoting the band a few thousand to a few dozen.
    pub bg_weight: f64,
    pub surrogate_width: f64,
    /// Spike support at which downstream inference accepts a window; the
    /// threshold calibration after the gradient epochs targets it.
    pub min_support: usize,
    pub seed: u64,
}

impl Default for OfsTrainCfg {
    fn default() -> Self {
        OfsTrainCfg {
            epochs: 12,
            lr: 0.05,
            pos_weight: 2.0,
            bg_weight: 0.05,
            surrogate_width: 1.0,
            min_support: 10,
            seed: 7,
        }
    }
}

/// Trains the separator for one speed bin: windows of that bin are positives
/// (target: their signal pixels) and windows of slower bins are negatives
/// (target: all zero). Faster bins are left out on purpose — the cascade
/// consumes them before this stage ever runs, and a spiking unit whose drive
/// grows with local event density could not selectively ignore a denser band
/// anyway.
pub fn train_ofs(
    windows: &WindowSet,
    bin: usize,
    cfg: &OfsTrainCfg,
) -> Result<(OfsModel, TrainReport), ModelError> {
    let examples: Vec<&WindowSample> =
        windows.samples.iter().filter(|s| s.bin <= bin).collect();
    if !examples.iter().any(|s| s.bin == bin) {
        return Err(ModelError::EmptyDataset(format!(
            "no windows for bin {bin}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = OfsModel::new(rng.gen());
    let surrogate = Surrogate::triangular(cfg.surrogate_width);
    let zeros_target = Tensor::zeros(&[1, windows.height, windows.width]);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let sample = examples[i];
            let target = if sample.bin == bin {
                fg_target(sample, windows.height, windows.width)
            } else {
                zeros_target.clone()
            };
            let loss = ofs_step(&mut model, sample, &target, cfg, surrogate)?;
            epoch_loss += guard_finite(loss, epoch)?;
        }
        losses.push(epoch_loss / examples.len() as f64);
    }

    calibrate_v_th(&mut model, &examples, bin, cfg)?;
    Ok((model, TrainReport { losses }))
}

/// Sets the separator's operating point. The pixel-level loss never sees the
/// decision the cascade actually makes — report a window iff the spike
/// support reaches `min_support` — so after the gradient epochs the learned
/// threshold is rescaled along a grid (tightening only, so a clean training
/// set can never loosen it into firing on noise) and the scale kept is the
/// one that detects the most own-bin training windows while waving through
/// the fewest slower-bin ones, with the widest worst-case support margin as
/// the tie-break.
fn calibrate_v_th(
    model: &mut OfsModel,
    examples: &[&WindowSample],
    bin: usize,
    cfg: &OfsTrainCfg,
) -> Result<(), ModelError> {
    let v_th0 = model.v_th();
    let lambda = model.lambda();
    let mut drives = Vec::with_capacity(examples.len());
    for s in examples {
        drives.push((model.drives(&s.volume)?, s.bin == bin));
    }

    let mut best: Option<((i64, i64), f64)> = None;
    for i in 0..=40 {
        let scale = 1.05f64.powi(i);
        let (mut hits, mut false_alarms) = (0i64, 0i64);
        let (mut min_own, mut max_slow) = (i64::MAX, 0i64);
        for (d, own) in &drives {
            let support = scan_drives(d, v_th0 * scale, lambda)?.support() as i64;
            let fires = support >= cfg.min_support as i64;
            if *own {
                hits += fires as i64;
                min_own = min_own.min(support);
            } else {
                false_alarms += fires as i64;
                max_slow = max_slow.max(support);
            }
        }
        let key = (hits - false_alarms, min_own - max_slow);
        if best.is_none_or(|(k, _)| key > k) {
            best = Some((key, scale));
        }
    }

    let (_, scale) = best.expect("grid is nonempty");
    *model.params.get_mut(VTH).unwrap() = Tensor::scalar(v_th0 * scale);
    Ok(())
}

/// Positive targets are the signal pixels that actually saw an event. A slow
/// band sweeps only a line or two of pixel centers per window, so demanding
/// spikes across the whole ground-truth band would force the threshold down
/// until the unit fires without evidence.
fn fg_target(sample: &WindowSample, height: usize, width: usize) -> Tensor {
    let occ = sample.volume.window_occupancy();
    let data = sample
        .target_fg
        .iter()
        .zip(&occ)
        .map(|(&fg, &o)| if fg != 0 && o > 0.0 { 1.0 } else { 0.0 })
        .collect();
    Tensor::from_vec(&[1, height, width], data)
}

/// One BPTT step: unrolls the LIF recurrence over the window's bins, reads
/// the temporal max of the normalized membrane offset `z` per pixel as a
/// spike logit, and regresses it to the target with weighted BCE.
fn ofs_step(
    model: &mut OfsModel,
    sample: &WindowSample,
    target: &Tensor,
    cfg: &OfsTrainCfg,
    surrogate: Surrogate,
) -> Result<f64, ModelError> {
    let mut tape = Tape::new(SpikeMode::Hard, surrogate);
    let w = tape.leaf(model.params.require(WEIGHT)?.clone());
    let b = tape.leaf(model.params.require(BIAS)?.clone());
    let vth = tape.leaf(model.params.require(VTH)?.clone());
    let lam = tape.leaf(model.params.require(LAMBDA)?.clone());

    let spec = ConvSpec::new(1, OFS_KERNEL / 2);
    let volume = &sample.volume;
    let state_shape = [1, volume.height, volume.width];
    let mut u = tape.constant(Tensor::zeros(&state_shape));
    let mut o_prev = tape.constant(Tensor::zeros(&state_shape));
    let mut z_max = None;
    for step in 0..volume.bins {
        let x = tape.constant(polarity_input(volume, step));
        let drive = tape.conv2d(x, w, Some(b), spec)?;
        let leaked = tape.mul_scalar(u, lam)?;
        let reset = tape.mul_scalar(o_prev, vth)?;
        let integ = tape.add(leaked, drive)?;
        let u_next = tape.sub(integ, reset)?;
        let scaled = tape.div_scalar(u_next, vth)?;
        let z = tape.add_const(scaled, -1.0);
        o_prev = tape.spike(z);
        u = u_next;
        z_max = Some(match z_max {
            None => z,
            Some(m) => tape.max2(m, z)?,
        });
    }

    let logits = z_max.expect("window has at least one bin");
    let weights = pixel_weights(volume, cfg.bg_weight);
    let loss = tape.bce_with_logits_weighted(logits, target, cfg.pos_weight, &weights)?;
    let grads = tape.backward(loss)?;

    let mut named = NamedGrads::zeros_like(&model.params);
    for (name, id) in [(WEIGHT, w), (BIAS, b), (VTH, vth), (LAMBDA, lam)] {
        let shape = tape.value(id).shape().to_vec();
        named.accumulate(name, &grads.get_or_zeros(id, &shape))?;
    }
    sgd_step(&mut model.params, &named, cfg.lr, &clamp_rules())?;
    Ok(tape.value(loss).item())
}

fn pixel_weights(volume: &BinnedVolume, bg_weight: f64) -> Tensor {
    let data: Vec<f64> = volume
        .window_occupancy()
        .iter()
        .map(|&occ| if occ > 0.0 { 1.0 } else { bg_weight })
        .collect();
    Tensor::from_vec(&[1, volume.height, volume.width], data)
}

fn clamp_rules() -> [(&'static str, ClampRule); 2] {
    [
        (VTH, ClampRule::at_least(1e-3)),
        (LAMBDA, ClampRule::range(0.0, 1.0)),
    ]
}
