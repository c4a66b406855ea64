use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use neuro_core::{
    conv_output_dim, read_checkpoint, sgd_step, write_checkpoint, ConvSpec, NamedGrads, NodeId,
    ParamSet, SpikeMode, Surrogate, Tape, Tensor,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{signed_input, WindowSet};
use crate::error::ModelError;
use crate::init;
use crate::train::{guard_finite, TrainReport};

const C1_W: &str = "c1.weight";
const C1_B: &str = "c1.bias";
const C2_W: &str = "c2.weight";
const C2_B: &str = "c2.bias";
const FC_W: &str = "fc.weight";
const FC_B: &str = "fc.bias";
const POSE_W: &str = "pose.weight";
const POSE_B: &str = "pose.bias";
const DIR_W: &str = "dir.weight";
const DIR_B: &str = "dir.bias";

const C1_OUT: usize = 8;
const C2_OUT: usize = 16;
const HIDDEN: usize = 64;

fn spec1() -> ConvSpec {
    ConvSpec::new(2, 2)
}

fn spec2() -> ConvSpec {
    ConvSpec::new(2, 1)
}

/// Pose-and-direction regressor over one object's signed per-bin occupancy:
/// two strided convolutions, one hidden layer, a sigmoid pose head in
/// normalized image coordinates, and a raw (cos, sin) direction head.
pub struct OfpdModel {
    params: ParamSet,
    bins: usize,
    height: usize,
    width: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct OfpdPrediction {
    pub pose_norm: (f64, f64),
    pub pose_px: (f64, f64),
    pub dir_vec: (f64, f64),
    pub dir_rad: f64,
}

fn flat_dim(height: usize, width: usize) -> usize {
    let h1 = conv_output_dim(height, 5, 2, 2);
    let w1 = conv_output_dim(width, 5, 2, 2);
    let h2 = conv_output_dim(h1, 3, 2, 1);
    let w2 = conv_output_dim(w1, 3, 2, 1);
    C2_OUT * h2 * w2
}

impl OfpdModel {
    pub fn new(bins: usize, height: usize, width: usize, seed: u64) -> Result<Self, ModelError> {
        if bins == 0 || height < 8 || width < 8 {
            return Err(ModelError::InvalidConfig(format!(
                "unsupported input geometry [{bins}, {height}, {width}]"
            )));
        }
        let flat = flat_dim(height, width);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        params.insert(
            C1_W,
            init::kaiming(&mut rng, &[C1_OUT, bins, 5, 5], bins * 25),
        );
        params.insert(C1_B, Tensor::zeros(&[C1_OUT]));
        params.insert(
            C2_W,
            init::kaiming(&mut rng, &[C2_OUT, C1_OUT, 3, 3], C1_OUT * 9),
        );
        params.insert(C2_B, Tensor::zeros(&[C2_OUT]));
        params.insert(FC_W, init::kaiming(&mut rng, &[HIDDEN, flat], flat));
        params.insert(FC_B, Tensor::zeros(&[HIDDEN]));
        params.insert(
            POSE_W,
            init::gaussian(&mut rng, &[2, HIDDEN], (1.0 / HIDDEN as f64).sqrt()),
        );
        params.insert(POSE_B, Tensor::zeros(&[2]));
        params.insert(
            DIR_W,
            init::gaussian(&mut rng, &[2, HIDDEN], (1.0 / HIDDEN as f64).sqrt()),
        );
        params.insert(DIR_B, Tensor::zeros(&[2]));
        Ok(OfpdModel {
            params,
            bins,
            height,
            width,
        })
    }

    /// Rebuilds a model from checkpointed parameters. The frame geometry is
    /// not stored in the checkpoint, so the caller supplies it and the
    /// flattened layer width cross-checks it.
    pub fn from_params(
        params: ParamSet,
        height: usize,
        width: usize,
    ) -> Result<Self, ModelError> {
        let c1 = params
            .get(C1_W)
            .ok_or_else(|| ModelError::BadCheckpoint(format!("missing {C1_W}")))?;
        if c1.shape().len() != 4 || c1.shape()[0] != C1_OUT || c1.shape()[2] != 5 {
            return Err(ModelError::BadCheckpoint(format!(
                "{C1_W} has shape {:?}",
                c1.shape()
            )));
        }
        let bins = c1.shape()[1];
        let flat = flat_dim(height, width);
        for (name, shape) in [
            (C1_B, vec![C1_OUT]),
            (C2_W, vec![C2_OUT, C1_OUT, 3, 3]),
            (C2_B, vec![C2_OUT]),
            (FC_W, vec![HIDDEN, flat]),
            (FC_B, vec![HIDDEN]),
            (POSE_W, vec![2, HIDDEN]),
            (POSE_B, vec![2]),
            (DIR_W, vec![2, HIDDEN]),
            (DIR_B, vec![2]),
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
        Ok(OfpdModel {
            params,
            bins,
            height,
            width,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let f = File::create(path)?;
        write_checkpoint(BufWriter::new(f), &self.params)?;
        Ok(())
    }

    pub fn load(path: &Path, height: usize, width: usize) -> Result<Self, ModelError> {
        let f = File::open(path)?;
        Self::from_params(read_checkpoint(BufReader::new(f))?, height, width)
    }

    /// Runs the graph on a `[B, H, W]` signed occupancy tensor.
    pub fn forward(&self, input: &Tensor) -> Result<OfpdPrediction, ModelError> {
        if input.shape() != [self.bins, self.height, self.width] {
            return Err(ModelError::InvalidConfig(format!(
                "input shape {:?} does not match model [{}, {}, {}]",
                input.shape(),
                self.bins,
                self.height,
                self.width
            )));
        }
        let mut tape = Tape::new(SpikeMode::Hard, Surrogate::triangular(1.0));
        let x = tape.constant(input.clone());
        let nodes = self.graph(&mut tape, x, |t, v| t.constant(v))?;
        let pose = tape.value(nodes.pose).data().to_vec();
        let dir = tape.value(nodes.dir).data().to_vec();
        Ok(OfpdPrediction {
            pose_norm: (pose[0], pose[1]),
            pose_px: (pose[0] * self.width as f64, pose[1] * self.height as f64),
            dir_vec: (dir[0], dir[1]),
            dir_rad: dir[1].atan2(dir[0]),
        })
    }

    /// Builds the forward graph on `tape`, entering parameters through
    /// `bind` (leaves for training, constants for inference). Returns the
    /// head nodes and, when training, the parameter node ids.
    fn graph(
        &self,
        tape: &mut Tape,
        input: NodeId,
        mut bind: impl FnMut(&mut Tape, Tensor) -> NodeId,
    ) -> Result<OfpdNodes, ModelError> {
        let mut ids = Vec::new();
        for name in PARAM_NAMES {
            let value = self.params.require(name)?.clone();
            ids.push((name, bind(tape, value)));
        }
        let id = |name: &str| ids.iter().find(|(n, _)| *n == name).unwrap().1;

        let c1 = tape.conv2d(input, id(C1_W), Some(id(C1_B)), spec1())?;
        let a1 = tape.relu(c1);
        let c2 = tape.conv2d(a1, id(C2_W), Some(id(C2_B)), spec2())?;
        let a2 = tape.relu(c2);
        let flat = tape.reshape(a2, &[flat_dim(self.height, self.width)])?;
        let fc = tape.linear(flat, id(FC_W), Some(id(FC_B)))?;
        let hidden = tape.relu(fc);
        let pose_logit = tape.linear(hidden, id(POSE_W), Some(id(POSE_B)))?;
        let pose = tape.sigmoid(pose_logit);
        let dir = tape.linear(hidden, id(DIR_W), Some(id(DIR_B)))?;
        Ok(OfpdNodes {
            pose,
            dir,
            param_ids: ids,
        })
    }
}

const PARAM_NAMES: [&str; 10] = [
    C1_W, C1_B, C2_W, C2_B, FC_W, FC_B, POSE_W, POSE_B, DIR_W, DIR_B,
];

struct OfpdNodes {
    pose: NodeId,
    dir: NodeId,
    param_ids: Vec<(&'static str, NodeId)>,
}

#[derive(Clone, Debug)]
pub struct OfpdTrainCfg {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for OfpdTrainCfg {
    fn default() -> Self {
        OfpdTrainCfg {
            epochs: 30,
            lr: 0.05,
            seed: 11,
        }
    }
}

/// Trains pose and direction regression on every window of the set. Inputs
/// are restricted to signal pixels, the same view the cascade hands the
/// model after separating an object's events.
pub fn train_ofpd(
    windows: &WindowSet,
    cfg: &OfpdTrainCfg,
) -> Result<(OfpdModel, TrainReport), ModelError> {
    if windows.samples.is_empty() {
        return Err(ModelError::EmptyDataset("no windows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = OfpdModel::new(
        windows.bins_per_window,
        windows.height,
        windows.width,
        rng.gen(),
    )?;

    let mut order: Vec<usize> = (0..windows.samples.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let sample = &windows.samples[i];
            let input = signed_input(&sample.volume, Some(&sample.target_fg));
            let pose_t = Tensor::from_vec(
                &[2],
                vec![
                    sample.pose_px.0 / windows.width as f64,
                    sample.pose_px.1 / windows.height as f64,
                ],
            );
            let dir_t = Tensor::from_vec(&[2], vec![sample.dir_rad.cos(), sample.dir_rad.sin()]);

            let mut tape = Tape::new(SpikeMode::Hard, Surrogate::triangular(1.0));
            let x = tape.constant(input);
            let nodes = model.graph(&mut tape, x, |t, v| t.leaf(v))?;
            let pose_loss = tape.mse(nodes.pose, &pose_t)?;
            let dir_loss = tape.mse(nodes.dir, &dir_t)?;
            let loss = tape.add(pose_loss, dir_loss)?;
            let grads = tape.backward(loss)?;

            let mut named = NamedGrads::zeros_like(&model.params);
            for (name, id) in &nodes.param_ids {
                let shape = tape.value(*id).shape().to_vec();
                named.accumulate(name, &grads.get_or_zeros(*id, &shape))?;
            }
            sgd_step(&mut model.params, &named, cfg.lr, &[])?;
            epoch_loss += guard_finite(tape.value(loss).item(), epoch)?;
        }
        losses.push(epoch_loss / windows.samples.len() as f64);
    }

    Ok((model, TrainReport { losses }))
}
