use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cascade_infer::CascadeConfig;
use models::{OfpdTrainCfg, OfsTrainCfg};
use sim_cam::{CameraModel, DatasetConfig, ShapeKind, SpeedBinTable, TrajectoryKind};

/// Window cutting shared by training, evaluation, and inference.
#[derive(Clone, Debug)]
pub struct WindowCfg {
    pub dt_us: u64,
    pub bins_per_window: usize,
    pub train_stride: usize,
    pub eval_stride: usize,
}

impl Default for WindowCfg {
    fn default() -> Self {
        WindowCfg {
            dt_us: 500,
            bins_per_window: 5,
            train_stride: 1,
            eval_stride: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSettings {
    pub dts_us: Vec<u64>,
    pub noise_rates_hz: Vec<f64>,
    pub noise_seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            dts_us: vec![500, 1_000, 5_000],
            noise_rates_hz: vec![0.0, 1_000.0],
            noise_seed: 5,
        }
    }
}

/// Optional CI gates for `toffe eval`: a violated bound fails the command.
#[derive(Clone, Debug, Default)]
pub struct EvalGates {
    pub min_accuracy: Option<f64>,
    pub max_pix_e: Option<f64>,
    pub max_dir_e: Option<f64>,
    pub max_speed_e: Option<f64>,
}

/// Everything a run needs, read from one sectioned key=value file. Every
/// key has a default (the 64x64 desk setup); unknown keys are rejected so
/// typos cannot silently fall back.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub windows: WindowCfg,
    pub ofs: OfsTrainCfg,
    pub ofpd: OfpdTrainCfg,
    pub cascade: CascadeConfig,
    pub sweep: SweepSettings,
    pub gates: EvalGates,
    /// Event file for `toffe infer`.
    pub infer_events: Option<PathBuf>,
    pub dataset_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub report_dir: PathBuf,
    /// The config file itself, copied next to outputs for provenance.
    pub source: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut cfg = RunConfig::defaults(path);

        let mut camera = CameraParams::from(&cfg.dataset.camera);
        let mut bins = BinParams::from(&cfg.dataset.bins);

        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !KNOWN_SECTIONS.contains(&section.as_str()) {
                    bail!("line {lineno}: unknown section [{section}]");
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| anyhow!("line {lineno}: expected key = value, got {line:?}"))?;
            cfg.apply(&section, key, value, base, &mut camera, &mut bins)
                .with_context(|| format!("line {lineno}: key \"{key}\""))?;
        }

        cfg.dataset.camera = camera.build()?;
        cfg.dataset.bins = bins.build()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn defaults(source: &Path) -> RunConfig {
        let base = source.parent().unwrap_or_else(|| Path::new("."));
        RunConfig {
            dataset: DatasetConfig::desk(),
            windows: WindowCfg::default(),
            ofs: OfsTrainCfg::default(),
            ofpd: OfpdTrainCfg::default(),
            cascade: CascadeConfig::default(),
            sweep: SweepSettings::default(),
            gates: EvalGates::default(),
            infer_events: None,
            dataset_dir: base.join("data"),
            checkpoint_dir: base.join("ckpt"),
            report_dir: base.join("reports"),
            source: source.to_path_buf(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        base: &Path,
        camera: &mut CameraParams,
        bins: &mut BinParams,
    ) -> Result<()> {
        match section {
            "" => bail!("key before any section"),
            "camera" => match key {
                "width" => camera.width = value.parse()?,
                "height" => camera.height = value.parse()?,
                "fov_deg" => camera.fov_deg = value.parse()?,
                "depth_m" => camera.depth_m = value.parse()?,
                _ => bail!("unknown camera key"),
            },
            "bins" => match key {
                "edges" => bins.edges = parse_edges(value)?,
                "programmed_max" => bins.programmed_max = value.parse()?,
                _ => bail!("unknown bins key"),
            },
            "dataset" => match key {
                "shapes" => {
                    self.dataset.shapes = parse_list(value, |s| Ok(ShapeKind::parse(s)?))?
                }
                "orients_deg" => self.dataset.orients_deg = parse_list(value, parse_f64)?,
                "train_trajectories" => {
                    self.dataset.train_trajectories =
                        parse_list(value, |s| Ok(TrajectoryKind::parse(s)?))?
                }
                "test_trajectories" => {
                    self.dataset.test_trajectories =
                        parse_list(value, |s| Ok(TrajectoryKind::parse(s)?))?
                }
                "duration_us" => self.dataset.duration_us = value.parse()?,
                "sample_period_us" => self.dataset.sample_period_us = value.parse()?,
                "noise_rate_hz" => self.dataset.noise_rate_hz = value.parse()?,
                "theta" => self.dataset.theta = value.parse()?,
                "shape_half_m" => self.dataset.shape_half_m = value.parse()?,
                "scale" => self.dataset.scale = value.parse()?,
                "seed" => self.dataset.seed = value.parse()?,
                _ => bail!("unknown dataset key"),
            },
            "windows" => match key {
                "dt_us" => self.windows.dt_us = value.parse()?,
                "bins_per_window" => self.windows.bins_per_window = value.parse()?,
                "train_stride" => self.windows.train_stride = value.parse()?,
                "eval_stride" => self.windows.eval_stride = value.parse()?,
                _ => bail!("unknown windows key"),
            },
            "ofs" => match key {
                "epochs" => self.ofs.epochs = value.parse()?,
                "lr" => self.ofs.lr = value.parse()?,
                "pos_weight" => self.ofs.pos_weight = value.parse()?,
                "bg_weight" => self.ofs.bg_weight = value.parse()?,
                "surrogate_width" => self.ofs.surrogate_width = value.parse()?,
                "min_support" => self.ofs.min_support = value.parse()?,
                "seed" => self.ofs.seed = value.parse()?,
                _ => bail!("unknown ofs key"),
            },
            "ofpd" => match key {
                "epochs" => self.ofpd.epochs = value.parse()?,
                "lr" => self.ofpd.lr = value.parse()?,
                "seed" => self.ofpd.seed = value.parse()?,
                _ => bail!("unknown ofpd key"),
            },
            "cascade" => match key {
                "min_support" => self.cascade.min_support = value.parse()?,
                "close_kernel" => self.cascade.close_kernel = value.parse()?,
                _ => bail!("unknown cascade key"),
            },
            "sweep" => match key {
                "dts_us" => self.sweep.dts_us = parse_list(value, |s| Ok(s.parse()?))?,
                "noise_rates_hz" => self.sweep.noise_rates_hz = parse_list(value, parse_f64)?,
                "noise_seed" => self.sweep.noise_seed = value.parse()?,
                _ => bail!("unknown sweep key"),
            },
            "eval" => match key {
                "min_accuracy" => self.gates.min_accuracy = Some(value.parse()?),
                "max_pix_e" => self.gates.max_pix_e = Some(value.parse()?),
                "max_dir_e" => self.gates.max_dir_e = Some(value.parse()?),
                "max_speed_e" => self.gates.max_speed_e = Some(value.parse()?),
                _ => bail!("unknown eval key"),
            },
            "infer" => match key {
                "events" => self.infer_events = Some(base.join(value)),
                _ => bail!("unknown infer key"),
            },
            "paths" => match key {
                "dataset_dir" => self.dataset_dir = base.join(value),
                "checkpoint_dir" => self.checkpoint_dir = base.join(value),
                "report_dir" => self.report_dir = base.join(value),
                _ => bail!("unknown paths key"),
            },
            other => bail!("unknown section [{other}]"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.windows.dt_us == 0 || self.windows.dt_us > self.dataset.duration_us {
            bail!(
                "windows.dt_us must lie in 1..={} (sequence duration)",
                self.dataset.duration_us
            );
        }
        if self.windows.bins_per_window == 0 {
            bail!("windows.bins_per_window must be positive");
        }
        if self.windows.train_stride == 0 || self.windows.eval_stride == 0 {
            bail!("window strides must be positive");
        }
        if self.sweep.dts_us.is_empty() {
            bail!("sweep.dts_us must list at least one window length");
        }
        Ok(())
    }
}

const KNOWN_SECTIONS: [&str; 11] = [
    "camera", "bins", "dataset", "windows", "ofs", "ofpd", "cascade", "sweep", "eval", "infer",
    "paths",
];

struct CameraParams {
    width: u16,
    height: u16,
    fov_deg: f64,
    depth_m: f64,
}

impl CameraParams {
    fn from(c: &CameraModel) -> Self {
        CameraParams {
            width: c.width,
            height: c.height,
            fov_deg: c.fov_deg,
            depth_m: c.depth_m,
        }
    }

    fn build(self) -> Result<CameraModel> {
        Ok(CameraModel::new(
            self.width,
            self.height,
            self.fov_deg,
            self.depth_m,
        )?)
    }
}

struct BinParams {
    edges: Vec<(f64, f64)>,
    programmed_max: f64,
}

impl BinParams {
    fn from(b: &SpeedBinTable) -> Self {
        BinParams {
            edges: b.edges().to_vec(),
            programmed_max: b.programmed_max(),
        }
    }

    fn build(self) -> Result<SpeedBinTable> {
        Ok(SpeedBinTable::new(self.edges, self.programmed_max)?)
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    Ok(s.parse()?)
}

fn parse_edges(value: &str) -> Result<Vec<(f64, f64)>> {
    parse_list(value, |part| {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("bin edge must look like lo:hi, got {part:?}"))?;
        Ok((lo.trim().parse()?, hi.trim().parse()?))
    })
}
