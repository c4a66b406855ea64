use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bins::SpeedBinTable;
use crate::camera::CameraModel;
use crate::error::SimError;
use crate::gt::write_gt_csv;
use crate::sequence::{generate_sequence, inject_noise, SequenceDef};
use crate::shapes::ShapeKind;
use crate::trajectory::TrajectoryKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Full factorial recipe for a dataset. Training sequences cross every bin
/// with every training trajectory, orientation, traversal sense, and shape;
/// test sequences run the held-out trajectories forward at orientation 0.
#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub camera: CameraModel,
    pub bins: SpeedBinTable,
    pub shapes: Vec<ShapeKind>,
    pub orients_deg: Vec<f64>,
    pub train_trajectories: Vec<TrajectoryKind>,
    pub test_trajectories: Vec<TrajectoryKind>,
    pub duration_us: u64,
    pub sample_period_us: u64,
    pub noise_rate_hz: f64,
    pub theta: f64,
    pub shape_half_m: f64,
    /// Fraction of the full training factorial to keep, stratified by bin.
    pub scale: f64,
    pub seed: u64,
}

impl DatasetConfig {
    /// 64x64 two-shape configuration small enough to train on a laptop CPU.
    pub fn desk() -> Self {
        DatasetConfig {
            camera: CameraModel::new(64, 64, 60.0, 0.2).unwrap(),
            bins: SpeedBinTable::default_four(),
            shapes: vec![ShapeKind::Square, ShapeKind::Circle],
            orients_deg: vec![0.0, 45.0, 90.0, 145.0],
            train_trajectories: TrajectoryKind::TRAIN.to_vec(),
            test_trajectories: TrajectoryKind::TEST.to_vec(),
            duration_us: 20_000,
            sample_period_us: 50,
            noise_rate_hz: 0.0,
            theta: 0.2,
            shape_half_m: 0.016,
            scale: 0.25,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub bin: usize,
    pub shape: ShapeKind,
    pub trajectory: TrajectoryKind,
    pub orient_deg: f64,
    pub reverse: bool,
    pub phase: f64,
    pub seed: u64,
    pub lap_time_s: f64,
    /// Paths relative to the manifest's directory.
    pub events_path: String,
    pub gt_path: String,
    pub event_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub width: u16,
    pub height: u16,
    pub fov_deg: f64,
    pub depth_m: f64,
    pub duration_us: u64,
    pub sample_period_us: u64,
    pub theta: f64,
    pub shape_half_m: f64,
    pub noise_rate_hz: f64,
    pub seed: u64,
    pub bins: SpeedBinTable,
    pub sequences: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn camera(&self) -> CameraModel {
        CameraModel::new(self.width, self.height, self.fov_deg, self.depth_m)
            .expect("manifest validated on construction")
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.sequences.iter().filter(move |e| e.split == split)
    }
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn orient_tag(deg: f64) -> String {
    if deg == deg.trunc() {
        format!("{}", deg as i64)
    } else {
        format!("{deg}")
    }
}

/// Enumerates the training factorial (then decimates it per bin) and the
/// test grid. Decimation keeps `round(scale * n)` sequences of each bin,
/// chosen by hashing ids so the kept set stays spread across trajectories,
/// orientations, senses, and shapes rather than striding into one corner of
/// the factorial.
pub fn enumerate_sequences(cfg: &DatasetConfig) -> Result<Vec<SequenceDef>, SimError> {
    if !(cfg.scale > 0.0 && cfg.scale <= 1.0) {
        return Err(SimError::InvalidConfig(format!(
            "scale must lie in (0, 1], got {}",
            cfg.scale
        )));
    }
    if cfg.shapes.is_empty() || cfg.orients_deg.is_empty() || cfg.train_trajectories.is_empty() {
        return Err(SimError::InvalidConfig(
            "shapes, orientations, and training trajectories must be nonempty".into(),
        ));
    }

    let mut defs = Vec::new();
    let make = |id: String,
                shape: ShapeKind,
                traj: TrajectoryKind,
                orient: f64,
                reverse: bool,
                bin: usize| {
        let seed = fnv1a64(&format!("{}:{id}", cfg.seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SequenceDef {
            id,
            shape,
            trajectory: traj,
            orient_deg: orient,
            reverse,
            bin,
            phase: rng.gen::<f64>(),
            seed,
            duration_us: cfg.duration_us,
            sample_period_us: cfg.sample_period_us,
            noise_rate_hz: cfg.noise_rate_hz,
            theta: cfg.theta,
            shape_half_m: cfg.shape_half_m,
        }
    };

    for bin in 1..=cfg.bins.len() {
        let mut group = Vec::new();
        for &traj in &cfg.train_trajectories {
            for &orient in &cfg.orients_deg {
                for &reverse in &[false, true] {
                    for &shape in &cfg.shapes {
                        let id = format!(
                            "train-b{bin}-{}-o{}-{}-{}",
                            traj.name(),
                            orient_tag(orient),
                            if reverse { "rev" } else { "fwd" },
                            shape.name()
                        );
                        group.push(make(id, shape, traj, orient, reverse, bin));
                    }
                }
            }
        }
        let keep = ((group.len() as f64 * cfg.scale).round() as usize)
            .clamp(1, group.len());
        if keep < group.len() {
            let mut order: Vec<usize> = (0..group.len()).collect();
            order.sort_by_key(|&i| fnv1a64(&format!("pick:{}:{}", cfg.seed, group[i].id)));
            let mut chosen: Vec<usize> = order[..keep].to_vec();
            chosen.sort_unstable();
            let mut picked = Vec::with_capacity(keep);
            for i in chosen {
                picked.push(group[i].clone());
            }
            group = picked;
        }
        defs.extend(group);
    }

    for bin in 1..=cfg.bins.len() {
        for &traj in &cfg.test_trajectories {
            for &shape in &cfg.shapes {
                let id = format!("test-b{bin}-{}-{}", traj.name(), shape.name());
                defs.push(make(id, shape, traj, 0.0, false, bin));
            }
        }
    }
    Ok(defs)
}

/// Generates every sequence, writes events + ground truth + manifest under
/// `out_dir`, and returns the manifest. Identical configs produce
/// byte-identical trees.
pub fn write_dataset(cfg: &DatasetConfig, out_dir: &Path) -> Result<DatasetManifest, SimError> {
    let defs = enumerate_sequences(cfg)?;
    fs::create_dir_all(out_dir.join("events"))?;
    fs::create_dir_all(out_dir.join("gt"))?;

    let mut entries = Vec::with_capacity(defs.len());
    for def in &defs {
        let mut seq = generate_sequence(def, &cfg.camera, &cfg.bins)?;
        if cfg.noise_rate_hz > 0.0 {
            // phase came off the first draw of this stream; noise continues it
            let mut rng = ChaCha8Rng::seed_from_u64(def.seed);
            let _ = rng.gen::<f64>();
            inject_noise(
                &mut seq.events,
                cfg.noise_rate_hz,
                cfg.duration_us,
                cfg.camera.width,
                cfg.camera.height,
                &mut rng,
            );
        }
        let events_path = format!("events/{}.evt", def.id);
        let gt_path = format!("gt/{}.csv", def.id);
        event_core::write_events(
            &seq.events,
            cfg.camera.width,
            cfg.camera.height,
            &out_dir.join(&events_path),
        )?;
        let gt_file = fs::File::create(out_dir.join(&gt_path))?;
        write_gt_csv(std::io::BufWriter::new(gt_file), &seq.gt)?;
        entries.push(ManifestEntry {
            id: def.id.clone(),
            split: if def.id.starts_with("train") {
                Split::Train
            } else {
                Split::Test
            },
            bin: def.bin,
            shape: def.shape,
            trajectory: def.trajectory,
            orient_deg: def.orient_deg,
            reverse: def.reverse,
            phase: def.phase,
            seed: def.seed,
            lap_time_s: seq.lap_time_s,
            events_path,
            gt_path,
            event_count: seq.events.len() as u64,
        });
    }

    let manifest = DatasetManifest {
        width: cfg.camera.width,
        height: cfg.camera.height,
        fov_deg: cfg.camera.fov_deg,
        depth_m: cfg.camera.depth_m,
        duration_us: cfg.duration_us,
        sample_period_us: cfg.sample_period_us,
        theta: cfg.theta,
        shape_half_m: cfg.shape_half_m,
        noise_rate_hz: cfg.noise_rate_hz,
        seed: cfg.seed,
        bins: cfg.bins.clone(),
        sequences: entries,
    };
    write_manifest(&manifest, &out_dir.join("manifest.ini"))?;
    Ok(manifest)
}

pub fn write_manifest(m: &DatasetManifest, path: &Path) -> Result<(), SimError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "[dataset]")?;
    writeln!(w, "width = {}", m.width)?;
    writeln!(w, "height = {}", m.height)?;
    writeln!(w, "fov_deg = {}", m.fov_deg)?;
    writeln!(w, "depth_m = {}", m.depth_m)?;
    writeln!(w, "duration_us = {}", m.duration_us)?;
    writeln!(w, "sample_period_us = {}", m.sample_period_us)?;
    writeln!(w, "theta = {}", m.theta)?;
    writeln!(w, "shape_half_m = {}", m.shape_half_m)?;
    writeln!(w, "noise_rate_hz = {}", m.noise_rate_hz)?;
    writeln!(w, "seed = {}", m.seed)?;
    let edges: Vec<String> = m
        .bins
        .edges()
        .iter()
        .map(|(lo, hi)| format!("{lo}:{hi}"))
        .collect();
    writeln!(w, "bin_edges = {}", edges.join(","))?;
    writeln!(w, "programmed_max = {}", m.bins.programmed_max())?;
    for e in &m.sequences {
        writeln!(w)?;
        writeln!(w, "[sequence]")?;
        writeln!(w, "id = {}", e.id)?;
        writeln!(w, "split = {}", e.split.name())?;
        writeln!(w, "bin = {}", e.bin)?;
        writeln!(w, "shape = {}", e.shape.name())?;
        writeln!(w, "trajectory = {}", e.trajectory.name())?;
        writeln!(w, "orient_deg = {}", e.orient_deg)?;
        writeln!(w, "reverse = {}", e.reverse)?;
        writeln!(w, "phase = {}", e.phase)?;
        writeln!(w, "seed = {}", e.seed)?;
        writeln!(w, "lap_time_s = {}", e.lap_time_s)?;
        writeln!(w, "events = {}", e.events_path)?;
        writeln!(w, "gt = {}", e.gt_path)?;
        writeln!(w, "event_count = {}", e.event_count)?;
    }
    Ok(())
}

#[derive(Default)]
struct EntryBuilder {
    id: Option<String>,
    split: Option<Split>,
    bin: Option<usize>,
    shape: Option<ShapeKind>,
    trajectory: Option<TrajectoryKind>,
    orient_deg: Option<f64>,
    reverse: Option<bool>,
    phase: Option<f64>,
    seed: Option<u64>,
    lap_time_s: Option<f64>,
    events_path: Option<String>,
    gt_path: Option<String>,
    event_count: Option<u64>,
}

impl EntryBuilder {
    fn finish(self, line: usize) -> Result<ManifestEntry, SimError> {
        let missing = |what: &str| SimError::ManifestParse {
            line,
            what: format!("sequence block missing key \"{what}\""),
        };
        Ok(ManifestEntry {
            id: self.id.ok_or_else(|| missing("id"))?,
            split: self.split.ok_or_else(|| missing("split"))?,
            bin: self.bin.ok_or_else(|| missing("bin"))?,
            shape: self.shape.ok_or_else(|| missing("shape"))?,
            trajectory: self.trajectory.ok_or_else(|| missing("trajectory"))?,
            orient_deg: self.orient_deg.ok_or_else(|| missing("orient_deg"))?,
            reverse: self.reverse.ok_or_else(|| missing("reverse"))?,
            phase: self.phase.ok_or_else(|| missing("phase"))?,
            seed: self.seed.ok_or_else(|| missing("seed"))?,
            lap_time_s: self.lap_time_s.ok_or_else(|| missing("lap_time_s"))?,
            events_path: self.events_path.ok_or_else(|| missing("events"))?,
            gt_path: self.gt_path.ok_or_else(|| missing("gt"))?,
            event_count: self.event_count.ok_or_else(|| missing("event_count"))?,
        })
    }
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, SimError> {
    enum Section {
        None,
        Dataset,
        Sequence,
    }

    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);

    let mut section = Section::None;
    let mut width = None;
    let mut height = None;
    let mut fov_deg = None;
    let mut depth_m = None;
    let mut duration_us = None;
    let mut sample_period_us = None;
    let mut theta = None;
    let mut shape_half_m = None;
    let mut noise_rate_hz = None;
    let mut seed = None;
    let mut bin_edges: Option<Vec<(f64, f64)>> = None;
    let mut programmed_max = None;
    let mut sequences = Vec::new();
    let mut current: Option<EntryBuilder> = None;
    let mut lineno = 0usize;

    for line in reader.lines() {
        let line = line?;
        lineno += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |what: String| SimError::ManifestParse { line: lineno, what };
        if t.starts_with('[') {
            if let Some(b) = current.take() {
                sequences.push(b.finish(lineno)?);
            }
            section = match t {
                "[dataset]" => Section::Dataset,
                "[sequence]" => {
                    current = Some(EntryBuilder::default());
                    Section::Sequence
                }
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected key = value, got {t:?}")))?;
        match section {
            Section::None => return Err(err("key before any section".into())),
            Section::Dataset => match key {
                "width" => width = Some(parse_num::<u16>(value, lineno)?),
                "height" => height = Some(parse_num::<u16>(value, lineno)?),
                "fov_deg" => fov_deg = Some(parse_num::<f64>(value, lineno)?),
                "depth_m" => depth_m = Some(parse_num::<f64>(value, lineno)?),
                "duration_us" => duration_us = Some(parse_num::<u64>(value, lineno)?),
                "sample_period_us" => sample_period_us = Some(parse_num::<u64>(value, lineno)?),
                "theta" => theta = Some(parse_num::<f64>(value, lineno)?),
                "shape_half_m" => shape_half_m = Some(parse_num::<f64>(value, lineno)?),
                "noise_rate_hz" => noise_rate_hz = Some(parse_num::<f64>(value, lineno)?),
                "seed" => seed = Some(parse_num::<u64>(value, lineno)?),
                "bin_edges" => {
                    let mut edges = Vec::new();
                    for part in value.split(',') {
                        let (lo, hi) = part
                            .split_once(':')
                            .ok_or_else(|| err(format!("bad bin edge {part:?}")))?;
                        edges.push((
                            parse_num::<f64>(lo, lineno)?,
                            parse_num::<f64>(hi, lineno)?,
                        ));
                    }
                    bin_edges = Some(edges);
                }
                "programmed_max" => programmed_max = Some(parse_num::<f64>(value, lineno)?),
                other => return Err(err(format!("unknown dataset key \"{other}\""))),
            },
            Section::Sequence => {
                let b = current.as_mut().expect("sequence section has a builder");
                match key {
                    "id" => b.id = Some(value.to_string()),
                    "split" => {
                        b.split = Some(
                            Split::parse(value)
                                .ok_or_else(|| err(format!("unknown split {value:?}")))?,
                        )
                    }
                    "bin" => b.bin = Some(parse_num::<usize>(value, lineno)?),
                    "shape" => b.shape = Some(ShapeKind::parse(value)?),
                    "trajectory" => b.trajectory = Some(TrajectoryKind::parse(value)?),
                    "orient_deg" => b.orient_deg = Some(parse_num::<f64>(value, lineno)?),
                    "reverse" => {
                        b.reverse = Some(match value {
                            "true" => true,
                            "false" => false,
                            _ => return Err(err(format!("bad bool {value:?}"))),
                        })
                    }
                    "phase" => b.phase = Some(parse_num::<f64>(value, lineno)?),
                    "seed" => b.seed = Some(parse_num::<u64>(value, lineno)?),
                    "lap_time_s" => b.lap_time_s = Some(parse_num::<f64>(value, lineno)?),
                    "events" => b.events_path = Some(value.to_string()),
                    "gt" => b.gt_path = Some(value.to_string()),
                    "event_count" => b.event_count = Some(parse_num::<u64>(value, lineno)?),
                    other => return Err(err(format!("unknown sequence key \"{other}\""))),
                }
            }
        }
    }
    if let Some(b) = current.take() {
        sequences.push(b.finish(lineno)?);
    }

    let missing = |what: &str| SimError::ManifestParse {
        line: lineno,
        what: format!("dataset block missing key \"{what}\""),
    };
    let manifest = DatasetManifest {
        width: width.ok_or_else(|| missing("width"))?,
        height: height.ok_or_else(|| missing("height"))?,
        fov_deg: fov_deg.ok_or_else(|| missing("fov_deg"))?,
        depth_m: depth_m.ok_or_else(|| missing("depth_m"))?,
        duration_us: duration_us.ok_or_else(|| missing("duration_us"))?,
        sample_period_us: sample_period_us.ok_or_else(|| missing("sample_period_us"))?,
        theta: theta.ok_or_else(|| missing("theta"))?,
        shape_half_m: shape_half_m.ok_or_else(|| missing("shape_half_m"))?,
        noise_rate_hz: noise_rate_hz.ok_or_else(|| missing("noise_rate_hz"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        bins: SpeedBinTable::new(
            bin_edges.ok_or_else(|| missing("bin_edges"))?,
            programmed_max.ok_or_else(|| missing("programmed_max"))?,
        )?,
        sequences,
    };
    // validate camera parameters eagerly so later camera() calls can't panic
    CameraModel::new(
        manifest.width,
        manifest.height,
        manifest.fov_deg,
        manifest.depth_m,
    )?;
    Ok(manifest)
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, SimError> {
    s.parse::<T>().map_err(|_| SimError::ManifestParse {
        line,
        what: format!("bad number {s:?}"),
    })
}

/// Absolute path of a manifest-relative file.
pub fn resolve_path(manifest_path: &Path, rel: &str) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(rel)
}
