use std::path::Path;

use cascade_infer::{cascade_infer, CascadeConfig, ObjectFlow};
use event_core::BinnedVolume;
use models::{
    load_windows, load_windows_noisy, train_ofpd, train_ofs, OfpdModel, OfpdTrainCfg, OfsModel,
    OfsTrainCfg, TrainReport, WindowSample, WindowSet,
};
use sim_cam::{DatasetManifest, SpeedBinTable, Split};

use crate::error::EvalError;
use crate::metrics::{window_errors, WindowErrors};
use crate::report::{BinStats, EvalReport, SequenceEval};

/// What one window contributed to a report: the dominant flow, if the
/// cascade found one, and the spike load it took to get there.
#[derive(Clone, Debug)]
pub struct WindowPrediction {
    pub flow: Option<ObjectFlow>,
    /// Spiking pixels summed over every cascade stage.
    pub spikes: usize,
}

/// Runs the cascade on one window and reduces it to the single-object
/// prediction the metrics are scored against.
pub fn predict_window(
    volume: &BinnedVolume,
    separators: &[OfsModel],
    ofpd: &OfpdModel,
    bins: &SpeedBinTable,
    cascade: &CascadeConfig,
) -> Result<WindowPrediction, EvalError> {
    let out = cascade_infer(volume, separators, ofpd, bins, cascade)?;
    let spikes = out
        .trace
        .spike_masks
        .iter()
        .flatten()
        .map(|&v| v as usize)
        .sum();
    Ok(WindowPrediction {
        flow: out.dominant_flow().cloned(),
        spikes,
    })
}

#[derive(Default)]
struct Acc {
    windows: usize,
    detected: usize,
    correct: usize,
    pix_sum: f64,
    dir_sum: f64,
    speed_sum: f64,
}

impl Acc {
    fn push(&mut self, correct: bool, errors: &Option<WindowErrors>) {
        self.windows += 1;
        if correct {
            self.correct += 1;
        }
        if let Some(e) = errors {
            self.detected += 1;
            self.pix_sum += e.pix_e;
            self.dir_sum += e.dir_e;
            self.speed_sum += e.speed_e;
        }
    }

    fn means(&self) -> Option<WindowErrors> {
        (self.detected > 0).then(|| WindowErrors {
            pix_e: self.pix_sum / self.detected as f64,
            dir_e: self.dir_sum / self.detected as f64,
            speed_e: self.speed_sum / self.detected as f64,
        })
    }
}

/// The evaluation core with the prediction step injected, so oracles and
/// stubs can drive it in tests. Windows with no flow count as misclassified;
/// error means run over the detected windows only.
pub fn evaluate_with<F>(windows: &WindowSet, mut predict: F) -> Result<EvalReport, EvalError>
where
    F: FnMut(&WindowSample) -> Result<WindowPrediction, EvalError>,
{
    if windows.samples.is_empty() {
        return Err(EvalError::InvalidConfig("no windows to evaluate".into()));
    }
    let max_bin = windows.samples.iter().map(|s| s.bin).max().unwrap();
    if windows.samples.iter().any(|s| s.bin == 0) {
        return Err(EvalError::InvalidConfig(
            "window with sub-threshold programmed bin".into(),
        ));
    }

    let mut per_bin: Vec<BinStats> = (1..=max_bin)
        .map(|bin| BinStats {
            bin,
            windows: 0,
            detected: 0,
            correct: 0,
        })
        .collect();
    let mut seqs: Vec<(String, usize, Acc)> = Vec::new();
    let mut total = Acc::default();
    let mut spike_sum = 0usize;

    for s in &windows.samples {
        if seqs.last().is_none_or(|(id, _, _)| id != &s.seq_id) {
            seqs.push((s.seq_id.clone(), s.bin, Acc::default()));
        }
        let pred = predict(s)?;
        spike_sum += pred.spikes;
        let (correct, errors) = match &pred.flow {
            Some(f) => (
                f.bin == s.bin,
                Some(window_errors(f, s.pose_px, s.dir_rad, s.speed)),
            ),
            None => (false, None),
        };
        seqs.last_mut().unwrap().2.push(correct, &errors);
        total.push(correct, &errors);
        let pb = &mut per_bin[s.bin - 1];
        pb.windows += 1;
        if errors.is_some() {
            pb.detected += 1;
        }
        if correct {
            pb.correct += 1;
        }
    }

    Ok(EvalReport {
        dt_us: windows.dt_us,
        noise_rate_hz: 0.0,
        windows: total.windows,
        detected: total.detected,
        correct: total.correct,
        mean_spikes: spike_sum as f64 / total.windows as f64,
        per_bin,
        per_sequence: seqs
            .into_iter()
            .map(|(seq_id, bin, acc)| SequenceEval {
                seq_id,
                bin,
                windows: acc.windows,
                detected: acc.detected,
                correct: acc.correct,
                errors: acc.means(),
            })
            .collect(),
        errors: total.means(),
    })
}

/// One complete model stack: a separator per speed bin (index `k - 1` holds
/// bin `k`) and the shared pose/direction network.
pub struct TrainedStack {
    pub separators: Vec<OfsModel>,
    pub ofpd: OfpdModel,
}

impl TrainedStack {
    pub fn save(&self, dir: &Path) -> Result<(), EvalError> {
        std::fs::create_dir_all(dir)?;
        for (i, sep) in self.separators.iter().enumerate() {
            sep.save(&dir.join(format!("ofs-bin{}.ckpt", i + 1)))?;
        }
        self.ofpd.save(&dir.join("ofpd.ckpt"))?;
        Ok(())
    }

    pub fn load(dir: &Path, bins: usize, height: usize, width: usize) -> Result<Self, EvalError> {
        let mut separators = Vec::with_capacity(bins);
        for k in 1..=bins {
            separators.push(OfsModel::load(&dir.join(format!("ofs-bin{k}.ckpt")))?);
        }
        let ofpd = OfpdModel::load(&dir.join("ofpd.ckpt"), height, width)?;
        Ok(TrainedStack { separators, ofpd })
    }
}

pub struct StackReports {
    pub ofs: Vec<TrainReport>,
    pub ofpd: TrainReport,
}

/// Trains every separator and the pose/direction network on one window set.
pub fn train_stack(
    train: &WindowSet,
    n_bins: usize,
    ofs_cfg: &OfsTrainCfg,
    ofpd_cfg: &OfpdTrainCfg,
) -> Result<(TrainedStack, StackReports), EvalError> {
    let mut separators = Vec::with_capacity(n_bins);
    let mut ofs_reports = Vec::with_capacity(n_bins);
    for bin in 1..=n_bins {
        let (model, report) = train_ofs(train, bin, ofs_cfg)?;
        separators.push(model);
        ofs_reports.push(report);
    }
    let (ofpd, ofpd_report) = train_ofpd(train, ofpd_cfg)?;
    Ok((
        TrainedStack { separators, ofpd },
        StackReports {
            ofs: ofs_reports,
            ofpd: ofpd_report,
        },
    ))
}

/// Evaluates a stack over a window set; classification per window is the
/// cascade's dominant flow against the programmed bin.
pub fn evaluate(
    windows: &WindowSet,
    stack: &TrainedStack,
    bins: &SpeedBinTable,
    cascade: &CascadeConfig,
) -> Result<EvalReport, EvalError> {
    evaluate_with(windows, |s| {
        predict_window(&s.volume, &stack.separators, &stack.ofpd, bins, cascade)
    })
}

/// Shared knobs of the sweep runners: how windows are cut and strided, the
/// training configs, and the cascade settings.
#[derive(Clone, Debug)]
pub struct SweepCfg {
    pub bins_per_window: usize,
    pub train_stride: usize,
    pub eval_stride: usize,
    pub ofs: OfsTrainCfg,
    pub ofpd: OfpdTrainCfg,
    pub cascade: CascadeConfig,
}

impl Default for SweepCfg {
    fn default() -> Self {
        SweepCfg {
            bins_per_window: 5,
            train_stride: 1,
            eval_stride: 1,
            ofs: OfsTrainCfg::default(),
            ofpd: OfpdTrainCfg::default(),
            cascade: CascadeConfig::default(),
        }
    }
}

/// Retrains the full stack at every `dt` (binning changes with the window
/// length, so models cannot be shared across rows) and evaluates each on the
/// held-out split.
pub fn dt_sweep(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    dts_us: &[u64],
    cfg: &SweepCfg,
) -> Result<Vec<EvalReport>, EvalError> {
    let mut rows = Vec::with_capacity(dts_us.len());
    for &dt in dts_us {
        let train = load_windows(
            manifest,
            manifest_path,
            Split::Train,
            dt,
            cfg.bins_per_window,
            cfg.train_stride,
        )?;
        let (stack, _) = train_stack(&train, manifest.bins.len(), &cfg.ofs, &cfg.ofpd)?;
        let test = load_windows(
            manifest,
            manifest_path,
            Split::Test,
            dt,
            cfg.bins_per_window,
            cfg.eval_stride,
        )?;
        rows.push(evaluate(&test, &stack, &manifest.bins, &cfg.cascade)?);
    }
    Ok(rows)
}

/// Evaluates one clean-trained stack against increasingly noisy copies of
/// the held-out split. Noise enters at evaluation time only, so every row
/// sees the same model.
pub fn noise_sweep(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    stack: &TrainedStack,
    dt_us: u64,
    rates_hz: &[f64],
    noise_seed: u64,
    cfg: &SweepCfg,
) -> Result<Vec<EvalReport>, EvalError> {
    let mut rows = Vec::with_capacity(rates_hz.len());
    for &rate in rates_hz {
        let test = load_windows_noisy(
            manifest,
            manifest_path,
            Split::Test,
            dt_us,
            cfg.bins_per_window,
            cfg.eval_stride,
            rate,
            noise_seed,
        )?;
        let mut report = evaluate(&test, stack, &manifest.bins, &cfg.cascade)?;
        report.noise_rate_hz = rate;
        rows.push(report);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use event_core::{bin_events, Event, Polarity};

    fn sample(seq: &str, bin: usize, i: u16) -> WindowSample {
        let events = vec![
            Event::new(i % 8, 2, 10, Polarity::On),
            Event::new(i % 8, 3, 60, Polarity::Off),
        ];
        WindowSample {
            seq_id: seq.into(),
            bin,
            volume: bin_events(&events, 0, 100, 2, 8, 8).unwrap(),
            target_fg: vec![0; 64],
            pose_px: (4.0 + i as f64, 3.0),
            dir_rad: 0.3,
            speed: 10.0 + bin as f64,
        }
    }

    fn set(samples: Vec<WindowSample>) -> WindowSet {
        WindowSet {
            height: 8,
            width: 8,
            bins_per_window: 2,
            dt_us: 100,
            samples,
        }
    }

    fn oracle(s: &WindowSample) -> Result<WindowPrediction, EvalError> {
        Ok(WindowPrediction {
            flow: Some(ObjectFlow {
                bin: s.bin,
                support: 1,
                pose_px: s.pose_px,
                dir_rad: s.dir_rad,
                speed: s.speed,
            }),
            spikes: 0,
        })
    }

    #[test]
    fn oracle_predictions_give_a_zero_error_row() {
        let windows = set(vec![
            sample("a", 1, 0),
            sample("a", 1, 1),
            sample("b", 2, 0),
        ]);
        let report = evaluate_with(&windows, oracle).unwrap();
        assert_eq!(report.windows, 3);
        assert_eq!(report.detected, 3);
        assert_eq!(report.correct, 3);
        assert_eq!(report.accuracy(), 1.0);
        assert_eq!(report.errors, Some(WindowErrors::ZERO));
        assert_eq!(report.per_sequence.len(), 2);
        assert_eq!(report.per_bin.len(), 2);
        assert_eq!(report.per_bin[1].windows, 1);
    }

    #[test]
    fn undetected_windows_count_as_misclassified() {
        let windows = set(vec![sample("a", 1, 0), sample("a", 1, 1)]);
        let mut flip = false;
        let report = evaluate_with(&windows, |s| {
            flip = !flip;
            if flip {
                oracle(s)
            } else {
                Ok(WindowPrediction {
                    flow: None,
                    spikes: 3,
                })
            }
        })
        .unwrap();
        assert_eq!(report.windows, 2);
        assert_eq!(report.detected, 1);
        assert_eq!(report.correct, 1);
        assert_eq!(report.accuracy(), 0.5);
        assert_eq!(report.mean_spikes, 1.5);
        assert_eq!(report.errors, Some(WindowErrors::ZERO));
    }

    #[test]
    fn aggregate_errors_are_means_of_window_errors() {
        let windows = set((0..7).map(|i| sample("a", 1, i)).collect());
        let mut per_window = Vec::new();
        let report = evaluate_with(&windows, |s| {
            let off = per_window.len() as f64;
            let pred = ObjectFlow {
                bin: s.bin,
                support: 1,
                pose_px: (s.pose_px.0 + off, s.pose_px.1),
                dir_rad: s.dir_rad + 0.01 * off,
                speed: s.speed - off,
            };
            per_window.push(window_errors(&pred, s.pose_px, s.dir_rad, s.speed));
            Ok(WindowPrediction {
                flow: Some(pred),
                spikes: 0,
            })
        })
        .unwrap();
        let n = per_window.len() as f64;
        let mean = |f: fn(&WindowErrors) -> f64| per_window.iter().map(f).sum::<f64>() / n;
        let e = report.errors.unwrap();
        assert_eq!(e.pix_e, mean(|w| w.pix_e));
        assert_eq!(e.dir_e, mean(|w| w.dir_e));
        assert_eq!(e.speed_e, mean(|w| w.speed_e));
    }

    #[test]
    fn misclassified_windows_still_score_errors() {
        let windows = set(vec![sample("a", 2, 0)]);
        let report = evaluate_with(&windows, |s| {
            let mut p = oracle(s)?;
            p.flow.as_mut().unwrap().bin = 1;
            Ok(p)
        })
        .unwrap();
        assert_eq!(report.correct, 0);
        assert_eq!(report.detected, 1);
        assert_eq!(report.per_bin[1].detected, 1);
        assert_eq!(report.per_bin[1].correct, 0);
    }

    #[test]
    fn empty_window_set_is_an_error() {
        assert!(matches!(
            evaluate_with(&set(vec![]), oracle),
            Err(EvalError::InvalidConfig(_))
        ));
    }
}
