use std::fs::File;
use std::path::Path;

use event_core::{bin_events, read_events, BinnedVolume};
use neuro_core::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sim_cam::{inject_noise, nearest_row, read_gt_csv, resolve_path, DatasetManifest, Split};

use crate::error::ModelError;

/// One binned window cut from a sequence, with everything both trainers need:
/// the raw count volume, the signal-pixel mask, and the ground truth at the
/// window midpoint.
pub struct WindowSample {
    pub seq_id: String,
    /// Programmed speed bin of the sequence the window came from, 1-based.
    pub bin: usize,
    pub volume: BinnedVolume,
    /// `height * width` bytes, 1 where the window saw a signal event. Events
    /// far from the ground-truth centroid (injected noise) are excluded.
    pub target_fg: Vec<u8>,
    pub pose_px: (f64, f64),
    pub dir_rad: f64,
    pub speed: f64,
}

/// All windows of one split binned at one `dt`.
pub struct WindowSet {
    pub height: usize,
    pub width: usize,
    pub bins_per_window: usize,
    pub dt_us: u64,
    pub samples: Vec<WindowSample>,
}

impl WindowSet {
    pub fn of_bin(&self, bin: usize) -> impl Iterator<Item = &WindowSample> {
        self.samples.iter().filter(move |s| s.bin == bin)
    }
}

/// Cuts every sequence of `split` into `duration / dt` windows (keeping every
/// `window_stride`-th one), bins each into `bins_per_window` slices, and
/// attaches midpoint ground truth. Windows that saw no events are dropped.
pub fn load_windows(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    split: Split,
    dt_us: u64,
    bins_per_window: usize,
    window_stride: usize,
) -> Result<WindowSet, ModelError> {
    load_windows_noisy(
        manifest,
        manifest_path,
        split,
        dt_us,
        bins_per_window,
        window_stride,
        0.0,
        0,
    )
}

/// `load_windows` with extra uniform background noise mixed into each
/// sequence before windowing — for robustness studies on models trained
/// clean. The noise stream is deterministic in (sequence, `noise_seed`) and
/// decoupled from the generation-time RNG, so it never replays noise already
/// baked into the dataset.
#[allow(clippy::too_many_arguments)]
pub fn load_windows_noisy(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    split: Split,
    dt_us: u64,
    bins_per_window: usize,
    window_stride: usize,
    noise_rate_hz: f64,
    noise_seed: u64,
) -> Result<WindowSet, ModelError> {
    if dt_us == 0 || bins_per_window == 0 || window_stride == 0 {
        return Err(ModelError::InvalidConfig(format!(
            "dt ({dt_us} us), bins per window ({bins_per_window}), and stride \
             ({window_stride}) must all be positive"
        )));
    }
    if dt_us > manifest.duration_us {
        return Err(ModelError::InvalidConfig(format!(
            "window of {dt_us} us does not fit in a {} us sequence",
            manifest.duration_us
        )));
    }

    let cam = manifest.camera();
    let height = manifest.height as usize;
    let width = manifest.width as usize;
    let half_px = manifest.shape_half_m * cam.px_per_m();
    let n_windows = (manifest.duration_us / dt_us) as usize;

    let mut samples = Vec::new();
    for entry in manifest.split(split) {
        let (_, mut events) = read_events(&resolve_path(manifest_path, &entry.events_path))?;
        if noise_rate_hz > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(entry.seed.rotate_left(32) ^ noise_seed);
            inject_noise(
                &mut events,
                noise_rate_hz,
                manifest.duration_us,
                manifest.width,
                manifest.height,
                &mut rng,
            );
        }
        let gt_file = File::open(resolve_path(manifest_path, &entry.gt_path))?;
        let rows = read_gt_csv(gt_file)?;

        for w in (0..n_windows).step_by(window_stride) {
            let t0 = w as u64 * dt_us;
            let volume = bin_events(&events, t0, dt_us, bins_per_window, height, width)?;
            if volume.total() == 0 {
                continue;
            }
            let Some(row) = nearest_row(&rows, t0 + dt_us / 2) else {
                continue;
            };
            // Signal pixels can be at most a circumradius plus half the
            // window's sweep from the midpoint centroid; everything farther
            // out is background noise.
            let keep_r = 1.5 * half_px + row.speed * cam.px_per_m() * (dt_us as f64 / 2e6) + 3.0;
            let target_fg = signal_mask(&volume, (row.cx_px, row.cy_px), keep_r);
            samples.push(WindowSample {
                seq_id: entry.id.clone(),
                bin: entry.bin,
                volume,
                target_fg,
                pose_px: (row.cx_px, row.cy_px),
                dir_rad: row.dir_rad,
                speed: row.speed,
            });
        }
    }

    Ok(WindowSet {
        height,
        width,
        bins_per_window,
        dt_us,
        samples,
    })
}

fn signal_mask(volume: &BinnedVolume, center: (f64, f64), keep_r: f64) -> Vec<u8> {
    let occ = volume.window_occupancy();
    let r2 = keep_r * keep_r;
    let mut mask = vec![0u8; occ.len()];
    for y in 0..volume.height {
        for x in 0..volume.width {
            let i = y * volume.width + x;
            if occ[i] == 0.0 {
                continue;
            }
            let dx = (x as f64 + 0.5) - center.0;
            let dy = (y as f64 + 0.5) - center.1;
            if dx * dx + dy * dy <= r2 {
                mask[i] = 1;
            }
        }
    }
    mask
}

/// Per-polarity occupancy of one bin as a `[2, H, W]` tensor, the input of
/// one separator time step.
pub fn polarity_input(volume: &BinnedVolume, bin: usize) -> Tensor {
    Tensor::from_vec(
        &[2, volume.height, volume.width],
        volume.bin_occupancy(bin),
    )
}

/// Signed per-bin occupancy stacked into a `[B, H, W]` tensor, optionally
/// restricted to a pixel mask — the pose/direction network's view of one
/// object's events.
pub fn signed_input(volume: &BinnedVolume, mask: Option<&[u8]>) -> Tensor {
    let hw = volume.height * volume.width;
    let mut data = Vec::with_capacity(volume.bins * hw);
    for b in 0..volume.bins {
        let mut occ = volume.bin_occupancy_signed(b);
        if let Some(m) = mask {
            for (o, &keep) in occ.iter_mut().zip(m) {
                if keep == 0 {
                    *o = 0.0;
                }
            }
        }
        data.extend_from_slice(&occ);
    }
    Tensor::from_vec(&[volume.bins, volume.height, volume.width], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use event_core::{Event, Polarity};

    fn volume_with(events: &[Event]) -> BinnedVolume {
        bin_events(events, 0, 100, 2, 4, 4).unwrap()
    }

    #[test]
    fn signal_mask_keeps_near_and_drops_far() {
        let v = volume_with(&[
            Event::new(1, 1, 10, Polarity::On),
            Event::new(3, 3, 10, Polarity::Off),
        ]);
        let mask = signal_mask(&v, (1.5, 1.5), 1.0);
        assert_eq!(mask[4 + 1], 1);
        assert_eq!(mask[3 * 4 + 3], 0);
    }

    #[test]
    fn polarity_input_splits_channels() {
        let v = volume_with(&[
            Event::new(0, 0, 10, Polarity::Off),
            Event::new(1, 0, 10, Polarity::On),
        ]);
        let x = polarity_input(&v, 0);
        assert_eq!(x.shape(), &[2, 4, 4]);
        assert_eq!(x.data()[0], 1.0); // OFF channel, pixel (0,0)
        assert_eq!(x.data()[16 + 1], 1.0); // ON channel, pixel (1,0)
        assert_eq!(x.data()[1], 0.0);
    }

    #[test]
    fn signed_input_respects_mask() {
        let v = volume_with(&[
            Event::new(0, 0, 10, Polarity::On),
            Event::new(1, 0, 10, Polarity::Off),
        ]);
        let unmasked = signed_input(&v, None);
        assert_eq!(unmasked.shape(), &[2, 4, 4]);
        assert_eq!(unmasked.data()[0], 1.0);
        assert_eq!(unmasked.data()[1], -1.0);

        let mask = {
            let mut m = vec![0u8; 16];
            m[0] = 1;
            m
        };
        let masked = signed_input(&v, Some(&mask));
        assert_eq!(masked.data()[0], 1.0);
        assert_eq!(masked.data()[1], 0.0);
    }
}
