use event_core::{Event, Polarity};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::bins::SpeedBinTable;
use crate::camera::CameraModel;
use crate::error::SimError;
use crate::gt::GtRow;
use crate::shapes::ShapeKind;
use crate::trajectory::TrajectoryKind;

/// Scene-plane intensities: bright shape over a dim background.
pub const FG_INTENSITY: f64 = 1.0;
pub const BG_INTENSITY: f64 = 0.2;

/// Everything needed to synthesize one sequence deterministically.
#[derive(Clone, Debug)]
pub struct SequenceDef {
    pub id: String,
    pub shape: ShapeKind,
    pub trajectory: TrajectoryKind,
    /// Rotation of the whole path in the scene plane, degrees.
    pub orient_deg: f64,
    /// Traverse the loop backwards.
    pub reverse: bool,
    /// 1-based speed bin the sequence is flown in.
    pub bin: usize,
    /// Starting point along the loop, in laps.
    pub phase: f64,
    pub seed: u64,
    pub duration_us: u64,
    pub sample_period_us: u64,
    /// Uniform background noise rate over the whole sensor, events/s.
    pub noise_rate_hz: f64,
    /// Contrast threshold on |delta log intensity|.
    pub theta: f64,
    /// Shape half-extent in meters.
    pub shape_half_m: f64,
}

pub struct Sequence {
    pub events: Vec<Event>,
    pub gt: Vec<GtRow>,
    pub lap_time_s: f64,
}

/// Renders the moving shape at every sample tick and emits an event wherever
/// a pixel's log intensity moved by at least `theta` since the previous
/// tick. With the binary intensities used here that is exactly the set of
/// pixels entering (ON) or leaving (OFF) the silhouette — evaluated only
/// inside the bounding boxes of the two silhouette positions.
pub fn generate_sequence(
    def: &SequenceDef,
    cam: &CameraModel,
    bins: &SpeedBinTable,
) -> Result<Sequence, SimError> {
    validate(def, bins)?;
    let (lo, hi) = bins.programmed_bounds(def.bin);
    let lap_time_s = def.trajectory.lap_time_s(lo, hi);
    let sense = if def.reverse { -1.0 } else { 1.0 };
    let (rot_cos, rot_sin) = {
        let phi = def.orient_deg.to_radians();
        (phi.cos(), phi.sin())
    };
    let rotate = |y: f64, z: f64| (rot_cos * y - rot_sin * z, rot_sin * y + rot_cos * z);

    let n_samples = def.duration_us / def.sample_period_us;
    let ppm = cam.px_per_m();
    let pad_px = (def.shape_half_m * ppm).ceil() as i64 + 2;
    let crossing = (FG_INTENSITY / BG_INTENSITY).ln().abs() >= def.theta;

    let mut events = Vec::new();
    let mut gt = Vec::with_capacity(n_samples as usize + 1);
    let mut prev_center = (0.0, 0.0);
    let mut candidates: Vec<(u16, u16)> = Vec::new();

    for k in 0..=n_samples {
        let t_us = k * def.sample_period_us;
        let s = def.phase + sense * (t_us as f64 * 1e-6) / lap_time_s;
        let (py, pz) = def.trajectory.position(s);
        let center = rotate(py, pz);
        let (qy, qz) = def.trajectory.velocity_ds(s);
        let (vy, vz) = rotate(qy * sense / lap_time_s, qz * sense / lap_time_s);
        let speed = vy.hypot(vz);
        let observed_bin = bins.classify(speed)?;
        if observed_bin != def.bin {
            return Err(SimError::InvalidConfig(format!(
                "sequence {}: sample at {t_us} us runs {speed:.3} m/s (bin {observed_bin}), \
                 expected bin {}",
                def.id, def.bin
            )));
        }
        let (cx_px, cy_px) = cam.project(center.0, center.1);
        gt.push(GtRow {
            t_us,
            cx_px,
            cy_px,
            vx: 0.0,
            vy,
            vz,
            speed,
            dir_rad: (-vz).atan2(vy),
            bin: def.bin,
        });

        if k > 0 && crossing {
            collect_candidates(cam, prev_center, center, pad_px, &mut candidates);
            for &(y, x) in &candidates {
                let (sy, sz) = cam.pixel_center_scene(x, y);
                let was = def
                    .shape
                    .contains(sy - prev_center.0, sz - prev_center.1, def.shape_half_m);
                let is = def
                    .shape
                    .contains(sy - center.0, sz - center.1, def.shape_half_m);
                if was != is {
                    let p = if is { Polarity::On } else { Polarity::Off };
                    events.push(Event::new(x, y, t_us, p));
                }
            }
        }
        prev_center = center;
    }

    Ok(Sequence {
        events,
        gt,
        lap_time_s,
    })
}

fn validate(def: &SequenceDef, bins: &SpeedBinTable) -> Result<(), SimError> {
    if def.sample_period_us == 0 || !def.duration_us.is_multiple_of(def.sample_period_us) {
        return Err(SimError::InvalidConfig(format!(
            "duration {} us must be a multiple of the sample period {} us",
            def.duration_us, def.sample_period_us
        )));
    }
    if def.bin == 0 || def.bin > bins.len() {
        return Err(SimError::InvalidConfig(format!(
            "bin {} outside table of {} bins",
            def.bin,
            bins.len()
        )));
    }
    if def.shape_half_m.is_nan() || def.shape_half_m <= 0.0 {
        return Err(SimError::InvalidConfig("shape half-extent must be positive".into()));
    }
    if def.noise_rate_hz.is_nan() || def.noise_rate_hz < 0.0 {
        return Err(SimError::InvalidConfig("noise rate must be nonnegative".into()));
    }
    if !def.phase.is_finite() || def.theta.is_nan() || def.theta <= 0.0 {
        return Err(SimError::InvalidConfig("phase/theta must be finite".into()));
    }
    Ok(())
}

/// Union of the two silhouette bounding boxes, clamped to the sensor,
/// ordered by (y, x) and deduplicated.
fn collect_candidates(
    cam: &CameraModel,
    a: (f64, f64),
    b: (f64, f64),
    pad_px: i64,
    out: &mut Vec<(u16, u16)>,
) {
    out.clear();
    for &(cy, cz) in &[a, b] {
        let (u, v) = cam.project(cy, cz);
        let x_lo = (u.floor() as i64 - pad_px).max(0);
        let x_hi = (u.ceil() as i64 + pad_px).min(cam.width as i64 - 1);
        let y_lo = (v.floor() as i64 - pad_px).max(0);
        let y_hi = (v.ceil() as i64 + pad_px).min(cam.height as i64 - 1);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                out.push((y as u16, x as u16));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// Adds uniform background noise: a Poisson-distributed number of events at
/// uniform pixels, times, and polarities, then restores time order. Stable
/// sort keeps the relative order of signal events.
pub fn inject_noise<R: Rng>(
    events: &mut Vec<Event>,
    rate_hz: f64,
    duration_us: u64,
    width: u16,
    height: u16,
    rng: &mut R,
) {
    if rate_hz <= 0.0 || duration_us == 0 {
        return;
    }
    let lambda = rate_hz * duration_us as f64 * 1e-6;
    let count = Poisson::new(lambda).unwrap().sample(rng) as u64;
    for _ in 0..count {
        let x = rng.gen_range(0..width);
        let y = rng.gen_range(0..height);
        let t = rng.gen_range(0..duration_us);
        let p = if rng.gen::<bool>() {
            Polarity::On
        } else {
            Polarity::Off
        };
        events.push(Event::new(x, y, t, p));
    }
    events.sort_by_key(|e| e.t);
}

/// Interleaves several per-object streams into one scene stream.
pub fn merge_streams(streams: &[&[Event]]) -> Vec<Event> {
    let mut all: Vec<Event> = streams.iter().flat_map(|s| s.iter().copied()).collect();
    all.sort_by_key(|e| e.t);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn camera() -> CameraModel {
        CameraModel::new(64, 64, 60.0, 0.2).unwrap()
    }

    fn base_def() -> SequenceDef {
        SequenceDef {
            id: "t".into(),
            shape: ShapeKind::Circle,
            trajectory: TrajectoryKind::Circle,
            orient_deg: 0.0,
            reverse: false,
            bin: 2,
            phase: 0.125,
            seed: 7,
            duration_us: 20_000,
            sample_period_us: 50,
            noise_rate_hz: 0.0,
            theta: 0.2,
            shape_half_m: 0.016,
        }
    }

    #[test]
    fn events_are_sorted_and_in_sensor() {
        let seq = generate_sequence(&base_def(), &camera(), &SpeedBinTable::default_four()).unwrap();
        assert!(!seq.events.is_empty());
        let mut prev = 0;
        for e in &seq.events {
            assert!(e.t >= prev);
            assert!(e.x < 64 && e.y < 64);
            prev = e.t;
        }
    }

    #[test]
    fn events_stay_inside_swept_bounding_box() {
        let def = base_def();
        let cam = camera();
        let seq = generate_sequence(&def, &cam, &SpeedBinTable::default_four()).unwrap();
        // every GT center, padded by the shape radius + 2 px, must cover all
        // events emitted at the matching tick
        let half_px = def.shape_half_m * cam.px_per_m() + 2.0;
        for e in &seq.events {
            let near = seq
                .gt
                .iter()
                .filter(|r| r.t_us.abs_diff(e.t) <= def.sample_period_us)
                .any(|r| {
                    (e.x as f64 + 0.5 - r.cx_px).abs() <= half_px + 1.0
                        && (e.y as f64 + 0.5 - r.cy_px).abs() <= half_px + 1.0
                });
            assert!(near, "event {e:?} far from the silhouette");
        }
    }

    #[test]
    fn gt_speeds_stay_inside_the_nominal_bin() {
        for bin in 1..=4 {
            let def = SequenceDef {
                bin,
                trajectory: TrajectoryKind::Lemniscate,
                ..base_def()
            };
            let seq =
                generate_sequence(&def, &camera(), &SpeedBinTable::default_four()).unwrap();
            let (lo, hi) = SpeedBinTable::default_four().bounds(bin);
            for r in &seq.gt {
                assert!(r.speed >= lo && r.speed < hi);
                assert_eq!(r.bin, bin);
            }
        }
    }

    #[test]
    fn threshold_above_contrast_silences_the_camera() {
        let def = SequenceDef {
            theta: 1.7, // contrast is ln(5) ~ 1.609
            ..base_def()
        };
        let seq = generate_sequence(&def, &camera(), &SpeedBinTable::default_four()).unwrap();
        assert!(seq.events.is_empty());
        assert_eq!(seq.gt.len(), 401);
    }

    #[test]
    fn polarities_balance_over_a_closed_loop() {
        let seq = generate_sequence(&base_def(), &camera(), &SpeedBinTable::default_four()).unwrap();
        let on = seq.events.iter().filter(|e| e.p == Polarity::On).count();
        let off = seq.events.len() - on;
        let ratio = on as f64 / off.max(1) as f64;
        assert!(ratio > 0.8 && ratio < 1.25, "on/off = {on}/{off}");
    }

    #[test]
    fn same_def_is_bit_identical() {
        let cam = camera();
        let bins = SpeedBinTable::default_four();
        let a = generate_sequence(&base_def(), &cam, &bins).unwrap();
        let b = generate_sequence(&base_def(), &cam, &bins).unwrap();
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn reverse_flips_direction_at_time_zero() {
        let fwd = generate_sequence(&base_def(), &camera(), &SpeedBinTable::default_four())
            .unwrap();
        let def = SequenceDef {
            reverse: true,
            ..base_def()
        };
        let rev = generate_sequence(&def, &camera(), &SpeedBinTable::default_four()).unwrap();
        assert!((fwd.gt[0].vy + rev.gt[0].vy).abs() < 1e-9);
        assert!((fwd.gt[0].vz + rev.gt[0].vz).abs() < 1e-9);
    }

    #[test]
    fn noise_injection_is_deterministic_and_sorted() {
        let mut a = vec![Event::new(5, 5, 100, Polarity::On)];
        let mut b = a.clone();
        let mut rng_a = ChaCha8Rng::seed_from_u64(3);
        let mut rng_b = ChaCha8Rng::seed_from_u64(3);
        inject_noise(&mut a, 50_000.0, 20_000, 64, 64, &mut rng_a);
        inject_noise(&mut b, 50_000.0, 20_000, 64, 64, &mut rng_b);
        assert_eq!(a, b);
        assert!(a.len() > 500); // ~1000 expected
        assert!(a.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn merged_streams_preserve_order() {
        let s1 = vec![Event::new(1, 1, 10, Polarity::On), Event::new(1, 1, 30, Polarity::Off)];
        let s2 = vec![Event::new(2, 2, 20, Polarity::On)];
        let merged = merge_streams(&[&s1, &s2]);
        let ts: Vec<u64> = merged.iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![10, 20, 30]);
    }
}
