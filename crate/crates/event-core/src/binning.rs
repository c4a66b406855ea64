use crate::{Event, EventError};

/// `B` time-binned, 2-polarity-channel count grids for one window.
///
/// Bin `b` covers timestamps in `[t_start + b*dt/B, t_start + (b+1)*dt/B)`
/// up to integer rounding of the bin rule; the window itself is half-open,
/// `[t_start, t_start + dt)`. Channel 0 counts OFF events, channel 1 ON.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinnedVolume {
    /// Flat counts, laid out `[bin][polarity][row][col]`.
    data: Vec<u32>,
    pub bins: usize,
    pub height: usize,
    pub width: usize,
    pub t_start: u64,
    pub dt: u64,
}

impl BinnedVolume {
    /// All-zero volume with the given geometry.
    pub fn zeros(bins: usize, height: usize, width: usize, t_start: u64, dt: u64) -> Self {
        BinnedVolume {
            data: vec![0; bins * 2 * height * width],
            bins,
            height,
            width,
            t_start,
            dt,
        }
    }

    #[inline]
    fn idx(&self, bin: usize, channel: usize, y: usize, x: usize) -> usize {
        ((bin * 2 + channel) * self.height + y) * self.width + x
    }

    /// Count at one cell.
    #[inline]
    pub fn count(&self, bin: usize, channel: usize, y: usize, x: usize) -> u32 {
        self.data[self.idx(bin, channel, y, x)]
    }

    #[inline]
    pub fn add(&mut self, bin: usize, channel: usize, y: usize, x: usize) {
        let i = self.idx(bin, channel, y, x);
        self.data[i] += 1;
    }

    /// Total number of events accumulated in the volume.
    pub fn total(&self) -> u64 {
        self.data.iter().map(|&c| c as u64).sum()
    }

    /// Raw count slice, `[bin][polarity][row][col]` order.
    pub fn raw(&self) -> &[u32] {
        &self.data
    }

    /// Counts of one bin as a `[polarity][row][col]` slice.
    pub fn bin_slice(&self, bin: usize) -> &[u32] {
        let stride = 2 * self.height * self.width;
        &self.data[bin * stride..(bin + 1) * stride]
    }

    /// Binary occupancy of one bin, polarity channels kept: `1.0` where the
    /// cell saw at least one event. Layout `[polarity][row][col]`.
    pub fn bin_occupancy(&self, bin: usize) -> Vec<f64> {
        self.bin_slice(bin)
            .iter()
            .map(|&c| if c > 0 { 1.0 } else { 0.0 })
            .collect()
    }

    /// Binary occupancy of one bin with polarities merged, `[row][col]`.
    pub fn bin_occupancy_merged(&self, bin: usize) -> Vec<f64> {
        let hw = self.height * self.width;
        let s = self.bin_slice(bin);
        (0..hw)
            .map(|i| if s[i] + s[hw + i] > 0 { 1.0 } else { 0.0 })
            .collect()
    }

    /// Signed occupancy of one bin, `[row][col]`: `+1` where only ON events
    /// landed, `-1` where only OFF, `0` where neither or both. Keeps the
    /// leading-edge/trailing-edge distinction a merged occupancy throws away.
    pub fn bin_occupancy_signed(&self, bin: usize) -> Vec<f64> {
        let hw = self.height * self.width;
        let s = self.bin_slice(bin);
        (0..hw)
            .map(|i| {
                let on = s[hw + i] > 0;
                let off = s[i] > 0;
                match (on, off) {
                    (true, false) => 1.0,
                    (false, true) => -1.0,
                    _ => 0.0,
                }
            })
            .collect()
    }

    /// Copy with counts kept only where `keep` is nonzero. `keep` is one
    /// byte per pixel, `[row][col]`, applied to every bin and polarity.
    ///
    /// # Panics
    /// Panics if `keep.len() != height * width`.
    pub fn masked(&self, keep: &[u8]) -> BinnedVolume {
        let hw = self.height * self.width;
        assert_eq!(keep.len(), hw, "mask must cover the pixel grid");
        let mut out = self.clone();
        for chunk in out.data.chunks_mut(hw) {
            for (c, &k) in chunk.iter_mut().zip(keep) {
                if k == 0 {
                    *c = 0;
                }
            }
        }
        out
    }

    /// Binary occupancy over the whole window with polarities merged.
    pub fn window_occupancy(&self) -> Vec<f64> {
        let hw = self.height * self.width;
        let mut occ = vec![0.0; hw];
        for b in 0..self.bins {
            let s = self.bin_slice(b);
            for i in 0..hw {
                if s[i] + s[hw + i] > 0 {
                    occ[i] = 1.0;
                }
            }
        }
        occ
    }
}

/// Discretize the in-window slice of an ordered event stream into `bins`
/// per-polarity count grids.
///
/// An event with timestamp `t` lands in bin `floor((t - t_start) * B / dt)`,
/// clamped to `B - 1` at the right edge. Events outside
/// `[t_start, t_start + dt)` are ignored; in-window events outside the
/// `height x width` grid are an error naming the offending stream index.
pub fn bin_events(
    events: &[Event],
    t_start: u64,
    dt: u64,
    bins: usize,
    height: usize,
    width: usize,
) -> Result<BinnedVolume, EventError> {
    if dt == 0 || bins == 0 {
        return Err(EventError::InvalidWindow { dt_us: dt, bins });
    }
    let mut volume = BinnedVolume::zeros(bins, height, width, t_start, dt);
    let t_end = t_start + dt;
    for (index, ev) in events.iter().enumerate() {
        if ev.t < t_start || ev.t >= t_end {
            continue;
        }
        if (ev.x as usize) >= width || (ev.y as usize) >= height {
            return Err(EventError::OutOfGrid {
                index,
                x: ev.x,
                y: ev.y,
                width,
                height,
            });
        }
        // u128 keeps the product exact for any u64 timestamp span.
        let bin = (((ev.t - t_start) as u128 * bins as u128) / dt as u128) as usize;
        let bin = bin.min(bins - 1);
        volume.add(bin, ev.p.channel(), ev.y as usize, ev.x as usize);
    }
    Ok(volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Polarity;

    #[test]
    fn empty_stream_gives_zero_volume() {
        let v = bin_events(&[], 0, 1000, 5, 4, 6).unwrap();
        assert_eq!(v.bins, 5);
        assert_eq!(v.height, 4);
        assert_eq!(v.width, 6);
        assert_eq!(v.total(), 0);
        assert!(v.raw().iter().all(|&c| c == 0));
    }

    #[test]
    fn event_at_window_start_lands_in_bin_zero() {
        let ev = Event::new(3, 2, 100, Polarity::On);
        let v = bin_events(&[ev], 100, 500, 5, 4, 6).unwrap();
        assert_eq!(v.count(0, 1, 2, 3), 1);
        assert_eq!(v.total(), 1);
    }

    #[test]
    fn last_microsecond_clamps_into_final_bin() {
        let ev = Event::new(0, 0, 599, Polarity::Off);
        let v = bin_events(&[ev], 100, 500, 5, 2, 2).unwrap();
        assert_eq!(v.count(4, 0, 0, 0), 1);
    }

    #[test]
    fn window_is_half_open() {
        let evs = [
            Event::new(0, 0, 99, Polarity::On),
            Event::new(0, 0, 100, Polarity::On),
            Event::new(0, 0, 599, Polarity::On),
            Event::new(0, 0, 600, Polarity::On),
        ];
        let v = bin_events(&evs, 100, 500, 5, 1, 1).unwrap();
        assert_eq!(v.total(), 2);
    }

    #[test]
    fn out_of_grid_event_names_its_index() {
        let evs = [
            Event::new(0, 0, 10, Polarity::On),
            Event::new(9, 0, 20, Polarity::On),
        ];
        let err = bin_events(&evs, 0, 100, 2, 4, 4).unwrap_err();
        match err {
            EventError::OutOfGrid { index, x, .. } => {
                assert_eq!(index, 1);
                assert_eq!(x, 9);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn zero_dt_rejected() {
        assert!(matches!(
            bin_events(&[], 0, 0, 5, 4, 4),
            Err(EventError::InvalidWindow { .. })
        ));
    }

    // Brute-force oracle: assign each event independently by the bin rule and
    // compare totals per bin against the implementation.
    #[test]
    fn uniform_events_match_per_event_oracle() {
        let dt = 5000u64;
        let b = 5usize;
        // 1000 events spread deterministically over [0, dt).
        let events: Vec<Event> = (0..1000)
            .map(|i| {
                let t = (i as u64 * dt) / 1000;
                let p = if i % 3 == 0 { Polarity::Off } else { Polarity::On };
                Event::new((i % 16) as u16, (i % 12) as u16, t, p)
            })
            .collect();

        let mut oracle = vec![0u64; b];
        for ev in &events {
            let bin = ((ev.t as u128 * b as u128) / dt as u128) as usize;
            oracle[bin.min(b - 1)] += 1;
        }

        let v = bin_events(&events, 0, dt, b, 12, 16).unwrap();
        for (bin, want) in oracle.iter().enumerate() {
            let total: u64 = v.bin_slice(bin).iter().map(|&c| c as u64).sum();
            assert_eq!(total, *want, "bin {bin}");
        }
        assert_eq!(v.total(), 1000);
    }

    #[test]
    fn occupancy_views_are_binary() {
        let evs = [
            Event::new(1, 1, 0, Polarity::On),
            Event::new(1, 1, 1, Polarity::On),
            Event::new(1, 1, 2, Polarity::Off),
        ];
        let v = bin_events(&evs, 0, 10, 1, 3, 3).unwrap();
        let occ = v.bin_occupancy_merged(0);
        assert_eq!(occ.iter().filter(|&&o| o == 1.0).count(), 1);
        assert_eq!(v.count(0, 1, 1, 1), 2);
        let window = v.window_occupancy();
        assert_eq!(window, occ);
    }

    #[test]
    fn masked_zeroes_every_bin_and_channel() {
        let evs = [
            Event::new(0, 0, 1, Polarity::On),
            Event::new(1, 0, 1, Polarity::Off),
            Event::new(0, 0, 6, Polarity::Off),
        ];
        let v = bin_events(&evs, 0, 10, 2, 1, 2).unwrap();
        let kept = v.masked(&[1, 0]);
        assert_eq!(kept.total(), 2);
        assert_eq!(kept.count(0, 1, 0, 0), 1);
        assert_eq!(kept.count(1, 0, 0, 0), 1);
        assert_eq!(kept.count(0, 0, 0, 1), 0);
        // keep-everything mask is the identity
        assert_eq!(v.masked(&[1, 1]), v);
    }

    #[test]
    fn signed_occupancy_distinguishes_polarities() {
        let evs = [
            Event::new(0, 0, 0, Polarity::On),
            Event::new(1, 0, 0, Polarity::Off),
            Event::new(2, 0, 0, Polarity::On),
            Event::new(2, 0, 1, Polarity::Off),
        ];
        let v = bin_events(&evs, 0, 10, 1, 1, 3).unwrap();
        assert_eq!(v.bin_occupancy_signed(0), vec![1.0, -1.0, 0.0]);
    }
}
