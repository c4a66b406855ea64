use event_core::BinnedVolume;
use models::{signed_input, OfpdModel, OfsModel};
use sim_cam::SpeedBinTable;

use crate::error::CascadeError;
use crate::morphology::{close, invert};

#[derive(Clone, Copy, Debug)]
pub struct CascadeConfig {
    /// Minimum spiking pixels for a stage to report an object.
    pub min_support: usize,
    /// Structuring element of the closing that groups spikes into a region.
    pub close_kernel: usize,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            min_support: 10,
            close_kernel: 5,
        }
    }
}

/// One detected object: the claiming stage's speed bin, its spike support,
/// and the regressed pose and direction. The speed estimate is the bin's
/// representative speed.
#[derive(Clone, Debug)]
pub struct ObjectFlow {
    pub bin: usize,
    pub support: usize,
    pub pose_px: (f64, f64),
    pub dir_rad: f64,
    pub speed: f64,
}

/// Everything the invariant checks need: per-stage event totals and spike
/// rasters, plus the event pixels each reported flow claimed.
#[derive(Clone, Debug)]
pub struct CascadeTrace {
    /// `N + 1` entries: the event total entering each stage (fastest first)
    /// and the leftover after the last.
    pub input_totals: Vec<u64>,
    /// Spike mask of each stage in run order (bin N down to 1).
    pub spike_masks: Vec<Vec<u8>>,
    /// Occupancy of the events claimed by each reported flow, parallel to
    /// `flows`.
    pub claimed: Vec<Vec<u8>>,
}

#[derive(Debug)]
pub struct CascadeOutcome {
    pub flows: Vec<ObjectFlow>,
    pub trace: CascadeTrace,
}

impl CascadeOutcome {
    /// Single-object reading of the outcome: the fastest flow whose claim
    /// holds at least a third of the largest claim. A stage that detects an
    /// object may still claim it only partially, and the slower stages
    /// behind it pick up the remainder — that trailing claim must not
    /// outvote the stage that actually found the object. A spurious fast
    /// claim, conversely, stays far below the real stage's claim.
    pub fn dominant_flow(&self) -> Option<&ObjectFlow> {
        let claims: Vec<usize> = self
            .trace
            .claimed
            .iter()
            .map(|c| c.iter().map(|&v| v as usize).sum())
            .collect();
        let top = claims.iter().copied().max()?;
        self.flows
            .iter()
            .zip(&claims)
            .filter(|(_, &c)| 3 * c >= top)
            .max_by_key(|(f, _)| f.bin)
            .map(|(f, _)| f)
    }

    pub fn dominant_bin(&self) -> Option<usize> {
        self.dominant_flow().map(|f| f.bin)
    }
}

/// Runs the separator cascade from the fastest bin down. Each stage spikes
/// on the traffic of its own speed bin, claims the closed spike region, and
/// the region's events are removed before the next (slower) stage — so no
/// event is ever attributed twice and stage `k` never sees traffic a faster
/// stage already explained.
pub fn cascade_infer(
    volume: &BinnedVolume,
    separators: &[OfsModel],
    ofpd: &OfpdModel,
    bins: &SpeedBinTable,
    cfg: &CascadeConfig,
) -> Result<CascadeOutcome, CascadeError> {
    if separators.len() != bins.len() {
        return Err(CascadeError::InvalidConfig(format!(
            "{} separators for {} speed bins",
            separators.len(),
            bins.len()
        )));
    }
    if cfg.close_kernel.is_multiple_of(2) || cfg.close_kernel == 0 {
        return Err(CascadeError::InvalidConfig(format!(
            "close kernel must be odd, got {}",
            cfg.close_kernel
        )));
    }

    let (h, w) = (volume.height, volume.width);
    let mut inp = volume.clone();
    let mut flows = Vec::new();
    let mut claimed = Vec::new();
    let mut spike_masks = Vec::with_capacity(separators.len());
    let mut input_totals = vec![inp.total()];

    for k in (1..=separators.len()).rev() {
        let out = separators[k - 1].forward(&inp)?;
        let support = out.support();
        let region = close(&out.mask, h, w, cfg.close_kernel);

        if support >= cfg.min_support.max(1) {
            let object = inp.masked(&region);
            // spikes can sit a kernel radius away from any event; an empty
            // claim has nothing to regress a pose from
            if object.total() > 0 {
                let pred = ofpd.forward(&signed_input(&object, None))?;
                flows.push(ObjectFlow {
                    bin: k,
                    support,
                    pose_px: pred.pose_px,
                    dir_rad: pred.dir_rad,
                    speed: bins.representative(k),
                });
                claimed.push(
                    object
                        .window_occupancy()
                        .iter()
                        .map(|&o| (o != 0.0) as u8)
                        .collect(),
                );
            }
        }

        inp = inp.masked(&invert(&region));
        input_totals.push(inp.total());
        spike_masks.push(out.mask);
    }

    Ok(CascadeOutcome {
        flows,
        trace: CascadeTrace {
            input_totals,
            spike_masks,
            claimed,
        },
    })
}
