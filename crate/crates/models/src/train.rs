use std::io::Write;

use crate::error::ModelError;

/// Per-epoch mean losses of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss")?;
        for (i, loss) in self.losses.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, loss)?;
        }
        Ok(())
    }
}

/// Fails the epoch loudly instead of letting NaNs silently saturate clamps.
pub(crate) fn guard_finite(loss: f64, epoch: usize) -> Result<f64, ModelError> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(ModelError::Diverged { epoch, loss })
    }
}
