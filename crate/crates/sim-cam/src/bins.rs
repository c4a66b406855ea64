use crate::error::SimError;

/// Contiguous, ascending speed bands in m/s. Bins are numbered from 1; 0 is
/// the sentinel for speeds below the first band's floor. Classification is
/// lower-inclusive, upper-exclusive; speeds at or above the last edge are an
/// error rather than a bin.
///
/// `programmed_max` caps the speeds actually flown in the top band (the
/// classification edge stays much higher to absorb estimation error), so
/// representative speeds and lap times use the capped range.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedBinTable {
    edges: Vec<(f64, f64)>,
    programmed_max: f64,
}

impl SpeedBinTable {
    pub fn new(edges: Vec<(f64, f64)>, programmed_max: f64) -> Result<Self, SimError> {
        if edges.is_empty() {
            return Err(SimError::InvalidConfig("empty speed bin table".into()));
        }
        for (i, &(lo, hi)) in edges.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
                return Err(SimError::InvalidConfig(format!(
                    "bin {}: bad bounds ({lo}, {hi})",
                    i + 1
                )));
            }
            if i > 0 && edges[i - 1].1 != lo {
                return Err(SimError::InvalidConfig(format!(
                    "bin {} does not start where bin {} ends",
                    i + 1,
                    i
                )));
            }
        }
        let last = edges.len() - 1;
        if !(programmed_max > edges[last].0 && programmed_max <= edges[last].1) {
            return Err(SimError::InvalidConfig(format!(
                "programmed max {programmed_max} outside the top bin"
            )));
        }
        Ok(SpeedBinTable {
            edges,
            programmed_max,
        })
    }

    /// The four bands used throughout: 1-18, 18-42, 42-84, 84-500 m/s with
    /// flown speeds in the top band capped at 144.
    pub fn default_four() -> Self {
        SpeedBinTable::new(
            vec![(1.0, 18.0), (18.0, 42.0), (42.0, 84.0), (84.0, 500.0)],
            144.0,
        )
        .unwrap()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn floor(&self) -> f64 {
        self.edges[0].0
    }

    pub fn ceiling(&self) -> f64 {
        self.edges[self.edges.len() - 1].1
    }

    pub fn programmed_max(&self) -> f64 {
        self.programmed_max
    }

    pub fn edges(&self) -> &[(f64, f64)] {
        &self.edges
    }

    /// Classification bounds of 1-based bin `k`.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        self.edges[k - 1]
    }

    /// The speed range actually flown for bin `k`: classification bounds
    /// with the top bin capped at `programmed_max`.
    pub fn programmed_bounds(&self, k: usize) -> (f64, f64) {
        let (lo, hi) = self.bounds(k);
        (lo, hi.min(self.programmed_max))
    }

    /// Midpoint of the programmed range, reported as the speed estimate for
    /// anything classified into bin `k`.
    pub fn representative(&self, k: usize) -> f64 {
        let (lo, hi) = self.programmed_bounds(k);
        (lo + hi) / 2.0
    }

    /// 0 for speeds below the floor, 1-based bin index otherwise.
    pub fn classify(&self, speed: f64) -> Result<usize, SimError> {
        if !speed.is_finite() || speed < 0.0 {
            return Err(SimError::SpeedOutOfRange(speed));
        }
        if speed < self.floor() {
            return Ok(0);
        }
        for (i, &(lo, hi)) in self.edges.iter().enumerate() {
            if speed >= lo && speed < hi {
                return Ok(i + 1);
            }
        }
        Err(SimError::SpeedOutOfRange(speed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_lower_inclusive_upper_exclusive() {
        let t = SpeedBinTable::default_four();
        assert_eq!(t.classify(1.0).unwrap(), 1);
        assert_eq!(t.classify(17.999).unwrap(), 1);
        assert_eq!(t.classify(18.0).unwrap(), 2);
        assert_eq!(t.classify(42.0).unwrap(), 3);
        assert_eq!(t.classify(83.999).unwrap(), 3);
        assert_eq!(t.classify(84.0).unwrap(), 4);
        assert_eq!(t.classify(499.999).unwrap(), 4);
    }

    #[test]
    fn below_floor_is_sentinel_zero() {
        let t = SpeedBinTable::default_four();
        assert_eq!(t.classify(0.0).unwrap(), 0);
        assert_eq!(t.classify(0.999).unwrap(), 0);
    }

    #[test]
    fn at_or_above_ceiling_is_an_error() {
        let t = SpeedBinTable::default_four();
        assert!(t.classify(500.0).is_err());
        assert!(t.classify(1e9).is_err());
        assert!(t.classify(f64::NAN).is_err());
        assert!(t.classify(-1.0).is_err());
    }

    #[test]
    fn representative_speeds_use_programmed_cap() {
        let t = SpeedBinTable::default_four();
        assert_eq!(t.representative(1), 9.5);
        assert_eq!(t.representative(2), 30.0);
        assert_eq!(t.representative(3), 63.0);
        assert_eq!(t.representative(4), 114.0);
    }

    #[test]
    fn rejects_gaps_and_inversions() {
        assert!(SpeedBinTable::new(vec![(1.0, 18.0), (20.0, 42.0)], 30.0).is_err());
        assert!(SpeedBinTable::new(vec![(18.0, 1.0)], 10.0).is_err());
        assert!(SpeedBinTable::new(vec![], 10.0).is_err());
        assert!(SpeedBinTable::new(vec![(1.0, 18.0)], 20.0).is_err());
    }
}
