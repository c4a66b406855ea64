/// Sign of the intensity change that produced an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Intensity decreased.
    Off,
    /// Intensity increased.
    On,
}

impl Polarity {
    /// Channel index used throughout binning: OFF = 0, ON = 1.
    #[inline]
    pub fn channel(self) -> usize {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }

    /// Byte encoding used by the event file format.
    #[inline]
    pub fn to_byte(self) -> u8 {
        self.channel() as u8
    }

    /// Inverse of [`Polarity::to_byte`]; anything other than 0/1 is invalid.
    #[inline]
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }
}

/// One address-event tuple.
///
/// `x` is the pixel column, `y` the pixel row, `t` the timestamp in
/// microseconds. Streams are ordered by `t` with ties allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t: u64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u16, y: u16, t: u64, p: Polarity) -> Self {
        Event { x, y, t, p }
    }
}
