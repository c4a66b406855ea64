//! Binary event file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header (20 bytes): magic "TOFE" | version u32 | width u16 | height u16 | count u64
//! record (13 bytes): x u16 | y u16 | t u64 | p u8
//! ```
//!
//! Records are packed back to back after the header and must be ordered by
//! timestamp. Write/read round-trips are byte-identical.

use crate::{Event, EventError, Polarity};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EVENT_FILE_MAGIC: [u8; 4] = *b"TOFE";
pub const EVENT_FILE_VERSION: u32 = 1;

const HEADER_LEN: usize = 20;
const RECORD_LEN: usize = 13;

/// Fixed 20-byte header of an event file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventFileHeader {
    pub version: u32,
    pub width: u16,
    pub height: u16,
    pub count: u64,
}

impl EventFileHeader {
    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut buf = [0u8; HEADER_LEN];
        buf[0..4].copy_from_slice(&EVENT_FILE_MAGIC);
        buf[4..8].copy_from_slice(&self.version.to_le_bytes());
        buf[8..10].copy_from_slice(&self.width.to_le_bytes());
        buf[10..12].copy_from_slice(&self.height.to_le_bytes());
        buf[12..20].copy_from_slice(&self.count.to_le_bytes());
        buf
    }

    fn from_bytes(buf: &[u8; HEADER_LEN]) -> Result<Self, EventError> {
        if buf[0..4] != EVENT_FILE_MAGIC {
            let mut found = [0u8; 4];
            found.copy_from_slice(&buf[0..4]);
            return Err(EventError::BadMagic { found });
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != EVENT_FILE_VERSION {
            return Err(EventError::UnsupportedVersion(version));
        }
        Ok(EventFileHeader {
            version,
            width: u16::from_le_bytes(buf[8..10].try_into().unwrap()),
            height: u16::from_le_bytes(buf[10..12].try_into().unwrap()),
            count: u64::from_le_bytes(buf[12..20].try_into().unwrap()),
        })
    }
}

/// Write an ordered event stream. The stream must be sorted by timestamp and
/// fit within the declared sensor size.
pub fn write_events(
    events: &[Event],
    width: u16,
    height: u16,
    path: &Path,
) -> Result<(), EventError> {
    let mut prev_t = 0u64;
    for (index, ev) in events.iter().enumerate() {
        if index > 0 && ev.t < prev_t {
            return Err(EventError::UnsortedTimestamps {
                index,
                t: ev.t,
                prev: prev_t,
            });
        }
        prev_t = ev.t;
        if ev.x >= width || ev.y >= height {
            return Err(EventError::RecordOutOfSensor {
                index,
                x: ev.x,
                y: ev.y,
                width,
                height,
            });
        }
    }

    let header = EventFileHeader {
        version: EVENT_FILE_VERSION,
        width,
        height,
        count: events.len() as u64,
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&header.to_bytes())?;
    let mut rec = [0u8; RECORD_LEN];
    for ev in events {
        rec[0..2].copy_from_slice(&ev.x.to_le_bytes());
        rec[2..4].copy_from_slice(&ev.y.to_le_bytes());
        rec[4..12].copy_from_slice(&ev.t.to_le_bytes());
        rec[12] = ev.p.to_byte();
        w.write_all(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an event stream back, validating magic, version, completeness,
/// ordering, polarity bytes, and sensor bounds.
pub fn read_events(path: &Path) -> Result<(EventFileHeader, Vec<Event>), EventError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut hbuf = [0u8; HEADER_LEN];
    read_exact_or_truncated(&mut r, &mut hbuf, 0, 0)?;
    let header = EventFileHeader::from_bytes(&hbuf)?;

    let mut events = Vec::with_capacity(header.count.min(1 << 24) as usize);
    let mut rec = [0u8; RECORD_LEN];
    let mut prev_t = 0u64;
    for index in 0..header.count {
        read_exact_or_truncated(&mut r, &mut rec, header.count, index)?;
        let x = u16::from_le_bytes(rec[0..2].try_into().unwrap());
        let y = u16::from_le_bytes(rec[2..4].try_into().unwrap());
        let t = u64::from_le_bytes(rec[4..12].try_into().unwrap());
        let p = Polarity::from_byte(rec[12]).ok_or(EventError::BadPolarity {
            index: index as usize,
            value: rec[12],
        })?;
        if index > 0 && t < prev_t {
            return Err(EventError::UnsortedTimestamps {
                index: index as usize,
                t,
                prev: prev_t,
            });
        }
        prev_t = t;
        if x >= header.width || y >= header.height {
            return Err(EventError::RecordOutOfSensor {
                index: index as usize,
                x,
                y,
                width: header.width,
                height: header.height,
            });
        }
        events.push(Event::new(x, y, t, p));
    }
    Ok((header, events))
}

fn read_exact_or_truncated(
    r: &mut impl Read,
    buf: &mut [u8],
    expected: u64,
    got: u64,
) -> Result<(), EventError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            EventError::Truncated { expected, got }
        } else {
            EventError::Io(e)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("event-core-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn empty_stream_round_trips_with_intact_header() {
        let path = tmp("empty.events");
        write_events(&[], 64, 48, &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 20);
        let (header, events) = read_events(&path).unwrap();
        assert_eq!(
            header,
            EventFileHeader {
                version: EVENT_FILE_VERSION,
                width: 64,
                height: 48,
                count: 0
            }
        );
        assert!(events.is_empty());
    }

    #[test]
    fn three_known_events_round_trip() {
        let path = tmp("three.events");
        let events = vec![
            Event::new(0, 0, 10, Polarity::Off),
            Event::new(5, 7, 10, Polarity::On),
            Event::new(63, 47, 9999, Polarity::On),
        ];
        write_events(&events, 64, 48, &path).unwrap();
        let (_, back) = read_events(&path).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn bad_magic_detected() {
        let path = tmp("badmagic.events");
        fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(matches!(
            read_events(&path),
            Err(EventError::BadMagic { .. })
        ));
    }

    #[test]
    fn truncated_file_detected() {
        let path = tmp("trunc.events");
        let events = vec![
            Event::new(1, 1, 1, Polarity::On),
            Event::new(2, 2, 2, Polarity::On),
        ];
        write_events(&events, 8, 8, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            read_events(&path),
            Err(EventError::Truncated { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn unsorted_stream_rejected_on_write_and_read() {
        let path = tmp("unsorted.events");
        let events = vec![
            Event::new(1, 1, 10, Polarity::On),
            Event::new(2, 2, 5, Polarity::On),
        ];
        assert!(matches!(
            write_events(&events, 8, 8, &path),
            Err(EventError::UnsortedTimestamps { index: 1, .. })
        ));

        // Forge a file with descending timestamps to hit the read-side check.
        let sorted = vec![
            Event::new(1, 1, 5, Polarity::On),
            Event::new(2, 2, 10, Polarity::On),
        ];
        write_events(&sorted, 8, 8, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Swap the two 13-byte records.
        let (a, b) = (20, 33);
        let rec_a: Vec<u8> = bytes[a..a + 13].to_vec();
        let rec_b: Vec<u8> = bytes[b..b + 13].to_vec();
        bytes[a..a + 13].copy_from_slice(&rec_b);
        bytes[b..b + 13].copy_from_slice(&rec_a);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_events(&path),
            Err(EventError::UnsortedTimestamps { index: 1, .. })
        ));
    }

    #[test]
    fn bad_polarity_byte_detected() {
        let path = tmp("badpol.events");
        write_events(&[Event::new(1, 1, 5, Polarity::On)], 8, 8, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[20 + 12] = 7;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_events(&path),
            Err(EventError::BadPolarity { index: 0, value: 7 })
        ));
    }
}
