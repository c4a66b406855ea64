use std::io::{BufRead, BufReader, Read, Write};

use crate::error::SimError;

/// One ground-truth sample. Positions are image pixels (sub-pixel, origin at
/// the top-left corner), velocities are scene m/s with `vx` along the
/// optical axis (always zero for the planar scenes generated here),
/// `dir_rad` is the image-plane motion direction in `(-pi, pi]` with image
/// `y` pointing down, and `bin` is the 1-based speed bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtRow {
    pub t_us: u64,
    pub cx_px: f64,
    pub cy_px: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub speed: f64,
    pub dir_rad: f64,
    pub bin: usize,
}

const HEADER: &str = "t_us,cx_px,cy_px,vx,vy,vz,speed,dir_rad,bin";

pub fn write_gt_csv<W: Write>(mut w: W, rows: &[GtRow]) -> Result<(), SimError> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.4},{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.t_us, r.cx_px, r.cy_px, r.vx, r.vy, r.vz, r.speed, r.dir_rad, r.bin
        )?;
    }
    Ok(())
}

pub fn read_gt_csv<R: Read>(r: R) -> Result<Vec<GtRow>, SimError> {
    let reader = BufReader::new(r);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 {
            if line.trim() != HEADER {
                return Err(SimError::GtParse {
                    line: lineno,
                    what: format!("bad header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(SimError::GtParse {
                line: lineno,
                what: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let fail = |what: String| SimError::GtParse { line: lineno, what };
        let num = |i: usize| -> Result<f64, SimError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| fail(format!("bad float {:?}", fields[i])))
        };
        rows.push(GtRow {
            t_us: fields[0]
                .parse::<u64>()
                .map_err(|_| fail(format!("bad timestamp {:?}", fields[0])))?,
            cx_px: num(1)?,
            cy_px: num(2)?,
            vx: num(3)?,
            vy: num(4)?,
            vz: num(5)?,
            speed: num(6)?,
            dir_rad: num(7)?,
            bin: fields[8]
                .parse::<usize>()
                .map_err(|_| fail(format!("bad bin {:?}", fields[8])))?,
        });
    }
    Ok(rows)
}

/// Row whose timestamp is nearest to `t_us`, ties toward the earlier row.
/// Rows must be in ascending time order (as written).
pub fn nearest_row(rows: &[GtRow], t_us: u64) -> Option<&GtRow> {
    if rows.is_empty() {
        return None;
    }
    let idx = rows.partition_point(|r| r.t_us < t_us);
    let candidates = [idx.checked_sub(1), Some(idx)];
    candidates
        .into_iter()
        .flatten()
        .filter_map(|i| rows.get(i))
        .min_by_key(|r| r.t_us.abs_diff(t_us))
}
