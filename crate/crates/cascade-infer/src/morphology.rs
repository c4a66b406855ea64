//! Binary morphology with a square structuring element on the infinite
//! grid: the frame is treated as a window onto Z^2 with zeros outside, so
//! closing keeps its textbook properties (extensive, idempotent, increasing)
//! all the way to the border.

fn check(mask: &[u8], height: usize, width: usize, k: usize) {
    assert_eq!(mask.len(), height * width, "mask does not cover the grid");
    assert!(k % 2 == 1 && k >= 1, "structuring element must be odd, got {k}");
}

/// `out[p] = 1` iff any cell of the k x k window around `p` is set.
/// Separable: a horizontal OR-run then a vertical one.
pub fn dilate(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    check(mask, height, width, k);
    let r = k / 2;
    let mut tmp = vec![0u8; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(width - 1);
            tmp[y * width + x] = (lo..=hi).any(|q| mask[y * width + q] != 0) as u8;
        }
    }
    let mut out = vec![0u8; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let lo = y.saturating_sub(r);
            let hi = (y + r).min(height - 1);
            out[y * width + x] = (lo..=hi).any(|q| tmp[q * width + x] != 0) as u8;
        }
    }
    out
}

/// `out[p] = 1` iff the whole k x k window around `p` is set. Windows that
/// poke past the frame see the zeros outside and fail.
pub fn erode(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    check(mask, height, width, k);
    let r = k / 2;
    let mut tmp = vec![0u8; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let full = x >= r
                && x + r < width
                && (x - r..=x + r).all(|q| mask[y * width + q] != 0);
            tmp[y * width + x] = full as u8;
        }
    }
    let mut out = vec![0u8; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let full = y >= r
                && y + r < height
                && (y - r..=y + r).all(|q| tmp[q * width + x] != 0);
            out[y * width + x] = full as u8;
        }
    }
    out
}

/// Morphological closing, `erode(dilate(mask))` on Z^2. The dilation may
/// spill up to `k/2` cells past the frame, so both passes run on a padded
/// copy and the result is cropped back — without that, closing would eat
/// pixels at the border.
pub fn close(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    check(mask, height, width, k);
    let r = k / 2;
    let (ph, pw) = (height + 2 * r, width + 2 * r);
    let mut padded = vec![0u8; ph * pw];
    for y in 0..height {
        let row = &mask[y * width..(y + 1) * width];
        padded[(y + r) * pw + r..(y + r) * pw + r + width].copy_from_slice(row);
    }
    let eroded = erode(&dilate(&padded, ph, pw, k), ph, pw, k);
    let mut out = vec![0u8; height * width];
    for y in 0..height {
        let row = &eroded[(y + r) * pw + r..(y + r) * pw + r + width];
        out[y * width..(y + 1) * width].copy_from_slice(row);
    }
    out
}

/// Binary complement of a mask.
pub fn invert(mask: &[u8]) -> Vec<u8> {
    mask.iter().map(|&m| (m == 0) as u8).collect()
}

/// The consumption mask of one cascade stage: everything *outside* the
/// closed spike region survives to the next stage.
pub fn make_mask(spikes: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    invert(&close(spikes, height, width, k))
}
