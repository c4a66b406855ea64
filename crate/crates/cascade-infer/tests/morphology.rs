use cascade_infer::{close, dilate, erode, invert};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Union-of-translates dilation, straight from the definition.
fn oracle_dilate(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    let r = k as isize / 2;
    let mut out = vec![0u8; mask.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            if mask[y as usize * width + x as usize] == 0 {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let (py, px) = (y + dy, x + dx);
                    if py >= 0 && py < height as isize && px >= 0 && px < width as isize {
                        out[py as usize * width + px as usize] = 1;
                    }
                }
            }
        }
    }
    out
}

/// Direct-definition erosion with zeros outside the frame.
fn oracle_erode(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    let r = k as isize / 2;
    let mut out = vec![0u8; mask.len()];
    for y in 0..height as isize {
        for x in 0..width as isize {
            let mut all = true;
            'window: for dy in -r..=r {
                for dx in -r..=r {
                    let (py, px) = (y + dy, x + dx);
                    let inside = py >= 0 && py < height as isize && px >= 0 && px < width as isize;
                    if !inside || mask[py as usize * width + px as usize] == 0 {
                        all = false;
                        break 'window;
                    }
                }
            }
            out[y as usize * width + x as usize] = all as u8;
        }
    }
    out
}

/// Closing built from the oracle passes on a grid padded by a full kernel —
/// a deliberately different (and wasteful) padding scheme.
fn oracle_close(mask: &[u8], height: usize, width: usize, k: usize) -> Vec<u8> {
    let pad = k;
    let (ph, pw) = (height + 2 * pad, width + 2 * pad);
    let mut big = vec![0u8; ph * pw];
    for y in 0..height {
        for x in 0..width {
            big[(y + pad) * pw + (x + pad)] = mask[y * width + x];
        }
    }
    let c = oracle_erode(&oracle_dilate(&big, ph, pw, k), ph, pw, k);
    let mut out = vec![0u8; height * width];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = c[(y + pad) * pw + (x + pad)];
        }
    }
    out
}

fn random_grid(rng: &mut ChaCha8Rng, height: usize, width: usize, density: f64) -> Vec<u8> {
    (0..height * width)
        .map(|_| (rng.gen::<f64>() < density) as u8)
        .collect()
}

#[test]
fn five_hundred_random_grids_match_the_oracles_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (h, w) = (32, 32);
    for i in 0..500 {
        let k = [3, 5, 7][i % 3];
        let density = [0.02, 0.1, 0.3, 0.6][i % 4];
        let m = random_grid(&mut rng, h, w, density);
        assert_eq!(dilate(&m, h, w, k), oracle_dilate(&m, h, w, k), "dilate #{i}");
        assert_eq!(erode(&m, h, w, k), oracle_erode(&m, h, w, k), "erode #{i}");
        assert_eq!(close(&m, h, w, k), oracle_close(&m, h, w, k), "close #{i}");
    }
}

#[test]
fn closing_is_extensive_and_idempotent_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc105e);
    let (h, w) = (32, 32);
    for i in 0..500 {
        let k = [3, 5, 7][i % 3];
        let m = random_grid(&mut rng, h, w, 0.15);
        let c = close(&m, h, w, k);
        for (j, (&a, &b)) in m.iter().zip(&c).enumerate() {
            assert!(a <= b, "grid {i}: closing dropped pixel {j}");
        }
        assert_eq!(close(&c, h, w, k), c, "grid {i}: closing not idempotent");
    }
}

proptest! {
    #[test]
    fn closing_properties_hold_on_arbitrary_geometry(
        height in 1usize..24,
        width in 1usize..24,
        k_idx in 0usize..3,
        seed in any::<u64>(),
        density in 0.0f64..1.0,
    ) {
        let k = [1, 3, 5][k_idx];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_grid(&mut rng, height, width, density);

        let d = dilate(&m, height, width, k);
        let e = erode(&m, height, width, k);
        let c = close(&m, height, width, k);

        for i in 0..m.len() {
            prop_assert!(e[i] <= m[i], "erosion must shrink");
            prop_assert!(m[i] <= d[i], "dilation must grow");
            prop_assert!(m[i] <= c[i], "closing must be extensive");
        }
        prop_assert_eq!(close(&c, height, width, k), c.clone(), "idempotence");
        prop_assert_eq!(invert(&invert(&m)), m.clone());

        // closing is increasing: grow the input, the closure can only grow
        let mut bigger = m.clone();
        if let Some(slot) = bigger.iter().position(|&b| b == 0) {
            bigger[slot] = 1;
            let cb = close(&bigger, height, width, k);
            for i in 0..m.len() {
                prop_assert!(c[i] <= cb[i], "closing must be increasing");
            }
        }
    }
}
