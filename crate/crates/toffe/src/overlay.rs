use cascade_infer::ObjectFlow;
use event_core::BinnedVolume;
use image::{Rgb, RgbImage};

const UPSCALE: u32 = 4;
const BG: Rgb<u8> = Rgb([16, 16, 16]);
const EVENT: Rgb<u8> = Rgb([90, 90, 90]);
const CROSS: Rgb<u8> = Rgb([255, 255, 255]);

/// One color per speed bin, slowest to fastest, cycled beyond six.
const BIN_COLORS: [Rgb<u8>; 6] = [
    Rgb([70, 130, 220]),
    Rgb([80, 190, 120]),
    Rgb([230, 200, 70]),
    Rgb([235, 140, 60]),
    Rgb([225, 70, 70]),
    Rgb([200, 90, 200]),
];

fn bin_color(bin: usize) -> Rgb<u8> {
    BIN_COLORS[(bin.max(1) - 1) % BIN_COLORS.len()]
}

/// Renders one window: event pixels in gray, each flow's claimed pixels in
/// its bin color, and a cross on every predicted center.
pub fn render(volume: &BinnedVolume, flows: &[ObjectFlow], claims: &[Vec<u8>]) -> RgbImage {
    let (h, w) = (volume.height as u32, volume.width as u32);
    let mut img = RgbImage::from_pixel(w * UPSCALE, h * UPSCALE, BG);

    let occ = volume.window_occupancy();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let mut color = if occ[i] > 0.0 { EVENT } else { BG };
            for (flow, claim) in flows.iter().zip(claims) {
                if claim.get(i).copied().unwrap_or(0) != 0 {
                    color = bin_color(flow.bin);
                }
            }
            if color != BG {
                fill_cell(&mut img, x, y, color);
            }
        }
    }

    for flow in flows {
        draw_cross(&mut img, flow.pose_px, bin_color(flow.bin));
    }
    img
}

fn fill_cell(img: &mut RgbImage, x: u32, y: u32, color: Rgb<u8>) {
    for dy in 0..UPSCALE {
        for dx in 0..UPSCALE {
            img.put_pixel(x * UPSCALE + dx, y * UPSCALE + dy, color);
        }
    }
}

fn draw_cross(img: &mut RgbImage, pose_px: (f64, f64), color: Rgb<u8>) {
    let cx = (pose_px.0 * UPSCALE as f64).round() as i64;
    let cy = (pose_px.1 * UPSCALE as f64).round() as i64;
    let arm = UPSCALE as i64 * 2;
    for d in -arm..=arm {
        put(img, cx + d, cy, CROSS);
        put(img, cx, cy + d, CROSS);
    }
    put(img, cx, cy, color);
}

fn put(img: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}
