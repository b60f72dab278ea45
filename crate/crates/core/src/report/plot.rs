//! Minimal raster plots. Images carry no text; the sibling CSV holds the
//! numbers and labels.

use std::path::Path;

use image::{Rgb, RgbImage};

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 400;
const MARGIN: i64 = 40;

pub const PRE: Rgb<u8> = Rgb([70, 120, 190]);
pub const POST: Rgb<u8> = Rgb([220, 110, 50]);
pub const INK: Rgb<u8> = Rgb([40, 40, 40]);
pub const ALARM: Rgb<u8> = Rgb([200, 40, 40]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);

pub struct Canvas {
    img: RgbImage,
}

/// Plot area mapping from data coordinates to pixels.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Frame {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if (b - a).abs() < 1e-12 { (a - 1.0, b + 1.0) } else { (a, b) };
        let (x0, x1) = pad(x);
        let (y0, y1) = pad(y);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> i64 {
        let w = (WIDTH as i64 - 2 * MARGIN) as f64;
        MARGIN + ((x - self.x0) / (self.x1 - self.x0) * w).round() as i64
    }

    fn py(&self, y: f64) -> i64 {
        let h = (HEIGHT as i64 - 2 * MARGIN) as f64;
        HEIGHT as i64 - MARGIN - ((y - self.y0) / (self.y1 - self.y0) * h).round() as i64
    }
}

impl Canvas {
    pub fn new() -> Self {
        Canvas {
            img: RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255])),
        }
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if (0..WIDTH as i64).contains(&x) && (0..HEIGHT as i64).contains(&y) {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    fn fill(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb<u8>) {
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                self.put(x, y, c);
            }
        }
    }

    fn segment(&mut self, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    /// Axes plus light horizontal grid lines at each integer step when the
    /// range is small.
    pub fn axes(&mut self, f: &Frame) {
        if f.y1 - f.y0 <= 40.0 {
            let mut y = f.y0.ceil();
            while y <= f.y1 {
                let py = f.py(y);
                self.segment((MARGIN, py), (WIDTH as i64 - MARGIN, py), GRID);
                y += 1.0;
            }
        }
        let zero = f.py(0.0f64.clamp(f.y0, f.y1));
        self.segment((MARGIN, zero), (WIDTH as i64 - MARGIN, zero), INK);
        self.segment((MARGIN, MARGIN), (MARGIN, HEIGHT as i64 - MARGIN), INK);
    }

    pub fn bar(&mut self, f: &Frame, x_left: f64, x_right: f64, value: f64, c: Rgb<u8>) {
        let base = f.py(0.0f64.clamp(f.y0, f.y1));
        self.fill(f.px(x_left), base, f.px(x_right) - 1, f.py(value), c);
    }

    pub fn polyline(&mut self, f: &Frame, points: &[(f64, f64)], c: Rgb<u8>) {
        for w in points.windows(2) {
            self.segment((f.px(w[0].0), f.py(w[0].1)), (f.px(w[1].0), f.py(w[1].1)), c);
        }
        if let [(x, y)] = points {
            self.dot(f, *x, *y, c);
        }
    }

    pub fn line(&mut self, f: &Frame, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
        self.segment((f.px(a.0), f.py(a.1)), (f.px(b.0), f.py(b.1)), c);
    }

    pub fn dot(&mut self, f: &Frame, x: f64, y: f64, c: Rgb<u8>) {
        let (cx, cy) = (f.px(x), f.py(y));
        for dy in -3i64..=3 {
            for dx in -3i64..=3 {
                if dx * dx + dy * dy <= 9 {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }

    pub fn save(&self, path: &Path) -> image::ImageResult<()> {
        self.img.save_with_format(path, image::ImageFormat::Png)
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb<u8> {
        *self.img.get_pixel(x, y)
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Self::new()
    }
}
