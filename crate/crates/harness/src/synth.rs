//! Procedural street scenes with Cityscapes label maps.
//!
//! Each scene has a sky, a skyline of textured buildings, a road in perspective flanked by
//! sidewalks, trees, poles with signs, cars, pedestrians and an ego-vehicle hood. Labels
//! are painted first; colors and texture are derived from the label and instance.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semwire_core::{Caption, ClassTaxonomy, ImageBuffer, SegMap};

use crate::corpus::{discover, CorpusItem};
use crate::error::{HarnessError, Result};

const EGO: u8 = 1;
const ROAD: u8 = 7;
const SIDEWALK: u8 = 8;
const BUILDING: u8 = 11;
const FENCE: u8 = 13;
const POLE: u8 = 17;
const SIGN: u8 = 20;
const VEGETATION: u8 = 21;
const SKY: u8 = 23;
const PERSON: u8 = 24;
const CAR: u8 = 26;

pub struct Scene {
    pub image: ImageBuffer,
    pub segmap: SegMap,
    pub caption: Caption,
}

struct Canvas {
    w: u32,
    h: u32,
    labels: Vec<u8>,
    inst: Vec<u16>,
    colors: Vec<[u8; 3]>,
}

impl Canvas {
    fn new(w: u32, h: u32) -> Self {
        Self {
            w,
            h,
            labels: vec![SKY; (w * h) as usize],
            inst: vec![0; (w * h) as usize],
            colors: vec![[0, 0, 0]],
        }
    }

    fn instance(&mut self, color: [u8; 3]) -> u16 {
        self.colors.push(color);
        (self.colors.len() - 1) as u16
    }

    fn put(&mut self, x: i64, y: i64, label: u8, inst: u16) {
        if x >= 0 && y >= 0 && (x as u32) < self.w && (y as u32) < self.h {
            let i = (y as u32 * self.w + x as u32) as usize;
            self.labels[i] = label;
            self.inst[i] = inst;
        }
    }

    fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, label: u8, inst: u16) {
        for y in y0.max(0)..y1.min(self.h as i64) {
            for x in x0.max(0)..x1.min(self.w as i64) {
                self.put(x, y, label, inst);
            }
        }
    }

    fn ellipse(&mut self, cx: f64, cy: f64, rx: f64, ry: f64, label: u8, inst: u16) {
        let (y0, y1) = ((cy - ry).floor() as i64, (cy + ry).ceil() as i64);
        let (x0, x1) = ((cx - rx).floor() as i64, (cx + rx).ceil() as i64);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                if dx * dx + dy * dy <= 1.0 {
                    self.put(x, y, label, inst);
                }
            }
        }
    }
}

/// Smooth value noise in roughly [-1, 1] from a hashed lattice.
fn value_noise(x: f64, y: f64, scale: f64, seed: u64) -> f64 {
    let hash = |ix: i64, iy: i64| {
        let mut v = (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
            ^ seed;
        v ^= v >> 31;
        v = v.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        v ^= v >> 32;
        (v as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    let (fx, fy) = (x / scale, y / scale);
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let s = |t: f64| t * t * (3.0 - 2.0 * t);
    let (sx, sy) = (s(tx), s(ty));
    let top = hash(ix, iy) * (1.0 - sx) + hash(ix + 1, iy) * sx;
    let bottom = hash(ix, iy + 1) * (1.0 - sx) + hash(ix + 1, iy + 1) * sx;
    top * (1.0 - sy) + bottom * sy
}

/// Generates one scene. The same `(width, height, seed)` always yields the same scene.
pub fn street_scene(width: u32, height: u32, seed: u64) -> Result<Scene> {
    if width < 64 || height < 64 {
        return Err(HarnessError::Plan(format!(
            "synthetic scenes need at least 64x64, got {width}x{height}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let mut cv = Canvas::new(width, height);

    let horizon = rng.random_range(0.36..0.48) * h;
    let base = horizon + 0.06 * h;

    // skyline
    let mut x = -(rng.random_range(0.0..40.0));
    while x < w {
        let bw = rng.random_range(0.06..0.2) * w;
        if rng.random_bool(0.85) {
            let top = rng.random_range(0.04 * h..horizon - 0.04 * h);
            let tone: u8 = rng.random_range(90..200);
            let color = [
                tone,
                tone.saturating_sub(rng.random_range(0..30)),
                tone.saturating_sub(rng.random_range(0..50)),
            ];
            let id = cv.instance(color);
            cv.rect(
                x as i64,
                top as i64,
                (x + bw) as i64,
                base as i64,
                BUILDING,
                id,
            );
        }
        x += bw;
    }

    // ground: road trapezoid, sidewalks elsewhere below the building base
    let road_inst = cv.instance([88, 88, 92]);
    let walk_inst = cv.instance([150, 142, 138]);
    let center = w * rng.random_range(0.4..0.6);
    let half_top = 0.06 * w;
    let half_bottom = rng.random_range(0.5..0.8) * w;
    for yi in horizon as u32..height {
        let t = (yi as f64 - horizon) / (h - horizon);
        let half = half_top + (half_bottom - half_top) * t;
        for xi in 0..width {
            let on_road = (xi as f64 - center).abs() <= half;
            if on_road {
                cv.put(xi as i64, yi as i64, ROAD, road_inst);
            } else if yi as f64 >= base {
                cv.put(xi as i64, yi as i64, SIDEWALK, walk_inst);
            }
        }
    }

    // a fence segment along one sidewalk
    if rng.random_bool(0.5) {
        let id = cv.instance([120, 110, 90]);
        let fx = rng.random_range(0.0..0.3) * w;
        cv.rect(
            fx as i64,
            (base - 0.05 * h) as i64,
            (fx + 0.15 * w) as i64,
            base as i64 + 2,
            FENCE,
            id,
        );
    }

    // trees
    let n_trees = rng.random_range(2..6);
    for _ in 0..n_trees {
        let cx = rng.random_range(0.0..w);
        let r = rng.random_range(0.05..0.12) * h;
        let cy = base - r * rng.random_range(0.6..1.4);
        let g: u8 = rng.random_range(70..130);
        let id = cv.instance([g / 3, g, g / 4]);
        cv.ellipse(cx, cy, r * 1.2, r, VEGETATION, id);
        cv.ellipse(cx + r * 0.6, cy - r * 0.3, r * 0.8, r * 0.7, VEGETATION, id);
    }

    // poles with signs
    let n_poles = rng.random_range(1..4);
    for _ in 0..n_poles {
        let px = rng.random_range(0.0..w);
        let foot = base + rng.random_range(0.0..0.1) * h;
        let top = foot - 0.35 * h;
        let pole = cv.instance([110, 110, 115]);
        cv.rect(
            px as i64,
            top as i64,
            px as i64 + 4,
            foot as i64,
            POLE,
            pole,
        );
        let sign_color = [[200, 30, 30], [30, 60, 190], [230, 200, 30]][rng.random_range(0..3)];
        let sign = cv.instance(sign_color);
        let s = 0.035 * h;
        cv.rect(
            (px - s) as i64,
            top as i64,
            (px + s + 4.0) as i64,
            (top + 1.4 * s) as i64,
            SIGN,
            sign,
        );
    }

    // cars, far to near so nearer ones overlap
    let n_cars = rng.random_range(2..7);
    let mut car_rows: Vec<f64> = (0..n_cars).map(|_| rng.random_range(0.1..0.85)).collect();
    car_rows.sort_by(f64::total_cmp);
    for t in &car_rows {
        let bottom = horizon + t * (h - horizon);
        let ch = 0.08 * h + 0.35 * (bottom - horizon);
        let cw = ch * rng.random_range(1.8..2.4);
        let half = half_top + (half_bottom - half_top) * t;
        let cx = center + rng.random_range(-0.8..0.8) * half;
        let color = [
            rng.random_range(20..230),
            rng.random_range(20..230),
            rng.random_range(20..230),
        ];
        let id = cv.instance(color);
        let (x0, x1) = ((cx - cw / 2.0) as i64, (cx + cw / 2.0) as i64);
        cv.rect(x0, (bottom - ch * 0.6) as i64, x1, bottom as i64, CAR, id);
        cv.rect(
            x0 + (cw * 0.18) as i64,
            (bottom - ch) as i64,
            x1 - (cw * 0.18) as i64,
            (bottom - ch * 0.6) as i64 + 1,
            CAR,
            id,
        );
    }

    // pedestrians on the sidewalks
    let n_people = rng.random_range(0..5);
    for _ in 0..n_people {
        let foot = base + rng.random_range(0.02..0.4) * (h - base);
        let ph = 0.12 * h + 0.5 * (foot - base);
        let left = rng.random_bool(0.5);
        let t = (foot - horizon) / (h - horizon);
        let half = half_top + (half_bottom - half_top) * t;
        let px = if left {
            rng.random_range(0.0..(center - half).max(1.0))
        } else {
            rng.random_range((center + half).min(w - 1.0)..w)
        };
        let id = cv.instance([
            rng.random_range(10..120),
            rng.random_range(10..120),
            rng.random_range(10..160),
        ]);
        let pw = ph * 0.28;
        cv.rect(
            (px - pw / 2.0) as i64,
            (foot - ph * 0.85) as i64,
            (px + pw / 2.0) as i64,
            foot as i64,
            PERSON,
            id,
        );
        cv.ellipse(px, foot - ph * 0.92, pw * 0.35, ph * 0.08, PERSON, id);
    }

    // ego-vehicle hood
    let ego = cv.instance([28, 28, 34]);
    let hood = 0.07 * h;
    for xi in 0..width {
        let bulge = 1.0 - ((xi as f64 - w / 2.0) / (w / 2.0)).powi(2);
        let top = h - hood * (0.5 + 0.5 * bulge);
        cv.rect(
            xi as i64,
            top as i64,
            xi as i64 + 1,
            height as i64,
            EGO,
            ego,
        );
    }

    let image = render(&cv, horizon, center, seed)?;
    let segmap = SegMap::new(
        width,
        height,
        cv.labels.clone(),
        Arc::new(ClassTaxonomy::cityscapes()),
    )?;
    let sky_word = if seed.is_multiple_of(3) {
        "overcast"
    } else {
        "clear"
    };
    let caption = Caption::new(format!(
        "a city street with {n_cars} cars, {} and {n_trees} trees in front of buildings under a {sky_word} sky",
        match n_people {
            0 => "no pedestrians".to_string(),
            1 => "one pedestrian".to_string(),
            n => format!("{n} pedestrians"),
        }
    ));
    Ok(Scene {
        image,
        segmap,
        caption,
    })
}

fn render(cv: &Canvas, horizon: f64, center: f64, seed: u64) -> Result<ImageBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let (w, h) = (cv.w, cv.h);
    let overcast = seed.is_multiple_of(3);
    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let (xf, yf) = (x as f64, y as f64);
            let base = cv.colors[cv.inst[i] as usize].map(|v| v as f64);
            let (rgb, grain): ([f64; 3], f64) = match cv.labels[i] {
                SKY => {
                    let t = (yf / horizon).min(1.0);
                    let cloud = value_noise(xf, yf, 90.0, seed) * if overcast { 18.0 } else { 8.0 };
                    let c = if overcast {
                        [175.0, 180.0, 188.0]
                    } else {
                        [95.0 + 120.0 * t, 145.0 + 80.0 * t, 215.0 + 25.0 * t]
                    };
                    (c.map(|v| v + cloud), 1.5)
                }
                BUILDING => {
                    let (wx, wy) = (x % 26, y % 34);
                    let window = (6..20).contains(&wx) && (8..24).contains(&wy);
                    let stain = value_noise(xf, yf, 40.0, seed ^ 1) * 12.0;
                    let c = if window { [55.0, 65.0, 80.0] } else { base };
                    (c.map(|v| v + stain), 5.0)
                }
                ROAD => {
                    let t = (yf - horizon) / (h as f64 - horizon);
                    let dash = (xf - center).abs() < 1.0 + 5.0 * t
                        && ((yf * 0.15 / (0.2 + t)) as i64) % 2 == 0;
                    let c = if dash { [210.0, 210.0, 205.0] } else { base };
                    let patch = value_noise(xf, yf, 25.0, seed ^ 2) * 7.0;
                    (c.map(|v| v + patch), 7.0)
                }
                SIDEWALK => {
                    let joint = x % 40 < 2 || y % 24 < 2;
                    let c = if joint { base.map(|v| v - 35.0) } else { base };
                    (c, 6.0)
                }
                VEGETATION => {
                    let leaf = value_noise(xf, yf, 4.0, seed ^ 3) * 28.0
                        + value_noise(xf, yf, 17.0, seed ^ 4) * 18.0;
                    (base.map(|v| v + leaf), 10.0)
                }
                CAR => {
                    let shade = value_noise(xf, yf, 30.0, seed ^ 5) * 10.0;
                    (base.map(|v| v + shade), 3.0)
                }
                PERSON => (base, 6.0),
                EGO => (base, 2.0),
                _ => (base, 4.0),
            };
            for c in rgb {
                let n: f64 = rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0);
                data.push((c + grain * n).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(ImageBuffer::new(w, h, 3, data)?)
}

/// Writes `count` scenes to `dir` in the generic corpus layout and returns the discovered
/// corpus. Scene `k` uses seed `seed + k`.
pub fn write_corpus(
    dir: &Path,
    count: usize,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<Vec<CorpusItem>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for k in 0..count {
        let scene = street_scene(width, height, seed + k as u64)?;
        let stem = format!("scene_{k:03}");
        scene.image.save_png(dir.join(format!("{stem}.png")))?;
        scene
            .segmap
            .save_png(dir.join(format!("{stem}.labels.png")))?;
        let caption_path = dir.join(format!("{stem}.caption.txt"));
        std::fs::write(&caption_path, scene.caption.text())
            .map_err(|e| HarnessError::io(&caption_path, e))?;
    }
    discover(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use semwire_core::SemanticGroup;

    #[test]
    fn scenes_are_deterministic_and_varied() {
        let a = street_scene(256, 128, 4).unwrap();
        let b = street_scene(256, 128, 4).unwrap();
        let c = street_scene(256, 128, 5).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.segmap, b.segmap);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn every_major_group_appears() {
        let s = street_scene(512, 256, 1).unwrap();
        let hist = s.segmap.group_histogram();
        for g in [
            SemanticGroup::Vehicles,
            SemanticGroup::FlatSurfaces,
            SemanticGroup::Construction,
            SemanticGroup::Objects,
            SemanticGroup::Nature,
            SemanticGroup::Sky,
            SemanticGroup::Background,
        ] {
            assert!(hist[g.index()] > 0, "{g:?} missing");
        }
        assert!(!s.caption.is_empty());
    }

    #[test]
    fn corpus_round_trips_through_discovery() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_corpus(dir.path(), 2, 128, 96, 0).unwrap();
        assert_eq!(items.len(), 2);
        assert!(items.iter().all(|i| i.caption.is_some()));
        let seg = items[1]
            .load_segmap(Arc::new(ClassTaxonomy::cityscapes()))
            .unwrap();
        assert_eq!(seg, street_scene(128, 96, 1).unwrap().segmap);
    }
}
