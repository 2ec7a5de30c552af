//! Independent reference implementations and fixtures shared by the
//! integration suites. Nothing here calls into the code paths it checks.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar CLAHE on one plane (`rows[y][x]`), 256 bins.
///
/// Straight-line transcription: mirror-pad to a grid multiple, per-tile
/// histogram, single-pass clip with remainder to the lowest bins, cdf_min
/// normalized mapping, identity for single-valued tiles, then bilinear
/// blending between tile centers located at `i * tile + (tile - 1) / 2`.
pub fn reference_clahe(rows: &[Vec<u8>], grid_w: usize, grid_h: usize, clip_factor: f64) -> Vec<Vec<u8>> {
    let h = rows.len();
    let w = rows[0].len();
    let tile_w = w.div_ceil(grid_w);
    let tile_h = h.div_ceil(grid_h);

    let mirror = |mut i: usize, n: usize| -> usize {
        loop {
            if i < n {
                return i;
            }
            // reflect about the far edge, then about zero if still outside
            let over = i - n;
            if over < n {
                return n - 1 - over;
            }
            i -= 2 * n;
        }
    };

    let mut luts = vec![vec![[0u32; 256]; grid_w]; grid_h];
    for ty in 0..grid_h {
        for tx in 0..grid_w {
            let mut hist = [0u64; 256];
            for y in ty * tile_h..(ty + 1) * tile_h {
                for x in tx * tile_w..(tx + 1) * tile_w {
                    hist[rows[mirror(y, h)][mirror(x, w)] as usize] += 1;
                }
            }
            let occupied = hist.iter().filter(|&&c| c > 0).count();
            let lut = &mut luts[ty][tx];
            if occupied == 1 {
                for v in 0..256 {
                    lut[v] = v as u32;
                }
                continue;
            }
            let pixels = (tile_w * tile_h) as f64;
            let limit = ((clip_factor * pixels / 256.0).round() as u64).max(1);
            let mut excess = 0;
            for c in hist.iter_mut() {
                if *c > limit {
                    excess += *c - limit;
                    *c = limit;
                }
            }
            for (i, c) in hist.iter_mut().enumerate() {
                *c += excess / 256;
                if (i as u64) < excess % 256 {
                    *c += 1;
                }
            }
            let mut cdf = [0u64; 256];
            let mut running = 0;
            for v in 0..256 {
                running += hist[v];
                cdf[v] = running;
            }
            let n = running;
            let cdf_min = *cdf.iter().find(|&&c| c > 0).unwrap();
            for v in 0..256 {
                lut[v] = if n == cdf_min {
                    v as u32
                } else if cdf[v] <= cdf_min {
                    0
                } else {
                    (255.0 * (cdf[v] - cdf_min) as f64 / (n - cdf_min) as f64).round() as u32
                };
            }
        }
    }

    // Tile i is centered at i * tile + (tile - 1) / 2. Exact fractions keep
    // half-way cases unambiguous.
    let center = |i: usize, tile: usize| Ratio::new((2 * i * tile + tile - 1) as i64, 2);
    let bracket = |p: usize, tile: usize, tiles: usize| -> (usize, usize, Ratio<i64>) {
        let p = Ratio::from_integer(p as i64);
        let zero = Ratio::from_integer(0);
        if p <= center(0, tile) {
            return (0, 0, zero);
        }
        if p >= center(tiles - 1, tile) {
            return (tiles - 1, tiles - 1, zero);
        }
        let mut i = 0;
        while center(i + 1, tile) <= p {
            i += 1;
        }
        (i, i + 1, (p - center(i, tile)) / Ratio::from_integer(tile as i64))
    };

    let one = Ratio::from_integer(1);
    let mut out = vec![vec![0u8; w]; h];
    for y in 0..h {
        let (ty0, ty1, fy) = bracket(y, tile_h, grid_h);
        for x in 0..w {
            let (tx0, tx1, fx) = bracket(x, tile_w, grid_w);
            let v = rows[y][x] as usize;
            let l = |ty: usize, tx: usize| Ratio::from_integer(luts[ty][tx][v] as i64);
            let value = (one - fy) * ((one - fx) * l(ty0, tx0) + fx * l(ty0, tx1))
                + fy * ((one - fx) * l(ty1, tx0) + fx * l(ty1, tx1));
            // non-negative, so half away from zero is half up
            out[y][x] = (value + Ratio::new(1, 2)).floor().to_integer().clamp(0, 255) as u8;
        }
    }
    out
}

/// Whole-plane histogram equalization from the cdf formula.
pub fn reference_global_equalization(rows: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let mut hist = [0u64; 256];
    for row in rows {
        for &v in row {
            hist[v as usize] += 1;
        }
    }
    let n: u64 = hist.iter().sum();
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for v in 0..256 {
        acc += hist[v];
        cdf[v] = acc;
    }
    let cdf_min = *cdf.iter().find(|&&c| c > 0).unwrap();
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if n == cdf_min {
                        v
                    } else {
                        let c = cdf[v as usize];
                        (255.0 * (c - cdf_min) as f64 / (n - cdf_min) as f64).round() as u8
                    }
                })
                .collect()
        })
        .collect()
}

/// Macro-F1 from first principles: per class count TP/FP/FN by scanning
/// sample pairs, form precision and recall as exact fractions, F1 as their
/// harmonic mean (zero when undefined), then the unweighted mean.
pub fn oracle_macro_f1(truth: &[usize], pred: &[usize], k: usize) -> (Vec<f64>, f64) {
    let mut per_class = Vec::with_capacity(k);
    let mut total = Ratio::<i64>::from_integer(0);
    for class in 0..k {
        let (mut tp, mut fp, mut fn_) = (0i64, 0i64, 0i64);
        for (&t, &p) in truth.iter().zip(pred) {
            match (t == class, p == class) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = (tp + fp > 0).then(|| Ratio::new(tp, tp + fp));
        let recall = (tp + fn_ > 0).then(|| Ratio::new(tp, tp + fn_));
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > Ratio::from_integer(0) => Ratio::from_integer(2) * p * r / (p + r),
            _ => Ratio::from_integer(0),
        };
        per_class.push(f1.to_f64().unwrap());
        total += f1;
    }
    let mean = total / Ratio::from_integer(k as i64);
    (per_class, mean.to_f64().unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random row-stochastic row with strictly positive entries.
pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.001..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Writes `n` random PNGs (mixed sizes not allowed when mixup is on, so all
/// share one shape) and a manifest with labels drawn from `classes`.
pub fn synthetic_dataset(dir: &Path, n: usize, w: u32, h: u32, classes: &[&str], seed: u64) -> PathBuf {
    let img_dir = dir.join("raw");
    std::fs::create_dir_all(&img_dir).unwrap();
    let mut r = rng(seed);
    let mut manifest = String::from("id,path,label,location\n");
    for i in 0..n {
        let gray = i % 5 == 0;
        let name = format!("img_{i:03}.png");
        let base: u8 = r.random();
        if gray {
            let img = image::GrayImage::from_fn(w, h, |x, y| {
                image::Luma([base.wrapping_add((x * 3 + y * 5) as u8) ^ r.random::<u8>() & 0x1f])
            });
            img.save(img_dir.join(&name)).unwrap();
        } else {
            let img = image::RgbImage::from_fn(w, h, |x, y| {
                image::Rgb([
                    base.wrapping_add((x * 4) as u8),
                    (y * 6) as u8 ^ (r.random::<u8>() & 0x0f),
                    r.random(),
                ])
            });
            img.save(img_dir.join(&name)).unwrap();
        }
        let label = classes[i % classes.len()];
        manifest.push_str(&format!("img_{i:03},raw/{name},{label},site{}\n", i % 3));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Relative path -> file bytes for every file under `root`.
pub fn snapshot_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
