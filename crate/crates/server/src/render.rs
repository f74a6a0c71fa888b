//! Frame images for synthetic fixtures.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use image::{Rgb, RgbImage};
use trackmark_core::metrics::SyntheticFixture;
use trackmark_core::store::{save_manifest, MANIFEST_VERSION};
use trackmark_core::{Label, VideoManifest};

pub const PIXELS_PER_CELL: u32 = 8;
pub const FIXTURE_FPS: f64 = 30.0;

const BACKGROUND: Rgb<u8> = Rgb([40, 44, 52]);
const OBJECT: Rgb<u8> = Rgb([230, 120, 40]);
const OUTLINE: Rgb<u8> = Rgb([120, 200, 120]);

fn to_px(v: f64, extent: u32) -> u32 {
    ((v * extent as f64).floor().max(0.0) as u32).min(extent - 1)
}

/// Draws one frame: the box outline and a filled square on the object cell.
pub fn render_frame(label: &Label, width: u32, height: u32, cell: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, BACKGROUND);
    if let Some(b) = label.bbox {
        let (x0, x1) = (to_px(b.x_min, width), to_px(b.x_max, width));
        let (y0, y1) = (to_px(b.y_min, height), to_px(b.y_max, height));
        for x in x0..=x1 {
            img.put_pixel(x, y0, OUTLINE);
            img.put_pixel(x, y1, OUTLINE);
        }
        for y in y0..=y1 {
            img.put_pixel(x0, y, OUTLINE);
            img.put_pixel(x1, y, OUTLINE);
        }
    }
    let cx = to_px(label.point.x, width);
    let cy = to_px(label.point.y, height);
    let half = (cell / 2).max(1);
    for y in cy.saturating_sub(half)..(cy + half).min(height) {
        for x in cx.saturating_sub(half)..(cx + half).min(width) {
            img.put_pixel(x, y, OBJECT);
        }
    }
    img
}

/// Writes `frame_NNNNN.png` for every fixture frame plus `manifest.json`
/// into `dir`, returning the manifest path.
pub fn write_fixture_frames(fixture: &SyntheticFixture, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let width = fixture.spec.width as u32 * PIXELS_PER_CELL;
    let height = fixture.spec.height as u32 * PIXELS_PER_CELL;
    let mut frames = Vec::with_capacity(fixture.frame_count());
    for (f, label) in fixture.ground_truth.iter().enumerate() {
        let name = PathBuf::from(format!("frame_{f:05}.png"));
        let path = dir.join(&name);
        render_frame(label, width, height, PIXELS_PER_CELL)
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        frames.push(name);
    }
    let n = frames.len();
    let manifest = VideoManifest {
        schema_version: MANIFEST_VERSION,
        frames,
        width,
        height,
        fps: FIXTURE_FPS,
        duration_s: n as f64 / FIXTURE_FPS,
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join("manifest.json");
    save_manifest(&manifest, &path)?;
    Ok(path)
}
