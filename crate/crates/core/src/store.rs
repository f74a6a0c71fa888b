//! Feature cache file format, video manifests and session persistence.
//!
//! Cache layout (all integers and floats little-endian):
//!
//! ```text
//! "DTC1"                          4 bytes
//! version, frames, H, W, C        5 x u32
//! descriptor maps                 frames x H x W x C f32 (row-major, channel innermost)
//! box-offset maps                 frames x H x W x 4 f32 (same layout)
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::descriptor::BOX_CHANNELS;
use crate::error::{Error, Result};
use crate::geom::GridMap;
use crate::metrics::AnnotationStyle;
use crate::session::JumpKind;
use crate::track::Annotation;

pub const CACHE_MAGIC: &[u8; 4] = b"DTC1";
pub const CACHE_VERSION: u32 = 1;
pub const CACHE_HEADER_LEN: usize = 24;

/// Per-frame descriptor maps and box-offset maps, resident in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorCache {
    source_id: String,
    desc: Vec<GridMap<f32>>,
    boxes: Vec<GridMap<f32>>,
}

impl DescriptorCache {
    pub fn new(desc: Vec<GridMap<f32>>, boxes: Vec<GridMap<f32>>, source_id: impl Into<String>) -> Result<Self> {
        if desc.is_empty() {
            return Err(Error::Schema("cache needs at least one frame".into()));
        }
        if desc.len() != boxes.len() {
            return Err(Error::Schema(format!(
                "{} descriptor maps but {} box maps",
                desc.len(),
                boxes.len()
            )));
        }
        let (h, w, c) = (desc[0].height(), desc[0].width(), desc[0].channels());
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Schema(format!("empty map shape {h}x{w}x{c}")));
        }
        for (f, (d, b)) in desc.iter().zip(&boxes).enumerate() {
            if (d.height(), d.width(), d.channels()) != (h, w, c) {
                return Err(Error::Schema(format!("frame {f}: descriptor map shape differs")));
            }
            if (b.height(), b.width(), b.channels()) != (h, w, BOX_CHANNELS) {
                return Err(Error::Schema(format!(
                    "frame {f}: box map must be {h}x{w}x{BOX_CHANNELS}"
                )));
            }
        }
        Ok(DescriptorCache {
            source_id: source_id.into(),
            desc,
            boxes,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn frame_count(&self) -> usize {
        self.desc.len()
    }

    pub fn height(&self) -> usize {
        self.desc[0].height()
    }

    pub fn width(&self) -> usize {
        self.desc[0].width()
    }

    pub fn channels(&self) -> usize {
        self.desc[0].channels()
    }

    /// Descriptor map of `frame`. Panics when out of range.
    pub fn descriptors(&self, frame: usize) -> &GridMap<f32> {
        &self.desc[frame]
    }

    /// Box-offset map of `frame`. Panics when out of range.
    pub fn boxes(&self, frame: usize) -> &GridMap<f32> {
        &self.boxes[frame]
    }

    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> usize {
        let cells = self.height() * self.width();
        CACHE_HEADER_LEN + 4 * self.frame_count() * cells * (self.channels() + BOX_CHANNELS)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(CACHE_MAGIC);
        for v in [
            CACHE_VERSION,
            self.frame_count() as u32,
            self.height() as u32,
            self.width() as u32,
            self.channels() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for map in self.desc.iter().chain(&self.boxes) {
            for v in map.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], source_id: impl Into<String>) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != CACHE_MAGIC {
            return Err(Error::Format("bad magic, not a descriptor cache".into()));
        }
        if bytes.len() < CACHE_HEADER_LEN {
            return Err(Error::Truncated {
                expected: CACHE_HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let field = |i: usize| {
            let at = 4 + 4 * i;
            u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte field"))
        };
        let version = field(0);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported cache version {version}")));
        }
        let (frames, h, w, c) = (field(1) as u64, field(2) as u64, field(3) as u64, field(4) as u64);
        if frames == 0 || h == 0 || w == 0 || c == 0 {
            return Err(Error::Schema(format!(
                "declared shape {frames} frames of {h}x{w}x{c} is empty"
            )));
        }
        let floats_per_frame = h
            .checked_mul(w)
            .and_then(|cells| cells.checked_mul(c + BOX_CHANNELS as u64))
            .ok_or_else(|| Error::Schema("declared dimensions overflow".into()))?;
        let expected = frames
            .checked_mul(floats_per_frame)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(CACHE_HEADER_LEN as u64))
            .filter(|&n| usize::try_from(n).is_ok())
            .ok_or_else(|| Error::Schema("declared dimensions overflow".into()))?;
        let found = bytes.len() as u64;
        if found < expected {
            return Err(Error::Truncated { expected, found });
        }
        if found > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after the declared payload",
                found - expected
            )));
        }
        let (frames, h, w, c) = (frames as usize, h as usize, w as usize, c as usize);
        let mut chunks = bytes[CACHE_HEADER_LEN..].chunks_exact(4);
        let mut read_map = |channels: usize| {
            let values: Vec<f32> = chunks
                .by_ref()
                .take(h * w * channels)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte float")))
                .collect();
            GridMap::new(h, w, channels, values).map_err(|e| Error::Schema(e.to_string()))
        };
        let desc = (0..frames).map(|_| read_map(c)).collect::<Result<Vec<_>>>()?;
        let boxes = (0..frames)
            .map(|_| read_map(BOX_CHANNELS))
            .collect::<Result<Vec<_>>>()?;
        DescriptorCache::new(desc, boxes, source_id)
    }
}

pub fn write_cache(cache: &DescriptorCache, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, cache.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Loads a whole cache into memory. The source id is the file name.
pub fn read_cache(path: impl AsRef<Path>) -> Result<DescriptorCache> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    DescriptorCache::from_bytes(&bytes, id)
}

pub const MANIFEST_VERSION: u32 = 1;

/// Ordered list of pre-extracted PNG frames for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub schema_version: u32,
    /// Frame image paths, relative to the manifest's directory unless absolute.
    pub frames: Vec<PathBuf>,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub duration_s: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl VideoManifest {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_path(&self, frame: usize) -> Option<PathBuf> {
        self.frames.get(frame).map(|p| self.base_dir.join(p))
    }

    pub fn check_consistency(&self) -> Result<()> {
        if self.schema_version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest version {}",
                self.schema_version
            )));
        }
        if self.frames.is_empty() || self.width == 0 || self.height == 0 {
            return Err(Error::Schema("manifest needs frames and a frame size".into()));
        }
        let implied = self.fps * self.duration_s;
        if self.fps.is_nan() || self.fps <= 0.0 || (implied - self.frames.len() as f64).abs() > 0.5 {
            return Err(Error::Schema(format!(
                "{} fps for {} s implies {implied} frames, manifest lists {}",
                self.fps,
                self.duration_s,
                self.frames.len()
            )));
        }
        Ok(())
    }

    /// Pairs the manifest with a cache; frame counts must agree.
    pub fn check_against(&self, cache: &DescriptorCache) -> Result<()> {
        if self.frame_count() != cache.frame_count() {
            return Err(Error::Schema(format!(
                "manifest lists {} frames, cache holds {}",
                self.frame_count(),
                cache.frame_count()
            )));
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<VideoManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: VideoManifest =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.check_consistency()?;
    for f in 0..manifest.frame_count() {
        let p = manifest.frame_path(f).expect("frame in range");
        if !p.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "frame image missing"),
            ));
        }
    }
    Ok(manifest)
}

pub fn save_manifest(manifest: &VideoManifest, path: impl AsRef<Path>) -> Result<()> {
    write_json(manifest, path.as_ref())
}

pub const SESSION_VERSION: u32 = 1;

/// Something the operator did, stamped with session-clock milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Session opened or resumed, showing `frame`.
    Open {
        frame: usize,
    },
    /// Viewport click. `completed` is false while an extreme-click box is
    /// still collecting points.
    Click {
        frame: usize,
        x: f64,
        y: f64,
        completed: bool,
    },
    Clear {
        frame: usize,
        removed: bool,
    },
    Refresh {
        frames: usize,
    },
    Jump {
        jump: JumpKind,
        from: usize,
        to: usize,
        #[serde(default, skip_serializing_if = "is_zero")]
        discarded_partial: usize,
    },
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

/// Persisted annotation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub schema_version: u32,
    pub style: AnnotationStyle,
    pub seed: u64,
    pub frame_count: usize,
    #[serde(default)]
    pub video: Option<String>,
    pub cache: String,
    /// Wall-clock time (ms since the Unix epoch) when the session clock read 0.
    pub wall_clock_epoch_ms: u64,
    /// Frame order for random-order presentation; empty otherwise.
    #[serde(default)]
    pub presentation_order: Vec<usize>,
    pub annotations: Vec<Annotation<f64>>,
    pub events: Vec<Event>,
    /// Fields written by newer versions, carried through untouched.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SessionFile {
    pub fn new(style: AnnotationStyle, frame_count: usize, cache: impl Into<String>, seed: u64) -> Self {
        SessionFile {
            schema_version: SESSION_VERSION,
            style,
            seed,
            frame_count,
            video: None,
            cache: cache.into(),
            wall_clock_epoch_ms: 0,
            presentation_order: Vec::new(),
            annotations: Vec::new(),
            events: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn annotated_frames(&self) -> BTreeSet<usize> {
        self.annotations.iter().map(|a| a.frame).collect()
    }

    /// Checks the one-annotation-per-frame and monotone-clock invariants.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version > SESSION_VERSION {
            return Err(Error::Format(format!(
                "session schema {} is newer than supported {SESSION_VERSION}",
                self.schema_version
            )));
        }
        let mut seen = BTreeSet::new();
        for a in &self.annotations {
            a.validate()?;
            if a.frame >= self.frame_count {
                return Err(Error::Integrity(format!(
                    "annotation on frame {} of a {}-frame video",
                    a.frame, self.frame_count
                )));
            }
            if !seen.insert(a.frame) {
                return Err(Error::Integrity(format!("two annotations for frame {}", a.frame)));
            }
        }
        if let Some(w) = self.events.windows(2).find(|w| w[1].t_ms < w[0].t_ms) {
            return Err(Error::Integrity(format!(
                "event timestamps go backwards ({} -> {})",
                w[0].t_ms, w[1].t_ms
            )));
        }
        if !self.presentation_order.is_empty() {
            let mut order = self.presentation_order.clone();
            order.sort_unstable();
            if order != (0..self.frame_count).collect::<Vec<_>>() {
                return Err(Error::Integrity("presentation order is not a permutation".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let session: SessionFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        session.validate()?;
        Ok(session)
    }
}

pub fn load_session(path: impl AsRef<Path>) -> Result<SessionFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SessionFile::from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a half-written session.
pub fn save_session(session: &SessionFile, path: impl AsRef<Path>) -> Result<()> {
    session.validate()?;
    write_json(session, path.as_ref())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    let tmp = path.with_extension("tmp~");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::metrics::StylePreset;

    fn tiny_cache() -> DescriptorCache {
        DescriptorCache::new(
            vec![GridMap::new(1, 1, 1, vec![1.5]).unwrap()],
            vec![GridMap::new(1, 1, 4, vec![0.1, 0.2, 0.3, 0.4]).unwrap()],
            "tiny",
        )
        .unwrap()
    }

    #[test]
    fn minimal_cache_layout() {
        let bytes = tiny_cache().to_bytes();
        assert_eq!(bytes.len(), CACHE_HEADER_LEN + 4 + 16);
        assert_eq!(&bytes[..4], b"DTC1");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &1.5f32.to_le_bytes());
        let back = DescriptorCache::from_bytes(&bytes, "tiny").unwrap();
        assert_eq!(back, tiny_cache());
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = tiny_cache().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(DescriptorCache::from_bytes(&bytes, ""), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = tiny_cache().to_bytes();
        bytes[4] = 2;
        assert!(matches!(DescriptorCache::from_bytes(&bytes, ""), Err(Error::Format(_))));
    }

    #[test]
    fn length_must_match_declaration() {
        let bytes = tiny_cache().to_bytes();
        assert!(matches!(
            DescriptorCache::from_bytes(&bytes[..bytes.len() - 1], ""),
            Err(Error::Truncated {
                expected: 44,
                found: 43
            })
        ));
        assert!(matches!(
            DescriptorCache::from_bytes(&bytes[..10], ""),
            Err(Error::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(DescriptorCache::from_bytes(&long, ""), Err(Error::Format(_))));
    }

    #[test]
    fn overflowing_dimensions() {
        let mut bytes = tiny_cache().to_bytes();
        for i in 2..5 {
            bytes[4 + 4 * i..8 + 4 * i].copy_from_slice(&u32::MAX.to_le_bytes());
        }
        bytes[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(DescriptorCache::from_bytes(&bytes, ""), Err(Error::Schema(_))));
    }

    #[test]
    fn non_finite_payload_rejected() {
        let mut bytes = tiny_cache().to_bytes();
        bytes[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(DescriptorCache::from_bytes(&bytes, ""), Err(Error::Schema(_))));
    }

    #[test]
    fn cache_shape_checks() {
        let d = GridMap::new(1, 1, 1, vec![0.0]).unwrap();
        let b3 = GridMap::new(1, 1, 3, vec![0.0; 3]).unwrap();
        assert!(DescriptorCache::new(vec![d.clone()], vec![b3], "").is_err());
        assert!(DescriptorCache::new(vec![], vec![], "").is_err());
        let d2 = GridMap::new(1, 2, 1, vec![0.0; 2]).unwrap();
        let b = GridMap::new(1, 1, 4, vec![0.0; 4]).unwrap();
        assert!(DescriptorCache::new(vec![d, d2], vec![b.clone(), b], "").is_err());
    }

    fn session() -> SessionFile {
        SessionFile::new(StylePreset::Click.style(), 10, "c.dtc", 1)
    }

    #[test]
    fn empty_session_roundtrip() {
        let s = session();
        assert_eq!(SessionFile::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn duplicate_frame_rejected() {
        let mut s = session();
        let p = Point::new(0.5, 0.5).unwrap();
        s.annotations.push(Annotation::click(7, p, 0));
        s.annotations.push(Annotation::click(7, p, 5));
        let text = s.to_json().unwrap();
        assert!(matches!(SessionFile::from_json(&text), Err(Error::Integrity(_))));
    }

    #[test]
    fn backwards_clock_rejected() {
        let mut s = session();
        s.events.push(Event {
            t_ms: 5,
            kind: EventKind::Open { frame: 0 },
        });
        s.events.push(Event {
            t_ms: 4,
            kind: EventKind::Refresh { frames: 10 },
        });
        assert!(matches!(s.validate(), Err(Error::Integrity(_))));
    }

    #[test]
    fn unknown_fields_preserved() {
        let mut v: Value = serde_json::from_str(&session().to_json().unwrap()).unwrap();
        v["annotator"] = Value::String("lab-3".into());
        let s = SessionFile::from_json(&v.to_string()).unwrap();
        assert_eq!(s.extra["annotator"], "lab-3");
        let again: Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(again["annotator"], "lab-3");
    }

    #[test]
    fn malformed_session() {
        assert!(matches!(SessionFile::from_json("{ nope"), Err(Error::Parse(_))));
    }
}
