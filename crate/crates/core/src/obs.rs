//! Per-frame detection and optical-flow observations.
//!
//! Observation files are JSONL, one delayed-capture frame per line. Flow
//! statistics are normally inline on each detection; when absent they are
//! resolved from a dense raster sidecar (`AFLW` binary format).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::token::normalize_token;

/// Lower confidence bound below which a detection is ignored.
pub const DISCARD_BELOW: f64 = 0.3;
/// Lower confidence bound for a detection to keep its predicted label.
pub const CONFIDENT_FROM: f64 = 0.5;
/// Label given to detections in the low-confidence band.
pub const UNKNOWN_LABEL: &str = "unknown";

/// Normalized `(xmin, ymin, xmax, ymax)`, y pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox(pub [f64; 4]);

impl BBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        BBox([xmin, ymin, xmax, ymax])
    }
    pub fn xmin(&self) -> f64 {
        self.0[0]
    }
    pub fn ymin(&self) -> f64 {
        self.0[1]
    }
    pub fn xmax(&self) -> f64 {
        self.0[2]
    }
    pub fn ymax(&self) -> f64 {
        self.0[3]
    }
    pub fn width(&self) -> f64 {
        self.xmax() - self.xmin()
    }
    pub fn height(&self) -> f64 {
        self.ymax() - self.ymin()
    }
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
            && self.xmin() < self.xmax()
            && self.ymin() < self.ymax()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_mag: Option<f64>,
    /// Degrees in `[0, 360)`, 0 = screen-right, 90 = screen-up.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_ang: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObservation {
    #[serde(rename = "frame")]
    pub frame_index: u64,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfidenceBand {
    Discarded,
    Unknown,
    Confident,
}

impl ConfidenceBand {
    /// Both band boundaries are left-closed: 0.3 is `Unknown`, 0.5 is `Confident`.
    pub fn of(confidence: f64) -> Self {
        if confidence < DISCARD_BELOW {
            ConfidenceBand::Discarded
        } else if confidence < CONFIDENT_FROM {
            ConfidenceBand::Unknown
        } else {
            ConfidenceBand::Confident
        }
    }
}

/// Band a detection; detections in the `Unknown` band are relabelled `unknown`.
pub fn band_detection(mut d: Detection) -> (ConfidenceBand, Detection) {
    let band = ConfidenceBand::of(d.confidence);
    if band == ConfidenceBand::Unknown {
        d.label = UNKNOWN_LABEL.to_string();
    }
    (band, d)
}

fn validate_detection(d: &mut Detection, line: usize) -> Result<()> {
    let invalid = |field, message: String| Error::Validation {
        line,
        field,
        message,
    };
    d.label = normalize_token(&d.label);
    if !crate::token::is_token(&d.label) {
        return Err(invalid(
            "label",
            format!("`{}` is not a lowercase identifier", d.label),
        ));
    }
    if !(0.0..=1.0).contains(&d.confidence) {
        return Err(invalid(
            "confidence",
            format!("{} is outside [0, 1]", d.confidence),
        ));
    }
    if !d.bbox.is_valid() {
        return Err(invalid(
            "bbox",
            format!(
                "{:?} must lie in [0, 1] with xmin < xmax and ymin < ymax",
                d.bbox.0
            ),
        ));
    }
    if let Some(m) = d.flow_mag {
        if !(m.is_finite() && m >= 0.0) {
            return Err(invalid("flow_mag", format!("{m} must be finite and >= 0")));
        }
    }
    if let Some(a) = d.flow_ang {
        if !(0.0..360.0).contains(&a) {
            return Err(invalid("flow_ang", format!("{a} is outside [0, 360)")));
        }
    }
    Ok(())
}

/// Parse observation JSONL text. Blank lines are skipped.
pub fn parse_observations(text: &str) -> Result<Vec<FrameObservation>> {
    let mut frames: Vec<FrameObservation> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut frame: FrameObservation =
            serde_json::from_str(raw).map_err(|e| Error::parse(line, e.to_string()))?;
        for d in &mut frame.detections {
            validate_detection(d, line)?;
        }
        if let Some(prev) = frames.last() {
            if frame.frame_index <= prev.frame_index {
                return Err(Error::Sequencing {
                    line,
                    frame: frame.frame_index,
                    previous: prev.frame_index,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn load_observations(path: impl AsRef<Path>) -> Result<Vec<FrameObservation>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_observations(&text).map_err(|e| e.in_file(path))
}

/// Serialize frames as JSONL (one compact object per line).
pub fn observations_to_string(frames: &[FrameObservation]) -> String {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f).expect("observation serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCell {
    pub mag: f32,
    pub ang: f32,
}

/// One dense flow grid, row-major with row 0 at the top of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRaster {
    pub width: u32,
    pub height: u32,
    pub cells: Vec<FlowCell>,
}

impl FlowRaster {
    pub fn new(width: u32, height: u32, cells: Vec<FlowCell>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Raster("width and height must be positive".into()));
        }
        if cells.len() != width as usize * height as usize {
            return Err(Error::Raster(format!(
                "expected {} cells, got {}",
                width as usize * height as usize,
                cells.len()
            )));
        }
        Ok(FlowRaster {
            width,
            height,
            cells,
        })
    }

    pub fn uniform(width: u32, height: u32, mag: f32, ang: f32) -> Self {
        let n = width as usize * height as usize;
        FlowRaster {
            width,
            height,
            cells: vec![FlowCell { mag, ang }; n],
        }
    }

    pub fn cell(&self, col: u32, row: u32) -> FlowCell {
        self.cells[row as usize * self.width as usize + col as usize]
    }
}

const RASTER_MAGIC: &[u8; 4] = b"AFLW";

/// Decode an `AFLW` sidecar: magic, u32 LE width/height/frame-count, then
/// `frame-count * width * height` pairs of LE f32 (magnitude, angle).
pub fn decode_rasters(bytes: &[u8]) -> Result<Vec<FlowRaster>> {
    if bytes.len() < 16 || &bytes[..4] != RASTER_MAGIC {
        return Err(Error::Raster("missing AFLW header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (width, height, count) = (word(4), word(8), word(12));
    let per_frame = width as usize * height as usize;
    let expected = 16 + count as usize * per_frame * 8;
    if bytes.len() != expected {
        return Err(Error::Raster(format!(
            "expected {expected} bytes for {count} frames of {width}x{height}, got {}",
            bytes.len()
        )));
    }
    let float = |i: usize| f32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let mut rasters = Vec::with_capacity(count as usize);
    let mut offset = 16;
    for _ in 0..count {
        let mut cells = Vec::with_capacity(per_frame);
        for _ in 0..per_frame {
            cells.push(FlowCell {
                mag: float(offset),
                ang: float(offset + 4),
            });
            offset += 8;
        }
        rasters.push(FlowRaster::new(width, height, cells)?);
    }
    Ok(rasters)
}

pub fn encode_rasters(rasters: &[FlowRaster]) -> Result<Vec<u8>> {
    let (width, height) = match rasters.first() {
        Some(r) => (r.width, r.height),
        None => (1, 1),
    };
    if rasters.iter().any(|r| r.width != width || r.height != height) {
        return Err(Error::Raster("all frames must share one size".into()));
    }
    let mut out = Vec::new();
    out.write_all(RASTER_MAGIC).unwrap();
    for v in [width, height, rasters.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for r in rasters {
        for c in &r.cells {
            out.extend_from_slice(&c.mag.to_le_bytes());
            out.extend_from_slice(&c.ang.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn load_rasters(path: impl AsRef<Path>) -> Result<Vec<FlowRaster>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rasters(&bytes).map_err(|e| e.in_file(path))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowAverage {
    pub mag: f64,
    pub ang: f64,
    /// Set when the flow vectors cancel out and `ang` is the fallback 0.
    pub zero_resultant: bool,
}

/// Magnitude-weighted circular mean of `(mag, angle-degrees)` pairs.
///
/// Returns the angle in `[0, 360)` and whether the resultant vanished.
pub fn circular_mean<I>(vectors: I) -> (f64, bool)
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut total = 0.0;
    let mut common: Option<f64> = None;
    let mut all_same = true;
    for (mag, ang) in vectors {
        let rad = ang.to_radians();
        sx += mag * rad.cos();
        sy += mag * rad.sin();
        total += mag;
        match common {
            None => common = Some(ang),
            Some(c) if c != ang => all_same = false,
            _ => {}
        }
    }
    let resultant = sx.hypot(sy);
    if total <= 0.0 || resultant <= 1e-9 * total {
        return (0.0, true);
    }
    if all_same {
        if let Some(c) = common {
            return (normalize_degrees(c), false);
        }
    }
    (normalize_degrees(sy.atan2(sx).to_degrees()), false)
}

pub fn normalize_degrees(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Average the raster cells whose centers fall inside `bbox` (half-open).
pub fn average_flow_in_bbox(raster: &FlowRaster, bbox: &BBox) -> Result<FlowAverage> {
    let w = raster.width as f64;
    let h = raster.height as f64;
    let mut mags = Vec::new();
    for row in 0..raster.height {
        let cy = (row as f64 + 0.5) / h;
        if cy < bbox.ymin() || cy >= bbox.ymax() {
            continue;
        }
        for col in 0..raster.width {
            let cx = (col as f64 + 0.5) / w;
            if cx < bbox.xmin() || cx >= bbox.xmax() {
                continue;
            }
            let c = raster.cell(col, row);
            mags.push((c.mag as f64, c.ang as f64));
        }
    }
    if mags.is_empty() {
        return Err(Error::DegenerateBox(format!(
            "{:?} covers no cell centers of a {}x{} raster",
            bbox.0, raster.width, raster.height
        )));
    }
    let mag = mags.iter().map(|(m, _)| m).sum::<f64>() / mags.len() as f64;
    let (ang, zero_resultant) = circular_mean(mags.iter().copied());
    Ok(FlowAverage {
        mag,
        ang,
        zero_resultant,
    })
}

/// Fill missing per-box flow from rasters (raster `i` belongs to frame index `i`).
/// Inline statistics are kept when present.
pub fn resolve_flow(frames: &mut [FrameObservation], rasters: Option<&[FlowRaster]>) -> Result<()> {
    for frame in frames.iter_mut() {
        for d in frame.detections.iter_mut() {
            if d.flow_mag.is_some() && d.flow_ang.is_some() {
                continue;
            }
            let raster = rasters
                .and_then(|r| r.get(frame.frame_index as usize))
                .ok_or_else(|| {
                    Error::Raster(format!(
                        "frame {} detection `{}` has no inline flow and no raster frame",
                        frame.frame_index, d.label
                    ))
                })?;
            let avg = average_flow_in_bbox(raster, &d.bbox)?;
            d.flow_mag.get_or_insert(avg.mag);
            d.flow_ang.get_or_insert(avg.ang);
        }
    }
    Ok(())
}
