//! Motion-salience filtering, window aggregation and discretization of
//! per-frame observations into per-object behaviours.
//!
//! Coordinates: bounding boxes and placement use normalized screen
//! coordinates with y pointing down (top = small y). Flow angles use the
//! mathematical convention, 0 = right and 90 = up.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv;
use crate::obs::{band_detection, circular_mean, BBox, ConfidenceBand, Detection, FrameObservation, UNKNOWN_LABEL};
use crate::token::{is_token, normalize_token};

pub const DEFAULT_WINDOW: usize = 5;
pub const PLACEMENT_LEVELS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub name: String,
    /// Exclusive upper bound; `None` for the final, unbounded bucket.
    pub upper: Option<f64>,
}

/// An ordered partition of the real line into named buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketFamily {
    buckets: Vec<Bucket>,
}

impl BucketFamily {
    pub fn new(buckets: Vec<Bucket>) -> Result<Self> {
        if buckets.is_empty() {
            return Err(Error::Scheme("a bucket family needs at least one bucket".into()));
        }
        for (i, b) in buckets.iter().enumerate() {
            if !is_token(&b.name) {
                return Err(Error::Scheme(format!("bad bucket name `{}`", b.name)));
            }
            if buckets[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::Scheme(format!("duplicate bucket name `{}`", b.name)));
            }
            let last = i + 1 == buckets.len();
            match (b.upper, last) {
                (Some(_), true) => {
                    return Err(Error::Scheme(format!("final bucket `{}` must be unbounded", b.name)))
                }
                (None, false) => {
                    return Err(Error::Scheme(format!("bucket `{}` needs an upper bound", b.name)))
                }
                (Some(u), false) => {
                    if !u.is_finite() {
                        return Err(Error::Scheme(format!("bucket `{}` bound is not finite", b.name)));
                    }
                    if let Some(prev) = i.checked_sub(1).and_then(|p| buckets[p].upper) {
                        if u <= prev {
                            return Err(Error::Scheme(format!(
                                "bounds must strictly increase at `{}`",
                                b.name
                            )));
                        }
                    }
                }
                (None, true) => {}
            }
        }
        Ok(BucketFamily { buckets })
    }

    fn from_pairs(pairs: &[(&str, Option<f64>)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|(n, u)| Bucket {
                    name: n.to_string(),
                    upper: *u,
                })
                .collect(),
        )
        .expect("built-in bucket family is valid")
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.buckets.iter().map(|b| b.name.as_str())
    }

    pub fn index_of(&self, value: f64) -> usize {
        self.buckets
            .iter()
            .position(|b| matches!(b.upper, Some(u) if value < u))
            .unwrap_or(self.buckets.len() - 1)
    }

    pub fn bucket_of(&self, value: f64) -> &str {
        &self.buckets[self.index_of(value)].name
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.buckets.iter().position(|b| b.name == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.buckets[index].name
    }
}

impl fmt::Display for BucketFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .buckets
            .iter()
            .map(|b| match b.upper {
                Some(u) => format!("{}:{}", b.name, u),
                None => b.name.clone(),
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for BucketFamily {
    type Err = Error;

    /// `name:upper name:upper ... final_name`, separated by spaces or commas.
    fn from_str(s: &str) -> Result<Self> {
        let mut buckets = Vec::new();
        for item in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (name, upper) = match item.split_once(':') {
                Some((n, u)) => {
                    let u: f64 = u
                        .parse()
                        .map_err(|_| Error::Scheme(format!("bad bound in `{item}`")))?;
                    (n, Some(u))
                }
                None => (item, None),
            };
            buckets.push(Bucket {
                name: normalize_token(name),
                upper,
            });
        }
        BucketFamily::new(buckets)
    }
}

/// Discretization boundaries for the numeric behaviour properties.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketScheme {
    /// Operation area as a fraction of the frame area.
    pub area: BucketFamily,
    /// Operation area divided by mean bounding-box area.
    pub movement: BucketFamily,
    /// Flow magnitude bands, used only by rule induction and evaluation.
    pub magnitude: BucketFamily,
}

const NUMBER_WORDS: [&str; 11] = [
    "zero",
    "five",
    "ten",
    "fifteen",
    "twenty",
    "twenty_five",
    "thirty",
    "thirty_five",
    "forty",
    "forty_five",
    "fifty",
];

impl Default for BucketScheme {
    fn default() -> Self {
        let area = BucketFamily::from_pairs(&[
            ("very_small", Some(0.02)),
            ("small", Some(0.05)),
            ("medium", Some(0.15)),
            ("large", Some(0.40)),
            ("very_large", None),
        ]);
        let movement = BucketFamily::from_pairs(&[
            ("small", Some(1.5)),
            ("medium", Some(3.0)),
            ("large", Some(6.0)),
            ("very_large", None),
        ]);
        let mut mags: Vec<Bucket> = NUMBER_WORDS
            .windows(2)
            .enumerate()
            .map(|(i, w)| Bucket {
                name: format!("{}_to_{}", w[0], w[1]),
                upper: Some(5.0 * (i + 1) as f64),
            })
            .collect();
        mags.push(Bucket {
            name: "fifty_plus".into(),
            upper: None,
        });
        BucketScheme {
            area,
            movement,
            magnitude: BucketFamily::new(mags).expect("default magnitude bands"),
        }
    }
}

impl BucketScheme {
    pub fn families(&self) -> [&BucketFamily; 3] {
        [&self.area, &self.movement, &self.magnitude]
    }

    /// Parse the key/value form; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut scheme = BucketScheme::default();
        for e in kv::parse(text)? {
            let fam: BucketFamily = e.value.parse().map_err(|err| Error::parse(e.line, format!("{err}")))?;
            match e.key.as_str() {
                "area" | "operation_area" => scheme.area = fam,
                "movement" | "movement_in_place" => scheme.movement = fam,
                "magnitude" => scheme.magnitude = fam,
                other => return Err(Error::parse(e.line, format!("unknown scheme key `{other}`"))),
            }
        }
        Ok(scheme)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    pub fn to_config(&self) -> String {
        format!(
            "operation_area = {}\nmovement_in_place = {}\nmagnitude = {}\n",
            self.area, self.movement, self.magnitude
        )
    }
}

/// Eight 45-degree compass sectors, listed in clockwise order from north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    N,
    Ne,
    E,
    Se,
    S,
    Sw,
    W,
    Nw,
}

impl Sector {
    pub const CLOCKWISE: [Sector; 8] = [
        Sector::N,
        Sector::Ne,
        Sector::E,
        Sector::Se,
        Sector::S,
        Sector::Sw,
        Sector::W,
        Sector::Nw,
    ];

    /// Position in clockwise order, north = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Sector {
        Self::CLOCKWISE[i % 8]
    }

    /// The sector reached after `ticks` clockwise steps.
    pub fn clockwise(self, ticks: usize) -> Sector {
        Self::from_index(self.index() + ticks)
    }

    pub fn anticlockwise(self, ticks: usize) -> Sector {
        Self::from_index(self.index() + 8 - ticks % 8)
    }

    /// Sector of a flow angle in degrees (0 = right, 90 = up). Sectors are
    /// centered on multiples of 45 degrees and left-closed, so `n` covers
    /// `[67.5, 112.5)`.
    pub fn from_degrees(deg: f64) -> Sector {
        // counterclockwise from east: e, ne, n, nw, w, sw, s, se
        const CCW: [Sector; 8] = [
            Sector::E,
            Sector::Ne,
            Sector::N,
            Sector::Nw,
            Sector::W,
            Sector::Sw,
            Sector::S,
            Sector::Se,
        ];
        let k = ((deg.rem_euclid(360.0) + 22.5) / 45.0).floor() as usize % 8;
        CCW[k]
    }

    pub fn token(self) -> &'static str {
        match self {
            Sector::N => "n",
            Sector::Ne => "ne",
            Sector::E => "e",
            Sector::Se => "se",
            Sector::S => "s",
            Sector::Sw => "sw",
            Sector::W => "w",
            Sector::Nw => "nw",
        }
    }

    pub fn from_token(s: &str) -> Option<Sector> {
        Self::CLOCKWISE.into_iter().find(|x| x.token() == s)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vert {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horiz {
    Left,
    Right,
}

impl Vert {
    pub const ALL: [Vert; 2] = [Vert::Top, Vert::Bottom];
    pub fn token(self) -> &'static str {
        match self {
            Vert::Top => "top",
            Vert::Bottom => "bottom",
        }
    }
    pub fn from_token(s: &str) -> Option<Vert> {
        Self::ALL.into_iter().find(|v| v.token() == s)
    }
}

impl Horiz {
    pub const ALL: [Horiz; 2] = [Horiz::Left, Horiz::Right];
    pub fn token(self) -> &'static str {
        match self {
            Horiz::Left => "left",
            Horiz::Right => "right",
        }
    }
    pub fn from_token(s: &str) -> Option<Horiz> {
        Self::ALL.into_iter().find(|h| h.token() == s)
    }
}

/// Three-level quadrant path; level 0 splits the whole frame in four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement(pub [(Vert, Horiz); PLACEMENT_LEVELS]);

impl Placement {
    /// Quadrant path of a point in normalized y-down coordinates. A
    /// coordinate exactly on a split line goes to the bottom/right half.
    pub fn of_point(x: f64, y: f64) -> Placement {
        let bit = |c: f64, level: usize| -> bool {
            let scaled = (c.clamp(0.0, 1.0) * (1u32 << (level + 1)) as f64).floor() as u64;
            scaled % 2 == 1 || c >= 1.0
        };
        let mut levels = [(Vert::Top, Horiz::Left); PLACEMENT_LEVELS];
        for (l, slot) in levels.iter_mut().enumerate() {
            let v = if bit(y, l) { Vert::Bottom } else { Vert::Top };
            let h = if bit(x, l) { Horiz::Right } else { Horiz::Left };
            *slot = (v, h);
        }
        Placement(levels)
    }

    pub fn level(&self, level: usize) -> (Vert, Horiz) {
        self.0[level]
    }
}

/// One decimal place of flow magnitude, stored exactly as tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tenths(pub u32);

impl Tenths {
    pub fn from_f64(v: f64) -> Tenths {
        Tenths((v.max(0.0) * 10.0).round() as u32)
    }
    pub fn value(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

/// Numeric per-window properties of one object before discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowAggregate {
    pub time_step: u32,
    pub mean_mag: f64,
    pub mean_angle: f64,
    pub zero_resultant: bool,
    pub sector: Sector,
    pub operation_area: f64,
    pub movement_in_place: f64,
    pub placement: Placement,
    pub frames_present: usize,
}

/// The discrete facts of one object at one time-step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BehaviourStep {
    pub time_step: u32,
    pub magnitude: Tenths,
    pub sector: Sector,
    pub area: String,
    pub movement: String,
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectBehaviour {
    pub clip_id: String,
    pub object_label: String,
    pub steps: Vec<BehaviourStep>,
}

impl ObjectBehaviour {
    /// `<clip_id>#<object_label>`, the key used by corpus and summary files.
    pub fn key(&self) -> String {
        format!("{}#{}", self.clip_id, self.object_label)
    }
}

/// Labels surviving the salience filter in one window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSalience {
    pub window: u64,
    pub frames: Vec<u64>,
    /// Surviving label -> frames in which its magnitude reached the frame mean.
    pub survivors: BTreeMap<String, Vec<u64>>,
}

/// The detection kept per label in one frame: the most confident one.
fn tracks_in_frame(frame: &FrameObservation) -> BTreeMap<&str, &Detection> {
    let mut best: BTreeMap<&str, &Detection> = BTreeMap::new();
    for d in &frame.detections {
        best.entry(d.label.as_str())
            .and_modify(|cur| {
                if d.confidence > cur.confidence {
                    *cur = d;
                }
            })
            .or_insert(d);
    }
    best
}

/// Per non-overlapping window of `window` frames (by frame index), the labels
/// whose flow magnitude reaches the frame's mean over confident detections
/// in at least `ceil(window / 2)` of the window's frames.
///
/// Expects banded frames (`unknown` marks low-confidence detections, which
/// are compared against the confident mean). Missing magnitudes count as 0.
pub fn select_salient(frames: &[FrameObservation], window: usize) -> Vec<WindowSalience> {
    assert!(window >= 1, "window length must be positive");
    let needed = window.div_ceil(2);
    let mut windows: BTreeMap<u64, WindowSalience> = BTreeMap::new();
    let mut passes: BTreeMap<u64, BTreeMap<String, Vec<u64>>> = BTreeMap::new();
    for frame in frames {
        let w = frame.frame_index / window as u64;
        let entry = windows.entry(w).or_insert_with(|| WindowSalience {
            window: w,
            ..Default::default()
        });
        entry.frames.push(frame.frame_index);

        let mag = |d: &Detection| d.flow_mag.unwrap_or(0.0);
        let confident: Vec<f64> = frame
            .detections
            .iter()
            .filter(|d| d.label != UNKNOWN_LABEL)
            .map(mag)
            .collect();
        let pool: Vec<f64> = if confident.is_empty() {
            frame.detections.iter().map(mag).collect()
        } else {
            confident
        };
        if pool.is_empty() {
            continue;
        }
        let mean = pool.iter().sum::<f64>() / pool.len() as f64;
        for (label, d) in tracks_in_frame(frame) {
            if mag(d) >= mean {
                passes
                    .entry(w)
                    .or_default()
                    .entry(label.to_string())
                    .or_default()
                    .push(frame.frame_index);
            }
        }
    }
    for (w, labels) in passes {
        let ws = windows.get_mut(&w).expect("window exists");
        ws.survivors = labels.into_iter().filter(|(_, f)| f.len() >= needed).collect();
    }
    windows.into_values().collect()
}

/// Average one label's detections over a window.
pub fn aggregate_window(detections: &[&Detection], time_step: u32) -> Result<WindowAggregate> {
    if detections.is_empty() {
        return Err(Error::DegenerateBox("no detections in window".into()));
    }
    let n = detections.len() as f64;
    let mean_mag = detections.iter().map(|d| d.flow_mag.unwrap_or(0.0)).sum::<f64>() / n;
    let (mean_angle, zero_resultant) = circular_mean(
        detections
            .iter()
            .map(|d| (d.flow_mag.unwrap_or(0.0), d.flow_ang.unwrap_or(0.0))),
    );
    let fold = |f: fn(&BBox) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        detections.iter().map(|d| f(&d.bbox)).fold(init, pick)
    };
    let xmin = fold(BBox::xmin, f64::INFINITY, f64::min);
    let ymin = fold(BBox::ymin, f64::INFINITY, f64::min);
    let xmax = fold(BBox::xmax, f64::NEG_INFINITY, f64::max);
    let ymax = fold(BBox::ymax, f64::NEG_INFINITY, f64::max);
    let operation_area = (xmax - xmin) * (ymax - ymin);
    let mean_box = detections.iter().map(|d| d.bbox.area()).sum::<f64>() / n;
    if mean_box <= 0.0 {
        return Err(Error::DegenerateBox("mean bounding-box area is zero".into()));
    }
    Ok(WindowAggregate {
        time_step,
        mean_mag,
        mean_angle,
        zero_resultant,
        sector: Sector::from_degrees(mean_angle),
        operation_area,
        movement_in_place: operation_area / mean_box,
        placement: Placement::of_point((xmin + xmax) / 2.0, (ymin + ymax) / 2.0),
        frames_present: detections.len(),
    })
}

pub fn discretize(agg: &WindowAggregate, scheme: &BucketScheme) -> BehaviourStep {
    BehaviourStep {
        time_step: agg.time_step,
        magnitude: Tenths::from_f64(agg.mean_mag),
        sector: agg.sector,
        area: scheme.area.bucket_of(agg.operation_area).to_string(),
        movement: scheme.movement.bucket_of(agg.movement_in_place).to_string(),
        placement: agg.placement,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    /// Confident object behaviours, sorted by label.
    pub behaviours: Vec<ObjectBehaviour>,
    /// Behaviours of low-confidence (`unknown`) detections, kept aside.
    pub unknown: Vec<ObjectBehaviour>,
}

/// Band detections: drop those below 0.3 and relabel the low band `unknown`.
pub fn band_frames(frames: &[FrameObservation]) -> Vec<FrameObservation> {
    frames
        .iter()
        .map(|f| FrameObservation {
            frame_index: f.frame_index,
            detections: f
                .detections
                .iter()
                .cloned()
                .map(band_detection)
                .filter(|(band, _)| *band != ConfidenceBand::Discarded)
                .map(|(_, d)| d)
                .collect(),
        })
        .collect()
}

/// Full extraction for one clip. Flow statistics must already be resolved.
pub fn extract_behaviours(
    clip_id: &str,
    frames: &[FrameObservation],
    scheme: &BucketScheme,
    window: usize,
) -> Result<Extraction> {
    for f in frames {
        if let Some(d) = f
            .detections
            .iter()
            .find(|d| d.flow_mag.is_none() || d.flow_ang.is_none())
        {
            return Err(Error::Raster(format!(
                "frame {} detection `{}` has unresolved flow",
                f.frame_index, d.label
            )));
        }
    }
    let banded = band_frames(frames);
    let by_index: BTreeMap<u64, &FrameObservation> = banded.iter().map(|f| (f.frame_index, f)).collect();
    let mut steps: BTreeMap<String, Vec<BehaviourStep>> = BTreeMap::new();
    for ws in select_salient(&banded, window) {
        for label in ws.survivors.keys() {
            let dets: Vec<&Detection> = ws
                .frames
                .iter()
                .filter_map(|i| tracks_in_frame(by_index[i]).get(label.as_str()).copied())
                .collect();
            let list = steps.entry(label.clone()).or_default();
            let agg = aggregate_window(&dets, list.len() as u32 + 1)?;
            list.push(discretize(&agg, scheme));
        }
    }
    let mut out = Extraction::default();
    for (label, steps) in steps {
        let b = ObjectBehaviour {
            clip_id: clip_id.to_string(),
            object_label: label,
            steps,
        };
        if b.object_label == UNKNOWN_LABEL {
            out.unknown.push(b);
        } else {
            out.behaviours.push(b);
        }
    }
    Ok(out)
}

/// Dataset summary figures: objects per clip, time-steps per clip and
/// objects per time-step, with an object-type treated as one physical object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub clips: usize,
    pub objects_per_clip: f64,
    pub steps_per_clip: f64,
    pub objects_per_step: f64,
}

/// `clips` holds each clip's behaviours; time-steps of a clip are counted
/// as its longest object behaviour.
pub fn corpus_stats(clips: &[Vec<ObjectBehaviour>]) -> CorpusStats {
    let n = clips.len().max(1) as f64;
    let objects: usize = clips.iter().map(Vec::len).sum();
    let steps: usize = clips
        .iter()
        .map(|c| c.iter().map(|b| b.steps.len()).max().unwrap_or(0))
        .sum();
    let object_steps: usize = clips.iter().flatten().map(|b| b.steps.len()).sum();
    CorpusStats {
        clips: clips.len(),
        objects_per_clip: objects as f64 / n,
        steps_per_clip: steps as f64 / n,
        objects_per_step: if steps == 0 { 0.0 } else { object_steps as f64 / steps as f64 },
    }
}
