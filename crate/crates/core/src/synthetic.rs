//! Seeded synthetic observation corpora with known ground truth.
//!
//! Every clip has one moving object plus static distractors, and the
//! occasional low-confidence detection. Two corpora are available:
//!
//! * [`planted`]: four pairs are each decided by one property of the mover
//!   (flow direction, flow magnitude, operation area, vertical placement);
//!   the other seven pairs are labelled at random.
//! * [`inseparable`]: one pair whose two classes share the same multiset of
//!   discrete time-steps, so no single-step rule can tell them apart.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asp::Bias;
use crate::behaviour::DEFAULT_WINDOW;
use crate::error::Result;
use crate::features::WordVectors;
use crate::io::write_atomic;
use crate::obs::{observations_to_string, BBox, Detection, FrameObservation};
use crate::pair::{default_pairs, Pair};

pub const ACTIONS: [&str; 6] = ["dance", "cook", "drive", "run", "swim", "play"];
pub const EMBEDDING_DIM: usize = 8;
const MOVERS: [&str; 4] = ["person", "car", "dog", "ball"];
const STATICS: [&str; 4] = ["chair", "table", "tree", "lamp"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub clip_id: String,
    pub action: String,
    pub labels: Vec<String>,
    pub frames: Vec<FrameObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub clips: Vec<SyntheticClip>,
    pub embeddings: WordVectors,
    pub pairs: Vec<Pair>,
}

impl Fixture {
    /// Write `clips.tsv`, one `<clip>.jsonl` per clip, `embeddings.txt` and
    /// `pairs.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut index = String::from("clip_id\taction\tlabels\n");
        for c in &self.clips {
            let _ = writeln!(index, "{}\t{}\t{}", c.clip_id, c.action, c.labels.join(","));
            write_atomic(
                dir.join(format!("{}.jsonl", c.clip_id)),
                observations_to_string(&c.frames).as_bytes(),
            )?;
        }
        write_atomic(dir.join("clips.tsv"), index.as_bytes())?;
        self.embeddings.save(dir.join("embeddings.txt"))?;
        let pairs: String = self.pairs.iter().map(|p| format!("{p}\n")).collect();
        write_atomic(dir.join("pairs.txt"), pairs.as_bytes())
    }
}

/// Pairs whose labels [`planted`] derives from the mover, with the bias
/// family that captures each.
pub fn planted_pairs() -> Vec<(Pair, Bias)> {
    let p = |a, b| Pair::new(a, b).expect("valid pair");
    vec![
        (p("upwards", "downwards"), Bias::Angle),
        (p("slowly", "quickly"), Bias::Magnitude),
        (p("outdoor", "indoor"), Bias::OperationArea),
        (p("out", "in"), Bias::CellOccupancy),
    ]
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn embeddings(rng: &mut ChaCha8Rng) -> WordVectors {
    let mut t = WordVectors::new(EMBEDDING_DIM);
    for (i, a) in ACTIONS.iter().enumerate() {
        let v = (0..EMBEDDING_DIM).map(|_| round4(rng.gen_range(-1.0..1.0))).collect();
        t.insert(a.to_string(), v, i + 2).expect("distinct actions");
    }
    t
}

/// Mover state for one window.
#[derive(Debug, Clone, Copy)]
struct Regime {
    mag: (f64, f64),
    ang: f64,
    size: ((f64, f64), (f64, f64)),
    center: ((f64, f64), (f64, f64)),
}

/// Frames for one clip: the mover follows `regimes`, one per window.
fn clip_frames(rng: &mut ChaCha8Rng, regimes: &[Regime]) -> Vec<FrameObservation> {
    let mover = MOVERS.choose(rng).expect("nonempty").to_string();
    let conf = round4(rng.gen_range(0.8..0.99));
    let count = rng.gen_range(1..=3);
    let chosen: Vec<&str> = STATICS.choose_multiple(rng, count).copied().collect();
    let statics: Vec<(String, BBox, f64)> = chosen
        .into_iter()
        .map(|s| {
            let (x, y) = (rng.gen_range(0.05..0.8), rng.gen_range(0.05..0.8));
            let (w, h) = (rng.gen_range(0.05..0.15), rng.gen_range(0.05..0.15));
            let b = BBox::new(round4(x), round4(y), round4(x + w), round4(y + h));
            (s.to_string(), b, round4(rng.gen_range(0.6..0.95)))
        })
        .collect();
    let mut frames = Vec::new();
    for (k, r) in regimes.iter().enumerate() {
        let w = rng.gen_range(r.size.0 .0..r.size.0 .1);
        let h = rng.gen_range(r.size.1 .0..r.size.1 .1);
        let mut cx = rng.gen_range(r.center.0 .0..r.center.0 .1);
        let mut cy = rng.gen_range(r.center.1 .0..r.center.1 .1);
        let (dx, dy) = (0.002 * r.ang.to_radians().cos(), -0.002 * r.ang.to_radians().sin());
        for f in 0..DEFAULT_WINDOW {
            let frame_index = (k * DEFAULT_WINDOW + f) as u64;
            let mut detections = vec![Detection {
                label: mover.clone(),
                confidence: conf,
                bbox: BBox::new(round4(cx - w / 2.0), round4(cy - h / 2.0), round4(cx + w / 2.0), round4(cy + h / 2.0)),
                flow_mag: Some(round4(rng.gen_range(r.mag.0..r.mag.1))),
                flow_ang: Some(round4((r.ang + rng.gen_range(-12.0..12.0)).rem_euclid(360.0))),
            }];
            for (label, bbox, c) in &statics {
                detections.push(Detection {
                    label: label.clone(),
                    confidence: *c,
                    bbox: *bbox,
                    flow_mag: Some(round4(rng.gen_range(0.1..1.0))),
                    flow_ang: Some(round4(rng.gen_range(0.0..360.0))),
                });
            }
            if rng.gen_bool(0.2) {
                let low = if rng.gen_bool(0.5) { 0.35 } else { 0.1 };
                detections.push(Detection {
                    label: "bird".into(),
                    confidence: low,
                    bbox: BBox::new(0.85, 0.05, 0.9, 0.1),
                    flow_mag: Some(round4(rng.gen_range(0.1..1.0))),
                    flow_ang: Some(90.0),
                });
            }
            frames.push(FrameObservation { frame_index, detections });
            cx += dx;
            cy += dy;
        }
    }
    frames
}

/// `n` clips labelled for all eleven default pairs; four are planted.
pub fn planted(n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embeddings = embeddings(&mut rng);
    let planted = planted_pairs();
    let mut clips = Vec::with_capacity(n);
    for i in 0..n {
        let bits: Vec<bool> = (0..planted.len()).map(|_| rng.gen_bool(0.5)).collect();
        let [up, slow, outdoor, top] = bits[..] else { unreachable!() };
        let regime = Regime {
            mag: if slow { (5.5, 9.5) } else { (26.0, 34.0) },
            ang: if up { 90.0 } else { 270.0 },
            size: if outdoor { ((0.5, 0.65), (0.32, 0.38)) } else { ((0.08, 0.12), (0.08, 0.12)) },
            center: ((0.35, 0.65), if top { (0.24, 0.26) } else { (0.74, 0.76) }),
        };
        let windows = rng.gen_range(3..=5);
        let frames = clip_frames(&mut rng, &vec![regime; windows]);
        let mut labels = Vec::new();
        for pair in default_pairs() {
            let positive = match planted.iter().position(|(p, _)| *p == pair) {
                Some(k) => bits[k],
                None => rng.gen_bool(0.5),
            };
            labels.push(pair.class(positive).to_string());
        }
        clips.push(SyntheticClip {
            clip_id: format!("p{i:04}"),
            action: ACTIONS.choose(&mut rng).expect("nonempty").to_string(),
            labels,
            frames,
        });
    }
    Fixture {
        clips,
        embeddings,
        pairs: default_pairs(),
    }
}

/// The pair used by [`inseparable`].
pub fn inseparable_pair() -> Pair {
    Pair::new("periodically", "continuously").expect("valid pair")
}

/// `n` clips (even counts give exactly balanced classes) whose movers all
/// visit the same four window regimes in shuffled order.
pub fn inseparable(n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embeddings = embeddings(&mut rng);
    let pair = inseparable_pair();
    let regimes = [
        Regime {
            mag: (6.0, 9.0),
            ang: 90.0,
            size: ((0.08, 0.1), (0.08, 0.1)),
            center: ((0.2, 0.22), (0.2, 0.22)),
        },
        Regime {
            mag: (26.0, 29.0),
            ang: 270.0,
            size: ((0.5, 0.6), (0.32, 0.36)),
            center: ((0.6, 0.62), (0.7, 0.72)),
        },
        Regime {
            mag: (11.0, 14.0),
            ang: 0.0,
            size: ((0.25, 0.3), (0.25, 0.3)),
            center: ((0.7, 0.72), (0.3, 0.32)),
        },
        Regime {
            mag: (41.0, 44.0),
            ang: 180.0,
            size: ((0.08, 0.1), (0.08, 0.1)),
            center: ((0.3, 0.32), (0.8, 0.82)),
        },
    ];
    let mut classes: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    classes.shuffle(&mut rng);
    let clips = classes
        .into_iter()
        .enumerate()
        .map(|(i, positive)| {
            let mut order = regimes.to_vec();
            order.shuffle(&mut rng);
            SyntheticClip {
                clip_id: format!("q{i:04}"),
                action: ACTIONS.choose(&mut rng).expect("nonempty").to_string(),
                labels: vec![pair.class(positive).to_string()],
                frames: clip_frames(&mut rng, &order),
            }
        })
        .collect();
    Fixture {
        clips,
        embeddings,
        pairs: vec![pair],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{extract_behaviours, BucketScheme, Vert};

    #[test]
    fn planted_clip_extracts_one_mover_with_planted_properties() {
        let s = BucketScheme::default();
        let fx = planted(20, 3);
        for clip in &fx.clips {
            let ex = extract_behaviours(&clip.clip_id, &clip.frames, &s, DEFAULT_WINDOW).unwrap();
            assert_eq!(ex.behaviours.len(), 1, "{}", clip.clip_id);
            let b = &ex.behaviours[0];
            let has = |l: &str| clip.labels.iter().any(|x| x == l);
            for st in &b.steps {
                assert_eq!(st.sector.token(), if has("upwards") { "n" } else { "s" });
                assert_eq!(st.placement.0[0].0, if has("out") { Vert::Top } else { Vert::Bottom });
                let area = s.area.position(&st.area).unwrap();
                assert_eq!(area >= 2, has("outdoor"), "{}", st.area);
                let mag = s.magnitude.index_of(st.magnitude.value());
                assert_eq!(mag < 2, has("slowly"));
            }
        }
    }

    #[test]
    fn inseparable_steps_share_a_multiset() {
        let s = BucketScheme::default();
        let fx = inseparable(30, 5);
        let mut reference: Option<Vec<String>> = None;
        for clip in &fx.clips {
            let ex = extract_behaviours(&clip.clip_id, &clip.frames, &s, DEFAULT_WINDOW).unwrap();
            assert_eq!(ex.behaviours.len(), 1);
            let mut steps: Vec<String> = ex.behaviours[0]
                .steps
                .iter()
                .map(|st| {
                    format!(
                        "{} {} {} {} {:?}",
                        s.magnitude.bucket_of(st.magnitude.value()),
                        st.sector.token(),
                        st.area,
                        st.movement,
                        st.placement
                    )
                })
                .collect();
            steps.sort();
            match &reference {
                None => reference = Some(steps),
                Some(r) => assert_eq!(&steps, r, "{}", clip.clip_id),
            }
        }
        let pos = fx.clips.iter().filter(|c| c.labels[0] == "periodically").count();
        assert_eq!(pos, 15);
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(planted(5, 9), planted(5, 9));
        assert_ne!(planted(5, 9), planted(5, 10));
    }
}
