//! Observations with flow rasters to an ASP program for one clip.
//!
//! A ball crosses the frame left to right while a lamp stays put; only the
//! ball survives the salience filter.

use adverb_reason::asp::{emit_program, generate_background, AspProgram};
use adverb_reason::behaviour::{extract_behaviours, BucketScheme, DEFAULT_WINDOW};
use adverb_reason::obs::{resolve_flow, BBox, Detection, FlowCell, FlowRaster, FrameObservation};

const GRID: u32 = 20;

/// Flow of 15 units towards screen-right inside `moving`, still elsewhere.
fn raster(moving: &BBox) -> FlowRaster {
    let cells = (0..GRID * GRID)
        .map(|i| {
            let (col, row) = (i % GRID, i / GRID);
            let (x, y) = ((col as f64 + 0.5) / GRID as f64, (row as f64 + 0.5) / GRID as f64);
            let inside = x >= moving.xmin() && x <= moving.xmax() && y >= moving.ymin() && y <= moving.ymax();
            FlowCell {
                mag: if inside { 15.0 } else { 0.0 },
                ang: 0.0,
            }
        })
        .collect();
    FlowRaster::new(GRID, GRID, cells).expect("full grid")
}

fn main() -> adverb_reason::Result<()> {
    let mut frames = Vec::new();
    let mut rasters = Vec::new();
    for i in 0..10u64 {
        let x = 0.05 + 0.08 * i as f64;
        let ball = BBox::new(x, 0.40, x + 0.10, 0.50);
        rasters.push(raster(&ball));
        let det = |label: &str, confidence, bbox| Detection {
            label: label.into(),
            confidence,
            bbox,
            flow_mag: None,
            flow_ang: None,
        };
        frames.push(FrameObservation {
            frame_index: i,
            detections: vec![det("ball", 0.95, ball), det("lamp", 0.88, BBox::new(0.80, 0.05, 0.90, 0.30))],
        });
    }
    resolve_flow(&mut frames, Some(&rasters))?;

    let scheme = BucketScheme::default();
    let ex = extract_behaviours("demo", &frames, &scheme, DEFAULT_WINDOW)?;
    for b in &ex.behaviours {
        println!("{}: {} time-steps", b.object_label, b.steps.len());
    }
    let program = AspProgram::from_behaviours("demo", Some("kick"), &["quickly".into()], &ex.behaviours, Vec::new());
    print!("{}", emit_program(&program));
    println!("% plus {} background facts", generate_background(&scheme).len());
    Ok(())
}
