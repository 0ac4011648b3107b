//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use adverb_reason::asp::{emit_program, generate_background, parse_program, AspProgram, Bias};
use adverb_reason::behaviour::{
    select_salient, BehaviourStep, BucketScheme, ObjectBehaviour, Placement, Sector, Tenths,
};
use adverb_reason::flat::{flatten, mask_values, Role, MASK, MAX_WORDS};
use adverb_reason::induce::{induce_for_bias, Batch};
use adverb_reason::obs::{BBox, Detection, FrameObservation};
use adverb_reason::pair::Pair;
use adverb_reason::pipeline::{run_pipeline, PipelineConfig};
use adverb_reason::svm::{self, dual_objective, rbf, SvmParams};
use adverb_reason::synthetic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn random_behaviour(rng: &mut ChaCha8Rng, scheme: &BucketScheme, clip: &str, steps: usize) -> ObjectBehaviour {
    const LABELS: [&str; 6] = ["person", "car", "dog", "ball", "bicycle", "horse"];
    let pick = |rng: &mut ChaCha8Rng, names: Vec<&str>| names[rng.gen_range(0..names.len())].to_string();
    ObjectBehaviour {
        clip_id: clip.to_string(),
        object_label: LABELS[rng.gen_range(0..LABELS.len())].to_string(),
        steps: (1..=steps as u32)
            .map(|t| BehaviourStep {
                time_step: t,
                magnitude: Tenths(rng.gen_range(0..700)),
                sector: Sector::from_index(rng.gen_range(0..8)),
                area: pick(rng, scheme.area.names().collect()),
                movement: pick(rng, scheme.movement.names().collect()),
                placement: Placement::of_point(rng.gen(), rng.gen()),
            })
            .collect(),
    }
}

fn asp_round_trip() -> Result<String, String> {
    let scheme = BucketScheme::default();
    let background = generate_background(&scheme);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let start = Instant::now();
    let mut equal = 0;
    for i in 0..1000 {
        let clip = format!("c{i}");
        let steps = rng.gen_range(1..20);
        let b = random_behaviour(&mut rng, &scheme, &clip, steps);
        let labels = vec!["slowly".to_string()];
        let program = AspProgram::from_behaviours(&clip, Some("run"), &labels, std::slice::from_ref(&b), background.clone());
        let back = parse_program(&emit_program(&program)).map_err(|e| format!("behaviour {i}: {e}"))?;
        let rebuilt = back.behaviours().map_err(|e| format!("behaviour {i}: {e}"))?;
        equal += (back == program && rebuilt == vec![b]) as usize;
    }
    let elapsed = start.elapsed();
    ensure(equal == 1000, || format!("{equal}/1000 structurally equal"))?;
    within(Duration::from_secs(10), elapsed)?;
    Ok(format!("1000/1000 equal in {elapsed:.2?}"))
}

/// Transitive closure of a weighted successor relation, distances summed.
fn closure(base: &BTreeSet<(String, String, usize)>, cap: usize) -> BTreeSet<(String, String, usize)> {
    let mut all = base.clone();
    loop {
        let mut next = all.clone();
        for (a, b, d1) in &all {
            for (b2, c, d2) in base {
                if b == b2 && d1 + d2 <= cap {
                    next.insert((a.clone(), c.clone(), d1 + d2));
                }
            }
        }
        if next.len() == all.len() {
            return all;
        }
        all = next;
    }
}

fn background_closure() -> Result<String, String> {
    let scheme = BucketScheme::default();
    let facts: Vec<String> = generate_background(&scheme).iter().map(|f| f.to_string()).collect();
    let got: BTreeSet<String> = facts.iter().cloned().collect();
    ensure(got.len() == facts.len(), || "duplicate background facts".into())?;

    let mut want = BTreeSet::new();
    for (a, b) in [("left", "right"), ("right", "left"), ("top", "bottom"), ("bottom", "top")] {
        want.insert(format!("opposite({a}, {b})."));
    }
    for family in scheme.families() {
        let names: Vec<&str> = family.names().collect();
        let base = names
            .windows(2)
            .map(|w| (w[0].to_string(), w[1].to_string(), 1))
            .collect();
        for (a, b, d) in closure(&base, usize::MAX) {
            want.insert(format!("less_than({a}, {b}, {d})."));
        }
    }
    let ring = ["n", "ne", "e", "se", "s", "sw", "w", "nw"];
    let cw: BTreeSet<_> = (0..8)
        .map(|i| (ring[i].to_string(), ring[(i + 1) % 8].to_string(), 1))
        .collect();
    let acw: BTreeSet<_> = cw.iter().map(|(a, b, d)| (b.clone(), a.clone(), *d)).collect();
    for (name, base) in [("clockwise", cw), ("anticlockwise", acw)] {
        for (a, b, d) in closure(&base, 8) {
            want.insert(format!("{name}({a}, {b}, {d})."));
        }
    }
    let extra: Vec<_> = got.difference(&want).collect();
    let missing: Vec<_> = want.difference(&got).collect();
    ensure(extra.is_empty() && missing.is_empty(), || {
        format!("extra {extra:?}, missing {missing:?}")
    })?;
    let max_ticks = generate_background(&scheme)
        .iter()
        .filter(|f| f.to_string().contains("clockwise("))
        .filter_map(|f| {
            let s = f.to_string();
            s.rsplit(", ").next()?.trim_end_matches(").").parse::<usize>().ok()
        })
        .max()
        .unwrap_or(0);
    ensure(max_ticks <= 8, || format!("clockwise distance {max_ticks}"))?;
    Ok(format!("{} facts match the closure enumerator; max distance {max_ticks}", got.len()))
}

fn toy_behaviour(label: &str, mag: f64, x: f64, y: f64) -> ObjectBehaviour {
    ObjectBehaviour {
        clip_id: format!("toy_{label}"),
        object_label: label.into(),
        steps: vec![BehaviourStep {
            time_step: 1,
            magnitude: Tenths::from_f64(mag),
            sector: Sector::E,
            area: "small".into(),
            movement: "small".into(),
            placement: Placement::of_point(x, y),
        }],
    }
}

fn toy_induction() -> Result<String, String> {
    let batch = Batch {
        pair: Pair::new("strange", "not_strange").map_err(|e| e.to_string())?,
        positives: vec![toy_behaviour("person", 7.0, 0.3, 0.3), toy_behaviour("cat", 18.0, 0.6, 0.6)],
        negatives: vec![toy_behaviour("car", 3.0, 0.3, 0.6), toy_behaviour("plane", 25.0, 0.6, 0.3)],
        seed: 0,
    };
    let start = Instant::now();
    let rules = induce_for_bias(&batch, Bias::Magnitude, &BucketScheme::default());
    let elapsed = start.elapsed();
    let text: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
    let want = ["class(strange, V0) :- magnitude(V0, M, T), at_least(M, five_to_ten), at_most(M, fifteen_to_twenty)."];
    ensure(text == want, || format!("got {text:?}"))?;
    within(Duration::from_secs(1), elapsed)?;
    Ok(format!("exact rule match in {elapsed:.2?}"))
}

fn planted_pipeline() -> Result<String, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let obs = root.path().join("obs");
    synthetic::planted(200, 5).write(&obs).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let outcome = run_pipeline(&PipelineConfig::new(&obs, root.path().join("work"), 5)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut parts = Vec::new();
    for (pair, _) in synthetic::planted_pairs() {
        let s = outcome.report.scores.iter().find(|s| s.pair == pair).ok_or("pair not scored")?;
        let acc = s.clip_accuracy().ok_or_else(|| format!("{pair}: no test clips"))?;
        ensure(acc >= 0.95, || format!("{pair}: {:.2}% clip accuracy", 100.0 * acc))?;
        parts.push(format!("{pair} {:.1}%", 100.0 * acc));
    }
    within(Duration::from_secs(120), elapsed)?;
    Ok(format!("{} in {elapsed:.2?}", parts.join(", ")))
}

fn inseparable_classes() -> Result<String, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let obs = root.path().join("obs");
    // 667 clips per class; 30% of each is held out, 400 test clips in all
    synthetic::inseparable(1334, 3).write(&obs).map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::new(&obs, root.path().join("work"), 3);
    cfg.pairs = vec![synthetic::inseparable_pair()];
    let outcome = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let rules = outcome.rules[0].len();
    ensure(rules == 0, || format!("{rules} rules induced"))?;
    let s = &outcome.report.scores[0];
    ensure(s.clips == 400, || format!("{} test clips", s.clips))?;
    let acc = s.clip_accuracy().unwrap_or(0.0);
    ensure((acc - 0.5).abs() <= 0.05, || format!("accuracy {:.2}%", 100.0 * acc))?;
    Ok(format!("0 rules, {:.2}% over {} test clips", 100.0 * acc, s.clips))
}

/// Max violation of the dual KKT conditions with bias `b`.
fn kkt_violation(x: &[Vec<f64>], y: &[bool], alpha: &[f64], bias: f64, gamma: f64, c: f64) -> f64 {
    let s = |b: bool| if b { 1.0 } else { -1.0 };
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let f: f64 = (0..x.len())
            .map(|j| alpha[j] * s(y[j]) * rbf(gamma, &x[j], &x[i]))
            .sum::<f64>()
            + bias;
        let margin = s(y[i]) * f;
        let v = if alpha[i] <= 1e-12 {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c - 1e-12 {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    let balance: f64 = alpha.iter().zip(y).map(|(a, &yi)| a * s(yi)).sum();
    worst.max(balance.abs())
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let k = a[r][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(r);
            for (x, p) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                *x -= k * p;
            }
            b[r] -= k * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Dual optimum by enumerating every assignment of each multiplier to
/// {0, C, free} and solving the stationarity system on the free set.
fn active_set_optimum(x: &[Vec<f64>], y: &[bool], gamma: f64, c: f64) -> f64 {
    let n = x.len();
    let s: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let q = |i: usize, j: usize| s[i] * s[j] * rbf(gamma, &x[i], &x[j]);
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&k| if k == 1 { c } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            // unknowns: alpha_F and the equality multiplier
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (k, &j) in free.iter().enumerate() {
                    a[r][k] = q(i, j);
                }
                a[r][m] = s[i];
                b[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q(i, j) * c).sum::<f64>();
                a[m][r] = s[i];
            }
            b[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| s[j] * c).sum::<f64>();
            let Some(sol) = solve(a, b) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a))
            && alpha.iter().zip(&s).map(|(a, yi)| a * yi).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.max(dual_objective(&alpha, x, y, gamma));
        }
    }
    best
}

type Fixture = (&'static str, Vec<Vec<f64>>, Vec<bool>);

fn svm_correctness() -> Result<String, String> {
    let mut fixtures: Vec<Fixture> = vec![
        ("two-point", vec![vec![0.0], vec![1.0]], vec![false, true]),
        (
            "xor",
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![true, true, false, false],
        ),
        (
            "six-point",
            vec![
                vec![0.0, 0.0],
                vec![0.4, 0.9],
                vec![1.0, 0.2],
                vec![0.9, 1.1],
                vec![0.1, 0.6],
                vec![0.6, 0.5],
            ],
            vec![true, true, false, false, true, false],
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noisy: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let labels: Vec<bool> = noisy.iter().map(|p| p[0] * p[1] + rng.gen_range(-0.2..0.2) > 0.0).collect();
    fixtures.push(("noisy-60", noisy, labels));

    let mut notes = Vec::new();
    for (name, x, y) in &fixtures {
        for c in [1.0, 10.0] {
            let params = SvmParams {
                c,
                ..SvmParams::default()
            };
            let (model, sol) = svm::train(x, y, &params).map_err(|e| format!("{name}: {e}"))?;
            let v = kkt_violation(x, y, &sol.alpha, sol.bias, model.gamma, c);
            ensure(v < 1e-3, || format!("{name} C={c}: KKT violation {v:.2e}"))?;
            if *name == "xor" {
                let correct = x
                    .iter()
                    .zip(y)
                    .filter(|(p, &t)| model.predict(p).unwrap() == t)
                    .count();
                ensure(correct == 4, || format!("xor C={c}: {correct}/4 correct"))?;
            }
            if *name == "six-point" {
                let opt = active_set_optimum(x, y, model.gamma, c);
                let got = sol.dual_objective(x, y, model.gamma);
                ensure((opt - got).abs() <= 1e-6, || {
                    format!("six-point C={c}: dual {got:.9} vs optimum {opt:.9}")
                })?;
                notes.push(format!("six-point C={c} gap {:.1e}", (opt - got).abs()));
            }
        }
    }
    Ok(format!("KKT < 1e-3 on {} fixtures, xor 4/4, {}", fixtures.len(), notes.join(", ")))
}

fn masking_statistics() -> Result<String, String> {
    let scheme = BucketScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut values, mut masked, mut longest) = (0usize, 0usize, 0usize);
    let mut i = 0;
    while values < 10_000 {
        let steps = rng.gen_range(1..40);
        let f = flatten(&random_behaviour(&mut rng, &scheme, &format!("m{i}"), steps));
        let s = mask_values(&f, 0.2, 99).map_err(|e| e.to_string())?;
        for (pos, role) in f.roles.iter().enumerate() {
            let hit = s.tokens[pos] == MASK;
            ensure(!hit || *role == Role::Value, || format!("{} position {pos}: {role:?} masked", f.key))?;
            values += (*role == Role::Value) as usize;
            masked += hit as usize;
        }
        longest = longest.max(f.words.len());
        i += 1;
    }
    let frac = masked as f64 / values as f64;
    ensure((0.18..=0.22).contains(&frac), || format!("masked fraction {frac:.4}"))?;
    ensure(longest <= MAX_WORDS, || format!("line of {longest} words"))?;
    Ok(format!("{masked}/{values} = {frac:.4}, longest line {longest} words"))
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).expect("readable dir") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn determinism_audit() -> Result<String, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let obs = root.path().join("obs");
    synthetic::planted(80, 13).write(&obs).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let work = root.path().join(name);
        run_pipeline(&PipelineConfig::new(&obs, &work, 13)).map_err(|e| e.to_string())?;
        runs.push(snapshot(&work));
    }
    let names: Vec<&String> = runs[0].keys().collect();
    ensure(names == runs[1].keys().collect::<Vec<_>>(), || "different file sets".into())?;
    let differing: Vec<&&String> = names.iter().filter(|n| runs[0][**n] != runs[1][**n]).collect();
    ensure(differing.is_empty(), || format!("differing files {differing:?}"))?;

    let scheme = BucketScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let behaviours: Vec<_> = (0..50).map(|i| random_behaviour(&mut rng, &scheme, &format!("d{i}"), 30)).collect();
    let masked = |seed| -> Vec<_> {
        behaviours
            .iter()
            .map(|b| mask_values(&flatten(b), 0.2, seed).expect("valid rate"))
            .collect()
    };
    ensure(masked(4) == masked(4), || "masking differs between runs".into())?;
    Ok(format!("{} pipeline files byte-identical across runs", names.len()))
}

fn det(label: &str, mag: f64) -> Detection {
    Detection {
        label: label.into(),
        confidence: 0.9,
        bbox: BBox::new(0.1, 0.1, 0.2, 0.2),
        flow_mag: Some(mag),
        flow_ang: Some(0.0),
    }
}

/// One frame per row of `(label, magnitude)` detections, indices from 0.
fn frames(rows: &[&[(&str, f64)]]) -> Vec<FrameObservation> {
    rows.iter()
        .enumerate()
        .map(|(i, dets)| FrameObservation {
            frame_index: i as u64,
            detections: dets.iter().map(|(l, m)| det(l, *m)).collect(),
        })
        .collect()
}

/// `n` identical frames.
fn same(row: &[(&str, f64)], n: usize) -> Vec<FrameObservation> {
    frames(&vec![row; n])
}

fn survivors(frames: &[FrameObservation], window: usize) -> Vec<Vec<String>> {
    select_salient(frames, window)
        .into_iter()
        .map(|w| w.survivors.into_keys().collect())
        .collect()
}

fn salience_suite() -> Result<String, String> {
    let unknown = |mag| Detection {
        label: "unknown".into(),
        confidence: 0.4,
        ..det("x", mag)
    };
    type Fixture = (&'static str, Vec<FrameObservation>, usize, Vec<Vec<&'static str>>);
    let mut with_unknown = frames(&[&[("a", 2.0)], &[("a", 2.0)]]);
    for f in &mut with_unknown {
        f.detections.push(unknown(50.0));
    }
    let fixtures: Vec<Fixture> = vec![
        // W=4: a is at or above the frame mean in 2 of 4 frames
        (
            "half of four",
            frames(&[&[("a", 5.0), ("b", 1.0)], &[("a", 5.0), ("b", 1.0)], &[("a", 1.0), ("b", 5.0)], &[("a", 1.0), ("b", 5.0)]]),
            4,
            vec![vec!["a", "b"]],
        ),
        ("lone object", same(&[("a", 0.5)], 10), 5, vec![vec!["a"], vec!["a"]]),
        ("fast beats slow", same(&[("a", 5.0), ("b", 1.0)], 5), 5, vec![vec!["a"]]),
        // W=5 needs 3 frames: 2 is not enough
        (
            "two of five fails",
            frames(&[&[("a", 5.0), ("b", 1.0)], &[("a", 5.0), ("b", 1.0)], &[("a", 1.0), ("b", 5.0)], &[("a", 1.0), ("b", 5.0)], &[("a", 1.0), ("b", 5.0)]]),
            5,
            vec![vec!["b"]],
        ),
        ("equal magnitudes both pass", same(&[("a", 3.0), ("b", 3.0)], 3), 3, vec![vec!["a", "b"]]),
        // mean of 6, 3, 0 is 3: a and b pass, c fails
        ("at the mean passes", same(&[("a", 6.0), ("b", 3.0), ("c", 0.0)], 2), 2, vec![vec!["a", "b"]]),
        (
            "windows judged separately",
            frames(&[&[("a", 5.0), ("b", 1.0)], &[("a", 5.0), ("b", 1.0)], &[("a", 1.0), ("b", 5.0)], &[("a", 1.0), ("b", 5.0)]]),
            2,
            vec![vec!["a"], vec!["b"]],
        ),
        // a absent in two frames of the window
        (
            "absence counts against",
            frames(&[&[("a", 9.0), ("b", 1.0)], &[("b", 1.0)], &[("b", 1.0)]]),
            3,
            vec![vec!["b"]],
        ),
        ("window of one", frames(&[&[("a", 2.0), ("b", 1.0)], &[("a", 1.0), ("b", 2.0)]]), 1, vec![vec!["a"], vec!["b"]]),
        // the unknown's 50 stays out of the mean of 2; with it a would fail
        ("unknown excluded from mean", with_unknown, 2, vec![vec!["a", "unknown"]]),
    ];
    let n = fixtures.len();
    for (name, f, w, want) in fixtures {
        let got = survivors(&f, w);
        let want: Vec<Vec<String>> = want
            .into_iter()
            .map(|v| v.into_iter().map(String::from).collect())
            .collect();
        ensure(got == want, || format!("{name}: got {got:?}, want {want:?}"))?;
    }
    Ok(format!("{n}/{n} fixtures"))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("asp round-trip", asp_round_trip),
        ("background closure", background_closure),
        ("toy induction", toy_induction),
        ("planted-rule pipeline", planted_pipeline),
        ("inseparable classes", inseparable_classes),
        ("svm correctness", svm_correctness),
        ("masking statistics", masking_statistics),
        ("determinism audit", determinism_audit),
        ("salience filter", salience_suite),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
