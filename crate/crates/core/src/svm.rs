//! Binary rbf-kernel SVM trained by sequential minimal optimization.
//!
//! The dual is solved in the form
//!
//! ```text
//! min  ½ αᵀQα − Σα    s.t.  0 ≤ α ≤ C,  yᵀα = 0,    Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! with second-order working-set selection. Training stops when the maximal
//! KKT violation `m(α) − M(α)` drops below `tol`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_text, write_atomic};
use crate::pair::Pair;

const TAU: f64 = 1e-12;
const FORMAT_TAG: &str = "adverb-reason-svm 1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / (dim · variance)` over the training matrix.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// `1 / (dim · var)` over every entry of `x`; 1 when the variance vanishes.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let dim = x.first().map_or(0, Vec::len);
    let n = (x.len() * dim) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (dim as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub bias: f64,
    pub dim: usize,
    pub support: Vec<Vec<f64>>,
    /// `α_i · y_i` per support vector.
    pub coef: Vec<f64>,
    /// Class names for `+1` (adverb) and `−1` (antonym).
    pub classes: Option<Pair>,
}

/// Solver state at termination, for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct Solution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Final `max(0, m(α) − M(α))`.
    pub violation: f64,
}

impl Solution {
    /// Dual objective `Σα − ½ αᵀQα`, to be maximized.
    pub fn dual_objective(&self, x: &[Vec<f64>], y: &[bool], gamma: f64) -> f64 {
        dual_objective(&self.alpha, x, y, gamma)
    }
}

pub fn dual_objective(alpha: &[f64], x: &[Vec<f64>], y: &[bool], gamma: f64) -> f64 {
    let s = |b: bool| if b { 1.0 } else { -1.0 };
    let mut quad = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            quad += alpha[i] * alpha[j] * s(y[i]) * s(y[j]) * rbf(gamma, &x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Train on `x` with labels `y` (`true` is the adverb class).
pub fn train(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Result<(SvmModel, Solution)> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Svm(format!("{n} samples but {} labels", y.len())));
    }
    if !(y.contains(&true) && y.contains(&false)) {
        return Err(Error::Svm("training data must contain both classes".into()));
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|v| v.len() != dim) {
        return Err(Error::FeatureLength {
            expected: dim,
            got: bad.len(),
        });
    }
    // NaN fails these checks too
    if params.c.is_nan() || params.c <= 0.0 {
        return Err(Error::Svm("C must be positive".into()));
    }
    let gamma = params.gamma.unwrap_or_else(|| scale_gamma(x));
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Svm("gamma must be positive".into()));
    }
    let c = params.c;
    let ys: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(gamma, &x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| ys[i] * ys[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi < 0.0 && a < c) || (yi > 0.0 && a > 0.0);

    let mut iterations = 0;
    let violation = loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], ys[t]) && -ys[t] * grad[t] > gmax {
                gmax = -ys[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], ys[t]) {
                continue;
            }
            let v = -ys[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = k[i_sel * n + i_sel] + k[t * n + t] - 2.0 * k[i_sel * n + t];
                let gain = -(b * b) / if a > 0.0 { a } else { TAU };
                if gain < best_gain {
                    best_gain = gain;
                    j_sel = t;
                }
            }
        }
        let gap = gmax - gmin;
        if gap < params.tol || j_sel == usize::MAX || iterations >= params.max_iter {
            if iterations >= params.max_iter {
                log::warn!("smo stopped at max_iter {} with violation {gap:.3e}", params.max_iter);
            }
            break gap.max(0.0);
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if ys[i] != ys[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    };

    // bias: mean over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    let bias = -rho;

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(x[t].clone());
            coef.push(alpha[t] * ys[t]);
        }
    }
    let model = SvmModel {
        gamma,
        c,
        bias,
        dim,
        support,
        coef,
        classes: None,
    };
    Ok((
        model,
        Solution {
            alpha,
            bias,
            iterations,
            violation,
        },
    ))
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::FeatureLength {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// `true` for the adverb; an exact zero decision counts as the adverb.
    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.decision(x)? >= 0.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG}");
        match &self.classes {
            Some(p) => {
                let _ = writeln!(out, "classes {p}");
            }
            None => out.push_str("classes none\n"),
        }
        let _ = writeln!(out, "gamma {}", self.gamma);
        let _ = writeln!(out, "c {}", self.c);
        let _ = writeln!(out, "bias {}", self.bias);
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "support {}", self.support.len());
        for (sv, c) in self.support.iter().zip(&self.coef) {
            let _ = write!(out, "{c}");
            for v in sv {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<SvmModel> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("model truncated before {what}")))
        };
        let (_, tag) = next("header")?;
        if tag != FORMAT_TAG {
            return Err(Error::parse(1, format!("unsupported model header `{tag}`")));
        }
        let mut field = |name: &str| -> Result<(usize, String)> {
            let (i, line) = next(name)?;
            let value = line
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::parse(i + 1, format!("expected `{name} <value>`")))?;
            Ok((i + 1, value.to_string()))
        };
        let num = |(line, v): (usize, String)| -> Result<f64> {
            v.parse().map_err(|_| Error::parse(line, format!("bad number `{v}`")))
        };
        let int = |(line, v): (usize, String)| -> Result<usize> {
            v.parse().map_err(|_| Error::parse(line, format!("bad count `{v}`")))
        };
        let (line, classes) = field("classes")?;
        let classes = match classes.split_once('/') {
            Some((a, b)) => Some(Pair::new(a, b).map_err(|e| Error::parse(line, e.to_string()))?),
            None if classes == "none" => None,
            None => return Err(Error::parse(line, format!("bad classes `{classes}`"))),
        };
        let gamma = num(field("gamma")?)?;
        let c = num(field("c")?)?;
        let bias = num(field("bias")?)?;
        let dim = int(field("dim")?)?;
        let count = int(field("support")?)?;
        let mut support = Vec::with_capacity(count);
        let mut coef = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, line) = next("support vector")?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| Error::parse(i + 1, format!("bad number `{v}`"))))
                .collect::<Result<_>>()?;
            if vals.len() != dim + 1 {
                return Err(Error::Dimension {
                    line: i + 1,
                    message: format!("{} values, expected {}", vals.len(), dim + 1),
                });
            }
            if vals[0].abs() > c * (1.0 + 1e-12) {
                return Err(Error::parse(i + 1, "coefficient exceeds C"));
            }
            coef.push(vals[0]);
            support.push(vals[1..].to_vec());
        }
        Ok(SvmModel {
            gamma,
            c,
            bias,
            dim,
            support,
            coef,
            classes,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SvmModel> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?).map_err(|e| e.in_file(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sgn(b: bool) -> f64 {
        if b {
            1.0
        } else {
            -1.0
        }
    }

    /// Per-point KKT conditions on the training set within `tol`.
    fn assert_kkt(model: &SvmModel, sol: &Solution, x: &[Vec<f64>], y: &[bool], tol: f64) {
        for (i, xi) in x.iter().enumerate() {
            let m = sgn(y[i]) * model.decision(xi).unwrap();
            let a = sol.alpha[i];
            assert!((0.0..=model.c).contains(&a), "box at {i}: {a}");
            if a <= 0.0 {
                assert!(m >= 1.0 - tol, "point {i}: margin {m} with alpha 0");
            } else if a >= model.c {
                assert!(m <= 1.0 + tol, "point {i}: margin {m} with alpha C");
            } else {
                assert!((m - 1.0).abs() <= tol, "point {i}: margin {m} for free alpha");
            }
        }
        let balance: f64 = sol.alpha.iter().zip(y).map(|(a, &b)| a * sgn(b)).sum();
        assert!(balance.abs() < 1e-9);
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<bool>) {
        (
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![false, false, true, true],
        )
    }

    #[test]
    fn two_points_separated_with_adverb_midpoint() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![false, true];
        let (m, sol) = train(&x, &y, &SvmParams::default()).unwrap();
        assert!(m.decision(&[0.0]).unwrap() < 0.0);
        assert!(m.decision(&[1.0]).unwrap() > 0.0);
        assert!(m.decision(&[0.5]).unwrap().abs() < 1e-12);
        assert!(m.predict(&[0.5]).unwrap());
        assert_kkt(&m, &sol, &x, &y, 1e-3);
    }

    #[test]
    fn xor_matches_symmetric_closed_form() {
        let (x, y) = xor();
        for c in [1.0, 10.0] {
            let params = SvmParams {
                c,
                gamma: Some(1.0),
                ..Default::default()
            };
            let (m, sol) = train(&x, &y, &params).unwrap();
            // by symmetry all alphas are equal and the bias is zero:
            // y_i f(x_i) = a (1 - e^-γ)², so a = min(C, 1 / (1 - e^-γ)²)
            let want = (1.0 / (1.0 - (-1.0f64).exp()).powi(2)).min(c);
            for a in &sol.alpha {
                assert!((a - want).abs() < 1e-3 * want, "{a} vs {want}");
            }
            for (xi, &yi) in x.iter().zip(&y) {
                assert_eq!(m.predict(xi).unwrap(), yi);
            }
            assert_kkt(&m, &sol, &x, &y, 1e-3);
        }
    }

    #[test]
    fn far_input_takes_sign_of_bias() {
        let x = vec![vec![0.0, 0.0], vec![0.2, 0.1], vec![1.0, 1.0], vec![0.9, 1.2], vec![0.1, 0.3]];
        let y = vec![false, false, true, true, true];
        let (m, _) = train(&x, &y, &SvmParams::default()).unwrap();
        let far = m.decision(&[1e3, -1e3]).unwrap();
        assert_eq!(far, m.bias);
        assert_eq!(m.predict(&[1e3, -1e3]).unwrap(), m.bias >= 0.0);
    }

    #[test]
    fn duplicated_training_set_predicts_identically() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.3, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..8).map(|i| i >= 4).collect();
        let params = SvmParams {
            c: 1e6,
            gamma: Some(0.5),
            tol: 1e-6,
            ..Default::default()
        };
        let (m1, _) = train(&x, &y, &params).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<bool> = y.iter().chain(&y).copied().collect();
        let (m2, _) = train(&x2, &y2, &params).unwrap();
        for i in 0..40 {
            let p = [i as f64 * 0.07, (i % 5) as f64 * 0.5];
            assert_eq!(m1.predict(&p).unwrap(), m2.predict(&p).unwrap());
            assert!((m1.decision(&p).unwrap() - m2.decision(&p).unwrap()).abs() < 1e-3);
        }
    }

    #[test]
    fn model_text_roundtrip() {
        let (x, y) = xor();
        let (mut m, _) = train(&x, &y, &SvmParams::default()).unwrap();
        assert_eq!(SvmModel::parse(&m.to_text()).unwrap(), m);
        m.classes = Some(Pair::new("slowly", "quickly").unwrap());
        let text = m.to_text();
        assert!(text.lines().nth(1) == Some("classes slowly/quickly"));
        assert_eq!(SvmModel::parse(&text).unwrap(), m);
        assert!(SvmModel::parse("other 1\n").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(train(&[vec![0.0], vec![1.0]], &[true, true], &SvmParams::default()), Err(Error::Svm(_))));
        let (x, y) = xor();
        let (m, _) = train(&x, &y, &SvmParams::default()).unwrap();
        assert!(matches!(m.predict(&[0.0]), Err(Error::FeatureLength { expected: 2, got: 1 })));
    }

    #[test]
    fn scale_gamma_heuristic() {
        let x = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        // mean 1, variance 1, dim 2
        assert_eq!(scale_gamma(&x), 0.5);
        assert_eq!(scale_gamma(&[vec![3.0], vec![3.0]]), 1.0);
    }
}
