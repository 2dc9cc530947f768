use std::fmt::Write as _;

use super::VisionError;
use crate::model_io::{fmt_f64, ParseError, Records};

/// Linear classifier over HOG descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Scores strictly above this are people.
    pub threshold: f64,
}

impl LinearSvmModel {
    pub fn is_positive(&self, score: f64) -> bool {
        score > self.threshold
    }

    /// Parses the `svm v1` text format:
    ///
    /// ```text
    /// svm v1 <len>
    /// bias <b>
    /// threshold <t>
    /// <w_0>
    /// ...            (exactly <len> weight records)
    /// ```
    pub fn parse(text: &str) -> Result<Self, VisionError> {
        let mut recs = Records::new(text);
        let head = recs.expect("svm header")?;
        head.keyword("svm", 2)?;
        if head.tokens[1] != "v1" {
            return Err(ParseError::new(
                head.line,
                format!("unsupported version `{}`", head.tokens[1]),
            )
            .into());
        }
        let len: usize = head.parse(2, "weight count")?;
        if len == 0 {
            return Err(ParseError::new(head.line, "weight count must be at least 1").into());
        }
        let b = recs.expect("bias")?;
        b.keyword("bias", 1)?;
        let bias: f64 = b.parse(1, "bias")?;
        let t = recs.expect("threshold")?;
        t.keyword("threshold", 1)?;
        let threshold: f64 = t.parse(1, "threshold")?;

        let mut weights = Vec::with_capacity(len.min(1 << 20));
        while weights.len() < len {
            let r = recs.expect("weight")?;
            for v in r.parse_all_f64()? {
                if !v.is_finite() {
                    return Err(ParseError::new(r.line, "non-finite weight").into());
                }
                weights.push(v);
            }
            if weights.len() > len {
                return Err(ParseError::new(
                    r.line,
                    format!("more than the declared {len} weights"),
                )
                .into());
            }
        }
        recs.finish()?;
        Ok(Self {
            weights,
            bias,
            threshold,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.weights.len() * 24);
        let _ = writeln!(out, "svm v1 {}", self.weights.len());
        let _ = writeln!(out, "bias {}", fmt_f64(self.bias));
        let _ = writeln!(out, "threshold {}", fmt_f64(self.threshold));
        for w in &self.weights {
            let _ = writeln!(out, "{}", fmt_f64(*w));
        }
        out
    }
}

/// `dot(weights, descriptor) + bias`.
pub fn svm_score(descriptor: &[f64], model: &LinearSvmModel) -> Result<f64, VisionError> {
    if descriptor.len() != model.weights.len() {
        return Err(VisionError::InvalidInput(format!(
            "descriptor length {} does not match SVM length {}",
            descriptor.len(),
            model.weights.len()
        )));
    }
    Ok(descriptor
        .iter()
        .zip(&model.weights)
        .map(|(d, w)| d * w)
        .sum::<f64>()
        + model.bias)
}

/// Options for [`fit_linear_svm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmFitOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty on the weights.
    pub l2: f64,
}

impl Default for SvmFitOptions {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.1,
            momentum: 0.9,
            l2: 1e-3,
        }
    }
}

/// Primal L2-SVM: minimizes `l2/2·|w|² + mean(max(0, 1 − y·(w·x + b))²)`
/// by full-batch gradient descent with momentum. Deterministic. The fitted
/// model's threshold is 0.
pub fn fit_linear_svm(
    samples: &[Vec<f64>],
    positive: &[bool],
    opts: &SvmFitOptions,
) -> Result<LinearSvmModel, VisionError> {
    let bad = |m: String| Err(VisionError::InvalidInput(m));
    if samples.is_empty() || samples.len() != positive.len() {
        return bad(format!(
            "{} samples for {} labels",
            samples.len(),
            positive.len()
        ));
    }
    let len = samples[0].len();
    if len == 0
        || samples
            .iter()
            .any(|s| s.len() != len || s.iter().any(|v| !v.is_finite()))
    {
        return bad("samples must share one non-zero length and be finite".into());
    }
    if !(opts.learning_rate > 0.0) || !(0.0..1.0).contains(&opts.momentum) || !(opts.l2 >= 0.0) {
        return bad("invalid fit options".into());
    }
    let n = samples.len() as f64;
    let mut w = vec![0.0; len];
    let mut b = 0.0;
    let mut vw = vec![0.0; len];
    let mut vb = 0.0;
    let mut g = vec![0.0; len];
    for _ in 0..opts.epochs {
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut gb = 0.0;
        for (x, &pos) in samples.iter().zip(positive) {
            let y = if pos { 1.0 } else { -1.0 };
            let margin = 1.0 - y * (x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b);
            if margin > 0.0 {
                let k = -2.0 * y * margin / n;
                gb += k;
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += k * xi;
                }
            }
        }
        for i in 0..len {
            vw[i] = opts.momentum * vw[i] - opts.learning_rate * (g[i] + opts.l2 * w[i]);
            w[i] += vw[i];
        }
        vb = opts.momentum * vb - opts.learning_rate * gb;
        b += vb;
    }
    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        threshold: 0.0,
    })
}
