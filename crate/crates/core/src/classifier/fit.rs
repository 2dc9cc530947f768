//! Multinomial logistic regression by full-batch gradient descent with
//! momentum. Deterministic: the same data and options give the same bits.

use super::{ClassifierError, ReferenceClassifier, WeaponClass, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty on weights (not biases).
    pub l2: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.5,
            momentum: 0.9,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub epochs: usize,
    /// Mean cross-entropy plus penalty after the last update.
    pub final_loss: f64,
    pub train_accuracy: f64,
}

pub fn fit_softmax_regression(
    features: &[Vec<f64>],
    labels: &[WeaponClass],
    opts: &FitOptions,
) -> Result<(ReferenceClassifier, FitReport), ClassifierError> {
    let len = crate::vision::HogParams::default().descriptor_len();
    if features.is_empty() || features.len() != labels.len() {
        return Err(ClassifierError::InvalidInput(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features
        .iter()
        .any(|f| f.len() != len || f.iter().any(|v| !v.is_finite()))
    {
        return Err(ClassifierError::InvalidInput(format!(
            "feature vectors must be {len} finite values"
        )));
    }
    if !(opts.learning_rate > 0.0) || !(0.0..1.0).contains(&opts.momentum) || !(opts.l2 >= 0.0) {
        return Err(ClassifierError::InvalidInput("invalid fit options".into()));
    }

    let n = features.len() as f64;
    let mut w = vec![0.0; NUM_CLASSES * len];
    let mut b = [0.0; NUM_CLASSES];
    let mut vw = vec![0.0; NUM_CLASSES * len];
    let mut vb = [0.0; NUM_CLASSES];
    let mut gw = vec![0.0; NUM_CLASSES * len];

    let forward = |w: &[f64], b: &[f64; NUM_CLASSES], x: &[f64]| -> [f64; NUM_CLASSES] {
        let mut z = *b;
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += w[k * len..(k + 1) * len]
                .iter()
                .zip(x)
                .map(|(a, c)| a * c)
                .sum::<f64>();
        }
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for zk in z.iter_mut() {
            *zk = (*zk - m).exp();
            s += *zk;
        }
        z.map(|e| e / s)
    };

    for _ in 0..opts.epochs {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = [0.0; NUM_CLASSES];
        for (x, y) in features.iter().zip(labels) {
            let mut p = forward(&w, &b, x);
            p[y.index()] -= 1.0;
            for k in 0..NUM_CLASSES {
                gb[k] += p[k];
                let row = &mut gw[k * len..(k + 1) * len];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += p[k] * xi;
                }
            }
        }
        for i in 0..w.len() {
            let g = gw[i] / n + opts.l2 * w[i];
            vw[i] = opts.momentum * vw[i] - opts.learning_rate * g;
            w[i] += vw[i];
        }
        for k in 0..NUM_CLASSES {
            vb[k] = opts.momentum * vb[k] - opts.learning_rate * gb[k] / n;
            b[k] += vb[k];
        }
    }

    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in features.iter().zip(labels) {
        let p = forward(&w, &b, x);
        loss -= p[y.index()].max(1e-300).ln();
        let arg = (0..NUM_CLASSES).fold(0, |a, k| if p[k] > p[a] { k } else { a });
        correct += (arg == y.index()) as usize;
    }
    let penalty = 0.5 * opts.l2 * w.iter().map(|v| v * v).sum::<f64>();
    let report = FitReport {
        epochs: opts.epochs,
        final_loss: loss / n + penalty,
        train_accuracy: correct as f64 / n,
    };
    Ok((ReferenceClassifier::new(w, b)?, report))
}
