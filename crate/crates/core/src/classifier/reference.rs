use std::fmt::Write as _;

use super::plugin::{ClassifierPlugin, PluginError};
use super::{softmax, ClassScores, ClassifierError, RoiImage, WeaponClass, NUM_CLASSES};
use crate::model_io::{fmt_f64, ParseError, Records};
use crate::vision::{hog_descriptor, resize_area, HogParams};

/// HOG features of the ROI downscaled to 64×128, a linear layer, softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceClassifier {
    hog: HogParams,
    /// Row-major, `NUM_CLASSES × descriptor_len`.
    weights: Vec<f64>,
    bias: [f64; NUM_CLASSES],
}

impl ReferenceClassifier {
    pub fn new(weights: Vec<f64>, bias: [f64; NUM_CLASSES]) -> Result<Self, ClassifierError> {
        let hog = HogParams::default();
        let len = hog.descriptor_len();
        if weights.len() != len * NUM_CLASSES {
            return Err(ClassifierError::InvalidInput(format!(
                "expected {} weights, got {}",
                len * NUM_CLASSES,
                weights.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|w| !w.is_finite()) {
            return Err(ClassifierError::InvalidInput("non-finite weight".into()));
        }
        Ok(Self { hog, weights, bias })
    }

    pub fn descriptor_len(&self) -> usize {
        self.hog.descriptor_len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64; NUM_CLASSES] {
        &self.bias
    }

    /// Feature vector for `roi`.
    pub fn descriptor(&self, roi: &RoiImage) -> Result<Vec<f64>, ClassifierError> {
        let (w, h) = (self.hog.window_w, self.hog.window_h);
        let small = resize_area(roi.image(), w, h)?;
        Ok(hog_descriptor(&small, &self.hog)?)
    }

    pub fn logits(&self, descriptor: &[f64]) -> Result<[f64; NUM_CLASSES], ClassifierError> {
        let len = self.descriptor_len();
        if descriptor.len() != len {
            return Err(ClassifierError::InvalidInput(format!(
                "descriptor length {} != {len}",
                descriptor.len()
            )));
        }
        let mut out = self.bias;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * len..(k + 1) * len];
            *o += row.iter().zip(descriptor).map(|(w, d)| w * d).sum::<f64>();
        }
        Ok(out)
    }

    pub fn scores(&self, roi: &RoiImage) -> Result<ClassScores, ClassifierError> {
        let d = self.descriptor(roi)?;
        softmax(&self.logits(&d)?)
    }

    /// Parses the `refclf v1` text format:
    ///
    /// ```text
    /// refclf v1 <descriptor_len> 8
    /// bias <b_0> ... <b_7>
    /// class <label>          (8 times, canonical order)
    /// <w> <w> ...            (exactly descriptor_len weights, any line split)
    /// ```
    pub fn parse(text: &str) -> Result<Self, ClassifierError> {
        let mut recs = Records::new(text);
        let head = recs.expect("refclf header")?;
        head.keyword("refclf", 3)?;
        if head.tokens[1] != "v1" {
            return Err(pe(
                head.line,
                format!("unsupported version `{}`", head.tokens[1]),
            ));
        }
        let len: usize = head.parse(2, "descriptor length")?;
        let expected_len = HogParams::default().descriptor_len();
        if len != expected_len {
            return Err(pe(
                head.line,
                format!("descriptor length must be {expected_len}, got {len}"),
            ));
        }
        let classes: usize = head.parse(3, "class count")?;
        if classes != NUM_CLASSES {
            return Err(pe(
                head.line,
                format!("class count must be {NUM_CLASSES}, got {classes}"),
            ));
        }
        let b = recs.expect("bias")?;
        b.keyword("bias", NUM_CLASSES)?;
        let mut bias = [0.0; NUM_CLASSES];
        for (i, v) in bias.iter_mut().enumerate() {
            *v = finite(b.parse(i + 1, "bias")?, b.line)?;
        }
        let mut weights = Vec::with_capacity(len * NUM_CLASSES);
        for class in WeaponClass::ALL {
            let c = recs.expect("class record")?;
            c.keyword("class", 1)?;
            if c.tokens[1] != class.name() {
                return Err(pe(
                    c.line,
                    format!("expected class `{class}`, found `{}`", c.tokens[1]),
                ));
            }
            let start = weights.len();
            while weights.len() - start < len {
                let r = recs.expect("weights")?;
                for v in r.parse_all_f64()? {
                    weights.push(finite(v, r.line)?);
                }
                if weights.len() - start > len {
                    return Err(pe(r.line, format!("more than {len} weights for `{class}`")));
                }
            }
        }
        recs.finish()?;
        Self::new(weights, bias)
    }

    pub fn to_text(&self) -> String {
        let len = self.descriptor_len();
        let mut out = String::with_capacity(self.weights.len() * 24);
        let _ = writeln!(out, "refclf v1 {len} {NUM_CLASSES}");
        out.push_str("bias");
        for b in self.bias {
            let _ = write!(out, " {}", fmt_f64(b));
        }
        out.push('\n');
        for class in WeaponClass::ALL {
            let _ = writeln!(out, "class {class}");
            let row = &self.weights[class.index() * len..(class.index() + 1) * len];
            for chunk in row.chunks(9) {
                let line: Vec<String> = chunk.iter().map(|w| fmt_f64(*w)).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }
}

fn pe(line: usize, msg: String) -> ClassifierError {
    ClassifierError::Vision(ParseError::new(line, msg).into())
}

fn finite(v: f64, line: usize) -> Result<f64, ClassifierError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(pe(line, "non-finite value".into()))
    }
}

impl From<ParseError> for ClassifierError {
    fn from(e: ParseError) -> Self {
        ClassifierError::Vision(e.into())
    }
}

impl ClassifierPlugin for ReferenceClassifier {
    fn name(&self) -> &str {
        "reference"
    }

    fn predict(&self, roi: &RoiImage) -> Result<Vec<f64>, PluginError> {
        self.scores(roi)
            .map(|s| s.probabilities().to_vec())
            .map_err(|e| PluginError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{GrayImage, Rect};

    fn tiny() -> ReferenceClassifier {
        let len = HogParams::default().descriptor_len();
        let weights = (0..len * NUM_CLASSES)
            .map(|i| ((i % 17) as f64 - 8.0) * 1e-3)
            .collect();
        ReferenceClassifier::new(weights, [0.0, 0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7]).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = tiny();
        assert_eq!(ReferenceClassifier::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = tiny()
            .to_text()
            .replacen("class revolver", "class pistol", 1);
        let ClassifierError::Vision(crate::vision::VisionError::Parse(e)) =
            ReferenceClassifier::parse(&text).unwrap_err()
        else {
            panic!("wrong error kind")
        };
        let line = text.lines().position(|l| l == "class pistol").unwrap() + 1;
        assert_eq!(e.line, line);
    }

    #[test]
    fn flat_roi_gives_bias_softmax() {
        let m = tiny();
        let roi = RoiImage::new(
            GrayImage::filled(227, 227, 77).unwrap(),
            Rect::new(0, 0, 1, 1),
        )
        .unwrap();
        let s = m.scores(&roi).unwrap();
        let expect = softmax(m.bias()).unwrap();
        for (a, b) in s.probabilities().iter().zip(expect.probabilities()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
