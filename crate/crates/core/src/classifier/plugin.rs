use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use super::{ClassScores, ClassifierError, RoiImage, WeaponClass, NUM_CLASSES};
use crate::model_io::{ParseError, Records};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct PluginError(pub String);

/// A swappable ROI classifier. Implementations return one probability per
/// [`WeaponClass`] in canonical order; the host validates the vector.
pub trait ClassifierPlugin: Send + Sync {
    fn name(&self) -> &str;

    /// `false` makes the host serialize every call through one lock.
    fn thread_safe(&self) -> bool {
        true
    }

    fn predict(&self, roi: &RoiImage) -> Result<Vec<f64>, PluginError>;
}

/// Runs `plugin` on `roi` and validates its output. Plugin errors and panics
/// both surface as [`ClassifierError::Unavailable`].
pub fn classify(
    roi: &RoiImage,
    plugin: &dyn ClassifierPlugin,
) -> Result<ClassScores, ClassifierError> {
    let out = catch_unwind(AssertUnwindSafe(|| plugin.predict(roi)))
        .map_err(|_| ClassifierError::Unavailable(format!("plugin `{}` panicked", plugin.name())))?
        .map_err(|e| ClassifierError::Unavailable(format!("plugin `{}`: {e}", plugin.name())))?;
    ClassScores::new(&out)
}

/// Owns a plugin and enforces its threading contract.
pub struct PluginHost {
    plugin: Box<dyn ClassifierPlugin>,
    gate: Option<Mutex<()>>,
}

impl PluginHost {
    pub fn new(plugin: Box<dyn ClassifierPlugin>) -> Self {
        let gate = (!plugin.thread_safe()).then(|| Mutex::new(()));
        Self { plugin, gate }
    }

    pub fn name(&self) -> &str {
        self.plugin.name()
    }

    pub fn is_serialized(&self) -> bool {
        self.gate.is_some()
    }

    pub fn classify(&self, roi: &RoiImage) -> Result<ClassScores, ClassifierError> {
        let _guard = self
            .gate
            .as_ref()
            .map(|g| g.lock().unwrap_or_else(|p| p.into_inner()));
        classify(roi, self.plugin.as_ref())
    }
}

impl std::fmt::Debug for PluginHost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PluginHost")
            .field("plugin", &self.plugin.name())
            .field("serialized", &self.is_serialized())
            .finish()
    }
}

/// Plugin returning a fixed vector, or always failing. Useful for wiring
/// tests and for running the stack without a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct StubClassifier {
    output: Result<Vec<f64>, String>,
    thread_safe: bool,
}

impl StubClassifier {
    /// The vector is returned verbatim, unvalidated.
    pub fn fixed(probs: Vec<f64>) -> Self {
        Self {
            output: Ok(probs),
            thread_safe: true,
        }
    }

    pub fn one_hot(class: WeaponClass) -> Self {
        let mut p = vec![0.0; NUM_CLASSES];
        p[class.index()] = 1.0;
        Self::fixed(p)
    }

    pub fn failing(message: impl Into<String>) -> Self {
        Self {
            output: Err(message.into()),
            thread_safe: true,
        }
    }

    pub fn with_thread_safe(mut self, thread_safe: bool) -> Self {
        self.thread_safe = thread_safe;
        self
    }

    /// Parses a `stub v1` file: a header line followed by one
    /// `<label> <probability>` record per class, in any order. Labels not
    /// listed get probability 0.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut recs = Records::new(text);
        let head = recs.expect("stub header")?;
        head.keyword("stub", 1)?;
        if head.tokens[1] != "v1" {
            return Err(ParseError::new(
                head.line,
                format!("unsupported version `{}`", head.tokens[1]),
            ));
        }
        let mut probs = vec![0.0; NUM_CLASSES];
        let mut seen = [false; NUM_CLASSES];
        for r in recs {
            if r.tokens.len() != 2 {
                return Err(ParseError::new(r.line, "expected `<label> <probability>`"));
            }
            let class = WeaponClass::from_name(r.tokens[0]).ok_or_else(|| {
                ParseError::new(r.line, format!("unknown label `{}`", r.tokens[0]))
            })?;
            if std::mem::replace(&mut seen[class.index()], true) {
                return Err(ParseError::new(
                    r.line,
                    format!("duplicate label `{class}`"),
                ));
            }
            probs[class.index()] = r.parse(1, "probability")?;
        }
        Ok(Self::fixed(probs))
    }
}

impl ClassifierPlugin for StubClassifier {
    fn name(&self) -> &str {
        "stub"
    }

    fn thread_safe(&self) -> bool {
        self.thread_safe
    }

    fn predict(&self, _roi: &RoiImage) -> Result<Vec<f64>, PluginError> {
        self.output.clone().map_err(PluginError)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{GrayImage, Rect};

    fn roi() -> RoiImage {
        RoiImage::new(
            GrayImage::filled(227, 227, 0).unwrap(),
            Rect::new(0, 0, 10, 10),
        )
        .unwrap()
    }

    struct Panics;
    impl ClassifierPlugin for Panics {
        fn name(&self) -> &str {
            "panics"
        }
        fn predict(&self, _: &RoiImage) -> Result<Vec<f64>, PluginError> {
            panic!("boom")
        }
    }

    #[test]
    fn failures_become_unavailable() {
        let e = classify(&roi(), &StubClassifier::failing("no model")).unwrap_err();
        assert!(matches!(e, ClassifierError::Unavailable(_)));
        let e = classify(&roi(), &Panics).unwrap_err();
        assert!(matches!(e, ClassifierError::Unavailable(_)));
    }

    #[test]
    fn invalid_vectors_rejected() {
        let e = classify(&roi(), &StubClassifier::fixed(vec![0.5; 8])).unwrap_err();
        assert!(matches!(e, ClassifierError::InvalidScores(_)));
    }

    #[test]
    fn host_serializes_unsafe_plugins() {
        let h = PluginHost::new(Box::new(StubClassifier::one_hot(WeaponClass::Pistol)));
        assert!(!h.is_serialized());
        let h = PluginHost::new(Box::new(
            StubClassifier::one_hot(WeaponClass::Pistol).with_thread_safe(false),
        ));
        assert!(h.is_serialized());
        assert_eq!(
            h.classify(&roi()).unwrap().argmax_label(),
            WeaponClass::Pistol
        );
    }

    #[test]
    fn stub_file() {
        let s = StubClassifier::parse("stub v1\nno_weapon 0.25\npistol 0.75\n").unwrap();
        let scores = classify(&roi(), &s).unwrap();
        assert_eq!(scores.get(WeaponClass::Pistol), 0.75);
        let e = StubClassifier::parse("stub v1\nno_weapon 0.25\nlaser 0.75\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = StubClassifier::parse("stub v1\npistol 0.5\npistol 0.5\n").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
