//! Models shipped with the crate, embedded at build time and parsed on
//! first use. The files under `models/` are regenerated by the
//! `fit_reference_models` example.

use std::sync::OnceLock;

use crate::classifier::ReferenceClassifier;
use crate::vision::{CascadeModel, LinearSvmModel};

pub const PERSON_CASCADE_TEXT: &str = include_str!("../models/person_cascade.txt");
pub const PERSON_HOG_SVM_TEXT: &str = include_str!("../models/person_hog_svm.txt");
pub const REFERENCE_CLASSIFIER_TEXT: &str = include_str!("../models/reference_classifier.txt");

/// Haar cascade over a 32×64 window for upright people.
pub fn person_cascade() -> &'static CascadeModel {
    static M: OnceLock<CascadeModel> = OnceLock::new();
    M.get_or_init(|| CascadeModel::parse(PERSON_CASCADE_TEXT).expect("embedded cascade parses"))
}

/// Linear SVM over the default 64×128 HOG descriptor.
pub fn person_hog_svm() -> &'static LinearSvmModel {
    static M: OnceLock<LinearSvmModel> = OnceLock::new();
    M.get_or_init(|| LinearSvmModel::parse(PERSON_HOG_SVM_TEXT).expect("embedded SVM parses"))
}

/// Eight-way HOG softmax classifier over person ROIs.
pub fn reference_classifier() -> &'static ReferenceClassifier {
    static M: OnceLock<ReferenceClassifier> = OnceLock::new();
    M.get_or_init(|| {
        ReferenceClassifier::parse(REFERENCE_CLASSIFIER_TEXT).expect("embedded classifier parses")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_models_parse() {
        assert_eq!(person_cascade().window_w, 32);
        assert_eq!(person_hog_svm().weights.len(), 3780);
        assert_eq!(reference_classifier().descriptor_len(), 3780);
    }
}
