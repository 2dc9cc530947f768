use std::cmp::Ordering;

use super::Detection;

pub const DEFAULT_NMS_IOU: f64 = 0.45;

/// Default for [`suppress_contained`].
pub const DEFAULT_CONTAINMENT: f64 = 0.8;

/// Greedy suppression: visit detections by descending score (ties broken
/// by ascending x, then y) and keep one only if its IoU with every kept
/// detection is at most `iou_threshold`.
pub fn non_max_suppression(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::new();
    for d in by_score(dets) {
        if kept.iter().all(|k| k.bbox.iou(&d.bbox) <= iou_threshold) {
            kept.push(*d);
        }
    }
    kept
}

fn by_score(dets: &[Detection]) -> Vec<&Detection> {
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| {
        b.person_score
            .partial_cmp(&a.person_score)
            .unwrap_or(Ordering::Equal)
            .then(a.bbox.x.cmp(&b.bbox.x))
            .then(a.bbox.y.cmp(&b.bbox.y))
    });
    order
}

/// Drops a detection when more than `fraction` of its own area lies inside
/// a higher-ranked kept one. Catches part-of-body windows nested in a
/// larger hit, whose IoU stays low. `fraction >= 1` disables it.
pub fn suppress_contained(dets: &[Detection], fraction: f64) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::new();
    for d in by_score(dets) {
        let own = d.bbox.area().max(1) as f64;
        if kept
            .iter()
            .all(|k| k.bbox.intersection_area(&d.bbox) as f64 / own <= fraction)
        {
            kept.push(*d);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::Rect;

    fn det(x: u32, y: u32, score: f64) -> Detection {
        Detection {
            bbox: Rect::new(x, y, 10, 10),
            person_score: score,
            scale: 1.0,
        }
    }

    #[test]
    fn single_is_kept() {
        let d = det(1, 2, 0.3);
        assert_eq!(non_max_suppression(&[d], 0.45), vec![d]);
    }

    #[test]
    fn identical_boxes_keep_higher_score() {
        let out = non_max_suppression(&[det(0, 0, 1.0), det(0, 0, 2.0)], 0.45);
        assert_eq!(out, vec![det(0, 0, 2.0)]);
    }

    #[test]
    fn tie_breaks_by_position() {
        let out = non_max_suppression(&[det(3, 0, 1.0), det(2, 0, 1.0), det(2, 1, 1.0)], 0.1);
        assert_eq!(out, vec![det(2, 0, 1.0)]);
    }

    #[test]
    fn disjoint_boxes_all_kept_in_score_order() {
        let out = non_max_suppression(&[det(0, 0, 1.0), det(50, 0, 3.0), det(100, 0, 2.0)], 0.45);
        let scores: Vec<f64> = out.iter().map(|d| d.person_score).collect();
        assert_eq!(scores, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn nested_box_is_dropped() {
        let big = Detection {
            bbox: Rect::new(0, 0, 40, 80),
            person_score: 5.0,
            scale: 1.0,
        };
        let inner = Detection {
            bbox: Rect::new(5, 0, 20, 40),
            person_score: 3.0,
            scale: 1.0,
        };
        assert!(big.bbox.iou(&inner.bbox) < 0.45);
        assert_eq!(suppress_contained(&[inner, big], 0.8), vec![big]);
        assert_eq!(suppress_contained(&[inner, big], 1.0).len(), 2);
    }
}
