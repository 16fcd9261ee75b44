use std::cmp::Ordering;

use super::DetectionBox;

/// Intersection over union of two boxes; 0 when either is empty.
pub fn iou(a: &DetectionBox, b: &DetectionBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Descending confidence, then smaller `x_min`, then smaller `y_min`.
fn rank(a: &DetectionBox, b: &DetectionBox) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.x_min.total_cmp(&b.x_min))
        .then(a.y_min.total_cmp(&b.y_min))
}

/// Greedy non-maximum suppression.
///
/// Keeps the best remaining box and drops every box whose IoU with it
/// exceeds `iou_threshold`, until no boxes remain. The output is sorted by
/// descending confidence.
pub fn nms(boxes: &[DetectionBox], iou_threshold: f64) -> Vec<DetectionBox> {
    let mut order: Vec<DetectionBox> = boxes.to_vec();
    order.sort_by(rank);
    let mut suppressed = vec![false; order.len()];
    let mut kept = Vec::new();
    for i in 0..order.len() {
        if suppressed[i] {
            continue;
        }
        kept.push(order[i]);
        for j in i + 1..order.len() {
            if !suppressed[j] && iou(&order[i], &order[j]) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}
