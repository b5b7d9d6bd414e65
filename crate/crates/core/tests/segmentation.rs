use empathd_core::model::RoiBox;
use empathd_core::scenegen::presets::segmentation_suite;
use empathd_core::scenegen::render;
use empathd_core::segmenter::{segment_detailed, DEFAULT_TAU};
use empathd_core::tracker::{detect_markers, estimate_pose};

#[test]
fn suite_iou_with_truth_and_tracked_pose() {
    let roi = RoiBox::default();
    let mut color_fg = 0;
    let mut depth_fg = 0;
    for (i, spec) in segmentation_suite(20).iter().enumerate() {
        let (frame, truth) = render(spec).unwrap();
        let seg = segment_detailed(&frame, &truth.pose, &spec.phone_geometry, &roi, DEFAULT_TAU);
        let iou = seg.mask.iou(&truth.hand_mask);
        assert!(iou >= 0.95, "frame {i}: iou {iou}");
        let (a, b) = seg.foreground_by_branch();
        color_fg += a;
        depth_fg += b;

        let dets = detect_markers(&frame.color, &spec.phone_geometry);
        let est = estimate_pose(&dets, &spec.phone_geometry, &frame.intrinsics).unwrap();
        let tracked = segment_detailed(&frame, &est.pose, &spec.phone_geometry, &roi, DEFAULT_TAU);
        let iou = tracked.mask.iou(&truth.hand_mask);
        assert!(iou >= 0.95, "frame {i} (tracked pose): iou {iou}");
    }
    assert!(color_fg > 0 && depth_fg > 0);
}
