#pragma once

#include <optional>
#include <vector>

#include "holopulse/features.hpp"
#include "holopulse/grid.hpp"
#include "holopulse/io.hpp"
#include "holopulse/pulse.hpp"
#include "holopulse/skeleton.hpp"

namespace holopulse {

struct PipelineParams {
    double theta = 0.3;
    std::size_t dilation_radius = 2;
    std::size_t min_len = 5;
    std::size_t half_window = 2;
    std::optional<std::size_t> min_separation;  // frames / 8 when unset
    std::size_t smoothing_width = 1;            // 3 enables the optional moving average
    FeatureNormSpec norm;
    std::size_t threads = 0;

    std::size_t effective_min_separation(std::size_t frames) const {
        return min_separation.value_or(default_min_separation(frames));
    }
};

/// Every intermediate product of the pulse analysis.
struct PipelineResult {
    BinaryMask skeleton;
    LabeledSegments segments;
    std::vector<PulseSignal> segment_signals;
    ArteryClassification classification;
    BinaryMask seed_mask;
    PulseSignal pulse;
    Image2D correlation;
    PeakSet peaks;
    Image2D systole;
    Image2D diastole;
    Image2D diasys;
    Image2D m0;
    FeatureStack features;
};

/// Vessel mask to feature stack: skeleton, junction-free segments, artery
/// seeds, global pulse, correlation map, systole/diastole, diasys, M0.
inline PipelineResult run_pipeline(const TemporalStack& stack, const BinaryMask& vessels,
                                   const PipelineParams& params = {}) {
    if (!stack.same_frame_shape(vessels)) {
        throw Error("vessel mask is " + std::to_string(vessels.height()) + "x" + std::to_string(vessels.width()) +
                    " but stack frames are " + std::to_string(stack.height()) + "x" + std::to_string(stack.width()));
    }
    if (params.min_len < 1) throw Error("min_len must be >= 1");
    if (params.min_separation && *params.min_separation < 1) throw Error("min_separation must be >= 1");

    PipelineResult r;
    r.skeleton = skeletonize(vessels);
    r.segments = prune_short_segments(label_segments(r.skeleton), params.min_len);
    if (r.segments.count == 0) throw Error("no vessel segments of at least " + std::to_string(params.min_len) + " pixels");
    r.segment_signals = segment_signals(stack, r.segments, params.dilation_radius);
    r.classification = classify_artery_segments(r.segment_signals, params.theta, params.smoothing_width);
    r.seed_mask = artery_seed_mask(r.segments, r.classification);
    if (r.classification.seed_count() == 0) {
        throw Error("no artery seeds: no segment score exceeds theta = " + detail::format_double(params.theta));
    }
    r.pulse = global_pulse(stack, r.seed_mask);
    r.correlation = correlation_map(stack, r.pulse, params.threads);
    r.peaks = detect_peaks(r.pulse, params.effective_min_separation(stack.frames()));
    if (r.peaks.systolic_peaks.empty()) throw Error("global pulse has no systolic peak");
    if (r.peaks.diastolic_valleys.empty()) throw Error("global pulse has no diastolic valley");
    r.systole = average_frames_around(stack, r.peaks.systolic_peaks, params.half_window, params.threads);
    r.diastole = average_frames_around(stack, r.peaks.diastolic_valleys, params.half_window, params.threads);
    r.diasys = diasys(r.systole, r.diastole);
    r.m0 = temporal_mean(stack, params.threads);
    r.features = build_feature_stack(r.m0, r.correlation, r.diasys, params.norm);
    return r;
}

}  // namespace holopulse
