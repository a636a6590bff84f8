#pragma once

// Subcommand bodies for the holopulse CLI. They take parsed options and
// streams so tests can drive them in-process; each returns the exit code.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "holopulse/features.hpp"
#include "holopulse/io.hpp"
#include "holopulse/metrics.hpp"
#include "holopulse/phantom.hpp"
#include "holopulse/pipeline.hpp"

namespace holopulse::cli {

struct ExtractOptions {
    std::filesystem::path stack_path;
    std::filesystem::path mask_path;
    std::filesystem::path out_dir;
    PipelineParams params;
    std::string norm_m0 = "percentile:1:99";
    std::string norm_corr = "none";
    std::string norm_diasys = "percentile:1:99";
    bool verbose = false;
};

struct EvaluateOptions {
    std::filesystem::path pred_path;
    std::filesystem::path gt_path;
    std::optional<std::filesystem::path> out_path;
};

struct PhantomOptions {
    std::optional<std::filesystem::path> spec_path;
    std::filesystem::path out_dir;
};

namespace detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    holopulse::detail::write_file(path, j.dump(2) + "\n");
}

inline nlohmann::ordered_json norm_spec_json(const NormSpec& n) {
    nlohmann::ordered_json j;
    j["method"] = to_string(n.method);
    if (n.method == NormMethod::percentile_minmax) {
        j["p_lo"] = n.p_lo;
        j["p_hi"] = n.p_hi;
    }
    return j;
}

inline std::string fixed(std::optional<double> v, int digits) {
    if (!v || !std::isfinite(*v)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << *v;
    return os.str();
}

}  // namespace detail

inline int cmd_extract(ExtractOptions opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        opt.params.norm.m0 = NormSpec::parse(opt.norm_m0);
        opt.params.norm.corr = NormSpec::parse(opt.norm_corr);
        opt.params.norm.diasys = NormSpec::parse(opt.norm_diasys);

        const auto stack = load_stack(opt.stack_path);
        const auto vessels = load_binary_mask(opt.mask_path);
        if (opt.verbose) {
            err << "loaded stack " << stack.height() << "x" << stack.width() << "x" << stack.frames() << "\n";
        }
        const auto r = run_pipeline(stack, vessels, opt.params);
        for (const auto& w : r.classification.warnings) err << "warning: " << w << "\n";

        std::filesystem::create_directories(opt.out_dir);
        const auto& dir = opt.out_dir;
        export_feature_stack(r.features, dir, "features.json");
        save_map(r.m0, dir / "m0_raw.json");
        save_map(r.diasys, dir / "diasys_raw.json");
        save_map(r.systole, dir / "systole.json");
        save_map(r.diastole, dir / "diastole.json");
        save_binary_mask(r.seed_mask, dir / "artery_seeds.pgm");
        save_signal_csv(r.pulse, dir / "global_pulse.csv");

        std::vector<std::string> names;
        for (std::size_t i = 1; i <= r.segments.count; ++i) names.push_back("segment_" + std::to_string(i));
        save_signal_table_csv(r.segment_signals, names, dir / "segment_signals.csv");

        const auto sizes = segment_sizes(r.segments);
        nlohmann::ordered_json segs = nlohmann::ordered_json::array();
        for (const auto& v : r.classification.segments) {
            nlohmann::ordered_json s;
            s["label"] = v.label;
            s["pixel_count"] = sizes[static_cast<std::size_t>(v.label)];
            s["score"] = v.score;
            s["artery_seed"] = v.artery_seed;
            segs.push_back(s);
        }
        nlohmann::ordered_json segments_doc;
        segments_doc["segments"] = segs;
        segments_doc["warnings"] = r.classification.warnings;
        detail::write_json(dir / "segments.json", segments_doc);

        nlohmann::ordered_json peaks;
        peaks["systolic_peaks"] = r.peaks.systolic_peaks;
        peaks["diastolic_valleys"] = r.peaks.diastolic_valleys;
        detail::write_json(dir / "peaks.json", peaks);

        nlohmann::ordered_json run;
        run["command"] = "extract";
        run["inputs"] = {{"stack", opt.stack_path.string()}, {"vessel_mask", opt.mask_path.string()}};
        run["stack"] = {{"height", stack.height()}, {"width", stack.width()}, {"frames", stack.frames()}};
        nlohmann::ordered_json p;
        p["theta"] = opt.params.theta;
        p["dilation_radius"] = opt.params.dilation_radius;
        p["min_len"] = opt.params.min_len;
        p["half_window"] = opt.params.half_window;
        p["min_separation"] = opt.params.effective_min_separation(stack.frames());
        p["min_separation_auto"] = !opt.params.min_separation.has_value();
        p["smoothing_width"] = opt.params.smoothing_width;
        p["norm"] = {{"m0", detail::norm_spec_json(opt.params.norm.m0)},
                     {"corr", detail::norm_spec_json(opt.params.norm.corr)},
                     {"diasys", detail::norm_spec_json(opt.params.norm.diasys)}};
        run["parameters"] = p;
        run["summary"] = {{"segments", r.segments.count},
                          {"artery_seeds", r.classification.seed_count()},
                          {"systolic_peaks", r.peaks.systolic_peaks.size()},
                          {"diastolic_valleys", r.peaks.diastolic_valleys.size()}};
        detail::write_json(dir / "run-manifest.json", run);

        out << "segments: " << r.segments.count << ", artery seeds: " << r.classification.seed_count()
            << ", systolic peaks: " << r.peaks.systolic_peaks.size()
            << ", diastolic valleys: " << r.peaks.diastolic_valleys.size() << "\n";
        out << "wrote features to " << dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

/// One row per class in the column order sensitivity, Dice, clDice, HD95.
inline std::string format_report_table(const MetricsReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "class" << std::right << std::setw(8) << "Sens." << std::setw(8) << "Dice"
       << std::setw(8) << "clDice" << std::setw(9) << "HD95" << "\n";
    auto row = [&](const char* name, const ClassMetrics& m) {
        os << std::left << std::setw(10) << name << std::right << std::setw(8) << detail::fixed(m.sensitivity, 3)
           << std::setw(8) << detail::fixed(m.dice, 3) << std::setw(8) << detail::fixed(m.cl_dice, 3) << std::setw(9)
           << detail::fixed(m.hd95, 2) << "\n";
    };
    row("vessel", r.vessel);
    row("artery", r.artery);
    row("vein", r.vein);
    row("macro_av", r.macro_av);
    return os.str();
}

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        const auto pred = load_mask(opt.pred_path);
        const auto gt = load_mask(opt.gt_path);
        const auto report = evaluate(pred, gt);
        for (const auto& w : report.warnings) err << "warning: " << w << "\n";
        if (opt.out_path) {
            if (opt.out_path->has_parent_path()) std::filesystem::create_directories(opt.out_path->parent_path());
            detail::write_json(*opt.out_path, to_json(report));
        }
        out << format_report_table(report);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_phantom(const PhantomOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        const auto spec = opt.spec_path ? load_phantom_spec(*opt.spec_path) : PhantomSpec{};
        const auto truth = generate_phantom(spec);
        std::filesystem::create_directories(opt.out_dir);
        save_stack(truth.stack, opt.out_dir / "stack.json");
        save_mask(truth.gt_mask, opt.out_dir / "gt_mask.pgm");
        save_binary_mask(vessel_mask(truth.gt_mask), opt.out_dir / "vessel_mask.pgm");
        detail::write_json(opt.out_dir / "spec.json", to_json(spec));
        out << "phantom " << spec.height << "x" << spec.width << "x" << spec.frames << " with "
            << spec.n_arteries << " arteries and " << spec.n_veins << " veins written to " << opt.out_dir.string()
            << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

/// Prints header fields of a float container, feature manifest, or mask.
inline int cmd_info(const std::filesystem::path& path, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        if (!std::filesystem::exists(path)) throw Error("missing file '" + path.string() + "'");
        if (path.extension() == ".pgm") {
            const auto m = load_mask(path);
            std::size_t counts[3] = {0, 0, 0};
            for (auto l : m) ++counts[static_cast<int>(l)];
            out << "mask h=" << m.height() << " w=" << m.width() << " background=" << counts[0]
                << " artery=" << counts[1] << " vein=" << counts[2] << "\n";
            return 0;
        }
        const auto j = nlohmann::json::parse(holopulse::detail::read_file(path));
        if (j.contains("channels")) {
            out << "features h=" << j.at("height").get<std::size_t>() << " w=" << j.at("width").get<std::size_t>()
                << " channels=";
            bool first = true;
            for (const auto& c : j.at("channels")) {
                out << (first ? "" : ",") << c.at("name").get<std::string>();
                first = false;
            }
            out << "\n";
            return 0;
        }
        const auto h = read_container_header(path);
        out << "h=" << h.height << " w=" << h.width << " frames=" << h.frames << " dtype=f32le";
        if (h.frame_rate) out << " frame_rate=" << holopulse::detail::format_double(*h.frame_rate);
        out << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace holopulse::cli
