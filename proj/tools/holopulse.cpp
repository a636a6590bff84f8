#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "holopulse/commands.hpp"

int main(int argc, char** argv) {
    using namespace holopulse;

    CLI::App app{"Cardiac pulse analysis of power Doppler stacks"};
    app.require_subcommand(1);

    cli::ExtractOptions ex;
    std::string min_sep = "auto";
    auto* extract = app.add_subcommand("extract", "Vessel mask + stack -> artery seeds, pulse, feature channels");
    extract->add_option("--stack", ex.stack_path, "Stack header (.json)")->required();
    extract->add_option("--mask", ex.mask_path, "Binary vessel mask (.pgm)")->required();
    extract->add_option("--out", ex.out_dir, "Output directory")->required();
    extract->add_option("--theta", ex.params.theta, "Artery seed threshold on the normalized upstroke")
        ->capture_default_str();
    extract->add_option("--dilation", ex.params.dilation_radius, "Segment dilation radius (pixels)")
        ->capture_default_str();
    extract->add_option("--min-len", ex.params.min_len, "Minimum segment length (pixels)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    extract->add_option("--half-window", ex.params.half_window, "Frames averaged on each side of a peak")
        ->capture_default_str();
    extract->add_option("--min-separation", min_sep, "Minimum peak spacing in frames, or 'auto' (frames/8)")
        ->capture_default_str();
    extract->add_option("--smooth", ex.params.smoothing_width, "Moving-average width before scoring (1 = off)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    extract->add_option("--norm-m0", ex.norm_m0, "none | zscore | percentile:<lo>:<hi>")->capture_default_str();
    extract->add_option("--norm-corr", ex.norm_corr, "none | zscore | percentile:<lo>:<hi>")->capture_default_str();
    extract->add_option("--norm-diasys", ex.norm_diasys, "none | zscore | percentile:<lo>:<hi>")
        ->capture_default_str();
    extract->add_option("--threads", ex.params.threads, "Worker threads (0 = all cores)")->capture_default_str();
    extract->add_flag("-v,--verbose", ex.verbose, "Progress on stderr");

    cli::EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "Sensitivity, Dice, clDice and HD95 of a predicted A/V mask");
    evaluate->add_option("--pred", ev.pred_path, "Predicted mask (.pgm)")->required();
    evaluate->add_option("--gt", ev.gt_path, "Ground-truth mask (.pgm)")->required();
    std::string report_path;
    evaluate->add_option("--out", report_path, "Report JSON path");

    cli::PhantomOptions ph;
    std::string spec_path;
    auto* phantom = app.add_subcommand("phantom", "Synthetic pulsatile stack with ground-truth masks");
    phantom->add_option("--spec", spec_path, "Phantom spec JSON (defaults when omitted)");
    phantom->add_option("--out", ph.out_dir, "Output directory")->required();

    std::string info_path;
    auto* info = app.add_subcommand("info", "Print header fields of a container, manifest, or mask");
    info->add_option("path", info_path, "File to inspect")->required();

    CLI11_PARSE(app, argc, argv);

    if (extract->parsed()) {
        if (min_sep != "auto") {
            try {
                const auto v = std::stoll(min_sep);
                if (v < 1) throw std::invalid_argument("");
                ex.params.min_separation = static_cast<std::size_t>(v);
            } catch (const std::exception&) {
                std::cerr << "error: --min-separation must be a positive integer or 'auto'\n";
                return 2;
            }
        }
        return cli::cmd_extract(ex);
    }
    if (evaluate->parsed()) {
        if (!report_path.empty()) ev.out_path = report_path;
        return cli::cmd_evaluate(ev);
    }
    if (phantom->parsed()) {
        if (!spec_path.empty()) ph.spec_path = spec_path;
        return cli::cmd_phantom(ph);
    }
    if (info->parsed()) return cli::cmd_info(info_path);
    return 2;
}
