#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "tracescope/image.hpp"
#include "tracescope/nn.hpp"
#include "tracescope/pipeline.hpp"
#include "tracescope/trace.hpp"

namespace tracescope {

/// Dot product of two probability vectors. Throws ShapeError on length mismatch.
double similarity(const ProbabilityVector& a, const ProbabilityVector& b);

/// Both images go through the same model (shared weights).
double similarity(const CompactCnn& model, const RgbImage& anchor, const RgbImage& query);

struct SimilarityVerdict {
    std::size_t time_index = 0;  // ordinal of the window within its variable
    std::ptrdiff_t center_index = 0;
    double window_center_seconds = 0.0;
    double score = 0.0;
    std::string anchor_class;
    std::string query_class;
    bool is_anomaly = false;
    bool at_peak = false;  // false for peak-free probe windows
};

struct VariableScan {
    std::string variable;
    std::vector<SimilarityVerdict> verdicts;
    std::string warning;  // e.g. no reference peaks
    double duration_seconds = 0.0;
};

struct ScanConfig {
    PipelineConfig pipeline;
    double threshold = 0.5;
    double probe_stride_seconds = 10.0;
};

/// Compares every variable of `query` with the same variable of `reference`.
/// Both channels are mapped to [0, 1] with the reference's min/max, then
/// baseline-corrected. Windows are taken at the reference's peaks and on a
/// probe grid over peak-free spans, at identical indices in both traces.
/// Throws ShapeError when the variable sets or sampling intervals differ.
std::vector<VariableScan> scan_trace(const CompactCnn& model, const MultivariateTrace& reference,
                                     const MultivariateTrace& query, const ScanConfig& cfg);

std::size_t count_anomalies(const std::vector<VariableScan>& scans);

struct ScanReport {
    double threshold = 0.5;
    std::uint64_t model_checksum = 0;
    std::vector<VariableScan> scans;
};

std::string scan_report_to_json(const ScanReport& report);
ScanReport scan_report_from_json(std::string_view text);

/// Timeline of score against time with flagged windows in red.
RgbImage render_timeline(const VariableScan& scan, double threshold);

/// `timeline_<variable>.png` with characters outside [A-Za-z0-9._-] replaced by '_'.
std::string timeline_filename(std::string_view variable);

/// Writes `<dir>/report.json` and one timeline PNG per variable; returns
/// the report path.
std::filesystem::path report_scan(const ScanReport& report, const std::filesystem::path& dir);

}  // namespace tracescope
