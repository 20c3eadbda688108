#include "tracescope/siamese.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "tracescope/error.hpp"
#include "tracescope/parallel.hpp"

namespace tracescope {

double similarity(const ProbabilityVector& a, const ProbabilityVector& b) {
    if (a.size() != b.size()) throw ShapeError("probability vectors differ in length");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double similarity(const CompactCnn& model, const RgbImage& anchor, const RgbImage& query) {
    if (anchor.width() != query.width() || anchor.height() != query.height())
        throw ShapeError("anchor and query images differ in size");
    return similarity(forward(model, anchor), forward(model, query));
}

namespace {

Signal normalize_with(const Signal& s, double lo, double range) {
    std::vector<double> out(s.size(), 0.0);
    if (range > 0.0)
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - lo) / range;
    return s.with_values(std::move(out));
}

std::string class_name(const CompactCnn& model, std::size_t k) {
    return k < model.class_names().size() ? model.class_names()[k] : std::to_string(k);
}

std::size_t argmax(const ProbabilityVector& p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

struct Probe {
    std::ptrdiff_t center;
    bool at_peak;
};

VariableScan scan_variable(const CompactCnn& model, const Signal& ref, const Signal& query,
                           const ScanConfig& cfg) {
    const auto& pc = cfg.pipeline;
    const auto values = ref.values();
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;

    const Signal ref_n = normalize_with(ref, lo, range);
    const Signal query_n = normalize_with(query, lo, range);
    const Signal ref_r = subtract_baseline(ref_n, estimate_baseline_als(ref_n, pc.als));
    const Signal query_r = subtract_baseline(query_n, estimate_baseline_als(query_n, pc.als));
    const auto peaks = detect_peaks(ref_r, pc.peaks);

    std::vector<Probe> probes;
    for (const auto& p : peaks) probes.push_back({static_cast<std::ptrdiff_t>(p.index), true});
    const auto free = peak_free_centers(ref.size(), peaks, pc.window_seconds, ref.dt());
    const std::set<std::size_t> free_set(free.begin(), free.end());
    const auto len = window_length(pc.window_seconds, ref.dt());
    const auto stride = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(cfg.probe_stride_seconds / ref.dt())));
    for (std::size_t c = (len - 1) / 2; c < ref.size(); c += stride)
        if (free_set.count(c)) probes.push_back({static_cast<std::ptrdiff_t>(c), false});
    std::sort(probes.begin(), probes.end(),
              [](const Probe& a, const Probe& b) { return a.center < b.center; });

    std::optional<double> amplitude;
    if (pc.normalization == Normalization::Global) {
        if (!pc.global_amplitude)
            throw InvalidArgument("global normalization needs pipeline.global_amplitude for scanning");
        amplitude = *pc.global_amplitude;
    }
    const auto grid = pc.scale_grid();

    VariableScan out;
    out.variable = ref.name();
    out.duration_seconds = ref.duration();
    if (peaks.empty()) out.warning = "no step peaks detected in the reference; probe windows only";
    out.verdicts.resize(probes.size());
    parallel_for(probes.size(), [&](std::size_t k) {
        const auto& probe = probes[k];
        const auto wa = extract_window(ref_r, probe.center, pc.window_seconds);
        const auto wq = extract_window(query_r, probe.center, pc.window_seconds);
        const auto pa = forward(model, render_scalogram(cwt_transform(wa, grid, ref.dt()), pc.image_size, amplitude));
        const auto pq = forward(model, render_scalogram(cwt_transform(wq, grid, ref.dt()), pc.image_size, amplitude));
        auto& v = out.verdicts[k];
        v.time_index = k;
        v.center_index = probe.center;
        v.window_center_seconds = static_cast<double>(probe.center) * ref.dt();
        v.score = similarity(pa, pq);
        v.anchor_class = class_name(model, argmax(pa));
        v.query_class = class_name(model, argmax(pq));
        v.is_anomaly = v.score < cfg.threshold;
        v.at_peak = probe.at_peak;
    });
    return out;
}

}  // namespace

std::vector<VariableScan> scan_trace(const CompactCnn& model, const MultivariateTrace& reference,
                                     const MultivariateTrace& query, const ScanConfig& cfg) {
    cfg.pipeline.validate();
    auto ref_names = reference.names();
    auto query_names = query.names();
    std::sort(ref_names.begin(), ref_names.end());
    std::sort(query_names.begin(), query_names.end());
    if (ref_names != query_names) throw ShapeError("reference and query have different variables");
    if (std::abs(reference.dt() - query.dt()) > 1e-9 * reference.dt())
        throw ShapeError("reference and query sampling intervals differ");

    std::vector<VariableScan> scans;
    for (const auto& ref : reference.signals())
        scans.push_back(scan_variable(model, ref, *query.find(ref.name()), cfg));
    return scans;
}

std::size_t count_anomalies(const std::vector<VariableScan>& scans) {
    std::size_t n = 0;
    for (const auto& s : scans)
        for (const auto& v : s.verdicts) n += v.is_anomaly ? 1 : 0;
    return n;
}

std::string scan_report_to_json(const ScanReport& report) {
    nlohmann::ordered_json j;
    j["threshold"] = report.threshold;
    j["model_checksum"] = report.model_checksum;
    j["flagged"] = count_anomalies(report.scans);
    auto& vars = j["variables"] = nlohmann::ordered_json::array();
    for (const auto& s : report.scans) {
        nlohmann::ordered_json js;
        js["variable"] = s.variable;
        js["threshold"] = report.threshold;
        js["model_checksum"] = report.model_checksum;
        js["duration_seconds"] = s.duration_seconds;
        if (!s.warning.empty()) js["warning"] = s.warning;
        auto& verdicts = js["verdicts"] = nlohmann::ordered_json::array();
        for (const auto& v : s.verdicts) {
            nlohmann::ordered_json jv;
            jv["time_index"] = v.time_index;
            jv["center_index"] = v.center_index;
            jv["window_center_seconds"] = v.window_center_seconds;
            jv["score"] = v.score;
            jv["anchor_class"] = v.anchor_class;
            jv["query_class"] = v.query_class;
            jv["is_anomaly"] = v.is_anomaly;
            jv["at_peak"] = v.at_peak;
            verdicts.push_back(std::move(jv));
        }
        vars.push_back(std::move(js));
    }
    return j.dump(2) + "\n";
}

ScanReport scan_report_from_json(std::string_view text) {
    ScanReport r;
    try {
        const auto j = nlohmann::json::parse(text);
        r.threshold = j.at("threshold").get<double>();
        r.model_checksum = j.at("model_checksum").get<std::uint64_t>();
        for (const auto& js : j.at("variables")) {
            VariableScan s;
            s.variable = js.at("variable").get<std::string>();
            s.duration_seconds = js.value("duration_seconds", 0.0);
            s.warning = js.value("warning", std::string{});
            for (const auto& jv : js.at("verdicts")) {
                SimilarityVerdict v;
                v.time_index = jv.at("time_index").get<std::size_t>();
                v.center_index = jv.value("center_index", std::ptrdiff_t{0});
                v.window_center_seconds = jv.at("window_center_seconds").get<double>();
                v.score = jv.at("score").get<double>();
                v.anchor_class = jv.at("anchor_class").get<std::string>();
                v.query_class = jv.at("query_class").get<std::string>();
                v.is_anomaly = jv.at("is_anomaly").get<bool>();
                v.at_peak = jv.value("at_peak", false);
                s.verdicts.push_back(std::move(v));
            }
            r.scans.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid scan report: ") + e.what());
    }
    return r;
}

RgbImage render_timeline(const VariableScan& scan, double threshold) {
    constexpr int kWidth = 640;
    constexpr int kHeight = 160;
    constexpr int kMargin = 8;
    RgbImage img(kWidth, kHeight, 255);
    const int plot_h = kHeight - 2 * kMargin;
    const int plot_w = kWidth - 2 * kMargin;
    auto y_of = [&](double score) {
        return kMargin + static_cast<int>(std::lround((1.0 - std::clamp(score, 0.0, 1.0)) * plot_h));
    };
    fill_rect(img, kMargin, kHeight - kMargin, plot_w, 1, 0, 0, 0);
    for (int x = kMargin; x < kMargin + plot_w; x += 6)
        fill_rect(img, x, y_of(threshold), 3, 1, 120, 120, 120);
    const double duration = scan.duration_seconds > 0.0 ? scan.duration_seconds : 1.0;
    for (const auto& v : scan.verdicts) {
        const int x = kMargin + static_cast<int>(std::lround(v.window_center_seconds / duration * plot_w));
        const int top = y_of(v.score);
        if (v.is_anomaly)
            fill_rect(img, x - 2, top, 5, kHeight - kMargin - top, 214, 39, 40);
        else
            fill_rect(img, x - 2, top, 5, kHeight - kMargin - top, 31, 119, 180);
    }
    return img;
}

std::string timeline_filename(std::string_view variable) {
    std::string name = "timeline_";
    for (const char c : variable) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        name += keep ? c : '_';
    }
    return name + ".png";
}

std::filesystem::path report_scan(const ScanReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto path = dir / "report.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << scan_report_to_json(report);
    if (!f) throw IoError("write failed for " + path.string());
    for (const auto& s : report.scans)
        write_png(render_timeline(s, report.threshold), dir / timeline_filename(s.variable));
    return path;
}

}  // namespace tracescope
