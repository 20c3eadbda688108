#include "tracescope/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tracescope/error.hpp"

namespace tracescope {

Signal::Signal(std::vector<double> values, double dt, std::string name)
    : values_(std::move(values)), dt_(dt), name_(std::move(name)) {
    if (values_.empty()) throw InvalidArgument("signal '" + name_ + "' has no samples");
    if (!(dt_ > 0.0) || !std::isfinite(dt_))
        throw InvalidArgument("signal '" + name_ + "' needs a positive sampling interval");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw InvalidArgument("signal '" + name_ + "' has a non-finite sample at index " +
                                  std::to_string(i));
    }
}

Signal Signal::with_values(std::vector<double> values) const {
    return Signal(std::move(values), dt_, name_);
}

MultivariateTrace::MultivariateTrace(std::vector<Signal> signals, std::string run_id,
                                     std::string recipe_id)
    : signals_(std::move(signals)), run_id_(std::move(run_id)), recipe_id_(std::move(recipe_id)) {
    if (signals_.empty()) throw InvalidArgument("trace has no signals");
    const auto& first = signals_.front();
    for (const auto& s : signals_) {
        if (s.size() != first.size())
            throw ShapeError("signal '" + s.name() + "' length differs from '" + first.name() + "'");
        if (std::abs(s.dt() - first.dt()) > 1e-12 * first.dt())
            throw ShapeError("signal '" + s.name() + "' sampling interval differs");
    }
}

const Signal* MultivariateTrace::find(std::string_view name) const noexcept {
    auto it = std::find_if(signals_.begin(), signals_.end(),
                           [&](const Signal& s) { return s.name() == name; });
    return it == signals_.end() ? nullptr : &*it;
}

std::vector<std::string> MultivariateTrace::names() const {
    std::vector<std::string> out;
    out.reserve(signals_.size());
    for (const auto& s : signals_) out.push_back(s.name());
    return out;
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw FormatError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": not a number: '" + std::string(cell) + "'");
    if (!std::isfinite(value))
        throw FormatError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": missing or non-finite value");
    return value;
}

void append_number(std::string& out, double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

MultivariateTrace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 2) throw FormatError(path.string() + ": need a time column and at least one value column");

    std::vector<std::string> names;
    for (std::size_t c = 1; c < header.size(); ++c) names.emplace_back(trim(header[c]));

    std::vector<double> times;
    std::vector<std::vector<double>> columns(names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        times.push_back(parse_cell(cells[0], row, 0));
        for (std::size_t c = 1; c < cells.size(); ++c)
            columns[c - 1].push_back(parse_cell(cells[c], row, c));
    }
    if (times.size() < 2) throw FormatError(path.string() + ": need at least two rows to infer dt");

    const double t0 = times.front();
    const double dt = (times.back() - t0) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) throw FormatError(path.string() + ": time column is not increasing");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double expected = t0 + dt * static_cast<double>(i);
        if (std::abs(times[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw FormatError(path.string() + ": non-uniform time grid at row " +
                              std::to_string(i + 2));
    }

    std::vector<Signal> signals;
    signals.reserve(names.size());
    for (std::size_t c = 0; c < names.size(); ++c)
        signals.emplace_back(std::move(columns[c]), dt, names[c]);
    return MultivariateTrace(std::move(signals), path.stem().string());
}

void save_trace_csv(const MultivariateTrace& trace, const std::filesystem::path& path) {
    std::string out = "time";
    for (const auto& s : trace.signals()) {
        out += ',';
        out += s.name();
    }
    out += '\n';
    const double dt = trace.dt();
    for (std::size_t i = 0; i < trace.length(); ++i) {
        append_number(out, dt * static_cast<double>(i));
        for (const auto& s : trace.signals()) {
            out += ',';
            append_number(out, s[i]);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << out;
    if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace tracescope
