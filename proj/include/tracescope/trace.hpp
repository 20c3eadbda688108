#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tracescope {

/// One uniformly sampled univariate series. Immutable after construction.
class Signal {
public:
    /// Throws InvalidArgument if values is empty, dt <= 0 or any sample is
    /// non-finite.
    Signal(std::vector<double> values, double dt, std::string name = {});

    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    double dt() const noexcept { return dt_; }
    double duration() const noexcept { return dt_ * static_cast<double>(values_.size()); }
    const std::string& name() const noexcept { return name_; }

    /// Same sampling and name, new samples.
    Signal with_values(std::vector<double> values) const;

private:
    std::vector<double> values_;
    double dt_;
    std::string name_;
};

/// Synchronized channels from one process run.
class MultivariateTrace {
public:
    MultivariateTrace(std::vector<Signal> signals, std::string run_id = {},
                      std::string recipe_id = {});

    std::span<const Signal> signals() const noexcept { return signals_; }
    const std::string& run_id() const noexcept { return run_id_; }
    const std::string& recipe_id() const noexcept { return recipe_id_; }
    double dt() const noexcept { return signals_.front().dt(); }
    std::size_t length() const noexcept { return signals_.front().size(); }

    /// nullptr when no channel has that name.
    const Signal* find(std::string_view name) const noexcept;
    std::vector<std::string> names() const;

private:
    std::vector<Signal> signals_;
    std::string run_id_;
    std::string recipe_id_;
};

/// Fixed-length excerpt of a signal centred on one sample. Samples falling
/// outside the parent signal are zero.
struct TimeWindow {
    std::ptrdiff_t center_index = 0;
    std::size_t half_width_samples = 0;
    std::vector<double> samples;

    /// Parent-signal index of samples[0]; may be negative for edge windows.
    std::ptrdiff_t first_index() const noexcept {
        return center_index - static_cast<std::ptrdiff_t>(half_width_samples);
    }
};

/// Reads `time,<name1>,<name2>,...` CSV. dt is inferred from the time
/// column, which must be uniform to 1e-9 relative. Throws FormatError or
/// IoError.
MultivariateTrace load_trace_csv(const std::filesystem::path& path);

/// Writes the trace with 17 significant digits so load_trace_csv restores
/// every sample exactly.
void save_trace_csv(const MultivariateTrace& trace, const std::filesystem::path& path);

}  // namespace tracescope
