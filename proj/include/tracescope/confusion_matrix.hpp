#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tracescope {

/// counts[t][p]: number of items of true class t predicted as p.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> class_names);

    void add(std::size_t truth, std::size_t predicted, std::size_t n = 1);

    std::size_t num_classes() const noexcept { return class_names_.size(); }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    std::size_t count(std::size_t truth, std::size_t predicted) const noexcept {
        return counts_[truth * class_names_.size() + predicted];
    }
    std::size_t total() const noexcept;
    std::size_t correct() const noexcept;
    std::size_t row_total(std::size_t truth) const noexcept;
    /// trace / total; 0 for an empty matrix.
    double accuracy() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::vector<std::string> class_names_;
    std::vector<std::size_t> counts_;
};

}  // namespace tracescope
