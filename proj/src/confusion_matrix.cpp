#include "tracescope/confusion_matrix.hpp"

#include "tracescope/error.hpp"

namespace tracescope {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : class_names_(std::move(class_names)), counts_(class_names_.size() * class_names_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t n) {
    if (truth >= num_classes() || predicted >= num_classes())
        throw InvalidArgument("class index outside the confusion matrix");
    counts_[truth * num_classes() + predicted] += n;
}

std::size_t ConfusionMatrix::total() const noexcept {
    std::size_t t = 0;
    for (const auto c : counts_) t += c;
    return t;
}

std::size_t ConfusionMatrix::correct() const noexcept {
    std::size_t t = 0;
    for (std::size_t k = 0; k < num_classes(); ++k) t += count(k, k);
    return t;
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const noexcept {
    std::size_t t = 0;
    for (std::size_t p = 0; p < num_classes(); ++p) t += count(truth, p);
    return t;
}

double ConfusionMatrix::accuracy() const noexcept {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(t);
}

}  // namespace tracescope
