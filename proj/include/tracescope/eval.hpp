#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tracescope/confusion_matrix.hpp"
#include "tracescope/dataset.hpp"
#include "tracescope/nn.hpp"

namespace tracescope {

/// Predictions of `model` on one side of a dataset split. Throws
/// InvalidArgument when that side is empty and ShapeError when the model's
/// class count differs from the dataset's.
ConfusionMatrix confusion_matrix(const CompactCnn& model, const Dataset& dataset, SplitKind kind,
                                 Split split = Split::Test);

/// round-half-up of sum_{i=1..M} M / i: expected draws until every one of M
/// test items has been picked at least once.
std::uint64_t expected_coupon_trials(std::int64_t m);

struct NWayConfig {
    std::size_t n_way = 20;
    std::size_t trials = 0;  // 0 -> expected_coupon_trials(test size)
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct NWayTrial {
    std::size_t anchor = 0;
    std::vector<std::size_t> candidates;  // item indices in presentation order
    std::vector<double> scores;
    std::size_t predicted = 0;            // position in candidates
    std::size_t target = 0;               // position of the same-class candidate
    bool correct = false;
};

struct NWayResult {
    double accuracy = 0.0;
    std::size_t n_way = 0;
    std::size_t trials = 0;
    std::vector<NWayTrial> records;
};

/// N-way one-shot matching over precomputed probability vectors: each trial
/// draws an anchor, one other item of its class and N-1 items of other
/// classes (without replacement), then predicts the candidate with the
/// highest dot-product similarity (ties -> lowest position). Trials use
/// independent sub-seeds.
NWayResult n_way_validation(std::span<const ProbabilityVector> probs,
                            std::span<const std::size_t> labels, const NWayConfig& cfg);

/// Runs the model over the test side of `kind` and validates on it.
NWayResult n_way_validation(const CompactCnn& model, const Dataset& dataset, SplitKind kind,
                            const NWayConfig& cfg);

struct AmplitudeScore {
    int group = 0;
    double factor = 1.0;
    std::string label;
    double score = 0.0;
};

/// Per source peak, similarity of the factor-1 image with every image of
/// the group (itself included), ordered by group then factor. Throws
/// InvalidArgument if a group lacks its factor-1 anchor and ShapeError on a
/// class-count mismatch.
std::vector<AmplitudeScore> amplitude_similarity_table(const CompactCnn& model,
                                                       const Dataset& dataset3);

}  // namespace tracescope
