#include "tracescope/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tracescope/error.hpp"
#include "tracescope/parallel.hpp"
#include "tracescope/rng.hpp"
#include "tracescope/siamese.hpp"

namespace tracescope {

ConfusionMatrix confusion_matrix(const CompactCnn& model, const Dataset& dataset, SplitKind kind,
                                 Split split) {
    if (model.num_classes() != dataset.manifest.class_names.size())
        throw ShapeError("model has " + std::to_string(model.num_classes()) +
                         " classes, dataset has " +
                         std::to_string(dataset.manifest.class_names.size()));
    const auto idx = dataset.indices_in(kind, split);
    if (idx.empty()) throw InvalidArgument("the requested split is empty");
    const auto labels = dataset.labels();
    std::vector<std::size_t> predicted(idx.size());
    parallel_for(idx.size(), [&](std::size_t k) { predicted[k] = predict(model, dataset.images[idx[k]]); });
    ConfusionMatrix cm(dataset.manifest.class_names);
    for (std::size_t k = 0; k < idx.size(); ++k) cm.add(labels[idx[k]], predicted[k]);
    return cm;
}

std::uint64_t expected_coupon_trials(std::int64_t m) {
    if (m < 1) throw InvalidArgument("coupon collector needs M >= 1");
    const auto md = static_cast<double>(m);
    double sum = 0.0;
    for (std::int64_t i = 1; i <= m; ++i) sum += md / static_cast<double>(i);
    return static_cast<std::uint64_t>(std::floor(sum + 0.5));
}

void NWayConfig::validate() const {
    if (n_way < 2) throw InvalidArgument("N-way validation needs N >= 2");
}

NWayResult n_way_validation(std::span<const ProbabilityVector> probs,
                            std::span<const std::size_t> labels, const NWayConfig& cfg) {
    cfg.validate();
    const std::size_t m = probs.size();
    if (labels.size() != m) throw ShapeError("one label per probability vector required");
    if (m < cfg.n_way + 1)
        throw InvalidArgument("N-way validation with N=" + std::to_string(cfg.n_way) + " needs at least " +
                              std::to_string(cfg.n_way + 1) + " test images, got " + std::to_string(m));
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < m; ++i) by_class[labels[i]].push_back(i);
    if (by_class.size() < 2) throw InvalidArgument("N-way validation needs at least two classes");

    NWayResult result;
    result.n_way = cfg.n_way;
    result.trials = cfg.trials > 0 ? cfg.trials : expected_coupon_trials(static_cast<std::int64_t>(m));
    result.records.resize(result.trials);

    parallel_for(result.trials, [&](std::size_t t) {
        Rng rng(mix_seed(cfg.rng_seed, t));
        NWayTrial& trial = result.records[t];
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 100)
                throw InvalidArgument("could not draw an anchor with a same-class partner in 100 attempts");
            const auto anchor = static_cast<std::size_t>(rng.below(m));
            const auto& same = by_class.at(labels[anchor]);
            if (same.size() < 2) continue;
            std::vector<std::size_t> partners;
            for (const auto i : same)
                if (i != anchor) partners.push_back(i);
            std::vector<std::size_t> others;
            for (std::size_t i = 0; i < m; ++i)
                if (labels[i] != labels[anchor]) others.push_back(i);
            if (others.size() < cfg.n_way - 1)
                throw InvalidArgument("not enough images outside the anchor class for N=" +
                                      std::to_string(cfg.n_way));
            trial.anchor = anchor;
            trial.candidates.clear();
            trial.candidates.push_back(partners[rng.below(partners.size())]);
            for (std::size_t k = 0; k + 1 < cfg.n_way; ++k) {
                const auto j = k + static_cast<std::size_t>(rng.below(others.size() - k));
                std::swap(others[k], others[j]);
                trial.candidates.push_back(others[k]);
            }
            break;
        }
        const std::size_t positive = trial.candidates.front();
        rng.shuffle(trial.candidates.begin(), trial.candidates.end());
        trial.scores.resize(trial.candidates.size());
        for (std::size_t k = 0; k < trial.candidates.size(); ++k) {
            trial.scores[k] = similarity(probs[trial.anchor], probs[trial.candidates[k]]);
            if (trial.candidates[k] == positive) trial.target = k;
        }
        trial.predicted = static_cast<std::size_t>(
            std::max_element(trial.scores.begin(), trial.scores.end()) - trial.scores.begin());
        trial.correct = labels[trial.candidates[trial.predicted]] == labels[trial.anchor];
    });

    std::size_t correct = 0;
    for (const auto& r : result.records) correct += r.correct ? 1 : 0;
    result.accuracy = static_cast<double>(correct) / static_cast<double>(result.trials);
    return result;
}

NWayResult n_way_validation(const CompactCnn& model, const Dataset& dataset, SplitKind kind,
                            const NWayConfig& cfg) {
    if (model.num_classes() != dataset.manifest.class_names.size())
        throw ShapeError("model classes do not match dataset classes");
    const auto idx = dataset.indices_in(kind, Split::Test);
    const auto all_labels = dataset.labels();
    std::vector<ProbabilityVector> probs(idx.size());
    parallel_for(idx.size(), [&](std::size_t k) { probs[k] = forward(model, dataset.images[idx[k]]); });
    std::vector<std::size_t> labels;
    labels.reserve(idx.size());
    for (const auto i : idx) labels.push_back(all_labels[i]);
    auto result = n_way_validation(probs, labels, cfg);
    // Report dataset indices rather than positions inside the test subset.
    for (auto& r : result.records) {
        r.anchor = idx[r.anchor];
        for (auto& c : r.candidates) c = idx[c];
    }
    return result;
}

std::vector<AmplitudeScore> amplitude_similarity_table(const CompactCnn& model,
                                                       const Dataset& dataset3) {
    if (model.num_classes() != dataset3.manifest.class_names.size())
        throw ShapeError("model classes do not match dataset classes");
    std::map<int, std::vector<std::size_t>> groups;
    const auto& entries = dataset3.manifest.entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].group || !entries[i].factor)
            throw InvalidArgument("entry '" + entries[i].path + "' lacks group/factor metadata");
        groups[*entries[i].group].push_back(i);
    }
    std::vector<AmplitudeScore> rows;
    for (auto& [group, members] : groups) {
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) { return *entries[a].factor < *entries[b].factor; });
        const auto anchor = std::find_if(members.begin(), members.end(),
                                         [&](std::size_t i) { return *entries[i].factor == 1.0; });
        if (anchor == members.end())
            throw InvalidArgument("group " + std::to_string(group) + " has no factor-1 anchor image");
        const auto anchor_probs = forward(model, dataset3.images[*anchor]);
        for (const auto i : members)
            rows.push_back({group, *entries[i].factor, entries[i].label,
                            similarity(anchor_probs, forward(model, dataset3.images[i]))});
    }
    return rows;
}

}  // namespace tracescope
