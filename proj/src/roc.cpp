#include "cdis/roc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cdis/errors.hpp"

namespace cdis {

namespace {

struct ClassCounts {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ValidationError("scores and labels differ in length: " +
                              std::to_string(scores.size()) + " vs " +
                              std::to_string(labels.size()));
    if (scores.empty())
        throw UndefinedAucError("AUC undefined on empty input");
    ClassCounts counts;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw ValidationError("score at index " + std::to_string(i) + " is not finite");
        if (labels[i] > 1)
            throw ValidationError("labels must be 0 or 1");
        if (labels[i])
            ++counts.n_pos;
        else
            ++counts.n_neg;
    }
    if (counts.n_pos == 0 || counts.n_neg == 0)
        throw UndefinedAucError("AUC undefined: need both classes, got " +
                                std::to_string(counts.n_pos) + " positives and " +
                                std::to_string(counts.n_neg) + " negatives");
    return counts;
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

} // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const ClassCounts counts = check_inputs(scores, labels);
    std::vector<std::pair<double, std::uint8_t>> items;
    items.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        items.emplace_back(scores[i], labels[i]);
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Twice the positive rank sum, kept integral so the result is
    // bit-identical to pairwise counting: a tie group occupying
    // 1-based ranks [lo, hi] contributes lo+hi per positive member.
    unsigned long long twice_rank_sum = 0;
    const std::size_t n = items.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < n && items[j].first == items[i].first) {
            group_pos += items[j].second;
            ++j;
        }
        const unsigned long long lo = i + 1, hi = j;
        twice_rank_sum += (lo + hi) * group_pos;
        i = j;
    }
    // U = rank_sum - n_pos(n_pos+1)/2, AUC = U / (n_pos * n_neg).
    const unsigned long long twice_u =
        twice_rank_sum - static_cast<unsigned long long>(counts.n_pos) * (counts.n_pos + 1);
    return static_cast<double>(twice_u) /
           (2.0 * static_cast<double>(counts.n_pos) * static_cast<double>(counts.n_neg));
}

double auc_bruteforce(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const ClassCounts counts = check_inputs(scores, labels);
    unsigned long long twice_wins = 0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        if (!labels[p])
            continue;
        for (std::size_t q = 0; q < scores.size(); ++q) {
            if (labels[q])
                continue;
            if (scores[p] > scores[q])
                twice_wins += 2;
            else if (scores[p] == scores[q])
                twice_wins += 1;
        }
    }
    return static_cast<double>(twice_wins) /
           (2.0 * static_cast<double>(counts.n_pos) * static_cast<double>(counts.n_neg));
}

RocResult roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const ClassCounts counts = check_inputs(scores, labels);
    const std::vector<std::size_t> order = order_by_score_desc(scores);

    RocResult result;
    result.n_pos = counts.n_pos;
    result.n_neg = counts.n_neg;
    result.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});

    std::size_t tp = 0, fp = 0;
    const std::size_t n = order.size();
    std::size_t i = 0;
    while (i < n) {
        const double threshold = scores[order[i]];
        std::size_t j = i;
        while (j < n && scores[order[j]] == threshold) {
            if (labels[order[j]])
                ++tp;
            else
                ++fp;
            ++j;
        }
        result.curve.push_back({threshold,
                                static_cast<double>(fp) / static_cast<double>(counts.n_neg),
                                static_cast<double>(tp) / static_cast<double>(counts.n_pos)});
        i = j;
    }

    double area = 0.0;
    for (std::size_t k = 1; k < result.curve.size(); ++k) {
        const auto& a = result.curve[k - 1];
        const auto& b = result.curve[k];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    result.auc = area;
    return result;
}

double delineation_auc(const ScalarVolume& modality, const MaskVolume& tumour,
                       const MaskVolume& breast) {
    if (!(modality.shape() == tumour.shape()) || !(modality.shape() == breast.shape()))
        throw ValidationError("modality, tumour and breast shapes must match; got " +
                              modality.shape().describe() + ", " + tumour.shape().describe() +
                              ", " + breast.shape().describe());
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(breast.count());
    labels.reserve(breast.count());
    for (std::size_t v = 0; v < modality.size(); ++v) {
        if (!breast.data()[v])
            continue;
        scores.push_back(modality.data()[v]);
        labels.push_back(tumour.data()[v]);
    }
    if (scores.empty())
        throw UndefinedAucError("breast mask is empty");
    return auc(scores, labels);
}

std::string to_csv(const RocResult& result) {
    std::string out = "threshold,fpr,tpr\n";
    char line[128];
    for (const RocPoint& p : result.curve) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
        out += line;
    }
    return out;
}

void to_json(nlohmann::json& j, const RocResult& result) {
    j = nlohmann::json{
        {"auc", result.auc},
        {"n_pos", result.n_pos},
        {"n_neg", result.n_neg},
        {"n_points", result.curve.size()},
    };
}

} // namespace cdis
