#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdis/volume.hpp"

namespace cdis {

/// One operating point of an ROC sweep. `threshold` is the lowest
/// score still classified positive at this point; the leading (0,0)
/// point carries +infinity.
struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

/// ROC sweep result. The curve always starts at (0,0) and ends at
/// (1,1); fpr and tpr are non-decreasing along it, and its trapezoidal
/// area equals `auc`.
struct RocResult {
    double auc;
    std::vector<RocPoint> curve;
    std::size_t n_pos;
    std::size_t n_neg;
};

/// Mann-Whitney AUC with half-credit ties:
///   (#{(p,n) : score_p > score_n} + #ties/2) / (n_pos * n_neg)
/// computed via one sort-and-rank pass. Labels must contain both
/// classes; throws UndefinedAucError otherwise.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// O(n^2) pairwise-count reference with the identical contract.
/// Intended for modest n as a test oracle.
double auc_bruteforce(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Full threshold sweep. Tie groups collapse onto single points.
RocResult roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Voxel-level delineation score of a modality volume: positives are
/// the values at tumour-and-breast voxels, negatives at breast voxels
/// outside the tumour. Orientation is reported as-is; values below
/// 0.5 signal inverted contrast and are never flipped.
double delineation_auc(const ScalarVolume& modality, const MaskVolume& tumour,
                       const MaskVolume& breast);

/// CSV rendering, one `threshold,fpr,tpr` row per curve point.
std::string to_csv(const RocResult& result);

/// Summary (auc, n_pos, n_neg, n_points); the curve itself stays in CSV.
void to_json(nlohmann::json& j, const RocResult& result);

} // namespace cdis
