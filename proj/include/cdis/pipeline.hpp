#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdis/mixing.hpp"
#include "cdis/nelder_mead.hpp"
#include "cdis/volume.hpp"

namespace cdis {

/// One subject: native DWI, tumour segmentation, optional provided
/// ADC map and breast mask. prepare_case() guarantees the breast mask
/// is present afterwards.
struct CaseRecord {
    std::string id;
    DwiVolume dwi;
    std::optional<ScalarVolume> provided_adc;
    MaskVolume tumour;
    std::optional<MaskVolume> breast;
};

/// Geometric standardization of one case: centered slice window,
/// bilinear in-plane resize (nearest for masks), breast mask computed
/// from the DWI when absent. Throws when the tumour never meets the
/// breast mask.
CaseRecord prepare_case(CaseRecord raw, std::size_t target_nz = 25, std::size_t out_hw = 224);

enum class Aggregation { pooled, mean_per_case };

std::string to_string(Aggregation agg);
Aggregation aggregation_from_string(const std::string& name);

/// Precomputed per-case state for the AUC objective: the decay fit and
/// the per-voxel log synthetic signals only depend on (case, s_hat,
/// r2_min), so an exponent search can reuse them across evaluations.
/// evaluate() reproduces the compute_cdis -> delineation_auc value
/// bit-for-bit.
class ObjectiveContext {
public:
    ObjectiveContext(const std::vector<CaseRecord>& cases, const BValueList& s_hat,
                     double r2_min = 0.8, double signal_floor = 1e-6, unsigned threads = 1);

    double evaluate(std::span<const double> rho,
                    Aggregation agg = Aggregation::mean_per_case) const;
    std::size_t n_cases() const { return cases_.size(); }
    std::size_t n_terms() const { return n_terms_; }

private:
    struct CaseContext {
        std::string id;
        std::vector<double> log_signals;  // valid breast voxels, voxel-major
        std::vector<std::uint8_t> labels;
        std::size_t invalid_pos = 0;  // invalid-fit breast voxels score 0
        std::size_t invalid_neg = 0;
    };

    void scores_for(const CaseContext& c, std::span<const double> rho,
                    std::vector<double>& scores, std::vector<std::uint8_t>& labels) const;

    std::vector<CaseContext> cases_;
    std::size_t n_terms_;
};

/// Mean per-case delineation AUC (default) or AUC over pooled breast
/// voxels, of the mixed volume under (rho, s_hat). Cases must be
/// prepared. Throws UndefinedAucError naming the case when one lacks
/// a class.
double objective_auc(const std::vector<CaseRecord>& cases, std::span<const double> rho,
                     const BValueList& s_hat, Aggregation agg = Aggregation::mean_per_case,
                     double r2_min = 0.8, double signal_floor = 1e-6);

struct OptimizeResult {
    MixingConfig config;  // initial config with optimized rho
    NmTrace trace;
    double initial_auc;
    double final_auc;
};

/// Nelder-Mead maximization of the aggregated AUC over rho (s_hat held
/// fixed), implemented as minimization of the negated objective. The
/// best-evaluated-point contract makes final_auc >= initial_auc.
OptimizeResult optimize_rho(const std::vector<CaseRecord>& cases, const MixingConfig& initial,
                            const NmConfig& nm, Aggregation agg = Aggregation::mean_per_case,
                            double r2_min = 0.8, unsigned threads = 1);

struct ModalityRow {
    std::string modality;
    double auc;
    bool best = false;
    std::string note;
};

/// Table-style modality comparison plus the metadata needed to
/// reproduce it. Round-trips losslessly through CSV.
struct ComparisonReport {
    std::vector<ModalityRow> rows;
    std::vector<std::string> case_ids;
    std::string unopt_hash;
    std::string opt_hash;
    Aggregation aggregation = Aggregation::mean_per_case;
    double r2_min = 0.8;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;  // skipped modalities etc.

    std::string to_csv() const;
    static ComparisonReport from_csv(const std::string& text);
};

void to_json(nlohmann::json& j, const ComparisonReport& report);

/// Aggregated AUC per modality: provided ADC (when every case has
/// one), DWI at b=800, the fitted ADC map, and the mixture under each
/// config. Rows with AUC < 0.5 are annotated as inverted contrast;
/// the argmax row is flagged.
ComparisonReport compare_modalities(const std::vector<CaseRecord>& cases,
                                    const MixingConfig& unopt, const MixingConfig& opt,
                                    Aggregation agg = Aggregation::mean_per_case,
                                    double r2_min = 0.8, unsigned threads = 1);

/// FNV-1a 64-bit hash of a config's canonical JSON, as fixed-width hex.
std::string config_hash(const MixingConfig& config);

struct LoadedCases {
    std::vector<CaseRecord> cases;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;  // per-case skips (e.g. < 2 b-values)
};

/// Reads a case manifest: either {"seed": ..., "cases": [...]} or a
/// bare JSON array. Each case is an object {id, dwi, tumour, breast?,
/// adc?} of bundle path stems, or a plain stem string implying the
/// suffixes _dwi, _tumour and optionally _breast / _adc. Relative
/// stems resolve against the manifest's directory. Cases with fewer
/// than two b-values are skipped with a note.
LoadedCases load_cases(const std::filesystem::path& manifest_path);

} // namespace cdis
