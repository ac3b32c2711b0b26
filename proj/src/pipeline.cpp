#include "cdis/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cdis/diffusion.hpp"
#include "cdis/errors.hpp"
#include "cdis/preprocess.hpp"
#include "cdis/roc.hpp"
#include "cdis/volume_io.hpp"

namespace cdis {

namespace {

/// Runs fn(0..n-1), each index exactly once, on up to `threads`
/// workers. Results must go to per-index slots; the first exception is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    pool.reserve(n_workers);
    for (unsigned t = 0; t < n_workers; ++t)
        pool.emplace_back(worker);
    for (std::thread& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace

CaseRecord prepare_case(CaseRecord raw, std::size_t target_nz, std::size_t out_hw) {
    const auto check_shape = [&](const Shape3& shape, const char* what) {
        if (!(shape == raw.dwi.shape()))
            throw ValidationError("case '" + raw.id + "': " + what + " shape " + shape.describe() +
                                  " does not match DWI shape " + raw.dwi.shape().describe());
    };
    check_shape(raw.tumour.shape(), "tumour mask");
    if (raw.provided_adc)
        check_shape(raw.provided_adc->shape(), "provided ADC");
    if (raw.breast)
        check_shape(raw.breast->shape(), "breast mask");

    CaseRecord out{
        raw.id,
        resize_bilinear(select_slices(raw.dwi, target_nz), out_hw, out_hw),
        std::nullopt,
        resize_nearest(select_slices(raw.tumour, target_nz), out_hw, out_hw),
        std::nullopt,
    };
    if (raw.provided_adc)
        out.provided_adc = resize_bilinear(select_slices(*raw.provided_adc, target_nz), out_hw, out_hw);
    out.breast = raw.breast ? resize_nearest(select_slices(*raw.breast, target_nz), out_hw, out_hw)
                            : compute_breast_mask(out.dwi);

    bool intersects = false;
    for (std::size_t v = 0; v < out.tumour.size() && !intersects; ++v)
        intersects = out.tumour.data()[v] && out.breast->data()[v];
    if (!intersects)
        throw ValidationError("case '" + out.id + "': tumour does not intersect the breast mask");
    return out;
}

std::string to_string(Aggregation agg) {
    return agg == Aggregation::pooled ? "pooled" : "mean_per_case";
}

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "pooled")
        return Aggregation::pooled;
    if (name == "mean_per_case")
        return Aggregation::mean_per_case;
    throw ValidationError("unknown aggregation '" + name + "' (expected pooled or mean_per_case)");
}

ObjectiveContext::ObjectiveContext(const std::vector<CaseRecord>& cases, const BValueList& s_hat,
                                   double r2_min, double signal_floor, unsigned threads)
    : n_terms_(s_hat.size()) {
    if (cases.empty())
        throw ValidationError("objective needs at least one case");
    if (!(signal_floor > 0.0))
        throw ValidationError("signal_floor must be positive");
    for (const CaseRecord& c : cases)
        if (!c.breast)
            throw ValidationError("case '" + c.id + "' has no breast mask; prepare it first");

    cases_.resize(cases.size());
    parallel_for(cases.size(), threads, [&](std::size_t ci) {
        const CaseRecord& rec = cases[ci];
        CaseContext ctx;
        ctx.id = rec.id;
        const AdcFitResult fit = fit_adc(rec.dwi, r2_min);
        const MaskVolume& breast = *rec.breast;
        const std::size_t n_voxels = breast.size();
        std::size_t n_breast = breast.count();
        ctx.log_signals.reserve(n_breast * n_terms_);
        ctx.labels.reserve(n_breast);
        for (std::size_t v = 0; v < n_voxels; ++v) {
            if (!breast.data()[v])
                continue;
            const bool tumour = rec.tumour.data()[v] != 0;
            if (!fit.valid.data()[v]) {
                // compute_cdis zeroes these voxels, so their score is 0
                // regardless of rho.
                if (tumour)
                    ++ctx.invalid_pos;
                else
                    ++ctx.invalid_neg;
                continue;
            }
            const double adc = fit.adc.data()[v];
            const double s0 = fit.s0.data()[v];
            for (std::size_t i = 0; i < n_terms_; ++i) {
                // Matches synthesize_signals followed by mix's floored log.
                const double s = s0 * std::exp(-s_hat[i] * adc);
                ctx.log_signals.push_back(std::log(std::max(s, signal_floor)));
            }
            ctx.labels.push_back(tumour ? 1 : 0);
        }
        cases_[ci] = std::move(ctx);
    });
}

void ObjectiveContext::scores_for(const CaseContext& c, std::span<const double> rho,
                                  std::vector<double>& scores,
                                  std::vector<std::uint8_t>& labels) const {
    const std::size_t n_valid = c.labels.size();
    scores.clear();
    labels.clear();
    scores.reserve(n_valid + c.invalid_pos + c.invalid_neg);
    labels.reserve(n_valid + c.invalid_pos + c.invalid_neg);
    const double* ls = c.log_signals.data();
    for (std::size_t v = 0; v < n_valid; ++v) {
        double log_sum = 0.0;
        for (std::size_t i = 0; i < n_terms_; ++i)
            log_sum += rho[i] * ls[v * n_terms_ + i];
        scores.push_back(mix_exponent_to_value(log_sum));
    }
    labels.insert(labels.end(), c.labels.begin(), c.labels.end());
    scores.insert(scores.end(), c.invalid_pos, 0.0);
    labels.insert(labels.end(), c.invalid_pos, std::uint8_t{1});
    scores.insert(scores.end(), c.invalid_neg, 0.0);
    labels.insert(labels.end(), c.invalid_neg, std::uint8_t{0});
}

double ObjectiveContext::evaluate(std::span<const double> rho, Aggregation agg) const {
    if (rho.size() != n_terms_)
        throw ValidationError("rho has " + std::to_string(rho.size()) + " entries for " +
                              std::to_string(n_terms_) + " synthetic b-values");
    const auto case_auc = [&](const CaseContext& c, std::vector<double>& scores,
                              std::vector<std::uint8_t>& labels) {
        scores_for(c, rho, scores, labels);
        try {
            return auc(scores, labels);
        } catch (const UndefinedAucError& e) {
            throw UndefinedAucError("case '" + c.id + "': " + e.what());
        }
    };

    if (agg == Aggregation::mean_per_case) {
        double sum = 0.0;
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        for (const CaseContext& c : cases_)
            sum += case_auc(c, scores, labels);
        return sum / static_cast<double>(cases_.size());
    }

    std::vector<double> pooled_scores;
    std::vector<std::uint8_t> pooled_labels;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const CaseContext& c : cases_) {
        scores_for(c, rho, scores, labels);
        const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
        const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
        if (!has_pos || !has_neg)
            throw UndefinedAucError("case '" + c.id + "': needs both tumour and healthy voxels");
        pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
        pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
    }
    return auc(pooled_scores, pooled_labels);
}

double objective_auc(const std::vector<CaseRecord>& cases, std::span<const double> rho,
                     const BValueList& s_hat, Aggregation agg, double r2_min,
                     double signal_floor) {
    return ObjectiveContext(cases, s_hat, r2_min, signal_floor).evaluate(rho, agg);
}

OptimizeResult optimize_rho(const std::vector<CaseRecord>& cases, const MixingConfig& initial,
                            const NmConfig& nm, Aggregation agg, double r2_min,
                            unsigned threads) {
    initial.validate();
    const ObjectiveContext context(cases, initial.s_hat, r2_min, initial.signal_floor, threads);
    const Objective objective = [&](std::span<const double> rho) {
        return -context.evaluate(rho, agg);
    };
    const Bounds bounds = Bounds::box(initial.rho_bounds.first, initial.rho_bounds.second);
    NmResult nm_result = nelder_mead(objective, initial.rho, bounds, nm);

    OptimizeResult result{initial, std::move(nm_result.trace),
                          context.evaluate(initial.rho, agg), -nm_result.f};
    result.config.rho = std::move(nm_result.x);
    return result;
}

std::string config_hash(const MixingConfig& config) {
    const std::string canon = nlohmann::json(config).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char byte : canon) {
        h ^= byte;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

/// Modality scores gathered at breast voxels, in raster order — the
/// same values delineation_auc sees.
std::vector<double> gather_breast(const ScalarVolume& vol, const MaskVolume& breast) {
    std::vector<double> scores;
    scores.reserve(breast.count());
    for (std::size_t v = 0; v < vol.size(); ++v)
        if (breast.data()[v])
            scores.push_back(vol.data()[v]);
    return scores;
}

double aggregate_auc(const std::vector<std::vector<double>>& per_case_scores,
                     const std::vector<std::vector<std::uint8_t>>& per_case_labels,
                     const std::vector<std::string>& ids, Aggregation agg) {
    if (agg == Aggregation::mean_per_case) {
        double sum = 0.0;
        for (std::size_t c = 0; c < per_case_scores.size(); ++c) {
            try {
                sum += auc(per_case_scores[c], per_case_labels[c]);
            } catch (const UndefinedAucError& e) {
                throw UndefinedAucError("case '" + ids[c] + "': " + e.what());
            }
        }
        return sum / static_cast<double>(per_case_scores.size());
    }
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t c = 0; c < per_case_scores.size(); ++c) {
        scores.insert(scores.end(), per_case_scores[c].begin(), per_case_scores[c].end());
        labels.insert(labels.end(), per_case_labels[c].begin(), per_case_labels[c].end());
    }
    return auc(scores, labels);
}

} // namespace

ComparisonReport compare_modalities(const std::vector<CaseRecord>& cases,
                                    const MixingConfig& unopt, const MixingConfig& opt,
                                    Aggregation agg, double r2_min, unsigned threads) {
    if (cases.empty())
        throw ValidationError("compare needs at least one case");
    unopt.validate();
    opt.validate();
    for (const CaseRecord& c : cases)
        if (!c.breast)
            throw ValidationError("case '" + c.id + "' has no breast mask; prepare it first");

    ComparisonReport report;
    report.aggregation = agg;
    report.r2_min = r2_min;
    report.unopt_hash = config_hash(unopt);
    report.opt_hash = config_hash(opt);
    for (const CaseRecord& c : cases)
        report.case_ids.push_back(c.id);

    std::size_t n_with_adc = 0;
    for (const CaseRecord& c : cases)
        n_with_adc += c.provided_adc.has_value();
    const bool include_adc = n_with_adc == cases.size();
    if (!include_adc && n_with_adc > 0)
        report.notes.push_back("ADC skipped: provided for only " + std::to_string(n_with_adc) +
                               " of " + std::to_string(cases.size()) + " cases");

    bool include_b800 = true;
    for (const CaseRecord& c : cases) {
        if (!c.dwi.bvalues().index_of(800.0)) {
            report.notes.push_back("DWI_b800 skipped: case '" + c.id +
                                   "' has no b=800 acquisition");
            include_b800 = false;
            break;
        }
    }

    enum Modality { kAdc, kDwiB800, kAdcC, kUnopt, kOpt, kCount };
    static const char* const kNames[kCount] = {"ADC", "DWI_b800", "ADCc", "CDIs_unoptimized",
                                               "CDIs_optimized"};
    const bool included[kCount] = {include_adc, include_b800, true, true, true};

    std::vector<std::vector<std::uint8_t>> labels(cases.size());
    std::vector<std::array<std::vector<double>, kCount>> scores(cases.size());
    std::vector<std::string> ids(cases.size());
    parallel_for(cases.size(), threads, [&](std::size_t ci) {
        const CaseRecord& rec = cases[ci];
        const MaskVolume& breast = *rec.breast;
        ids[ci] = rec.id;
        labels[ci].reserve(breast.count());
        for (std::size_t v = 0; v < breast.size(); ++v)
            if (breast.data()[v])
                labels[ci].push_back(rec.tumour.data()[v]);
        if (included[kAdc])
            scores[ci][kAdc] = gather_breast(*rec.provided_adc, breast);
        if (included[kDwiB800])
            scores[ci][kDwiB800] = gather_breast(extract_b_slice(rec.dwi, 800.0), breast);
        scores[ci][kAdcC] = gather_breast(fit_adc(rec.dwi, r2_min).adc, breast);
        scores[ci][kUnopt] = gather_breast(compute_cdis(rec.dwi, unopt, r2_min), breast);
        scores[ci][kOpt] = gather_breast(compute_cdis(rec.dwi, opt, r2_min), breast);
    });

    for (int m = 0; m < kCount; ++m) {
        if (!included[m])
            continue;
        std::vector<std::vector<double>> modality_scores;
        modality_scores.reserve(cases.size());
        for (std::size_t ci = 0; ci < cases.size(); ++ci)
            modality_scores.push_back(std::move(scores[ci][m]));
        ModalityRow row;
        row.modality = kNames[m];
        row.auc = aggregate_auc(modality_scores, labels, ids, agg);
        if (row.auc < 0.5)
            row.note = "inverted contrast (AUC < 0.5)";
        report.rows.push_back(std::move(row));
    }

    std::size_t best = 0;
    for (std::size_t r = 1; r < report.rows.size(); ++r)
        if (report.rows[r].auc > report.rows[best].auc)
            best = r;
    report.rows[best].best = true;
    return report;
}

std::string ComparisonReport::to_csv() const {
    std::string out;
    out += "# cases: ";
    for (std::size_t i = 0; i < case_ids.size(); ++i)
        out += (i ? "," : "") + case_ids[i];
    out += "\n";
    out += "# unopt_config: " + unopt_hash + "\n";
    out += "# opt_config: " + opt_hash + "\n";
    out += "# aggregation: " + cdis::to_string(aggregation) + "\n";
    out += "# r2_min: " + format_double(r2_min) + "\n";
    if (seed)
        out += "# seed: " + std::to_string(*seed) + "\n";
    for (const std::string& note : notes)
        out += "# note: " + note + "\n";
    out += "modality,auc,best,note\n";
    for (const ModalityRow& row : rows)
        out += row.modality + "," + format_double(row.auc) + "," + (row.best ? "1" : "0") + "," +
               row.note + "\n";
    return out;
}

ComparisonReport ComparisonReport::from_csv(const std::string& text) {
    ComparisonReport report;
    std::istringstream stream(text);
    std::string line;
    bool saw_header = false;
    const auto metadata = [&](const std::string& prefix) -> std::optional<std::string> {
        if (line.rfind(prefix, 0) == 0)
            return line.substr(prefix.size());
        return std::nullopt;
    };
    while (std::getline(stream, line)) {
        if (line.empty())
            continue;
        if (line[0] == '#') {
            if (auto v = metadata("# cases: ")) {
                if (!v->empty())
                    report.case_ids = split(*v, ',');
            } else if (auto v = metadata("# unopt_config: ")) {
                report.unopt_hash = *v;
            } else if (auto v = metadata("# opt_config: ")) {
                report.opt_hash = *v;
            } else if (auto v = metadata("# aggregation: ")) {
                report.aggregation = aggregation_from_string(*v);
            } else if (auto v = metadata("# r2_min: ")) {
                report.r2_min = std::strtod(v->c_str(), nullptr);
            } else if (auto v = metadata("# seed: ")) {
                report.seed = std::strtoull(v->c_str(), nullptr, 10);
            } else if (auto v = metadata("# note: ")) {
                report.notes.push_back(*v);
            }
            continue;
        }
        if (!saw_header) {
            if (line != "modality,auc,best,note")
                throw CorruptFileError("comparison CSV: unexpected header '" + line + "'");
            saw_header = true;
            continue;
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        const std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string::npos)
            throw CorruptFileError("comparison CSV: malformed row '" + line + "'");
        ModalityRow row;
        row.modality = line.substr(0, c1);
        row.auc = std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
        row.best = line.substr(c2 + 1, c3 - c2 - 1) == "1";
        row.note = line.substr(c3 + 1);
        report.rows.push_back(std::move(row));
    }
    if (!saw_header)
        throw CorruptFileError("comparison CSV: missing header row");
    return report;
}

void to_json(nlohmann::json& j, const ComparisonReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const ModalityRow& row : report.rows)
        rows.push_back({{"modality", row.modality},
                        {"auc", row.auc},
                        {"best", row.best},
                        {"note", row.note}});
    j = nlohmann::json{
        {"rows", std::move(rows)},
        {"cases", report.case_ids},
        {"unopt_config", report.unopt_hash},
        {"opt_config", report.opt_hash},
        {"aggregation", cdis::to_string(report.aggregation)},
        {"r2_min", report.r2_min},
        {"notes", report.notes},
    };
    if (report.seed)
        j["seed"] = *report.seed;
}

LoadedCases load_cases(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in)
        throw IoError("cannot open manifest " + manifest_path.string());
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFileError("manifest " + manifest_path.string() + ": " + e.what());
    }

    LoadedCases result;
    const nlohmann::json* cases_json = nullptr;
    if (root.is_array()) {
        cases_json = &root;
    } else if (root.is_object() && root.contains("cases") && root["cases"].is_array()) {
        cases_json = &root["cases"];
        if (root.contains("seed"))
            result.seed = root["seed"].get<std::uint64_t>();
    } else {
        throw ValidationError("manifest must be a JSON array of cases or an object with a "
                              "'cases' array");
    }

    const std::filesystem::path base = manifest_path.parent_path();
    const auto resolve = [&](const std::string& stem) {
        std::filesystem::path p(stem);
        if (p.is_relative())
            p = base / p;
        return p.string();
    };
    const auto bundle_exists = [&](const std::string& stem) {
        return std::filesystem::exists(resolve(stem) + ".json");
    };

    for (std::size_t i = 0; i < cases_json->size(); ++i) {
        const nlohmann::json& entry = (*cases_json)[i];
        std::string id, dwi_stem, tumour_stem;
        std::optional<std::string> breast_stem, adc_stem;
        if (entry.is_string()) {
            const std::string stem = entry.get<std::string>();
            dwi_stem = stem + "_dwi";
            tumour_stem = stem + "_tumour";
            if (bundle_exists(stem + "_breast"))
                breast_stem = stem + "_breast";
            if (bundle_exists(stem + "_adc"))
                adc_stem = stem + "_adc";
            id = std::filesystem::path(stem).filename().string();
        } else if (entry.is_object()) {
            if (!entry.contains("dwi") || !entry.contains("tumour"))
                throw ValidationError("manifest case " + std::to_string(i) +
                                      " needs 'dwi' and 'tumour' stems");
            dwi_stem = entry["dwi"].get<std::string>();
            tumour_stem = entry["tumour"].get<std::string>();
            if (entry.contains("breast"))
                breast_stem = entry["breast"].get<std::string>();
            if (entry.contains("adc"))
                adc_stem = entry["adc"].get<std::string>();
            id = entry.value("id", std::filesystem::path(dwi_stem).filename().string());
        } else {
            throw ValidationError("manifest case " + std::to_string(i) +
                                  " must be a stem string or an object");
        }

        DwiVolume dwi = read_dwi(resolve(dwi_stem));
        if (dwi.nb() < 2) {
            result.notes.push_back("case '" + id + "' skipped: " + std::to_string(dwi.nb()) +
                                   " b-value(s), need at least 2");
            continue;
        }
        CaseRecord record{
            std::move(id),
            std::move(dwi),
            std::nullopt,
            read_mask(resolve(tumour_stem)),
            std::nullopt,
        };
        if (adc_stem)
            record.provided_adc = read_scalar(resolve(*adc_stem));
        if (breast_stem)
            record.breast = read_mask(resolve(*breast_stem));
        result.cases.push_back(std::move(record));
    }
    return result;
}

} // namespace cdis
