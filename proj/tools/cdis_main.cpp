// cdis: synthetic correlated diffusion imaging pipeline front end.
//
// Exit codes: 0 success, 2 usage, 3 validation, 4 I/O, 5 undefined
// AUC / objective fault.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdis/diffusion.hpp"
#include "cdis/errors.hpp"
#include "cdis/mixing.hpp"
#include "cdis/nelder_mead.hpp"
#include "cdis/phantom.hpp"
#include "cdis/pipeline.hpp"
#include "cdis/preprocess.hpp"
#include "cdis/render.hpp"
#include "cdis/roc.hpp"
#include "cdis/volume_io.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw cdis::IoError("cannot open " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw cdis::CorruptFileError(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw cdis::IoError("cannot open " + path + " for writing");
    out << text;
    if (!out)
        throw cdis::IoError("short write to " + path);
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw cdis::IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw cdis::IoError("short write to " + path);
}

unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

std::vector<cdis::CaseRecord> load_and_prepare(const std::string& manifest,
                                               std::size_t target_nz, std::size_t out_hw,
                                               std::optional<std::uint64_t>& seed,
                                               std::vector<std::string>& notes) {
    cdis::LoadedCases loaded = cdis::load_cases(manifest);
    seed = loaded.seed;
    notes = loaded.notes;
    for (const std::string& note : loaded.notes)
        std::cerr << "note: " << note << "\n";
    if (loaded.cases.empty())
        throw cdis::ValidationError("manifest " + manifest + " yields no usable cases");
    std::vector<cdis::CaseRecord> prepared;
    prepared.reserve(loaded.cases.size());
    for (cdis::CaseRecord& raw : loaded.cases)
        prepared.push_back(cdis::prepare_case(std::move(raw), target_nz, out_hw));
    return prepared;
}

struct PhantomArgs {
    std::string spec_path;
    std::string out_dir;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void run_phantom(const PhantomArgs& args) {
    cdis::PhantomSpec spec = load_json(args.spec_path).get<cdis::PhantomSpec>();
    if (args.seed_set)
        spec.seed = args.seed;
    if (args.count < 1)
        throw cdis::ValidationError("--count must be at least 1");

    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec)
        throw cdis::IoError("cannot create " + args.out_dir + ": " + ec.message());

    nlohmann::json cases = nlohmann::json::array();
    for (std::size_t i = 0; i < args.count; ++i) {
        cdis::PhantomSpec case_spec = spec;
        case_spec.seed = spec.seed + i;
        const cdis::Phantom phantom = cdis::generate_phantom(case_spec);
        char id[32];
        std::snprintf(id, sizeof id, "case_%03zu", i);
        const std::string stem = (fs::path(args.out_dir) / id).string();
        cdis::write_volume(phantom.dwi, stem + "_dwi");
        cdis::write_volume(phantom.tumour_mask, stem + "_tumour");
        cdis::write_volume(phantom.breast_mask, stem + "_breast");
        cases.push_back({{"id", id},
                         {"dwi", std::string(id) + "_dwi"},
                         {"tumour", std::string(id) + "_tumour"},
                         {"breast", std::string(id) + "_breast"}});
    }
    const nlohmann::json manifest = {{"seed", spec.seed}, {"cases", cases}};
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();
    write_text(manifest_path, manifest.dump(2) + "\n");
    std::cout << "wrote " << args.count << " phantom(s) and " << manifest_path << "\n";
}

struct MaskArgs {
    std::string dwi_stem;
    std::string out_stem;
};

void run_mask(const MaskArgs& args) {
    const cdis::DwiVolume dwi = cdis::read_dwi(args.dwi_stem);
    const cdis::MaskVolume mask = cdis::compute_breast_mask(dwi);
    cdis::write_volume(mask, args.out_stem);
    std::cout << "breast mask: " << mask.count() << " of " << mask.size() << " voxels\n";
}

struct AdcArgs {
    std::string dwi_stem;
    std::string out_prefix;
    double r2_min = 0.8;
};

void run_adc(const AdcArgs& args) {
    const cdis::DwiVolume dwi = cdis::read_dwi(args.dwi_stem);
    const cdis::AdcFitResult fit = cdis::fit_adc(dwi, args.r2_min);
    cdis::write_volume(fit.adc, args.out_prefix + "_adc");
    cdis::write_volume(fit.s0, args.out_prefix + "_s0");
    cdis::write_volume(fit.r2, args.out_prefix + "_r2");
    cdis::write_volume(fit.valid, args.out_prefix + "_valid");
    std::cout << "valid voxels: " << fit.valid.count() << " of " << fit.valid.size() << "\n";
}

struct SynthArgs {
    std::string fit_prefix;
    std::vector<double> s_hat;
    std::string out_stem;
};

void run_synth(const SynthArgs& args) {
    const cdis::AdcFitResult fit{
        cdis::read_scalar(args.fit_prefix + "_adc"),
        cdis::read_scalar(args.fit_prefix + "_s0"),
        cdis::read_scalar(args.fit_prefix + "_r2"),
        cdis::read_mask(args.fit_prefix + "_valid"),
    };
    const cdis::DwiVolume synthetic = cdis::synthesize_signals(fit, cdis::BValueList(args.s_hat));
    cdis::write_volume(synthetic, args.out_stem);
    std::cout << "synthesized " << synthetic.nb() << " volume(s)\n";
}

struct CdisArgs {
    std::string dwi_stem;
    std::string config_path;
    std::string out_stem;
    double r2_min = 0.8;
};

void run_cdis(const CdisArgs& args) {
    const cdis::DwiVolume dwi = cdis::read_dwi(args.dwi_stem);
    const auto config = load_json(args.config_path).get<cdis::MixingConfig>();
    const cdis::ScalarVolume mixed = cdis::compute_cdis(dwi, config, args.r2_min);
    cdis::write_volume(mixed, args.out_stem);
    std::cout << "wrote " << args.out_stem << "\n";
}

struct AucArgs {
    std::string modality_stem;
    std::string tumour_stem;
    std::string breast_stem;
};

void run_auc(const AucArgs& args) {
    const cdis::ScalarVolume modality = cdis::read_scalar(args.modality_stem);
    const cdis::MaskVolume tumour = cdis::read_mask(args.tumour_stem);
    const cdis::MaskVolume breast = cdis::read_mask(args.breast_stem);
    std::printf("%.4f\n", cdis::delineation_auc(modality, tumour, breast));
}

struct OptimizeArgs {
    std::string manifest;
    std::string config_path;
    std::string nm_path;
    std::string out_path;
    std::string trace_path;
    std::string aggregation = "mean_per_case";
    double r2_min = 0.8;
    unsigned threads = default_threads();
    std::size_t target_nz = 25;
    std::size_t out_hw = 224;
};

void run_optimize(const OptimizeArgs& args) {
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;
    const std::vector<cdis::CaseRecord> cases =
        load_and_prepare(args.manifest, args.target_nz, args.out_hw, seed, notes);
    const auto initial = load_json(args.config_path).get<cdis::MixingConfig>();
    const auto nm = load_json(args.nm_path).get<cdis::NmConfig>();
    const cdis::Aggregation agg = cdis::aggregation_from_string(args.aggregation);

    const cdis::OptimizeResult result =
        cdis::optimize_rho(cases, initial, nm, agg, args.r2_min, args.threads);

    write_text(args.out_path, nlohmann::json(result.config).dump(2) + "\n");
    write_text(args.trace_path, result.trace.to_csv());
    std::printf("initial AUC: %.6f\n", result.initial_auc);
    std::printf("final AUC:   %.6f\n", result.final_auc);
    const std::size_t iterations =
        result.trace.records.empty() ? 0 : result.trace.records.back().iteration;
    const std::size_t evals = result.trace.records.empty() ? 0 : result.trace.records.back().n_evals;
    std::printf("iterations:  %zu (%s, %zu evaluations)\n", iterations,
                cdis::to_string(result.trace.reason).c_str(), evals);
}

struct CompareArgs {
    std::string manifest;
    std::string unopt_path;
    std::string opt_path;
    std::string out_path;
    std::string json_path;
    std::string aggregation = "mean_per_case";
    double r2_min = 0.8;
    unsigned threads = default_threads();
    std::size_t target_nz = 25;
    std::size_t out_hw = 224;
};

void run_compare(const CompareArgs& args) {
    std::optional<std::uint64_t> seed;
    std::vector<std::string> notes;
    const std::vector<cdis::CaseRecord> cases =
        load_and_prepare(args.manifest, args.target_nz, args.out_hw, seed, notes);
    const auto unopt = load_json(args.unopt_path).get<cdis::MixingConfig>();
    const auto opt = load_json(args.opt_path).get<cdis::MixingConfig>();
    const cdis::Aggregation agg = cdis::aggregation_from_string(args.aggregation);

    cdis::ComparisonReport report =
        cdis::compare_modalities(cases, unopt, opt, agg, args.r2_min, args.threads);
    report.seed = seed;
    report.notes.insert(report.notes.begin(), notes.begin(), notes.end());

    write_text(args.out_path, report.to_csv());
    if (!args.json_path.empty())
        write_text(args.json_path, nlohmann::json(report).dump(2) + "\n");
    for (const cdis::ModalityRow& row : report.rows)
        std::printf("%c %-18s %.4f%s%s\n", row.best ? '*' : ' ', row.modality.c_str(), row.auc,
                    row.note.empty() ? "" : "  ", row.note.c_str());
}

struct RenderArgs {
    std::string volume_stem;
    std::string out_path;
    std::vector<std::size_t> slices;
    std::string window = "minmax";
    double b = -1.0;
    bool b_set = false;
};

void run_render(const RenderArgs& args) {
    const cdis::AnyVolume any = cdis::read_volume(args.volume_stem);
    const cdis::ScalarVolume vol = std::visit(
        [&](const auto& v) -> cdis::ScalarVolume {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, cdis::ScalarVolume>) {
                return v;
            } else if constexpr (std::is_same_v<T, cdis::MaskVolume>) {
                return cdis::ScalarVolume(v.shape(),
                                          std::vector<double>(v.data().begin(), v.data().end()),
                                          cdis::Unit::dimensionless);
            } else {
                if (!args.b_set)
                    throw cdis::ValidationError(
                        "volume at " + args.volume_stem +
                        " is a 4-D acquisition; pass --b to pick one b-value");
                return cdis::extract_b_slice(v, args.b);
            }
        },
        any);

    std::vector<std::size_t> slices = args.slices;
    if (slices.empty())
        for (std::size_t z = 0; z < vol.shape().nz; ++z)
            slices.push_back(z);
    const cdis::Windowing window = cdis::Windowing::parse(args.window);
    const std::vector<std::uint8_t> png = cdis::render_montage(vol, slices, window);
    write_bytes(args.out_path, png);
    std::cout << "wrote " << slices.size() * vol.shape().nx << "x" << vol.shape().ny
              << " montage (" << slices.size() << " slice(s)) to " << args.out_path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic correlated diffusion imaging (CDIs) pipeline"};
    app.require_subcommand(1);

    PhantomArgs phantom_args;
    auto* phantom = app.add_subcommand("phantom", "Generate seeded synthetic DWI phantoms");
    phantom->add_option("--spec", phantom_args.spec_path, "PhantomSpec JSON file")->required();
    phantom->add_option("--out", phantom_args.out_dir, "output directory")->required();
    phantom->add_option("--count", phantom_args.count, "number of phantoms");
    phantom->add_option("--seed", phantom_args.seed, "base seed (overrides the spec)");
    phantom->callback([&] {
        phantom_args.seed_set = phantom->count("--seed") > 0;
        run_phantom(phantom_args);
    });

    MaskArgs mask_args;
    auto* mask = app.add_subcommand("mask", "Compute a breast mask from a DWI bundle");
    mask->add_option("--dwi", mask_args.dwi_stem, "DWI bundle stem")->required();
    mask->add_option("--out", mask_args.out_stem, "output mask stem")->required();
    mask->callback([&] { run_mask(mask_args); });

    AdcArgs adc_args;
    auto* adc = app.add_subcommand("adc", "Fit the per-voxel decay model");
    adc->add_option("--dwi", adc_args.dwi_stem, "DWI bundle stem")->required();
    adc->add_option("--r2-min", adc_args.r2_min, "validity threshold on R^2");
    adc->add_option("--out-prefix", adc_args.out_prefix, "output prefix for _adc/_s0/_r2/_valid")
        ->required();
    adc->callback([&] { run_adc(adc_args); });

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Synthesize signals at chosen b-values");
    synth->add_option("--fit-prefix", synth_args.fit_prefix, "prefix written by `adc`")
        ->required();
    synth->add_option("--s-hat", synth_args.s_hat, "comma-separated b-values")
        ->required()
        ->delimiter(',');
    synth->add_option("--out", synth_args.out_stem, "output DWI bundle stem")->required();
    synth->callback([&] { run_synth(synth_args); });

    CdisArgs cdis_args;
    auto* cdis_cmd = app.add_subcommand("cdis", "Compute the mixed CDIs volume");
    cdis_cmd->add_option("--dwi", cdis_args.dwi_stem, "native DWI bundle stem")->required();
    cdis_cmd->add_option("--config", cdis_args.config_path, "MixingConfig JSON")->required();
    cdis_cmd->add_option("--r2-min", cdis_args.r2_min, "validity threshold on R^2");
    cdis_cmd->add_option("--out", cdis_args.out_stem, "output volume stem")->required();
    cdis_cmd->callback([&] { run_cdis(cdis_args); });

    AucArgs auc_args;
    auto* auc_cmd = app.add_subcommand("auc", "Voxel-level tumour delineation AUC");
    auc_cmd->add_option("--modality", auc_args.modality_stem, "modality volume stem")->required();
    auc_cmd->add_option("--tumour", auc_args.tumour_stem, "tumour mask stem")->required();
    auc_cmd->add_option("--breast", auc_args.breast_stem, "breast mask stem")->required();
    auc_cmd->callback([&] { run_auc(auc_args); });

    OptimizeArgs optimize_args;
    auto* optimize = app.add_subcommand("optimize", "Tune the mixing exponents by Nelder-Mead");
    optimize->add_option("--cases", optimize_args.manifest, "case manifest JSON")->required();
    optimize->add_option("--config", optimize_args.config_path, "initial MixingConfig JSON")
        ->required();
    optimize->add_option("--nm", optimize_args.nm_path, "NmConfig JSON")->required();
    optimize->add_option("--out", optimize_args.out_path, "optimized MixingConfig JSON")
        ->required();
    optimize->add_option("--trace", optimize_args.trace_path, "trace CSV path")->required();
    optimize->add_option("--aggregation", optimize_args.aggregation,
                         "pooled or mean_per_case (default)");
    optimize->add_option("--r2-min", optimize_args.r2_min, "validity threshold on R^2");
    optimize->add_option("--threads", optimize_args.threads, "worker threads");
    optimize->add_option("--target-nz", optimize_args.target_nz, "slice count after windowing");
    optimize->add_option("--out-hw", optimize_args.out_hw, "in-plane size after resize");
    optimize->callback([&] { run_optimize(optimize_args); });

    CompareArgs compare_args;
    auto* compare = app.add_subcommand("compare", "Per-modality delineation AUC report");
    compare->add_option("--cases", compare_args.manifest, "case manifest JSON")->required();
    compare->add_option("--unopt", compare_args.unopt_path, "baseline MixingConfig JSON")
        ->required();
    compare->add_option("--opt", compare_args.opt_path, "optimized MixingConfig JSON")
        ->required();
    compare->add_option("--out", compare_args.out_path, "report CSV path")->required();
    compare->add_option("--json", compare_args.json_path, "optional report JSON path");
    compare->add_option("--aggregation", compare_args.aggregation,
                        "pooled or mean_per_case (default)");
    compare->add_option("--r2-min", compare_args.r2_min, "validity threshold on R^2");
    compare->add_option("--threads", compare_args.threads, "worker threads");
    compare->add_option("--target-nz", compare_args.target_nz, "slice count after windowing");
    compare->add_option("--out-hw", compare_args.out_hw, "in-plane size after resize");
    compare->callback([&] { run_compare(compare_args); });

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "Render slices as a grayscale PNG montage");
    render->add_option("--volume", render_args.volume_stem, "volume bundle stem")->required();
    render->add_option("--out", render_args.out_path, "PNG path")->required();
    render->add_option("--slices", render_args.slices, "slice indices (default: all)")
        ->delimiter(',');
    render->add_option("--window", render_args.window, "minmax or percentile:LO,HI");
    render->add_option("--b", render_args.b, "b-value to extract from a 4-D volume");
    render->callback([&] {
        render_args.b_set = render->count("--b") > 0;
        run_render(render_args);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const cdis::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cdis::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const cdis::UndefinedAucError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const cdis::ObjectiveFaultError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
