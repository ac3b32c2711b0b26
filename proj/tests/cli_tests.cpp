// End-to-end exercise of the cdis command line: the full
// phantom -> mask -> adc -> synth -> cdis -> auc -> optimize ->
// compare -> render workflow on a small synthetic cohort, the exit
// code taxonomy, and byte-level determinism of every artifact.
//
// Usage: cli_tests <path-to-cdis-binary>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "cdis/volume.hpp"
#include "cdis/volume_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_scratch;
int g_checks = 0;
int g_failures = 0;

void check(bool ok, const std::string& label) {
    ++g_checks;
    if (!ok)
        ++g_failures;
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", label.c_str());
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const fs::path out_path = g_scratch / ("stdout_" + std::to_string(counter));
    const fs::path err_path = g_scratch / ("stderr_" + std::to_string(counter));
    ++counter;
    const std::string cmd =
        g_cli + " " + args + " >" + out_path.string() + " 2>" + err_path.string();
    const int raw = std::system(cmd.c_str());
    RunResult result;
    if (raw != -1 && WIFEXITED(raw))
        result.code = WEXITSTATUS(raw);
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

bool files_equal(const fs::path& a, const fs::path& b) {
    return fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b);
}

bool dirs_equal(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& entry : fs::directory_iterator(a))
        names_a.push_back(entry.path().filename().string());
    for (const auto& entry : fs::directory_iterator(b))
        names_b.push_back(entry.path().filename().string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b)
        return false;
    for (const std::string& name : names_a)
        if (slurp(a / name) != slurp(b / name))
            return false;
    return true;
}

std::uint32_t png_u32be(const std::string& bytes, std::size_t pos) {
    return (std::uint32_t(std::uint8_t(bytes[pos])) << 24) |
           (std::uint32_t(std::uint8_t(bytes[pos + 1])) << 16) |
           (std::uint32_t(std::uint8_t(bytes[pos + 2])) << 8) |
           std::uint32_t(std::uint8_t(bytes[pos + 3]));
}

const char* kSpecJson = R"({
    "shape": [8, 48, 48],
    "bvalues": [0, 100, 600, 800],
    "s0_tissue": 1000.0,
    "s0_background": 0.0,
    "adc_tissue": 2.0e-3,
    "adc_tumour": 1.0e-3,
    "breast": {"center": [4, 24, 24], "semi_axes": [3.5, 18, 18]},
    "tumour": {"center": [4, 21, 30], "semi_axes": [1.5, 5, 5]},
    "noise_sigma": %NOISE%,
    "seed": %SEED%
})";

std::string spec_json(double noise, unsigned seed) {
    std::string text = kSpecJson;
    text.replace(text.find("%NOISE%"), 7, std::to_string(noise));
    text.replace(text.find("%SEED%"), 6, std::to_string(seed));
    return text;
}

const char* kBaselineJson =
    R"({"rho": [1, 1, 1, 1, 1, 1], "s_hat": [0, 1000, 2000, 3000, 4000, 5000]})";

double parse_labeled(const std::string& text, const std::string& label) {
    const std::size_t pos = text.find(label);
    if (pos == std::string::npos)
        return -1.0;
    return std::strtod(text.c_str() + pos + label.size(), nullptr);
}

// AUC of one modality row in a comparison CSV, or -1 when absent.
double csv_row_auc(const std::string& csv, const std::string& modality) {
    std::size_t pos = 0;
    const std::string key = modality + ",";
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        if (line.rfind(key, 0) == 0)
            return std::strtod(line.c_str() + key.size(), nullptr);
        if (end == std::string::npos)
            break;
        pos = end + 1;
    }
    return -1.0;
}

void test_workflow() {
    const fs::path cohort = g_scratch / "cohort";
    const fs::path work = g_scratch / "work";
    fs::create_directories(work);
    spit(g_scratch / "spec.json", spec_json(0.0, 5));
    spit(g_scratch / "baseline.json", kBaselineJson);

    RunResult r = run("phantom --spec " + q(g_scratch / "spec.json") + " --out " + q(cohort));
    check(r.code == 0, "phantom exits 0");
    check(fs::exists(cohort / "manifest.json"), "phantom writes a manifest");
    check(fs::exists(cohort / "case_000_dwi.raw"), "phantom writes DWI payloads");

    const std::string dwi = q(cohort / "case_000_dwi");
    r = run("mask --dwi " + dwi + " --out " + q(work / "mask"));
    check(r.code == 0, "mask exits 0");
    check(files_equal(work / "mask.raw", cohort / "case_000_breast.raw"),
          "noiseless breast mask matches the generated one byte for byte");

    r = run("adc --dwi " + dwi + " --out-prefix " + q(work / "fit"));
    check(r.code == 0, "adc exits 0");
    check(fs::exists(work / "fit_adc.json") && fs::exists(work / "fit_valid.raw"),
          "adc writes the fit bundles");

    r = run("synth --fit-prefix " + q(work / "fit") +
            " --s-hat 0,1000,2000,3000,4000,5000 --out " + q(work / "synth"));
    check(r.code == 0, "synth exits 0");
    check(r.out.find("synthesized 6 volume(s)") != std::string::npos,
          "synth reports six volumes");

    r = run("cdis --dwi " + dwi + " --config " + q(g_scratch / "baseline.json") + " --out " +
            q(work / "cdis"));
    check(r.code == 0, "cdis exits 0");

    r = run("auc --modality " + q(work / "cdis") + " --tumour " + q(cohort / "case_000_tumour") +
            " --breast " + q(cohort / "case_000_breast"));
    check(r.code == 0, "auc exits 0");
    check(r.out == "1.0000\n", "noiseless delineation AUC prints 1.0000");

    r = run("render --volume " + q(work / "cdis") + " --out " + q(work / "montage.png") +
            " --slices 3,4 --window percentile:1,99");
    check(r.code == 0, "render exits 0");
    const std::string png = slurp(work / "montage.png");
    check(png.size() > 8 && std::memcmp(png.data(), "\x89PNG\r\n\x1a\n", 8) == 0,
          "render produces a PNG signature");
    check(png_u32be(png, 16) == 96 && png_u32be(png, 20) == 48,
          "montage IHDR is 96x48 for two 48x48 slices");

    r = run("render --volume " + dwi + " --b 800 --out " + q(work / "b800.png"));
    check(r.code == 0, "render accepts a 4-D volume with --b");
}

void test_optimize_and_compare() {
    const fs::path cohort = g_scratch / "cohort_noisy";
    const fs::path work = g_scratch / "work";
    // Noise high enough that the starting AUC sits below 1.0 and the
    // optimizer actually iterates instead of stopping on a flat simplex.
    spit(g_scratch / "noisy_spec.json", spec_json(100.0, 11));
    spit(g_scratch / "nm.json", R"({"max_iter": 15})");

    RunResult r = run("phantom --spec " + q(g_scratch / "noisy_spec.json") + " --out " +
                      q(cohort) + " --count 2");
    check(r.code == 0, "noisy phantom cohort exits 0");

    const std::string manifest = q(cohort / "manifest.json");
    const std::string geometry = " --target-nz 8 --out-hw 48 --threads 1";
    r = run("optimize --cases " + manifest + " --config " + q(g_scratch / "baseline.json") +
            " --nm " + q(g_scratch / "nm.json") + " --out " + q(work / "opt.json") + " --trace " +
            q(work / "trace.csv") + geometry);
    check(r.code == 0, "optimize exits 0");
    const double initial = parse_labeled(r.out, "initial AUC: ");
    const double final_auc = parse_labeled(r.out, "final AUC:   ");
    check(initial > 0.5 && initial < 1.0, "initial AUC is sane and unsaturated");
    check(final_auc >= initial, "optimize never loses to its starting point");
    const std::string trace = slurp(work / "trace.csv");
    check(trace.find("# termination: ") != std::string::npos &&
              trace.find("iteration") != std::string::npos,
          "trace CSV records iterations and the stop reason");

    r = run("compare --cases " + manifest + " --unopt " + q(g_scratch / "baseline.json") +
            " --opt " + q(work / "opt.json") + " --out " + q(work / "report.csv") + " --json " +
            q(work / "report.json") + geometry);
    check(r.code == 0, "compare exits 0");
    const std::string csv = slurp(work / "report.csv");
    // The optimizer prints %.6f; the CSV stores full precision.
    const double unopt_auc = csv_row_auc(csv, "CDIs_unoptimized");
    const double opt_auc = csv_row_auc(csv, "CDIs_optimized");
    check(std::fabs(unopt_auc - initial) <= 5e-7,
          "compare reproduces the optimizer's starting AUC");
    check(std::fabs(opt_auc - final_auc) <= 5e-7,
          "compare reproduces the optimizer's final AUC");
    check(opt_auc >= unopt_auc, "optimized exponents never rank below the baseline");
    check(csv_row_auc(csv, "DWI_b800") > 0.5, "b=800 signal separates the noisy tumour");
    check(csv.find("# seed: 11") != std::string::npos, "report CSV carries the cohort seed");
    check(!slurp(work / "report.json").empty(), "compare writes the JSON report");
}

void test_exit_codes() {
    const fs::path cohort = g_scratch / "cohort";
    const fs::path work = g_scratch / "work";
    const std::string dwi = q(cohort / "case_000_dwi");

    check(run("").code == 2, "missing subcommand exits 2");
    check(run("frobnicate").code == 2, "unknown subcommand exits 2");
    check(run("auc --modality x").code == 2, "missing required flags exit 2");
    check(run("render --volume x --out y --sharpen 3").code == 2, "unknown flag exits 2");
    check(run("--help").code == 0, "--help exits 0");
    check(run("phantom --help").code == 0, "subcommand --help exits 0");

    RunResult r = run("render --volume " + dwi + " --out " + q(work / "x.png"));
    check(r.code == 3, "rendering a 4-D volume without --b exits 3");
    check(r.err.find("--b") != std::string::npos, "the 4-D render error suggests --b");
    check(run("render --volume " + dwi + " --b 640 --out " + q(work / "x.png")).code == 3,
          "unknown b-value exits 3");
    check(run("render --volume " + q(work / "cdis") + " --out " + q(work / "x.png") +
              " --window junk")
                  .code == 3,
          "bad window spec exits 3");
    check(run("render --volume " + q(work / "cdis") + " --out " + q(work / "x.png") +
              " --slices 99")
                  .code == 3,
          "out-of-range slice exits 3");

    spit(g_scratch / "bad_lengths.json", R"({"rho": [1, 2], "s_hat": [0, 1000, 2000]})");
    check(run("cdis --dwi " + dwi + " --config " + q(g_scratch / "bad_lengths.json") +
              " --out " + q(work / "x"))
                  .code == 3,
          "mismatched config lengths exit 3");

    check(run("mask --dwi " + q(g_scratch / "nowhere") + " --out " + q(work / "x")).code == 4,
          "missing input bundle exits 4");

    fs::copy_file(cohort / "case_000_tumour.json", work / "trunc.json",
                  fs::copy_options::overwrite_existing);
    fs::copy_file(cohort / "case_000_tumour.raw", work / "trunc.raw",
                  fs::copy_options::overwrite_existing);
    fs::resize_file(work / "trunc.raw", fs::file_size(work / "trunc.raw") - 3);
    check(run("render --volume " + q(work / "trunc") + " --out " + q(work / "x.png")).code == 4,
          "truncated payload exits 4");

    std::string header = slurp(work / "cdis.json");
    header.replace(header.find("f32le"), 5, "f64le");
    spit(work / "f64.json", header);
    fs::copy_file(work / "cdis.raw", work / "f64.raw", fs::copy_options::overwrite_existing);
    check(run("render --volume " + q(work / "f64") + " --out " + q(work / "x.png")).code == 4,
          "unsupported dtype exits 4");

    spit(g_scratch / "broken.json", "{nope");
    check(run("cdis --dwi " + dwi + " --config " + q(g_scratch / "broken.json") + " --out " +
              q(work / "x"))
                  .code == 4,
          "malformed config JSON exits 4");

    cdis::write_volume(cdis::MaskVolume::zeros({8, 48, 48}), (work / "no_tumour").string());
    check(run("auc --modality " + q(work / "cdis") + " --tumour " + q(work / "no_tumour") +
              " --breast " + q(cohort / "case_000_breast"))
                  .code == 5,
          "single-class AUC exits 5");
}

void test_determinism() {
    const fs::path a = g_scratch / "det_a";
    const fs::path b = g_scratch / "det_b";
    fs::create_directories(a);
    fs::create_directories(b);
    const fs::path cohort = g_scratch / "cohort_noisy";
    const std::string manifest = q(cohort / "manifest.json");
    const std::string dwi = q(cohort / "case_000_dwi");
    const std::string geometry = " --target-nz 8 --out-hw 48 --threads 1";

    RunResult pa = run("phantom --spec " + q(g_scratch / "noisy_spec.json") + " --out " +
                       q(a / "cohort") + " --count 1 --seed 9");
    RunResult pb = run("phantom --spec " + q(g_scratch / "noisy_spec.json") + " --out " +
                       q(b / "cohort") + " --count 1 --seed 9");
    check(pa.code == 0 && pb.code == 0 && dirs_equal(a / "cohort", b / "cohort"),
          "phantom is byte-deterministic");

    for (const fs::path& dir : {a, b}) {
        run("mask --dwi " + dwi + " --out " + q(dir / "mask"));
        run("adc --dwi " + dwi + " --out-prefix " + q(dir / "fit"));
        run("synth --fit-prefix " + q(dir / "fit") + " --s-hat 0,2500,5000 --out " +
            q(dir / "synth"));
        run("cdis --dwi " + dwi + " --config " + q(g_scratch / "baseline.json") + " --out " +
            q(dir / "cdis"));
        run("optimize --cases " + manifest + " --config " + q(g_scratch / "baseline.json") +
            " --nm " + q(g_scratch / "nm.json") + " --out " + q(dir / "opt.json") + " --trace " +
            q(dir / "trace.csv") + geometry);
        run("compare --cases " + manifest + " --unopt " + q(g_scratch / "baseline.json") +
            " --opt " + q(dir / "opt.json") + " --out " + q(dir / "report.csv") + " --json " +
            q(dir / "report.json") + geometry);
        run("render --volume " + q(dir / "cdis") + " --out " + q(dir / "view.png") +
            " --slices 2,3,4");
    }
    for (const char* name : {"mask.raw", "mask.json", "fit_adc.raw", "fit_s0.raw", "fit_r2.raw",
                             "fit_valid.raw", "synth.raw", "synth.json", "cdis.raw", "opt.json",
                             "trace.csv", "report.csv", "report.json", "view.png"})
        check(files_equal(a / name, b / name), std::string("deterministic artifact: ") + name);

    RunResult ra = run("auc --modality " + q(a / "cdis") + " --tumour " +
                       q(cohort / "case_000_tumour") + " --breast " +
                       q(cohort / "case_000_breast"));
    RunResult rb = run("auc --modality " + q(b / "cdis") + " --tumour " +
                       q(cohort / "case_000_tumour") + " --breast " +
                       q(cohort / "case_000_breast"));
    check(ra.code == 0 && ra.out == rb.out, "auc output is deterministic");
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: cli_tests <path-to-cdis-binary>\n");
        return 2;
    }
    g_cli = argv[1];
    if (!fs::exists(g_cli)) {
        std::fprintf(stderr, "cli_tests: no such binary: %s\n", g_cli.c_str());
        return 2;
    }

    std::random_device rd;
    g_scratch = fs::temp_directory_path() /
                ("cdis_cli_tests_" + std::to_string(rd()) + "_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);

    test_workflow();
    test_optimize_and_compare();
    test_exit_codes();
    test_determinism();

    std::printf("\n%d checks, %d failures\n", g_checks, g_failures);
    fs::remove_all(g_scratch);
    return g_failures == 0 ? 0 : 1;
}
