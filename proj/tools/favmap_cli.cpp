// favmap command-line tool. Talks to the library exclusively through the C API.

#include "favmap/favmap.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RuntimeFailure {
    std::string message;
};

void check(favmap_status st, const std::string& context)
{
    if (st != FAVMAP_OK)
        throw RuntimeFailure{context + ": " + favmap_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const noexcept { Free(p); }
};
using DatasetPtr = std::unique_ptr<favmap_dataset, Deleter<favmap_dataset, favmap_dataset_free>>;
using FeaturesPtr =
    std::unique_ptr<favmap_features, Deleter<favmap_features, favmap_features_free>>;
using ReportPtr = std::unique_ptr<favmap_report, Deleter<favmap_report, favmap_report_free>>;

std::string render(const std::vector<const favmap_report*>& reports, bool with_config)
{
    size_t needed = 0;
    check(favmap_report_render(reports.data(), reports.size(), with_config ? 1 : 0, nullptr, 0,
                               &needed),
          "render");
    std::string text(needed, '\0');
    check(favmap_report_render(reports.data(), reports.size(), with_config ? 1 : 0, text.data(),
                               text.size(), &needed),
          "render");
    text.resize(needed - 1);
    return text;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
        throw RuntimeFailure{"cannot write '" + path.string() + "'"};
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw RuntimeFailure{"cannot create output directory '" + dir.string() + "'"};
}

fs::path default_provenance(const std::string& dataset, const std::string& given)
{
    if (!given.empty())
        return given;
    return fs::path(dataset).parent_path() / "provenance.json";
}

// Expands `--config FILE` (key = value lines, '#' comments) into --key=value
// arguments placed right after the subcommand name, so that flags given on
// the command line, which come later, take precedence.
std::vector<std::string> expand_config(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    std::optional<std::string> config;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config = args[i].substr(9);
    }
    if (!config || args.size() < 2)
        return args;

    std::ifstream in(*config);
    if (!in)
        throw RuntimeFailure{"cannot read config file '" + *config + "'"};
    std::vector<std::string> injected;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty())
            continue;
        if (eq == std::string::npos)
            throw RuntimeFailure{"config file '" + *config + "': expected key = value, got '" +
                                 trim(line) + "'"};
        std::string key = trim(line.substr(0, eq));
        for (char& ch : key)
            if (ch == '_')
                ch = '-';
        injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    double imbalance = 30.0;
    std::size_t n_favelas = 8;
    std::size_t cols = 48, rows = 48;
    double origin_x = 680000.0, origin_y = 7450000.0;
    double pixel_size = 5.0, tile_size = 150.0;
    double favela_std = 0.30, formal_std = 0.10;
};

struct LabelArgs {
    std::string fixture, imagery, buildings, favelas, industrial, out;
    double tile_size = 150.0;
    favmap_label_rules rules{};
    std::string red_band = "red", nir_band = "nir", built_band = "built";
    bool geojson = false;
};

struct FeaturesArgs {
    std::string dataset, provenance, imagery, out;
};

struct CvArgs {
    std::string dataset, provenance, features, imagery, out, method;
    favmap_cv_config cfg{};
    bool no_bootstrap = false;
};

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out;
};

int run_synth(const SynthArgs& a)
{
    favmap_scenario_config cfg;
    favmap_scenario_config_default(&cfg);
    cfg.min_x = a.origin_x;
    cfg.min_y = a.origin_y;
    cfg.max_x = a.origin_x + static_cast<double>(a.cols) * a.tile_size;
    cfg.max_y = a.origin_y + static_cast<double>(a.rows) * a.tile_size;
    cfg.pixel_size = a.pixel_size;
    cfg.tile_size = a.tile_size;
    cfg.n_favelas = a.n_favelas;
    cfg.favela_texture_std = a.favela_std;
    cfg.formal_texture_std = a.formal_std;
    cfg.target_imbalance = a.imbalance;
    cfg.seed = a.seed;
    double achieved = 0.0;
    check(favmap_synth(&cfg, a.out.c_str(), &achieved), "synth");
    std::printf("fixture written to %s (%zux%zu tiles, expected imbalance %.2f:1)\n",
                a.out.c_str(), a.rows, a.cols, achieved);
    return kExitOk;
}

int run_label(LabelArgs a, unsigned threads)
{
    if (!a.fixture.empty()) {
        const fs::path dir = a.fixture;
        auto fill = [&](std::string& v, const char* name) {
            if (v.empty())
                v = (dir / name).string();
        };
        fill(a.imagery, "imagery.fgrid");
        fill(a.buildings, "buildings.fgrid");
        fill(a.favelas, "favelas.geojson");
        fill(a.industrial, "industrial.geojson");
    }
    for (const auto* p : {&a.imagery, &a.buildings, &a.favelas, &a.industrial})
        if (p->empty())
            throw CLI::ValidationError(
                "label needs --imagery, --buildings, --favelas and --industrial (or --fixture)");

    favmap_label_inputs in{};
    in.imagery = a.imagery.c_str();
    in.buildings = a.buildings.c_str();
    in.favelas = a.favelas.c_str();
    in.industrial = a.industrial.c_str();
    in.tile_size = a.tile_size;
    in.red_band = a.red_band.c_str();
    in.nir_band = a.nir_band.c_str();
    in.building_band = a.built_band.c_str();

    favmap_dataset* raw = nullptr;
    check(favmap_dataset_build(&in, &a.rules, threads, &raw), "label");
    DatasetPtr ds(raw);

    const fs::path out = a.out;
    ensure_dir(out);
    const std::string csv = (out / "dataset.csv").string();
    const std::string prov = (out / "provenance.json").string();
    const std::string geo = (out / "tiles.geojson").string();
    check(favmap_dataset_write(ds.get(), csv.c_str(), prov.c_str(),
                               a.geojson ? geo.c_str() : nullptr),
          "label");

    size_t fav = 0, non = 0;
    check(favmap_dataset_counts(ds.get(), &fav, &non), "label");
    std::printf("labeled %zu favela and %zu nonfavela tiles -> %s\n", fav, non, csv.c_str());
    return kExitOk;
}

DatasetPtr load_dataset(const std::string& csv, const std::string& provenance, bool need_grid)
{
    const fs::path prov = default_provenance(csv, provenance);
    const bool have_prov = fs::exists(prov);
    if (need_grid && !have_prov)
        throw RuntimeFailure{"provenance file '" + prov.string() +
                             "' not found (needed for the tile grid)"};
    favmap_dataset* raw = nullptr;
    check(favmap_dataset_load(csv.c_str(), have_prov ? prov.string().c_str() : nullptr, &raw),
          "load dataset");
    return DatasetPtr(raw);
}

int run_features(const FeaturesArgs& a, unsigned threads)
{
    DatasetPtr ds = load_dataset(a.dataset, a.provenance, true);
    favmap_features* raw = nullptr;
    check(favmap_features_baseline(ds.get(), a.imagery.c_str(), threads, &raw), "features");
    FeaturesPtr fs(raw);
    check(favmap_features_write(fs.get(), a.out.c_str()), "features");
    std::printf("%zu baseline vectors of dimension %zu -> %s\n", favmap_features_count(fs.get()),
                favmap_features_dimension(fs.get()), a.out.c_str());
    return kExitOk;
}

int run_cv(CvArgs a, unsigned threads)
{
    const bool baseline = a.features == "baseline";
    if (baseline && a.imagery.empty())
        throw CLI::ValidationError("--features baseline requires --imagery");
    DatasetPtr ds = load_dataset(a.dataset, a.provenance, baseline);

    favmap_features* raw = nullptr;
    if (baseline)
        check(favmap_features_baseline(ds.get(), a.imagery.c_str(), threads, &raw), "features");
    else
        check(favmap_features_load(a.features.c_str(), &raw), "features");
    FeaturesPtr fs(raw);

    a.cfg.forest.bootstrap = a.no_bootstrap ? 0 : 1;
    favmap_report* rep_raw = nullptr;
    check(favmap_cv_run(ds.get(), fs.get(), &a.cfg, a.method.empty() ? nullptr : a.method.c_str(),
                        threads, &rep_raw),
          "cv");
    ReportPtr rep(rep_raw);

    const fs::path out = a.out;
    ensure_dir(out);
    check(favmap_report_write_json(rep.get(), (out / "report.json").string().c_str()), "cv");
    const std::string text = render({rep.get()}, true);
    write_file(out / "report.txt", text);
    std::fputs(text.c_str(), stdout);
    return kExitOk;
}

int run_report(const ReportArgs& a)
{
    std::vector<ReportPtr> owned;
    std::vector<const favmap_report*> reports;
    for (const std::string& path : a.inputs) {
        favmap_report* raw = nullptr;
        check(favmap_report_load(path.c_str(), &raw), "report");
        owned.emplace_back(raw);
        reports.push_back(raw);
    }
    const std::string text = render(reports, reports.size() == 1);
    if (!a.out.empty())
        write_file(a.out, text);
    std::fputs(text.c_str(), stdout);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"favmap: tile-based informal settlement classification workbench"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(favmap_version()));

    unsigned threads = 0;
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "Worker threads (0 = all cores)")
            ->capture_default_str();
        sub->add_option("--config", config_path,
                        "key = value file; command-line flags take precedence");
    };

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic city fixture");
    cmd_synth->add_option("--out", synth.out, "Output directory")->required();
    cmd_synth->add_option("--seed", synth.seed)->capture_default_str();
    cmd_synth->add_option("--imbalance", synth.imbalance, "Target nonfavela:favela ratio")
        ->capture_default_str()
        ->check(CLI::Range(1.0, 1e9));
    cmd_synth->add_option("--n-favelas", synth.n_favelas)->capture_default_str();
    cmd_synth->add_option("--cols", synth.cols, "Grid width in tiles")->capture_default_str();
    cmd_synth->add_option("--rows", synth.rows, "Grid height in tiles")->capture_default_str();
    cmd_synth->add_option("--origin-x", synth.origin_x)->capture_default_str();
    cmd_synth->add_option("--origin-y", synth.origin_y)->capture_default_str();
    cmd_synth->add_option("--pixel-size", synth.pixel_size)->capture_default_str();
    cmd_synth->add_option("--tile-size", synth.tile_size)->capture_default_str();
    cmd_synth->add_option("--favela-std", synth.favela_std)->capture_default_str();
    cmd_synth->add_option("--formal-std", synth.formal_std)->capture_default_str();
    add_common(cmd_synth);

    LabelArgs label;
    favmap_label_rules_default(&label.rules);
    auto* cmd_label = app.add_subcommand("label", "Build the labeled tile dataset");
    cmd_label->add_option("--fixture", label.fixture, "Directory written by synth");
    cmd_label->add_option("--imagery", label.imagery, "Raster with red/nir (or ndvi) bands");
    cmd_label->add_option("--buildings", label.buildings, "Built-up fraction raster");
    cmd_label->add_option("--favelas", label.favelas, "Favela outlines (GeoJSON)");
    cmd_label->add_option("--industrial", label.industrial, "Industrial zones (GeoJSON)");
    cmd_label->add_option("--out", label.out, "Output directory")->required();
    cmd_label->add_option("--tile-size", label.tile_size)->capture_default_str();
    cmd_label->add_option("--building-min", label.rules.building_min)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd_label->add_option("--veg-max", label.rules.veg_max)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd_label->add_option("--favela-min", label.rules.favela_min)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd_label->add_option("--ndvi-threshold", label.rules.ndvi_threshold)
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd_label->add_option("--red-band", label.red_band)->capture_default_str();
    cmd_label->add_option("--nir-band", label.nir_band)->capture_default_str();
    cmd_label->add_option("--built-band", label.built_band)->capture_default_str();
    cmd_label->add_flag("--geojson", label.geojson, "Also write tiles.geojson");
    add_common(cmd_label);

    FeaturesArgs feats;
    auto* cmd_features = app.add_subcommand("features", "Extract baseline feature vectors");
    cmd_features->add_option("--dataset", feats.dataset, "dataset.csv from label")->required();
    cmd_features->add_option("--provenance", feats.provenance,
                             "provenance.json (default: next to the dataset)");
    cmd_features->add_option("--imagery", feats.imagery, "Imagery raster")->required();
    cmd_features->add_option("--out", feats.out, "Embedding CSV to write")->required();
    add_common(cmd_features);

    CvArgs cv;
    favmap_cv_config_default(&cv.cfg);
    auto* cmd_cv = app.add_subcommand("cv", "Repeated balanced k-fold cross-validation");
    cmd_cv->add_option("--dataset", cv.dataset, "dataset.csv from label")->required();
    cmd_cv->add_option("--provenance", cv.provenance,
                       "provenance.json (default: next to the dataset)");
    cmd_cv->add_option("--features", cv.features, "Embedding CSV, or 'baseline'")->required();
    cmd_cv->add_option("--imagery", cv.imagery, "Imagery raster for --features baseline");
    cmd_cv->add_option("--out", cv.out, "Output directory")->required();
    cmd_cv->add_option("--method", cv.method, "Method name in the table");
    cmd_cv->add_option("--k", cv.cfg.k)->capture_default_str()->check(CLI::Range(2, 1000000));
    cmd_cv->add_option("--repeats", cv.cfg.repeats)
        ->capture_default_str()
        ->check(CLI::Range(1, 1000000));
    cmd_cv->add_option("--seed", cv.cfg.seed)->capture_default_str();
    cmd_cv->add_option("--trees", cv.cfg.forest.n_trees)
        ->capture_default_str()
        ->check(CLI::Range(1, 1000000));
    cmd_cv->add_option("--max-features", cv.cfg.forest.max_features, "0 = ceil(sqrt(d))")
        ->capture_default_str();
    cmd_cv->add_option("--min-samples-leaf", cv.cfg.forest.min_samples_leaf)
        ->capture_default_str()
        ->check(CLI::Range(1, 1000000));
    cmd_cv->add_option("--max-depth", cv.cfg.forest.max_depth, "0 = unlimited")
        ->capture_default_str();
    cmd_cv->add_flag("--no-bootstrap", cv.no_bootstrap, "Train trees on the full sample");
    add_common(cmd_cv);

    ReportArgs report;
    auto* cmd_report = app.add_subcommand("report", "Render report JSON files as one table");
    cmd_report->add_option("reports", report.inputs, "report.json files")->required();
    cmd_report->add_option("--out", report.out, "Also write the table to this file");
    add_common(cmd_report);

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<char*> cargs;
        for (std::string& s : args)
            cargs.push_back(s.data());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForVersion& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return kExitUsage;
        }

        if (cmd_synth->parsed())
            return run_synth(synth);
        if (cmd_label->parsed())
            return run_label(label, threads);
        if (cmd_features->parsed())
            return run_features(feats, threads);
        if (cmd_cv->parsed())
            return run_cv(cv, threads);
        if (cmd_report->parsed())
            return run_report(report);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.message << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
