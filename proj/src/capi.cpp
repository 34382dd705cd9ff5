#include "favmap/favmap.h"

#include "favmap/dataset.hpp"
#include "favmap/error.hpp"
#include "favmap/eval.hpp"
#include "favmap/features.hpp"
#include "favmap/forest.hpp"
#include "favmap/synthcity.hpp"

#include <cstring>
#include <new>
#include <optional>
#include <string>

struct favmap_dataset {
    favmap::LabeledDataset data;
    bool has_grid = false;
};

struct favmap_features {
    favmap::FeatureSet set;
};

struct favmap_report {
    favmap::CvReport report;
};

struct favmap_forest {
    favmap::Forest forest;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
favmap_status guarded(Fn&& fn) noexcept
{
    try {
        g_last_error.clear();
        fn();
        return FAVMAP_OK;
    } catch (const favmap::InvalidArgument& e) {
        g_last_error = e.what();
        return FAVMAP_ERR_INVALID_ARGUMENT;
    } catch (const favmap::IoError& e) {
        g_last_error = e.what();
        return FAVMAP_ERR_IO;
    } catch (const favmap::Error& e) {
        g_last_error = e.what();
        return FAVMAP_ERR_DATA;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FAVMAP_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FAVMAP_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return FAVMAP_ERR_INTERNAL;
    }
}

template <class T>
void require(const T* p, const char* what)
{
    if (p == nullptr)
        throw favmap::InvalidArgument(std::string(what) + " is NULL");
}

favmap::LabelRules to_rules(const favmap_label_rules& r)
{
    return {r.building_min, r.veg_max, r.favela_min, r.ndvi_threshold};
}

favmap::ForestConfig to_forest(const favmap_forest_config& c)
{
    favmap::ForestConfig f;
    f.n_trees = c.n_trees;
    f.max_features = c.max_features;
    f.min_samples_leaf = c.min_samples_leaf;
    if (c.max_depth > 0)
        f.max_depth = c.max_depth;
    f.seed = c.seed;
    f.bootstrap = c.bootstrap != 0;
    return f;
}

} // namespace

extern "C" {

const char* favmap_version(void)
{
    return "1.0.0";
}

const char* favmap_last_error(void)
{
    return g_last_error.c_str();
}

void favmap_label_rules_default(favmap_label_rules* rules)
{
    if (!rules)
        return;
    const favmap::LabelRules d;
    *rules = {d.building_min, d.veg_max, d.favela_min, d.ndvi_threshold};
}

void favmap_forest_config_default(favmap_forest_config* cfg)
{
    if (!cfg)
        return;
    const favmap::ForestConfig d;
    *cfg = {d.n_trees, d.max_features, d.min_samples_leaf, 0, d.seed, d.bootstrap ? 1 : 0};
}

void favmap_cv_config_default(favmap_cv_config* cfg)
{
    if (!cfg)
        return;
    const favmap::CvConfig d;
    cfg->k = d.k;
    cfg->repeats = d.repeats;
    cfg->seed = d.seed;
    favmap_forest_config_default(&cfg->forest);
}

void favmap_scenario_config_default(favmap_scenario_config* cfg)
{
    if (!cfg)
        return;
    const favmap::ScenarioConfig d;
    *cfg = {d.extent.min_x,       d.extent.min_y,      d.extent.max_x,     d.extent.max_y,
            d.pixel_size,         d.tile_size,         d.n_favelas,        d.favela_texture_std,
            d.formal_texture_std, d.target_imbalance,  d.seed};
}

favmap_status favmap_synth(const favmap_scenario_config* cfg, const char* out_dir,
                           double* achieved_imbalance)
{
    return guarded([&] {
        require(cfg, "cfg");
        require(out_dir, "out_dir");
        favmap::ScenarioConfig sc;
        sc.extent = {cfg->min_x, cfg->min_y, cfg->max_x, cfg->max_y};
        sc.pixel_size = cfg->pixel_size;
        sc.tile_size = cfg->tile_size;
        sc.n_favelas = cfg->n_favelas;
        sc.favela_texture_std = cfg->favela_texture_std;
        sc.formal_texture_std = cfg->formal_texture_std;
        sc.target_imbalance = cfg->target_imbalance;
        sc.seed = cfg->seed;
        const favmap::Scenario scenario = favmap::generate(sc);
        favmap::emit(scenario, out_dir);
        if (achieved_imbalance)
            *achieved_imbalance = favmap::truth_imbalance(scenario.truth);
    });
}

favmap_status favmap_dataset_build(const favmap_label_inputs* inputs,
                                   const favmap_label_rules* rules, unsigned threads,
                                   favmap_dataset** out)
{
    return guarded([&] {
        require(inputs, "inputs");
        require(out, "out");
        *out = nullptr;
        require(inputs->imagery, "inputs->imagery");
        require(inputs->buildings, "inputs->buildings");
        require(inputs->favelas, "inputs->favelas");
        require(inputs->industrial, "inputs->industrial");
        favmap::DatasetInputs in;
        in.imagery = inputs->imagery;
        in.buildings = inputs->buildings;
        in.favelas = inputs->favelas;
        in.industrial = inputs->industrial;
        if (inputs->tile_size > 0.0)
            in.tile_size = inputs->tile_size;
        if (inputs->red_band)
            in.red_band = inputs->red_band;
        if (inputs->nir_band)
            in.nir_band = inputs->nir_band;
        if (inputs->building_band)
            in.building_band = inputs->building_band;
        const favmap::LabelRules r = rules ? to_rules(*rules) : favmap::LabelRules{};
        auto ds = std::make_unique<favmap_dataset>();
        ds->data = favmap::build_dataset_from_files(in, r, threads);
        ds->has_grid = true;
        *out = ds.release();
    });
}

favmap_status favmap_dataset_load(const char* csv_path, const char* provenance_path,
                                  favmap_dataset** out)
{
    return guarded([&] {
        require(csv_path, "csv_path");
        require(out, "out");
        *out = nullptr;
        auto ds = std::make_unique<favmap_dataset>();
        ds->data.tiles = favmap::read_dataset_csv(csv_path);
        if (provenance_path) {
            ds->data.provenance = favmap::read_provenance(provenance_path);
            ds->has_grid = true;
            const auto& g = ds->data.provenance.grid;
            for (const auto& t : ds->data.tiles)
                if (t.id.row >= g.n_rows || t.id.col >= g.n_cols)
                    throw favmap::DataError("tile " + favmap::to_string(t.id) +
                                            " lies outside the provenance grid");
        }
        *out = ds.release();
    });
}

favmap_status favmap_dataset_write(const favmap_dataset* ds, const char* csv_path,
                                   const char* provenance_path, const char* geojson_path)
{
    return guarded([&] {
        require(ds, "ds");
        if (csv_path)
            favmap::write_dataset_csv(ds->data.tiles, csv_path);
        if (provenance_path)
            favmap::write_provenance(ds->data.provenance, provenance_path);
        if (geojson_path) {
            if (!ds->has_grid)
                throw favmap::InvalidArgument("dataset has no grid; cannot write tile GeoJSON");
            favmap::write_geojson(favmap::tile_features(ds->data.provenance.grid, ds->data.tiles),
                                  geojson_path);
        }
    });
}

favmap_status favmap_dataset_counts(const favmap_dataset* ds, size_t* n_favela,
                                    size_t* n_nonfavela)
{
    return guarded([&] {
        require(ds, "ds");
        std::size_t fav = 0, non = 0;
        for (const auto& t : ds->data.tiles) {
            fav += t.label == favmap::Label::favela;
            non += t.label == favmap::Label::nonfavela;
        }
        if (n_favela)
            *n_favela = fav;
        if (n_nonfavela)
            *n_nonfavela = non;
    });
}

void favmap_dataset_free(favmap_dataset* ds)
{
    delete ds;
}

favmap_status favmap_features_baseline(const favmap_dataset* ds, const char* imagery_path,
                                       unsigned threads, favmap_features** out)
{
    return guarded([&] {
        require(ds, "ds");
        require(imagery_path, "imagery_path");
        require(out, "out");
        *out = nullptr;
        if (!ds->has_grid)
            throw favmap::InvalidArgument(
                "dataset was loaded without provenance; the tile grid is unknown");
        const favmap::Raster imagery = favmap::read_raster(imagery_path);
        std::vector<favmap::TileId> ids;
        for (const auto& t : ds->data.tiles)
            ids.push_back(t.id);
        *out = new favmap_features{
            favmap::extract_baseline(imagery, ds->data.provenance.grid, ids, threads)};
    });
}

favmap_status favmap_features_load(const char* path, favmap_features** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        *out = new favmap_features{favmap::load_embeddings(path)};
    });
}

favmap_status favmap_features_write(const favmap_features* fs, const char* path)
{
    return guarded([&] {
        require(fs, "fs");
        require(path, "path");
        favmap::write_embeddings(fs->set, path);
    });
}

size_t favmap_features_dimension(const favmap_features* fs)
{
    return fs ? fs->set.dimension() : 0;
}

size_t favmap_features_count(const favmap_features* fs)
{
    return fs ? fs->set.size() : 0;
}

void favmap_features_free(favmap_features* fs)
{
    delete fs;
}

favmap_status favmap_cv_run(const favmap_dataset* ds, const favmap_features* fs,
                            const favmap_cv_config* cfg, const char* method, unsigned threads,
                            favmap_report** out)
{
    return guarded([&] {
        require(ds, "ds");
        require(fs, "fs");
        require(out, "out");
        *out = nullptr;
        favmap::CvConfig c;
        if (cfg) {
            c.k = cfg->k;
            c.repeats = cfg->repeats;
            c.seed = cfg->seed;
            c.forest = to_forest(cfg->forest);
        }
        favmap::CvReport rep = favmap::run_cv(ds->data.tiles, fs->set, c, threads);
        if (method && *method)
            rep.method = method;
        *out = new favmap_report{std::move(rep)};
    });
}

favmap_status favmap_report_load(const char* path, favmap_report** out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        *out = new favmap_report{favmap::read_report_json(path)};
    });
}

favmap_status favmap_report_write_json(const favmap_report* report, const char* path)
{
    return guarded([&] {
        require(report, "report");
        require(path, "path");
        favmap::write_report_json(report->report, path);
    });
}

size_t favmap_report_rows(const favmap_report* report)
{
    return report ? report->report.rows.size() : 0;
}

favmap_status favmap_report_summary(const favmap_report* report, double out[6])
{
    return guarded([&] {
        require(report, "report");
        require(out, "out");
        const auto& s = report->report.summary;
        const double v[6] = {s.precision.mean, s.precision.std, s.recall.mean,
                             s.recall.std,     s.f1.mean,        s.f1.std};
        std::memcpy(out, v, sizeof v);
    });
}

favmap_status favmap_report_render(const favmap_report* const* reports, size_t n, int with_config,
                                   char* buf, size_t cap, size_t* needed)
{
    return guarded([&] {
        require(reports, "reports");
        if (n == 0)
            throw favmap::InvalidArgument("no reports to render");
        std::vector<favmap::CvReport> list;
        for (size_t i = 0; i < n; ++i) {
            require(reports[i], "reports[i]");
            list.push_back(reports[i]->report);
        }
        const std::string text = (with_config && n == 1) ? favmap::render_report_text(list[0])
                                                         : favmap::render_table(list);
        if (needed)
            *needed = text.size() + 1;
        if (buf == nullptr)
            return;
        if (cap < text.size() + 1)
            throw favmap::InvalidArgument("buffer too small: need " +
                                          std::to_string(text.size() + 1) + " bytes");
        std::memcpy(buf, text.c_str(), text.size() + 1);
    });
}

void favmap_report_free(favmap_report* report)
{
    delete report;
}

favmap_status favmap_forest_fit(const double* x, size_t n, size_t d, const int* y,
                                const favmap_forest_config* cfg, unsigned threads,
                                favmap_forest** out)
{
    return guarded([&] {
        require(x, "x");
        require(y, "y");
        require(out, "out");
        *out = nullptr;
        favmap::ForestConfig fc;
        if (cfg)
            fc = to_forest(*cfg);
        const favmap::Matrix m(n, d, std::vector<double>(x, x + n * d));
        *out = new favmap_forest{favmap::fit(m, std::span<const int>(y, n), fc, threads)};
    });
}

favmap_status favmap_forest_predict(const favmap_forest* forest, const double* x, size_t d,
                                    int* label, double* proba)
{
    return guarded([&] {
        require(forest, "forest");
        require(x, "x");
        const std::span<const double> row(x, d);
        if (label)
            *label = forest->forest.predict(row);
        if (proba)
            *proba = forest->forest.predict_proba(row);
    });
}

void favmap_forest_free(favmap_forest* forest)
{
    delete forest;
}

favmap_status favmap_coverage_proportion(const char* geojson, double min_x, double min_y,
                                         double max_x, double max_y, double* out)
{
    return guarded([&] {
        require(geojson, "geojson");
        require(out, "out");
        const favmap::MultiPolygon mp = favmap::parse_geojson_polygons(geojson);
        *out = favmap::coverage_proportion(mp, {min_x, min_y, max_x, max_y});
    });
}

} // extern "C"
