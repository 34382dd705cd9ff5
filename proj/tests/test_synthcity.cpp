#include "favmap/dataset.hpp"
#include "favmap/error.hpp"
#include "favmap/features.hpp"
#include "favmap/synthcity.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace favmap;

namespace {

struct Pipeline {
    LabeledDataset dataset;
    TileStats stats;
};

Pipeline run_pipeline(const Scenario& sc, unsigned threads = 1)
{
    Raster ndvi = sc.imagery;
    add_ndvi_band(ndvi);
    const MultiPolygon fav = sc.all_favelas();
    const StatsLayers layers{fav, ndvi, sc.buildings, sc.industrial};
    Pipeline p;
    p.stats = compute_tile_stats(sc.grid, layers, LabelRules{}, threads);
    p.dataset = build_dataset(sc.grid, layers, LabelRules{}, threads);
    return p;
}

std::size_t count(const std::vector<TileRecord>& v, Label l)
{
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [&](const TileRecord& t) { return t.label == l; }));
}

} // namespace

TEST_CASE("pipeline reproduces the generator's ground truth")
{
    for (std::uint64_t seed : {0ULL, 1ULL, 7ULL}) {
        ScenarioConfig cfg;
        cfg.seed = seed;
        const auto sc = generate(cfg);
        const auto p = run_pipeline(sc);
        REQUIRE(p.stats.records.size() == sc.truth.size());
        for (std::size_t i = 0; i < sc.truth.size(); ++i) {
            const auto& got = p.stats.records[i];
            const auto& want = sc.truth[i];
            REQUIRE(got.id == want.id);
            CHECK(got.favela_prop == want.favela_prop);
            CHECK(got.veg_prop == want.veg_prop);
            CHECK(got.building_prop == doctest::Approx(want.building_prop).epsilon(1e-6));
            CHECK(got.industrial == want.industrial);
        }
        CHECK(p.dataset.provenance.favela == count(sc.truth, Label::favela));
        CHECK(p.dataset.provenance.nonfavela == count(sc.truth, Label::nonfavela));
        CHECK(p.dataset.provenance.favela > 0);
        CHECK(p.dataset.provenance.removed > 0);
        CHECK(p.dataset.provenance.ambiguous > 0);
        CHECK(p.dataset.provenance.removed_industrial > 0);
        CHECK(p.dataset.provenance.removed_high_vegetation > 0);
        CHECK(p.dataset.provenance.removed_low_building > 0);
    }
}

TEST_CASE("favela rectangles are pixel snapped")
{
    const auto sc = generate(ScenarioConfig{});
    for (const auto& mp : sc.favelas)
        for (const auto& poly : mp.polygons)
            for (const auto& v : poly.exterior.vertices) {
                const double fx = (v.x - sc.imagery.origin_x) / sc.imagery.pixel_size;
                const double fy = (sc.imagery.origin_y - v.y) / sc.imagery.pixel_size;
                CHECK(fx == std::round(fx));
                CHECK(fy == std::round(fy));
            }
}

TEST_CASE("achieved imbalance stays within 20 percent of the target")
{
    for (double target : {10.0, 30.0, 50.0})
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            ScenarioConfig cfg;
            cfg.seed = seed;
            cfg.target_imbalance = target;
            const auto sc = generate(cfg);
            const double got = truth_imbalance(sc.truth);
            CHECK(got >= 0.8 * target);
            CHECK(got <= 1.2 * target);
        }
}

TEST_CASE("larger grid keeps the imbalance")
{
    ScenarioConfig cfg;
    cfg.extent.max_x = cfg.extent.min_x + 60 * 150.0;
    cfg.extent.max_y = cfg.extent.min_y + 40 * 150.0;
    cfg.n_favelas = 10;
    const auto sc = generate(cfg);
    const double got = truth_imbalance(sc.truth);
    CHECK(got == doctest::Approx(30.0).epsilon(0.2));
}

TEST_CASE("no favelas means no favela tiles")
{
    ScenarioConfig cfg;
    cfg.n_favelas = 0;
    const auto sc = generate(cfg);
    CHECK(count(sc.truth, Label::favela) == 0);
    CHECK(truth_imbalance(sc.truth) == 0.0);
}

TEST_CASE("configuration errors")
{
    ScenarioConfig cfg;
    cfg.favela_texture_std = cfg.formal_texture_std;
    CHECK_THROWS_AS(generate(cfg), InvalidArgument);
    cfg = ScenarioConfig{};
    cfg.target_imbalance = 0.5;
    CHECK_THROWS_AS(generate(cfg), InvalidArgument);
    cfg = ScenarioConfig{};
    cfg.extent.max_x = cfg.extent.min_x + 3 * 150.0;
    CHECK_THROWS_AS(generate(cfg), InvalidArgument);
    cfg = ScenarioConfig{};
    cfg.target_imbalance = 2000;
    CHECK_THROWS_AS(generate(cfg), DataError);
}

TEST_CASE("emit is deterministic and surfaces io errors")
{
    testsupport::TempDir dir("synth");
    ScenarioConfig cfg;
    cfg.seed = 7;
    emit(generate(cfg), dir / "a");
    emit(generate(cfg), dir / "b");
    for (const char* f : {"imagery.fgrid", "buildings.fgrid", "favelas.geojson",
                          "industrial.geojson", "truth.csv", "scenario.json"}) {
        const auto a = testsupport::slurp(dir / "a" / f);
        CHECK(!a.empty());
        CHECK(a == testsupport::slurp(dir / "b" / f));
    }
    cfg.seed = 8;
    emit(generate(cfg), dir / "c");
    CHECK(testsupport::slurp(dir / "a" / "imagery.fgrid") !=
          testsupport::slurp(dir / "c" / "imagery.fgrid"));

    std::ofstream(dir / "plainfile") << "x";
    CHECK_THROWS_AS(emit(generate(ScenarioConfig{}), dir / "plainfile" / "sub"), IoError);
}

TEST_CASE("emitted files feed the dataset build")
{
    testsupport::TempDir dir("synth-files");
    const auto sc = generate(ScenarioConfig{});
    emit(sc, dir.path());
    DatasetInputs in;
    in.imagery = dir / "imagery.fgrid";
    in.buildings = dir / "buildings.fgrid";
    in.favelas = dir / "favelas.geojson";
    in.industrial = dir / "industrial.geojson";
    const auto a = build_dataset_from_files(in, LabelRules{}, 1);
    const auto b = build_dataset_from_files(in, LabelRules{}, 3);
    CHECK(dataset_csv(a.tiles) == dataset_csv(b.tiles));
    CHECK(a.provenance.favela == count(sc.truth, Label::favela));
    CHECK(a.provenance.nonfavela == count(sc.truth, Label::nonfavela));
    const auto truth = read_truth_csv(dir / "truth.csv");
    REQUIRE(truth.size() == sc.truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(truth[i].label == sc.truth[i].label);
        CHECK(truth[i].favela_prop == sc.truth[i].favela_prop);
    }
}

TEST_CASE("texture std separates favela from formal tiles")
{
    const auto sc = generate(ScenarioConfig{});
    const auto p = run_pipeline(sc);
    std::vector<TileId> ids;
    for (const auto& t : p.dataset.tiles)
        ids.push_back(t.id);
    const auto fs = extract_baseline(sc.imagery, sc.grid, ids, 1);
    // red std is feature 1; compare class means
    double fav = 0, non = 0;
    std::size_t nf = 0, nn = 0;
    for (const auto& t : p.dataset.tiles) {
        const double s = (*fs.find(t.id))[1];
        if (t.label == Label::favela) {
            fav += s;
            ++nf;
        } else {
            non += s;
            ++nn;
        }
    }
    CHECK(fav / double(nf) > 1.5 * non / double(nn));
}
