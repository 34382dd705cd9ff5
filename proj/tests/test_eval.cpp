#include "favmap/error.hpp"
#include "favmap/eval.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>
#include <set>

using namespace favmap;

namespace {

std::vector<std::size_t> iota_ids(std::size_t n)
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// n samples, every ratio-th one positive, feature 0 informative.
DesignMatrix toy(std::size_t n, std::size_t ratio, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::normal_distribution<double> nd(0, 1);
    DesignMatrix dm;
    dm.x = Matrix(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = (i % ratio == 0) ? 1 : 0;
        dm.y.push_back(y);
        dm.ids.push_back({i / 50, i % 50});
        dm.x(i, 0) = nd(g) + (y ? 2.0 : 0.0);
        dm.x(i, 1) = nd(g);
        dm.x(i, 2) = nd(g);
    }
    return dm;
}

} // namespace

TEST_CASE("kfold_split sizes and partition")
{
    Rng rng(1);
    const auto ids = iota_ids(103);
    const auto folds = kfold_split(ids, 5, rng);
    REQUIRE(folds.size() == 5);
    const std::vector<std::size_t> sizes{21, 21, 21, 20, 20};
    std::set<std::size_t> seen;
    for (std::size_t f = 0; f < 5; ++f) {
        CHECK(folds[f].size() == sizes[f]);
        for (auto id : folds[f])
            CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 103);

    Rng r2(1);
    CHECK(kfold_split(ids, 5, r2) == folds);

    Rng r3(2);
    const auto five = kfold_split(iota_ids(5), 5, r3);
    for (const auto& f : five)
        CHECK(f.size() == 1);

    Rng r4(3);
    CHECK_THROWS_AS(kfold_split(iota_ids(4), 5, r4), DataError);
}

TEST_CASE("undersample examples")
{
    std::vector<int> labels(310, 0);
    for (std::size_t i = 0; i < 10; ++i)
        labels[i * 31] = 1;
    const auto ids = iota_ids(310);
    Rng rng(4);
    const auto bal = undersample(ids, labels, rng);
    CHECK(bal.size() == 20);
    std::size_t pos = 0;
    for (auto id : bal)
        pos += static_cast<std::size_t>(labels[id]);
    CHECK(pos == 10);
    CHECK(std::is_sorted(bal.begin(), bal.end()));

    std::vector<int> even(14, 0);
    for (std::size_t i = 0; i < 7; ++i)
        even[i * 2] = 1;
    const auto all14 = iota_ids(14);
    CHECK(undersample(all14, even, rng) == all14);

    const std::vector<int> two{1, 0};
    CHECK(undersample(iota_ids(2), two, rng).size() == 2);

    const std::vector<int> one_class{0, 0, 0};
    try {
        undersample(iota_ids(3), one_class, rng);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("reseed") != std::string::npos);
    }
}

TEST_CASE("metrics examples")
{
    auto m = metrics(Confusion{8, 2, 2, 0});
    CHECK(m.precision == doctest::Approx(0.8));
    CHECK(m.recall == doctest::Approx(0.8));
    CHECK(m.f1 == doctest::Approx(0.8));
    auto z = metrics(Confusion{0, 0, 5, 3});
    CHECK(z.precision == 0.0);
    CHECK(z.recall == 0.0);
    CHECK(z.f1 == 0.0);
    CHECK(metrics(Confusion{}).f1 == 0.0);
    for (std::size_t tp = 1; tp < 20; ++tp) {
        const auto e = metrics(Confusion{tp, 3, 3, 1});
        CHECK(e.f1 == doctest::Approx(e.precision));
    }
}

TEST_CASE("confusion matches a direct count")
{
    std::mt19937_64 g(5);
    for (int t = 0; t < 200; ++t) {
        std::vector<int> truth(50), pred(50);
        for (std::size_t i = 0; i < 50; ++i) {
            truth[i] = int(g() % 2);
            pred[i] = int(g() % 2);
        }
        const auto c = confusion(truth, pred);
        const auto o = testsupport::count_confusion(truth, pred);
        CHECK(c.tp == o.tp);
        CHECK(c.fp == o.fp);
        CHECK(c.fn == o.fn);
        CHECK(c.tn == o.tn);
    }
}

TEST_CASE("aggregate examples")
{
    const std::vector<double> ones{1, 1, 1};
    CHECK(aggregate(ones).mean == 1.0);
    CHECK(aggregate(ones).std == 0.0);
    const std::vector<double> zo{0, 1};
    CHECK(aggregate(zo).mean == 0.5);
    CHECK(aggregate(zo).std == doctest::Approx(0.70710678118654757));
    const std::vector<double> same(25, 0.81);
    CHECK(aggregate(same).std == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> single{0.3};
    CHECK(aggregate(single).std == 0.0);
    CHECK_THROWS_AS(aggregate(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("four-sample two-fold run is hand-checkable")
{
    // Search a seed whose folds each hold one sample of each class, then
    // compare with the nearest-midpoint rule a single stump must learn.
    DesignMatrix dm;
    dm.x = Matrix(4, 1, {0.0, 3.0, 2.0, 5.0});
    dm.y = {0, 1, 0, 1};
    dm.ids = {{0, 0}, {0, 1}, {0, 2}, {0, 3}};
    CvConfig cfg;
    cfg.k = 2;
    cfg.repeats = 1;
    cfg.forest.n_trees = 1;
    cfg.forest.bootstrap = false;
    cfg.forest.max_features = 1;
    std::optional<CvReport> rep;
    for (cfg.seed = 0; cfg.seed < 50 && !rep; ++cfg.seed) {
        try {
            rep = run_cv(dm, cfg, 1);
        } catch (const DataError&) {
        }
    }
    REQUIRE(rep);
    REQUIRE(rep->rows.size() == 2);
    --cfg.seed;
    const auto folds = balanced_folds(dm.y, cfg, 0);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto& train = folds[1 - f];
        double neg = 0, pos = 0;
        for (auto id : train)
            (dm.y[id] ? pos : neg) = dm.x(id, 0);
        const double t = (neg + pos) / 2;
        std::vector<int> truth, pred;
        for (auto id : folds[f]) {
            truth.push_back(dm.y[id]);
            const bool above = dm.x(id, 0) > t;
            pred.push_back((pos > neg) == above ? 1 : 0);
        }
        const auto o = testsupport::count_confusion(truth, pred);
        const auto& row = rep->rows[f];
        CHECK(row.n_train == 2);
        CHECK(row.n_test == 2);
        CHECK(row.confusion.tp == o.tp);
        CHECK(row.confusion.fp == o.fp);
        CHECK(row.confusion.fn == o.fn);
        CHECK(row.confusion.tn == o.tn);
    }
}

TEST_CASE("run_cv protocol shape and balance")
{
    const auto dm = toy(620, 31, 1);
    CvConfig cfg;
    cfg.forest.n_trees = 15;
    cfg.seed = 3;
    const auto rep = run_cv(dm, cfg, 2);
    REQUIRE(rep.rows.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
        CHECK(rep.rows[i].repeat == i / 5);
        CHECK(rep.rows[i].fold == i % 5);
    }
    std::vector<double> f1;
    for (const auto& r : rep.rows)
        f1.push_back(r.metrics.f1);
    const auto [m, s] = testsupport::mean_std(f1);
    CHECK(std::abs(rep.summary.f1.mean - m) < 1e-12);
    CHECK(std::abs(rep.summary.f1.std - s) < 1e-12);
    CHECK(rep.per_repeat_means.size() == 5);

    for (std::size_t r = 0; r < 5; ++r) {
        const auto folds = balanced_folds(dm.y, cfg, r);
        std::set<std::size_t> seen;
        for (const auto& fold : folds) {
            std::size_t pos = 0;
            for (auto id : fold) {
                pos += static_cast<std::size_t>(dm.y[id]);
                CHECK(seen.insert(id).second);
            }
            CHECK(2 * pos == fold.size());
        }
        std::size_t all_pos = 0;
        for (auto id : seen)
            all_pos += static_cast<std::size_t>(dm.y[id]);
        CHECK(all_pos == 20);
    }
}

TEST_CASE("run_cv is deterministic, thread invariant and cells are reproducible alone")
{
    const auto dm = toy(400, 10, 2);
    CvConfig cfg;
    cfg.forest.n_trees = 10;
    cfg.repeats = 2;
    cfg.seed = 11;
    const auto a = run_cv(dm, cfg, 1);
    const auto b = run_cv(dm, cfg, 4);
    CHECK(report_json(a) == report_json(b));
    const auto folds = balanced_folds(dm.y, cfg, 1);
    const auto cell = evaluate_cell(dm.x, dm.y, folds, cfg, 1, 3, 1);
    CHECK(cell.confusion == a.rows[8].confusion);
}

TEST_CASE("run_cv cells agree with a brute-force confusion recount")
{
    const auto dm = toy(300, 6, 3);
    CvConfig cfg;
    cfg.forest.n_trees = 9;
    cfg.repeats = 2;
    const auto rep = run_cv(dm, cfg, 1);
    for (const auto& row : rep.rows) {
        const auto folds = balanced_folds(dm.y, cfg, row.repeat);
        std::vector<std::size_t> train_ids;
        for (std::size_t f = 0; f < folds.size(); ++f)
            if (f != row.fold)
                train_ids.insert(train_ids.end(), folds[f].begin(), folds[f].end());
        Matrix tx(train_ids.size(), dm.x.cols());
        std::vector<int> ty;
        for (std::size_t i = 0; i < train_ids.size(); ++i) {
            for (std::size_t j = 0; j < dm.x.cols(); ++j)
                tx(i, j) = dm.x(train_ids[i], j);
            ty.push_back(dm.y[train_ids[i]]);
        }
        ForestConfig fc = cfg.forest;
        fc.seed = cell_seed(cfg, row.repeat, row.fold);
        const auto forest = fit(tx, ty, fc, 1);
        std::vector<int> truth, pred;
        for (auto id : folds[row.fold]) {
            truth.push_back(dm.y[id]);
            pred.push_back(forest.predict(dm.x.row(id)));
        }
        const auto o = testsupport::count_confusion(truth, pred);
        CHECK(row.confusion.tp == o.tp);
        CHECK(row.confusion.fp == o.fp);
        CHECK(row.confusion.fn == o.fn);
        CHECK(row.confusion.tn == o.tn);
        const double p = testsupport::safe_div(o.tp, o.tp + o.fp);
        const double r = testsupport::safe_div(o.tp, o.tp + o.fn);
        CHECK(row.metrics.precision == doctest::Approx(p).epsilon(1e-15));
        CHECK(row.metrics.recall == doctest::Approx(r).epsilon(1e-15));
        CHECK(row.metrics.f1 == doctest::Approx(testsupport::safe_div(2 * p * r, p + r)).epsilon(1e-15));
    }
}

TEST_CASE("single-class folds surface as errors with context")
{
    const auto dm = toy(40, 20, 4); // two positives, five folds
    try {
        run_cv(dm, CvConfig{}, 1);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("repeat") != std::string::npos);
    }
}

TEST_CASE("report json round trip and table rendering")
{
    const auto dm = toy(200, 4, 5);
    CvConfig cfg;
    cfg.forest.n_trees = 5;
    cfg.forest.max_depth = 6;
    cfg.repeats = 1;
    auto rep = run_cv(dm, cfg, 1);
    rep.method = "CROMA";
    const auto back = parse_report_json(report_json(rep));
    CHECK(report_json(back) == report_json(rep));
    CHECK(back.config.forest.max_depth == std::optional<std::size_t>(6));
    CHECK(back.rows.size() == 5);

    CHECK(format_mean_std(MeanStd{0.8125, 0.031}) == "0.81 ± 0.03");
    CHECK(format_mean_std(MeanStd{1.0, 0.0}) == "1.00 ± 0.00");
    const std::vector<CvReport> reps{rep, rep};
    const auto table = render_table(reps);
    CHECK(table.rfind("Method | Precision | Recall | F1-score\n", 0) == 0);
    CHECK(table.find("CROMA | ") != std::string::npos);
    const auto text = render_report_text(rep);
    CHECK(text.find("n_trees=5") != std::string::npos);
    CHECK_THROWS_AS(parse_report_json("{}"), DataError);
}

TEST_CASE("cv config validation")
{
    CvConfig c;
    c.k = 1;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
    c = CvConfig{};
    c.repeats = 0;
    CHECK_THROWS_AS(validate(c), InvalidArgument);
}
