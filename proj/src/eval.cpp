#include "favmap/eval.hpp"

#include "favmap/error.hpp"
#include "io.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace favmap {

using nlohmann::ordered_json;

void validate(const CvConfig& cfg)
{
    if (cfg.k < 2)
        throw InvalidArgument("k must be at least 2");
    if (cfg.repeats < 1)
        throw InvalidArgument("repeats must be at least 1");
}

Confusion confusion(std::span<const int> truth, std::span<const int> predicted)
{
    if (truth.size() != predicted.size())
        throw InvalidArgument("confusion: size mismatch");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i])
            (predicted[i] ? c.tp : c.fn) += 1;
        else
            (predicted[i] ? c.fp : c.tn) += 1;
    }
    return c;
}

Metrics metrics(const Confusion& c) noexcept
{
    auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    Metrics m;
    m.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
    m.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

MeanStd aggregate(std::span<const double> values)
{
    if (values.empty())
        throw InvalidArgument("aggregate of an empty sequence");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

std::vector<std::vector<std::size_t>> kfold_split(std::span<const std::size_t> ids, std::size_t k,
                                                  Rng& rng)
{
    if (k < 1)
        throw InvalidArgument("k must be positive");
    if (ids.size() < k)
        throw DataError("cannot split " + std::to_string(ids.size()) + " samples into " +
                        std::to_string(k) + " folds");
    std::vector<std::size_t> order(ids.begin(), ids.end());
    shuffle(std::span<std::size_t>(order), rng);

    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = order.size() / k, extra = order.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                        order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return folds;
}

std::vector<std::size_t> undersample(std::span<const std::size_t> fold,
                                     std::span<const int> labels, Rng& rng)
{
    std::vector<std::size_t> pos, neg;
    for (std::size_t id : fold)
        (labels[id] ? pos : neg).push_back(id);
    if (pos.empty() || neg.empty())
        throw DataError("fold of " + std::to_string(fold.size()) + " samples contains only " +
                        (pos.empty() ? "nonfavela" : "favela") +
                        " tiles; reseed or enlarge the dataset");
    if (pos.size() == neg.size())
        return {fold.begin(), fold.end()};

    std::vector<std::size_t>& majority = pos.size() > neg.size() ? pos : neg;
    const std::size_t keep = std::min(pos.size(), neg.size());
    shuffle(std::span<std::size_t>(majority), rng);
    std::vector<std::size_t> chosen(majority.begin(),
                                    majority.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(chosen.begin(), chosen.end());

    const int majority_label = pos.size() > neg.size() ? 1 : 0;
    std::vector<std::size_t> out;
    out.reserve(2 * keep);
    for (std::size_t id : fold)
        if (labels[id] != majority_label || std::binary_search(chosen.begin(), chosen.end(), id))
            out.push_back(id);
    return out;
}

std::uint64_t repeat_seed(const CvConfig& cfg, std::size_t repeat) noexcept
{
    return derive_seed(cfg.seed, repeat);
}

std::uint64_t cell_seed(const CvConfig& cfg, std::size_t repeat, std::size_t fold) noexcept
{
    // Stream 0 drives the fold split, streams 1..k the per-fold
    // undersampling, and stream k + 1 is the root of the forest seeds.
    return derive_seed(derive_seed(repeat_seed(cfg, repeat), cfg.k + 1), fold);
}

std::vector<std::vector<std::size_t>> balanced_folds(std::span<const int> y, const CvConfig& cfg,
                                                     std::size_t repeat)
{
    validate(cfg);
    const std::uint64_t base = repeat_seed(cfg, repeat);
    std::vector<std::size_t> ids(y.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});

    Rng split_rng(derive_seed(base, 0));
    auto folds = kfold_split(ids, cfg.k, split_rng);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        Rng rng(derive_seed(base, 1 + f));
        try {
            folds[f] = undersample(folds[f], y, rng);
        } catch (const DataError& e) {
            throw DataError("repeat " + std::to_string(repeat) + " fold " + std::to_string(f) +
                            ": " + e.what());
        }
    }
    return folds;
}

CvRow evaluate_cell(const Matrix& x, std::span<const int> y,
                    const std::vector<std::vector<std::size_t>>& folds, const CvConfig& cfg,
                    std::size_t repeat, std::size_t fold, unsigned threads)
{
    std::size_t n_train = 0;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != fold)
            n_train += folds[f].size();

    Matrix train_x(n_train, x.cols());
    std::vector<int> train_y;
    train_y.reserve(n_train);
    std::size_t r = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f == fold)
            continue;
        for (std::size_t id : folds[f]) {
            const auto src = x.row(id);
            std::copy(src.begin(), src.end(), train_x.row(r++).begin());
            train_y.push_back(y[id]);
        }
    }

    ForestConfig fc = cfg.forest;
    fc.seed = cell_seed(cfg, repeat, fold);
    CvRow row;
    row.repeat = repeat;
    row.fold = fold;
    try {
        const Forest forest = fit(train_x, train_y, fc, threads);
        std::vector<int> truth, predicted;
        for (std::size_t id : folds[fold]) {
            truth.push_back(y[id]);
            predicted.push_back(forest.predict(x.row(id)));
        }
        row.confusion = confusion(truth, predicted);
    } catch (const Error& e) {
        throw DataError("repeat " + std::to_string(repeat) + " fold " + std::to_string(fold) +
                        ": " + e.what());
    }
    row.metrics = metrics(row.confusion);
    row.n_train = n_train;
    row.n_test = folds[fold].size();
    return row;
}

CvSummary summarize(std::span<const CvRow> rows)
{
    std::vector<double> p, r, f;
    for (const CvRow& row : rows) {
        p.push_back(row.metrics.precision);
        r.push_back(row.metrics.recall);
        f.push_back(row.metrics.f1);
    }
    return {aggregate(p), aggregate(r), aggregate(f)};
}

CvReport run_cv(const DesignMatrix& data, const CvConfig& cfg, unsigned threads)
{
    validate(cfg);
    validate(cfg.forest, data.x.cols());
    const std::span<const int> y(data.y);

    CvReport report;
    report.config = cfg;
    report.n_samples = y.size();
    report.n_favela = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    report.n_nonfavela = report.n_samples - report.n_favela;
    report.dimension = data.x.cols();
    if (report.n_favela == 0 || report.n_nonfavela == 0)
        throw DataError("cross-validation needs both favela and nonfavela tiles (got " +
                        std::to_string(report.n_favela) + " favela, " +
                        std::to_string(report.n_nonfavela) + " nonfavela)");

    std::vector<std::vector<std::vector<std::size_t>>> plans;
    plans.reserve(cfg.repeats);
    for (std::size_t r = 0; r < cfg.repeats; ++r)
        plans.push_back(balanced_folds(y, cfg, r));

    report.rows.resize(cfg.repeats * cfg.k);
    detail::parallel_for(report.rows.size(), threads, [&](std::size_t cell) {
        const std::size_t r = cell / cfg.k, f = cell % cfg.k;
        report.rows[cell] = evaluate_cell(data.x, y, plans[r], cfg, r, f, 1);
    });

    report.summary = summarize(report.rows);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const CvSummary s =
            summarize(std::span<const CvRow>(report.rows).subspan(r * cfg.k, cfg.k));
        report.per_repeat_means.push_back({s.precision.mean, s.recall.mean, s.f1.mean});
    }
    return report;
}

CvReport run_cv(const std::vector<TileRecord>& tiles, const FeatureSet& features,
                const CvConfig& cfg, unsigned threads)
{
    CvReport report = run_cv(assemble(tiles, features), cfg, threads);
    report.feature_source = features.source();
    report.method = features.source();
    return report;
}

namespace {

ordered_json metrics_json(const Metrics& m)
{
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

Metrics metrics_from(const ordered_json& j)
{
    return {j.at("precision").get<double>(), j.at("recall").get<double>(),
            j.at("f1").get<double>()};
}

ordered_json mean_std_json(const MeanStd& v)
{
    return {{"mean", v.mean}, {"std", v.std}};
}

MeanStd mean_std_from(const ordered_json& j)
{
    return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

} // namespace

std::string report_json(const CvReport& rep)
{
    ordered_json j;
    j["method"] = rep.method;
    j["feature_source"] = rep.feature_source;
    const ForestConfig& fc = rep.config.forest;
    j["config"] = {
        {"k", rep.config.k},
        {"repeats", rep.config.repeats},
        {"seed", rep.config.seed},
        {"forest",
         {{"n_trees", fc.n_trees},
          {"max_features", effective_max_features(fc, std::max<std::size_t>(rep.dimension, 1))},
          {"min_samples_leaf", fc.min_samples_leaf},
          {"max_depth", fc.max_depth ? ordered_json(*fc.max_depth) : ordered_json()},
          {"bootstrap", fc.bootstrap}}}};
    j["data"] = {{"n_samples", rep.n_samples},
                 {"n_favela", rep.n_favela},
                 {"n_nonfavela", rep.n_nonfavela},
                 {"dimension", rep.dimension}};
    j["rows"] = ordered_json::array();
    for (const CvRow& r : rep.rows)
        j["rows"].push_back({{"repeat", r.repeat},
                             {"fold", r.fold},
                             {"tp", r.confusion.tp},
                             {"fp", r.confusion.fp},
                             {"fn", r.confusion.fn},
                             {"tn", r.confusion.tn},
                             {"n_train", r.n_train},
                             {"n_test", r.n_test},
                             {"precision", r.metrics.precision},
                             {"recall", r.metrics.recall},
                             {"f1", r.metrics.f1}});
    j["summary"] = {{"precision", mean_std_json(rep.summary.precision)},
                    {"recall", mean_std_json(rep.summary.recall)},
                    {"f1", mean_std_json(rep.summary.f1)}};
    j["per_repeat_means"] = ordered_json::array();
    for (const Metrics& m : rep.per_repeat_means)
        j["per_repeat_means"].push_back(metrics_json(m));
    return j.dump(2) + "\n";
}

CvReport parse_report_json(std::string_view text)
{
    try {
        const auto j = ordered_json::parse(text);
        CvReport rep;
        rep.method = j.at("method").get<std::string>();
        rep.feature_source = j.at("feature_source").get<std::string>();
        const auto& c = j.at("config");
        rep.config.k = c.at("k").get<std::size_t>();
        rep.config.repeats = c.at("repeats").get<std::size_t>();
        rep.config.seed = c.at("seed").get<std::uint64_t>();
        const auto& f = c.at("forest");
        rep.config.forest.n_trees = f.at("n_trees").get<std::size_t>();
        rep.config.forest.max_features = f.at("max_features").get<std::size_t>();
        rep.config.forest.min_samples_leaf = f.at("min_samples_leaf").get<std::size_t>();
        if (!f.at("max_depth").is_null())
            rep.config.forest.max_depth = f.at("max_depth").get<std::size_t>();
        rep.config.forest.bootstrap = f.at("bootstrap").get<bool>();
        const auto& d = j.at("data");
        rep.n_samples = d.at("n_samples").get<std::size_t>();
        rep.n_favela = d.at("n_favela").get<std::size_t>();
        rep.n_nonfavela = d.at("n_nonfavela").get<std::size_t>();
        rep.dimension = d.at("dimension").get<std::size_t>();
        for (const auto& r : j.at("rows")) {
            CvRow row;
            row.repeat = r.at("repeat").get<std::size_t>();
            row.fold = r.at("fold").get<std::size_t>();
            row.confusion = {r.at("tp").get<std::size_t>(), r.at("fp").get<std::size_t>(),
                             r.at("fn").get<std::size_t>(), r.at("tn").get<std::size_t>()};
            row.n_train = r.at("n_train").get<std::size_t>();
            row.n_test = r.at("n_test").get<std::size_t>();
            row.metrics = metrics_from(r);
            rep.rows.push_back(row);
        }
        const auto& s = j.at("summary");
        rep.summary = {mean_std_from(s.at("precision")), mean_std_from(s.at("recall")),
                       mean_std_from(s.at("f1"))};
        for (const auto& m : j.at("per_repeat_means"))
            rep.per_repeat_means.push_back(metrics_from(m));
        return rep;
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("malformed report JSON: ") + e.what());
    }
}

void write_report_json(const CvReport& report, const std::filesystem::path& path)
{
    detail::write_text_file(path, report_json(report));
}

CvReport read_report_json(const std::filesystem::path& path)
{
    const std::string text = detail::read_text_file(path);
    try {
        return parse_report_json(text);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_mean_std(const MeanStd& v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", v.mean, v.std);
    return buf;
}

std::string render_table(std::span<const CvReport> reports)
{
    std::string out = "Method | Precision | Recall | F1-score\n";
    for (const CvReport& r : reports)
        out += (r.method.empty() ? std::string("-") : r.method) + " | " +
               format_mean_std(r.summary.precision) + " | " + format_mean_std(r.summary.recall) +
               " | " + format_mean_std(r.summary.f1) + "\n";
    return out;
}

std::string render_report_text(const CvReport& r)
{
    std::string out = render_table(std::span<const CvReport>(&r, 1));
    const ForestConfig& fc = r.config.forest;
    out += "\n";
    out += "values: " + std::to_string(r.rows.size()) + " (" + std::to_string(r.config.repeats) +
           " x " + std::to_string(r.config.k) + "-fold)\n";
    out += "seed: " + std::to_string(r.config.seed) + "\n";
    out += "forest: n_trees=" + std::to_string(fc.n_trees) +
           " max_features=" +
           std::to_string(effective_max_features(fc, std::max<std::size_t>(r.dimension, 1))) +
           " min_samples_leaf=" + std::to_string(fc.min_samples_leaf) + " max_depth=" +
           (fc.max_depth ? std::to_string(*fc.max_depth) : std::string("none")) +
           " bootstrap=" + (fc.bootstrap ? "true" : "false") + "\n";
    out += "data: " + std::to_string(r.n_samples) + " tiles (" + std::to_string(r.n_favela) +
           " favela, " + std::to_string(r.n_nonfavela) + " nonfavela), dimension " +
           std::to_string(r.dimension) + ", features " + r.feature_source + "\n";
    return out;
}

} // namespace favmap
