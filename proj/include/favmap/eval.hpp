#pragma once

#include "favmap/dataset.hpp"
#include "favmap/features.hpp"
#include "favmap/forest.hpp"
#include "favmap/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace favmap {

struct CvConfig {
    std::size_t k = 5;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    ForestConfig forest;
};

void validate(const CvConfig& cfg);

/// Positive class is favela (label 1).
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion(std::span<const int> truth, std::span<const int> predicted);

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R); each is 0
/// when its denominator is 0.
Metrics metrics(const Confusion& c) noexcept;

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Arithmetic mean and sample standard deviation (n - 1 denominator; 0 for
/// a single value). Throws InvalidArgument on empty input.
MeanStd aggregate(std::span<const double> values);

/// Random partition of ids into k folds whose sizes differ by at most one
/// (the first |ids| mod k folds get the extra element).
std::vector<std::vector<std::size_t>> kfold_split(std::span<const std::size_t> ids, std::size_t k,
                                                  Rng& rng);

/// All minority-class members of `fold` plus an equally sized uniform draw
/// from the majority class, in the fold's original order. labels[id] is 0/1.
/// Throws DataError if the fold holds a single class.
std::vector<std::size_t> undersample(std::span<const std::size_t> fold,
                                     std::span<const int> labels, Rng& rng);

struct CvRow {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    Confusion confusion;
    Metrics metrics;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

struct CvSummary {
    MeanStd precision;
    MeanStd recall;
    MeanStd f1;
};

struct CvReport {
    std::string method;
    std::string feature_source;
    CvConfig config;
    std::size_t n_samples = 0;
    std::size_t n_favela = 0;
    std::size_t n_nonfavela = 0;
    std::size_t dimension = 0;
    std::vector<CvRow> rows;              // ordered by (repeat, fold)
    CvSummary summary;                    // over all rows
    std::vector<Metrics> per_repeat_means; // supplementary
};

/// Seed of repeat r's stream; folds, undersampling and forests of that
/// repeat are derived from it.
std::uint64_t repeat_seed(const CvConfig& cfg, std::size_t repeat) noexcept;
/// Forest seed for cell (repeat, fold).
std::uint64_t cell_seed(const CvConfig& cfg, std::size_t repeat, std::size_t fold) noexcept;

/// Splits rows [0, y.size()) into k folds for the given repeat, then
/// balances each fold by undersampling.
std::vector<std::vector<std::size_t>> balanced_folds(std::span<const int> y, const CvConfig& cfg,
                                                     std::size_t repeat);

/// Trains a fresh forest on every balanced fold except `fold` and scores it
/// on `fold`.
CvRow evaluate_cell(const Matrix& x, std::span<const int> y,
                    const std::vector<std::vector<std::size_t>>& folds, const CvConfig& cfg,
                    std::size_t repeat, std::size_t fold, unsigned threads = 1);

CvSummary summarize(std::span<const CvRow> rows);

/// Repeated balanced k-fold cross-validation. Cells run in parallel on
/// `threads` workers (0 = all cores); the report does not depend on it.
CvReport run_cv(const DesignMatrix& data, const CvConfig& cfg, unsigned threads = 0);
CvReport run_cv(const std::vector<TileRecord>& tiles, const FeatureSet& features,
                const CvConfig& cfg, unsigned threads = 0);

std::string report_json(const CvReport& report);
CvReport parse_report_json(std::string_view text);
void write_report_json(const CvReport& report, const std::filesystem::path& path);
CvReport read_report_json(const std::filesystem::path& path);

/// "0.81 ± 0.03"
std::string format_mean_std(const MeanStd& v);

/// Method | Precision | Recall | F1-score table, one line per report.
std::string render_table(std::span<const CvReport> reports);

/// Table followed by the effective configuration.
std::string render_report_text(const CvReport& report);

} // namespace favmap
