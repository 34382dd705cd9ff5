#pragma once
// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library code under test.

#include "favmap/geom.hpp"
#include "favmap/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

// Fraction of an n x n lattice of subpixel centers inside rect that lie
// inside the polygon rings (even-odd rule over all rings, so holes count out).
inline double subpixel_coverage(const std::vector<std::vector<favmap::Point>>& rings,
                                const favmap::Rect& rect, int n = 2048)
{
    const double dx = rect.width() / n, dy = rect.height() / n;
    std::size_t inside = 0;
    std::vector<double> xs;
    for (int r = 0; r < n; ++r) {
        const double y = rect.min_y + (r + 0.5) * dy;
        xs.clear();
        for (const auto& ring : rings) {
            const std::size_t m = ring.size();
            for (std::size_t i = 0; i < m; ++i) {
                const auto& a = ring[i];
                const auto& b = ring[(i + 1) % m];
                if ((a.y > y) != (b.y > y))
                    xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            // subpixel c has center rect.min_x + (c + 0.5) dx; count c with center in [x0, x1)
            const double c0 = std::ceil((xs[i] - rect.min_x) / dx - 0.5);
            const double c1 = std::ceil((xs[i + 1] - rect.min_x) / dx - 0.5);
            const double lo = std::clamp(c0, 0.0, double(n));
            const double hi = std::clamp(c1, 0.0, double(n));
            if (hi > lo)
                inside += static_cast<std::size_t>(hi - lo);
        }
    }
    return static_cast<double>(inside) / (double(n) * double(n));
}

inline std::vector<std::vector<favmap::Point>> rings_of(const favmap::MultiPolygon& mp)
{
    std::vector<std::vector<favmap::Point>> out;
    for (const auto& p : mp.polygons) {
        out.push_back(p.exterior.vertices);
        for (const auto& h : p.holes)
            out.push_back(h.vertices);
    }
    return out;
}

inline favmap::MultiPolygon single(std::vector<favmap::Point> exterior,
                                   std::vector<std::vector<favmap::Point>> holes = {})
{
    favmap::Polygon poly;
    poly.exterior.vertices = std::move(exterior);
    for (auto& h : holes)
        poly.holes.push_back({std::move(h)});
    favmap::MultiPolygon mp;
    mp.polygons.push_back(std::move(poly));
    return mp;
}

// Convex polygon: sorted random angles on a circle placed to straddle the rect.
inline std::vector<favmap::Point> random_convex(std::mt19937_64& g, const favmap::Rect& rect)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cx = rect.min_x + (u(g) * 1.6 - 0.3) * rect.width();
    const double cy = rect.min_y + (u(g) * 1.6 - 0.3) * rect.height();
    const double rad = (0.1 + u(g)) * rect.width();
    const int m = 3 + static_cast<int>(u(g) * 12);
    std::vector<double> ang(m);
    for (double& a : ang)
        a = u(g) * 2 * std::numbers::pi;
    std::sort(ang.begin(), ang.end());
    ang.erase(std::unique(ang.begin(), ang.end()), ang.end());
    std::vector<favmap::Point> pts;
    for (double a : ang)
        pts.push_back({cx + rad * std::cos(a), cy + rad * std::sin(a)});
    return pts;
}

// Star-shaped (generally concave) polygon with an optional square hole
// inside its inner radius.
inline favmap::MultiPolygon random_concave(std::mt19937_64& g, const favmap::Rect& rect,
                                           bool with_hole)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cx = rect.min_x + (0.1 + u(g) * 0.8) * rect.width();
    const double cy = rect.min_y + (0.1 + u(g) * 0.8) * rect.height();
    const double r_in = (0.1 + 0.2 * u(g)) * rect.width();
    const double r_out = r_in + (0.2 + 0.6 * u(g)) * rect.width();
    const int m = 6 + static_cast<int>(u(g) * 14);
    std::vector<favmap::Point> pts;
    for (int i = 0; i < m; ++i) {
        const double a = (i + 0.3 * u(g)) * 2 * std::numbers::pi / m;
        const double r = (i % 2 == 0) ? r_out * (0.7 + 0.3 * u(g)) : r_in * (0.8 + 0.2 * u(g));
        pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    std::vector<std::vector<favmap::Point>> holes;
    if (with_hole) {
        const double h = 0.4 * r_in;
        holes.push_back({{cx - h, cy - h}, {cx - h, cy + h}, {cx + h, cy + h}, {cx + h, cy - h}});
    }
    return single(std::move(pts), std::move(holes));
}

inline double gini_oracle(double neg, double pos)
{
    const double n = neg + pos;
    return 1.0 - (neg / n) * (neg / n) - (pos / n) * (pos / n);
}

struct SplitOracle {
    std::size_t feature;
    double threshold;
    double gain;
};

// Enumerates every (feature, midpoint) pair, counting each child directly.
inline std::vector<SplitOracle> all_splits(const favmap::Matrix& x, const std::vector<int>& y,
                                           const std::vector<std::size_t>& samples,
                                           std::size_t min_leaf = 1)
{
    std::vector<SplitOracle> all;
    double neg = 0, pos = 0;
    if (samples.empty())
        return all;
    for (auto s : samples)
        (y[s] ? pos : neg) += 1;
    const double parent = gini_oracle(neg, pos);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> v;
        for (auto s : samples)
            v.push_back(x(s, f));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            const double t = (v[i] + v[i + 1]) / 2;
            double ln = 0, lp = 0, rn = 0, rp = 0;
            for (auto s : samples) {
                const bool left = x(s, f) <= t;
                (left ? (y[s] ? lp : ln) : (y[s] ? rp : rn)) += 1;
            }
            if (ln + lp < double(min_leaf) || rn + rp < double(min_leaf))
                continue;
            const double n = neg + pos;
            const double g = parent - (ln + lp) / n * gini_oracle(ln, lp) -
                             (rn + rp) / n * gini_oracle(rn, rp);
            all.push_back({f, t, g});
        }
    }
    return all;
}

inline std::optional<SplitOracle> brute_force_split(const favmap::Matrix& x,
                                                    const std::vector<int>& y,
                                                    const std::vector<std::size_t>& samples,
                                                    std::size_t min_leaf = 1)
{
    const auto all = all_splits(x, y, samples, min_leaf);
    if (all.empty())
        return std::nullopt;
    double best = -1;
    for (const auto& s : all)
        best = std::max(best, s.gain);
    if (best <= 1e-12)
        return std::nullopt;
    std::optional<SplitOracle> pick;
    for (const auto& s : all)
        if (s.gain >= best - 1e-12 &&
            (!pick || s.feature < pick->feature ||
             (s.feature == pick->feature && s.threshold < pick->threshold)))
            pick = s;
    return pick;
}

struct ConfusionOracle {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ConfusionOracle count_confusion(const std::vector<int>& truth, const std::vector<int>& pred)
{
    ConfusionOracle c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1 && pred[i] == 1)
            ++c.tp;
        else if (truth[i] == 0 && pred[i] == 1)
            ++c.fp;
        else if (truth[i] == 1 && pred[i] == 0)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

inline double safe_div(double a, double b) { return b == 0 ? 0.0 : a / b; }

// Two-pass mean and sample standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& v)
{
    double sum = 0;
    for (double x : v)
        sum += x;
    const double mean = sum / double(v.size());
    if (v.size() < 2)
        return {mean, 0.0};
    double ss = 0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / double(v.size() - 1))};
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::mt19937_64 g{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("favmap-" + tag + "-" + std::to_string(g()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

} // namespace testsupport
