#pragma once

// Observables computed from an ensemble: consecutive-day queue-length ratios,
// binned densities, log-log tail slopes, KS distance to Uniform(0,1) and plain
// sample summaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "urn/core.hpp"
#include "urn/errors.hpp"

namespace urn {

enum class Side { A, B };

// ---------------------------------------------------------------------------
// Queue-length ratios

struct RatioSeries {
    std::vector<double> ratios;
    // Pairs dropped because the next day's queue was empty.
    std::size_t skipped = 0;
};

// L_i = Q_{side,i} / Q_{side,i+1} for consecutive days. A zero denominator
// drops the pair (counted in `skipped`); a zero numerator yields ratio 0.
inline RatioSeries queue_ratio_series(std::span<const DayResult> days, Side side) {
    if (days.size() < 2) {
        throw ContractViolation("queue ratios need at least two days");
    }
    auto queue = [side](const DayResult& d) { return side == Side::A ? d.q_a : d.q_b; };
    RatioSeries out;
    out.ratios.reserve(days.size() - 1);
    for (std::size_t i = 0; i + 1 < days.size(); ++i) {
        const std::uint64_t den = queue(days[i + 1]);
        if (den == 0) {
            ++out.skipped;
            continue;
        }
        out.ratios.push_back(static_cast<double>(queue(days[i])) / static_cast<double>(den));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Histograms

struct Binning {
    enum class Kind { Linear, Logarithmic };

    Kind kind = Kind::Linear;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n_bins = 10;

    static Binning linear(double lo, double hi, std::size_t n) { return {Kind::Linear, lo, hi, n}; }
    static Binning logarithmic(double lo, double hi, std::size_t n) { return {Kind::Logarithmic, lo, hi, n}; }

    bool is_log() const noexcept { return kind == Kind::Logarithmic; }

    void validate() const {
        if (n_bins == 0) {
            throw ValidationError("bins", "bins must be positive");
        }
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
            throw ValidationError("hi", "hi must be greater than lo");
        }
        if (is_log() && !(lo > 0.0)) {
            throw ValidationError("lo", "logarithmic binning needs lo > 0");
        }
    }

    // n_bins + 1 edges; the last edge is exactly hi.
    std::vector<double> edges() const {
        std::vector<double> e(n_bins + 1);
        const double n = static_cast<double>(n_bins);
        for (std::size_t k = 0; k <= n_bins; ++k) {
            const double t = static_cast<double>(k) / n;
            e[k] = is_log() ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
        }
        e.front() = lo;
        e.back() = hi;
        return e;
    }

    friend bool operator==(const Binning&, const Binning&) = default;
};

inline const char* binning_name(Binning::Kind k) {
    return k == Binning::Kind::Logarithmic ? "log" : "linear";
}

// Bins are half-open [e_k, e_{k+1}) with the last bin closed. For logarithmic
// binning the lower edge itself is out of range: the tail starts strictly
// above lo.
struct Histogram {
    Binning binning;
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    // count / (total * width), total counting out-of-range samples too, so
    // sum(density * width) is the in-range fraction.
    std::vector<double> density;
    std::uint64_t total = 0;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0; // above hi, or NaN

    std::size_t size() const noexcept { return counts.size(); }
    double bin_lo(std::size_t k) const { return edges[k]; }
    double bin_hi(std::size_t k) const { return edges[k + 1]; }
    double width(std::size_t k) const { return edges[k + 1] - edges[k]; }
    // Geometric centre for log bins, midpoint otherwise.
    double center(std::size_t k) const {
        return binning.is_log() ? std::sqrt(edges[k] * edges[k + 1]) : 0.5 * (edges[k] + edges[k + 1]);
    }
    std::uint64_t out_of_range() const noexcept { return underflow + overflow; }
    std::uint64_t in_range() const noexcept { return total - out_of_range(); }

    // Recomputes density from counts and total.
    void normalize() {
        density.assign(counts.size(), 0.0);
        if (total == 0) {
            return;
        }
        const double n = static_cast<double>(total);
        for (std::size_t k = 0; k < counts.size(); ++k) {
            density[k] = static_cast<double>(counts[k]) / (n * width(k));
        }
    }

    // Exact integer merge of a histogram built over the same binning.
    void merge(const Histogram& other) {
        if (!(binning == other.binning)) {
            throw ContractViolation("cannot merge histograms with different binning");
        }
        for (std::size_t k = 0; k < counts.size(); ++k) {
            counts[k] += other.counts[k];
        }
        total += other.total;
        underflow += other.underflow;
        overflow += other.overflow;
        normalize();
    }
};

inline Histogram empty_histogram(const Binning& binning) {
    binning.validate();
    Histogram h;
    h.binning = binning;
    h.edges = binning.edges();
    h.counts.assign(binning.n_bins, 0);
    h.density.assign(binning.n_bins, 0.0);
    return h;
}

inline Histogram build_histogram(std::span<const double> samples, const Binning& binning) {
    Histogram h = empty_histogram(binning);
    const auto& e = h.edges;
    const std::size_t n = binning.n_bins;
    const double log_span = binning.is_log() ? std::log(binning.hi / binning.lo) : 0.0;

    for (const double x : samples) {
        ++h.total;
        if (std::isnan(x) || x > binning.hi) {
            ++h.overflow;
            continue;
        }
        if (x < binning.lo || (binning.is_log() && x == binning.lo)) {
            ++h.underflow;
            continue;
        }
        const double t = binning.is_log() ? std::log(x / binning.lo) / log_span
                                          : (x - binning.lo) / (binning.hi - binning.lo);
        auto k = static_cast<std::size_t>(std::clamp(t * static_cast<double>(n), 0.0, static_cast<double>(n - 1)));
        // The formula can land one bin off near an edge; the edge table decides.
        while (k > 0 && x < e[k]) {
            --k;
        }
        while (k + 1 < n && x >= e[k + 1]) {
            ++k;
        }
        ++h.counts[k];
    }
    h.normalize();
    return h;
}

// ---------------------------------------------------------------------------
// Power-law tail slope

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0; // natural-log density at log z = 0
    double stderr_slope = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;
    std::size_t n_points = 0;
};

// Ordinary least squares of ln(density) on ln(bin centre), over log bins with
// a nonzero count whose centre lies in [z_min, z_max].
inline SlopeFit fit_powerlaw_tail(const Histogram& hist, double z_min, double z_max) {
    if (!hist.binning.is_log()) {
        throw ContractViolation("power-law fit needs logarithmic bins");
    }
    if (!(z_min >= 1.0) || !(z_max > z_min)) {
        throw ContractViolation("fit range needs 1 <= z_min < z_max");
    }

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double c = hist.center(k);
        if (hist.counts[k] == 0 || !(hist.density[k] > 0.0) || c < z_min || c > z_max) {
            continue;
        }
        xs.push_back(std::log(c));
        ys.push_back(std::log(hist.density[k]));
    }
    const std::size_t n = xs.size();
    if (n < 3) {
        throw InsufficientData("power-law fit needs at least 3 nonzero bins in range, got " +
                               std::to_string(n));
    }

    const double nd = static_cast<double>(n);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= nd;
    my /= nd;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / (nd - 2.0) / sxx);
    fit.z_min = z_min;
    fit.z_max = z_max;
    fit.n_points = n;
    return fit;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distance to Uniform(0, 1)

inline double uniformity_ks(std::span<const double> samples) {
    if (samples.empty()) {
        throw ContractViolation("KS statistic of an empty sample");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = clamp_unit(sorted[i]);
        const double below = f - static_cast<double>(i) / n;
        const double above = static_cast<double>(i + 1) / n - f;
        d = std::max({d, below, above});
    }
    return d;
}

// 1% two-sided asymptotic critical value.
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

// ---------------------------------------------------------------------------
// Summary statistics

class Summary {
public:
    explicit Summary(std::span<const double> samples) : sorted_(samples.begin(), samples.end()) {
        if (sorted_.empty()) {
            throw ContractViolation("summary of an empty sample");
        }
        std::sort(sorted_.begin(), sorted_.end());
        const double n = static_cast<double>(sorted_.size());
        double sum = 0.0;
        for (const double x : sorted_) {
            sum += x;
        }
        mean_ = sum / n;
        double ss = 0.0;
        for (const double x : sorted_) {
            ss += (x - mean_) * (x - mean_);
        }
        std_ = std::sqrt(ss / n);
    }

    std::size_t count() const noexcept { return sorted_.size(); }
    double mean() const noexcept { return mean_; }
    // Population convention (divides by n).
    double stddev() const noexcept { return std_; }
    double min() const noexcept { return sorted_.front(); }
    double max() const noexcept { return sorted_.back(); }

    double fraction_above(double t) const {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
        return static_cast<double>(sorted_.end() - it) / static_cast<double>(sorted_.size());
    }
    double fraction_below(double t) const {
        const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), t);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

private:
    std::vector<double> sorted_;
    double mean_ = 0.0;
    double std_ = 0.0;
};

inline Summary summary(std::span<const double> samples) { return Summary(samples); }

} // namespace urn
