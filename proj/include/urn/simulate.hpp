#pragma once

// One day of sequential arrivals, and ensembles of many days.
//
// Memoryless strategies run days independently (each on its own substream, so
// the day loop can be split across threads). HistoryWeighted runs days strictly
// in order: day i sees the discounted aggregate of days 1..i-1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "urn/core.hpp"
#include "urn/errors.hpp"
#include "urn/rng.hpp"

namespace urn {

struct SimulationConfig {
    Strategy strategy = FollowCrowd{1.0};
    std::uint64_t n_agents = 1;
    std::uint64_t n_days = 1;
    std::uint64_t seed = 0;
};

inline void validate_config(const SimulationConfig& c) {
    validate_strategy(c.strategy);
    if (c.n_agents < 1) {
        throw ValidationError("n_agents", "n_agents < 1");
    }
    if (c.n_days < 1) {
        throw ValidationError("n_days", "n_days < 1");
    }
}

// ---------------------------------------------------------------------------
// History aggregate

// H = sum_k delta^k H_k / sum_k delta^k, where H_1 is the most recent fixed
// point and H_m the oldest. `oldest_first` is P_1..P_m in the order the days
// were played. delta = 0 is taken as the delta -> 0+ limit (H = H_1).
//
// Weights are formed relative to the largest one (the newest entry for
// delta <= 1, the oldest for delta > 1) so nothing overflows for long histories.
inline double history_aggregate(std::span<const double> oldest_first, double delta) {
    if (oldest_first.empty()) {
        throw ContractViolation("history_aggregate needs at least one fixed point");
    }
    detail::require_nonnegative("delta", delta);
    const std::size_t m = oldest_first.size();
    if (delta == 0.0) {
        return oldest_first.back();
    }

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        // Entry i (oldest first) is H_k with k = m - i.
        const double k = static_cast<double>(m - i);
        const double w = delta <= 1.0 ? std::pow(delta, k - 1.0) : std::pow(delta, k - static_cast<double>(m));
        num += w * oldest_first[i];
        den += w;
    }
    return clamp_unit(num / den);
}

// Fixed points of the days played so far plus the running aggregate.
//
// Appending a new most-recent value p to a history with relative normalizer
// Z_m = sum_{k=1..m} delta^(k-1) gives Z_{m+1} = 1 + delta * Z_m and
// H' = w p + (1 - w) H with w = 1 / Z_{m+1}. Z is saturated once it exceeds
// kSaturation: past that point w is far below double resolution.
class HistoryLedger {
public:
    static constexpr double kSaturation = 1e250;

    explicit HistoryLedger(double delta) : delta_(delta) {
        detail::require_nonnegative("delta", delta);
    }

    void append(double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ContractViolation("history fixed point outside [0, 1]");
        }
        if (fixed_points_.empty()) {
            normalizer_ = 1.0;
            aggregate_ = p;
        } else {
            normalizer_ = std::min(1.0 + delta_ * normalizer_, kSaturation);
            const double w = 1.0 / normalizer_;
            aggregate_ = clamp_unit(w * p + (1.0 - w) * aggregate_);
        }
        fixed_points_.push_back(p);
    }

    bool empty() const noexcept { return fixed_points_.empty(); }
    std::size_t size() const noexcept { return fixed_points_.size(); }
    double delta() const noexcept { return delta_; }
    const std::vector<double>& fixed_points() const noexcept { return fixed_points_; }

    // Current H_A. Only meaningful once something has been appended.
    double aggregate() const {
        if (empty()) {
            throw ContractViolation("empty history has no aggregate");
        }
        return aggregate_;
    }

private:
    double delta_;
    double normalizer_ = 0.0;
    double aggregate_ = 0.0;
    std::vector<double> fixed_points_;
};

// ---------------------------------------------------------------------------
// One day

namespace detail {

// `prob` maps the current state (and the stream, for rules that draw extra
// randomness per agent) to P(A).
template <class ProbabilityFn>
DayResult run_arrivals(std::uint64_t n_agents, RngStream& rng, ProbabilityFn prob) {
    UrnState state{};
    for (std::uint64_t i = 0; i < n_agents; ++i) {
        const double p = prob(state, rng);
        if (rng.uniform() < p) {
            ++state.n_a;
        } else {
            ++state.n_b;
        }
    }
    return make_day_result(state.n_a - 1, state.n_b - 1);
}

inline DayResult run_day_unchecked(const Strategy& strategy, std::uint64_t n_agents,
                                   double history_value, RngStream& rng) {
    return std::visit(
        [&](const auto& rule) {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, RandomPreference>) {
                return run_arrivals(n_agents, rng, [&rule](UrnState s, RngStream& r) {
                    return probability_a(rule, s, r.coin() ? Sign::Plus : Sign::Minus);
                });
            } else if constexpr (std::is_same_v<T, HistoryWeighted>) {
                return run_arrivals(n_agents, rng, [&rule, history_value](UrnState s, RngStream&) {
                    return probability_a(rule, s, history_value);
                });
            } else {
                return run_arrivals(n_agents, rng,
                                    [&rule](UrnState s, RngStream&) { return probability_a(rule, s); });
            }
        },
        strategy);
}

} // namespace detail

// N sequential arrivals into an urn seeded with one agent per side. Each
// arrival draws one uniform (RandomPreference draws its fair sign first).
inline DayResult run_day(const Strategy& strategy, std::uint64_t n_agents,
                         std::optional<double> history_value, RngStream& rng) {
    validate_strategy(strategy);
    if (n_agents < 1) {
        throw ContractViolation("run_day needs at least one arrival");
    }
    if (is_history_weighted(strategy) != history_value.has_value()) {
        throw ContractViolation("history_value must be given iff the strategy is history_weighted");
    }
    if (history_value) {
        detail::require_unit("history_value", *history_value);
    }
    return detail::run_day_unchecked(strategy, n_agents, history_value.value_or(0.0), rng);
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleResult {
    std::vector<DayResult> days;
    SimulationConfig config;
    std::chrono::duration<double> elapsed{};

    std::vector<double> fixed_points() const {
        std::vector<double> out;
        out.reserve(days.size());
        for (const auto& d : days) {
            out.push_back(d.p_a);
        }
        return out;
    }
};

namespace detail {

inline void run_independent_days(const SimulationConfig& c, std::vector<DayResult>& days,
                                 unsigned threads) {
    const std::uint64_t n_days = c.n_days;
    auto work = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t d = begin; d < end; ++d) {
            RngStream rng = make_rng_stream(c.seed, d);
            days[d] = run_day_unchecked(c.strategy, c.n_agents, 0.0, rng);
        }
    };

    const std::uint64_t workers = std::clamp<std::uint64_t>(threads, 1, n_days);
    if (workers == 1) {
        work(0, n_days);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::uint64_t chunk = (n_days + workers - 1) / workers;
    for (std::uint64_t w = 0; w < workers; ++w) {
        const std::uint64_t begin = w * chunk;
        const std::uint64_t end = std::min(n_days, begin + chunk);
        if (begin < end) {
            pool.emplace_back(work, begin, end);
        }
    }
}

inline void run_history_days(const SimulationConfig& c, std::vector<DayResult>& days) {
    const auto& rule = std::get<HistoryWeighted>(c.strategy);
    HistoryLedger ledger(rule.delta);
    for (std::uint64_t d = 0; d < c.n_days; ++d) {
        RngStream rng = make_rng_stream(c.seed, d);
        // No history exists on the first day; it is played as a plain Polya urn.
        days[d] = ledger.empty() ? run_day_unchecked(FollowCrowd{1.0}, c.n_agents, 0.0, rng)
                                 : run_day_unchecked(c.strategy, c.n_agents, ledger.aggregate(), rng);
        ledger.append(days[d].p_a);
    }
}

} // namespace detail

// Plays config.n_days days. The result depends only on `config`: the thread
// count changes wall time, never the output.
inline EnsembleResult run_ensemble(const SimulationConfig& config, unsigned threads = 1) {
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();

    EnsembleResult result;
    result.config = config;
    result.days.resize(config.n_days);
    if (is_history_weighted(config.strategy)) {
        detail::run_history_days(config, result.days);
    } else {
        detail::run_independent_days(config, result.days, threads);
    }

    result.elapsed = std::chrono::steady_clock::now() - start;
    return result;
}

} // namespace urn
