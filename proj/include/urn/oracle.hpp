#pragma once

// Exact ground truth used to check the simulator.
//
// exact_distribution() propagates the law of q_a through one day by dynamic
// programming over (arrivals so far, q_a so far). ratio_of_uniforms_density()
// is the closed-form law of U1/U2 that the Polya ratio tail converges to.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "urn/core.hpp"
#include "urn/errors.hpp"
#include "urn/rng.hpp"

namespace urn {

struct ExactPmf {
    // probabilities[k] = P(q_a = k), k = 0..N.
    std::vector<double> probabilities;

    std::size_t n_agents() const noexcept { return probabilities.empty() ? 0 : probabilities.size() - 1; }
    double operator[](std::size_t k) const { return probabilities[k]; }
};

inline constexpr std::uint64_t kExactBudget = 2000;

// P(A) for a memoryless rule at `state`, with the random sign of
// RandomPreference integrated out (it is redrawn independently per arrival).
inline double marginal_probability_a(const Strategy& strategy, UrnState state,
                                     std::optional<double> history_value) {
    return std::visit(
        [&](const auto& rule) -> double {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, RandomPreference>) {
                return 0.5 * (probability_a(rule, state, Sign::Plus) + probability_a(rule, state, Sign::Minus));
            } else if constexpr (std::is_same_v<T, HistoryWeighted>) {
                return probability_a(rule, state, *history_value);
            } else {
                return probability_a(rule, state);
            }
        },
        strategy);
}

// Law of q_a after n_agents arrivals. HistoryWeighted is supported only for a
// fixed history_value, which makes the day memoryless.
inline ExactPmf exact_distribution(const Strategy& strategy, std::uint64_t n_agents,
                                   std::optional<double> history_value = std::nullopt) {
    validate_strategy(strategy);
    if (n_agents > kExactBudget) {
        throw ResourceError("exact_distribution supports at most " + std::to_string(kExactBudget) +
                            " agents");
    }
    if (is_history_weighted(strategy) != history_value.has_value()) {
        throw ContractViolation("history_value must be given iff the strategy is history_weighted");
    }
    if (history_value) {
        detail::require_unit("history_value", *history_value);
    }

    std::vector<double> cur{1.0};
    std::vector<double> next;
    for (std::uint64_t n = 0; n < n_agents; ++n) {
        next.assign(n + 2, 0.0);
        for (std::uint64_t k = 0; k <= n; ++k) {
            if (cur[k] == 0.0) {
                continue;
            }
            const double pi = marginal_probability_a(strategy, UrnState{k + 1, n - k + 1}, history_value);
            next[k + 1] += cur[k] * pi;
            next[k] += cur[k] * (1.0 - pi);
        }
        cur.swap(next);
    }
    return ExactPmf{std::move(cur)};
}

// Density of U1/U2 for independent Uniform(0,1): 1/2 on [0,1], 1/(2 z^2) above.
inline double ratio_of_uniforms_density(double z) {
    if (!(z >= 0.0)) {
        throw ContractViolation("ratio density is defined for z >= 0");
    }
    return z <= 1.0 ? 0.5 : 0.5 / (z * z);
}

// Draw from the z > 1 branch of the ratio law, renormalised: density 1/z^2 on
// (1, inf). Inverse CDF z = 1 / (2 (1 - u)) with u uniform on (1/2, 1).
inline double sample_ratio_tail(RngStream& rng) {
    const double v = 0.5 * (1.0 - rng.uniform()); // 1 - u, in (0, 1/2]
    return 0.5 / v;
}

} // namespace urn
