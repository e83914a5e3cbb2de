#pragma once

// Domain types and per-arrival choice rules for the two-restaurant game.
//
// Every rule answers one question: given the current occupation of the two
// restaurants, with what probability does the next arriving agent pick A?

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "urn/errors.hpp"

namespace urn {

// Occupation counts within one day. Both restaurants start the day holding one
// seed agent, so n_a, n_b >= 1 always and n_a + n_b = 2 + arrivals so far.
struct UrnState {
    std::uint64_t n_a = 1;
    std::uint64_t n_b = 1;

    std::uint64_t total() const noexcept { return n_a + n_b; }
    UrnState swapped() const noexcept { return {n_b, n_a}; }
    friend bool operator==(const UrnState&, const UrnState&) = default;
};

// Agents pick the emptier restaurant: P(A) = n_b / (n_a + n_b).
struct AvoidCrowd {};

// Fair coin, ignoring the crowd.
struct RandomChoice {};

// P(A) = n_a^eps / (n_a^eps + n_b^eps). eps = 1 is the classical Polya urn.
struct FollowCrowd {
    double epsilon = 1.0;
};

// Everybody shares the perception that A is better: P(A) = (n_a + alpha) / (n_a + n_b).
struct FixedPreference {
    double alpha = 0.0;
};

// Each agent privately leans towards A or B with equal probability:
// P(A) = clamp((n_a + sign * alpha_abs) / (n_a + n_b)).
struct RandomPreference {
    double alpha_abs = 0.0;
};

// Crowd mixed with discounted memory of earlier days:
// P(A) = gamma * n_a / (n_a + n_b) + (1 - gamma) * H_A.
struct HistoryWeighted {
    double gamma = 1.0;
    double delta = 1.0;
};

using Strategy = std::variant<AvoidCrowd, RandomChoice, FollowCrowd, FixedPreference,
                              RandomPreference, HistoryWeighted>;

enum class Sign : std::int8_t { Minus = -1, Plus = 1 };

// Outcome of one day of arrivals. Seed agents are excluded, so q_a + q_b = N
// and p_a = q_a / N.
struct DayResult {
    std::uint64_t q_a = 0;
    std::uint64_t q_b = 0;
    double p_a = 0.0;

    std::uint64_t arrivals() const noexcept { return q_a + q_b; }
    double p_b() const noexcept { return 1.0 - p_a; }
    friend bool operator==(const DayResult&, const DayResult&) = default;
};

inline DayResult make_day_result(std::uint64_t q_a, std::uint64_t q_b) {
    const std::uint64_t n = q_a + q_b;
    if (n == 0) {
        throw ContractViolation("day with zero arrivals");
    }
    return {q_a, q_b, static_cast<double>(q_a) / static_cast<double>(n)};
}

// ---------------------------------------------------------------------------
// Strategy names, used by the config format and CSV metadata.

template <class T>
constexpr std::string_view strategy_key = "";
template <>
constexpr std::string_view strategy_key<AvoidCrowd> = "avoid_crowd";
template <>
constexpr std::string_view strategy_key<RandomChoice> = "random";
template <>
constexpr std::string_view strategy_key<FollowCrowd> = "follow_crowd";
template <>
constexpr std::string_view strategy_key<FixedPreference> = "fixed_preference";
template <>
constexpr std::string_view strategy_key<RandomPreference> = "random_preference";
template <>
constexpr std::string_view strategy_key<HistoryWeighted> = "history_weighted";

inline std::string_view strategy_name(const Strategy& s) {
    return std::visit([](const auto& v) { return strategy_key<std::decay_t<decltype(v)>>; }, s);
}

inline bool is_history_weighted(const Strategy& s) noexcept {
    return std::holds_alternative<HistoryWeighted>(s);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void require_finite(const char* field, double v) {
    if (!std::isfinite(v)) {
        throw ValidationError(field, std::string(field) + " must be finite");
    }
}

inline void require_nonnegative(const char* field, double v) {
    require_finite(field, v);
    if (v < 0.0) {
        throw ValidationError(field, std::string(field) + " < 0");
    }
}

inline void require_unit(const char* field, double v) {
    require_finite(field, v);
    if (v < 0.0) {
        throw ValidationError(field, std::string(field) + " < 0");
    }
    if (v > 1.0) {
        throw ValidationError(field, std::string(field) + " > 1");
    }
}

} // namespace detail

inline void validate(const AvoidCrowd&) {}
inline void validate(const RandomChoice&) {}
inline void validate(const FollowCrowd& s) { detail::require_nonnegative("epsilon", s.epsilon); }
// alpha > 1 would hand restaurant B a negative probability on the first arrival.
inline void validate(const FixedPreference& s) { detail::require_unit("alpha", s.alpha); }
inline void validate(const RandomPreference& s) { detail::require_nonnegative("alpha_abs", s.alpha_abs); }
inline void validate(const HistoryWeighted& s) {
    detail::require_unit("gamma", s.gamma);
    // delta = +inf is allowed by the model but has no finite weights; reject it.
    detail::require_nonnegative("delta", s.delta);
}

// Throws ValidationError naming the first out-of-range field.
inline void validate_strategy(const Strategy& s) {
    std::visit([](const auto& v) { validate(v); }, s);
}

// ---------------------------------------------------------------------------
// Choice rules. The typed overloads are the hot path used by the simulator;
// choice_probability() is the checked, variant-level entry point.

inline double clamp_unit(double p) noexcept { return std::clamp(p, 0.0, 1.0); }

inline double polya_share(UrnState s) noexcept {
    return static_cast<double>(s.n_a) / static_cast<double>(s.total());
}

inline double probability_a(const AvoidCrowd&, UrnState s) noexcept {
    return static_cast<double>(s.n_b) / static_cast<double>(s.total());
}

inline double probability_a(const RandomChoice&, UrnState) noexcept { return 0.5; }

// Evaluated as 1 / (1 + (n_b/n_a)^eps) so large eps or large counts cannot
// overflow. eps = 1 takes the direct ratio so it agrees bit-for-bit with the
// other rules that reduce to the Polya share.
inline double probability_a(const FollowCrowd& r, UrnState s) noexcept {
    if (r.epsilon == 1.0) {
        return polya_share(s);
    }
    if (r.epsilon == 0.0) {
        return 0.5;
    }
    const double ratio = static_cast<double>(s.n_b) / static_cast<double>(s.n_a);
    return 1.0 / (1.0 + std::pow(ratio, r.epsilon));
}

inline double probability_a(const FixedPreference& r, UrnState s) noexcept {
    return clamp_unit((static_cast<double>(s.n_a) + r.alpha) / static_cast<double>(s.total()));
}

inline double probability_a(const RandomPreference& r, UrnState s, Sign sign) noexcept {
    const double shift = sign == Sign::Plus ? r.alpha_abs : -r.alpha_abs;
    return clamp_unit((static_cast<double>(s.n_a) + shift) / static_cast<double>(s.total()));
}

inline double probability_a(const HistoryWeighted& r, UrnState s, double history_value) noexcept {
    return clamp_unit(r.gamma * polya_share(s) + (1.0 - r.gamma) * history_value);
}

inline void check_state(UrnState s) {
    if (s.n_a < 1 || s.n_b < 1) {
        throw ContractViolation("urn state needs n_a >= 1 and n_b >= 1");
    }
}

// Probability that the next agent picks A. history_value must be given iff the
// strategy is HistoryWeighted, preference_sign iff it is RandomPreference.
inline double choice_probability(const Strategy& strategy, UrnState state,
                                 std::optional<double> history_value = std::nullopt,
                                 std::optional<Sign> preference_sign = std::nullopt) {
    check_state(state);
    validate_strategy(strategy);
    const bool wants_history = std::holds_alternative<HistoryWeighted>(strategy);
    const bool wants_sign = std::holds_alternative<RandomPreference>(strategy);
    if (wants_history != history_value.has_value()) {
        throw ContractViolation(wants_history ? "history_value required by history_weighted"
                                              : "history_value given to a memoryless strategy");
    }
    if (wants_sign != preference_sign.has_value()) {
        throw ContractViolation(wants_sign ? "preference_sign required by random_preference"
                                           : "preference_sign given to a strategy without one");
    }
    if (history_value) {
        detail::require_unit("history_value", *history_value);
    }

    return std::visit(
        [&](const auto& rule) -> double {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, RandomPreference>) {
                return probability_a(rule, state, *preference_sign);
            } else if constexpr (std::is_same_v<T, HistoryWeighted>) {
                return probability_a(rule, state, *history_value);
            } else {
                return probability_a(rule, state);
            }
        },
        strategy);
}

} // namespace urn
