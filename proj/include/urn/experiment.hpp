#pragma once

// Experiment files and CSV output.
//
// An experiment file is line oriented: `key = value` pairs, `#` or `;`
// comments, an optional `[experiment]` header for the top-level keys and one
// `[histogram]` section per requested output. Unknown keys are errors.
//
//   name = polya_fixed_points
//   strategy = follow_crowd
//   epsilon = 1
//   n_agents = 5000
//   n_days = 40000
//   seed = 1
//
//   [histogram]
//   target = fixed_points
//   binning = linear
//   lo = 0
//   hi = 1
//   bins = 50

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "urn/core.hpp"
#include "urn/errors.hpp"
#include "urn/simulate.hpp"
#include "urn/stats.hpp"

namespace urn {

enum class Target { FixedPoints, RatiosA, RatiosB };

inline std::string_view target_name(Target t) {
    switch (t) {
    case Target::FixedPoints:
        return "fixed_points";
    case Target::RatiosA:
        return "ratios_A";
    case Target::RatiosB:
        return "ratios_B";
    }
    return "";
}

inline bool is_ratio_target(Target t) noexcept { return t != Target::FixedPoints; }

inline Binning default_binning(Target t) {
    return is_ratio_target(t) ? Binning::logarithmic(1.0, 100.0, 40) : Binning::linear(0.0, 1.0, 50);
}

struct FitRange {
    double z_min = 1.0;
    double z_max = 30.0;
};

struct HistogramRequest {
    Target target = Target::FixedPoints;
    Binning binning = default_binning(Target::FixedPoints);
    std::optional<FitRange> fit_range;
};

struct ExperimentSpec {
    std::string name;
    SimulationConfig config;
    std::vector<HistogramRequest> histograms;
    std::filesystem::path output_dir = ".";
};

// ---------------------------------------------------------------------------
// Number formatting and parsing

// 12 significant digits, shortest form. Golden files depend on this.
inline std::string format_number(double v) {
    if (v == 0.0) {
        return "0"; // folds -0
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

struct Section {
    std::string kind; // "experiment" or "histogram"
    std::size_t line = 0;
    std::map<std::string, Entry, std::less<>> entries;
};

// Reads the document into sections. Only syntax is checked here.
inline std::vector<Section> read_sections(std::string_view text) {
    std::vector<Section> sections(1);
    sections.front().kind = "experiment";
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) {
            line = line.substr(0, c);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(line_no, "unterminated section header");
            }
            const std::string kind(trim(line.substr(1, line.size() - 2)));
            if (kind == "experiment") {
                if (sections.size() > 1 || !sections.front().entries.empty() || sections.front().line) {
                    throw ParseError(line_no, "[experiment] must come first and appear once");
                }
                sections.front().line = line_no;
            } else if (kind == "histogram") {
                sections.push_back(Section{kind, line_no, {}});
            } else {
                throw ParseError(line_no, "unknown section [" + kind + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line_no, "expected `key = value`");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError(line_no, "missing key");
        }
        if (value.empty()) {
            throw ParseError(line_no, "missing value for " + key);
        }
        auto& entries = sections.back().entries;
        if (entries.contains(key)) {
            throw ParseError(line_no, "duplicate key " + key);
        }
        entries.emplace(key, Entry{value, line_no});
    }
    return sections;
}

class SectionReader {
public:
    explicit SectionReader(const Section& s) : section_(s) {}

    bool has(std::string_view key) const { return section_.entries.contains(key); }

    const Entry* find(std::string_view key) {
        const auto it = section_.entries.find(key);
        if (it == section_.entries.end()) {
            return nullptr;
        }
        used_.insert(it->first);
        return &it->second;
    }

    std::optional<std::string> text(std::string_view key) {
        const Entry* e = find(key);
        return e ? std::optional<std::string>(e->value) : std::nullopt;
    }

    std::optional<double> real(std::string_view key) {
        const Entry* e = find(key);
        if (!e) {
            return std::nullopt;
        }
        const auto v = parse_double(e->value);
        if (!v) {
            throw ParseError(e->line, std::string(key) + ": expected a number, got '" + e->value + "'");
        }
        return v;
    }

    std::optional<std::uint64_t> integer(std::string_view key) {
        const Entry* e = find(key);
        if (!e) {
            return std::nullopt;
        }
        const auto v = parse_uint(e->value);
        if (!v) {
            throw ParseError(e->line, std::string(key) + ": expected a non-negative integer, got '" +
                                          e->value + "'");
        }
        return v;
    }

    double required_real(std::string_view key, std::string_view context) {
        const auto v = real(key);
        if (!v) {
            throw ParseError(section_.line, std::string(key) + " required by " + std::string(context));
        }
        return *v;
    }

    // Every key must have been consumed.
    void reject_unused() const {
        for (const auto& [key, entry] : section_.entries) {
            if (!used_.contains(key)) {
                throw ParseError(entry.line, "unknown key " + key);
            }
        }
    }

    void reject_unknown(std::initializer_list<std::string_view> known) const {
        for (const auto& [key, entry] : section_.entries) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ParseError(entry.line, "unknown key " + key);
            }
        }
    }

    // Keys that exist in the grammar but do not apply here.
    void reject_present(std::initializer_list<std::string_view> keys, std::string_view context) {
        for (const auto key : keys) {
            if (const Entry* e = find(key)) {
                throw ParseError(e->line, std::string(key) + " is not used by " + std::string(context));
            }
        }
    }

    std::size_t line() const noexcept { return section_.line; }

private:
    const Section& section_;
    std::set<std::string, std::less<>> used_;
};

inline Strategy read_strategy(SectionReader& r) {
    const auto name = r.text("strategy");
    if (!name) {
        throw ParseError(r.line(), "strategy required");
    }
    const std::string& s = *name;
    Strategy out;
    if (s == strategy_key<AvoidCrowd>) {
        r.reject_present({"epsilon", "alpha", "alpha_abs", "gamma", "delta"}, s);
        out = AvoidCrowd{};
    } else if (s == strategy_key<RandomChoice>) {
        r.reject_present({"epsilon", "alpha", "alpha_abs", "gamma", "delta"}, s);
        out = RandomChoice{};
    } else if (s == strategy_key<FollowCrowd>) {
        r.reject_present({"alpha", "alpha_abs", "gamma", "delta"}, s);
        out = FollowCrowd{r.required_real("epsilon", s)};
    } else if (s == strategy_key<FixedPreference>) {
        r.reject_present({"epsilon", "alpha_abs", "gamma", "delta"}, s);
        out = FixedPreference{r.required_real("alpha", s)};
    } else if (s == strategy_key<RandomPreference>) {
        r.reject_present({"epsilon", "alpha", "gamma", "delta"}, s);
        out = RandomPreference{r.required_real("alpha_abs", s)};
    } else if (s == strategy_key<HistoryWeighted>) {
        r.reject_present({"epsilon", "alpha", "alpha_abs"}, s);
        const double gamma = r.required_real("gamma", s);
        out = HistoryWeighted{gamma, r.required_real("delta", s)};
    } else {
        throw ParseError(r.find("strategy")->line, "unknown strategy '" + s + "'");
    }
    return out;
}

inline Target read_target(SectionReader& r) {
    const auto name = r.text("target");
    if (!name) {
        throw ParseError(r.line(), "target required in [histogram]");
    }
    for (const Target t : {Target::FixedPoints, Target::RatiosA, Target::RatiosB}) {
        if (*name == target_name(t)) {
            return t;
        }
    }
    throw ParseError(r.find("target")->line, "unknown target '" + *name + "'");
}

inline HistogramRequest read_histogram(SectionReader& r) {
    r.reject_unknown({"target", "binning", "lo", "hi", "bins", "fit_min", "fit_max"});
    HistogramRequest req;
    req.target = read_target(r);
    req.binning = default_binning(req.target);
    if (const auto kind = r.text("binning")) {
        if (*kind == "linear") {
            req.binning.kind = Binning::Kind::Linear;
        } else if (*kind == "log") {
            req.binning.kind = Binning::Kind::Logarithmic;
        } else {
            throw ParseError(r.find("binning")->line, "binning must be linear or log");
        }
    }
    if (const auto lo = r.real("lo")) {
        req.binning.lo = *lo;
    }
    if (const auto hi = r.real("hi")) {
        req.binning.hi = *hi;
    }
    if (const auto bins = r.integer("bins")) {
        req.binning.n_bins = *bins;
    }
    const auto fit_min = r.real("fit_min");
    const auto fit_max = r.real("fit_max");
    if (fit_min.has_value() != fit_max.has_value()) {
        throw ParseError(r.line(), "fit_min and fit_max must be given together");
    }
    if (fit_min) {
        req.fit_range = FitRange{*fit_min, *fit_max};
    }
    r.reject_unused();
    return req;
}

// Re-raises a ValidationError as a ParseError tied to the key's line.
template <class Fn>
void validated(SectionReader& r, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        const Entry* entry = r.find(e.field());
        throw ParseError(entry ? entry->line : r.line(), e.what());
    }
}

} // namespace detail

inline void validate_request(const HistogramRequest& req, const SimulationConfig& config) {
    req.binning.validate();
    if (is_ratio_target(req.target) && config.n_days < 2) {
        throw ValidationError("n_days", "ratios require n_days >= 2");
    }
    if (req.fit_range) {
        if (!req.binning.is_log()) {
            throw ValidationError("fit_min", "a fit range needs log binning");
        }
        if (!(req.fit_range->z_min >= 1.0) || !(req.fit_range->z_max > req.fit_range->z_min)) {
            throw ValidationError("fit_min", "fit range needs 1 <= fit_min < fit_max");
        }
    }
}

// Parses and fully validates an experiment document. `default_name` is used
// when the document has no `name` key (the CLI passes the file stem).
inline ExperimentSpec parse_config(std::string_view text, std::string_view default_name = {}) {
    const auto sections = detail::read_sections(text);

    ExperimentSpec spec;
    detail::SectionReader top(sections.front());
    top.reject_unknown({"name", "strategy", "epsilon", "alpha", "alpha_abs", "gamma", "delta", "n_agents", "n_days",
                        "seed", "output_dir"});
    spec.name = top.text("name").value_or(std::string(default_name));
    if (spec.name.empty()) {
        throw ParseError(top.line(), "name required");
    }
    if (spec.name.find_first_of("/\\") != std::string::npos) {
        throw ParseError(top.find("name")->line, "name must not contain path separators");
    }
    spec.config.strategy = detail::read_strategy(top);
    const auto n_agents = top.integer("n_agents");
    const auto n_days = top.integer("n_days");
    if (!n_agents) {
        throw ParseError(top.line(), "n_agents required");
    }
    if (!n_days) {
        throw ParseError(top.line(), "n_days required");
    }
    spec.config.n_agents = *n_agents;
    spec.config.n_days = *n_days;
    spec.config.seed = top.integer("seed").value_or(0);
    if (const auto dir = top.text("output_dir")) {
        spec.output_dir = *dir;
    }
    top.reject_unused();
    detail::validated(top, [&] { validate_config(spec.config); });

    std::set<Target> seen;
    for (std::size_t i = 1; i < sections.size(); ++i) {
        detail::SectionReader r(sections[i]);
        HistogramRequest req = detail::read_histogram(r);
        if (!seen.insert(req.target).second) {
            throw ParseError(sections[i].line, "duplicate histogram target " + std::string(target_name(req.target)));
        }
        try {
            validate_request(req, spec.config);
        } catch (const ValidationError& e) {
            const std::size_t line = e.field() == "n_days" ? sections[i].line : [&] {
                const detail::Entry* entry = r.find(e.field());
                return entry ? entry->line : sections[i].line;
            }();
            throw ParseError(line, e.what());
        }
        spec.histograms.push_back(req);
    }
    if (spec.histograms.empty()) {
        throw ParseError(0, "at least one [histogram] section required");
    }
    return spec;
}

inline ExperimentSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str(), path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kHistogramHeader = "bin_lo,bin_hi,count,density";
inline constexpr std::string_view kFitHeader = "slope,stderr,intercept,n_points,z_min,z_max";

// The columns of a histogram CSV, as written.
struct HistogramRows {
    std::vector<double> bin_lo;
    std::vector<double> bin_hi;
    std::vector<std::uint64_t> count;
    std::vector<double> density;

    friend bool operator==(const HistogramRows&, const HistogramRows&) = default;
};

inline HistogramRows histogram_rows(const Histogram& h) {
    HistogramRows rows;
    for (std::size_t k = 0; k < h.size(); ++k) {
        rows.bin_lo.push_back(h.bin_lo(k));
        rows.bin_hi.push_back(h.bin_hi(k));
        rows.count.push_back(h.counts[k]);
        rows.density.push_back(h.density[k]);
    }
    return rows;
}

inline std::string format_histogram_csv(const HistogramRows& rows) {
    std::string out(kHistogramHeader);
    out += '\n';
    for (std::size_t k = 0; k < rows.count.size(); ++k) {
        out += format_number(rows.bin_lo[k]);
        out += ',';
        out += format_number(rows.bin_hi[k]);
        out += ',';
        out += std::to_string(rows.count[k]);
        out += ',';
        out += format_number(rows.density[k]);
        out += '\n';
    }
    return out;
}

inline std::string format_histogram_csv(const Histogram& h) { return format_histogram_csv(histogram_rows(h)); }

inline HistogramRows parse_histogram_csv(std::string_view text) {
    HistogramRows rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        const std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != kHistogramHeader) {
                throw ParseError(1, "unexpected histogram CSV header");
            }
            continue;
        }
        std::string_view fields[4];
        std::size_t start = 0;
        for (int f = 0; f < 4; ++f) {
            const auto comma = f < 3 ? line.find(',', start) : line.size();
            if (comma == std::string_view::npos) {
                throw ParseError(line_no, "expected 4 fields");
            }
            fields[f] = line.substr(start, comma - start);
            start = comma + 1;
        }
        const auto lo = detail::parse_double(fields[0]);
        const auto hi = detail::parse_double(fields[1]);
        const auto count = detail::parse_uint(fields[2]);
        const auto density = detail::parse_double(fields[3]);
        if (!lo || !hi || !count || !density) {
            throw ParseError(line_no, "malformed histogram row");
        }
        rows.bin_lo.push_back(*lo);
        rows.bin_hi.push_back(*hi);
        rows.count.push_back(*count);
        rows.density.push_back(*density);
    }
    if (line_no == 0) {
        throw ParseError(0, "empty histogram CSV");
    }
    return rows;
}

inline std::string format_fit_csv(const SlopeFit& fit) {
    std::string out(kFitHeader);
    out += '\n';
    out += format_number(fit.slope) + ',' + format_number(fit.stderr_slope) + ',' +
           format_number(fit.intercept) + ',' + std::to_string(fit.n_points) + ',' +
           format_number(fit.z_min) + ',' + format_number(fit.z_max) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Running

struct HistogramOutput {
    HistogramRequest request;
    Histogram histogram;
    std::optional<SlopeFit> fit;
    std::size_t skipped_ratios = 0;
};

struct ExperimentReport {
    EnsembleResult ensemble;
    std::vector<HistogramOutput> outputs;
    std::vector<std::filesystem::path> files;
};

inline std::vector<std::pair<std::string, std::string>> meta_rows(const ExperimentSpec& spec,
                                                                  const std::vector<HistogramOutput>& outputs) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("name", spec.name);
    rows.emplace_back("strategy", std::string(strategy_name(spec.config.strategy)));
    std::visit(
        [&](const auto& rule) {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, FollowCrowd>) {
                rows.emplace_back("epsilon", format_number(rule.epsilon));
            } else if constexpr (std::is_same_v<T, FixedPreference>) {
                rows.emplace_back("alpha", format_number(rule.alpha));
            } else if constexpr (std::is_same_v<T, RandomPreference>) {
                rows.emplace_back("alpha_abs", format_number(rule.alpha_abs));
            } else if constexpr (std::is_same_v<T, HistoryWeighted>) {
                rows.emplace_back("gamma", format_number(rule.gamma));
                rows.emplace_back("delta", format_number(rule.delta));
            }
        },
        spec.config.strategy);
    rows.emplace_back("n_agents", std::to_string(spec.config.n_agents));
    rows.emplace_back("n_days", std::to_string(spec.config.n_days));
    rows.emplace_back("seed", std::to_string(spec.config.seed));
    for (const auto& o : outputs) {
        const std::string t(target_name(o.request.target));
        const Binning& b = o.request.binning;
        rows.emplace_back(t + ".binning", binning_name(b.kind));
        rows.emplace_back(t + ".lo", format_number(b.lo));
        rows.emplace_back(t + ".hi", format_number(b.hi));
        rows.emplace_back(t + ".bins", std::to_string(b.n_bins));
        rows.emplace_back(t + ".samples", std::to_string(o.histogram.total));
        rows.emplace_back(t + ".underflow", std::to_string(o.histogram.underflow));
        rows.emplace_back(t + ".overflow", std::to_string(o.histogram.overflow));
        if (is_ratio_target(o.request.target)) {
            rows.emplace_back(t + ".skipped_zero_denominator", std::to_string(o.skipped_ratios));
        }
        if (o.request.fit_range) {
            rows.emplace_back(t + ".fit_min", format_number(o.request.fit_range->z_min));
            rows.emplace_back(t + ".fit_max", format_number(o.request.fit_range->z_max));
        }
    }
    return rows;
}

inline std::string format_meta_csv(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string out = "key,value\n";
    for (const auto& [k, v] : rows) {
        out += k + ',' + v + '\n';
    }
    return out;
}

// Computes every requested histogram (and fit) from a finished ensemble.
inline std::vector<HistogramOutput> analyze(const ExperimentSpec& spec, const EnsembleResult& ensemble) {
    std::vector<HistogramOutput> outputs;
    for (const auto& req : spec.histograms) {
        validate_request(req, spec.config);
        HistogramOutput out{req, {}, std::nullopt, 0};
        if (req.target == Target::FixedPoints) {
            const auto samples = ensemble.fixed_points();
            out.histogram = build_histogram(samples, req.binning);
        } else {
            const auto series = queue_ratio_series(ensemble.days, req.target == Target::RatiosA ? Side::A : Side::B);
            out.skipped_ratios = series.skipped;
            out.histogram = build_histogram(series.ratios, req.binning);
        }
        if (req.fit_range) {
            out.fit = fit_powerlaw_tail(out.histogram, req.fit_range->z_min, req.fit_range->z_max);
        }
        outputs.push_back(std::move(out));
    }
    return outputs;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << contents;
    out.close();
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

} // namespace detail

// Runs the ensemble and writes, into spec.output_dir:
//   <name>.<target>.csv      one per histogram request
//   <name>.<target>.fit.csv  when the request has a fit range
//   <name>.meta.csv          configuration, seed and sample tallies
// Output bytes depend only on the spec, not on `threads`.
inline ExperimentReport run_experiment(const ExperimentSpec& spec, unsigned threads = 1) {
    if (spec.histograms.empty()) {
        throw ContractViolation("experiment without histogram requests");
    }
    std::error_code ec;
    std::filesystem::create_directories(spec.output_dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create " + spec.output_dir.string() + ": " + ec.message());
    }

    ExperimentReport report;
    report.ensemble = run_ensemble(spec.config, threads);
    report.outputs = analyze(spec, report.ensemble);

    for (const auto& o : report.outputs) {
        const std::string stem = spec.name + '.' + std::string(target_name(o.request.target));
        const auto hist_path = spec.output_dir / (stem + ".csv");
        detail::write_file(hist_path, format_histogram_csv(o.histogram));
        report.files.push_back(hist_path);
        if (o.fit) {
            const auto fit_path = spec.output_dir / (stem + ".fit.csv");
            detail::write_file(fit_path, format_fit_csv(*o.fit));
            report.files.push_back(fit_path);
        }
    }
    const auto meta_path = spec.output_dir / (spec.name + ".meta.csv");
    detail::write_file(meta_path, format_meta_csv(meta_rows(spec, report.outputs)));
    report.files.push_back(meta_path);
    return report;
}

} // namespace urn
