#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "urn/experiment.hpp"

namespace urn {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(fs::temp_directory_path() / ("urn_test_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string parse_error(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "ok";
}

constexpr std::string_view kPreferenceSweep = R"(
# Polya reference line of the fixed-point figure
name = polya_reference
strategy = follow_crowd
epsilon = 1
n_agents = 5000
n_days = 40000
seed = 1

[histogram]
target = fixed_points
binning = linear
lo = 0
hi = 1
bins = 50
)";

TEST(ParseConfig, FixedPointReference) {
    const auto spec = parse_config(kPreferenceSweep);
    EXPECT_EQ(spec.name, "polya_reference");
    ASSERT_TRUE(std::holds_alternative<FollowCrowd>(spec.config.strategy));
    EXPECT_EQ(std::get<FollowCrowd>(spec.config.strategy).epsilon, 1.0);
    EXPECT_EQ(spec.config.n_agents, 5000u);
    EXPECT_EQ(spec.config.n_days, 40000u);
    EXPECT_EQ(spec.config.seed, 1u);
    ASSERT_EQ(spec.histograms.size(), 1u);
    EXPECT_EQ(spec.histograms[0].target, Target::FixedPoints);
    EXPECT_EQ(spec.histograms[0].binning, Binning::linear(0, 1, 50));
    EXPECT_FALSE(spec.histograms[0].fit_range);
}

TEST(ParseConfig, HistoryParameters) {
    const auto spec = parse_config(R"([experiment]
name = h
strategy = history_weighted
gamma = 0.7
delta = 1.1
n_agents = 5000
n_days = 15000
[histogram]
target = ratios_A
fit_min = 1
fit_max = 30
)");
    const auto& rule = std::get<HistoryWeighted>(spec.config.strategy);
    EXPECT_EQ(rule.gamma, 0.7);
    EXPECT_EQ(rule.delta, 1.1);
    EXPECT_EQ(spec.config.seed, 0u);
    EXPECT_EQ(spec.histograms[0].binning, Binning::logarithmic(1, 100, 40));
    ASSERT_TRUE(spec.histograms[0].fit_range);
    EXPECT_EQ(spec.histograms[0].fit_range->z_max, 30.0);
}

TEST(ParseConfig, MissingRequiredParameter) {
    EXPECT_EQ(parse_error("name=x\nstrategy = fixed_preference\nn_agents=10\nn_days=10\n[histogram]\ntarget=fixed_points\n"),
              "alpha required by fixed_preference");
}

TEST(ParseConfig, UnknownKeyIsAnError) {
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agent=10\nn_days=10\n"), "line 3: unknown key n_agent");
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agents=10\nn_days=10\n[histogram]\ntarget=fixed_points\nbin=3\n"),
              "line 7: unknown key bin");
}

TEST(ParseConfig, ParameterNotUsedByStrategy) {
    EXPECT_EQ(parse_error("name=x\nstrategy=follow_crowd\nepsilon=1\nalpha=0.3\nn_agents=1\nn_days=1\n"),
              "line 4: alpha is not used by follow_crowd");
}

TEST(ParseConfig, RangeErrorsPointAtTheKey) {
    EXPECT_EQ(parse_error("name=x\nstrategy=fixed_preference\nalpha = 1.5\nn_agents=1\nn_days=1\n[histogram]\ntarget=fixed_points\n"),
              "line 3: alpha > 1");
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agents=0\nn_days=1\n[histogram]\ntarget=fixed_points\n"),
              "line 3: n_agents < 1");
}

TEST(ParseConfig, RatiosNeedTwoDays) {
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agents=10\nn_days=1\n[histogram]\ntarget=ratios_A\n"),
              "line 5: ratios require n_days >= 2");
}

TEST(ParseConfig, SyntaxErrors) {
    EXPECT_EQ(parse_error("name=x\nstrategy random\n"), "line 2: expected `key = value`");
    EXPECT_EQ(parse_error("name=x\n[histogram\n"), "line 2: unterminated section header");
    EXPECT_EQ(parse_error("name=x\n[plot]\n"), "line 2: unknown section [plot]");
    EXPECT_EQ(parse_error("name=x\nname=y\n"), "line 2: duplicate key name");
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agents=ten\n"), "line 3: n_agents: expected a non-negative integer, got 'ten'");
    EXPECT_EQ(parse_error("name=x\nstrategy=banana\n"), "line 2: unknown strategy 'banana'");
    EXPECT_EQ(parse_error("name=x\nstrategy=random\nn_agents=3\nn_days=3\n"),
              "at least one [histogram] section required");
}

TEST(ParseConfig, HistogramErrors) {
    const std::string head = "name=x\nstrategy=random\nn_agents=10\nn_days=10\n[histogram]\n";
    EXPECT_EQ(parse_error(head + "binning=log\n"), "line 5: target required in [histogram]");
    EXPECT_EQ(parse_error(head + "target=fixed_points\nfit_min=1\nfit_max=3\n"), "line 7: a fit range needs log binning");
    EXPECT_EQ(parse_error(head + "target=ratios_A\nfit_min=1\n"), "line 5: fit_min and fit_max must be given together");
    EXPECT_EQ(parse_error(head + "target=ratios_A\nbins=0\n"), "line 7: bins must be positive");
    EXPECT_EQ(parse_error(head + "target=ratios_A\nlo=0\n"), "line 7: logarithmic binning needs lo > 0");
    EXPECT_EQ(parse_error(head + "target=ratios_A\n[histogram]\ntarget=ratios_A\n"),
              "line 7: duplicate histogram target ratios_A");
}

TEST(ParseConfig, DefaultNameComesFromCaller) {
    const auto spec = parse_config("strategy=random\nn_agents=3\nn_days=3\n[histogram]\ntarget=fixed_points\n", "stem");
    EXPECT_EQ(spec.name, "stem");
    EXPECT_EQ(parse_error("strategy=random\nn_agents=3\nn_days=3\n[histogram]\ntarget=fixed_points\n"),
              "name required");
}

TEST(ShippedConfigs, AllParse) {
    std::size_t n = 0;
    for (const auto* scale : {"full", "desk"}) {
        for (const auto& entry : fs::directory_iterator(fs::path(URN_CONFIG_DIR) / scale)) {
            EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
            ++n;
        }
    }
    EXPECT_GT(n, 0u);
}

// ---------------------------------------------------------------------------
// Output

ExperimentSpec small_spec(const fs::path& out) {
    auto spec = load_config(fs::path(URN_TEST_DATA_DIR) / "golden_small.ini");
    spec.output_dir = out;
    return spec;
}

TEST(RunExperiment, WritesExpectedFiles) {
    TempDir dir("files");
    const auto report = run_experiment(small_spec(dir.path()));
    std::vector<std::string> names;
    for (const auto& f : report.files) {
        names.push_back(f.filename().string());
        EXPECT_TRUE(fs::exists(f));
    }
    EXPECT_EQ(names, (std::vector<std::string>{"small.fixed_points.csv", "small.ratios_A.csv", "small.ratios_A.fit.csv",
                                               "small.ratios_B.csv", "small.meta.csv"}));

    const std::string hist = slurp(dir.path() / "small.fixed_points.csv");
    EXPECT_EQ(hist.substr(0, hist.find('\n')), "bin_lo,bin_hi,count,density");
    const std::string fit = slurp(dir.path() / "small.ratios_A.fit.csv");
    EXPECT_EQ(fit.substr(0, fit.find('\n')), "slope,stderr,intercept,n_points,z_min,z_max");
    const std::string meta = slurp(dir.path() / "small.meta.csv");
    EXPECT_NE(meta.find("strategy,follow_crowd\n"), std::string::npos);
    EXPECT_NE(meta.find("seed,9\n"), std::string::npos);
    EXPECT_NE(meta.find("ratios_A.skipped_zero_denominator,"), std::string::npos);
}

TEST(RunExperiment, ByteIdenticalAcrossRunsAndThreads) {
    TempDir one("t1");
    TempDir many("t5");
    const auto a = run_experiment(small_spec(one.path()), 1);
    const auto b = run_experiment(small_spec(many.path()), 5);
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        EXPECT_EQ(slurp(a.files[i]), slurp(b.files[i])) << a.files[i].filename();
    }
    const std::string first = slurp(a.files[0]);
    run_experiment(small_spec(one.path()), 3);
    EXPECT_EQ(slurp(a.files[0]), first);
}

TEST(RunExperiment, MatchesGoldenFiles) {
    TempDir dir("golden");
    const auto report = run_experiment(small_spec(dir.path()), 2);
    for (const auto& f : report.files) {
        const fs::path golden = fs::path(URN_GOLDEN_DIR) / f.filename();
        ASSERT_TRUE(fs::exists(golden)) << golden;
        EXPECT_EQ(slurp(f), slurp(golden)) << f.filename();
    }
}

TEST(RunExperiment, HistogramCsvRoundTrips) {
    TempDir dir("roundtrip");
    const auto report = run_experiment(small_spec(dir.path()));
    for (const auto& out : report.outputs) {
        const std::string text = format_histogram_csv(out.histogram);
        const HistogramRows rows = parse_histogram_csv(text);
        EXPECT_EQ(rows.count, out.histogram.counts);
        for (std::size_t k = 0; k < rows.count.size(); ++k) {
            EXPECT_NEAR(rows.bin_lo[k], out.histogram.bin_lo(k), 1e-11 * std::fabs(out.histogram.bin_lo(k)) + 1e-300);
            EXPECT_NEAR(rows.bin_hi[k], out.histogram.bin_hi(k), 1e-11 * out.histogram.bin_hi(k));
            EXPECT_NEAR(rows.density[k], out.histogram.density[k], 1e-11 * out.histogram.density[k]);
        }
        // Formatting what was parsed gives the same bytes back.
        EXPECT_EQ(format_histogram_csv(rows), text);
    }
}

TEST(RunExperiment, ParseHistogramCsvRejectsGarbage) {
    EXPECT_THROW(parse_histogram_csv(""), ParseError);
    EXPECT_THROW(parse_histogram_csv("a,b,c,d\n"), ParseError);
    EXPECT_THROW(parse_histogram_csv("bin_lo,bin_hi,count,density\n0,1,x,1\n"), ParseError);
    EXPECT_THROW(parse_histogram_csv("bin_lo,bin_hi,count,density\n0,1,2\n"), ParseError);
}

TEST(RunExperiment, UnwritableOutputFails) {
    TempDir dir("unwritable");
    const fs::path blocker = dir.path() / "file";
    std::ofstream(blocker) << "x";
    EXPECT_THROW(run_experiment(small_spec(blocker / "sub")), std::runtime_error);
}

TEST(RunExperiment, PolyaReferenceIsFlat) {
    TempDir dir("fig1");
    auto spec = parse_config(kPreferenceSweep);
    spec.output_dir = dir.path();
    run_experiment(spec, 2);
    const auto rows = parse_histogram_csv(slurp(dir.path() / "polya_reference.fixed_points.csv"));
    ASSERT_EQ(rows.density.size(), 50u);
    const double sigma = std::sqrt(40000.0 / 50.0) * 50.0 / 40000.0;
    for (const double d : rows.density) {
        EXPECT_NEAR(d, 1.0, 4 * sigma);
    }
}

TEST(RunExperiment, PolyaRatioSlope) {
    TempDir dir("fig4");
    auto spec = parse_config(R"(
name = polya_ratio
strategy = follow_crowd
epsilon = 1
n_agents = 5000
n_days = 10000
seed = 4
[histogram]
target = ratios_A
binning = log
lo = 1
hi = 100
bins = 40
fit_min = 1
fit_max = 30
)");
    spec.output_dir = dir.path();
    const auto report = run_experiment(spec, 2);
    const std::string fit = slurp(dir.path() / "polya_ratio.ratios_A.fit.csv");
    const double slope = std::stod(fit.substr(fit.find('\n') + 1));
    EXPECT_GE(slope, -2.15);
    EXPECT_LE(slope, -1.85);
    EXPECT_EQ(format_number(report.outputs[0].fit->slope), fit.substr(fit.find('\n') + 1, fit.find(',', fit.find('\n')) - fit.find('\n') - 1));
}

TEST(FormatNumber, TwelveSignificantDigits) {
    EXPECT_EQ(format_number(1.0), "1");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(1.1220184543019633), "1.1220184543");
    EXPECT_EQ(format_number(2.5e-7), "2.5e-07");
}

} // namespace
} // namespace urn
