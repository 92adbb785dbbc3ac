#include "plnet/data.hpp"

#include "plnet/baseline.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using plnet::Dataset;
using plnet::GeneratorConfig;

namespace {

auto parse(std::string const& text) -> Dataset
{
    std::istringstream in(text);
    return plnet::parse_csv(in, "inline");
}

auto header() -> std::string { return std::string(plnet::csv_header) + "\n"; }

auto grid_dataset(std::size_t n) -> Dataset
{
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        ds.samples.push_back({10.0 + static_cast<double>(i), i % 2 == 0 ? 3400.0 : 5300.0,
                              100.0 + static_cast<double>(i), "A"});
    }
    return ds;
}

auto sorted_rows(std::vector<plnet::Sample> v) -> std::vector<plnet::Sample>
{
    std::sort(v.begin(), v.end(), [](auto const& a, auto const& b) {
        return std::tie(a.distance_m, a.frequency_mhz, a.path_loss_db)
               < std::tie(b.distance_m, b.frequency_mhz, b.path_loss_db);
    });
    return v;
}

} // namespace

TEST(Csv, SingleRow)
{
    auto const ds = parse(header() + "100,3400,95.2,A\n");
    ASSERT_EQ(ds.size(), 1U);
    EXPECT_EQ(ds.samples[0], (plnet::Sample{100.0, 3400.0, 95.2, "A"}));
}

TEST(Csv, HeaderOnlyIsEmpty)
{
    EXPECT_TRUE(parse(header()).empty());
    EXPECT_THROW((void)plnet::fit_transform(parse(header())), plnet::ArgumentError);
}

TEST(Csv, NegativeDistanceNamesRow)
{
    try {
        (void)parse(header() + "-5,3400,95.2,A\n");
        FAIL() << "expected ParseError";
    } catch (plnet::ParseError const& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
}

TEST(Csv, MalformedInputs)
{
    EXPECT_THROW((void)parse("distance,frequency,loss,area\n1,2,3,A\n"), plnet::ParseError);
    EXPECT_THROW((void)parse(""), plnet::ParseError);
    EXPECT_THROW((void)parse(header() + "100,abc,95,A\n"), plnet::ParseError);
    EXPECT_THROW((void)parse(header() + "100,3400,95\n"), plnet::ParseError);
    EXPECT_THROW((void)parse(header() + "100,0,95,A\n"), plnet::ParseError);
    EXPECT_THROW((void)parse(header() + "100,3400,nan,A\n"), plnet::ParseError);
    try {
        (void)parse(header() + "100,3400,95,A\n200,3400,x,A\n");
        FAIL();
    } catch (plnet::ParseError const& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
}

TEST(Csv, ToleratesCrlfBomAndBlankLines)
{
    auto const ds = parse("\xEF\xBB\xBF" + std::string(plnet::csv_header) + "\r\n100,3400,95.5,B\r\n\r\n");
    ASSERT_EQ(ds.size(), 1U);
    EXPECT_EQ(ds.samples[0].area, "B");
}

TEST(Csv, RoundTripIsExact)
{
    GeneratorConfig g = plnet::area_b_analog();
    g.samples_per_frequency = 50;
    auto const ds = plnet::generate(g);
    auto const back = parse(plnet::to_csv(ds));
    EXPECT_EQ(back.samples, ds.samples);
}

TEST(Csv, MissingFileIsAnIoError)
{
    EXPECT_THROW((void)plnet::load_csv("/nonexistent/plnet/data.csv"), plnet::IoError);
}

TEST(Csv, FileRoundTrip)
{
    auto const dir = plnet::testing::scratch_dir("csv");
    auto const ds = grid_dataset(12);
    auto const path = (dir / "d.csv").string();
    plnet::write_csv(path, ds);
    auto const back = plnet::load_csv(path);
    EXPECT_EQ(back.samples, ds.samples);
    EXPECT_NE(back.provenance.find("d.csv"), std::string::npos);
}

TEST(Split, SizesFollowFloorRule)
{
    for (std::size_t n : {10U, 11U, 19U, 100U, 101U, 6000U}) {
        auto const s = plnet::split(grid_dataset(n), 3);
        EXPECT_EQ(s.learn.size(), n * 8 / 10) << n;
        EXPECT_EQ(s.validation.size(), n / 10) << n;
        EXPECT_EQ(s.test.size(), n - n * 8 / 10 - n / 10) << n;
    }
    auto const hundred = plnet::split(grid_dataset(100), 1);
    EXPECT_EQ(hundred.learn.size(), 80U);
    EXPECT_EQ(hundred.validation.size(), 10U);
    EXPECT_EQ(hundred.test.size(), 10U);
}

TEST(Split, PaperSampleCount)
{
    EXPECT_EQ(plnet::split(grid_dataset(22160), 9).learn.size(), 17728U);
}

TEST(Split, IsAPartitionAndDeterministic)
{
    auto const ds = grid_dataset(57);
    auto const a = plnet::split(ds, 42);
    auto const b = plnet::split(ds, 42);
    EXPECT_EQ(a.learn.samples, b.learn.samples);
    EXPECT_EQ(a.test.samples, b.test.samples);
    EXPECT_NE(a.learn.samples, plnet::split(ds, 43).learn.samples);

    std::vector<plnet::Sample> all = a.learn.samples;
    all.insert(all.end(), a.validation.samples.begin(), a.validation.samples.end());
    all.insert(all.end(), a.test.samples.begin(), a.test.samples.end());
    EXPECT_EQ(sorted_rows(all), sorted_rows(ds.samples));
}

TEST(Split, TooSmallIsAnArgumentError)
{
    EXPECT_THROW((void)plnet::split(grid_dataset(9), 1), plnet::ArgumentError);
}

TEST(Transform, TwoPointStandardization)
{
    Dataset ds;
    ds.samples = {{10.0, 3400.0, 90.0, "A"}, {1000.0, 5300.0, 120.0, "A"}};
    auto const t = plnet::fit_transform(ds);
    auto const logs = plnet::log_features(ds);
    EXPECT_DOUBLE_EQ(logs(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(logs(1, 0), 3.0);
    auto const z = plnet::apply_transform(t, ds);
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(Transform, LearnSplitIsStandardized)
{
    GeneratorConfig g = plnet::area_b_analog();
    g.samples_per_frequency = 300;
    auto const s = plnet::split(plnet::generate(g), 5);
    auto const t = plnet::fit_transform(s.learn);
    auto const z = plnet::apply_transform(t, s.learn);
    auto const mean = plnet::column_mean(z);
    auto const sd = plnet::column_std(z);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(mean[j], 0.0, 1e-12);
        EXPECT_NEAR(sd[j], 1.0, 1e-12);
    }
    auto const test_mean = plnet::column_mean(plnet::apply_transform(t, s.test));
    EXPECT_NE(test_mean[0], 0.0);
}

TEST(Transform, InverseRoundTrip)
{
    plnet::FeatureTransform t;
    t.mean = {2.1, 3.6};
    t.stddev = {0.57, 0.09};
    plnet::Rng rng(3);
    auto const m = plnet::uniform(rng, -10.0, 10.0, 50, 2);
    auto const back = t.inverse(t.forward(m));
    for (std::size_t k = 0; k < m.size(); ++k) { EXPECT_NEAR(back.data()[k], m.data()[k], 1e-12); }
    EXPECT_THROW((void)t.forward(plnet::Matrix(2, 3)), plnet::ShapeError);
}

TEST(Transform, SingleFrequencyIsRejectedByName)
{
    Dataset ds;
    for (int i = 1; i <= 5; ++i) { ds.samples.push_back({10.0 * i, 3400.0, 90.0, "A"}); }
    try {
        (void)plnet::fit_transform(ds);
        FAIL();
    } catch (plnet::ArgumentError const& e) {
        EXPECT_NE(std::string(e.what()).find("frequency"), std::string::npos);
    }
}

TEST(Transform, DependsOnLearnSplitOnly)
{
    GeneratorConfig g = plnet::area_a_analog();
    g.samples_per_frequency = 100;
    auto s = plnet::split(plnet::generate(g), 8);
    auto const before = plnet::fit_transform(s.learn);
    for (auto& smp : s.test.samples) {
        smp.distance_m *= 3.0;
        smp.path_loss_db += 50.0;
    }
    EXPECT_EQ(plnet::fit_transform(s.learn), before);
}

TEST(Transform, PointRejectsNonPositiveInputs)
{
    plnet::FeatureTransform const t;
    EXPECT_THROW((void)plnet::transform_point(t, 0.0, 3400.0), plnet::ArgumentError);
    EXPECT_THROW((void)plnet::transform_point(t, 10.0, -1.0), plnet::ArgumentError);
}

TEST(Generator, DeterministicPerSeed)
{
    GeneratorConfig g = plnet::area_b_analog();
    g.samples_per_frequency = 200;
    EXPECT_EQ(plnet::generate(g).samples, plnet::generate(g).samples);
    auto h = g;
    h.seed = 2;
    EXPECT_NE(plnet::generate(g).samples, plnet::generate(h).samples);
}

TEST(Generator, PresetShape)
{
    auto const ds = plnet::generate(plnet::area_b_analog());
    EXPECT_EQ(ds.size(), 6000U);
    for (auto const& s : ds.samples) {
        EXPECT_GE(s.distance_m, 10.0);
        EXPECT_LT(s.distance_m, 1000.0);
        EXPECT_EQ(s.area, "B");
    }
    EXPECT_THROW((void)plnet::preset("area-c"), plnet::ConfigError);
}

TEST(Generator, ContinuousAtBreakpoint)
{
    auto const g = plnet::area_b_analog();
    double const below = g.mean_path_loss(std::nextafter(g.breakpoint, 0.0), 3400.0);
    double const at = g.mean_path_loss(g.breakpoint, 3400.0);
    EXPECT_NEAR(below, at, 1e-9);
    // Slopes on either side.
    double const near = g.mean_path_loss(100.0, 3400.0) - g.mean_path_loss(10.0, 3400.0);
    double const far = g.mean_path_loss(1000.0, 3400.0) - g.mean_path_loss(400.0, 3400.0);
    EXPECT_NEAR(near, g.slope_near, 1e-9);
    EXPECT_NEAR(far, g.slope_far * std::log10(2.5), 1e-9);
}

TEST(Generator, NoiselessSingleSlopeIsExactlyLinear)
{
    GeneratorConfig g = plnet::area_a_analog();
    g.noise_sigma = 0.0;
    g.samples_per_frequency = 100;
    for (auto const& s : plnet::generate(g).samples) {
        double const expected = g.intercept + g.slope_near * std::log10(s.distance_m)
                                + g.freq_slope * std::log10(s.frequency_mhz);
        EXPECT_NEAR(s.path_loss_db, expected, 1e-10);
    }
}

TEST(Generator, NoiseHasConfiguredSpread)
{
    GeneratorConfig g = plnet::area_b_analog();
    double sq = 0.0;
    auto const ds = plnet::generate(g);
    for (auto const& s : ds.samples) {
        double const r = s.path_loss_db - g.mean_path_loss(s.distance_m, s.frequency_mhz);
        sq += r * r;
    }
    EXPECT_NEAR(std::sqrt(sq / static_cast<double>(ds.size())), g.noise_sigma, 0.25);
}

TEST(Generator, AreaBLinearFitIsMisspecified)
{
    auto const g = plnet::area_b_analog();
    auto const ds = plnet::generate(g);
    auto const m = plnet::fit_ols(ds);
    auto const pred = plnet::predict_linear(m, ds);
    double sq = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double const r = pred(i, 0) - ds.samples[i].path_loss_db;
        sq += r * r;
    }
    EXPECT_GT(std::sqrt(sq / static_cast<double>(ds.size())), g.noise_sigma);
}

TEST(Generator, InvalidConfigsAreRejected)
{
    auto bad = [](auto mutate) {
        GeneratorConfig g;
        mutate(g);
        return g;
    };
    EXPECT_THROW(bad([](auto& g) { g.breakpoint = 5.0; }).validate(), plnet::ArgumentError);
    EXPECT_THROW(bad([](auto& g) { g.noise_sigma = -1.0; }).validate(), plnet::ArgumentError);
    EXPECT_THROW(bad([](auto& g) { g.distance_min = 0.0; }).validate(), plnet::ArgumentError);
    EXPECT_THROW(bad([](auto& g) { g.frequencies.clear(); }).validate(), plnet::ArgumentError);
    EXPECT_THROW(bad([](auto& g) { g.samples_per_frequency = 0; }).validate(), plnet::ArgumentError);
    EXPECT_THROW(bad([](auto& g) { g.area = "a,b"; }).validate(), plnet::ArgumentError);
}

TEST(FormatDouble, ShortestRoundTrip)
{
    for (double v : {0.1, 1.0 / 3.0, 95.2, 1e-300, -123456.789, 6.02214076e23}) {
        EXPECT_EQ(std::stod(plnet::format_double(v)), v);
    }
    EXPECT_EQ(plnet::format_double(95.2), "95.2");
}
