#include "plnet/config.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using plnet::ConfigError;
using plnet::json;
using plnet::RunConfig;

TEST(Toml, TablesScalarsAndArrays)
{
    auto const doc = plnet::parse_toml(R"(# run settings
seed = 7
out_dir = "out dir"   # trailing comment

[network]
activation = 'relu'
hidden_layers = 6
l2_alpha = 1e-4

[data.generator]
noise_sigma = 0.0
frequencies = [3400, 5300.5,
               6400]
flag = true
big = 1_000
)");
    EXPECT_EQ(doc.at("seed"), 7);
    EXPECT_EQ(doc.at("out_dir"), "out dir");
    EXPECT_EQ(doc.at("network").at("activation"), "relu");
    EXPECT_EQ(doc.at("network").at("hidden_layers"), 6);
    EXPECT_DOUBLE_EQ(doc.at("network").at("l2_alpha").get<double>(), 1e-4);
    auto const& g = doc.at("data").at("generator");
    EXPECT_EQ(g.at("frequencies").size(), 3U);
    EXPECT_DOUBLE_EQ(g.at("frequencies")[1].get<double>(), 5300.5);
    EXPECT_EQ(g.at("flag"), true);
    EXPECT_EQ(g.at("big"), 1000);
}

TEST(Toml, DottedKeysAndInlineTables)
{
    auto const doc = plnet::parse_toml("data.generator = { seed = 3, area = \"C\" }\nsweep.grid = [1, 2]\n");
    EXPECT_EQ(doc.at("data").at("generator").at("seed"), 3);
    EXPECT_EQ(doc.at("data").at("generator").at("area"), "C");
    EXPECT_EQ(doc.at("sweep").at("grid"), json::array({1, 2}));
}

TEST(Toml, ErrorsCarryLineNumbers)
{
    auto line_of = [](std::string const& text) -> std::string {
        try {
            (void)plnet::parse_toml(text);
        } catch (ConfigError const& e) {
            return e.what();
        }
        return "no error";
    };
    EXPECT_NE(line_of("seed = 1\nseed = 2\n").find("line 2"), std::string::npos);
    EXPECT_NE(line_of("a = 1\n\nb = \"open\n").find("line 3"), std::string::npos);
    EXPECT_NE(line_of("x = nope\n").find("line 1"), std::string::npos);
    EXPECT_NE(line_of("[[tables]]\n").find("not supported"), std::string::npos);
    EXPECT_NE(line_of("a = 1 b = 2\n").find("line 1"), std::string::npos);
}

TEST(ConfigText, JsonIsAccepted)
{
    auto const doc = plnet::parse_config_text(R"({"seed": 5, "network": {"hidden_nodes": 12}})");
    RunConfig c;
    plnet::apply_config(c, doc);
    EXPECT_EQ(c.seed, 5U);
    EXPECT_EQ(c.network.hidden_nodes, 12U);
    EXPECT_THROW((void)plnet::parse_config_text("{ broken"), ConfigError);
}

TEST(RunConfig, DefaultsMatchLibraryDefaults)
{
    RunConfig const c;
    EXPECT_EQ(c.network, plnet::NetworkConfig{});
    EXPECT_EQ(c.optimizer, plnet::OptimizerConfig{});
    EXPECT_EQ(c.method, plnet::Method::lbfgs);
    EXPECT_EQ(c.eval_models, plnet::default_eval_configs());
    EXPECT_EQ(c.resolved_grid(), plnet::default_layer_grid());
    EXPECT_EQ(c.data_preset, "area-b-analog");
}

TEST(RunConfig, AppliesEverySection)
{
    RunConfig c;
    plnet::apply_config(c, plnet::parse_toml(R"(
seed = 3
jobs = 2
[data]
preset = "area-a-analog"
generator = { samples_per_frequency = 50, noise_sigma = 1.5 }
[network]
activation = "sigmoid"
hidden_layers = 2
hidden_nodes = 9
l2_alpha = 0.01
[optimizer]
method = "gd"
memory = 4
max_iterations = 12
tolerance = 1e-7
loss_change_tolerance = 0
learning_rate = 0.002
wolfe_c1 = 0.001
wolfe_c2 = 0.5
max_line_search_steps = 7
[evaluate]
models = ["relu-6x40", "tanh-1x20"]
baseline_variant = "per-frequency"
baseline_protocol = "all"
[sweep]
axis = "nodes"
grid = [20, 40, 80]
activations = ["tanh"]
)"));
    EXPECT_EQ(c.seed, 3U);
    EXPECT_EQ(c.jobs, 2U);
    auto const g = c.generator();
    EXPECT_EQ(g.samples_per_frequency, 50U);
    EXPECT_EQ(g.noise_sigma, 1.5);
    EXPECT_EQ(g.slope_near, plnet::area_a_analog().slope_near);
    EXPECT_EQ(g.seed, c.sub_seed(plnet::SeedStream::data));
    EXPECT_EQ(c.network, (plnet::NetworkConfig{2, 2, 9, plnet::Activation::sigmoid, 0.01}));
    EXPECT_EQ(c.method, plnet::Method::gd);
    EXPECT_EQ(c.optimizer.memory, 4U);
    EXPECT_EQ(c.optimizer.max_iterations, 12U);
    EXPECT_EQ(c.optimizer.loss_change_tolerance, 0.0);
    EXPECT_EQ(c.optimizer.learning_rate, 0.002);
    EXPECT_EQ(c.optimizer.max_line_search_steps, 7U);
    ASSERT_EQ(c.eval_models.size(), 2U);
    EXPECT_EQ(c.eval_models[0], (plnet::NetworkConfig{2, 6, 40, plnet::Activation::relu, 0.01}));
    EXPECT_EQ(c.eval_models[1].hidden_nodes, 20U);
    EXPECT_EQ(c.baseline_variant, plnet::BaselineVariant::per_frequency);
    EXPECT_EQ(c.baseline_protocol, plnet::BaselineProtocol::all);
    EXPECT_EQ(c.sweep_axis, plnet::SweepAxis::nodes);
    EXPECT_EQ(c.resolved_grid(), (std::vector<std::size_t>{20, 40, 80}));
    EXPECT_EQ(c.sweep_activations, std::vector<plnet::Activation>{plnet::Activation::tanh});
}

TEST(RunConfig, LaterLayersOverrideEarlierOnes)
{
    RunConfig c;
    plnet::apply_config(c, plnet::parse_toml("seed = 3\n[network]\nhidden_nodes = 9\nactivation = \"relu\"\n"));
    plnet::apply_config(c, plnet::parse_toml("seed = 4\n[network]\nhidden_nodes = 11\n"));
    EXPECT_EQ(c.seed, 4U);
    EXPECT_EQ(c.network.hidden_nodes, 11U);
    EXPECT_EQ(c.network.activation, plnet::Activation::relu);
}

TEST(RunConfig, CsvAndPresetReplaceEachOther)
{
    RunConfig c;
    plnet::apply_config(c, json{{"data", {{"csv", "x.csv"}}}});
    EXPECT_EQ(c.data_csv, "x.csv");
    plnet::apply_config(c, json{{"data", {{"preset", "area-a-analog"}}}});
    EXPECT_TRUE(c.data_csv.empty());
}

TEST(RunConfig, RejectsBadValues)
{
    auto rejects = [](std::string const& toml) {
        RunConfig c;
        EXPECT_THROW(plnet::apply_config(c, plnet::parse_toml(toml)), ConfigError) << toml;
    };
    rejects("colour = 1\n");
    rejects("[network]\nwidth = 3\n");
    rejects("[network]\nactivation = \"swish\"\n");
    rejects("[network]\nhidden_layers = 0\n");
    rejects("[network]\nhidden_nodes = \"many\"\n");
    rejects("[network]\ninput_dim = 3\n");
    rejects("[optimizer]\nmethod = \"adam\"\n");
    rejects("[optimizer]\nwolfe_c2 = 2.0\n");
    rejects("[data]\npreset = \"area-z\"\n");
    rejects("[data.generator]\nslope = 3\n");
    rejects("[evaluate]\nmodels = [\"relu6x40\"]\n");
    rejects("[evaluate]\nmodels = [\"relu-0x40\"]\n");
    rejects("[evaluate]\nbaseline_protocol = \"some\"\n");
    rejects("[sweep]\naxis = \"width\"\n");
    rejects("[sweep]\ngrid = [0, 1]\n");
    rejects("jobs = 0\n");
    rejects("network = 3\n");
}

TEST(RunConfig, GeneratorOverrideValidationHappensAtResolution)
{
    RunConfig c;
    plnet::apply_config(c, plnet::parse_toml("[data.generator]\nbreakpoint = 5000\n"));
    EXPECT_THROW((void)plnet::resolve_dataset(c), ConfigError);
}

TEST(RunConfig, EchoExcludesRunSettingsAndIsStable)
{
    RunConfig a;
    RunConfig b;
    b.out_dir = "/elsewhere";
    b.jobs = 8;
    EXPECT_EQ(plnet::to_json(a), plnet::to_json(b));
    auto const echo = plnet::to_json(a);
    EXPECT_FALSE(echo.contains("out_dir"));
    EXPECT_FALSE(echo.contains("jobs"));
    // The echo is itself a valid config document.
    RunConfig c;
    plnet::apply_config(c, echo);
    EXPECT_EQ(plnet::to_json(c), echo);
}

TEST(RunConfig, SubSeedsAreDistinct)
{
    RunConfig c;
    c.seed = 12;
    EXPECT_NE(c.sub_seed(plnet::SeedStream::data), c.sub_seed(plnet::SeedStream::split));
    EXPECT_NE(c.sub_seed(plnet::SeedStream::model), c.sub_seed(plnet::SeedStream::experiment));
    EXPECT_EQ(c.sub_seed(plnet::SeedStream::split), plnet::derive_seed(12, 1));
}

TEST(ModelSpec, Parsing)
{
    auto const c = plnet::parse_model_spec("sigmoid-3x25", 0.5);
    EXPECT_EQ(c, (plnet::NetworkConfig{2, 3, 25, plnet::Activation::sigmoid, 0.5}));
    EXPECT_THROW((void)plnet::parse_model_spec("tanh", 0.0), ConfigError);
    EXPECT_THROW((void)plnet::parse_model_spec("tanh-1x", 0.0), ConfigError);
}

TEST(ConfigFile, LoadFromDisk)
{
    auto const dir = plnet::testing::scratch_dir("config");
    auto const path = (dir / "run.toml").string();
    plnet::write_text(path, "seed = 99\n");
    RunConfig c;
    plnet::apply_config(c, plnet::load_config_file(path));
    EXPECT_EQ(c.seed, 99U);
    EXPECT_THROW((void)plnet::load_config_file((dir / "absent.toml").string()), plnet::IoError);
}

TEST(ConfigFile, ShippedSamplesLoad)
{
    std::size_t seen = 0;
    for (auto const& entry : std::filesystem::directory_iterator(PLNET_CONFIG_DIR)) {
        if (entry.path().extension() != ".toml") { continue; }
        RunConfig c;
        EXPECT_NO_THROW(plnet::apply_config(c, plnet::load_config_file(entry.path().string())))
            << entry.path();
        EXPECT_NO_THROW((void)c.generator()) << entry.path();
        ++seen;
    }
    EXPECT_GE(seen, 1U);
}
