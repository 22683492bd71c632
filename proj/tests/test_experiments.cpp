#include "nngp/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nngp;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Command, RoundTrip) {
    for (auto c : {Command::ValidateKernels, Command::ApproxStep, Command::ApproxHartmann, Command::Poisson,
                   Command::Burgers})
        EXPECT_EQ(parse_command(to_string(c)), c);
    EXPECT_THROW(parse_command("approx"), ConfigError);
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1e-300), "1e-300");
    EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Variant, Parsing) {
    const auto a = parse_variant("nngp-erf-L3/101", 1);
    EXPECT_EQ(a.spec.family, KernelFamily::NNGP_Erf);
    EXPECT_EQ(a.spec.depth, 3);
    EXPECT_EQ(a.n_train, 101);
    EXPECT_EQ(a.name(), "nngp-erf-L3/101");

    const auto b = parse_variant("se-ard", 3);
    EXPECT_TRUE(b.spec.ard);
    EXPECT_EQ(b.spec.input_dim, 3);
    EXPECT_EQ(b.name(), "se-ard");

    EXPECT_EQ(parse_variant("nngp-relu", 1).spec.depth, 1);
    EXPECT_EQ(parse_variant("arcsin/31", 1).name(), "arcsin/31");
    EXPECT_THROW(parse_variant("se-L2", 1), ConfigError);
    EXPECT_THROW(parse_variant("nngp-erf-ard", 1), ConfigError);
    EXPECT_THROW(parse_variant("se/0", 1), ConfigError);
    EXPECT_THROW(parse_variant("nngp-erf-Lx", 1), ConfigError);
}

TEST(ExperimentConfig, SerializeParseRoundTrip) {
    auto cfg = ExperimentConfig::defaults(Command::Burgers, false);
    cfg.seed = 12345678901234ULL;
    cfg.noise_std = 0.15;
    cfg.fd_step = 1.0 / 3.0;
    cfg.variants = {"arcsin/31", "nngp-erf-L1/101"};
    cfg.record_steps = {10, 100};
    cfg.resample = true;
    EXPECT_EQ(ExperimentConfig::parse(cfg.serialize()), cfg);
    for (auto c : {Command::ValidateKernels, Command::ApproxHartmann, Command::Poisson})
        for (bool paper : {false, true}) {
            const auto d = ExperimentConfig::defaults(c, paper);
            EXPECT_EQ(ExperimentConfig::parse(d.serialize()), d);
        }
}

TEST(ExperimentConfig, PresetDefaults) {
    const auto desk = ExperimentConfig::defaults(Command::Poisson, false);
    const auto paper = ExperimentConfig::defaults(Command::Poisson, true);
    EXPECT_EQ(desk.restarts, 5);
    EXPECT_EQ(desk.max_evals, 100);
    EXPECT_EQ(paper.restarts, 10);
    EXPECT_EQ(paper.max_evals, 200);
    EXPECT_EQ(ExperimentConfig::defaults(Command::Burgers, true).later_max_evals, 200);
    EXPECT_EQ(ExperimentConfig::defaults(Command::ApproxStep, false).restarts, 10);
}

TEST(ExperimentConfig, Errors) {
    EXPECT_THROW(ExperimentConfig::parse("experiment = poisson\nrestart = 3\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment = poisson\nseed = 1\nseed = 2\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment = poisson\nseed\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("seed = 3\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment = poisson\nrestarts = 2.5\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment = poisson\nsolution = s3\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("experiment = burgers\nrecord_steps = 200\n"), ConfigError);
    EXPECT_THROW(build_config(parse_key_values("experiment = poisson\n"), Command::Burgers), ConfigError);
}

TEST(ExperimentConfig, FileKeysOverrideDefaultsAndCommentsAreSkipped) {
    const auto cfg = ExperimentConfig::parse("# desk run\nexperiment = poisson\n\n  restarts = 7  \npreset = paper\n");
    EXPECT_EQ(cfg.experiment, Command::Poisson);
    EXPECT_EQ(cfg.restarts, 7);
    EXPECT_EQ(cfg.max_evals, 200);
    const auto forced = build_config(parse_key_values("restarts = 7\n"), Command::Poisson, "desk");
    EXPECT_EQ(forced.restarts, 7);
    EXPECT_EQ(forced.max_evals, 100);
}

TEST(SelectVariants, KernelBeatsVariantList) {
    auto cfg = ExperimentConfig::defaults(Command::Burgers, false);
    EXPECT_EQ(select_variants(cfg, 1, {"se"}).front().name(), "se");
    cfg.variants = {"matern52", "arcsin"};
    EXPECT_EQ(select_variants(cfg, 1, {"se"}).size(), 2u);
    cfg.kernel = "nngp-erf";
    cfg.depth = 2;
    const auto v = select_variants(cfg, 1, {"se"}, 31);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].name(), "nngp-erf-L2/31");
}

TEST(Table, CsvQuoting) {
    Table t{"t.csv", {"a", "b"}, {}};
    t.add("x,y", 0.5);
    t.add("say \"hi\"", 2);
    EXPECT_EQ(t.csv(), "a,b\n\"x,y\",0.5\n\"say \"\"hi\"\"\",2\n");
    EXPECT_THROW(t.add("only one"), InputError);
}

TEST(Spearman, Examples) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 1000}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {3, 2, 1}), -1.0);
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-15);
    EXPECT_NEAR(spearman({1, 1, 2}, {1, 2, 3}), std::sqrt(0.75), 1e-15);
    EXPECT_THROW(spearman({1}, {1}), InputError);
}

TEST(Hartmann3, GlobalMinimum) {
    EXPECT_NEAR(hartmann3(Eigen::Vector3d(0.114614, 0.555649, 0.852547)), -3.86278, 1e-5);
    EXPECT_LT(hartmann3(Eigen::Vector3d(0.5, 0.5, 0.5)), 0.0);
}

TEST(StepTarget, Examples) {
    EXPECT_EQ(step_target(-1e-12), 0.0);
    EXPECT_EQ(step_target(0.0), 1.0);
}

TEST(WriteAtomic, ReplacesContentAndLeavesNoTemporary) {
    const auto dir = std::filesystem::temp_directory_path() / "nngp_write_atomic_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "a.txt", "first");
    write_atomic(dir / "a.txt", "second");
    EXPECT_EQ(slurp(dir / "a.txt"), "second");
    EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    std::filesystem::remove_all(dir);
}

TEST(ValidateKernels, TableShapeAndIdentityLayer) {
    auto cfg = ExperimentConfig::defaults(Command::ValidateKernels, false);
    cfg.theta_points = 7;
    cfg.max_layer = 2;
    const auto rep = run_validate_kernels(cfg);
    const auto& t = rep.table("validate_kernels.csv");
    EXPECT_EQ(t.header, (std::vector<std::string>{"activation", "theta", "layer", "analytic", "numeric", "absdiff"}));
    EXPECT_EQ(t.rows.size(), 2u * 3u * 7u);
    for (const auto& r : t.rows)
        if (r[2] == "0") EXPECT_EQ(r[5], "0");
    EXPECT_TRUE(rep.passed());
}

TEST(Report, WrittenFilesAndRecord) {
    auto cfg = ExperimentConfig::defaults(Command::ValidateKernels, false);
    cfg.theta_points = 3;
    cfg.max_layer = 1;
    const auto rep = run_validate_kernels(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "nngp_report_test";
    std::filesystem::remove_all(dir);
    write_report(rep, dir);
    EXPECT_EQ(ExperimentConfig::parse(slurp(dir / "config.txt")), cfg);
    const auto j = nlohmann::json::parse(slurp(dir / "run.json"));
    EXPECT_EQ(j["tool"], "nngp-solve");
    EXPECT_EQ(j["experiment"], "validate-kernels");
    EXPECT_EQ(j["config"]["theta_points"], "3");
    EXPECT_TRUE(std::filesystem::exists(dir / "validate_kernels.csv"));
    std::filesystem::remove_all(dir);
}
