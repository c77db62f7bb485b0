#include "sparsesense/config.hpp"
#include "sparsesense/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sparsesense;

namespace {

template <class Fn>
std::string error_message(Fn &&fn) {
    try {
        fn();
    } catch (const std::exception &e) {
        return e.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("parse_panel_csv_text reads a small panel") {
    const auto panel = parse_panel_csv_text("cycle,a,b\n0,1.5,2\n1,,4\n");
    CHECK(panel.num_locations() == 2);
    CHECK(panel.num_cycles() == 2);
    CHECK(panel.locations()[0].name == "a");
    CHECK(panel.locations()[1].name == "b");
    CHECK(panel.value(0, 0) == 1.5);
    CHECK(panel.value(1, 1) == 4.0);
    CHECK_FALSE(panel.observed(0, 1));
    CHECK(panel.observed_count() == 3);
}

TEST_CASE("parse_panel_csv_text reads coordinates") {
    const auto panel = parse_panel_csv_text("cycle,a,b\ncoord,0.1:0.2,0.5:1\n0,1,2\n");
    REQUIRE(has_coords(panel.locations()));
    CHECK(panel.locations()[1].coords->x() == 0.5);
    CHECK(panel.locations()[1].coords->y() == 1.0);
}

TEST_CASE("parse_panel_csv_text error paths carry line numbers") {
    CHECK_THROWS_AS(parse_panel_csv_text("cycle,a,b\n"), ParseError);
    CHECK_THROWS_AS(parse_panel_csv_text(""), ParseError);
    CHECK(error_message([] { parse_panel_csv_text("cycle,a,b\n0,1,2\n1,3\n"); })
              .find("line 3") != std::string::npos);
    CHECK(error_message([] { parse_panel_csv_text("cycle,a,b\n0,1,x\n"); })
              .find("line 2") != std::string::npos);
    CHECK(error_message([] { parse_panel_csv_text("cycle,a,b\n0,1,2\n2,3,4\n"); })
              .find("line 3") != std::string::npos);
    CHECK_THROWS_AS(parse_panel_csv_text("cycle,a,b\n0,1,nan\n"), ParseError);
    CHECK_THROWS_AS(parse_panel_csv_text("cycle,a,a\n0,1,2\n"), ParseError);
    CHECK_THROWS_AS(parse_panel_csv("/nonexistent/panel.csv"), IoError);
}

TEST_CASE("panel CSV round trip") {
    SyntheticSpec spec;
    spec.num_locations = 5;
    spec.num_cycles = 40;
    spec.seed = 3;
    const auto panel = apply_sparsity(generate_synthetic(spec).panel, 0.3, 4);
    const auto back = parse_panel_csv_text(format_panel_csv(panel));
    CHECK(back.num_locations() == panel.num_locations());
    CHECK(back.num_cycles() == panel.num_cycles());
    CHECK((back.mask() == panel.mask()).all());
    for (int t = 0; t < panel.num_cycles(); ++t) {
        for (int s = 0; s < panel.num_locations(); ++s) {
            if (panel.observed(s, t)) CHECK(std::abs(back.value(s, t) - panel.value(s, t)) <= 1e-12);
        }
    }
    for (int s = 0; s < 5; ++s) {
        CHECK(*back.locations()[s].coords == *panel.locations()[s].coords);
    }
    CHECK(format_panel_csv(back) == format_panel_csv(panel));
}

TEST_CASE("parse_long_csv_text pivots and rejects duplicates") {
    const auto panel = parse_long_csv_text("cycle,station,value\n0,x,1\n0,y,2\n1,y,3\n");
    CHECK(panel.num_locations() == 2);
    CHECK(panel.num_cycles() == 2);
    CHECK(panel.locations()[0].name == "x");
    CHECK_FALSE(panel.observed(0, 1));
    CHECK(panel.value(1, 1) == 3.0);
    CHECK_THROWS_AS(parse_long_csv_text("cycle,station,value\n0,x,1\n0,x,2\n"), ParseError);
    CHECK_THROWS_AS(parse_long_csv_text("cycle,site,value\n0,x,1\n"), ParseError);
}

TEST_CASE("format_report_csv") {
    CHECK(format_report_csv({}) == "strategy,param,mean_rmse,stddev,repeats\n");
    CHECK(format_report_csv({{"dsar", 0.5, 1.23456, 0.0, 1}}) ==
          "strategy,param,mean_rmse,stddev,repeats\ndsar,0.5000,1.2346,0.0000,1\n");
    const auto sorted = format_report_csv({{"random", 4, 1, 0, 2},
                                           {"ewiem", 8, 1, 0, 2},
                                           {"ewiem", 4, 1, 0, 2}});
    CHECK(sorted ==
          "strategy,param,mean_rmse,stddev,repeats\n"
          "ewiem,4.0000,1.0000,0.0000,2\n"
          "ewiem,8.0000,1.0000,0.0000,2\n"
          "random,4.0000,1.0000,0.0000,2\n");
}

TEST_CASE("format_series_csv leaves unscored cycles empty") {
    std::vector<CycleReport> reports(2);
    reports[0].t = 10;
    reports[0].scored = true;
    reports[0].cycle_rmse = 0.25;
    reports[0].lambdas = Eigen::Vector3d(0.5, 0.25, 0.25);
    reports[1].t = 11;
    reports[1].scored = false;
    reports[1].lambdas = Eigen::Vector3d(0.5, 0.25, 0.25);
    CHECK(format_series_csv(reports) ==
          "t,cycle_rmse,lambda_tu,lambda_if,lambda_at\n"
          "10,0.250000,0.500000,0.250000,0.250000\n"
          "11,,0.500000,0.250000,0.250000\n");
}

TEST_CASE("write_text and the manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "sparsesense_test_io";
    std::filesystem::create_directories(dir);
    write_text(dir / "a.txt", "hello\n");
    CHECK(slurp(dir / "a.txt") == "hello\n");
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(write_text("/nonexistent/dir/a.txt", "x"), IoError);

    RunManifest m;
    m.config_checksum = "00000000000000ff";
    m.seed = 7;
    m.started = "2024-01-01T00:00:00Z";
    m.finished = "2024-01-01T00:00:01Z";
    m.artifacts = {"report.csv", "manifest.txt"};
    const auto text = m.format();
    CHECK(text.find("config_checksum=00000000000000ff\n") != std::string::npos);
    CHECK(text.find("seed=7\n") != std::string::npos);
    CHECK(text.find("artifact=report.csv\n") != std::string::npos);
    CHECK(utc_timestamp().size() == 20);
}

TEST_CASE("empty config yields the defaults") {
    const auto cfg = parse_config_text("");
    CHECK(cfg.sim.model.p == 2);
    CHECK(cfg.sim.model.ridge == 1e-3);
    CHECK(cfg.sim.model.refresh_interval == 24);
    CHECK(cfg.sim.model.window() == 48);
    CHECK(cfg.sim.alloc.eta == 0.1);
    CHECK(cfg.sim.alloc.strategy == AllocStrategy::Ewiem);
    CHECK(cfg.sim.model.weights.strategy == WeightStrategy::NmfCosine);
}

TEST_CASE("config sections and dotted keys are equivalent") {
    const auto a = parse_config_text("[alloc]\nk = 4\nstrategy = \"random\" # inline\n[model]\np=1\n");
    const auto b = parse_config_text("alloc.k = 4\nalloc.strategy = random\nmodel.p = 1\n");
    CHECK(a.sim.alloc.k == 4);
    CHECK(a.sim.alloc.strategy == AllocStrategy::Random);
    CHECK(a.sim.model.p == 1);
    CHECK(a.canonical() == b.canonical());
    CHECK(a.checksum() == b.checksum());
    CHECK(a.checksum().size() == 16);
    CHECK(a.checksum() != parse_config_text("").checksum());

    const auto ids = parse_config_text("alloc.strategy = static\nalloc.static_ids = 1, 3\nalloc.k = 2\n");
    CHECK(ids.sim.alloc.static_ids == std::vector<int>{1, 3});
}

TEST_CASE("config errors name the offending key") {
    const auto msg = error_message([] { parse_config_text("alloc.k = 0\n"); });
    CHECK(msg.find("alloc.k") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text("alloc.k = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("alloc.strategy = greedy\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("model.ridge = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("model.p = two\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("alloc.bogus = 1\n"), ConfigError);
    const auto lenient = parse_config_text("alloc.bogus = 1\n", false);
    CHECK(lenient.unknown_keys == std::vector<std::string>{"alloc.bogus"});
    CHECK_THROWS_AS(parse_config("/nonexistent/config.ini"), IoError);
}

TEST_CASE("synthetic spec parsing") {
    const auto spec = parse_synthetic_spec_text(
        "[synthetic]\nlocations = 3\ncycles = 50\np = 1\nphi = 0.5, 0.6, 0.7\n"
        "weight_kind = identity\nnoise_sigma = 0\nseed = 9\n[hotspot]\nenabled = true\n");
    CHECK(spec.num_locations == 3);
    CHECK(spec.num_cycles == 50);
    CHECK(spec.true_phi(2, 0) == 0.7);
    CHECK(spec.weight_kind == SyntheticWeights::Identity);
    CHECK(spec.hotspot.enabled);
    CHECK(spec.seed == 9);
    CHECK_THROWS_AS(parse_synthetic_spec_text("synthetic.phi = 0.5, 0.6\n"), ConfigError);
}

TEST_CASE("format_truth_csv") {
    DsarModel truth;
    truth.phi = Matrix::Constant(2, 1, 0.5);
    const auto text = format_truth_csv(truth, SyntheticWeights::Kernel, 4);
    CHECK(text.rfind("location,lag,phi,weight_kind,seed\n", 0) == 0);
    CHECK(text.find("1,1,0.5,kernel,4\n") != std::string::npos);
}
