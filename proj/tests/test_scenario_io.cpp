#include <catch2/catch_amalgamated.hpp>

#include "tvopt/io.hpp"
#include "tvopt/scenario.hpp"
#include "tvopt/sim.hpp"

using namespace tvopt;

TEST_CASE("preset expansion") {
  const ScenarioConfig cfg = parse_scenario_json(json{{"preset", "fig1"}});
  REQUIRE(cfg.agents == 6);
  REQUIRE(cfg.algorithm == "distributed-single");
  REQUIRE(cfg.graph.kind == "ring");
  REQUIRE(cfg.law == Law::DistributedSingle);
  REQUIRE(cfg.integrator.dt == 1e-4);
  REQUIRE(cfg.costs.size() == 6);
  REQUIRE(cfg.beta0.size() == 6);
  REQUIRE(cfg.beta0.minCoeff() >= 0.1);
  REQUIRE(cfg.beta0.maxCoeff() <= 2.0);

  const ScenarioConfig fig5 = parse_scenario_json(json{{"preset", "fig5"}});
  REQUIRE(fig5.law == Law::SwarmDouble);
  REQUIRE(fig5.proximity);
  REQUIRE(fig5.swarm->beta == 20.0);
}

TEST_CASE("defaults fill in per algorithm class") {
  json j;
  j["algorithm"] = "distributed-single";
  j["graph"] = {{"kind", "ring"}, {"n", 3}};
  json agents = json::array();
  for (int i = 0; i < 3; ++i)
    agents.push_back({{"A", {{1.0}}}, {"g", {{{"kind", "sin"}, {"amp", 1.0}, {"omega", 1.0}}}}});
  j["costs"] = {{"agents", agents}};
  j["initial"] = {{"positions", {{0.0}, {1.0}, {2.0}}}};
  const ScenarioConfig sgn_cfg = parse_scenario_json(j);
  REQUIRE(sgn_cfg.integrator.dt == 1e-4);
  REQUIRE(sgn_cfg.integrator.method == IntegratorConfig::Method::Euler);

  j["algorithm"] = "centralized-single";
  j["initial"] = {{"positions", {{0.0}}}};
  j.erase("graph");
  const ScenarioConfig smooth_cfg = parse_scenario_json(j);
  REQUIRE(smooth_cfg.integrator.dt == 1e-3);
  REQUIRE(smooth_cfg.integrator.method == IntegratorConfig::Method::Rk4);
}

TEST_CASE("validation failures carry field paths") {
  json j;
  j["algorithm"] = "distributed-single";
  j["graph"] = {{"kind", "edges"}, {"n", 6}, {"edges", {{1, 7}}}};
  j["costs"] = {{"preset", "fig1"}};
  j["initial"] = {{"positions", {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0},
                                 {3.0, 0.0}, {4.0, 0.0}, {5.0, 0.0}}}};
  REQUIRE_THROWS_WITH(parse_scenario_json(j),
                      Catch::Matchers::ContainsSubstring("graph.edges[0]"));

  json bad_alg = j;
  bad_alg["algorithm"] = "gradient-descent";
  bad_alg["graph"] = {{"kind", "ring"}, {"n", 6}};
  REQUIRE_THROWS_WITH(parse_scenario_json(bad_alg),
                      Catch::Matchers::ContainsSubstring("unknown selector"));

  json rk_sgn = j;
  rk_sgn["graph"] = {{"kind", "ring"}, {"n", 6}};
  rk_sgn["integrator"] = {{"method", "rk4"}};
  REQUIRE_THROWS_WITH(parse_scenario_json(rk_sgn),
                      Catch::Matchers::ContainsSubstring("euler"));

  json bad_eta = j;
  bad_eta["graph"] = {{"kind", "ring"}, {"n", 6}};
  bad_eta["algorithm"] = "estimator-single";
  bad_eta["gains"] = {{"eta", 1.5}};
  REQUIRE_THROWS_WITH(parse_scenario_json(bad_eta),
                      Catch::Matchers::ContainsSubstring("eta"));

  json bad_a2 = j;
  bad_a2["graph"] = {{"kind", "ring"}, {"n", 6}};
  bad_a2["gains"] = {{"alpha2", 0.3}};
  REQUIRE_THROWS_WITH(parse_scenario_json(bad_a2),
                      Catch::Matchers::ContainsSubstring("alpha2"));

  json swarm_static = j;
  swarm_static["graph"] = {{"kind", "ring"}, {"n", 6}};
  swarm_static["algorithm"] = "distributed-double";
  swarm_static["swarm"] = {{"R", 5.0}, {"d", 0.5}, {"beta", 20.0}};
  REQUIRE_THROWS_WITH(parse_scenario_json(swarm_static),
                      Catch::Matchers::ContainsSubstring("proximity"));
}

TEST_CASE("config round-trips through serialization") {
  for (const char* preset : {"fig1", "fig2", "fig3", "fig4", "fig5"}) {
    const ScenarioConfig cfg = parse_scenario_json(json{{"preset", preset}});
    const json once = serialize_scenario(cfg);
    const ScenarioConfig cfg2 = parse_scenario_json(once);
    const json twice = serialize_scenario(cfg2);
    REQUIRE(once.dump() == twice.dump());
  }
}

TEST_CASE("seeded initial states replay from the recorded seed") {
  json j;
  j["algorithm"] = "distributed-single";
  j["graph"] = {{"kind", "ring"}, {"n", 6}};
  j["costs"] = {{"preset", "fig1"}};
  j["initial"] = {{"seed", 99}, {"box", 3.0}};
  const ScenarioConfig a = parse_scenario_json(j);
  const ScenarioConfig b = parse_scenario_json(j);
  REQUIRE((a.x0 - b.x0).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.x0.cwiseAbs().maxCoeff() <= 3.0);
  REQUIRE(a.init_seed.has_value());
  // the serialized config pins the same positions
  const ScenarioConfig c = parse_scenario_json(serialize_scenario(a));
  REQUIRE((a.x0 - c.x0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv schema is fixed and self-consistent") {
  json j;
  j["preset"] = "fig1";
  j["integrator"] = {{"method", "euler"}, {"dt", 1e-3}, {"t_end", 0.5}, {"log_stride", 50}};
  const ScenarioConfig cfg = parse_scenario_json(j);
  const TrajectoryLog log = integrate(cfg);
  const std::vector<std::string> header = csv_header(log);
  // t + per-agent (x,u) + xstar + metrics for a single-integrator run
  REQUIRE(header.size() ==
          1 + static_cast<size_t>(log.n) * static_cast<size_t>(log.m) * 2 +
              static_cast<size_t>(log.m) + metric_names().size());
  const std::string text = csv_string(log);
  const size_t rows = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
  REQUIRE(rows == log.samples() + 1);

  // numeric round trip through the reader
  const std::string path = "/tmp/tvopt_test_roundtrip.csv";
  write_csv(log, path);
  const CsvData data = read_csv(path);
  REQUIRE(data.header == header);
  REQUIRE(data.rows.size() == log.samples());
  REQUIRE(data.rows[0][0] == log.times[0]);
  const int track_col = data.column("track_max");
  REQUIRE(track_col >= 0);
  REQUIRE(data.rows.back()[static_cast<size_t>(track_col)] ==
          log.metrics.back().track_max);
}

TEST_CASE("velocity columns appear for double-integrator runs") {
  json j;
  j["preset"] = "fig2";
  j["integrator"] = {{"method", "euler"}, {"dt", 1e-3}, {"t_end", 0.2}, {"log_stride", 20}};
  const ScenarioConfig cfg = parse_scenario_json(j);
  const TrajectoryLog log = integrate(cfg);
  REQUIRE(csv_header(log).size() ==
          1 + static_cast<size_t>(log.n) * static_cast<size_t>(log.m) * 3 +
              static_cast<size_t>(log.m) + metric_names().size());
}

TEST_CASE("condition report text") {
  const ScenarioConfig fig2 = parse_scenario_json(json{{"preset", "fig2"}});
  const ScenarioReport rep = scenario_report(fig2);
  const std::string text = report_text(fig2, rep);
  REQUIRE(text.find("PASS") != std::string::npos);
  REQUIRE(text.find("0.034722") != std::string::npos);
  REQUIRE(rep.lam2 == Catch::Approx(1.0).margin(1e-9));
  REQUIRE(rep.has_gain_bounds);

  json disc;
  disc["algorithm"] = "distributed-single";
  disc["graph"] = {{"kind", "edges"}, {"n", 6}, {"edges", json::array()}};
  disc["costs"] = {{"preset", "fig1"}};
  disc["initial"] = {{"positions", {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0},
                                    {3.0, 0.0}, {4.0, 0.0}, {5.0, 0.0}}}};
  const ScenarioConfig empty_cfg = parse_scenario_json(disc);
  const ScenarioReport empty_rep = scenario_report(empty_cfg);
  REQUIRE_FALSE(empty_rep.connected);
  const std::string empty_text = report_text(empty_cfg, empty_rep);
  REQUIRE(empty_text.find("disconnected: theorems inapplicable") != std::string::npos);
  REQUIRE_FALSE(empty_rep.warnings.empty());
}

TEST_CASE("boundary report includes layer conditions and the error bound") {
  const ScenarioConfig fig4 = parse_scenario_json(json{{"preset", "fig4"}});
  const ScenarioReport rep = scenario_report(fig4);
  REQUIRE(rep.has_conditions);
  REQUIRE(rep.conditions.all_pass);
  REQUIRE(rep.conditions.psi > 0.0);
  REQUIRE(rep.has_layer_bound);
  REQUIRE(rep.layer_bound > 0.0);
}

TEST_CASE("swarm report compares the configured gain with the bound") {
  const ScenarioConfig fig5 = parse_scenario_json(json{{"preset", "fig5"}});
  const ScenarioReport rep = scenario_report(fig5);
  REQUIRE(rep.has_swarm_bound);
  REQUIRE(rep.swarm_bound.beta > 0.0);
  const std::string text = report_text(fig5, rep);
  REQUIRE(text.find("swarm beta bound") != std::string::npos);
}

TEST_CASE("meta embeds a config that reproduces the run") {
  json j;
  j["preset"] = "fig1";
  j["integrator"] = {{"method", "euler"}, {"dt", 1e-3}, {"t_end", 0.3}, {"log_stride", 30}};
  const ScenarioConfig cfg = parse_scenario_json(j);
  const TrajectoryLog log = integrate(cfg);
  const json meta = meta_json(cfg, scenario_report(cfg), log);
  const ScenarioConfig replay = parse_scenario_json(meta.at("config"));
  REQUIRE(csv_string(integrate(replay)) == csv_string(log));
}

TEST_CASE("svg output sketches both panels") {
  json j;
  j["preset"] = "fig1";
  j["integrator"] = {{"method", "euler"}, {"dt", 1e-3}, {"t_end", 0.3}, {"log_stride", 30}};
  const ScenarioConfig cfg = parse_scenario_json(j);
  const TrajectoryLog log = integrate(cfg);
  const std::string svg = svg_from_log(cfg, log);
  REQUIRE(svg.find("<svg") == 0);
  REQUIRE(svg.find("polyline") != std::string::npos);
  REQUIRE(svg.find("trajectories") != std::string::npos);
  REQUIRE(svg.find("metrics") != std::string::npos);
}
