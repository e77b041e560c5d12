#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvopt/io.hpp"
#include "tvopt/scenario.hpp"
#include "tvopt/sim.hpp"

namespace fs = std::filesystem;

namespace {

// exit codes: 0 ok, 1 validation error, 2 runtime abort
constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kAbort = 2;

void set_json_path(tvopt::json& j, const std::string& path, const tvopt::json& value) {
  tvopt::json* cur = &j;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

tvopt::json load_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tvopt::ScenarioError("cannot open scenario file: " + path);
  tvopt::json j;
  try {
    in >> j;
  } catch (const tvopt::json::exception& e) {
    throw tvopt::ScenarioError("scenario is not well-formed JSON: " + std::string(e.what()));
  }
  return j;
}

int run_one(const tvopt::ScenarioConfig& cfg, const std::string& out_dir,
            const std::string& name) {
  fs::create_directories(out_dir);
  const tvopt::ScenarioReport rep = tvopt::scenario_report(cfg);
  try {
    const tvopt::TrajectoryLog log = tvopt::integrate(cfg);
    tvopt::write_csv(log, out_dir + "/" + name + ".csv");
    tvopt::write_text_file(out_dir + "/" + name + ".meta.json",
                           tvopt::meta_json(cfg, rep, log).dump(2) + "\n");
    tvopt::write_text_file(out_dir + "/" + name + ".svg", tvopt::svg_from_log(cfg, log));
    for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << out_dir << "/" << name << ".csv\n";
    return kOk;
  } catch (const tvopt::SimAbort& e) {
    std::cerr << "abort at step " << e.step << " (t=" << tvopt::fmt_double(e.t)
              << "): " << e.what() << "\n";
    tvopt::json j;
    j["config"] = tvopt::serialize_scenario(cfg);
    j["report"] = tvopt::report_to_json(rep);
    j["abort"] = {{"step", e.step}, {"t", e.t}, {"reason", e.what()}};
    tvopt::write_text_file(out_dir + "/" + name + ".meta.json", j.dump(2) + "\n");
    return kAbort;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-varying distributed optimization simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = ".", csv_path, svg_path, param_spec;

  CLI::App* run = app.add_subcommand("run", "simulate a scenario and write csv/meta/svg");
  run->add_option("--scenario", scenario_path, "scenario json")->required();
  run->add_option("--out", out_dir, "output directory");

  CLI::App* check = app.add_subcommand("check", "print the condition report");
  check->add_option("--scenario", scenario_path, "scenario json")->required();

  CLI::App* plot = app.add_subcommand("plot", "render an svg from a run csv");
  plot->add_option("--csv", csv_path, "input csv")->required();
  plot->add_option("--out", svg_path, "output svg")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "run a scenario over parameter values");
  sweep->add_option("--scenario", scenario_path, "scenario json")->required();
  sweep->add_option("--param", param_spec, "path=v1,v2,... (e.g. gains.epsilon=2,0.5)")
      ->required();
  sweep->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const tvopt::ScenarioConfig cfg = tvopt::parse_scenario(scenario_path);
      return run_one(cfg, out_dir, cfg.name);
    }
    if (check->parsed()) {
      const tvopt::ScenarioConfig cfg = tvopt::parse_scenario(scenario_path);
      std::cout << tvopt::report_text(cfg, tvopt::scenario_report(cfg));
      return kOk;
    }
    if (plot->parsed()) {
      const tvopt::CsvData data = tvopt::read_csv(csv_path);
      tvopt::write_text_file(svg_path,
                             tvopt::svg_from_csv(data, fs::path(csv_path).stem().string()));
      return kOk;
    }
    if (sweep->parsed()) {
      const size_t eq = param_spec.find('=');
      if (eq == std::string::npos)
        throw tvopt::ScenarioError("sweep --param expects path=v1,v2,...");
      const std::string path = param_spec.substr(0, eq);
      std::vector<std::string> values;
      std::stringstream vs(param_spec.substr(eq + 1));
      std::string item;
      while (std::getline(vs, item, ',')) values.push_back(item);
      if (values.empty()) throw tvopt::ScenarioError("sweep --param got no values");

      const tvopt::json base = load_scenario_json(scenario_path);
      const std::string leaf = path.substr(path.rfind('.') + 1);
      int rc = kOk;
      for (const std::string& v : values) {
        tvopt::json j = base;
        tvopt::json parsed_value;
        try {
          parsed_value = tvopt::json::parse(v);
        } catch (const tvopt::json::exception&) {
          parsed_value = v;
        }
        set_json_path(j, path, parsed_value);
        tvopt::ScenarioConfig cfg = tvopt::parse_scenario_json(j);
        std::string pretty = v;
        for (char& ch : pretty)
          if (ch == '.') ch = 'p';
        const int one = run_one(cfg, out_dir, cfg.name + "_" + leaf + "_" + pretty);
        rc = std::max(rc, one);
      }
      return rc;
    }
  } catch (const tvopt::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
