#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "risicsc/risicsc.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw risicsc::ConfigError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Config document with the RISICSC_SEED override folded in.
std::string config_document(const std::string& path) {
  std::string doc = path.empty() ? "{}" : read_file(path);
  if (const char* env = std::getenv("RISICSC_SEED"); env != nullptr && *env != '\0') {
    auto j = nlohmann::json::parse(doc);
    j["seed"] = std::stoull(env);
    doc = j.dump();
  }
  return doc;
}

void print_report(const risicsc::SchemeResult& r) {
  std::cout << "scheme: " << risicsc::scheme_name(r.scheme) << "\n";
  std::cout << "weighted latency [s]: " << r.report.weighted_total << "\n";
  for (std::size_t k = 0; k < r.report.t_ue.size(); ++k) {
    std::cout << "  UE " << k << ": v=" << r.compute.v[k] << " f_e=" << r.compute.f_e[k]
              << " R=" << r.report.rates[k] << " t_local=" << r.report.t_local[k]
              << " t_offload=" << r.report.t_offload[k] << " t_edge=" << r.report.t_edge[k]
              << " t_ue=" << r.report.t_ue[k] << "\n";
  }
  std::cout << "outer iterations: " << r.iterations << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latency minimization for RIS-assisted sensing, communication and edge computing"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scheme = "with_ris";
  std::string trace_path;
  int restarts = 1;
  std::uint64_t seed = 0;
  bool has_seed = false;
  auto* run = app.add_subcommand("run", "Solve one scenario");
  run->add_option("-c,--config", config_path, "Scenario JSON (defaults when omitted)")->check(CLI::ExistingFile);
  run->add_option("-s,--scheme", scheme, "with_ris, randphase, without_ris, quant1bit, quant2bit, full_offload");
  auto* seed_opt = run->add_option("--seed", seed, "Scenario seed");
  run->add_option("--restarts", restarts, "Random restarts; the best is reported")->check(CLI::PositiveNumber);
  run->add_option("--trace", trace_path, "Write the outer-iteration trace as JSON lines");

  std::string sweep_path;
  std::string output_path;
  std::string traces_path;
  int seed_count = 0;
  int sweep_restarts = 0;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep over seeds and schemes");
  sweep->add_option("-c,--config", config_path, "Base scenario JSON")->check(CLI::ExistingFile);
  sweep->add_option("--sweep", sweep_path, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--output", output_path, "CSV output (stdout when omitted)");
  sweep->add_option("--seeds,--seed-count", seed_count, "Use seeds 1..n instead of the spec's list");
  sweep->add_option("--restarts", sweep_restarts, "Restarts per realization")->check(CLI::PositiveNumber);
  sweep->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--traces", traces_path, "Write per-row traces as JSON lines");

  CLI11_PARSE(app, argc, argv);
  has_seed = seed_opt->count() > 0;

  try {
    if (*run) {
      const std::string doc = config_document(config_path);
      const auto cfg = has_seed ? risicsc::load_config(doc, seed) : risicsc::load_config(doc);
      const auto ch = risicsc::realize_scenario(cfg);
      const auto sch = risicsc::parse_scheme(scheme);
      auto best = risicsc::run_scheme(cfg, ch, sch, 0);
      for (int r = 1; r < restarts; ++r) {
        auto cand = risicsc::run_scheme(cfg, ch, sch, r);
        if (cand.report.weighted_total < best.report.weighted_total) best = std::move(cand);
      }
      print_report(best);
      if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        for (const auto& rec : best.trace) {
          out << nlohmann::json{{"iteration", rec.iteration},
                                {"weighted_latency_s", rec.weighted_latency},
                                {"t_ue_s", rec.t_ue}}
                     .dump()
              << '\n';
        }
      }
    } else {
      const std::string doc = config_document(config_path);
      auto spec = risicsc::parse_sweep(read_file(sweep_path));
      if (seed_count > 0) {
        spec.seeds.clear();
        for (int i = 1; i <= seed_count; ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i));
      }
      if (sweep_restarts > 0) spec.restarts = sweep_restarts;
      const auto table = risicsc::run_sweep(spec, doc, jobs);
      if (output_path.empty()) {
        risicsc::write_csv(std::cout, table);
      } else {
        std::ofstream out(output_path);
        risicsc::write_csv(out, table);
      }
      if (!traces_path.empty()) {
        std::ofstream out(traces_path);
        risicsc::write_traces(out, table);
      }
      for (const auto& r : table.rows) {
        if (r.kind == "run" && r.status != "ok") {
          std::cerr << "warning: " << risicsc::scheme_name(r.scheme) << " value " << r.value << " seed " << r.seed
                    << ": " << r.status << "\n";
        }
      }
    }
  } catch (const risicsc::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
