// Copyright 2026 The robustbell Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: solve, evaluate, compare, stability, quantizer.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robustbell/cli/commands.hpp"

namespace rb = robustbell;

int main(int argc, char** argv) {
  CLI::App app{"Adaptive robust control with Gaussian-process surrogates"};
  app.set_version_flag("--version", rb::kVersion);
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool diagnostics = false;

  auto common = [&](CLI::App* c, bool need_config) {
    auto* o = c->add_option("--config", config, "configuration file");
    if (need_config) o->required()->check(CLI::ExistingFile);
    c->add_option("--out", out, "output directory (default: [output] dir)");
    c->add_option("--seed", seed, "master seed override");
    c->add_option("--threads", threads, "worker cap (fallback: ROBUSTBELL_THREADS)");
  };

  auto* solve = app.add_subcommand("solve", "run the backward recursion and write a run artifact");
  common(solve, true);
  solve->add_flag("--diagnostics", diagnostics, "write per-step design CSVs");

  std::string artifact;
  auto* evaluate = app.add_subcommand("evaluate", "forward Monte Carlo of the artifact's strategies");
  common(evaluate, false);
  evaluate->add_option("artifact", artifact, "run artifact directory")->required();

  std::vector<std::string> dirs;
  std::vector<double> lambdas{0.0, 0.5, 0.75};
  std::string table = "compare.csv";
  auto* compare = app.add_subcommand("compare", "combine evaluation reports into one table");
  compare->add_option("artifacts", dirs, "run artifact directories")->required();
  compare->add_option("--lambda", lambdas, "loss weights to tabulate")->delimiter(',');
  compare->add_option("--out", table, "output CSV");

  int reps = 10;
  std::vector<int> sizes{100, 250};
  auto* stability = app.add_subcommand("stability", "macro-replication study of the control surrogate");
  common(stability, true);
  stability->add_option("--reps", reps, "replications per design size");
  stability->add_option("--sizes", sizes, "design sizes")->delimiter(',');

  int qsize = 100;
  std::string qout = "quadrature.csv";
  auto* quant = app.add_subcommand("quantizer", "write the Gauss-Hermite shock rule as CSV");
  quant->add_option("--size", qsize, "number of knots");
  quant->add_option("--out", qout, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    auto load = [&] {
      rb::RunConfig c = rb::load_config(config);
      if (seed) c.solver.seed = *seed;
      if (threads > 0) c.solver.threads = threads;
      if (diagnostics) c.output.diagnostics = true;
      if (!out.empty()) c.output.dir = out;
      return c;
    };
    if (*solve) {
      const auto c = load();
      rb::cli::cmd_solve(c, c.output.dir);
      std::cout << "wrote " << c.output.dir << "\n";
    } else if (*evaluate) {
      std::optional<rb::EvaluationConfig> ev;
      bool write_paths = true;
      if (!config.empty()) {
        const auto c = rb::load_config(config);
        ev = c.evaluation;
        write_paths = c.output.write_paths;
      }
      if (seed) {
        if (!ev) ev = rb::cli::load_run(artifact).evaluation;
        ev->seed = *seed;
      }
      const std::string dest = out.empty() ? artifact : out;
      const auto reports = rb::cli::cmd_evaluate(artifact, ev, dest, threads, write_paths);
      for (const auto& r : reports)
        std::cout << r["strategy"].get<std::string>() << ": mean " << r["mean"] << " std " << r["std"] << " q95 "
                  << r["q95"] << " V0 " << r["V0"] << "\n";
    } else if (*compare) {
      std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
      const auto rows = rb::cli::cmd_compare(paths, lambdas, table);
      std::cout << "wrote " << rows.size() << " rows to " << table << "\n";
    } else if (*stability) {
      const auto c = load();
      rb::cli::cmd_stability(c, reps, sizes, c.output.dir);
      std::cout << "wrote " << c.output.dir << "\n";
    } else if (*quant) {
      rb::cli::cmd_quantizer(qsize, qout);
      std::cout << "wrote " << qout << "\n";
    }
  } catch (const rb::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const rb::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const rb::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
