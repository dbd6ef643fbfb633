// arqrc: run consensus experiments and write CSV traces.
//
//   arqrc --graph paper5 --algo arq-stsf --q 0.2 --tau-max 2 --iters 200 --seeds 20 --out runs/
//   arqrc --graph net.txt --x0 1,2,3 --algo arq-mtmf --sweep tau_max=0,2,4
//
// On failure a single line `error kind=<kind> field=<field> msg="<text>"` is
// written to stderr and the exit status is nonzero (2: bad configuration,
// 1: anything else).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "arqrc/harness.hpp"

namespace {

using namespace arqrc;

std::string quoted(std::string s) {
  for (auto& c : s)
    if (c == '"' || c == '\n') c = '\'';
  return '"' + s + '"';
}

int fail(std::string_view kind, std::string_view field, const std::string& msg, int code) {
  std::cerr << "error kind=" << kind << " field=" << (field.empty() ? "-" : field) << " msg=" << quoted(msg) << '\n';
  return code;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');)
    if (!part.empty()) out.push_back(part);
  return out;
}

/// "N" means seeds 0..N-1; a comma-separated list is taken literally.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (text.find(',') == std::string::npos) {
      std::size_t pos = 0;
      const auto n = std::stoull(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
      for (std::uint64_t s = 0; s < n; ++s) seeds.push_back(s);
    } else {
      for (const auto& part : split(text)) {
        std::size_t pos = 0;
        seeds.push_back(std::stoull(part, &pos));
        if (pos != part.size()) throw std::invalid_argument(part);
      }
    }
  } catch (const std::exception&) {
    throw config_error("seeds", "expected a count or a comma-separated list, got '" + text + "'");
  }
  return seeds;
}

std::vector<double> parse_x0(const std::string& text) {
  if (auto preset = named_x0(text)) return *preset;
  std::vector<double> x0;
  try {
    for (const auto& part : split(text)) {
      std::size_t pos = 0;
      x0.push_back(std::stod(part, &pos));
      if (pos != part.size()) throw std::invalid_argument(part);
    }
  } catch (const std::exception&) {
    throw config_error("x0", "expected a preset name or comma-separated numbers, got '" + text + "'");
  }
  if (x0.empty()) throw config_error("x0", "empty initial vector");
  return x0;
}

digraph load_graph(const std::string& spec) {
  if (auto g = named_graph(spec)) return *g;
  std::ifstream in(spec);
  if (!in) throw config_error("graph", "no preset or readable file named '" + spec + "'");
  try {
    return parse_graph(in);
  } catch (const parse_error& e) {
    throw config_error("graph", spec + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error("graph", spec + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARQ-based ratio consensus experiments"};
  std::string graph = "paper5", algo = "arq-stsf", seeds = "1", x0_text, out_dir, link_file, sweep;
  double q = 0.2;
  int tau_max = 2;
  std::size_t iters = 200;
  unsigned threads = 0;
  bool record = false;

  app.add_option("--graph", graph, "preset (paper5, paper10) or graph file")->capture_default_str();
  app.add_option("--algo", algo, "rc | rrc | rcrs | arq-stsf | arq-mtmf")->capture_default_str();
  app.add_option("--q", q, "packet error probability on every link")->capture_default_str();
  app.add_option("--tau-max", tau_max, "retransmission limit on every link")->capture_default_str();
  app.add_option("--iters", iters, "number of slots")->capture_default_str();
  app.add_option("--seeds", seeds, "count N (seeds 0..N-1) or comma-separated list")->capture_default_str();
  app.add_option("--x0", x0_text, "initial values: preset name or comma-separated list");
  app.add_option("--out", out_dir, "output directory (default $ARQRC_OUT_DIR, else ./arqrc_out)");
  app.add_option("--link-params", link_file, "per-link overrides: '<src> <dst> <q> <tau_max>' lines");
  app.add_option("--sweep", sweep, "<param>=<v1,v2,...> with param in q, tau_max, iters");
  app.add_option("--threads", threads, "worker threads for replicas (0: all cores)")->capture_default_str();
  app.add_flag("--record", record, "also write the channel realization of each ARQ run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", "-", e.what(), 2);
  }

  try {
    experiment_config cfg;
    cfg.graph_name = graph;
    cfg.graph = load_graph(graph);
    const auto kind = parse_algorithm(algo);
    if (!kind) throw config_error("algo", "unknown algorithm '" + algo + "'");
    cfg.algorithm = *kind;
    cfg.q = q;
    cfg.tau_max = tau_max;
    cfg.iterations = iters;
    cfg.seeds = parse_seeds(seeds);
    cfg.threads = threads;
    if (!x0_text.empty())
      cfg.x0 = parse_x0(x0_text);
    else if (auto preset = named_x0(graph))
      cfg.x0 = *preset;
    else
      throw config_error("x0", "required when the graph is not a preset");
    if (!link_file.empty()) {
      std::ifstream in(link_file);
      if (!in) throw config_error("link-params", "cannot read '" + link_file + "'");
      try {
        link_params defaults{q, tau_max};
        defaults.validate();
        cfg.links = parse_link_params(in, cfg.graph, defaults);
      } catch (const parse_error& e) {
        throw config_error("link-params", link_file + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw config_error("link-params", e.what());
      }
    }
    cfg.validate();

    std::filesystem::path out = out_dir;
    if (out.empty()) {
      const char* env = std::getenv("ARQRC_OUT_DIR");
      out = env && *env ? env : "arqrc_out";
    }

    auto emit = [&](const experiment_config& c, const std::filesystem::path& dir) {
      const auto res = run_experiment(c);
      write_experiment(res, dir);
      if (record && is_arq(c.algorithm)) {
        for (auto seed : c.seeds) {
          realization rec;
          run(c.graph, c.x0, c.algorithm, c.effective_links(), c.iterations, {seed, 0, &rec});
          write_csv(dir / ("realization_seed" + std::to_string(seed) + ".txt"),
                    [&](std::ostream& o) { write_realization(o, rec); });
        }
      }
      return res;
    };

    if (sweep.empty()) {
      const auto res = emit(cfg, out);
      const auto& last = res.metrics.back();
      std::cout << "algo=" << to_string(cfg.algorithm) << " k=" << last.k << " abs_error=" << last.abs_error
                << " rel_error=" << last.rel_error << " out=" << out.string() << '\n';
    } else {
      const auto spec = parse_sweep(sweep);
      std::vector<sweep_point> points;
      for (const auto& v : spec.values) {
        const auto c = apply_sweep_value(cfg, spec.param, v);
        c.validate();
        points.push_back({v, emit(c, out / (spec.param + "_" + v))});
        const auto& last = points.back().result.metrics.back();
        std::cout << spec.param << '=' << v << " abs_error=" << last.abs_error << " rel_error=" << last.rel_error
                  << '\n';
      }
      write_csv(out / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, spec.param, points); });
    }
  } catch (const config_error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    return fail("config", e.field(), colon == std::string::npos ? what : what.substr(colon + 2), 2);
  } catch (const configuration_error& e) {
    return fail("config", "-", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", "-", e.what(), 1);
  }
  return 0;
}
