#pragma once

// Experiment runner: replicated runs of one configuration, consensus-error
// metrics, parameter sweeps and CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "arqrc/channel.hpp"
#include "arqrc/engine.hpp"
#include "arqrc/graph.hpp"

namespace arqrc {

class config_error : public std::invalid_argument {
 public:
  config_error(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct experiment_config {
  std::string graph_name = "paper5";
  digraph graph = paper5_graph();
  std::vector<double> x0 = paper5_x0();
  algorithm_kind algorithm = algorithm_kind::arq_stsf;
  double q = 0.2;
  int tau_max = 2;
  std::optional<link_table> links;  // per-link override of (q, tau_max)
  std::size_t iterations = 200;
  std::vector<std::uint64_t> seeds{0};
  unsigned threads = 0;  // 0: hardware concurrency

  link_table effective_links() const { return links ? *links : link_table(graph, link_params{q, tau_max}); }

  void validate() const {
    if (iterations < 1) throw config_error("iterations", "must be at least 1");
    if (seeds.empty()) throw config_error("seeds", "at least one seed is required");
    if (!(q >= 0.0 && q <= 1.0)) throw config_error("q", "must lie in [0, 1]");
    if (tau_max < 0) throw config_error("tau_max", "must be nonnegative");
    if (x0.size() != graph.size())
      throw config_error("x0", "has " + std::to_string(x0.size()) + " entries, graph has " +
                                   std::to_string(graph.size()) + " nodes");
    if (links && links->size() != graph.edge_count()) throw config_error("link_params", "does not match graph");
    if (is_arq(algorithm) && !is_strongly_connected(graph))
      throw config_error("graph", "ARQ-based ratio consensus requires a strongly connected graph");
  }
};

inline double consensus_value(const std::vector<double>& x0) {
  return std::accumulate(x0.begin(), x0.end(), 0.0) / static_cast<double>(x0.size());
}

struct metrics_row {
  std::size_t k = 0;
  double abs_error = 0;     // |z_hat - z*|, z_hat averaged over nodes and replicas
  double abs_error_sd = 0;  // spread of the per-replica |mean_j z_j - z*|
  double rel_error = 0;     // ||z - z* 1|| / ||z* 1||, averaged over replicas
  double sigma_mean = 0;    // network mean of |sigma_j|, averaged over replicas
  std::vector<double> sigma_node;  // per node |sigma_j|, averaged over replicas
};

/// Error and running-sum series over k for replicas of one configuration.
inline std::vector<metrics_row> consensus_error(const std::vector<trace>& traces, double z_star) {
  if (traces.empty()) return {};
  const std::size_t rows = traces.front().rows.size();
  const std::size_t n = traces.front().n;
  for (const auto& t : traces)
    if (t.rows.size() != rows || t.n != n) throw std::invalid_argument("traces do not share a configuration");
  const double r = static_cast<double>(traces.size());
  const double nn = static_cast<double>(n);
  const double ref_norm = std::abs(z_star) * std::sqrt(nn);

  std::vector<metrics_row> out(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    auto& m = out[k];
    m.k = traces.front().rows[k].k;
    m.sigma_node.assign(n, 0.0);
    double z_sum = 0.0;
    std::vector<double> per_replica;
    per_replica.reserve(traces.size());
    for (const auto& t : traces) {
      const auto& row = t.rows[k];
      double mean_z = 0.0, sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mean_z += row.z[j];
        sq += (row.z[j] - z_star) * (row.z[j] - z_star);
        m.sigma_node[j] += std::abs(row.sigma[j]);
      }
      z_sum += mean_z;
      per_replica.push_back(std::abs(mean_z / nn - z_star));
      const double norm = std::sqrt(sq);
      m.rel_error += ref_norm > 0.0 ? norm / ref_norm : norm / std::sqrt(nn);
    }
    m.abs_error = std::abs(z_sum / (r * nn) - z_star);
    m.rel_error /= r;
    const double mu = std::accumulate(per_replica.begin(), per_replica.end(), 0.0) / r;
    double var = 0.0;
    for (double v : per_replica) var += (v - mu) * (v - mu);
    m.abs_error_sd = traces.size() > 1 ? std::sqrt(var / (r - 1.0)) : 0.0;
    for (auto& s : m.sigma_node) s /= r;
    m.sigma_mean = std::accumulate(m.sigma_node.begin(), m.sigma_node.end(), 0.0) / nn;
  }
  return out;
}

struct experiment_result {
  experiment_config config;
  double z_star = 0;
  std::vector<trace> traces;  // one per seed, in seed order
  std::vector<metrics_row> metrics;
};

/// Runs every seed (possibly on several threads) and aggregates afterwards,
/// so the result does not depend on scheduling.
inline experiment_result run_experiment(const experiment_config& cfg) {
  cfg.validate();
  const auto links = cfg.effective_links();
  experiment_result res;
  res.config = cfg;
  res.z_star = consensus_value(cfg.x0);
  res.traces.resize(cfg.seeds.size());

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.seeds.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        res.traces[i] = run(cfg.graph, cfg.x0, cfg.algorithm, links, cfg.iterations, run_options{cfg.seeds[i]});
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  res.metrics = consensus_error(res.traces, res.z_star);
  return res;
}

// -- sweeps ------------------------------------------------------------------

struct sweep_spec {
  std::string param;  // "q", "tau_max", "iters"
  std::vector<std::string> values;
};

/// Parses `param=v1,v2,...`.
inline sweep_spec parse_sweep(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw config_error("sweep", "expected <param>=<v1,v2,...>");
  sweep_spec s;
  s.param = std::string(text.substr(0, eq));
  if (s.param == "tau-max") s.param = "tau_max";
  if (s.param != "q" && s.param != "tau_max" && s.param != "iters")
    throw config_error("sweep", "unknown parameter '" + s.param + "' (q, tau_max, iters)");
  std::stringstream ss{std::string(text.substr(eq + 1))};
  for (std::string v; std::getline(ss, v, ',');)
    if (!v.empty()) s.values.push_back(v);
  if (s.values.empty()) throw config_error("sweep", "no values given");
  return s;
}

inline experiment_config apply_sweep_value(experiment_config cfg, const std::string& param, const std::string& value) {
  try {
    std::size_t pos = 0;
    if (param == "q") {
      cfg.q = std::stod(value, &pos);
      if (cfg.links) throw config_error("sweep", "cannot sweep q together with per-link parameters");
    } else if (param == "tau_max") {
      cfg.tau_max = std::stoi(value, &pos);
      if (cfg.links) throw config_error("sweep", "cannot sweep tau_max together with per-link parameters");
    } else {
      cfg.iterations = std::stoul(value, &pos);
    }
    if (pos != value.size()) throw std::invalid_argument(value);
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_error("sweep", "bad value '" + value + "' for " + param);
  }
  return cfg;
}

struct sweep_point {
  std::string value;
  experiment_result result;
};

inline std::vector<sweep_point> run_sweep(const experiment_config& base, const sweep_spec& spec) {
  std::vector<sweep_point> out;
  for (const auto& v : spec.values) out.push_back({v, run_experiment(apply_sweep_value(base, spec.param, v))});
  return out;
}

// -- CSV ---------------------------------------------------------------------

namespace detail {

inline void csv_number(std::ostream& out, double v) { out << ',' << std::setprecision(17) << v; }

inline void series_header(std::ostream& out, std::string_view name, std::size_t n) {
  for (std::size_t j = 1; j <= n; ++j) out << ',' << name << '_' << j;
}

}  // namespace detail

/// Columns: k, x_1..x_n, y_1..y_n, z_1..z_n, sigma_1..sigma_n, in-flight and buffered mass.
inline void write_trace_csv(std::ostream& out, const trace& t) {
  out << 'k';
  for (auto name : {"x", "y", "z", "sigma"}) detail::series_header(out, name, t.n);
  out << ",in_flight_x,in_flight_y,buffered_x,buffered_y\n";
  for (const auto& r : t.rows) {
    out << r.k;
    for (const auto* v : {&r.x, &r.y, &r.z, &r.sigma})
      for (double e : *v) detail::csv_number(out, e);
    for (double e : {r.in_flight_x, r.in_flight_y, r.buffered_x, r.buffered_y}) detail::csv_number(out, e);
    out << '\n';
  }
}

inline void write_z_csv(std::ostream& out, const trace& t) {
  out << 'k';
  detail::series_header(out, "z", t.n);
  out << '\n';
  for (const auto& r : t.rows) {
    out << r.k;
    for (double e : r.z) detail::csv_number(out, e);
    out << '\n';
  }
}

inline void write_metrics_csv(std::ostream& out, const std::vector<metrics_row>& m) {
  const std::size_t n = m.empty() ? 0 : m.front().sigma_node.size();
  out << "k,abs_error,abs_error_sd,rel_error,sigma_mean";
  detail::series_header(out, "sigma", n);
  out << '\n';
  for (const auto& r : m) {
    out << r.k;
    for (double e : {r.abs_error, r.abs_error_sd, r.rel_error, r.sigma_mean}) detail::csv_number(out, e);
    for (double e : r.sigma_node) detail::csv_number(out, e);
    out << '\n';
  }
}

/// One row per sweep value, evaluated at the final slot.
inline void write_sweep_csv(std::ostream& out, const std::string& param, const std::vector<sweep_point>& pts) {
  out << param << ",k,abs_error,abs_error_sd,rel_error,sigma_mean\n";
  for (const auto& p : pts) {
    const auto& last = p.result.metrics.back();
    out << p.value << ',' << last.k;
    for (double e : {last.abs_error, last.abs_error_sd, last.rel_error, last.sigma_mean}) detail::csv_number(out, e);
    out << '\n';
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << contents;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

template <class Writer>
void write_csv(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_file(path, ss.str());
}

/// Writes metrics.csv plus trace_seed<s>.csv and z_seed<s>.csv per seed;
/// returns the paths written.
inline std::vector<std::filesystem::path> write_experiment(const experiment_result& res,
                                                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& p, auto&& w) {
    write_csv(p, w);
    written.push_back(p);
  };
  emit(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, res.metrics); });
  for (std::size_t i = 0; i < res.traces.size(); ++i) {
    const auto tag = std::to_string(res.config.seeds[i]);
    emit(dir / ("trace_seed" + tag + ".csv"), [&](std::ostream& o) { write_trace_csv(o, res.traces[i]); });
    emit(dir / ("z_seed" + tag + ".csv"), [&](std::ostream& o) { write_z_csv(o, res.traces[i]); });
  }
  return written;
}

}  // namespace arqrc
