#pragma once

// Per-link ARQ error process: every transmission of a packet is an independent
// Bernoulli(q) error event; a packet that errs on its (tau_max+1)-th trial is
// dropped.  Feedback (ACK/NACK) is error-free and arrives in the same slot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "arqrc/graph.hpp"

namespace arqrc {

struct link_params {
  double q = 0.0;    // packet error probability
  int tau_max = 0;   // retransmission limit

  void validate() const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("packet error probability must lie in [0, 1]");
    if (tau_max < 0) throw std::invalid_argument("retransmission limit must be nonnegative");
  }
};

struct delivered {
  int delay;  // number of NACKs before the ACK
  friend bool operator==(const delivered&, const delivered&) = default;
};
struct dropped {
  friend bool operator==(const dropped&, const dropped&) = default;
};
using packet_fate = std::variant<delivered, dropped>;

/// Entry r < tau_max+1 is P(delivered after r NACKs); the last entry is P(drop).
inline std::vector<double> fate_distribution(const link_params& p) {
  p.validate();
  std::vector<double> dist(static_cast<std::size_t>(p.tau_max) + 2);
  double qr = 1.0;  // q^r
  for (int r = 0; r <= p.tau_max; ++r) {
    dist[r] = qr * (1.0 - p.q);
    qr *= p.q;
  }
  dist.back() = qr;
  return dist;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic stream keyed by (master seed, replica, directed link).  Keys
/// are node ids rather than link positions so that adding or removing other
/// links never perturbs this link's draws.
class rng_stream {
 public:
  rng_stream(std::uint64_t master_seed, std::uint64_t replica, node_id src, node_id dst) {
    std::uint64_t s = master_seed;
    std::uint64_t mixed = detail::splitmix64(s);
    s ^= replica * 0xd1b54a32d192ed03ULL;
    mixed ^= detail::splitmix64(s);
    s ^= (static_cast<std::uint64_t>(src) << 32 | static_cast<std::uint64_t>(dst)) * 0x8cb92ba72f3d8dd7ULL;
    mixed ^= detail::splitmix64(s);
    engine_.seed(mixed);
  }

  /// Uniform in [0, 1) built from the top 53 bits, identical on every platform.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Sequential trials: trial r errs with probability q; first success at trial
/// r gives delivered{r}; tau_max+1 failures give dropped.
inline packet_fate sample_fate(const link_params& p, rng_stream& rng) {
  for (int r = 0; r <= p.tau_max; ++r) {
    if (!rng.bernoulli(p.q)) return delivered{r};
  }
  return dropped{};
}

/// Nodes learn d_j^+ by counting the feedback signals answering one dummy
/// broadcast.  Feedback is error-free, so one round is exact.
inline std::size_t acquire_out_degree(const digraph& g, node_id j) {
  std::size_t feedback_signals = 0;
  for (node_id l = 0; l < g.size(); ++l) {
    if (l != j && g.has_edge(j, l)) ++feedback_signals;  // l heard the dummy packet and answers ACK or NACK
  }
  return feedback_signals;
}

/// Per-link parameters indexed by link position in g.edges().
class link_table {
 public:
  link_table() = default;
  link_table(const digraph& g, link_params uniform) : params_(g.edge_count(), uniform) { uniform.validate(); }

  std::size_t size() const noexcept { return params_.size(); }
  const link_params& operator[](std::size_t link) const { return params_.at(link); }
  link_params& operator[](std::size_t link) { return params_.at(link); }

  int max_tau() const {
    int t = 0;
    for (const auto& p : params_) t = std::max(t, p.tau_max);
    return t;
  }

  bool uniform_tau() const {
    for (const auto& p : params_)
      if (p.tau_max != params_.front().tau_max) return false;
    return true;
  }

 private:
  std::vector<link_params> params_;
};

// Override file: one "src dst q tau_max" line per link to override (1-based),
// '#' comments allowed.  Links not listed keep the defaults.
inline link_table parse_link_params(std::istream& in, const digraph& g, link_params defaults) {
  link_table table(g, defaults);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string probe;
    if (!(ls >> probe)) continue;
    std::istringstream fs(raw);
    long long src = 0, dst = 0;
    link_params p;
    std::string extra;
    if (!(fs >> src >> dst >> p.q >> p.tau_max) || (fs >> extra))
      throw parse_error(lineno, "malformed link parameters, expected '<src> <dst> <q> <tau_max>'");
    if (src < 1 || dst < 1 || static_cast<std::size_t>(src) > g.size() || static_cast<std::size_t>(dst) > g.size())
      throw parse_error(lineno, "node index out of range");
    auto link = g.link_index(static_cast<node_id>(src - 1), static_cast<node_id>(dst - 1));
    if (!link) throw parse_error(lineno, "no such edge in graph");
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw parse_error(lineno, e.what());
    }
    table[*link] = p;
  }
  return table;
}

}  // namespace arqrc
