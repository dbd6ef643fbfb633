#pragma once

// Matrix model of an ARQ run over the augmented digraph.
//
// State slots, in order:
//   [0, n)                          actual nodes
//   n + e*tau + (a-1), a = 1..tau   v_e^(a): the packet on link e that has
//                                   collected a NACKs and awaits trial a+1
//   n + m*tau + e                   v_e^(f): dropped mass buffered on link e
//
// so n_aug = m*(tau+1) + n for m links.  Each slot's recorded transmissions
// fix one column-stochastic Xi[k] with x_aug[k+1] = Xi[k] x_aug[k]; the
// actual-node coordinates reproduce the engine's x and y exactly.
//
// Column blocks of Xi[k], for link e = (i -> j):
//   actual i   p_ji to j when the fresh packet is ACKed, to v_e^(a+1) when a
//              packet of age a it joined is NACKed, to v_e^(f) when dropped
//   v_e^(a)    1 to j (success), v_e^(a+1) (retransmission) or v_e^(f) (drop)
//   v_e^(f)    follows the fresh packet (self-loop when that packet is dropped)
// An unoccupied delay slot holds no mass; its column points at j.  The
// buffer column is active every slot for the same reason: when nothing is
// buffered it moves zero mass, and the release flags in the record only
// matter for validating the record.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arqrc/engine.hpp"
#include "arqrc/graph.hpp"
#include "arqrc/matrix.hpp"
#include "arqrc/realization.hpp"

namespace arqrc {

enum class slot_kind { actual, delay, buffer };

struct slot_descriptor {
  slot_kind kind;
  std::size_t id;  // node for actual slots, link otherwise
  int stage;       // 1..tau for delay slots, 0 otherwise

  friend bool operator==(const slot_descriptor&, const slot_descriptor&) = default;
};

class augmented_index {
 public:
  augmented_index(const digraph& g, int tau) : n_(g.size()), m_(g.edge_count()), tau_(tau) {
    if (tau < 0) throw std::invalid_argument("retransmission limit must be nonnegative");
  }

  std::size_t size() const noexcept { return m_ * (static_cast<std::size_t>(tau_) + 1) + n_; }
  std::size_t node_count() const noexcept { return n_; }
  std::size_t link_count() const noexcept { return m_; }
  int tau() const noexcept { return tau_; }

  std::size_t actual(node_id j) const { return j; }
  std::size_t delay(std::size_t link, int stage) const {
    if (stage < 1 || stage > tau_) throw std::out_of_range("delay stage out of range");
    return n_ + link * static_cast<std::size_t>(tau_) + static_cast<std::size_t>(stage - 1);
  }
  std::size_t buffer(std::size_t link) const { return n_ + m_ * static_cast<std::size_t>(tau_) + link; }

  slot_descriptor describe(std::size_t slot) const {
    if (slot < n_) return {slot_kind::actual, slot, 0};
    slot -= n_;
    const auto t = static_cast<std::size_t>(tau_);
    if (slot < m_ * t) return {slot_kind::delay, slot / t, static_cast<int>(slot % t) + 1};
    slot -= m_ * t;
    if (slot < m_) return {slot_kind::buffer, slot, 0};
    throw std::out_of_range("slot beyond augmented size");
  }

 private:
  std::size_t n_, m_;
  int tau_;
};

inline augmented_index build_index(const digraph& g, int tau) { return augmented_index(g, tau); }

using xi_matrix = dense_matrix;

/// Xi[k] for one slot of recorded transmissions (slot[link] = records).
inline xi_matrix build_xi(const augmented_index& idx, const digraph& g, const weight_matrix& p,
                          const std::vector<std::vector<transmission_record>>& slot, feedback_scheme scheme) {
  if (slot.size() != g.edge_count()) throw realization_error("slot does not cover every link");
  xi_matrix xi(idx.size(), idx.size());
  for (node_id j = 0; j < g.size(); ++j) xi(j, j) = p(j, j);

  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.link(e);
    const auto& recs = slot[e];
    const std::string where = "link " + std::to_string(e);
    if (recs.empty()) throw realization_error(where + ": no transmission recorded");
    if (scheme == feedback_scheme::stsf && recs.size() != 1)
      throw realization_error(where + ": STSF sends one packet per slot");
    if (scheme == feedback_scheme::mtmf && recs.front().age != 0)
      throw realization_error(where + ": missing fresh packet");

    auto target = [&](const transmission_record& r) -> std::size_t {
      if (r.age < 0 || r.age > idx.tau()) throw realization_error(where + ": packet age beyond the retransmission limit");
      switch (r.result) {
        case outcome::success: return idx.actual(j);
        case outcome::drop: return idx.buffer(e);
        case outcome::error:
          if (r.age == idx.tau()) throw realization_error(where + ": retransmission past the limit");
          return idx.delay(e, r.age + 1);
      }
      throw realization_error(where + ": unknown outcome");
    };

    // The fresh packet is the first record: age 0 under MTMF, the aggregate under STSF.
    const auto& fresh = recs.front();
    xi(target(fresh), i) += p(j, i);

    std::vector<bool> seen(static_cast<std::size_t>(idx.tau()) + 1, false);
    for (std::size_t t = 0; t < recs.size(); ++t) {
      const auto& r = recs[t];
      if (t > 0 && r.release) throw realization_error(where + ": buffer released on a retransmission");
      if (r.age > idx.tau()) throw realization_error(where + ": packet age beyond the retransmission limit");
      if (seen[r.age]) throw realization_error(where + ": two packets of the same age");
      seen[r.age] = true;
      if (r.age > 0) xi(target(r), idx.delay(e, r.age)) = 1.0;
    }
    for (int a = 1; a <= idx.tau(); ++a)
      if (!seen[a]) xi(idx.actual(j), idx.delay(e, a)) = 1.0;

    xi(target(fresh), idx.buffer(e)) = 1.0;
  }
  return xi;
}

struct augmented_state {
  std::vector<double> x, y;
};

inline augmented_state initial_state(const augmented_index& idx, std::span<const double> x0) {
  if (x0.size() != idx.node_count()) throw std::invalid_argument("initial vector does not match node count");
  augmented_state s{std::vector<double>(idx.size(), 0.0), std::vector<double>(idx.size(), 0.0)};
  for (std::size_t j = 0; j < x0.size(); ++j) {
    s.x[j] = x0[j];
    s.y[j] = 1.0;
  }
  return s;
}

inline augmented_state step(const augmented_state& s, const xi_matrix& xi) {
  if (xi.cols() != s.x.size() || xi.cols() != s.y.size()) throw std::invalid_argument("state/matrix dimension mismatch");
  return {xi * s.x, xi * s.y};
}

/// L_k = Xi[k-1] ... Xi[0]; the identity for an empty sequence.
inline dense_matrix forward_product(std::span<const xi_matrix> xis, std::size_t n = 0) {
  if (xis.empty()) return dense_matrix::identity(n);
  dense_matrix l = xis.front();
  for (std::size_t k = 1; k < xis.size(); ++k) {
    if (xis[k].cols() != l.rows()) throw std::invalid_argument("forward product dimension mismatch");
    l = xis[k] * l;
  }
  return l;
}

/// delta(L) = max over rows of the largest difference between two entries of that row.
inline double ergodicity_coefficient(const dense_matrix& l) {
  if (l.rows() != l.cols()) throw std::invalid_argument("ergodicity coefficient needs a square matrix");
  double delta = 0.0;
  for (std::size_t r = 0; r < l.rows(); ++r) {
    const auto row = l.row(r);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    delta = std::max(delta, *hi - *lo);
  }
  return delta;
}

/// Replays a recorded run; result[k] is the augmented state after k slots.
inline std::vector<augmented_state> replay(const augmented_index& idx, const digraph& g, const weight_matrix& p,
                                           const realization& r, std::span<const double> x0) {
  validate(r);
  std::vector<augmented_state> out;
  out.reserve(r.slot_count() + 1);
  out.push_back(initial_state(idx, x0));
  for (const auto& slot : r.slots) out.push_back(step(out.back(), build_xi(idx, g, p, slot, r.scheme)));
  return out;
}

// Diagnostics on the ratio-reporting threshold y_j >= c^lambda with
// c = min_j 1/(1 + d_j^+).

inline double min_weight(const digraph& g) {
  double c = 1.0;
  for (node_id j = 0; j < g.size(); ++j) c = std::min(c, 1.0 / (1.0 + static_cast<double>(g.out_degree(j))));
  return c;
}

inline std::size_t default_lambda(const digraph& g, int tau) {
  return g.size() * (static_cast<std::size_t>(tau) + 2);
}

struct threshold_report {
  double c = 0;
  std::size_t lambda = 0;
  double threshold = 0;
  std::size_t window = 0;
  bool every_window_hit = true;  // each node reaches the threshold in every full window
  std::vector<std::size_t> hits;  // per node: slots with y_j >= threshold
};

inline threshold_report threshold_diagnostic(const digraph& g, const trace& t, std::size_t lambda) {
  threshold_report rep;
  rep.c = min_weight(g);
  rep.lambda = lambda;
  rep.threshold = std::pow(rep.c, static_cast<double>(lambda));
  rep.window = 10 * lambda;
  rep.hits.assign(g.size(), 0);
  for (node_id j = 0; j < g.size(); ++j) {
    std::size_t last_hit = 0;
    bool any = false;
    for (const auto& row : t.rows) {
      if (row.y[j] >= rep.threshold) {
        ++rep.hits[j];
        if (any && row.k - last_hit > rep.window) rep.every_window_hit = false;
        if (!any && row.k >= rep.window) rep.every_window_hit = false;
        last_hit = row.k;
        any = true;
      }
    }
    const std::size_t horizon = t.rows.empty() ? 0 : t.rows.back().k;
    if (!any ? horizon >= rep.window : horizon - last_hit >= rep.window) rep.every_window_hit = false;
  }
  return rep;
}

}  // namespace arqrc
