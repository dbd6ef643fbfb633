#pragma once

// Synchronous slot-by-slot execution of the consensus protocols:
//
//   rc        ratio consensus over perfect links
//   rrc       ratio consensus with bounded per-packet delays
//   rcrs      ratio consensus via broadcast running sums, no feedback
//   arq_mtmf  ARQ-based ratio consensus, one packet and one ACK/NACK per pending mass
//   arq_stsf  ARQ-based ratio consensus, pending masses aggregated into one packet
//
// Every slot each node originates weighted copies of (x, y) for its
// out-neighbors, keeps its self share, and then adds whatever its in-links
// delivered.  Self-loop mass never touches the channel.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arqrc/channel.hpp"
#include "arqrc/graph.hpp"
#include "arqrc/realization.hpp"
#include "arqrc/running_sum.hpp"

namespace arqrc {

enum class algorithm_kind { rc, rrc, rcrs, arq_mtmf, arq_stsf };

inline std::string_view to_string(algorithm_kind a) {
  switch (a) {
    case algorithm_kind::rc: return "rc";
    case algorithm_kind::rrc: return "rrc";
    case algorithm_kind::rcrs: return "rcrs";
    case algorithm_kind::arq_mtmf: return "arq-mtmf";
    case algorithm_kind::arq_stsf: return "arq-stsf";
  }
  return "?";
}

inline std::optional<algorithm_kind> parse_algorithm(std::string_view s) {
  for (auto a : {algorithm_kind::rc, algorithm_kind::rrc, algorithm_kind::rcrs, algorithm_kind::arq_mtmf,
                 algorithm_kind::arq_stsf})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

inline bool is_arq(algorithm_kind a) { return a == algorithm_kind::arq_mtmf || a == algorithm_kind::arq_stsf; }

struct node_state {
  double x = 0.0;
  double y = 1.0;
  double z = 0.0;
  // Sender side, one entry per out-link (aligned with digraph::out_links).
  // ARQ: mass lost to drops on that link; RC-RS: the broadcast running sum.
  std::vector<running_sum> sigma, eta;
  // Receiver side, one entry per in-link: accumulated mass recovered from
  // running sums.  Differences between consecutive values enter x and y.
  std::vector<running_sum> chi, psi;
};

struct in_flight_packet {
  node_id src = 0;
  node_id dst = 0;
  double x_mass = 0.0;
  double y_mass = 0.0;
  int age = 0;  // NACKs collected so far
  std::uint64_t seq = 0;
  bool carries_buffer = false;
  double buffer_x = 0.0;  // recovered running-sum mass riding on this packet
  double buffer_y = 0.0;
  int scheduled_delay = 0;  // rrc only: slot offset at which the packet arrives
};

struct link_state {
  std::vector<in_flight_packet> pending;  // ascending age
  double buffer_x = 0.0;                  // dropped mass waiting for the next origination
  double buffer_y = 0.0;
  bool buffer_loaded = false;
  std::uint64_t next_seq = 0;
};

struct network_state {
  std::size_t k = 0;
  std::vector<node_state> nodes;
  std::vector<link_state> links;
  std::vector<std::size_t> out_pos;  // link -> index into sender's out-link arrays
  std::vector<std::size_t> in_pos;   // link -> index into receiver's in-link arrays
};

inline network_state init_states(const digraph& g, const std::vector<double>& x0) {
  if (x0.size() != g.size())
    throw std::invalid_argument("initial vector has " + std::to_string(x0.size()) + " entries, graph has " +
                                std::to_string(g.size()) + " nodes");
  network_state s;
  s.nodes.resize(g.size());
  for (node_id j = 0; j < g.size(); ++j) {
    auto& n = s.nodes[j];
    n.x = x0[j];
    n.y = 1.0;
    n.z = x0[j];
    n.sigma.resize(g.out_degree(j));
    n.eta.resize(g.out_degree(j));
    n.chi.resize(g.in_degree(j));
    n.psi.resize(g.in_degree(j));
  }
  s.links.resize(g.edge_count());
  s.out_pos.resize(g.edge_count());
  s.in_pos.resize(g.edge_count());
  for (node_id j = 0; j < g.size(); ++j) {
    const auto& outs = g.out_links(j);
    for (std::size_t t = 0; t < outs.size(); ++t) s.out_pos[outs[t]] = t;
    const auto& ins = g.in_links(j);
    for (std::size_t t = 0; t < ins.size(); ++t) s.in_pos[ins[t]] = t;
  }
  return s;
}

namespace detail {

// x_j <- p_jj x_j + sum over in-links (ascending sender) of what arrived.
// All protocols share this summation order, so equal inputs give
// bit-identical states.
inline void apply_receipts(const digraph& g, const weight_matrix& p, network_state& s,
                           const std::vector<double>& recv_x, const std::vector<double>& recv_y) {
  std::vector<double> nx(g.size()), ny(g.size());
  for (node_id j = 0; j < g.size(); ++j) {
    double x = p(j, j) * s.nodes[j].x;
    double y = p(j, j) * s.nodes[j].y;
    for (std::size_t e : g.in_links(j)) {
      x += recv_x[e];
      y += recv_y[e];
    }
    nx[j] = x;
    ny[j] = y;
  }
  for (node_id j = 0; j < g.size(); ++j) {
    auto& n = s.nodes[j];
    n.x = nx[j];
    n.y = ny[j];
    if (n.y > 0.0) n.z = n.x / n.y;
  }
  ++s.k;
}

}  // namespace detail

/// One slot of ratio consensus over perfect links.
inline void rc_step(const digraph& g, const weight_matrix& p, network_state& s) {
  std::vector<double> rx(g.edge_count()), ry(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.link(e);
    rx[e] = p(j, i) * s.nodes[i].x;
    ry[e] = p(j, i) * s.nodes[i].y;
  }
  detail::apply_receipts(g, p, s, rx, ry);
}

class configuration_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Delay for the packet originated on `link` in slot `k`; nullopt means the
/// packet never arrives.
template <class F>
concept delay_schedule = requires(F f, std::size_t link, std::size_t k) {
  { f(link, k) } -> std::convertible_to<std::optional<int>>;
};

/// One slot of ratio consensus with bounded delays.  A packet originated in
/// slot k with delay r is added to the receiver's state in slot k + r.
template <delay_schedule Schedule>
void rrc_step(const digraph& g, const weight_matrix& p, const link_table& links, network_state& s,
              Schedule&& schedule) {
  std::vector<double> rx(g.edge_count(), 0.0), ry(g.edge_count(), 0.0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.link(e);
    auto& link = s.links[e];
    const std::optional<int> delay = schedule(e, s.k);
    if (delay) {
      if (*delay < 0 || *delay > links[e].tau_max)
        throw configuration_error("delay " + std::to_string(*delay) + " on link " + std::to_string(i + 1) + "->" +
                                  std::to_string(j + 1) + " exceeds the bound " + std::to_string(links[e].tau_max));
      in_flight_packet pkt;
      pkt.src = i;
      pkt.dst = j;
      pkt.x_mass = p(j, i) * s.nodes[i].x;
      pkt.y_mass = p(j, i) * s.nodes[i].y;
      pkt.seq = link.next_seq;
      pkt.scheduled_delay = *delay;
      link.pending.insert(link.pending.begin(), pkt);
    }
    ++link.next_seq;
    std::vector<in_flight_packet> keep;
    for (auto& pkt : link.pending) {
      if (pkt.age == pkt.scheduled_delay) {
        rx[e] += pkt.x_mass;
        ry[e] += pkt.y_mass;
      } else {
        ++pkt.age;
        keep.push_back(pkt);
      }
    }
    link.pending = std::move(keep);
  }
  detail::apply_receipts(g, p, s, rx, ry);
}

/// A channel decides, per transmission, whether the receiver NACKs it.
template <class C>
concept error_channel = requires(C c, std::size_t link, const in_flight_packet& pkt) {
  { c.errs(link, pkt) } -> std::convertible_to<bool>;
};

/// Independent Bernoulli(q_link) errors drawn from per-link streams.
class random_channel {
 public:
  random_channel(const digraph& g, link_table params, std::uint64_t seed, std::uint64_t replica = 0)
      : params_(std::move(params)) {
    streams_.reserve(g.edge_count());
    for (const auto& e : g.edges()) streams_.emplace_back(seed, replica, e.src, e.dst);
  }

  bool errs(std::size_t link, const in_flight_packet&) { return streams_[link].bernoulli(params_[link].q); }

  packet_fate fate(std::size_t link) { return sample_fate(params_[link], streams_[link]); }

  const link_table& params() const noexcept { return params_; }

 private:
  link_table params_;
  std::vector<rng_stream> streams_;
};

/// Outcomes fixed in advance per (link, packet sequence number); each
/// transmission of that packet consumes the next entry (true = NACK).  Packets
/// without a script are always ACKed.  An STSF aggregate carries the sequence
/// number of its oldest member.
class scripted_channel {
 public:
  void script(std::size_t link, std::uint64_t seq, std::vector<bool> nacks) {
    for (auto& s : scripts_)
      if (s.link == link && s.seq == seq) {
        s.nacks = std::move(nacks);
        s.used = 0;
        return;
      }
    scripts_.push_back({link, seq, std::move(nacks), 0});
  }

  bool errs(std::size_t link, const in_flight_packet& pkt) {
    for (auto& s : scripts_)
      if (s.link == link && s.seq == pkt.seq) return s.used < s.nacks.size() && s.nacks[s.used++];
    return false;
  }

 private:
  struct entry {
    std::size_t link;
    std::uint64_t seq;
    std::vector<bool> nacks;
    std::size_t used;
  };
  std::vector<entry> scripts_;
};

/// One slot of ARQ-based ratio consensus.
///
/// Per link: originate the fresh packet (carrying the link's buffered
/// running-sum mass if any), transmit pending packets (MTMF: each on its own;
/// STSF: merged into the one aggregate, whose age is its oldest member's),
/// then per transmission
///   ACK                -> receiver adds the data mass and the recovered buffer mass
///   NACK, age < tau    -> retained with age + 1
///   NACK, age == tau   -> dropped into the link buffer; new data mass also
///                         accumulates in the sender's running sums sigma/eta
/// If `record` is given, the slot's transmissions are appended to it.
template <error_channel Channel>
void arq_rc_step(const digraph& g, const weight_matrix& p, const link_table& links, network_state& s,
                 Channel& channel, feedback_scheme scheme, realization* record = nullptr) {
  std::vector<double> rx(g.edge_count(), 0.0), ry(g.edge_count(), 0.0);
  std::vector<std::vector<transmission_record>> slot_record;
  if (record) slot_record.resize(g.edge_count());

  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.link(e);
    const int tau = links[e].tau_max;
    if (tau < 0) throw configuration_error("negative retransmission limit");
    auto& link = s.links[e];

    in_flight_packet fresh;
    fresh.src = i;
    fresh.dst = j;
    fresh.x_mass = p(j, i) * s.nodes[i].x;
    fresh.y_mass = p(j, i) * s.nodes[i].y;
    fresh.seq = link.next_seq++;
    const bool release = link.buffer_loaded;
    if (release) {
      fresh.carries_buffer = true;
      fresh.buffer_x = link.buffer_x;
      fresh.buffer_y = link.buffer_y;
      link.buffer_x = link.buffer_y = 0.0;
      link.buffer_loaded = false;
    }

    if (scheme == feedback_scheme::mtmf || link.pending.empty()) {
      link.pending.insert(link.pending.begin(), fresh);
    } else {
      auto& agg = link.pending.front();
      agg.x_mass += fresh.x_mass;
      agg.y_mass += fresh.y_mass;
      agg.buffer_x += fresh.buffer_x;
      agg.buffer_y += fresh.buffer_y;
      agg.carries_buffer = agg.carries_buffer || fresh.carries_buffer;
    }

    auto& sender = s.nodes[i];
    auto& receiver = s.nodes[j];
    std::vector<in_flight_packet> keep;
    for (std::size_t t = 0; t < link.pending.size(); ++t) {
      auto pkt = link.pending[t];
      transmission_record rec{pkt.age, outcome::success, release && t == 0};
      if (!channel.errs(e, pkt)) {
        rx[e] += pkt.x_mass;
        ry[e] += pkt.y_mass;
        if (pkt.carries_buffer) {
          rx[e] += pkt.buffer_x;
          ry[e] += pkt.buffer_y;
          receiver.chi[s.in_pos[e]].add(pkt.buffer_x);
          receiver.psi[s.in_pos[e]].add(pkt.buffer_y);
        }
      } else if (pkt.age < tau) {
        rec.result = outcome::error;
        ++pkt.age;
        keep.push_back(pkt);
      } else {
        rec.result = outcome::drop;
        sender.sigma[s.out_pos[e]].add(pkt.x_mass);
        sender.eta[s.out_pos[e]].add(pkt.y_mass);
        link.buffer_x += pkt.x_mass + pkt.buffer_x;
        link.buffer_y += pkt.y_mass + pkt.buffer_y;
        link.buffer_loaded = true;
      }
      if (record) slot_record[e].push_back(rec);
    }
    link.pending = std::move(keep);
  }

  if (record) {
    if (record->slots.empty() && record->link_count == 0) {
      record->link_count = g.edge_count();
      record->scheme = scheme;
    }
    record->slots.push_back(std::move(slot_record));
  }
  detail::apply_receipts(g, p, s, rx, ry);
}

/// One slot of ratio consensus via broadcast running sums.  Each node adds its
/// outgoing share into sigma/eta every slot and sends the totals; a receiver
/// that hears them adds the difference to its last recorded values.  Nothing
/// is ever reset, and lost packets are simply superseded by later ones.
template <error_channel Channel>
void rcrs_step(const digraph& g, const weight_matrix& p, network_state& s, Channel& channel) {
  for (node_id j = 0; j < g.size(); ++j) {
    auto& n = s.nodes[j];
    const auto& outs = g.out_neighbors(j);
    for (std::size_t t = 0; t < outs.size(); ++t) {
      n.sigma[t].add(p(outs[t], j) * n.x);
      n.eta[t].add(p(outs[t], j) * n.y);
    }
  }
  std::vector<double> rx(g.edge_count(), 0.0), ry(g.edge_count(), 0.0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.link(e);
    in_flight_packet pkt;
    pkt.src = i;
    pkt.dst = j;
    pkt.seq = s.links[e].next_seq++;
    if (channel.errs(e, pkt)) continue;
    const auto& sent_x = s.nodes[i].sigma[s.out_pos[e]];
    const auto& sent_y = s.nodes[i].eta[s.out_pos[e]];
    auto& got_x = s.nodes[j].chi[s.in_pos[e]];
    auto& got_y = s.nodes[j].psi[s.in_pos[e]];
    rx[e] = sent_x - got_x;
    ry[e] = sent_y - got_y;
    got_x = sent_x;
    got_y = sent_y;
  }
  detail::apply_receipts(g, p, s, rx, ry);
}

// -- accounting --------------------------------------------------------------

struct mass_totals {
  double nodes_x = 0, nodes_y = 0;
  double in_flight_x = 0, in_flight_y = 0;  // packet payloads, including carried buffers
  double buffered_x = 0, buffered_y = 0;    // dropped mass still held by senders

  double total_x() const { return nodes_x + in_flight_x + buffered_x; }
  double total_y() const { return nodes_y + in_flight_y + buffered_y; }
};

inline mass_totals account(const network_state& s) {
  mass_totals m;
  for (const auto& n : s.nodes) {
    m.nodes_x += n.x;
    m.nodes_y += n.y;
  }
  for (const auto& l : s.links) {
    for (const auto& pkt : l.pending) {
      m.in_flight_x += pkt.x_mass + pkt.buffer_x;
      m.in_flight_y += pkt.y_mass + pkt.buffer_y;
    }
    m.buffered_x += l.buffer_x;
    m.buffered_y += l.buffer_y;
  }
  return m;
}

/// Per-node running-sum value as reported in traces.  RC-RS: the broadcast
/// running sum.  ARQ: dropped mass on the node's out-links that has not yet
/// been recovered by the receivers (sigma - chi), which returns to zero on
/// successful delivery.
inline double node_running_sum(const digraph& g, const network_state& s, node_id j, algorithm_kind algo) {
  const auto& n = s.nodes[j];
  if (algo == algorithm_kind::rcrs) return n.sigma.empty() ? 0.0 : n.sigma.front().value();
  if (!is_arq(algo)) return 0.0;
  double outstanding = 0.0;
  for (std::size_t e : g.out_links(j)) {
    const auto& l = s.links[e];
    outstanding += l.buffer_x;
    for (const auto& pkt : l.pending) outstanding += pkt.buffer_x;
  }
  return outstanding;
}

// -- traces ------------------------------------------------------------------

struct trace_row {
  std::size_t k = 0;
  std::vector<double> x, y, z, sigma;
  double sigma_total = 0;
  double in_flight_x = 0, in_flight_y = 0;
  double buffered_x = 0, buffered_y = 0;
};

struct trace {
  std::size_t n = 0;
  algorithm_kind algorithm = algorithm_kind::rc;
  std::vector<trace_row> rows;
};

inline trace_row snapshot(const digraph& g, const network_state& s, algorithm_kind algo) {
  trace_row r;
  r.k = s.k;
  for (node_id j = 0; j < g.size(); ++j) {
    r.x.push_back(s.nodes[j].x);
    r.y.push_back(s.nodes[j].y);
    r.z.push_back(s.nodes[j].z);
    r.sigma.push_back(node_running_sum(g, s, j, algo));
    r.sigma_total += r.sigma.back();
  }
  const auto m = account(s);
  r.in_flight_x = m.in_flight_x;
  r.in_flight_y = m.in_flight_y;
  r.buffered_x = m.buffered_x;
  r.buffered_y = m.buffered_y;
  return r;
}

struct run_options {
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
  realization* record = nullptr;  // ARQ variants only
};

/// Runs `iterations` slots and returns rows k = 0..iterations.  ARQ variants
/// require a strongly connected graph; the baselines run on anything.
inline trace run(const digraph& g, const std::vector<double>& x0, algorithm_kind algo, const link_table& links,
                 std::size_t iterations, const run_options& opt = {}) {
  if (links.size() != g.edge_count()) throw configuration_error("link table does not match graph");
  for (std::size_t e = 0; e < links.size(); ++e) links[e].validate();
  if (is_arq(algo) && !is_strongly_connected(g))
    throw configuration_error("ARQ-based ratio consensus requires a strongly connected graph");

  const auto p = assign_weights(g);
  auto s = init_states(g, x0);
  random_channel channel(g, links, opt.seed, opt.replica);

  trace t;
  t.n = g.size();
  t.algorithm = algo;
  t.rows.reserve(iterations + 1);
  t.rows.push_back(snapshot(g, s, algo));
  for (std::size_t k = 0; k < iterations; ++k) {
    switch (algo) {
      case algorithm_kind::rc: rc_step(g, p, s); break;
      case algorithm_kind::rrc:
        rrc_step(g, p, links, s, [&](std::size_t e, std::size_t) -> std::optional<int> {
          const auto f = channel.fate(e);
          if (const auto* d = std::get_if<delivered>(&f)) return d->delay;
          return std::nullopt;
        });
        break;
      case algorithm_kind::rcrs: rcrs_step(g, p, s, channel); break;
      case algorithm_kind::arq_mtmf: arq_rc_step(g, p, links, s, channel, feedback_scheme::mtmf, opt.record); break;
      case algorithm_kind::arq_stsf: arq_rc_step(g, p, links, s, channel, feedback_scheme::stsf, opt.record); break;
    }
    t.rows.push_back(snapshot(g, s, algo));
  }
  return t;
}

}  // namespace arqrc
