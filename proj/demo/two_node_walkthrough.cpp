// Two nodes exchanging values over lossy links, slot by slot.
//
// Link 1->2 allows two retransmissions and its first packet is NACKed three
// times, so it is dropped and recovered through the running sums.  Link 2->1
// allows one retransmission and its first packet gets through on the second
// try.  Each slot prints the transmissions, the node states, and where the
// mass sits in the augmented state vector.

#include <iomanip>
#include <iostream>
#include <string>

#include "arqrc/augmented.hpp"

using namespace arqrc;

namespace {

std::string slot_name(const augmented_index& idx, const digraph& g, std::size_t slot) {
  const auto d = idx.describe(slot);
  if (d.kind == slot_kind::actual) return "v" + std::to_string(d.id + 1);
  const auto [i, j] = g.link(d.id);
  const auto link = std::to_string(i + 1) + "->" + std::to_string(j + 1);
  if (d.kind == slot_kind::delay) return "delay[" + link + ", age " + std::to_string(d.stage) + "]";
  return "buffer[" + link + "]";
}

}  // namespace

int main() {
  const digraph g(2, {{0, 1}, {1, 0}});
  const auto p = assign_weights(g);
  link_table links(g, {0.0, 2});
  links[*g.link_index(1, 0)].tau_max = 1;

  scripted_channel channel;
  channel.script(*g.link_index(0, 1), 0, {true, true, true});
  channel.script(*g.link_index(1, 0), 0, {true, false});

  const std::vector<double> x0{2.0, 6.0};
  auto state = init_states(g, x0);
  const auto idx = build_index(g, links.max_tau());
  auto aug = initial_state(idx, x0);
  realization rec;

  std::cout << std::fixed << std::setprecision(4);
  for (int k = 0; k < 6; ++k) {
    arq_rc_step(g, p, links, state, channel, feedback_scheme::mtmf, &rec);
    aug = step(aug, build_xi(idx, g, p, rec.slots.back(), rec.scheme));

    std::cout << "slot " << k << '\n';
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const auto [i, j] = g.link(e);
      std::cout << "  " << i + 1 << "->" << j + 1 << ':';
      for (const auto& r : rec.slots.back()[e])
        std::cout << " age " << r.age << ' ' << static_cast<char>(r.result) << (r.release ? " +buffer" : "");
      std::cout << '\n';
    }
    for (node_id j = 0; j < g.size(); ++j)
      std::cout << "  v" << j + 1 << ": x=" << state.nodes[j].x << " y=" << state.nodes[j].y
                << " z=" << state.nodes[j].z << '\n';
    std::cout << "  augmented x:";
    for (std::size_t s = 0; s < idx.size(); ++s)
      if (aug.x[s] != 0.0) std::cout << ' ' << slot_name(idx, g, s) << '=' << aug.x[s];
    std::cout << '\n';
  }
  std::cout << "target average " << (x0[0] + x0[1]) / 2.0 << '\n';
}
