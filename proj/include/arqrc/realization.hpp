#pragma once

// Recorded channel realization of an ARQ run: for every slot and link, the
// list of transmissions made on that link with their ARQ outcome.  The matrix
// model replays a run from this record alone.

#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arqrc/graph.hpp"

namespace arqrc {

enum class feedback_scheme { mtmf, stsf };

inline std::string_view to_string(feedback_scheme s) { return s == feedback_scheme::mtmf ? "mtmf" : "stsf"; }

enum class outcome : char {
  success = 'S',  // ACK
  error = 'E',    // NACK, packet retained for retransmission
  drop = 'D',     // NACK on the last allowed trial
};

struct transmission_record {
  int age = 0;       // NACKs collected before this transmission
  outcome result = outcome::success;
  bool release = false;  // the link's buffered mass was attached to this packet this slot

  friend bool operator==(const transmission_record&, const transmission_record&) = default;
};

class realization_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct realization {
  feedback_scheme scheme = feedback_scheme::mtmf;
  std::size_t link_count = 0;
  /// slots[k][link] lists transmissions on that link in slot k, ascending age.
  std::vector<std::vector<std::vector<transmission_record>>> slots;

  std::size_t slot_count() const noexcept { return slots.size(); }

  friend bool operator==(const realization&, const realization&) = default;
};

/// Checks the record is something an ARQ sender could have produced: one
/// fresh packet per link and slot, retransmissions exactly where the previous
/// slot NACKed, and buffer releases only while something is buffered.
inline void validate(const realization& r) {
  std::vector<bool> loaded(r.link_count, false);
  for (std::size_t k = 0; k < r.slots.size(); ++k) {
    const auto& slot = r.slots[k];
    if (slot.size() != r.link_count)
      throw realization_error("slot " + std::to_string(k) + ": expected " + std::to_string(r.link_count) + " links");
    for (std::size_t e = 0; e < slot.size(); ++e) {
      const auto& recs = slot[e];
      const std::string where = "slot " + std::to_string(k) + ", link " + std::to_string(e);
      std::vector<int> expected_ages;
      if (k > 0) {
        for (const auto& prev : r.slots[k - 1][e])
          if (prev.result == outcome::error) expected_ages.push_back(prev.age + 1);
      }
      if (r.scheme == feedback_scheme::mtmf) {
        std::vector<int> ages{0};
        ages.insert(ages.end(), expected_ages.begin(), expected_ages.end());
        if (recs.size() != ages.size()) throw realization_error(where + ": transmission count mismatch");
        for (std::size_t t = 0; t < recs.size(); ++t) {
          if (recs[t].age != ages[t]) throw realization_error(where + ": unexpected packet age");
          if (recs[t].release && recs[t].age != 0)
            throw realization_error(where + ": buffer released on a retransmission");
        }
      } else {
        if (recs.size() != 1) throw realization_error(where + ": STSF sends exactly one packet per slot");
        const int age = expected_ages.empty() ? 0 : expected_ages.front();
        if (recs[0].age != age) throw realization_error(where + ": unexpected aggregate age");
      }
      bool released = false;
      for (const auto& rec : recs) released = released || rec.release;
      if (released != loaded[e])
        throw realization_error(where + (released ? ": release with empty buffer" : ": buffered mass not released"));
      loaded[e] = false;
      for (const auto& rec : recs)
        if (rec.result == outcome::drop) loaded[e] = true;
    }
  }
}

// Text format, version 1:
//
//   arqrc-realization 1
//   scheme mtmf|stsf
//   links <m>
//   slots <K>
//   <k> <link> <age><S|E|D>[R] ...     one line per (slot, link)
inline void write_realization(std::ostream& out, const realization& r) {
  out << "arqrc-realization 1\n"
      << "scheme " << to_string(r.scheme) << '\n'
      << "links " << r.link_count << '\n'
      << "slots " << r.slots.size() << '\n';
  for (std::size_t k = 0; k < r.slots.size(); ++k) {
    for (std::size_t e = 0; e < r.slots[k].size(); ++e) {
      out << k << ' ' << e;
      for (const auto& rec : r.slots[k][e]) {
        out << ' ' << rec.age << static_cast<char>(rec.result);
        if (rec.release) out << 'R';
      }
      out << '\n';
    }
  }
}

inline realization read_realization(std::istream& in) {
  realization r;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](std::string_view what) -> std::istringstream {
    if (!std::getline(in, line)) throw parse_error(lineno + 1, "missing " + std::string(what));
    ++lineno;
    return std::istringstream(line);
  };
  {
    auto ls = next("header");
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "arqrc-realization") throw parse_error(lineno, "not a realization file");
    if (version != 1) throw parse_error(lineno, "unsupported realization version " + std::to_string(version));
  }
  std::string key, value;
  {
    auto ls = next("scheme");
    if (!(ls >> key >> value) || key != "scheme" || (value != "mtmf" && value != "stsf"))
      throw parse_error(lineno, "expected 'scheme mtmf|stsf'");
    r.scheme = value == "mtmf" ? feedback_scheme::mtmf : feedback_scheme::stsf;
  }
  std::size_t slots = 0;
  {
    auto ls = next("links");
    if (!(ls >> key >> r.link_count) || key != "links") throw parse_error(lineno, "expected 'links <m>'");
  }
  {
    auto ls = next("slots");
    if (!(ls >> key >> slots) || key != "slots") throw parse_error(lineno, "expected 'slots <K>'");
  }
  r.slots.assign(slots, std::vector<std::vector<transmission_record>>(r.link_count));
  for (std::size_t k = 0; k < slots; ++k) {
    for (std::size_t e = 0; e < r.link_count; ++e) {
      auto ls = next("slot record");
      std::size_t kk = 0, ee = 0;
      if (!(ls >> kk >> ee) || kk != k || ee != e) throw parse_error(lineno, "slot/link index out of order");
      std::string tok;
      while (ls >> tok) {
        std::size_t pos = 0;
        int age = 0;
        try {
          age = std::stoi(tok, &pos);
        } catch (const std::exception&) {
          throw parse_error(lineno, "malformed transmission '" + tok + "'");
        }
        if (age < 0 || pos >= tok.size()) throw parse_error(lineno, "malformed transmission '" + tok + "'");
        transmission_record rec{age, outcome::success, false};
        switch (tok[pos]) {
          case 'S': rec.result = outcome::success; break;
          case 'E': rec.result = outcome::error; break;
          case 'D': rec.result = outcome::drop; break;
          default: throw parse_error(lineno, "unknown outcome in '" + tok + "'");
        }
        const auto rest = tok.substr(pos + 1);
        if (rest == "R") rec.release = true;
        else if (!rest.empty()) throw parse_error(lineno, "malformed transmission '" + tok + "'");
        r.slots[k][e].push_back(rec);
      }
    }
  }
  return r;
}

}  // namespace arqrc
