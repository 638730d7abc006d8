#pragma once

// Bridges to the Python oracles under tests/oracles and the in-test
// exhaustive enumerations.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "twin/adaption.hpp"
#include "twin/kgraph.hpp"
#include "twin/matcher.hpp"

namespace twin::testing {

/// Match outcome in the brute-force script's vocabulary: port ids are
/// "{model}#{port}", exclusion reasons "not in sequence" / "no connections".
struct PortPairing {
  std::vector<std::tuple<std::string, std::string, double>> edges;  ///< sorted
  std::set<std::pair<std::string, std::string>> excluded;
  std::set<std::string> unsatisfied;

  bool operator==(const PortPairing&) const = default;
};

PortPairing pairing_of(const matcher::MatchReport& report);

/// Runs brute_force_match.py on one fixture directory.
PortPairing oracle_pairing(const std::string& dir, const std::string& sequence_path, const std::string& mode);

/// Runs brute_force_match.py --batch; keyed by fixture directory.
std::map<std::string, PortPairing> oracle_pairings(const std::string& list_file);

struct Enumerated {
  std::vector<std::string> models;  ///< sequence order
  double time = 0.0;
  double accuracy = 0.0;
};

/// Every configuration of the graph's sequence, checked against the
/// ModelConfiguration invariants and the budget, best one under
/// (max accuracy, min time, lexicographic ids). nullopt if none is feasible.
std::optional<Enumerated> enumerate_best(const kg::KnowledgeGraph& graph, DecisionLevel level,
                                         const adaption::Budget& budget, const std::set<std::string>& exclude);

struct Reachability {
  std::set<std::string> reachable;
  bool shared = false;  ///< some reachable asset has two reachable parents
};

/// Breadth-first reachability from the root over the BOM edges.
Reachability bfs_reachability(const std::string& root, const std::map<std::string, std::vector<std::string>>& children);

/// True if `path` ("a,b,...,a") is a closed walk along BOM edges.
bool is_true_cycle(const std::string& path, const std::map<std::string, std::vector<std::string>>& children);

}  // namespace twin::testing
