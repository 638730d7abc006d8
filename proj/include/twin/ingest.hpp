#pragma once

/**
 * @file ingest.hpp
 * @brief Shell acquisition (AASX package, directory, shell server), the
 *        production sequence file and the Bill-of-Material hierarchy.
 */

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twin/aas.hpp"
#include "twin/error.hpp"

namespace twin::ingest {

/// Archive entry listing the shell documents of a package.
inline constexpr std::string_view kManifestPath = "aasx/manifest.json";

struct ProductionSequence {
  std::string system_id;
  std::vector<std::string> steps;  ///< asset ids, upstream first

  /// Index of the asset in the sequence, or nullopt.
  std::optional<std::size_t> position(std::string_view asset_id) const;

  bool operator==(const ProductionSequence&) const = default;
};

struct HierarchyTree {
  std::string root_asset_id;
  /// Every asset in the tree has an entry; leaves map to an empty list.
  std::map<std::string, std::vector<std::string>> children;

  /// Depth-first preorder, children in BOM order.
  std::vector<std::string> assets() const;
  std::size_t edge_count() const;
  bool contains(std::string_view asset_id) const { return children.count(std::string(asset_id)) != 0; }

  bool operator==(const HierarchyTree&) const = default;
};

/// Shells of a package in manifest order. Throws Error{archive} for a corrupt
/// archive, missing/empty manifest or missing entry; parse errors keep their
/// code and get the archive path prepended to their path.
std::vector<aas::AdministrationShell> read_aasx(std::string_view bytes);
std::vector<aas::AdministrationShell> read_aasx_file(const std::filesystem::path& file);

/// An unpacked package (directory containing aasx/manifest.json) in manifest
/// order, or else every *.json file in lexicographic filename order.
std::vector<aas::AdministrationShell> read_directory(const std::filesystem::path& dir);

struct FetchOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::size_t parallelism = 4;
  std::chrono::seconds timeout{10};
};

struct FetchFailure {
  std::string shell_id;
  Error error;
};

struct FetchResult {
  std::vector<aas::AdministrationShell> shells;  ///< listing order, failures skipped
  std::vector<FetchFailure> failures;            ///< listing order
};

/// GET {base}/shells, then GET {base}/shells/{id} for each listed id.
/// Throws Error{transport} if the listing cannot be obtained after retries;
/// per-shell failures are collected in the result.
FetchResult fetch_shells(const std::string& endpoint, const FetchOptions& options = {});

/// Throws Error{syntax} or Error{validation}.
ProductionSequence load_sequence(std::string_view json_text);
std::string serialize_sequence(const ProductionSequence& sequence);

/// Recursive depth-first expansion of the Bills of Material from `root`.
/// Throws Error{cycle} (path lists the cycle, e.g. "A,B,A"),
/// Error{dangling_reference} for references to shells not ingested, and
/// Error{validation} when an asset is listed by two parents.
HierarchyTree build_hierarchy(const std::vector<aas::AdministrationShell>& shells, const std::string& root_asset_id);

/// The single shell no Bill of Material refers to. Throws Error{validation}
/// when there is none or more than one.
std::string infer_root(const std::vector<aas::AdministrationShell>& shells);

/// Throws Error{schema} if two shells share an id.
void check_unique_ids(const std::vector<aas::AdministrationShell>& shells);

}  // namespace twin::ingest
