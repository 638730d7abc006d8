#include "twin/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "twin/descriptor.hpp"
#include "twin/zip.hpp"

namespace twin::ingest {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io, "cannot read file", file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::archive, std::string("malformed manifest: ") + e.what(), std::string(kManifestPath));
  }
  const json* list = &doc;
  if (doc.is_object()) {
    auto it = doc.find("shells");
    if (it == doc.end()) {
      throw Error(ErrorCode::archive, "manifest without 'shells' list", std::string(kManifestPath));
    }
    list = &*it;
  }
  if (!list->is_array()) {
    throw Error(ErrorCode::archive, "manifest 'shells' must be an array", std::string(kManifestPath));
  }
  std::vector<std::string> paths;
  for (const auto& p : *list) {
    if (!p.is_string()) {
      throw Error(ErrorCode::archive, "manifest entries must be strings", std::string(kManifestPath));
    }
    paths.push_back(p.get<std::string>());
  }
  if (paths.empty()) {
    throw Error(ErrorCode::archive, "empty manifest", std::string(kManifestPath));
  }
  return paths;
}

aas::AdministrationShell parse_at(std::string_view document, const std::string& where) {
  try {
    return aas::parse_shell(document);
  } catch (const Error& e) {
    const auto path = e.path().empty() ? where : where + ":" + e.path();
    throw Error(e.code(), where + ": " + e.what(), path);
  }
}

// Parses documents concurrently; results keep input order.
std::vector<aas::AdministrationShell> parse_all(const std::vector<std::pair<std::string, std::string>>& docs) {
  std::vector<std::future<aas::AdministrationShell>> jobs;
  jobs.reserve(docs.size());
  for (const auto& [where, text] : docs) {
    jobs.push_back(std::async(std::launch::async, [&where, &text] { return parse_at(text, where); }));
  }
  std::vector<aas::AdministrationShell> shells;
  shells.reserve(docs.size());
  std::exception_ptr first_error;
  for (auto& j : jobs) {
    try {
      shells.push_back(j.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  check_unique_ids(shells);
  return shells;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xf]);
    }
  }
  return out;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::transport, "endpoint must be an http URL", url);
  }
  const auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.prefix = slash == std::string::npos ? std::string{} : url.substr(slash);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

// GET with retries on transport failures and 5xx responses.
std::string get_with_retry(const Endpoint& ep, const std::string& path, const FetchOptions& opt) {
  httplib::Client client(ep.origin);
  client.set_url_encode(false);
  client.set_connection_timeout(opt.timeout);
  client.set_read_timeout(opt.timeout);
  auto backoff = opt.initial_backoff;
  std::string last_failure;
  const int attempts = std::max(1, opt.attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Get(ep.prefix + path);
    if (res && res->status >= 200 && res->status < 300) {
      return res->body;
    }
    if (res && res->status < 500) {
      throw Error(ErrorCode::transport, "GET " + path + " returned HTTP " + std::to_string(res->status), path);
    }
    last_failure = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::transport,
              "GET " + path + " failed after " + std::to_string(attempts) + " attempts: " + last_failure, path);
}

}  // namespace

std::optional<std::size_t> ProductionSequence::position(std::string_view asset_id) const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] == asset_id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> HierarchyTree::assets() const {
  std::vector<std::string> out;
  if (!contains(root_asset_id)) return out;
  std::vector<std::string> stack{root_asset_id};
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& kids = children.at(id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::size_t HierarchyTree::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, kids] : children) n += kids.size();
  return n;
}

void check_unique_ids(const std::vector<aas::AdministrationShell>& shells) {
  std::set<std::string> seen;
  for (const auto& s : shells) {
    if (!seen.insert(s.id).second) {
      throw Error(ErrorCode::schema, "duplicate shell id '" + s.id + "'", s.id);
    }
  }
}

std::vector<aas::AdministrationShell> read_aasx(std::string_view bytes) {
  const auto entries = zip::read_archive(bytes);
  auto manifest = entries.find(std::string(kManifestPath));
  if (manifest == entries.end()) {
    throw Error(ErrorCode::archive, "missing manifest", std::string(kManifestPath));
  }
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& path : parse_manifest(manifest->second)) {
    auto it = entries.find(path);
    if (it == entries.end()) {
      throw Error(ErrorCode::archive, "manifest references missing entry '" + path + "'", path);
    }
    docs.emplace_back(path, it->second);
  }
  return parse_all(docs);
}

std::vector<aas::AdministrationShell> read_aasx_file(const std::filesystem::path& file) {
  return read_aasx(read_file(file));
}

std::vector<aas::AdministrationShell> read_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::io, "not a directory", dir.string());
  }
  std::vector<std::pair<std::string, std::string>> docs;
  const auto manifest = dir / std::string(kManifestPath);
  if (fs::exists(manifest)) {
    for (const auto& rel : parse_manifest(read_file(manifest))) {
      const auto full = dir / rel;
      if (!fs::is_regular_file(full)) {
        throw Error(ErrorCode::archive, "manifest references missing entry '" + rel + "'", rel);
      }
      docs.emplace_back(rel, read_file(full));
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) docs.emplace_back(f.filename().string(), read_file(f));
  }
  return parse_all(docs);
}

FetchResult fetch_shells(const std::string& endpoint, const FetchOptions& options) {
  const auto ep = split_endpoint(endpoint);
  const auto listing_text = get_with_retry(ep, "/shells", options);
  json listing;
  try {
    listing = json::parse(listing_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, std::string("malformed shell listing: ") + e.what(), "/shells");
  }
  if (!listing.is_array()) {
    throw Error(ErrorCode::schema, "shell listing must be a JSON array of ids", "/shells");
  }
  std::vector<std::string> ids;
  for (const auto& id : listing) {
    if (!id.is_string()) throw Error(ErrorCode::schema, "shell listing must contain strings", "/shells");
    ids.push_back(id.get<std::string>());
  }

  std::vector<std::optional<aas::AdministrationShell>> shells(ids.size());
  std::vector<std::optional<Error>> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        const auto body = get_with_retry(ep, "/shells/" + percent_encode(ids[i]), options);
        shells[i] = parse_at(body, ids[i]);
      } catch (const Error& e) {
        errors[i] = e;
      }
    }
  };
  const auto n_workers = std::max<std::size_t>(1, std::min(options.parallelism, ids.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers && !ids.empty(); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  FetchResult result;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (shells[i]) {
      result.shells.push_back(std::move(*shells[i]));
    } else {
      result.failures.push_back({ids[i], *errors[i]});
    }
  }
  check_unique_ids(result.shells);
  return result;
}

ProductionSequence load_sequence(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::syntax, e.what(), "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw Error(ErrorCode::validation, "sequence must be a JSON object");
  ProductionSequence seq;
  auto sys = doc.find("systemId");
  if (sys == doc.end() || !sys->is_string() || sys->get<std::string>().empty()) {
    throw Error(ErrorCode::validation, "missing systemId", "systemId");
  }
  seq.system_id = sys->get<std::string>();
  auto steps = doc.find("steps");
  if (steps == doc.end() || !steps->is_array()) {
    throw Error(ErrorCode::validation, "missing steps array", "steps");
  }
  std::set<std::string> seen;
  for (const auto& s : *steps) {
    if (!s.is_string() || s.get<std::string>().empty()) {
      throw Error(ErrorCode::validation, "steps must be non-empty strings", "steps");
    }
    auto id = s.get<std::string>();
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::validation, "duplicate step '" + id + "'", "steps/" + id);
    }
    seq.steps.push_back(std::move(id));
  }
  if (seq.steps.empty()) throw Error(ErrorCode::validation, "sequence has no steps", "steps");
  return seq;
}

std::string serialize_sequence(const ProductionSequence& sequence) {
  return json{{"systemId", sequence.system_id}, {"steps", sequence.steps}}.dump() + "\n";
}

namespace {

struct HierarchyBuilder {
  const std::map<std::string, const aas::AdministrationShell*>& by_id;
  HierarchyTree tree;
  std::vector<std::string> path;  // current DFS stack
  std::set<std::string> on_path;
  std::map<std::string, std::string> parent;

  void visit(const std::string& id) {
    path.push_back(id);
    on_path.insert(id);
    auto& kids = tree.children[id];
    for (const auto& child : extract_bom(*by_id.at(id))) {
      if (on_path.count(child) != 0) {
        auto start = std::find(path.begin(), path.end(), child);
        std::vector<std::string> cycle(start, path.end());
        cycle.push_back(child);
        std::string joined;
        for (const auto& c : cycle) joined += (joined.empty() ? "" : ",") + c;
        throw Error(ErrorCode::cycle, "bill of material cycle " + joined, joined);
      }
      if (by_id.count(child) == 0) {
        throw Error(ErrorCode::dangling_reference, "'" + id + "' references un-ingested shell '" + child + "'",
                    id + "/" + child);
      }
      if (auto p = parent.find(child); p != parent.end()) {
        throw Error(ErrorCode::validation,
                    "asset '" + child + "' is listed by both '" + p->second + "' and '" + id + "'", child);
      }
      parent.emplace(child, id);
      kids.push_back(child);
      visit(child);
    }
    on_path.erase(id);
    path.pop_back();
  }
};

}  // namespace

HierarchyTree build_hierarchy(const std::vector<aas::AdministrationShell>& shells, const std::string& root_asset_id) {
  std::map<std::string, const aas::AdministrationShell*> by_id;
  for (const auto& s : shells) by_id.emplace(s.id, &s);
  if (by_id.count(root_asset_id) == 0) {
    throw Error(ErrorCode::dangling_reference, "root asset '" + root_asset_id + "' was not ingested", root_asset_id);
  }
  HierarchyBuilder b{by_id, {}, {}, {}, {}};
  b.tree.root_asset_id = root_asset_id;
  b.visit(root_asset_id);
  return std::move(b.tree);
}

std::string infer_root(const std::vector<aas::AdministrationShell>& shells) {
  std::set<std::string> referenced;
  for (const auto& s : shells) {
    for (const auto& child : extract_bom(s)) referenced.insert(child);
  }
  std::vector<std::string> roots;
  for (const auto& s : shells) {
    if (referenced.count(s.id) == 0) roots.push_back(s.id);
  }
  if (roots.size() != 1) {
    std::string joined;
    for (const auto& r : roots) joined += (joined.empty() ? "" : ",") + r;
    throw Error(ErrorCode::validation,
                "cannot infer the hierarchy root: " + std::to_string(roots.size()) + " unreferenced shells [" + joined + "]");
  }
  return roots.front();
}

}  // namespace twin::ingest
