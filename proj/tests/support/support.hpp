#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skg/core/case.hpp"
#include "skg/core/graph.hpp"
#include "skg/rules/ast.hpp"
#include "skg/util/rng.hpp"

namespace skg::test {

std::filesystem::path fixture_path(const std::string& rel);
std::filesystem::path source_path(const std::string& rel);

const rules::ConstraintSet& default_rules();
/// The 25 committed fixture graphs, sorted by file name.
const std::vector<SceneKnowledgeGraph>& fixture_graphs();
const std::vector<ComplaintCase>& fixture_cases();
SceneKnowledgeGraph load_graph(const std::filesystem::path& p);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct RandomGraphOptions {
  std::size_t max_nodes = 12;
  /// Node ids are drawn from n0..n<id_pool-1>, so two graphs can share ids.
  std::size_t id_pool = 16;
};

/// Structurally valid graph with arbitrary content. Rule consistency is not
/// attempted.
SceneKnowledgeGraph random_graph(util::Rng& rng, const std::string& graph_id, const RandomGraphOptions& opts = {});

Value random_value(util::Rng& rng);

}  // namespace skg::test

#include <nlohmann/json.hpp>

namespace skg::test {

struct Mutation {
  std::string kind;  // delete, enum, type, truncate, fence, dangling
  std::string where;
  std::string raw;   // full model reply
};

/// Breaks one structural aspect of a bundle payload and wraps the result as a
/// model reply. Attribute maps and coverage entries are data, so they are
/// never the deletion target.
Mutation mutate_payload(util::Rng& rng, const nlohmann::json& payload);

}  // namespace skg::test

#include "skg/corpus/bench.hpp"

namespace skg::test {

/// Finals for synthetic cases 0..n-1 of `seed`, each with its clean mock bundle.
std::vector<corpus::FinalCase> make_finals(std::size_t n, std::uint64_t seed);

}  // namespace skg::test
