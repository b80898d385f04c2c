#include "skg/synth/payload.hpp"

#include "skg/core/validate.hpp"
#include "skg/error.hpp"
#include "skg/util/json_reader.hpp"
#include "skg/util/text.hpp"

namespace skg::synth {

namespace {

[[noreturn]] void fail(Errc code, const std::string& message, std::string_view raw, nlohmann::json details = {}) {
  if (!details.is_object()) details = nlohmann::json::object();
  details["raw"] = std::string(raw);
  throw Error(code, message, std::move(details));
}

}  // namespace

std::vector<std::string> fenced_blocks(std::string_view text, std::string_view label) {
  std::vector<std::string> out;
  const auto lines = util::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = util::trim(lines[i]);
    if (!line.starts_with("```")) continue;
    const bool wanted = util::trim(line.substr(3)) == label;
    std::string body;
    std::size_t j = i + 1;
    for (; j < lines.size() && util::trim(lines[j]) != "```"; ++j) {
      body += lines[j];
      body += '\n';
    }
    if (j == lines.size()) {
      if (wanted) throw Error(Errc::SyntaxError, "unterminated " + std::string(label) + " block", {{"line", i + 1}});
      break;
    }
    if (wanted) out.push_back(std::move(body));
    i = j;
  }
  return out;
}

std::string render_payload(const GenerationBundle& b) {
  return "```" + std::string(kBundleFence) + "\n" + bundle_payload_to_json(b).dump(2) + "\n```\n";
}

GenerationBundle parse_bundle(std::string_view raw, std::size_t expected_iteration, bool graph_required) {
  std::vector<std::string> blocks;
  try {
    blocks = fenced_blocks(raw, kBundleFence);
  } catch (const Error& e) {
    fail(e.code(), e.what(), raw, e.details());
  }
  if (blocks.empty()) fail(Errc::NoPayloadBlock, "response has no skg-bundle block", raw);
  if (blocks.size() > 1) {
    fail(Errc::MultiplePayloadBlocks, "response has " + std::to_string(blocks.size()) + " skg-bundle blocks", raw);
  }
  GenerationBundle b;
  try {
    b = bundle_payload_from_json(util::parse_json(blocks.front()), expected_iteration, graph_required);
  } catch (const Error& e) {
    fail(e.code(), e.what(), raw, e.details());
  }
  if (b.graph) {
    const auto result = validate_graph(*b.graph);
    if (!result.ok()) {
      nlohmann::json violations = nlohmann::json::array();
      for (const auto& v : result.violations) violations.push_back({{"code", v.code}, {"refs", v.refs}, {"message", v.message}});
      fail(Errc::StructuralError, "graph fails validation: " + result.violations.front().code, raw,
           {{"violations", violations}});
    }
  }
  return b;
}

}  // namespace skg::synth
