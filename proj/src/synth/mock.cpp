#include "skg/synth/mock.hpp"

#include "skg/core/vocab.hpp"
#include "skg/corpus/describe.hpp"
#include "skg/corpus/scene.hpp"
#include "skg/synth/payload.hpp"
#include "skg/util/digest.hpp"

namespace skg::synth {

GenerationBundle mock_bundle(const ComplaintCase& c, bool defective, Defect defect) {
  auto g = corpus::scene_from_case(c);
  if (defective) {
    for (auto& n : g.nodes) {
      if (n.kind != NodeKind::Evidence) continue;
      if (defect == Defect::EvidenceXref) {
        n.label = "missing-asset-0";
        break;
      }
      n.attributes[std::string(vocab::kValidity)] = Value("insufficient");
    }
    if (defect == Defect::RuleViolation) {
      for (auto& n : g.nodes) {
        if (n.node_id == "dec-final") n.attributes[std::string(vocab::kAction)] = Value("Refund");
      }
      g.scene_dims[SceneDim::ResolutionAction] = "Refund";
      g.scene_dims[SceneDim::EvidenceQuality] = "insufficient";
    }
  }
  GenerationBundle b;
  b.description = corpus::render_scene_description(g);
  const auto seed = util::stable_hash64("mock-qa|" + c.case_id);
  for (auto s : kAllSubtasks) {
    try {
      b.qa.push_back(corpus::build_qa(g, s, seed + static_cast<std::uint64_t>(s)));
    } catch (const Error& e) {
      if (e.code() != Errc::MissingAttribute) throw;
    }
  }
  b.graph = std::move(g);
  return b;
}

SceneMockClient::SceneMockClient(std::map<std::string, ComplaintCase> cases, std::size_t defect_rounds, Defect defect)
    : cases_(std::move(cases)), defect_rounds_(defect_rounds), defect_(defect) {}

LlmReply SceneMockClient::complete(const LlmRequest& request) {
  std::size_t round = 0;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    if (request.stage == "verify") return {"No further issues.\n```" + std::string(kFindingsFence) + "\n[]\n```\n", 0};
    round = rounds_[request.case_id]++;
  }
  const auto it = cases_.find(request.case_id);
  if (it == cases_.end()) throw Error(Errc::TransportError, "mock has no case " + request.case_id);
  const auto bundle = mock_bundle(it->second, round < defect_rounds_, defect_);
  return {"Scene bundle for " + request.case_id + ".\n" + render_payload(bundle), 0};
}

std::size_t SceneMockClient::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

}  // namespace skg::synth
