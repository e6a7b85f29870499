// JSON forms of witness trees, confirmations and verification outcomes.
//
// Tree:
//   {"root": "g",
//    "nodes": [{"id": "g",  "level": 0, "parent": null},
//              {"id": "a1", "level": 1, "parent": 0}, ...],
//    "under_filled": false}
// "parent" is the index of the parent inside "nodes". Node ids are strings
// (integers are accepted and read as their decimal text).
//
// Confirmations: [{"witness": "a3", "parent": "a1", "confirms": true}, ...]
// Any (witness, parent) pair not listed does not confirm.
//
// Theta: {"threshold": 0.5, "witnesses": [2, 2], "duplicate_policy": "discount"}
//
// Outcome:
//   {"verdict": "truthful", "truthful": true, "M": [2, 1],
//    "levels": [{"level": 2, "confirmed": 2, "nominal": 4}, ...],
//    "parents": [{"id": "a1", "level": 1, "index": 0, "confirmations": 2,
//                 "eliminated": false}, ...],
//    "eliminated": ["a2"], "failure_level": null, "duplicate_rejected": false}

#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tpop/core.hpp"

namespace tpop::io {

/// Two-way mapping between external agent names and AgentIds.
class AgentDirectory {
 public:
  AgentId intern(const std::string& name);
  std::optional<AgentId> find(const std::string& name) const;
  /// Registered name, or the decimal id for agents never interned.
  std::string name(AgentId id) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, AgentId> ids_;
  std::vector<std::string> names_;
};

/// Throws InvalidInput on missing fields, bad types, or parent links that do
/// not point one level up.
WitnessTree tree_from_json(const nlohmann::json& j, AgentDirectory& dir);
nlohmann::json tree_to_json(const WitnessTree& tree, const AgentDirectory& dir);

TPoPParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const TPoPParams& params);

DuplicatePolicy parse_duplicate_policy(const std::string& s);
std::string to_string(DuplicatePolicy policy);

nlohmann::json outcome_to_json(const VerificationOutcome& outcome, const AgentDirectory& dir);

/// Oracle backed by an explicit list of confirming (witness, parent) pairs.
class ConfirmationTable final : public ConfirmationOracle {
 public:
  void set(AgentId witness, AgentId parent, bool confirms);

  bool knows(AgentId) const override { return true; }
  std::vector<AgentId> candidate_witnesses(AgentId) override { return {}; }
  bool confirms(AgentId witness, AgentId parent) const override;

 private:
  std::set<std::pair<AgentId, AgentId>> confirmed_;
};

ConfirmationTable confirmations_from_json(const nlohmann::json& j, AgentDirectory& dir);

}  // namespace tpop::io
