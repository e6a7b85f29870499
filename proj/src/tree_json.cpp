#include "tpop/tree_json.hpp"

#include <fmt/format.h>

namespace tpop::io {

using nlohmann::json;

AgentId AgentDirectory::intern(const std::string& name) {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  const AgentId id{names_.size()};
  ids_.emplace(name, id);
  names_.push_back(name);
  return id;
}

std::optional<AgentId> AgentDirectory::find(const std::string& name) const {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::string AgentDirectory::name(AgentId id) const {
  if (id.value < names_.size()) return names_[id.value];
  return std::to_string(id.value);
}

namespace {

std::string node_name(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return std::to_string(j.get<std::int64_t>());
  throw InvalidInput(fmt::format("{}: agent id must be a string or non-negative integer", where));
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidInput(fmt::format("{}: missing field '{}'", where, key));
  }
  return j.at(key);
}

std::size_t index_field(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw InvalidInput(fmt::format("{}: expected a non-negative integer", where));
  }
  return j.get<std::size_t>();
}

}  // namespace

WitnessTree tree_from_json(const json& j, AgentDirectory& dir) {
  const json& nodes = field(j, "nodes", "tree");
  if (!nodes.is_array() || nodes.empty()) throw InvalidInput("tree: 'nodes' must be a non-empty array");

  struct Slot {
    std::size_t level;
    std::size_t index;
  };
  std::vector<Slot> slots;
  slots.reserve(nodes.size());
  WitnessTree tree;

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string where = fmt::format("tree.nodes[{}]", k);
    const json& n = nodes[k];
    const AgentId id = dir.intern(node_name(field(n, "id", where), where + ".id"));
    const std::size_t level = index_field(field(n, "level", where), where + ".level");
    const json& parent = field(n, "parent", where);

    std::optional<std::size_t> parent_index;
    if (level == 0) {
      if (!parent.is_null()) throw InvalidInput(where + ": the root must have parent null");
    } else {
      const std::size_t p = index_field(parent, where + ".parent");
      if (p >= k) throw InvalidInput(fmt::format("{}: parent {} must precede the node", where, p));
      if (slots[p].level + 1 != level) {
        throw InvalidInput(fmt::format("{}: parent {} is at level {}, expected {}", where, p,
                                       slots[p].level, level - 1));
      }
      parent_index = slots[p].index;
    }
    if (tree.levels.size() <= level) tree.levels.resize(level + 1);
    slots.push_back(Slot{level, tree.levels[level].size()});
    tree.levels[level].push_back(TreeNode{id, level, parent_index});
  }

  if (tree.levels[0].size() != 1) throw InvalidInput("tree: exactly one node must be at level 0");
  for (std::size_t l = 1; l < tree.levels.size(); ++l) {
    if (tree.levels[l].empty()) throw InvalidInput(fmt::format("tree: level {} is empty", l));
  }
  if (j.contains("root")) {
    const std::string root = node_name(j.at("root"), "tree.root");
    if (dir.find(root) != tree.root()) {
      throw InvalidInput(fmt::format("tree: root '{}' is not the level-0 node", root));
    }
  }
  if (j.contains("under_filled")) {
    if (!j.at("under_filled").is_boolean()) throw InvalidInput("tree: 'under_filled' must be a boolean");
    tree.under_filled = j.at("under_filled").get<bool>();
  }
  return tree;
}

json tree_to_json(const WitnessTree& tree, const AgentDirectory& dir) {
  json nodes = json::array();
  std::vector<std::size_t> offsets;  // flat index of each level's first node
  std::size_t flat = 0;
  for (const auto& level : tree.levels) {
    offsets.push_back(flat);
    flat += level.size();
  }
  for (std::size_t l = 0; l < tree.levels.size(); ++l) {
    for (const TreeNode& n : tree.levels[l]) {
      json node{{"id", dir.name(n.agent)}, {"level", l}};
      node["parent"] = n.parent ? json(offsets[l - 1] + *n.parent) : json(nullptr);
      nodes.push_back(std::move(node));
    }
  }
  return json{{"root", dir.name(tree.root())}, {"nodes", nodes}, {"under_filled", tree.under_filled}};
}

DuplicatePolicy parse_duplicate_policy(const std::string& s) {
  if (s == "discount") return DuplicatePolicy::Discount;
  if (s == "fail_proof" || s == "fail-proof") return DuplicatePolicy::FailProof;
  throw InvalidInput(fmt::format("unknown duplicate policy '{}' (discount | fail_proof)", s));
}

std::string to_string(DuplicatePolicy policy) {
  return policy == DuplicatePolicy::Discount ? "discount" : "fail_proof";
}

TPoPParams params_from_json(const json& j) {
  const json& t = field(j, "threshold", "theta");
  if (!t.is_number()) throw InvalidInput("theta.threshold must be a number");
  const json& w = field(j, "witnesses", "theta");
  if (!w.is_array()) throw InvalidInput("theta.witnesses must be an array");
  std::vector<std::uint32_t> witnesses;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!w[k].is_number_integer() || w[k].get<std::int64_t>() < 1) {
      throw InvalidInput(fmt::format("theta.witnesses[{}] must be a positive integer", k));
    }
    witnesses.push_back(w[k].get<std::uint32_t>());
  }
  if (j.contains("depth")) {
    const json& d = j.at("depth");
    if (!d.is_number_integer() || d.get<std::int64_t>() != static_cast<std::int64_t>(witnesses.size())) {
      throw InvalidInput("theta.depth must equal the number of witness counts");
    }
  }
  DuplicatePolicy policy = DuplicatePolicy::Discount;
  if (j.contains("duplicate_policy")) {
    if (!j.at("duplicate_policy").is_string()) throw InvalidInput("theta.duplicate_policy must be a string");
    policy = parse_duplicate_policy(j.at("duplicate_policy").get<std::string>());
  }
  return TPoPParams(Threshold::from_double(t.get<double>()), std::move(witnesses), policy);
}

json params_to_json(const TPoPParams& params) {
  return json{{"threshold", params.threshold().value()},
              {"depth", params.depth()},
              {"witnesses", params.witnesses_per_level()},
              {"duplicate_policy", to_string(params.duplicate_policy())}};
}

json outcome_to_json(const VerificationOutcome& outcome, const AgentDirectory& dir) {
  json levels = json::array();
  json m = json::array();
  for (const auto& t : outcome.levels) {
    levels.push_back(json{{"level", t.level}, {"confirmed", t.confirmed}, {"nominal", t.nominal}});
    m.push_back(t.confirmed);
  }
  json parents = json::array();
  for (const auto& p : outcome.parents) {
    parents.push_back(json{{"id", dir.name(p.agent)},
                           {"level", p.level},
                           {"index", p.index},
                           {"confirmations", p.confirmations},
                           {"eliminated", p.eliminated}});
  }
  json eliminated = json::array();
  for (AgentId a : outcome.eliminated) eliminated.push_back(dir.name(a));
  return json{{"verdict", outcome.truthful ? "truthful" : "untruthful"},
              {"truthful", outcome.truthful},
              {"M", m},
              {"levels", levels},
              {"parents", parents},
              {"eliminated", eliminated},
              {"failure_level", outcome.failure_level ? json(*outcome.failure_level) : json(nullptr)},
              {"duplicate_rejected", outcome.duplicate_rejected}};
}

void ConfirmationTable::set(AgentId witness, AgentId parent, bool confirms) {
  if (confirms) {
    confirmed_.insert({witness, parent});
  } else {
    confirmed_.erase({witness, parent});
  }
}

bool ConfirmationTable::confirms(AgentId witness, AgentId parent) const {
  return confirmed_.contains({witness, parent});
}

ConfirmationTable confirmations_from_json(const json& j, AgentDirectory& dir) {
  if (!j.is_array()) throw InvalidInput("confirmations must be an array");
  ConfirmationTable table;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string where = fmt::format("confirmations[{}]", k);
    const json& c = j[k];
    const AgentId w = dir.intern(node_name(field(c, "witness", where), where + ".witness"));
    const AgentId p = dir.intern(node_name(field(c, "parent", where), where + ".parent"));
    const json& v = field(c, "confirms", where);
    if (!v.is_boolean()) throw InvalidInput(where + ".confirms must be a boolean");
    table.set(w, p, v.get<bool>());
  }
  return table;
}

}  // namespace tpop::io
