#include "rbt/scenegraph.hpp"

#include <algorithm>
#include <regex>

#include "rbt/error.hpp"

namespace rbt::scene {

using nlohmann::json;

SceneGraph::SceneGraph(std::string ego, std::vector<Vertex> vertices, std::vector<Triple> edges)
    : ego_(std::move(ego)), vertices_(std::move(vertices)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!index_.emplace(vertices_[i].id, i).second) {
      throw Error(ErrorCode::kMalformedFile, "scene graph vertex '" + vertices_[i].id + "' repeated");
    }
  }
  if (!index_.contains(ego_)) throw Error(ErrorCode::kMalformedFile, "ego '" + ego_ + "' is not a vertex");
  std::set<Triple> seen;
  for (const auto& e : edges_) {
    if (!index_.contains(e.src) || !index_.contains(e.dst)) {
      throw Error(ErrorCode::kMalformedFile, "edge (" + e.src + "," + e.rel + "," + e.dst + ") has unknown endpoint");
    }
    if (!seen.insert(e).second) {
      throw Error(ErrorCode::kMalformedFile, "edge (" + e.src + "," + e.rel + "," + e.dst + ") repeated");
    }
  }
}

SceneGraph SceneGraph::from_json(const json& doc) {
  try {
    std::vector<Vertex> vertices;
    for (const auto& v : doc.at("vertices")) {
      vertices.push_back({v.at("id").get<std::string>(), v.at("class").get<std::string>()});
    }
    std::vector<Triple> edges;
    for (const auto& e : doc.value("edges", json::array())) {
      edges.push_back({e.at("src").get<std::string>(), e.at("rel").get<std::string>(), e.at("dst").get<std::string>()});
    }
    return SceneGraph(doc.at("ego").get<std::string>(), std::move(vertices), std::move(edges));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("scene graph: ") + e.what());
  }
}

SceneGraph SceneGraph::parse(std::string_view json_text) {
  try {
    return from_json(json::parse(json_text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("scene graph is not valid JSON: ") + e.what());
  }
}

SceneGraph SceneGraph::load(const std::filesystem::path& path) {
  return parse(read_text_file(path, "scene graph"));
}

const std::string& SceneGraph::class_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "no vertex '" + std::string(id) + "'");
  return vertices_[it->second].cls;
}

std::vector<Path> walk(const SceneGraph& sg, std::size_t max_len) {
  if (max_len < 1) throw Error(ErrorCode::kInvalidArgument, "walk needs max_len >= 1");
  std::map<std::string, std::vector<Step>> incident;
  for (const auto& e : sg.edges()) {
    if (e.src == e.dst) continue;
    incident[e.src].push_back({e, Direction::kForward});
    incident[e.dst].push_back({e, Direction::kReverse});
  }
  std::vector<Path> out;
  Path current;
  std::set<std::string> on_path{sg.ego()};
  auto extend = [&](auto&& self, const std::string& at) -> void {
    if (current.steps.size() == max_len) return;
    auto it = incident.find(at);
    if (it == incident.end()) return;
    for (const auto& step : it->second) {
      const auto& next = step.to();
      if (on_path.contains(next)) continue;
      current.steps.push_back(step);
      on_path.insert(next);
      out.push_back(current);
      self(self, next);
      on_path.erase(next);
      current.steps.pop_back();
    }
  };
  extend(extend, sg.ego());
  return out;
}

namespace {

Direction parse_direction(const std::string& s) {
  if (s == "forward" || s == "fwd") return Direction::kForward;
  if (s == "reverse" || s == "rev") return Direction::kReverse;
  throw Error(ErrorCode::kMalformedFile, "unknown step direction '" + s + "'");
}

const std::regex& slot_regex() {
  static const std::regex re(R"(\{([rcv])(\d+)\})");
  return re;
}

}  // namespace

std::size_t RuleSet::max_pattern_length() const {
  std::size_t n = 0;
  for (const auto& r : rules) n = std::max(n, r.pattern.size());
  return n;
}

const std::string& RuleSet::entity_class(const std::string& scene_class) const {
  auto it = entity_classes.find(scene_class);
  return it == entity_classes.end() ? scene_class : it->second;
}

RuleSet RuleSet::from_json(const json& doc) {
  RuleSet set;
  try {
    const json& rules = doc.is_array() ? doc : doc.at("rules");
    if (doc.is_object()) {
      const json classes = doc.value("entity_classes", json::object());
      for (const auto& [k, v] : classes.items()) set.entity_classes[k] = v.get<std::string>();
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto& r = rules[i];
      PathRule rule;
      rule.id = r.value("id", "rule" + std::to_string(i + 1));
      for (const auto& s : r.at("pattern")) {
        StepPattern p;
        p.rel = s.at("rel").get<std::string>();
        p.dir = parse_direction(s.value("dir", std::string("forward")));
        if (auto c = s.find("class"); c != s.end()) {
          if (c->is_string()) {
            p.classes.push_back(c->get<std::string>());
          } else {
            p.classes = c->get<std::vector<std::string>>();
          }
        }
        rule.pattern.push_back(std::move(p));
      }
      rule.emit = r.at("emit").get<std::string>();
      const auto subject = r.value("subject", std::string("terminal"));
      if (subject == "terminal") {
        rule.subject = EmitSubject::kTerminal;
      } else if (subject == "ego") {
        rule.subject = EmitSubject::kEgo;
      } else {
        throw Error(ErrorCode::kMalformedFile, "rule '" + rule.id + "' has unknown subject '" + subject + "'");
      }
      if (rule.pattern.empty()) throw Error(ErrorCode::kMalformedFile, "rule '" + rule.id + "' has an empty pattern");
      for (std::sregex_iterator it(rule.emit.begin(), rule.emit.end(), slot_regex()), end; it != end; ++it) {
        const auto n = std::stoul((*it)[2].str());
        if (n > rule.pattern.size() || ((*it)[1] == "r" && n == 0)) {
          throw Error(ErrorCode::kUnresolvablePhraseSlot,
                      "rule '" + rule.id + "' slot " + (*it)[0].str() + " is outside its pattern");
        }
      }
      set.rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("rule set: ") + e.what());
  }
  return set;
}

RuleSet RuleSet::parse(std::string_view json_text) {
  try {
    return from_json(json::parse(json_text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("rule set is not valid JSON: ") + e.what());
  }
}

RuleSet RuleSet::load(const std::filesystem::path& path) { return parse(read_text_file(path, "rule set")); }

bool matches(const PathRule& rule, const Path& path, const SceneGraph& sg) {
  if (rule.pattern.size() != path.steps.size()) return false;
  for (std::size_t i = 0; i < rule.pattern.size(); ++i) {
    const auto& p = rule.pattern[i];
    const auto& s = path.steps[i];
    if (p.rel != "*" && p.rel != s.triple.rel) return false;
    if (p.dir != s.dir) return false;
    if (!p.classes.empty()) {
      const auto& cls = sg.class_of(s.to());
      if (std::find(p.classes.begin(), p.classes.end(), cls) == p.classes.end()) return false;
    }
  }
  return true;
}

namespace {

std::string fill_slots(const PathRule& rule, const Path& path, const SceneGraph& sg) {
  std::string out;
  auto begin = rule.emit.cbegin();
  for (std::sregex_iterator it(rule.emit.begin(), rule.emit.end(), slot_regex()), end; it != end; ++it) {
    out.append(begin, rule.emit.cbegin() + it->position());
    begin = rule.emit.cbegin() + it->position() + it->length();
    const auto kind = (*it)[1].str();
    const auto n = std::stoul((*it)[2].str());
    if (n > path.steps.size() || (kind == "r" && n == 0)) {
      throw Error(ErrorCode::kUnresolvablePhraseSlot, "rule '" + rule.id + "' slot " + (*it)[0].str());
    }
    const std::string& vertex = n == 0 ? sg.ego() : path.steps[n - 1].to();
    if (kind == "r") {
      out += path.steps[n - 1].triple.rel;
    } else if (kind == "c") {
      out += sg.class_of(vertex);
    } else {
      out += vertex;
    }
  }
  out.append(begin, rule.emit.cend());
  return out;
}

}  // namespace

std::set<Emission> apply_rules(const std::vector<Path>& paths, const RuleSet& rules, const SceneGraph& sg,
                               const Glossary& g) {
  std::set<Emission> out;
  for (const auto& path : paths) {
    for (const auto& rule : rules.rules) {
      if (!matches(rule, path, sg)) continue;
      const auto phrase = fill_slots(rule, path, sg);
      const auto* term = g.lookup_phrase(phrase);
      if (!term) {
        throw Error(ErrorCode::kUnresolvablePhraseSlot,
                    "rule '" + rule.id + "' emitted '" + phrase + "', which is not a glossary phrase");
      }
      out.insert({rule.subject == EmitSubject::kEgo ? sg.ego() : path.terminal(), term->id});
    }
  }
  return out;
}

LabeledInput label_scene(const SceneGraph& sg, const RuleSet& rules, const Glossary& g, std::string input_ref,
                         std::size_t max_len) {
  if (max_len == 0) max_len = std::max(kDefaultMaxPathLength, rules.max_pattern_length());
  LabeledInput li;
  li.input = std::move(input_ref);
  li.entities.push_back({sg.ego(), std::string(kEgoClass), {}});
  for (const auto& v : sg.vertices()) {
    if (v.id != sg.ego()) li.entities.push_back({v.id, rules.entity_class(v.cls), {}});
  }
  for (const auto& e : apply_rules(walk(sg, max_len), rules, sg, g)) {
    li.entity(e.entity, rules.entity_class(sg.class_of(e.entity))).terms.insert(e.term);
  }
  validate(li, g);
  return li;
}

}  // namespace rbt::scene
