#include "rbt/config.hpp"

#include "rbt/error.hpp"
#include <set>

#include "rbt/labeled_input.hpp"

namespace rbt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

void require_exists(const fs::path& p, const std::string& what) {
  std::error_code ec;
  if (!fs::exists(p, ec)) config_error(what + " '" + p.string() + "' does not exist");
}

LabelerKind parse_labeler(const std::string& s) {
  if (s == "morpho") return LabelerKind::kMorpho;
  if (s == "scenegraph") return LabelerKind::kSceneGraph;
  if (s == "vqa") return LabelerKind::kVqa;
  config_error("unknown labeler '" + s + "' (expected morpho, scenegraph or vqa)");
}

}  // namespace

fs::path ProjectConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : (base_dir / p).lexically_normal(); }

const fs::path& ProjectConfig::labels_path() const {
  if (!labels) config_error("project config has no labels path");
  return *labels;
}

ProjectConfig ProjectConfig::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) config_error("project config must be a JSON object");
  ProjectConfig c;
  c.base_dir = base_dir;
  const std::set<std::string> known = {"glossary", "requirements", "labels",  "taxonomy", "output_schema", "rules",
                                       "out_dir",  "trigger",      "labeler", "campaign"};
  for (const auto& [k, v] : doc.items()) {
    if (!known.contains(k)) config_error("unknown project config key '" + k + "'");
  }
  try {
    auto path = [&](const char* key) -> std::optional<fs::path> {
      if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
      return c.resolve(doc[key].get<std::string>());
    };
    auto required = [&](const char* key) {
      auto p = path(key);
      if (!p) config_error(std::string("project config lacks '") + key + "'");
      require_exists(*p, key);
      return *p;
    };
    c.glossary = required("glossary");
    c.requirements = required("requirements");
    c.labels = path("labels");
    c.taxonomy = path("taxonomy");
    c.output_schema = path("output_schema");
    c.rules = path("rules");
    for (const auto* p : {&c.taxonomy, &c.output_schema, &c.rules}) {
      if (*p) require_exists(**p, p->value().filename().string());
    }
    c.out_dir = path("out_dir").value_or(c.resolve("out"));
    c.trigger = doc.value("trigger", c.trigger);
    if (c.trigger.empty()) config_error("trigger phrase must be non-empty");

    if (doc.contains("labeler")) {
      const json& l = doc["labeler"];
      c.labeler.kind = parse_labeler(l.at("kind").get<std::string>());
      auto lpath = [&](const char* key) { return l.contains(key) ? c.resolve(l[key].get<std::string>()) : fs::path(); };
      c.labeler.images = lpath("images");
      c.labeler.classes = lpath("classes");
      c.labeler.scenes = lpath("scenes");
      c.labeler.answers = lpath("answers");
      c.labeler.class_prefix = l.value("class_prefix", c.labeler.class_prefix);
      c.labeler.threshold = l.value("threshold", c.labeler.threshold);
      c.labeler.failure_tolerance = l.value("failure_tolerance", c.labeler.failure_tolerance);
      switch (c.labeler.kind) {
        case LabelerKind::kMorpho:
          require_exists(c.labeler.images, "labeler images");
          require_exists(c.labeler.classes, "labeler classes");
          break;
        case LabelerKind::kSceneGraph:
          require_exists(c.labeler.scenes, "labeler scenes");
          if (!c.rules) config_error("scene-graph labeling needs 'rules'");
          break;
        case LabelerKind::kVqa:
          require_exists(c.labeler.answers, "labeler answers");
          break;
        case LabelerKind::kNone:
          break;
      }
    }
    if (doc.contains("campaign")) {
      const json& k = doc["campaign"];
      c.campaign.n = k.value("n", c.campaign.n);
      c.campaign.reps = k.value("reps", c.campaign.reps);
      c.campaign.seed = k.value("seed", c.campaign.seed);
      c.campaign.workers = k.value("workers", c.campaign.workers);
      c.campaign.timeout_secs = k.value("timeout_secs", c.campaign.timeout_secs);
    }
  } catch (const json::exception& e) {
    config_error(std::string("project config: ") + e.what());
  }
  if (c.campaign.n < 1 || c.campaign.reps < 1) config_error("campaign n and reps must be at least 1");
  if (!(c.campaign.timeout_secs > 0)) config_error("campaign timeout must be positive");
  return c;
}

ProjectConfig ProjectConfig::load(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) config_error("project config '" + path.string() + "' not found");
  json doc = json::parse(read_text_file(path, "project config"), nullptr, false);
  if (doc.is_discarded()) config_error("project config '" + path.string() + "' is not valid JSON");
  return from_json(doc, fs::absolute(path).parent_path());
}

}  // namespace rbt
