#include "rbt/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "rbt/error.hpp"
#include "rbt/labeled_input.hpp"

namespace rbt {

using nlohmann::json;

namespace {

[[noreturn]] void mismatch(const std::string& msg) { throw Error(ErrorCode::kSchemaMismatch, msg); }

OutputKind parse_kind(const json& doc) {
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "class") return OutputKind::kClass;
  if (kind == "regression") return OutputKind::kRegression;
  throw Error(ErrorCode::kMalformedFile, "unknown output kind '" + kind + "'");
}

}  // namespace

const OutputField* OutputSchema::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

OutputSchema OutputSchema::from_json(const json& doc) {
  OutputSchema s;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kMalformedFile, "output schema must be a JSON object");
    s.kind = parse_kind(doc);
    if (s.kind == OutputKind::kClass) {
      if (auto it = doc.find("labels"); it != doc.end() && !it->is_null()) {
        s.labels = it->get<std::vector<std::string>>();
      }
    } else {
      for (const auto& f : doc.at("fields")) {
        OutputField field;
        field.name = f.at("name").get<std::string>();
        if (auto rp = f.find("right_positive"); rp != f.end()) field.right_positive = rp->get<bool>();
        if (s.field(field.name)) throw Error(ErrorCode::kMalformedFile, "duplicate output field '" + field.name + "'");
        s.fields.push_back(std::move(field));
      }
      if (s.fields.empty()) throw Error(ErrorCode::kMalformedFile, "regression schema declares no fields");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("output schema: ") + e.what());
  }
  return s;
}

OutputSchema OutputSchema::parse(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kMalformedFile, "output schema is not valid JSON");
  return from_json(doc);
}

OutputSchema OutputSchema::load(const std::filesystem::path& path) {
  return parse(read_text_file(path, "output schema"));
}

json OutputSchema::to_json() const {
  if (kind == OutputKind::kClass) return {{"kind", "class"}, {"labels", labels ? json(*labels) : json(nullptr)}};
  json fs = json::array();
  for (const auto& f : fields) {
    json o = {{"name", f.name}};
    if (f.right_positive) o["right_positive"] = *f.right_positive;
    fs.push_back(o);
  }
  return {{"kind", "regression"}, {"fields", fs}};
}

ModelOutput ModelOutput::of_class(std::string label) {
  ModelOutput o;
  o.kind = OutputKind::kClass;
  o.label = std::move(label);
  return o;
}

ModelOutput ModelOutput::of_regression(std::map<std::string, double> outputs) {
  ModelOutput o;
  o.kind = OutputKind::kRegression;
  o.outputs = std::move(outputs);
  return o;
}

ModelOutput ModelOutput::from_json(const json& doc) {
  try {
    if (!doc.is_object()) mismatch("model output must be a JSON object");
    if (parse_kind(doc) == OutputKind::kClass) return of_class(doc.at("label").get<std::string>());
    std::map<std::string, double> values;
    for (const auto& [k, v] : doc.at("outputs").items()) {
      if (!v.is_number()) mismatch("regression output '" + k + "' is not a number");
      values[k] = v.get<double>();
    }
    return of_regression(std::move(values));
  } catch (const json::exception& e) {
    mismatch(std::string("model output: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedFile) mismatch(e.what());
    throw;
  }
}

json ModelOutput::to_json() const {
  if (kind == OutputKind::kClass) return {{"kind", "class"}, {"label", label}};
  return {{"kind", "regression"}, {"outputs", outputs}};
}

void validate_output(const OutputSchema& schema, const ModelOutput& out) {
  if (schema.kind != out.kind) mismatch("model output kind does not match the output schema");
  if (out.kind == OutputKind::kClass) {
    if (schema.labels && std::find(schema.labels->begin(), schema.labels->end(), out.label) == schema.labels->end()) {
      mismatch("label '" + out.label + "' is not declared in the output schema");
    }
    return;
  }
  for (const auto& f : schema.fields) {
    auto it = out.outputs.find(f.name);
    if (it == out.outputs.end()) mismatch("regression output lacks field '" + f.name + "'");
    if (!std::isfinite(it->second)) mismatch("regression field '" + f.name + "' is not finite");
  }
}

double predicate_value(const OutputPredicate& p, const OutputSchema& schema, const ModelOutput& out) {
  if (out.kind != OutputKind::kRegression) mismatch("predicate '" + p.phrase + "' needs a regression output");
  auto it = out.outputs.find(p.field);
  if (it == out.outputs.end()) mismatch("regression output lacks field '" + p.field + "'");
  double v = it->second;
  const OutputField* f = schema.field(p.field);
  if (p.right_positive && f && f->right_positive && *p.right_positive != *f->right_positive) v = -v;
  return v;
}

bool check_predicate(const OutputPredicate& p, const ModelOutput& out, const OutputSchema& schema,
                     const Taxonomy* taxonomy) {
  switch (p.kind) {
    case PredicateKind::kClassEquals:
      if (out.kind != OutputKind::kClass) mismatch("predicate '" + p.phrase + "' needs a class output");
      return out.label == p.class_label;
    case PredicateKind::kClassInTaxonomy: {
      if (out.kind != OutputKind::kClass) mismatch("predicate '" + p.phrase + "' needs a class output");
      if (!taxonomy || !taxonomy->contains(p.taxonomy_root)) {
        throw Error(ErrorCode::kUnknownTaxonomyRoot, "taxonomy root '" + p.taxonomy_root + "' is not loaded");
      }
      return taxonomy->leaves_under(p.taxonomy_root).contains(out.label);
    }
    case PredicateKind::kRegressionCompare:
      return compare(predicate_value(p, schema, out), p.comparator, p.threshold);
  }
  return false;
}

bool check_postcondition(const Glossary& g, const TermFormula& post, const ModelOutput& out,
                         const OutputSchema& schema, const Taxonomy* taxonomy) {
  return post.evaluate([&](const std::string& phrase) {
    const OutputPredicate* p = g.find_predicate(phrase);
    if (!p) throw Error(ErrorCode::kUnknownPhrase, "unregistered output predicate '" + phrase + "'");
    return check_predicate(*p, out, schema, taxonomy);
  });
}

}  // namespace rbt
