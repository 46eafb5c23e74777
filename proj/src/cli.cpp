#include "rbt/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rbt/config.hpp"
#include "rbt/conformance.hpp"
#include "rbt/filterset.hpp"
#include "rbt/glossary.hpp"
#include "rbt/harness.hpp"
#include "rbt/image_io.hpp"
#include "rbt/labeling.hpp"
#include "rbt/metrics.hpp"
#include "rbt/morpho.hpp"
#include "rbt/oracle.hpp"
#include "rbt/scenegraph.hpp"
#include "rbt/snl.hpp"
#include "rbt/taxonomy.hpp"

namespace rbt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorCode code) {
  switch (category(code)) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kData: return 3;
    case ErrorCategory::kProtocol: return 4;
    case ErrorCategory::kInternal: return 1;
  }
  return 1;
}

namespace {

void configure_logging() {
  auto logger = spdlog::get("rbt");
  if (!logger) logger = spdlog::stderr_color_mt("rbt");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("RBT_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "warn") spdlog::set_level(spdlog::level::warn);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else {
    spdlog::set_level(spdlog::level::warn);
    spdlog::warn("ignoring RBT_LOG={} (expected error, warn, info or debug)", level);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Project {
  ProjectConfig config;
  Glossary glossary;
  std::vector<snl::Requirement> requirements;

  explicit Project(const fs::path& path) : config(ProjectConfig::load(path)) {
    glossary = Glossary::load(config.glossary);
    requirements = snl::load_requirements(glossary, config.requirements);
  }

  const snl::Requirement& requirement(const std::string& id) const { return snl::find_requirement(requirements, id); }
};

fs::path out_or(const std::string& out, const fs::path& fallback) { return out.empty() ? fallback : fs::path(out); }

std::vector<std::string> list_files(const fs::path& dir, std::string_view ext) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Morphometric labeling over a PNG directory or an IDX file pair.
labeling::LabelingReport label_morpho(const Project& p, std::size_t workers) {
  const auto& lc = p.config.labeler;
  const double threshold = lc.threshold;
  std::vector<std::string> inputs;
  std::vector<RasterImage> idx_images;
  std::map<std::string, std::string> class_of;
  if (fs::is_directory(lc.images)) {
    inputs = list_files(lc.images, ".png");
    for (const auto& row : parse_jsonl(read_text_file(lc.classes, "class manifest"), "class manifest")) {
      try {
        const auto input = row.at("input").get<std::string>();
        const auto cls = row.at("class").get<std::string>();
        class_of[input] = cls;
        class_of[fs::path(input).filename().string()] = cls;
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kMalformedFile, std::string("class manifest row: ") + e.what());
      }
    }
  } else {
    idx_images = read_idx_images(lc.images);
    const auto labels = read_idx_labels(lc.classes);
    if (labels.size() != idx_images.size()) throw Error(ErrorCode::kMalformedFile, "IDX image and label counts differ");
    for (std::size_t i = 0; i < idx_images.size(); ++i) {
      inputs.push_back(lc.images.string() + "#" + std::to_string(i));
      class_of[inputs.back()] = lc.class_prefix + std::to_string(labels[i]);
    }
  }
  auto lookup = [&](const std::string& input) {
    auto it = class_of.find(input);
    if (it == class_of.end()) it = class_of.find(fs::path(input).filename().string());
    if (it == class_of.end()) throw Error(ErrorCode::kUnknownLabel, "no class for input '" + input + "'");
    return it->second;
  };
  labeling::Labeler labeler;
  if (idx_images.empty()) {
    labeler = labeling::morpho_labeler(p.glossary, lookup, threshold);
  } else {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < inputs.size(); ++i) index[inputs[i]] = i;
    labeler = [&, index](const std::string& input) {
      const auto& img = idx_images.at(index.at(input));
      auto terms = morpho::label(img, p.glossary, p.glossary.term(lookup(input)), threshold);
      auto li = LabeledInput::sole(input, {terms.begin(), terms.end()});
      validate(li, p.glossary);
      return li;
    };
  }
  return labeling::label_dataset(inputs, labeler, lc.failure_tolerance, workers);
}

int cmd_label(const Project& p, std::size_t workers, const std::string& out) {
  const auto& lc = p.config.labeler;
  labeling::LabelingReport report;
  switch (lc.kind) {
    case LabelerKind::kMorpho:
      report = label_morpho(p, workers);
      break;
    case LabelerKind::kSceneGraph: {
      auto rules = scene::RuleSet::load(*p.config.rules);
      report = labeling::label_dataset(list_files(lc.scenes, ".json"), labeling::scene_labeler(p.glossary, rules),
                                       lc.failure_tolerance, workers);
      break;
    }
    case LabelerKind::kVqa:
      report.labels = labeling::load_vqa_verdicts(lc.answers, p.glossary);
      report.attempted = report.labels.size();
      break;
    case LabelerKind::kNone:
      throw Error(ErrorCode::kConfig, "project config has no labeler");
  }
  const fs::path path = out_or(out, p.config.labels.value_or(p.config.out_dir / "labels.jsonl"));
  save_labels(path, report.labels);
  fmt::print("labeled {} of {} inputs ({} failed) -> {}\n", report.labels.size(), report.attempted,
             report.failures.size(), path.string());
  return 0;
}

int cmd_filter(const Project& p, const std::string& req_id, std::size_t workers, const std::string& out) {
  const auto& req = p.requirement(req_id);
  const auto labels = load_labels(p.config.labels_path());
  const auto manifest = filter_dataset(p.glossary, req.precondition, labels, p.config.trigger, workers);
  const fs::path path = out_or(out, p.config.out_dir / ("finetune_" + req.id + ".jsonl"));
  write_text_file(path, write_finetune_jsonl(manifest));
  fmt::print("{}: {} of {} inputs satisfy the precondition -> {}\n", req.id, manifest.rows.size(), labels.size(),
             path.string());
  if (manifest.warning) fmt::print("warning: {}\n", *manifest.warning);
  return 0;
}

int cmd_split(const Project& p, double r, const std::string& out) {
  const auto labels = load_labels(p.config.labels_path());
  const auto split = build_heldout_split(labels, p.requirements, r);
  const fs::path dir = out_or(out, p.config.out_dir);
  save_labels(dir / "train.jsonl", split.train);
  save_labels(dir / "test.jsonl", split.test);
  fmt::print("split {} inputs at r={}%: {} train, {} test -> {}\n", labels.size(), r, split.train.size(),
             split.test.size(), dir.string());
  for (const auto& s : split.sets) {
    fmt::print("  {}{}: {} in test (cap {} of {})\n", s.complement ? "not " : "", s.requirement_id, s.in_test, s.cap,
               s.size);
  }
  return 0;
}

struct RunArgs {
  std::string requirement;
  std::string generator;
  std::string mut;
  std::optional<std::size_t> n, reps, workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> timeout_secs, pmp;
  std::string out;
};

int cmd_run(const Project& p, const RunArgs& a) {
  const auto& req = p.requirement(a.requirement);
  if (!p.config.output_schema) throw Error(ErrorCode::kConfig, "run needs 'output_schema' in the project config");
  const auto schema = OutputSchema::load(*p.config.output_schema);
  std::optional<Taxonomy> taxonomy;
  if (p.config.taxonomy) taxonomy.emplace(Taxonomy::load(*p.config.taxonomy));

  const double timeout_secs = a.timeout_secs.value_or(p.config.campaign.timeout_secs);
  if (!(timeout_secs > 0)) throw Error(ErrorCode::kConfig, "--timeout-secs must be positive");
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_secs * 1000));
  CampaignOptions opts;
  opts.n = a.n.value_or(p.config.campaign.n);
  opts.reps = a.reps.value_or(p.config.campaign.reps);
  opts.seed = a.seed.value_or(p.config.campaign.seed);
  opts.workers = a.workers.value_or(p.config.campaign.workers);
  opts.trigger = a.generator.rfind("exec:", 0) == 0 ? p.config.trigger : std::string();
  if (opts.n < 1 || opts.reps < 1) throw Error(ErrorCode::kConfig, "--n and --reps must be at least 1");

  auto gen = make_generator(a.generator, timeout);
  auto report = run_campaign(p.glossary, req, *gen, make_model_factory(a.mut, timeout), schema,
                             taxonomy ? &*taxonomy : nullptr, opts);
  if (a.pmp) attach_false_positive_estimate(report, *a.pmp);
  json doc = report.to_json();
  doc["metadata"] = {{"created_utc", utc_timestamp()}, {"mut", a.mut}};
  const fs::path path = out_or(a.out, p.config.out_dir / ("report_" + req.id + ".json"));
  write_text_file(path, doc.dump(2) + "\n");
  fmt::print("{}: pass rate {:.3f} ± {:.3f} over {} reps of {} tests -> {}\n", req.id, report.mean_pass_rate,
             report.std_pass_rate, report.reps.size(), opts.n, path.string());
  if (report.fp_estimate) fmt::print("  estimated false positive rate {:.4f} (pmp {:.3f})\n", *report.fp_estimate, *report.pmp);
  return 0;
}

struct MetricsArgs {
  std::string requirement;
  std::string which;
  std::string labels;
  std::string reference;
  std::string verdicts;
  std::string features;
  std::string reference_features;
  std::string weighting = "count";
  std::size_t block = 0;
  std::size_t workers = 1;
  std::string out;
};

std::vector<std::string> unique_inputs(const std::vector<std::string>& all) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : all)
    if (seen.insert(s).second) out.push_back(s);
  return out;
}

int cmd_metrics(const Project& p, const MetricsArgs& a) {
  MetricsReport report;
  report.metric = a.which;
  if (a.which == "match") {
    const auto& pre = p.requirement(a.requirement).precondition;
    std::vector<std::string> inputs;
    if (!a.verdicts.empty()) {
      auto provider = labeling::AnswerManifestProvider::load(a.verdicts);
      for (const auto& row : parse_jsonl(read_text_file(a.verdicts, "answer manifest"), "answer manifest")) {
        inputs.push_back(row.at("input").get<std::string>());
      }
      inputs = unique_inputs(inputs);
      report.value = precondition_match(pre, inputs, provider, a.workers);
    } else if (!a.labels.empty()) {
      const auto labels = load_labels(a.labels);
      for (const auto& li : labels) inputs.push_back(li.input);
      labeling::GroundTruthProvider provider(p.glossary, labels);
      report.value = precondition_match(pre, inputs, provider, a.workers);
    } else {
      throw Error(ErrorCode::kConfig, "match needs --verdicts or --labels");
    }
    report.inputs = inputs.size();
  } else if (a.which == "js") {
    if (a.labels.empty()) throw Error(ErrorCode::kConfig, "js needs --labels");
    const TermWeighting w = a.weighting == "presence" ? TermWeighting::kPresence : TermWeighting::kCount;
    if (a.weighting != "presence" && a.weighting != "count") throw Error(ErrorCode::kConfig, "--weighting must be count or presence");
    const auto generated = load_labels(a.labels);
    std::vector<LabeledInput> reference = load_labels(a.reference.empty() ? p.config.labels_path() : fs::path(a.reference));
    if (!a.requirement.empty()) {
      const auto& pre = p.requirement(a.requirement).precondition;
      std::erase_if(reference, [&](const LabeledInput& li) { return !eval_precondition(pre, li); });
    }
    report.value = js_divergence(term_distribution(generated, w), term_distribution(reference, w));
    report.inputs = generated.size();
  } else if (a.which == "kid") {
    if (a.features.empty() || a.reference_features.empty()) {
      throw Error(ErrorCode::kConfig, "kid needs --features and --reference-features");
    }
    auto vectors = [](const std::vector<FeatureRow>& rows) {
      std::vector<FeatureVector> v;
      for (const auto& r : rows) v.push_back(r.vector);
      return v;
    };
    const auto x = load_feature_manifest(a.features);
    const auto y = load_feature_manifest(a.reference_features);
    const auto est = kid(vectors(x), vectors(y), a.block);
    report.value = est.mean;
    report.std = est.std;
    report.inputs = x.size();
  } else {
    throw Error(ErrorCode::kConfig, "metric must be match, js or kid");
  }
  const std::string text = report.to_json().dump(2) + "\n";
  if (!a.out.empty()) write_text_file(a.out, text);
  fmt::print("{} = {:.6g}", report.metric, report.value);
  if (report.metric == "kid") fmt::print(" ± {:.6g}", report.std);
  fmt::print(" over {} inputs{}\n", report.inputs, a.out.empty() ? "" : " -> " + a.out);
  return 0;
}

int cmd_prompts(const Project& p, const std::string& inputs_file, const std::vector<std::string>& terms,
                const std::string& out) {
  std::vector<std::string> inputs;
  if (!inputs_file.empty()) {
    for (const auto& li : load_labels(inputs_file)) inputs.push_back(li.input);
  } else if (p.config.labeler.kind == LabelerKind::kMorpho && fs::is_directory(p.config.labeler.images)) {
    inputs = list_files(p.config.labeler.images, ".png");
  } else {
    throw Error(ErrorCode::kConfig, "prompts needs --inputs or a morpho labeler image directory");
  }
  const fs::path path = out_or(out, p.config.out_dir / "prompts.jsonl");
  const std::string text = labeling::prompt_manifest(inputs, p.glossary, terms);
  write_text_file(path, text);
  fmt::print("wrote {} prompts for {} inputs -> {}\n", std::count(text.begin(), text.end(), '\n'), inputs.size(),
             path.string());
  return 0;
}

int cmd_conformance(const std::string& adapter, const std::string& role, const std::vector<std::string>& inputs,
                    const std::string& prompt, std::size_t count, std::size_t rounds, std::uint64_t seed,
                    double timeout_secs, const std::string& out) {
  ConformanceOptions opts;
  if (role == "mut") opts.role = AdapterRole::kMut;
  else if (role == "generator") opts.role = AdapterRole::kGenerator;
  else throw Error(ErrorCode::kConfig, "--role must be mut or generator");
  if (!inputs.empty()) opts.inputs = inputs;
  if (!prompt.empty()) opts.prompt = prompt;
  opts.count = count;
  opts.fuzz_rounds = rounds;
  opts.seed = seed;
  opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_secs * 1000));
  const auto report = run_conformance(adapter, opts);
  if (!out.empty()) write_text_file(out, report.to_json().dump(2) + "\n");
  for (const auto& c : report.checks) {
    fmt::print("{} {}{}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail.empty() ? "" : ": " + c.detail);
  }
  fmt::print("{}: {}\n", adapter, report.passed() ? "conformant" : "NOT conformant");
  return report.passed() ? 0 : 4;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  configure_logging();
  CLI::App app{"Requirements-based testing for learned components"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  std::size_t workers = 1;

  auto* label = app.add_subcommand("label", "label a dataset with glossary terms");
  label->add_option("--config", config, "project config")->required();
  label->add_option("--workers", workers, "labeling threads");
  label->add_option("--out", out, "labels manifest path");

  std::string requirement;
  auto* filter = app.add_subcommand("filter", "write the precondition-filtered fine-tune manifest");
  filter->add_option("--config", config)->required();
  filter->add_option("--requirement", requirement)->required();
  filter->add_option("--workers", workers);
  filter->add_option("--out", out);

  double r = 10.0;
  auto* split = app.add_subcommand("split", "build held-out train/test label manifests");
  split->add_option("--config", config)->required();
  split->add_option("--r", r, "percent of each requirement set held out")->check(CLI::Range(0.0, 100.0));
  split->add_option("--out", out, "output directory");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "execute a test campaign");
  run_cmd->add_option("--config", config)->required();
  run_cmd->add_option("--requirement", ra.requirement)->required();
  run_cmd->add_option("--generator", ra.generator, "replay:DIR or exec:CMD")->required();
  run_cmd->add_option("--mut", ra.mut, "exec:CMD or stub:RULE")->required();
  run_cmd->add_option("--n", ra.n);
  run_cmd->add_option("--reps", ra.reps);
  run_cmd->add_option("--seed", ra.seed);
  run_cmd->add_option("--workers", ra.workers);
  run_cmd->add_option("--timeout-secs", ra.timeout_secs);
  run_cmd->add_option("--pmp", ra.pmp, "precondition match rate for the false-positive estimate")
      ->check(CLI::Range(0.0, 1.0));
  run_cmd->add_option("--out", ra.out);

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "compute match, js or kid");
  metrics->add_option("--config", config)->required();
  metrics->add_option("--requirement", ma.requirement);
  metrics->add_option("--which", ma.which)->required()->check(CLI::IsMember({"match", "js", "kid"}));
  metrics->add_option("--labels", ma.labels, "labels manifest of the generated inputs");
  metrics->add_option("--reference", ma.reference, "reference labels (default: project labels)");
  metrics->add_option("--verdicts", ma.verdicts, "answer manifest of the generated inputs");
  metrics->add_option("--features", ma.features);
  metrics->add_option("--reference-features", ma.reference_features);
  metrics->add_option("--weighting", ma.weighting)->check(CLI::IsMember({"count", "presence"}));
  metrics->add_option("--block", ma.block);
  metrics->add_option("--workers", ma.workers);
  metrics->add_option("--out", ma.out);

  std::string inputs_file;
  std::vector<std::string> terms;
  auto* prompts = app.add_subcommand("prompts", "write the VQA prompt manifest");
  prompts->add_option("--config", config)->required();
  prompts->add_option("--inputs", inputs_file, "labels manifest listing inputs");
  prompts->add_option("--terms", terms, "term ids (default: all)")->delimiter(',');
  prompts->add_option("--out", out);

  std::string adapter, role = "mut", prompt;
  std::vector<std::string> conf_inputs;
  std::size_t count = 2, rounds = 40;
  std::uint64_t seed = 1;
  double timeout_secs = 10.0;
  auto* conf = app.add_subcommand("conformance", "check an adapter against the stdio protocol");
  conf->add_option("--adapter", adapter, "adapter command")->required();
  conf->add_option("--role", role)->check(CLI::IsMember({"mut", "generator"}));
  conf->add_option("--inputs", conf_inputs)->delimiter(',');
  conf->add_option("--prompt", prompt);
  conf->add_option("--count", count);
  conf->add_option("--rounds", rounds);
  conf->add_option("--seed", seed);
  conf->add_option("--timeout-secs", timeout_secs);
  conf->add_option("--out", out);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*conf) return cmd_conformance(adapter, role, conf_inputs, prompt, count, rounds, seed, timeout_secs, out);
    const Project project{fs::path(config)};
    if (*label) return cmd_label(project, workers, out);
    if (*filter) return cmd_filter(project, requirement, workers, out);
    if (*split) return cmd_split(project, r, out);
    if (*run_cmd) return cmd_run(project, ra);
    if (*metrics) return cmd_metrics(project, ma);
    if (*prompts) return cmd_prompts(project, inputs_file, terms, out);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace rbt::cli
