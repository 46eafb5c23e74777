#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbt/labeled_input.hpp"
#include "rbt/labeling.hpp"
#include "rbt/snl.hpp"

namespace rbt {

// Fraction of inputs whose verdicts satisfy the precondition. Providers with
// entity labels are evaluated per entity; others as one sole entity whose
// terms are the yes-verdicts.
double precondition_match(const snl::Precondition& pre, const std::vector<std::string>& inputs,
                          const labeling::TermVerdictProvider& verdicts, std::size_t workers = 1);

struct TermDistribution {
  std::map<std::string, double> counts;
  double total = 0.0;

  void add(const std::string& term, double weight = 1.0);
  double probability(const std::string& term) const;
};

enum class TermWeighting {
  kCount,     // once per term occurrence per entity
  kPresence,  // once per input that carries the term on any entity
};

TermDistribution term_distribution(const std::vector<LabeledInput>& labels,
                                   TermWeighting weighting = TermWeighting::kCount);

// Base-2 Jensen-Shannon divergence over the union vocabulary.
double js_divergence(const TermDistribution& p, const TermDistribution& q);

using FeatureVector = std::vector<double>;

struct PolynomialKernel {
  int degree = 3;
  double gamma = 0.0;  // 0 selects 1/d
  double coef0 = 1.0;

  double operator()(const FeatureVector& a, const FeatureVector& b) const;
};

struct KidEstimate {
  double mean = 0.0;
  double std = 0.0;  // population std over blocks; 0 without blocks
  std::size_t blocks = 1;
};

// Unbiased squared MMD. With block = b, X and Y are cut (in order) into
// disjoint blocks of b samples and the estimate is taken per block pair, for
// min(|X|/b, |Y|/b) pairs; trailing samples are left out.
KidEstimate kid(const std::vector<FeatureVector>& x, const std::vector<FeatureVector>& y, std::size_t block = 0,
                const PolynomialKernel& kernel = {});

struct FeatureRow {
  std::string input;
  FeatureVector vector;
};

std::vector<FeatureRow> parse_feature_manifest(std::string_view jsonl);
std::vector<FeatureRow> load_feature_manifest(const std::filesystem::path& path);

struct MetricsReport {
  std::string metric;
  double value = 0.0;
  double std = 0.0;
  std::size_t inputs = 0;

  nlohmann::json to_json() const;
};

}  // namespace rbt
