#include "rbt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rbt/error.hpp"
#include "rbt/filterset.hpp"
#include "rbt/parallel.hpp"

namespace rbt {

using nlohmann::json;

namespace {

bool verdict_precondition(const snl::Precondition& pre, const std::string& input,
                          const labeling::TermVerdictProvider& verdicts) {
  auto valuation = [&](const std::string& term) {
    try {
      return verdicts.verdict(input, term);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kProviderFailure) throw;
      throw Error(ErrorCode::kProviderFailure, "term '" + term + "' on input '" + input + "': " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProviderFailure, "term '" + term + "' on input '" + input + "': " + e.what());
    }
  };
  auto clause = [&](const snl::Clause& c) {
    const bool body = c.body.evaluate(valuation);
    return c.polarity == snl::Polarity::kExists ? body : !body;
  };
  if (pre.connective == snl::Connective::kAnd) return std::all_of(pre.clauses.begin(), pre.clauses.end(), clause);
  return std::any_of(pre.clauses.begin(), pre.clauses.end(), clause);
}

}  // namespace

double precondition_match(const snl::Precondition& pre, const std::vector<std::string>& inputs,
                          const labeling::TermVerdictProvider& verdicts, std::size_t workers) {
  if (inputs.empty()) throw Error(ErrorCode::kEmptyInputs, "precondition match over no inputs");
  if (!verdicts.concurrent()) workers = 1;
  std::vector<char> ok(inputs.size(), 0);
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    if (const LabeledInput* li = verdicts.labels_for(inputs[i])) {
      ok[i] = eval_precondition(pre, *li);
    } else {
      ok[i] = verdict_precondition(pre, inputs[i], verdicts);
    }
  });
  const auto hits = std::count(ok.begin(), ok.end(), 1);
  return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

void TermDistribution::add(const std::string& term, double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw Error(ErrorCode::kInvalidArgument, "term weight must be finite and non-negative");
  counts[term] += weight;
  total += weight;
}

double TermDistribution::probability(const std::string& term) const {
  if (total <= 0.0) return 0.0;
  auto it = counts.find(term);
  return it == counts.end() ? 0.0 : it->second / total;
}

TermDistribution term_distribution(const std::vector<LabeledInput>& labels, TermWeighting weighting) {
  TermDistribution d;
  for (const auto& li : labels) {
    if (weighting == TermWeighting::kCount) {
      for (const auto& e : li.entities)
        for (const auto& t : e.terms) d.add(t);
    } else {
      std::set<std::string> present;
      for (const auto& e : li.entities) present.insert(e.terms.begin(), e.terms.end());
      for (const auto& t : present) d.add(t);
    }
  }
  return d;
}

double js_divergence(const TermDistribution& p, const TermDistribution& q) {
  if (!(p.total > 0.0) || !(q.total > 0.0)) throw Error(ErrorCode::kEmptyDistribution, "JS divergence needs non-empty distributions");
  std::set<std::string> vocab;
  for (const auto& [t, c] : p.counts) vocab.insert(t);
  for (const auto& [t, c] : q.counts) vocab.insert(t);
  double kl_p = 0.0, kl_q = 0.0;
  for (const auto& t : vocab) {
    const double pi = p.probability(t);
    const double qi = q.probability(t);
    const double m = 0.5 * (pi + qi);
    if (pi > 0.0) kl_p += pi * std::log2(pi / m);
    if (qi > 0.0) kl_q += qi * std::log2(qi / m);
  }
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

double PolynomialKernel::operator()(const FeatureVector& a, const FeatureVector& b) const {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double g = gamma > 0.0 ? gamma : 1.0 / static_cast<double>(a.size());
  return std::pow(g * dot + coef0, degree);
}

namespace {

double mmd2_unbiased(const FeatureVector* x, std::size_t m, const FeatureVector* y, std::size_t n,
                     const PolynomialKernel& k) {
  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) kxx += k(x[i], x[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) kyy += k(y[i], y[j]);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) kxy += k(x[i], y[j]);
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  return 2.0 * kxx / (dm * (dm - 1.0)) + 2.0 * kyy / (dn * (dn - 1.0)) - 2.0 * kxy / (dm * dn);
}

}  // namespace

KidEstimate kid(const std::vector<FeatureVector>& x, const std::vector<FeatureVector>& y, std::size_t block,
                const PolynomialKernel& kernel) {
  if (x.size() < 2 || y.size() < 2) throw Error(ErrorCode::kTooFewSamples, "KID needs at least two samples per set");
  const std::size_t d = x.front().size();
  if (d == 0) throw Error(ErrorCode::kDimensionMismatch, "feature vectors are empty");
  for (const auto* set : {&x, &y}) {
    for (const auto& v : *set) {
      if (v.size() != d) throw Error(ErrorCode::kDimensionMismatch, "feature vectors differ in dimension");
    }
  }
  if (block == 0) return {mmd2_unbiased(x.data(), x.size(), y.data(), y.size(), kernel), 0.0, 1};
  if (block < 2) throw Error(ErrorCode::kTooFewSamples, "KID blocks need at least two samples");
  const std::size_t blocks = std::min(x.size() / block, y.size() / block);
  if (blocks == 0) throw Error(ErrorCode::kTooFewSamples, "fewer samples than one KID block");
  std::vector<double> values(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    values[b] = mmd2_unbiased(x.data() + b * block, block, y.data() + b * block, block, kernel);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(blocks);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(blocks)), blocks};
}

std::vector<FeatureRow> parse_feature_manifest(std::string_view jsonl) {
  std::vector<FeatureRow> rows;
  for (const auto& row : parse_jsonl(jsonl, "feature manifest")) {
    try {
      FeatureRow r{row.at("input").get<std::string>(), row.at("vector").get<FeatureVector>()};
      if (!rows.empty() && rows.front().vector.size() != r.vector.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "feature manifest rows differ in dimension");
      }
      rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedFile, std::string("feature manifest row: ") + e.what());
    }
  }
  return rows;
}

std::vector<FeatureRow> load_feature_manifest(const std::filesystem::path& path) {
  return parse_feature_manifest(read_text_file(path, "feature manifest"));
}

json MetricsReport::to_json() const { return {{"metric", metric}, {"value", value}, {"std", std}, {"inputs", inputs}}; }

}  // namespace rbt
