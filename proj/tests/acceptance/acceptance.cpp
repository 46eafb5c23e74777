#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "../support/fixtures.hpp"
#include "../support/metric_oracles.hpp"
#include "../support/morpho_fixtures.hpp"
#include "../support/path_oracle.hpp"
#include "../support/precondition_oracle.hpp"
#include "../support/snl_corpus.hpp"
#include "../support/split_checker.hpp"
#include "../support/taxonomy_oracle.hpp"
#include "rbt/error.hpp"
#include "rbt/filterset.hpp"
#include "rbt/harness.hpp"
#include "rbt/metrics.hpp"
#include "rbt/morpho.hpp"
#include "rbt/oracle.hpp"
#include "rbt/scenegraph.hpp"
#include "rbt/snl.hpp"
#include "rbt/taxonomy.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rbt;
using Clock = std::chrono::steady_clock;
using testing::fixture;
using testing::glossary;

// Collects the first failure message of a criterion; later checks still run
// so the summary reports whatever was measured.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }
  std::string note;

 private:
  std::string failure_;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

const std::vector<const char*> kDatasets = {"mnist", "celeba", "sgsm", "imagenet"};

void snl_corpus(Check& c) {
  const auto start = Clock::now();
  const auto expected = testing::corpus::expected_corpus();
  std::size_t seen = 0;
  for (const char* ds : kDatasets) {
    const auto& g = glossary(ds);
    for (const auto& r : snl::load_requirements(g, fixture(std::string(ds) + "/requirements.json"))) {
      ++seen;
      auto it = expected.find(r.id);
      c.expect(it != expected.end(), "unexpected id " + r.id);
      if (it == expected.end()) continue;
      c.expect(r.precondition == it->second.pre && r.postcondition == it->second.post, r.id + " AST differs");
      const auto again = snl::parse_requirement(g, snl::render(g, r), r.id);
      c.expect(snl::same_logic(r, again), r.id + " round trip differs");
    }
  }
  const double secs = seconds_since(start);
  c.expect(seen == 25, fmt::format("{} requirements, expected 25", seen));
  c.expect(secs < 1.0, fmt::format("took {:.3f} s", secs));
  c.note = fmt::format("{} requirements in {:.3f} s", seen, secs);
}

void range_expansion(Check& c) {
  const auto& g = glossary("sgsm");
  const auto& dist = *g.find_group("sgsm.dist");
  const double ten = 10;
  const auto f = g.expand_range(dist, RangeMode::kWithin, std::span(&ten, 1));
  c.expect(f == testing::corpus::kWithin10, "within 10 m gave " + f.to_string());
  const auto parsed = snl::parse_precondition(g, "A vehicle is within 10 meters");
  c.expect(parsed.clauses.size() == 1 && parsed.clauses[0].body == testing::corpus::kWithin10,
           "parsed phrase gave " + snl::to_string(parsed));
  std::size_t prefixes = 0;
  for (const char* ds : {"mnist", "sgsm"}) {
    const auto& gl = glossary(ds);
    for (const auto& group : gl.groups()) {
      if (!group.ordered()) continue;
      for (std::size_t k = 1; k < group.members.size(); ++k) {
        ++prefixes;
        const double edge = group.bands[k].lower;
        std::set<std::string> within, beyond;
        gl.expand_range(group, RangeMode::kWithin, std::span(&edge, 1)).collect_atoms(within);
        gl.expand_range(group, RangeMode::kBeyond, std::span(&edge, 1)).collect_atoms(beyond);
        const std::set<std::string> first(group.members.begin(), group.members.begin() + k);
        const std::set<std::string> rest(group.members.begin() + k, group.members.end());
        c.expect(within == first && beyond == rest, fmt::format("{} prefix {} not a partition", group.id, k));
      }
    }
  }
  c.note = fmt::format("3-term disjunction, {} band prefixes partitioned", prefixes);
}

void precondition_evaluator(Check& c) {
  std::mt19937_64 rng(20240611);
  std::size_t agree = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    const auto pre = testing::random_precondition(rng, k);
    const auto li = testing::random_labeled_input(rng, k, 4, "x");
    const bool ok = eval_precondition(pre, li) == testing::oracle_precondition(pre, li, k);
    agree += ok;
    c.expect(ok, fmt::format("trial {} disagrees: {}", trial, snl::to_string(pre)));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    const auto pre = testing::random_precondition(rng, k);
    std::vector<LabeledInput> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(testing::random_labeled_input(rng, k, 4, std::to_string(i)));
    std::set<std::string> expected, got;
    for (const auto& li : labels)
      if (testing::oracle_precondition(pre, li, k)) expected.insert(li.input);
    for (const auto& row : filter_dataset(pre, labels, "TRGR caption", 2).rows) got.insert(row.image);
    c.expect(got == expected, fmt::format("filter trial {} differs", trial));
  }
  c.note = fmt::format("{}/10000 agree, 200 filters set-equal", agree);
}

void morphometrics(Check& c) {
  using morpho::measure;
  double worst = 0;
  for (int w = 1; w <= 8; ++w) {
    const double t = measure(morpho::bar(w, 18)).thickness;
    worst = std::max(worst, std::abs(t - w));
    c.expect(std::abs(t - w) <= 1.0, fmt::format("width {} measured {:.3f}", w, t));
  }
  for (double s : {-0.4, -0.2, 0.2, 0.4}) {
    const double slant = measure(morpho::bar(4, 18, s)).slant;
    c.expect((slant > 0) == (s > 0) && slant != 0, fmt::format("shear {} gave slant {}", s, slant));
  }
  for (double sign : {-1.0, 1.0}) {
    double prev = 0;
    for (double s : {0.1, 0.2, 0.3, 0.4}) {
      const double mag = std::abs(measure(morpho::bar(4, 18, sign * s)).slant);
      c.expect(mag > prev, fmt::format("|slant| not increasing at shear {}", sign * s));
      prev = mag;
    }
  }
  std::vector<RasterImage> fixtures;
  for (int w : {1, 3, 5, 8})
    for (int h : {8, 14, 18, 22})
      for (double s : {-0.4, -0.2, 0.0, 0.2, 0.4}) fixtures.push_back(morpho::bar(w, h, s));
  const auto& g = glossary("mnist");
  double mirror_err = 0;
  for (const auto& img : fixtures) {
    const auto m = morpho::binarize(img);
    mirror_err = std::max(mirror_err, std::abs(morpho::shear_coefficient(morpho::mirror(m)) +
                                               morpho::shear_coefficient(m)));
    const auto terms = morpho::label(img, g, g.term("mnist.digit.1"));
    for (const char* name : {"thickness", "slant", "height"}) {
      const auto* group = g.group_for_measure(name);
      int hits = 0;
      for (const auto& t : terms) hits += g.group_of(t) == group;
      c.expect(hits == 1, fmt::format("{} band terms for {}", hits, name));
    }
  }
  c.expect(mirror_err <= 1e-6, fmt::format("mirror error {}", mirror_err));
  c.note = fmt::format("max thickness error {:.3f} px, mirror error {:.1e}, {} fixtures", worst, mirror_err,
                       fixtures.size());
}

bool connected(int n, const std::vector<std::pair<int, int>>& pairs, std::uint32_t mask) {
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (mask >> k & 1u) parent[find(pairs[k].first)] = find(pairs[k].second);
  for (int i = 1; i < n; ++i)
    if (find(i) != find(0)) return false;
  return true;
}

void scene_graphs(Check& c) {
  using namespace rbt::scene;
  const auto start = Clock::now();
  const auto& g = glossary("sgsm");
  const auto rules = RuleSet::load(fixture("sgsm/rules.json"));
  SceneGraph example("ego", {{"ego", "ego"}, {"lane1", "lane"}, {"lane2", "lane"}, {"car17", "car"}},
                     {{"ego", "in", "lane1"}, {"lane2", "leftOf", "lane1"}, {"car17", "in", "lane2"}});
  const auto emissions = apply_rules(walk(example), rules, example, g);
  c.expect(emissions == std::set<Emission>{{"car17", "sgsm.lane.left"}}, "example emissions differ");
  c.expect(g.term("sgsm.lane.left").phrase == "is in the lane to the left", "lane-left phrase differs");

  std::mt19937 rng(42);
  std::size_t graphs = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
    std::vector<Vertex> vs;
    for (int v = 0; v < n; ++v) vs.push_back({"v" + std::to_string(v), "x"});
    for (std::uint32_t mask = 0; mask < (1u << pairs.size()); ++mask) {
      if (!connected(n, pairs, mask)) continue;
      ++graphs;
      std::vector<Triple> es;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!(mask >> k & 1u)) continue;
        auto [a, b] = pairs[k];
        if (rng() & 1u) std::swap(a, b);
        es.push_back({"v" + std::to_string(a), "r", "v" + std::to_string(b)});
      }
      SceneGraph sg("v0", vs, es);
      const auto got = walk(sg, 5);
      const std::set<Path> as_set(got.begin(), got.end());
      c.expect(as_set.size() == got.size() && as_set == brute_force_paths(sg, 5),
               fmt::format("n={} mask={} differs", n, mask));
    }
  }
  const double secs = seconds_since(start);
  c.expect(secs < 30.0, fmt::format("took {:.2f} s", secs));
  c.note = fmt::format("{} connected graphs in {:.2f} s", graphs, secs);
}

void taxonomy(Check& c) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const auto edges = testing::random_dag(rng, n);
    Taxonomy t(edges);
    for (const auto& node : t.nodes()) {
      c.expect(t.leaves_under(node) == testing::closure_leaves(edges, node),
               fmt::format("trial {} node {} differs", trial, node));
    }
  }
  const auto t = Taxonomy::load(fixture("imagenet/taxonomy.jsonl"));
  const auto birds = t.leaves_under("bird").size();
  c.expect(birds == 59, fmt::format("{} bird leaves", birds));
  c.expect(t.is_hyponym("robin", "bird"), "robin is not a bird");
  c.expect(!t.is_hyponym("worm fence", "bird"), "worm fence is a bird");
  c.note = fmt::format("1000 DAGs, {} bird leaves", birds);
}

void oracles(Check& c) {
  const auto& g = glossary("sgsm");
  const auto schema = OutputSchema::load(fixture("sgsm/output_schema.json"));
  auto drive = [](double a, double s) { return ModelOutput::of_regression({{"accel", a}, {"steer", s}}); };
  auto check = [&](const std::string& post, const ModelOutput& out) {
    return check_postcondition(g, snl::parse_postcondition(g, post), out, schema);
  };
  const auto zero = drive(0.0, 0.0);
  c.expect(check("not accelerate", zero), "accel 0 fails not accelerate");
  c.expect(!check("accelerate", zero), "accel 0 passes accelerate");
  c.expect(!check("decelerate", zero), "accel 0 passes decelerate");
  c.expect(check("not steer to the right", zero), "steer 0 fails not steer to the right");
  c.expect(check("not steer to the left", zero), "steer 0 fails not steer to the left");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto out = drive(i % 4 == 0 ? 0.0 : u(rng), i % 4 == 1 ? 0.0 : u(rng));
    for (const auto& p : g.predicates()) {
      const auto f = TermFormula::atom(p.phrase);
      c.expect(check_postcondition(g, TermFormula::negate(f), out, schema) !=
                   check_postcondition(g, f, out, schema),
               "duality fails for " + p.phrase);
    }
  }
  c.note = "boundary table holds, duality over 1000 outputs";
}

void metrics(Check& c) {
  auto dist = [](std::map<std::string, double> counts) {
    TermDistribution d;
    for (const auto& [t, n] : counts) d.add(t, n);
    return d;
  };
  const auto u = dist({{"a", 1}, {"b", 1}});
  c.expect(js_divergence(u, u) == 0.0, "JS(P,P) != 0");
  c.expect(js_divergence(dist({{"a", 1}}), dist({{"b", 1}})) == 1.0, "disjoint JS != 1");
  const double half = js_divergence(u, dist({{"a", 1}}));
  c.expect(std::abs(half - 0.3113) <= 1e-4, fmt::format("derived case gave {}", half));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(0.0, 5.0);
  int pairs = 0;
  while (pairs < 1000) {
    const int vocab = 1 + static_cast<int>(rng() % 8);
    TermDistribution p, q, scaled;
    const double scale = 0.1 + w(rng) * 10;
    for (int t = 0; t < vocab; ++t) {
      const std::string id = "t" + std::to_string(t);
      const double pv = rng() % 3 ? w(rng) : 0.0, qv = rng() % 3 ? w(rng) : 0.0;
      if (pv > 0) p.add(id, pv), scaled.add(id, pv * scale);
      if (qv > 0) q.add(id, qv);
    }
    if (p.total == 0 || q.total == 0) continue;
    ++pairs;
    const double d = js_divergence(p, q);
    c.expect(std::abs(d - js_divergence(q, p)) <= 1e-12, "JS not symmetric");
    c.expect(std::abs(d - js_divergence(scaled, q)) <= 1e-12, "JS not scale invariant");
  }

  const double k0 = kid({{0.0}, {0.0}}, {{0.0}, {0.0}}).mean;
  const double k7 = kid({{1.0}, {1.0}}, {{0.0}, {0.0}}).mean;
  c.expect(std::abs(k0) <= 1e-9, fmt::format("KID hand case 0 gave {}", k0));
  c.expect(std::abs(k7 - 7.0) <= 1e-9, fmt::format("KID hand case 7 gave {}", k7));
  std::mt19937_64 krng(8);
  double kid_err = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + krng() % 63, n = 2 + krng() % 63, dim = 1 + krng() % 6;
    const auto x = testing::random_set(krng, m, dim), y = testing::random_set(krng, n, dim, 0.3);
    const double est = kid(x, y).mean, ref = testing::brute_kid(x, y);
    kid_err = std::max(kid_err, std::abs(est - ref) / std::max(1.0, std::abs(ref)));
  }
  c.expect(kid_err <= 1e-9, fmt::format("KID brute-force relative error {}", kid_err));

  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const double ptp = i / 10.0, pmp = j / 10.0;
      c.expect(estimate_false_positives(ptp, pmp) == (1 - pmp) * (1 - ptp),
               fmt::format("FP estimate differs at ptp={} pmp={}", ptp, pmp));
    }
  c.note = fmt::format("JS half case {:.6f}, KID max error {:.1e}, 121 FP grid points", half, kid_err);
}

class ReplayDir {
 public:
  ReplayDir(const std::string& tag, int good, int bad) : path_(fs::temp_directory_path() / ("rbt_acceptance_" + tag)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
    for (int i = 0; i < good; ++i) std::ofstream(path_ / fmt::format("img{}.png", i)) << i;
    for (int i = 0; i < bad; ++i) std::ofstream(path_ / fmt::format("bad{}.png", i)) << i;
  }
  ~ReplayDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void harness(Check& c) {
  const auto& g = glossary("mnist");
  const auto reqs = snl::load_requirements(g, fixture("mnist/requirements.json"));
  const auto& m1 = snl::find_requirement(reqs, "M1");
  const auto schema = OutputSchema::load(fixture("mnist/output_schema.json"));
  auto campaign = [&](Generator& gen, const std::string& mut, std::size_t n, std::size_t reps, std::uint64_t seed,
                      std::size_t workers = 1) {
    CampaignOptions opts;
    opts.n = n;
    opts.reps = reps;
    opts.seed = seed;
    opts.workers = workers;
    return run_campaign(g, m1, gen, make_model_factory(mut), schema, nullptr, opts);
  };

  ReplayDir counted("counted", 7, 3);
  ReplayGenerator gen(counted.path());
  const auto r = campaign(gen, "stub:class:2;bad->class:3", 10, 5, 7);
  c.expect(r.mean_pass_rate == 0.7 && r.std_pass_rate == 0.0,
           fmt::format("counted fixture gave {} +- {}", r.mean_pass_rate, r.std_pass_rate));

  ReplayDir pool("determinism", 30, 10);
  ReplayGenerator pool_gen(pool.path());
  const auto a = campaign(pool_gen, "stub:class:2;bad->class:3", 12, 3, 42).to_json().dump();
  const auto b = campaign(pool_gen, "stub:class:2;bad->class:3", 12, 3, 42, 3).to_json().dump();
  c.expect(a == b, "same seed produced different reports");

  const auto crash = campaign(gen, "stub:class:2;bad->crash", 10, 3, 7);
  c.expect(crash.reps.size() == 3, "crash campaign did not complete");
  for (const auto& rep : crash.reps) {
    c.expect(rep.failures.size() == 3, "crash campaign lost failures");
    for (const auto& f : rep.failures) c.expect(f.reason == FailureReason::kMutCrashed, "wrong crash reason");
  }

  ReplayDir shape("shape", 900, 100);
  ReplayGenerator shape_gen(shape.path());
  const auto start = Clock::now();
  const auto big = campaign(shape_gen, "stub:class:2;bad->class:3", 1000, 10, 1);
  const double secs = seconds_since(start);
  c.expect(big.reps.size() == 10 && big.mean_pass_rate == 0.9, "1000x10 campaign gave wrong result");
  c.expect(secs < 60.0, fmt::format("1000x10 campaign took {:.2f} s", secs));
  c.note = fmt::format("pass rate {:.3f} +- {:.3f}, 1000x10 in {:.2f} s", r.mean_pass_rate, r.std_pass_rate, secs);
}

snl::Requirement sole_requirement(const std::string& id, TermFormula body) {
  snl::Requirement r;
  r.id = id;
  r.precondition.clauses.push_back({snl::Polarity::kExists, snl::Subject::sole(), std::move(body)});
  return r;
}

void split_builder(Check& c) {
  std::vector<LabeledInput> labels;
  for (int i = 0; i < 300; ++i)
    labels.push_back(LabeledInput::sole(fmt::format("i{}", i), {i < 100 ? "a" : "b"}));
  const std::vector<snl::Requirement> one = {sole_requirement("R1", TermFormula::atom("a"))};
  const auto split = build_heldout_split(labels, one, 10);
  std::size_t satisfying = 0;
  for (const auto& li : split.test) satisfying += li.entities[0].terms.contains("a");
  c.expect(satisfying == 10, fmt::format("{} satisfying items in test", satisfying));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng() % 4;
    std::vector<snl::Requirement> reqs;
    const int nreq = 1 + static_cast<int>(rng() % 4);
    for (int q = 0; q < nreq; ++q) reqs.push_back(sole_requirement(fmt::format("R{}", q), testing::random_formula(rng, k, 2)));
    std::vector<LabeledInput> items;
    const std::size_t n = 20 + rng() % 200;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<std::string> t;
      for (std::size_t j = 0; j < k; ++j)
        if (rng() % 2) t.insert(testing::oracle_term(j));
      items.push_back(LabeledInput::sole(fmt::format("x{}", i), t));
    }
    const double r = 1 + static_cast<double>(rng() % 40);
    const auto violation = testing::split_violation(items, reqs, r, build_heldout_split(items, reqs, r));
    c.expect(!violation, fmt::format("trial {}: {}", trial, violation.value_or("")));
  }
  c.note = fmt::format("{} of 100 satisfying items held out, 500 randomized splits checked", satisfying);
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, void (*)(Check&)>> criteria = {
      {"snl-corpus", snl_corpus},
      {"range-expansion", range_expansion},
      {"precondition-evaluator", precondition_evaluator},
      {"morphometrics", morphometrics},
      {"scene-graphs", scene_graphs},
      {"taxonomy", taxonomy},
      {"oracles", oracles},
      {"metrics", metrics},
      {"harness", harness},
      {"split-builder", split_builder},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    if (c.ok()) {
      fmt::print("PASS {}: {}\n", name, c.note);
    } else {
      ++failed;
      fmt::print("FAIL {}: {}\n", name, c.failure());
    }
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
