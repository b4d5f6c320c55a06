#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "fmgspo/armband_graph.hpp"
#include "fmgspo/spo.hpp"
#include "fmgspo/synth.hpp"
#include "oracles.hpp"

using namespace fmgspo;

namespace {

// Frozen score: per-sensor weights plus pairwise interactions.
struct TableScore {
  VectorXd w;
  MatrixXd pair;
  double operator()(const SelectionVector& s) const {
    const VectorXd v = s.as_weights();
    return w.dot(v) + v.dot(pair * v);
  }
};

TableScore random_table(gen::Gen& g, int n) {
  MatrixXd p = g.matrix(n, n, -0.2, 0.2);
  return {g.matrix(n, 1, 0, 1), (p + p.transpose()) / 2};
}

// Arbitrary score that is a fixed function of the bit string.
double hashed_score(const SelectionVector& s) {
  return static_cast<double>(fnv1a64(s.to_string()) % 1000) / 1000.0;
}

WindowedDataset small_planted(std::uint64_t seed, int per_class = 4) {
  SynthConfig cfg;
  cfg.node_count = 8;
  cfg.informative_sensors = {1, 4, 6};
  cfg.band_sizes = {3, 3, 2};
  cfg.recordings_per_class = per_class;
  cfg.seed = seed;
  PipelineConfig pipe;
  pipe.stride_ms = 150;
  return assemble_dataset(generate(cfg), pipe);
}

MatrixXd small_planted_adjacency() {
  SynthConfig cfg;
  cfg.node_count = 8;
  cfg.band_sizes = {3, 3, 2};
  return normalized_adjacency(synth_topology(cfg));
}

}  // namespace

TEST_CASE("greedy single step removes the best single removal") {
  // removing 1 or 3 leaves the same score; the lower index wins
  VectorXd w(5);
  w << 0.5, 0.1, 0.9, 0.1, 0.7;
  const TableScore score{w, MatrixXd::Zero(5, 5)};
  const auto trace = greedy_search(5, 4, score);
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].removed_sensor == 1);
  CHECK(trace.final == SelectionVector::from_string("10111"));
  CHECK(trace.steps[0].value == doctest::Approx(2.2));
  CHECK(trace.initial_value == doctest::Approx(2.3));

  gen::Gen g(51);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(2, 9);
    const auto t = random_table(g, n);
    const auto tr = greedy_search(n, n - 1, t);
    int best = 0;
    double best_v = -1e300;
    for (int i = 0; i < n; ++i) {
      const double v = t(SelectionVector::all(n).without(i));
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    CHECK(tr.steps.at(0).removed_sensor == best);
  }
}

TEST_CASE("greedy traces are nested and have N - k steps") {
  gen::Gen g(52);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = g.integer(2, 12);
    const int k = g.integer(1, n - 1);
    const auto t = random_table(g, n);
    const auto trace = greedy_search(n, k, t);
    CHECK(trace.node_count == n);
    CHECK(trace.steps.size() == static_cast<std::size_t>(n - k));
    SelectionVector prev = SelectionVector::all(n);
    for (const auto& step : trace.steps) {
      CHECK(step.surviving.count() == prev.count() - 1);
      CHECK(prev.test(step.removed_sensor));
      CHECK(step.surviving == prev.without(step.removed_sensor));
      CHECK(step.value == t(step.surviving));
      prev = step.surviving;
    }
    CHECK(trace.final == prev);
    CHECK(trace.final.count() == static_cast<std::size_t>(k));
    for (int j = k; j <= n; ++j) {
      const auto s = trace.surviving(j);
      for (int i = 0; i < n; ++i)
        if (trace.final.test(i)) CHECK(s.test(i));
    }
    CHECK(trace.value_at(n) == trace.initial_value);
    CHECK(trace.reaches(k));
    if (k > 1) CHECK_FALSE(trace.reaches(k - 1));
  }
}

TEST_CASE("greedy rejects out-of-range targets") {
  const auto s = [](const SelectionVector&) { return 0.0; };
  CHECK_THROWS_AS(greedy_search(4, 4, s), SelectionError);
  CHECK_THROWS_AS(greedy_search(4, 0, s), SelectionError);
  CHECK_NOTHROW(greedy_search(4, 1, s));
}

TEST_CASE("relabeling sensors of a symmetric problem relabels the selection") {
  gen::Gen g(53);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.integer(3, 10);
    const int k = g.integer(1, n - 1);
    const auto base = random_table(g, n);
    const auto perm = g.permutation(n);  // new sensor i is old sensor perm[i]
    const MatrixXd p = gen::permutation_matrix(perm);
    const TableScore relabeled{p * base.w, p * base.pair * p.transpose()};
    const auto a = greedy_search(n, k, base).final;
    const auto b = greedy_search(n, k, relabeled).final;
    for (int i = 0; i < n; ++i) CHECK(b.test(i) == a.test(perm[i]));
  }
}

TEST_CASE("binomial") {
  for (int n = 0; n <= 30; ++n)
    for (int k = 0; k <= n; ++k) CHECK(binomial(n, k) == oracle::choose(n, k));
  CHECK(binomial(16, 8) == 12870);
  CHECK(binomial(5, 7) == 0);
  CHECK(binomial(200, 100) == UINT64_MAX);
}

TEST_CASE("exhaustive search") {
  std::atomic<int> calls{0};
  const auto counting = [&](const SelectionVector& s) {
    ++calls;
    return hashed_score(s);
  };
  const auto r = exhaustive_search(4, 2, counting);
  CHECK(r.evaluated == 6);
  CHECK(calls == 6);
  CHECK(r.best.count() == 2);

  const auto all = exhaustive_search(3, 3, hashed_score);
  CHECK(all.best == SelectionVector::all(3));
  CHECK(all.evaluated == 1);

  // constant score: the lexicographically smallest bit string wins
  const auto tie = exhaustive_search(5, 2, [](const SelectionVector&) { return 0.5; });
  CHECK(tie.best.to_string() == "00011");

  try {
    exhaustive_search(16, 8, hashed_score);
    FAIL("budget not enforced");
  } catch (const SelectionError& e) {
    CHECK(std::string(e.what()).find("12870") != std::string::npos);
  }
  CHECK(exhaustive_search(16, 8, hashed_score, 20000).evaluated == 12870);
  CHECK_THROWS(exhaustive_search(4, 0, hashed_score));
  CHECK_THROWS(exhaustive_search(4, 5, hashed_score));
}

TEST_CASE("exhaustive dominates greedy under a frozen score") {
  gen::Gen g(54);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(2, 10);
    const int k = g.integer(1, n - 1);
    const auto t = random_table(g, n);
    const auto ex = exhaustive_search(n, k, t);
    CHECK(ex.evaluated == oracle::choose(n, k));
    CHECK(ex.value >= greedy_search(n, k, t).steps.back().value);
    const auto hx = exhaustive_search(n, k, hashed_score);
    CHECK(hx.value >= greedy_search(n, k, hashed_score).steps.back().value);
  }
}

TEST_CASE("random search") {
  const auto full = random_search(6, 6, 10, 3, hashed_score);
  CHECK(full.sd == 0.0);
  CHECK(full.mean == hashed_score(SelectionVector::all(6)));

  const auto a = random_search(12, 4, 10, 9, hashed_score);
  const auto b = random_search(12, 4, 10, 9, hashed_score);
  CHECK(a.subsets == b.subsets);
  CHECK(a.values == b.values);
  CHECK(a.values.size() == 10);
  for (const auto& s : a.subsets) CHECK(s.count() == 4);
  CHECK(random_search(12, 4, 10, 10, hashed_score).subsets != a.subsets);
  const auto [m, sd] = oracle::population_mean_sd(a.values);
  CHECK(a.mean == doctest::Approx(m).epsilon(1e-14));
  CHECK(a.sd == doctest::Approx(sd).epsilon(1e-12));

  // every sensor turns up over many draws at roughly k/N
  const auto many = random_search(8, 2, 4000, 1, [](const SelectionVector&) { return 0.0; });
  VectorXd freq = VectorXd::Zero(8);
  for (const auto& s : many.subsets) freq += s.as_weights();
  freq /= 4000.0;
  // binomial sd of a frequency near 0.25 over 4000 draws is about 0.007
  CHECK((freq.array() - 0.25).abs().maxCoeff() < 0.03);
}

TEST_CASE("selection probability map") {
  auto trace_to = [](const std::string& final) {
    // fabricate a nested trace ending at `final`
    const auto target = SelectionVector::from_string(final);
    const int n = static_cast<int>(target.size());
    return greedy_search(n, static_cast<int>(target.count()),
                         [&](const SelectionVector& s) {
                           double v = 0;
                           for (int i = 0; i < n; ++i) v += (s.test(i) && target.test(i)) ? 1.0 : 0.0;
                           return v;
                         });
  };
  const auto t1 = trace_to("1100");
  const auto t2 = trace_to("0011");
  CHECK(t1.final.to_string() == "1100");
  CHECK(selection_probability_map({t1, t2}, 2).isApprox(VectorXd::Constant(4, 0.5)));
  const VectorXd same = selection_probability_map({t1, t1, t1}, 2);
  for (int i = 0; i < 4; ++i) CHECK((same(i) == 0.0 || same(i) == 1.0));

  gen::Gen g(55);
  std::vector<OptimizationTrace> traces;
  for (int i = 0; i < 7; ++i) traces.push_back(greedy_search(9, 2, random_table(g, 9)));
  for (int k = 2; k <= 9; ++k) CHECK(selection_probability_map(traces, k).sum() == doctest::Approx(k));

  CHECK_THROWS_AS(selection_probability_map({}, 2), InputError);
  CHECK_THROWS_AS(selection_probability_map({t1, traces[0]}, 2), ShapeError);
}

TEST_CASE("accuracy versus k") {
  gen::Gen g(56);
  const auto t = random_table(g, 7);
  std::vector<int> ks(7);
  std::iota(ks.begin(), ks.end(), 1);
  const auto curve = accuracy_vs_k(7, ks, 5, 2, t);
  REQUIRE(curve.rows.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(curve.rows[i].k == static_cast<int>(i) + 1);
    CHECK(curve.rows[i].greedy == curve.trace.value_at(curve.rows[i].k));
  }
  CHECK(curve.rows.back().greedy == t(SelectionVector::all(7)));
  CHECK(curve.rows.back().random_mean == t(SelectionVector::all(7)));
  CHECK(curve.rows.back().random_sd == 0.0);

  const auto part = accuracy_vs_k(7, {5, 3, 5}, 4, 2, t);
  CHECK(part.rows.size() == 2);
  CHECK(part.rows[0].k == 3);
}

TEST_CASE("quantifier on planted data") {
  const auto ds = small_planted(3);
  const MatrixXd a_hat = small_planted_adjacency();
  QuantifierConfig qc;
  qc.eval_policy = EvalPolicy::mask_only;
  qc.inner_split_seed = 4;
  qc.train_cfg.epochs = 30;
  qc.train_cfg.batch_size = 8;
  qc.train_cfg.hidden_width = 16;
  const Quantifier q(ds, a_hat, qc);
  REQUIRE(q.reference_model().has_value());
  CHECK(q.inner_train().size() + q.inner_validation().size() == ds.size());
  const double full = q(SelectionVector::all(8));
  CHECK(full == evaluate(*q.reference_model(), q.inner_validation(), a_hat).accuracy);
  CHECK(q(SelectionVector::from_string("01001010")) == q(SelectionVector::from_string("01001010")));
  CHECK(q.evaluations() == 2);
  CHECK_THROWS_AS(q(SelectionVector::none(8)), SelectionError);
  CHECK_THROWS_AS(q(SelectionVector::all(7)), ShapeError);

  // retrain with the planted sensors masked: only noise is left
  QuantifierConfig rc = qc;
  rc.eval_policy = EvalPolicy::retrain;
  const double noise_only = quantify(ds, a_hat, SelectionVector::from_string("10110101"), rc);
  CHECK(noise_only <= 1.0 / 4 + 0.1);
  const double planted = quantify(ds, a_hat, SelectionVector::from_string("01001010"), rc);
  CHECK(planted > noise_only);
  CHECK(quantify(ds, a_hat, SelectionVector::from_string("01001010"), rc) == planted);

  QuantifierConfig removal = rc;
  removal.masking = MaskingMode::remove_nodes;
  const double removed = quantify(ds, a_hat, SelectionVector::from_string("01001010"), removal);
  CHECK(removed >= 0.0);
  CHECK(removed <= 1.0);
  removal.train_cfg.model_kind = ModelKind::mlp;
  removal.eval_policy = EvalPolicy::mask_only;
  CHECK_THROWS_AS(Quantifier(ds, a_hat, removal), ConfigError);

  QuantifierConfig bad = qc;
  bad.inner_train_fraction = 1.0;
  CHECK_THROWS_AS(Quantifier(ds, a_hat, bad), ConfigError);
  CHECK_THROWS_AS(Quantifier(ds, MatrixXd::Identity(5, 5), qc), ShapeError);
}

TEST_CASE("spo entry points agree with the search routines") {
  const auto ds = small_planted(5, 3);
  const MatrixXd a_hat = small_planted_adjacency();
  QuantifierConfig qc;
  qc.eval_policy = EvalPolicy::mask_only;
  qc.train_cfg.epochs = 10;
  qc.train_cfg.hidden_width = 8;
  const Quantifier q(ds, a_hat, qc);
  const auto score = [&](const SelectionVector& s) { return q(s); };

  const auto [final, trace] = greedy_spo(ds, a_hat, 3, qc);
  CHECK(final == greedy_search(8, 3, score).final);
  CHECK(trace.steps.size() == 5);
  CHECK(exhaustive_spo(ds, a_hat, 3, qc) == exhaustive_search(8, 3, score).best);
  CHECK(exhaustive_search(8, 3, score).value >= trace.value_at(3));
  CHECK_THROWS_AS(exhaustive_spo(ds, a_hat, 4, qc, 10), SelectionError);
  const auto rb = random_selection_baseline(ds, a_hat, 3, 4, 7, qc);
  CHECK(rb.values == random_search(8, 3, 4, 7, score).values);
  const auto curve = accuracy_vs_k_curve(ds, a_hat, {3, 8}, qc, 4, 7);
  CHECK(curve.rows.back().greedy == q(SelectionVector::all(8)));
}

TEST_CASE("policy and masking names") {
  CHECK(eval_policy_from_string(to_string(EvalPolicy::mask_only)) == EvalPolicy::mask_only);
  CHECK(masking_mode_from_string(to_string(MaskingMode::remove_nodes)) == MaskingMode::remove_nodes);
  CHECK_THROWS_AS(eval_policy_from_string("sometimes"), ConfigError);
}

TEST_CASE("greedy recovers the planted sensors on a small armband") {
  const auto ds = small_planted(5);
  const MatrixXd a_hat = small_planted_adjacency();
  QuantifierConfig qc;
  qc.inner_split_seed = 6;
  qc.train_cfg.epochs = 30;
  qc.train_cfg.batch_size = 8;
  qc.train_cfg.hidden_width = 16;
  qc.train_cfg.seed = 7;
  const Quantifier q(ds, a_hat, qc);
  const SubsetScore score = [&q](const SelectionVector& s) { return q(s); };
  const auto planted = SelectionVector::from_indices(8, {1, 4, 6});

  const auto trace = greedy_search(8, 3, score);
  CHECK(trace.final == planted);
  // brute force over all 56 subsets: nothing beats the planted set
  const auto best = exhaustive_search(8, 3, score);
  CHECK(best.evaluated == oracle::choose(8, 3));
  CHECK(q(planted) == best.value);
}
