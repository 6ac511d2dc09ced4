#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lstmlrp/errors.hpp"
#include "lstmlrp/explainers.hpp"
#include "lstmlrp/tasks.hpp"
#include "lstmlrp/train.hpp"

using namespace lstmlrp;

namespace {

Sequence random_sequence(std::size_t T, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat m(T, d);
  for (double& x : m.flat()) x = u(rng);
  return Sequence(std::move(m));
}

// Identity cell input and output with saturated gates: f(x) = head_w · W_z · x_T.
struct LinearFixture {
  LSTMParams params = LSTMParams::zeros(3, 1, 1, false);
  VariantSpec variant{Architecture::standard, Activation::identity(), Activation::identity()};

  LinearFixture() {
    params.w_z = Mat(1, 3, {0.5, -1.25, 2.0});
    params.b_i[0] = 1000.0;
    params.b_o[0] = 1000.0;
    params.b_f[0] = -1000.0;
    params.head_w(0, 0) = 1.5;
  }
};

void expect_zero_ledger(const Ledger& l) {
  EXPECT_EQ(l.bias_trapped, 0.0);
  EXPECT_EQ(l.gate_trapped, 0.0);
  EXPECT_EQ(l.stabilizer_absorbed, 0.0);
}

}  // namespace

TEST(Softmax, Basics) {
  const Vec half = softmax(Vec{0.0, 0.0});
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  const Vec big = softmax(Vec{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(big[0]) && std::isfinite(big[1]));
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int k = 0; k < 200; ++k) {
    Vec v(5), w(5);
    const double c = u(rng);
    for (std::size_t j = 0; j < 5; ++j) {
      v[j] = u(rng);
      w[j] = v[j] + c;
    }
    const Vec a = softmax(v), b = softmax(w);
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      sum += a[j];
      EXPECT_NEAR(a[j], b[j], 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Gradient, ZeroHeadGivesZero) {
  std::mt19937_64 rng(5);
  const VariantSpec v = VariantSpec::standard();
  LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  p.head_w = Mat(1, 2);
  const ActivationTrace tr = forward_sequence(p, v, random_sequence(6, 2, rng));
  for (bool squared : {true, false}) {
    const RelevanceTrace rt = gradient_relevance(tr, p, v, 0, squared);
    for (double r : rt.per_step) EXPECT_EQ(r, 0.0);
  }
}

TEST(Gradient, LinearFixtureGradientTimesInput) {
  const LinearFixture lf;
  std::mt19937_64 rng(6);
  for (int k = 0; k < 20; ++k) {
    const Sequence seq = random_sequence(1 + k % 5, 3, rng);
    const ActivationTrace tr = forward_sequence(lf.params, lf.variant, seq);
    const RelevanceTrace rt = gradient_relevance(tr, lf.params, lf.variant, 0, false);
    const std::size_t last = seq.length() - 1;
    for (std::size_t d = 0; d < 3; ++d) {
      EXPECT_NEAR((*rt.per_dim)(last, d), 1.5 * lf.params.w_z(0, d) * seq.row(last)[d], 1e-12);
    }
    EXPECT_NEAR(rt.ledger.input_total, tr.prediction[0], 1e-9);
    expect_zero_ledger(rt.ledger);
  }
}

TEST(Gradient, SquaredMatchesDefinition) {
  std::mt19937_64 rng(7);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  const ActivationTrace tr = forward_sequence(p, v, random_sequence(5, 2, rng));
  const Mat g = input_gradients(p, v, tr, Vec{1.0});
  const RelevanceTrace sq = gradient_relevance(tr, p, v, 0, true);
  const RelevanceTrace gx = gradient_relevance(tr, p, v, 0, false);
  EXPECT_EQ(sq.method, "gradient");
  EXPECT_EQ(gx.method, "gradient_x_input");
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t d = 0; d < 2; ++d) {
      EXPECT_DOUBLE_EQ((*sq.per_dim)(t, d), g(t, d) * g(t, d));
      EXPECT_DOUBLE_EQ((*gx.per_dim)(t, d), g(t, d) * tr.input.row(t)[d]);
    }
  }
}

TEST(Gradient, TrainedModelInputGradientsMatchFiniteDifferences) {
  ArithmeticSpec spec;
  spec.train.count = 1000;
  spec.val.count = 100;
  spec.test.count = 20;
  spec.seed = 3;
  const DatasetSplits data = gen_arithmetic(spec);
  const VariantSpec v = VariantSpec::standard();
  std::mt19937_64 rng(3);
  TrainConfig cfg;
  cfg.max_epochs = 20;
  const TrainResult r =
      train_model(initialize_params(v, 2, 1, 1, false, rng), v, data.train, data.val, cfg);
  for (const Example& ex : data.test.items) {
    const Mat g = input_gradients(r.params, v, forward_sequence(r.params, v, ex.input), Vec{1.0});
    for (std::size_t t = 0; t < ex.input.length(); ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        Sequence plus = ex.input, minus = ex.input;
        plus.row(t)[d] += 1e-5;
        minus.row(t)[d] -= 1e-5;
        const double fd =
            (predict(r.params, v, plus)[0] - predict(r.params, v, minus)[0]) / 2e-5;
        EXPECT_NEAR(g(t, d), fd, 1e-5 * std::max(std::abs(fd), 1e-3));
      }
    }
  }
}

TEST(Occlusion, ZeroRowIsNoOp) {
  std::mt19937_64 rng(8);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  Sequence seq = random_sequence(6, 2, rng);
  seq.row(2)[0] = 0.0;
  seq.row(2)[1] = 0.0;
  const RelevanceTrace rt = occlusion_relevance(seq, p, v, 0, OcclusionMode::f_diff);
  EXPECT_EQ(rt.per_step[2], 0.0);
  EXPECT_EQ(rt.method, "occlusion");
  EXPECT_FALSE(rt.per_dim.has_value());
  expect_zero_ledger(rt.ledger);
}

TEST(Occlusion, MatchesDefinition) {
  std::mt19937_64 rng(9);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 3, 2, 3, true, rng);
  const Sequence seq = random_sequence(5, 3, rng);
  const Vec base = predict(p, v, seq);
  const RelevanceTrace f = occlusion_relevance(seq, p, v, 1, OcclusionMode::f_diff);
  const RelevanceTrace pr = occlusion_relevance(seq, p, v, 1, OcclusionMode::p_diff);
  EXPECT_EQ(pr.method, "occlusion_p");
  for (std::size_t t = 0; t < 5; ++t) {
    Sequence occluded = seq;
    for (double& x : occluded.row(t)) x = 0.0;
    const Vec out = predict(p, v, occluded);
    EXPECT_DOUBLE_EQ(f.per_step[t], base[1] - out[1]);
    EXPECT_NEAR(pr.per_step[t], softmax(base)[1] - softmax(out)[1], 1e-15);
  }
}

TEST(Occlusion, ProbabilityModeNeedsClassifier) {
  std::mt19937_64 rng(10);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  EXPECT_THROW(occlusion_relevance(random_sequence(3, 2, rng), p, v, 0, OcclusionMode::p_diff),
               ConfigError);
}

TEST(ExplainerKind, NamesRoundTrip) {
  for (const char* name : {"gradient", "gradient_x_input", "occlusion", "occlusion_p", "lrp-all",
                           "lrp-prop", "lrp-abs", "lrp-half"}) {
    EXPECT_EQ(ExplainerKind::parse(name).name(), name);
  }
  EXPECT_THROW(ExplainerKind::parse("deeplift"), ConfigError);
}

TEST(Explain, PropDefaultsToItsOwnStabilizer) {
  std::mt19937_64 rng(11);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  const Sequence seq = random_sequence(6, 2, rng);
  const RelevanceTrace viaExplain =
      explain(ExplainerKind::lrp_rule(ProductRuleKind::prop), seq, p, v, 0);
  const RelevanceTrace direct =
      lrp_explain(forward_sequence(p, v, seq), p, v, LRPConfig::defaults(ProductRuleKind::prop));
  EXPECT_EQ(viaExplain.per_step, direct.per_step);
  LRPConfig small = LRPConfig::defaults(ProductRuleKind::prop);
  small.rule.epsilon = 0.001;
  EXPECT_NE(lrp_explain(forward_sequence(p, v, seq), p, v, small).per_step, direct.per_step);
}

TEST(Explain, DispatchAgreesWithDirectCalls) {
  std::mt19937_64 rng(12);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = initialize_params(v, 2, 2, 1, false, rng);
  const Sequence seq = random_sequence(5, 2, rng);
  const ActivationTrace tr = forward_sequence(p, v, seq);
  EXPECT_EQ(explain(ExplainerKind::parse("gradient_x_input"), seq, p, v, 0).per_step,
            gradient_relevance(tr, p, v, 0, false).per_step);
  EXPECT_EQ(explain(ExplainerKind::parse("occlusion"), tr, p, v, 0).per_step,
            occlusion_relevance(seq, p, v, 0, OcclusionMode::f_diff).per_step);
}
