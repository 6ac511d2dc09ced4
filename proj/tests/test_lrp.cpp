#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "lstmlrp/errors.hpp"
#include "lstmlrp/lrp.hpp"
#include "lstmlrp/tasks.hpp"

using namespace lstmlrp;

namespace {

Sequence random_sequence(std::size_t T, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat m(T, d);
  for (double& x : m.flat()) x = u(rng);
  return Sequence(std::move(m));
}

LSTMParams random_params(const VariantSpec& v, std::size_t d, std::size_t h, std::size_t out,
                         std::mt19937_64& rng) {
  return initialize_params(v, d, h, out, false, rng, 0.8);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST(LinearEpsilon, SingleContributorConserves) {
  const LinearSplit s = prop_linear_epsilon(Vec{1.0}, std::nullopt, 0.7, 0.0);
  ASSERT_EQ(s.relevance.size(), 1u);
  EXPECT_DOUBLE_EQ(s.relevance[0], 0.7);
  EXPECT_EQ(s.absorbed, 0.0);
}

TEST(LinearEpsilon, BiasTakesItsShare) {
  const LinearSplit s = prop_linear_epsilon(Vec{1.0}, 1.0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(s.relevance[0], 0.5);
  EXPECT_DOUBLE_EQ(s.bias_relevance, 0.5);
}

TEST(LinearEpsilon, StabilizerAbsorbs) {
  const LinearSplit s = prop_linear_epsilon(Vec{2.0, -1.0}, std::nullopt, 1.0, 0.5);
  EXPECT_NEAR(s.relevance[0], 2.0 / 1.5, 1e-15);
  EXPECT_NEAR(s.relevance[1], -1.0 / 1.5, 1e-15);
  EXPECT_NEAR(s.absorbed, 1.0 / 3.0, 1e-15);
}

TEST(LinearEpsilon, SignOfZeroIsPositive) {
  const LinearSplit s = prop_linear_epsilon(Vec{1.0, -1.0}, std::nullopt, 1.0, 0.5);
  EXPECT_NEAR(s.relevance[0], 2.0, 1e-15);
  EXPECT_NEAR(s.relevance[1], -2.0, 1e-15);
}

TEST(LinearEpsilon, ZeroSumWithoutStabilizerIsHazard) {
  EXPECT_THROW(prop_linear_epsilon(Vec{1.0, -1.0}, std::nullopt, 1.0, 0.0), DivisionHazard);
  const LinearSplit s = prop_linear_epsilon(Vec{1.0, -1.0}, std::nullopt, 0.0, 0.0);
  EXPECT_EQ(s.relevance, (Vec{0.0, 0.0}));
}

TEST(ProductRule, Examples) {
  const ProductSplit all = prop_product({0.3, 1.2, 0.5}, {ProductRuleKind::all, 0.0});
  EXPECT_EQ(all.r_g, 0.0);
  EXPECT_EQ(all.r_s, 0.5);
  const ProductSplit half = prop_product({0.3, 1.2, 0.8}, {ProductRuleKind::half, 0.0});
  EXPECT_DOUBLE_EQ(half.r_g, 0.4);
  EXPECT_DOUBLE_EQ(half.r_s, 0.4);
  const ProductSplit prop = prop_product({1.0, 3.0, 4.0}, {ProductRuleKind::prop, 0.0});
  EXPECT_DOUBLE_EQ(prop.r_g, 1.0);
  EXPECT_DOUBLE_EQ(prop.r_s, 3.0);
  const ProductSplit abs = prop_product({-1.0, 3.0, 4.0}, {ProductRuleKind::abs, 0.0});
  EXPECT_DOUBLE_EQ(abs.r_g, 1.0);
  EXPECT_DOUBLE_EQ(abs.r_s, 3.0);
}

TEST(ProductRule, ZeroDenominatorIsHazard) {
  EXPECT_THROW(prop_product({1.0, -1.0, 1.0}, {ProductRuleKind::prop, 0.0}), DivisionHazard);
  EXPECT_THROW(prop_product({0.0, 0.0, 1.0}, {ProductRuleKind::abs, 0.0}), DivisionHazard);
  EXPECT_NO_THROW(prop_product({1.0, -1.0, 1.0}, {ProductRuleKind::prop, 0.2}));
}

TEST(ProductRule, Algebra) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 100000; ++k) {
    const GatedTerm term{u(rng), u(rng), u(rng)};
    for (auto kind : {ProductRuleKind::all, ProductRuleKind::half}) {
      const ProductSplit s = prop_product(term, {kind, 0.0});
      EXPECT_EQ(s.r_g + s.r_s, term.r_p);
    }
    if (std::abs(term.z_g + term.z_s) > 1e-9) {
      const ProductSplit s = prop_product(term, {ProductRuleKind::prop, 0.0});
      EXPECT_NEAR(s.r_g + s.r_s, term.r_p, std::abs(term.r_p) * 1e-9);
    }
    const ProductSplit a = prop_product(term, {ProductRuleKind::abs, 0.0});
    EXPECT_NEAR(a.r_g + a.r_s, term.r_p, std::abs(term.r_p) * 1e-9);
  }
}

TEST(ProductRule, AllIgnoresGate) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 1000; ++k) {
    const double z_s = u(rng), r_p = u(rng);
    const ProductSplit a = prop_product({u(rng), z_s, r_p}, {ProductRuleKind::all, 0.001});
    const ProductSplit b = prop_product({u(rng), z_s, r_p}, {ProductRuleKind::all, 0.001});
    EXPECT_EQ(a.r_g, b.r_g);
    EXPECT_EQ(a.r_s, b.r_s);
  }
}

TEST(ProductRule, Defaults) {
  EXPECT_EQ(ProductRule::with_default_epsilon(ProductRuleKind::prop).epsilon, 0.2);
  EXPECT_EQ(ProductRule::with_default_epsilon(ProductRuleKind::all).epsilon, 0.001);
  EXPECT_EQ(LRPConfig::defaults(ProductRuleKind::half).epsilon_linear, 0.001);
  EXPECT_EQ(product_rule_from_string("abs"), ProductRuleKind::abs);
  EXPECT_THROW(product_rule_from_string("gamma"), ConfigError);
}

TEST(Accumulator, Splits) {
  const AccumulatorSplit a = prop_sum_accumulator(0.2, 0.8, 1.0);
  EXPECT_DOUBLE_EQ(a.r_product, 0.2);
  EXPECT_DOUBLE_EQ(a.r_carry, 0.8);
  EXPECT_FALSE(a.used_fallback);
  const AccumulatorSplit b = prop_sum_accumulator(0.6, 0.0, 1.3);
  EXPECT_EQ(b.r_product, 1.3);
  EXPECT_EQ(b.r_carry, 0.0);
  const AccumulatorSplit c = prop_sum_accumulator(0.5, -0.5, 1.0);
  EXPECT_TRUE(c.used_fallback);
  EXPECT_NEAR(c.r_product + c.r_carry + c.absorbed, 1.0, 1e-12);
}

TEST(Elementwise, Identity) {
  EXPECT_EQ(prop_elementwise(Vec{0.0}), (Vec{0.0}));
  EXPECT_EQ(prop_elementwise(Vec{1.5, -2.0}), (Vec{1.5, -2.0}));
}

TEST(Explain, ConservationGatelessAndMarkov) {
  std::mt19937_64 rng(23);
  for (const VariantSpec& v : {VariantSpec::gateless(), VariantSpec::markov(3.0, 2.0)}) {
    for (int k = 0; k < 100; ++k) {
      const std::size_t d = 1 + k % 3, h = 1 + k % 4;
      const LSTMParams p = random_params(v, d, h, 1 + k % 2, rng);
      const Sequence seq = random_sequence(2 + k % 9, d, rng);
      LRPConfig cfg = LRPConfig::exact(ProductRuleKind::all);
      cfg.target = k % p.output_dim();
      const RelevanceTrace rt = lrp_explain(forward_sequence(p, v, seq), p, v, cfg);
      const Ledger& l = rt.ledger;
      EXPECT_NEAR(l.output_relevance_in, l.input_total + l.bias_trapped, 1e-9);
      double sum = 0.0;
      for (double r : rt.per_step) sum += r;
      EXPECT_NEAR(sum, l.input_total, 1e-12);
      EXPECT_LT(std::abs(conservation_audit(rt).residual), 1e-9);
    }
  }
}

TEST(Explain, StandardConservesWithBothTrapKinds) {
  std::mt19937_64 rng(24);
  const VariantSpec v = VariantSpec::standard();
  for (auto rule : {ProductRuleKind::all, ProductRuleKind::half, ProductRuleKind::abs}) {
    for (int k = 0; k < 30; ++k) {
      const LSTMParams p = random_params(v, 2, 2, 1, rng);
      const RelevanceTrace rt =
          lrp_explain(forward_sequence(p, v, random_sequence(6, 2, rng)), p, v,
                      LRPConfig::defaults(rule));
      EXPECT_LT(std::abs(conservation_audit(rt).residual), 1e-9);
    }
  }
}

TEST(Explain, OutputRelevanceIsScore) {
  std::mt19937_64 rng(25);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = random_params(v, 2, 3, 2, rng);
  const ActivationTrace tr = forward_sequence(p, v, random_sequence(5, 2, rng));
  LRPConfig cfg = LRPConfig::exact(ProductRuleKind::all);
  cfg.target = 1;
  EXPECT_DOUBLE_EQ(lrp_explain(tr, p, v, cfg).ledger.output_relevance_in, tr.prediction[1]);
}

TEST(Explain, ZeroOutputRelevanceGivesZeros) {
  std::mt19937_64 rng(26);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = random_params(v, 2, 2, 1, rng);
  LRPConfig cfg = LRPConfig::defaults(ProductRuleKind::half);
  cfg.output_relevance = 0.0;
  const RelevanceTrace rt = lrp_explain(forward_sequence(p, v, random_sequence(7, 2, rng)), p, v, cfg);
  for (double r : rt.per_step) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(rt.ledger.bias_trapped, 0.0);
}

TEST(Explain, HomogeneousInOutputRelevance) {
  std::mt19937_64 rng(27);
  for (auto a : {Architecture::standard, Architecture::markov, Architecture::gateless}) {
    const VariantSpec v = VariantSpec::make(a);
    const LSTMParams p = random_params(v, 2, 2, 1, rng);
    const ActivationTrace tr = forward_sequence(p, v, random_sequence(6, 2, rng));
    LRPConfig cfg = LRPConfig::exact(ProductRuleKind::all);
    cfg.output_relevance = 0.37;
    const RelevanceTrace one = lrp_explain(tr, p, v, cfg);
    cfg.output_relevance = 0.74;
    const RelevanceTrace two = lrp_explain(tr, p, v, cfg);
    for (std::size_t t = 0; t < one.length(); ++t) {
      for (std::size_t d = 0; d < 2; ++d) {
        EXPECT_NEAR((*two.per_dim)(t, d), 2.0 * (*one.per_dim)(t, d), 1e-12);
      }
    }
  }
}

TEST(Explain, ForgetGateDecay) {
  const std::size_t T = 12;
  for (double phi : {0.25, 0.5, 0.9}) {
    LSTMParams p = LSTMParams::zeros(1, 1, 1, false);
    p.w_z(0, 0) = 0.8;
    p.b_i[0] = 0.3;
    p.b_f[0] = logit(phi);
    p.w_o(0, 0) = 0.4;
    p.u_o(0, 0) = -0.7;
    p.head_w(0, 0) = 1.5;
    const VariantSpec v = VariantSpec::standard();
    const Sequence seq(Mat(T, 1, 1.0));
    const ActivationTrace tr = forward_sequence(p, v, seq);
    const RelevanceTrace rt = lrp_explain(tr, p, v, LRPConfig::exact(ProductRuleKind::all));
    for (std::size_t k = 1; k < T; ++k) {
      EXPECT_NEAR(rt.per_step[T - 1 - k] / rt.per_step[T - 1], std::pow(phi, k), 1e-6)
          << "phi " << phi << " k " << k;
    }
  }
}

TEST(Explain, HalfRuleTrapsInGatesOnGridEpisodes) {
  std::mt19937_64 rng(28);
  const VariantSpec v = VariantSpec::markov();
  const LSTMParams p = random_params(v, kGridFeatures, 2, 1, rng);
  bool trapped = false;
  for (const GridEpisode& ep : gen_gridworld(20, 20, 3)) {
    const RelevanceTrace rt = lrp_explain(forward_sequence(p, v, Sequence(ep.features)), p, v,
                                          LRPConfig::defaults(ProductRuleKind::half));
    if (rt.ledger.gate_trapped != 0.0) trapped = true;
    EXPECT_LT(std::abs(conservation_audit(rt).residual), 1e-9);
  }
  EXPECT_TRUE(trapped);
}

TEST(Explain, MethodNameAndShapes) {
  std::mt19937_64 rng(29);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = random_params(v, 3, 2, 1, rng);
  const RelevanceTrace rt = lrp_explain(forward_sequence(p, v, random_sequence(4, 3, rng)), p, v,
                                        LRPConfig::defaults(ProductRuleKind::prop));
  EXPECT_EQ(rt.method, "lrp-prop");
  ASSERT_TRUE(rt.per_dim.has_value());
  EXPECT_EQ(rt.per_dim->rows(), 4u);
  EXPECT_EQ(rt.per_dim->cols(), 3u);
}

TEST(Explain, Errors) {
  std::mt19937_64 rng(30);
  const VariantSpec v = VariantSpec::standard();
  const LSTMParams p = random_params(v, 2, 2, 1, rng);
  const LSTMParams other = random_params(v, 2, 3, 1, rng);
  const ActivationTrace tr = forward_sequence(p, v, random_sequence(3, 2, rng));
  EXPECT_THROW(lrp_explain(tr, other, v, LRPConfig::defaults(ProductRuleKind::all)), ShapeError);
  LRPConfig neg = LRPConfig::defaults(ProductRuleKind::all);
  neg.epsilon_linear = -1.0;
  EXPECT_THROW(lrp_explain(tr, p, v, neg), ConfigError);
  LRPConfig far = LRPConfig::defaults(ProductRuleKind::all);
  far.target = 5;
  EXPECT_ANY_THROW(lrp_explain(tr, p, v, far));
  EXPECT_THROW(conservation_audit(RelevanceTrace{}), ConfigError);
}

TEST(Export, CsvAndJson) {
  std::mt19937_64 rng(31);
  const VariantSpec v = VariantSpec::gateless();
  const LSTMParams p = random_params(v, 2, 1, 1, rng);
  const RelevanceTrace rt = lrp_explain(forward_sequence(p, v, random_sequence(3, 2, rng)), p, v,
                                        LRPConfig::exact(ProductRuleKind::all));
  const std::string csv = relevance_to_csv(rt);
  EXPECT_EQ(csv.rfind("t,dim,relevance\n", 0), 0u);
  EXPECT_NE(csv.find("# ledger"), std::string::npos);
  EXPECT_NE(csv.find("# bias_trapped,"), std::string::npos);
  const auto j = nlohmann::json::parse(relevance_to_json(rt));
  EXPECT_EQ(j["method"], "lrp-all");
  EXPECT_EQ(j["per_step"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["ledger"]["input_total"].get<double>(), rt.ledger.input_total);
}
