#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "rntc/errors.hpp"
#include "rntc/hyper_net.hpp"
#include "rntc/main_net.hpp"
#include "rntc/scale.hpp"

using namespace rntc;

namespace {

Eigen::VectorXd random_theta(Eigen::Index n, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd t(n);
  for (auto& v : t) v = d(rng);
  return t;
}

std::span<const double> span_of(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST(Nets, ParameterCounts) {
  EXPECT_EQ(MainNetSpec::paper().parameter_count(), 4519);
  EXPECT_EQ(MainNetSpec::desk().parameter_count(), 1223);
  const HyperNetSpec paper = HyperNetSpec::paper(4519);
  EXPECT_EQ(paper.flatten_size(), 2048);
  EXPECT_EQ(paper.parameter_count(), 9365431);
  const HyperNetSpec desk = HyperNetSpec::desk(1223);
  EXPECT_EQ(desk.flatten_size(), 32);
  EXPECT_LT(desk.parameter_count(), 100000);
}

TEST(Nets, CollapsingInputIsRejected) {
  HyperNetSpec spec = HyperNetSpec::desk(10);
  spec.input_size = 32;
  EXPECT_THROW(spec.trace(), ConfigError);
}

TEST(Nets, ScaleProfilesAreConsistent) {
  for (Scale s : {Scale::Paper, Scale::Desk}) {
    const ScaleProfile p = scale_profile(s);
    EXPECT_EQ(p.hyper.output_size, p.main.parameter_count());
    EXPECT_EQ(p.hyper.input_size, p.sdf_size);
    EXPECT_EQ(scale_from_string(to_string(s)), s);
  }
  EXPECT_THROW(scale_from_string("huge"), ConfigError);
}

TEST(Nets, ResidualHeadIsStrictlyPositive) {
  const MainNet<double> net(MainNetSpec::desk(), HeadMode::Residual);
  const Eigen::VectorXd theta = random_theta(net.parameter_count(), 1, 3.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix<double, 3, Eigen::Dynamic> x(3, 500);
  for (auto& v : x.reshaped()) v = u(rng);
  const auto out = net.forward_batch(span_of(theta), x);
  EXPECT_GT(out.minCoeff(), 0.0);
  EXPECT_GT(act::elu_plus_one(-1e6), 0.0);
  EXPECT_NEAR(act::elu_plus_one(0.5), 1.5, 1e-15);
}

TEST(Nets, MainNetGradientsMatchFiniteDifferences) {
  for (HeadMode mode : {HeadMode::Residual, HeadMode::Direct}) {
    const MainNet<double> net(MainNetSpec::desk(), mode);
    Eigen::VectorXd theta = random_theta(net.parameter_count(), 5);
    const Eigen::Vector3d x(0.3, -0.4, 0.7);
    MainNet<double>::Cache cache;
    net.forward_batch(span_of(theta), MainNet<double>::Batch(x), &cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    net.backward_batch(span_of(theta), cache, MainNet<double>::RowVector::Ones(1), grad);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < theta.size(); i += 37) {
      const double keep = theta[i];
      theta[i] = keep + h;
      const double fp = net.forward(span_of(theta), x);
      theta[i] = keep - h;
      const double fm = net.forward(span_of(theta), x);
      theta[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      EXPECT_NEAR(grad[i], fd, 1e-6 * (1.0 + std::abs(fd))) << "param " << i;
    }
    const Eigen::Vector3d gx = net.grad_input(span_of(theta), x);
    for (int d = 0; d < 3; ++d) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[d] = h;
      const double fd = (net.forward(span_of(theta), x + e) - net.forward(span_of(theta), x - e)) / (2 * h);
      EXPECT_NEAR(gx[d], fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(Nets, WrongThetaLengthThrows) {
  const MainNet<double> net(MainNetSpec::desk(), HeadMode::Direct);
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
  EXPECT_THROW(net.forward(span_of(theta), Eigen::Vector3d::Zero()), ConfigError);
}

TEST(Nets, HyperNetGradientMatchesFiniteDifferences) {
  HyperNetSpec spec = HyperNetSpec::desk(7);
  HyperNet<double> net(spec);
  net.initialize(11);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  HyperNet<double>::Tensor input(spec.in_channels, spec.input_size * spec.input_size);
  for (auto& v : input.reshaped()) v = u(rng);
  const Eigen::VectorXd w = random_theta(spec.output_size, 9, 1.0);
  // Loss = w . forward(input)
  HyperNet<double>::Cache cache;
  net.forward(input, &cache);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.params().size());
  net.backward(cache, w, grad);
  const auto layout = spec.layout();
  const double h = 1e-6;
  std::vector<Eigen::Index> probe;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    probe.push_back(layout.conv_weight[b] + 3);
    probe.push_back(layout.conv_bias[b]);
  }
  probe.push_back(layout.head_weight + 5);
  probe.push_back(layout.head_bias + 2);
  for (Eigen::Index i : probe) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double fp = w.dot(net.forward(input));
    net.params()[i] = keep - h;
    const double fm = w.dot(net.forward(input));
    net.params()[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-5 * (1.0 + std::abs(fd))) << "param " << i;
  }
}

TEST(Nets, InitializationIsSeeded) {
  HyperNet<double> a(HyperNetSpec::desk(20)), b(HyperNetSpec::desk(20)), c(HyperNetSpec::desk(20));
  a.initialize(1);
  b.initialize(1);
  c.initialize(2);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(a.params(), c.params());
}

TEST(Nets, NormalizerMapsWindowToUnitBox) {
  StateNormalizer n{{2.0, 3.0}, 8.0};
  const Eigen::Vector3d lo = n.normalize({-2.0, -1.0, std::numbers::pi});
  EXPECT_NEAR(lo.x(), -1.0, 1e-12);
  EXPECT_NEAR(lo.y(), -1.0, 1e-12);
  EXPECT_NEAR(lo.z(), 1.0, 1e-12);
  EXPECT_NEAR(n.normalize({6.0, 7.0, -0.5 * std::numbers::pi}).z(), -0.5, 1e-12);
  EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
}
