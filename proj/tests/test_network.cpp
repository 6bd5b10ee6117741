#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lghand/network.hpp"
#include "support.hpp"

using namespace lghand;

namespace {

NetConfig tiny_config(int t = 3) {
  NetConfig cfg;
  cfg.window_frames = t;
  cfg.width21 = 4;
  cfg.width6 = 5;
  cfg.width1 = 6;
  cfg.nonlocal_embed = 2;
  return cfg;
}

Matrix random_input(std::mt19937_64& rng, int rows) {
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  Matrix x(rows, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = dist(rng);
  return x;
}

Seq2 random_window(std::mt19937_64& rng, int t) {
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  Seq2 window;
  for (int f = 0; f < t; ++f) {
    Coords2 frame(21, 2);
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 2; ++j) frame(i, j) = dist(rng);
    window.push_back(frame);
  }
  return window;
}

}  // namespace

TEST_CASE("forward returns finite 21x3 output for the configured window") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(), 77);
  std::mt19937_64 rng(1);

  Coords3 out = net.forward(random_window(rng, 3));
  CHECK(out.rows() == 21);
  CHECK(out.cols() == 3);
  CHECK(out.allFinite());

  CHECK_THROWS_AS(net.forward(random_window(rng, 5)), ValidationError);
  Seq2 bad = random_window(rng, 3);
  bad[1](4, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(net.forward(bad), ValidationError);
}

TEST_CASE("zero head parameters produce all-zero output") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(), 78);
  for (Param* p : net.parameters())
    if (p->name.starts_with("head.")) p->value.setZero();
  std::mt19937_64 rng(2);
  Coords3 out = net.forward(random_window(rng, 3));
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deterministic given parameters") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(), 79);
  std::mt19937_64 rng(3);
  Seq2 window = random_window(rng, 3);
  Coords3 a = net.forward(window);
  Coords3 b = net.forward(window);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("same seed builds identical nets, different seeds differ") {
  HandTopology topo = build_topology();
  LocalToGlobalNet a(topo, tiny_config(), 5);
  LocalToGlobalNet b(topo, tiny_config(), 5);
  LocalToGlobalNet c(topo, tiny_config(), 6);
  auto pa = a.parameters();
  auto pb = b.parameters();
  auto pc = c.parameters();
  bool all_same = true, any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    all_same &= pa[i]->value == pb[i]->value;
    any_diff |= pa[i]->value != pc[i]->value;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("fresh non-local block is inert: scrambling it changes nothing") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(), 80);
  std::mt19937_64 rng(4);
  Seq2 window = random_window(rng, 3);
  Coords3 before = net.forward(window);

  // With the residual scale still zero, the attention weights are gated off.
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (Param* p : net.parameters())
    if (p->name.starts_with("non_local.") && !p->name.ends_with(".scale"))
      for (Eigen::Index i = 0; i < p->value.rows(); ++i)
        for (Eigen::Index j = 0; j < p->value.cols(); ++j)
          p->value(i, j) = dist(rng);
  Coords3 after = net.forward(window);
  CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("skip add mode runs and differs from concat") {
  HandTopology topo = build_topology();
  NetConfig cfg = tiny_config();
  cfg.skip_combine = "add";
  LocalToGlobalNet net(topo, cfg, 81);
  std::mt19937_64 rng(5);
  Coords3 out = net.forward(random_window(rng, 3));
  CHECK(out.allFinite());

  NetConfig invalid = tiny_config();
  invalid.skip_combine = "multiply";
  CHECK_THROWS_AS(LocalToGlobalNet(topo, invalid, 1), ValidationError);
}

TEST_CASE("window length one is supported") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(1), 82);
  std::mt19937_64 rng(6);
  Coords3 out = net.forward(random_window(rng, 1));
  CHECK(out.allFinite());
}

TEST_CASE("forward is permutation consistent") {
  HandTopology topo = build_topology();

  // Relabel joints with a root-preserving permutation; bones and pooling
  // groups carry over through the same relabeling.
  std::vector<int> perm(21);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 prng(99);
  std::shuffle(perm.begin() + 1, perm.end(), prng);

  std::vector<std::string> names(21);
  std::vector<int> groups(21);
  for (int j = 0; j < 21; ++j) {
    names[perm[j]] = topo.joint_names()[j];
    groups[perm[j]] = topo.pool_groups_21to6()[j];
  }
  std::vector<Bone> bones;
  for (const Bone& b : topo.bones())
    bones.push_back({perm[b.parent], perm[b.child]});
  HandTopology permuted(names, bones, groups);

  NetConfig cfg = tiny_config();
  LocalToGlobalNet net_a(topo, cfg, 7);
  LocalToGlobalNet net_b(permuted, cfg, 8);
  // Same weights: class-level filters do not depend on node identity.
  auto pa = net_a.parameters();
  auto pb = net_b.parameters();
  for (size_t i = 0; i < pa.size(); ++i) pb[i]->value = pa[i]->value;

  std::mt19937_64 rng(9);
  Seq2 window = random_window(rng, 3);
  Seq2 permuted_window = window;
  for (int t = 0; t < 3; ++t)
    for (int j = 0; j < 21; ++j)
      permuted_window[t].row(perm[j]) = window[t].row(j);

  Coords3 out_a = net_a.forward(window);
  Coords3 out_b = net_b.forward(permuted_window);
  for (int j = 0; j < 21; ++j)
    CHECK((out_b.row(perm[j]) - out_a.row(j)).norm() < 1e-9);
}

TEST_CASE("whole-network parameter gradients match finite differences") {
  HandTopology topo = build_topology();
  std::mt19937_64 rng(10);
  const double h = 1e-5;
  int checked = 0;

  for (uint64_t seed = 0; checked < 3 && seed < 40; ++seed) {
    LocalToGlobalNet net(topo, tiny_config(), 1000 + seed);
    // Check at a generic parameter point: zero biases leave dead channels
    // sitting exactly on the ReLU kink, where finite differences lie.
    std::uniform_real_distribution<double> bias_dist(-0.3, 0.3);
    for (Param* p : net.parameters())
      if (p->name.ends_with(".bias"))
        for (Eigen::Index i = 0; i < p->value.cols(); ++i)
          p->value(0, i) = bias_dist(rng);
    Matrix x = random_input(rng, net.nodes21());

    net.forward_batch(x, 1);
    if (net.kink_margin() < 10.0 * h) continue;  // FD would straddle a kink
    ++checked;

    net.zero_grad();
    Matrix y = net.forward_batch(x, 1);
    net.backward_batch(Matrix::Ones(y.rows(), y.cols()), 1);

    std::vector<double> analytic, numeric;
    for (Param* p : net.parameters())
      for (Eigen::Index i = 0; i < p->value.rows(); ++i)
        for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
          analytic.push_back(p->grad(i, j));
          const double orig = p->value(i, j);
          p->value(i, j) = orig + h;
          double fp = net.forward_batch(x, 1).sum();
          p->value(i, j) = orig - h;
          double fm = net.forward_batch(x, 1).sum();
          p->value(i, j) = orig;
          numeric.push_back((fp - fm) / (2.0 * h));
        }
    Vector a = Eigen::Map<Vector>(analytic.data(), analytic.size());
    Vector n = Eigen::Map<Vector>(numeric.data(), numeric.size());
    CHECK(testsup::grad_rel_error(a, n) < 1e-4);
  }
  CHECK(checked == 3);
}

TEST_CASE("batched forward equals per-sample forward") {
  HandTopology topo = build_topology();
  LocalToGlobalNet net(topo, tiny_config(), 11);
  std::mt19937_64 rng(12);
  Matrix x1 = random_input(rng, net.nodes21());
  Matrix x2 = random_input(rng, net.nodes21());
  Matrix stacked(2 * net.nodes21(), 2);
  stacked << x1, x2;

  Matrix batched = net.forward_batch(stacked, 2);
  Matrix y1 = net.forward_batch(x1, 1);
  Matrix y2 = net.forward_batch(x2, 1);
  CHECK((batched.topRows(21) - y1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((batched.bottomRows(21) - y2).cwiseAbs().maxCoeff() < 1e-12);
}
