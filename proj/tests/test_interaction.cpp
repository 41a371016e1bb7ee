#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "hinge/interaction.hpp"

using namespace hinge;
using namespace hinge::test;

TEST_SUITE_BEGIN("interaction");

namespace {

Tensor rand_cube(uint32_t l, uint32_t i, uint32_t e, Rng& rng) {
  Tensor t(Shape::cube(l, i, e));
  for (size_t k = 0; k < t.size(); ++k) t.at(k) = rng.next_symmetric();
  return t;
}

}  // namespace

TEST_CASE("combination enumeration") {
  auto aligned = enumerate_combinations(3, 3, false);
  REQUIRE(aligned.size() == 3);
  CHECK(aligned[1] == std::pair<size_t, size_t>{1, 1});
  CHECK_THROWS_AS(enumerate_combinations(3, 2, false), ShapeMismatchError);

  auto cross = enumerate_combinations(2, 3, true);
  REQUIRE(cross.size() == 6);  // source-major
  CHECK(cross[0] == std::pair<size_t, size_t>{0, 0});
  CHECK(cross[2] == std::pair<size_t, size_t>{0, 2});
  CHECK(cross[3] == std::pair<size_t, size_t>{1, 0});
}

TEST_CASE("frozen convolution through both routes") {
  ParameterStore store;
  GradBuffer grads(store);
  Tape tape(store, grads);
  Value s = tape.constant(Tensor::from(Shape::cube(1, 3, 1), {1, 2, 3}));
  Value t = tape.constant(Tensor::from(Shape::cube(1, 3, 1), {4, 5, 6}));
  const float expect[5] = {4, 13, 28, 27, 18};
  for (ConvRoute route : {ConvRoute::naive, ConvRoute::fft}) {
    const Tensor& out = tape.value(interact(tape, s, t, route, false));
    REQUIRE(out.shape() == Shape::cube(1, 5, 1));
    for (int k = 0; k < 5; ++k) CHECK(out.at(k) == doctest::Approx(expect[k]).epsilon(1e-5));
  }
}

TEST_CASE("output length is Is + It - 1 for every length mix") {
  Rng rng = Rng::keyed({81});
  ParameterStore store;
  GradBuffer grads(store);
  Tape tape(store, grads);
  for (uint32_t is : {2u, 3u, 4u, 6u}) {
    for (uint32_t it : {2u, 3u, 5u}) {
      Value s = tape.constant(rand_cube(2, is, 3, rng));
      Value t = tape.constant(rand_cube(2, it, 3, rng));
      const Tensor& out = tape.value(interact(tape, s, t, ConvRoute::fft, false));
      CHECK(out.shape() == Shape::cube(2, is + it - 1, 3));
    }
  }
}

TEST_CASE("position 0 is the anchor-anchor product") {
  Rng rng = Rng::keyed({82});
  ParameterStore store;
  GradBuffer grads(store);
  Tape tape(store, grads);
  Tensor sv = rand_cube(2, 3, 4, rng), tv = rand_cube(2, 4, 4, rng);
  const Tensor& out = tape.value(
      interact(tape, tape.constant(sv), tape.constant(tv), ConvRoute::naive, false));
  for (uint32_t l = 0; l < 2; ++l)
    for (uint32_t e = 0; e < 4; ++e)
      CHECK(out.at(l, 0, e) == doctest::Approx(sv.at(l, 0, e) * tv.at(l, 0, e)).epsilon(1e-6));
}

TEST_CASE("all_pairs crosses rows source-major") {
  Rng rng = Rng::keyed({83});
  ParameterStore store;
  GradBuffer grads(store);
  Tape tape(store, grads);
  Tensor sv = rand_cube(2, 2, 3, rng), tv = rand_cube(3, 2, 3, rng);
  Value s = tape.constant(sv), t = tape.constant(tv);
  const Tensor& all = tape.value(interact(tape, s, t, ConvRoute::naive, true));
  REQUIRE(all.shape() == Shape::cube(6, 3, 3));
  for (uint32_t a = 0; a < 2; ++a) {
    for (uint32_t b = 0; b < 3; ++b) {
      // row a*3+b must equal the aligned interaction of source row a with target row b
      Tensor s1(Shape::cube(1, 2, 3)), t1(Shape::cube(1, 2, 3));
      for (size_t k = 0; k < 6; ++k) {
        s1.at(k) = sv.at(a * 6 + k);
        t1.at(k) = tv.at(b * 6 + k);
      }
      const Tensor& one = tape.value(
          interact(tape, tape.constant(s1), tape.constant(t1), ConvRoute::naive, false));
      for (uint32_t m = 0; m < 3; ++m)
        for (uint32_t e = 0; e < 3; ++e)
          CHECK(all.at(a * 3 + b, m, e) == doctest::Approx(one.at(0, m, e)).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(interact(tape, s, tape.constant(rand_cube(3, 2, 4, rng)), ConvRoute::naive,
                           true),
                  ShapeMismatchError);
}

TEST_CASE("fft route equals naive route, forward and backward") {
  Rng rng = Rng::keyed({84});
  for (bool all_pairs : {false, true}) {
    for (auto [is, it] : {std::pair<uint32_t, uint32_t>{2, 2}, {3, 2}, {4, 6}, {6, 3}}) {
      Tensor sv = rand_cube(3, is, 8, rng), tv = rand_cube(3, it, 8, rng);
      Tensor wv(Shape::cube(all_pairs ? 9 : 3, is + it - 1, 8));
      for (size_t k = 0; k < wv.size(); ++k) wv.at(k) = rng.next_symmetric();

      ParameterStore store;
      uint32_t sp = store.add("s", sv.clone());
      uint32_t tp = store.add("t", tv.clone());
      auto run = [&](ConvRoute route, GradBuffer& grads) {
        Tape tape(store, grads);
        Value y = interact(tape, tape.param(sp), tape.param(tp), route, all_pairs);
        Value loss = tape.sum_all(tape.mul(y, tape.constant(wv)));
        tape.backward(loss);
        return tape.value(y).clone();
      };
      GradBuffer g_naive(store), g_fft(store);
      Tensor y_naive = run(ConvRoute::naive, g_naive);
      Tensor y_fft = run(ConvRoute::fft, g_fft);
      for (size_t k = 0; k < y_naive.size(); ++k)
        CHECK(close(y_fft.at(k), y_naive.at(k), 1e-5, 1e-5));
      for (uint32_t id : {sp, tp})
        for (size_t k = 0; k < (id == sp ? sv.size() : tv.size()); ++k)
          CHECK(close(g_fft.grad(id).at(k), g_naive.grad(id).at(k), 1e-4, 1e-5));
    }
  }
}

TEST_CASE("gradcheck through interact") {
  Rng rng = Rng::keyed({85});
  for (ConvRoute route : {ConvRoute::naive, ConvRoute::fft}) {
    ParameterStore store;
    uint32_t sp = store.add("s", rand_cube(2, 3, 4, rng));
    uint32_t tp = store.add("t", rand_cube(2, 2, 4, rng));
    Tensor w(Shape::cube(2, 4, 4));
    for (size_t k = 0; k < w.size(); ++k) w.at(k) = rng.next_symmetric();
    auto build = [&](Tape& t) {
      Value y = interact(t, t.param(sp), t.param(tp), route, false);
      return t.sum_all(t.mul(y, t.constant(w)));
    };
    GradBuffer grads(store);
    Tape tape(store, grads);
    tape.backward(build(tape));
    auto fwd = [&]() {
      GradBuffer scratch(store);
      Tape t(store, scratch);
      return static_cast<double>(t.value(build(t)).at(0));
    };
    auto res = gradcheck(store, {sp, tp}, grads, fwd, 1e-3f, 1e-3, 1e-3);
    CHECK(res.ok());
  }
}

TEST_CASE("embedding matrix stacks per-position tables") {
  HeteroGraph g = umd_graph();
  Metapath mp = g.parse_metapath("UMD");
  ParameterStore store;
  Rng rng = Rng::keyed({86});
  std::vector<uint32_t> tables;
  for (size_t i = 0; i < 3; ++i) {
    TypeId ty = mp.type_at(i, g);
    tables.push_back(store.add("embed." + std::to_string(i),
                               Tensor::glorot(Shape::mat(g.num_nodes(ty) + 1, 4), rng)));
  }
  Rng srng = Rng::keyed({87});
  PathBatch b = sample_paths(g, {g.type_by_code('U'), 0}, mp, 5, srng);
  GradBuffer grads(store);
  Tape tape(store, grads);
  const Tensor& m = tape.value(build_embedding_matrix(tape, b, tables));
  REQUIRE(m.shape() == Shape::cube(5, 3, 4));
  for (uint32_t row = 0; row < 5; ++row)
    for (uint32_t pos = 0; pos < 3; ++pos)
      for (uint32_t e = 0; e < 4; ++e)
        CHECK(m.at(row, pos, e) == store.value(tables[pos]).at(b.at(row, pos), e));
}

TEST_SUITE_END();
