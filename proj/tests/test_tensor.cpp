#include <catch2/catch_amalgamated.hpp>

#include "fedgan/tensor.hpp"

using namespace fedgan;

TEST_CASE("shape product and validation", "[tensor]") {
  CHECK(shape_numel({2, 3}) == 6);
  CHECK(shape_numel({5}) == 5);
  CHECK_THROWS_AS(shape_numel({}), ShapeError);
  CHECK_THROWS_AS(shape_numel({2, 0}), ShapeError);
  CHECK_THROWS_AS(shape_numel({-1}), ShapeError);
}

TEST_CASE("data length must equal product of shape", "[tensor]") {
  CHECK_NOTHROW(Tensor({2, 2}, {1.f, 2.f, 3.f, 4.f}));
  CHECK_THROWS_AS(Tensor({2, 2}, {1.f, 2.f, 3.f}), ShapeError);
  CHECK_THROWS_AS(Tensor({3}, {1.f, 2.f, 3.f, 4.f}), ShapeError);
}

TEST_CASE("non-finite entries rejected at construction", "[tensor]") {
  const float nan = std::nanf("");
  const float inf = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(Tensor({2}, {1.f, nan}), ValueError);
  CHECK_THROWS_AS(Tensor({2}, {inf, 0.f}), ValueError);
}

TEST_CASE("zero construction and indexing", "[tensor]") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  t.at(1, 2) = 7.f;
  CHECK(t.data[5] == 7.f);
  CHECK_THROWS_AS(Tensor({6}).rows(), ShapeError);
}

TEST_CASE("gather_rows copies selected rows", "[tensor]") {
  Tensor t({3, 2}, {1.f, 2.f, 3.f, 4.f, 5.f, 6.f});
  Tensor g = gather_rows(t, {2, 0, 2});
  CHECK(g.rows() == 3);
  CHECK(g.at(0, 0) == 5.f);
  CHECK(g.at(1, 1) == 2.f);
  CHECK(g.at(2, 0) == 5.f);
  CHECK_THROWS_AS(gather_rows(t, {3}), ShapeError);
  CHECK_THROWS_AS(gather_rows(t, {}), ShapeError);
}

TEST_CASE("tensor_cast preserves values across precisions", "[tensor]") {
  Tensor t({2}, {0.5f, -2.25f});
  auto d = tensor_cast<double>(t);
  CHECK(d.data[0] == 0.5);
  CHECK(d.data[1] == -2.25);
  auto back = tensor_cast<float>(d);
  CHECK(back.data == t.data);
}
