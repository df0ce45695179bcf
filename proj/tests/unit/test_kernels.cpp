#include <doctest.h>
#include <omp.h>

#include "oracles.hpp"
#include "shaft/kernels/kernels.hpp"

using namespace shaft::kernels;
using oracle::gaussian;

TEST_CASE("dense kernels: parallel equals serial bit for bit") {
  for (const DenseShape s : {DenseShape{1, 1, 1}, DenseShape{64, 2048, 64}, DenseShape{37, 13, 5}}) {
    const auto x = gaussian(s.batch * s.in, 1);
    const auto w = gaussian(s.in * s.out, 2);
    const auto b = gaussian(s.out, 3);
    const auto dy = gaussian(s.batch * s.out, 4);
    std::vector<double> y1(s.batch * s.out), y2(y1.size());
    serial::dense_forward(x, w, b, y1, s);
    parallel::dense_forward(x, w, b, y2, s);
    CHECK(y1 == y2);

    std::vector<double> dw1(w.size(), 7.0), dw2(w.size(), -7.0), db1(s.out, 1.0), db2(s.out, 2.0);
    serial::dense_backward_weights(x, dy, dw1, db1, s);
    parallel::dense_backward_weights(x, dy, dw2, db2, s);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);

    std::vector<double> dx1(x.size(), 3.0), dx2(x.size(), 4.0);
    serial::dense_backward_input(dy, w, dx1, s);
    parallel::dense_backward_input(dy, w, dx2, s);
    CHECK(dx1 == dx2);
  }
}

TEST_CASE("dense forward matches the definition") {
  const DenseShape s{2, 3, 2};
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, w{1, 0, 0, 1, 1, 1}, b{0.5, -0.5};
  std::vector<double> y(4);
  serial::dense_forward(x, w, b, y, s);
  CHECK(y == std::vector<double>{4.5, 4.5, 10.5, 10.5});
}

TEST_CASE("conv kernels: parallel equals serial bit for bit") {
  for (const ConvShape s : {ConvShape{1, 1, 1, 5, 1}, ConvShape{4, 3, 8, 257, 9}, ConvShape{16, 1, 16, 4096, 9}}) {
    const auto x = gaussian(s.batch * s.c_in * s.length, 5);
    const auto w = gaussian(s.c_out * s.c_in * s.kernel, 6);
    const auto b = gaussian(s.c_out, 7);
    const auto dy = gaussian(s.batch * s.c_out * s.length, 8);
    std::vector<double> y1(dy.size()), y2(dy.size());
    serial::conv1d_forward(x, w, b, y1, s);
    parallel::conv1d_forward(x, w, b, y2, s);
    CHECK(y1 == y2);

    std::vector<double> dw1(w.size(), 1.0), dw2(w.size(), 2.0), db1(s.c_out, 3.0), db2(s.c_out, 4.0);
    serial::conv1d_backward_weights(x, dy, dw1, db1, s);
    parallel::conv1d_backward_weights(x, dy, dw2, db2, s);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);

    std::vector<double> dx1(x.size(), 5.0), dx2(x.size(), 6.0);
    serial::conv1d_backward_input(dy, w, dx1, s);
    parallel::conv1d_backward_input(dy, w, dx2, s);
    CHECK(dx1 == dx2);
  }
}

TEST_CASE("conv forward uses zero same padding") {
  const ConvShape s{1, 1, 1, 4, 3};
  const std::vector<double> x{1, 2, 3, 4}, w{1, 1, 1}, b{0};
  std::vector<double> y(4);
  serial::conv1d_forward(x, w, b, y, s);
  CHECK(y == std::vector<double>{3, 6, 9, 7});
}

TEST_CASE("conv backward is the adjoint of forward") {
  // <conv(x), dy> == <x, conv_backward_input(dy)> and == <w, dw> for the weight map
  const ConvShape s{3, 2, 4, 31, 5};
  const auto x = gaussian(s.batch * s.c_in * s.length, 11);
  const auto w = gaussian(s.c_out * s.c_in * s.kernel, 12);
  const auto dy = gaussian(s.batch * s.c_out * s.length, 13);
  const std::vector<double> zero(s.c_out, 0.0);
  std::vector<double> y(dy.size()), dx(x.size()), dw(w.size()), db(s.c_out);
  serial::conv1d_forward(x, w, zero, y, s);
  serial::conv1d_backward_input(dy, w, dx, s);
  serial::conv1d_backward_weights(x, dy, dw, db, s);
  double lhs = 0, rhs = 0, rw = 0, sdy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * dy[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx[i];
  for (std::size_t i = 0; i < w.size(); ++i) rw += w[i] * dw[i];
  for (std::size_t i = 0; i < dy.size(); ++i) sdy += dy[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(lhs == doctest::Approx(rw).epsilon(1e-12));
  double dbs = 0;
  for (double v : db) dbs += v;
  CHECK(dbs == doctest::Approx(sdy).epsilon(1e-12));
}

TEST_CASE("results do not depend on the thread count") {
  const DenseShape s{64, 300, 64};
  const auto x = gaussian(s.batch * s.in, 21), w = gaussian(s.in * s.out, 22), b = gaussian(s.out, 23);
  std::vector<double> y1(s.batch * s.out), y3(y1.size());
  const int keep = omp_get_max_threads();
  omp_set_num_threads(1);
  parallel::dense_forward(x, w, b, y1, s);
  omp_set_num_threads(3);
  parallel::dense_forward(x, w, b, y3, s);
  omp_set_num_threads(keep);
  CHECK(y1 == y3);
}
