#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include <kcac/kernels.hpp>
#include <kcac/rng.hpp>

using namespace kcac;

namespace {

// Naive reference: y[i][o] = bias[o] + sum_k x[i][k] * wt[k][o], accumulated
// in k order like the production kernel so results can be compared exactly.
void naive_forward(const std::vector<double>& x, const std::vector<double>& wt,
                   const std::vector<double>& bias, std::vector<double>& y,
                   int batch, int in, int out) {
  y.assign(std::size_t(batch) * out, 0.0);
  for (int i = 0; i < batch; ++i) {
    for (int o = 0; o < out; ++o) {
      double acc = bias[std::size_t(o)];
      for (int k = 0; k < in; ++k) {
        acc += x[std::size_t(i) * in + k] * wt[std::size_t(k) * out + o];
      }
      y[std::size_t(i) * out + o] = acc;
    }
  }
}

void naive_backward_input(const std::vector<double>& dy,
                          const std::vector<double>& wt, std::vector<double>& dx,
                          int batch, int in, int out) {
  dx.assign(std::size_t(batch) * in, 0.0);
  for (int i = 0; i < batch; ++i) {
    for (int k = 0; k < in; ++k) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o) {
        acc += dy[std::size_t(i) * out + o] * wt[std::size_t(k) * out + o];
      }
      dx[std::size_t(i) * in + k] = acc;
    }
  }
}

void naive_backward_params(const std::vector<double>& x,
                           const std::vector<double>& dy,
                           std::vector<double>& dwt, std::vector<double>& dbias,
                           int batch, int in, int out) {
  dwt.assign(std::size_t(in) * out, 0.0);
  dbias.assign(std::size_t(out), 0.0);
  for (int k = 0; k < in; ++k) {
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int i = 0; i < batch; ++i) {
        acc += x[std::size_t(i) * in + k] * dy[std::size_t(i) * out + o];
      }
      dwt[std::size_t(k) * out + o] = acc;
    }
  }
  for (int i = 0; i < batch; ++i) {
    for (int o = 0; o < out; ++o) dbias[std::size_t(o)] += dy[std::size_t(i) * out + o];
  }
}

std::vector<double> random_vec(RandomStream& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("linear kernels match a naive reference exactly") {
  RandomStream rng(101);
  const int shapes[][3] = {{1, 1, 1}, {3, 5, 2}, {17, 8, 13}, {64, 21, 33}};
  for (auto [batch, in, out] : shapes) {
    auto x = random_vec(rng, std::size_t(batch) * in);
    auto wt = random_vec(rng, std::size_t(in) * out);
    auto bias = random_vec(rng, std::size_t(out));
    auto dy = random_vec(rng, std::size_t(batch) * out);

    std::vector<double> y(std::size_t(batch) * out), want;
    kernels::serial::linear_forward(x.data(), wt.data(), bias.data(), y.data(),
                                    batch, in, out);
    naive_forward(x, wt, bias, want, batch, in, out);
    CHECK(y == want);

    std::vector<double> dx(std::size_t(batch) * in), want_dx;
    kernels::serial::linear_backward_input(dy.data(), wt.data(), dx.data(),
                                           batch, in, out);
    naive_backward_input(dy, wt, want_dx, batch, in, out);
    CHECK(dx == want_dx);

    std::vector<double> dwt(std::size_t(in) * out);
    std::vector<double> dbias(std::size_t(out), 0.0);
    std::vector<double> want_dwt, want_dbias;
    kernels::serial::linear_backward_params(x.data(), dy.data(), dwt.data(),
                                            dbias.data(), batch, in, out);
    naive_backward_params(x, dy, want_dwt, want_dbias, batch, in, out);
    CHECK(dwt == want_dwt);
    CHECK(dbias == want_dbias);
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  RandomStream rng(202);
  const int shapes[][3] = {{1, 3, 2}, {7, 16, 9}, {128, 24, 64}, {1024, 21, 64}};
  for (auto [batch, in, out] : shapes) {
    auto x = random_vec(rng, std::size_t(batch) * in);
    auto wt = random_vec(rng, std::size_t(in) * out);
    auto bias = random_vec(rng, std::size_t(out));
    auto dy = random_vec(rng, std::size_t(batch) * out);

    std::vector<double> a(std::size_t(batch) * out), b(a);
    kernels::serial::linear_forward(x.data(), wt.data(), bias.data(), a.data(),
                                    batch, in, out);
    kernels::omp::linear_forward(x.data(), wt.data(), bias.data(), b.data(),
                                 batch, in, out);
    CHECK(a == b);

    std::vector<double> dxs(std::size_t(batch) * in), dxp(dxs);
    kernels::serial::linear_backward_input(dy.data(), wt.data(), dxs.data(),
                                           batch, in, out);
    kernels::omp::linear_backward_input(dy.data(), wt.data(), dxp.data(),
                                        batch, in, out);
    CHECK(dxs == dxp);

    std::vector<double> dwts(std::size_t(in) * out);
    std::vector<double> dbs(std::size_t(out), 0.0);
    std::vector<double> dwtp(dwts), dbp(dbs);
    kernels::serial::linear_backward_params(x.data(), dy.data(), dwts.data(),
                                            dbs.data(), batch, in, out);
    kernels::omp::linear_backward_params(x.data(), dy.data(), dwtp.data(),
                                         dbp.data(), batch, in, out);
    CHECK(dwts == dwtp);
    CHECK(dbs == dbp);
  }
}

TEST_CASE("tanh kernel stays within a few ulp of libm over a dense sweep") {
  std::vector<double> xs;
  for (double x = -25.0; x <= 25.0; x += 3.7e-4) xs.push_back(x);
  RandomStream rng(303);
  for (int i = 0; i < 20000; ++i) {
    xs.push_back(rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-12.0, 2.0)));
  }
  std::vector<double> got(xs.size());
  kernels::serial::tanh_forward(xs.data(), got.data(), xs.size());
  double max_rel = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double ref = std::tanh(xs[i]);
    double err = std::abs(got[i] - ref);
    double rel = ref == 0.0 ? err : err / std::abs(ref);
    if (rel > max_rel) max_rel = rel;
  }
  CHECK(max_rel < 5e-15);
}

TEST_CASE("tanh kernel saturates and handles extremes") {
  const double xs[] = {19.1, 50.0, 1e12, -19.1, -50.0, -1e12, 0.0};
  double out[7];
  kernels::serial::tanh_forward(xs, out, 7);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == 1.0);
  CHECK(out[3] == -1.0);
  CHECK(out[4] == -1.0);
  CHECK(out[5] == -1.0);
  CHECK(out[6] == 0.0);
}

TEST_CASE("parallel tanh is bit-identical to serial across chunk boundaries") {
  RandomStream rng(404);
  for (std::size_t n : {std::size_t(1), std::size_t(4095), std::size_t(4096),
                        std::size_t(4097), std::size_t(12289)}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-8.0, 8.0);
    std::vector<double> a(n), b(n);
    kernels::serial::tanh_forward(x.data(), a.data(), n);
    kernels::omp::tanh_forward(x.data(), b.data(), n);
    CHECK(a == b);
  }
}

TEST_CASE("tanh backward applies 1 - a^2 elementwise") {
  const double act[] = {0.0, 0.5, -0.5, 1.0, -1.0};
  const double da[] = {2.0, 2.0, 2.0, 2.0, 2.0};
  double dz[5];
  kernels::serial::tanh_backward(act, da, dz, 5);
  CHECK(dz[0] == 2.0);
  CHECK(dz[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(dz[2] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(dz[3] == 0.0);
  CHECK(dz[4] == 0.0);

  double dzp[5];
  kernels::omp::tanh_backward(act, da, dzp, 5);
  for (int i = 0; i < 5; ++i) CHECK(dz[i] == dzp[i]);
}

TEST_CASE("matrix storage is row-major with zero-initialized resize") {
  Matrix m(2, 3);
  CHECK(m.data.size() == 6);
  for (double v : m.data) CHECK(v == 0.0);
  m.at(1, 2) = 7.0;
  CHECK(m.row(1)[2] == 7.0);
  m.resize(3, 2);
  CHECK(m.data.size() == 6);
  for (double v : m.data) CHECK(v == 0.0);
}
