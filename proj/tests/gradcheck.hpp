#pragma once

// Central-difference gradient checking against the double-precision
// instantiation of the engine. Finite differences on f32 would drown in
// rounding noise long before the 1e-4 bar, so checks run in f64 through
// the same templated code path production uses with floats.

#include <cmath>
#include <vector>

#include "hglab/nn.hpp"
#include "hglab/rng.hpp"

namespace gradcheck {

using hglab::NetT;
using hglab::Ten;

inline double rel_err(double a, double b) {
  const double diff = std::abs(a - b);
  if (diff < 1e-12) return 0.0;
  return diff / std::max({1e-10, std::abs(a), std::abs(b)});
}

inline Ten<double> random_tensor(const std::vector<int>& shape, std::uint64_t seed) {
  Ten<double> t(shape);
  hglab::Rng rng(seed);
  for (auto& v : t.data) v = rng.next_double() * 2.0 - 1.0;
  return t;
}

// J(x, theta) = sum_i c_i * net(x)_i with fixed random weights c, so a
// single backward pass yields every analytic derivative at once.
struct Probe {
  NetT<double>* net;
  Ten<double> x;
  Ten<double> c;

  double value() {
    Ten<double> y = net->forward(x, false);
    double j = 0;
    for (std::size_t i = 0; i < y.data.size(); ++i) j += c.data[i] * y.data[i];
    return j;
  }
};

struct Report {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Checks d J / d v for every parameter and every input element.
inline Report check_net(NetT<double>& net, const std::vector<int>& x_shape, std::uint64_t seed,
                        double h = 1e-6) {
  Probe probe{&net, random_tensor(x_shape, seed), {}};
  {
    Ten<double> y = net.forward(probe.x, false);
    probe.c = random_tensor(y.shape, seed ^ 0xC0FFEEull);
  }

  net.forward(probe.x, true);
  net.zero_grads();
  Ten<double> dx = net.backward(probe.c);

  Report rep;
  auto fd_against = [&](double* value, double analytic) {
    const double keep = *value;
    const double step = h * std::max(1.0, std::abs(keep));
    *value = keep + step;
    const double up = probe.value();
    *value = keep - step;
    const double down = probe.value();
    *value = keep;
    const double fd = (up - down) / (2.0 * step);
    rep.worst = std::max(rep.worst, rel_err(analytic, fd));
    ++rep.checked;
  };

  auto params = net.params();
  auto grads = net.grads();
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t]->data.size(); ++i)
      fd_against(&params[t]->data[i], grads[t]->data[i]);
  for (std::size_t i = 0; i < probe.x.data.size(); ++i)
    fd_against(&probe.x.data[i], dx.data[i]);
  return rep;
}

}  // namespace gradcheck
