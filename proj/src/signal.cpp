#include "lse/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace lse {

double Frequency2D::wrap(double f) {
  double w = f - std::floor(f);
  if (w >= 1.0) w = 0.0;  // guards against floor rounding at exact integers
  return w;
}

Frequency2D::Frequency2D(double a, double b) : f1(wrap(a)), f2(wrap(b)) {}

double Frequency2D::axis_dist(double a, double b) {
  double d = std::abs(wrap(a) - wrap(b));
  return std::min(d, 1.0 - d);
}

double Frequency2D::torus_dist(const Frequency2D& other) const {
  double d1 = axis_dist(f1, other.f1);
  double d2 = axis_dist(f2, other.f2);
  return std::hypot(d1, d2);
}

void SpectralSignal::validate() const {
  if (n < 1) throw std::invalid_argument("SpectralSignal: n must be positive");
  if (components.empty())
    throw std::invalid_argument("SpectralSignal: at least one component required");
  if (r() > n * n)
    throw std::invalid_argument("SpectralSignal: component count exceeds n^2");
  for (const auto& [f, d] : components) {
    (void)f;
    if (d == Complex(0.0, 0.0))
      throw std::invalid_argument("SpectralSignal: zero amplitude");
  }
}

SampleSet SampleSet::full(int n) {
  SampleSet s;
  s.n = n;
  s.indices.resize(n * n);
  for (int i = 0; i < n * n; ++i) s.indices[i] = i;
  s.validate();
  return s;
}

SampleSet SampleSet::from_flat(int n, std::vector<int> flat) {
  SampleSet s;
  s.n = n;
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  s.indices = std::move(flat);
  s.validate();
  return s;
}

bool SampleSet::contains(int flat) const {
  return std::binary_search(indices.begin(), indices.end(), flat);
}

void SampleSet::validate() const {
  if (n < 1) throw std::invalid_argument("SampleSet: n must be positive");
  if (indices.empty()) throw std::invalid_argument("SampleSet: empty index set");
  for (int i : indices)
    if (i < 0 || i >= n * n)
      throw std::invalid_argument("SampleSet: index outside J");
}

Eigen::VectorXcd atom1d(double f, int n) {
  if (n < 1) throw std::invalid_argument("atom1d: n must be positive");
  f = Frequency2D::wrap(f);
  Eigen::VectorXcd a(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int m = 0; m < n; ++m) {
    double phase = 2.0 * std::numbers::pi * f * m;
    a(m) = scale * Complex(std::cos(phase), std::sin(phase));
  }
  return a;
}

Eigen::VectorXcd atom2d(const Frequency2D& f, int n) {
  Eigen::VectorXcd a1 = atom1d(f.f1, n);
  Eigen::VectorXcd a2 = atom1d(f.f2, n);
  Eigen::VectorXcd c(n * n);
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2) c(flat_index(k1, k2, n)) = a1(k1) * a2(k2);
  return c;
}

Eigen::VectorXcd synthesize(const SpectralSignal& signal) {
  signal.validate();
  const int n = signal.n;
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n * n);
  for (const auto& [f, d] : signal.components) x += d * atom2d(f, n);
  return x;
}

Eigen::MatrixXcd synthesize_matrix(const SpectralSignal& signal) {
  signal.validate();
  const int n = signal.n;
  const int r = signal.r();
  Eigen::MatrixXcd Y(n, r), Z(n, r);
  Eigen::VectorXcd d(r);
  for (int i = 0; i < r; ++i) {
    Y.col(i) = atom1d(signal.components[i].first.f1, n);
    Z.col(i) = atom1d(signal.components[i].first.f2, n);
    d(i) = signal.components[i].second;
  }
  return Y * d.asDiagonal() * Z.transpose();
}

Observations sample(const Eigen::VectorXcd& x, const SampleSet& set) {
  set.validate();
  if (x.size() != static_cast<Eigen::Index>(set.n) * set.n)
    throw std::invalid_argument("sample: vector dimension does not match set.n");
  Observations obs;
  obs.set = set;
  obs.values.resize(set.size());
  for (int i = 0; i < set.size(); ++i) obs.values(i) = x(set.indices[i]);
  return obs;
}

Eigen::VectorXcd scatter(const Observations& obs) {
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(obs.set.n) * obs.set.n);
  for (int i = 0; i < obs.set.size(); ++i) x(obs.set.indices[i]) = obs.values(i);
  return x;
}

std::string signal_to_json(const SpectralSignal& signal) {
  nlohmann::json j;
  j["n"] = signal.n;
  j["components"] = nlohmann::json::array();
  for (const auto& [f, d] : signal.components)
    j["components"].push_back(
        {{"f1", f.f1}, {"f2", f.f2}, {"re", d.real()}, {"im", d.imag()}});
  return j.dump(2);
}

SpectralSignal signal_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SpectralSignal s;
  s.n = j.at("n").get<int>();
  for (const auto& c : j.at("components")) {
    Frequency2D f(c.at("f1").get<double>(), c.at("f2").get<double>());
    Complex d(c.at("re").get<double>(), c.at("im").get<double>());
    s.components.emplace_back(f, d);
  }
  s.validate();
  return s;
}

}  // namespace lse
