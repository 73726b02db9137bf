#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kubo/errors.hpp"

namespace kubo {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using IndexVector = Eigen::VectorXi;
using json = nlohmann::ordered_json;

inline constexpr cplx imag_unit{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

/// hbar, e and m. Reduced units by default.
struct PhysicalConstants {
  double hbar = 1.0;
  double e_charge = 1.0;
  double mass = 1.0;

  void validate() const {
    auto ok = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!ok(hbar)) throw ValidationError("hbar must be positive and finite");
    if (!ok(e_charge)) throw ValidationError("e_charge must be positive and finite");
    if (!ok(mass)) throw ValidationError("mass must be positive and finite");
  }
};

/// Bravais lattice. Columns of A are the primitive vectors, B = 2 pi A^{-T}.
class Lattice {
public:
  Lattice() = default;

  int dim() const { return static_cast<int>(A_.rows()); }
  const RealMatrix& direct() const { return A_; }
  const RealMatrix& reciprocal() const { return B_; }
  double cell_volume() const { return volume_; }

  /// Cartesian position of the cell with integer coordinates n.
  Vector cell_position(const IndexVector& n) const { return A_ * n.cast<double>(); }

  friend Lattice reciprocal_of(const RealMatrix& A);

private:
  RealMatrix A_;
  RealMatrix B_;
  double volume_ = 0.0;
};

inline Lattice reciprocal_of(const RealMatrix& A) {
  if (A.rows() < 1 || A.rows() != A.cols())
    throw SingularLattice("lattice matrix must be square with d >= 1");
  if (!A.allFinite()) throw SingularLattice("lattice matrix has non-finite entries");
  Eigen::JacobiSVD<RealMatrix> svd(A);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smax > 0.0) || smin <= smax * 1e-12)
    throw SingularLattice("lattice matrix is singular or badly conditioned");
  Lattice lat;
  lat.A_ = A;
  lat.B_ = 2.0 * pi * A.inverse().transpose();
  lat.volume_ = std::abs(A.determinant());
  return lat;
}

/// Simple cubic lattice a*I in d dimensions.
inline Lattice cubic_lattice(int d, double a = 1.0) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  if (!(a > 0.0)) throw ValidationError("lattice constant must be positive");
  return reciprocal_of(a * RealMatrix::Identity(d, d));
}

/// Integer offsets n in {-L/2, ..., L/2-1}^d, lexicographic with the last
/// component running fastest.
inline std::vector<IndexVector> grid_indices(int d, int L) {
  if (L < 2 || L % 2 != 0)
    throw InvalidResolution("grid size L must be even and >= 2 (got " + std::to_string(L) + ")");
  if (d < 1) throw InvalidResolution("dimension must be >= 1");
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(L);
  std::vector<IndexVector> out;
  out.reserve(count);
  IndexVector n = IndexVector::Constant(d, -L / 2);
  for (std::size_t c = 0; c < count; ++c) {
    out.push_back(n);
    for (int i = d - 1; i >= 0; --i) {
      if (++n(i) < L / 2) break;
      n(i) = -L / 2;
    }
  }
  return out;
}

/// Linear position of n (components taken mod L) in grid_indices order.
inline std::size_t grid_linear_index(const IndexVector& n, int L) {
  std::size_t idx = 0;
  for (int i = 0; i < n.size(); ++i) {
    int m = ((n(i) + L / 2) % L + L) % L;
    idx = idx * static_cast<std::size_t>(L) + static_cast<std::size_t>(m);
  }
  return idx;
}

/// Uniform grid B n / L.
inline std::vector<Vector> k_grid(const Lattice& lattice, int L) {
  const auto idx = grid_indices(lattice.dim(), L);
  std::vector<Vector> ks;
  ks.reserve(idx.size());
  for (const auto& n : idx) ks.push_back(lattice.reciprocal() * n.cast<double>() / double(L));
  return ks;
}

class FrequencyGrid {
public:
  FrequencyGrid() = default;
  explicit FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
      if (!std::isfinite(omegas_[i])) throw InvalidGrid("frequency grid has a non-finite value");
      if (i > 0 && !(omegas_[i] > omegas_[i - 1]))
        throw InvalidGrid("frequency grid must be strictly increasing");
    }
  }

  static FrequencyGrid linspace(double lo, double hi, int count) {
    if (count < 0) throw InvalidGrid("negative point count");
    if (count == 1) return FrequencyGrid({lo});
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      w.push_back(i == count - 1 ? hi : lo + (hi - lo) * double(i) / double(count - 1));
    return FrequencyGrid(std::move(w));
  }

  /// "min:max:count" (endpoints included) or a comma separated list.
  static FrequencyGrid parse(std::string_view text);

  std::size_t size() const { return omegas_.size(); }
  bool empty() const { return omegas_.empty(); }
  double operator[](std::size_t i) const { return omegas_[i]; }
  const std::vector<double>& values() const { return omegas_; }
  auto begin() const { return omegas_.begin(); }
  auto end() const { return omegas_.end(); }

private:
  std::vector<double> omegas_;
};

namespace detail {

inline double parse_double(std::string_view s, std::string_view what) {
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    throw InvalidGrid("cannot parse " + std::string(what) + " '" + buf + "'");
  }
  while (used < buf.size() && std::isspace(static_cast<unsigned char>(buf[used]))) ++used;
  if (used != buf.size()) throw InvalidGrid("trailing characters in " + std::string(what) + " '" + buf + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace detail

inline FrequencyGrid FrequencyGrid::parse(std::string_view text) {
  if (text.find(':') != std::string_view::npos) {
    auto parts = detail::split(text, ':');
    if (parts.size() != 3) throw InvalidGrid("expected min:max:count, got '" + std::string(text) + "'");
    double lo = detail::parse_double(parts[0], "omega_min");
    double hi = detail::parse_double(parts[1], "omega_max");
    double cnt = detail::parse_double(parts[2], "count");
    if (cnt < 0 || cnt != std::floor(cnt)) throw InvalidGrid("count must be a non-negative integer");
    if (cnt > 1 && !(hi > lo)) throw InvalidGrid("omega_max must exceed omega_min");
    return linspace(lo, hi, static_cast<int>(cnt));
  }
  std::vector<double> w;
  if (!text.empty())
    for (auto p : detail::split(text, ',')) w.push_back(detail::parse_double(p, "frequency"));
  return FrequencyGrid(std::move(w));
}

enum class Method { trace, bloch, graphene_closed_form, dynamics_quantum, dynamics_classical };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::trace: return "trace";
    case Method::bloch: return "bloch";
    case Method::graphene_closed_form: return "graphene_closed_form";
    case Method::dynamics_quantum: return "dynamics_quantum";
    case Method::dynamics_classical: return "dynamics_classical";
  }
  return "unknown";
}

/// sigma(omega) tensors plus whatever is needed to reproduce them.
struct ConductivityResult {
  int dim = 0;
  std::vector<double> omegas;
  std::vector<Matrix> sigma;  // one dim x dim tensor per omega
  Method method = Method::trace;
  json metadata = json::object();

  std::size_t size() const { return omegas.size(); }

  void check_finite() const {
    for (const auto& s : sigma)
      if (!s.allFinite()) throw NumericalError("conductivity has non-finite entries");
  }
};

namespace detail {

inline json constants_json(const PhysicalConstants& c) {
  return json{{"hbar", c.hbar}, {"e_charge", c.e_charge}, {"mass", c.mass}};
}

inline json beta_json(double beta) { return std::isinf(beta) ? json("inf") : json(beta); }

}  // namespace detail

}  // namespace kubo
