#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kubo/core.hpp"
#include "kubo/fermi.hpp"
#include "kubo/linalg.hpp"

namespace kubo {

/// Cell structure of a model living on an L^d torus. Basis state index is
/// cell * n_orbitals + orbital, cells in grid_indices(d, L) order.
struct TorusInfo {
  Lattice lattice;
  int L = 0;
  std::vector<Vector> taus;  // orbital offsets inside the cell

  int dim() const { return lattice.dim(); }
  int n_orbitals() const { return static_cast<int>(taus.size()); }
  std::size_t n_cells() const {
    std::size_t c = 1;
    for (int i = 0; i < dim(); ++i) c *= static_cast<std::size_t>(L);
    return c;
  }

  /// Cell offset reduced to {-L/2+1, ..., L/2-1}; an offset of exactly L/2 is
  /// ambiguous on the torus and maps to 0.
  IndexVector minimal_image(const IndexVector& dn) const {
    IndexVector r(dn.size());
    for (int i = 0; i < dn.size(); ++i) {
      int m = ((dn(i) % L) + L) % L;
      if (m > L / 2) m -= L;
      if (2 * m == L) m = 0;
      r(i) = m;
    }
    return r;
  }
};

/// Hamiltonian on a finite Hilbert space together with d_l H = -i[X_l, H].
class FiniteModel {
public:
  FiniteModel() = default;

  /// H and its derivations given directly. No displacement data, so the model
  /// cannot be driven in time.
  FiniteModel(Matrix H, std::vector<Matrix> dH, double volume) : H_(std::move(H)), dH_(std::move(dH)), volume_(volume) {
    check();
  }

  /// Non-periodic model with explicit site positions (rows of `positions`).
  static FiniteModel with_positions(Matrix H, const RealMatrix& positions, double volume) {
    if (positions.rows() != H.rows())
      throw DimensionMismatch("positions must have one row per basis state");
    FiniteModel m;
    m.H_ = std::move(H);
    m.positions_ = positions;
    const Eigen::Index n = m.H_.rows();
    for (Eigen::Index l = 0; l < positions.cols(); ++l) {
      Matrix d(n, n);
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index a = 0; a < n; ++a)
          d(a, b) = imag_unit * (positions(b, l) - positions(a, l)) * m.H_(a, b);
      m.dH_.push_back(std::move(d));
    }
    m.volume_ = volume;
    m.check();
    return m;
  }

  /// Torus model built from hoppings; see TightBindingModel::torus.
  static FiniteModel on_torus(Matrix H, std::vector<Matrix> dH, TorusInfo info) {
    FiniteModel m(std::move(H), std::move(dH), double(info.n_cells()) * info.lattice.cell_volume());
    m.torus_ = std::move(info);
    return m;
  }

  Eigen::Index dim() const { return H_.rows(); }
  int spatial_dim() const { return static_cast<int>(dH_.size()); }
  const Matrix& hamiltonian() const { return H_; }
  const Matrix& derivation(int l) const { return dH_.at(static_cast<std::size_t>(l)); }
  const std::vector<Matrix>& derivations() const { return dH_; }
  double volume() const { return volume_; }

  bool periodic() const { return torus_.has_value(); }
  bool has_positions() const { return positions_.has_value(); }
  bool has_displacements() const { return periodic() || has_positions(); }
  const std::optional<TorusInfo>& torus() const { return torus_; }
  const std::optional<RealMatrix>& positions() const { return positions_; }

  /// True when every entry of H is real.
  bool is_real() const { return H_.size() == 0 || H_.imag().cwiseAbs().maxCoeff() == 0.0; }

  /// Matrix of displacements d_l(a, b) = x_b - x_a (positions) or the
  /// minimal-image hop displacement (torus).
  RealMatrix displacement(int l) const {
    const Eigen::Index n = dim();
    RealMatrix D(n, n);
    if (positions_) {
      for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index a = 0; a < n; ++a) D(a, b) = (*positions_)(b, l) - (*positions_)(a, l);
      return D;
    }
    if (!torus_) throw UnsupportedModel("model carries no position or displacement data");
    const auto& t = *torus_;
    const int N = t.n_orbitals();
    const auto cells = grid_indices(t.dim(), t.L);
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index a = 0; a < n; ++a) {
        const auto& ca = cells[static_cast<std::size_t>(a / N)];
        const auto& cb = cells[static_cast<std::size_t>(b / N)];
        Vector r = t.lattice.cell_position(t.minimal_image(cb - ca));
        D(a, b) = r(l) + t.taus[static_cast<std::size_t>(b % N)](l) - t.taus[static_cast<std::size_t>(a % N)](l);
      }
    return D;
  }

private:
  void check() {
    if (H_.rows() != H_.cols()) throw DimensionMismatch("Hamiltonian must be square");
    if (!(volume_ > 0.0) || !std::isfinite(volume_)) throw ValidationError("volume must be positive");
    if (!is_hermitian(H_)) throw NonHermitianInput("Hamiltonian is not Hermitian");
    H_ = 0.5 * (H_ + H_.adjoint()).eval();
    for (auto& d : dH_) {
      if (d.rows() != H_.rows() || d.cols() != H_.cols())
        throw DimensionMismatch("derivation has the wrong shape");
      if (!is_hermitian(d)) throw NonHermitianInput("derivation of H is not Hermitian");
      d = 0.5 * (d + d.adjoint()).eval();
    }
  }

  Matrix H_;
  std::vector<Matrix> dH_;
  double volume_ = 1.0;
  std::optional<RealMatrix> positions_;
  std::optional<TorusInfo> torus_;
};

/// k -> H(k) with analytic derivatives.
struct BlochModel {
  Lattice lattice;
  int n_bands = 0;
  std::function<Matrix(const Vector&)> h_of_k;
  std::function<Matrix(const Vector&, int)> dh_dk;
  std::string name;

  int dim() const { return lattice.dim(); }
  double cell_volume() const { return lattice.cell_volume(); }
};

struct Orbital {
  std::string label;
  Vector tau;
};

/// <0, from | H | R, to> = value
struct Hopping {
  IndexVector R;
  int from = 0;
  int to = 0;
  cplx value;
};

/// Periodic tight-binding model. The Bloch phase of a hop uses the full
/// displacement R + tau_to - tau_from.
class TightBindingModel {
public:
  TightBindingModel() = default;
  TightBindingModel(Lattice lattice, std::vector<Orbital> orbitals, std::vector<Hopping> hoppings,
                    std::string name = "tight-binding")
      : lattice_(std::move(lattice)), orbitals_(std::move(orbitals)), name_(std::move(name)) {
    const int d = lattice_.dim();
    const int N = n_orbitals();
    if (N < 1) throw ValidationError("model needs at least one orbital");
    for (auto& o : orbitals_) {
      if (o.tau.size() == 0) o.tau = Vector::Zero(d);
      if (o.tau.size() != d) throw DimensionMismatch("orbital '" + o.label + "' offset has wrong dimension");
    }
    // merge duplicates
    std::map<std::vector<int>, cplx> merged;
    for (const auto& h : hoppings) {
      if (h.R.size() != d) throw DimensionMismatch("hopping R has wrong dimension");
      if (h.from < 0 || h.from >= N || h.to < 0 || h.to >= N)
        throw ValidationError("hopping references an unknown orbital");
      merged[key(h.R, h.from, h.to)] += h.value;
    }
    double scale = 1.0;
    for (const auto& [k, v] : merged) scale = std::max(scale, std::abs(v));
    for (const auto& [k, v] : merged) {
      IndexVector R(d);
      for (int i = 0; i < d; ++i) R(i) = k[static_cast<std::size_t>(i)];
      const int from = k[static_cast<std::size_t>(d)];
      const int to = k[static_cast<std::size_t>(d + 1)];
      auto it = merged.find(key(-R, to, from));
      const cplx partner = it == merged.end() ? cplx(0.0) : it->second;
      if (std::abs(partner - std::conj(v)) > 1e-12 * scale) {
        std::string Rs;
        for (int i = 0; i < d; ++i) Rs += (i ? "," : "") + std::to_string(R(i));
        throw NonHermitianInput("hopping R=(" + Rs + ") " + std::to_string(from) + "->" + std::to_string(to) +
                                " lacks a conjugate partner");
      }
      hoppings_.push_back({R, from, to, v});
    }
  }

  const Lattice& lattice() const { return lattice_; }
  const std::vector<Orbital>& orbitals() const { return orbitals_; }
  const std::vector<Hopping>& hoppings() const { return hoppings_; }
  const std::string& name() const { return name_; }
  int n_orbitals() const { return static_cast<int>(orbitals_.size()); }
  int dim() const { return lattice_.dim(); }

  bool is_real() const {
    for (const auto& h : hoppings_)
      if (h.value.imag() != 0.0) return false;
    return true;
  }

  /// Cartesian hop vector R + tau_to - tau_from.
  Vector hop_vector(const Hopping& h) const {
    return lattice_.cell_position(h.R) + orbitals_[static_cast<std::size_t>(h.to)].tau -
           orbitals_[static_cast<std::size_t>(h.from)].tau;
  }

  Matrix h_of_k(const Vector& k) const {
    Matrix H = Matrix::Zero(n_orbitals(), n_orbitals());
    for (const auto& h : hoppings_) H(h.from, h.to) += h.value * std::exp(imag_unit * k.dot(hop_vector(h)));
    return H;
  }

  Matrix dh_dk(const Vector& k, int l) const {
    Matrix D = Matrix::Zero(n_orbitals(), n_orbitals());
    for (const auto& h : hoppings_) {
      const Vector r = hop_vector(h);
      D(h.from, h.to) += imag_unit * r(l) * h.value * std::exp(imag_unit * k.dot(r));
    }
    return D;
  }

  BlochModel bloch() const {
    auto self = std::make_shared<TightBindingModel>(*this);
    BlochModel m;
    m.lattice = lattice_;
    m.n_bands = n_orbitals();
    m.h_of_k = [self](const Vector& k) { return self->h_of_k(k); };
    m.dh_dk = [self](const Vector& k, int l) { return self->dh_dk(k, l); };
    m.name = name_;
    return m;
  }

  /// Finite model on the L^d torus. Each hop contributes its value to
  /// H[(c, from), (c + R mod L, to)] and i * (hop vector)_l * value to d_l H,
  /// so the spectrum equals the Bloch spectrum on the matching k grid.
  FiniteModel torus(int L) const {
    const int d = dim();
    const int N = n_orbitals();
    const auto cells = grid_indices(d, L);
    const Eigen::Index n = static_cast<Eigen::Index>(cells.size()) * N;
    Matrix H = Matrix::Zero(n, n);
    std::vector<Matrix> dH(static_cast<std::size_t>(d), Matrix::Zero(n, n));
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (const auto& h : hoppings_) {
        const std::size_t target = grid_linear_index(cells[c] + h.R, L);
        const Eigen::Index a = static_cast<Eigen::Index>(c) * N + h.from;
        const Eigen::Index b = static_cast<Eigen::Index>(target) * N + h.to;
        H(a, b) += h.value;
        const Vector r = hop_vector(h);
        for (int l = 0; l < d; ++l) dH[static_cast<std::size_t>(l)](a, b) += imag_unit * r(l) * h.value;
      }
    TorusInfo info;
    info.lattice = lattice_;
    info.L = L;
    for (const auto& o : orbitals_) info.taus.push_back(o.tau);
    return FiniteModel::on_torus(std::move(H), std::move(dH), std::move(info));
  }

private:
  static std::vector<int> key(const IndexVector& R, int from, int to) {
    std::vector<int> k(R.data(), R.data() + R.size());
    k.push_back(from);
    k.push_back(to);
    return k;
  }

  Lattice lattice_;
  std::vector<Orbital> orbitals_;
  std::vector<Hopping> hoppings_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Model zoo

/// Free particles on a periodic box of side `box`: diagonal in the Fourier
/// basis k = 2 pi n / box, |n_i| <= cutoff.
inline FiniteModel build_free_gas(double box, int d, int cutoff, const PhysicalConstants& c = {}) {
  c.validate();
  if (cutoff < 1) throw ValidationError("cutoff must be >= 1");
  if (d < 1) throw ValidationError("dimension must be >= 1");
  if (!(box > 0.0)) throw ValidationError("box size must be positive");
  const int side = 2 * cutoff + 1;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) count *= static_cast<std::size_t>(side);
  const Eigen::Index n = static_cast<Eigen::Index>(count);
  Matrix H = Matrix::Zero(n, n);
  std::vector<Matrix> dH(static_cast<std::size_t>(d), Matrix::Zero(n, n));
  IndexVector m = IndexVector::Constant(d, -cutoff);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector k = (2.0 * pi / box) * m.cast<double>();
    H(i, i) = c.hbar * c.hbar * k.squaredNorm() / (2.0 * c.mass);
    for (int l = 0; l < d; ++l) dH[static_cast<std::size_t>(l)](i, i) = c.hbar * c.hbar * k(l) / c.mass;
    for (int j = d - 1; j >= 0; --j) {
      if (++m(j) <= cutoff) break;
      m(j) = -cutoff;
    }
  }
  return FiniteModel(std::move(H), std::move(dH), std::pow(box, d));
}

/// Plane-wave Bloch model hbar^2 (k + G)^2 / 2m + V, basis |G| <= cutoff.
/// V is keyed by integer reciprocal coordinates.
inline BlochModel build_planewave_bloch(const Lattice& lattice, const std::map<std::vector<int>, cplx>& V,
                                        double cutoff, const PhysicalConstants& c = {}) {
  c.validate();
  const int d = lattice.dim();
  for (const auto& [g, v] : V) {
    if (static_cast<int>(g.size()) != d) throw DimensionMismatch("potential key has wrong dimension");
    std::vector<int> mg(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) mg[i] = -g[i];
    auto it = V.find(mg);
    const cplx partner = it == V.end() ? cplx(0.0) : it->second;
    if (std::abs(partner - std::conj(v)) > 1e-12 * std::max(1.0, std::abs(v)))
      throw NonHermitianInput("potential must satisfy V(-G) = conj V(G)");
  }
  // enumerate G within the cutoff; bound the integer range by the smallest
  // singular value of B
  Eigen::JacobiSVD<RealMatrix> svd(lattice.reciprocal());
  const double smin = svd.singularValues()(d - 1);
  const int nmax = static_cast<int>(std::ceil(cutoff / smin)) + 1;
  std::vector<IndexVector> gs;
  IndexVector g = IndexVector::Constant(d, -nmax);
  while (true) {
    if ((lattice.reciprocal() * g.cast<double>()).norm() <= cutoff) gs.push_back(g);
    int j = d - 1;
    for (; j >= 0; --j) {
      if (++g(j) <= nmax) break;
      g(j) = -nmax;
    }
    if (j < 0) break;
  }
  if (gs.empty()) throw EmptyBasis("no reciprocal vectors within the plane-wave cutoff");
  const int N = static_cast<int>(gs.size());
  std::vector<Vector> Gcart;
  for (const auto& gi : gs) Gcart.push_back(lattice.reciprocal() * gi.cast<double>());
  Matrix Vmat = Matrix::Zero(N, N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      IndexVector diff = gs[static_cast<std::size_t>(a)] - gs[static_cast<std::size_t>(b)];
      auto it = V.find(std::vector<int>(diff.data(), diff.data() + d));
      if (it != V.end()) Vmat(a, b) = it->second;
    }
  const double kin = c.hbar * c.hbar / (2.0 * c.mass);
  const double vel = c.hbar * c.hbar / c.mass;
  BlochModel m;
  m.lattice = lattice;
  m.n_bands = N;
  m.h_of_k = [Gcart, Vmat, kin](const Vector& k) {
    Matrix H = Vmat;
    for (std::size_t a = 0; a < Gcart.size(); ++a) {
      const auto i = static_cast<Eigen::Index>(a);
      H(i, i) += kin * (k + Gcart[a]).squaredNorm();
    }
    return H;
  };
  m.dh_dk = [Gcart, vel](const Vector& k, int l) {
    const auto n = static_cast<Eigen::Index>(Gcart.size());
    Matrix D = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) D(a, a) = vel * (k(l) + Gcart[static_cast<std::size_t>(a)](l));
    return D;
  };
  m.name = "planewave";
  return m;
}

/// One free band hbar^2 k^2 / 2m on a cubic lattice (plane-wave model with V = 0
/// and only G = 0 kept).
inline BlochModel free_band_bloch(int d, double a = 1.0, const PhysicalConstants& c = {}) {
  Lattice lat = cubic_lattice(d, a);
  BlochModel m = build_planewave_bloch(lat, {}, 0.5 * 2.0 * pi / a, c);
  m.name = "free-band";
  return m;
}

/// 1D tight-binding chain from blocks H_{0R} (N x N each).
inline TightBindingModel chain_model(const std::map<int, Matrix>& blocks, int n_orbitals, double a = 1.0,
                                     std::string name = "chain") {
  std::vector<Orbital> orbs;
  for (int i = 0; i < n_orbitals; ++i) orbs.push_back({"o" + std::to_string(i), Vector::Zero(1)});
  std::vector<Hopping> hops;
  for (const auto& [R, block] : blocks) {
    if (block.rows() != n_orbitals || block.cols() != n_orbitals)
      throw DimensionMismatch("hopping block has the wrong shape");
    for (int i = 0; i < n_orbitals; ++i)
      for (int j = 0; j < n_orbitals; ++j)
        if (block(i, j) != cplx(0.0)) {
          IndexVector Rv(1);
          Rv(0) = R;
          hops.push_back({Rv, i, j, block(i, j)});
        }
  }
  return TightBindingModel(cubic_lattice(1, a), std::move(orbs), std::move(hops), std::move(name));
}

struct ChainModels {
  TightBindingModel tight_binding;
  FiniteModel finite;
  BlochModel bloch;
};

inline ChainModels build_chain(int L, const std::map<int, Matrix>& blocks, int n_orbitals, double a = 1.0) {
  ChainModels out;
  out.tight_binding = chain_model(blocks, n_orbitals, a);
  out.finite = out.tight_binding.torus(L);
  out.bloch = out.tight_binding.bloch();
  return out;
}

/// Ring with hopping t e^{i flux} to the right neighbour: E(k) = 2t cos(ka + flux).
inline TightBindingModel ring_model(double t = 1.0, double flux = 0.0, double a = 1.0) {
  std::map<int, Matrix> blocks;
  blocks[1] = Matrix::Constant(1, 1, t * std::exp(imag_unit * flux));
  blocks[-1] = Matrix::Constant(1, 1, t * std::exp(-imag_unit * flux));
  return chain_model(blocks, 1, a, flux == 0.0 ? "ring" : "ring-flux");
}

/// Two orbitals per cell, t1 inside the cell and t2 across cells:
/// H(k) = [[0, t1 + t2 e^{-ika}], [c.c., 0]].
inline TightBindingModel dimerized_chain_model(double t1, double t2, double a = 1.0) {
  std::map<int, Matrix> blocks;
  Matrix h0 = Matrix::Zero(2, 2);
  h0(0, 1) = t1;
  h0(1, 0) = t1;
  Matrix hm = Matrix::Zero(2, 2);
  hm(0, 1) = t2;  // A in cell 0 to B in cell -1
  Matrix hp = Matrix::Zero(2, 2);
  hp(1, 0) = t2;
  blocks[0] = h0;
  blocks[-1] = hm;
  blocks[1] = hp;
  return chain_model(blocks, 2, a, "dimer");
}

/// Open chain of n sites at x_j = j a with nearest-neighbour hopping t and
/// optional on-site energies.
inline FiniteModel open_chain(int n_sites, double t, double a = 1.0, const Vector& onsite = Vector()) {
  if (n_sites < 1) throw ValidationError("open chain needs at least one site");
  Matrix H = Matrix::Zero(n_sites, n_sites);
  RealMatrix pos(n_sites, 1);
  for (int j = 0; j < n_sites; ++j) {
    pos(j, 0) = j * a;
    if (onsite.size() == n_sites) H(j, j) = onsite(j);
    if (j + 1 < n_sites) {
      H(j, j + 1) = t;
      H(j + 1, j) = t;
    }
  }
  return FiniteModel::with_positions(std::move(H), pos, n_sites * a);
}

/// mu for a finite model, solving the density condition if needed.
inline double resolve_mu(const OccupationSpec& occ, const FiniteModel& model, const EigenDecomposition& eig) {
  return resolve_mu(occ, std::span<const double>(eig.energies.data(), static_cast<std::size_t>(eig.energies.size())),
                    model.volume());
}

/// -(e / hbar |Omega|) Tr(d_l H Phi(H)) per direction.
inline Vector equilibrium_current(const FiniteModel& model, const OccupationSpec& occ, const PhysicalConstants& c = {}) {
  c.validate();
  occ.validate();
  const int d = model.spatial_dim();
  Vector J = Vector::Zero(d);
  if (model.dim() == 0) return J;
  const auto eig = diagonalize(model.hamiltonian());
  const double mu = resolve_mu(occ, model, eig);
  Vector occ_n(eig.energies.size());
  for (Eigen::Index a = 0; a < occ_n.size(); ++a) occ_n(a) = fermi_dirac(eig.energies(a), occ.beta, mu);
  for (int l = 0; l < d; ++l) {
    const Matrix D = eig.to_eigenbasis(model.derivation(l));
    double tr = 0.0;
    for (Eigen::Index a = 0; a < occ_n.size(); ++a) tr += D(a, a).real() * occ_n(a);
    J(l) = -(c.e_charge / (c.hbar * model.volume())) * tr;
  }
  return J;
}

}  // namespace kubo
