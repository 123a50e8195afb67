#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace vbsde {

using Complex = std::complex<double>;

/// A point or displacement in R^2 (torus coordinates, period one).
struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x1, -a.x2}; }
  friend Vec2 operator*(double c, Vec2 a) { return {c * a.x1, c * a.x2}; }
  friend bool operator==(Vec2, Vec2) = default;
};

enum class Axis { x1 = 1, x2 = 2 };

/// Throws ConfigError unless n is even and at least 4.
void validate_grid_size(int n);

/// Real samples on the uniform lattice x_j = j/N, stored row-major with the
/// x1 index outermost: values[j1 * N + j2] = g(j1/N, j2/N).
class GridSignal {
 public:
  explicit GridSignal(int n);
  GridSignal(int n, std::vector<double> values);

  int grid_size() const noexcept { return n_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double& operator()(int j1, int j2) { return values_[static_cast<std::size_t>(j1) * n_ + j2]; }
  double operator()(int j1, int j2) const {
    return values_[static_cast<std::size_t>(j1) * n_ + j2];
  }

  double max_abs() const noexcept;

 private:
  int n_;
  std::vector<double> values_;
};

/// Real periodic scalar field on T^2 held as truncated Fourier coefficients.
///
/// Coefficients are stored in FFT index order (index i <-> wavenumber
/// i for i <= N/2, i - N otherwise), x1 index outermost. The transform pair is
///   f(x) = sum_k fhat(k) exp(2 pi i <k,x>),
///   fhat(k) = (1/N^2) sum_j f(x_j) exp(-2 pi i <k,x_j>).
/// Stored coefficients always satisfy fhat(-k) = conj(fhat(k)) (index-wise,
/// so the Nyquist row pairs with itself). When the mean-zero flag is set the
/// k = 0 coefficient is exactly zero.
class ScalarField {
 public:
  explicit ScalarField(int n, bool mean_zero = true);

  /// Validates Hermitian symmetry (relative tolerance 1e-10) and stores the
  /// exactly symmetrized coefficients. Throws DomainError on asymmetric input
  /// or a nonzero mean when mean_zero is requested.
  static ScalarField from_modes(int n, std::vector<Complex> modes, bool mean_zero);

  /// amplitude * sin(2 pi (k1 x1 + k2 x2)) and the cosine counterpart.
  static ScalarField sine(int n, int k1, int k2, double amplitude = 1.0);
  static ScalarField cosine(int n, int k1, int k2, double amplitude = 1.0);

  int grid_size() const noexcept { return n_; }
  bool mean_zero() const noexcept { return mean_zero_; }
  std::span<const Complex> modes() const noexcept { return modes_; }

  /// Coefficient at signed wavenumber (k1, k2), |k_i| <= N/2.
  Complex mode(int k1, int k2) const;

  /// Copy with fhat(0) = 0 and the mean-zero flag set.
  ScalarField projected_mean_zero() const;

  /// True when every stored coefficient is exactly zero.
  bool is_zero() const noexcept;

  /// True if any coefficient with |k_i| = N/2 is nonzero.
  bool has_nyquist_content() const noexcept;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double c);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double c, ScalarField a) { return a *= c; }
  friend ScalarField operator*(ScalarField a, double c) { return a *= c; }

  static int index_of(int k, int n) noexcept { return ((k % n) + n) % n; }
  static int wavenumber_of(int index, int n) noexcept { return index <= n / 2 ? index : index - n; }

 private:
  friend class FieldAccess;
  ScalarField(int n, bool mean_zero, std::vector<Complex> modes);

  int n_;
  bool mean_zero_;
  std::vector<Complex> modes_;
};

/// Internal mutable access used by operator implementations that maintain
/// the ScalarField invariants themselves.
class FieldAccess {
 public:
  static std::vector<Complex>& modes(ScalarField& f) { return f.modes_; }
  static ScalarField make(int n, bool mean_zero, std::vector<Complex> modes) {
    return ScalarField(n, mean_zero, std::move(modes));
  }
};

struct VectorField {
  ScalarField c1;
  ScalarField c2;

  int grid_size() const noexcept { return c1.grid_size(); }
};

ScalarField forward_transform(const GridSignal& g);
GridSignal inverse_transform(const ScalarField& f);

/// Samples of the trigonometric interpolant on a lattice refined by
/// `factor` (zero padding; Nyquist coefficients are split symmetrically).
GridSignal upsample(const ScalarField& f, int factor);

/// Multiplication by 2 pi i k_axis; Nyquist modes are zeroed.
ScalarField partial_derivative(const ScalarField& f, Axis axis);
VectorField gradient(const ScalarField& f);

/// x -> f(x + a). Nyquist modes are zeroed.
ScalarField translate(const ScalarField& f, Vec2 a);

/// (sum over multi-indices |alpha| <= order of ||d^alpha f||^2)^(1/2),
/// computed spectrally; order 0 is the L2 norm. Supports 0 <= order <= 4.
double sobolev_norm(const ScalarField& f, int order);
inline double l2_norm(const ScalarField& f) { return sobolev_norm(f, 0); }

/// Lattice maximum of |f| on a 4x oversampled grid. Approximates the
/// essential supremum from below.
double sup_norm(const ScalarField& f);

/// Exact evaluation of the series at an arbitrary point.
double evaluate(const ScalarField& f, Vec2 x);

/// L2 inner product <f, g> over T^2.
double inner_product(const ScalarField& f, const ScalarField& g);

/// Random real mean-zero field with Gaussian coefficients on |k_i| < N/2,
/// scaled by (1 + |k|^2)^(-decay/2). Deterministic in seed.
ScalarField random_field(int n, std::uint64_t seed, double decay = 0.0);

}  // namespace vbsde
