#include "gpmin/operators.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

#include "gpmin/error.hpp"

namespace gpmin {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <class T>
FftwBuffer<T> allocate(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace

struct DiffOperator::Impl {
  explicit Impl(const Grid2D& g) : grid(g) {}
  virtual ~Impl() = default;

  virtual Field laplacian(const Field& u) = 0;
  virtual double kinetic(const Field& u) = 0;
  virtual Field solve_shifted(const Field& rhs, double dt, double shift) = 0;
  virtual Field translate(const Field& u, Point offset) = 0;
  virtual void apply_boundary(Field& u) const = 0;

  Grid2D grid;
};

namespace {

class SpectralImpl final : public DiffOperator::Impl {
 public:
  explicit SpectralImpl(const Grid2D& g)
      : Impl(g), n_(g.n()), half_(g.n() / 2 + 1), real_(allocate<double>(n_ * n_)),
        spec_(allocate<fftw_complex>(n_ * half_)), k2_(n_ * half_), kx_(half_), ky_(n_) {
    const int n = static_cast<int>(n_);
    {
      std::lock_guard lock(planner_mutex());
      forward_.reset(fftw_plan_dft_r2c_2d(n, n, real_.get(), spec_.get(), FFTW_MEASURE));
      backward_.reset(fftw_plan_dft_c2r_2d(n, n, spec_.get(), real_.get(), FFTW_MEASURE));
    }
    const double k0 = std::numbers::pi / g.half_width();
    for (std::size_t i = 0; i < half_; ++i) kx_[i] = k0 * static_cast<double>(i);
    for (std::size_t j = 0; j < n_; ++j) {
      const auto m = j <= n_ / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n_);
      ky_[j] = k0 * static_cast<double>(m);
    }
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < half_; ++i) k2_[j * half_ + i] = kx_[i] * kx_[i] + ky_[j] * ky_[j];
  }

  Field laplacian(const Field& u) override {
    forward(u);
    for (std::size_t k = 0; k < k2_.size(); ++k) {
      spec_[k][0] *= -k2_[k];
      spec_[k][1] *= -k2_[k];
    }
    return backward(1.0 / static_cast<double>(n_ * n_));
  }

  double kinetic(const Field& u) override {
    forward(u);
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < half_; ++i) {
        const std::size_t k = j * half_ + i;
        const double weight = (i == 0 || i == n_ / 2) ? 1.0 : 2.0;
        s += weight * k2_[k] * (spec_[k][0] * spec_[k][0] + spec_[k][1] * spec_[k][1]);
      }
    const double nn = static_cast<double>(n_ * n_);
    return s * grid.cell_area() / nn;
  }

  Field solve_shifted(const Field& rhs, double dt, double shift) override {
    forward(rhs);
    for (std::size_t k = 0; k < k2_.size(); ++k) {
      const double f = 1.0 / (1.0 + dt * (k2_[k] + shift));
      spec_[k][0] *= f;
      spec_[k][1] *= f;
    }
    return backward(1.0 / static_cast<double>(n_ * n_));
  }

  Field translate(const Field& u, Point offset) override {
    forward(u);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < half_; ++i) {
        const std::size_t k = j * half_ + i;
        const std::complex<double> phase = std::polar(1.0, -(kx_[i] * offset.x + ky_[j] * offset.y));
        const std::complex<double> v = std::complex<double>(spec_[k][0], spec_[k][1]) * phase;
        spec_[k][0] = v.real();
        spec_[k][1] = v.imag();
      }
    return backward(1.0 / static_cast<double>(n_ * n_));
  }

  void apply_boundary(Field&) const override {}

 private:
  void forward(const Field& u) {
    check_same_grid(u.grid(), grid);
    std::copy(u.values().begin(), u.values().end(), real_.get());
    fftw_execute(forward_.get());
  }

  Field backward(double scale) {
    fftw_execute(backward_.get());
    Field out(grid);
    for (std::size_t k = 0; k < n_ * n_; ++k) out[k] = real_[k] * scale;
    return out;
  }

  std::size_t n_;
  std::size_t half_;
  FftwBuffer<double> real_;
  FftwBuffer<fftw_complex> spec_;
  std::vector<double> k2_;
  std::vector<double> kx_;
  std::vector<double> ky_;
  Plan forward_;
  Plan backward_;
};

class DirichletImpl final : public DiffOperator::Impl {
 public:
  explicit DirichletImpl(const Grid2D& g)
      : Impl(g), n_(g.n()), m_(g.n() - 1), in_(allocate<double>(m_ * m_)), out_(allocate<double>(m_ * m_)),
        lambda_(m_) {
    const int m = static_cast<int>(m_);
    {
      std::lock_guard lock(planner_mutex());
      plan_.reset(fftw_plan_r2r_2d(m, m, in_.get(), out_.get(), FFTW_RODFT00, FFTW_RODFT00, FFTW_MEASURE));
    }
    const double h2 = g.spacing() * g.spacing();
    for (std::size_t k = 0; k < m_; ++k)
      lambda_[k] = (2.0 - 2.0 * std::cos(std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(n_))) / h2;
  }

  Field laplacian(const Field& u) override {
    check_same_grid(u.grid(), grid);
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Field out(grid);
    for (std::size_t j = 1; j < n_; ++j)
      for (std::size_t i = 1; i < n_; ++i) {
        const double c = u.at(i, j);
        const double e = i + 1 < n_ ? u.at(i + 1, j) : 0.0;
        const double w = i > 1 ? u.at(i - 1, j) : 0.0;
        const double nn = j + 1 < n_ ? u.at(i, j + 1) : 0.0;
        const double s = j > 1 ? u.at(i, j - 1) : 0.0;
        out.at(i, j) = (e + w + nn + s - 4.0 * c) * inv_h2;
      }
    return out;
  }

  double kinetic(const Field& u) override {
    check_same_grid(u.grid(), grid);
    // Sum of squared edge differences; wall nodes count as zero.
    auto value = [&](std::size_t i, std::size_t j) { return (i == 0 || j == 0 || i >= n_ || j >= n_) ? 0.0 : u.at(i, j); };
    double s = 0.0;
    for (std::size_t j = 1; j < n_; ++j)
      for (std::size_t i = 0; i < n_; ++i) {
        const double dx = value(i + 1, j) - value(i, j);
        const double dy = value(j, i + 1) - value(j, i);
        s += dx * dx + dy * dy;
      }
    return s;
  }

  Field solve_shifted(const Field& rhs, double dt, double shift) override {
    check_same_grid(rhs.grid(), grid);
    gather(rhs);
    fftw_execute(plan_.get());
    const double norm = 1.0 / (4.0 * static_cast<double>(n_ * n_));
    for (std::size_t b = 0; b < m_; ++b)
      for (std::size_t a = 0; a < m_; ++a)
        in_[b * m_ + a] = out_[b * m_ + a] * norm / (1.0 + dt * (lambda_[a] + lambda_[b] + shift));
    fftw_execute(plan_.get());
    return scatter();
  }

  Field translate(const Field& u, Point offset) override {
    Field out = resample(u, grid, [&](Point p) { return p - offset; });
    apply_boundary(out);
    return out;
  }

  void apply_boundary(Field& u) const override {
    for (std::size_t k = 0; k < n_; ++k) {
      u.at(k, 0) = 0.0;
      u.at(0, k) = 0.0;
    }
  }

 private:
  void gather(const Field& u) {
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t i = 0; i < m_; ++i) in_[j * m_ + i] = u.at(i + 1, j + 1);
  }

  Field scatter() {
    Field out(grid);
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t i = 0; i < m_; ++i) out.at(i + 1, j + 1) = out_[j * m_ + i];
    return out;
  }

  std::size_t n_;
  std::size_t m_;
  FftwBuffer<double> in_;
  FftwBuffer<double> out_;
  std::vector<double> lambda_;
  Plan plan_;
};

}  // namespace

DiffOperator::DiffOperator(const Grid2D& grid) {
  if (grid.mode() == DerivativeMode::SpectralPeriodic)
    impl_ = std::make_unique<SpectralImpl>(grid);
  else
    impl_ = std::make_unique<DirichletImpl>(grid);
}

DiffOperator::~DiffOperator() = default;
DiffOperator::DiffOperator(DiffOperator&&) noexcept = default;
DiffOperator& DiffOperator::operator=(DiffOperator&&) noexcept = default;

const Grid2D& DiffOperator::grid() const noexcept { return impl_->grid; }
Field DiffOperator::laplacian(const Field& u) { return impl_->laplacian(u); }
double DiffOperator::kinetic(const Field& u) { return impl_->kinetic(u); }
Field DiffOperator::solve_shifted(const Field& rhs, double dt, double shift) {
  return impl_->solve_shifted(rhs, dt, shift);
}
Field DiffOperator::translate(const Field& u, Point offset) { return impl_->translate(u, offset); }
void DiffOperator::apply_boundary(Field& u) const { impl_->apply_boundary(u); }

}  // namespace gpmin
