#pragma once

// FFTW-backed spectral toolbox on periodic grids. Canonical derivatives are
// Fourier multipliers: gradient components ik_d (Nyquist row zeroed, as the
// odd derivative of the Nyquist mode is sign-ambiguous), Laplacian -|k|^2
// (Nyquist kept). Real transforms (r2c/c2r) throughout; plans use
// FFTW_ESTIMATE so repeated runs are bit-reproducible.

#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "spikelab/grid.hpp"

namespace spikelab {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class SpectralWorkspace {
 public:
  SpectralWorkspace(const Shape& shape, double L) : n_(shape), L_(L) {
    check_shape(shape);
    dim_ = static_cast<int>(shape.size());
    nreal_ = shape_size(shape);
    Shape nc = shape;
    nc.back() = shape.back() / 2 + 1;
    ncplx_ = shape_size(nc);
    ncshape_ = nc;

    real_ = fftw_alloc_real(static_cast<std::size_t>(nreal_));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(ncplx_));
    work_ = fftw_alloc_complex(static_cast<std::size_t>(ncplx_));
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fwd_ = fftw_plan_dft_r2c(dim_, n_.data(), real_, spec_, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_c2r(dim_, n_.data(), work_, real_, FFTW_ESTIMATE);
    }
    if (!fwd_ || !bwd_) throw std::runtime_error("spectral: plan creation failed");

    k_.resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      k_[d].resize(n_[d]);
      for (int m = 0; m < n_[d]; ++m) {
        int ms = (m <= n_[d] / 2) ? m : m - n_[d];
        k_[d][m] = 2.0 * M_PI * ms / L_;
      }
    }
  }

  ~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
    fftw_free(work_);
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  int dim() const { return dim_; }
  const Shape& shape() const { return n_; }
  double L() const { return L_; }
  double h() const { return L_ / n_[0]; }
  Index size() const { return nreal_; }
  double cell_volume() const {
    double v = 1;
    for (int d = 0; d < dim_; ++d) v *= L_ / n_[d];
    return v;
  }

  void laplacian(const GridField& in, GridField& out) {
    forward(in);
    apply_multiplier([&](const std::vector<int>& m, double k2) { (void)m; return -k2; });
    inverse(out);
  }

  // 1 forward + (dim+1) inverse transforms.
  void lap_and_gradient(const GridField& in, GridField& lap, std::vector<GridField>& grad) {
    forward(in);
    apply_multiplier([&](const std::vector<int>&, double k2) { return -k2; });
    inverse(lap);
    grad.resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      grad[d] = GridField(n_);
      derivative_from_saved(d, grad[d]);
    }
  }

  void gradient(const GridField& in, std::vector<GridField>& grad) {
    forward(in);
    grad.resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      grad[d] = GridField(n_);
      derivative_from_saved(d, grad[d]);
    }
  }

  void derivative(const GridField& in, int axis, GridField& out) {
    forward(in);
    derivative_from_saved(axis, out);
  }

  // out = sum_d d/dx_d in[d]; dim forward + 1 inverse transforms.
  void divergence(const std::vector<GridField>& in, GridField& out) {
    std::vector<std::complex<double>> acc(static_cast<std::size_t>(ncplx_), 0.0);
    for (int d = 0; d < dim_; ++d) {
      forward(in[d]);
      Index idx = 0;
      std::vector<int> mi(dim_, 0);
      auto* sp = reinterpret_cast<std::complex<double>*>(spec_);
      for (idx = 0; idx < ncplx_; ++idx) {
        double kd = deriv_k(d, mi[d]);
        acc[static_cast<std::size_t>(idx)] += std::complex<double>(0.0, kd) * sp[idx];
        advance(mi);
      }
    }
    auto* w = reinterpret_cast<std::complex<double>*>(work_);
    std::memcpy(w, acc.data(), sizeof(fftw_complex) * static_cast<std::size_t>(ncplx_));
    inverse(out);
  }

  // Solve (c0 - c2 Lap) u = rhs in Fourier space: divide by (c0 + c2 |k|^2).
  void const_helmholtz_solve(const GridField& rhs, double c0, double c2, GridField& out) {
    forward(rhs);
    apply_multiplier([&](const std::vector<int>&, double k2) { return 1.0 / (c0 + c2 * k2); });
    inverse(out);
  }

  void const_helmholtz_apply(const GridField& in, double c0, double c2, GridField& out) {
    forward(in);
    apply_multiplier([&](const std::vector<int>&, double k2) { return c0 + c2 * k2; });
    inverse(out);
  }

  // ------------------------------------------------------------------
  // Exact trigonometric interpolation (full spectrum; for post-processing,
  // not inner loops). The Nyquist bin of each axis is evaluated as a cosine
  // so the interpolant of real samples stays real.
  struct FullSpectrum {
    Shape n;
    double L = 0;
    std::vector<std::complex<double>> c;  // unsigned index order, size prod(n)
  };

  FullSpectrum full_spectrum(const GridField& f) {
    forward(f);
    FullSpectrum S;
    S.n = n_;
    S.L = L_;
    S.c.assign(static_cast<std::size_t>(nreal_), 0.0);
    auto* sp = reinterpret_cast<std::complex<double>*>(spec_);
    double scale = 1.0 / static_cast<double>(nreal_);
    std::vector<int> mi(dim_, 0);
    for (Index i = 0; i < ncplx_; ++i) {
      std::complex<double> v = sp[i] * scale;
      S.c[static_cast<std::size_t>(ravel(n_, mi))] = v;
      // conjugate-symmetric partner in the last axis
      int ml = mi[dim_ - 1];
      if (ml != 0 && ml != n_[dim_ - 1] / 2) {
        std::vector<int> mj(dim_);
        for (int d = 0; d < dim_; ++d) mj[d] = (mi[d] == 0) ? 0 : n_[d] - mi[d];
        S.c[static_cast<std::size_t>(ravel(n_, mj))] = std::conj(v);
      }
      advance(mi);
    }
    return S;
  }

  std::complex<double> axis_factor(int axis, int m, double x) const {
    double k = std::abs(k_[axis][m]);
    if (m == n_[axis] / 2) return std::complex<double>(std::cos(k * x), 0.0);
    return std::exp(std::complex<double>(0.0, k_[axis][m] * x));
  }

  // Collapse all axes but `axis` at base point x0; returns 1D coefficients
  // C[m] so that u(x0 + t e_axis) = Re sum_m C[m] * axis_factor(axis, m, x0[axis] + t).
  std::vector<std::complex<double>> line_coefficients(const FullSpectrum& S, int axis,
                                                      const std::vector<double>& x0) const {
    std::vector<std::vector<std::complex<double>>> fac(dim_);
    for (int d = 0; d < dim_; ++d) {
      if (d == axis) continue;
      fac[d].resize(n_[d]);
      for (int m = 0; m < n_[d]; ++m) fac[d][m] = axis_factor(d, m, x0[d]);
    }
    std::vector<std::complex<double>> C(n_[axis], 0.0);
    std::vector<int> mi(dim_, 0);
    for (Index i = 0; i < nreal_; ++i) {
      std::complex<double> v = S.c[static_cast<std::size_t>(i)];
      for (int d = 0; d < dim_; ++d) {
        if (d == axis) continue;
        v *= fac[d][mi[d]];
      }
      C[mi[axis]] += v;
      advance_full(mi);
    }
    return C;
  }

  double line_eval(const std::vector<std::complex<double>>& C, int axis, double x) const {
    std::complex<double> s = 0.0;
    for (int m = 0; m < n_[axis]; ++m) s += C[m] * axis_factor(axis, m, x);
    return s.real();
  }

  double point_eval(const FullSpectrum& S, const std::vector<double>& x) const {
    std::complex<double> s = 0.0;
    std::vector<int> mi(dim_, 0);
    for (Index i = 0; i < nreal_; ++i) {
      std::complex<double> v = S.c[static_cast<std::size_t>(i)];
      for (int d = 0; d < dim_; ++d) v *= axis_factor(d, mi[d], x[d]);
      s += v;
      advance_full(mi);
    }
    return s.real();
  }

 private:
  void forward(const GridField& in) {
    if (in.size() != nreal_) throw std::invalid_argument("spectral: shape mismatch");
    std::memcpy(real_, in.data(), sizeof(double) * static_cast<std::size_t>(nreal_));
    fftw_execute_dft_r2c(fwd_, real_, spec_);
  }

  void inverse(GridField& out) {
    if (out.size() != nreal_) out = GridField(n_);
    fftw_execute_dft_c2r(bwd_, work_, real_);
    double scale = 1.0 / static_cast<double>(nreal_);
    for (Index i = 0; i < nreal_; ++i) out[i] = real_[i] * scale;
  }

  template <class Mult>
  void apply_multiplier(Mult mult) {
    auto* sp = reinterpret_cast<std::complex<double>*>(spec_);
    auto* w = reinterpret_cast<std::complex<double>*>(work_);
    std::vector<int> mi(dim_, 0);
    for (Index i = 0; i < ncplx_; ++i) {
      double k2 = 0;
      for (int d = 0; d < dim_; ++d) {
        double kd = k_[d][mi[d]];
        k2 += kd * kd;
      }
      w[i] = sp[i] * mult(mi, k2);
      advance(mi);
    }
  }

  double deriv_k(int axis, int m) const {
    if (m == n_[axis] / 2) return 0.0;  // Nyquist: odd derivative zeroed
    return k_[axis][m];
  }

  void derivative_from_saved(int axis, GridField& out) {
    auto* sp = reinterpret_cast<std::complex<double>*>(spec_);
    auto* w = reinterpret_cast<std::complex<double>*>(work_);
    std::vector<int> mi(dim_, 0);
    for (Index i = 0; i < ncplx_; ++i) {
      w[i] = std::complex<double>(0.0, deriv_k(axis, mi[axis])) * sp[i];
      advance(mi);
    }
    inverse(out);
  }

  // iterate the half-complex index set (last axis truncated)
  void advance(std::vector<int>& mi) const {
    for (int d = dim_ - 1; d >= 0; --d) {
      int lim = (d == dim_ - 1) ? n_[d] / 2 + 1 : n_[d];
      if (++mi[d] < lim) return;
      mi[d] = 0;
    }
  }

  void advance_full(std::vector<int>& mi) const {
    for (int d = dim_ - 1; d >= 0; --d) {
      if (++mi[d] < n_[d]) return;
      mi[d] = 0;
    }
  }

  Shape n_, ncshape_;
  double L_;
  int dim_ = 0;
  Index nreal_ = 0, ncplx_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_complex* work_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::vector<std::vector<double>> k_;
};

}  // namespace spikelab
