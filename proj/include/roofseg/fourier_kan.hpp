#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "roofseg/types.hpp"

namespace roofseg {

/// One Kolmogorov-Arnold layer whose learnable univariate functions are
/// truncated Fourier series:
///
///   y[o] = bias[o] + sum_i sum_{k=1..G} a[o][i][k] cos(k x[i])
///                                     + b[o][i][k] sin(k x[i])
///
/// The forward map is 2*pi-periodic in every input coordinate and linear in
/// the coefficients. No training loop lives here; the layer is a verified
/// kernel with analytic gradients.
class FourierKanLayer {
 public:
  FourierKanLayer(int in_dim, int out_dim, int grid_size);

  /// Coefficients uniform in [-1/(in_dim*sqrt(G)), +1/(in_dim*sqrt(G))],
  /// bias zero; keeps initial outputs O(1) for gradient checks.
  static FourierKanLayer random(int in_dim, int out_dim, int grid_size, std::uint64_t seed);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int grid_size() const { return grid_; }

  /// Cosine / sine coefficient for output o, input i, frequency k in [1, G].
  double& a(int o, int i, int k) { return a_[flat(o, i, k)]; }
  double a(int o, int i, int k) const { return a_[flat(o, i, k)]; }
  double& b(int o, int i, int k) { return b_[flat(o, i, k)]; }
  double b(int o, int i, int k) const { return b_[flat(o, i, k)]; }
  double& bias(int o) { return bias_[o]; }
  double bias(int o) const { return bias_[o]; }

  std::span<const double> a_flat() const { return a_; }
  std::span<const double> b_flat() const { return b_; }
  std::span<const double> bias_flat() const { return bias_; }

  std::vector<double> forward(std::span<const double> x) const;

  struct Gradients {
    std::vector<double> a;     // same flat layout as the coefficients
    std::vector<double> b;
    std::vector<double> bias;  // out_dim
    std::vector<double> x;     // in_dim
  };

  /// Analytic partials contracted with the upstream cotangent.
  Gradients backward(std::span<const double> x, std::span<const double> upstream) const;

  /// Flat binary file: in_dim, out_dim, G as 32-bit little-endian integers,
  /// then a, b, bias as 64-bit little-endian floats in index order.
  void save(const std::filesystem::path& path) const;
  static FourierKanLayer load(const std::filesystem::path& path);

 private:
  std::size_t flat(int o, int i, int k) const {
    return (static_cast<std::size_t>(o) * in_dim_ + i) * grid_ + (k - 1);
  }

  int in_dim_;
  int out_dim_;
  int grid_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> bias_;
};

/// Decoder wiring at toy scale: applies the layer stack to each superpoint
/// feature row, then scores every (query, superpoint) pair by inner product.
/// superpoint_features is S x D, queries is Q x D', result is Q x S.
Eigen::MatrixXd mask_scores(const Eigen::MatrixXd& superpoint_features,
                            const Eigen::MatrixXd& queries,
                            std::span<const FourierKanLayer> stack);

}  // namespace roofseg
