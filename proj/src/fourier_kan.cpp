#include "roofseg/fourier_kan.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "roofseg/rng.hpp"

namespace roofseg {

static_assert(std::endian::native == std::endian::little,
              "layer serialization assumes a little-endian host");

FourierKanLayer::FourierKanLayer(int in_dim, int out_dim, int grid_size)
    : in_dim_(in_dim), out_dim_(out_dim), grid_(grid_size) {
  if (in_dim < 1 || out_dim < 1 || grid_size < 1) {
    throw ValidationError("layer dimensions and grid size must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(out_dim) * in_dim * grid_size;
  a_.assign(n, 0.0);
  b_.assign(n, 0.0);
  bias_.assign(out_dim, 0.0);
}

FourierKanLayer FourierKanLayer::random(int in_dim, int out_dim, int grid_size,
                                        std::uint64_t seed) {
  FourierKanLayer layer(in_dim, out_dim, grid_size);
  const double scale = 1.0 / (static_cast<double>(in_dim) * std::sqrt(grid_size));
  std::mt19937_64 gen(seed);
  for (double& v : layer.a_) v = uniform_real(gen, -scale, scale);
  for (double& v : layer.b_) v = uniform_real(gen, -scale, scale);
  return layer;
}

std::vector<double> FourierKanLayer::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim_) {
    throw ValidationError("forward input has dimension " + std::to_string(x.size()) +
                          ", layer expects " + std::to_string(in_dim_));
  }
  std::vector<double> y(bias_.begin(), bias_.end());
  for (int i = 0; i < in_dim_; ++i) {
    for (int k = 1; k <= grid_; ++k) {
      const double ck = std::cos(k * x[i]);
      const double sk = std::sin(k * x[i]);
      for (int o = 0; o < out_dim_; ++o) {
        y[o] += a(o, i, k) * ck + b(o, i, k) * sk;
      }
    }
  }
  return y;
}

FourierKanLayer::Gradients FourierKanLayer::backward(std::span<const double> x,
                                                     std::span<const double> upstream) const {
  if (static_cast<int>(x.size()) != in_dim_) {
    throw ValidationError("backward input has dimension " + std::to_string(x.size()) +
                          ", layer expects " + std::to_string(in_dim_));
  }
  if (static_cast<int>(upstream.size()) != out_dim_) {
    throw ValidationError("upstream gradient has dimension " + std::to_string(upstream.size()) +
                          ", layer expects " + std::to_string(out_dim_));
  }

  Gradients g;
  g.a.assign(a_.size(), 0.0);
  g.b.assign(b_.size(), 0.0);
  g.bias.assign(upstream.begin(), upstream.end());
  g.x.assign(in_dim_, 0.0);

  for (int i = 0; i < in_dim_; ++i) {
    for (int k = 1; k <= grid_; ++k) {
      const double ck = std::cos(k * x[i]);
      const double sk = std::sin(k * x[i]);
      for (int o = 0; o < out_dim_; ++o) {
        const std::size_t idx = flat(o, i, k);
        g.a[idx] = upstream[o] * ck;
        g.b[idx] = upstream[o] * sk;
        g.x[i] += upstream[o] * k * (-a_[idx] * sk + b_[idx] * ck);
      }
    }
  }
  return g;
}

void FourierKanLayer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write layer file " + path.string());
  }
  auto write_i32 = [&](std::int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto write_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  write_i32(in_dim_);
  write_i32(out_dim_);
  write_i32(grid_);
  for (double v : a_) write_f64(v);
  for (double v : b_) write_f64(v);
  for (double v : bias_) write_f64(v);
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

FourierKanLayer FourierKanLayer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open layer file " + path.string());
  }
  auto read_i32 = [&]() {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const std::int32_t in_dim = read_i32();
  const std::int32_t out_dim = read_i32();
  const std::int32_t grid = read_i32();
  if (!in || in_dim < 1 || out_dim < 1 || grid < 1) {
    throw IoError(path.string() + ": malformed layer header");
  }
  FourierKanLayer layer(in_dim, out_dim, grid);
  auto read_block = [&](std::vector<double>& dst) {
    in.read(reinterpret_cast<char*>(dst.data()),
            static_cast<std::streamsize>(dst.size() * sizeof(double)));
  };
  read_block(layer.a_);
  read_block(layer.b_);
  read_block(layer.bias_);
  if (!in || in.gcount() != static_cast<std::streamsize>(layer.bias_.size() * sizeof(double))) {
    throw IoError(path.string() + ": truncated layer payload");
  }
  return layer;
}

Eigen::MatrixXd mask_scores(const Eigen::MatrixXd& superpoint_features,
                            const Eigen::MatrixXd& queries,
                            std::span<const FourierKanLayer> stack) {
  if (stack.empty()) {
    throw ValidationError("mask scoring requires at least one layer");
  }
  if (superpoint_features.cols() != stack.front().in_dim()) {
    throw ValidationError("superpoint feature dimension does not match the first layer");
  }
  for (std::size_t l = 1; l < stack.size(); ++l) {
    if (stack[l].in_dim() != stack[l - 1].out_dim()) {
      throw ValidationError("layer stack dimensions do not chain at layer " + std::to_string(l));
    }
  }
  if (queries.cols() != stack.back().out_dim()) {
    throw ValidationError("query dimension does not match the last layer output");
  }

  const Eigen::Index s_count = superpoint_features.rows();
  Eigen::MatrixXd mask(s_count, stack.back().out_dim());
  std::vector<double> row;
  for (Eigen::Index s = 0; s < s_count; ++s) {
    row.assign(superpoint_features.row(s).begin(), superpoint_features.row(s).end());
    for (const FourierKanLayer& layer : stack) {
      row = layer.forward(row);
    }
    for (Eigen::Index d = 0; d < mask.cols(); ++d) mask(s, d) = row[d];
  }
  return queries * mask.transpose();  // Q x S
}

}  // namespace roofseg
