#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "roofseg/config.hpp"
#include "roofseg/degrade.hpp"
#include "roofseg/features.hpp"
#include "roofseg/fourier_kan.hpp"
#include "roofseg/io.hpp"
#include "roofseg/metrics.hpp"
#include "roofseg/postprocess.hpp"
#include "roofseg/rng.hpp"
#include "roofseg/superpoints.hpp"

namespace fs = std::filesystem;
using namespace roofseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;     // validation / I-O errors
constexpr int kExitInternal = 2;  // internal invariant violations

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs, win over the file
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config =
      opts.config_path.empty() ? RunConfig{} : RunConfig::load(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--set expects key=value, got '" + kv + "'");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    config.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (opts.seed.has_value()) config.seed = *opts.seed;
  if (opts.threads.has_value()) config.threads = *opts.threads;
  config.validate();
  return config;
}

void add_common_options(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--config", opts->config_path, "Config file (key = value lines)");
  cmd->add_option("--set", opts->overrides, "Override a config key, e.g. --set lambda=25");
  cmd->add_option("--seed", opts->seed, "Override the config seed");
  cmd->add_option("--threads", opts->threads, "Batch parallelism (0 = all cores)");
}

PointCloud load_cloud(const fs::path& path, bool label_column,
                      std::optional<InstanceLabeling>* labels_out = nullptr) {
  if (path.extension() == ".ply") {
    return load_ply(path);
  }
  XyzContents contents = load_xyz(path, label_column);
  if (labels_out != nullptr) *labels_out = std::move(contents.labeling);
  return std::move(contents.cloud);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  int workers = threads <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : threads;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) {
    throw IoError(dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------

int cmd_features(const fs::path& input, const fs::path& output, bool label_column,
                 const CommonOptions& common) {
  const RunConfig config = resolve_config(common);
  const PointCloud cloud = load_cloud(input, label_column);
  const NeighborIndex index(cloud);
  const auto table =
      feature_table(cloud, index, config.features_k, config.contour_k, config.tau);

  std::ofstream out(output);
  if (!out) throw IoError("cannot write " + output.string());
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c > 0 ? " " : "") << format_double(row[c]);
    }
    out << '\n';
  }
  return kExitOk;
}

int cmd_superpoints(const fs::path& input, const fs::path& output, const std::string& gt_path,
                    bool label_column, std::string quality_path, const CommonOptions& common) {
  const RunConfig config = resolve_config(common);

  std::optional<InstanceLabeling> gt;
  const PointCloud cloud = load_cloud(input, label_column, &gt);
  if (!gt_path.empty()) {
    gt = load_labeling(gt_path, static_cast<std::ptrdiff_t>(cloud.size()));
  }

  const NeighborIndex index(cloud);
  const std::vector<Vec3> normals = cloud.has_normals()
                                        ? cloud.normals
                                        : estimate_normals(cloud, index, config.normals_k).normals;
  const GrowthParams params{config.t_dist, config.t_norm, config.k_growth, config.min_region,
                            config.refit_period};
  const SuperpointPartition coarse = make_coarse(cloud, index, normals, params, config.lambda,
                                                 config.k_b, config.local_refine_iters);
  const SuperpointPartition fine = make_fine(cloud, coarse, config.n_target, config.seed);

  {
    std::ofstream out(output);
    if (!out) throw IoError("cannot write " + output.string());
    for (int gid : group_ids_per_point(fine)) out << gid << '\n';
  }

  if (gt.has_value()) {
    const QualityReport fine_q = superpoint_quality(cloud, fine, *gt);
    const QualityReport coarse_q = superpoint_quality(cloud, coarse, *gt);
    nlohmann::json j;
    j["sample_id"] = cloud.id;
    auto encode = [](const QualityReport& q) {
      return nlohmann::json{{"boundary_purity", q.boundary_purity},
                            {"size_cv", q.size_cv},
                            {"mean_elongation", q.shape.mean},
                            {"median_elongation", q.shape.median},
                            {"groups", q.shape.elongation.size()}};
    };
    j["fine"] = encode(fine_q);
    j["coarse"] = encode(coarse_q);
    if (quality_path.empty()) quality_path = output.string() + ".quality.json";
    std::ofstream out(quality_path);
    if (!out) throw IoError("cannot write " + quality_path);
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_segment(const fs::path& input, const fs::path& output, bool label_column,
                const std::string& labels_path, const std::string& trace_prefix,
                const std::string& scores_path, const CommonOptions& common) {
  const RunConfig config = resolve_config(common);

  const PointCloud cloud = load_cloud(input, label_column);
  std::optional<InstanceLabeling> external;
  if (!labels_path.empty()) {
    external = load_labeling(labels_path, static_cast<std::ptrdiff_t>(cloud.size()));
  }

  const PipelineResult result = run_pipeline(cloud, config, external);
  for (const std::string& warning : result.warnings) {
    std::cerr << "warning: " << warning << '\n';
  }

  save_labeling(result.refined, output);
  if (!trace_prefix.empty()) {
    save_labeling(result.raw, trace_prefix + ".raw.txt");
    save_labeling(result.completed, trace_prefix + ".completed.txt");
    save_labeling(result.refined, trace_prefix + ".refined.txt");
  }
  if (!scores_path.empty()) {
    // The traditional pipeline carries no learned confidences; every
    // surviving instance scores 1.
    std::vector<ScoredInstance> scores;
    for (const InstanceSet& inst : instance_sets(result.refined)) {
      scores.push_back({inst.label, 1.0, 1.0, fuse_scores(1.0, 1.0)});
    }
    save_score_sidecar(scores, scores_path);
  }
  return kExitOk;
}

int cmd_eval(const fs::path& gt_dir, const fs::path& pred_dir, const fs::path& report_path,
             bool allow_missing, const CommonOptions& common) {
  const RunConfig config = resolve_config(common);

  const std::vector<fs::path> gt_files = list_files(gt_dir, ".txt");
  if (gt_files.empty()) {
    throw IoError("no .txt label files in " + gt_dir.string());
  }

  std::vector<std::string> missing;
  std::vector<fs::path> present;
  for (const fs::path& gt_file : gt_files) {
    if (fs::exists(pred_dir / gt_file.filename())) {
      present.push_back(gt_file);
    } else {
      missing.push_back(gt_file.stem().string());
    }
  }

  std::vector<EvalReport> reports(present.size());
  parallel_for(present.size(), config.threads, [&](std::size_t i) {
    const fs::path& gt_file = present[i];
    const InstanceLabeling gt = load_labeling(gt_file);
    const InstanceLabeling pred = load_labeling(pred_dir / gt_file.filename(),
                                                static_cast<std::ptrdiff_t>(gt.size()));
    reports[i] = evaluate_sample(gt_file.stem().string(), gt, pred, config.iou_threshold);
  });

  const EvalReport aggregate = aggregate_reports(reports);
  std::ofstream out(report_path);
  if (!out) throw IoError("cannot write " + report_path.string());
  out << eval_report_json(reports, aggregate, missing);
  out.close();

  if (!missing.empty() && !allow_missing) {
    std::cerr << "error: " << missing.size() << " sample(s) missing from " << pred_dir.string()
              << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_degrade(const fs::path& input_dir, const fs::path& output_dir,
                const std::string& operator_name, const CommonOptions& common) {
  const RunConfig config = resolve_config(common);

  const std::vector<std::string> known = {"downsample", "density_variation",
                                          "precision_reduction", "corrupt_boundaries"};
  if (std::find(known.begin(), known.end(), operator_name) == known.end()) {
    throw ValidationError("unknown degradation operator '" + operator_name + "'");
  }

  const std::vector<fs::path> inputs = list_files(input_dir, ".xyz");
  if (inputs.empty()) {
    throw IoError("no .xyz samples in " + input_dir.string());
  }
  fs::create_directories(output_dir);

  parallel_for(inputs.size(), config.threads, [&](std::size_t i) {
    const fs::path& path = inputs[i];
    const XyzContents contents = load_xyz(path, true);
    const PointCloud& cloud = contents.cloud;
    const InstanceLabeling& labels = *contents.labeling;
    const std::uint64_t sample_seed = derive_seed(config.seed, fnv1a(path.filename().string()));

    PointCloud out_cloud;
    InstanceLabeling out_labels;
    if (operator_name == "downsample") {
      DownsampleResult r = downsample(cloud, labels, config.keep_fraction, sample_seed);
      out_cloud = std::move(r.cloud);
      out_labels = std::move(r.labeling);
    } else if (operator_name == "density_variation") {
      const auto planes = fit_planes_per_instance(cloud, labels);
      out_cloud = density_variation(cloud, labels, planes, config.spacing, config.max_shift,
                                    sample_seed);
      out_labels = labels;
    } else if (operator_name == "precision_reduction") {
      out_cloud = precision_reduction(cloud, config.max_offset, sample_seed);
      out_labels = labels;
    } else {
      const NeighborIndex index(cloud);
      out_cloud = cloud;
      out_labels = corrupt_boundaries(cloud, index, labels, config.swap_radius, sample_seed);
    }
    save_xyz(out_cloud, output_dir / path.filename(), &out_labels);
  });

  nlohmann::json manifest;
  manifest["operator"] = operator_name;
  manifest["seed"] = config.seed;
  nlohmann::json params;
  if (operator_name == "downsample") {
    params["keep_fraction"] = config.keep_fraction;
  } else if (operator_name == "density_variation") {
    params["spacing"] = config.spacing;
    params["max_shift"] = config.max_shift;
  } else if (operator_name == "precision_reduction") {
    params["max_offset"] = config.max_offset;
  } else {
    params["radius"] = config.swap_radius;
  }
  manifest["params"] = params;
  nlohmann::json samples = nlohmann::json::array();
  for (const fs::path& path : inputs) samples.push_back(path.filename().string());
  manifest["samples"] = samples;

  std::ofstream out(output_dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + output_dir.string());
  out << manifest.dump(2) << '\n';
  return kExitOk;
}

int cmd_kan_check(const CommonOptions& common) {
  const RunConfig config = resolve_config(common);
  constexpr int kDraws = 100;
  constexpr double kStep = 1e-5;
  constexpr double kTolerance = 1e-5;

  auto rel_error = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max({1.0, std::abs(analytic), std::abs(numeric)});
  };

  std::mt19937_64 gen(config.seed);
  double max_rel = 0.0;
  for (int draw = 0; draw < kDraws; ++draw) {
    const int in_dim = 1 + static_cast<int>(uniform_index(gen, 5));
    const int out_dim = 1 + static_cast<int>(uniform_index(gen, 4));
    const int grid = 1 + static_cast<int>(uniform_index(gen, config.kan_grid));
    FourierKanLayer layer = FourierKanLayer::random(in_dim, out_dim, grid, gen());

    std::vector<double> x(in_dim), upstream(out_dim);
    for (double& v : x) v = uniform_real(gen, -std::numbers::pi, std::numbers::pi);
    for (double& v : upstream) v = uniform_real(gen, -1.0, 1.0);

    const auto analytic = layer.backward(x, upstream);
    auto loss = [&](const FourierKanLayer& l, std::span<const double> input) {
      const auto y = l.forward(input);
      double acc = 0.0;
      for (int o = 0; o < out_dim; ++o) acc += upstream[o] * y[o];
      return acc;
    };

    for (int o = 0; o < out_dim; ++o) {
      for (int i = 0; i < in_dim; ++i) {
        for (int k = 1; k <= grid; ++k) {
          FourierKanLayer plus = layer, minus = layer;
          plus.a(o, i, k) += kStep;
          minus.a(o, i, k) -= kStep;
          const std::size_t idx = (static_cast<std::size_t>(o) * in_dim + i) * grid + (k - 1);
          max_rel = std::max(
              max_rel, rel_error(analytic.a[idx], (loss(plus, x) - loss(minus, x)) / (2 * kStep)));
          plus = layer;
          minus = layer;
          plus.b(o, i, k) += kStep;
          minus.b(o, i, k) -= kStep;
          max_rel = std::max(
              max_rel, rel_error(analytic.b[idx], (loss(plus, x) - loss(minus, x)) / (2 * kStep)));
        }
      }
      FourierKanLayer plus = layer, minus = layer;
      plus.bias(o) += kStep;
      minus.bias(o) -= kStep;
      max_rel = std::max(
          max_rel, rel_error(analytic.bias[o], (loss(plus, x) - loss(minus, x)) / (2 * kStep)));
    }
    for (int i = 0; i < in_dim; ++i) {
      std::vector<double> plus = x, minus = x;
      plus[i] += kStep;
      minus[i] -= kStep;
      max_rel = std::max(
          max_rel, rel_error(analytic.x[i], (loss(layer, plus) - loss(layer, minus)) / (2 * kStep)));
    }
  }

  std::cout << "kan-check: max relative gradient error " << format_double(max_rel) << " over "
            << kDraws << " draws (tolerance " << format_double(kTolerance) << ")\n";
  return max_rel < kTolerance ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Roof plane instance segmentation toolkit"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string in_path, out_path;
  std::string gt_path, quality_path, labels_path, trace_prefix, scores_path;
  std::string gt_dir, pred_dir, report_path, operator_name;
  bool label_column = false;
  bool allow_missing = false;

  CLI::App* features = app.add_subcommand("features", "Export the per-point feature table");
  features->add_option("input", in_path, "Cloud file (.xyz or .ply)")->required();
  features->add_option("output", out_path, "Feature table output")->required();
  features->add_flag("--label-column", label_column, "Input has a 4th label column (ignored)");
  add_common_options(features, &common);

  CLI::App* superpoints =
      app.add_subcommand("superpoints", "Two-stage superpoint generation");
  superpoints->add_option("input", in_path, "Cloud file (.xyz or .ply)")->required();
  superpoints->add_option("output", out_path, "Partition output (one group id per point)")
      ->required();
  superpoints->add_option("--gt", gt_path, "Ground-truth labels for the quality report");
  superpoints->add_flag("--label-column", label_column,
                        "Read ground truth from a 4th input column");
  superpoints->add_option("--quality", quality_path, "Quality report path");
  add_common_options(superpoints, &common);

  CLI::App* segment = app.add_subcommand("segment", "Full segmentation pipeline");
  segment->add_option("input", in_path, "Cloud file (.xyz or .ply)")->required();
  segment->add_option("output", out_path, "Final labeling output")->required();
  segment->add_flag("--label-column", label_column, "Input has a 4th label column (ignored)");
  segment->add_option("--labels", labels_path, "Ingest external predictions instead of segmenting");
  segment->add_option("--trace", trace_prefix, "Write per-stage labelings under this prefix");
  segment->add_option("--emit-scores", scores_path, "Write an 'id S mS' sidecar");
  add_common_options(segment, &common);

  CLI::App* eval = app.add_subcommand("eval", "Batch evaluation of predictions");
  eval->add_option("gt_dir", gt_dir, "Directory of ground-truth label files")->required();
  eval->add_option("pred_dir", pred_dir, "Directory of predicted label files")->required();
  eval->add_option("report", report_path, "JSON report output")->required();
  eval->add_flag("--allow-missing", allow_missing, "Missing samples do not fail the run");
  add_common_options(eval, &common);

  CLI::App* degrade = app.add_subcommand("degrade", "Apply a dataset degradation operator");
  degrade->add_option("input_dir", gt_dir, "Directory of labeled .xyz samples")->required();
  degrade->add_option("output_dir", pred_dir, "Output directory")->required();
  degrade
      ->add_option("operator", operator_name,
                   "downsample | density_variation | precision_reduction | corrupt_boundaries")
      ->required();
  add_common_options(degrade, &common);

  CLI::App* kan = app.add_subcommand("kan-check", "FourierKAN analytic gradient check");
  add_common_options(kan, &common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (features->parsed()) return cmd_features(in_path, out_path, label_column, common);
    if (superpoints->parsed()) {
      return cmd_superpoints(in_path, out_path, gt_path, label_column, quality_path, common);
    }
    if (segment->parsed()) {
      return cmd_segment(in_path, out_path, label_column, labels_path, trace_prefix, scores_path,
                         common);
    }
    if (eval->parsed()) return cmd_eval(gt_dir, pred_dir, report_path, allow_missing, common);
    if (degrade->parsed()) return cmd_degrade(gt_dir, pred_dir, operator_name, common);
    if (kan->parsed()) return cmd_kan_check(common);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
