#include "roofseg/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "roofseg/io.hpp"

namespace roofseg {

namespace {

struct Field {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> parse;
  std::function<std::string(const RunConfig&)> print;
};

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config field '" + key + "': cannot parse value '" + value + "'");
  }
  return v;
}

std::vector<Field> make_fields() {
  std::vector<Field> fields;
  auto add_int = [&](const char* name, int RunConfig::*member) {
    fields.push_back({name,
                      [name, member](RunConfig& c, const std::string& v) {
                        c.*member = parse_number<int>(name, v);
                      },
                      [member](const RunConfig& c) { return std::to_string(c.*member); }});
  };
  auto add_double = [&](const char* name, double RunConfig::*member) {
    fields.push_back({name,
                      [name, member](RunConfig& c, const std::string& v) {
                        c.*member = parse_number<double>(name, v);
                      },
                      [member](const RunConfig& c) { return format_double(c.*member); }});
  };

  add_int("normals_k", &RunConfig::normals_k);
  add_int("features_k", &RunConfig::features_k);
  add_int("contour_k", &RunConfig::contour_k);
  add_double("tau", &RunConfig::tau);
  add_double("t_dist", &RunConfig::t_dist);
  add_double("t_norm", &RunConfig::t_norm);
  add_int("k_growth", &RunConfig::k_growth);
  add_int("min_region", &RunConfig::min_region);
  add_int("refit_period", &RunConfig::refit_period);
  add_double("lambda", &RunConfig::lambda);
  add_int("k_b", &RunConfig::k_b);
  add_int("local_refine_iters", &RunConfig::local_refine_iters);
  add_int("n_target", &RunConfig::n_target);
  add_int("min_points", &RunConfig::min_points);
  add_double("t_dist_floor", &RunConfig::t_dist_floor);
  add_double("t_norm_floor", &RunConfig::t_norm_floor);
  add_double("iou_threshold", &RunConfig::iou_threshold);
  add_double("keep_fraction", &RunConfig::keep_fraction);
  add_double("spacing", &RunConfig::spacing);
  add_double("max_shift", &RunConfig::max_shift);
  add_double("max_offset", &RunConfig::max_offset);
  add_double("swap_radius", &RunConfig::swap_radius);
  add_int("kan_grid", &RunConfig::kan_grid);
  fields.push_back({"seed",
                    [](RunConfig& c, const std::string& v) {
                      c.seed = parse_number<std::uint64_t>("seed", v);
                    },
                    [](const RunConfig& c) { return std::to_string(c.seed); }});
  add_int("threads", &RunConfig::threads);
  return fields;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = make_fields();
  return table;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.name) {
      f.parse(*this, value);
      return;
    }
  }
  throw ValidationError("unknown config key '" + key + "'");
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    }
    config.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  config.validate();
  return config;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError("config field '" + field + "' " + why);
  };
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  if (normals_k < 3) fail("normals_k", "must be at least 3");
  if (features_k < 3) fail("features_k", "must be at least 3");
  if (contour_k < 4) fail("contour_k", "must be at least 4");
  if (!(tau > 0.0 && tau < kTwoPi)) fail("tau", "must lie in (0, 2*pi)");
  if (!(t_dist > 0.0)) fail("t_dist", "must be positive");
  if (!(t_norm > 0.0 && t_norm <= 1.0)) fail("t_norm", "must lie in (0, 1]");
  if (k_growth < 2) fail("k_growth", "must be at least 2");
  if (min_region < 3) fail("min_region", "must be at least 3");
  if (refit_period < 1) fail("refit_period", "must be at least 1");
  if (!(lambda > 1.0)) fail("lambda", "must be greater than 1");
  if (k_b < 1) fail("k_b", "must be at least 1");
  if (local_refine_iters < 1) fail("local_refine_iters", "must be at least 1");
  if (n_target < 2) fail("n_target", "must be at least 2");
  if (min_points < 1) fail("min_points", "must be at least 1");
  if (!(t_dist_floor > 0.0)) fail("t_dist_floor", "must be positive");
  if (!(t_norm_floor > 0.0)) fail("t_norm_floor", "must be positive");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) fail("iou_threshold", "must lie in (0, 1]");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) fail("keep_fraction", "must lie in (0, 1]");
  if (!(spacing > 0.0)) fail("spacing", "must be positive");
  if (!(max_shift >= 0.0 && max_shift < spacing / 2.0)) {
    fail("max_shift", "must lie in [0, spacing / 2)");
  }
  if (!(max_offset >= 0.0)) fail("max_offset", "must be nonnegative");
  if (!(swap_radius > 0.0)) fail("swap_radius", "must be positive");
  if (kan_grid < 1) fail("kan_grid", "must be at least 1");
  if (threads < 0) fail("threads", "must be nonnegative");
}

std::string RunConfig::to_string() const {
  std::ostringstream out;
  for (const Field& f : fields()) {
    out << f.name << " = " << f.print(*this) << "\n";
  }
  return out.str();
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write config file " + path.string());
  }
  out << to_string();
}

}  // namespace roofseg
