#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fractalvid/dataset.hpp"

using namespace fvid;
using nlohmann::json;

namespace {

/// Scalar from a TOML value string: bool, integer, float, else string.
json scalar(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return s;
}

/// Reads a JSON or TOML config file into a flat object; dashes in keys become underscores.
json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  json j;
  if (path.ends_with(".json")) {
    j = json::parse(in);
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  } else {
    j = json::object();
    for (const auto& item : CLI::ConfigTOML().from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;
      if (item.inputs.size() == 1) {
        j[item.name] = scalar(item.inputs[0]);
      } else {
        json arr = json::array();
        for (const auto& v : item.inputs) arr.push_back(scalar(v));
        j[item.name] = arr;
      }
    }
  }
  json out = json::object();
  for (auto& [k, v] : j.items()) {
    std::string key = k;
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = v;
  }
  return out;
}

/// Options that only override the config file when given on the command line.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    setters_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }
  CLI::Option* flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(flag, *value, help);
    setters_.push_back([opt, value, key](json& j) {
      if (opt->count() > 0) j[key] = *value;
    });
    return opt;
  }
  void apply(json& j) const {
    for (const auto& s : setters_) s(j);
  }

 private:
  std::vector<std::function<void(json&)>> setters_;
};

struct DatasetCommand {
  explicit DatasetCommand(CLI::App* a) : app(a) {}
  CLI::App* app;
  std::string config_path;
  Overrides flags;
};

void add_common(DatasetCommand& c, bool labeled) {
  CLI::App* a = c.app;
  a->add_option("--config", c.config_path, "JSON or TOML config file; flags take precedence");
  c.flags.add<std::uint64_t>(a, "--seed", "seed", "Master seed");
  c.flags.add<std::string>(a, "--out,-o", "out", "Output directory");
  c.flags.add<int>(a, "--workers,-j", "workers", "Worker threads (0 = all cores)");
  c.flags.add<int>(a, "--frames", "frames", "Frames per clip (0 = sampled)");
  c.flags.add<int>(a, "--width", "width", "Frame width");
  c.flags.add<int>(a, "--height", "height", "Frame height");
  c.flags.flag(a, "--raw", "raw", "Also write clip.fvid per clip");
  if (labeled) {
    c.flags.add<int>(a, "--classes", "classes", "Number of classes");
    c.flags.add<int>(a, "--per-class", "per_class", "Instances per class");
  } else {
    c.flags.add<int>(a, "--count,-n", "count", "Number of clips");
  }
}

void add_fractal(DatasetCommand& c) {
  c.flags.add<int>(c.app, "--iterations", "iterations", "Chaos-game iterations per frame (0 = scaled)");
  c.flags.add<std::string>(c.app, "--sigma", "sigma_sampling", "constrained or unconstrained")
      ->check(CLI::IsMember({"constrained", "unconstrained"}));
  c.flags.flag(c.app, "--nonlinear-motion", "nonlinear_motion", "Random interpolants per function");
}

DatasetConfig resolve(const DatasetCommand& c, json base) {
  json j = load_config_file(c.config_path);
  for (auto& [k, v] : base.items()) j[k] = v;
  c.flags.apply(j);
  auto cfg = j.get<DatasetConfig>();
  if (cfg.out.empty()) throw std::invalid_argument("no output directory (use --out)");
  cfg.validate();
  return cfg;
}

int run_generate(const DatasetConfig& cfg) {
  const auto res = generate_dataset(cfg);
  std::cout << "wrote " << res.written << " clips, reused " << res.skipped << ", total "
            << res.manifest.records.size() << " in " << cfg.out << "\n";
  return res.complete ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fractal video dataset generator"};
  app.require_subcommand(1);

  DatasetCommand gen{app.add_subcommand("generate", "Independent fractal clips")};
  add_common(gen, false);
  add_fractal(gen);

  DatasetCommand cls{app.add_subcommand("generate-classes", "Prototype classes with mutated instances")};
  add_common(cls, true);
  add_fractal(cls);

  DatasetCommand alt{app.add_subcommand("alt", "Perlin, octopus or dead-leaves clips")};
  std::string alt_kind_name;
  alt.app->add_option("kind", alt_kind_name, "perlin, octopus or leaves")
      ->required()
      ->check(CLI::IsMember({"perlin", "octopus", "leaves"}));
  add_common(alt, false);
  alt.flags.add<int>(alt.app, "--classes", "classes", "Labeled mode: number of classes");
  alt.flags.add<int>(alt.app, "--per-class", "per_class", "Labeled mode: instances per class");

  CLI::App* aug = app.add_subcommand("augment", "Apply augmentations to an existing dataset");
  std::string aug_in, aug_out, aug_config;
  std::uint64_t aug_seed = 0;
  int aug_workers = 0, aug_epoch = -1;
  double aug_intensity = -1;
  aug->add_option("input", aug_in, "Dataset directory or manifest")->required();
  aug->add_option("--out,-o", aug_out, "Output directory")->required();
  aug->add_option("--config", aug_config, "Augmentation config (JSON or TOML)");
  aug->add_option("--seed", aug_seed, "Augmentation seed");
  aug->add_option("--workers,-j", aug_workers, "Worker threads (0 = all cores)");
  aug->add_option("--epoch", aug_epoch, "Curriculum epoch (sets intensity)");
  aug->add_option("--intensity", aug_intensity, "Magnitude multiplier in [0, 1]")->check(CLI::Range(0.0, 1.0));

  CLI::App* qa = app.add_subcommand("qa", "Occupancy report as JSON on stdout");
  std::string qa_in;
  qa->add_option("manifest", qa_in, "Dataset directory or manifest")->required();

  CLI::App* prev = app.add_subcommand("preview", "Horizontal frame strip of one clip");
  std::string prev_in, prev_out;
  int prev_stride = 1;
  prev->add_option("clip", prev_in, "Clip directory or .fvid file")->required();
  prev->add_option("--stride", prev_stride, "Frame step between panels")->check(CLI::PositiveNumber);
  prev->add_option("--out,-o", prev_out, "Output PNG (default: <clip>_strip.png)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen.app) return run_generate(resolve(gen, json{{"labeled", false}, {"generator", "fractal"}}));
    if (*cls.app) return run_generate(resolve(cls, json{{"labeled", true}, {"generator", "fractal"}}));
    if (*alt.app) {
      json base{{"generator", alt_kind_name}};
      const json file = load_config_file(alt.config_path);
      const bool labeled = alt.app->count("--classes") > 0 || alt.app->count("--per-class") > 0 ||
                           file.value("labeled", false) || file.contains("classes");
      base["labeled"] = labeled;
      return run_generate(resolve(alt, base));
    }
    if (*aug) {
      AugmentConfig acfg = load_config_file(aug_config).get<AugmentConfig>();
      if (aug_epoch >= 0) acfg = at_epoch(acfg, aug_epoch);
      if (aug_intensity >= 0) acfg.intensity = aug_intensity;
      const auto m = augment_dataset(aug_in, aug_out, acfg, aug_seed, aug_workers);
      std::cout << "augmented " << m.records.size() << " clips into " << aug_out << "\n";
      return 0;
    }
    if (*qa) {
      std::cout << qa_json(qa_scan(fs::path(qa_in))).dump(2) << "\n";
      return 0;
    }
    if (*prev) {
      const fs::path in = prev_in;
      const Clip c = fs::is_directory(in) ? read_clip_dir(in) : decode_fvid(read_file(in));
      const auto strip = frame_strip(c, prev_stride);
      fs::path out = prev_out;
      if (out.empty()) {
        fs::path base = in;
        if (!base.has_filename()) base = base.parent_path();
        out = base;
        out.replace_filename(base.filename().string() + "_strip.png");
      }
      write_png(out, strip.pixels.data(), strip.width, strip.height);
      std::cout << out.string() << " (" << (c.frames() + prev_stride - 1) / prev_stride << " panels)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "fvid: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
