#pragma once

// Dataset generation, manifests, resume journal and QA scanning.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fractalvid/altgen.hpp"
#include "fractalvid/augment.hpp"
#include "fractalvid/clip.hpp"
#include "fractalvid/image_io.hpp"
#include "fractalvid/motion.hpp"
#include "fractalvid/parallel.hpp"
#include "fractalvid/random.hpp"
#include "fractalvid/render.hpp"
#include "fractalvid/taxonomy.hpp"

namespace fvid {

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kJournalName = "manifest.jsonl";
inline constexpr const char* kPrototypeName = "prototypes.json";
inline constexpr std::uint64_t kAugmentSalt = 0x6175676d656e7400ULL;
inline constexpr int kAltDefaultFrames = 20;

enum class GeneratorKind { fractal, perlin, octopus, leaves };

NLOHMANN_JSON_SERIALIZE_ENUM(GeneratorKind, {{GeneratorKind::fractal, "fractal"},
                                             {GeneratorKind::perlin, "perlin"},
                                             {GeneratorKind::octopus, "octopus"},
                                             {GeneratorKind::leaves, "leaves"}})

NLOHMANN_JSON_SERIALIZE_ENUM(SigmaSampling, {{SigmaSampling::constrained, "constrained"},
                                             {SigmaSampling::unconstrained, "unconstrained"}})

inline AltKind alt_kind(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::perlin: return AltKind::perlin;
    case GeneratorKind::octopus: return AltKind::octopus;
    case GeneratorKind::leaves: return AltKind::leaves;
    default: throw std::invalid_argument("alt_kind: not an alternative generator");
  }
}

struct DatasetConfig {
  GeneratorKind generator = GeneratorKind::fractal;
  bool labeled = false;
  int classes = 0;
  int per_class = 0;
  int count = 0;       // unlabeled
  int frames = 0;      // 0 -> sampled (fractal) or 20 (alternatives)
  int width = 256;
  int height = 256;
  int iterations = 0;  // 0 -> scaled to the resolution
  std::uint64_t seed = 0;
  SigmaSampling sigma_sampling = SigmaSampling::constrained;
  bool nonlinear_motion = false;
  bool raw = false;
  // Runtime only; never written to the manifest.
  int workers = 0;
  std::string out;

  int total() const { return labeled ? classes * per_class : count; }
  int iterations_per_frame() const { return iterations > 0 ? iterations : scaled_iterations(width, height); }

  void validate() const {
    if (width < 1 || height < 1 || width > 0xffff || height > 0xffff)
      throw std::invalid_argument("DatasetConfig: resolution out of range");
    if (frames < 0 || frames > 0xffff) throw std::invalid_argument("DatasetConfig: frames out of range");
    if (iterations < 0) throw std::invalid_argument("DatasetConfig: negative iterations");
    if (labeled && (classes < 1 || per_class < 1))
      throw std::invalid_argument("DatasetConfig: labeled datasets need classes >= 1 and per_class >= 1");
    if (!labeled && count < 1) throw std::invalid_argument("DatasetConfig: count must be >= 1");
    if (static_cast<long long>(labeled ? classes : 1) * (labeled ? per_class : count) > 1000000000LL)
      throw std::invalid_argument("DatasetConfig: too many clips");
  }
};

/// The reproducibility-relevant part of the config.
inline void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = nlohmann::json{{"generator", c.generator},
                     {"labeled", c.labeled},
                     {"classes", c.classes},
                     {"per_class", c.per_class},
                     {"count", c.count},
                     {"frames", c.frames},
                     {"width", c.width},
                     {"height", c.height},
                     {"iterations", c.iterations},
                     {"seed", c.seed},
                     {"sigma_sampling", c.sigma_sampling},
                     {"nonlinear_motion", c.nonlinear_motion},
                     {"raw", c.raw}};
}

/// Missing keys keep defaults; `workers` and `out` are accepted; anything else is an error.
inline void from_json(const nlohmann::json& j, DatasetConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("DatasetConfig: expected an object");
  const nlohmann::json known = DatasetConfig{};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key) && key != "workers" && key != "out")
      throw std::invalid_argument("DatasetConfig: unknown key '" + key + "'");
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("generator", c.generator);
  read("labeled", c.labeled);
  read("classes", c.classes);
  read("per_class", c.per_class);
  read("count", c.count);
  read("frames", c.frames);
  read("width", c.width);
  read("height", c.height);
  read("iterations", c.iterations);
  read("seed", c.seed);
  read("sigma_sampling", c.sigma_sampling);
  read("nonlinear_motion", c.nonlinear_motion);
  read("raw", c.raw);
  read("workers", c.workers);
  read("out", c.out);
  if (j.contains("generator") && !j.at("generator").is_string())
    throw std::invalid_argument("DatasetConfig: generator must be a string");
  if (j.contains("generator")) {
    const auto g = j.at("generator").get<std::string>();
    if (g != "fractal" && g != "perlin" && g != "octopus" && g != "leaves")
      throw std::invalid_argument("DatasetConfig: unknown generator '" + g + "'");
  }
  if (j.contains("sigma_sampling")) {
    const auto s = j.at("sigma_sampling").get<std::string>();
    if (s != "constrained" && s != "unconstrained")
      throw std::invalid_argument("DatasetConfig: unknown sigma_sampling '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Records

struct OccupancyStats {
  double min = 0, mean = 0, max = 0;
  int flagged_frames = 0;
};

inline OccupancyStats occupancy_stats(const Clip& c, const OccupancyBand& band = {}) {
  OccupancyStats s;
  if (c.frames() == 0) return s;
  s.min = 1.0;
  for (int t = 0; t < c.frames(); ++t) {
    const double o = occupancy(c.frame(t));
    s.min = std::min(s.min, o);
    s.max = std::max(s.max, o);
    s.mean += o / c.frames();
    s.flagged_frames += !band.contains(o);
  }
  return s;
}

inline bool degenerate_clip(const OccupancyStats& s, int frames) {
  return frames > 0 && static_cast<double>(s.flagged_frames) > kDegenerateFrameFraction * frames;
}

struct ClipRecord {
  int id = 0;
  int class_id = -1;
  int instance = -1;
  std::uint64_t seed = 0;
  int frames = 0, height = 0, width = 0;
  GeneratorKind generator = GeneratorKind::fractal;
  int variation = 0;
  int functions = 0;
  std::string path;
  std::string checksum;
  OccupancyStats occupancy;
  bool degenerate = false;
  bool aborted = false;
  int source = -1;
  std::optional<AugTrace> trace;
};

inline void to_json(nlohmann::json& j, const ClipRecord& r) {
  j = nlohmann::json{{"id", r.id},
                     {"class_id", r.class_id},
                     {"instance", r.instance},
                     {"seed", r.seed},
                     {"frames", r.frames},
                     {"height", r.height},
                     {"width", r.width},
                     {"generator", r.generator},
                     {"variation", r.variation},
                     {"functions", r.functions},
                     {"path", r.path},
                     {"checksum", r.checksum},
                     {"occupancy",
                      {{"min", r.occupancy.min},
                       {"mean", r.occupancy.mean},
                       {"max", r.occupancy.max},
                       {"flagged_frames", r.occupancy.flagged_frames}}},
                     {"degenerate", r.degenerate},
                     {"aborted", r.aborted}};
  if (r.source >= 0) j["source"] = r.source;
  if (r.trace) j["trace"] = *r.trace;
}

inline void from_json(const nlohmann::json& j, ClipRecord& r) {
  r.id = j.at("id").get<int>();
  r.class_id = j.at("class_id").get<int>();
  r.instance = j.at("instance").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.frames = j.at("frames").get<int>();
  r.height = j.at("height").get<int>();
  r.width = j.at("width").get<int>();
  r.generator = j.at("generator").get<GeneratorKind>();
  r.variation = j.at("variation").get<int>();
  r.functions = j.at("functions").get<int>();
  r.path = j.at("path").get<std::string>();
  r.checksum = j.at("checksum").get<std::string>();
  const auto& o = j.at("occupancy");
  r.occupancy = {o.at("min").get<double>(), o.at("mean").get<double>(), o.at("max").get<double>(),
                 o.at("flagged_frames").get<int>()};
  r.degenerate = j.at("degenerate").get<bool>();
  r.aborted = j.at("aborted").get<bool>();
  r.source = j.value("source", -1);
  if (j.contains("trace")) r.trace = j.at("trace").get<AugTrace>();
}

struct DatasetManifest {
  int version = kManifestVersion;
  DatasetConfig config;
  nlohmann::json augment;  // null unless produced by augment_dataset
  std::vector<ClipRecord> records;
};

inline nlohmann::json manifest_json(const DatasetManifest& m) {
  nlohmann::json j{{"format_version", m.version},
                   {"master_seed", m.config.seed},
                   {"generator", m.config.generator},
                   {"classes", m.config.labeled ? m.config.classes : 0},
                   {"per_class", m.config.labeled ? m.config.per_class : 0},
                   {"config", m.config},
                   {"records", m.records}};
  if (m.config.labeled && m.config.generator == GeneratorKind::fractal) j["prototypes"] = kPrototypeName;
  if (!m.augment.is_null()) j["augment"] = m.augment;
  return j;
}

inline std::string clip_dir_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%06d", id);
  return buf;
}

inline bool clip_files_exist(const fs::path& root, const ClipRecord& r, bool raw) {
  const fs::path dir = root / r.path;
  for (int t = 0; t < r.frames; ++t)
    if (!fs::exists(dir / frame_name(t))) return false;
  return !raw || fs::exists(dir / kRawName);
}

/// Checks the manifest invariants; returns a list of problems (empty when valid).
inline std::vector<std::string> validate_manifest(const DatasetManifest& m, const fs::path& root) {
  std::vector<std::string> problems;
  if (m.version != kManifestVersion) problems.push_back("unsupported format version");
  if (static_cast<int>(m.records.size()) != m.config.total())
    problems.push_back("record count " + std::to_string(m.records.size()) + " != " + std::to_string(m.config.total()));
  std::vector<bool> seen(m.records.size(), false);
  for (const auto& r : m.records) {
    if (r.id < 0 || r.id >= static_cast<int>(seen.size()) || seen[static_cast<std::size_t>(r.id)]) {
      problems.push_back("bad or duplicate clip id " + std::to_string(r.id));
      continue;
    }
    seen[static_cast<std::size_t>(r.id)] = true;
    if (!clip_files_exist(root, r, m.config.raw)) problems.push_back("missing files for clip " + std::to_string(r.id));
  }
  return problems;
}

inline DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  const auto j = nlohmann::json::parse(in);
  DatasetManifest m;
  m.version = j.at("format_version").get<int>();
  m.config = j.at("config").get<DatasetConfig>();
  if (j.contains("augment")) m.augment = j.at("augment");
  m.records = j.at("records").get<std::vector<ClipRecord>>();
  return m;
}

/// Accepts either a dataset directory or the manifest file itself.
inline fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / kManifestName : p; }

// ---------------------------------------------------------------------------
// Generation

struct GeneratedClip {
  Clip clip;
  ClipRecord record;
};

/// Renders clip `id` of the dataset. `protos` is used in labeled fractal mode.
inline GeneratedClip generate_clip(const DatasetConfig& cfg, int id, const std::vector<ClassPrototype>& protos) {
  GeneratedClip g;
  ClipRecord& r = g.record;
  r.id = id;
  r.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(id));
  r.generator = cfg.generator;
  r.path = clip_dir_name(id);
  if (cfg.labeled) {
    r.class_id = id / cfg.per_class;
    r.instance = id % cfg.per_class;
  }

  if (cfg.generator == GeneratorKind::fractal) {
    ClipParams params;
    if (cfg.labeled) {
      params = mutate_instance(protos.at(static_cast<std::size_t>(r.class_id)), r.instance);
    } else {
      Rng rng(r.seed);
      MotionOptions opt;
      opt.nonlinear_motion = cfg.nonlinear_motion;
      opt.sigma_sampling = cfg.sigma_sampling;
      opt.frames = cfg.frames;
      params = sample_video_decomposed(rng, opt);
      if (id % 2 == 1) params.variation = sample_variation(rng);
    }
    r.variation = params.variation.value();
    r.functions = params.functions;
    try {
      g.clip = render_clip(params, cfg.width, cfg.height, cfg.iterations_per_frame(), r.seed).clip;
    } catch (const RenderAborted&) {
      g.clip = Clip(params.frames, cfg.height, cfg.width);
      r.aborted = true;
    }
  } else {
    const int frames = cfg.frames > 0 ? cfg.frames : kAltDefaultFrames;
    r.variation = -1;
    g.clip = cfg.labeled ? alt_clip(alt_kind(cfg.generator), frames, cfg.height, cfg.width, r.seed, r.class_id,
                                    derive_seed(cfg.seed, static_cast<std::uint64_t>(r.class_id)) ^ kMutationSalt)
                         : alt_clip(alt_kind(cfg.generator), frames, cfg.height, cfg.width, r.seed);
  }

  r.frames = g.clip.frames();
  r.height = g.clip.height();
  r.width = g.clip.width();
  r.checksum = clip_checksum(g.clip);
  r.occupancy = occupancy_stats(g.clip);
  r.degenerate = degenerate_clip(r.occupancy, r.frames);
  return g;
}

struct RunHooks {
  int stop_after = -1;  // stop once this many clips were written in this run
};

struct GenerateResult {
  DatasetManifest manifest;
  int written = 0;   // clips rendered in this run
  int skipped = 0;   // clips reused from a previous run
  bool complete = false;
};

namespace detail {

inline void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

/// Journal lines that parse as records; a torn final line is dropped.
inline std::vector<ClipRecord> read_journal(const fs::path& p) {
  std::vector<ClipRecord> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    try {
      out.push_back(nlohmann::json::parse(line).get<ClipRecord>());
    } catch (const std::exception&) {
    }
  }
  return out;
}

/// Serialized appends of one JSON line per finished clip.
class Journal {
 public:
  explicit Journal(const fs::path& p) : out_(p, std::ios::app) {
    if (!out_) throw std::runtime_error("cannot open journal " + p.string());
  }
  void append(const ClipRecord& r) {
    const std::string line = nlohmann::json(r).dump() + "\n";
    std::lock_guard lock(mutex_);
    out_ << line;
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace detail

/// Generates (or resumes) the dataset described by `cfg` into cfg.out.
inline GenerateResult generate_dataset(const DatasetConfig& cfg, const RunHooks& hooks = {}) {
  cfg.validate();
  const fs::path root = cfg.out;
  if (root.empty()) throw std::invalid_argument("generate_dataset: no output directory");
  detail::ensure_writable_dir(root);

  const nlohmann::json config_json = cfg;
  const fs::path header_path = root / "config.json";
  if (fs::exists(header_path)) {
    const auto previous = nlohmann::json::parse(std::ifstream(header_path));
    if (previous != config_json)
      throw std::runtime_error("output directory holds a dataset with a different config: " + root.string());
  } else {
    write_file_atomic(header_path, config_json.dump(2) + "\n");
  }

  std::vector<ClassPrototype> protos;
  if (cfg.labeled && cfg.generator == GeneratorKind::fractal) {
    MotionOptions opt;
    opt.frames = cfg.frames;
    opt.sigma_sampling = cfg.sigma_sampling;
    protos = sample_prototypes(cfg.classes, cfg.seed, opt);
    write_file_atomic(root / kPrototypeName, prototype_bank_json(protos).dump(2) + "\n");
  }

  const int n = cfg.total();
  std::vector<std::optional<ClipRecord>> done(static_cast<std::size_t>(n));
  std::vector<ClipRecord> previous;
  if (fs::exists(root / kManifestName)) {
    previous = load_manifest(root / kManifestName).records;
  }
  const auto journaled = detail::read_journal(root / kJournalName);
  previous.insert(previous.end(), journaled.begin(), journaled.end());
  for (const auto& r : previous)
    if (r.id >= 0 && r.id < n && clip_files_exist(root, r, cfg.raw)) done[static_cast<std::size_t>(r.id)] = r;

  {
    std::string clean;
    for (const auto& r : done)
      if (r) clean += nlohmann::json(*r).dump() + "\n";
    write_file_atomic(root / kJournalName, clean);
  }

  std::vector<int> todo;
  for (int i = 0; i < n; ++i)
    if (!done[static_cast<std::size_t>(i)]) todo.push_back(i);

  GenerateResult result;
  result.skipped = n - static_cast<int>(todo.size());
  detail::Journal journal(root / kJournalName);
  std::atomic<int> started{0}, written{0};
  auto keep_going = [&] { return hooks.stop_after < 0 || started.load() < hooks.stop_after; };
  parallel_for(
      static_cast<int>(todo.size()), cfg.workers,
      [&](int k) {
        if (hooks.stop_after >= 0 && started.fetch_add(1) >= hooks.stop_after) return;
        const int id = todo[static_cast<std::size_t>(k)];
        auto g = generate_clip(cfg, id, protos);
        write_clip_dir(root / g.record.path, g.clip, cfg.raw);
        journal.append(g.record);
        done[static_cast<std::size_t>(id)] = std::move(g.record);
        ++written;
      },
      keep_going);
  result.written = written.load();

  result.manifest.config = cfg;
  for (auto& r : done)
    if (r) result.manifest.records.push_back(*r);
  result.complete = static_cast<int>(result.manifest.records.size()) == n;
  if (result.complete) write_file_atomic(root / kManifestName, manifest_json(result.manifest).dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// QA

struct QaEntry {
  int id = 0;
  bool missing = false;
  std::string error;
  OccupancyStats occupancy;
  bool degenerate = false;
};

struct QaReport {
  int clips = 0;
  int scanned = 0;
  int degenerate = 0;
  double degenerate_fraction = 0;
  double flagged_frame_fraction = 0;
  std::map<int, int> length_histogram;
  std::vector<QaEntry> entries;
};

inline QaReport qa_scan(const DatasetManifest& m, const fs::path& root, const OccupancyBand& band = {}) {
  QaReport q;
  q.clips = static_cast<int>(m.records.size());
  long frames = 0, flagged = 0;
  for (const auto& r : m.records) {
    QaEntry e;
    e.id = r.id;
    try {
      const Clip c = read_clip_dir(root / r.path);
      e.occupancy = occupancy_stats(c, band);
      e.degenerate = degenerate_clip(e.occupancy, c.frames());
      ++q.scanned;
      q.degenerate += e.degenerate;
      ++q.length_histogram[c.frames()];
      frames += c.frames();
      flagged += e.occupancy.flagged_frames;
    } catch (const std::exception& ex) {
      e.missing = true;
      e.error = ex.what();
    }
    q.entries.push_back(std::move(e));
  }
  if (q.scanned > 0) q.degenerate_fraction = static_cast<double>(q.degenerate) / q.scanned;
  if (frames > 0) q.flagged_frame_fraction = static_cast<double>(flagged) / static_cast<double>(frames);
  return q;
}

inline QaReport qa_scan(const fs::path& manifest_or_dir) {
  const fs::path mp = manifest_path(manifest_or_dir);
  return qa_scan(load_manifest(mp), mp.parent_path());
}

inline nlohmann::json qa_json(const QaReport& q) {
  nlohmann::json hist = nlohmann::json::object();
  for (auto [len, n] : q.length_histogram) hist[std::to_string(len)] = n;
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& e : q.entries) {
    nlohmann::json c{{"id", e.id}, {"missing", e.missing}};
    if (e.missing) {
      c["error"] = e.error;
    } else {
      c["occupancy"] = {{"min", e.occupancy.min}, {"mean", e.occupancy.mean}, {"max", e.occupancy.max}};
      c["flagged_frames"] = e.occupancy.flagged_frames;
      c["degenerate"] = e.degenerate;
    }
    clips.push_back(std::move(c));
  }
  return {{"clips", q.clips},
          {"scanned", q.scanned},
          {"missing", q.clips - q.scanned},
          {"degenerate", q.degenerate},
          {"degenerate_fraction", q.degenerate_fraction},
          {"flagged_frame_fraction", q.flagged_frame_fraction},
          {"length_histogram", hist},
          {"per_clip", clips}};
}

// ---------------------------------------------------------------------------
// Augmenting an existing dataset

/// Donors are the dataset's own clips, loaded on demand.
inline DonorPool dataset_pool(const DatasetManifest& m, const fs::path& root) {
  DonorPool p;
  for (const auto& r : m.records) p.ids.push_back(r.id);
  std::map<int, std::pair<std::string, int>> index;
  for (const auto& r : m.records) index[r.id] = {r.path, r.frames};
  p.load = [index, root](int id) { return read_clip_dir(root / index.at(id).first); };
  p.frames = [index](int id) { return index.at(id).second; };
  return p;
}

/// Writes an augmented copy of the dataset at `out`; each record carries its trace.
inline DatasetManifest augment_dataset(const fs::path& input, const fs::path& out, const AugmentConfig& acfg,
                                       std::uint64_t seed, int workers = 0) {
  acfg.validate();
  const fs::path mp = manifest_path(input);
  const fs::path root = mp.parent_path();
  const DatasetManifest src = load_manifest(mp);
  if (fs::exists(out) && fs::equivalent(out, root)) throw std::invalid_argument("augment: output equals input");
  detail::ensure_writable_dir(out);
  const DonorPool pool = dataset_pool(src, root);

  DatasetManifest dst;
  dst.config = src.config;
  dst.augment = {{"seed", seed}, {"config", acfg}};
  dst.records.resize(src.records.size());
  parallel_for(static_cast<int>(src.records.size()), workers, [&](int i) {
    const ClipRecord& s = src.records[static_cast<std::size_t>(i)];
    Rng rng(derive_seed(seed ^ kAugmentSalt, static_cast<std::uint64_t>(s.id)));
    auto aug = augment_clip(read_clip_dir(root / s.path), pool, acfg, rng);
    ClipRecord r = s;
    r.source = s.id;
    r.trace = std::move(aug.trace);
    r.checksum = clip_checksum(aug.clip);
    r.occupancy = occupancy_stats(aug.clip);
    r.degenerate = degenerate_clip(r.occupancy, r.frames);
    write_clip_dir(out / r.path, aug.clip, src.config.raw);
    dst.records[static_cast<std::size_t>(i)] = std::move(r);
  });
  write_file_atomic(out / kManifestName, manifest_json(dst).dump(2) + "\n");
  return dst;
}

}  // namespace fvid
