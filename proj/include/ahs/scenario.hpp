#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ahs/common.hpp"
#include "ahs/convolve.hpp"
#include "ahs/features.hpp"
#include "ahs/kalman.hpp"
#include "ahs/loop.hpp"
#include "ahs/metrics.hpp"
#include "ahs/nonlinearity.hpp"
#include "ahs/rir.hpp"
#include "ahs/rng.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"
#include "ahs/tensor_io.hpp"
#include "ahs/wav.hpp"

namespace ahs {

struct SampleRange {
  double lo = 0.0;
  double hi = 0.0;

  double draw(Rng& rng) const { return rng.uniform(lo, hi); }

  void validate(const char* what) const {
    if (!(lo <= hi)) {
      throw ConfigError(std::string("experiment: ") + what + " range has lo > hi");
    }
  }
};

// One dataset run: how many scenarios per split, the parameter ranges each
// scenario draws from, and where the corpus and outputs live. The defaults
// describe the standard protocol; a config file overrides fields.
struct ExperimentSpec {
  std::uint64_t seed = 1;
  std::size_t train_count = 10000;
  std::size_t val_count = 300;
  std::size_t test_count = 500;

  SampleRange spr_db{-10.0, 10.0};
  SampleRange snr_db{-10.0, 30.0};
  SampleRange gain{1.0, 3.2};
  SampleRange system_delay_s{0.1, 0.3};
  SampleRange rt60_s{0.0, 0.6};

  StftConfig stft;
  std::size_t kalman_partitions = 4;
  double max_duration_s = 0.0;  // cap per-scenario length; 0 keeps full utterances

  std::string corpus_dir;
  std::string output_dir;

  std::size_t total_count() const { return train_count + val_count + test_count; }

  void validate() const {
    stft.validate();
    spr_db.validate("spr_db");
    snr_db.validate("snr_db");
    gain.validate("gain");
    system_delay_s.validate("system_delay_s");
    rt60_s.validate("rt60_s");
    if (gain.lo < 0.0) throw ConfigError("experiment: gain range must be non-negative");
    if (system_delay_s.lo < 0.0) {
      throw ConfigError("experiment: system delay range must be non-negative");
    }
    if (rt60_s.lo < 0.0) throw ConfigError("experiment: rt60 range must be non-negative");
    if (max_duration_s < 0.0) throw ConfigError("experiment: max_duration_s must be non-negative");
    if (kalman_partitions == 0) throw ConfigError("experiment: kalman_partitions must be positive");
    if (total_count() == 0) throw ConfigError("experiment: all split counts are zero");
  }
};

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["version"] = 1;
  j["seed"] = spec.seed;
  j["counts"] = {{"train", spec.train_count}, {"val", spec.val_count}, {"test", spec.test_count}};
  j["ranges"] = {{"spr_db", {spec.spr_db.lo, spec.spr_db.hi}},
                 {"snr_db", {spec.snr_db.lo, spec.snr_db.hi}},
                 {"gain", {spec.gain.lo, spec.gain.hi}},
                 {"system_delay_s", {spec.system_delay_s.lo, spec.system_delay_s.hi}},
                 {"rt60_s", {spec.rt60_s.lo, spec.rt60_s.hi}}};
  j["stft"] = {{"fft_size", spec.stft.fft_size},
               {"frame_len", spec.stft.frame_len},
               {"hop", spec.stft.hop}};
  j["kalman_partitions"] = spec.kalman_partitions;
  j["max_duration_s"] = spec.max_duration_s;
  j["corpus_dir"] = spec.corpus_dir;
  j["output_dir"] = spec.output_dir;
  return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config: expected a JSON object");
  static const std::vector<std::string> known = {
      "version",           "seed",           "counts",     "ranges",     "stft",
      "kalman_partitions", "max_duration_s", "corpus_dir", "output_dir"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("experiment config: unknown key \"" + key + "\"");
    }
  }
  if (j.contains("version") && j.at("version").get<int>() != 1) {
    throw ConfigError("experiment config: unsupported version");
  }

  ExperimentSpec spec;
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("counts")) {
    const auto& c = j.at("counts");
    if (c.contains("train")) spec.train_count = c.at("train").get<std::size_t>();
    if (c.contains("val")) spec.val_count = c.at("val").get<std::size_t>();
    if (c.contains("test")) spec.test_count = c.at("test").get<std::size_t>();
  }
  if (j.contains("ranges")) {
    const auto& r = j.at("ranges");
    auto range = [&](const char* key, SampleRange fallback) {
      if (!r.contains(key)) return fallback;
      const auto& pair = r.at(key);
      if (!pair.is_array() || pair.size() != 2) {
        throw ConfigError(std::string("experiment config: range ") + key +
                          " must be a [lo, hi] pair");
      }
      return SampleRange{pair.at(0).get<double>(), pair.at(1).get<double>()};
    };
    spec.spr_db = range("spr_db", spec.spr_db);
    spec.snr_db = range("snr_db", spec.snr_db);
    spec.gain = range("gain", spec.gain);
    spec.system_delay_s = range("system_delay_s", spec.system_delay_s);
    spec.rt60_s = range("rt60_s", spec.rt60_s);
  }
  if (j.contains("stft")) {
    const auto& s = j.at("stft");
    if (s.contains("fft_size")) spec.stft.fft_size = s.at("fft_size").get<std::size_t>();
    if (s.contains("frame_len")) spec.stft.frame_len = s.at("frame_len").get<std::size_t>();
    if (s.contains("hop")) spec.stft.hop = s.at("hop").get<std::size_t>();
  }
  if (j.contains("kalman_partitions")) {
    spec.kalman_partitions = j.at("kalman_partitions").get<std::size_t>();
  }
  if (j.contains("max_duration_s")) spec.max_duration_s = j.at("max_duration_s").get<double>();
  if (j.contains("corpus_dir")) spec.corpus_dir = j.at("corpus_dir").get<std::string>();
  if (j.contains("output_dir")) spec.output_dir = j.at("output_dir").get<std::string>();
  return spec;
}

// FNV-1a over the canonical (sorted-key) serialization.
inline std::string spec_hash(const ExperimentSpec& spec) {
  const std::string text = spec_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Scenario seeds are a pure function of the master seed and the scenario's
// global ordinal, so workers can generate in any order and splits can never
// share a seed. Tag 0 is reserved for the corpus partition shuffle.
inline std::uint64_t scenario_seed(std::uint64_t master, std::size_t ordinal) {
  return Rng::mix(master ^ Rng::mix(static_cast<std::uint64_t>(ordinal) + 1));
}

inline std::uint64_t partition_seed(std::uint64_t master) { return Rng::mix(master ^ Rng::mix(0)); }

// Sorted corpus-relative paths of every .wav under dir.
inline std::vector<std::string> list_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("corpus: not a directory: " + dir.string());
  }
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".wav") {
      files.push_back(std::filesystem::relative(entry.path(), dir).generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("corpus: no .wav files under " + dir.string());
  return files;
}

struct CorpusSplit {
  std::vector<std::string> train, val, test;
};

// Shuffles the corpus deterministically and deals out disjoint utterance
// pools, one per split with a nonzero scenario count. Every such split gets
// at least one utterance; the rest are shared out in proportion to the
// scenario counts, largest fractional remainder first.
inline CorpusSplit partition_corpus(std::vector<std::string> files, const ExperimentSpec& spec) {
  const std::size_t counts[3] = {spec.train_count, spec.val_count, spec.test_count};
  std::size_t active = 0;
  for (std::size_t c : counts) active += c > 0 ? 1 : 0;
  if (files.size() < active) {
    throw DataError("corpus: need at least " + std::to_string(active) +
                    " utterances for disjoint splits, found " + std::to_string(files.size()));
  }

  Rng rng(partition_seed(spec.seed));
  for (std::size_t i = files.size(); i > 1; --i) {
    const std::size_t k = std::min(i - 1, static_cast<std::size_t>(rng.uniform01() * i));
    std::swap(files[i - 1], files[k]);
  }

  const double total = static_cast<double>(spec.total_count());
  std::size_t alloc[3] = {0, 0, 0};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] > 0) {
      alloc[i] = 1;
      ++used;
    }
  }
  const std::size_t spare = files.size() - used;
  double frac[3] = {0.0, 0.0, 0.0};
  std::size_t spent = 0;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] == 0) continue;
    const double want = spare * counts[i] / total;
    const std::size_t whole = static_cast<std::size_t>(want);
    alloc[i] += whole;
    frac[i] = want - static_cast<double>(whole);
    spent += whole;
  }
  for (std::size_t left = spare - spent; left > 0; --left) {
    int best = -1;
    for (int i = 0; i < 3; ++i) {
      if (counts[i] == 0) continue;
      if (best < 0 || frac[i] > frac[best]) best = i;
    }
    ++alloc[best];
    frac[best] = -1.0;
  }

  CorpusSplit split;
  auto take = [&](std::size_t n) {
    std::vector<std::string> out(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(out.begin(), out.end());
    files.erase(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  };
  split.train = take(alloc[0]);
  split.val = take(alloc[1]);
  split.test = take(alloc[2]);
  return split;
}

// Everything drawn for one scenario, as recorded in the manifest and in the
// scenario's own metadata file.
struct ScenarioRecord {
  std::string split;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string utterance;
  double gain = 1.0;
  double system_delay_s = 0.0;
  double spr_db = 0.0;
  double snr_db = 0.0;
  double rt60_s = 0.0;
  std::string nonlinearity;
  std::size_t samples = 0;
  int sample_rate = 16000;

  std::string dir() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return split + "/" + buf;
  }
};

inline nlohmann::json record_to_json(const ScenarioRecord& r) {
  return {{"split", r.split},
          {"index", r.index},
          {"seed", r.seed},
          {"utterance", r.utterance},
          {"gain", r.gain},
          {"system_delay_s", r.system_delay_s},
          {"spr_db", r.spr_db},
          {"snr_db", r.snr_db},
          {"rt60_s", r.rt60_s},
          {"nonlinearity", r.nonlinearity},
          {"samples", r.samples},
          {"sample_rate", r.sample_rate}};
}

inline ScenarioRecord record_from_json(const nlohmann::json& j) {
  ScenarioRecord r;
  r.split = j.at("split").get<std::string>();
  r.index = j.at("index").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.utterance = j.at("utterance").get<std::string>();
  r.gain = j.at("gain").get<double>();
  r.system_delay_s = j.at("system_delay_s").get<double>();
  r.spr_db = j.at("spr_db").get<double>();
  r.snr_db = j.at("snr_db").get<double>();
  r.rt60_s = j.at("rt60_s").get<double>();
  r.nonlinearity = j.at("nonlinearity").get<std::string>();
  r.samples = j.at("samples").get<std::size_t>();
  r.sample_rate = j.at("sample_rate").get<int>();
  return r;
}

// One fully synthesized scenario, in memory.
struct ScenarioData {
  ScenarioConfig config;
  TeacherForcedMixture mix;
  TimeSignal drive;  // loudspeaker drive reference used by the preprocessor
  TimeSignal e;      // adaptive-filter output
  ScenarioRecord record;
};

namespace detail {

// The loudspeaker drive under teacher forcing, block by block with the same
// arithmetic the playback chain applies, so preprocessing sees exactly the
// reference that produced d.
inline TimeSignal teacher_forced_drive(const ScenarioConfig& cfg, const TimeSignal& s) {
  const std::size_t n = s.size();
  const std::size_t hop = cfg.stft.hop;
  const std::size_t delay = cfg.delay_samples();

  TimeSignal drive;
  drive.sample_rate = s.sample_rate;
  drive.samples.reserve(((n + hop - 1) / hop) * hop);
  std::vector<double> src(hop);
  for (std::size_t start = 0; start < n; start += hop) {
    delayed_block(s.samples, start, delay, src);
    const double g = block_gain(cfg, start);
    for (std::size_t i = 0; i < hop; ++i) drive.samples.push_back(cfg.nonlinearity(g * src[i]));
  }
  drive.samples.resize(n);
  return drive;
}

}  // namespace detail

// Runs the adaptive feedback canceller over the mixture with the known
// loudspeaker drive as reference and returns its error signal.
inline TimeSignal kalman_preprocess(const TimeSignal& y, const TimeSignal& drive,
                                    const StftConfig& stft, std::size_t partitions) {
  kalman::Config cfg;
  cfg.stft = stft;
  cfg.partitions = partitions;
  return kalman::process_stream(cfg, y, drive).error;
}

// Draws one scenario. The draw order is fixed: utterance, RIR set, system
// delay, gain, nonlinearity, SPR, SNR, then the noise waveform.
inline ScenarioData build_scenario(const ExperimentSpec& spec,
                                   const std::filesystem::path& corpus_root,
                                   const std::vector<std::string>& pool, const std::string& split,
                                   std::size_t index, std::uint64_t seed) {
  if (pool.empty()) throw DataError("build_scenario: empty utterance pool for split " + split);
  Rng rng(seed);

  const std::size_t pick =
      std::min(pool.size() - 1, static_cast<std::size_t>(rng.uniform01() * pool.size()));
  const std::string& utterance = pool[pick];

  RirSamplingRanges ranges;
  ranges.rt60_min = spec.rt60_s.lo;
  ranges.rt60_max = spec.rt60_s.hi;
  const RirSet rirs = sample_rir_set(rng, ranges);

  ScenarioConfig cfg;
  cfg.rirs = rirs;
  cfg.system_delay = spec.system_delay_s.draw(rng);
  cfg.gain = spec.gain.draw(rng);
  cfg.nonlinearity =
      rng.uniform01() < 0.5 ? NonlinearityModel::hard_clip() : NonlinearityModel::sigmoid();
  cfg.spr_db = spec.spr_db.draw(rng);
  cfg.snr_db = spec.snr_db.draw(rng);
  cfg.stft = spec.stft;

  TimeSignal utt = read_wav(corpus_root / utterance);
  if (utt.sample_rate != ranges.sample_rate) {
    throw DataError("corpus: " + utterance + " is " + std::to_string(utt.sample_rate) +
                    " Hz, expected " + std::to_string(ranges.sample_rate));
  }
  std::size_t len = utt.size();
  if (spec.max_duration_s > 0.0) {
    const auto cap = static_cast<std::size_t>(spec.max_duration_s * utt.sample_rate);
    len = std::min(len, cap);
  }
  if (len == 0) throw DataError("corpus: " + utterance + " is empty");
  utt.samples.resize(len);

  cfg.target = convolve(utt, rirs.h_nearend);
  cfg.target.samples.resize(len);

  // The room path scales the utterance by an arbitrary distance-dependent
  // factor; normalizing the peak keeps the target inside the level window
  // the SPR/SNR calibration expects, whatever the corpus recording level.
  double peak = 0.0;
  for (double v : cfg.target.samples) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) throw DataError("corpus: " + utterance + " is silent");
  const double norm = 0.5 / peak;
  for (double& v : cfg.target.samples) v *= norm;

  TimeSignal noise_raw;
  noise_raw.sample_rate = utt.sample_rate;
  noise_raw.samples.resize(len);
  for (double& v : noise_raw.samples) v = rng.normal();
  cfg.noise = convolve(noise_raw, rirs.h_noise);
  cfg.noise->samples.resize(len);

  ScenarioData data;
  data.config = cfg;
  data.mix = make_teacher_forced_mixture(cfg);
  data.drive = detail::teacher_forced_drive(cfg, data.mix.s);
  data.e = kalman_preprocess(data.mix.y, data.drive, spec.stft, spec.kalman_partitions);

  data.record.split = split;
  data.record.index = index;
  data.record.seed = seed;
  data.record.utterance = utterance;
  data.record.gain = cfg.gain;
  data.record.system_delay_s = cfg.system_delay;
  data.record.spr_db = *cfg.spr_db;
  data.record.snr_db = *cfg.snr_db;
  data.record.rt60_s = rirs.geometry.rt60;
  data.record.nonlinearity = cfg.nonlinearity.name();
  data.record.samples = len;
  data.record.sample_rate = utt.sample_rate;
  return data;
}

// Writes one scenario directory: the component signals, the loudspeaker path
// so the scenario can be re-streamed standalone, and the metadata record.
// The stored mixture is the float32 sum of the stored components, so reading
// s, n, d back and adding them in single precision reproduces y bit-exactly.
inline void write_scenario(const std::filesystem::path& root, const ScenarioData& data) {
  const std::filesystem::path dir = root / data.record.dir();
  std::filesystem::create_directories(dir);
  write_wav(dir / "s.wav", data.mix.s);
  write_wav(dir / "n.wav", data.mix.n);
  write_wav(dir / "d.wav", data.mix.d);

  TimeSignal y_disk;
  y_disk.sample_rate = data.mix.y.sample_rate;
  y_disk.samples.resize(data.mix.y.size());
  for (std::size_t i = 0; i < y_disk.samples.size(); ++i) {
    const float sum = static_cast<float>(data.mix.s.samples[i]) +
                      static_cast<float>(data.mix.n.samples[i]);
    y_disk.samples[i] = sum + static_cast<float>(data.mix.d.samples[i]);
  }
  write_wav(dir / "y.wav", y_disk);
  write_wav(dir / "e.wav", data.e);
  write_wav(dir / "rir_loudspeaker.wav", data.config.rirs.h_loudspeaker);

  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) throw DataError("write_scenario: cannot open " + (dir / "meta.json").string());
  out << record_to_json(data.record).dump(2) << "\n";
}

struct RunManifest {
  std::string hash;
  ExperimentSpec spec;
  std::vector<ScenarioRecord> scenarios;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["version"] = 1;
  j["spec_hash"] = m.hash;
  j["spec"] = spec_to_json(m.spec);
  j["scenarios"] = nlohmann::json::array();
  for (const ScenarioRecord& r : m.scenarios) j["scenarios"].push_back(record_to_json(r));
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.hash = j.at("spec_hash").get<std::string>();
  m.spec = spec_from_json(j.at("spec"));
  for (const auto& r : j.at("scenarios")) m.scenarios.push_back(record_from_json(r));
  return m;
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return manifest_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest: " + path.string() + " is malformed: " + e.what());
  }
}

// Generates the full dataset. Scenario content depends only on (spec, seed),
// never on worker scheduling, so any --jobs value produces byte-identical
// trees; the manifest lists scenarios in ordinal order.
inline RunManifest generate_dataset(const ExperimentSpec& spec, std::size_t jobs = 1,
                                    bool force = false) {
  spec.validate();
  if (spec.corpus_dir.empty()) throw ConfigError("gen-dataset: corpus_dir is required");
  if (spec.output_dir.empty()) throw ConfigError("gen-dataset: output_dir is required");

  const std::filesystem::path root = spec.output_dir;
  const std::filesystem::path manifest_path = root / "manifest.json";
  if (std::filesystem::exists(manifest_path) && !force) {
    throw ConfigError("gen-dataset: " + manifest_path.string() +
                      " already exists; pass --force to regenerate");
  }

  const std::vector<std::string> corpus = list_corpus(spec.corpus_dir);
  const CorpusSplit pools = partition_corpus(corpus, spec);

  struct Slot {
    const std::vector<std::string>* pool;
    std::string split;
    std::size_t index;
    std::uint64_t seed;
  };
  std::vector<Slot> slots;
  slots.reserve(spec.total_count());
  auto plan = [&](const char* split, std::size_t count, const std::vector<std::string>& pool) {
    for (std::size_t i = 0; i < count; ++i) {
      slots.push_back({&pool, split, i, scenario_seed(spec.seed, slots.size())});
    }
  };
  plan("train", spec.train_count, pools.train);
  plan("val", spec.val_count, pools.val);
  plan("test", spec.test_count, pools.test);

  std::filesystem::create_directories(root);
  std::vector<ScenarioRecord> records(slots.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= slots.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failure) return;
      }
      try {
        const Slot& slot = slots[i];
        const ScenarioData data = build_scenario(spec, spec.corpus_dir, *slot.pool, slot.split,
                                                 slot.index, slot.seed);
        write_scenario(root, data);
        records[i] = data.record;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(
      1, std::min<std::size_t>(slots.size(), std::thread::hardware_concurrency())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  RunManifest manifest;
  manifest.hash = spec_hash(spec);
  manifest.spec = spec;
  manifest.scenarios = std::move(records);

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw DataError("gen-dataset: cannot open " + manifest_path.string());
  out << manifest_to_json(manifest).dump(2) << "\n";
  return manifest;
}

// ---------------------------------------------------------------------------
// Evaluation over a directory of (estimate, reference) pairs.

struct EvaluatePair {
  std::string name;
  std::filesystem::path est;
  std::filesystem::path ref;
  std::optional<double> gain;
};

// Default layout: every <stem>.est.wav with a sibling <stem>.ref.wav.
inline std::vector<EvaluatePair> find_pairs(const std::filesystem::path& dir) {
  std::vector<EvaluatePair> pairs;
  if (!std::filesystem::is_directory(dir)) return pairs;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".est.wav";
    if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix) {
      continue;
    }
    const std::string stem = name.substr(0, name.size() - suffix.size());
    const std::filesystem::path ref = entry.path().parent_path() / (stem + ".ref.wav");
    if (!std::filesystem::exists(ref)) continue;
    EvaluatePair p;
    p.name = std::filesystem::relative(entry.path().parent_path(), dir).generic_string();
    p.name = p.name == "." ? stem : p.name + "/" + stem;
    p.est = entry.path();
    p.ref = ref;
    pairs.push_back(std::move(p));
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const EvaluatePair& a, const EvaluatePair& b) { return a.name < b.name; });
  return pairs;
}

// Scenario layout: every directory holding both named files is one pair; a
// meta.json alongside supplies the gain for bucketing.
inline std::vector<EvaluatePair> find_named_pairs(const std::filesystem::path& dir,
                                                  const std::string& est_name,
                                                  const std::string& ref_name) {
  std::vector<EvaluatePair> pairs;
  if (!std::filesystem::is_directory(dir)) return pairs;
  std::vector<std::filesystem::path> dirs{dir};
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  for (const auto& d : dirs) {
    const std::filesystem::path est = d / est_name;
    const std::filesystem::path ref = d / ref_name;
    if (!std::filesystem::exists(est) || !std::filesystem::exists(ref)) continue;
    EvaluatePair p;
    p.name = std::filesystem::relative(d, dir).generic_string();
    if (p.name == ".") p.name = d.filename().string();
    p.est = est;
    p.ref = ref;
    const std::filesystem::path meta = d / "meta.json";
    if (std::filesystem::exists(meta)) {
      std::ifstream in(meta);
      nlohmann::json j;
      try {
        in >> j;
        if (j.contains("gain")) p.gain = j.at("gain").get<double>();
      } catch (const nlohmann::json::exception&) {
      }
    }
    pairs.push_back(std::move(p));
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const EvaluatePair& a, const EvaluatePair& b) { return a.name < b.name; });
  return pairs;
}

struct EvaluateRow {
  std::string name;
  std::string bucket;
  bool failed = false;
  std::string error;
  MetricsReport report;
};

struct BucketStats {
  std::size_t count = 0;
  double si_sdr_mean_db = 0.0;
  double si_sdr_median_db = 0.0;
  double mae_mean = 0.0;
  double mae_median = 0.0;
  double loss_mean = 0.0;
  double loss_median = 0.0;
};

struct EvaluateSummary {
  std::vector<EvaluateRow> rows;
  std::map<std::string, BucketStats> buckets;
  std::size_t failed = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline EvaluateSummary evaluate_pairs(const std::vector<EvaluatePair>& pairs,
                                      const StftConfig& stft) {
  EvaluateSummary summary;
  std::map<std::string, std::vector<const MetricsReport*>> grouped;

  summary.rows.reserve(pairs.size());
  for (const EvaluatePair& pair : pairs) {
    EvaluateRow row;
    row.name = pair.name;
    row.bucket = pair.gain ? std::to_string(static_cast<long long>(std::llround(*pair.gain)))
                           : std::string("all");
    try {
      const TimeSignal est = read_wav(pair.est);
      const TimeSignal ref = read_wav(pair.ref);
      row.report = evaluate_enhancement(est, ref, stft);
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
      ++summary.failed;
    }
    summary.rows.push_back(std::move(row));
  }

  for (const EvaluateRow& row : summary.rows) {
    if (!row.failed) grouped[row.bucket].push_back(&row.report);
  }
  for (const auto& [bucket, reports] : grouped) {
    BucketStats stats;
    stats.count = reports.size();
    std::vector<double> sdr, mae, loss;
    for (const MetricsReport* r : reports) {
      sdr.push_back(r->si_sdr_db);
      mae.push_back(r->spectral_mae);
      loss.push_back(r->combined_loss);
      stats.si_sdr_mean_db += r->si_sdr_db;
      stats.mae_mean += r->spectral_mae;
      stats.loss_mean += r->combined_loss;
    }
    stats.si_sdr_mean_db /= static_cast<double>(stats.count);
    stats.mae_mean /= static_cast<double>(stats.count);
    stats.loss_mean /= static_cast<double>(stats.count);
    stats.si_sdr_median_db = detail::median(sdr);
    stats.mae_median = detail::median(mae);
    stats.loss_median = detail::median(loss);
    summary.buckets[bucket] = stats;
  }
  return summary;
}

inline std::string evaluate_rows_csv(const EvaluateSummary& summary) {
  std::string csv = "name,bucket,status,si_sdr_db,si_sdr_saturated,spectral_mae,combined_loss\n";
  char line[256];
  for (const EvaluateRow& row : summary.rows) {
    if (row.failed) {
      csv += row.name + "," + row.bucket + ",failed,,,,\n";
      continue;
    }
    std::snprintf(line, sizeof line, ",%s,ok,%.9g,%d,%.9g,%.9g\n", row.bucket.c_str(),
                  row.report.si_sdr_db, row.report.si_sdr_saturated ? 1 : 0,
                  row.report.spectral_mae, row.report.combined_loss);
    csv += row.name + line;
  }
  return csv;
}

inline std::string evaluate_summary_csv(const EvaluateSummary& summary) {
  std::string csv =
      "bucket,count,si_sdr_mean_db,si_sdr_median_db,mae_mean,mae_median,loss_mean,loss_median\n";
  char line[256];
  for (const auto& [bucket, s] : summary.buckets) {
    std::snprintf(line, sizeof line, ",%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.count,
                  s.si_sdr_mean_db, s.si_sdr_median_db, s.mae_mean, s.mae_median, s.loss_mean,
                  s.loss_median);
    csv += bucket + line;
  }
  return csv;
}

inline nlohmann::json evaluate_to_json(const EvaluateSummary& summary) {
  nlohmann::json j;
  j["pairs"] = nlohmann::json::array();
  for (const EvaluateRow& row : summary.rows) {
    nlohmann::json r = {{"name", row.name}, {"bucket", row.bucket}, {"failed", row.failed}};
    if (row.failed) {
      r["error"] = row.error;
    } else {
      r["si_sdr_db"] = row.report.si_sdr_db;
      r["si_sdr_saturated"] = row.report.si_sdr_saturated;
      r["spectral_mae"] = row.report.spectral_mae;
      r["combined_loss"] = row.report.combined_loss;
    }
    j["pairs"].push_back(std::move(r));
  }
  j["buckets"] = nlohmann::json::object();
  for (const auto& [bucket, s] : summary.buckets) {
    j["buckets"][bucket] = {{"count", s.count},
                            {"si_sdr_mean_db", s.si_sdr_mean_db},
                            {"si_sdr_median_db", s.si_sdr_median_db},
                            {"mae_mean", s.mae_mean},
                            {"mae_median", s.mae_median},
                            {"loss_mean", s.loss_mean},
                            {"loss_median", s.loss_median}};
  }
  j["failed"] = summary.failed;
  return j;
}

// ---------------------------------------------------------------------------
// Feature export for external model training.

// Writes the feature tensors and the clean-target label for one generated
// scenario into <scenario>/features/. The features come from the microphone
// and preprocessed signals through the same extraction code the seam uses.
inline std::vector<std::filesystem::path> export_scenario_features(
    const std::filesystem::path& scenario_dir, const StftConfig& stft, std::size_t context) {
  const std::filesystem::path e_path = scenario_dir / "e.wav";
  if (!std::filesystem::exists(e_path)) {
    throw DataError("export-features: " + e_path.string() +
                    " is missing; rerun gen-dataset so the preprocessing stage writes it");
  }
  const TimeSignal y = read_wav(scenario_dir / "y.wav");
  const TimeSignal e = read_wav(e_path);
  const TimeSignal s = read_wav(scenario_dir / "s.wav");

  const Spectrogram spec_y = ahs::stft(y, stft);
  const Spectrogram spec_e = ahs::stft(e, stft);
  const Spectrogram spec_s = ahs::stft(s, stft);
  const FeatureSet fs = extract_features(spec_y, spec_e, context);

  const std::filesystem::path out = scenario_dir / "features";
  std::filesystem::create_directories(out);

  std::vector<std::filesystem::path> written;
  auto emit = [&](const char* name, const Tensor& t) {
    const std::filesystem::path path = out / name;
    write_tensor(path, t);
    written.push_back(path);
  };

  emit("lps_y.ahsf", matrix_tensor(fs.lps_y, fs.frames, fs.bins));
  emit("lps_e.ahsf", matrix_tensor(fs.lps_e, fs.frames, fs.bins));
  emit("temporal_corr_y.ahsf", matrix_tensor(fs.temporal_corr_y, fs.frames, fs.temporal_cols()));
  emit("temporal_corr_e.ahsf", matrix_tensor(fs.temporal_corr_e, fs.frames, fs.temporal_cols()));
  emit("freq_corr_y.ahsf", matrix_tensor(fs.freq_corr_y, fs.frames, fs.freq_cols()));
  emit("freq_corr_e.ahsf", matrix_tensor(fs.freq_corr_e, fs.frames, fs.freq_cols()));

  Tensor cov;
  cov.dims = {static_cast<std::uint32_t>(fs.frames), 4, 2};
  cov.data.reserve(fs.frames * 8);
  for (const auto& frame : fs.channel_cov) {
    for (const auto& z : frame) {
      cov.data.push_back(static_cast<float>(z.real()));
      cov.data.push_back(static_cast<float>(z.imag()));
    }
  }
  emit("channel_cov.ahsf", cov);
  emit("label_s.ahsf", spectrogram_tensor(spec_s));
  return written;
}

}  // namespace ahs
