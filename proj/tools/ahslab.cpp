// Command-line front end: dataset generation, closed-loop streaming with a
// selectable suppressor, batch evaluation, feature export, RIR sampling and
// howling detection. Exit codes: 0 success, 1 usage or configuration, 2 data,
// 3 numeric divergence, 4 plugin protocol.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ahs/common.hpp"
#include "ahs/kalman_suppressor.hpp"
#include "ahs/loop.hpp"
#include "ahs/metrics.hpp"
#include "ahs/nonlinearity.hpp"
#include "ahs/plugin.hpp"
#include "ahs/rir.hpp"
#include "ahs/rng.hpp"
#include "ahs/scenario.hpp"
#include "ahs/signal.hpp"
#include "ahs/stft.hpp"
#include "ahs/suppressor.hpp"
#include "ahs/tensor_io.hpp"
#include "ahs/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ahs::ConfigError(std::string(what) + ": cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ahs::ConfigError(std::string(what) + ": " + path.string() + " is not valid JSON: " +
                           e.what());
  }
  return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ahs::DataError("cannot open " + path.string());
  out << text;
  if (!out) throw ahs::DataError("write failed for " + path.string());
}

std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> parts;
  std::string token;
  while (in >> token) parts.push_back(token);
  if (parts.empty()) throw ahs::ConfigError("--cmd is empty");
  return parts;
}

std::vector<ahs::GainBreakpoint> parse_gain_schedule(const std::string& arg) {
  json j;
  if (!arg.empty() && arg.front() == '[') {
    j = json::parse(arg, nullptr, false);
    if (j.is_discarded()) throw ahs::ConfigError("gain schedule: malformed inline JSON");
  } else {
    j = load_json_file(arg, "gain schedule");
  }
  if (!j.is_array()) throw ahs::ConfigError("gain schedule: expected a JSON array");
  std::vector<ahs::GainBreakpoint> schedule;
  for (const auto& item : j) {
    ahs::GainBreakpoint bp;
    if (item.is_array() && item.size() == 2) {
      bp.time_s = item.at(0).get<double>();
      bp.gain = item.at(1).get<double>();
    } else if (item.is_object() && item.contains("time_s") && item.contains("gain")) {
      bp.time_s = item.at("time_s").get<double>();
      bp.gain = item.at("gain").get<double>();
    } else {
      throw ahs::ConfigError(
          "gain schedule: each entry must be [time_s, gain] or {\"time_s\", \"gain\"}");
    }
    schedule.push_back(bp);
  }
  return schedule;
}

json howling_to_json(const ahs::HowlingReport& h) {
  json j;
  j["detected"] = h.detected;
  j["onset_frame"] = h.onset_frame ? json(*h.onset_frame) : json(nullptr);
  j["growth_rate_db_per_s"] = h.growth_rate_db_per_s;
  j["peak_frequency_hz"] = h.peak_frequency_hz ? json(*h.peak_frequency_hz) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// gen-rir

struct GenRirArgs {
  std::size_t count = 1;
  std::uint64_t seed = 1;
  std::string output;
  double rt60_min = 0.0;
  double rt60_max = 0.6;
  bool force = false;
};

void run_gen_rir(const GenRirArgs& args) {
  const fs::path root = args.output;
  const fs::path index_path = root / "rirs.json";
  if (fs::exists(index_path) && !args.force) {
    throw ahs::ConfigError("gen-rir: " + index_path.string() +
                           " already exists; pass --force to regenerate");
  }
  fs::create_directories(root);

  ahs::RirSamplingRanges ranges;
  ranges.rt60_min = args.rt60_min;
  ranges.rt60_max = args.rt60_max;

  json index;
  index["seed"] = args.seed;
  index["count"] = args.count;
  index["sets"] = json::array();
  for (std::size_t i = 0; i < args.count; ++i) {
    const std::uint64_t set_seed = ahs::scenario_seed(args.seed, i);
    ahs::Rng rng(set_seed);
    const ahs::RirSet set = ahs::sample_rir_set(rng, ranges);

    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    const fs::path dir = root / buf;
    fs::create_directories(dir);
    ahs::write_wav(dir / "h_loudspeaker.wav", set.h_loudspeaker);
    ahs::write_wav(dir / "h_nearend.wav", set.h_nearend);
    ahs::write_wav(dir / "h_noise.wav", set.h_noise);

    const auto& g = set.geometry;
    auto vec = [](const ahs::Vec3& v) { return json::array({v.x, v.y, v.z}); };
    const json geometry = {{"room_dims", vec(g.room_dims)},
                           {"rt60_s", g.rt60},
                           {"mic", vec(g.mic)},
                           {"loudspeaker", vec(g.loudspeaker)},
                           {"talker", vec(g.talker)},
                           {"noise_source", vec(g.noise_source)}};
    write_text_file(dir / "geometry.json", geometry.dump(2) + "\n");
    index["sets"].push_back({{"index", i}, {"seed", set_seed}, {"rt60_s", g.rt60}});
  }
  write_text_file(index_path, index.dump(2) + "\n");
  std::cout << "wrote " << args.count << " RIR sets under " << root.string() << "\n";
}

// ---------------------------------------------------------------------------
// gen-dataset

struct GenDatasetArgs {
  std::string config;
  std::string corpus;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t jobs = 1;
  bool force = false;
  std::optional<std::size_t> train_count, val_count, test_count;
};

void run_gen_dataset(const GenDatasetArgs& args) {
  ahs::ExperimentSpec spec;
  if (!args.config.empty()) spec = ahs::spec_from_json(load_json_file(args.config, "config"));
  if (!args.corpus.empty()) spec.corpus_dir = args.corpus;
  if (!args.output.empty()) spec.output_dir = args.output;
  if (args.seed_given) spec.seed = args.seed;
  if (args.train_count) spec.train_count = *args.train_count;
  if (args.val_count) spec.val_count = *args.val_count;
  if (args.test_count) spec.test_count = *args.test_count;

  const ahs::RunManifest manifest = ahs::generate_dataset(spec, args.jobs, args.force);
  std::cout << "generated " << manifest.scenarios.size() << " scenarios under "
            << spec.output_dir << " (spec " << manifest.hash << ")\n";
}

// ---------------------------------------------------------------------------
// stream

struct StreamArgs {
  std::string scenario;
  std::string target;
  std::string noise;
  std::string rir;
  std::string output;
  std::string suppressor = "none";
  std::string cmd;
  std::string schedule;
  int deadline_ms = 1000;
  std::size_t kalman_partitions = 4;
  double gain = 1.0;
  bool gain_given = false;
  double delay_s = 0.1;
  bool delay_given = false;
  std::string nonlinearity;
  std::optional<double> spr_db, snr_db;
  double duration_s = 0.0;
};

ahs::ScenarioConfig stream_config(const StreamArgs& args, ahs::TimeSignal& reference) {
  ahs::ScenarioConfig cfg;

  if (!args.scenario.empty()) {
    const fs::path dir = args.scenario;
    cfg.target = ahs::read_wav(dir / "s.wav");
    if (fs::exists(dir / "n.wav")) cfg.noise = ahs::read_wav(dir / "n.wav");
    if (fs::exists(dir / "rir_loudspeaker.wav")) {
      cfg.rirs.h_loudspeaker = ahs::read_wav(dir / "rir_loudspeaker.wav");
    }
    if (fs::exists(dir / "meta.json")) {
      const ahs::ScenarioRecord meta =
          ahs::record_from_json(load_json_file(dir / "meta.json", "scenario meta"));
      cfg.gain = meta.gain;
      cfg.system_delay = meta.system_delay_s;
      cfg.nonlinearity = ahs::NonlinearityModel::from_name(meta.nonlinearity);
      cfg.spr_db = meta.spr_db;
    }
  } else if (!args.target.empty()) {
    cfg.target = ahs::read_wav(args.target);
    if (!args.noise.empty()) cfg.noise = ahs::read_wav(args.noise);
    if (!args.rir.empty()) {
      cfg.rirs.h_loudspeaker = ahs::read_wav(args.rir);
    } else {
      cfg.rirs.h_loudspeaker =
          ahs::TimeSignal(std::vector<double>{1.0}, cfg.target.sample_rate);
    }
  } else {
    throw ahs::ConfigError("stream: pass --scenario DIR or --target WAV");
  }

  if (args.gain_given) cfg.gain = args.gain;
  if (args.delay_given) cfg.system_delay = args.delay_s;
  if (!args.nonlinearity.empty()) {
    cfg.nonlinearity = ahs::NonlinearityModel::from_name(args.nonlinearity);
  }
  if (args.spr_db) cfg.spr_db = *args.spr_db;
  if (args.snr_db) cfg.snr_db = *args.snr_db;
  if (!args.schedule.empty()) cfg.gain_schedule = parse_gain_schedule(args.schedule);
  cfg.duration = args.duration_s;

  reference = cfg.target;
  return cfg;
}

ahs::SuppressorPtr stream_suppressor(const StreamArgs& args, const ahs::ScenarioConfig& cfg) {
  if (args.suppressor == "none") return ahs::make_passthrough();
  if (args.suppressor == "kalman") {
    ahs::kalman::Config kcfg;
    kcfg.stft = cfg.stft;
    kcfg.partitions = args.kalman_partitions;
    return ahs::make_kalman_suppressor(kcfg, cfg.delay_samples());
  }
  if (args.suppressor == "external") {
    if (args.cmd.empty()) throw ahs::ConfigError("stream: --suppressor external needs --cmd");
    ahs::PluginOptions opts;
    opts.command = split_command(args.cmd);
    opts.input_channels = 1;
    opts.deadline_ms = args.deadline_ms;
    return ahs::make_external_suppressor(std::move(opts));
  }
  throw ahs::ConfigError("stream: unknown suppressor \"" + args.suppressor +
                         "\" (none, kalman, external)");
}

void run_stream(const StreamArgs& args) {
  if (args.output.empty()) throw ahs::ConfigError("stream: --output is required");

  ahs::TimeSignal reference;
  const ahs::ScenarioConfig cfg = stream_config(args, reference);
  ahs::SuppressorPtr suppressor = stream_suppressor(args, cfg);

  const ahs::StreamResult res = ahs::run_streaming(cfg, *suppressor);

  const fs::path out = args.output;
  fs::create_directories(out);
  ahs::write_wav(out / "y.wav", res.mic);
  ahs::write_wav(out / "s_hat.wav", res.enhanced);
  ahs::write_wav(out / "x.wav", res.loudspeaker);

  std::string csv = "frame,rms,latency_frames,erle_db,saturated\n";
  char line[160];
  for (std::size_t k = 0; k < res.per_frame.size(); ++k) {
    const ahs::FrameStats& f = res.per_frame[k];
    if (std::isnan(f.erle_db)) {
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,,%d\n", k, f.rms, f.latency_frames,
                    f.saturated ? 1 : 0);
    } else {
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%d\n", k, f.rms, f.latency_frames,
                    f.erle_db, f.saturated ? 1 : 0);
    }
    csv += line;
  }
  write_text_file(out / "frames.csv", csv);

  ahs::write_tensor(out / "spec_y.ahsf", ahs::spectrogram_tensor(ahs::stft(res.mic, cfg.stft)));
  ahs::write_tensor(out / "spec_s_hat.ahsf",
                    ahs::spectrogram_tensor(ahs::stft(res.enhanced, cfg.stft)));

  json report;
  report["suppressor"] = suppressor->name();
  report["frames"] = res.per_frame.size();
  std::size_t saturated = 0;
  for (const ahs::FrameStats& f : res.per_frame) saturated += f.saturated ? 1 : 0;
  report["saturated_frames"] = saturated;
  report["howling"] = howling_to_json(res.howling);

  reference.samples.resize(res.enhanced.size());
  ahs::MetricsReport metrics = ahs::evaluate_enhancement(res.enhanced, reference, cfg.stft);
  report["metrics"] = {{"si_sdr_db", metrics.si_sdr_db},
                       {"si_sdr_saturated", metrics.si_sdr_saturated},
                       {"spectral_mae", metrics.spectral_mae},
                       {"combined_loss", metrics.combined_loss}};
  double erle_sum = 0.0;
  std::size_t erle_count = 0;
  for (const ahs::FrameStats& f : res.per_frame) {
    if (!std::isnan(f.erle_db)) {
      erle_sum += f.erle_db;
      ++erle_count;
    }
  }
  report["metrics"]["erle_mean_db"] =
      erle_count > 0 ? json(erle_sum / static_cast<double>(erle_count)) : json(nullptr);

  write_text_file(out / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string input = ".";
  std::string output;
  std::string est_name;
  std::string ref_name;
};

void run_evaluate(const EvaluateArgs& args) {
  if ((args.est_name.empty()) != (args.ref_name.empty())) {
    throw ahs::ConfigError("evaluate: --est and --ref must be given together");
  }
  const fs::path input = args.input;
  if (!fs::is_directory(input)) {
    throw ahs::DataError("evaluate: not a directory: " + input.string());
  }

  const std::vector<ahs::EvaluatePair> pairs =
      args.est_name.empty() ? ahs::find_pairs(input)
                            : ahs::find_named_pairs(input, args.est_name, args.ref_name);
  if (pairs.empty()) {
    std::cerr << "evaluate: no pairs found under " << input.string() << "\n";
  }

  ahs::StftConfig stft;
  const ahs::EvaluateSummary summary = ahs::evaluate_pairs(pairs, stft);

  const fs::path out = args.output.empty() ? input : fs::path(args.output);
  fs::create_directories(out);
  write_text_file(out / "pairs.csv", ahs::evaluate_rows_csv(summary));
  write_text_file(out / "summary.csv", ahs::evaluate_summary_csv(summary));
  write_text_file(out / "summary.json", ahs::evaluate_to_json(summary).dump(2) + "\n");
  std::cout << ahs::evaluate_summary_csv(summary);
}

// ---------------------------------------------------------------------------
// export-features

struct ExportArgs {
  std::string scenario;
  std::size_t context = 3;
};

void run_export_features(const ExportArgs& args) {
  ahs::StftConfig stft;
  const auto written = ahs::export_scenario_features(args.scenario, stft, args.context);
  for (const fs::path& p : written) std::cout << p.string() << "\n";
}

// ---------------------------------------------------------------------------
// detect-howl

struct DetectArgs {
  std::string input;
  std::string output;
};

void run_detect_howl(const DetectArgs& args) {
  const ahs::TimeSignal sig = ahs::read_wav(args.input);
  ahs::StftConfig stft;
  const ahs::HowlingReport report = ahs::detect_howling(sig, stft);
  const std::string text = howling_to_json(report).dump(2) + "\n";
  if (!args.output.empty()) write_text_file(args.output, text);
  std::cout << text;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"acoustic feedback loop laboratory"};
  app.require_subcommand(1);

  GenRirArgs rir_args;
  CLI::App* gen_rir = app.add_subcommand("gen-rir", "sample room impulse response sets");
  gen_rir->add_option("--count", rir_args.count, "number of RIR sets");
  gen_rir->add_option("--seed", rir_args.seed, "master seed");
  gen_rir->add_option("--output", rir_args.output, "output directory")->required();
  gen_rir->add_option("--rt60-min", rir_args.rt60_min, "lower RT60 bound, seconds");
  gen_rir->add_option("--rt60-max", rir_args.rt60_max, "upper RT60 bound, seconds");
  gen_rir->add_flag("--force", rir_args.force, "overwrite an existing index");
  gen_rir->callback([&]() { run_gen_rir(rir_args); });

  GenDatasetArgs ds_args;
  CLI::App* gen_ds = app.add_subcommand("gen-dataset", "synthesize a training dataset");
  gen_ds->add_option("--config", ds_args.config, "experiment spec JSON");
  gen_ds->add_option("--corpus", ds_args.corpus, "utterance corpus directory");
  gen_ds->add_option("--output", ds_args.output, "dataset output directory");
  auto* seed_opt = gen_ds->add_option("--seed", ds_args.seed, "master seed");
  gen_ds->add_option("--jobs", ds_args.jobs, "worker threads");
  gen_ds->add_flag("--force", ds_args.force, "overwrite an existing manifest");
  gen_ds->add_option("--train-count", [&](const CLI::results_t& r) {
    ds_args.train_count = std::stoull(r[0]);
    return true;
  }, "train split scenario count");
  gen_ds->add_option("--val-count", [&](const CLI::results_t& r) {
    ds_args.val_count = std::stoull(r[0]);
    return true;
  }, "val split scenario count");
  gen_ds->add_option("--test-count", [&](const CLI::results_t& r) {
    ds_args.test_count = std::stoull(r[0]);
    return true;
  }, "test split scenario count");
  gen_ds->callback([&]() {
    ds_args.seed_given = seed_opt->count() > 0;
    run_gen_dataset(ds_args);
  });

  StreamArgs st_args;
  CLI::App* stream = app.add_subcommand("stream", "run the closed loop with a suppressor");
  stream->add_option("--scenario", st_args.scenario, "generated scenario directory");
  stream->add_option("--target", st_args.target, "target WAV (microphone domain)");
  stream->add_option("--noise", st_args.noise, "noise WAV");
  stream->add_option("--rir", st_args.rir, "loudspeaker-to-microphone RIR WAV");
  stream->add_option("--output", st_args.output, "output directory")->required();
  stream->add_option("--suppressor", st_args.suppressor, "none, kalman or external");
  stream->add_option("--cmd", st_args.cmd, "external suppressor command line");
  stream->add_option("--deadline-ms", st_args.deadline_ms, "external plugin deadline");
  stream->add_option("--kalman-partitions", st_args.kalman_partitions,
                     "adaptive filter partitions");
  auto* gain_opt = stream->add_option("--gain", st_args.gain, "amplification gain");
  auto* delay_opt = stream->add_option("--delay", st_args.delay_s, "system delay, seconds");
  stream->add_option("--nonlinearity", st_args.nonlinearity,
                     "identity, hard_clip or sigmoid");
  stream->add_option("--spr", [&](const CLI::results_t& r) {
    st_args.spr_db = std::stod(r[0]);
    return true;
  }, "target-to-playback ratio, dB");
  stream->add_option("--snr", [&](const CLI::results_t& r) {
    st_args.snr_db = std::stod(r[0]);
    return true;
  }, "target-to-noise ratio, dB");
  stream->add_option("--duration", st_args.duration_s, "run length, seconds (0 = full)");
  stream->add_option("--gain-schedule", st_args.schedule,
                     "gain breakpoints, inline JSON [[time_s, gain], ...] or a file");
  stream->callback([&]() {
    st_args.gain_given = gain_opt->count() > 0;
    st_args.delay_given = delay_opt->count() > 0;
    run_stream(st_args);
  });

  EvaluateArgs ev_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score (estimate, reference) pairs");
  evaluate->add_option("--input", ev_args.input, "directory to scan");
  evaluate->add_option("--output", ev_args.output, "report directory (default: input)");
  evaluate->add_option("--est", ev_args.est_name, "estimate filename inside scenario dirs");
  evaluate->add_option("--ref", ev_args.ref_name, "reference filename inside scenario dirs");
  evaluate->callback([&]() { run_evaluate(ev_args); });

  ExportArgs ex_args;
  CLI::App* export_cmd = app.add_subcommand("export-features", "write feature tensors");
  export_cmd->add_option("--scenario", ex_args.scenario, "scenario directory")->required();
  export_cmd->add_option("--context", ex_args.context, "temporal context frames");
  export_cmd->callback([&]() { run_export_features(ex_args); });

  DetectArgs dh_args;
  CLI::App* detect = app.add_subcommand("detect-howl", "classify a recording");
  detect->add_option("--input", dh_args.input, "WAV file to analyze")->required();
  detect->add_option("--output", dh_args.output, "also write the JSON report here");
  detect->callback([&]() { run_detect_howl(dh_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ahs::ConfigError& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 1;
  } catch (const ahs::NumericError& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 3;
  } catch (const ahs::ProtocolError& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 4;
  } catch (const ahs::DataError& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 2;
  } catch (const ahs::Error& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ahslab: " << e.what() << "\n";
    return 1;
  }
}
