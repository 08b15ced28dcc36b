// uasep: synthesize test signals, separate mixtures, train and evaluate the
// embedding networks, and rerun the canned experiments.
//
// Exit codes: 0 success, 2 usage or parameter errors, 3 file or format
// errors, 4 degenerate inputs or undefined metrics.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uasep/errors.hpp"
#include "uasep/io_util.hpp"
#include "uasep/metrics.hpp"
#include "uasep/pipeline.hpp"
#include "uasep/presets.hpp"
#include "uasep/training.hpp"
#include "uasep/wav.hpp"

namespace fs = std::filesystem;
using namespace uasep;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("UASEP_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ParamError(std::string("UASEP_SEED is not a number: ") + env);
    }
  }
  return 0;
}

TimeSignal load_signal(const fs::path& path) {
  if (path.extension() == ".csv") return read_signal_csv(path);
  return read_wav(path);
}

void store_signal(const fs::path& path, const TimeSignal& x) {
  if (path.extension() == ".csv")
    write_signal_csv(path, x);
  else
    write_wav(path, x, 32);  // keep over-full-scale samples intact
}

// ---- JSON config plumbing for `train` ----

SourceSpec source_from_json(const nlohmann::json& j) {
  SourceSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "wav") {
    s.kind = SourceSpec::Kind::wav;
    s.path = j.at("path").get<std::string>();
  } else if (kind == "lfm") {
    s.kind = SourceSpec::Kind::lfm;
    s.f_start_hz = j.at("f_start_hz").get<double>();
    s.f_end_hz = j.at("f_end_hz").get<double>();
    s.launch_time_s = j.value("launch_time_s", 0.0);
    s.duration_s = j.at("duration_s").get<double>();
  } else if (kind == "lfm_train") {
    s.kind = SourceSpec::Kind::lfm_train;
    s.f_start_hz = j.at("f_start_hz").get<double>();
    s.f_end_hz = j.at("f_end_hz").get<double>();
    s.period_s = j.value("period_s", 0.25);
    s.duty = j.value("duty", 0.5);
  } else if (kind == "bandnoise") {
    s.kind = SourceSpec::Kind::bandnoise;
    s.low_hz = j.at("low_hz").get<double>();
    s.high_hz = j.at("high_hz").get<double>();
  } else {
    throw ConfigError("unknown source kind: " + kind);
  }
  return s;
}

StftConfig stft_from_json(const nlohmann::json& j, const StftConfig& base) {
  StftConfig c = base;
  c.frame_ms = j.value("frame_ms", c.frame_ms);
  c.hop_ms = j.value("hop_ms", c.hop_ms);
  if (j.contains("window")) c.window = window_from_name(j.at("window").get<std::string>());
  return c;
}

DatasetSpec dataset_from_json(const nlohmann::json& j, std::uint64_t seed) {
  DatasetSpec d = presets::desk_dataset(seed);
  if (j.contains("source_pool")) {
    d.source_pool.clear();
    for (const auto& s : j.at("source_pool")) d.source_pool.push_back(source_from_json(s));
  }
  d.min_sources = j.value("min_sources", d.min_sources);
  d.max_sources = j.value("max_sources", d.max_sources);
  d.mixtures_per_epoch = j.value("mixtures_per_epoch", d.mixtures_per_epoch);
  d.sample_rate = j.value("sample_rate", d.sample_rate);
  d.clip_seconds = j.value("clip_seconds", d.clip_seconds);
  d.mix_noise_snr_db = j.value("mix_noise_snr_db", d.mix_noise_snr_db);
  d.mix_noise_snr_lo_db = j.value("mix_noise_snr_lo_db", d.mix_noise_snr_lo_db);
  d.label_floor_db = j.value("label_floor_db", d.label_floor_db);
  d.log_floor_db = j.value("log_floor_db", d.log_floor_db);
  if (j.contains("stft")) d.stft = stft_from_json(j.at("stft"), d.stft);
  d.seed = j.value("seed", seed);
  return d;
}

NetSpec net_from_json(const nlohmann::json& j) {
  NetSpec n;
  if (j.contains("arch")) n.arch = architecture_from_name(j.at("arch").get<std::string>());
  n.layers = j.value("layers", n.layers);
  n.hidden = j.value("hidden", n.hidden);
  n.embed_dim = j.value("embed_dim", n.embed_dim);
  n.sum_directions = j.value("sum_directions", n.sum_directions);
  n.tanh_output = j.value("tanh_output", n.tanh_output);
  return n;
}

TrainConfig train_from_json(const nlohmann::json& j, std::uint64_t seed) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.l2 = j.value("l2", c.l2);
  c.dropout_input = j.value("dropout_input", c.dropout_input);
  c.dropout_hidden = j.value("dropout_hidden", c.dropout_hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.chunk_frames = j.value("chunk_frames", c.chunk_frames);
  c.chunk_overlap = j.value("chunk_overlap", c.chunk_overlap);
  c.seed = j.value("seed", seed);
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"underwater acoustic source separation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed may follow the subcommand name
  std::uint64_t seed = default_seed();
  app.add_option("--seed", seed, "global random seed (default: UASEP_SEED or 0)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "synthesize signals");
  std::string gen_preset, gen_kind;
  fs::path gen_out;
  double g_f0 = 1000, g_f1 = 2000, g_launch = 0, g_dur = 0.5, g_total = 1.0;
  double g_low = 500, g_high = 1500, g_period = 0.25, g_duty = 0.5;
  std::uint32_t g_rate = 8000;
  std::optional<double> gen_snr;
  gen->add_option("--preset", gen_preset, "canned scenario (lfm3)");
  gen->add_option("--kind", gen_kind, "single signal: lfm, lfm_train, bandnoise");
  gen->add_option("--out", gen_out, "output file (.wav/.csv) or directory for presets")
      ->required();
  gen->add_option("--snr", gen_snr, "observation noise level in dB (presets)");
  gen->add_option("--f0", g_f0, "start frequency, Hz");
  gen->add_option("--f1", g_f1, "end frequency, Hz");
  gen->add_option("--launch", g_launch, "pulse launch time, s");
  gen->add_option("--duration", g_dur, "pulse duration, s");
  gen->add_option("--total", g_total, "record length, s");
  gen->add_option("--rate", g_rate, "sample rate, Hz");
  gen->add_option("--low", g_low, "band low edge, Hz");
  gen->add_option("--high", g_high, "band high edge, Hz");
  gen->add_option("--period", g_period, "pulse train period, s");
  gen->add_option("--duty", g_duty, "pulse train duty cycle");

  // ---- separate ----
  auto* sep = app.add_subcommand("separate", "separate a mixture into sources");
  std::vector<fs::path> sep_in;
  fs::path sep_out, sep_ckpt;
  std::string sep_method = "classic", sep_window = "hann";
  std::size_t sep_k = 2;
  double sep_frame_ms = 32.0, sep_hop_ms = 8.0;
  bool sep_dump_masks = false, sep_dump_specs = false;
  sep->add_option("--in", sep_in, "observation files (.wav/.csv), channel order")
      ->required()
      ->expected(-1);
  sep->add_option("--out", sep_out, "output directory")->required();
  sep->add_option("--method", sep_method, "classic or deep")
      ->check(CLI::IsMember({"classic", "deep"}));
  sep->add_option("--k", sep_k, "number of clusters");
  sep->add_option("--checkpoint", sep_ckpt, "trained network (deep method)");
  sep->add_option("--frame-ms", sep_frame_ms, "analysis frame, ms");
  sep->add_option("--hop-ms", sep_hop_ms, "analysis hop, ms");
  sep->add_option("--window", sep_window, "analysis window")
      ->check(CLI::IsMember({"hann", "sqrt_hann", "hamming", "rect"}));
  sep->add_flag("--dump-masks", sep_dump_masks, "write mask images");
  sep->add_flag("--dump-spectrograms", sep_dump_specs, "write spectrogram images");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train an embedding network");
  fs::path tr_config, tr_out;
  std::string tr_arch = "bilstm", tr_preset;
  tr->add_option("--config", tr_config, "JSON config (dataset/net/train sections)");
  tr->add_option("--preset", tr_preset, "canned dataset (desk)");
  tr->add_option("--arch", tr_arch, "rnn, lstm or bilstm")
      ->check(CLI::IsMember({"rnn", "lstm", "bilstm"}));
  tr->add_option("--out", tr_out, "output directory")->required();

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "score estimates against references");
  std::vector<fs::path> ev_est, ev_ref;
  fs::path ev_csv, ev_json;
  ev->add_option("--estimates", ev_est, "estimate files")->required()->expected(-1);
  ev->add_option("--references", ev_ref, "reference files")->required()->expected(-1);
  ev->add_option("--csv", ev_csv, "write the report as CSV");
  ev->add_option("--json", ev_json, "write the report as JSON");

  // ---- experiment ----
  auto* ex = app.add_subcommand("experiment", "rerun a canned experiment");
  std::string ex_preset;
  fs::path ex_out;
  ex->add_option("--preset", ex_preset, "table4, table5, table6, fig9, fig10, fig11")
      ->required();
  ex->add_option("--out", ex_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0 through here; real usage errors map onto the
    // parameter-error exit code
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*gen) {
    if (!gen_preset.empty()) {
      if (gen_preset != "lfm3") throw ParamError("unknown gen preset: " + gen_preset);
      std::cout << "gen preset=lfm3 seed=" << seed
                << " snr=" << (gen_snr ? fmt_double(*gen_snr) : "none") << "\n";
      presets::ClassicRun run = presets::make_lfm3_run(gen_snr, seed);
      fs::create_directories(gen_out);
      // float samples: mixed observations routinely exceed full scale
      for (std::size_t i = 0; i < run.images.size(); ++i) {
        write_wav(gen_out / ("source" + std::to_string(i) + ".wav"), run.images[i], 32);
        std::cout << "  wrote source" << i << ".wav\n";
      }
      for (std::size_t i = 0; i < run.observations.size(); ++i) {
        write_wav(gen_out / ("obs" + std::to_string(i) + ".wav"), run.observations[i], 32);
        std::cout << "  wrote obs" << i << ".wav\n";
      }
      return 0;
    }
    TimeSignal x;
    if (gen_kind == "lfm") {
      x = gen_lfm({g_f0, g_f1, g_launch, g_dur, g_total, g_rate});
    } else if (gen_kind == "lfm_train") {
      x = gen_lfm_train(g_f0, g_f1, g_period, g_duty, g_total, g_rate);
    } else if (gen_kind == "bandnoise") {
      x = gen_bandnoise(g_low, g_high, g_total, g_rate, seed);
    } else {
      throw ParamError("gen needs --preset or a valid --kind");
    }
    std::cout << "gen kind=" << gen_kind << " rate=" << g_rate << " seed=" << seed << "\n";
    store_signal(gen_out, x);
    std::cout << "  wrote " << gen_out.string() << "\n";
    return 0;
  }

  if (*sep) {
    PipelineConfig cfg;
    cfg.method = sep_method == "deep" ? Method::deep : Method::classic;
    cfg.stft = StftConfig{sep_frame_ms, sep_hop_ms, window_from_name(sep_window)};
    cfg.k_clusters = sep_k;
    cfg.seed = seed;
    if (cfg.method == Method::deep && sep_ckpt.empty())
      throw ParamError("deep separation needs --checkpoint");
    std::vector<TimeSignal> obs;
    for (const auto& p : sep_in) obs.push_back(load_signal(p));
    std::cout << "separate method=" << sep_method << " k=" << sep_k
              << " channels=" << obs.size() << " frame_ms=" << sep_frame_ms
              << " hop_ms=" << sep_hop_ms << " window=" << sep_window
              << " seed=" << seed << "\n";

    SeparationResult res;
    if (cfg.method == Method::deep) {
      NetworkParams net = load_checkpoint(sep_ckpt);
      res = separate(obs, cfg, net);
    } else {
      res = separate(obs, cfg);
    }

    fs::create_directories(sep_out);
    for (std::size_t i = 0; i < res.estimates.size(); ++i) {
      const auto est = sep_out / ("estimate" + std::to_string(i) + ".wav");
      write_wav(est, res.estimates[i], 32);
      std::cout << "  wrote " << est.filename().string() << "\n";
      if (sep_dump_masks) {
        write_mask_pgm(sep_out / ("mask" + std::to_string(i) + ".pgm"), res.masks[i]);
        std::cout << "  wrote mask" << i << ".pgm\n";
      }
      if (sep_dump_specs) {
        write_spectrogram_pgm(sep_out / ("estimate" + std::to_string(i) + ".pgm"),
                              res.estimate_specs[i]);
        std::cout << "  wrote estimate" << i << ".pgm\n";
      }
    }
    if (sep_dump_specs) {
      write_spectrogram_pgm(sep_out / "mixture.pgm", res.mixture_spec);
      std::cout << "  wrote mixture.pgm\n";
    }
    write_assignment_csv(sep_out / "assignment.csv", res.assignment);
    std::cout << "  k-means iterations=" << res.assignment.iterations
              << " objective=" << fmt_double(res.assignment.objective) << "\n";
    return 0;
  }

  if (*tr) {
    DatasetSpec data = presets::desk_dataset(seed);
    NetSpec net;
    TrainConfig cfg = presets::desk_train(seed);
    if (!tr_config.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(tr_config));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad train config: " + std::string(e.what()));
      }
      if (j.contains("dataset")) data = dataset_from_json(j.at("dataset"), seed);
      if (j.contains("net")) net = net_from_json(j.at("net"));
      if (j.contains("train")) cfg = train_from_json(j.at("train"), seed);
    } else if (!tr_preset.empty() && tr_preset != "desk") {
      throw ParamError("unknown train preset: " + tr_preset);
    }
    net.arch = architecture_from_name(tr_arch);

    std::cout << "train arch=" << tr_arch << " layers=" << net.layers
              << " hidden=" << net.hidden << " embed_dim=" << net.embed_dim
              << " epochs=" << cfg.epochs << " lr=" << fmt_double(cfg.learning_rate)
              << " pool=" << data.source_pool.size() << " rate=" << data.sample_rate
              << " seed=" << seed << "\n";
    TrainResult result = train(data, net, cfg, tr_out);
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
      std::cout << "  epoch " << e << " loss " << fmt_double(result.epoch_mean_loss[e])
                << "\n";
    std::cout << "  wrote " << result.checkpoint_path.string() << "\n";
    return 0;
  }

  if (*ev) {
    std::vector<TimeSignal> est, ref;
    for (const auto& p : ev_est) est.push_back(load_signal(p));
    for (const auto& p : ev_ref) ref.push_back(load_signal(p));
    const SeparationReport rep = align_and_report(est, ref);
    std::cout << "eval estimates=" << est.size() << " references=" << ref.size() << "\n";
    for (std::size_t j = 0; j < rep.xi.size(); ++j)
      std::cout << "  reference " << j << " -> estimate " << rep.assignment[j]
                << " xi=" << fmt_double(rep.xi[j]) << "\n";
    std::cout << "  mean_xi=" << fmt_double(rep.mean_xi) << "\n";
    if (!ev_csv.empty()) write_report_csv(ev_csv, rep);
    if (!ev_json.empty()) write_report_json(ev_json, rep);
    return 0;
  }

  if (*ex) {
    std::cout << "experiment preset=" << ex_preset << " seed=" << seed << "\n";
    const presets::ExperimentResult res = presets::run_experiment(ex_preset, ex_out, seed);
    std::cout << res.summary;
    for (const auto& p : res.outputs) std::cout << "  wrote " << p.string() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const MetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
