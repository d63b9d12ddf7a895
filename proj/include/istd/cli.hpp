#pragma once

// Command dispatch for the `istd` tool.
//
//   istd prior|infer|baseline --input DIR [--weights FILE] [--method tophat|mpcm]
//   istd eval --input DIR --pred DIR [--threshold T]
//   istd roc  --input DIR (--pred DIR | --method cp1|tophat|mpcm|net [--weights FILE])
//   istd synth --out DIR [--kind K] [--count N] [--seed S]
//   istd init-weights|export-bank --out FILE
//   common: [--config FILE] [--threads N] [--out DIR]
//
// Exit codes: 0 ok, 1 input/io error, 2 weight/config/usage error. Failures
// print one line to stderr: `istd: error[<kind>]: <message>`.

#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "istd/baselines.hpp"
#include "istd/config.hpp"
#include "istd/dataset.hpp"
#include "istd/error.hpp"
#include "istd/gd_bank.hpp"
#include "istd/metrics.hpp"
#include "istd/network.hpp"
#include "istd/parallel.hpp"
#include "istd/png_io.hpp"
#include "istd/priors.hpp"
#include "istd/report.hpp"
#include "istd/synthgen.hpp"

namespace istd::cli {

namespace fs = std::filesystem;

struct Options {
  std::string command;
  std::string input;
  std::string weights;
  std::string config;
  std::string out = ".";
  std::string method;
  std::string pred;
  std::optional<int> threads;
  // synth / init-weights
  std::string kind = "localization";
  int count = 20;
  std::uint64_t seed = 7;
  bool zero = false;
  double threshold = 0.5;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::io: return 1;
    default: return 2;
  }
}

class Runner {
 public:
  Runner(Options opt, std::ostream& out, std::ostream& err)
      : opt_(std::move(opt)), out_(out), err_(err) {
    if (!opt_.config.empty()) cfg_ = load_config(opt_.config);
    if (opt_.threads) {
      require(*opt_.threads >= 1, "--threads must be at least 1");
      cfg_.threads = *opt_.threads;
    }
    bank_.emplace(cfg_.sigma_rule);
  }

  int run() {
    const auto& c = opt_.command;
    if (c == "prior") return score_dataset([this](const Tensor& img) { return extract_cp1(img, bank()); }, false);
    if (c == "baseline") return run_baseline();
    if (c == "infer") return run_infer();
    if (c == "eval") return run_eval();
    if (c == "roc") return run_roc();
    if (c == "synth") return run_synth();
    if (c == "init-weights") return run_init_weights();
    if (c == "export-bank") {
      save_weights(bank().to_store(), opt_.out);
      return 0;
    }
    fail(ErrorKind::config, "unknown command '" + c + "'");
  }

 private:
  const GdKernelBank& bank() const { return *bank_; }

  std::vector<DatasetEntry> entries(DatasetMode mode) {
    require(!opt_.input.empty(), "--input is required for '" + opt_.command + "'");
    auto e = list_dataset(opt_.input, mode);
    if (e.empty()) err_ << "istd: warning: no images under '" << opt_.input << "/images'\n";
    return e;
  }

  void ensure_out_dir() { fs::create_directories(opt_.out); }

  std::function<Tensor(const Tensor&)> baseline_scorer(const std::string& method) {
    if (method == "tophat") {
      const StructuringElement se{cfg_.top_hat_radius, ElementShape::disk};
      return [se](const Tensor& img) { return top_hat(img, se); };
    }
    if (method == "mpcm") {
      const auto scales = cfg_.mpcm_scales;
      return [scales](const Tensor& img) { return mpcm(img, scales); };
    }
    fail(ErrorKind::config, "unknown baseline method '" + method + "' (expected tophat or mpcm)");
  }

  // Scores every image and writes <stem>.png (16-bit) and, when asked, the
  // exact float dump <stem>.cspw.
  int score_dataset(const std::function<Tensor(const Tensor&)>& scorer, bool dump) {
    const auto list = entries(DatasetMode::scored);
    ensure_out_dir();
    parallel_for(list.size(), cfg_.threads, [&](std::size_t i) {
      const Sample s = load_sample(list[i]);
      const Tensor score = scorer(s.image);
      write_png((fs::path(opt_.out) / (s.id + ".png")).string(), from_tensor16(score));
      if (dump) save_score_dump(score, (fs::path(opt_.out) / (s.id + ".cspw")).string());
    });
    out_ << "scored " << list.size() << " image(s) into " << opt_.out << '\n';
    return 0;
  }

  int run_baseline() {
    require(!opt_.method.empty(), "baseline needs --method tophat|mpcm");
    return score_dataset(baseline_scorer(opt_.method), true);
  }

  struct Network {
    WeightStore weights;
    net::ModulationConfig cfg;
  };

  Network load_network() {
    if (opt_.weights.empty()) fail(ErrorKind::config, "--weights is required for '" + opt_.command + "'");
    Network n{load_weights(opt_.weights), {}};
    n.cfg = net::validate_network_weights(n.weights);
    return n;
  }

  int run_infer() {
    const Network n = load_network();
    const GdKernelBank& b = bank();
    return score_dataset(
        [&](const Tensor& img) { return net::cspenet_forward(img, b, n.weights, n.cfg); }, true);
  }

  int run_eval() {
    require(!opt_.pred.empty(), "eval needs --pred DIR with predictions");
    const auto list = entries(DatasetMode::masked);
    DetectionReport report;
    report.match_radius = cfg_.match_radius;
    report.pred_threshold = opt_.threshold;
    report.images.resize(list.size());
    parallel_for(list.size(), cfg_.threads, [&](std::size_t i) {
      const Sample s = load_sample(list[i]);
      const Mask pred = load_prediction_mask(opt_.pred, s.id, opt_.threshold);
      if (pred.height != s.mask->height || pred.width != s.mask->width)
        fail(ErrorKind::input, "prediction for '" + s.id + "' does not match its mask size");
      report.images[i] = {s.id, confusion(pred, *s.mask), pd_fa(pred, *s.mask, cfg_.match_radius)};
    });
    ensure_out_dir();
    {
      std::ofstream js(fs::path(opt_.out) / "report.json", std::ios::binary);
      write_report_json(js, report);
      std::ofstream csv(fs::path(opt_.out) / "report.csv", std::ios::binary);
      write_report_csv(csv, report);
      if (!js || !csv) fail(ErrorKind::io, "cannot write report into '" + opt_.out + "'");
    }
    const auto m = pixel_metrics(report.total_pixels());
    const auto t = report.total_targets();
    out_ << "images=" << report.images.size() << " iou=" << format_number(m.iou)
         << " f1=" << format_number(m.f1) << " pd=" << format_number(t.pd())
         << (t.pd_vacuous() ? " (vacuous)" : "") << " fa=" << format_number(t.fa()) << '\n';
    return 0;
  }

  int run_roc() {
    const auto list = entries(DatasetMode::masked);
    std::function<Tensor(const Tensor&)> scorer;
    std::optional<Network> network;
    if (opt_.pred.empty()) {
      const std::string method = opt_.method.empty() ? "cp1" : opt_.method;
      if (method == "cp1") {
        scorer = [this](const Tensor& img) { return extract_cp1(img, bank()); };
      } else if (method == "net") {
        network = load_network();
        scorer = [this, &network](const Tensor& img) {
          return net::cspenet_forward(img, bank(), network->weights, network->cfg);
        };
      } else {
        scorer = baseline_scorer(method);
      }
    }
    std::vector<Tensor> scores(list.size());
    std::vector<Mask> gts(list.size());
    parallel_for(list.size(), cfg_.threads, [&](std::size_t i) {
      Sample s = load_sample(list[i]);
      scores[i] = scorer ? scorer(s.image) : load_score_map(opt_.pred, s.id);
      if (scores[i].height() != s.image.height() || scores[i].width() != s.image.width())
        fail(ErrorKind::input, "score map for '" + s.id + "' does not match its image size");
      gts[i] = std::move(*s.mask);
    });
    const RocCurve curve = roc_curve(scores, gts, cfg_.threshold_count, cfg_.match_radius);
    ensure_out_dir();
    std::ofstream csv(fs::path(opt_.out) / "roc.csv", std::ios::binary);
    write_roc_csv(csv, curve);
    if (!csv) fail(ErrorKind::io, "cannot write roc.csv into '" + opt_.out + "'");
    out_ << "roc: " << curve.samples.size() << " thresholds over " << list.size() << " image(s)"
         << (curve.pd_vacuous ? ", no targets (pd vacuous)" : "") << '\n';
    return 0;
  }

  int run_synth() {
    const auto suite = make_suite(parse_suite_kind(opt_.kind), opt_.count, opt_.seed);
    const fs::path root(opt_.out);
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    const int digits = static_cast<int>(std::to_string(suite.size() - 1).size());
    std::ofstream meta(root / "scenes.csv", std::ios::binary);
    meta << "id,targets,snr\n";
    for (std::size_t i = 0; i < suite.size(); ++i) {
      std::string id = std::to_string(i);
      id = "scene_" + std::string(static_cast<std::size_t>(digits) - id.size(), '0') + id;
      write_png((root / "images" / (id + ".png")).string(), from_tensor16(suite[i].image));
      write_png((root / "masks" / (id + ".png")).string(), from_mask(suite[i].mask));
      meta << id << ',' << suite[i].spec.targets.size() << ',' << format_number(suite[i].snr) << '\n';
    }
    out_ << "wrote " << suite.size() << " scene(s) to " << opt_.out << '\n';
    return 0;
  }

  int run_init_weights() {
    const net::ModulationConfig mc{cfg_.base_channels, 4, 4};
    const WeightStore w = opt_.zero ? net::zero_network_weights(mc) : net::random_network_weights(mc, opt_.seed);
    save_weights(w, opt_.out);
    out_ << "wrote " << w.size() << " tensors to " << opt_.out << '\n';
    return 0;
  }

  Options opt_;
  std::ostream& out_;
  std::ostream& err_;
  RunConfig cfg_;
  std::optional<GdKernelBank> bank_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Infrared small-target detection toolkit", "istd"};
  app.require_subcommand(1, 1);
  Options opt;

  auto common = [&opt](CLI::App* sub, bool input) {
    auto* in = sub->add_option("--input", opt.input, "dataset root with images/ and masks/");
    if (input) in->required();
    sub->add_option("--config", opt.config, "key = value configuration file");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->add_option("--out", opt.out, "output directory");
  };
  auto* prior = app.add_subcommand("prior", "write CP1 saliency maps");
  common(prior, true);
  auto* infer = app.add_subcommand("infer", "run the detector");
  common(infer, true);
  infer->add_option("--weights", opt.weights, "weight file")->required();
  auto* baseline = app.add_subcommand("baseline", "classical saliency maps");
  common(baseline, true);
  baseline->add_option("--method", opt.method, "tophat | mpcm")->required();
  auto* eval = app.add_subcommand("eval", "score binary predictions against masks");
  common(eval, true);
  eval->add_option("--pred", opt.pred, "prediction directory (<stem>.cspw or <stem>.png)")->required();
  eval->add_option("--threshold", opt.threshold, "threshold for float score dumps");
  auto* roc = app.add_subcommand("roc", "Pd/Fa threshold sweep");
  common(roc, true);
  roc->add_option("--pred", opt.pred, "score map directory");
  roc->add_option("--method", opt.method, "cp1 | tophat | mpcm | net (when --pred is absent)");
  roc->add_option("--weights", opt.weights, "weight file for --method net");
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  common(synth, false);
  synth->add_option("--kind", opt.kind, "localization | roc | multiTarget");
  synth->add_option("--count", opt.count, "number of scenes");
  synth->add_option("--seed", opt.seed, "suite seed");
  auto* init = app.add_subcommand("init-weights", "write seeded (untrained) test weights");
  init->add_option("--out", opt.out, "weight file")->required();
  init->add_option("--config", opt.config, "configuration file (baseChannels)");
  init->add_option("--seed", opt.seed, "weight seed");
  init->add_flag("--zero", opt.zero, "all-zero weights with identity batch norm");
  auto* bank = app.add_subcommand("export-bank", "write the Gaussian-derivative kernel bank");
  bank->add_option("--out", opt.out, "output file")->required();
  bank->add_option("--config", opt.config, "configuration file (sigmaRule)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "istd: error[usage]: " << e.what() << '\n';
    return 2;
  }
  opt.command = app.get_subcommands().front()->get_name();

  try {
    Runner runner(opt, out, err);
    return runner.run();
  } catch (const Error& e) {
    err << "istd: error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "istd: error[io]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "istd: error[internal]: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace istd::cli
