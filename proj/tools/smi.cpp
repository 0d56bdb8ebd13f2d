// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// smi: dataset generation, training, evaluation, ablation, offline
// inference and the live session service.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "smi/app/run.hpp"
#include "smi/common/binary_io.hpp"
#include "smi/common/error.hpp"
#include "smi/kernels/kernels.hpp"
#include "smi/neuralcore/checkpoint.hpp"
#include "smi/runtime/engine.hpp"
#include "smi/sensekit/wire.hpp"
#include "smi/serve/server.hpp"
#include "smi/synthgen/generator.hpp"
#include "smi/trainer/plot.hpp"
#include "smi/trainer/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smi;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) {
  g_stop.store(true);
  train::request_interrupt();
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io_failure, "cannot open " + path);
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::config_invalid, path + " is not valid JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  io::write_atomically(path, [&](std::ostream& os) { os << text; });
}

// Defaults, then the config file, then SMI_* environment variables.
json layered_config(json defaults, const std::string& path) {
  if (!path.empty()) defaults.merge_patch(read_json_file(path));
  app::apply_env_overrides(defaults);
  return defaults;
}

void set_workers(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  kern::set_num_threads(n);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_failure, "cannot create " + dir + ": " + ec.message());
}

std::vector<std::string> g_argv;

app::RunManifest start_manifest(std::uint64_t seed) {
  app::RunManifest m;
  m.command = g_argv;
  m.seed = seed;
  m.started = app::utc_timestamp();
  return m;
}

void print_epoch(const std::string& tag, const train::EpochRecord& e) {
  std::printf("%sepoch %3zu  loss %.4f  acc %.4f  valid_loss %.4f  valid_acc %.4f  (%.1fs)\n", tag.c_str(), e.epoch,
              e.train_loss, e.train_acc, e.valid_loss, e.valid_acc, e.seconds);
  std::fflush(stdout);
}

// --- gen --------------------------------------------------------------------

struct GenOpts {
  std::string preset = "desk", config, out, support;
  std::optional<std::uint64_t> seed;
  int workers = 0;
};

int cmd_gen(const GenOpts& o) {
  set_workers(o.workers);
  json cj = layered_config(synth::GenConfig::preset(o.preset).to_json(), o.config);
  if (o.seed) cj["seed"] = *o.seed;
  if (!o.support.empty()) cj["support"] = o.support;
  const synth::GenConfig cfg = synth::GenConfig::from_json(cj);
  auto manifest = start_manifest(cfg.seed);
  const synth::Dataset d = synth::generate_dataset(cfg);
  synth::save_dataset(o.out, d);

  std::map<std::string, std::size_t> per_side;
  for (const auto& t : d.trajectories) ++per_side[std::string(synth::side_name(t.side))];
  std::printf("wrote %zu trajectories (%zu steps each) to %s\n", d.size(), d.steps(), o.out.c_str());
  for (const auto& [cls, n] : d.manifest["counts"].items()) std::printf("  %-16s %zu\n", cls.c_str(), n.get<std::size_t>());
  for (const auto& [side, n] : per_side) std::printf("  side %-11s %zu\n", side.c_str(), n);

  manifest.configs["generator"] = cfg.to_json();
  manifest.outputs["dataset"] = o.out;
  manifest.extra["size"] = d.size();
  manifest.write(o.out + ".run.json");
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
  std::string data, config, out_dir, mask, valid_data;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, checkpoint_every;
  int workers = 0;
};

train::TrainConfig train_config_from(const std::string& path, const std::string& mask,
                                     std::optional<std::uint64_t> seed, std::optional<std::size_t> epochs) {
  json cj = layered_config(train::TrainConfig{}.to_json(), path);
  if (!mask.empty()) cj["mask"] = mask;
  if (seed) cj["seed"] = *seed;
  if (epochs) cj["epochs"] = *epochs;
  return train::TrainConfig::from_json(cj);
}

int cmd_train(const TrainOpts& o) {
  set_workers(o.workers);
  train::TrainConfig cfg = train_config_from(o.config, o.mask, o.seed, o.epochs);
  if (o.checkpoint_every) cfg.checkpoint_every = *o.checkpoint_every;
  ensure_dir(o.out_dir);
  cfg.checkpoint_path = (fs::path(o.out_dir) / "model").string();
  auto manifest = start_manifest(cfg.hyper.seed);

  synth::Dataset data = synth::load_dataset(o.data);
  synth::Dataset tr, va;
  if (o.valid_data.empty()) {
    std::tie(tr, va) = train::split_dataset(std::move(data), cfg.split_ratio, cfg.hyper.seed);
  } else {
    tr = std::move(data);
    va = synth::load_dataset(o.valid_data);
  }
  std::printf("train %zu / valid %zu trajectories, mask %s, %zu epochs\n", tr.size(), va.size(),
              std::string(cfg.mask.name()).c_str(), cfg.epochs);
  auto params = nn::init_params<float>(nn::ArchConfig{}, derive_seed(cfg.hyper.seed, {0x494e4954ULL}));
  train::TrainResult res;
  try {
    res = train::train(tr, va, cfg, std::move(params), [](const train::EpochRecord& e) { print_epoch("", e); });
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::interrupted) std::fprintf(stderr, "interrupted; checkpoint written to %s\n", cfg.checkpoint_path.c_str());
    throw;
  }
  const std::string metrics_json = (fs::path(o.out_dir) / "metrics.json").string();
  const std::string metrics_csv = (fs::path(o.out_dir) / "metrics.csv").string();
  write_text(metrics_json, res.metrics.to_json().dump(2) + "\n");
  write_text(metrics_csv, "epoch,split,condition,seed,acc,loss\n" +
                              train::curve_csv(res.metrics, std::string(cfg.mask.name()), cfg.hyper.seed));
  std::printf("final valid ACC %.4f\n", res.metrics.acc);

  manifest.configs["train"] = cfg.to_json();
  manifest.configs["dataset"] = tr.manifest;
  manifest.outputs = {{"checkpoint", cfg.checkpoint_path + ".json"},
                      {"metrics_json", metrics_json},
                      {"metrics_csv", metrics_csv}};
  manifest.extra["valid_acc"] = res.metrics.acc;
  manifest.write((fs::path(o.out_dir) / app::kManifestName).string());
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalOpts {
  std::string model, data, mask, out;
  int workers = 0;
};

int cmd_eval(const EvalOpts& o) {
  set_workers(o.workers);
  nn::Checkpoint ck = nn::load_checkpoint(o.model);
  sense::ModalityMask mask;
  if (!o.mask.empty())
    mask = sense::ModalityMask::parse(o.mask);
  else if (ck.training.contains("config") && ck.training["config"].contains("mask"))
    mask = sense::ModalityMask::parse(ck.training["config"]["mask"].get<std::string>());
  const synth::Dataset d = synth::load_dataset(o.data);
  const train::Metrics m = train::accuracy(ck.params, d, mask);
  std::printf("ACC %.4f over %zu trajectories (%zu steps), mask %s\n", m.acc, m.n_valid, m.steps,
              std::string(mask.name()).c_str());
  for (std::size_t c = 0; c < kNumClasses; ++c)
    std::printf("  %-16s %.4f\n", std::string(class_name(static_cast<ContactClass>(c))).c_str(), m.per_class_acc[c]);
  if (!o.out.empty()) write_text(o.out, m.to_json().dump(2) + "\n");
  return kExitOk;
}

// --- ablate -----------------------------------------------------------------

struct AblateOpts {
  std::string soft, rigid, soft_subset, config, out_dir;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> conditions;
  std::optional<std::size_t> epochs;
  int workers = 0;
};

int cmd_ablate(const AblateOpts& o) {
  set_workers(o.workers);
  const train::TrainConfig base = train_config_from(o.config, "", std::nullopt, o.epochs);
  ensure_dir(o.out_dir);
  auto manifest = start_manifest(o.seeds.front());

  const synth::Dataset soft = synth::load_dataset(o.soft);
  const synth::Dataset rigid = synth::load_dataset(o.rigid);
  synth::Dataset soft_subset;
  if (!o.soft_subset.empty()) {
    soft_subset = synth::load_dataset(o.soft_subset);
  } else {
    // Same classes, sides, counts and seed as the rigid set, soft support.
    synth::GenConfig g = synth::GenConfig::from_json(rigid.manifest.at("generator"));
    g.support = synth::SupportModel::soft();
    soft_subset = synth::generate_dataset(g);
  }

  std::vector<train::AblationCondition> conds = train::default_conditions();
  if (!o.conditions.empty()) {
    std::vector<train::AblationCondition> picked;
    for (const auto& name : o.conditions) {
      auto it = std::find_if(conds.begin(), conds.end(), [&](const auto& c) { return c.name == name; });
      if (it == conds.end()) throw Error(ErrorKind::config_invalid, "unknown ablation condition '" + name + "'");
      picked.push_back(*it);
    }
    conds = picked;
  }

  train::AblationData data{&soft, &soft_subset, &rigid};
  const train::AblationReport report = train::ablation_suite(
      base, data, o.seeds, conds, nn::ArchConfig{},
      [](const std::string& cond, std::uint64_t seed, const train::EpochRecord& e) {
        print_epoch("[" + cond + " seed " + std::to_string(seed) + "] ", e);
      });

  json rj = report.to_json();
  json crossing = json::object();
  for (const auto& [name, s] : rj["summary"].items()) {
    const auto& curve = s["mean_curve"];
    json first = nullptr;
    for (std::size_t e = 0; e < curve.size(); ++e)
      if (curve[e].get<double>() >= 0.95) {
        first = e + 1;
        break;
      }
    crossing[name] = {{"crosses_95", s["final_mean"].get<double>() >= 0.95}, {"first_epoch_mean_above_95", first}};
  }
  rj["reference_95"] = crossing;

  const fs::path dir(o.out_dir);
  write_text((dir / "ablation_report.json").string(), rj.dump(2) + "\n");
  write_text((dir / "ablation_curves.csv").string(), report.curves_csv());

  train::AblationReport modality, support;
  for (const auto& r : report.runs) {
    const auto it = std::find_if(conds.begin(), conds.end(), [&](const auto& c) { return c.name == r.condition; });
    (it->support_subset ? support : modality).runs.push_back(r);
  }
  train::PlotOptions po;
  po.title = "Validation ACC by modality";
  if (!modality.runs.empty()) write_text((dir / "ablation_modality.svg").string(), train::render_acc_svg(modality, po));
  po.title = "Validation ACC by support (Torque subset)";
  if (!support.runs.empty()) write_text((dir / "ablation_support.svg").string(), train::render_acc_svg(support, po));

  std::printf("%-14s %-8s %-8s %s\n", "condition", "mean", "sd", ">=95%");
  for (const auto& [name, s] : rj["summary"].items())
    std::printf("%-14s %.4f   %.4f   %s\n", name.c_str(), s["final_mean"].get<double>(), s["final_sd"].get<double>(),
                crossing[name]["crosses_95"].get<bool>() ? "yes" : "no");

  manifest.configs["train"] = base.to_json();
  manifest.configs["soft"] = soft.manifest;
  manifest.configs["rigid"] = rigid.manifest;
  manifest.outputs = {{"report", (dir / "ablation_report.json").string()},
                      {"curves", (dir / "ablation_curves.csv").string()},
                      {"plot_modality", (dir / "ablation_modality.svg").string()},
                      {"plot_support", (dir / "ablation_support.svg").string()}};
  manifest.extra["runs"] = report.runs.size();
  manifest.extra["seeds"] = o.seeds;
  manifest.write((dir / app::kManifestName).string());
  return kExitOk;
}

// --- infer ------------------------------------------------------------------

struct InferOpts {
  std::string model, frames, out, config, side;
  int workers = 1;
};

int cmd_infer(const InferOpts& o) {
  set_workers(o.workers);
  json rj = layered_config(rt::RuntimeConfig{}.to_json(), o.config);
  if (!o.side.empty()) rj["side"] = o.side;
  const rt::RuntimeConfig rc = rt::RuntimeConfig::from_json(rj);
  rt::Engine engine = rt::Engine::from_checkpoint(o.model, rc);
  const std::vector<sense::SensorFrame> frames = sense::read_frame_file(o.frames);

  std::vector<double> lat_ms;
  lat_ms.reserve(frames.size());
  std::array<std::size_t, kNumClasses> hist{};
  std::ostringstream out;
  std::size_t commands = 0;
  for (const auto& f : frames) {
    const auto t0 = std::chrono::steady_clock::now();
    const rt::StepOutput s = engine.stream_step(f);
    lat_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    ++hist[static_cast<std::size_t>(s.top_class)];
    if (s.cmd) {
      ++commands;
      out << json{{"t", s.t}, {"cmd", *s.cmd}, {"probs", s.probs}, {"force_n", s.force_n}}.dump() << '\n';
    }
  }
  write_text(o.out, out.str());

  std::vector<double> sorted = lat_ms;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) {
    if (sorted.empty()) return 0.0;
    return sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(q * double(sorted.size())))];
  };
  const double seconds = double(frames.size()) / rc.input_rate_hz;
  json hj = json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c)
    if (hist[c] > 0) hj[std::string(class_name(static_cast<ContactClass>(c)))] = hist[c];
  const json summary = {{"frames", frames.size()},
                        {"commands", commands},
                        {"emit_rate_hz", seconds > 0 ? double(commands) / seconds : 0.0},
                        {"latency_ms", {{"p50", pct(0.5)}, {"p99", pct(0.99)}, {"max", sorted.empty() ? 0.0 : sorted.back()}}},
                        {"top_class_histogram", hj}};
  std::cout << summary.dump(2) << std::endl;
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeOpts {
  std::string model, bind = "127.0.0.1:8765", config;
  int workers = 1;
};

int cmd_serve(const ServeOpts& o) {
  set_workers(o.workers);
  const rt::RuntimeConfig rc = rt::RuntimeConfig::from_json(layered_config(rt::RuntimeConfig{}.to_json(), o.config));
  nn::Checkpoint ck = nn::load_checkpoint(o.model);
  sense::ModalityMask mask;
  if (ck.training.contains("config") && ck.training["config"].contains("mask"))
    mask = sense::ModalityMask::parse(ck.training["config"]["mask"].get<std::string>());
  const serve::Endpoint ep = serve::parse_endpoint(o.bind);
  serve::Server server(std::move(ck.params), mask, rc, ep);
  std::printf("listening on %s:%u\n", ep.host.c_str(), static_cast<unsigned>(server.port()));
  std::fflush(stdout);
  std::thread watcher([&] {
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  server.run();
  g_stop.store(true);
  watcher.join();
  std::printf("stopped after %zu sessions\n", server.sessions_started());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);

  CLI::App cli{"smi: contact-classifier toolkit for skin-patch teleoperation"};
  cli.set_version_flag("--version", std::string(app::kToolVersion));
  cli.require_subcommand(1);
  const std::vector<std::string> masks{"full", "no-force", "no-prox", "no-accel"};

  GenOpts go;
  auto* gen = cli.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--preset", go.preset, "desk (510 trajectories) or large (1038)")->check(CLI::IsMember({"desk", "large"}));
  gen->add_option("--config", go.config, "generator config JSON")->check(CLI::ExistingFile);
  gen->add_option("--seed", go.seed, "RNG seed")->envname("SMI_SEED");
  gen->add_option("--support", go.support, "support model")->check(CLI::IsMember({"soft", "rigid"}));
  gen->add_option("--out", go.out, "dataset file")->required();
  gen->add_option("--workers", go.workers, "worker threads (0 = logical cores)")->envname("SMI_WORKERS");

  TrainOpts to;
  auto* trn = cli.add_subcommand("train", "train a classifier");
  trn->add_option("--data", to.data, "dataset file")->required()->check(CLI::ExistingFile);
  trn->add_option("--valid-data", to.valid_data, "separate validation dataset (skips the split)")->check(CLI::ExistingFile);
  trn->add_option("--config", to.config, "training config JSON")->check(CLI::ExistingFile);
  trn->add_option("--mask", to.mask, "modality mask")->check(CLI::IsMember(masks));
  trn->add_option("--seed", to.seed, "split/init/batch-order seed")->envname("SMI_SEED");
  trn->add_option("--epochs", to.epochs, "epochs");
  trn->add_option("--checkpoint-every", to.checkpoint_every, "checkpoint cadence in epochs");
  trn->add_option("--out-dir", to.out_dir, "output directory")->required();
  trn->add_option("--workers", to.workers, "worker threads (0 = logical cores)")->envname("SMI_WORKERS");

  EvalOpts eo;
  auto* evl = cli.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  evl->add_option("--model", eo.model, "checkpoint")->required();
  evl->add_option("--data", eo.data, "dataset file")->required()->check(CLI::ExistingFile);
  evl->add_option("--mask", eo.mask, "override the checkpoint's mask")->check(CLI::IsMember(masks));
  evl->add_option("--out", eo.out, "metrics JSON");
  evl->add_option("--workers", eo.workers, "worker threads (0 = logical cores)")->envname("SMI_WORKERS");

  AblateOpts ao;
  auto* abl = cli.add_subcommand("ablate", "modality and support ablation sweep");
  abl->add_option("--soft", ao.soft, "soft-support dataset")->required()->check(CLI::ExistingFile);
  abl->add_option("--rigid", ao.rigid, "rigid-support Torque subset")->required()->check(CLI::ExistingFile);
  abl->add_option("--soft-subset", ao.soft_subset, "soft-support Torque subset (default: regenerated)")->check(CLI::ExistingFile);
  abl->add_option("--seeds", ao.seeds, "seeds (at least three)")->delimiter(',');
  abl->add_option("--conditions", ao.conditions, "subset of conditions")->delimiter(',');
  abl->add_option("--config", ao.config, "training config JSON")->check(CLI::ExistingFile);
  abl->add_option("--epochs", ao.epochs, "epochs per run");
  abl->add_option("--out-dir", ao.out_dir, "output directory")->required();
  abl->add_option("--workers", ao.workers, "worker threads (0 = logical cores)")->envname("SMI_WORKERS");

  InferOpts io_;
  auto* inf = cli.add_subcommand("infer", "replay a frame file through the runtime");
  inf->add_option("--model", io_.model, "checkpoint")->required();
  inf->add_option("--frames", io_.frames, "frame file (.jsonl or binary)")->required()->check(CLI::ExistingFile);
  inf->add_option("--out", io_.out, "commands JSON-lines")->required();
  inf->add_option("--config", io_.config, "runtime config JSON")->check(CLI::ExistingFile);
  inf->add_option("--side", io_.side, "patch side")->check(CLI::IsMember({"left", "right"}));
  inf->add_option("--workers", io_.workers, "worker threads")->envname("SMI_WORKERS");

  ServeOpts so;
  auto* srv = cli.add_subcommand("serve", "live session service (JSON lines or WebSocket)");
  srv->add_option("--model", so.model, "checkpoint")->required();
  srv->add_option("--bind", so.bind, "host:port (port 0 picks a free port)")->envname("SMI_BIND");
  srv->add_option("--config", so.config, "runtime config JSON")->check(CLI::ExistingFile);
  srv->add_option("--workers", so.workers, "worker threads per session")->envname("SMI_WORKERS");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(go);
    if (*trn) return cmd_train(to);
    if (*evl) return cmd_eval(eo);
    if (*abl) return cmd_ablate(ao);
    if (*inf) return cmd_infer(io_);
    if (*srv) return cmd_serve(so);
  } catch (const Error& e) {
    std::fprintf(stderr, "smi: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "smi: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
