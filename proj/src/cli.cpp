#include "actok/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "actok/compression.hpp"
#include "actok/config.hpp"
#include "actok/dedup.hpp"
#include "actok/episode.hpp"
#include "actok/mirror.hpp"
#include "actok/parallel.hpp"
#include "actok/scaling.hpp"
#include "actok/score.hpp"
#include "actok/serialization.hpp"
#include "actok/synth.hpp"
#include "actok/tokenizer.hpp"

namespace actok::cli {

using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file (default: $" + std::string(kConfigEnvVar) + ")");
  sub->add_option("--seed", c.seed, "Seed for every random choice");
  sub->add_option("--threads", c.threads, "Worker threads");
  sub->add_option("--out", c.out, "Primary output file")->required();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Tracks the files one command reads and writes, and writes the run manifest
// next to the primary output.
class Run {
 public:
  Run(std::string command, std::string out) : command_(std::move(command)), out_(std::move(out)) {}

  const std::string& out() const { return out_; }
  std::string derived(const std::string& suffix) const { return out_ + suffix; }

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"fnv1a", fnv1a_hex(read_file(path))}}); }

  void write(const std::string& path, const std::string& contents) {
    write_file_atomic(path, contents);
    outputs_.push_back(path);
  }

  void finish(const Config& cfg, std::ostream& out, json summary) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    const json m = {{"command", command_},
                    {"toolkit_version", kToolkitVersion},
                    {"config_hash", config_hash(cfg)},
                    {"seed", cfg.seed},
                    {"config", to_json(cfg)},
                    {"inputs", inputs_},
                    {"outputs", outputs_},
                    {"timing", {{"wall_seconds", secs}}}};
    const std::string manifest = out_ + ".manifest.json";
    write_file_atomic(manifest, m.dump(1) + "\n");
    summary["command"] = command_;
    summary["outputs"] = outputs_;
    summary["manifest"] = manifest;
    out << summary.dump() << '\n';
  }

 private:
  std::string command_;
  std::string out_;
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
};

Config resolve_config(const Common& c) {
  Config cfg;
  std::string path = c.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg = load_config(path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

std::string episodes_text(const std::vector<Episode>& eps) {
  std::ostringstream ss;
  write_episodes(ss, eps);
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// fit-library ---------------------------------------------------------------

struct FitLibraryArgs {
  std::string episodes;
  std::optional<std::size_t> k_trans;
  std::optional<std::size_t> k_rot;
};

json fit_library_cmd(const FitLibraryArgs& a, Config& cfg, Run& run, std::ostream& log) {
  if (a.k_trans) cfg.k_trans = *a.k_trans;
  if (a.k_rot) cfg.k_rot = *a.k_rot;
  cfg.validate();
  run.input(a.episodes);
  const auto eps = read_episodes(a.episodes);
  std::vector<std::vector<DeltaAction>> per(eps.size());
  parallel_for(eps.size(), cfg.threads, [&](std::size_t i) {
    per[i] = collect_deltas(eps[i].frames, cfg.thresholds, cfg.horizon, cfg.max_steps);
  });
  std::vector<DeltaAction> deltas;
  for (const auto& d : per) deltas.insert(deltas.end(), d.begin(), d.end());
  log << "fit-library: " << eps.size() << " episodes, " << deltas.size() << " deltas\n";

  FitOptions fo;
  fo.k_trans = cfg.k_trans;
  fo.k_rot = cfg.k_rot;
  fo.seed = cfg.seed;
  fo.thresholds = cfg.thresholds;
  fo.max_iterations = cfg.kmeans_max_iterations;
  fo.tolerance = cfg.kmeans_tolerance;
  const auto lib = fit_library(deltas, fo);
  run.write(run.out(), to_json(lib).dump(1) + "\n");
  return {{"episodes", eps.size()},
          {"deltas", deltas.size()},
          {"k_trans", lib.k_trans()},
          {"k_rot", lib.k_rot()},
          {"trans_radius", lib.trans_radius},
          {"rot_radius", lib.rot_radius}};
}

// encode / decode -----------------------------------------------------------

struct EncodeArgs {
  std::string library;
  std::string episodes;
  std::string mode;
  std::optional<std::size_t> horizon;
  std::string compression;
};

json encode_cmd(const EncodeArgs& a, Config& cfg, Run& run, std::ostream& log) {
  if (!a.mode.empty()) cfg = config_from_json({{"tokenizer", {{"mode", a.mode}}}}, cfg);
  if (a.horizon) cfg.horizon = *a.horizon;
  cfg.validate();
  run.input(a.library);
  run.input(a.episodes);
  const auto lib = load_library(a.library);
  const auto eps = read_episodes(a.episodes);

  std::vector<std::string> lines(eps.size());
  std::vector<std::vector<CompressionRow>> rows(eps.size());
  std::vector<std::size_t> tokens(eps.size(), 0), windows(eps.size(), 0);
  parallel_for(eps.size(), cfg.threads, [&](std::size_t i) {
    EncodeOptions opt;
    opt.mode = cfg.encode_mode;
    opt.seed = splitmix64(cfg.seed ^ splitmix64(i));
    opt.horizon = cfg.horizon;
    opt.max_steps = cfg.max_steps;
    opt.state_update = cfg.state_update;
    const auto& ep = eps[i];
    const auto enc = encode_trajectory(ep.frames, lib, opt);
    json rec = to_json(enc);
    rec["format_version"] = kLibraryFormatVersion;
    rec["id"] = ep.id;
    rec["instruction"] = ep.instruction;
    rec["subtask"] = ep.subtask;
    rec["mirror_flag"] = ep.mirror_flag;
    lines[i] = rec.dump() + "\n";
    for (const auto& w : enc.windows) tokens[i] += w.token_count();
    windows[i] = enc.windows.size();
    rows[i] = compression_report(ep.id, ep.frames, lib, opt);
  });

  std::string body;
  for (const auto& l : lines) body += l;
  run.write(run.out(), body);
  std::vector<CompressionRow> all;
  for (const auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  run.write(a.compression.empty() ? run.derived(".compression.csv") : a.compression, compression_csv(all));

  std::size_t total_tokens = 0, total_windows = 0, binning = 0, spatial = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    total_tokens += tokens[i];
    total_windows += windows[i];
  }
  for (const auto& r : all) {
    binning += r.binning_tokens;
    spatial += r.spatial_tokens;
  }
  log << "encode: " << eps.size() << " episodes, " << total_windows << " windows, " << total_tokens << " tokens\n";
  return {{"episodes", eps.size()},
          {"windows", total_windows},
          {"tokens", total_tokens},
          {"chunks", all.size()},
          {"binning_tokens", binning},
          {"spatial_tokens", spatial}};
}

struct DecodeArgs {
  std::string library;
  std::string tokens;
};

json decode_cmd(const DecodeArgs& a, Config& cfg, Run& run, std::ostream& log) {
  cfg.validate();
  run.input(a.library);
  run.input(a.tokens);
  const auto lib = load_library(a.library);
  std::vector<json> recs;
  {
    std::istringstream in(read_file(a.tokens));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        recs.push_back(json::parse(line));
      } catch (const json::exception& e) {
        fail(ErrorKind::validation, a.tokens + ": line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  std::vector<Episode> eps(recs.size());
  parallel_for(recs.size(), cfg.threads, [&](std::size_t i) {
    const json& r = recs[i];
    try {
      const int version = r.at("format_version").get<int>();
      if (version != kLibraryFormatVersion)
        fail(ErrorKind::version_mismatch, "token format_version " + std::to_string(version) + " is not supported");
      Episode& ep = eps[i];
      ep.id = r.at("id").get<std::string>();
      ep.instruction = r.at("instruction").get<std::string>();
      ep.subtask = r.at("subtask").get<std::string>();
      ep.mirror_flag = r.at("mirror_flag").get<bool>();
      ep.frames = decode_trajectory(encoded_from_json(r), lib);
      ep.validate();
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, a.tokens + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  });
  run.write(run.out(), episodes_text(eps));
  log << "decode: " << eps.size() << " episodes\n";
  return {{"episodes", eps.size()}};
}

// dedup / mirror ------------------------------------------------------------

struct DedupArgs {
  std::string episodes;
  std::optional<double> threshold;
  std::optional<double> cell_size;
};

json dedup_cmd(const DedupArgs& a, Config& cfg, Run& run, std::ostream& log) {
  if (a.threshold) cfg.dedup_threshold = *a.threshold;
  if (a.cell_size) cfg.dedup_cell_size = *a.cell_size;
  cfg.validate();
  run.input(a.episodes);
  const auto eps = read_episodes(a.episodes);
  const auto rep = dedup(eps, {cfg.dedup_cell_size, cfg.dedup_threshold, cfg.threads});

  std::set<std::string> kept(rep.kept.begin(), rep.kept.end());
  std::vector<Episode> out;
  for (const auto& e : eps)
    if (kept.count(e.id)) out.push_back(e);
  run.write(run.out(), episodes_text(out));

  json removed = json::array();
  std::ostringstream csv;
  csv << "id,status,matched_id,distance\n";
  std::map<std::string, const DedupRemoval*> by_id;
  for (const auto& r : rep.removed) {
    removed.push_back({{"id", r.id}, {"matched_id", r.matched_id}, {"distance", r.distance}});
    by_id[r.id] = &r;
  }
  for (const auto& e : eps) {
    auto it = by_id.find(e.id);
    if (it == by_id.end()) {
      csv << csv_field(e.id) << ",kept,,\n";
    } else {
      csv << csv_field(e.id) << ",removed," << csv_field(it->second->matched_id) << ',' << fmt(it->second->distance)
          << '\n';
    }
  }
  const json report = {{"threshold", rep.threshold}, {"cell_size", rep.cell_size}, {"kept", rep.kept}, {"removed", removed}};
  run.write(run.derived(".report.json"), report.dump(1) + "\n");
  run.write(run.derived(".report.csv"), csv.str());
  log << "dedup: kept " << rep.kept.size() << ", removed " << rep.removed.size() << "\n";
  return {{"episodes", eps.size()}, {"kept", rep.kept.size()}, {"removed", rep.removed.size()}};
}

struct MirrorArgs {
  std::string episodes;
  bool both = false;
};

json mirror_cmd(const MirrorArgs& a, Config& cfg, Run& run, std::ostream& log) {
  cfg.validate();
  run.input(a.episodes);
  const auto eps = read_episodes(a.episodes);
  std::vector<Episode> mirrored(eps.size());
  parallel_for(eps.size(), cfg.threads,
               [&](std::size_t i) { mirrored[i] = mirror_episode(eps[i], cfg.mirror_frames, cfg.lexicon); });
  std::vector<Episode> out;
  if (a.both) out = eps;
  out.insert(out.end(), mirrored.begin(), mirrored.end());
  run.write(run.out(), episodes_text(out));
  log << "mirror: wrote " << out.size() << " episodes\n";
  return {{"episodes", eps.size()}, {"written", out.size()}};
}

// score ---------------------------------------------------------------------

struct ScoreArgs {
  std::string predictions;
  std::string ground_truth;
  std::string baseline;
  std::string judge;
};

json score_cmd(const ScoreArgs& a, Config& cfg, Run& run, std::ostream& log) {
  if (!a.judge.empty()) cfg.judge = a.judge;
  cfg.validate();
  run.input(a.predictions);
  run.input(a.ground_truth);
  const auto gts = read_ground_truth(a.ground_truth);
  const auto preds = read_predictions(a.predictions);
  MockJudge mock;
  ScoreOptions opt;
  opt.weights = cfg.weights;
  opt.judge = cfg.judge == "mock" ? &mock : nullptr;
  opt.threads = cfg.threads;
  opt.advantage_eps = cfg.advantage_eps;
  const auto reports = score_batch(preds, gts, opt);

  std::optional<std::vector<RewardReport>> base;
  if (!a.baseline.empty()) {
    run.input(a.baseline);
    base = score_batch(read_predictions(a.baseline), gts, opt);
  }
  std::string body;
  for (const auto& r : reports) body += to_json(r).dump() + "\n";
  run.write(run.out(), body);
  run.write(run.derived(".summary.csv"), summary_csv(reports, base ? &*base : nullptr));

  double mean_total = 0.0;
  for (const auto& r : reports) mean_total += r.total;
  if (!reports.empty()) mean_total /= static_cast<double>(reports.size());
  log << "score: " << reports.size() << " predictions\n";
  return {{"predictions", reports.size()}, {"mean_total", mean_total}, {"baseline", base.has_value()}};
}

// fit-scaling ---------------------------------------------------------------

struct FitScalingArgs {
  std::string observations;
};

json fit_scaling_cmd(const FitScalingArgs& a, Config& cfg, Run& run, std::ostream& log) {
  cfg.validate();
  run.input(a.observations);
  const auto obs = read_observations_csv(a.observations);
  ScalingFitOptions so = cfg.scaling;
  so.threads = cfg.threads;
  const auto rep = fit_scaling(obs, so);
  if (rep.degenerate)
    fail(ErrorKind::numerical, "scaling fit is degenerate: the losses carry no signal for beta and R_star");
  const auto& p = rep.params;
  const json result = {{"params", {{"B", p.B}, {"beta", p.beta}, {"E", p.E}, {"R_star", p.R_star}}},
                       {"residual_norm", rep.residual_norm},
                       {"grid_best_residual", rep.grid_best_residual},
                       {"iterations", rep.iterations},
                       {"converged", rep.converged},
                       {"observations", obs.size()}};
  run.write(run.out(), result.dump(1) + "\n");

  // Prediction curves, one gnuplot data block per distinct U_D.
  std::set<double> us;
  double r_max = 0.0;
  for (const auto& o : obs) {
    us.insert(o.U_D);
    r_max = std::max(r_max, o.R_D);
  }
  std::ostringstream curve;
  curve << "# R_D predicted_loss\n";
  for (double u : us) {
    curve << "# U_D " << fmt(u) << "\n";
    for (int k = 0; k <= 100; ++k) {
      const double r = 1.5 * r_max * k / 100.0;
      curve << fmt(r) << ' ' << fmt(predict_loss(p, u, r)) << '\n';
    }
    curve << "\n\n";
  }
  run.write(run.derived(".curve.dat"), curve.str());
  if (!rep.converged) log << "fit-scaling: refinement did not converge; reporting best parameters found\n";
  return {{"B", p.B}, {"beta", p.beta}, {"E", p.E}, {"R_star", p.R_star}, {"residual_norm", rep.residual_norm},
          {"converged", rep.converged}};
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "episodes";
  std::size_t count = 10;
  std::size_t frames = 120;
  std::size_t groups = 4;
  double B = 50.0, beta = 0.3, E = 0.8, R_star = 5.0, noise = 0.0;
};

json synth_cmd(const SynthArgs& a, Config& cfg, Run& run, std::ostream& log) {
  cfg.validate();
  if (a.kind == "episodes") {
    SynthOptions so;
    so.frames = a.frames;
    require(a.frames >= 1, "--frames must be >= 1");
    const auto eps = synth_corpus(a.count, cfg.seed, so, a.groups);
    run.write(run.out(), episodes_text(eps));
    log << "synth: " << eps.size() << " episodes\n";
    return {{"episodes", eps.size()}};
  }
  if (a.kind == "scaling") {
    const ScalingParams p{a.B, a.beta, a.E, a.R_star};
    p.validate();
    const auto d = default_scaling_design();
    const auto obs = synth_scaling(p, d.U, d.R, a.noise, cfg.seed);
    run.write(run.out(), observations_to_csv(obs));
    log << "synth: " << obs.size() << " scaling observations\n";
    return {{"observations", obs.size()}};
  }
  fail(ErrorKind::validation, "--kind must be 'episodes' or 'scaling'");
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
      return kIo;
    case ErrorKind::validation:
      return kValidation;
    case ErrorKind::insufficient_data:
      return kInsufficientData;
    case ErrorKind::numerical:
      return kNumerical;
    case ErrorKind::version_mismatch:
      return kVersionMismatch;
    case ErrorKind::judge:
      return kJudge;
  }
  return kValidation;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"actok: spatial action tokenizer, dataset tools, rewards and scaling fits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);
  Common common;

  FitLibraryArgs fit_a;
  auto* fit = app.add_subcommand("fit-library", "Fit the motion token library on an episode file");
  add_common(fit, common);
  fit->add_option("--episodes", fit_a.episodes, "Episode JSONL")->required();
  fit->add_option("--k-trans", fit_a.k_trans, "Translation clusters");
  fit->add_option("--k-rot", fit_a.k_rot, "Rotation clusters");

  EncodeArgs enc_a;
  auto* enc = app.add_subcommand("encode", "Encode episodes into action tokens");
  add_common(enc, common);
  enc->add_option("--library", enc_a.library, "Library JSON")->required();
  enc->add_option("--episodes", enc_a.episodes, "Episode JSONL")->required();
  enc->add_option("--mode", enc_a.mode, "greedy or top3");
  enc->add_option("--horizon", enc_a.horizon, "Maximum window length in frames");
  enc->add_option("--compression", enc_a.compression, "Compression CSV (default: <out>.compression.csv)");

  DecodeArgs dec_a;
  auto* dec = app.add_subcommand("decode", "Decode action tokens back into episodes");
  add_common(dec, common);
  dec->add_option("--library", dec_a.library, "Library JSON")->required();
  dec->add_option("--tokens", dec_a.tokens, "Token JSONL written by encode")->required();

  DedupArgs dd_a;
  auto* dd = app.add_subcommand("dedup", "Drop near-duplicate episodes within each instruction/subtask group");
  add_common(dd, common);
  dd->add_option("--episodes", dd_a.episodes, "Episode JSONL")->required();
  dd->add_option("--threshold", dd_a.threshold, "Distance below which an episode is a duplicate");
  dd->add_option("--cell-size", dd_a.cell_size, "Occupancy grid cell size in meters");

  MirrorArgs mi_a;
  auto* mi = app.add_subcommand("mirror", "Mirror episodes left to right");
  add_common(mi, common);
  mi->add_option("--episodes", mi_a.episodes, "Episode JSONL")->required();
  mi->add_flag("--both", mi_a.both, "Write the originals followed by the mirrored copies");

  ScoreArgs sc_a;
  auto* sc = app.add_subcommand("score", "Score predictions against ground truth");
  add_common(sc, common);
  sc->add_option("--predictions", sc_a.predictions, "Prediction JSONL")->required();
  sc->add_option("--ground-truth", sc_a.ground_truth, "Ground-truth JSONL")->required();
  sc->add_option("--baseline", sc_a.baseline, "Baseline prediction JSONL for NSR");
  sc->add_option("--judge", sc_a.judge, "mock or none");

  FitScalingArgs fs_a;
  auto* fs = app.add_subcommand("fit-scaling", "Fit the data-constrained scaling law");
  add_common(fs, common);
  fs->add_option("--observations", fs_a.observations, "CSV with columns U_D,R_D,loss")->required();

  SynthArgs sy_a;
  auto* sy = app.add_subcommand("synth", "Generate synthetic episodes or scaling observations");
  add_common(sy, common);
  sy->add_option("--kind", sy_a.kind, "episodes or scaling");
  sy->add_option("--count", sy_a.count, "Number of episodes");
  sy->add_option("--frames", sy_a.frames, "Frames per episode");
  sy->add_option("--groups", sy_a.groups, "Instruction/subtask groups");
  sy->add_option("--B", sy_a.B, "Scaling law amplitude");
  sy->add_option("--beta", sy_a.beta, "Scaling law exponent");
  sy->add_option("--E", sy_a.E, "Irreducible loss");
  sy->add_option("--R-star", sy_a.R_star, "Repetition decay constant");
  sy->add_option("--noise", sy_a.noise, "Relative Gaussian noise on the losses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Config cfg = resolve_config(common);
    CLI::App* sub = app.get_subcommands().front();
    Run r(sub->get_name(), common.out);
    json summary;
    if (sub == fit) {
      summary = fit_library_cmd(fit_a, cfg, r, err);
    } else if (sub == enc) {
      summary = encode_cmd(enc_a, cfg, r, err);
    } else if (sub == dec) {
      summary = decode_cmd(dec_a, cfg, r, err);
    } else if (sub == dd) {
      summary = dedup_cmd(dd_a, cfg, r, err);
    } else if (sub == mi) {
      summary = mirror_cmd(mi_a, cfg, r, err);
    } else if (sub == sc) {
      summary = score_cmd(sc_a, cfg, r, err);
    } else if (sub == fs) {
      summary = fit_scaling_cmd(fs_a, cfg, r, err);
    } else {
      summary = synth_cmd(sy_a, cfg, r, err);
    }
    r.finish(cfg, out, std::move(summary));
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace actok::cli
