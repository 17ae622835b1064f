#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "actok/cli.hpp"
#include "actok/dedup.hpp"
#include "actok/episode.hpp"
#include "actok/rewards.hpp"
#include "actok/synth.hpp"
#include "support.hpp"

using namespace actok;
using nlohmann::json;
using testing::TempDir;

namespace {

const std::string kData = ACTOK_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
  json summary() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "actok");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::size_t count_lines(const std::string& path) {
  const auto s = slurp(path);
  return std::size_t(std::count(s.begin(), s.end(), '\n'));
}

// Output files of a run, with the manifest's wall-clock timing dropped.
std::map<std::string, std::string> outputs(const Result& r) {
  std::map<std::string, std::string> m;
  const auto s = r.summary();
  for (const auto& p : s["outputs"]) m[p] = slurp(p);
  auto manifest = json::parse(slurp(s["manifest"]));
  manifest.erase("timing");
  m["manifest"] = manifest.dump();
  return m;
}

void check_deterministic(const std::vector<std::string>& args) {
  const auto a = run(args);
  REQUIRE(a.code == 0);
  const auto first = outputs(a);
  const auto b = run(args);
  REQUIRE(b.code == 0);
  CHECK(outputs(b) == first);
}

}  // namespace

TEST_CASE("usage errors and help") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
  CHECK(run({"fit-library", "--help"}).code == cli::kOk);
  CHECK(run({"--version"}).code == cli::kOk);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"fit-library", "--episodes", kData + "/sample_episodes.jsonl"}).code == cli::kUsage);
  CHECK(run({"encode", "--library", "x", "--episodes", "y", "--out", "z", "--horizon", "abc"}).code == cli::kUsage);
}

TEST_CASE("exit code table") {
  CHECK(cli::exit_code(ErrorKind::io) == 2);
  CHECK(cli::exit_code(ErrorKind::validation) == 3);
  CHECK(cli::exit_code(ErrorKind::insufficient_data) == 4);
  CHECK(cli::exit_code(ErrorKind::numerical) == 5);
  CHECK(cli::exit_code(ErrorKind::version_mismatch) == 6);
  CHECK(cli::exit_code(ErrorKind::judge) == 7);

  TempDir dir;
  const auto missing = run({"fit-library", "--episodes", dir / "nope.jsonl", "--out", dir / "lib.json"});
  CHECK(missing.code == cli::kIo);
  CHECK(missing.out.empty());
  CHECK(missing.err.find("nope.jsonl") != std::string::npos);

  spit(dir / "bad.jsonl", "{\"id\": 3}\n");
  CHECK(run({"mirror", "--episodes", dir / "bad.jsonl", "--out", dir / "m.jsonl"}).code == cli::kValidation);

  spit(dir / "cfg.json", "{\"waypoints\": {\"pos_eps\": -1}}");
  CHECK(run({"mirror", "--config", dir / "cfg.json", "--episodes", kData + "/sample_episodes.jsonl", "--out",
             dir / "m.jsonl"})
            .code == cli::kValidation);
  spit(dir / "cfg.json", "{\"no_such_key\": 1}");
  CHECK(run({"mirror", "--config", dir / "cfg.json", "--episodes", kData + "/sample_episodes.jsonl", "--out",
             dir / "m.jsonl"})
            .code == cli::kValidation);
}

TEST_CASE("fit-library on the bundled sample") {
  TempDir dir;
  const auto r = run({"fit-library", "--episodes", kData + "/sample_episodes.jsonl", "--out", dir / "lib.json"});
  REQUIRE(r.code == 0);
  const auto s = r.summary();
  CHECK(s["k_trans"] == 150);
  CHECK(s["k_rot"] == 150);
  const auto lib = json::parse(slurp(dir / "lib.json"));
  CHECK(lib["trans_centroids"].size() == 150);
  CHECK(lib["rot_centroids"].size() == 150);

  const auto manifest = json::parse(slurp(s["manifest"]));
  CHECK(manifest["command"] == "fit-library");
  CHECK(manifest["inputs"].size() == 1);
  CHECK(manifest["inputs"][0]["fnv1a"].get<std::string>().size() == 16);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["timing"]["wall_seconds"].get<double>() >= 0.0);

  // A handful of short episodes cannot fill 150 clusters.
  SynthOptions opt;
  opt.frames = 20;
  write_episodes(dir / "tiny.jsonl", synth_corpus(2, 3, opt));
  const auto tiny = run({"fit-library", "--episodes", dir / "tiny.jsonl", "--out", dir / "tiny_lib.json"});
  CHECK(tiny.code == cli::kInsufficientData);
}

TEST_CASE("config file, env var and flag precedence") {
  TempDir dir;
  spit(dir / "cfg.json", "{\"tokenizer\": {\"k_trans\": 20, \"k_rot\": 30}}");
  auto r = run({"fit-library", "--config", dir / "cfg.json", "--episodes", kData + "/sample_episodes.jsonl", "--out",
                dir / "a.json"});
  REQUIRE(r.code == 0);
  CHECK(r.summary()["k_trans"] == 20);
  r = run({"fit-library", "--config", dir / "cfg.json", "--k-trans", "25", "--episodes",
           kData + "/sample_episodes.jsonl", "--out", dir / "b.json"});
  REQUIRE(r.code == 0);
  CHECK(r.summary()["k_trans"] == 25);
  CHECK(r.summary()["k_rot"] == 30);

  ::setenv("ACTOK_CONFIG", (dir / "cfg.json").c_str(), 1);
  r = run({"fit-library", "--episodes", kData + "/sample_episodes.jsonl", "--out", dir / "c.json"});
  ::unsetenv("ACTOK_CONFIG");
  REQUIRE(r.code == 0);
  CHECK(r.summary()["k_rot"] == 30);
}

TEST_CASE("encode and decode") {
  TempDir dir;
  SynthOptions opt;
  opt.frames = 90;
  write_episodes(dir / "eps.jsonl", synth_corpus(30, 5, opt));
  REQUIRE(run({"fit-library", "--k-trans", "40", "--k-rot", "40", "--episodes", dir / "eps.jsonl", "--out",
               dir / "lib.json"})
              .code == 0);
  const auto enc = run({"encode", "--library", dir / "lib.json", "--episodes", dir / "eps.jsonl", "--out",
                        dir / "tok.jsonl"});
  REQUIRE(enc.code == 0);
  CHECK(count_lines(dir / "tok.jsonl") == 30);
  CHECK(slurp(dir / "tok.jsonl.compression.csv").find("episode") != std::string::npos);
  const auto dec = run({"decode", "--library", dir / "lib.json", "--tokens", dir / "tok.jsonl", "--out",
                        dir / "dec.jsonl"});
  REQUIRE(dec.code == 0);
  const auto original = read_episodes(dir / "eps.jsonl");
  const auto decoded = read_episodes(dir / "dec.jsonl");
  REQUIRE(decoded.size() == original.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) {
    CHECK(decoded[i].id == original[i].id);
    CHECK(decoded[i].frames.size() == original[i].frames.size());
  }

  spit(dir / "empty.jsonl", "");
  CHECK(run({"encode", "--library", dir / "lib.json", "--episodes", dir / "empty.jsonl", "--out", dir / "e.jsonl"})
            .code == 0);
  CHECK(slurp(dir / "e.jsonl").empty());
  CHECK(run({"decode", "--library", dir / "lib.json", "--tokens", dir / "empty.jsonl", "--out", dir / "d.jsonl"})
            .code == 0);
  CHECK(slurp(dir / "d.jsonl").empty());

  auto lib = json::parse(slurp(dir / "lib.json"));
  lib["format_version"] = 99;
  spit(dir / "future.json", lib.dump());
  const auto vm = run({"encode", "--library", dir / "future.json", "--episodes", dir / "eps.jsonl", "--out",
                       dir / "v.jsonl"});
  CHECK(vm.code == cli::kVersionMismatch);
  CHECK(vm.err.find("version") != std::string::npos);

  auto first = json::parse(slurp(dir / "tok.jsonl").substr(0, slurp(dir / "tok.jsonl").find('\n')));
  first["format_version"] = 99;
  spit(dir / "future_tok.jsonl", first.dump() + "\n");
  CHECK(run({"decode", "--library", dir / "lib.json", "--tokens", dir / "future_tok.jsonl", "--out", dir / "x.jsonl"})
            .code == cli::kVersionMismatch);

  CHECK(run({"encode", "--library", dir / "lib.json", "--episodes", dir / "eps.jsonl", "--horizon", "41", "--out",
             dir / "h.jsonl"})
            .code == cli::kValidation);
  CHECK(run({"encode", "--library", dir / "lib.json", "--episodes", dir / "eps.jsonl", "--mode", "best", "--out",
             dir / "h.jsonl"})
            .code == cli::kValidation);
}

TEST_CASE("dedup and mirror") {
  TempDir dir;
  auto eps = synth_corpus(10, 6);
  auto doubled = eps;
  for (auto e : eps) {
    e.id += "-dup";
    doubled.push_back(e);
  }
  write_episodes(dir / "dup.jsonl", doubled);
  const auto r = run({"dedup", "--episodes", dir / "dup.jsonl", "--out", dir / "kept.jsonl"});
  REQUIRE(r.code == 0);
  CHECK(count_lines(dir / "kept.jsonl") == 10);
  const auto report = json::parse(slurp(dir / "kept.jsonl.report.json"));
  CHECK(report["removed"].size() == 10);
  CHECK(count_lines(dir / "kept.jsonl.report.csv") == 21);

  // Reported distances agree with the library call.
  write_episodes(dir / "plain.jsonl", eps);
  REQUIRE(run({"dedup", "--episodes", dir / "plain.jsonl", "--threshold", "0.9", "--out", dir / "k2.jsonl"}).code == 0);
  const auto rep2 = json::parse(slurp(dir / "k2.jsonl.report.json"));
  const auto direct = dedup(eps, {0.05, 0.9, 1});
  REQUIRE(rep2["removed"].size() == direct.removed.size());
  for (std::size_t i = 0; i < direct.removed.size(); ++i) {
    CHECK(rep2["removed"][i]["id"] == direct.removed[i].id);
    CHECK(rep2["removed"][i]["distance"].get<double>() == direct.removed[i].distance);
  }

  REQUIRE(run({"mirror", "--episodes", dir / "plain.jsonl", "--both", "--out", dir / "both.jsonl"}).code == 0);
  CHECK(count_lines(dir / "both.jsonl") == 20);
  REQUIRE(run({"mirror", "--episodes", dir / "plain.jsonl", "--out", dir / "m.jsonl"}).code == 0);
  const auto mirrored = read_episodes(dir / "m.jsonl");
  REQUIRE(mirrored.size() == 10);
  CHECK(mirrored[0].mirror_flag);
  CHECK(mirrored[0].id == eps[0].id + "~mirror");
}

TEST_CASE("score") {
  TempDir dir;
  const auto r = run({"score", "--predictions", kData + "/predictions.jsonl", "--ground-truth",
                      kData + "/ground_truth.jsonl", "--baseline", kData + "/baseline.jsonl", "--out",
                      dir / "rep.jsonl"});
  REQUIRE(r.code == 0);
  const auto csv = slurp(dir / "rep.jsonl.summary.csv");
  CHECK(csv.find("bbox reward,") != std::string::npos);
  CHECK(csv.find(",-,-,-\n") != std::string::npos);

  // Ground truth scored against itself.
  std::ifstream gt(kData + "/ground_truth.jsonl");
  std::ofstream self(dir / "self.jsonl");
  for (std::string line; std::getline(gt, line);) {
    auto g = json::parse(line);
    json p = {{"id", g["id"]}, {"gt", g["id"]}, {"action", g["action"]}};
    if (g["mode"] == "full") {
      p["text"] =
          "<think>x</think><subtask>y</subtask><bbox>[0.1, 0.1, 0.2, 0.2]</bbox>"
          "<trajectory>left: [(0.1, 0.1)]; right: [(0.2, 0.2)]</trajectory><action>1 2</action>";
      p["reasoning"] = g["reasoning"];
      p["waypoints"] = g["waypoints"];
      if (g.contains("bbox")) p["bbox"] = g["bbox"];
      if (g.contains("region")) p["keypoints"] = {{g["region"][0], g["region"][1]}};
    } else {
      p["text"] = "<subtask>y</subtask><action>1 2</action>";
    }
    self << p.dump() << "\n";
  }
  self.close();
  const auto s = run({"score", "--predictions", dir / "self.jsonl", "--ground-truth", kData + "/ground_truth.jsonl",
                      "--out", dir / "self_rep.jsonl"});
  REQUIRE(s.code == 0);
  std::ifstream in(dir / "self_rep.jsonl");
  for (std::string line; std::getline(in, line);) CHECK(json::parse(line)["total"].get<double>() == doctest::Approx(1.0));
  CHECK(slurp(dir / "self_rep.jsonl.summary.csv").find("total reward,1.000000,0.000000,-,1.000000,0.000000,-") !=
        std::string::npos);

  spit(dir / "orphan.jsonl", "{\"id\": \"p\", \"gt\": \"missing\"}\n");
  CHECK(run({"score", "--predictions", dir / "orphan.jsonl", "--ground-truth", kData + "/ground_truth.jsonl", "--out",
             dir / "o.jsonl"})
            .code == cli::kValidation);
  CHECK(run({"score", "--predictions", dir / "self.jsonl", "--ground-truth", kData + "/ground_truth.jsonl", "--judge",
             "oracle", "--out", dir / "o.jsonl"})
            .code == cli::kValidation);
}

TEST_CASE("fit-scaling") {
  TempDir dir;
  const auto r = run({"fit-scaling", "--observations", kData + "/scaling_observations.csv", "--out",
                      dir / "fit.json"});
  REQUIRE(r.code == 0);
  const auto fit = json::parse(slurp(dir / "fit.json"));
  CHECK(fit.contains("residual_norm"));
  CHECK(fit["params"]["beta"].get<double>() == doctest::Approx(0.3).epsilon(0.05));
  CHECK(fit["params"]["R_star"].get<double>() == doctest::Approx(5.0).epsilon(0.05));
  CHECK(slurp(dir / "fit.json.curve.dat").find("U_D") != std::string::npos);

  spit(dir / "bad.csv", "U_D,R_D,loss\n100,0,2\n100,oops,1.5\n");
  const auto bad = run({"fit-scaling", "--observations", dir / "bad.csv", "--out", dir / "b.json"});
  CHECK(bad.code == cli::kValidation);
  CHECK(bad.err.find("line 3") != std::string::npos);

  spit(dir / "flat.csv", "U_D,R_D,loss\n100,0,1\n1000,0,1\n100,2,1\n1000,2,1\n");
  CHECK(run({"fit-scaling", "--observations", dir / "flat.csv", "--out", dir / "f.json"}).code == cli::kNumerical);
  spit(dir / "few.csv", "U_D,R_D,loss\n100,0,1\n1000,0,1\n");
  CHECK(run({"fit-scaling", "--observations", dir / "few.csv", "--out", dir / "f.json"}).code ==
        cli::kInsufficientData);
}

TEST_CASE("every command is deterministic") {
  TempDir dir;
  const std::string eps = kData + "/sample_episodes.jsonl";
  check_deterministic({"synth", "--kind", "episodes", "--count", "5", "--seed", "3", "--out", dir / "s.jsonl"});
  check_deterministic({"synth", "--kind", "scaling", "--noise", "0.01", "--seed", "3", "--out", dir / "s.csv"});
  check_deterministic({"fit-library", "--seed", "4", "--k-trans", "60", "--k-rot", "60", "--episodes", eps, "--out",
                       dir / "lib.json"});
  check_deterministic({"encode", "--mode", "top3", "--seed", "4", "--library", dir / "lib.json", "--episodes", eps,
                       "--out", dir / "tok.jsonl"});
  check_deterministic({"decode", "--library", dir / "lib.json", "--tokens", dir / "tok.jsonl", "--out",
                       dir / "dec.jsonl"});
  check_deterministic({"dedup", "--threads", "3", "--episodes", eps, "--out", dir / "dd.jsonl"});
  check_deterministic({"mirror", "--both", "--episodes", eps, "--out", dir / "mm.jsonl"});
  check_deterministic({"score", "--threads", "2", "--predictions", kData + "/predictions.jsonl", "--ground-truth",
                       kData + "/ground_truth.jsonl", "--baseline", kData + "/baseline.jsonl", "--out",
                       dir / "sc.jsonl"});
  check_deterministic({"fit-scaling", "--observations", kData + "/scaling_observations.csv", "--out",
                       dir / "fs.json"});
}
