#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "styleprior/config.hpp"
#include "styleprior/image_io.hpp"
#include "styleprior/rng.hpp"

using namespace styleprior;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "styleprior_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string out_file = (fs::temp_directory_path() / "styleprior_cli_out.txt").string();
  const std::string cmd = std::string(STYLEPRIOR_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) *output = read_file(out_file);
  return rc == 0 ? 0 : 1;
}

// Plain recursive edit distance with memoization, independent of the
// library's DP implementation.
int edit_distance_ref(const std::string& a, const std::string& b, std::size_t i, std::size_t j,
                      std::map<std::pair<std::size_t, std::size_t>, int>& memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int best = edit_distance_ref(a, b, i + 1, j + 1, memo) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, edit_distance_ref(a, b, i + 1, j, memo) + 1);
  best = std::min(best, edit_distance_ref(a, b, i, j + 1, memo) + 1);
  memo[key] = best;
  return best;
}

int edit_distance_ref(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, int> memo;
  return edit_distance_ref(a, b, 0, 0, memo);
}

std::string random_word(Rng& rng) {
  const int len = rng.uniform_int(8);
  std::string w;
  for (int i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.uniform_int(4)));
  return w;
}

}  // namespace

TEST_CASE("kv config parsing") {
  TempDir tmp;
  write_file_atomic(tmp.file("c.cfg"),
                    "# comment\niterations = 500\n\nlr=0.01   \n  strategy = per-layer # inline\n");
  auto kv = parse_kv_file(tmp.file("c.cfg"));
  CHECK(kv.size() == 3);
  CHECK(kv["iterations"] == "500");
  CHECK(kv["lr"] == "0.01");
  CHECK(kv["strategy"] == "per-layer");

  write_file_atomic(tmp.file("bad.cfg"), "just a line\n");
  CHECK_THROWS_AS(parse_kv_file(tmp.file("bad.cfg")), UsageError);
}

TEST_CASE("levenshtein matches an independent reference") {
  CHECK(levenshtein("iterations", "iteratons") == 1);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("kitten", "sitting") == 3);
  Rng rng(99);
  for (int i = 0; i < 60; ++i) {
    const std::string a = random_word(rng);
    const std::string b = random_word(rng);
    CHECK(levenshtein(a, b) == edit_distance_ref(a, b));
  }
}

TEST_CASE("unknown config key suggests the nearest one") {
  std::vector<std::string> known = {"iterations", "lr", "strategy", "mask-seed"};
  CHECK(nearest_key("iteratons", known) == "iterations");
  CHECK(nearest_key("strateg", known) == "strategy");
  try {
    validate_config_keys({{"iteratons", "7"}}, known);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("iterations") != std::string::npos);
  }
}

TEST_CASE("cli: bad invocations exit nonzero") {
  std::string out;
  CHECK(run_cli("no-such-command", &out) == 1);
  CHECK(run_cli("invert", &out) == 1);  // missing required options
  CHECK(run_cli("gen-data --out-dir /tmp/x --count -3", &out) == 1);
}

TEST_CASE("cli: gen-data writes a loadable dataset, no tmp litter") {
  TempDir tmp;
  std::string out;
  REQUIRE(run_cli("gen-data --out-dir " + tmp.file("data") + " --seed 3 --count 4 --resolution 16",
                  &out) == 0);
  CHECK(fs::exists(tmp.file("data") + "/manifest.txt"));
  CHECK(fs::exists(tmp.file("data") + "/sprite_000003.png"));
  for (const auto& e : fs::recursive_directory_iterator(tmp.file("data")))
    CHECK(e.path().extension() != ".tmp");

  // byte-identical on rerun with the same seed
  REQUIRE(run_cli("gen-data --out-dir " + tmp.file("data2") + " --seed 3 --count 4 --resolution 16",
                  &out) == 0);
  CHECK(read_file(tmp.file("data") + "/sprite_000000.png") ==
        read_file(tmp.file("data2") + "/sprite_000000.png"));
}

TEST_CASE("cli: pipeline smoke, config file and flag precedence") {
  TempDir tmp;
  std::string out;
  REQUIRE(run_cli("gen-data --out-dir " + tmp.file("data") + " --seed 5 --count 6 --resolution 16",
                  &out) == 0);

  write_file_atomic(tmp.file("train.cfg"),
                    "epochs=8\nbatch=3\nlatent-dim=8\nmapping-depth=2\nchannels=12,10,8\nseed=5\n");
  REQUIRE(run_cli("train --data-dir " + tmp.file("data") + " --out-dir " + tmp.file("model") +
                      " --config " + tmp.file("train.cfg"),
                  &out) == 0);
  CHECK(fs::exists(tmp.file("model") + "/checkpoint.ckpt"));
  CHECK(fs::exists(tmp.file("model") + "/train_loss.csv"));

  // a flag overrides the file value: epochs 2 beats epochs 8
  REQUIRE(run_cli("train --data-dir " + tmp.file("data") + " --out-dir " + tmp.file("model2") +
                      " --config " + tmp.file("train.cfg") + " --epochs 2",
                  &out) == 0);
  const std::string losses = read_file(tmp.file("model2") + "/train_loss.csv");
  CHECK(std::count(losses.begin(), losses.end(), '\n') == 3);  // header + 2 epochs

  // misspelled config key is rejected with a suggestion
  write_file_atomic(tmp.file("bad.cfg"), "epoochs=3\n");
  CHECK(run_cli("train --data-dir " + tmp.file("data") + " --out-dir " + tmp.file("m3") +
                    " --config " + tmp.file("bad.cfg"),
                &out) == 1);
  CHECK(out.find("epochs") != std::string::npos);

  // inversion at iterations 0 is a usage error
  CHECK(run_cli("invert --checkpoint " + tmp.file("model") + "/checkpoint.ckpt --image " +
                    tmp.file("data") + "/sprite_000000.png --out-dir " + tmp.file("inv") +
                    " --iterations 0",
                &out) == 1);

  // a working inversion leaves artifacts and no tmp files
  REQUIRE(run_cli("invert --checkpoint " + tmp.file("model") + "/checkpoint.ckpt --image " +
                      tmp.file("data") + "/sprite_000000.png --out-dir " + tmp.file("inv") +
                      " --iterations 20",
                  &out) == 0);
  CHECK(fs::exists(tmp.file("inv") + "/reconstruction.png"));
  CHECK(fs::exists(tmp.file("inv") + "/loss_curve.csv"));
  for (const auto& e : fs::recursive_directory_iterator(tmp.file("inv")))
    CHECK(e.path().extension() != ".tmp");

  const std::string curve = read_file(tmp.file("inv") + "/loss_curve.csv");
  CHECK(curve.substr(0, 14) == "iteration,loss");
}
