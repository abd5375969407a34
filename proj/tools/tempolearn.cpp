#include <cstdlib>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "tempolearn/config.hpp"

using namespace tempolearn;

namespace {

enum Exit { kOk = 0, kExpectationsFailed = 1, kError = 2 };

std::filesystem::path default_out() {
  const char* env = std::getenv("TEMPOLEARN_OUT");
  return env && *env ? env : "out";
}

int generate(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::filesystem::path& out) {
  RunConfig config = config_path.empty() ? parse_config("") : load_config(config_path);
  if (seed) config.training.master_seed = *seed;
  const auto data = build_data(config.dataset, config.training.master_seed, 0);
  std::filesystem::create_directories(out);
  write_dataset_csv(data.train, out / "dataset_train.csv");
  write_dataset_csv(data.test, out / "dataset_test.csv");
  Schedule schedule;
  if (config.stream) {
    std::vector<std::size_t> identity(data.train.size());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    schedule = schedule_from_order(data.train, identity);
  } else {
    const auto session = run_session(data.train, config.training.master_seed, 0);
    schedule = make_schedule(data.train, session, config.arm.train_condition);
  }
  write_schedule_csv(data.train, schedule, out / "schedule.csv");
  std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
            << " test samples to " << out.string() << "\n";
  return kOk;
}

int train(const std::string& config_path, std::optional<std::uint64_t> seed,
          const std::filesystem::path& out) {
  RunConfig config = load_config(config_path);
  if (seed) config.training.master_seed = *seed;
  const auto path = run_config(config, out);
  std::cout << "wrote " << path.string() << "\n";
  return kOk;
}

int run(const std::string& id, std::uint64_t seed, const std::string& scale,
        const std::filesystem::path& out, std::size_t runs, const std::string& mnist_dir,
        bool quiet) {
  PresetOptions options;
  options.seed = seed;
  options.scale = parse_scale(scale);
  options.out_dir = out;
  options.runs = runs;
  options.mnist_dir = mnist_dir;
  if (!quiet) options.log = [](const std::string& m) { std::cerr << m << "\n"; };
  const auto outcome = run_preset(id, options);
  std::size_t passed = 0;
  for (const auto& c : outcome.checks) passed += c.passed;
  std::cout << id << ": " << (outcome.passed() ? "PASS" : "FAIL") << " (" << passed << "/"
            << outcome.checks.size() << " expectations hold; " << (out / id).string() << ")\n";
  return outcome.passed() ? kOk : kExpectationsFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempolearn: learning from temporally smooth data"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = default_out().string();
  std::string scale = "desk";
  std::size_t runs = 0;
  std::string mnist_dir;
  bool quiet = false;

  auto* gen = app.add_subcommand("generate", "write dataset and schedule CSVs");
  gen->add_option("--config", config_path, "TOML config ([dataset] and [schedule] are used)");
  gen->add_option("--seed", seed, "master seed (overrides training.seed)");
  gen->add_option("--out", out, "output directory (default $TEMPOLEARN_OUT or ./out)");

  auto* tr = app.add_subcommand("train", "train one configuration and write its curves CSV");
  tr->add_option("--config", config_path, "TOML config")->required();
  tr->add_option("--seed", seed, "master seed (overrides training.seed)");
  tr->add_option("--out", out, "output directory (default $TEMPOLEARN_OUT or ./out)");

  std::string preset;
  std::uint64_t preset_seed = 1;
  auto* rn = app.add_subcommand("run", "run an experiment preset");
  rn->add_option("preset", preset, "preset id (see list-presets)")->required();
  rn->add_option("--seed", preset_seed, "master seed");
  rn->add_option("--scale", scale, "desk | full")->check(CLI::IsMember({"desk", "full"}));
  rn->add_option("--out", out, "output directory (default $TEMPOLEARN_OUT or ./out)");
  rn->add_option("--runs", runs, "override the preset's run count");
  rn->add_option("--mnist-dir", mnist_dir, "directory with MNIST IDX files");
  rn->add_flag("--quiet", quiet, "suppress progress on stderr");

  auto* ls = app.add_subcommand("list-presets", "list preset ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*gen) return generate(config_path, seed, out);
    if (*tr) return train(config_path, seed, out);
    if (*rn) return run(preset, preset_seed, scale, out, runs, mnist_dir, quiet);
    if (*ls) {
      for (const auto& p : list_presets()) std::cout << p.id << "\t" << p.summary << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
