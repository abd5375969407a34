// Acceptance run: one PASS/FAIL line per criterion, exit 0 only if all hold.
//
// usage: acceptance [out_dir] [--only N,M,...]

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "gradient_oracle.hpp"
#include "schedule_invariants.hpp"
#include "tempolearn/experiments.hpp"

using namespace tempolearn;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::filesystem::path g_out = "acceptance_out";
std::map<std::string, PresetOutcome> g_runs;

PresetOutcome& preset(const std::string& id, const std::filesystem::path& dir = g_out) {
  const std::string key = id + "@" + dir.string();
  if (!g_runs.count(key)) {
    PresetOptions o;
    o.seed = 1;
    o.out_dir = dir;
    o.log = [](const std::string& m) { std::cerr << "  " << m << "\n"; };
    g_runs[key] = run_preset(id, o);
  }
  return g_runs[key];
}

/// Passes when every selected check of the preset passes.
Verdict checks_of(const std::string& id, const std::function<bool(const Check&)>& select = {}) {
  Verdict v{true, ""};
  std::size_t n = 0;
  for (const auto& c : preset(id).checks) {
    if (select && !select(c)) continue;
    ++n;
    if (!c.passed) {
      v.passed = false;
      v.detail += (v.detail.empty() ? "" : "; ") + c.name + " [" + c.detail + "]";
    }
  }
  if (n == 0) return {false, "no checks selected"};
  if (v.passed) v.detail = std::to_string(n) + " checks hold";
  return v;
}

bool contains(const Check& c, const std::string& s) { return c.name.find(s) != std::string::npos; }

Verdict gradient_oracle() {
  constexpr std::size_t kInstances = 100;
  Rng rng(derive_seed(1, 0xfd));
  oracle::Report ff, leaky, lstm;
  for (std::size_t i = 0; i < kInstances; ++i) {
    ff.merge(oracle::check_network(oracle::random_network(rng, false)));
    leaky.merge(oracle::check_network(oracle::random_network(rng, true)));
    lstm.merge(oracle::check_lstm(oracle::random_lstm(rng)));
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu instances each; worst relative error feedforward %.2g, leaky %.2g, lstm %.2g "
                "(tolerance %.0e)",
                kInstances, ff.worst, leaky.worst, lstm.worst, oracle::kRelTolerance);
  return {ff.ok() && leaky.ok() && lstm.ok(), buf};
}

Verdict schedule_properties() {
  const auto conditions = standard_conditions();
  std::vector<std::string> violations;
  std::size_t datasets = 0;
  auto scan = [&](const std::string& name, const Dataset& d) {
    ++datasets;
    for (auto& v : invariants::check_all(d, conditions, 1, 10)) violations.push_back(name + " " + v);
  };
  const auto syn = synthetic_classification(1);
  scan("synthetic-train", syn.train);
  scan("synthetic-test", syn.test);
  MnistOptions o = MnistOptions::desk();
  const auto mnist = mnist_classification(1, o);
  scan("mnist-train", mnist.train);
  scan("mnist-test", mnist.test);
  if (!violations.empty()) {
    return {false, std::to_string(violations.size()) + " violations, first: " + violations[0]};
  }
  return {true, std::to_string(datasets) + " datasets x " + std::to_string(conditions.size()) +
                    " conditions x 10 sessions"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict determinism() {
  const auto& a = preset("fig2c");
  const auto& b = preset("fig2c", g_out / "repeat");
  if (a.files.size() != b.files.size()) return {false, "different file sets"};
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    if (a.files[i].filename() != b.files[i].filename() || slurp(a.files[i]) != slurp(b.files[i])) {
      return {false, a.files[i].filename().string() + " differs"};
    }
  }
  return {true, std::to_string(a.files.size()) + " files byte-identical"};
}

struct Criterion {
  int id;
  const char* text;
  double budget_seconds;  // 0 = none
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string t; std::getline(list, t, ',');) only.insert(std::stoi(t));
    } else {
      g_out = arg;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "gradient oracle: analytic vs central finite differences", 60, gradient_oracle},
      {2, "feedforward: k1 < random < k5 < k10 (synthetic >= 9/10 seeds; MNIST subset)", 25 * 60,
       [] { return checks_of("fig2a"); }},
      {3, "leaky a=0.5: k5 < k1", 25 * 60, [] { return checks_of("fig2b"); }},
      {4, "leaky+reset: k3/k5/k10 significantly below k1 and random; below feedforward", 0,
       [] { return checks_of("fig2c", [](const Check& c) { return !contains(c, "stateless"); }); }},
      {5, "leaky+reset trained on k5 and evaluated stateless beats feedforward", 0,
       [] { return checks_of("fig2c", [](const Check& c) { return contains(c, "stateless"); }); }},
      {6, "non-overlapping stream: every memory variant worse than feedforward", 0,
       [] { return checks_of("a7"); }},
      {7, "criterion 2 ordering under cross-entropy", 25 * 60, [] { return checks_of("a3"); }},
      {8, "mini-batch: ABABAB == AAABBB bitwise; k16 batches homogeneous; late k16 <= k10, k24",
       0,
       [] {
         Verdict a = checks_of("a5", [](const Check& c) { return contains(c, "bitwise"); });
         Verdict b = checks_of("a6", [](const Check& c) { return !contains(c, "end-of-epoch"); });
         return Verdict{a.passed && b.passed, a.detail + "; " + b.detail};
       }},
      {9, "autoencoders: learning, reset selectivity bands above 0, no-memory error lowest",
       10 * 60, [] { return checks_of("fig3"); }},
      {10, "memory+reset autoencoders: slow error < fast error in >= 45/50 runs", 0,
       [] { return checks_of("a13"); }},
      {11, "lstm < leaky+reset on k5/k5; leaky+reset < lstm on k5/k1", 15 * 60,
       [] { return checks_of("a10"); }},
      {12, "schedule invariants on synthetic and MNIST subset", 0, schedule_properties},
      {13, "run fig2c --seed 1 twice gives byte-identical CSVs", 0, determinism},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    std::cerr << "criterion " << c.id << " ...\n";
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      v.passed = false;
      v.detail += "; over runtime budget";
    }
    all = all && v.passed;
    std::printf("criterion %2d %s: %s (%s; %.0fs)\n", c.id, v.passed ? "PASS" : "FAIL", c.text,
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
