// Command-line front end. Talks to the core exclusively through the C API in
// modrel.h; exit codes are the modrel_status values.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "modrel.h"

namespace {

struct ConfigGuard {
  modrel_config* cfg = nullptr;
  ~ConfigGuard() { modrel_config_free(cfg); }
};

int fail(modrel_status rc) {
  std::fprintf(stderr, "error: %s\n", modrel_last_error());
  return static_cast<int>(rc);
}

int load_config(const std::string& config_path, bool have_seed, int64_t seed, ConfigGuard& guard) {
  modrel_status rc = config_path.empty() ? modrel_config_create(&guard.cfg)
                                         : modrel_config_load(config_path.c_str(), &guard.cfg);
  if (rc != MODREL_OK) return fail(rc);
  if (have_seed) {
    rc = modrel_config_set(guard.cfg, "seed", std::to_string(seed).c_str());
    if (rc != MODREL_OK) return fail(rc);
  }
  return 0;
}

std::string effective_out(const modrel_config* cfg, const std::string& out_flag) {
  if (!out_flag.empty()) return out_flag;
  char buf[4096];
  if (modrel_config_get(cfg, "out_dir", buf, sizeof(buf)) == MODREL_OK) return buf;
  return "out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modular latent representation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_flag;
  int64_t seed = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--out", out_flag, "output directory (overrides out_dir from the config)");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string&) { have_seed = true; });

  CLI::App* gen = app.add_subcommand("gen-data", "render the dataset grid into the output directory");
  CLI::App* train = app.add_subcommand("train", "run the two-stage training schedule");
  std::string resume_path;
  train->add_option("--resume", resume_path, "checkpoint to resume from");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ckpt_path, report_path;
  eval->add_option("--checkpoint", ckpt_path, "checkpoint to evaluate (default <out>/final.ckpt)");
  eval->add_option("--report", report_path, "report destination (default <out>/report.json)");
  CLI::App* report = app.add_subcommand("report", "summaries and plot series from a training log");
  std::string log_path;
  report->add_option("--log", log_path, "training log CSV (default <out>/train_log.csv)");

  CLI11_PARSE(app, argc, argv);

  ConfigGuard guard;
  if (int rc = load_config(config_path, have_seed, seed, guard)) return rc;
  const std::string out = effective_out(guard.cfg, out_flag);

  if (gen->parsed()) {
    int64_t count = 0;
    const modrel_status rc = modrel_gen_data(guard.cfg, out.c_str(), &count);
    if (rc != MODREL_OK) return fail(rc);
    std::printf("wrote %lld records to %s\n", static_cast<long long>(count), out.c_str());
    return 0;
  }
  if (train->parsed()) {
    const modrel_status rc =
        modrel_train(guard.cfg, out.c_str(), resume_path.empty() ? nullptr : resume_path.c_str());
    if (rc != MODREL_OK) return fail(rc);
    std::printf("training complete; checkpoint %s/final.ckpt, log %s/train_log.csv\n", out.c_str(),
                out.c_str());
    return 0;
  }
  if (eval->parsed()) {
    const std::string ckpt = ckpt_path.empty() ? out + "/final.ckpt" : ckpt_path;
    const std::string dest = report_path.empty() ? out + "/report.json" : report_path;
    char* json = nullptr;
    const modrel_status rc = modrel_eval(guard.cfg, ckpt.c_str(), dest.c_str(), &json);
    if (rc != MODREL_OK) return fail(rc);
    std::fputs(json, stdout);
    modrel_string_free(json);
    return 0;
  }
  if (report->parsed()) {
    const std::string log = log_path.empty() ? out + "/train_log.csv" : log_path;
    const modrel_status rc = modrel_report(guard.cfg, log.c_str(), out.c_str());
    if (rc != MODREL_OK) return fail(rc);
    std::printf("wrote %s/summary.txt and %s/curves.csv\n", out.c_str(), out.c_str());
    return 0;
  }
  return 1;
}
