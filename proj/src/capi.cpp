#include "modrel.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "experiment.hpp"

struct modrel_config {
  modrel::ExperimentConfig cfg;
};

struct modrel_dataset {
  modrel::Dataset ds;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
modrel_status guarded(Fn&& fn) {
  try {
    fn();
    return MODREL_OK;
  } catch (const modrel::Error& e) {
    g_last_error = e.what();
    return static_cast<modrel_status>(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MODREL_ERR_USAGE;
  }
}

modrel_status usage_error(const char* msg) {
  g_last_error = msg;
  return MODREL_ERR_USAGE;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

modrel_status copy_to_buf(const std::string& s, char* buf, size_t buf_len) {
  if (!buf || buf_len < s.size() + 1) return usage_error("buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return MODREL_OK;
}

}  // namespace

extern "C" {

const char* modrel_version(void) { return "1.0.0"; }

const char* modrel_last_error(void) { return g_last_error.c_str(); }

modrel_status modrel_config_create(modrel_config** out) {
  if (!out) return usage_error("null output pointer");
  return guarded([&] { *out = new modrel_config{}; });
}

modrel_status modrel_config_load(const char* path, modrel_config** out) {
  if (!path || !out) return usage_error("null argument");
  return guarded([&] { *out = new modrel_config{modrel::ExperimentConfig::load(path)}; });
}

modrel_status modrel_config_parse(const char* text, modrel_config** out) {
  if (!text || !out) return usage_error("null argument");
  return guarded([&] { *out = new modrel_config{modrel::ExperimentConfig::parse_text(text)}; });
}

modrel_status modrel_config_set(modrel_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return usage_error("null argument");
  return guarded([&] { cfg->cfg.set(key, value); });
}

modrel_status modrel_config_get(const modrel_config* cfg, const char* key, char* buf, size_t buf_len) {
  if (!cfg || !key) return usage_error("null argument");
  modrel_status status = MODREL_OK;
  const modrel_status rc = guarded([&] { status = copy_to_buf(cfg->cfg.get(key), buf, buf_len); });
  return rc != MODREL_OK ? rc : status;
}

modrel_status modrel_config_digest(const modrel_config* cfg, char* buf, size_t buf_len) {
  if (!cfg) return usage_error("null argument");
  modrel_status status = MODREL_OK;
  const modrel_status rc = guarded([&] { status = copy_to_buf(cfg->cfg.digest(), buf, buf_len); });
  return rc != MODREL_OK ? rc : status;
}

modrel_status modrel_config_canonical(const modrel_config* cfg, char** text_out) {
  if (!cfg || !text_out) return usage_error("null argument");
  return guarded([&] { *text_out = dup_string(cfg->cfg.canonical_text()); });
}

void modrel_config_free(modrel_config* cfg) { delete cfg; }

modrel_status modrel_dataset_generate(const modrel_config* cfg, modrel_dataset** out) {
  if (!cfg || !out) return usage_error("null argument");
  return guarded([&] {
    *out = new modrel_dataset{modrel::generate_dataset(
        cfg->cfg.factor_spec(), cfg->cfg.dataset_height, cfg->cfg.dataset_width,
        cfg->cfg.dataset_channels, cfg->cfg.seed, cfg->cfg.dataset_max_bytes)};
  });
}

modrel_status modrel_dataset_load(const char* dir, modrel_dataset** out) {
  if (!dir || !out) return usage_error("null argument");
  return guarded([&] { *out = new modrel_dataset{modrel::load_dataset(dir)}; });
}

modrel_status modrel_dataset_save(const modrel_dataset* ds, const char* dir) {
  if (!ds || !dir) return usage_error("null argument");
  return guarded([&] { modrel::save_dataset(ds->ds, dir); });
}

int64_t modrel_dataset_count(const modrel_dataset* ds) { return ds ? ds->ds.count : 0; }

int64_t modrel_dataset_image_size(const modrel_dataset* ds) { return ds ? ds->ds.image_size() : 0; }

int modrel_dataset_factor_count(const modrel_dataset* ds) {
  return ds ? ds->ds.spec.factor_count() : 0;
}

modrel_status modrel_dataset_image(const modrel_dataset* ds, int64_t index, float* buf,
                                   size_t buf_len) {
  if (!ds || !buf) return usage_error("null argument");
  if (index < 0 || index >= ds->ds.count) return usage_error("record index out of range");
  const size_t n = static_cast<size_t>(ds->ds.image_size());
  if (buf_len < n) return usage_error("buffer too small");
  std::memcpy(buf, ds->ds.image(index), n * sizeof(float));
  return MODREL_OK;
}

modrel_status modrel_dataset_factors(const modrel_dataset* ds, int64_t index, int32_t* buf,
                                     size_t buf_len) {
  if (!ds || !buf) return usage_error("null argument");
  if (index < 0 || index >= ds->ds.count) return usage_error("record index out of range");
  const size_t k = static_cast<size_t>(ds->ds.spec.factor_count());
  if (buf_len < k) return usage_error("buffer too small");
  std::memcpy(buf, ds->ds.factor_values.data() + static_cast<size_t>(index) * k, k * sizeof(int32_t));
  return MODREL_OK;
}

void modrel_dataset_free(modrel_dataset* ds) { delete ds; }

modrel_status modrel_gen_data(const modrel_config* cfg, const char* out_dir, int64_t* count_out) {
  if (!cfg || !out_dir) return usage_error("null argument");
  return guarded([&] {
    const int64_t n = modrel::gen_data_run(cfg->cfg, out_dir);
    if (count_out) *count_out = n;
  });
}

modrel_status modrel_train(const modrel_config* cfg, const char* out_dir,
                           const char* resume_checkpoint) {
  if (!cfg || !out_dir) return usage_error("null argument");
  return guarded([&] {
    modrel::train_run(cfg->cfg, out_dir, resume_checkpoint ? resume_checkpoint : "");
  });
}

modrel_status modrel_eval(const modrel_config* cfg, const char* checkpoint_path,
                          const char* report_path, char** json_out) {
  if (!cfg || !checkpoint_path) return usage_error("null argument");
  return guarded([&] {
    const std::string json =
        modrel::eval_run(cfg->cfg, checkpoint_path, report_path ? report_path : "");
    if (json_out) *json_out = dup_string(json);
  });
}

modrel_status modrel_report(const modrel_config* cfg, const char* log_csv, const char* out_dir) {
  if (!cfg || !log_csv || !out_dir) return usage_error("null argument");
  return guarded([&] { modrel::report_run(cfg->cfg, log_csv, out_dir); });
}

void modrel_string_free(char* s) { delete[] s; }

}  // extern "C"
