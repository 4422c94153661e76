#include "tvlab/tvlab.h"

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"

using namespace tvlab;

struct tvl_session {
  RunConfig cfg = default_run_config();
  std::string out_override;
  std::optional<AgentKind> variant_override;
  std::unique_ptr<Runner> runner;
  std::string run_dir;
  std::string last_error;
};

namespace {

tvl_status wrap(tvl_session* session, const std::function<void()>& body) {
  if (!session) return TVL_ERR_CONFIG;
  session->last_error.clear();
  try {
    body();
    return TVL_OK;
  } catch (const ConfigError& e) {
    session->last_error = e.what();
    return TVL_ERR_CONFIG;
  } catch (const IntegrityError& e) {
    session->last_error = e.what();
    return TVL_ERR_INTEGRITY;
  } catch (const NumericError& e) {
    session->last_error = e.what();
    return TVL_ERR_NUMERIC;
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return TVL_ERR_INTERNAL;
  }
}

Runner& runner_for(tvl_session* session) {
  if (!session->runner) {
    session->runner = std::make_unique<Runner>(session->cfg, session->out_override);
    session->run_dir = session->runner->dir().string();
  }
  return *session->runner;
}

}  // namespace

extern "C" {

const char* tvl_version(void) { return kSoftwareVersion; }

tvl_status tvl_session_new(tvl_session** out) {
  if (!out) return TVL_ERR_CONFIG;
  try {
    *out = new tvl_session();
    return TVL_OK;
  } catch (...) {
    return TVL_ERR_INTERNAL;
  }
}

void tvl_session_free(tvl_session* session) { delete session; }

tvl_status tvl_load_config(tvl_session* session, const char* path) {
  return wrap(session, [&] {
    if (!path) throw ConfigError("config path is null");
    session->cfg = load_config_file(path);
    session->runner.reset();
  });
}

tvl_status tvl_set_option(tvl_session* session, const char* key, const char* value) {
  return wrap(session, [&] {
    if (!key || !value) throw ConfigError("option key/value is null");
    std::string k(key), v(value);
    if (k == "out") {
      session->out_override = v;
    } else if (k == "seed") {
      session->cfg.seed = std::stoull(v);
    } else if (k == "workers") {
      session->cfg.workers = std::stoi(v);
      if (session->cfg.workers < 0) throw ConfigError("workers must be >= 0");
    } else if (k == "paper_scale") {
      if (v == "true" || v == "1") {
        apply_paper_scale(session->cfg);
      } else if (v != "false" && v != "0") {
        throw ConfigError("paper_scale must be true or false");
      }
    } else if (k == "variant") {
      session->variant_override = agent_kind_from_string(v);
    } else {
      throw ConfigError("unknown option: " + k);
    }
    session->runner.reset();
  });
}

tvl_status tvl_run_stage(tvl_session* session, const char* stage) {
  return wrap(session, [&] {
    if (!stage) throw ConfigError("stage name is null");
    std::string name(stage);
    Runner& runner = runner_for(session);
    if (name == "generate") {
      runner.generate();
    } else if (name == "metrics") {
      runner.metrics();
    } else if (name == "value") {
      if (session->variant_override) {
        runner.value(*session->variant_override);
      } else {
        for (AgentKind kind : session->cfg.variants) runner.value(kind);
      }
    } else if (name == "analyze") {
      runner.analyze();
    } else if (name == "curate") {
      runner.curate(session->variant_override.value_or(session->cfg.variants.front()));
    } else if (name == "saddle") {
      runner.saddle();
    } else if (name == "reproduce-paper") {
      runner.reproduce_paper();
    } else {
      throw ConfigError("unknown stage: " + name);
    }
  });
}

const char* tvl_run_dir(const tvl_session* session) {
  return session ? session->run_dir.c_str() : "";
}

const char* tvl_last_error(const tvl_session* session) {
  return session ? session->last_error.c_str() : "";
}

}  // extern "C"
