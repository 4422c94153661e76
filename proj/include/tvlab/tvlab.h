#ifndef TVLAB_H
#define TVLAB_H

/* tvlab — trajectory valuation laboratory for policy-gradient LQR.
 *
 * C interface to the shared library.  A session holds one run
 * configuration and one run directory; stages are executed by name and
 * write their artifacts (JSON/CSV) plus a manifest into that directory.
 *
 * All functions returning tvl_status use 0 for success; on failure the
 * session keeps a human-readable message retrievable via tvl_last_error.
 * Status values double as process exit codes for the bundled CLI.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define TVLAB_API __attribute__((visibility("default")))

typedef enum tvl_status {
  TVL_OK = 0,
  TVL_ERR_INTERNAL = 1,
  TVL_ERR_CONFIG = 2,    /* invalid configuration or arguments */
  TVL_ERR_INTEGRITY = 3, /* missing or stale artifacts */
  TVL_ERR_NUMERIC = 4    /* numeric failure / invariant violated */
} tvl_status;

/* Opaque session handle. */
typedef struct tvl_session tvl_session;

TVLAB_API const char* tvl_version(void);

TVLAB_API tvl_status tvl_session_new(tvl_session** out);
TVLAB_API void tvl_session_free(tvl_session* session);

/* Load a run configuration from a .toml or .json file.  Without a call to
 * this the session uses the built-in desk-scale defaults. */
TVLAB_API tvl_status tvl_load_config(tvl_session* session, const char* path);

/* Options, applied on top of the configuration:
 *   "out"         run directory (default: <output_dir>/<timestamp>-<hash>)
 *   "seed"        global seed, decimal u64
 *   "workers"     worker pool width, decimal (0 = hardware)
 *   "paper_scale" "true"/"false": full-scale experiment settings
 *   "variant"     "vanilla" | "whitened" | "npg": restrict value/curate
 */
TVLAB_API tvl_status tvl_set_option(tvl_session* session, const char* key, const char* value);

/* Run one stage: "generate" | "metrics" | "value" | "analyze" | "curate" |
 * "saddle" | "reproduce-paper". */
TVLAB_API tvl_status tvl_run_stage(tvl_session* session, const char* stage);

/* Resolved run directory (valid after the first stage). */
TVLAB_API const char* tvl_run_dir(const tvl_session* session);

/* Message for the most recent failure; empty string if none. */
TVLAB_API const char* tvl_last_error(const tvl_session* session);

#ifdef __cplusplus
}
#endif

#endif /* TVLAB_H */
