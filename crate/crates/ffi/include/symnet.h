#ifndef SYMNET_H
#define SYMNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SymnetStatus {
  SYMNET_STATUS_OK = 0,
  SYMNET_STATUS_NULL_POINTER = 1,
  SYMNET_STATUS_DOMAIN = 2,
  SYMNET_STATUS_POLE = 3,
  SYMNET_STATUS_SIZE_LIMIT = 4,
  SYMNET_STATUS_TOPOLOGY = 5,
  SYMNET_STATUS_MISMATCH = 6,
  SYMNET_STATUS_NUMERICAL = 7,
  SYMNET_STATUS_INCONSISTENT = 8,
  SYMNET_STATUS_CONFIG = 9,
  SYMNET_STATUS_SINK = 10,
  SYMNET_STATUS_BUFFER_TOO_SMALL = 11,
  SYMNET_STATUS_PANIC = 12,
} SymnetStatus;

typedef enum SymnetTopology {
  SYMNET_TOPOLOGY_BIPARTITE = 0,
  SYMNET_TOPOLOGY_STAR = 1,
} SymnetTopology;

typedef enum SymnetWModel {
  SYMNET_W_MODEL_XX_OUTER = 0,
  SYMNET_W_MODEL_XX_LOCAL_UNITARY = 1,
  SYMNET_W_MODEL_XXZ_TUNED = 2,
  SYMNET_W_MODEL_XX_CENTER_FIELD = 3,
} SymnetWModel;

// A network with its propagators.
typedef struct SymnetNetwork SymnetNetwork;

// A state of a network's spins.
typedef struct SymnetState SymnetState;

typedef struct SymnetNetworkParams {
  enum SymnetTopology topology;
  size_t n_supplementary;
  size_t m_target;
  double coupling;
  double anisotropy;
  double field_uniform;
  double field_center_extra;
} SymnetNetworkParams;

typedef struct SymnetOutcome {
  uint64_t pattern;
  size_t up_count;
  size_t inferred_k;
  double probability;
} SymnetOutcome;

typedef struct SymnetFirstRoundMaximum {
  double t_star;
  double p_star;
  double alignment_bound;
} SymnetFirstRoundMaximum;

typedef struct SymnetWSchedule {
  double anisotropy;
  double field_center_extra;
  double measurement_time;
  // Nonzero when the target is the whole network, zero for the outer spins.
  uint8_t targets_all_spins;
  // Nonzero when exact only up to a phase on the center spin.
  uint8_t needs_center_phase;
  // Fidelity at the scheduled time, phase-corrected where applicable.
  double fidelity;
} SymnetWSchedule;

typedef struct SymnetRunSummary {
  uint64_t trajectories;
  uint64_t successes;
  double success_rate;
  // NaN when no trajectory succeeded.
  double mean_rounds_to_success;
} SymnetRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library from the same thread.
const char *symnet_last_error_message(void);

// Heisenberg bipartite network with `J = 1` and no fields.
struct SymnetNetworkParams symnet_network_params_default(size_t n_supplementary, size_t m_target);

// Creates a network. Star networks are simulated as the bipartite network
// with one supplementary spin.
//
// # Safety
// `params` must point to a valid struct; `out` must be valid for writes.
enum SymnetStatus symnet_network_new(const struct SymnetNetworkParams *params,
                                     struct SymnetNetwork **out);

// # Safety
// `network` must be NULL or a handle from [`symnet_network_new`] not yet
// freed.
void symnet_network_free(struct SymnetNetwork *network);

// The initial state: supplementary spins down, target spins up.
//
// # Safety
// `network` must be a live handle; `out` must be valid for writes.
enum SymnetStatus symnet_state_initial(const struct SymnetNetwork *network,
                                       struct SymnetState **out);

// # Safety
// `state` must be NULL or a live state handle.
void symnet_state_free(struct SymnetState *state);

// Evolves `state` for time `t` into a new handle.
//
// # Safety
// Handles must be live; `out` must be valid for writes.
enum SymnetStatus symnet_state_evolve(const struct SymnetNetwork *network,
                                      const struct SymnetState *state,
                                      double t,
                                      struct SymnetState **out);

// Writes the probability of each supplementary up count `w = 0..=N` into
// `probs`, which must hold at least `N + 1` values.
//
// # Safety
// `state` must be live; `probs` must be valid for `len` writes.
enum SymnetStatus symnet_state_outcome_distribution(const struct SymnetState *state,
                                                    double *probs,
                                                    size_t len);

// Measures the supplementary register with the random stream
// `(seed, stream)` and returns the collapsed state as a new handle.
//
// # Safety
// `state` must be live; out pointers must be valid for writes.
enum SymnetStatus symnet_state_measure(const struct SymnetState *state,
                                       uint64_t seed,
                                       uint64_t stream,
                                       struct SymnetOutcome *outcome,
                                       struct SymnetState **out);

// Clebsch-Gordan coefficient with every quantum number given as twice its
// value.
//
// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_cg(int64_t twice_j1,
                            int64_t twice_m1,
                            int64_t twice_j2,
                            int64_t twice_m2,
                            int64_t twice_j,
                            int64_t twice_m,
                            double *out);

// `P_{S,m}` for `N` supplementary and `N` target spins, `m` given as twice
// its value.
//
// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_p_coeff(size_t n, size_t s, int64_t twice_m, double *out);

// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_p_s0_closed(size_t n, size_t s, double *out);

// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_p_of_t(size_t n, double t, double *out);

// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_p_max_numeric(size_t n, struct SymnetFirstRoundMaximum *out);

// Schedule of a W-state model on a star network with `m` outer spins.
//
// # Safety
// `out` must be valid for writes.
enum SymnetStatus symnet_w_schedule(size_t m, enum SymnetWModel model, struct SymnetWSchedule *out);

// Greedy repeat-until-success ensemble on `network`. When `histogram` is
// not NULL it receives, for each round `r <= histogram_len`, the number of
// trajectories first succeeding in round `r`.
//
// # Safety
// `network` must be live; `out` must be valid for writes; `histogram` must
// be NULL or valid for `histogram_len` writes.
enum SymnetStatus symnet_run_ensemble(const struct SymnetNetwork *network,
                                      size_t target_k,
                                      size_t max_rounds,
                                      uint64_t trajectories,
                                      uint64_t master_seed,
                                      struct SymnetRunSummary *out,
                                      uint64_t *histogram,
                                      size_t histogram_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMNET_H */
