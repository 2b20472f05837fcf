#ifndef TRANSMON_TWIN_H
#define TRANSMON_TWIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Switch bits for `twin_params_disable`.
 */
#define TWIN_EFFECT_PASSIVE 1

#define TWIN_EFFECT_SPAM 2

#define TWIN_EFFECT_TWO_QUBIT_GATE 4

#define TWIN_EFFECT_SINGLE_QUBIT_GATE 8

#define TWIN_EFFECT_ALWAYS_ON 16

/**
 * Result code of every fallible call.
 */
typedef enum TwinStatus {
  TWIN_STATUS_OK = 0,
  TWIN_STATUS_NULL_POINTER = 1,
  TWIN_STATUS_INVALID_UTF8 = 2,
  TWIN_STATUS_IO = 3,
  TWIN_STATUS_PARSE = 4,
  TWIN_STATUS_VALIDATION = 5,
  TWIN_STATUS_SIMULATION = 6,
  TWIN_STATUS_BUFFER_TOO_SMALL = 7,
  TWIN_STATUS_PANIC = 8,
} TwinStatus;

/**
 * Gate-level circuit.
 */
typedef struct TwinCircuit TwinCircuit;

/**
 * Calibration snapshot.
 */
typedef struct TwinDevice TwinDevice;

/**
 * Outcome distribution.
 */
typedef struct TwinDistribution TwinDistribution;

/**
 * Noise parameters and effect switches.
 */
typedef struct TwinParams TwinParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *twin_last_error(void);

/**
 * Loads a device calibration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TwinStatus twin_device_load(const char *path, struct TwinDevice **out);

/**
 * The bundled five-qubit star device.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TwinStatus twin_device_bundled(struct TwinDevice **out);

/**
 * Number of qubits of the device, 0 for a null handle.
 *
 * # Safety
 * `device` must be null or a live handle.
 */
size_t twin_device_num_qubits(const struct TwinDevice *device);

/**
 * # Safety
 * `device` must be null or a handle not freed before.
 */
void twin_device_free(struct TwinDevice *device);

/**
 * Parses circuit text.
 *
 * # Safety
 * `text` and `name` must be NUL-terminated strings and `out` a valid pointer.
 */
enum TwinStatus twin_circuit_parse(const char *text, const char *name, struct TwinCircuit **out);

/**
 * Loads a circuit file; the circuit is named after the file stem.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TwinStatus twin_circuit_load(const char *path, struct TwinCircuit **out);

/**
 * # Safety
 * `circuit` must be null or a handle not freed before.
 */
void twin_circuit_free(struct TwinCircuit *circuit);

/**
 * Calibration values of `device` with every effect on.
 *
 * # Safety
 * `device` must be a live handle and `out` a valid pointer.
 */
enum TwinStatus twin_params_from_device(const struct TwinDevice *device, struct TwinParams **out);

/**
 * Loads parameters from a TOML file or a fit result.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TwinStatus twin_params_load(const char *path, struct TwinParams **out);

/**
 * Switches off the effects named by the `TWIN_EFFECT_*` bits in `mask`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum TwinStatus twin_params_disable(struct TwinParams *params, uint32_t mask);

/**
 * # Safety
 * `params` must be null or a handle not freed before.
 */
void twin_params_free(struct TwinParams *params);

/**
 * Exact outcome distribution of `circuit`, readout error included.
 * A null `params` uses the device calibration.
 *
 * # Safety
 * Handles must be live (or null for `params`) and `out` a valid pointer.
 */
enum TwinStatus twin_emulate(const struct TwinDevice *device,
                             const struct TwinParams *params,
                             const struct TwinCircuit *circuit,
                             struct TwinDistribution **out);

/**
 * Draws `shots` samples with a fixed seed.
 *
 * # Safety
 * `dist` must be a live handle and `out` a valid pointer.
 */
enum TwinStatus twin_distribution_sample(const struct TwinDistribution *dist,
                                         uint64_t shots,
                                         uint64_t seed,
                                         struct TwinDistribution **out);

/**
 * Number of measured bits, 0 for a null handle.
 *
 * # Safety
 * `dist` must be null or a live handle.
 */
size_t twin_distribution_width(const struct TwinDistribution *dist);

/**
 * Writes the `2^width` outcome probabilities into `buf`, first measured
 * qubit as the most significant bit.
 *
 * # Safety
 * `dist` must be a live handle and `buf` valid for `len` writes.
 */
enum TwinStatus twin_distribution_probabilities(const struct TwinDistribution *dist,
                                                double *buf,
                                                size_t len);

/**
 * Total variation distance between two distributions of equal width.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum TwinStatus twin_tvd(const struct TwinDistribution *a,
                         const struct TwinDistribution *b,
                         double *out);

/**
 * JSON form of the distribution, labelled `circuit`. Release the string
 * with `twin_string_free`.
 *
 * # Safety
 * `dist` must be a live handle, `circuit` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum TwinStatus twin_distribution_to_json(const struct TwinDistribution *dist,
                                          const char *circuit,
                                          char **out);

/**
 * # Safety
 * `dist` must be null or a handle not freed before.
 */
void twin_distribution_free(struct TwinDistribution *dist);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not freed before.
 */
void twin_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSMON_TWIN_H */
