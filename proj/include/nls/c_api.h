#ifndef NLS_C_API_H
#define NLS_C_API_H

/* C interface of the nonlin_spectra shared library. Objects are opaque
   handles; every call returns an nls_status and, on failure, leaves a
   message for nls_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(NLS_BUILDING_LIBRARY)
#define NLS_API __attribute__((visibility("default")))
#else
#define NLS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nls_status {
  NLS_OK = 0,
  NLS_ERR_INVALID_ARGUMENT = 1,
  NLS_ERR_SIZE_LIMIT = 2,
  NLS_ERR_CONFIG = 3,
  NLS_ERR_NUMERIC = 4,
  NLS_ERR_IO = 5,
  NLS_ERR_INTERNAL = 6
} nls_status;

typedef struct nls_experiment nls_experiment;
typedef struct nls_string nls_string;

NLS_API const char* nls_version(void);
/* Message of the last failed call on this thread, "" if none. */
NLS_API const char* nls_last_error(void);
/* Process exit code for a status: 2 for input errors, 3 for numeric or
   internal failures, 0 for NLS_OK. */
NLS_API int nls_exit_code(nls_status status);

NLS_API nls_status nls_experiment_from_file(const char* path, nls_experiment** out);
NLS_API nls_status nls_experiment_from_json(const char* text, nls_experiment** out);
NLS_API void nls_experiment_destroy(nls_experiment* e);

NLS_API nls_status nls_experiment_set_seed(nls_experiment* e, uint64_t seed);
NLS_API nls_status nls_experiment_set_n(nls_experiment* e, int n);
NLS_API nls_status nls_experiment_set_realizations(nls_experiment* e, int realizations);
NLS_API nls_status nls_experiment_set_jobs(nls_experiment* e, int jobs);
/* Monte Carlo samples per N for verify. */
NLS_API nls_status nls_experiment_set_samples(nls_experiment* e, long long samples);
/* Artifacts (spectra, histograms, reports, manifest) go here; NULL or ""
   disables them. */
NLS_API nls_status nls_experiment_set_output_dir(nls_experiment* e, const char* dir);

/* Analytic prediction, no sampling. */
NLS_API nls_status nls_predict(nls_experiment* e, nls_string** report);
/* Samples spectra and writes artifacts; the report is the comparison JSON. */
NLS_API nls_status nls_simulate(nls_experiment* e, nls_string** report);
NLS_API nls_status nls_compare(nls_experiment* e, nls_string** report, int* passed);
NLS_API nls_status nls_verify(nls_experiment* e, nls_string** report, int* passed);

NLS_API const char* nls_string_data(const nls_string* s);
NLS_API size_t nls_string_size(const nls_string* s);
NLS_API void nls_string_destroy(nls_string* s);

/* type: "all", "pairings" or "nc". */
NLS_API nls_status nls_partitions_count(const char* type, int n, unsigned long long* out);
NLS_API nls_status nls_partitions_list(const char* type, int n, nls_string** out);
/* Partitions as "{1,2}{3}", or "0" / "1" for the bottom / top of size n. */
NLS_API nls_status nls_partitions_mobius(const char* lower, const char* upper, int n, long long* out);
/* Cycle structure of entries given as "12,23,31" or "1-2,2-3,3-1". */
NLS_API nls_status nls_cycle_structure(const char* entries, nls_string** out);

#ifdef __cplusplus
}
#endif

#endif
