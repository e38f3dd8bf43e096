/* Exercises the shared library through its C header only. */

#include <stdio.h>
#include <string.h>

#include "nls/c_api.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static const char* kSmall =
    "{\"ensemble\": {\"id\": \"X\", \"terms\": [{\"word\": \"A^2\"}, {\"word\": \"B\"}]},"
    " \"function\": {\"kind\": \"identity\"}, \"run\": {\"n\": 200, \"realizations\": 3}}";

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "c_api_out";
  nls_experiment* e = NULL;
  nls_string* s = NULL;
  unsigned long long count = 0;
  long long mu = 0;
  int passed = -1;

  EXPECT(strcmp(nls_version(), "0.1.0") == 0);
  EXPECT(nls_exit_code(NLS_OK) == 0);
  EXPECT(nls_exit_code(NLS_ERR_CONFIG) == 2);
  EXPECT(nls_exit_code(NLS_ERR_NUMERIC) == 3);

  EXPECT(nls_partitions_count("nc", 6, &count) == NLS_OK && count == 132);
  EXPECT(nls_partitions_count("all", 5, &count) == NLS_OK && count == 52);
  EXPECT(nls_partitions_count("pairings", 6, &count) == NLS_OK && count == 15);
  EXPECT(nls_partitions_count("bogus", 3, &count) == NLS_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(nls_last_error()) > 0);
  EXPECT(nls_partitions_count("all", 40, &count) == NLS_ERR_SIZE_LIMIT);
  EXPECT(nls_partitions_mobius("0", "1", 4, &mu) == NLS_OK && mu == -6);
  EXPECT(nls_partitions_mobius("{1,2}{3}", "{1,2,3}", 0, &mu) == NLS_OK && mu == -1);
  EXPECT(nls_partitions_mobius("{1,3}{2}", "{1,2}{3}", 0, &mu) == NLS_ERR_INVALID_ARGUMENT);

  EXPECT(nls_partitions_list("all", 2, &s) == NLS_OK);
  EXPECT(s && strcmp(nls_string_data(s), "{1,2}\n{1}{2}\n") == 0 && nls_string_size(s) == 13);
  nls_string_destroy(s);
  s = NULL;

  EXPECT(nls_cycle_structure("12,23,31", &s) == NLS_OK);
  EXPECT(s && strstr(nls_string_data(s), "\"cycles\": 1") != NULL);
  nls_string_destroy(s);
  s = NULL;
  EXPECT(nls_cycle_structure("12,x", &s) == NLS_ERR_INVALID_ARGUMENT);

  EXPECT(nls_experiment_from_json("{\"bad\": 1}", &e) == NLS_ERR_CONFIG);
  EXPECT(e == NULL);
  EXPECT(nls_experiment_from_file("/nonexistent.cfg", &e) == NLS_ERR_IO);

  EXPECT(nls_experiment_from_json(kSmall, &e) == NLS_OK);
  EXPECT(nls_experiment_set_realizations(e, 0) == NLS_ERR_CONFIG);
  EXPECT(nls_experiment_set_n(e, 1) == NLS_ERR_CONFIG);

  EXPECT(nls_predict(e, &s) == NLS_OK);
  EXPECT(s && strstr(nls_string_data(s), "\"theta\"") != NULL);
  nls_string_destroy(s);
  s = NULL;

  /* Sampling needs an explicit seed. */
  EXPECT(nls_compare(e, &s, &passed) == NLS_ERR_INVALID_ARGUMENT);
  EXPECT(strstr(nls_last_error(), "seed") != NULL);

  EXPECT(nls_experiment_set_seed(e, 7) == NLS_OK);
  EXPECT(nls_experiment_set_output_dir(e, out_dir) == NLS_OK);
  EXPECT(nls_compare(e, &s, &passed) == NLS_OK);
  EXPECT(passed == 1);
  EXPECT(s && strstr(nls_string_data(s), "\"passed\": true") != NULL);
  nls_string_destroy(s);
  s = NULL;

  EXPECT(nls_simulate(e, &s) == NLS_OK);
  nls_string_destroy(s);
  s = NULL;
  {
    char path[1024];
    FILE* f;
    snprintf(path, sizeof path, "%s/manifest.json", out_dir);
    f = fopen(path, "r");
    EXPECT(f != NULL);
    if (f) fclose(f);
    snprintf(path, sizeof path, "%s/hist_y.csv", out_dir);
    f = fopen(path, "r");
    EXPECT(f != NULL);
    if (f) fclose(f);
  }

  EXPECT(nls_predict(NULL, &s) == NLS_ERR_INVALID_ARGUMENT);
  nls_experiment_destroy(e);
  nls_experiment_destroy(NULL);
  nls_string_destroy(NULL);

  if (failures) {
    fprintf(stderr, "%d failures\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}
