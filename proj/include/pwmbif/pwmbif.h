/* C interface to the pwmbif converter-analysis library.
 *
 * All objects are opaque handles; every call returns a status code and
 * reports details through out-parameters. Strings returned through char**
 * out-parameters are heap-allocated and must be released with
 * pwmbif_string_free. On any non-OK status, pwmbif_last_error() holds a
 * description for the calling thread.
 */
#ifndef PWMBIF_H
#define PWMBIF_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    PWMBIF_OK = 0,
    PWMBIF_ERR_INVALID = 1, /* bad arguments or malformed document */
    PWMBIF_ERR_NUMERIC = 2, /* non-convergence, divergence, grazing */
    PWMBIF_ERR_IO = 3       /* file open/read/write failures */
} pwmbif_status;

/* A converter definition: preset + overrides or an explicit document. */
typedef struct pwmbif_spec pwmbif_spec;

const char* pwmbif_last_error(void);
void pwmbif_string_free(char* s);

pwmbif_status pwmbif_spec_from_preset(const char* name, const char* const* override_keys,
                                      const double* override_values, size_t n_overrides,
                                      pwmbif_spec** out);
pwmbif_status pwmbif_spec_from_file(const char* path, const char* const* override_keys,
                                    const double* override_values, size_t n_overrides,
                                    pwmbif_spec** out);
void pwmbif_spec_free(pwmbif_spec* spec);

pwmbif_status pwmbif_spec_dim(const pwmbif_spec* spec, int* out);
pwmbif_status pwmbif_spec_digest(const pwmbif_spec* spec, char** out);
pwmbif_status pwmbif_spec_serialize(const pwmbif_spec* spec, char** out);

/* `presets`: name == NULL lists the presets, otherwise shows one. */
pwmbif_status pwmbif_cmd_presets(const char* name, char** out_report);

/* `simulate`: x0_source is "zero", "orbit", "averaged", or "explicit"
 * (x0 then supplies spec_dim values). */
pwmbif_status pwmbif_cmd_simulate(const pwmbif_spec* spec, const char* echo,
                                  const char* x0_source, const double* x0, int m,
                                  int cycles, int samples_per_cycle, const char* out_csv,
                                  char** out_report);

/* `orbit`: guess_x0 (spec_dim values) and guess_duty may be NULL. */
pwmbif_status pwmbif_cmd_orbit(const pwmbif_spec* spec, const char* echo, int m,
                               const double* guess_x0, const double* guess_duty,
                               char** out_report);

/* `eigs`: method is "auto", "closed", or "fd". */
pwmbif_status pwmbif_cmd_eigs(const pwmbif_spec* spec, const char* echo, int m,
                              const char* method, char** out_report);

/* `sweep`: marches `param` and writes the eigenvalue locus CSV. */
pwmbif_status pwmbif_cmd_sweep(const pwmbif_spec* spec, const char* echo,
                               const char* param, double from, double to, int steps,
                               int m, const char* out_csv, char** out_report);

/* `locate`: kind is "pd", "sn", or "ns". */
pwmbif_status pwmbif_cmd_locate(const pwmbif_spec* spec, const char* echo,
                                const char* param, const char* kind, double lo, double hi,
                                int m, char** out_report);

/* `bifdiag`: inherit is "none", "up", or "down". */
pwmbif_status pwmbif_cmd_bifdiag(const pwmbif_spec* spec, const char* echo,
                                 const char* param, double from, double to, int steps,
                                 int burn_in, int record, const char* inherit,
                                 const char* out_csv, char** out_report);

/* `averaged`: duty < 0 derives the consistent duty from the model. */
pwmbif_status pwmbif_cmd_averaged(const pwmbif_spec* spec, const char* echo, double duty,
                                  char** out_report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PWMBIF_H */
