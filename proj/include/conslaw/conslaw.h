#ifndef CONSLAW_H
#define CONSLAW_H

/* C interface to the conservation-law toolkit. Results are JSON documents
   owned by a conslaw_result handle; expressions use the library's DSL. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CONSLAW_API __declspec(dllexport)
#else
#define CONSLAW_API __attribute__((visibility("default")))
#endif

typedef enum conslaw_status {
  CONSLAW_OK = 0,
  CONSLAW_MATH_FAILURE = 1, /* e.g. dependent generating vectors */
  CONSLAW_INPUT_ERROR = 2,  /* bad argument, unknown name, malformed transformation */
  CONSLAW_PARSE_ERROR = 3,  /* expression syntax; message carries the position */
  CONSLAW_INTERNAL_ERROR = 4
} conslaw_status;

typedef struct conslaw_equation conslaw_equation;
typedef struct conslaw_system conslaw_system;
typedef struct conslaw_result conslaw_result;

CONSLAW_API const char* conslaw_version(void);

/* Message of the last failing call on this thread ("" if none). */
CONSLAW_API const char* conslaw_last_error(void);

/* relation: "none", "B=0", "B=A", "B=IntA+uA" for opaque kernels, or
   "concrete" with A and B expressions in u. */
CONSLAW_API conslaw_status conslaw_equation_new(const char* relation, const char* A, const char* B,
                                                const char* const* constants, size_t n_constants,
                                                conslaw_equation** out);
CONSLAW_API void conslaw_equation_free(conslaw_equation* eq);

/* The evolution equation with no potentials. */
CONSLAW_API conslaw_status conslaw_system_new(const conslaw_equation* eq, conslaw_system** out);
/* New system with one potential per (F[i], G[i]); names may be NULL. */
CONSLAW_API conslaw_status conslaw_system_add_potentials(const conslaw_system* sys, const char* const* F,
                                                         const char* const* G, const char* const* names, size_t n,
                                                         conslaw_system** out);
CONSLAW_API void conslaw_system_free(conslaw_system* sys);

/* {"rhs", "relations": [...], "potentials": [{"name", "F", "G", "level"}]} */
CONSLAW_API conslaw_status conslaw_system_describe(const conslaw_system* sys, conslaw_result** out);

/* {"holds", "residual", "trivial", "witness", "samples": [...]}; the samples
   evaluate the residual at pseudo-random rational points drawn from seed. */
CONSLAW_API conslaw_status conslaw_verify(const conslaw_system* sys, const char* F, const char* G, uint64_t seed,
                                          conslaw_result** out);

/* {"characteristic", "adjoint_holds", "adjoint_residual"}; needs a system
   without potentials. */
CONSLAW_API conslaw_status conslaw_characteristic(const conslaw_system* sys, const char* F, const char* G,
                                                  conslaw_result** out);

/* {"rank", "relations": [[...]]} for the given vectors. */
CONSLAW_API conslaw_status conslaw_dependence(const conslaw_system* sys, const char* const* F, const char* const* G,
                                              size_t n, conslaw_result** out);

/* {"tag", "transformation", "case", "basis": [{"F","G"}], "family", "parameters"} */
CONSLAW_API conslaw_status conslaw_classify(const conslaw_equation* eq, conslaw_result** out);

/* Whether the last n potentials of sys are locally dependent on the others:
   {"dependent", "relation", "witness"}. */
CONSLAW_API conslaw_status conslaw_potentials_dependent(const conslaw_system* sys, size_t n, conslaw_result** out);

/* Hierarchy report as JSON. */
CONSLAW_API conslaw_status conslaw_iterate(const conslaw_equation* eq, int max_level, int max_potentials,
                                           conslaw_result** out);

/* t~ = t, x~ = x_image, u~ = u_image, potentials[i] -> potential_images[i].
   inverse_keys are source atoms (x, u, v, exp(v), ...) and inverse_values
   their expressions in target variables. Each (F[i], G[i]) is transported.
   {"system": {...}, "transported": [{"F","G","holds"}]} */
CONSLAW_API conslaw_status conslaw_transform(const conslaw_system* sys, const char* x_image, const char* u_image,
                                             const char* const* potentials, const char* const* potential_images,
                                             size_t n_potentials, const char* const* inverse_keys,
                                             const char* const* inverse_values, size_t n_inverse,
                                             const char* const* F, const char* const* G, size_t n_vectors,
                                             conslaw_result** out);

/* Every Table 1 row re-verified: [{"label","A","B","F","G","system",
   "constraints","holds","residual"}]. */
CONSLAW_API conslaw_status conslaw_table1(conslaw_result** out);

/* Second-level collapse for "B=0", "B=A" or "heat". */
CONSLAW_API conslaw_status conslaw_collapse(const char* kase, conslaw_result** out);

CONSLAW_API const char* conslaw_result_json(const conslaw_result* r);
CONSLAW_API void conslaw_result_free(conslaw_result* r);

#ifdef __cplusplus
}
#endif

#endif
