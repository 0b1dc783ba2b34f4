#include <stdio.h>
#include <string.h>

#include "conslaw/conslaw.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
              conslaw_last_error());                                   \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static int contains(const conslaw_result* r, const char* needle) {
  return r && strstr(conslaw_result_json(r), needle) != NULL;
}

int main(void) {
  conslaw_equation* heat = NULL;
  conslaw_system* sys = NULL;
  conslaw_system* pot = NULL;
  conslaw_result* r = NULL;

  EXPECT(strlen(conslaw_version()) > 0);
  EXPECT(conslaw_equation_new("concrete", "1", "0", NULL, 0, &heat) == CONSLAW_OK);
  EXPECT(conslaw_system_new(heat, &sys) == CONSLAW_OK);

  EXPECT(conslaw_verify(sys, "alpha*u", "alpha_x*u - alpha*u_x", 1, &r) == CONSLAW_OK);
  EXPECT(contains(r, "\"holds\": true"));
  conslaw_result_free(r);
  r = NULL;

  EXPECT(conslaw_characteristic(sys, "x*u", "u - x*u_x", &r) == CONSLAW_OK);
  EXPECT(contains(r, "\"characteristic\": \"x\""));
  conslaw_result_free(r);
  r = NULL;

  {
    const char* F[] = {"u", "2*u"};
    const char* G[] = {"-u_x", "-2*u_x"};
    EXPECT(conslaw_dependence(sys, F, G, 2, &r) == CONSLAW_OK);
    EXPECT(contains(r, "\"rank\": 1"));
    conslaw_result_free(r);
    r = NULL;
    EXPECT(conslaw_system_add_potentials(sys, F, G, NULL, 2, &pot) == CONSLAW_MATH_FAILURE);
    EXPECT(strlen(conslaw_last_error()) > 0);
    EXPECT(conslaw_system_add_potentials(sys, F, G, NULL, 1, &pot) == CONSLAW_OK);
    EXPECT(conslaw_system_describe(pot, &r) == CONSLAW_OK);
    EXPECT(contains(r, "v1_x = u"));
    conslaw_result_free(r);
    r = NULL;
  }

  EXPECT(conslaw_verify(sys, "u*(", "0", 1, &r) == CONSLAW_PARSE_ERROR);
  EXPECT(strstr(conslaw_last_error(), "position") != NULL);
  EXPECT(conslaw_verify(NULL, "u", "0", 1, &r) == CONSLAW_INPUT_ERROR);
  EXPECT(conslaw_collapse("B=1", &r) != CONSLAW_OK);

  EXPECT(conslaw_iterate(heat, 3, 2, &r) == CONSLAW_OK);
  EXPECT(contains(r, "infinite local series (alpha-parameterized), no potential laws"));
  conslaw_result_free(r);
  r = NULL;

  EXPECT(conslaw_table1(&r) == CONSLAW_OK);
  EXPECT(contains(r, "\"label\": \"4.1\""));
  conslaw_result_free(r);

  conslaw_system_free(pot);
  conslaw_system_free(sys);
  conslaw_equation_free(heat);
  if (failures == 0) printf("C API checks passed\n");
  return failures == 0 ? 0 : 1;
}
