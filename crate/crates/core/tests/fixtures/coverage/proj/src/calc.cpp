// Source the export fixture describes; line numbers matter, not the code.
#include "calc.h"

static void log_it(int) {}

//
//
//
//
int classify(int x) {
  int r = 0;
  if (x > 0) {
    r = 1;
  } else if (x < -100) {
    r = -2;
  }
  log_it(r);
  return r;
}

int unused(int y) {
  if (y) {
    return 1;
  }
  return 0; }
