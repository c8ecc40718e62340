#pragma once

#include "d.h"

int Scale(int v);
int Shift(int v);
int Twice(int v);
