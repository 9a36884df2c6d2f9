#pragma once

#include "bivcov/field/cokrige.hpp"
#include "bivcov/field/csv.hpp"
#include "bivcov/field/fit.hpp"
#include "bivcov/field/gram.hpp"
#include "bivcov/field/random.hpp"
#include "bivcov/field/sample.hpp"
#include "bivcov/field/simulate.hpp"
