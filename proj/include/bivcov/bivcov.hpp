#pragma once

#include "bivcov/bimodels.hpp"
#include "bivcov/corrfn.hpp"
#include "bivcov/dimension.hpp"
#include "bivcov/errors.hpp"
#include "bivcov/field.hpp"
#include "bivcov/model_io.hpp"
#include "bivcov/spectral.hpp"
#include "bivcov/validity.hpp"
