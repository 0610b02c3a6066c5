#pragma once

#include "analytic.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "field.hpp"
#include "harness.hpp"
#include "link.hpp"
#include "polarimeter.hpp"
#include "polarization.hpp"
#include "ssfm.hpp"
#include "units.hpp"
