#pragma once

#include "delayfb/analytic.hpp"
#include "delayfb/analyze.hpp"
#include "delayfb/config.hpp"
#include "delayfb/constants.hpp"
#include "delayfb/csv.hpp"
#include "delayfb/errors.hpp"
#include "delayfb/figures.hpp"
#include "delayfb/model.hpp"
#include "delayfb/simulate.hpp"
#include "delayfb/spectral.hpp"
#include "delayfb/svg.hpp"
#include "delayfb/sweep.hpp"
