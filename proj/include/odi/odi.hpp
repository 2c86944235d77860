#pragma once

#include "odi/config.hpp"
#include "odi/distfit.hpp"
#include "odi/error.hpp"
#include "odi/match_data.hpp"
#include "odi/revision.hpp"
#include "odi/simulate.hpp"
#include "odi/validate.hpp"
