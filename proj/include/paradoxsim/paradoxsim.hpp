#pragma once

#include "paradoxsim/errors.hpp"
#include "paradoxsim/belief.hpp"
#include "paradoxsim/random.hpp"
#include "paradoxsim/measures.hpp"
#include "paradoxsim/simulate.hpp"
#include "paradoxsim/analysis.hpp"
#include "paradoxsim/trial_csv.hpp"
#include "paradoxsim/welfare.hpp"
#include "paradoxsim/report.hpp"
#include "paradoxsim/config.hpp"
#include "paradoxsim/pipeline.hpp"
