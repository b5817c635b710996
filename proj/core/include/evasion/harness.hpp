#pragma once

#include "evasion/harness/experiment.hpp"
#include "evasion/harness/parallel.hpp"
#include "evasion/harness/report.hpp"
#include "evasion/harness/synth.hpp"
