#pragma once

#include "evasion/detectors/detector.hpp"
#include "evasion/detectors/logistic.hpp"
#include "evasion/detectors/metrics.hpp"
#include "evasion/detectors/mlp.hpp"
#include "evasion/detectors/train.hpp"
#include "evasion/detectors/train_config.hpp"
#include "evasion/detectors/tree.hpp"
