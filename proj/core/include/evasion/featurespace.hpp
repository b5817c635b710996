#pragma once

#include "evasion/featurespace/bit_vector.hpp"
#include "evasion/featurespace/category.hpp"
#include "evasion/featurespace/feature.hpp"
#include "evasion/featurespace/feature_file.hpp"
#include "evasion/featurespace/feature_vector.hpp"
#include "evasion/featurespace/perturbation.hpp"
#include "evasion/featurespace/vocabulary.hpp"
