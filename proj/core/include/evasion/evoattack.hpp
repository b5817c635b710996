#pragma once

#include "evasion/evoattack/attack.hpp"
#include "evasion/evoattack/attack_config.hpp"
