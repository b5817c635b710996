#pragma once

#include "evasion/hardening/distill.hpp"
