#pragma once

#include "evasion/importance/importance.hpp"
