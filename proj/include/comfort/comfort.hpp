#pragma once

#include "comfort/errors.hpp"
#include "comfort/kv_config.hpp"
#include "comfort/comfort_core.hpp"
#include "comfort/dataset.hpp"
#include "comfort/mlp.hpp"
#include "comfort/control.hpp"
#include "comfort/chamber.hpp"
