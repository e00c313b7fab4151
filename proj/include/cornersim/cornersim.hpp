#pragma once

#include "cornersim/agent_process.hpp"
#include "cornersim/batch.hpp"
#include "cornersim/catalog.hpp"
#include "cornersim/evaluation.hpp"
#include "cornersim/geometry.hpp"
#include "cornersim/perception.hpp"
#include "cornersim/policy.hpp"
#include "cornersim/rng.hpp"
#include "cornersim/runner.hpp"
#include "cornersim/scenario_codec.hpp"
#include "cornersim/text.hpp"
#include "cornersim/trace.hpp"
#include "cornersim/types.hpp"
#include "cornersim/validate.hpp"
#include "cornersim/version.hpp"
#include "cornersim/world.hpp"
