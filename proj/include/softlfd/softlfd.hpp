#pragma once

#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"
#include "softlfd/demonstration.hpp"
#include "softlfd/transport.hpp"
#include "softlfd/keypoint_projection.hpp"
#include "softlfd/policy.hpp"
#include "softlfd/simulation.hpp"
#include "softlfd/pipeline.hpp"
#include "softlfd/scenarios.hpp"
