#pragma once

#include "constants.hpp"
#include "dynamics.hpp"
#include "entanglement.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "interferometry.hpp"
#include "material.hpp"
#include "pipeline.hpp"
#include "scenario.hpp"
#include "units.hpp"
#include "vec3.hpp"
