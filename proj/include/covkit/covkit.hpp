#pragma once

#include "covkit/error.hpp"
#include "covkit/vec2.hpp"
#include "covkit/log.hpp"
#include "covkit/geometry.hpp"
#include "covkit/quadrature.hpp"
#include "covkit/pgm.hpp"
#include "covkit/density.hpp"
#include "covkit/coverage.hpp"
#include "covkit/lap.hpp"
#include "covkit/transport.hpp"
#include "covkit/assign.hpp"
#include "covkit/poi.hpp"
#include "covkit/submod.hpp"
#include "covkit/swarm.hpp"
