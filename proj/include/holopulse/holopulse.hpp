#pragma once

#include "holopulse/features.hpp"
#include "holopulse/grid.hpp"
#include "holopulse/io.hpp"
#include "holopulse/metrics.hpp"
#include "holopulse/phantom.hpp"
#include "holopulse/pipeline.hpp"
#include "holopulse/pulse.hpp"
#include "holopulse/signal.hpp"
#include "holopulse/skeleton.hpp"
