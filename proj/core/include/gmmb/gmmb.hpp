#pragma once

// Umbrella header.

#include "gmmb/data.hpp"
#include "gmmb/diagnostics.hpp"
#include "gmmb/ecm.hpp"
#include "gmmb/kmeans.hpp"
#include "gmmb/mixture.hpp"
#include "gmmb/mstep.hpp"
#include "gmmb/sweep.hpp"
#include "gmmb/transform.hpp"
#include "gmmb/version.hpp"
