#pragma once

#include "risicsc/beamforming.hpp"
#include "risicsc/channel.hpp"
#include "risicsc/compute_alloc.hpp"
#include "risicsc/config.hpp"
#include "risicsc/driver.hpp"
#include "risicsc/error.hpp"
#include "risicsc/fractional.hpp"
#include "risicsc/linalg.hpp"
#include "risicsc/metrics.hpp"
#include "risicsc/qcqp.hpp"
#include "risicsc/single_ue.hpp"
#include "risicsc/sweep.hpp"
